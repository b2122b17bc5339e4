//! Confusion counts, IoU, precision, recall and the Tversky loss on a small
//! hand-made example and on a noisy prediction of a synthetic scene.

use reliefseg::metrics::{accumulate, dice, tversky_loss, ConfusionCounts, EvalConfig};
use reliefseg::dataset::stream::SplitMix64;
use reliefseg::synthetic::synthetic_scene;

fn main() -> reliefseg::Result<()> {
    let cfg = EvalConfig::default();

    let gt = [1, 1, 0, 0];
    let probs = [1.0, 0.5, 0.0, 0.0];
    println!("Tversky loss (alpha .7, beta .3): {:.5}", tversky_loss(&probs, &gt, &cfg)?);
    let half = EvalConfig { tversky_alpha: 0.5, tversky_beta: 0.5, ..cfg };
    println!("Tversky (.5, .5) {:.6} = 1 - Dice {:.6}", tversky_loss(&probs, &gt, &half)?, 1.0 - dice(&probs, &gt)?);

    // flip 5% of the pixels of every class map
    let scene = synthetic_scene(256, 4)?;
    let mut rng = SplitMix64::new(1);
    let mut counts = ConfusionCounts::new();
    for class in scene.catalog.classes() {
        let truth: Vec<u8> = scene.mask.values().iter().map(|&v| (v == class.id) as u8).collect();
        let pred: Vec<f32> = truth
            .iter()
            .map(|&t| if rng.next_f64() < 0.05 { 1.0 - t as f32 } else { t as f32 })
            .collect();
        accumulate(&pred, &truth, class.id, &cfg, &mut counts)?;
    }
    println!("{:<10} {:>6} {:>6} {:>6} {:>7}  {:>6} {:>6} {:>6}", "class", "tp", "fp", "fn", "tn", "iou", "prec", "recall");
    for (id, c) in counts.classes() {
        let name = scene.catalog.name(id).unwrap_or("?");
        println!(
            "{name:<10} {:>6} {:>6} {:>6} {:>7}  {:.4} {:.4} {:.4}",
            c.tp, c.fp, c.fn_, c.tn, c.iou(), c.precision(), c.recall()
        );
    }
    Ok(())
}
