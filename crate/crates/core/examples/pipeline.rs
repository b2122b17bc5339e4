//! The whole workflow through the command-line entry point: a synthetic
//! scene is visualised, tiled, split into five folds, "predicted" by copying
//! the ground truth, evaluated and summarised.
//!
//!     cargo run --release --example pipeline -- work/

use std::path::{Path, PathBuf};
use std::time::Instant;

use reliefseg::cli;
use reliefseg::dataset::{resolve, DatasetManifest};
use reliefseg::metrics::{prediction_path, read_metric_csv};
use reliefseg::raster::io::{read_mask, write_mask, write_raster};
use reliefseg::raster::ClassMask;
use reliefseg::synthetic::synthetic_scene;
use reliefseg::viz::VtName;

fn reliefseg(args: &[&str]) {
    let mut argv = vec!["reliefseg", "--quiet"];
    argv.extend_from_slice(args);
    let code = cli::run(argv);
    assert_eq!(code, 0, "reliefseg {} exited with {code}", args.join(" "));
}

fn s(p: &Path) -> &str {
    p.to_str().expect("UTF-8 path")
}

/// Stand-in for a trained model: one binary raster per tile and class,
/// identical to the ground truth.
fn write_perfect_predictions(manifest_path: &Path, out: &Path) -> reliefseg::Result<()> {
    let manifest = DatasetManifest::load(manifest_path)?;
    let base = manifest_path.parent().unwrap();
    std::fs::create_dir_all(out).expect("create prediction directory");
    for e in &manifest.entries {
        let mask = read_mask(resolve(base, &e.mask_path))?;
        for c in manifest.catalog.classes() {
            let bin: Vec<u8> = mask.values().iter().map(|&v| (v == c.id) as u8).collect();
            let pred = ClassMask::new(mask.width(), mask.height(), bin)?;
            write_mask(&pred, prediction_path(out, &e.tile_id, &c.name), manifest.gsd, None)?;
        }
    }
    Ok(())
}

fn main() -> reliefseg::Result<()> {
    let work = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "pipeline-work".into()));
    let start = Instant::now();

    let scene = synthetic_scene(512, 7)?;
    std::fs::create_dir_all(&work).expect("create work directory");
    let (dem, mask) = (work.join("dem.tif"), work.join("mask.tif"));
    write_raster(&scene.dem, &dem)?;
    write_mask(&scene.mask, &mask, scene.dem.gsd(), None)?;

    let viz_dir = work.join("viz");
    std::fs::create_dir_all(&viz_dir).expect("create viz directory");
    for vt in VtName::ALL {
        let out = viz_dir.join(format!("{vt}.png"));
        reliefseg(&["viz", "--input", s(&dem), "--vt", vt.as_str(), "--output", s(&out)]);
    }

    let tiles = work.join("tiles");
    reliefseg(&["tile", "--dem", s(&dem), "--mask", s(&mask), "--output-dir", s(&tiles), "--tile-size", "128"]);
    let manifest = tiles.join("manifest.json");
    let folded = tiles.join("manifest_k5.json");
    reliefseg(&["folds", "--manifest", s(&manifest), "--output", s(&folded), "-k", "5", "--seed", "42"]);

    let preds = work.join("predictions");
    write_perfect_predictions(&folded, &preds)?;
    let mut csvs = Vec::new();
    for (i, vt) in VtName::ALL.iter().enumerate() {
        let csv = work.join(format!("metrics_{vt}.csv"));
        let model = (i % 8 + 1).to_string();
        reliefseg(&[
            "eval", "--manifest", s(&folded), "--predictions", s(&preds), "--output", s(&csv),
            "--vt", vt.as_str(), "--model-id", &model, "--strict",
        ]);
        csvs.push(csv);
    }
    let worst = csvs
        .iter()
        .flat_map(|c| read_metric_csv(c).unwrap())
        .map(|r| r.iou)
        .fold(1.0, f64::min);

    let report = work.join("report");
    let mut args = vec!["report", "--output-dir", s(&report), "--metrics"];
    args.extend(csvs.iter().map(|c| s(c)));
    reliefseg(&args);

    println!("{}", std::fs::read_to_string(report.join("summary.txt")).expect("summary"));
    println!("lowest IoU over all rows: {worst}");
    println!("finished in {:.2?}", start.elapsed());
    Ok(())
}
