//! Pixel-level segmentation metrics.
//!
//! Counts are accumulated over a whole dataset (or fold) per class before any
//! ratio is taken, so tiles without a class do not drag its IoU around. Every
//! ratio whose denominator is zero is defined as 1.0: a class that is absent
//! and never predicted has been segmented perfectly.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{resolve, DatasetManifest};
use crate::error::{Error, Result};
use crate::raster::io::{read_mask, read_raster, SampleType};
use crate::viz::VtName;

/// Smoothing term of the Tversky index.
pub const TVERSKY_EPSILON: f64 = 1e-7;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassCounts {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub tn: u64,
}

impl ClassCounts {
    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.fn_ + self.tn
    }

    pub fn merge(&mut self, other: &ClassCounts) {
        self.tp += other.tp;
        self.fp += other.fp;
        self.fn_ += other.fn_;
        self.tn += other.tn;
    }

    /// tp / (tp + fp + fn), or 1.0 when nothing was predicted or present.
    pub fn iou(&self) -> f64 {
        ratio(self.tp, self.tp + self.fp + self.fn_)
    }

    pub fn precision(&self) -> f64 {
        ratio(self.tp, self.tp + self.fp)
    }

    pub fn recall(&self) -> f64 {
        ratio(self.tp, self.tp + self.fn_)
    }
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        1.0
    } else {
        num as f64 / den as f64
    }
}

pub fn iou(counts: &ClassCounts) -> f64 {
    counts.iou()
}

pub fn precision_recall(counts: &ClassCounts) -> (f64, f64) {
    (counts.precision(), counts.recall())
}

/// Per-class confusion counts.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ConfusionCounts {
    classes: BTreeMap<u8, ClassCounts>,
}

impl ConfusionCounts {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, class: u8) -> ClassCounts {
        self.classes.get(&class).copied().unwrap_or_default()
    }

    pub fn add(&mut self, class: u8, counts: &ClassCounts) {
        self.classes.entry(class).or_default().merge(counts);
    }

    pub fn merge(&mut self, other: &ConfusionCounts) {
        for (&c, counts) in &other.classes {
            self.add(c, counts);
        }
    }

    pub fn classes(&self) -> impl Iterator<Item = (u8, &ClassCounts)> {
        self.classes.iter().map(|(&c, k)| (c, k))
    }

    pub fn iou(&self, class: u8) -> f64 {
        self.get(class).iou()
    }

    pub fn precision_recall(&self, class: u8) -> (f64, f64) {
        precision_recall(&self.get(class))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub threshold: f64,
    pub tversky_alpha: f64,
    pub tversky_beta: f64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            threshold: 0.5,
            tversky_alpha: 0.7,
            tversky_beta: 0.3,
        }
    }
}

impl EvalConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            return Err(Error::InvalidParam(format!(
                "threshold must lie in (0, 1), got {}",
                self.threshold
            )));
        }
        let (a, b) = (self.tversky_alpha, self.tversky_beta);
        if !(a >= 0.0 && b >= 0.0 && a + b > 0.0) {
            return Err(Error::InvalidParam(format!(
                "Tversky weights need alpha, beta >= 0 and alpha + beta > 0, got ({a}, {b})"
            )));
        }
        Ok(())
    }
}

fn check_pair(pred: &[f32], gt: &[u8]) -> Result<()> {
    if pred.len() != gt.len() {
        return Err(Error::Eval(format!(
            "prediction has {} pixels, ground truth {}",
            pred.len(),
            gt.len()
        )));
    }
    if let Some(v) = pred.iter().find(|v| !(0.0..=1.0).contains(*v)) {
        return Err(Error::Eval(format!("prediction value {v} outside [0, 1]")));
    }
    Ok(())
}

/// Thresholds `pred` (positive when `>= threshold`) against a binary `gt`
/// (positive when nonzero) and counts the four outcomes.
pub fn confusion(pred: &[f32], gt: &[u8], threshold: f64) -> Result<ClassCounts> {
    check_pair(pred, gt)?;
    let mut c = ClassCounts::default();
    for (&p, &g) in pred.iter().zip(gt) {
        match (p as f64 >= threshold, g != 0) {
            (true, true) => c.tp += 1,
            (true, false) => c.fp += 1,
            (false, true) => c.fn_ += 1,
            (false, false) => c.tn += 1,
        }
    }
    Ok(c)
}

/// Adds the counts of one prediction/ground-truth pair for `class` into `into`.
pub fn accumulate(
    pred: &[f32],
    gt: &[u8],
    class: u8,
    cfg: &EvalConfig,
    into: &mut ConfusionCounts,
) -> Result<()> {
    let c = confusion(pred, gt, cfg.threshold)?;
    into.add(class, &c);
    Ok(())
}

/// Soft counts (TP, FN, FP) = (Σ p·g, Σ (1-p)·g, Σ p·(1-g)).
fn soft_counts(pred: &[f32], gt: &[u8]) -> Result<(f64, f64, f64)> {
    check_pair(pred, gt)?;
    let (mut tp, mut fn_, mut fp) = (0.0f64, 0.0f64, 0.0f64);
    for (&p, &g) in pred.iter().zip(gt) {
        let p = p as f64;
        if g != 0 {
            tp += p;
            fn_ += 1.0 - p;
        } else {
            fp += p;
        }
    }
    Ok((tp, fn_, fp))
}

/// 1 - (TP + ε) / (TP + α·FN + β·FP + ε) on soft counts.
pub fn tversky_loss(pred: &[f32], gt: &[u8], cfg: &EvalConfig) -> Result<f64> {
    let (tp, fn_, fp) = soft_counts(pred, gt)?;
    let e = TVERSKY_EPSILON;
    Ok(1.0 - (tp + e) / (tp + cfg.tversky_alpha * fn_ + cfg.tversky_beta * fp + e))
}

/// Smoothed soft Dice, (2·TP + 2ε) / (2·TP + FP + FN + 2ε).
pub fn dice(pred: &[f32], gt: &[u8]) -> Result<f64> {
    let (tp, fn_, fp) = soft_counts(pred, gt)?;
    let e = TVERSKY_EPSILON;
    Ok((2.0 * tp + 2.0 * e) / (2.0 * tp + fp + fn_ + 2.0 * e))
}

/// One line of the metric CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub run_id: String,
    pub model_id: u32,
    pub vt: VtName,
    pub fold: usize,
    pub class: String,
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub tn: u64,
    pub iou: f64,
    pub precision: f64,
    pub recall: f64,
}

impl MetricRow {
    pub fn new(run_id: &str, model_id: u32, vt: VtName, fold: usize, class: &str, c: &ClassCounts) -> Self {
        MetricRow {
            run_id: run_id.to_string(),
            model_id,
            vt,
            fold,
            class: class.to_string(),
            tp: c.tp,
            fp: c.fp,
            fn_: c.fn_,
            tn: c.tn,
            iou: c.iou(),
            precision: c.precision(),
            recall: c.recall(),
        }
    }
}

pub fn write_metric_csv(rows: &[MetricRow], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_metric_csv(path: impl AsRef<Path>) -> Result<Vec<MetricRow>> {
    let mut r = csv::Reader::from_path(path.as_ref())?;
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}

/// The file a training backend writes for one tile and class.
pub fn prediction_path(dir: &Path, tile_id: &str, class_name: &str) -> PathBuf {
    dir.join(format!("{tile_id}_{class_name}.tif"))
}

/// Reads a prediction raster as probabilities. 8-bit rasters are binary maps
/// (any nonzero value is positive); every other type must already hold values
/// in [0, 1].
pub fn read_prediction(path: impl AsRef<Path>) -> Result<(usize, usize, Vec<f32>)> {
    let path = path.as_ref();
    let r = read_raster(path)?;
    let (w, h) = (r.grid.width(), r.grid.height());
    let values = if r.sample_type == SampleType::U8 {
        r.grid.values().iter().map(|&v| if v > 0.0 { 1.0 } else { 0.0 }).collect()
    } else {
        let v = r.grid.into_values();
        if let Some(bad) = v.iter().find(|x| !(0.0..=1.0).contains(*x)) {
            return Err(Error::format(path, format!("probability {bad} outside [0, 1]")));
        }
        v
    };
    Ok((w, h, values))
}

/// Which run the evaluated predictions belong to.
#[derive(Debug, Clone, PartialEq)]
pub struct RunInfo {
    pub run_id: String,
    pub model_id: u32,
    pub vt: VtName,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalOutcome {
    pub rows: Vec<MetricRow>,
    /// Prediction files that were expected but not found, in tile order.
    pub missing: Vec<PathBuf>,
}

/// Scores a directory of `<tile_id>_<class>.tif` predictions against the
/// manifest's masks, one row per (fold, class).
///
/// Tiles without a fold count as fold 0. `only_fold` restricts evaluation to
/// one fold. Missing files are collected in the outcome, or returned as an
/// error when `strict` is set.
pub fn evaluate_predictions(
    manifest: &DatasetManifest,
    base: &Path,
    pred_dir: &Path,
    run: &RunInfo,
    cfg: &EvalConfig,
    only_fold: Option<usize>,
    strict: bool,
) -> Result<EvalOutcome> {
    cfg.validate()?;
    let entries: Vec<_> = manifest
        .entries
        .iter()
        .filter(|e| only_fold.is_none_or(|f| e.fold.unwrap_or(0) == f))
        .collect();
    if entries.is_empty() {
        return Err(Error::Eval("no manifest entries to evaluate".into()));
    }
    let catalog = &manifest.catalog;

    type TileResult = (usize, ConfusionCounts, Vec<PathBuf>);
    let per_tile: Vec<TileResult> = entries
        .par_iter()
        .map(|e| -> Result<TileResult> {
            let mask = read_mask(resolve(base, &e.mask_path))?;
            let mut counts = ConfusionCounts::new();
            let mut missing = Vec::new();
            for class in catalog.classes() {
                let path = prediction_path(pred_dir, &e.tile_id, &class.name);
                if !path.is_file() {
                    missing.push(path);
                    continue;
                }
                let (w, h, pred) = read_prediction(&path)?;
                if (h, w) != mask.shape() {
                    return Err(Error::Eval(format!(
                        "{}: prediction is {w}x{h}, mask is {}x{}",
                        path.display(),
                        mask.width(),
                        mask.height()
                    )));
                }
                let gt: Vec<u8> = mask.values().iter().map(|&v| (v == class.id) as u8).collect();
                accumulate(&pred, &gt, class.id, cfg, &mut counts)?;
            }
            Ok((e.fold.unwrap_or(0), counts, missing))
        })
        .collect::<Result<_>>()?;

    let mut by_fold: BTreeMap<usize, ConfusionCounts> = BTreeMap::new();
    let mut missing = Vec::new();
    for (fold, counts, miss) in per_tile {
        by_fold.entry(fold).or_default().merge(&counts);
        missing.extend(miss);
    }
    for m in &missing {
        log::warn!("missing prediction {}", m.display());
    }
    if strict && !missing.is_empty() {
        return Err(Error::Eval(format!(
            "{} prediction file(s) missing, first: {}",
            missing.len(),
            missing[0].display()
        )));
    }
    let mut rows = Vec::new();
    for (fold, counts) in &by_fold {
        for class in catalog.classes() {
            rows.push(MetricRow::new(
                &run.run_id,
                run.model_id,
                run.vt,
                *fold,
                &class.name,
                &counts.get(class.id),
            ));
        }
    }
    Ok(EvalOutcome { rows, missing })
}
