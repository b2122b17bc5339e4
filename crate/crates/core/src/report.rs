//! Cross-model, cross-visualisation summaries of metric records.
//!
//! Three tables are produced from fold-averaged IoU:
//!
//! * `best_per_vt_class.csv`: the best model for every (visualisation, class);
//! * `variability_by_vt.csv`: for every visualisation, the spread of IoU over models;
//! * `variability_by_model.csv`: for every model, the spread of IoU over visualisations.
//!
//! Missing (model, visualisation) combinations are simply absent from the
//! tables; nothing is imputed.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::MetricRow;
use crate::viz::VtName;

/// Label used for rows pooling every class.
pub const ALL_CLASSES: &str = "all";

pub const BEST_CSV: &str = "best_per_vt_class.csv";
pub const BY_VT_CSV: &str = "variability_by_vt.csv";
pub const BY_MODEL_CSV: &str = "variability_by_model.csv";
pub const SUMMARY_TXT: &str = "summary.txt";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub model_id: u32,
    pub vt: VtName,
    pub fold: usize,
    pub class: String,
    pub iou: f64,
    pub precision: f64,
    pub recall: f64,
}

impl EvalRecord {
    pub fn validate(&self) -> Result<()> {
        if !(1..=8).contains(&self.model_id) {
            return Err(Error::Report(format!("model_id {} outside 1..=8", self.model_id)));
        }
        for (name, v) in [("iou", self.iou), ("precision", self.precision), ("recall", self.recall)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Report(format!("{name} {v} outside [0, 1]")));
            }
        }
        Ok(())
    }
}

impl From<&MetricRow> for EvalRecord {
    fn from(r: &MetricRow) -> Self {
        EvalRecord {
            model_id: r.model_id,
            vt: r.vt,
            fold: r.fold,
            class: r.class.clone(),
            iou: r.iou,
            precision: r.precision,
            recall: r.recall,
        }
    }
}

/// Metrics of one (model, vt, class) averaged over its folds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldMean {
    pub model_id: u32,
    pub vt: VtName,
    pub class: String,
    pub iou: f64,
    pub precision: f64,
    pub recall: f64,
    pub folds: usize,
    /// Fewer folds than the input as a whole contains.
    pub incomplete: bool,
}

type GroupKey = (u32, VtName, String);

/// Averages records over folds within each (model, vt, class).
///
/// A group is flagged `incomplete` when it has fewer folds than there are
/// distinct folds in the whole input. Two records for the same fold of the
/// same group are an error.
pub fn fold_mean(records: &[EvalRecord]) -> Result<Vec<FoldMean>> {
    if records.is_empty() {
        return Err(Error::Report("no records to aggregate".into()));
    }
    let all_folds: BTreeSet<usize> = records.iter().map(|r| r.fold).collect();
    let mut groups: BTreeMap<GroupKey, BTreeMap<usize, &EvalRecord>> = BTreeMap::new();
    for r in records {
        r.validate()?;
        let key = (r.model_id, r.vt, r.class.clone());
        if groups.entry(key).or_default().insert(r.fold, r).is_some() {
            return Err(Error::Report(format!(
                "duplicate record for model {}, {}, fold {}, class {}",
                r.model_id, r.vt, r.fold, r.class
            )));
        }
    }
    Ok(groups
        .into_iter()
        .map(|((model_id, vt, class), folds)| {
            let n = folds.len() as f64;
            let mean = |f: fn(&EvalRecord) -> f64| folds.values().map(|r| f(r)).sum::<f64>() / n;
            FoldMean {
                model_id,
                vt,
                class,
                iou: mean(|r| r.iou),
                precision: mean(|r| r.precision),
                recall: mean(|r| r.recall),
                folds: folds.len(),
                incomplete: folds.len() < all_folds.len(),
            }
        })
        .collect())
}

/// How the best model is picked for each visualisation.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Selection {
    /// Independently for every (visualisation, class).
    #[default]
    PerClass,
    /// One model per visualisation, the one with the highest IoU averaged over
    /// classes, reported on every class.
    PerVt,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BestRow {
    pub vt: VtName,
    pub class: String,
    pub model_id: u32,
    pub iou: f64,
    pub precision: f64,
    pub recall: f64,
}

/// Strictly better IoU, or equal IoU and a lower model id.
fn beats(iou: f64, model: u32, best_iou: f64, best_model: u32) -> bool {
    iou > best_iou || (iou == best_iou && model < best_model)
}

/// The best model per (vt, class). Ties go to the lower model id, so the
/// result does not depend on record order.
pub fn best_per_vt_class(means: &[FoldMean], selection: Selection) -> Result<Vec<BestRow>> {
    if means.is_empty() {
        return Err(Error::Report("no records to rank".into()));
    }
    let row = |m: &FoldMean| BestRow {
        vt: m.vt,
        class: m.class.clone(),
        model_id: m.model_id,
        iou: m.iou,
        precision: m.precision,
        recall: m.recall,
    };
    match selection {
        Selection::PerClass => {
            let mut best: BTreeMap<(VtName, &str), &FoldMean> = BTreeMap::new();
            for m in means {
                best.entry((m.vt, m.class.as_str()))
                    .and_modify(|b| {
                        if beats(m.iou, m.model_id, b.iou, b.model_id) {
                            *b = m;
                        }
                    })
                    .or_insert(m);
            }
            Ok(best.into_values().map(row).collect())
        }
        Selection::PerVt => {
            let mut avg: BTreeMap<(VtName, u32), (f64, usize)> = BTreeMap::new();
            for m in means {
                let e = avg.entry((m.vt, m.model_id)).or_default();
                e.0 += m.iou;
                e.1 += 1;
            }
            let mut chosen: BTreeMap<VtName, (u32, f64)> = BTreeMap::new();
            for ((vt, model), (sum, n)) in avg {
                let a = sum / n as f64;
                chosen
                    .entry(vt)
                    .and_modify(|b| {
                        if beats(a, model, b.1, b.0) {
                            *b = (model, a);
                        }
                    })
                    .or_insert((model, a));
            }
            let mut rows: Vec<BestRow> = means
                .iter()
                .filter(|m| chosen[&m.vt].0 == m.model_id)
                .map(row)
                .collect();
            rows.sort_by(|a, b| (a.vt, &a.class).cmp(&(b.vt, &b.class)));
            Ok(rows)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GroupBy {
    Vt,
    Model,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariabilityRow {
    /// Visualisation name or model id, depending on the grouping.
    pub group: String,
    /// A class name, or [`ALL_CLASSES`] for every class pooled.
    pub class: String,
    pub n: usize,
    pub min: f64,
    pub median: f64,
    pub max: f64,
    pub range: f64,
}

/// Median of a non-empty slice; the mean of the two middle values for even lengths.
pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

fn spread(group: String, class: String, values: &[f64]) -> VariabilityRow {
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    VariabilityRow {
        group,
        class,
        n: values.len(),
        min,
        median: median(values),
        max,
        range: max - min,
    }
}

/// IoU spread within each group across the other axis (models when grouping
/// by visualisation and vice versa), per class and pooled over all classes.
pub fn variability(means: &[FoldMean], group_by: GroupBy) -> Result<Vec<VariabilityRow>> {
    if means.is_empty() {
        return Err(Error::Report("no records to summarise".into()));
    }
    // Groups are keyed so visualisations sort in their canonical order and
    // models numerically.
    let mut groups: BTreeMap<(u32, String), BTreeMap<&str, Vec<f64>>> = BTreeMap::new();
    for m in means {
        let key = match group_by {
            GroupBy::Vt => (VtName::ALL.iter().position(|v| *v == m.vt).unwrap() as u32, m.vt.to_string()),
            GroupBy::Model => (m.model_id, m.model_id.to_string()),
        };
        groups.entry(key).or_default().entry(m.class.as_str()).or_default().push(m.iou);
    }
    let mut rows = Vec::new();
    for ((_, name), classes) in groups {
        let mut pooled = Vec::new();
        for (class, values) in &classes {
            rows.push(spread(name.clone(), class.to_string(), values));
            pooled.extend_from_slice(values);
        }
        rows.push(spread(name, ALL_CLASSES.to_string(), &pooled));
    }
    Ok(rows)
}

/// Everything the report command writes.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub best: Vec<BestRow>,
    pub by_vt: Vec<VariabilityRow>,
    pub by_model: Vec<VariabilityRow>,
}

impl RunSummary {
    pub fn build(means: &[FoldMean], selection: Selection) -> Result<Self> {
        Ok(RunSummary {
            best: best_per_vt_class(means, selection)?,
            by_vt: variability(means, GroupBy::Vt)?,
            by_model: variability(means, GroupBy::Model)?,
        })
    }

    pub fn from_metric_rows(rows: &[MetricRow], selection: Selection) -> Result<(Self, Vec<FoldMean>)> {
        let records: Vec<EvalRecord> = rows.iter().map(EvalRecord::from).collect();
        let means = fold_mean(&records)?;
        Ok((Self::build(&means, selection)?, means))
    }

    pub fn write_csvs(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        write_rows(&self.best, &dir.join(BEST_CSV))?;
        write_rows(&self.by_vt, &dir.join(BY_VT_CSV))?;
        write_rows(&self.by_model, &dir.join(BY_MODEL_CSV))
    }

    pub fn read_csvs(dir: &Path) -> Result<Self> {
        Ok(RunSummary {
            best: read_rows(&dir.join(BEST_CSV))?,
            by_vt: read_rows(&dir.join(BY_VT_CSV))?,
            by_model: read_rows(&dir.join(BY_MODEL_CSV))?,
        })
    }
}

fn write_rows<T: Serialize>(rows: &[T], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn read_rows<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_path(path)?;
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}

/// Plain-text digest: classes ranked by their best IoU over all
/// visualisations, then the notes needed to read the numbers.
pub fn summary_text(summary: &RunSummary, means: &[FoldMean]) -> String {
    let mut per_class: BTreeMap<&str, &BestRow> = BTreeMap::new();
    for b in &summary.best {
        per_class
            .entry(b.class.as_str())
            .and_modify(|cur| {
                if beats(b.iou, b.model_id, cur.iou, cur.model_id) {
                    *cur = b;
                }
            })
            .or_insert(b);
    }
    let mut ranked: Vec<&BestRow> = per_class.into_values().collect();
    ranked.sort_by(|a, b| b.iou.total_cmp(&a.iou).then_with(|| a.class.cmp(&b.class)));

    let mut out = String::from("Best IoU per class\n");
    for b in &ranked {
        let _ = writeln!(out, "  {:<16} {:.4}  ({}, model {})", b.class, b.iou, b.vt, b.model_id);
    }
    out.push_str("\nIoU spread across models, per visualisation (all classes)\n");
    for r in summary.by_vt.iter().filter(|r| r.class == ALL_CLASSES) {
        let _ = writeln!(
            out,
            "  {:<10} min {:.4}  median {:.4}  max {:.4}  range {:.4}",
            r.group, r.min, r.median, r.max, r.range
        );
    }
    out.push_str("\nIoU spread across visualisations, per model (all classes)\n");
    for r in summary.by_model.iter().filter(|r| r.class == ALL_CLASSES) {
        let _ = writeln!(
            out,
            "  model {:<4} min {:.4}  median {:.4}  max {:.4}  range {:.4}",
            r.group, r.min, r.median, r.max, r.range
        );
    }
    let incomplete: Vec<&FoldMean> = means.iter().filter(|m| m.incomplete).collect();
    out.push_str("\nNotes\n");
    out.push_str("  Counts are accumulated over all pixels of a fold before IoU is taken (micro).\n");
    out.push_str("  Ratios with a zero denominator are reported as 1.0.\n");
    if !incomplete.is_empty() {
        let _ = writeln!(out, "  {} group(s) averaged over fewer folds than the run holds:", incomplete.len());
        for m in incomplete {
            let _ = writeln!(out, "    model {}, {}, {}: {} fold(s)", m.model_id, m.vt, m.class, m.folds);
        }
    }
    out
}
