use super::{DemGrid, MultiBandImage};
use crate::error::{Error, Result};

/// Quantile of already-sorted data by linear interpolation between the
/// closest order statistics (Hyndman & Fan type 7). `pct` is in [0, 100].
pub fn quantile_type7(sorted: &[f64], pct: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    let h = (sorted.len() - 1) as f64 * (pct / 100.0);
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    let frac = h - lo as f64;
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}

/// Linear stretch between the `low_pct` and `high_pct` quantiles of the valid
/// cells, clamped to [0, 1]. A tile with no spread maps to 0.5.
pub fn percentile_cut_stretch(
    grid: &DemGrid,
    low_pct: f64,
    high_pct: f64,
) -> Result<MultiBandImage> {
    if !(0.0..100.0).contains(&low_pct) || !(low_pct < high_pct && high_pct <= 100.0) {
        return Err(Error::InvalidParam(format!(
            "percentile cuts must satisfy 0 <= low < high <= 100, got {low_pct}/{high_pct}"
        )));
    }
    let mut sorted: Vec<f64> = grid
        .values()
        .iter()
        .filter(|v| !grid.is_nodata_value(**v))
        .map(|&v| v as f64)
        .collect();
    if sorted.is_empty() {
        return Err(Error::Empty);
    }
    sorted.sort_unstable_by(f64::total_cmp);
    let lo = quantile_type7(&sorted, low_pct);
    let hi = quantile_type7(&sorted, high_pct);
    let span = hi - lo;

    let band = grid
        .values()
        .iter()
        .map(|&v| {
            if grid.is_nodata_value(v) {
                f32::NAN
            } else if span > 0.0 {
                ((v as f64 - lo) / span).clamp(0.0, 1.0) as f32
            } else {
                0.5
            }
        })
        .collect();
    MultiBandImage::single(grid.width(), grid.height(), band)
}
