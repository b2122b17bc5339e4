//! Local relief and multiscale topographic position.

use rayon::prelude::*;

use super::{ScaleRange, VtParams};
use crate::error::Result;
use crate::raster::focal::{map_moments, FocalSums};
use crate::raster::{percentile_cut_stretch, DemGrid, FocalWindow, MultiBandImage};

/// Standard deviations below this count as zero variance (DEV = 0).
pub const DEV_EPSILON: f64 = 1e-6;
/// DEV values of ±`DEV_SCALE` map to the ends of [0, 1].
pub const DEV_SCALE: f64 = 3.0;

/// Simple local relief model: the DEM minus its mean over a circular window
/// of `slrm_radius_px`.
pub fn slrm(grid: &DemGrid, params: &VtParams) -> Result<DemGrid> {
    let window = FocalWindow::circle(params.slrm_radius_px);
    window.check(grid)?;
    let sums = FocalSums::new(grid);
    let values = map_moments(grid, &sums, window, |z, m| (z as f64 - m.mean) as f32);
    Ok(grid.derive(values))
}

/// Deviation from mean elevation with the largest magnitude over the radii of
/// `range` (square windows). Earlier radii win ties.
pub fn max_abs_dev(grid: &DemGrid, range: ScaleRange) -> Result<DemGrid> {
    let sums = FocalSums::new(grid);
    max_abs_dev_with(grid, &sums, range)
}

fn max_abs_dev_with(grid: &DemGrid, sums: &FocalSums, range: ScaleRange) -> Result<DemGrid> {
    let windows: Vec<FocalWindow> = range.radii().map(FocalWindow::square).collect();
    for w in &windows {
        w.check(grid)?;
    }
    let width = grid.width();
    let fill = grid.nodata_fill();
    let mut out = vec![0.0f32; grid.values().len()];
    out.par_chunks_mut(width).enumerate().for_each(|(row, line)| {
        for (col, o) in line.iter_mut().enumerate() {
            let Some(z) = grid.valid(row, col) else {
                *o = fill;
                continue;
            };
            let mut best = 0.0f64;
            for w in &windows {
                let m = sums.moments(row, col, *w);
                let dev = if m.std < DEV_EPSILON {
                    0.0
                } else {
                    (z as f64 - m.mean) / m.std
                };
                if dev.abs() > best.abs() {
                    best = dev;
                }
            }
            *o = best as f32;
        }
    });
    Ok(grid.derive(out))
}

fn dev_to_unit(dev: f32) -> f32 {
    if dev.is_nan() {
        return f32::NAN;
    }
    ((dev as f64 + DEV_SCALE) / (2.0 * DEV_SCALE)).clamp(0.0, 1.0) as f32
}

/// Three-band multiscale topographic position composite, bands ordered
/// (broad, meso, local).
pub fn mstp(grid: &DemGrid, params: &VtParams) -> Result<MultiBandImage> {
    params.validate()?;
    let sums = FocalSums::new(grid);
    let bands = [params.mstp_broad, params.mstp_meso, params.mstp_local]
        .into_iter()
        .map(|range| {
            let dev = max_abs_dev_with(grid, &sums, range)?;
            Ok(dev.values().iter().map(|&d| dev_to_unit(d)).collect())
        })
        .collect::<Result<Vec<Vec<f32>>>>()?;
    MultiBandImage::new(grid.width(), grid.height(), bands)
}

/// `clamp(m · (0.5 + 0.5·l) · 2, 0, 1)`: brightens a position band by the
/// stretched local relief `l`.
#[inline]
pub fn e2mstp_fuse(mstp_value: f32, luminance: f32) -> f32 {
    if mstp_value.is_nan() || luminance.is_nan() {
        return f32::NAN;
    }
    (mstp_value as f64 * (0.5 + luminance as f64 * 0.5) * 2.0).clamp(0.0, 1.0) as f32
}

/// MSTP composite modulated by the percentile-stretched SLRM.
pub fn e2mstp(grid: &DemGrid, params: &VtParams) -> Result<MultiBandImage> {
    let composite = mstp(grid, params)?;
    let relief = slrm(grid, params)?;
    let lum = percentile_cut_stretch(&relief, params.cut_low_pct, params.cut_high_pct)?;
    let lum = lum.band(0);
    let bands = composite
        .bands()
        .iter()
        .map(|b| b.iter().zip(lum).map(|(&m, &l)| e2mstp_fuse(m, l)).collect())
        .collect();
    MultiBandImage::new(grid.width(), grid.height(), bands)
}
