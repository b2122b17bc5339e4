//! Brute-force reference implementations and fixtures shared by the
//! integration tests. Oracles loop over pixels directly and share no code
//! with the library beyond the grid type.

#![allow(dead_code)]

use std::path::Path;

use reliefseg::dataset::stream::SplitMix64;
use reliefseg::dataset::{resolve, DatasetManifest};
use reliefseg::metrics::prediction_path;
use reliefseg::raster::io::{read_mask, write_mask};
use reliefseg::raster::{ClassMask, DemGrid};
use reliefseg::viz::{ScaleRange, VtParams};

pub const ORACLE_GRIDS: u64 = 100;
pub const FLOAT_TOL: f64 = 1e-6;

/// 32x32 grid of heights in [0, 4) at 1/64 m steps; odd seeds sprinkle ~5% NaN nodata.
pub fn random_grid(seed: u64) -> DemGrid {
    let mut rng = SplitMix64::new(seed.wrapping_mul(7919).wrapping_add(13));
    let with_nodata = seed % 2 == 1;
    let gsd = [1.0, 0.5, 2.0][(seed % 3) as usize];
    DemGrid::from_fn(32, 32, gsd, |_, _| {
        let v = rng.below(256) as f32 / 64.0;
        if with_nodata && rng.next_f64() < 0.05 {
            f32::NAN
        } else {
            v
        }
    })
    .unwrap()
}

pub fn oracle_params() -> VtParams {
    VtParams {
        svf_directions: 16,
        svf_radius_px: 10,
        slrm_radius_px: 6,
        mstp_local: ScaleRange::new(1, 3, 1),
        mstp_meso: ScaleRange::new(3, 7, 2),
        mstp_broad: ScaleRange::new(7, 13, 3),
        ..VtParams::default()
    }
}

fn valid(g: &DemGrid, r: isize, c: isize) -> Option<f64> {
    if r < 0 || c < 0 || r >= g.height() as isize || c >= g.width() as isize {
        return None;
    }
    let v = g.get(r as usize, c as usize);
    if g.is_nodata_value(v) {
        None
    } else {
        Some(v as f64)
    }
}

fn in_bounds(g: &DemGrid, r: isize, c: isize) -> bool {
    r >= 0 && c >= 0 && r < g.height() as isize && c < g.width() as isize
}

/// Walks each ray step by step from the azimuth angle itself.
pub fn ray_walk_angles(g: &DemGrid, row: usize, col: usize, n: usize, radius: usize) -> Vec<f64> {
    let z0 = g.get(row, col) as f64;
    (0..n)
        .map(|d| {
            let theta = 2.0 * std::f64::consts::PI * d as f64 / n as f64;
            let mut best: Option<f64> = None;
            for k in 1..=radius {
                let dc = (k as f64 * theta.cos()).round() as isize;
                let dr = -((k as f64 * theta.sin()).round() as isize);
                let (r, c) = (row as isize + dr, col as isize + dc);
                if !in_bounds(g, r, c) {
                    break;
                }
                if let Some(z) = valid(g, r, c) {
                    let dist = ((dr * dr + dc * dc) as f64).sqrt() * g.gsd();
                    let a = (z - z0).atan2(dist);
                    best = Some(best.map_or(a, |b: f64| b.max(a)));
                }
            }
            best.unwrap_or(0.0)
        })
        .collect()
}

pub fn svf_oracle(g: &DemGrid, row: usize, col: usize, n: usize, radius: usize) -> f64 {
    let a = ray_walk_angles(g, row, col, n, radius);
    1.0 - a.iter().map(|x| x.max(0.0).sin()).sum::<f64>() / n as f64
}

pub fn openness_oracle(g: &DemGrid, row: usize, col: usize, n: usize, radius: usize) -> f64 {
    let a = ray_walk_angles(g, row, col, n, radius);
    a.iter().map(|x| 90.0 - x.to_degrees()).sum::<f64>() / n as f64
}

/// (count, mean, population std) of the valid cells in a window.
pub fn window_stats(g: &DemGrid, row: usize, col: usize, radius: usize, circle: bool) -> (usize, f64, f64) {
    let r = radius as isize;
    let mut vals = Vec::new();
    for di in -r..=r {
        for dj in -r..=r {
            if circle && di * di + dj * dj > r * r {
                continue;
            }
            if let Some(v) = valid(g, row as isize + di, col as isize + dj) {
                vals.push(v);
            }
        }
    }
    let n = vals.len();
    let mean = vals.iter().sum::<f64>() / n as f64;
    let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64;
    (n, mean, var.sqrt())
}

pub fn slrm_oracle(g: &DemGrid, row: usize, col: usize, radius: usize) -> f64 {
    let (_, mean, _) = window_stats(g, row, col, radius, true);
    g.get(row, col) as f64 - mean
}

/// MSTP band value of one scale range: the DEV of largest magnitude, mapped to [0, 1].
pub fn mstp_oracle(g: &DemGrid, row: usize, col: usize, range: ScaleRange) -> f64 {
    let z = g.get(row, col) as f64;
    let mut best = 0.0f64;
    let mut radius = range.min;
    while radius <= range.max {
        let (_, mean, std) = window_stats(g, row, col, radius, false);
        let dev = if std < 1e-6 { 0.0 } else { (z - mean) / std };
        if dev.abs() > best.abs() {
            best = dev;
        }
        radius += range.step;
    }
    ((best + 3.0) / 6.0).clamp(0.0, 1.0)
}

/// Horn slope in degrees. Interior cells with a full valid neighbourhood use
/// the textbook 3x3 stencil; elsewhere each of the three lines contributes a
/// central or one-sided difference and lines are weighted 1-2-1.
pub fn slope_oracle(g: &DemGrid, row: usize, col: usize) -> f64 {
    let (r, c) = (row as isize, col as isize);
    let nb: Vec<Option<f64>> = (-1..=1)
        .flat_map(|di| (-1..=1).map(move |dj| (di, dj)))
        .map(|(di, dj)| valid(g, r + di, c + dj))
        .collect();
    let s = g.gsd();
    let (p, q) = if nb.iter().all(Option::is_some) {
        let v: Vec<f64> = nb.into_iter().map(Option::unwrap).collect();
        let (a, b, cc, d, f, gg, h, i) = (v[0], v[1], v[2], v[3], v[5], v[6], v[7], v[8]);
        (
            ((cc + 2.0 * f + i) - (a + 2.0 * d + gg)) / (8.0 * s),
            ((gg + 2.0 * h + i) - (a + 2.0 * b + cc)) / (8.0 * s),
        )
    } else {
        let line_diff = |lo: Option<f64>, mid: Option<f64>, hi: Option<f64>| match (lo, mid, hi) {
            (Some(a), _, Some(b)) => Some((b - a) / (2.0 * s)),
            (None, Some(m), Some(b)) => Some((b - m) / s),
            (Some(a), Some(m), None) => Some((m - a) / s),
            _ => None,
        };
        let weighted = |diffs: [Option<f64>; 3]| {
            let (mut acc, mut wsum) = (0.0, 0.0);
            for (d, w) in diffs.iter().zip([1.0, 2.0, 1.0]) {
                if let Some(d) = d {
                    acc += w * d;
                    wsum += w;
                }
            }
            if wsum > 0.0 {
                acc / wsum
            } else {
                0.0
            }
        };
        let at = |di: isize, dj: isize| nb[((di + 1) * 3 + dj + 1) as usize];
        let p = weighted([-1, 0, 1].map(|di| line_diff(at(di, -1), at(di, 0), at(di, 1))));
        let q = weighted([-1, 0, 1].map(|dj| line_diff(at(-1, dj), at(0, dj), at(1, dj))));
        (p, q)
    };
    (p * p + q * q).sqrt().atan().to_degrees()
}

/// Percentile stretch with quantiles taken by linear interpolation at
/// position (n - 1)·p over the sorted valid values.
pub fn stretch_oracle(g: &DemGrid, low: f64, high: f64) -> Vec<f64> {
    let mut v: Vec<f64> = g.values().iter().filter(|x| !g.is_nodata_value(**x)).map(|&x| x as f64).collect();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let q = |p: f64| {
        let pos = (v.len() - 1) as f64 * p / 100.0;
        let i = pos.floor() as usize;
        let j = (i + 1).min(v.len() - 1);
        v[i] + (pos - i as f64) * (v[j] - v[i])
    };
    let (lo, hi) = (q(low), q(high));
    g.values()
        .iter()
        .map(|&x| {
            if g.is_nodata_value(x) {
                f64::NAN
            } else if hi > lo {
                ((x as f64 - lo) / (hi - lo)).clamp(0.0, 1.0)
            } else {
                0.5
            }
        })
        .collect()
}

/// Compares a library raster with an oracle over every cell; NaN must match
/// NaN. The oracle value is rounded to f32 first, the precision rasters are
/// stored in.
pub fn compare(name: &str, seed: u64, got: &[f32], want: impl Fn(usize) -> f64, tol: f64) -> Result<(), String> {
    for (i, &g) in got.iter().enumerate() {
        let w = want(i) as f32 as f64;
        let ok = if w.is_nan() { g.is_nan() } else { (g as f64 - w).abs() <= tol };
        if !ok {
            return Err(format!("{name}: grid {seed}, cell {i}: got {g}, oracle {w}"));
        }
    }
    Ok(())
}

/// Writes one binary prediction per (tile, class) equal to the ground truth.
pub fn write_perfect_predictions(manifest_path: &Path, out: &Path) {
    let manifest = DatasetManifest::load(manifest_path).unwrap();
    let base = manifest_path.parent().unwrap();
    std::fs::create_dir_all(out).unwrap();
    for e in &manifest.entries {
        let mask = read_mask(resolve(base, &e.mask_path)).unwrap();
        for c in manifest.catalog.classes() {
            let bin: Vec<u8> = mask.values().iter().map(|&v| (v == c.id) as u8).collect();
            let pred = ClassMask::new(mask.width(), mask.height(), bin).unwrap();
            write_mask(&pred, prediction_path(out, &e.tile_id, &c.name), manifest.gsd, None).unwrap();
        }
    }
}

type Check = fn(u64) -> Result<(), String>;

/// Every oracle comparison, run per random grid seed.
pub const ORACLE_CHECKS: [(&str, Check); 7] = [
    ("horizon angles", check_horizon_angles),
    ("sky-view factor", check_svf),
    ("positive openness", check_openness),
    ("SLRM", check_slrm),
    ("MSTP", check_mstp),
    ("slope", check_slope),
    ("percentile stretch", check_stretch),
];

fn cells(g: &DemGrid) -> impl Iterator<Item = (usize, usize)> {
    let w = g.width();
    (0..g.height()).flat_map(move |r| (0..w).map(move |c| (r, c)))
}

fn idx(g: &DemGrid, i: usize) -> (usize, usize) {
    (i / g.width(), i % g.width())
}

pub fn check_horizon_angles(seed: u64) -> Result<(), String> {
    let g = random_grid(seed);
    let p = oracle_params();
    for (r, c) in cells(&g).step_by(7) {
        let got = reliefseg::viz::horizon_angles(&g, (r, c), &p).map_err(|e| e.to_string())?;
        let want = ray_walk_angles(&g, r, c, p.svf_directions, p.svf_radius_px);
        for (d, (a, b)) in got.iter().zip(&want).enumerate() {
            if (a - b).abs() > 1e-12 {
                return Err(format!("horizon: grid {seed}, cell ({r}, {c}), ray {d}: {a} vs {b}"));
            }
        }
    }
    Ok(())
}

pub fn check_svf(seed: u64) -> Result<(), String> {
    let g = random_grid(seed);
    let p = oracle_params();
    let got = reliefseg::viz::sky_view_factor(&g, &p).map_err(|e| e.to_string())?;
    compare("svf", seed, got.values(), |i| {
        let (r, c) = idx(&g, i);
        if g.is_nodata(r, c) { f64::NAN } else { svf_oracle(&g, r, c, p.svf_directions, p.svf_radius_px) }
    }, FLOAT_TOL)
}

pub fn check_openness(seed: u64) -> Result<(), String> {
    let g = random_grid(seed);
    let p = oracle_params();
    let got = reliefseg::viz::positive_openness(&g, &p).map_err(|e| e.to_string())?;
    compare("openness", seed, got.values(), |i| {
        let (r, c) = idx(&g, i);
        if g.is_nodata(r, c) { f64::NAN } else { openness_oracle(&g, r, c, p.svf_directions, p.svf_radius_px) }
    }, FLOAT_TOL)
}

pub fn check_slrm(seed: u64) -> Result<(), String> {
    let g = random_grid(seed);
    let p = oracle_params();
    let got = reliefseg::viz::slrm(&g, &p).map_err(|e| e.to_string())?;
    compare("slrm", seed, got.values(), |i| {
        let (r, c) = idx(&g, i);
        if g.is_nodata(r, c) { f64::NAN } else { slrm_oracle(&g, r, c, p.slrm_radius_px) }
    }, FLOAT_TOL)
}

pub fn check_mstp(seed: u64) -> Result<(), String> {
    let g = random_grid(seed);
    let p = oracle_params();
    let got = reliefseg::viz::mstp(&g, &p).map_err(|e| e.to_string())?;
    for (b, range) in [p.mstp_broad, p.mstp_meso, p.mstp_local].into_iter().enumerate() {
        compare(&format!("mstp band {b}"), seed, got.band(b), |i| {
            let (r, c) = idx(&g, i);
            if g.is_nodata(r, c) { f64::NAN } else { mstp_oracle(&g, r, c, range) }
        }, FLOAT_TOL)?;
    }
    Ok(())
}

pub fn check_slope(seed: u64) -> Result<(), String> {
    let g = random_grid(seed);
    let got = reliefseg::viz::slope(&g).map_err(|e| e.to_string())?;
    compare("slope", seed, got.values(), |i| {
        let (r, c) = idx(&g, i);
        if g.is_nodata(r, c) { f64::NAN } else { slope_oracle(&g, r, c) }
    }, FLOAT_TOL)
}

pub fn check_stretch(seed: u64) -> Result<(), String> {
    let g = random_grid(seed);
    let (lo, hi) = [(1.0, 99.0), (2.0, 98.0), (0.0, 100.0)][(seed % 3) as usize];
    let got = reliefseg::raster::percentile_cut_stretch(&g, lo, hi).map_err(|e| e.to_string())?;
    let want = stretch_oracle(&g, lo, hi);
    compare("stretch", seed, got.band(0), |i| want[i], FLOAT_TOL)
}
