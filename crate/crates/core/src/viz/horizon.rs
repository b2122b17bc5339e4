//! Horizon search along azimuthal rays, and the two products built on it:
//! sky-view factor and positive openness.
//!
//! Ray `d` of `n` points at azimuth `2πd/n`, counted counter-clockwise from
//! east. Its k-th sample (k = 1..=radius) is the cell nearest to the point k
//! pixels along the ray: `(row - round(k·sinθ), col + round(k·cosθ))`, at the
//! Euclidean distance between the two cell centres. A ray stops at the raster
//! edge and skips nodata samples. The horizon angle is the largest elevation
//! angle `atan(Δz / distance)` over the ray's samples, or 0 for an empty ray.

use rayon::prelude::*;

use super::VtParams;
use crate::error::{Error, Result};
use crate::raster::DemGrid;

#[derive(Debug, Clone, Copy)]
struct Sample {
    drow: isize,
    dcol: isize,
    inv_dist: f64,
}

/// Precomputed sample offsets for every azimuth.
#[derive(Debug, Clone)]
pub struct HorizonRays {
    radius: usize,
    rays: Vec<Vec<Sample>>,
}

impl HorizonRays {
    pub fn new(directions: usize, radius_px: usize, gsd: f64) -> Self {
        let units = unit_vectors(directions);
        let rays = units
            .iter()
            .map(|&(c, s)| {
                (1..=radius_px)
                    .map(|k| {
                        let kf = k as f64;
                        let dcol = (kf * c).round() as isize;
                        let drow = -((kf * s).round() as isize);
                        let dist = ((drow * drow + dcol * dcol) as f64).sqrt() * gsd;
                        Sample {
                            drow,
                            dcol,
                            inv_dist: 1.0 / dist,
                        }
                    })
                    .collect()
            })
            .collect();
        HorizonRays {
            radius: radius_px,
            rays,
        }
    }

    pub fn from_params(params: &VtParams, gsd: f64) -> Self {
        Self::new(params.svf_directions, params.svf_radius_px, gsd)
    }

    pub fn directions(&self) -> usize {
        self.rays.len()
    }

    /// Largest `Δz / distance` per ray, `-inf` for rays with no samples.
    fn max_tangents(&self, grid: &DemGrid, row: usize, col: usize, out: &mut [f64], checked: bool) {
        let (h, w) = (grid.height() as isize, grid.width() as isize);
        let z0 = grid.get(row, col) as f64;
        let values = grid.values();
        let base = (row * grid.width() + col) as isize;
        let interior = !checked
            && row >= self.radius
            && col >= self.radius
            && row + self.radius < grid.height()
            && col + self.radius < grid.width();
        for (ray, best) in self.rays.iter().zip(out.iter_mut()) {
            let mut m = f64::NEG_INFINITY;
            if interior {
                for s in ray {
                    let z = values[(base + s.drow * w + s.dcol) as usize] as f64;
                    let t = (z - z0) * s.inv_dist;
                    if t > m {
                        m = t;
                    }
                }
            } else {
                for s in ray {
                    let (r, c) = (row as isize + s.drow, col as isize + s.dcol);
                    if r < 0 || c < 0 || r >= h || c >= w {
                        break;
                    }
                    if let Some(z) = grid.valid(r as usize, c as usize) {
                        let t = (z as f64 - z0) * s.inv_dist;
                        if t > m {
                            m = t;
                        }
                    }
                }
            }
            *best = m;
        }
    }
}

/// Unit direction vectors; with `n % 4 == 0` the later quadrants are exact
/// 90° rotations of the first so that rotated grids sample identically.
fn unit_vectors(n: usize) -> Vec<(f64, f64)> {
    let angle = |d: usize| 2.0 * std::f64::consts::PI * d as f64 / n as f64;
    if n.is_multiple_of(4) {
        let quarter = n / 4;
        let first: Vec<(f64, f64)> = (0..quarter)
            .map(|d| if d == 0 { (1.0, 0.0) } else { (angle(d).cos(), angle(d).sin()) })
            .collect();
        (0..n)
            .map(|d| {
                let (mut c, mut s) = first[d % quarter];
                for _ in 0..d / quarter {
                    (c, s) = (-s, c);
                }
                (c, s)
            })
            .collect()
    } else {
        (0..n).map(|d| (angle(d).cos(), angle(d).sin())).collect()
    }
}

#[inline]
fn horizon_angle(max_tan: f64) -> f64 {
    if max_tan == f64::NEG_INFINITY {
        0.0
    } else {
        max_tan.atan()
    }
}

/// Horizon angles (radians) of one cell, one per azimuth.
pub fn horizon_angles(grid: &DemGrid, cell: (usize, usize), params: &VtParams) -> Result<Vec<f64>> {
    let (row, col) = cell;
    if row >= grid.height() || col >= grid.width() {
        return Err(Error::InvalidParam(format!(
            "cell ({row}, {col}) outside {}x{} grid",
            grid.width(),
            grid.height()
        )));
    }
    params.validate()?;
    let rays = HorizonRays::from_params(params, grid.gsd());
    let mut tans = vec![0.0; rays.directions()];
    rays.max_tangents(grid, row, col, &mut tans, true);
    Ok(tans.into_iter().map(horizon_angle).collect())
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Products {
    Svf,
    Openness,
    Both,
}

fn scan(grid: &DemGrid, params: &VtParams, which: Products) -> Result<(Vec<f32>, Vec<f32>)> {
    params.validate()?;
    let rays = HorizonRays::from_params(params, grid.gsd());
    let n = rays.directions();
    let w = grid.width();
    let len = w * grid.height();
    let fill = grid.nodata_fill();
    let checked = grid.valid_count() != len;
    let want_svf = which != Products::Openness;
    let want_open = which != Products::Svf;
    let mut svf = vec![0.0f32; if want_svf { len } else { 0 }];
    let mut open = vec![0.0f32; if want_open { len } else { 0 }];

    let row_job = |row: usize, svf_line: &mut [f32], open_line: &mut [f32]| {
        let mut tans = vec![0.0f64; n];
        for col in 0..w {
            if grid.is_nodata(row, col) {
                if want_svf {
                    svf_line[col] = fill;
                }
                if want_open {
                    open_line[col] = fill;
                }
                continue;
            }
            rays.max_tangents(grid, row, col, &mut tans, checked);
            if want_svf {
                // sin(atan t) = t / sqrt(1 + t²)
                let blocked: f64 = tans
                    .iter()
                    .map(|&t| if t > 0.0 { t / (1.0 + t * t).sqrt() } else { 0.0 })
                    .sum();
                svf_line[col] = (1.0 - blocked / n as f64) as f32;
            }
            if want_open {
                let total: f64 = tans
                    .iter()
                    .map(|&t| 90.0 - horizon_angle(t).to_degrees())
                    .sum();
                open_line[col] = (total / n as f64) as f32;
            }
        }
    };

    match which {
        Products::Both => svf
            .par_chunks_mut(w)
            .zip(open.par_chunks_mut(w))
            .enumerate()
            .for_each(|(row, (s, o))| row_job(row, s, o)),
        Products::Svf => svf
            .par_chunks_mut(w)
            .enumerate()
            .for_each(|(row, s)| row_job(row, s, &mut [])),
        Products::Openness => open
            .par_chunks_mut(w)
            .enumerate()
            .for_each(|(row, o)| row_job(row, &mut [], o)),
    }
    Ok((svf, open))
}

/// Sky-view factor `1 - Σ sin(max(γ_d, 0)) / n`, in [0, 1].
pub fn sky_view_factor(grid: &DemGrid, params: &VtParams) -> Result<DemGrid> {
    let (svf, _) = scan(grid, params, Products::Svf)?;
    Ok(grid.derive(svf))
}

/// Positive openness in degrees: mean over azimuths of `90° - γ_d`.
pub fn positive_openness(grid: &DemGrid, params: &VtParams) -> Result<DemGrid> {
    let (_, open) = scan(grid, params, Products::Openness)?;
    Ok(grid.derive(open))
}

/// Sky-view factor and positive openness from a single horizon scan.
pub fn horizon_products(grid: &DemGrid, params: &VtParams) -> Result<(DemGrid, DemGrid)> {
    let (svf, open) = scan(grid, params, Products::Both)?;
    Ok((grid.derive(svf), grid.derive(open)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_4;

    fn params(n: usize, r: usize) -> VtParams {
        VtParams {
            svf_directions: n,
            svf_radius_px: r,
            ..VtParams::default()
        }
    }

    #[test]
    fn unit_vectors_cover_circle() {
        let u = unit_vectors(16);
        assert_eq!(u[0], (1.0, 0.0));
        assert_eq!(u[4], (0.0, 1.0));
        assert_eq!(u[8], (-1.0, 0.0));
        assert_eq!(u[12], (0.0, -1.0));
        for (d, (c, s)) in u.iter().enumerate() {
            let a = 2.0 * std::f64::consts::PI * d as f64 / 16.0;
            assert!((c - a.cos()).abs() < 1e-15 && (s - a.sin()).abs() < 1e-15);
        }
    }

    #[test]
    fn flat_grid() {
        let g = DemGrid::filled(20, 20, 3.0, 0.5).unwrap();
        let p = params(8, 5);
        assert!(horizon_angles(&g, (0, 0), &p).unwrap().iter().all(|&a| a == 0.0));
        let (svf, open) = horizon_products(&g, &p).unwrap();
        assert!(svf.values().iter().all(|&v| v == 1.0));
        assert!(open.values().iter().all(|&v| v == 90.0));
    }

    #[test]
    fn cone_gives_45_degrees() {
        let (c, r) = (10usize, 10usize);
        let g = DemGrid::from_fn(21, 21, 1.0, |row, col| {
            let (dr, dc) = (row as f64 - r as f64, col as f64 - c as f64);
            (dr * dr + dc * dc).sqrt() as f32
        })
        .unwrap();
        let p = params(16, 8);
        for a in horizon_angles(&g, (r, c), &p).unwrap() {
            assert!((a - FRAC_PI_4).abs() < 1e-6, "{a}");
        }
        let svf = sky_view_factor(&g, &p).unwrap();
        assert!((svf.get(r, c) as f64 - (1.0 - FRAC_PI_4.sin())).abs() < 1e-6);
        let open = positive_openness(&g, &p).unwrap();
        assert!((open.get(r, c) - 45.0).abs() < 1e-4);
    }

    #[test]
    fn corner_rays_are_truncated() {
        let g = DemGrid::from_fn(10, 10, 1.0, |r, c| (r + c) as f32).unwrap();
        // from the bottom-right corner only westward/northward rays exist and
        // they all descend; eastward rays are empty (angle 0)
        let a = horizon_angles(&g, (9, 9), &params(4, 3)).unwrap();
        assert_eq!(a[0], 0.0);
        assert!(a[1] < 0.0 && a[2] < 0.0);
        assert_eq!(a[3], 0.0);
        assert!(horizon_angles(&g, (10, 0), &params(4, 3)).is_err());
    }

    #[test]
    fn ridge_and_pit_openness() {
        let ridge = DemGrid::from_fn(21, 21, 1.0, |r, c| -((r as f32 - 10.0).powi(2) + (c as f32 - 10.0).powi(2))).unwrap();
        let pit = ridge.map_valid(|v| -v);
        let p = params(8, 5);
        assert!(positive_openness(&ridge, &p).unwrap().get(10, 10) > 90.0);
        assert!(positive_openness(&pit, &p).unwrap().get(10, 10) < 90.0);
    }
}
