use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::DemGrid;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WindowShape {
    Square,
    Circle,
}

/// Moving-window neighbourhood. A circle holds the offsets with
/// `di² + dj² <= radius²`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FocalWindow {
    pub radius: usize,
    pub shape: WindowShape,
}

impl FocalWindow {
    pub fn square(radius: usize) -> Self {
        FocalWindow {
            radius,
            shape: WindowShape::Square,
        }
    }

    pub fn circle(radius: usize) -> Self {
        FocalWindow {
            radius,
            shape: WindowShape::Circle,
        }
    }

    /// Column half-width of the window on row offset `di`.
    #[inline]
    pub fn half_width(&self, di: usize) -> usize {
        match self.shape {
            WindowShape::Square => self.radius,
            WindowShape::Circle => {
                let r2 = self.radius * self.radius;
                let rem = r2 - di * di;
                // integer sqrt, exact for the membership test
                let mut hw = (rem as f64).sqrt() as usize;
                while hw * hw > rem {
                    hw -= 1;
                }
                while (hw + 1) * (hw + 1) <= rem {
                    hw += 1;
                }
                hw
            }
        }
    }

    pub fn contains(&self, di: isize, dj: isize) -> bool {
        let r = self.radius as isize;
        match self.shape {
            WindowShape::Square => di.abs() <= r && dj.abs() <= r,
            WindowShape::Circle => di * di + dj * dj <= r * r,
        }
    }

    pub(crate) fn check(&self, grid: &DemGrid) -> Result<()> {
        if self.radius == 0 {
            return Err(Error::InvalidParam("window radius must be at least 1".into()));
        }
        let extent = grid.width().min(grid.height());
        if self.radius >= extent {
            return Err(Error::RadiusTooLarge {
                radius: self.radius,
                extent,
            });
        }
        Ok(())
    }
}

/// Summed-area tables of (shifted) values, squares and valid-cell counts.
///
/// Values are shifted by the grid mean before accumulation so that windows
/// far from zero elevation do not lose precision in the variance.
pub(crate) struct FocalSums {
    width: usize,
    height: usize,
    shift: f64,
    sum: Vec<f64>,
    sumsq: Vec<f64>,
    count: Option<Vec<u32>>,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct WindowMoments {
    pub n: u32,
    pub mean: f64,
    pub std: f64,
}

impl FocalSums {
    pub fn new(grid: &DemGrid) -> Self {
        let (w, h) = (grid.width(), grid.height());
        let stride = w + 1;
        let has_nodata = grid.valid_count() != w * h;

        let (total, n) = grid
            .values()
            .iter()
            .filter(|v| !grid.is_nodata_value(**v))
            .fold((0.0f64, 0usize), |(s, n), &v| (s + v as f64, n + 1));
        let shift = if n > 0 { total / n as f64 } else { 0.0 };

        let mut sum = vec![0.0f64; stride * (h + 1)];
        let mut sumsq = vec![0.0f64; stride * (h + 1)];
        let mut count = has_nodata.then(|| vec![0u32; stride * (h + 1)]);
        for row in 0..h {
            let mut rs = 0.0f64;
            let mut rss = 0.0f64;
            let mut rc = 0u32;
            for col in 0..w {
                if let Some(v) = grid.valid(row, col) {
                    let d = v as f64 - shift;
                    rs += d;
                    rss += d * d;
                    rc += 1;
                }
                let here = (row + 1) * stride + col + 1;
                let above = row * stride + col + 1;
                sum[here] = sum[above] + rs;
                sumsq[here] = sumsq[above] + rss;
                if let Some(c) = count.as_mut() {
                    c[here] = c[above] + rc;
                }
            }
        }
        FocalSums {
            width: w,
            height: h,
            shift,
            sum,
            sumsq,
            count,
        }
    }

    /// Sums over rows `r0..r1`, columns `c0..c1` (half-open).
    #[inline]
    fn rect(&self, r0: usize, r1: usize, c0: usize, c1: usize) -> (u32, f64, f64) {
        let s = self.width + 1;
        let (a, b, c, d) = (r0 * s + c0, r0 * s + c1, r1 * s + c0, r1 * s + c1);
        let n = match &self.count {
            Some(cnt) => cnt[d] + cnt[a] - cnt[b] - cnt[c],
            None => ((r1 - r0) * (c1 - c0)) as u32,
        };
        let sum = self.sum[d] - self.sum[b] - self.sum[c] + self.sum[a];
        let sumsq = self.sumsq[d] - self.sumsq[b] - self.sumsq[c] + self.sumsq[a];
        (n, sum, sumsq)
    }

    #[inline]
    pub fn moments(&self, row: usize, col: usize, window: FocalWindow) -> WindowMoments {
        let r = window.radius;
        let r0 = row.saturating_sub(r);
        let r1 = (row + r + 1).min(self.height);
        let (n, s, ss) = match window.shape {
            WindowShape::Square => {
                let c0 = col.saturating_sub(r);
                let c1 = (col + r + 1).min(self.width);
                self.rect(r0, r1, c0, c1)
            }
            WindowShape::Circle => {
                let mut acc = (0u32, 0.0f64, 0.0f64);
                for rr in r0..r1 {
                    let hw = window.half_width(rr.abs_diff(row));
                    let c0 = col.saturating_sub(hw);
                    let c1 = (col + hw + 1).min(self.width);
                    let (n, s, ss) = self.rect(rr, rr + 1, c0, c1);
                    acc = (acc.0 + n, acc.1 + s, acc.2 + ss);
                }
                acc
            }
        };
        if n == 0 {
            return WindowMoments {
                n,
                mean: f64::NAN,
                std: f64::NAN,
            };
        }
        let nf = n as f64;
        let m = s / nf;
        let std = if n == 1 {
            0.0
        } else {
            (ss / nf - m * m).max(0.0).sqrt()
        };
        WindowMoments {
            n,
            mean: self.shift + m,
            std,
        }
    }
}

/// Applies `f` to the window moments of every valid cell, row-parallel.
pub(crate) fn map_moments(
    grid: &DemGrid,
    sums: &FocalSums,
    window: FocalWindow,
    f: impl Fn(f32, WindowMoments) -> f32 + Sync,
) -> Vec<f32> {
    let w = grid.width();
    let fill = grid.nodata_fill();
    let mut out = vec![0.0f32; w * grid.height()];
    out.par_chunks_mut(w).enumerate().for_each(|(row, line)| {
        for (col, o) in line.iter_mut().enumerate() {
            *o = match grid.valid(row, col) {
                Some(z) => {
                    let m = sums.moments(row, col, window);
                    if m.n == 0 {
                        fill
                    } else {
                        f(z, m)
                    }
                }
                None => fill,
            };
        }
    });
    out
}

/// Mean of the valid cells in the window around each cell (centre included).
/// Windows are truncated at the raster edge.
pub fn focal_mean(grid: &DemGrid, window: FocalWindow) -> Result<DemGrid> {
    window.check(grid)?;
    let sums = FocalSums::new(grid);
    let values = map_moments(grid, &sums, window, |_, m| m.mean as f32);
    Ok(grid.derive(values))
}

/// Population standard deviation of the valid cells in the window.
pub fn focal_std(grid: &DemGrid, window: FocalWindow) -> Result<DemGrid> {
    window.check(grid)?;
    let sums = FocalSums::new(grid);
    let values = map_moments(grid, &sums, window, |_, m| m.std as f32);
    Ok(grid.derive(values))
}
