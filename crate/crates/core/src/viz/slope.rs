use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::raster::DemGrid;

const ROW_WEIGHTS: [f64; 3] = [1.0, 2.0, 1.0];

/// Horn derivative along one axis at (row, col).
///
/// For each of the three lines across the axis, take the central difference
/// (or the one-sided difference where a neighbour is off-grid or nodata) and
/// average the lines with weights 1-2-1 over those that yielded a difference.
/// In the interior this is exactly the 3x3 Horn stencil.
#[inline]
fn horn_component(grid: &DemGrid, row: usize, col: usize, along_cols: bool) -> f64 {
    let (h, w) = (grid.height() as isize, grid.width() as isize);
    let at = |line: isize, pos: isize| -> Option<f64> {
        let (r, c) = if along_cols { (line, pos) } else { (pos, line) };
        if r < 0 || c < 0 || r >= h || c >= w {
            None
        } else {
            grid.valid(r as usize, c as usize).map(f64::from)
        }
    };
    let (line0, pos0) = if along_cols {
        (row as isize, col as isize)
    } else {
        (col as isize, row as isize)
    };
    let gsd = grid.gsd();
    let mut acc = 0.0;
    let mut wsum = 0.0;
    for (k, wt) in ROW_WEIGHTS.iter().enumerate() {
        let line = line0 + k as isize - 1;
        let d = match (at(line, pos0 - 1), at(line, pos0), at(line, pos0 + 1)) {
            (Some(a), _, Some(b)) => Some((b - a) / (2.0 * gsd)),
            (None, Some(m), Some(b)) => Some((b - m) / gsd),
            (Some(a), Some(m), None) => Some((m - a) / gsd),
            _ => None,
        };
        if let Some(d) = d {
            acc += wt * d;
            wsum += wt;
        }
    }
    if wsum > 0.0 {
        acc / wsum
    } else {
        0.0
    }
}

/// Slope angle in degrees from the Horn gradient, distances scaled by gsd.
pub fn slope(grid: &DemGrid) -> Result<DemGrid> {
    if grid.width() < 3 || grid.height() < 3 {
        return Err(Error::InvalidGrid(format!(
            "slope needs at least 3x3 cells, got {}x{}",
            grid.width(),
            grid.height()
        )));
    }
    let w = grid.width();
    let fill = grid.nodata_fill();
    let mut out = vec![0.0f32; w * grid.height()];
    out.par_chunks_mut(w).enumerate().for_each(|(row, line)| {
        for (col, o) in line.iter_mut().enumerate() {
            *o = if grid.is_nodata(row, col) {
                fill
            } else {
                let p = horn_component(grid, row, col, true);
                let q = horn_component(grid, row, col, false);
                (p * p + q * q).sqrt().atan().to_degrees() as f32
            };
        }
    });
    Ok(grid.derive(out))
}
