//! Seeded synthetic terrain with implanted archaeological-style features.
//!
//! The scene is a rolling background surface on a regular grid of cells;
//! each cell receives at most one feature so labels never overlap:
//! a circular depression (aguada), a small steep rectangular mound
//! (building) or a broad flat-topped mound (platform). Labels follow the
//! [`ClassCatalog::chactun`] ids.

use crate::dataset::stream::SplitMix64;
use crate::dataset::ClassCatalog;
use crate::error::{Error, Result};
use crate::raster::{ClassMask, DemGrid};

const CELL: usize = 64;

#[derive(Debug, Clone)]
pub struct SyntheticScene {
    pub dem: DemGrid,
    pub mask: ClassMask,
    pub catalog: ClassCatalog,
}

#[derive(Debug, Clone, Copy)]
enum Shape {
    /// Circular, `radius` px, depth in metres.
    Depression { radius: f64, depth: f64 },
    /// Rectangular, half-extents in px, height in metres.
    Mound { half_w: f64, half_h: f64, height: f64 },
}

#[derive(Debug, Clone, Copy)]
struct Feature {
    class: u8,
    row: f64,
    col: f64,
    shape: Shape,
}

impl Feature {
    /// Normalised footprint distance: < 1 inside, 0 at the centre.
    fn footprint(&self, r: f64, c: f64) -> f64 {
        let (dy, dx) = (r - self.row, c - self.col);
        match self.shape {
            Shape::Depression { radius, .. } => (dx * dx + dy * dy).sqrt() / radius,
            Shape::Mound { half_w, half_h, .. } => (dx.abs() / half_w).max(dy.abs() / half_h),
        }
    }

    /// Flat core out to 0.6 of the footprint, cosine shoulder to the rim.
    fn relief(&self, d: f64) -> f64 {
        let amp = match self.shape {
            Shape::Depression { depth, .. } => -depth,
            Shape::Mound { height, .. } => height,
        };
        if d <= 0.6 {
            amp
        } else if d < 1.0 {
            amp * 0.5 * (1.0 + (std::f64::consts::PI * (d - 0.6) / 0.4).cos())
        } else {
            0.0
        }
    }
}

fn background(r: f64, c: f64, phase: (f64, f64)) -> f64 {
    100.0 + 0.004 * c - 0.002 * r + 1.5 * (r / 97.0 + phase.0).sin() * (c / 131.0 + phase.1).cos()
}

/// A `size` x `size` scene at 0.5 m ground sampling. `size` must be a
/// multiple of 64 and at least 64.
pub fn synthetic_scene(size: usize, seed: u64) -> Result<SyntheticScene> {
    if size < CELL || !size.is_multiple_of(CELL) {
        return Err(Error::InvalidParam(format!(
            "synthetic scene size must be a positive multiple of {CELL}, got {size}"
        )));
    }
    let mut rng = SplitMix64::new(seed);
    let phase = (rng.next_f64() * std::f64::consts::TAU, rng.next_f64() * std::f64::consts::TAU);
    let cells = size / CELL;
    let mut features = Vec::new();
    for cr in 0..cells {
        for cc in 0..cells {
            // class 0 leaves the cell empty
            let class = rng.below(4) as u8;
            let jitter = |rng: &mut SplitMix64| (rng.next_f64() - 0.5) * 16.0;
            let row = (cr * CELL + CELL / 2) as f64 + jitter(&mut rng);
            let col = (cc * CELL + CELL / 2) as f64 + jitter(&mut rng);
            let u = rng.next_f64();
            let shape = match class {
                1 => Shape::Depression {
                    radius: 8.0 + 6.0 * u,
                    depth: 1.0 + u,
                },
                2 => Shape::Mound {
                    half_w: 5.0 + 3.0 * u,
                    half_h: 4.0 + 2.0 * u,
                    height: 2.0 + u,
                },
                3 => Shape::Mound {
                    half_w: 16.0 + 6.0 * u,
                    half_h: 12.0 + 4.0 * u,
                    height: 0.8 + 0.4 * u,
                },
                _ => continue,
            };
            features.push((cr, cc, Feature { class, row, col, shape }));
        }
    }

    let mut dem = vec![0f32; size * size];
    let mut mask = vec![0u8; size * size];
    for r in 0..size {
        for c in 0..size {
            let (rf, cf) = (r as f64, c as f64);
            let mut z = background(rf, cf, phase);
            // only the feature of this pixel's own cell can reach it
            let (cr, cc) = (r / CELL, c / CELL);
            if let Some((_, _, f)) = features.iter().find(|(fr, fc, _)| *fr == cr && *fc == cc) {
                let d = f.footprint(rf, cf);
                z += f.relief(d);
                if d < 1.0 {
                    mask[r * size + c] = f.class;
                }
            }
            dem[r * size + c] = z as f32;
        }
    }
    Ok(SyntheticScene {
        dem: DemGrid::new(size, size, dem, 0.5)?,
        mask: ClassMask::new(size, size, mask)?,
        catalog: ClassCatalog::chactun(),
    })
}
