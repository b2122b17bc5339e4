//! Seeded geometric augmentations applied jointly to an image and its mask.

use serde::{Deserialize, Serialize};

use super::stream::SplitMix64;
use crate::error::{Error, Result};
use crate::raster::{ClassMask, MultiBandImage};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AugOp {
    Vflip,
    Hflip,
    Rot45,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AugmentationSpec {
    pub ops: Vec<AugOp>,
    pub probability: f64,
    pub seed: u64,
}

impl Default for AugmentationSpec {
    fn default() -> Self {
        AugmentationSpec {
            ops: vec![AugOp::Vflip, AugOp::Hflip, AugOp::Rot45],
            probability: 0.5,
            seed: 0,
        }
    }
}

impl AugmentationSpec {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.probability) {
            return Err(Error::InvalidParam(format!(
                "augmentation probability must lie in [0, 1], got {}",
                self.probability
            )));
        }
        Ok(())
    }

    fn enabled(&self, op: AugOp) -> bool {
        self.ops.contains(&op)
    }
}

/// Which operations fire for one draw.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AugmentDraw {
    pub vflip: bool,
    pub hflip: bool,
    pub rot45: bool,
}

/// Decides the operations for `(tile_id, draw_index)`.
///
/// Three uniforms are always drawn, in the order vflip, hflip, rot45, whether
/// or not the op is enabled, so enabling one op never shifts the others.
pub fn draw_ops(spec: &AugmentationSpec, tile_id: &str, draw_index: u64) -> AugmentDraw {
    let mut rng = SplitMix64::for_draw(spec.seed, tile_id, draw_index);
    let mut fire = |op| {
        let u = rng.next_f64();
        spec.enabled(op) && u < spec.probability
    };
    AugmentDraw {
        vflip: fire(AugOp::Vflip),
        hflip: fire(AugOp::Hflip),
        rot45: fire(AugOp::Rot45),
    }
}

/// Applies a draw: vflip, then hflip, then rot45 about the tile centre.
pub fn augment(
    image: &MultiBandImage,
    mask: &ClassMask,
    draw: AugmentDraw,
) -> Result<(MultiBandImage, ClassMask)> {
    let (w, h) = (image.width(), image.height());
    if mask.shape() != (h, w) {
        return Err(Error::ShapeMismatch {
            expected: (h, w),
            actual: mask.shape(),
        });
    }
    let mut bands = image.bands().to_vec();
    let mut labels = mask.values().to_vec();
    if draw.vflip {
        bands.iter_mut().for_each(|b| vflip(b, w));
        vflip(&mut labels, w);
    }
    if draw.hflip {
        bands.iter_mut().for_each(|b| hflip(b, w));
        hflip(&mut labels, w);
    }
    if draw.rot45 {
        bands = bands.iter().map(|b| rot45_bilinear(b, w, h)).collect();
        labels = rot45_nearest(&labels, w, h);
    }
    Ok((MultiBandImage::new(w, h, bands)?, ClassMask::new(w, h, labels)?))
}

/// [`draw_ops`] followed by [`augment`].
pub fn augment_tile(
    spec: &AugmentationSpec,
    tile_id: &str,
    draw_index: u64,
    image: &MultiBandImage,
    mask: &ClassMask,
) -> Result<(MultiBandImage, ClassMask, AugmentDraw)> {
    spec.validate()?;
    let draw = draw_ops(spec, tile_id, draw_index);
    let (img, m) = augment(image, mask, draw)?;
    Ok((img, m, draw))
}

fn vflip<T>(v: &mut [T], w: usize) {
    let h = v.len() / w;
    for r in 0..h / 2 {
        let (top, bottom) = v.split_at_mut((h - 1 - r) * w);
        top[r * w..(r + 1) * w].swap_with_slice(&mut bottom[..w]);
    }
}

fn hflip<T>(v: &mut [T], w: usize) {
    v.chunks_mut(w).for_each(|row| row.reverse());
}

/// Reflect padding without repeating the edge cell (period 2(n-1)).
#[inline]
fn reflect(i: i64, n: usize) -> usize {
    if n == 1 {
        return 0;
    }
    let period = 2 * (n as i64 - 1);
    let m = i.rem_euclid(period);
    (if m < n as i64 { m } else { period - m }) as usize
}

/// Source coordinate of output cell (x, y) under a 45 degree rotation about the centre.
#[inline]
fn source(x: usize, y: usize, w: usize, h: usize) -> (f64, f64) {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let (cx, cy) = ((w as f64 - 1.0) / 2.0, (h as f64 - 1.0) / 2.0);
    let (dx, dy) = (x as f64 - cx, y as f64 - cy);
    (cx + dx * s - dy * s, cy + dx * s + dy * s)
}

/// Bilinear 45 degree rotation with reflect padding. Where a contributing
/// cell is NaN the nearest source cell is used instead.
pub fn rot45_bilinear(band: &[f32], w: usize, h: usize) -> Vec<f32> {
    let mut out = Vec::with_capacity(w * h);
    for y in 0..h {
        for x in 0..w {
            let (sx, sy) = source(x, y, w, h);
            let (x0, y0) = (sx.floor(), sy.floor());
            let (tx, ty) = ((sx - x0) as f32, (sy - y0) as f32);
            let (x0, y0) = (x0 as i64, y0 as i64);
            let (xa, xb) = (reflect(x0, w), reflect(x0 + 1, w));
            let (ya, yb) = (reflect(y0, h), reflect(y0 + 1, h));
            let (a, b) = (band[ya * w + xa], band[ya * w + xb]);
            let (c, d) = (band[yb * w + xa], band[yb * w + xb]);
            let v = if a.is_nan() || b.is_nan() || c.is_nan() || d.is_nan() {
                band[reflect(sy.round() as i64, h) * w + reflect(sx.round() as i64, w)]
            } else {
                let top = a + (b - a) * tx;
                let bottom = c + (d - c) * tx;
                (top + (bottom - top) * ty).clamp(0.0, 1.0)
            };
            out.push(v);
        }
    }
    out
}

/// Nearest-neighbour 45 degree rotation with reflect padding.
pub fn rot45_nearest(labels: &[u8], w: usize, h: usize) -> Vec<u8> {
    let mut out = Vec::with_capacity(w * h);
    for y in 0..h {
        for x in 0..w {
            let (sx, sy) = source(x, y, w, h);
            out.push(labels[reflect(sy.round() as i64, h) * w + reflect(sx.round() as i64, w)]);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(w: usize, h: usize) -> (MultiBandImage, ClassMask) {
        let band: Vec<f32> = (0..w * h).map(|i| (i % 17) as f32 / 16.0).collect();
        let labels: Vec<u8> = (0..w * h).map(|i| ((i / 7) % 3) as u8).collect();
        (
            MultiBandImage::single(w, h, band).unwrap(),
            ClassMask::new(w, h, labels).unwrap(),
        )
    }

    #[test]
    fn reflect_indices() {
        let got: Vec<usize> = (-4..9).map(|i| reflect(i, 4)).collect();
        assert_eq!(got, [2, 3, 2, 1, 0, 1, 2, 3, 2, 1, 0, 1, 2]);
    }

    #[test]
    fn flips_are_involutions() {
        let (img, mask) = sample(9, 6);
        for draw in [
            AugmentDraw { vflip: true, ..Default::default() },
            AugmentDraw { hflip: true, ..Default::default() },
        ] {
            let (i1, m1) = augment(&img, &mask, draw).unwrap();
            assert_ne!(i1, img);
            let (i2, m2) = augment(&i1, &m1, draw).unwrap();
            assert_eq!((i2, m2), (img.clone(), mask.clone()));
        }
    }

    #[test]
    fn hflip_moves_columns() {
        let (img, mask) = sample(5, 3);
        let (i1, m1) = augment(&img, &mask, AugmentDraw { hflip: true, ..Default::default() }).unwrap();
        for r in 0..3 {
            for c in 0..5 {
                assert_eq!(i1.band(0)[r * 5 + c], img.band(0)[r * 5 + 4 - c]);
                assert_eq!(m1.get(r, c), mask.get(r, 4 - c));
            }
        }
    }

    #[test]
    fn rot45_keeps_constant_image() {
        let img = MultiBandImage::single(32, 32, vec![0.3; 1024]).unwrap();
        let out = rot45_bilinear(img.band(0), 32, 32);
        assert!(out.iter().all(|&v| v == 0.3));
    }

    #[test]
    fn rot45_mask_values_stay_in_set() {
        let (_, mask) = sample(31, 31);
        let out = rot45_nearest(mask.values(), 31, 31);
        assert!(out.iter().all(|v| [0, 1, 2].contains(v)));
        // centre cell is a fixed point for odd sizes
        assert_eq!(out[15 * 31 + 15], mask.get(15, 15));
    }

    #[test]
    fn rot45_nodata_falls_back_to_nearest() {
        let mut band = vec![0.5; 81];
        band[4 * 9 + 4] = f32::NAN;
        let out = rot45_bilinear(&band, 9, 9);
        assert!(out[4 * 9 + 4].is_nan());
        assert!(out.iter().filter(|v| v.is_nan()).count() >= 1);
        assert!(out.iter().filter(|v| !v.is_nan()).all(|&v| v == 0.5));
    }

    #[test]
    fn probability_extremes() {
        let mut spec = AugmentationSpec { probability: 0.0, ..Default::default() };
        for i in 0..50 {
            assert_eq!(draw_ops(&spec, "r0_c0", i), AugmentDraw::default());
        }
        spec.probability = 1.0;
        for i in 0..50 {
            assert_eq!(draw_ops(&spec, "r0_c0", i), AugmentDraw { vflip: true, hflip: true, rot45: true });
        }
        spec.ops = vec![AugOp::Hflip];
        assert_eq!(draw_ops(&spec, "x", 3), AugmentDraw { hflip: true, ..Default::default() });
    }

    #[test]
    fn draws_are_reproducible_and_vary() {
        let spec = AugmentationSpec { seed: 11, ..Default::default() };
        let a: Vec<_> = (0..64).map(|i| draw_ops(&spec, "r1_c2", i)).collect();
        let b: Vec<_> = (0..64).map(|i| draw_ops(&spec, "r1_c2", i)).collect();
        assert_eq!(a, b);
        let fired = a.iter().filter(|d| d.hflip).count();
        assert!((16..=48).contains(&fired), "hflip fired {fired}/64");
    }

    #[test]
    fn identity_draw_and_shape_check() {
        let (img, mask) = sample(8, 8);
        let (i, m) = augment(&img, &mask, AugmentDraw::default()).unwrap();
        assert_eq!((i, m), (img.clone(), mask));
        assert!(augment(&img, &ClassMask::zeros(8, 7).unwrap(), AugmentDraw::default()).is_err());
        let bad = AugmentationSpec { probability: 1.5, ..Default::default() };
        assert!(augment_tile(&bad, "t", 0, &img, &ClassMask::zeros(8, 8).unwrap()).is_err());
    }
}
