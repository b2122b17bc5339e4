//! Raster grids, masks, and the focal primitives the visualisations are built from.
//!
//! All grids are row-major and north-up: row 0 is the northern edge, column 0
//! the western edge. A [`DemGrid`] is immutable once built; every operation
//! returns a fresh grid.

pub(crate) mod focal;
pub mod io;
mod stretch;

pub use focal::{focal_mean, focal_std, FocalWindow, WindowShape};
pub use stretch::{percentile_cut_stretch, quantile_type7};

use crate::error::{Error, Result};

/// Single-band elevation raster (metres) with an optional nodata sentinel.
///
/// A cell is nodata when it equals the sentinel or is NaN. Nodata cells are
/// skipped by every statistic and stay nodata in derived grids.
#[derive(Debug, Clone, PartialEq)]
pub struct DemGrid {
    values: Vec<f32>,
    width: usize,
    height: usize,
    gsd: f64,
    nodata: Option<f32>,
    origin: Option<(f64, f64)>,
}

impl DemGrid {
    pub fn new(width: usize, height: usize, values: Vec<f32>, gsd: f64) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidGrid(format!(
                "dimensions must be positive, got {width}x{height}"
            )));
        }
        if values.len() != width * height {
            return Err(Error::InvalidGrid(format!(
                "{width}x{height} grid needs {} values, got {}",
                width * height,
                values.len()
            )));
        }
        if !(gsd > 0.0 && gsd.is_finite()) {
            return Err(Error::InvalidGrid(format!("gsd must be positive, got {gsd}")));
        }
        Ok(DemGrid {
            values,
            width,
            height,
            gsd,
            nodata: None,
            origin: None,
        })
    }

    pub fn filled(width: usize, height: usize, value: f32, gsd: f64) -> Result<Self> {
        Self::new(width, height, vec![value; width * height], gsd)
    }

    /// Builds a grid by evaluating `f(row, col)` for every cell.
    pub fn from_fn(
        width: usize,
        height: usize,
        gsd: f64,
        mut f: impl FnMut(usize, usize) -> f32,
    ) -> Result<Self> {
        let mut values = Vec::with_capacity(width * height);
        for row in 0..height {
            for col in 0..width {
                values.push(f(row, col));
            }
        }
        Self::new(width, height, values, gsd)
    }

    pub fn with_nodata(mut self, nodata: Option<f32>) -> Self {
        self.nodata = nodata;
        self
    }

    /// Map coordinates of the top-left corner of the top-left cell.
    pub fn with_origin(mut self, origin: Option<(f64, f64)>) -> Self {
        self.origin = origin;
        self
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn gsd(&self) -> f64 {
        self.gsd
    }

    pub fn nodata(&self) -> Option<f32> {
        self.nodata
    }

    pub fn origin(&self) -> Option<(f64, f64)> {
        self.origin
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f32> {
        self.values
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f32 {
        self.values[row * self.width + col]
    }

    #[inline]
    pub fn is_nodata_value(&self, v: f32) -> bool {
        v.is_nan() || self.nodata == Some(v)
    }

    #[inline]
    pub fn is_nodata(&self, row: usize, col: usize) -> bool {
        self.is_nodata_value(self.get(row, col))
    }

    /// Elevation at a cell, or `None` when nodata.
    #[inline]
    pub fn valid(&self, row: usize, col: usize) -> Option<f32> {
        let v = self.get(row, col);
        (!self.is_nodata_value(v)).then_some(v)
    }

    pub fn valid_count(&self) -> usize {
        self.values.iter().filter(|v| !self.is_nodata_value(**v)).count()
    }

    /// The value written into nodata cells of derived grids.
    pub fn nodata_fill(&self) -> f32 {
        self.nodata.unwrap_or(f32::NAN)
    }

    /// New grid with the same geometry and nodata sentinel but new values.
    pub(crate) fn derive(&self, values: Vec<f32>) -> DemGrid {
        debug_assert_eq!(values.len(), self.values.len());
        DemGrid {
            values,
            width: self.width,
            height: self.height,
            gsd: self.gsd,
            nodata: self.nodata,
            origin: self.origin,
        }
    }

    /// Applies `f` to every valid cell; nodata cells keep the nodata fill.
    pub fn map_valid(&self, f: impl Fn(f32) -> f32) -> DemGrid {
        let fill = self.nodata_fill();
        let values = self
            .values
            .iter()
            .map(|&v| if self.is_nodata_value(v) { fill } else { f(v) })
            .collect();
        self.derive(values)
    }

    pub fn ensure_same_shape(&self, other: &DemGrid) -> Result<()> {
        if self.shape() != other.shape() {
            return Err(Error::ShapeMismatch {
                expected: self.shape(),
                actual: other.shape(),
            });
        }
        Ok(())
    }
}

/// A 1- or 3-band image normalised to [0, 1]. Nodata cells are NaN.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiBandImage {
    bands: Vec<Vec<f32>>,
    width: usize,
    height: usize,
}

impl MultiBandImage {
    pub fn new(width: usize, height: usize, bands: Vec<Vec<f32>>) -> Result<Self> {
        if bands.len() != 1 && bands.len() != 3 {
            return Err(Error::InvalidGrid(format!(
                "an image has 1 or 3 bands, got {}",
                bands.len()
            )));
        }
        if width == 0 || height == 0 {
            return Err(Error::InvalidGrid("image dimensions must be positive".into()));
        }
        for (b, band) in bands.iter().enumerate() {
            if band.len() != width * height {
                return Err(Error::InvalidGrid(format!(
                    "band {b} has {} values, expected {}",
                    band.len(),
                    width * height
                )));
            }
            if let Some(v) = band.iter().find(|v| !v.is_nan() && !(0.0..=1.0).contains(*v)) {
                return Err(Error::InvalidGrid(format!(
                    "band {b} holds {v}, outside [0, 1]"
                )));
            }
        }
        Ok(MultiBandImage {
            bands,
            width,
            height,
        })
    }

    pub fn single(width: usize, height: usize, band: Vec<f32>) -> Result<Self> {
        Self::new(width, height, vec![band])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn band_count(&self) -> usize {
        self.bands.len()
    }

    pub fn band(&self, b: usize) -> &[f32] {
        &self.bands[b]
    }

    pub fn bands(&self) -> &[Vec<f32>] {
        &self.bands
    }

    pub fn into_bands(self) -> Vec<Vec<f32>> {
        self.bands
    }
}

/// Single-band 8-bit raster of class ids, 0 = background.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassMask {
    values: Vec<u8>,
    width: usize,
    height: usize,
}

impl ClassMask {
    pub fn new(width: usize, height: usize, values: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 || values.len() != width * height {
            return Err(Error::InvalidGrid(format!(
                "{width}x{height} mask with {} values",
                values.len()
            )));
        }
        Ok(ClassMask {
            values,
            width,
            height,
        })
    }

    pub fn zeros(width: usize, height: usize) -> Result<Self> {
        Self::new(width, height, vec![0; width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn values(&self) -> &[u8] {
        &self.values
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> u8 {
        self.values[row * self.width + col]
    }

    /// Sorted distinct nonzero ids.
    pub fn classes_present(&self) -> Vec<u8> {
        let mut seen = [false; 256];
        for &v in &self.values {
            seen[v as usize] = true;
        }
        (1..=255u8).filter(|&c| seen[c as usize]).collect()
    }

    pub fn pixel_count(&self, class: u8) -> u64 {
        self.values.iter().filter(|&&v| v == class).count() as u64
    }

    /// Binary mask of one class as a 0/1 float plane.
    pub fn binary(&self, class: u8) -> Vec<f32> {
        self.values
            .iter()
            .map(|&v| if v == class { 1.0 } else { 0.0 })
            .collect()
    }
}
