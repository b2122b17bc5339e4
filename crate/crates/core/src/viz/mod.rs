//! The seven relief visualisations and the terrain primitives behind them.
//!
//! | name        | bands | content                                              |
//! |-------------|-------|------------------------------------------------------|
//! | `DEM_C`     | 1     | DEM stretched between its 1st and 99th percentiles   |
//! | `DEM_S`     | 3     | `DEM_C` repeated in every band                       |
//! | `SLRM`      | 1     | stretched simple local relief model                  |
//! | `DSS`       | 3     | `DEM_C`, slope, stretched SLRM                       |
//! | `E2MSTP`    | 3     | multiscale position composite lit by local relief    |
//! | `E2MSTP_1B` | 1     | band mean of `E2MSTP`                                |
//! | `VAT`       | 3     | slope, positive openness, sky-view factor            |
//!
//! Every output is a [`MultiBandImage`] in [0, 1]; nodata DEM cells come out
//! as NaN in every band.

mod horizon;
mod relief;
mod slope;

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use horizon::{horizon_angles, horizon_products, positive_openness, sky_view_factor, HorizonRays};
pub use relief::{e2mstp, e2mstp_fuse, max_abs_dev, mstp, slrm, DEV_EPSILON, DEV_SCALE};
pub use slope::slope;

use crate::error::{Error, Result};
use crate::raster::{percentile_cut_stretch, DemGrid, MultiBandImage};

/// Fixed display ranges for the slope, openness and SVF bands.
pub const SLOPE_MAX_DEG: f64 = 51.0;
pub const OPENNESS_RANGE_DEG: (f64, f64) = (60.0, 120.0);
pub const SVF_RANGE: (f64, f64) = (0.64, 1.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum VtName {
    #[serde(rename = "DEM_C")]
    DemC,
    #[serde(rename = "DEM_S")]
    DemS,
    #[serde(rename = "SLRM")]
    Slrm,
    #[serde(rename = "DSS")]
    Dss,
    #[serde(rename = "E2MSTP")]
    E2Mstp,
    #[serde(rename = "E2MSTP_1B")]
    E2Mstp1B,
    #[serde(rename = "VAT")]
    Vat,
}

impl VtName {
    pub const ALL: [VtName; 7] = [
        VtName::DemC,
        VtName::DemS,
        VtName::Slrm,
        VtName::Dss,
        VtName::E2Mstp,
        VtName::E2Mstp1B,
        VtName::Vat,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            VtName::DemC => "DEM_C",
            VtName::DemS => "DEM_S",
            VtName::Slrm => "SLRM",
            VtName::Dss => "DSS",
            VtName::E2Mstp => "E2MSTP",
            VtName::E2Mstp1B => "E2MSTP_1B",
            VtName::Vat => "VAT",
        }
    }

    pub fn band_count(&self) -> usize {
        match self {
            VtName::DemC | VtName::Slrm | VtName::E2Mstp1B => 1,
            _ => 3,
        }
    }

    pub fn valid_names() -> String {
        Self::ALL.map(|v| v.as_str()).join(", ")
    }
}

impl fmt::Display for VtName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for VtName {
    type Err = Error;

    /// Case-insensitive; `-` and `_` are interchangeable and `²` reads as `2`.
    fn from_str(s: &str) -> Result<Self> {
        let norm: String = s
            .trim()
            .chars()
            .map(|c| match c {
                '-' => '_',
                '²' => '2',
                c => c.to_ascii_uppercase(),
            })
            .collect();
        VtName::ALL
            .into_iter()
            .find(|v| v.as_str() == norm)
            .ok_or_else(|| {
                Error::InvalidParam(format!(
                    "unknown visualisation {s:?}; valid names: {}",
                    VtName::valid_names()
                ))
            })
    }
}

/// Radii `min, min + step, ...` up to and including `max`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScaleRange {
    pub min: usize,
    pub max: usize,
    pub step: usize,
}

impl ScaleRange {
    pub const fn new(min: usize, max: usize, step: usize) -> Self {
        ScaleRange { min, max, step }
    }

    pub fn radii(&self) -> impl Iterator<Item = usize> {
        (self.min..=self.max).step_by(self.step.max(1))
    }

    fn validate(&self, name: &str) -> Result<()> {
        if self.min < 1 || self.min >= self.max || self.step < 1 {
            return Err(Error::InvalidParam(format!(
                "{name}: need 1 <= min < max and step >= 1, got {}..{} step {}",
                self.min, self.max, self.step
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Flatten {
    #[default]
    Mean,
}

/// Every knob the visualisations take. Field names double as the JSON keys of
/// a `--params` file; missing keys keep their defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VtParams {
    pub svf_directions: usize,
    pub svf_radius_px: usize,
    pub slrm_radius_px: usize,
    pub mstp_local: ScaleRange,
    pub mstp_meso: ScaleRange,
    pub mstp_broad: ScaleRange,
    pub cut_low_pct: f64,
    pub cut_high_pct: f64,
    pub e2_flatten: Flatten,
}

impl Default for VtParams {
    fn default() -> Self {
        VtParams {
            svf_directions: 16,
            svf_radius_px: 10,
            slrm_radius_px: 20,
            mstp_local: ScaleRange::new(1, 10, 1),
            mstp_meso: ScaleRange::new(10, 50, 5),
            mstp_broad: ScaleRange::new(50, 100, 10),
            cut_low_pct: 1.0,
            cut_high_pct: 99.0,
            e2_flatten: Flatten::Mean,
        }
    }
}

impl VtParams {
    /// Small radii for tiles of a few dozen pixels.
    pub fn compact() -> Self {
        VtParams {
            svf_radius_px: 5,
            slrm_radius_px: 4,
            mstp_local: ScaleRange::new(1, 3, 1),
            mstp_meso: ScaleRange::new(3, 7, 2),
            mstp_broad: ScaleRange::new(7, 13, 3),
            ..VtParams::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.svf_directions < 4 || !self.svf_directions.is_multiple_of(2) {
            return Err(Error::InvalidParam(format!(
                "svf_directions must be even and >= 4, got {}",
                self.svf_directions
            )));
        }
        if self.svf_radius_px < 1 || self.slrm_radius_px < 1 {
            return Err(Error::InvalidParam("radii must be at least 1 pixel".into()));
        }
        self.mstp_local.validate("mstp_local")?;
        self.mstp_meso.validate("mstp_meso")?;
        self.mstp_broad.validate("mstp_broad")?;
        if self.cut_low_pct.partial_cmp(&self.cut_high_pct) != Some(std::cmp::Ordering::Less) {
            return Err(Error::InvalidParam(format!(
                "cut_low_pct must be below cut_high_pct, got {} / {}",
                self.cut_low_pct, self.cut_high_pct
            )));
        }
        Ok(())
    }

    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let params: VtParams = serde_json::from_str(&text).map_err(|source| Error::Json {
            path: path.to_path_buf(),
            source,
        })?;
        params.validate()?;
        Ok(params)
    }
}

/// Metadata written next to every visualisation raster.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VizSidecar {
    pub vt: VtName,
    pub bands: usize,
    pub width: usize,
    pub height: usize,
    pub gsd: f64,
    pub params: VtParams,
    pub slope_max_deg: f64,
    pub openness_range_deg: (f64, f64),
    pub svf_range: (f64, f64),
    pub mstp_dev_scale: f64,
}

impl VizSidecar {
    pub fn new(vt: VtName, dem: &DemGrid, params: &VtParams) -> Self {
        VizSidecar {
            vt,
            bands: vt.band_count(),
            width: dem.width(),
            height: dem.height(),
            gsd: dem.gsd(),
            params: params.clone(),
            slope_max_deg: SLOPE_MAX_DEG,
            openness_range_deg: OPENNESS_RANGE_DEG,
            svf_range: SVF_RANGE,
            mstp_dev_scale: DEV_SCALE,
        }
    }

    /// `out.tif` gets `out.tif.json`.
    pub fn path_for(raster: &Path) -> std::path::PathBuf {
        let mut name = raster.as_os_str().to_owned();
        name.push(".json");
        name.into()
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = serde_json::to_string_pretty(self).map_err(|source| Error::Json {
            path: path.to_path_buf(),
            source,
        })?;
        std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }
}

fn linear_band(grid: &DemGrid, lo: f64, hi: f64) -> Vec<f32> {
    grid.values()
        .iter()
        .map(|&v| {
            if grid.is_nodata_value(v) {
                f32::NAN
            } else {
                ((v as f64 - lo) / (hi - lo)).clamp(0.0, 1.0) as f32
            }
        })
        .collect()
}

/// Slope in degrees mapped onto [0, 1] over 0..51°.
pub fn slope_band(slope_deg: &DemGrid) -> Vec<f32> {
    linear_band(slope_deg, 0.0, SLOPE_MAX_DEG)
}

pub fn openness_band(openness_deg: &DemGrid) -> Vec<f32> {
    linear_band(openness_deg, OPENNESS_RANGE_DEG.0, OPENNESS_RANGE_DEG.1)
}

pub fn svf_band(svf: &DemGrid) -> Vec<f32> {
    linear_band(svf, SVF_RANGE.0, SVF_RANGE.1)
}

fn stretch(grid: &DemGrid, params: &VtParams) -> Result<Vec<f32>> {
    Ok(percentile_cut_stretch(grid, params.cut_low_pct, params.cut_high_pct)?
        .into_bands()
        .remove(0))
}

/// Computes one visualisation of a DEM tile.
pub fn compute_vt(name: VtName, tile: &DemGrid, params: &VtParams) -> Result<MultiBandImage> {
    compute_inner(name, tile, params).map_err(|e| Error::Visualisation {
        vt: name.to_string(),
        source: Box::new(e),
    })
}

fn compute_inner(name: VtName, tile: &DemGrid, params: &VtParams) -> Result<MultiBandImage> {
    params.validate()?;
    let (w, h) = (tile.width(), tile.height());
    let bands = match name {
        VtName::DemC => vec![stretch(tile, params)?],
        VtName::DemS => {
            let b = stretch(tile, params)?;
            vec![b.clone(), b.clone(), b]
        }
        VtName::Slrm => vec![stretch(&slrm(tile, params)?, params)?],
        VtName::Dss => {
            let dem_c = stretch(tile, params)?;
            let slope_b = slope_band(&slope(tile)?);
            let slrm_b = stretch(&slrm(tile, params)?, params)?;
            vec![dem_c, slope_b, slrm_b]
        }
        VtName::E2Mstp => e2mstp(tile, params)?.into_bands(),
        VtName::E2Mstp1B => {
            let e2 = e2mstp(tile, params)?;
            let (a, b, c) = (e2.band(0), e2.band(1), e2.band(2));
            let flat = (0..a.len())
                .map(|i| ((a[i] as f64 + b[i] as f64 + c[i] as f64) / 3.0) as f32)
                .collect();
            vec![flat]
        }
        VtName::Vat => {
            let slope_b = slope_band(&slope(tile)?);
            let (svf, open) = horizon_products(tile, params)?;
            vec![slope_b, openness_band(&open), svf_band(&svf)]
        }
    };
    MultiBandImage::new(w, h, bands)
}
