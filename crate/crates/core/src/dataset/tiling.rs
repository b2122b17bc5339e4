use std::path::{Path, PathBuf};

use rayon::prelude::*;

use super::{ClassCatalog, DatasetManifest, ManifestEntry, TilePair};
use crate::error::{Error, Result};
use crate::raster::io::{write_mask, write_raster};
use crate::raster::{ClassMask, DemGrid};

pub const DEFAULT_TILE_SIZE: usize = 256;
pub const MIN_TILE_SIZE: usize = 32;

/// Cuts a DEM and its mask into non-overlapping `tile_size` squares, row-major.
///
/// Tiles hanging over the right or bottom edge are padded: the DEM by
/// replicating the nearest edge cell, the mask with background. Tile ids are
/// `r{row}_c{col}` in tile units.
pub fn tile_grid(dem: &DemGrid, mask: &ClassMask, tile_size: usize) -> Result<Vec<TilePair>> {
    if dem.shape() != mask.shape() {
        return Err(Error::ShapeMismatch {
            expected: dem.shape(),
            actual: mask.shape(),
        });
    }
    if tile_size < MIN_TILE_SIZE {
        return Err(Error::InvalidParam(format!(
            "tile size must be at least {MIN_TILE_SIZE}, got {tile_size}"
        )));
    }
    let (w, h) = (dem.width(), dem.height());
    let rows = h.div_ceil(tile_size);
    let cols = w.div_ceil(tile_size);
    let cells: Vec<(usize, usize)> = (0..rows)
        .flat_map(|r| (0..cols).map(move |c| (r, c)))
        .collect();

    cells
        .into_par_iter()
        .map(|(tr, tc)| {
            let (r0, c0) = (tr * tile_size, tc * tile_size);
            let mut dv = Vec::with_capacity(tile_size * tile_size);
            let mut mv = Vec::with_capacity(tile_size * tile_size);
            for i in 0..tile_size {
                for j in 0..tile_size {
                    let (r, c) = (r0 + i, c0 + j);
                    dv.push(dem.get(r.min(h - 1), c.min(w - 1)));
                    mv.push(if r < h && c < w { mask.get(r, c) } else { 0 });
                }
            }
            let origin = dem
                .origin()
                .map(|(x, y)| (x + (c0 as f64) * dem.gsd(), y - (r0 as f64) * dem.gsd()));
            let tile_dem = DemGrid::new(tile_size, tile_size, dv, dem.gsd())?
                .with_nodata(dem.nodata())
                .with_origin(origin);
            let tile_mask = ClassMask::new(tile_size, tile_size, mv)?;
            TilePair::new(format!("r{tr}_c{tc}"), tile_dem, tile_mask)
        })
        .collect()
}

/// Writes `dem/<id>.tif` and `mask/<id>.tif` under `out_dir` and returns the
/// manifest describing them (paths relative to `out_dir`, folds unassigned).
pub fn write_tiles(
    tiles: &[TilePair],
    out_dir: &Path,
    dataset_name: &str,
    catalog: ClassCatalog,
) -> Result<DatasetManifest> {
    let first = tiles
        .first()
        .ok_or_else(|| Error::Dataset("no tiles to write".into()))?;
    for t in tiles {
        t.validate(&catalog)?;
    }
    for sub in ["dem", "mask"] {
        let d = out_dir.join(sub);
        std::fs::create_dir_all(&d).map_err(|e| Error::io(&d, e))?;
    }
    let entries = tiles
        .par_iter()
        .map(|t| {
            let dem_rel = PathBuf::from("dem").join(format!("{}.tif", t.tile_id));
            let mask_rel = PathBuf::from("mask").join(format!("{}.tif", t.tile_id));
            write_raster(&t.dem, out_dir.join(&dem_rel))?;
            write_mask(&t.mask, out_dir.join(&mask_rel), t.dem.gsd(), t.dem.origin())?;
            Ok(ManifestEntry {
                tile_id: t.tile_id.clone(),
                dem_path: dem_rel,
                mask_path: mask_rel,
                classes_present: t.classes_present.clone(),
                fold: None,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut manifest = DatasetManifest::new(dataset_name, first.dem.gsd(), first.dem.width(), catalog);
    manifest.entries = entries;
    manifest.validate()?;
    Ok(manifest)
}
