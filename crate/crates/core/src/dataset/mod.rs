//! Tiled segmentation datasets: class catalogs, 256-px tile pairs, the JSON
//! manifest, stratified cross-validation folds and training augmentations.

mod augment;
mod folds;
pub mod stream;
mod tiling;

use std::collections::{BTreeSet, HashSet};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

pub use augment::{augment, augment_tile, draw_ops, rot45_bilinear, rot45_nearest, AugOp, AugmentDraw, AugmentationSpec};
pub use folds::assign_folds;
pub use tiling::{tile_grid, write_tiles, DEFAULT_TILE_SIZE, MIN_TILE_SIZE};

use crate::error::{Error, Result};
use crate::raster::io::read_mask;
use crate::raster::{ClassMask, DemGrid};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassEntry {
    pub id: u8,
    pub name: String,
}

/// Ordered foreground classes with ids 1..=n; id 0 is background.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<ClassEntry>", into = "Vec<ClassEntry>")]
pub struct ClassCatalog {
    classes: Vec<ClassEntry>,
}

impl ClassCatalog {
    pub fn new(classes: Vec<ClassEntry>) -> Result<Self> {
        let mut names = HashSet::new();
        for (i, c) in classes.iter().enumerate() {
            if c.id as usize != i + 1 {
                return Err(Error::Dataset(format!(
                    "class ids must run 1, 2, ... in order; position {} has id {}",
                    i + 1,
                    c.id
                )));
            }
            if c.name.is_empty() || !names.insert(c.name.as_str()) {
                return Err(Error::Dataset(format!("class name {:?} is empty or repeated", c.name)));
            }
        }
        Ok(ClassCatalog { classes })
    }

    pub fn from_names<S: AsRef<str>>(names: &[S]) -> Result<Self> {
        Self::new(
            names
                .iter()
                .enumerate()
                .map(|(i, n)| ClassEntry {
                    id: i as u8 + 1,
                    name: n.as_ref().to_string(),
                })
                .collect(),
        )
    }

    /// Maya lowland classes: aguada, building, platform.
    pub fn chactun() -> Self {
        Self::from_names(&["aguada", "building", "platform"]).expect("static catalog")
    }

    /// Dutch heathland classes: barrow, charcoal kiln.
    pub fn veluwe() -> Self {
        Self::from_names(&["barrow", "charcoal_kiln"]).expect("static catalog")
    }

    pub fn classes(&self) -> &[ClassEntry] {
        &self.classes
    }

    pub fn ids(&self) -> impl Iterator<Item = u8> + '_ {
        self.classes.iter().map(|c| c.id)
    }

    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    pub fn contains(&self, id: u8) -> bool {
        id >= 1 && (id as usize) <= self.classes.len()
    }

    pub fn name(&self, id: u8) -> Option<&str> {
        self.contains(id).then(|| self.classes[id as usize - 1].name.as_str())
    }

    pub fn id_of(&self, name: &str) -> Option<u8> {
        self.classes.iter().find(|c| c.name == name).map(|c| c.id)
    }
}

impl TryFrom<Vec<ClassEntry>> for ClassCatalog {
    type Error = Error;

    fn try_from(v: Vec<ClassEntry>) -> Result<Self> {
        ClassCatalog::new(v)
    }
}

impl From<ClassCatalog> for Vec<ClassEntry> {
    fn from(c: ClassCatalog) -> Self {
        c.classes
    }
}

/// One DEM chip and its label mask.
#[derive(Debug, Clone, PartialEq)]
pub struct TilePair {
    pub tile_id: String,
    pub dem: DemGrid,
    pub mask: ClassMask,
    pub classes_present: BTreeSet<u8>,
}

impl TilePair {
    pub fn new(tile_id: impl Into<String>, dem: DemGrid, mask: ClassMask) -> Result<Self> {
        if dem.shape() != mask.shape() {
            return Err(Error::ShapeMismatch {
                expected: dem.shape(),
                actual: mask.shape(),
            });
        }
        let classes_present = mask.classes_present().into_iter().collect();
        Ok(TilePair {
            tile_id: tile_id.into(),
            dem,
            mask,
            classes_present,
        })
    }

    /// Every mask value must be background or a catalog id.
    pub fn validate(&self, catalog: &ClassCatalog) -> Result<()> {
        match self.classes_present.iter().find(|&&c| !catalog.contains(c)) {
            Some(c) => Err(Error::Dataset(format!(
                "tile {} holds class id {c}, not in the catalog",
                self.tile_id
            ))),
            None => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub tile_id: String,
    /// Relative paths resolve against the manifest's directory.
    pub dem_path: PathBuf,
    pub mask_path: PathBuf,
    pub classes_present: BTreeSet<u8>,
    pub fold: Option<usize>,
}

/// Catalog of a tiled dataset. `k`, `seed` and every entry's `fold` are null
/// until folds are assigned.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetManifest {
    pub dataset_name: String,
    pub gsd: f64,
    pub tile_size: usize,
    pub k: Option<usize>,
    pub seed: Option<u64>,
    pub catalog: ClassCatalog,
    pub entries: Vec<ManifestEntry>,
}

impl DatasetManifest {
    pub fn new(dataset_name: impl Into<String>, gsd: f64, tile_size: usize, catalog: ClassCatalog) -> Self {
        DatasetManifest {
            dataset_name: dataset_name.into(),
            gsd,
            tile_size,
            k: None,
            seed: None,
            catalog,
            entries: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let mut ids = HashSet::new();
        for e in &self.entries {
            if !ids.insert(e.tile_id.as_str()) {
                return Err(Error::Dataset(format!("duplicate tile id {}", e.tile_id)));
            }
            if let Some(c) = e.classes_present.iter().find(|&&c| !self.catalog.contains(c)) {
                return Err(Error::Dataset(format!(
                    "tile {} lists class {c}, not in the catalog",
                    e.tile_id
                )));
            }
            match (e.fold, self.k) {
                (Some(f), Some(k)) if f >= k => {
                    return Err(Error::Dataset(format!(
                        "tile {} has fold {f}, outside 0..{k}",
                        e.tile_id
                    )))
                }
                (Some(_), None) => {
                    return Err(Error::Dataset(format!(
                        "tile {} has a fold but the manifest has no k",
                        e.tile_id
                    )))
                }
                _ => {}
            }
        }
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let m: DatasetManifest = serde_json::from_str(&text).map_err(|source| Error::Json {
            path: path.to_path_buf(),
            source,
        })?;
        m.validate()?;
        Ok(m)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serialises") + "\n"
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    pub fn entry(&self, tile_id: &str) -> Option<&ManifestEntry> {
        self.entries.iter().find(|e| e.tile_id == tile_id)
    }

    /// Entries held out in `fold`, in manifest order.
    pub fn fold_entries(&self, fold: usize) -> impl Iterator<Item = &ManifestEntry> {
        self.entries.iter().filter(move |e| e.fold == Some(fold))
    }

    /// Builds a manifest from already-tiled rasters: every file in `dem_dir`
    /// whose stem also names a file in `mask_dir` becomes an entry. Paths are
    /// stored relative to `base` when possible.
    pub fn import_tiles(
        dataset_name: &str,
        catalog: ClassCatalog,
        dem_dir: &Path,
        mask_dir: &Path,
        base: &Path,
    ) -> Result<Self> {
        let mut files: Vec<PathBuf> = std::fs::read_dir(dem_dir)
            .map_err(|e| Error::io(dem_dir, e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.is_file())
            .collect();
        files.sort();
        let mut manifest = DatasetManifest::new(dataset_name, 0.0, 0, catalog);
        for dem_path in files {
            let Some(stem) = dem_path.file_stem().and_then(|s| s.to_str()) else {
                continue;
            };
            let Some(ext) = dem_path.extension() else { continue };
            let mask_path = mask_dir.join(stem).with_extension(ext);
            if !mask_path.is_file() {
                log::warn!("{}: no matching mask, skipped", dem_path.display());
                continue;
            }
            let dem = crate::raster::io::read_raster(&dem_path)?.grid;
            let mask = read_mask(&mask_path)?;
            let pair = TilePair::new(stem, dem, mask)?;
            pair.validate(&manifest.catalog)?;
            if manifest.entries.is_empty() {
                manifest.gsd = pair.dem.gsd();
                manifest.tile_size = pair.dem.width();
            }
            let rel = |p: &Path| p.strip_prefix(base).map(Path::to_path_buf).unwrap_or_else(|_| p.to_path_buf());
            manifest.entries.push(ManifestEntry {
                tile_id: stem.to_string(),
                dem_path: rel(&dem_path),
                mask_path: rel(&mask_path),
                classes_present: pair.classes_present,
                fold: None,
            });
        }
        manifest.validate()?;
        Ok(manifest)
    }
}

/// Resolves a manifest-relative path.
pub fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassStat {
    pub class_id: u8,
    pub class_name: String,
    pub tile_count: u64,
    pub pixel_count: u64,
}

/// Per-class tile and pixel counts. Tile counts come from `classes_present`,
/// pixel counts from reading every mask. An empty manifest gives an empty table;
/// otherwise every catalog class gets a row.
pub fn class_stats(manifest: &DatasetManifest, base: &Path) -> Result<Vec<ClassStat>> {
    if manifest.entries.is_empty() {
        return Ok(Vec::new());
    }
    let mut rows: Vec<ClassStat> = manifest
        .catalog
        .classes()
        .iter()
        .map(|c| ClassStat {
            class_id: c.id,
            class_name: c.name.clone(),
            tile_count: 0,
            pixel_count: 0,
        })
        .collect();
    for e in &manifest.entries {
        let mask = read_mask(resolve(base, &e.mask_path))?;
        for row in rows.iter_mut() {
            if e.classes_present.contains(&row.class_id) {
                row.tile_count += 1;
            }
            row.pixel_count += mask.pixel_count(row.class_id);
        }
    }
    Ok(rows)
}
