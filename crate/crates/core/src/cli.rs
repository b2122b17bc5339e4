//! The `reliefseg` command line: viz, tile, folds, eval, report.
//!
//! Exit codes: 0 on success, 1 when processing fails, 2 for usage errors
//! (bad flags, unknown visualisation names, invalid parameter files).

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use crate::dataset::{assign_folds, resolve, tile_grid, write_tiles, ClassCatalog, DatasetManifest, DEFAULT_TILE_SIZE};
use crate::error::Error;
use crate::metrics::{evaluate_predictions, write_metric_csv, read_metric_csv, EvalConfig, RunInfo};
use crate::raster::io::{read_mask, read_raster, write_image};
use crate::report::{summary_text, RunSummary, Selection, SUMMARY_TXT};
use crate::viz::{compute_vt, VizSidecar, VtName, VtParams};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

/// Name of the manifest written by `tile`.
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Parser)]
#[command(name = "reliefseg", version, about = "LiDAR DEM visualisations, segmentation datasets and evaluation")]
pub struct Cli {
    /// Worker threads (default: all available cores). Outputs do not depend on it.
    #[arg(long, global = true, value_parser = clap::value_parser!(u32).range(1..))]
    pub threads: Option<u32>,
    /// Seed for fold assignment.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Visualisation parameters as JSON (field names as in VtParams).
    #[arg(long, global = true)]
    pub params: Option<PathBuf>,
    /// Only print errors.
    #[arg(long, short, global = true)]
    pub quiet: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Render a visualisation of one DEM, or of every tile in a manifest.
    Viz(VizArgs),
    /// Cut a DEM and its class mask into tiles and write a manifest.
    Tile(TileArgs),
    /// Assign stratified cross-validation folds to a manifest.
    Folds(FoldsArgs),
    /// Score prediction rasters against manifest masks.
    Eval(EvalArgs),
    /// Summarise metric CSVs into best-model and variability tables.
    Report(ReportArgs),
}

/// A single visualisation or every one of them.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VtChoice {
    One(VtName),
    All,
}

impl VtChoice {
    fn names(self) -> Vec<VtName> {
        match self {
            VtChoice::One(v) => vec![v],
            VtChoice::All => VtName::ALL.to_vec(),
        }
    }
}

fn parse_vt_choice(s: &str) -> Result<VtChoice, String> {
    if s.eq_ignore_ascii_case("all") {
        return Ok(VtChoice::All);
    }
    s.parse::<VtName>().map(VtChoice::One).map_err(|e| e.to_string())
}

fn parse_vt(s: &str) -> Result<VtName, String> {
    s.parse::<VtName>().map_err(|e| e.to_string())
}

#[derive(Debug, Args)]
#[command(group = clap::ArgGroup::new("source").required(true).args(["input", "manifest"]))]
pub struct VizArgs {
    /// Input DEM (.tif or .asc).
    #[arg(long, requires = "output")]
    pub input: Option<PathBuf>,
    /// Output raster; the format follows the extension (.tif, .asc, .png).
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Dataset manifest; every tile is rendered into --output-dir/<VT>/<tile_id>.tif.
    #[arg(long, requires = "output_dir", conflicts_with = "output")]
    pub manifest: Option<PathBuf>,
    #[arg(long)]
    pub output_dir: Option<PathBuf>,
    /// DEM_C, DEM_S, SLRM, DSS, E2MSTP, E2MSTP_1B, VAT, or `all` with --manifest.
    #[arg(long, value_parser = parse_vt_choice)]
    pub vt: VtChoice,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CatalogChoice {
    Chactun,
    Veluwe,
}

#[derive(Debug, Args)]
pub struct TileArgs {
    #[arg(long)]
    pub dem: PathBuf,
    /// Class-id mask aligned with the DEM.
    #[arg(long)]
    pub mask: PathBuf,
    #[arg(long)]
    pub output_dir: PathBuf,
    #[arg(long, default_value_t = DEFAULT_TILE_SIZE)]
    pub tile_size: usize,
    /// Dataset name (default: the DEM file stem).
    #[arg(long)]
    pub name: Option<String>,
    /// Built-in class catalog.
    #[arg(long, value_enum, default_value = "chactun", conflicts_with = "classes")]
    pub catalog: CatalogChoice,
    /// Custom class names, comma separated, ids 1.. in order.
    #[arg(long, value_delimiter = ',')]
    pub classes: Option<Vec<String>>,
}

#[derive(Debug, Args)]
pub struct FoldsArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Where to write the manifest with folds (may equal --manifest).
    #[arg(long)]
    pub output: PathBuf,
    #[arg(long, short, default_value_t = 5)]
    pub k: usize,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Directory of <tile_id>_<class>.tif prediction rasters.
    #[arg(long)]
    pub predictions: PathBuf,
    /// Metric CSV to write.
    #[arg(long)]
    pub output: PathBuf,
    /// Visualisation the predictions were made from.
    #[arg(long, value_parser = parse_vt)]
    pub vt: VtName,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..=8))]
    pub model_id: u32,
    #[arg(long, default_value = "run")]
    pub run_id: String,
    #[arg(long, default_value_t = 0.5)]
    pub threshold: f64,
    /// Evaluate only the tiles held out in this fold.
    #[arg(long)]
    pub fold: Option<usize>,
    /// Fail when any prediction file is missing.
    #[arg(long)]
    pub strict: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SelectionChoice {
    PerClass,
    PerVt,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Metric CSVs written by `eval`.
    #[arg(long, required = true, num_args = 1..)]
    pub metrics: Vec<PathBuf>,
    #[arg(long)]
    pub output_dir: PathBuf,
    /// Pick the best model per (visualisation, class) or one per visualisation.
    #[arg(long, value_enum, default_value = "per-class")]
    pub selection: SelectionChoice,
}

enum Failure {
    Usage(String),
    Runtime(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Runtime(e)
    }
}

type CmdResult = std::result::Result<(), Failure>;

/// Parses `args` (program name first) and runs the command; returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    init_logging(cli.quiet);
    let threads = cli
        .threads
        .map(|t| t as usize)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: cannot start {threads} worker threads: {e}");
            return EXIT_FAILURE;
        }
    };
    match pool.install(|| dispatch(&cli)) {
        Ok(()) => EXIT_OK,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            EXIT_USAGE
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e}");
            EXIT_FAILURE
        }
    }
}

fn init_logging(quiet: bool) {
    let level = if quiet { log::LevelFilter::Error } else { log::LevelFilter::Info };
    let _ = env_logger::Builder::new()
        .filter_level(level)
        .parse_default_env()
        .format_timestamp(None)
        .try_init();
    log::set_max_level(level);
}

fn dispatch(cli: &Cli) -> CmdResult {
    match &cli.command {
        Command::Viz(a) => cmd_viz(cli, a),
        Command::Tile(a) => cmd_tile(a),
        Command::Folds(a) => cmd_folds(cli, a),
        Command::Eval(a) => cmd_eval(a),
        Command::Report(a) => cmd_report(a),
    }
}

fn load_params(cli: &Cli) -> std::result::Result<VtParams, Failure> {
    match &cli.params {
        None => Ok(VtParams::default()),
        Some(p) => VtParams::from_json_file(p).map_err(|e| Failure::Usage(format!("--params: {e}"))),
    }
}

fn render(vt: VtName, dem_path: &Path, out: &Path, params: &VtParams) -> crate::Result<()> {
    let dem = read_raster(dem_path)?.grid;
    let img = compute_vt(vt, &dem, params)?;
    write_image(&img, out, dem.gsd(), dem.origin())?;
    VizSidecar::new(vt, &dem, params).write(VizSidecar::path_for(out))
}

fn create_dir(d: &Path) -> crate::Result<()> {
    std::fs::create_dir_all(d).map_err(|e| Error::io(d, e))
}

fn cmd_viz(cli: &Cli, a: &VizArgs) -> CmdResult {
    let params = load_params(cli)?;
    if let (Some(input), Some(output)) = (&a.input, &a.output) {
        let VtChoice::One(vt) = a.vt else {
            return Err(Failure::Usage("--vt all needs --manifest and --output-dir".into()));
        };
        render(vt, input, output, &params)?;
        log::info!("{vt} written to {}", output.display());
        return Ok(());
    }
    let (Some(manifest_path), Some(out_dir)) = (&a.manifest, &a.output_dir) else {
        return Err(Failure::Usage("give --input with --output, or --manifest with --output-dir".into()));
    };
    let manifest = DatasetManifest::load(manifest_path)?;
    let base = manifest_dir(manifest_path);
    for vt in a.vt.names() {
        let dir = out_dir.join(vt.as_str());
        create_dir(&dir)?;
        manifest
            .entries
            .par_iter()
            .map(|e| render(vt, &resolve(&base, &e.dem_path), &dir.join(format!("{}.tif", e.tile_id)), &params))
            .collect::<crate::Result<Vec<_>>>()?;
        log::info!("{vt}: {} tiles written to {}", manifest.entries.len(), dir.display());
    }
    Ok(())
}

fn manifest_dir(path: &Path) -> PathBuf {
    path.parent().map(Path::to_path_buf).unwrap_or_default()
}

fn cmd_tile(a: &TileArgs) -> CmdResult {
    let catalog = match &a.classes {
        Some(names) => ClassCatalog::from_names(names).map_err(|e| Failure::Usage(e.to_string()))?,
        None => match a.catalog {
            CatalogChoice::Chactun => ClassCatalog::chactun(),
            CatalogChoice::Veluwe => ClassCatalog::veluwe(),
        },
    };
    let dem = read_raster(&a.dem)?.grid;
    let mask = read_mask(&a.mask)?;
    let name = a.name.clone().unwrap_or_else(|| {
        a.dem.file_stem().and_then(|s| s.to_str()).unwrap_or("dataset").to_string()
    });
    let tiles = tile_grid(&dem, &mask, a.tile_size)?;
    create_dir(&a.output_dir)?;
    let manifest = write_tiles(&tiles, &a.output_dir, &name, catalog)?;
    let path = a.output_dir.join(MANIFEST_FILE);
    manifest.save(&path)?;
    log::info!("{} tiles, manifest at {}", manifest.entries.len(), path.display());
    Ok(())
}

fn cmd_folds(cli: &Cli, a: &FoldsArgs) -> CmdResult {
    if a.k < 2 {
        return Err(Failure::Usage(format!("-k must be at least 2, got {}", a.k)));
    }
    let manifest = DatasetManifest::load(&a.manifest)?;
    let mut out = assign_folds(&manifest, a.k, cli.seed)?;
    // entry paths stay valid when the output lands in another directory
    let (from, to) = (manifest_dir(&a.manifest), manifest_dir(&a.output));
    if from != to {
        for e in &mut out.entries {
            e.dem_path = relocate(&from, &to, &e.dem_path);
            e.mask_path = relocate(&from, &to, &e.mask_path);
        }
    }
    out.save(&a.output)?;
    log::info!("{} tiles over {} folds, seed {}", out.entries.len(), a.k, cli.seed);
    Ok(())
}

/// Rewrites a path relative to `from` so it still resolves from `to`.
/// Falls back to an absolute path when no relative form is available.
fn relocate(from: &Path, to: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        return p.to_path_buf();
    }
    let abs = |d: &Path| std::path::absolute(d).unwrap_or_else(|_| d.to_path_buf());
    let target = abs(&from.join(p));
    match target.strip_prefix(abs(to)) {
        Ok(rel) => rel.to_path_buf(),
        Err(_) => target,
    }
}

fn cmd_eval(a: &EvalArgs) -> CmdResult {
    let cfg = EvalConfig {
        threshold: a.threshold,
        ..Default::default()
    };
    cfg.validate().map_err(|e| Failure::Usage(e.to_string()))?;
    let manifest = DatasetManifest::load(&a.manifest)?;
    let run = RunInfo {
        run_id: a.run_id.clone(),
        model_id: a.model_id,
        vt: a.vt,
    };
    let outcome = evaluate_predictions(
        &manifest,
        &manifest_dir(&a.manifest),
        &a.predictions,
        &run,
        &cfg,
        a.fold,
        a.strict,
    )?;
    write_metric_csv(&outcome.rows, &a.output)?;
    if !outcome.missing.is_empty() {
        log::warn!("{} prediction file(s) missing", outcome.missing.len());
    }
    log::info!("{} metric rows written to {}", outcome.rows.len(), a.output.display());
    Ok(())
}

fn cmd_report(a: &ReportArgs) -> CmdResult {
    let mut rows = Vec::new();
    for p in &a.metrics {
        rows.extend(read_metric_csv(p)?);
    }
    let selection = match a.selection {
        SelectionChoice::PerClass => Selection::PerClass,
        SelectionChoice::PerVt => Selection::PerVt,
    };
    let (summary, means) = RunSummary::from_metric_rows(&rows, selection)?;
    summary.write_csvs(&a.output_dir)?;
    let text_path = a.output_dir.join(SUMMARY_TXT);
    std::fs::write(&text_path, summary_text(&summary, &means)).map_err(|e| Error::io(&text_path, e))?;
    log::info!("report written to {}", a.output_dir.display());
    Ok(())
}
