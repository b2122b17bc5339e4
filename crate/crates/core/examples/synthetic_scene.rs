//! Writes a seeded synthetic DEM with implanted mounds and depressions,
//! plus its class mask, ready for `reliefseg tile`.
//!
//!     cargo run --example synthetic_scene -- out/ 512 7

use std::path::PathBuf;

use reliefseg::raster::io::{write_mask, write_raster};
use reliefseg::synthetic::synthetic_scene;

fn main() -> reliefseg::Result<()> {
    let mut args = std::env::args().skip(1);
    let out = PathBuf::from(args.next().unwrap_or_else(|| "synthetic".into()));
    let size: usize = args.next().map_or(512, |s| s.parse().expect("size"));
    let seed: u64 = args.next().map_or(7, |s| s.parse().expect("seed"));

    let scene = synthetic_scene(size, seed)?;
    std::fs::create_dir_all(&out).expect("create output directory");
    write_raster(&scene.dem, out.join("dem.tif"))?;
    write_mask(&scene.mask, out.join("mask.tif"), scene.dem.gsd(), None)?;

    for c in scene.catalog.classes() {
        println!("{:>2} {:<10} {:>7} px", c.id, c.name, scene.mask.pixel_count(c.id));
    }
    println!("wrote {}/dem.tif and {}/mask.tif", out.display(), out.display());
    Ok(())
}
