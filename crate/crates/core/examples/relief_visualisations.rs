//! Renders every visualisation of a DEM to PNG, with its JSON sidecar.
//!
//!     cargo run --release --example relief_visualisations -- [dem.tif] [out_dir]
//!
//! Without a DEM a synthetic scene is used.

use std::path::PathBuf;
use std::time::Instant;

use reliefseg::raster::io::{read_raster, write_image};
use reliefseg::synthetic::synthetic_scene;
use reliefseg::viz::{compute_vt, VizSidecar, VtName, VtParams};

fn main() -> reliefseg::Result<()> {
    let mut args = std::env::args().skip(1);
    let dem = match args.next() {
        Some(p) => read_raster(p)?.grid,
        None => synthetic_scene(256, 11)?.dem,
    };
    let out = PathBuf::from(args.next().unwrap_or_else(|| "relief".into()));
    std::fs::create_dir_all(&out).expect("create output directory");

    let params = VtParams::default();
    for vt in VtName::ALL {
        let t = Instant::now();
        let img = compute_vt(vt, &dem, &params)?;
        let path = out.join(format!("{vt}.png"));
        write_image(&img, &path, dem.gsd(), dem.origin())?;
        VizSidecar::new(vt, &dem, &params).write(VizSidecar::path_for(&path))?;
        println!("{:<10} {} band(s)  {:>8.1?}  {}", vt.as_str(), img.band_count(), t.elapsed(), path.display());
    }
    Ok(())
}
