//! Reads a DEM (GeoTIFF or ESRI ASCII grid), prints its header and statistics,
//! and converts it to the format named by the output extension.
//!
//!     cargo run --example raster_io -- dem.asc dem.tif
//!
//! Without arguments a small grid is written to the temp directory and read back.

use reliefseg::raster::io::{read_raster, write_raster};
use reliefseg::raster::DemGrid;

fn main() -> reliefseg::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let (input, output) = match args.as_slice() {
        [i, o] => (i.into(), o.into()),
        _ => {
            let dir = std::env::temp_dir();
            let demo = dir.join("reliefseg_demo.asc");
            let grid = DemGrid::from_fn(40, 30, 0.5, |r, c| 250.0 + 0.1 * r as f32 - 0.05 * c as f32)?
                .with_nodata(Some(-9999.0))
                .with_origin(Some((500_000.0, 4_200_000.0)));
            write_raster(&grid, &demo)?;
            (demo, dir.join("reliefseg_demo.tif"))
        }
    };

    let read = read_raster(&input)?;
    let g = &read.grid;
    let valid: Vec<f32> = g.values().iter().copied().filter(|v| !g.is_nodata_value(*v)).collect();
    let (lo, hi) = valid.iter().fold((f32::MAX, f32::MIN), |(a, b), &v| (a.min(v), b.max(v)));
    println!("{}", input.display());
    println!("  size      {} x {}", g.width(), g.height());
    println!("  gsd       {} m{}", g.gsd(), if read.gsd_defaulted { " (assumed)" } else { "" });
    println!("  origin    {:?}", g.origin());
    println!("  nodata    {:?}", g.nodata());
    println!("  samples   {:?}", read.sample_type);
    println!("  valid     {} of {}", valid.len(), g.values().len());
    println!("  range     {lo} .. {hi}");

    write_raster(g, &output)?;
    let back = read_raster(&output)?.grid;
    assert_eq!(back.values().len(), g.values().len());
    println!("wrote {}", output.display());
    Ok(())
}
