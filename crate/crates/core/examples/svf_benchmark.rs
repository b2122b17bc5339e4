//! Times the horizon-based products and the heaviest visualisations on a
//! 2048 x 2048 DEM.
//!
//!     cargo run --release --example svf_benchmark -- [threads]

use std::time::Instant;

use reliefseg::raster::DemGrid;
use reliefseg::viz::{compute_vt, sky_view_factor, VtName, VtParams};

fn main() -> reliefseg::Result<()> {
    if let Some(t) = std::env::args().nth(1) {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t.parse().expect("thread count"))
            .build_global()
            .expect("thread pool");
    }
    let dem = DemGrid::from_fn(2048, 2048, 0.5, |r, c| {
        (r as f32 * 0.05).sin() * 3.0 + (c as f32 * 0.031).cos() * 2.0
    })?;
    let params = VtParams::default();
    println!("{} worker thread(s)", rayon::current_num_threads());

    let t = Instant::now();
    sky_view_factor(&dem, &params)?;
    println!("SVF, {} directions, radius {} px: {:.2?}", params.svf_directions, params.svf_radius_px, t.elapsed());

    for vt in [VtName::Vat, VtName::E2Mstp] {
        let t = Instant::now();
        compute_vt(vt, &dem, &params)?;
        println!("{vt}: {:.2?}", t.elapsed());
    }
    Ok(())
}
