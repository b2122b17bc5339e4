//! Horizon scanning on a pit and a ridge: per-direction horizon angles, the
//! sky-view factor and positive openness at a few cells.

use reliefseg::raster::DemGrid;
use reliefseg::viz::{horizon_angles, horizon_products, HorizonRays, VtParams};

fn main() -> reliefseg::Result<()> {
    let n = 41;
    let c = (n / 2) as f32;
    // a 2 m deep bowl of radius 8 px on flat ground, and a north-south ridge
    let pit = DemGrid::from_fn(n, n, 1.0, |r, col| {
        let d = ((r as f32 - c).powi(2) + (col as f32 - c).powi(2)).sqrt();
        if d < 8.0 { -2.0 * (1.0 - d / 8.0) } else { 0.0 }
    })?;
    let ridge = DemGrid::from_fn(n, n, 1.0, |_, col| (3.0 - (col as f32 - c).abs() * 0.5).max(0.0))?;

    let params = VtParams { svf_directions: 8, svf_radius_px: 10, ..VtParams::default() };
    let n_dir = HorizonRays::from_params(&params, 1.0).directions();
    let azimuths: Vec<String> = (0..n_dir).map(|d| format!("{}", 360 * d / n_dir)).collect();
    println!("azimuths (deg, counter-clockwise from east): {}", azimuths.join(" "));

    for (name, grid) in [("pit", &pit), ("ridge", &ridge)] {
        let (svf, open) = horizon_products(grid, &params)?;
        for cell in [(20, 20), (20, 25), (5, 5)] {
            let angles: Vec<String> = horizon_angles(grid, cell, &params)?
                .iter()
                .map(|a| format!("{:5.1}", a.to_degrees()))
                .collect();
            println!(
                "{name:<5} {cell:?}: svf {:.3}  openness {:5.1}  horizon [{}]",
                svf.get(cell.0, cell.1),
                open.get(cell.0, cell.1),
                angles.join(" ")
            );
        }
    }
    Ok(())
}
