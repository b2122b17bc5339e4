//! Moving-window mean and standard deviation with square and circular
//! windows, and the percentile stretch used to display rasters.

use reliefseg::raster::{focal_mean, focal_std, percentile_cut_stretch, FocalWindow};
use reliefseg::synthetic::synthetic_scene;

fn main() -> reliefseg::Result<()> {
    let dem = synthetic_scene(128, 3)?.dem;
    let (r, c) = (40, 40);

    for window in [FocalWindow::square(2), FocalWindow::circle(2), FocalWindow::circle(10)] {
        let mean = focal_mean(&dem, window)?;
        let std = focal_std(&dem, window)?;
        println!(
            "{:?} radius {:>2}: mean {:.3}  std {:.4}  (centre {:.3})",
            window.shape,
            window.radius,
            mean.get(r, c),
            std.get(r, c),
            dem.get(r, c)
        );
    }

    // windows are truncated at the raster edge rather than padded
    let corner = focal_mean(&dem, FocalWindow::square(3))?;
    let brute: f64 = (0..4).flat_map(|i| (0..4).map(move |j| (i, j))).map(|(i, j)| dem.get(i, j) as f64).sum::<f64>() / 16.0;
    println!("corner mean {:.4} vs 4x4 brute force {:.4}", corner.get(0, 0), brute);

    let img = percentile_cut_stretch(&dem, 1.0, 99.0)?;
    let band = img.band(0);
    let saturated = band.iter().filter(|v| **v == 0.0 || **v == 1.0).count();
    println!("1-99% stretch: {saturated} of {} cells saturated", band.len());
    Ok(())
}
