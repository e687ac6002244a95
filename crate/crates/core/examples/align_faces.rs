//! Fits an affine map from detected landmarks to a template and warps the image.

use openset_eval::augment::{align_affine, fit_affine, LandmarkSet, Point, RasterImage};

fn points(xy: &[(f64, f64)]) -> openset_eval::Result<LandmarkSet> {
    LandmarkSet::new(xy.iter().map(|&(x, y)| Point { x, y }).collect())
}

fn main() -> openset_eval::Result<()> {
    // eyes, nose tip, mouth corners
    let detected = points(&[(38.0, 52.0), (70.0, 48.0), (55.0, 68.0), (42.0, 84.0), (68.0, 81.0)])?;
    let template = points(&[(38.3, 51.7), (73.5, 51.5), (56.0, 71.7), (41.5, 92.4), (70.7, 92.2)])?;

    let t = fit_affine(&detected, &template)?;
    println!("affine [a b c d e f] = {:?}", t.0.map(|v| (v * 1e4).round() / 1e4));
    for (s, d) in detected.points().iter().zip(template.points()) {
        let p = t.apply(*s);
        println!("  ({:5.1},{:5.1}) -> ({:6.2},{:6.2})  template ({:5.1},{:5.1})", s.x, s.y, p.x, p.y, d.x, d.y);
    }

    let img = RasterImage::from_fn(112, 112, |x, y| [(x * 2) as u8, (y * 2) as u8, 100]);
    let aligned = align_affine(&img, &detected, &template)?;
    println!("aligned image {}x{}", aligned.width(), aligned.height());
    Ok(())
}
