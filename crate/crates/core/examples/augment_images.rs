//! Builds an augmentation plan, runs it over two generated images and lists
//! what each chain does.
//!
//! cargo run --example augment_images -- [out_dir]

use std::path::PathBuf;

use openset_eval::augment::{build_plan, run_basic, BatchOptions, Policy, RasterImage};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "target/augment_demo".into()));
    let src = out.join("src");
    std::fs::create_dir_all(&src)?;

    RasterImage::from_fn(96, 96, |x, y| [(x * 2) as u8, (y * 2) as u8, 128]).save_png(src.join("gradient.png"))?;
    RasterImage::from_fn(96, 96, |x, y| {
        let inside = (x as i32 - 48).pow(2) + (y as i32 - 48).pow(2) < 900;
        if inside { [220, 180, 150] } else { [30, 60, 90] }
    })
    .save_png(src.join("disc.png"))?;

    let plan = build_plan(5, 6, &Policy::default())?;
    for (k, chain) in plan.chains.iter().enumerate() {
        let names: Vec<_> = chain.iter().map(|t| t.name()).collect();
        println!("chain {k}: {}", names.join(" -> "));
    }

    let report = run_basic(&src, &plan, &out.join("aug"), &BatchOptions::default())?;
    println!("{} sources -> {} outputs in {}", report.sources, report.outputs, out.join("aug").display());
    Ok(())
}
