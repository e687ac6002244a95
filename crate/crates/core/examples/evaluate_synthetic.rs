//! Runs the online protocol over clustered synthetic embeddings at a few noise
//! levels and prints the averaged rates.
//!
//! cargo run --example evaluate_synthetic -- [identities] [images-per-identity]

use std::num::NonZeroU32;

use openset_eval::io::{gen_synthetic, ImagesPerIdentity, SyntheticSpec};
use openset_eval::{evaluate, GalleryConfig, RunConfig, StreamItem};

fn fmt(v: Option<f64>) -> String {
    v.map_or("   n/a".into(), |v| format!("{v:6.3}"))
}

fn main() -> openset_eval::Result<()> {
    let mut args = std::env::args().skip(1).map(|a| a.parse::<usize>().expect("expected a count"));
    let identities = args.next().unwrap_or(50);
    let per = args.next().unwrap_or(4);

    let cfg = RunConfig {
        gallery: GalleryConfig::default(),
        shuffle: true,
        seed: 7,
        runs: NonZeroU32::new(10).unwrap(),
    };
    println!("noise    acc    tar    trr    far    frr    war");
    for noise in [0.0, 0.02, 0.05, 0.1, 0.3] {
        let spec = SyntheticSpec {
            identities,
            images: ImagesPerIdentity::Fixed(per),
            dim: 128,
            within_noise: noise,
            seed: 2024,
        };
        let items: Vec<StreamItem> = gen_synthetic(&spec)?
            .iter()
            .map(|r| r.to_stream_item())
            .collect::<openset_eval::Result<_>>()?;
        let m = evaluate(&items, &cfg)?.aggregate.mean;
        println!(
            "{noise:5.2} {} {} {} {} {} {}",
            fmt(m.acc), fmt(m.tar), fmt(m.trr), fmt(m.far), fmt(m.frr), fmt(m.war)
        );
    }
    Ok(())
}
