//! Evaluates once, writes per-run reports, then reads them back and aggregates.
//!
//! cargo run --example aggregate_reports -- [out_dir]

use std::path::PathBuf;

use openset_eval::io::{gen_synthetic, read_report, write_aggregate, write_report, ImagesPerIdentity, SyntheticSpec};
use openset_eval::{aggregate_runs, evaluate, RunConfig, StreamItem};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "target/aggregate_demo".into()));
    std::fs::create_dir_all(&out)?;

    let spec = SyntheticSpec {
        identities: 30,
        images: ImagesPerIdentity::Fixed(3),
        dim: 64,
        within_noise: 0.05,
        seed: 1,
    };
    let items: Vec<StreamItem> = gen_synthetic(&spec)?
        .iter()
        .map(|r| r.to_stream_item())
        .collect::<openset_eval::Result<_>>()?;
    let eval = evaluate(&items, &RunConfig::default())?;

    let mut paths = Vec::new();
    for run in &eval.runs {
        let path = out.join(format!("run_{:02}.json", run.report.run_index));
        write_report(&run.report, &path)?;
        paths.push(path);
    }
    let reports = paths.iter().map(read_report).collect::<openset_eval::Result<Vec<_>>>()?;
    let agg = aggregate_runs(&reports)?;
    write_aggregate(&agg, out.join("aggregate.json"))?;

    for r in &reports {
        println!("run {:2} seed {:2}: acc {:.3}", r.run_index, r.run_seed, r.rates.acc.unwrap_or(f64::NAN));
    }
    println!("mean acc {:.3} over {} runs, total {:?}", agg.mean.acc.unwrap_or(f64::NAN), agg.runs, agg.total);
    Ok(())
}
