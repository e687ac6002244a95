//! Command-line front end.
//!
//! Exit codes: 0 on success, 1 for usage errors (bad flags or configuration),
//! 2 for data errors (unreadable or inconsistent inputs).

use std::collections::HashMap;
use std::ffi::OsString;
use std::fs;
use std::num::NonZeroU32;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::augment::{
    self, load_landmarks, load_template, AlignStage, Alignment, AttributePlan, AugmentPlan, BatchOptions, Policy,
};
use crate::error::{Error, Result};
use crate::gallery::{GalleryConfig, Window};
use crate::io::{self, ImagesPerIdentity, SyntheticSpec};
use crate::protocol::{self, RunConfig, StreamItem};
use crate::splitter::{self, SplitKind};

#[derive(Debug, Parser)]
#[command(name = "openset-eval", version, about = "Open-set identification evaluation harness")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Split an image manifest into train and test id lists.
    Split(SplitArgs),
    /// Sample an augmentation plan (and optionally an attribute plan).
    Plan(PlanArgs),
    /// Apply an augmentation plan to a directory of images.
    Augment(AugmentArgs),
    /// Generate clustered synthetic embeddings.
    Synth(SynthArgs),
    /// Run the online recognition protocol over test embeddings.
    Eval(EvalArgs),
    /// Average existing per-run reports.
    Aggregate(AggregateArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum KindArg {
    Unique,
    Both,
}

#[derive(Debug, Args)]
pub struct SplitArgs {
    /// TAB-separated `image_id<TAB>label` manifest.
    pub manifest: PathBuf,
    #[arg(long, value_enum, default_value = "unique")]
    pub kind: KindArg,
    /// Target test fraction of images (unique splits only).
    #[arg(long, default_value_t = 0.1)]
    pub ratio: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct PlanArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = augment::DEFAULT_CHAINS)]
    pub chains: usize,
    /// JSON policy overriding the default sampling policy.
    #[arg(long)]
    pub policy: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    /// Also write the attribute-combination plan here.
    #[arg(long)]
    pub attributes: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ModeArg {
    Basic,
    Combined,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum AlignArg {
    Before,
    After,
}

#[derive(Debug, Args)]
pub struct AugmentArgs {
    /// Source images (basic) or `<id>_attr<k>` images (combined).
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Plan file; without it a default plan is sampled from `--seed`.
    #[arg(long)]
    pub plan: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value = "basic")]
    pub mode: ModeArg,
    #[arg(long)]
    pub threads: Option<usize>,
    /// Landmark file (`image_id x1 y1 ... xk yk` per line) enabling alignment.
    #[arg(long, requires = "template")]
    pub landmarks: Option<PathBuf>,
    /// Template landmark file; its first line is used.
    #[arg(long, requires = "landmarks")]
    pub template: Option<PathBuf>,
    /// Whether alignment runs before or after augmentation.
    #[arg(long, value_enum, default_value = "before")]
    pub align: AlignArg,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub identities: usize,
    /// Images per identity: one number, or a comma-separated list with one entry per identity.
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    pub per: Vec<usize>,
    #[arg(long, default_value_t = 128)]
    pub dim: usize,
    /// Standard deviation of the within-identity noise.
    #[arg(long, default_value_t = 0.05)]
    pub noise: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    /// Write the packed binary format instead of JSON lines.
    #[arg(long)]
    pub binary: bool,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Embedding file (JSON lines or packed binary).
    pub embeddings: PathBuf,
    /// Test id list; defaults to every record in the embedding file.
    #[arg(long)]
    pub test_ids: Option<PathBuf>,
    #[arg(long, default_value_t = 10)]
    pub runs: u32,
    /// Window for both search and threshold updates; a count or `unbounded`.
    #[arg(long, default_value = "100")]
    pub window: Window,
    #[arg(long)]
    pub search_window: Option<Window>,
    #[arg(long)]
    pub update_window: Option<Window>,
    #[arg(long, default_value_t = 1.0)]
    pub sigma: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Process the stream in file order in every run.
    #[arg(long)]
    pub no_shuffle: bool,
    /// Skip L2 normalization of the loaded vectors (they must already be unit length).
    #[arg(long)]
    pub no_normalize: bool,
    #[arg(long)]
    pub out: PathBuf,
    /// Also write a per-item decision log for each run.
    #[arg(long)]
    pub log: bool,
}

#[derive(Debug, Args)]
pub struct AggregateArgs {
    /// Per-run report files.
    #[arg(required = true)]
    pub reports: Vec<PathBuf>,
    /// Output path; prints to stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Parses `args` (including the program name) and runs the command, returning the exit code.
pub fn main_with_args<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match run(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn run(command: Command) -> Result<()> {
    match command {
        Command::Split(a) => cmd_split(a),
        Command::Plan(a) => cmd_plan(a),
        Command::Augment(a) => cmd_augment(a),
        Command::Synth(a) => cmd_synth(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Aggregate(a) => cmd_aggregate(a),
    }
}

fn cmd_split(a: SplitArgs) -> Result<()> {
    let manifest = splitter::load_manifest(&a.manifest)?;
    let (result, ratio) = match a.kind {
        KindArg::Unique => (splitter::split_unique(&manifest, a.seed, a.ratio)?, Some(a.ratio)),
        KindArg::Both => (splitter::split_both(&manifest, a.seed), None),
    };
    let summary = result.write(&manifest, ratio, &a.out)?;
    println!(
        "{} split: {} train / {} test images (test fraction {:.4}) -> {}",
        match result.kind {
            SplitKind::Unique => "unique",
            SplitKind::Both => "both",
        },
        summary.train_images,
        summary.test_images,
        summary.test_fraction,
        a.out.display()
    );
    Ok(())
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

fn cmd_plan(a: PlanArgs) -> Result<()> {
    let policy = match &a.policy {
        Some(p) => read_json::<Policy>(p)?,
        None => Policy::default(),
    };
    let plan = augment::build_plan(a.seed, a.chains, &policy)?;
    plan.save(&a.out)?;
    println!("wrote {} chains to {}", plan.chains.len(), a.out.display());
    if let Some(path) = &a.attributes {
        AttributePlan::new(a.seed).save(path)?;
        println!("wrote attribute plan to {}", path.display());
    }
    Ok(())
}

fn cmd_augment(a: AugmentArgs) -> Result<()> {
    let plan = match &a.plan {
        Some(p) => AugmentPlan::load(p)?,
        None => augment::build_plan(a.seed, augment::DEFAULT_CHAINS, &Policy::default())?,
    };
    let alignment = match (&a.landmarks, &a.template) {
        (Some(l), Some(t)) => Some(Alignment {
            landmarks: load_landmarks(l)?,
            template: load_template(t)?,
            stage: match a.align {
                AlignArg::Before => AlignStage::Before,
                AlignArg::After => AlignStage::After,
            },
        }),
        _ => None,
    };
    let opts = BatchOptions { threads: a.threads, alignment };
    let report = match a.mode {
        ModeArg::Basic => augment::run_basic(&a.input, &plan, &a.out, &opts)?,
        ModeArg::Combined => augment::run_combined(&a.input, &plan, &a.out, &opts)?,
    };
    println!(
        "{} sources, {} outputs, {} failures -> {}",
        report.sources,
        report.outputs,
        report.failures.len(),
        a.out.display()
    );
    for f in &report.failures {
        eprintln!("failed: {} {}: {}", f.id, f.chain.map_or_else(String::new, |k| format!("chain {k}")), f.reason);
    }
    Ok(())
}

fn cmd_synth(a: SynthArgs) -> Result<()> {
    let images = match a.per.as_slice() {
        [] => return Err(Error::usage("--per is required")),
        [n] => ImagesPerIdentity::Fixed(*n),
        list => ImagesPerIdentity::PerIdentity(list.to_vec()),
    };
    let spec = SyntheticSpec {
        identities: a.identities,
        images,
        dim: a.dim,
        within_noise: a.noise,
        seed: a.seed,
    };
    let records = io::gen_synthetic(&spec)?;
    if a.binary {
        io::write_embeddings_binary(&records, &a.out)?;
    } else {
        let header = serde_json::to_string(&json!({ "tool": crate::TOOL_VERSION, "synthetic": spec }))?;
        io::write_embeddings_jsonl(&records, Some(&header), &a.out)?;
    }
    println!("wrote {} records to {}", records.len(), a.out.display());
    Ok(())
}

fn eval_items(a: &EvalArgs) -> Result<Vec<StreamItem>> {
    let records = io::load_embeddings(&a.embeddings, !a.no_normalize)?;
    let Some(ids_path) = &a.test_ids else {
        return records.iter().map(|r| r.to_stream_item()).collect();
    };
    let ids = splitter::load_id_list(ids_path)?;
    let by_id: HashMap<&str, usize> = records.iter().enumerate().map(|(i, r)| (r.id.as_str(), i)).collect();
    let missing: Vec<&str> = ids.iter().map(String::as_str).filter(|id| !by_id.contains_key(id)).collect();
    if !missing.is_empty() {
        const SHOWN: usize = 20;
        let mut list = missing.iter().take(SHOWN).copied().collect::<Vec<_>>().join(", ");
        if missing.len() > SHOWN {
            list.push_str(&format!(", ... ({} more)", missing.len() - SHOWN));
        }
        return Err(Error::data(format!("{} test ids have no embedding: {list}", missing.len())));
    }
    ids.iter().map(|id| records[by_id[id.as_str()]].to_stream_item()).collect()
}

fn cmd_eval(a: EvalArgs) -> Result<()> {
    let runs = NonZeroU32::new(a.runs).ok_or_else(|| Error::usage("--runs must be at least 1"))?;
    let gallery = GalleryConfig {
        search_window: a.search_window.unwrap_or(a.window),
        update_window: a.update_window.unwrap_or(a.window),
        sigma: a.sigma,
    };
    gallery.validate()?;
    let cfg = RunConfig { gallery, shuffle: !a.no_shuffle, seed: a.seed, runs };
    let items = eval_items(&a)?;
    let eval = protocol::evaluate(&items, &cfg)?;

    fs::create_dir_all(&a.out).map_err(|e| Error::io(&a.out, e))?;
    for run in &eval.runs {
        let i = run.report.run_index;
        io::write_report(&run.report, a.out.join(format!("run_{i:02}.json")))?;
        if a.log {
            let path = a.out.join(format!("run_{i:02}.log.jsonl"));
            let mut text = String::new();
            for rec in &run.log {
                text.push_str(&serde_json::to_string(rec)?);
                text.push('\n');
            }
            fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
        }
    }
    io::write_aggregate(&eval.aggregate, a.out.join("aggregate.json"))?;
    let inputs = json!({
        "tool": crate::TOOL_VERSION,
        "embeddings": a.embeddings.display().to_string(),
        "test_ids": a.test_ids.as_ref().map(|p| p.display().to_string()),
        "items": items.len(),
        "normalize": !a.no_normalize,
        "config": cfg,
    });
    let path = a.out.join("inputs.json");
    fs::write(&path, serde_json::to_string_pretty(&inputs)? + "\n").map_err(|e| Error::io(&path, e))?;

    let fmt = |v: Option<f64>| v.map_or_else(|| "NULL".to_string(), |v| format!("{v:.4}"));
    let m = &eval.aggregate.mean;
    println!(
        "{} runs over {} items: ACC {} TAR {} TRR {} FAR {} FRR {} WAR {}",
        eval.aggregate.runs,
        items.len(),
        fmt(m.acc),
        fmt(m.tar),
        fmt(m.trr),
        fmt(m.far),
        fmt(m.frr),
        fmt(m.war)
    );
    Ok(())
}

fn cmd_aggregate(a: AggregateArgs) -> Result<()> {
    let reports = a.reports.iter().map(io::read_report).collect::<Result<Vec<_>>>()?;
    let agg = protocol::aggregate_runs(&reports)?;
    match &a.out {
        Some(path) => {
            io::write_aggregate(&agg, path)?;
            println!("aggregated {} runs -> {}", agg.runs, path.display());
        }
        None => println!("{}", serde_json::to_string_pretty(&agg)?),
    }
    Ok(())
}
