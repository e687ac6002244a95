//! Directory-level augmentation runs.
//!
//! Outputs are PNG files named `<id>_aug<k>.png`. Every output draws its
//! random numbers from a stream keyed by (plan seed, image id, chain index), so
//! the bytes written do not depend on the thread count or processing order.

use std::collections::BTreeMap;
use std::ffi::OsStr;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::align::{align_affine, LandmarkSet};
use super::plan::AugmentPlan;
use super::raster::RasterImage;
use super::transforms::apply_chain;
use crate::error::{Error, Result};

pub const REPORT_VERSION: u32 = 1;
pub const REPORT_FILE: &str = "report.json";
pub const IMAGE_EXTENSIONS: [&str; 4] = ["png", "jpg", "jpeg", "bmp"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AlignStage {
    /// Align the source, then augment the aligned image.
    Before,
    /// Augment the source, then align every output with the source landmarks.
    After,
}

#[derive(Debug, Clone)]
pub struct Alignment {
    pub landmarks: BTreeMap<String, LandmarkSet>,
    pub template: LandmarkSet,
    pub stage: AlignStage,
}

#[derive(Debug, Clone, Default)]
pub struct BatchOptions {
    /// Worker threads; `None` uses the global rayon pool.
    pub threads: Option<usize>,
    pub alignment: Option<Alignment>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BatchMode {
    Basic,
    Combined,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Failure {
    pub id: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub chain: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub path: Option<String>,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationReport {
    pub version: u32,
    pub tool: String,
    pub mode: BatchMode,
    pub seed: u64,
    pub chains: usize,
    pub input_dir: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub align: Option<AlignStage>,
    pub sources: usize,
    pub outputs: usize,
    pub failures: Vec<Failure>,
}

pub fn output_name(id: &str, k: usize) -> String {
    format!("{id}_aug{k}.png")
}

fn is_image(path: &Path) -> bool {
    path.extension()
        .and_then(OsStr::to_str)
        .is_some_and(|e| IMAGE_EXTENSIONS.contains(&e.to_ascii_lowercase().as_str()))
}

fn list_images(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        if path.is_file() && is_image(&path) {
            files.push(path);
        }
    }
    files.sort();
    Ok(files)
}

fn stem(path: &Path) -> Option<String> {
    path.file_stem().and_then(OsStr::to_str).map(str::to_string)
}

fn with_pool<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match threads {
        None => Ok(f()),
        Some(0) => Err(Error::usage("thread count must be at least 1")),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::usage(format!("cannot start thread pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

struct Job {
    id: String,
    path: PathBuf,
    /// Chain index; `None` runs every chain on the same image.
    chain: Option<usize>,
}

struct JobResult {
    written: usize,
    failures: Vec<Failure>,
}

fn fail(id: &str, chain: Option<usize>, path: Option<&Path>, reason: impl ToString) -> Failure {
    Failure {
        id: id.to_string(),
        chain,
        path: path.map(|p| p.display().to_string()),
        reason: reason.to_string(),
    }
}

fn run_job(job: &Job, plan: &AugmentPlan, out_dir: &Path, align: Option<&Alignment>) -> JobResult {
    let failed = |reason: String| JobResult {
        written: 0,
        failures: vec![fail(&job.id, job.chain, Some(&job.path), reason)],
    };
    let mut img = match RasterImage::load(&job.path) {
        Ok(img) => img,
        Err(e) => return failed(e.to_string()),
    };
    let landmarks = match align {
        None => None,
        Some(a) => match a.landmarks.get(&job.id) {
            Some(l) => Some((l, &a.template, a.stage)),
            None => return failed("no landmarks for image".into()),
        },
    };
    if let Some((src, template, AlignStage::Before)) = landmarks {
        match align_affine(&img, src, template) {
            Ok(aligned) => img = aligned,
            Err(e) => return failed(e.to_string()),
        }
    }
    let chains: Vec<usize> = match job.chain {
        Some(k) => vec![k],
        None => (0..plan.chains.len()).collect(),
    };
    let mut result = JobResult { written: 0, failures: Vec::new() };
    for k in chains {
        let mut rng = plan.apply_key(&job.id, k).rng();
        let mut out = apply_chain(&img, &plan.chains[k], &mut rng);
        if let Some((src, template, AlignStage::After)) = landmarks {
            match align_affine(&out, src, template) {
                Ok(aligned) => out = aligned,
                Err(e) => {
                    result.failures.push(fail(&job.id, Some(k), Some(&job.path), e));
                    continue;
                }
            }
        }
        match out.save_png(out_dir.join(output_name(&job.id, k))) {
            Ok(()) => result.written += 1,
            Err(e) => result.failures.push(fail(&job.id, Some(k), Some(&job.path), e)),
        }
    }
    result
}

fn run_jobs(
    mode: BatchMode,
    input_dir: &Path,
    jobs: Vec<Job>,
    mut failures: Vec<Failure>,
    sources: usize,
    plan: &AugmentPlan,
    out_dir: &Path,
    opts: &BatchOptions,
) -> Result<GenerationReport> {
    plan.validate()?;
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let align = opts.alignment.as_ref();
    let results: Vec<JobResult> =
        with_pool(opts.threads, || jobs.par_iter().map(|j| run_job(j, plan, out_dir, align)).collect())?;
    let mut outputs = 0;
    for r in results {
        outputs += r.written;
        failures.extend(r.failures);
    }
    failures.sort_by(|a, b| (&a.id, a.chain).cmp(&(&b.id, b.chain)));
    let report = GenerationReport {
        version: REPORT_VERSION,
        tool: crate::TOOL_VERSION.to_string(),
        mode,
        seed: plan.seed,
        chains: plan.chains.len(),
        input_dir: input_dir.display().to_string(),
        align: align.map(|a| a.stage),
        sources,
        outputs,
        failures,
    };
    let path = out_dir.join(REPORT_FILE);
    fs::write(&path, serde_json::to_string_pretty(&report)? + "\n").map_err(|e| Error::io(&path, e))?;
    Ok(report)
}

/// Applies every chain of `plan` to every image in `src_dir`.
///
/// Unreadable images are recorded as failures and skipped.
pub fn run_basic(src_dir: &Path, plan: &AugmentPlan, out_dir: &Path, opts: &BatchOptions) -> Result<GenerationReport> {
    let mut seen = BTreeMap::new();
    let mut failures = Vec::new();
    let mut jobs = Vec::new();
    for path in list_images(src_dir)? {
        let Some(id) = stem(&path) else {
            failures.push(fail("", None, Some(&path), "file name is not valid UTF-8"));
            continue;
        };
        if let Some(first) = seen.insert(id.clone(), path.clone()) {
            failures.push(fail(&id, None, Some(&path), format!("duplicate id, already read from {}", first.display())));
            continue;
        }
        jobs.push(Job { id, path, chain: None });
    }
    let sources = jobs.len();
    run_jobs(BatchMode::Basic, src_dir, jobs, failures, sources, plan, out_dir, opts)
}

/// Splits `<id>_attr<k>` into `(id, k)`.
pub fn parse_attr_name(stem: &str) -> Option<(&str, usize)> {
    let pos = stem.rfind("_attr")?;
    let (id, rest) = (&stem[..pos], &stem[pos + 5..]);
    if id.is_empty() || rest.is_empty() || !rest.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    Some((id, rest.parse().ok()?))
}

/// Applies chain `k` of `plan` to the attribute-edited image `<id>_attr<k>` for
/// every source id found in `generated_dir`.
///
/// Each id is expected to have one image per chain; missing ones are recorded.
pub fn run_combined(
    generated_dir: &Path,
    plan: &AugmentPlan,
    out_dir: &Path,
    opts: &BatchOptions,
) -> Result<GenerationReport> {
    let n = plan.chains.len();
    let mut groups: BTreeMap<String, BTreeMap<usize, PathBuf>> = BTreeMap::new();
    let mut failures = Vec::new();
    for path in list_images(generated_dir)? {
        let Some(s) = stem(&path) else { continue };
        let Some((id, k)) = parse_attr_name(&s) else { continue };
        if k >= n {
            failures.push(fail(id, Some(k), Some(&path), format!("attribute index beyond the {n} plan chains")));
            continue;
        }
        let slot = groups.entry(id.to_string()).or_default();
        if slot.contains_key(&k) {
            failures.push(fail(id, Some(k), Some(&path), "duplicate attribute image"));
            continue;
        }
        slot.insert(k, path);
    }
    let mut jobs = Vec::new();
    for (id, images) in &groups {
        for k in 0..n {
            match images.get(&k) {
                Some(path) => jobs.push(Job { id: id.clone(), path: path.clone(), chain: Some(k) }),
                None => failures.push(fail(id, Some(k), None, format!("missing attribute image {id}_attr{k}"))),
            }
        }
    }
    let sources = groups.len();
    run_jobs(BatchMode::Combined, generated_dir, jobs, failures, sources, plan, out_dir, opts)
}

pub fn read_generation_report(path: &Path) -> Result<GenerationReport> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let report: GenerationReport = serde_json::from_str(&text)?;
    if report.version != REPORT_VERSION {
        return Err(Error::SchemaVersion {
            what: path.display().to_string(),
            found: u64::from(report.version),
            expected: REPORT_VERSION,
        });
    }
    Ok(report)
}
