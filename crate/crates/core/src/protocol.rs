//! The online evaluation stream and its metrics.
//!
//! Each test item is first recognized against the gallery built from the
//! items before it, the decision is classified against the item's true
//! label, and only then is the item registered under that true label.
//!
//! | decision | predicted = true | true label enrolled | outcome |
//! |----------|------------------|---------------------|---------|
//! | accepted | yes              | (always)            | TA      |
//! | accepted | no               | yes                 | IE      |
//! | accepted | no               | no                  | FA      |
//! | rejected | -                | yes                 | FR      |
//! | rejected | -                | no                  | TR      |

use std::collections::{BTreeSet, HashSet};
use std::num::NonZeroU32;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::embedding::{Embedding, Label};
use crate::error::{Error, Result};
use crate::gallery::{Decision, Gallery, GalleryConfig};
use crate::rng::RngKey;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Outcome {
    #[serde(rename = "TA")]
    TrueAccept,
    #[serde(rename = "FR")]
    FalseReject,
    #[serde(rename = "IE")]
    IdentificationError,
    #[serde(rename = "FA")]
    FalseAccept,
    #[serde(rename = "TR")]
    TrueReject,
}

impl Outcome {
    pub const ALL: [Outcome; 5] = [
        Outcome::TrueAccept,
        Outcome::FalseReject,
        Outcome::IdentificationError,
        Outcome::FalseAccept,
        Outcome::TrueReject,
    ];

    pub fn code(self) -> &'static str {
        match self {
            Outcome::TrueAccept => "TA",
            Outcome::FalseReject => "FR",
            Outcome::IdentificationError => "IE",
            Outcome::FalseAccept => "FA",
            Outcome::TrueReject => "TR",
        }
    }
}

/// Membership test for the labels enrolled before the current item.
pub trait LabelSet {
    fn contains_label(&self, label: &Label) -> bool;
}

impl LabelSet for Gallery {
    fn contains_label(&self, label: &Label) -> bool {
        Gallery::contains_label(self, label)
    }
}

impl LabelSet for HashSet<Label> {
    fn contains_label(&self, label: &Label) -> bool {
        self.contains(label)
    }
}

impl LabelSet for BTreeSet<Label> {
    fn contains_label(&self, label: &Label) -> bool {
        self.contains(label)
    }
}

pub fn classify<K: LabelSet + ?Sized>(decision: &Decision, true_label: &Label, known: &K) -> Outcome {
    let enrolled = known.contains_label(true_label);
    match decision {
        Decision::Accepted { predicted, .. } if predicted == true_label => Outcome::TrueAccept,
        Decision::Accepted { .. } if enrolled => Outcome::IdentificationError,
        Decision::Accepted { .. } => Outcome::FalseAccept,
        Decision::Rejected { .. } if enrolled => Outcome::FalseReject,
        Decision::Rejected { .. } => Outcome::TrueReject,
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tally {
    pub ta: u64,
    pub fr: u64,
    pub ie: u64,
    pub fa: u64,
    pub tr: u64,
}

impl Tally {
    pub fn record(&mut self, outcome: Outcome) {
        *self.count_mut(outcome) += 1;
    }

    fn count_mut(&mut self, outcome: Outcome) -> &mut u64 {
        match outcome {
            Outcome::TrueAccept => &mut self.ta,
            Outcome::FalseReject => &mut self.fr,
            Outcome::IdentificationError => &mut self.ie,
            Outcome::FalseAccept => &mut self.fa,
            Outcome::TrueReject => &mut self.tr,
        }
    }

    pub fn count(&self, outcome: Outcome) -> u64 {
        match outcome {
            Outcome::TrueAccept => self.ta,
            Outcome::FalseReject => self.fr,
            Outcome::IdentificationError => self.ie,
            Outcome::FalseAccept => self.fa,
            Outcome::TrueReject => self.tr,
        }
    }

    pub fn n(&self) -> u64 {
        self.ta + self.fr + self.ie + self.fa + self.tr
    }

    /// ACP: accepted probes.
    pub fn accepted(&self) -> u64 {
        self.ta + self.ie + self.fa
    }

    /// REJ: rejected probes.
    pub fn rejected(&self) -> u64 {
        self.fr + self.tr
    }

    pub fn merged(&self, other: &Tally) -> Tally {
        Tally {
            ta: self.ta + other.ta,
            fr: self.fr + other.fr,
            ie: self.ie + other.ie,
            fa: self.fa + other.fa,
            tr: self.tr + other.tr,
        }
    }
}

/// Accuracy and the five protocol rates. `None` marks a zero denominator.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Rates {
    pub acc: Option<f64>,
    pub tar: Option<f64>,
    pub trr: Option<f64>,
    pub far: Option<f64>,
    pub frr: Option<f64>,
    pub war: Option<f64>,
}

impl Rates {
    pub const NAMES: [&'static str; 6] = ["acc", "tar", "trr", "far", "frr", "war"];

    pub fn values(&self) -> [Option<f64>; 6] {
        [self.acc, self.tar, self.trr, self.far, self.frr, self.war]
    }

    fn from_values(v: [Option<f64>; 6]) -> Self {
        Rates {
            acc: v[0],
            tar: v[1],
            trr: v[2],
            far: v[3],
            frr: v[4],
            war: v[5],
        }
    }
}

fn ratio(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

pub fn metrics(t: &Tally) -> Rates {
    let acp = t.accepted();
    let rej = t.rejected();
    Rates {
        acc: ratio(t.ta + t.tr, t.n()),
        tar: ratio(t.ta, acp),
        trr: ratio(t.tr, rej),
        far: ratio(t.fa, acp),
        frr: ratio(t.fr, rej),
        war: ratio(t.ie, acp),
    }
}

/// Everything that determines a run besides its input items.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub gallery: GalleryConfig,
    pub shuffle: bool,
    pub seed: u64,
    pub runs: NonZeroU32,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            gallery: GalleryConfig::default(),
            shuffle: true,
            seed: 0,
            runs: NonZeroU32::new(10).unwrap(),
        }
    }
}

impl RunConfig {
    /// Seed of run `index`: the base seed XOR the run index, so run 0 uses the
    /// base seed itself and any run can be replayed alone with `runs = 1`.
    pub fn run_seed(&self, index: u32) -> u64 {
        self.seed ^ u64::from(index)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StreamItem {
    pub id: String,
    pub embedding: Embedding,
    pub true_label: Label,
}

/// One line of the per-item log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogRecord {
    pub id: String,
    pub true_label: Label,
    pub accepted: bool,
    pub predicted: Option<Label>,
    pub matched_seq: Option<usize>,
    pub best_score: Option<f64>,
    pub matched_threshold: Option<f64>,
    pub outcome: Outcome,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StreamRun {
    pub tally: Tally,
    pub log: Vec<LogRecord>,
}

/// Runs one pass of the online protocol.
///
/// With `shuffle`, items are visited in an order drawn from `seed`; otherwise
/// in the given order.
pub fn run_stream(items: &[StreamItem], gallery: GalleryConfig, shuffle: bool, seed: u64) -> Result<StreamRun> {
    let mut order: Vec<usize> = (0..items.len()).collect();
    if shuffle {
        let mut rng = RngKey::root(seed).child_str("stream-order").rng();
        order.shuffle(&mut rng);
    }

    let mut g = Gallery::new(gallery)?;
    let mut tally = Tally::default();
    let mut log = Vec::with_capacity(items.len());
    for idx in order {
        let item = &items[idx];
        let with_id = |e: Error| match e {
            Error::Dimension { expected, found, .. } => Error::Dimension {
                expected,
                found,
                context: format!("item {}", item.id),
            },
            other => other,
        };
        let decision = g.recognize(&item.embedding).map_err(with_id)?;
        let outcome = classify(&decision, &item.true_label, &g);
        tally.record(outcome);

        let best = decision.best();
        log.push(LogRecord {
            id: item.id.clone(),
            true_label: item.true_label.clone(),
            accepted: decision.is_accepted(),
            predicted: match &decision {
                Decision::Accepted { predicted, .. } => Some(predicted.clone()),
                Decision::Rejected { .. } => None,
            },
            matched_seq: best.map(|m| m.index),
            best_score: best.map(|m| m.score),
            matched_threshold: best.and_then(|m| g.entry(m.index).and_then(|e| e.threshold)),
            outcome,
        });

        g.register(item.embedding.clone(), item.true_label.clone())
            .map_err(with_id)?;
    }
    Ok(StreamRun { tally, log })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub run_index: u32,
    pub run_seed: u64,
    pub tally: Tally,
    pub rates: Rates,
    pub config: RunConfig,
}

/// Per-metric count of runs whose value was undefined and left out of the mean.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Exclusions {
    pub acc: usize,
    pub tar: usize,
    pub trr: usize,
    pub far: usize,
    pub frr: usize,
    pub war: usize,
}

impl Exclusions {
    fn from_counts(c: [usize; 6]) -> Self {
        Exclusions {
            acc: c[0],
            tar: c[1],
            trr: c[2],
            far: c[3],
            frr: c[4],
            war: c[5],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateReport {
    pub runs: usize,
    /// Arithmetic mean of each rate over the runs where it is defined.
    pub mean: Rates,
    pub excluded: Exclusions,
    /// Sum of the per-run tallies.
    pub total: Tally,
    pub config: RunConfig,
}

/// Averages per-run reports, skipping undefined rates metric by metric.
pub fn aggregate_runs(reports: &[MetricsReport]) -> Result<AggregateReport> {
    let first = reports
        .first()
        .ok_or_else(|| Error::usage("cannot aggregate an empty list of reports"))?;
    if let Some(r) = reports.iter().find(|r| r.config != first.config) {
        return Err(Error::usage(format!(
            "run {} was produced with a different configuration",
            r.run_index
        )));
    }

    let mut sums = [0.0f64; 6];
    let mut defined = [0usize; 6];
    let mut total = Tally::default();
    for r in reports {
        total = total.merged(&r.tally);
        for (k, v) in r.rates.values().into_iter().enumerate() {
            if let Some(v) = v {
                sums[k] += v;
                defined[k] += 1;
            }
        }
    }
    let mean = std::array::from_fn(|k| (defined[k] > 0).then(|| sums[k] / defined[k] as f64));
    let excluded = std::array::from_fn(|k| reports.len() - defined[k]);
    Ok(AggregateReport {
        runs: reports.len(),
        mean: Rates::from_values(mean),
        excluded: Exclusions::from_counts(excluded),
        total,
        config: first.config,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub report: MetricsReport,
    pub log: Vec<LogRecord>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub runs: Vec<RunOutput>,
    pub aggregate: AggregateReport,
}

/// Runs the protocol `cfg.runs` times with derived seeds (in parallel) and aggregates.
pub fn evaluate(items: &[StreamItem], cfg: &RunConfig) -> Result<Evaluation> {
    cfg.gallery.validate()?;
    let runs: Vec<RunOutput> = (0..cfg.runs.get())
        .into_par_iter()
        .map(|index| {
            let run_seed = cfg.run_seed(index);
            let run = run_stream(items, cfg.gallery, cfg.shuffle, run_seed)?;
            Ok(RunOutput {
                report: MetricsReport {
                    run_index: index,
                    run_seed,
                    tally: run.tally,
                    rates: metrics(&run.tally),
                    config: *cfg,
                },
                log: run.log,
            })
        })
        .collect::<Result<_>>()?;
    let reports: Vec<MetricsReport> = runs.iter().map(|r| r.report.clone()).collect();
    let aggregate = aggregate_runs(&reports)?;
    Ok(Evaluation { runs, aggregate })
}
