//! Evaluation harness for open-set face identification.
//!
//! The crate bundles the pieces needed to study how training-data augmentation
//! affects an online recognizer that learns per-entry acceptance thresholds:
//!
//! * [`gallery`]: the incremental embedding database with adaptive thresholds.
//! * [`protocol`]: the online evaluation stream, outcome classification and rates.
//! * [`splitter`]: identity-disjoint (`Unique`) and one-per-identity (`Both`) splits.
//! * [`augment`]: deterministic raster augmentation, attribute plans and landmark alignment.
//! * [`io`]: embedding ingestion, synthetic embeddings and versioned reports.
//!
//! Runnable walkthroughs for each capability live in the crate's `examples/`
//! directory; the `openset-eval` binary wraps the same functions as subcommands.

pub mod augment;
pub mod cli;
pub mod embedding;
pub mod error;
pub mod gallery;
pub mod io;
pub mod protocol;
pub mod rng;
pub mod splitter;

pub use embedding::{similarity, Embedding, Label};
pub use error::{Error, Result};
pub use gallery::{Decision, Gallery, GalleryConfig, GalleryEntry, Match, Window};
pub use protocol::{
    aggregate_runs, classify, evaluate, metrics, run_stream, AggregateReport, MetricsReport,
    Outcome, Rates, RunConfig, StreamItem, Tally,
};

/// Version string embedded in every artifact the crate writes.
pub const TOOL_VERSION: &str = concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION"));
