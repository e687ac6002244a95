//! The incremental gallery: enrolled embeddings with adaptive per-entry thresholds.
//!
//! Recognition of a probe is a three step affair: score the probe against the
//! entries in the search scope, take the best entry, and accept only if the
//! score reaches that entry's threshold.
//!
//! Thresholds are learned online. When a face is registered its threshold is
//! `sigma * max S(new, j)` over the update scope (the `W` most recently
//! registered entries), and every entry `j` in that scope raises its own
//! threshold to `sigma * S(new, j)` when that is larger. A lone entry has no
//! peer, so its threshold stays unset and it never accepts.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::num::NonZeroUsize;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::embedding::{dot, Embedding, Label};
use crate::error::{Error, Result};

/// How many of the most recent entries an operation looks at.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "WindowRepr", into = "WindowRepr")]
pub enum Window {
    Last(NonZeroUsize),
    Unbounded,
}

impl Window {
    pub const DEFAULT: Window = Window::Last(match NonZeroUsize::new(100) {
        Some(n) => n,
        None => unreachable!(),
    });

    pub fn last(n: usize) -> Result<Self> {
        NonZeroUsize::new(n)
            .map(Window::Last)
            .ok_or_else(|| Error::usage("window must be at least 1"))
    }

    /// First index of the scope over a collection of `len` entries.
    pub fn start(self, len: usize) -> usize {
        match self {
            Window::Last(n) => len.saturating_sub(n.get()),
            Window::Unbounded => 0,
        }
    }
}

impl Default for Window {
    fn default() -> Self {
        Window::DEFAULT
    }
}

impl FromStr for Window {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "unbounded" | "inf" | "all" => Ok(Window::Unbounded),
            other => {
                let n: usize = other
                    .parse()
                    .map_err(|_| Error::usage(format!("invalid window `{other}`")))?;
                Window::last(n)
            }
        }
    }
}

impl std::fmt::Display for Window {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Window::Last(n) => write!(f, "{n}"),
            Window::Unbounded => f.write_str("unbounded"),
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum WindowRepr {
    Count(usize),
    Word(String),
}

impl TryFrom<WindowRepr> for Window {
    type Error = Error;

    fn try_from(repr: WindowRepr) -> Result<Self> {
        match repr {
            WindowRepr::Count(n) => Window::last(n),
            WindowRepr::Word(w) => w.parse(),
        }
    }
}

impl From<Window> for WindowRepr {
    fn from(w: Window) -> Self {
        match w {
            Window::Last(n) => WindowRepr::Count(n.get()),
            Window::Unbounded => WindowRepr::Word("unbounded".into()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GalleryConfig {
    /// Entries considered when searching for the best match.
    pub search_window: Window,
    /// Entries whose thresholds a registration reads and raises.
    pub update_window: Window,
    /// Scale applied to similarities when they become thresholds.
    pub sigma: f64,
}

impl Default for GalleryConfig {
    fn default() -> Self {
        GalleryConfig {
            search_window: Window::DEFAULT,
            update_window: Window::DEFAULT,
            sigma: 1.0,
        }
    }
}

impl GalleryConfig {
    /// Same window for search and threshold updates.
    pub fn windowed(window: Window, sigma: f64) -> Self {
        GalleryConfig {
            search_window: window,
            update_window: window,
            sigma,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma.is_finite() && self.sigma > 0.0) {
            return Err(Error::usage(format!(
                "sigma must be a positive finite number, got {}",
                self.sigma
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GalleryEntry {
    pub seq: usize,
    pub label: Label,
    pub embedding: Embedding,
    /// `None` until a peer registration defines it.
    pub threshold: Option<f64>,
}

/// Best-scoring entry for a probe.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Match {
    pub index: usize,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Decision {
    Accepted { predicted: Label, matched: Match },
    Rejected { best: Option<Match> },
}

impl Decision {
    pub fn is_accepted(&self) -> bool {
        matches!(self, Decision::Accepted { .. })
    }

    pub fn best(&self) -> Option<Match> {
        match self {
            Decision::Accepted { matched, .. } => Some(*matched),
            Decision::Rejected { best } => *best,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Gallery {
    config: GalleryConfig,
    dim: Option<usize>,
    entries: Vec<GalleryEntry>,
    label_counts: HashMap<Label, usize>,
}

impl Gallery {
    pub fn new(config: GalleryConfig) -> Result<Self> {
        config.validate()?;
        Ok(Gallery {
            config,
            dim: None,
            entries: Vec::new(),
            label_counts: HashMap::new(),
        })
    }

    pub fn config(&self) -> &GalleryConfig {
        &self.config
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Dimension fixed by the first registration.
    pub fn dim(&self) -> Option<usize> {
        self.dim
    }

    pub fn entries(&self) -> &[GalleryEntry] {
        &self.entries
    }

    pub fn entry(&self, seq: usize) -> Option<&GalleryEntry> {
        self.entries.get(seq)
    }

    pub fn contains_label(&self, label: &Label) -> bool {
        self.label_counts.contains_key(label)
    }

    pub fn known_labels(&self) -> impl Iterator<Item = &Label> {
        self.label_counts.keys()
    }

    fn check_dim(&self, emb: &Embedding) -> Result<()> {
        match self.dim {
            Some(d) if d != emb.dim() => Err(Error::Dimension {
                expected: d,
                found: emb.dim(),
                context: "gallery".into(),
            }),
            _ => Ok(()),
        }
    }

    /// Best entry within the search scope; ties go to the smaller sequence number.
    pub fn query(&self, probe: &Embedding) -> Result<Option<Match>> {
        self.check_dim(probe)?;
        let start = self.config.search_window.start(self.entries.len());
        let mut best: Option<Match> = None;
        for entry in &self.entries[start..] {
            let score = dot(probe.as_slice(), entry.embedding.as_slice());
            if best.is_none_or(|b| score > b.score) {
                best = Some(Match {
                    index: entry.seq,
                    score,
                });
            }
        }
        Ok(best)
    }

    pub fn decide(&self, matched: Option<Match>) -> Decision {
        let Some(m) = matched else {
            return Decision::Rejected { best: None };
        };
        let entry = &self.entries[m.index];
        match entry.threshold {
            Some(t) if m.score >= t => Decision::Accepted {
                predicted: entry.label.clone(),
                matched: m,
            },
            _ => Decision::Rejected { best: Some(m) },
        }
    }

    /// Query followed by decide. Does not modify the gallery.
    pub fn recognize(&self, probe: &Embedding) -> Result<Decision> {
        let m = self.query(probe)?;
        Ok(self.decide(m))
    }

    /// Enrolls `embedding` under `label` and updates thresholds in the update scope.
    /// Returns the new entry's sequence number.
    pub fn register(&mut self, embedding: Embedding, label: Label) -> Result<usize> {
        self.check_dim(&embedding)?;
        let sigma = self.config.sigma;
        let start = self.config.update_window.start(self.entries.len());
        let mut own: Option<f64> = None;
        for entry in &mut self.entries[start..] {
            let scaled = sigma * dot(embedding.as_slice(), entry.embedding.as_slice());
            own = Some(own.map_or(scaled, |t| t.max(scaled)));
            entry.threshold = Some(entry.threshold.map_or(scaled, |t| t.max(scaled)));
        }
        let seq = self.entries.len();
        self.dim = Some(embedding.dim());
        *self.label_counts.entry(label.clone()).or_insert(0) += 1;
        self.entries.push(GalleryEntry {
            seq,
            label,
            embedding,
            threshold: own,
        });
        Ok(seq)
    }

    /// Versioned plain-text dump of the gallery state for debugging.
    pub fn dump(&self) -> String {
        let mut out = String::from("# gallery-dump v1\n");
        let _ = writeln!(
            out,
            "# entries={} sigma={} search_window={} update_window={}",
            self.entries.len(),
            self.config.sigma,
            self.config.search_window,
            self.config.update_window
        );
        for e in &self.entries {
            let threshold = e.threshold.map_or_else(|| "unset".to_string(), |t| format!("{t:.6}"));
            let head: Vec<String> = e
                .embedding
                .as_slice()
                .iter()
                .take(4)
                .map(|v| format!("{v:.6}"))
                .collect();
            let _ = writeln!(out, "{}\t{}\t{}\t{}", e.seq, e.label, threshold, head.join(" "));
        }
        out
    }
}
