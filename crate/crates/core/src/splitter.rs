//! Train/test splits of a labeled image manifest.
//!
//! * `Unique`: whole identities go to test until the test side holds at
//!   least the requested fraction of images, so no person is on both sides.
//! * `Both`: every identity with two or more images contributes exactly one
//!   image to test; single-image identities stay in train.

use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::embedding::Label;
use crate::error::{Error, Result};
use crate::rng::RngKey;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestRecord {
    pub image_id: String,
    pub label: Label,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Manifest {
    records: Vec<ManifestRecord>,
}

impl Manifest {
    pub fn new(records: Vec<ManifestRecord>) -> Result<Self> {
        if records.is_empty() {
            return Err(Error::data("manifest is empty"));
        }
        let mut seen = HashSet::with_capacity(records.len());
        for r in &records {
            if !seen.insert(r.image_id.as_str()) {
                return Err(Error::data(format!("duplicate image id `{}`", r.image_id)));
            }
        }
        Ok(Manifest { records })
    }

    pub fn records(&self) -> &[ManifestRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Record indices per identity, identities in label order.
    pub fn identities(&self) -> BTreeMap<&Label, Vec<usize>> {
        let mut out: BTreeMap<&Label, Vec<usize>> = BTreeMap::new();
        for (i, r) in self.records.iter().enumerate() {
            out.entry(&r.label).or_default().push(i);
        }
        out
    }

    pub fn identity_count(&self) -> usize {
        self.identities().len()
    }
}

/// Parses `image_id<TAB>label` lines. Blank lines and `#` comments are skipped.
pub fn parse_manifest(text: &str, source_name: &str) -> Result<Manifest> {
    let mut records = Vec::new();
    let mut lines_of: BTreeMap<String, usize> = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let parse_err = |message: String| Error::Parse {
            source_name: source_name.to_string(),
            line: line_no,
            message,
        };
        let mut fields = line.split('\t');
        let (Some(id), Some(label), None) = (fields.next(), fields.next(), fields.next()) else {
            return Err(parse_err("expected `image_id<TAB>label`".into()));
        };
        if id.is_empty() {
            return Err(parse_err("empty image id".into()));
        }
        let label = Label::new(label).map_err(|_| parse_err("empty label".into()))?;
        if let Some(first) = lines_of.insert(id.to_string(), line_no) {
            return Err(parse_err(format!(
                "duplicate image id `{id}` (first seen on line {first})"
            )));
        }
        records.push(ManifestRecord {
            image_id: id.to_string(),
            label,
        });
    }
    if records.is_empty() {
        return Err(Error::data(format!("{source_name}: manifest is empty")));
    }
    Manifest::new(records)
}

pub fn load_manifest(path: impl AsRef<Path>) -> Result<Manifest> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_manifest(&text, &path.display().to_string())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitKind {
    Unique,
    Both,
}

impl std::str::FromStr for SplitKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "unique" => Ok(SplitKind::Unique),
            "both" => Ok(SplitKind::Both),
            other => Err(Error::usage(format!("unknown split kind `{other}`"))),
        }
    }
}

/// Image ids on each side, both in manifest order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitResult {
    pub kind: SplitKind,
    pub seed: u64,
    pub train: Vec<String>,
    pub test: Vec<String>,
}

fn collect(m: &Manifest, in_test: &[bool]) -> (Vec<String>, Vec<String>) {
    let mut train = Vec::new();
    let mut test = Vec::new();
    for (r, &t) in m.records.iter().zip(in_test) {
        if t {
            test.push(r.image_id.clone());
        } else {
            train.push(r.image_id.clone());
        }
    }
    (train, test)
}

pub fn split_unique(m: &Manifest, seed: u64, test_ratio: f64) -> Result<SplitResult> {
    if !(test_ratio > 0.0 && test_ratio < 1.0) {
        return Err(Error::usage(format!(
            "test ratio must lie in (0, 1), got {test_ratio}"
        )));
    }
    let identities = m.identities();
    if identities.len() < 2 {
        return Err(Error::data(
            "a unique split needs at least two identities to fill both sides",
        ));
    }
    let mut groups: Vec<&Vec<usize>> = identities.values().collect();
    let mut rng = RngKey::root(seed).child_str("split-unique").rng();
    groups.shuffle(&mut rng);

    let target = test_ratio * m.len() as f64;
    let mut in_test = vec![false; m.len()];
    let mut taken = 0usize;
    // the last identity in shuffled order always stays in train
    for group in &groups[..groups.len() - 1] {
        if taken as f64 >= target {
            break;
        }
        for &i in group.iter() {
            in_test[i] = true;
        }
        taken += group.len();
    }
    let (train, test) = collect(m, &in_test);
    Ok(SplitResult {
        kind: SplitKind::Unique,
        seed,
        train,
        test,
    })
}

pub fn split_both(m: &Manifest, seed: u64) -> SplitResult {
    let root = RngKey::root(seed).child_str("split-both");
    let mut in_test = vec![false; m.len()];
    for (label, group) in m.identities() {
        if group.len() < 2 {
            continue;
        }
        let mut rng = root.child_str(label.as_str()).rng();
        in_test[group[rng.random_range(0..group.len())]] = true;
    }
    let (train, test) = collect(m, &in_test);
    SplitResult {
        kind: SplitKind::Both,
        seed,
        train,
        test,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SideCounts {
    pub train: usize,
    pub test: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitSummary {
    pub tool: String,
    pub kind: SplitKind,
    pub seed: u64,
    pub target_ratio: Option<f64>,
    pub images: usize,
    pub identities: usize,
    pub train_images: usize,
    pub test_images: usize,
    pub test_fraction: f64,
    pub train_identities: usize,
    pub test_identities: usize,
    pub per_identity: BTreeMap<String, SideCounts>,
}

impl SplitResult {
    pub fn summary(&self, m: &Manifest, target_ratio: Option<f64>) -> SplitSummary {
        let test: HashSet<&str> = self.test.iter().map(String::as_str).collect();
        let mut per_identity: BTreeMap<String, SideCounts> = BTreeMap::new();
        for r in m.records() {
            let c = per_identity
                .entry(r.label.to_string())
                .or_insert(SideCounts { train: 0, test: 0 });
            if test.contains(r.image_id.as_str()) {
                c.test += 1;
            } else {
                c.train += 1;
            }
        }
        SplitSummary {
            tool: crate::TOOL_VERSION.to_string(),
            kind: self.kind,
            seed: self.seed,
            target_ratio,
            images: m.len(),
            identities: per_identity.len(),
            train_images: self.train.len(),
            test_images: self.test.len(),
            test_fraction: self.test.len() as f64 / m.len() as f64,
            train_identities: per_identity.values().filter(|c| c.train > 0).count(),
            test_identities: per_identity.values().filter(|c| c.test > 0).count(),
            per_identity,
        }
    }

    /// Writes `train.txt`, `test.txt` and `summary.json` into `out_dir`.
    pub fn write(&self, m: &Manifest, target_ratio: Option<f64>, out_dir: &Path) -> Result<SplitSummary> {
        fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
        let summary = self.summary(m, target_ratio);
        let header = format!(
            "# {} split kind={} seed={} ratio={}\n",
            crate::TOOL_VERSION,
            serde_json::to_string(&self.kind)?.trim_matches('"'),
            self.seed,
            target_ratio.map_or_else(|| "-".to_string(), |r| r.to_string()),
        );
        for (name, ids) in [("train.txt", &self.train), ("test.txt", &self.test)] {
            let mut body = header.clone();
            for id in ids {
                let _ = writeln!(body, "{id}");
            }
            let path = out_dir.join(name);
            fs::write(&path, body).map_err(|e| Error::io(&path, e))?;
        }
        let path = out_dir.join("summary.json");
        fs::write(&path, serde_json::to_string_pretty(&summary)? + "\n")
            .map_err(|e| Error::io(&path, e))?;
        Ok(summary)
    }
}

/// Reads an id list as written by [`SplitResult::write`]: one id per line, `#` comments.
pub fn load_id_list(path: impl AsRef<Path>) -> Result<Vec<String>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_string)
        .collect())
}
