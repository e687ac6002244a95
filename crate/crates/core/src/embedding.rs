//! Face embeddings, identity labels and the similarity score.

use std::borrow::Borrow;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Maximum deviation of an [`Embedding`]'s L2 norm from 1.
pub const NORM_TOLERANCE: f64 = 1e-4;

/// A unit-norm feature vector describing one face image.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding(Vec<f64>);

impl Embedding {
    /// Wraps an already normalized vector, rejecting anything that is not.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        check_components(&values)?;
        let norm = l2_norm(&values);
        if (norm - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::data(format!(
                "embedding norm {norm} is not within {NORM_TOLERANCE} of 1"
            )));
        }
        Ok(Embedding(values))
    }

    /// Scales `values` to unit L2 norm.
    pub fn normalized(mut values: Vec<f64>) -> Result<Self> {
        check_components(&values)?;
        let norm = l2_norm(&values);
        if norm == 0.0 {
            return Err(Error::data("cannot normalize a zero vector"));
        }
        for v in &mut values {
            *v /= norm;
        }
        Ok(Embedding(values))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

fn check_components(values: &[f64]) -> Result<()> {
    if values.is_empty() {
        return Err(Error::data("embedding has no components"));
    }
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::data(format!("embedding component {i} is not finite")));
    }
    Ok(())
}

fn l2_norm(values: &[f64]) -> f64 {
    values.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Inner product of two equal-length slices, accumulated left to right.
#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = 0.0;
    for (x, y) in a.iter().zip(b) {
        acc += x * y;
    }
    acc
}

/// Cosine similarity of two unit embeddings.
pub fn similarity(a: &Embedding, b: &Embedding) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::usage(format!(
            "cannot compare embeddings of dimension {} and {}",
            a.dim(),
            b.dim()
        )));
    }
    Ok(dot(&a.0, &b.0))
}

/// Identity label of a person. Never empty; compared by exact equality.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Label(String);

impl Label {
    pub fn new(value: impl Into<String>) -> Result<Self> {
        let value = value.into();
        if value.is_empty() {
            return Err(Error::data("label must not be empty"));
        }
        Ok(Label(value))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl TryFrom<String> for Label {
    type Error = Error;

    fn try_from(value: String) -> Result<Self> {
        Label::new(value)
    }
}

impl From<Label> for String {
    fn from(label: Label) -> String {
        label.0
    }
}

impl Borrow<str> for Label {
    fn borrow(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}
