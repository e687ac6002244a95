use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::EmbeddingRecord;
use crate::embedding::{Embedding, Label};
use crate::error::{Error, Result};
use crate::rng::RngKey;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ImagesPerIdentity {
    Fixed(usize),
    PerIdentity(Vec<usize>),
}

/// Clustered synthetic embeddings: one random unit center per identity and
/// isotropic Gaussian noise around it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub identities: usize,
    pub images: ImagesPerIdentity,
    pub dim: usize,
    /// Per-component standard deviation of the noise added to the center.
    pub within_noise: f64,
    pub seed: u64,
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        if self.identities == 0 {
            return Err(Error::usage("need at least one identity"));
        }
        if self.dim == 0 {
            return Err(Error::usage("dimension must be positive"));
        }
        if !(self.within_noise.is_finite() && self.within_noise >= 0.0) {
            return Err(Error::usage("within-identity noise must be finite and non-negative"));
        }
        match &self.images {
            ImagesPerIdentity::Fixed(0) => Err(Error::usage("need at least one image per identity")),
            ImagesPerIdentity::PerIdentity(v) if v.len() != self.identities => Err(Error::usage(format!(
                "{} per-identity image counts given for {} identities",
                v.len(),
                self.identities
            ))),
            ImagesPerIdentity::PerIdentity(v) if v.contains(&0) => {
                Err(Error::usage("need at least one image per identity"))
            }
            _ => Ok(()),
        }
    }

    fn images_for(&self, k: usize) -> usize {
        match &self.images {
            ImagesPerIdentity::Fixed(n) => *n,
            ImagesPerIdentity::PerIdentity(v) => v[k],
        }
    }
}

/// Records are ordered by identity, then image; labels are `id_<k>` and ids `id_<k>_<j>`.
pub fn gen_synthetic(spec: &SyntheticSpec) -> Result<Vec<EmbeddingRecord>> {
    spec.validate()?;
    let root = RngKey::root(spec.seed);
    let mut out = Vec::new();
    for k in 0..spec.identities {
        let mut rng = root.child_str("center").child(k as u64).rng();
        let raw: Vec<f64> = (0..spec.dim).map(|_| StandardNormal.sample(&mut rng)).collect();
        let center = Embedding::normalized(raw)?;
        let label = Label::new(format!("id_{k}"))?;
        for j in 0..spec.images_for(k) {
            let mut rng = root.child_str("noise").child(k as u64).child(j as u64).rng();
            let v: Vec<f64> = center
                .as_slice()
                .iter()
                .map(|c| {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    c + spec.within_noise * z
                })
                .collect();
            let e = Embedding::normalized(v)?;
            out.push(EmbeddingRecord {
                id: format!("id_{k}_{j}"),
                label: label.clone(),
                vector: e.into_vec(),
            });
        }
    }
    Ok(out)
}
