//! Sampling of augmentation chains.
//!
//! A plan holds `n_chains` chains (24 by default). Chain `k` is applied to
//! every source image to produce its `k`-th augmented copy; in combined mode it
//! is applied to the `k`-th attribute-edited image instead. Each chain is
//! assembled in a fixed order from independent draws:
//!
//! 1. horizontal flip with probability `hflip_p`;
//! 2. one photometric op (color jitter, CLAHE, noise, blur, downscale) with
//!    probability `photometric_p`, picked by weight;
//! 3. one geometric op (optical or grid distortion) with probability `geometric_p`;
//! 4. a black occlusion with probability `occlusion_p`, covering a random
//!    fraction of the policy frame.

use std::fs;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::transforms::TransformSpec;
use crate::error::{Error, Result};
use crate::rng::{RngKey, StreamRng};

pub const DEFAULT_CHAINS: usize = 24;
pub const PLAN_VERSION: u32 = 1;

/// Closed interval for a sampled parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Span {
    pub min: f64,
    pub max: f64,
}

impl Span {
    pub const fn new(min: f64, max: f64) -> Self {
        Span { min, max }
    }

    fn sample(&self, rng: &mut StreamRng) -> f64 {
        if self.max > self.min {
            rng.random_range(self.min..=self.max)
        } else {
            self.min
        }
    }

    fn validate(&self, name: &str) -> Result<()> {
        if self.min.is_finite() && self.max.is_finite() && self.min <= self.max {
            Ok(())
        } else {
            Err(Error::usage(format!("invalid range for {name}: {}..{}", self.min, self.max)))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhotometricWeights {
    pub color_jitter: f64,
    pub clahe: f64,
    pub gauss_noise: f64,
    pub gaussian_blur: f64,
    pub downscale: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeometricWeights {
    pub optical_distortion: f64,
    pub grid_distortion: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Policy {
    /// Image size used to place occlusion rectangles; larger images get the
    /// rectangle at the same pixel position, smaller ones have it clipped.
    pub frame_width: u32,
    pub frame_height: u32,

    pub hflip_p: f64,
    pub photometric_p: f64,
    pub geometric_p: f64,
    pub occlusion_p: f64,

    pub photometric_weights: PhotometricWeights,
    pub geometric_weights: GeometricWeights,

    pub brightness: Span,
    pub contrast: Span,
    pub saturation: Span,
    pub clahe_clip: Span,
    pub clahe_tiles: u32,
    pub noise_std: Span,
    pub blur_sigma: Span,
    pub downscale_factor: Span,
    pub optical_k: Span,
    pub grid_cells: u32,
    pub grid_limit: Span,
    /// Fraction of the frame area covered by an occlusion.
    pub occlusion_area: Span,
    /// Width / height ratio of an occlusion.
    pub occlusion_aspect: Span,
}

impl Default for Policy {
    fn default() -> Self {
        Policy {
            frame_width: 250,
            frame_height: 250,
            hflip_p: 0.5,
            photometric_p: 1.0,
            geometric_p: 0.5,
            occlusion_p: 0.3,
            photometric_weights: PhotometricWeights {
                color_jitter: 1.0,
                clahe: 1.0,
                gauss_noise: 1.0,
                gaussian_blur: 1.0,
                downscale: 1.0,
            },
            geometric_weights: GeometricWeights {
                optical_distortion: 1.0,
                grid_distortion: 1.0,
            },
            brightness: Span::new(0.7, 1.3),
            contrast: Span::new(0.7, 1.3),
            saturation: Span::new(0.7, 1.3),
            clahe_clip: Span::new(2.0, 2.0),
            clahe_tiles: 8,
            noise_std: Span::new(5.0, 25.0),
            blur_sigma: Span::new(0.5, 2.0),
            downscale_factor: Span::new(0.25, 0.75),
            optical_k: Span::new(-0.3, 0.3),
            grid_cells: 5,
            grid_limit: Span::new(0.05, 0.3),
            occlusion_area: Span::new(0.02, 0.2),
            occlusion_aspect: Span::new(0.5, 2.0),
        }
    }
}

fn probability(name: &str, p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::usage(format!("{name} must be a probability, got {p}")))
    }
}

fn weights_ok(name: &str, w: &[f64]) -> Result<()> {
    if w.iter().all(|v| v.is_finite() && *v >= 0.0) {
        Ok(())
    } else {
        Err(Error::usage(format!("{name} weights must be non-negative")))
    }
}

impl Policy {
    /// Policy whose chains are all exactly `[HFlip]`.
    pub fn flip_only() -> Self {
        Policy {
            hflip_p: 1.0,
            photometric_p: 0.0,
            geometric_p: 0.0,
            occlusion_p: 0.0,
            ..Policy::default()
        }
    }

    /// Policy whose chains are all a neutral color jitter, i.e. identity.
    pub fn neutral() -> Self {
        let mut p = Policy {
            hflip_p: 0.0,
            photometric_p: 1.0,
            geometric_p: 0.0,
            occlusion_p: 0.0,
            brightness: Span::new(1.0, 1.0),
            contrast: Span::new(1.0, 1.0),
            saturation: Span::new(1.0, 1.0),
            ..Policy::default()
        };
        p.photometric_weights = PhotometricWeights {
            color_jitter: 1.0,
            clahe: 0.0,
            gauss_noise: 0.0,
            gaussian_blur: 0.0,
            downscale: 0.0,
        };
        p
    }

    fn photometric_weight_array(&self) -> [f64; 5] {
        let w = &self.photometric_weights;
        [w.color_jitter, w.clahe, w.gauss_noise, w.gaussian_blur, w.downscale]
    }

    fn geometric_weight_array(&self) -> [f64; 2] {
        let w = &self.geometric_weights;
        [w.optical_distortion, w.grid_distortion]
    }

    pub fn validate(&self) -> Result<()> {
        if self.frame_width == 0 || self.frame_height == 0 {
            return Err(Error::usage("policy frame must be non-empty"));
        }
        probability("hflip_p", self.hflip_p)?;
        probability("photometric_p", self.photometric_p)?;
        probability("geometric_p", self.geometric_p)?;
        probability("occlusion_p", self.occlusion_p)?;
        let pw = self.photometric_weight_array();
        let gw = self.geometric_weight_array();
        weights_ok("photometric", &pw)?;
        weights_ok("geometric", &gw)?;
        if self.photometric_p > 0.0 && pw.iter().sum::<f64>() <= 0.0 {
            return Err(Error::usage("photometric ops enabled but all weights are zero"));
        }
        if self.geometric_p > 0.0 && gw.iter().sum::<f64>() <= 0.0 {
            return Err(Error::usage("geometric ops enabled but all weights are zero"));
        }
        if self.hflip_p == 0.0 && self.photometric_p == 0.0 && self.geometric_p == 0.0 && self.occlusion_p == 0.0 {
            return Err(Error::usage("policy can never produce a transform"));
        }
        for (name, span) in [
            ("brightness", self.brightness),
            ("contrast", self.contrast),
            ("saturation", self.saturation),
            ("clahe_clip", self.clahe_clip),
            ("noise_std", self.noise_std),
            ("blur_sigma", self.blur_sigma),
            ("downscale_factor", self.downscale_factor),
            ("optical_k", self.optical_k),
            ("grid_limit", self.grid_limit),
            ("occlusion_area", self.occlusion_area),
            ("occlusion_aspect", self.occlusion_aspect),
        ] {
            span.validate(name)?;
        }
        // every value a span can produce must make a valid transform
        let probes = [
            TransformSpec::ColorJitter {
                brightness: self.brightness.min,
                contrast: self.contrast.min,
                saturation: self.saturation.min,
            },
            TransformSpec::Clahe { clip_limit: self.clahe_clip.min, tiles: self.clahe_tiles },
            TransformSpec::GaussNoise { std: self.noise_std.min },
            TransformSpec::GaussianBlur { sigma: self.blur_sigma.min },
            TransformSpec::Downscale { factor: self.downscale_factor.min },
            TransformSpec::Downscale { factor: self.downscale_factor.max },
            TransformSpec::GridDistortion { cells: self.grid_cells, limit: self.grid_limit.min },
            TransformSpec::GridDistortion { cells: self.grid_cells, limit: self.grid_limit.max },
        ];
        for p in &probes {
            p.validate()?;
        }
        if !(self.occlusion_area.min > 0.0 && self.occlusion_area.max <= 1.0 && self.occlusion_aspect.min > 0.0) {
            return Err(Error::usage("occlusion area must lie in (0, 1] and aspect must be positive"));
        }
        Ok(())
    }

    fn pick(weights: &[f64], rng: &mut StreamRng) -> usize {
        let total: f64 = weights.iter().sum();
        let mut u = rng.random::<f64>() * total;
        for (i, w) in weights.iter().enumerate() {
            if *w > 0.0 {
                if u < *w {
                    return i;
                }
                u -= w;
            }
        }
        weights.iter().rposition(|w| *w > 0.0).unwrap_or(0)
    }

    fn draw_chain(&self, rng: &mut StreamRng) -> Vec<TransformSpec> {
        let mut chain = Vec::new();
        if rng.random::<f64>() < self.hflip_p {
            chain.push(TransformSpec::HFlip);
        }
        if rng.random::<f64>() < self.photometric_p {
            let op = match Self::pick(&self.photometric_weight_array(), rng) {
                0 => TransformSpec::ColorJitter {
                    brightness: self.brightness.sample(rng),
                    contrast: self.contrast.sample(rng),
                    saturation: self.saturation.sample(rng),
                },
                1 => TransformSpec::Clahe {
                    clip_limit: self.clahe_clip.sample(rng),
                    tiles: self.clahe_tiles,
                },
                2 => TransformSpec::GaussNoise { std: self.noise_std.sample(rng) },
                3 => TransformSpec::GaussianBlur { sigma: self.blur_sigma.sample(rng) },
                _ => TransformSpec::Downscale { factor: self.downscale_factor.sample(rng) },
            };
            chain.push(op);
        }
        if rng.random::<f64>() < self.geometric_p {
            let op = match Self::pick(&self.geometric_weight_array(), rng) {
                0 => TransformSpec::OpticalDistortion { k: self.optical_k.sample(rng) },
                _ => TransformSpec::GridDistortion {
                    cells: self.grid_cells,
                    limit: self.grid_limit.sample(rng),
                },
            };
            chain.push(op);
        }
        if rng.random::<f64>() < self.occlusion_p {
            let (fw, fh) = (f64::from(self.frame_width), f64::from(self.frame_height));
            let area = self.occlusion_area.sample(rng) * fw * fh;
            let aspect = self.occlusion_aspect.sample(rng);
            let w = ((area * aspect).sqrt().round() as u32).clamp(1, self.frame_width);
            let h = ((area / aspect).sqrt().round() as u32).clamp(1, self.frame_height);
            let x = rng.random_range(0..=self.frame_width - w);
            let y = rng.random_range(0..=self.frame_height - h);
            chain.push(TransformSpec::Occlusion { x, y, w, h });
        }
        chain
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AugmentPlan {
    pub version: u32,
    pub tool: String,
    pub seed: u64,
    pub policy: Policy,
    pub chains: Vec<Vec<TransformSpec>>,
}

/// Retries allowed for a chain that came out empty before giving up.
const EMPTY_CHAIN_RETRIES: usize = 64;

pub fn build_plan(seed: u64, n_chains: usize, policy: &Policy) -> Result<AugmentPlan> {
    if n_chains < 1 {
        return Err(Error::usage("a plan needs at least one chain"));
    }
    policy.validate()?;
    let root = RngKey::root(seed).child_str("plan");
    let mut chains = Vec::with_capacity(n_chains);
    for k in 0..n_chains {
        let mut rng = root.child(k as u64).rng();
        let chain = (0..EMPTY_CHAIN_RETRIES)
            .map(|_| policy.draw_chain(&mut rng))
            .find(|c| !c.is_empty())
            .ok_or_else(|| Error::usage("policy keeps producing empty chains"))?;
        chains.push(chain);
    }
    Ok(AugmentPlan {
        version: PLAN_VERSION,
        tool: crate::TOOL_VERSION.to_string(),
        seed,
        policy: policy.clone(),
        chains,
    })
}

impl AugmentPlan {
    /// Plan with explicitly given chains.
    pub fn from_chains(seed: u64, chains: Vec<Vec<TransformSpec>>) -> Result<Self> {
        let plan = AugmentPlan {
            version: PLAN_VERSION,
            tool: crate::TOOL_VERSION.to_string(),
            seed,
            policy: Policy::default(),
            chains,
        };
        plan.validate()?;
        Ok(plan)
    }

    pub fn validate(&self) -> Result<()> {
        if self.version != PLAN_VERSION {
            return Err(Error::SchemaVersion {
                what: "augmentation plan".into(),
                found: u64::from(self.version),
                expected: PLAN_VERSION,
            });
        }
        if self.chains.is_empty() {
            return Err(Error::usage("plan has no chains"));
        }
        for (k, chain) in self.chains.iter().enumerate() {
            if chain.is_empty() {
                return Err(Error::usage(format!("chain {k} is empty")));
            }
            for t in chain {
                t.validate()?;
            }
        }
        Ok(())
    }

    /// Random stream for applying chain `k` to the image identified by `image_id`.
    pub fn apply_key(&self, image_id: &str, k: usize) -> RngKey {
        RngKey::root(self.seed).child_str("apply").child_str(image_id).child(k as u64)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let version = serde_json::from_str::<serde_json::Value>(&text)?
            .get("version")
            .and_then(|v| v.as_u64());
        if version != Some(u64::from(PLAN_VERSION)) {
            return Err(Error::SchemaVersion {
                what: path.display().to_string(),
                found: version.unwrap_or(0),
                expected: PLAN_VERSION,
            });
        }
        let plan: AugmentPlan = serde_json::from_str(&text)?;
        plan.validate()?;
        Ok(plan)
    }
}
