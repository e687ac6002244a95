#![allow(dead_code)]

use openset_eval::{Embedding, GalleryConfig, Label, Window};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_unit(rng: &mut impl Rng, dim: usize) -> Embedding {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        if let Ok(e) = Embedding::normalized(v) {
            return e;
        }
    }
}

pub fn label(s: impl std::fmt::Display) -> Label {
    Label::new(s.to_string()).unwrap()
}

/// Plain left-to-right inner product.
pub fn inner(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = 0.0;
    for i in 0..a.len() {
        acc += a[i] * b[i];
    }
    acc
}

fn scope_start(window: Window, len: usize) -> usize {
    match window {
        Window::Unbounded => 0,
        Window::Last(n) => len.saturating_sub(n.get()),
    }
}

/// Thresholds after registering `vectors` in order, recomputed entry by entry:
/// entry `j` takes the scaled maximum over the peers that were in scope when it
/// registered, and over every later registration whose scope contained `j`.
pub fn naive_thresholds(vectors: &[Vec<f64>], cfg: &GalleryConfig) -> Vec<Option<f64>> {
    let n = vectors.len();
    (0..n)
        .map(|j| {
            let mut scores = Vec::new();
            for i in scope_start(cfg.update_window, j)..j {
                scores.push(cfg.sigma * inner(&vectors[j], &vectors[i]));
            }
            for k in j + 1..n {
                if j >= scope_start(cfg.update_window, k) {
                    scores.push(cfg.sigma * inner(&vectors[k], &vectors[j]));
                }
            }
            scores.into_iter().reduce(f64::max)
        })
        .collect()
}

/// Index of the best entry among the last `window` of `gallery`, smallest index on ties.
pub fn naive_best(probe: &[f64], gallery: &[Vec<f64>], window: Window) -> Option<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for (i, g) in gallery.iter().enumerate().skip(scope_start(window, gallery.len())) {
        let s = inner(probe, g);
        match best {
            Some((_, b)) if s <= b => {}
            _ => best = Some((i, s)),
        }
    }
    best
}
