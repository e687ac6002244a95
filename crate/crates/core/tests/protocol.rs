mod common;

use common::{label, random_unit, rng};
use openset_eval::io::{gen_synthetic, ImagesPerIdentity, SyntheticSpec};
use openset_eval::{metrics, run_stream, GalleryConfig, StreamItem, Window};
use proptest::prelude::*;
use rand::Rng;

fn synthetic_items(identities: usize, per: usize, dim: usize, noise: f64, seed: u64) -> Vec<StreamItem> {
    let spec = SyntheticSpec {
        identities,
        images: ImagesPerIdentity::Fixed(per),
        dim,
        within_noise: noise,
        seed,
    };
    gen_synthetic(&spec).unwrap().iter().map(|r| r.to_stream_item().unwrap()).collect()
}

fn random_items(seed: u64, n: usize, labels: usize, dim: usize) -> Vec<StreamItem> {
    let mut r = rng(seed);
    (0..n)
        .map(|i| StreamItem {
            id: format!("item{i}"),
            embedding: random_unit(&mut r, dim),
            true_label: label(r.random_range(0..labels)),
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn tallies_conserve_items_and_rates_agree(seed in any::<u64>(), n in 0usize..120, labels in 1usize..30, shuffle: bool) {
        let items = random_items(seed, n, labels, 6);
        let run = run_stream(&items, GalleryConfig::windowed(Window::last(20).unwrap(), 0.9), shuffle, seed).unwrap();
        let t = run.tally;
        prop_assert_eq!(t.ta + t.fr + t.ie + t.fa + t.tr, n as u64);
        prop_assert_eq!(run.log.len(), n);
        let m = metrics(&t);
        if let (Some(acc), Some(tar), Some(trr)) = (m.acc, m.tar, m.trr) {
            let via_rates = (tar * t.accepted() as f64 + trr * t.rejected() as f64) / n as f64;
            prop_assert!((acc - via_rates).abs() <= 1e-9);
        }
    }

    #[test]
    fn singleton_labels_never_accept_correctly(seed in any::<u64>(), n in 1usize..80, sigma in 0.1f64..2.0) {
        let mut items = random_items(seed, n, 1, 3);
        for (i, item) in items.iter_mut().enumerate() {
            item.true_label = label(format!("only{i}"));
        }
        let t = run_stream(&items, GalleryConfig::windowed(Window::Unbounded, sigma), true, seed).unwrap().tally;
        prop_assert_eq!((t.ta, t.ie, t.fr), (0, 0, 0));
        prop_assert_eq!(t.accepted(), t.fa);
        prop_assert_eq!(t.rejected(), t.tr);
    }
}

#[test]
fn runs_are_bitwise_reproducible() {
    let items = synthetic_items(20, 5, 32, 0.2, 1);
    let cfg = GalleryConfig::default();
    let a = run_stream(&items, cfg, true, 99).unwrap();
    let b = run_stream(&items, cfg, true, 99).unwrap();
    assert_eq!(a, b);
    let c = run_stream(&items, cfg, true, 100).unwrap();
    assert_ne!(a.log.iter().map(|l| &l.id).collect::<Vec<_>>(), c.log.iter().map(|l| &l.id).collect::<Vec<_>>());
}

#[test]
fn noiseless_identities_are_recognized_at_least_as_well() {
    let seeds = 0..24u64;
    let mut clean = 0.0;
    let mut noisy = 0.0;
    for seed in seeds.clone() {
        for (noise, total) in [(0.0, &mut clean), (0.08, &mut noisy)] {
            let items = synthetic_items(15, 4, 64, noise, seed);
            let run = run_stream(&items, GalleryConfig::default(), true, seed).unwrap();
            *total += metrics(&run.tally).acc.unwrap();
        }
    }
    let n = seeds.count() as f64;
    assert!(clean / n >= noisy / n, "clean {} < noisy {}", clean / n, noisy / n);
}

#[test]
fn noiseless_within_identity_similarity_is_one() {
    let items = synthetic_items(3, 4, 16, 0.0, 5);
    for pair in items.chunks(4) {
        for item in pair {
            let s = openset_eval::similarity(&pair[0].embedding, &item.embedding).unwrap();
            assert_eq!(s, openset_eval::similarity(&pair[0].embedding, &pair[0].embedding).unwrap());
            assert!((s - 1.0).abs() < 1e-12);
        }
    }
}
