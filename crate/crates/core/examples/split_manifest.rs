//! Splits a small manifest both ways and prints the resulting sides.
//!
//! Pass a `image_id<TAB>label` manifest path to split your own data instead.

use openset_eval::splitter::{load_manifest, parse_manifest, split_both, split_unique};

const DEMO: &str = "\
ann_1\tann\nann_2\tann\nann_3\tann
ben_1\tben
cat_1\tcat\ncat_2\tcat
dan_1\tdan
eve_1\teve\neve_2\teve\neve_3\teve\neve_4\teve
fay_1\tfay
";

fn main() -> openset_eval::Result<()> {
    let manifest = match std::env::args().nth(1) {
        Some(path) => load_manifest(path)?,
        None => parse_manifest(DEMO, "demo")?,
    };
    println!("{} images of {} identities", manifest.len(), manifest.identity_count());

    let unique = split_unique(&manifest, 1, 0.3)?;
    let s = unique.summary(&manifest, Some(0.3));
    println!(
        "unique: {} train / {} test images, test fraction {:.3}, {} test identities",
        s.train_images, s.test_images, s.test_fraction, s.test_identities
    );
    println!("  test: {:?}", unique.test);

    let both = split_both(&manifest, 1);
    println!("both: {} train / {} test images", both.train.len(), both.test.len());
    println!("  test: {:?}", both.test);
    Ok(())
}
