//! Registers a handful of hand-made embeddings one at a time and shows how
//! the per-entry thresholds evolve and which probes get accepted.

use openset_eval::{Decision, Embedding, Gallery, GalleryConfig, Label};

fn main() -> openset_eval::Result<()> {
    let stream = [
        ("alice", [1.0, 0.1, 0.0]),
        ("bob", [0.0, 1.0, 0.2]),
        ("alice", [0.95, 0.2, 0.05]),
        ("carol", [0.1, 0.0, 1.0]),
        ("bob", [0.1, 0.9, 0.3]),
        ("alice", [0.9, 0.15, 0.1]),
    ];

    let mut gallery = Gallery::new(GalleryConfig::default())?;
    for (name, raw) in stream {
        let probe = Embedding::normalized(raw.to_vec())?;
        match gallery.recognize(&probe)? {
            Decision::Accepted { predicted, matched } => {
                println!("{name:>6}: accepted as {} (score {:.3})", predicted.as_str(), matched.score)
            }
            Decision::Rejected { best: Some(m) } => println!("{name:>6}: rejected (best score {:.3})", m.score),
            Decision::Rejected { best: None } => println!("{name:>6}: rejected (empty gallery)"),
        }
        gallery.register(probe, Label::new(name)?)?;
    }

    println!("\nthresholds after the stream:");
    for e in gallery.entries() {
        let t = e.threshold.map_or("unset".to_string(), |t| format!("{t:.3}"));
        println!("  #{} {:<6} {t}", e.seq, e.label.as_str());
    }
    Ok(())
}
