use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use openset_eval::augment::RasterImage;
use openset_eval::io::{load_embeddings, read_aggregate, read_report};
use serde_json::Value;

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_openset-eval")).args(args).output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn ok(out: Output) -> Output {
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
    out
}

#[test]
fn split_both_reports_per_identity_counts() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = dir.path().join("manifest.tsv");
    fs::write(&manifest, "a1\talice\na2\talice\na3\talice\nb1\tbob\nc1\tcarol\nc2\tcarol\n").unwrap();
    let out = dir.path().join("split");
    ok(bin(&["split", p(&manifest), "--kind", "both", "--seed", "3", "--out", p(&out)]));
    let summary: Value = serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    let per = &summary["per_identity"];
    assert_eq!(per["alice"]["test"], 1);
    assert_eq!(per["alice"]["train"], 2);
    assert_eq!(per["bob"]["test"], 0);
    assert_eq!(per["carol"]["test"], 1);
    let test = fs::read_to_string(out.join("test.txt")).unwrap();
    assert!(test.starts_with("# openset-eval"));
    assert_eq!(test.lines().filter(|l| !l.starts_with('#')).count(), 2);
}

#[test]
fn missing_manifest_names_path() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin(&["split", "/nonexistent/manifest.tsv", "--out", p(dir.path())]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("/nonexistent/manifest.tsv"));
}

#[test]
fn bad_flags_are_usage_errors() {
    assert_eq!(code(&bin(&["eval", "x.jsonl", "--window", "0", "--out", "o"])), 1);
    assert_eq!(code(&bin(&["eval", "x.jsonl", "--runs", "0", "--out", "o"])), 1);
    assert_eq!(code(&bin(&["frobnicate"])), 1);
    assert_eq!(code(&bin(&["--version"])), 0);
}

#[test]
fn synth_writes_requested_records() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("emb.jsonl");
    ok(bin(&["synth", "--identities", "5", "--per", "3", "--dim", "16", "--out", p(&path)]));
    assert_eq!(load_embeddings(&path, true).unwrap().len(), 15);
    let text = fs::read_to_string(&path).unwrap();
    assert!(text.starts_with("# {"), "config header missing");

    let bin_path = dir.path().join("emb.bin");
    ok(bin(&["synth", "--identities", "2", "--per", "1,4", "--dim", "8", "--binary", "--out", p(&bin_path)]));
    assert_eq!(load_embeddings(&bin_path, true).unwrap().len(), 5);
}

#[test]
fn eval_writes_runs_and_aggregate() {
    let dir = tempfile::tempdir().unwrap();
    let emb = dir.path().join("emb.jsonl");
    ok(bin(&["synth", "--identities", "6", "--per", "3", "--dim", "32", "--noise", "0", "--out", p(&emb)]));
    let out = dir.path().join("eval");
    ok(bin(&["eval", p(&emb), "--runs", "10", "--seed", "5", "--no-shuffle", "--log", "--out", p(&out)]));
    let runs: Vec<_> = (0..10).map(|i| read_report(out.join(format!("run_{i:02}.json"))).unwrap()).collect();
    let agg = read_aggregate(out.join("aggregate.json")).unwrap();
    assert_eq!(agg.runs, 10);
    assert!(runs.iter().all(|r| r.rates == runs[0].rates));
    assert_eq!(agg.mean.acc, runs[0].rates.acc);
    assert_eq!(runs[3].run_seed, 5 ^ 3);
    assert!(out.join("run_09.log.jsonl").exists());
    assert_eq!(fs::read_dir(&out).unwrap().count(), 10 + 10 + 1 + 1);
}

#[test]
fn eval_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let emb = dir.path().join("emb.jsonl");
    ok(bin(&["synth", "--identities", "10", "--per", "4", "--dim", "24", "--noise", "0.3", "--out", p(&emb)]));
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        ok(bin(&["eval", p(&emb), "--runs", "4", "--seed", "11", "--out", p(out)]));
    }
    for name in ["run_00.json", "run_03.json", "aggregate.json"] {
        assert_eq!(fs::read(a.join(name)).unwrap(), fs::read(b.join(name)).unwrap(), "{name}");
    }
}

#[test]
fn eval_lists_missing_test_ids() {
    let dir = tempfile::tempdir().unwrap();
    let emb = dir.path().join("emb.jsonl");
    ok(bin(&["synth", "--identities", "2", "--per", "2", "--dim", "4", "--out", p(&emb)]));
    let ids = dir.path().join("test.txt");
    fs::write(&ids, "# ids\nid_0_0\nghost_1\nid_1_1\nghost_2\n").unwrap();
    let out = bin(&["eval", p(&emb), "--test-ids", p(&ids), "--out", p(&dir.path().join("o"))]);
    assert_eq!(code(&out), 2);
    let err = stderr(&out);
    assert!(err.contains("ghost_1") && err.contains("ghost_2"), "{err}");
    assert!(!err.contains("id_0_0"));
}

#[test]
fn aggregate_command_reads_run_reports() {
    let dir = tempfile::tempdir().unwrap();
    let emb = dir.path().join("emb.jsonl");
    ok(bin(&["synth", "--identities", "8", "--per", "3", "--dim", "16", "--noise", "0.2", "--out", p(&emb)]));
    let out = dir.path().join("eval");
    ok(bin(&["eval", p(&emb), "--runs", "3", "--out", p(&out)]));
    let agg_path = dir.path().join("again.json");
    let reports: Vec<String> = (0..3).map(|i| out.join(format!("run_{i:02}.json")).display().to_string()).collect();
    let mut args = vec!["aggregate"];
    args.extend(reports.iter().map(String::as_str));
    args.extend(["--out", p(&agg_path)]);
    ok(bin(&args));
    assert_eq!(read_aggregate(&agg_path).unwrap(), read_aggregate(out.join("aggregate.json")).unwrap());
}

#[test]
fn plan_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.json"), dir.path().join("b.json"));
    let attrs = dir.path().join("attrs.json");
    ok(bin(&["plan", "--seed", "7", "--out", p(&a), "--attributes", p(&attrs)]));
    ok(bin(&["plan", "--seed", "7", "--out", p(&b)]));
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    let attrs: Value = serde_json::from_str(&fs::read_to_string(attrs).unwrap()).unwrap();
    assert_eq!(attrs["combos"].as_array().unwrap().len(), 24);
}

#[test]
fn augment_two_images() {
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("src");
    fs::create_dir(&src).unwrap();
    for (i, name) in ["one.png", "two.png"].iter().enumerate() {
        RasterImage::from_fn(40, 30, |x, y| [(x * 6) as u8, (y * 8) as u8, (i * 100) as u8])
            .save_png(src.join(name))
            .unwrap();
    }
    let out = dir.path().join("out");
    ok(bin(&["augment", p(&src), "--seed", "2", "--threads", "2", "--out", p(&out)]));
    let pngs = fs::read_dir(&out)
        .unwrap()
        .filter(|e| e.as_ref().unwrap().path().extension().is_some_and(|x| x == "png"))
        .count();
    assert_eq!(pngs, 48);
    let report: Value = serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["outputs"], 48);
    assert_eq!(report["seed"], 2);
}

#[test]
fn augment_with_alignment() {
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("src");
    fs::create_dir(&src).unwrap();
    RasterImage::filled(32, 32, [90, 120, 150]).save_png(src.join("face.png")).unwrap();
    let landmarks = dir.path().join("lm.txt");
    fs::write(&landmarks, "face 10 12 22 12 16 24\n").unwrap();
    let template = dir.path().join("template.txt");
    fs::write(&template, "template 11 12 21 12 16 22\n").unwrap();
    let plan = dir.path().join("plan.json");
    ok(bin(&["plan", "--seed", "1", "--chains", "3", "--out", p(&plan)]));
    let out = dir.path().join("out");
    ok(bin(&[
        "augment", p(&src), "--plan", p(&plan), "--landmarks", p(&landmarks), "--template", p(&template),
        "--align", "after", "--out", p(&out),
    ]));
    assert!(out.join("face_aug2.png").exists());
    assert_eq!(code(&bin(&["augment", p(&src), "--landmarks", p(&landmarks), "--out", p(&out)])), 1);
}
