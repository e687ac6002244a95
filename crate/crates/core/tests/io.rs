use openset_eval::io::{
    load_embeddings, write_embeddings_binary, write_embeddings_jsonl, EmbeddingRecord,
};
use openset_eval::Label;
use proptest::prelude::*;

fn records_strategy() -> impl Strategy<Value = Vec<EmbeddingRecord>> {
    (1usize..24).prop_flat_map(|dim| {
        proptest::collection::vec(
            (
                "[a-z0-9_]{1,12}",
                "[A-Za-z]{1,8}",
                proptest::collection::vec(-1e3f64..1e3, dim).prop_filter("non-zero", |v| v.iter().any(|x| x.abs() > 1e-3)),
            ),
            1..20,
        )
        .prop_map(|rows| {
            rows.into_iter()
                .enumerate()
                .map(|(i, (id, label, vector))| EmbeddingRecord {
                    id: format!("{id}{i}"),
                    label: Label::new(label).unwrap(),
                    vector,
                })
                .collect()
        })
    })
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-7 * a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn both_formats_round_trip(records in records_strategy()) {
        let dir = tempfile::tempdir().unwrap();
        let text = dir.path().join("e.jsonl");
        let bin = dir.path().join("e.bin");
        write_embeddings_jsonl(&records, Some("seed 1"), &text).unwrap();
        write_embeddings_binary(&records, &bin).unwrap();

        let from_text = load_embeddings(&text, false).unwrap();
        prop_assert_eq!(&from_text, &records);

        let from_bin = load_embeddings(&bin, false).unwrap();
        prop_assert_eq!(from_bin.len(), records.len());
        for (got, want) in from_bin.iter().zip(&records) {
            prop_assert_eq!(&got.id, &want.id);
            prop_assert_eq!(&got.label, &want.label);
            for (x, y) in got.vector.iter().zip(&want.vector) {
                prop_assert!(close(*x, *y), "{} vs {}", x, y);
            }
        }

        for r in load_embeddings(&bin, true).unwrap() {
            let norm: f64 = r.vector.iter().map(|v| v * v).sum::<f64>().sqrt();
            prop_assert!((norm - 1.0).abs() <= 1e-4);
        }
    }
}
