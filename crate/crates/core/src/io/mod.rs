//! Embedding ingestion, synthetic embeddings and versioned report files.

mod embeddings;
mod report;
mod synthetic;

pub use embeddings::{
    load_embeddings, load_embeddings_binary, load_embeddings_jsonl, parse_embeddings_jsonl,
    write_embeddings_binary, write_embeddings_jsonl, EmbeddingRecord, BINARY_MAGIC,
    BINARY_VERSION,
};
pub use report::{
    read_aggregate, read_report, read_versioned, write_aggregate, write_report, write_versioned,
    REPORT_SCHEMA_VERSION,
};
pub use synthetic::{gen_synthetic, ImagesPerIdentity, SyntheticSpec};
