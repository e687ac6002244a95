use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::embedding::{Embedding, Label};
use crate::error::{Error, Result};
use crate::protocol::StreamItem;

/// One embedding as stored on disk. `vector` is kept as read (or normalized).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingRecord {
    pub id: String,
    pub label: Label,
    pub vector: Vec<f64>,
}

impl EmbeddingRecord {
    /// Converts to a protocol item; the vector must already be unit norm.
    pub fn to_stream_item(&self) -> Result<StreamItem> {
        Ok(StreamItem {
            id: self.id.clone(),
            embedding: Embedding::new(self.vector.clone())
                .map_err(|e| Error::data(format!("record `{}`: {e}", self.id)))?,
            true_label: self.label.clone(),
        })
    }
}

/// Magic bytes of the packed binary embedding format.
pub const BINARY_MAGIC: [u8; 4] = *b"OSEB";
pub const BINARY_VERSION: u32 = 1;

/// Loads either format, chosen by the file's leading bytes.
pub fn load_embeddings(path: impl AsRef<Path>, normalize: bool) -> Result<Vec<EmbeddingRecord>> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.starts_with(&BINARY_MAGIC) {
        decode_binary(&bytes, &path.display().to_string(), normalize)
    } else {
        let text = String::from_utf8(bytes)
            .map_err(|_| Error::data(format!("{}: not valid UTF-8", path.display())))?;
        parse_embeddings_jsonl(&text, &path.display().to_string(), normalize)
    }
}

pub fn load_embeddings_jsonl(path: impl AsRef<Path>, normalize: bool) -> Result<Vec<EmbeddingRecord>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_embeddings_jsonl(&text, &path.display().to_string(), normalize)
}

/// One JSON object per line: `{"id": .., "label": .., "vector": [..]}`.
/// Blank lines and lines starting with `#` are skipped.
pub fn parse_embeddings_jsonl(text: &str, source_name: &str, normalize: bool) -> Result<Vec<EmbeddingRecord>> {
    let mut out = Vec::new();
    let mut dim: Option<(usize, usize)> = None;
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let err = |message: String| Error::Parse {
            source_name: source_name.to_string(),
            line: line_no,
            message,
        };
        let mut rec: EmbeddingRecord =
            serde_json::from_str(trimmed).map_err(|e| err(format!("malformed record: {e}")))?;
        check_record(&mut rec, &mut dim, line_no, normalize).map_err(err)?;
        out.push(rec);
    }
    Ok(out)
}

fn check_record(
    rec: &mut EmbeddingRecord,
    dim: &mut Option<(usize, usize)>,
    position: usize,
    normalize: bool,
) -> std::result::Result<(), String> {
    match *dim {
        None => *dim = Some((rec.vector.len(), position)),
        Some((d, first)) if d != rec.vector.len() => {
            return Err(format!(
                "dimension {} of `{}` differs from dimension {d} established at record {first}",
                rec.vector.len(),
                rec.id
            ));
        }
        Some(_) => {}
    }
    if rec.vector.is_empty() {
        return Err(format!("record `{}` has an empty vector", rec.id));
    }
    if let Some(k) = rec.vector.iter().position(|v| !v.is_finite()) {
        return Err(format!("record `{}` component {k} is not finite", rec.id));
    }
    if normalize {
        let e = Embedding::normalized(std::mem::take(&mut rec.vector))
            .map_err(|_| format!("record `{}` is a zero vector", rec.id))?;
        rec.vector = e.into_vec();
    }
    Ok(())
}

pub fn write_embeddings_jsonl(records: &[EmbeddingRecord], header: Option<&str>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::new();
    if let Some(h) = header {
        for line in h.lines() {
            out.push_str("# ");
            out.push_str(line);
            out.push('\n');
        }
    }
    for r in records {
        out.push_str(&serde_json::to_string(r)?);
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

// Binary layout, all integers little-endian:
//   magic "OSEB" | version u32 | dim u32 | count u64
//   count x ( id_len u32 | id utf-8 | label_len u32 | label utf-8 | dim x f32 )
pub fn write_embeddings_binary(records: &[EmbeddingRecord], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let dim = records.first().map_or(0, |r| r.vector.len());
    let mut buf = Vec::with_capacity(20 + records.len() * (dim * 4 + 32));
    buf.extend_from_slice(&BINARY_MAGIC);
    buf.extend_from_slice(&BINARY_VERSION.to_le_bytes());
    buf.extend_from_slice(&u32::try_from(dim).map_err(|_| Error::usage("dimension too large"))?.to_le_bytes());
    buf.extend_from_slice(&(records.len() as u64).to_le_bytes());
    for r in records {
        if r.vector.len() != dim {
            return Err(Error::Dimension {
                expected: dim,
                found: r.vector.len(),
                context: format!("record {}", r.id),
            });
        }
        for s in [r.id.as_str(), r.label.as_str()] {
            buf.extend_from_slice(&(s.len() as u32).to_le_bytes());
            buf.extend_from_slice(s.as_bytes());
        }
        for v in &r.vector {
            buf.extend_from_slice(&(*v as f32).to_le_bytes());
        }
    }
    fs::write(path, buf).map_err(|e| Error::io(path, e))
}

pub fn load_embeddings_binary(path: impl AsRef<Path>, normalize: bool) -> Result<Vec<EmbeddingRecord>> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_binary(&bytes, &path.display().to_string(), normalize)
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
    source_name: &'a str,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len()).ok_or_else(|| {
            Error::data(format!("{}: truncated at byte {}", self.source_name, self.pos))
        })?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn string(&mut self) -> Result<String> {
        let n = self.u32()? as usize;
        let raw = self.take(n)?;
        String::from_utf8(raw.to_vec())
            .map_err(|_| Error::data(format!("{}: invalid UTF-8 at byte {}", self.source_name, self.pos)))
    }
}

fn decode_binary(bytes: &[u8], source_name: &str, normalize: bool) -> Result<Vec<EmbeddingRecord>> {
    let mut r = Reader { bytes, pos: 0, source_name };
    if r.take(4)? != BINARY_MAGIC {
        return Err(Error::data(format!("{source_name}: bad magic")));
    }
    let version = r.u32()?;
    if version != BINARY_VERSION {
        return Err(Error::SchemaVersion {
            what: source_name.to_string(),
            found: u64::from(version),
            expected: BINARY_VERSION,
        });
    }
    let dim = r.u32()? as usize;
    let count = r.u64()?;
    let mut out = Vec::new();
    let mut established = None;
    for k in 0..count {
        let id = r.string()?;
        let label = Label::new(r.string()?)
            .map_err(|_| Error::data(format!("{source_name}: record {k} has an empty label")))?;
        let raw = r.take(dim * 4)?;
        let vector = raw
            .chunks_exact(4)
            .map(|c| f64::from(f32::from_le_bytes(c.try_into().unwrap())))
            .collect();
        let mut rec = EmbeddingRecord { id, label, vector };
        check_record(&mut rec, &mut established, k as usize, normalize)
            .map_err(|m| Error::data(format!("{source_name}: {m}")))?;
        out.push(rec);
    }
    if r.pos != bytes.len() {
        return Err(Error::data(format!("{source_name}: trailing bytes after {count} records")));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn loads_and_normalizes() {
        let text = r#"{"id":"a","label":"x","vector":[3,4,0,0]}
{"id":"b","label":"y","vector":[0,0,0,2]}
"#;
        let recs = parse_embeddings_jsonl(text, "t", true).unwrap();
        assert_eq!(recs.len(), 2);
        for r in &recs {
            let n: f64 = r.vector.iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!((n - 1.0).abs() < 1e-4);
        }
        assert_eq!(recs[0].vector, vec![0.6, 0.8, 0.0, 0.0]);
    }

    #[test]
    fn rejects_bad_input() {
        let mixed = "{\"id\":\"a\",\"label\":\"x\",\"vector\":[1,0,0,0]}\n{\"id\":\"b\",\"label\":\"x\",\"vector\":[1,0,0,0,0]}\n";
        let msg = parse_embeddings_jsonl(mixed, "t", true).unwrap_err().to_string();
        assert!(msg.contains("dimension 5") && msg.contains("dimension 4"), "{msg}");

        let zero = "{\"id\":\"z\",\"label\":\"x\",\"vector\":[0,0,0]}\n";
        assert!(parse_embeddings_jsonl(zero, "t", true).is_err());
        assert!(parse_embeddings_jsonl(zero, "t", false).is_ok());

        let malformed = "{\"id\":\"a\",\"label\":\"x\",\"vector\":[1]}\nnot json\n";
        let msg = parse_embeddings_jsonl(malformed, "t", true).unwrap_err().to_string();
        assert!(msg.starts_with("t:2:"), "{msg}");
    }

    #[test]
    fn binary_layout_and_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("e.bin");
        let recs = vec![
            EmbeddingRecord { id: "i0".into(), label: Label::new("p").unwrap(), vector: vec![1.0, 0.0] },
            EmbeddingRecord { id: "i1".into(), label: Label::new("q").unwrap(), vector: vec![0.0, -1.0] },
        ];
        write_embeddings_binary(&recs, &path).unwrap();
        let bytes = fs::read(&path).unwrap();
        assert_eq!(&bytes[..4], b"OSEB");
        assert_eq!(&bytes[4..8], &1u32.to_le_bytes());
        assert_eq!(&bytes[8..12], &2u32.to_le_bytes());
        assert_eq!(&bytes[12..20], &2u64.to_le_bytes());
        // first record: id length, id, label length, label, two f32s
        assert_eq!(&bytes[20..24], &2u32.to_le_bytes());
        assert_eq!(&bytes[24..26], b"i0");
        assert_eq!(&bytes[31..35], &1.0f32.to_le_bytes());
        assert_eq!(bytes.len(), 20 + 2 * (4 + 2 + 4 + 1 + 8));

        assert_eq!(load_embeddings(&path, false).unwrap(), recs);

        let mut bumped = bytes.clone();
        bumped[4] = 9;
        fs::write(&path, bumped).unwrap();
        assert!(matches!(load_embeddings(&path, false), Err(Error::SchemaVersion { found: 9, .. })));
    }
}
