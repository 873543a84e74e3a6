//! Binary embedding tables.
//!
//! Layout: the magic bytes `QAEMB1`, the row count as a little-endian u64, the
//! dimension as a little-endian u32, then `rows * dimension` little-endian f32
//! values in row-major order. Row ids come from a companion text file with one
//! id per line in the same order.

use std::fs;
use std::path::Path;

use qaleak_core::{EmbeddingTable, NnError};

use crate::error::{Error, Result};

pub const MAGIC: &[u8; 6] = b"QAEMB1";
const HEADER_LEN: usize = 6 + 8 + 4;

pub fn load_embeddings(path: &Path, ids_path: &Path) -> Result<EmbeddingTable> {
    let bytes = fs::read(path).map_err(Error::io(path))?;
    let bad = |message: String| Error::Embedding {
        path: path.into(),
        message,
    };
    if bytes.len() < HEADER_LEN || &bytes[..6] != MAGIC {
        return Err(bad("missing QAEMB1 header".into()));
    }
    let rows = u64::from_le_bytes(bytes[6..14].try_into().unwrap());
    let dimension = u32::from_le_bytes(bytes[14..18].try_into().unwrap()) as usize;
    let expected = rows
        .checked_mul(dimension as u64)
        .and_then(|n| n.checked_mul(4))
        .ok_or_else(|| bad("header sizes overflow".into()))?;
    let body = &bytes[HEADER_LEN..];
    if body.len() as u64 != expected {
        return Err(bad(format!(
            "expected {expected} bytes of values for {rows} x {dimension}, found {}",
            body.len()
        )));
    }
    let values: Vec<f32> = body
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect();

    let id_text = fs::read_to_string(ids_path).map_err(Error::io(ids_path))?;
    let ids: Vec<String> = id_text.lines().map(str::to_string).collect();

    EmbeddingTable::new(ids, dimension, values).map_err(|e| match e {
        NnError::NonFinite { row } => bad(format!("non-finite value in row {row}")),
        other => bad(other.to_string()),
    })
}

pub fn write_embeddings(path: &Path, ids_path: &Path, table: &EmbeddingTable) -> Result<()> {
    let mut bytes = Vec::with_capacity(HEADER_LEN + table.values().len() * 4);
    bytes.extend_from_slice(MAGIC);
    bytes.extend_from_slice(&(table.rows() as u64).to_le_bytes());
    bytes.extend_from_slice(&(table.dimension() as u32).to_le_bytes());
    for v in table.values() {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    fs::write(path, bytes).map_err(Error::io(path))?;
    let mut ids = table.ids().join("\n");
    ids.push('\n');
    fs::write(ids_path, ids).map_err(Error::io(ids_path))
}
