//! Output artifacts: CSV tables, the portable field-map binary, content
//! hashes and the run manifest.
//!
//! Field-map binary layout (little-endian): the magic bytes `EOTF`, `u32`
//! rows, `u32` columns, then `rows·cols` `f64` values in row-major order.

use std::collections::BTreeMap;
use std::fs;
use std::io::{self, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const FIELD_MAP_MAGIC: &[u8; 4] = b"EOTF";

/// Hex SHA-256 of `bytes`.
pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Hash of any serializable value through its canonical JSON form.
pub fn content_hash<T: Serialize + ?Sized>(value: &T) -> String {
    let json = serde_json::to_vec(value).expect("serializable value");
    sha256_hex(&json)
}

/// Writes `bytes` to `path` through a temporary sibling and a rename, so
/// readers never observe a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> io::Result<()> {
    let tmp = path.with_extension(format!(
        "{}.tmp",
        path.extension().and_then(|e| e.to_str()).unwrap_or("")
    ));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)
}

/// Renders a numeric table with one header row. Values use Rust's
/// shortest round-trip formatting, so equal inputs give equal bytes.
pub fn csv_bytes(header: &[&str], rows: &[Vec<f64>]) -> io::Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for row in rows {
        if row.len() != header.len() {
            return Err(io::Error::new(io::ErrorKind::InvalidInput, "row width differs from header"));
        }
        w.write_record(row.iter().map(|v| v.to_string()))?;
    }
    w.into_inner().map_err(|e| e.into_error())
}

pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<f64>]) -> io::Result<()> {
    write_atomic(path, &csv_bytes(header, rows)?)
}

/// Parses a table written by [`write_csv`]: `(header, rows)`.
pub fn read_csv(path: &Path) -> io::Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut r = csv::Reader::from_path(path)?;
    let header = r.headers()?.iter().map(str::to_string).collect();
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let row = rec
            .iter()
            .map(|s| s.trim().parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))?;
        rows.push(row);
    }
    Ok((header, rows))
}

pub fn field_map_bytes(rows: usize, cols: usize, values: &[f64]) -> Vec<u8> {
    assert_eq!(rows * cols, values.len());
    let mut out = Vec::with_capacity(12 + 8 * values.len());
    out.extend_from_slice(FIELD_MAP_MAGIC);
    out.extend_from_slice(&(rows as u32).to_le_bytes());
    out.extend_from_slice(&(cols as u32).to_le_bytes());
    for v in values {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn write_field_map(path: &Path, rows: usize, cols: usize, values: &[f64]) -> io::Result<()> {
    write_atomic(path, &field_map_bytes(rows, cols, values))
}

/// `(rows, cols, values)` from a field-map binary.
pub fn parse_field_map(bytes: &[u8]) -> io::Result<(usize, usize, Vec<f64>)> {
    let bad = |m: &str| io::Error::new(io::ErrorKind::InvalidData, m.to_string());
    if bytes.len() < 12 || &bytes[..4] != FIELD_MAP_MAGIC {
        return Err(bad("missing EOTF header"));
    }
    let u = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap()) as usize;
    let (rows, cols) = (u(4), u(8));
    if bytes.len() != 12 + 8 * rows * cols {
        return Err(bad("payload length does not match dimensions"));
    }
    let values = bytes[12..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok((rows, cols, values))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Success,
    /// Completed, but some FDTD run hit its time cap before decaying.
    Provisional,
}

/// Written last into a run directory; a directory without one is a failed
/// run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config_hash: String,
    pub tool_version: String,
    pub git_describe: String,
    pub started: String,
    pub finished: String,
    pub status: RunStatus,
    /// File name to hex SHA-256 of its contents.
    pub outputs: BTreeMap<String, String>,
    pub notes: Vec<String>,
}

impl RunManifest {
    pub fn write(&self, dir: &Path) -> io::Result<()> {
        let json = serde_json::to_vec_pretty(self).map_err(io::Error::other)?;
        write_atomic(&dir.join("manifest.json"), &json)
    }

    pub fn read(dir: &Path) -> io::Result<Self> {
        let bytes = fs::read(dir.join("manifest.json"))?;
        serde_json::from_slice(&bytes).map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.csv");
        let rows = vec![vec![400.0, 0.1 + 0.2, 1e-17], vec![405.0, -0.0, 1.0 / 3.0]];
        write_csv(&p, &["wavelength_nm", "T", "R"], &rows).unwrap();
        let text = fs::read_to_string(&p).unwrap();
        assert!(text.starts_with("wavelength_nm,T,R\n"));
        let (h, back) = read_csv(&p).unwrap();
        assert_eq!(h, ["wavelength_nm", "T", "R"]);
        assert_eq!(back, rows);
        assert!(!dir.path().join("t.csv.tmp").exists());
    }

    #[test]
    fn field_map_layout() {
        let b = field_map_bytes(2, 3, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.5]);
        assert_eq!(&b[..4], b"EOTF");
        assert_eq!(&b[4..12], &[2, 0, 0, 0, 3, 0, 0, 0]);
        assert_eq!(&b[12..20], &1.0f64.to_le_bytes());
        assert_eq!(b.len(), 12 + 48);
        let (r, c, v) = parse_field_map(&b).unwrap();
        assert_eq!((r, c, v[5]), (2, 3, 6.5));
        assert!(parse_field_map(&b[..20]).is_err());
        assert!(parse_field_map(b"NOPE00000000").is_err());
    }

    #[test]
    fn hash_is_stable() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
        assert_eq!(content_hash(&[1, 2]), content_hash(&vec![1, 2]));
    }
}
