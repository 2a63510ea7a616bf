//! Twist records on disk: a binary file with a 32-byte header (magic,
//! curve hash, X, ε) and 25-byte records (d, value, err, flags), plus CSV
//! export.

use crate::error::{AppError, AppResult};
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use twistvan_core::family::Sign;
use twistvan_core::lvalue::TwistRecord;

pub const RECORD_MAGIC: &[u8; 8] = b"TWVREC01";
pub const HEADER_LEN: usize = 32;
pub const RECORD_LEN: usize = 25;
const FLAG_VANISHED: u8 = 1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RecordHeader {
    pub curve_hash: u64,
    pub x: u64,
    pub epsilon: f64,
}

/// `<dir>/<label>_<sign>_<X>.twv`.
pub fn records_path(dir: &Path, label: &str, sign: Sign, x: u64) -> PathBuf {
    dir.join(format!("{label}_{}_{x}.twv", sign.as_str()))
}

fn encode_header(h: &RecordHeader) -> [u8; HEADER_LEN] {
    let mut out = [0u8; HEADER_LEN];
    out[..8].copy_from_slice(RECORD_MAGIC);
    out[8..16].copy_from_slice(&h.curve_hash.to_le_bytes());
    out[16..24].copy_from_slice(&h.x.to_le_bytes());
    out[24..32].copy_from_slice(&h.epsilon.to_le_bytes());
    out
}

fn encode_record(r: &TwistRecord) -> [u8; RECORD_LEN] {
    let mut out = [0u8; RECORD_LEN];
    out[..8].copy_from_slice(&r.d.to_le_bytes());
    out[8..16].copy_from_slice(&r.value.to_le_bytes());
    out[16..24].copy_from_slice(&r.err.to_le_bytes());
    out[24] = if r.vanished { FLAG_VANISHED } else { 0 };
    out
}

fn le64(b: &[u8]) -> [u8; 8] {
    b.try_into().unwrap()
}

/// Appends records behind a header written at creation.
pub struct RecordWriter {
    path: PathBuf,
    out: BufWriter<File>,
}

impl RecordWriter {
    pub fn create(path: &Path, header: &RecordHeader) -> AppResult<Self> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).map_err(|e| AppError::io(dir, e))?;
        }
        let file = File::create(path).map_err(|e| AppError::io(path, e))?;
        let mut out = BufWriter::new(file);
        out.write_all(&encode_header(header)).map_err(|e| AppError::io(path, e))?;
        Ok(RecordWriter {
            path: path.to_path_buf(),
            out,
        })
    }

    pub fn append(&mut self, records: &[TwistRecord]) -> AppResult<()> {
        for r in records {
            self.out
                .write_all(&encode_record(r))
                .map_err(|e| AppError::io(&self.path, e))?;
        }
        Ok(())
    }

    pub fn finish(mut self) -> AppResult<()> {
        self.out.flush().map_err(|e| AppError::io(&self.path, e))
    }
}

pub fn write_records(path: &Path, header: &RecordHeader, records: &[TwistRecord]) -> AppResult<()> {
    let mut w = RecordWriter::create(path, header)?;
    w.append(records)?;
    w.finish()
}

/// Reads a record file. `terms_used` is not stored and comes back as 0.
pub fn read_records(path: &Path) -> AppResult<(RecordHeader, Vec<TwistRecord>)> {
    let file = File::open(path).map_err(|e| AppError::io(path, e))?;
    let mut bytes = Vec::new();
    BufReader::new(file)
        .read_to_end(&mut bytes)
        .map_err(|e| AppError::io(path, e))?;
    let bad = |message: String| AppError::Format {
        path: path.to_path_buf(),
        message,
    };
    if bytes.len() < HEADER_LEN || &bytes[..8] != RECORD_MAGIC {
        return Err(bad("not a twist record file".into()));
    }
    let header = RecordHeader {
        curve_hash: u64::from_le_bytes(le64(&bytes[8..16])),
        x: u64::from_le_bytes(le64(&bytes[16..24])),
        epsilon: f64::from_le_bytes(le64(&bytes[24..32])),
    };
    let body = &bytes[HEADER_LEN..];
    if body.len() % RECORD_LEN != 0 {
        return Err(bad(format!("truncated record ({} trailing bytes)", body.len() % RECORD_LEN)));
    }
    let records = body
        .chunks_exact(RECORD_LEN)
        .map(|c| TwistRecord {
            d: i64::from_le_bytes(le64(&c[..8])),
            value: f64::from_le_bytes(le64(&c[8..16])),
            err: f64::from_le_bytes(le64(&c[16..24])),
            vanished: c[24] & FLAG_VANISHED != 0,
            terms_used: 0,
        })
        .collect();
    Ok((header, records))
}

/// CSV with columns d, value, err, vanished (0/1).
pub fn export_csv<W: Write>(records: &[TwistRecord], out: W) -> AppResult<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["d", "value", "err", "vanished"])?;
    for r in records {
        w.write_record([
            r.d.to_string(),
            r.value.to_string(),
            r.err.to_string(),
            (r.vanished as u8).to_string(),
        ])?;
    }
    w.flush().map_err(|e| AppError::io("<csv>", e))
}
