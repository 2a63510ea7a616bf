//! Binary cache of a_p by prime rank: an 8-byte header (u16 magic, u16
//! curve hash, u32 prime limit) followed by i16 little-endian values.

use crate::error::{AppError, AppResult};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use twistvan_core::arith::primes_up_to;
use twistvan_core::curve::PrimeTable;
use twistvan_core::CurveSpec;

pub const CACHE_MAGIC: u16 = 0x5654;
const HEADER_LEN: usize = 8;

/// The curve fingerprint folded to 16 bits.
pub fn curve_hash16(curve: &CurveSpec) -> u16 {
    let h = curve.fingerprint();
    (h ^ (h >> 16) ^ (h >> 32) ^ (h >> 48)) as u16
}

/// `<dir>/<label>.apc`.
pub fn cache_path(dir: &Path, curve: &CurveSpec) -> PathBuf {
    dir.join(format!("{}.apc", curve.label))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CacheStatus {
    Built,
    Loaded,
    Extended,
    /// The file was present but its header or length did not validate.
    Rebuilt,
}

pub fn encode(curve: &CurveSpec, table: &PrimeTable) -> AppResult<Vec<u8>> {
    let limit = u32::try_from(table.limit)
        .map_err(|_| twistvan_core::Error::Capacity { needed: table.limit, available: u32::MAX as u64 })?;
    let mut out = Vec::with_capacity(HEADER_LEN + 2 * table.ap.len());
    out.extend_from_slice(&CACHE_MAGIC.to_le_bytes());
    out.extend_from_slice(&curve_hash16(curve).to_le_bytes());
    out.extend_from_slice(&limit.to_le_bytes());
    for &a in &table.ap {
        let v = i16::try_from(a).map_err(|_| twistvan_core::Error::Internal(format!("a_p = {a} exceeds 16 bits")))?;
        out.extend_from_slice(&v.to_le_bytes());
    }
    Ok(out)
}

/// Decodes a cache image; None when the header or length is wrong for
/// this curve.
pub fn decode(curve: &CurveSpec, bytes: &[u8]) -> Option<PrimeTable> {
    if bytes.len() < HEADER_LEN {
        return None;
    }
    let magic = u16::from_le_bytes([bytes[0], bytes[1]]);
    let hash = u16::from_le_bytes([bytes[2], bytes[3]]);
    let limit = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as u64;
    if magic != CACHE_MAGIC || hash != curve_hash16(curve) {
        return None;
    }
    let primes = primes_up_to(limit);
    let body = &bytes[HEADER_LEN..];
    if body.len() != 2 * primes.len() {
        return None;
    }
    let ap = body
        .chunks_exact(2)
        .map(|c| i16::from_le_bytes([c[0], c[1]]) as i64)
        .collect();
    Some(PrimeTable { limit, primes, ap })
}

/// Loads a_p up to `limit` from the cache, computing and writing whatever
/// is missing. An existing valid prefix is kept and only new primes are
/// appended.
pub fn load_or_build(path: &Path, curve: &CurveSpec, limit: u64) -> AppResult<(PrimeTable, CacheStatus)> {
    let existing = match fs::read(path) {
        Ok(bytes) => Some(decode(curve, &bytes)),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => None,
        Err(e) => return Err(AppError::io(path, e)),
    };
    let (table, status) = match existing {
        Some(Some(mut t)) if t.limit >= limit => {
            t.truncate(limit);
            return Ok((t, CacheStatus::Loaded));
        }
        Some(Some(mut t)) => {
            let old_len = t.ap.len();
            t.extend(curve, limit)?;
            append(path, curve, &t, old_len)?;
            return Ok((t, CacheStatus::Extended));
        }
        Some(None) => (PrimeTable::new(curve, limit)?, CacheStatus::Rebuilt),
        None => (PrimeTable::new(curve, limit)?, CacheStatus::Built),
    };
    write(path, curve, &table)?;
    Ok((table, status))
}

fn write(path: &Path, curve: &CurveSpec, table: &PrimeTable) -> AppResult<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| AppError::io(dir, e))?;
    }
    fs::write(path, encode(curve, table)?).map_err(|e| AppError::io(path, e))
}

/// Rewrites the header and appends the values past `old_len`.
fn append(path: &Path, curve: &CurveSpec, table: &PrimeTable, old_len: usize) -> AppResult<()> {
    let image = encode(curve, table)?;
    let mut f = fs::OpenOptions::new()
        .write(true)
        .open(path)
        .map_err(|e| AppError::io(path, e))?;
    use std::io::{Seek, SeekFrom};
    let io = |e| AppError::io(path, e);
    f.write_all(&image[..HEADER_LEN]).map_err(io)?;
    f.seek(SeekFrom::Start((HEADER_LEN + 2 * old_len) as u64)).map_err(io)?;
    f.write_all(&image[HEADER_LEN + 2 * old_len..]).map_err(io)?;
    f.set_len(image.len() as u64).map_err(io)
}
