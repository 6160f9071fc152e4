//! Point files and index files.
//!
//! A point file has one point per line, `x y` or `x,y`; blank lines and
//! lines starting with `#` are skipped. An index file is the magic `UDRS`,
//! a little-endian `u32` format version, a structure tag byte, the radius
//! as a little-endian `f64`, the payload length as a little-endian `u64`,
//! the bincode payload and the CRC32 of the payload.

use std::io::{Read, Write};
use std::path::Path;

use thiserror::Error;

use crate::geom::Point;
use crate::partition::{GlobalIndex, IndexKind};

pub const MAGIC: &[u8; 4] = b"UDRS";
pub const VERSION: u32 = 1;

#[derive(Debug, Error, Clone, PartialEq)]
#[error("line {line}, column {col}: {msg}")]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub msg: String,
}

/// Parses point-file text.
pub fn parse_points(text: &str) -> Result<Vec<Point>, ParseError> {
    let mut out = Vec::new();
    for (ln, raw) in text.lines().enumerate() {
        let line = ln + 1;
        let trimmed = raw.trim_start();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let mut fields: Vec<(usize, &str)> = Vec::with_capacity(2);
        let mut start = None;
        for (i, ch) in raw.char_indices() {
            let sep = ch.is_whitespace() || ch == ',';
            match (sep, start) {
                (false, None) => start = Some(i),
                (true, Some(s)) => {
                    fields.push((s, &raw[s..i]));
                    start = None;
                }
                _ => {}
            }
        }
        if let Some(s) = start {
            fields.push((s, &raw[s..]));
        }
        let col_of = |byte: usize| raw[..byte].chars().count() + 1;
        if fields.len() != 2 {
            let col = fields.get(2).map_or(raw.chars().count() + 1, |f| col_of(f.0));
            return Err(ParseError {
                line,
                col,
                msg: format!("expected 2 coordinates, found {}", fields.len()),
            });
        }
        let mut xy = [0.0; 2];
        for (k, &(at, tok)) in fields.iter().enumerate() {
            let v: f64 = tok.parse().map_err(|_| ParseError {
                line,
                col: col_of(at),
                msg: format!("`{tok}` is not a number"),
            })?;
            if !v.is_finite() {
                return Err(ParseError {
                    line,
                    col: col_of(at),
                    msg: format!("`{tok}` is not finite"),
                });
            }
            xy[k] = v;
        }
        out.push(Point::new(xy[0], xy[1]));
    }
    Ok(out)
}

/// Point-file text; coordinates use the shortest round-trip form.
pub fn format_points(pts: &[Point]) -> String {
    let mut s = String::with_capacity(pts.len() * 40);
    for p in pts {
        s.push_str(&format!("{:?} {:?}\n", p.x, p.y));
    }
    s
}

#[derive(Debug, Error)]
pub enum IndexError {
    #[error("not an index file")]
    BadMagic,
    #[error("unsupported index version {0}, expected {VERSION}")]
    Version(u32),
    #[error("unknown structure tag {0}")]
    Tag(u8),
    #[error("index file truncated")]
    Truncated,
    #[error("checksum mismatch")]
    Checksum,
    #[error("header does not match payload")]
    Inconsistent,
    #[error("payload: {0}")]
    Decode(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn tag(kind: &IndexKind) -> u8 {
    match kind {
        IndexKind::PartitionTree => 1,
        IndexKind::Tradeoff { .. } => 2,
    }
}

pub fn encode_index(idx: &GlobalIndex) -> Result<Vec<u8>, IndexError> {
    let payload = bincode::serialize(idx).map_err(|e| IndexError::Decode(e.to_string()))?;
    let mut out = Vec::with_capacity(payload.len() + 29);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.push(tag(&idx.kind));
    out.extend_from_slice(&idx.radius().get().to_le_bytes());
    out.extend_from_slice(&(payload.len() as u64).to_le_bytes());
    out.extend_from_slice(&payload);
    out.extend_from_slice(&crc32fast::hash(&payload).to_le_bytes());
    Ok(out)
}

pub fn decode_index(bytes: &[u8]) -> Result<GlobalIndex, IndexError> {
    let take = |at: usize, len: usize| bytes.get(at..at + len).ok_or(IndexError::Truncated);
    if take(0, 4).map_err(|_| IndexError::BadMagic)? != MAGIC {
        return Err(IndexError::BadMagic);
    }
    let version = u32::from_le_bytes(take(4, 4)?.try_into().expect("4 bytes"));
    if version != VERSION {
        return Err(IndexError::Version(version));
    }
    let t = take(8, 1)?[0];
    if t != 1 && t != 2 {
        return Err(IndexError::Tag(t));
    }
    let radius = f64::from_le_bytes(take(9, 8)?.try_into().expect("8 bytes"));
    let len = u64::from_le_bytes(take(17, 8)?.try_into().expect("8 bytes"));
    let len = usize::try_from(len).map_err(|_| IndexError::Truncated)?;
    let payload = take(25, len)?;
    let crc = u32::from_le_bytes(take(25 + len, 4)?.try_into().expect("4 bytes"));
    if crc32fast::hash(payload) != crc {
        return Err(IndexError::Checksum);
    }
    let idx: GlobalIndex = bincode::deserialize(payload).map_err(|e| IndexError::Decode(e.to_string()))?;
    if tag(&idx.kind) != t || idx.radius().get().to_bits() != radius.to_bits() {
        return Err(IndexError::Inconsistent);
    }
    Ok(idx)
}

pub fn save_index(idx: &GlobalIndex, path: &Path) -> Result<(), IndexError> {
    let bytes = encode_index(idx)?;
    let mut f = std::fs::File::create(path)?;
    f.write_all(&bytes)?;
    Ok(())
}

pub fn load_index(path: &Path) -> Result<GlobalIndex, IndexError> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut bytes)?;
    decode_index(&bytes)
}
