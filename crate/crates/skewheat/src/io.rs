//! On-disk formats: the compact binary path frame, path CSV, local-time CSV
//! export and JSON reports.
//!
//! Frame layout, little-endian throughout:
//!
//! ```text
//! [level: u8][kind: u8][count: u32][count x f64]
//! ```
//!
//! `kind` is 0 for piecewise-constant (count = 2^level values) and 1 for
//! piecewise-linear (count = 2^level + 1). Decoders treat input as untrusted:
//! out-of-range levels, wrong counts, truncated buffers and non-finite values
//! are format errors, never panics.

use crate::error::{Error, Result};
use crate::localtime::LocalTimeField;
use crate::path::{Path, PathKind};
use serde::Serialize;
use std::io::Write;

/// Levels above this are refused by the decoders; 2^24 doubles is far beyond
/// anything the solvers produce and keeps hostile frames from allocating.
pub const MAX_FRAME_LEVEL: u8 = 24;

pub fn encode_path_frame(p: &Path) -> Vec<u8> {
    let kind = match p.kind() {
        PathKind::Constant => 0u8,
        PathKind::Linear => 1u8,
    };
    let mut out = Vec::with_capacity(6 + 8 * p.values().len());
    out.push(p.level() as u8);
    out.push(kind);
    out.extend_from_slice(&(p.values().len() as u32).to_le_bytes());
    for v in p.values() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

/// Decode one frame from the start of `bytes`; returns the path and the
/// number of bytes consumed.
pub fn decode_path_frame_prefix(bytes: &[u8]) -> Result<(Path, usize)> {
    if bytes.len() < 6 {
        return Err(Error::format("frame shorter than its header"));
    }
    let level = bytes[0];
    let kind = bytes[1];
    if level > MAX_FRAME_LEVEL {
        return Err(Error::format(format!("frame level {level} above cap {MAX_FRAME_LEVEL}")));
    }
    let count = u32::from_le_bytes([bytes[2], bytes[3], bytes[4], bytes[5]]) as usize;
    let cells = 1usize << level;
    let expected = match kind {
        0 => cells,
        1 => cells + 1,
        other => return Err(Error::format(format!("unknown path kind {other}"))),
    };
    if count != expected {
        return Err(Error::format(format!(
            "frame count {count} does not match kind {kind} at level {level} (expected {expected})"
        )));
    }
    let need = 6 + 8 * count;
    if bytes.len() < need {
        return Err(Error::format("frame truncated"));
    }
    let mut values = Vec::with_capacity(count);
    for i in 0..count {
        let off = 6 + 8 * i;
        let v = f64::from_le_bytes(bytes[off..off + 8].try_into().unwrap());
        if !v.is_finite() {
            return Err(Error::format("frame contains a non-finite value"));
        }
        values.push(v);
    }
    let p = match kind {
        0 => Path::constant(u32::from(level), values)?,
        _ => Path::linear(u32::from(level), values)?,
    };
    Ok((p, need))
}

/// Decode a frame that must span the whole buffer.
pub fn decode_path_frame(bytes: &[u8]) -> Result<Path> {
    let (p, used) = decode_path_frame_prefix(bytes)?;
    if used != bytes.len() {
        return Err(Error::format(format!("{} trailing bytes after frame", bytes.len() - used)));
    }
    Ok(p)
}

pub fn write_path_csv(p: &Path, w: &mut impl Write) -> Result<()> {
    writeln!(w, "r,value")?;
    match p.kind() {
        PathKind::Constant => {
            for (i, v) in p.values().iter().enumerate() {
                writeln!(w, "{},{}", p.grid().node(i), v)?;
            }
        }
        PathKind::Linear => {
            for (i, v) in p.values().iter().enumerate() {
                writeln!(w, "{},{}", p.grid().node(i), v)?;
            }
        }
    }
    Ok(())
}

/// Parse a path from `r,value` CSV text. The number of rows decides the kind:
/// `2^L + 1` rows whose abscissae are the level-`L` nodes give a linear path,
/// `2^L` rows at the cell left edges a constant one.
pub fn read_path_csv(text: &str) -> Result<Path> {
    let mut rows = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if idx == 0 && line.eq_ignore_ascii_case("r,value") {
            continue;
        }
        let mut parts = line.split(',');
        let (r, v) = match (parts.next(), parts.next(), parts.next()) {
            (Some(a), Some(b), None) => (a.trim(), b.trim()),
            _ => return Err(Error::format(format!("line {}: expected two columns", idx + 1))),
        };
        let r: f64 = r
            .parse()
            .map_err(|_| Error::format(format!("line {}: bad abscissa {r:?}", idx + 1)))?;
        let v: f64 = v
            .parse()
            .map_err(|_| Error::format(format!("line {}: bad value {v:?}", idx + 1)))?;
        if !r.is_finite() || !v.is_finite() {
            return Err(Error::format(format!("line {}: non-finite entry", idx + 1)));
        }
        rows.push((r, v));
    }
    if rows.len() < 2 {
        return Err(Error::format("csv path needs at least two rows"));
    }
    let count = rows.len();
    // try linear: count = 2^L + 1
    let as_level = |n: usize| -> Option<u32> {
        if n.is_power_of_two() && n.trailing_zeros() <= u32::from(MAX_FRAME_LEVEL) {
            Some(n.trailing_zeros())
        } else {
            None
        }
    };
    let (level, kind) = if let Some(l) = as_level(count - 1) {
        (l, PathKind::Linear)
    } else if let Some(l) = as_level(count) {
        (l, PathKind::Constant)
    } else {
        return Err(Error::format(format!("{count} rows is not a dyadic grid")));
    };
    let width = 0.5f64.powi(level as i32);
    for (i, (r, _)) in rows.iter().enumerate() {
        let want = i as f64 * width;
        if (r - want).abs() > 1e-9 {
            return Err(Error::format(format!(
                "row {i}: abscissa {r} does not sit on the level-{level} grid"
            )));
        }
    }
    let values: Vec<f64> = rows.into_iter().map(|(_, v)| v).collect();
    match kind {
        PathKind::Linear => Path::linear(level, values),
        PathKind::Constant => Path::constant(level, values),
    }
}

/// Export a local-time field as `a,theta,ell` rows.
pub fn write_local_time_csv(f: &LocalTimeField, w: &mut impl Write) -> Result<()> {
    writeln!(w, "a,theta,ell")?;
    for (ai, a) in f.levels.iter().enumerate() {
        for (ti, theta) in f.thetas.iter().enumerate() {
            writeln!(w, "{a},{theta},{}", f.density[ai][ti])?;
        }
    }
    Ok(())
}

/// Serialize a report as pretty JSON with a trailing newline. Field order is
/// fixed by the struct definitions, so identical inputs produce identical
/// bytes.
pub fn to_json_bytes<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s.into_bytes())
}
