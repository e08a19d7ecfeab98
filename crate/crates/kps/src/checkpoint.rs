//! Multiplier checkpointing for resumable solves.
//!
//! The file is line-oriented text with a trailing FNV-1a checksum over all
//! preceding bytes; multipliers are written in shortest round-trip form so
//! a resume restores them bit-exactly.

use std::fmt;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use kps_core::Multipliers;

const MAGIC: &str = "KPCKPT v1";

#[derive(Debug)]
pub enum CheckpointError {
    NotFound(PathBuf),
    Io(io::Error),
    /// Truncated or corrupted file: the stored checksum does not match.
    Checksum(PathBuf),
    Parse { line: usize, message: String },
}

impl fmt::Display for CheckpointError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CheckpointError::NotFound(path) => write!(f, "checkpoint {} not found", path.display()),
            CheckpointError::Io(err) => write!(f, "checkpoint io error: {err}"),
            CheckpointError::Checksum(path) => {
                write!(f, "checkpoint {} failed checksum verification", path.display())
            }
            CheckpointError::Parse { line, message } => {
                write!(f, "checkpoint line {line}: {message}")
            }
        }
    }
}

impl std::error::Error for CheckpointError {}

impl From<io::Error> for CheckpointError {
    fn from(err: io::Error) -> Self {
        CheckpointError::Io(err)
    }
}

fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash = 0xcbf2_9ce4_8422_2325u64;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

/// Writes the multipliers and their iteration to `path`.
pub fn checkpoint(multipliers: &Multipliers, path: &Path) -> Result<(), CheckpointError> {
    let mut body = String::new();
    body.push_str(MAGIC);
    body.push('\n');
    body.push_str(&format!("iter {}\n", multipliers.iteration));
    body.push_str(&format!("k {}\n", multipliers.values.len()));
    body.push_str("lambda");
    for v in &multipliers.values {
        body.push_str(&format!(" {v}"));
    }
    body.push('\n');
    let checksum = fnv1a64(body.as_bytes());
    let mut file = std::fs::File::create(path)?;
    file.write_all(body.as_bytes())?;
    writeln!(file, "checksum {checksum:016x}")?;
    Ok(())
}

/// Restores a checkpoint written by [`checkpoint`]; the bulk-synchronous
/// loop continues at `iteration + 1`.
pub fn resume(path: &Path) -> Result<Multipliers, CheckpointError> {
    let text = match std::fs::read_to_string(path) {
        Ok(text) => text,
        Err(err) if err.kind() == io::ErrorKind::NotFound => {
            return Err(CheckpointError::NotFound(path.to_path_buf()))
        }
        Err(err) => return Err(err.into()),
    };

    // split off the checksum line and verify it against the rest
    let Some(split) = text.rfind("checksum ") else {
        return Err(CheckpointError::Checksum(path.to_path_buf()));
    };
    let (body, checksum_line) = text.split_at(split);
    let stored = checksum_line
        .trim_start_matches("checksum ")
        .trim();
    let Ok(stored) = u64::from_str_radix(stored, 16) else {
        return Err(CheckpointError::Checksum(path.to_path_buf()));
    };
    if stored != fnv1a64(body.as_bytes()) {
        return Err(CheckpointError::Checksum(path.to_path_buf()));
    }

    let mut lines = body.lines().enumerate();
    let parse_err = |line: usize, message: &str| CheckpointError::Parse {
        line: line + 1,
        message: message.to_string(),
    };
    let (i, magic) = lines.next().ok_or_else(|| parse_err(0, "empty file"))?;
    if magic != MAGIC {
        return Err(parse_err(i, "bad magic"));
    }
    let (i, iter_line) = lines.next().ok_or_else(|| parse_err(1, "missing iter"))?;
    let iteration: u32 = iter_line
        .strip_prefix("iter ")
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| parse_err(i, "bad iter line"))?;
    let (i, k_line) = lines.next().ok_or_else(|| parse_err(2, "missing k"))?;
    let k: usize = k_line
        .strip_prefix("k ")
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| parse_err(i, "bad k line"))?;
    let (i, lambda_line) = lines.next().ok_or_else(|| parse_err(3, "missing lambda"))?;
    let rest = lambda_line
        .strip_prefix("lambda")
        .ok_or_else(|| parse_err(i, "bad lambda line"))?;
    let values: Vec<f64> = rest
        .split_whitespace()
        .map(|tok| tok.parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|e| parse_err(i, &format!("bad multiplier: {e}")))?;
    if values.len() != k {
        return Err(parse_err(i, "lambda count does not match k"));
    }
    Ok(Multipliers { values, iteration })
}
