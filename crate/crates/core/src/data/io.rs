use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use super::Dataset;
use crate::error::{Error, Result};

fn dataset_name(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "dataset".to_owned())
}

/// Reads the fvecs layout: per vector a little-endian `i32` dimension
/// followed by that many little-endian `f32` values.
pub fn load_fvecs(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let bytes = fs::read(path)?;
    let malformed = |reason: String| Error::MalformedFile {
        path: path.to_path_buf(),
        reason,
    };
    if bytes.is_empty() {
        return Err(Error::EmptyDataset);
    }

    let mut d = None;
    let mut data = Vec::new();
    let mut pos = 0;
    let mut row = 0;
    while pos < bytes.len() {
        let header: [u8; 4] = bytes
            .get(pos..pos + 4)
            .and_then(|b| b.try_into().ok())
            .ok_or_else(|| malformed(format!("truncated dimension header of vector {row}")))?;
        let dim = i32::from_le_bytes(header);
        if dim <= 0 {
            return Err(malformed(format!("vector {row} declares dimension {dim}")));
        }
        let dim = dim as usize;
        match d {
            None => d = Some(dim),
            Some(expected) if expected != dim => {
                return Err(malformed(format!(
                    "vector {row} has dimension {dim}, expected {expected}"
                )))
            }
            _ => {}
        }
        pos += 4;
        let body = bytes
            .get(pos..pos + 4 * dim)
            .ok_or_else(|| malformed(format!("vector {row} truncated")))?;
        data.extend(
            body.chunks_exact(4)
                .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64),
        );
        pos += 4 * dim;
        row += 1;
    }
    Dataset::from_flat(dataset_name(path), d.unwrap_or(1), data)
}

/// Inverse of [`load_fvecs`]. Values are narrowed to `f32`.
pub fn write_fvecs(dataset: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let mut out = BufWriter::new(fs::File::create(path)?);
    let header = (dataset.dim() as i32).to_le_bytes();
    for row in dataset.rows() {
        out.write_all(&header)?;
        for &v in row {
            out.write_all(&(v as f32).to_le_bytes())?;
        }
    }
    out.flush()?;
    Ok(())
}

/// One vector per line, fields split by `delimiter` (any whitespace when
/// `delimiter` is itself whitespace). Blank lines and `#` comments are skipped.
pub fn load_text(path: impl AsRef<Path>, delimiter: char) -> Result<Dataset> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)?;
    let mut d = None;
    let mut data = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let parse_err = |reason: String| Error::Parse {
            path: path.to_path_buf(),
            line: lineno + 1,
            reason,
        };
        let fields: Vec<&str> = if delimiter.is_whitespace() {
            line.split_whitespace().collect()
        } else {
            line.split(delimiter).map(str::trim).collect()
        };
        match d {
            None => d = Some(fields.len()),
            Some(expected) if expected != fields.len() => {
                return Err(parse_err(format!(
                    "expected {expected} fields, found {}",
                    fields.len()
                )))
            }
            _ => {}
        }
        for field in fields {
            let v: f64 = field
                .parse()
                .map_err(|_| parse_err(format!("cannot parse {field:?} as a number")))?;
            data.push(v);
        }
    }
    let d = d.ok_or(Error::EmptyDataset)?;
    Dataset::from_flat(dataset_name(path), d, data).map_err(|e| match e {
        Error::InvalidParameter(reason) => Error::MalformedFile {
            path: path.to_path_buf(),
            reason,
        },
        other => other,
    })
}
