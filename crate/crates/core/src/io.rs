//! Matrix file formats.
//!
//! * CSV: one matrix row per line, comma separated, no header.
//! * DMAT: `b"DMAT"`, `u32` rows, `u32` cols (little-endian), then
//!   `rows * cols` little-endian `f64` in row-major order.
//! * PGM (P5, 8-bit) for images on a `[0, 1]` scale, write-only.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;

pub const DMAT_MAGIC: &[u8; 4] = b"DMAT";
pub const DMAT_HEADER_LEN: usize = 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MatrixFormat {
    Csv,
    Dmat,
}

impl MatrixFormat {
    /// `.csv` (any case) is CSV; everything else is DMAT.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => MatrixFormat::Csv,
            _ => MatrixFormat::Dmat,
        }
    }
}

pub fn encode_dmat(m: &DenseMatrix) -> Result<Vec<u8>> {
    let rows = u32::try_from(m.rows()).map_err(|_| Error::Format("too many rows for DMAT".into()))?;
    let cols = u32::try_from(m.cols()).map_err(|_| Error::Format("too many columns for DMAT".into()))?;
    let mut out = Vec::with_capacity(DMAT_HEADER_LEN + 8 * m.as_slice().len());
    out.extend_from_slice(DMAT_MAGIC);
    out.extend_from_slice(&rows.to_le_bytes());
    out.extend_from_slice(&cols.to_le_bytes());
    out.extend_from_slice(&0u32.to_le_bytes());
    for v in m.as_slice() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    Ok(out)
}

pub fn decode_dmat(bytes: &[u8]) -> Result<DenseMatrix> {
    if bytes.len() < DMAT_HEADER_LEN || &bytes[..4] != DMAT_MAGIC {
        return Err(Error::Format("missing DMAT header".into()));
    }
    let word = |at: usize| u32::from_le_bytes(bytes[at..at + 4].try_into().unwrap()) as usize;
    let (rows, cols) = (word(4), word(8));
    let body = &bytes[DMAT_HEADER_LEN..];
    let expected = rows
        .checked_mul(cols)
        .and_then(|n| n.checked_mul(8))
        .ok_or_else(|| Error::Format("DMAT dimensions overflow".into()))?;
    if body.len() != expected {
        return Err(Error::Format(format!("DMAT body holds {} bytes, {rows}x{cols} needs {expected}", body.len())));
    }
    let data = body.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
    DenseMatrix::new(rows, cols, data)
}

pub fn read_csv<R: Read>(reader: R) -> Result<DenseMatrix> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (lineno, line) in BufReader::new(reader).lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let row = line
            .split(',')
            .map(|tok| {
                tok.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Format(format!("line {}: bad number {tok:?}: {e}", lineno + 1)))
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    DenseMatrix::from_rows(&rows).map_err(|e| match e {
        Error::Dimension { detail, .. } => Error::Format(format!("ragged CSV: {detail}")),
        other => other,
    })
}

pub fn write_csv<W: Write>(m: &DenseMatrix, writer: W) -> Result<()> {
    let mut w = BufWriter::new(writer);
    for i in 0..m.rows() {
        let line: Vec<String> = m.row(i).iter().map(|v| format!("{v:?}")).collect();
        writeln!(w, "{}", line.join(","))?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a matrix, sniffing the DMAT magic before falling back to CSV.
pub fn read_matrix(path: impl AsRef<Path>) -> Result<DenseMatrix> {
    let bytes = std::fs::read(path.as_ref())?;
    if bytes.starts_with(DMAT_MAGIC) {
        decode_dmat(&bytes)
    } else {
        read_csv(bytes.as_slice())
    }
}

/// Writes a matrix in the format implied by the file extension.
pub fn write_matrix(path: impl AsRef<Path>, m: &DenseMatrix) -> Result<()> {
    let path = path.as_ref();
    match MatrixFormat::from_path(path) {
        MatrixFormat::Csv => write_csv(m, File::create(path)?),
        MatrixFormat::Dmat => {
            std::fs::write(path, encode_dmat(m)?)?;
            Ok(())
        }
    }
}

/// 8-bit binary PGM; values are clamped to `[0, 1]` and mapped linearly to `0..=255`.
pub fn encode_pgm(img: &DenseMatrix) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", img.cols(), img.rows()).into_bytes();
    out.extend(img.as_slice().iter().map(|v| (v.clamp(0.0, 1.0) * 255.0).round() as u8));
    out
}

pub fn write_pgm(path: impl AsRef<Path>, img: &DenseMatrix) -> Result<()> {
    std::fs::write(path, encode_pgm(img))?;
    Ok(())
}
