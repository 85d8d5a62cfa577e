//! Input matrix formats and atomic file writes.
//!
//! Binary layout: `"SPEM"`, then little-endian `u32` N, M and dtype (0 for
//! f64), followed by N*M little-endian f64 values in row-major order.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use ndarray::Array2;

use crate::data::DataMatrix;
use crate::error::{Error, Result};

pub const SPEM_MAGIC: &[u8; 4] = b"SPEM";
pub const SPEM_HEADER_LEN: usize = 16;
const DTYPE_F64: u32 = 0;

fn format_err(path: &Path, reason: impl Into<String>) -> Error {
    Error::Format { path: path.to_path_buf(), reason: reason.into() }
}

/// Writes through a temporary file in the target directory, then renames.
pub fn write_atomic(path: &Path, body: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let tmp = tempfile::NamedTempFile::new_in(dir)?;
    {
        let mut w = BufWriter::new(tmp.as_file());
        body(&mut w)?;
        w.flush()?;
    }
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

pub fn write_spem(data: &DataMatrix, path: &Path) -> Result<()> {
    let (n, m) = (data.n(), data.m());
    let n32 = u32::try_from(n).map_err(|_| format_err(path, "N exceeds u32"))?;
    let m32 = u32::try_from(m).map_err(|_| format_err(path, "M exceeds u32"))?;
    write_atomic(path, |w| {
        w.write_all(SPEM_MAGIC)?;
        for v in [n32, m32, DTYPE_F64] {
            w.write_all(&v.to_le_bytes())?;
        }
        for v in data.points().iter() {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    })
}

pub fn read_spem(path: &Path) -> Result<DataMatrix> {
    let mut bytes = Vec::new();
    BufReader::new(File::open(path)?).read_to_end(&mut bytes)?;
    if bytes.len() < SPEM_HEADER_LEN || &bytes[..4] != SPEM_MAGIC {
        return Err(format_err(path, "missing SPEM header"));
    }
    let word = |at: usize| u32::from_le_bytes(bytes[at..at + 4].try_into().expect("4 bytes")) as usize;
    let (n, m, dtype) = (word(4), word(8), word(12));
    if dtype != DTYPE_F64 as usize {
        return Err(format_err(path, format!("unsupported dtype {dtype}")));
    }
    let expected = n.checked_mul(m).and_then(|c| c.checked_mul(8)).map(|b| b + SPEM_HEADER_LEN);
    if expected != Some(bytes.len()) {
        return Err(format_err(path, format!("{} bytes do not hold a {n}x{m} f64 matrix", bytes.len())));
    }
    let values: Vec<f64> = bytes[SPEM_HEADER_LEN..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    let points = Array2::from_shape_vec((n, m), values).map_err(|e| format_err(path, e.to_string()))?;
    DataMatrix::new(points)
}

/// One point per row. A first row that does not parse as numbers is taken as
/// a header. With `label_column`, the last column holds integer labels.
pub fn read_csv(path: &Path, label_column: bool) -> Result<DataMatrix> {
    let mut reader = csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).from_path(path).map_err(|e| format_err(path, e.to_string()))?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut labels = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| format_err(path, e.to_string()))?;
        let fields: Vec<&str> = record.iter().collect();
        let numeric = fields.iter().all(|f| f.parse::<f64>().is_ok());
        if line == 0 && !numeric {
            continue;
        }
        let split = if label_column { fields.len().saturating_sub(1) } else { fields.len() };
        if label_column {
            let raw = fields.last().ok_or_else(|| format_err(path, format!("row {} is empty", line + 1)))?;
            let label = raw
                .parse::<i64>()
                .map_err(|_| format_err(path, format!("row {}: label '{raw}' is not an integer", line + 1)))?;
            labels.push(label);
        }
        let row = fields[..split]
            .iter()
            .map(|f| f.parse::<f64>().map_err(|_| format_err(path, format!("row {}: '{f}' is not a number", line + 1))))
            .collect::<Result<Vec<f64>>>()?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(format_err(path, format!("row {} has {} values, expected {}", line + 1, row.len(), first.len())));
            }
        }
        rows.push(row);
    }
    let m = rows.first().map_or(0, Vec::len);
    let points = Array2::from_shape_vec((rows.len(), m), rows.concat()).map_err(|e| format_err(path, e.to_string()))?;
    let data = DataMatrix::new(points)?;
    if label_column {
        data.with_labels(labels)
    } else {
        Ok(data)
    }
}

pub fn write_csv(data: &DataMatrix, path: &Path) -> Result<()> {
    write_atomic(path, |w| {
        let mut out = csv::Writer::from_writer(w);
        for (i, row) in data.points().rows().into_iter().enumerate() {
            let mut fields: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            if let Some(l) = data.labels() {
                fields.push(l[i].to_string());
            }
            out.write_record(&fields).map_err(|e| Error::Io(std::io::Error::other(e)))?;
        }
        out.flush()?;
        Ok(())
    })
}

/// Reads `.spem` or `.csv` by extension.
pub fn read_matrix(path: &Path, label_column: bool) -> Result<DataMatrix> {
    match path.extension().and_then(|e| e.to_str()) {
        Some("spem") | Some("bin") => read_spem(path),
        Some("csv") | Some("txt") => read_csv(path, label_column),
        _ => Err(format_err(path, "unknown extension, expected .spem or .csv")),
    }
}
