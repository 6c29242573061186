use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use ndarray::Array2;

use crate::error::{Error, Result};

const DMAT_MAGIC: &[u8; 5] = b"DMAT1";
const DMAT_HEADER: usize = DMAT_MAGIC.len() + 16;

fn parse_err<T>(offset: usize, msg: impl Into<String>) -> Result<T> {
    Err(Error::Parse {
        offset,
        msg: msg.into(),
    })
}

/// Writes `DMAT1`, rows and cols as u64, then row-major f64, all little-endian.
pub fn write_dmat<W: Write>(mut w: W, m: &Array2<f64>) -> Result<()> {
    w.write_all(DMAT_MAGIC)?;
    w.write_all(&(m.nrows() as u64).to_le_bytes())?;
    w.write_all(&(m.ncols() as u64).to_le_bytes())?;
    for v in m.iter() {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

/// Parses a DMAT byte buffer.
pub fn decode_dmat(bytes: &[u8]) -> Result<Array2<f64>> {
    if bytes.len() < DMAT_MAGIC.len() || &bytes[..DMAT_MAGIC.len()] != DMAT_MAGIC {
        return parse_err(0, "missing DMAT1 magic");
    }
    if bytes.len() < DMAT_HEADER {
        return parse_err(bytes.len(), "truncated DMAT header");
    }
    let read_u64 = |at: usize| u64::from_le_bytes(bytes[at..at + 8].try_into().expect("8 bytes"));
    let rows = read_u64(5);
    let cols = read_u64(13);
    let expected = rows
        .checked_mul(cols)
        .and_then(|c| c.checked_mul(8))
        .and_then(|b| usize::try_from(b).ok());
    let payload = bytes.len() - DMAT_HEADER;
    match expected {
        Some(len) if len == payload => {}
        Some(len) => {
            return parse_err(
                DMAT_HEADER + len.min(payload),
                format!("header declares {rows}x{cols} ({len} bytes), payload has {payload} bytes"),
            )
        }
        None => return parse_err(5, format!("dimensions {rows}x{cols} overflow")),
    }
    let values = bytes[DMAT_HEADER..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    Ok(Array2::from_shape_vec((rows as usize, cols as usize), values).expect("length checked"))
}

pub fn read_dmat<R: Read>(mut r: R) -> Result<Array2<f64>> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    decode_dmat(&bytes)
}

pub fn save_matrix(path: impl AsRef<Path>, m: &Array2<f64>) -> Result<()> {
    write_dmat(BufWriter::new(File::create(path)?), m)
}

pub fn load_matrix(path: impl AsRef<Path>) -> Result<Array2<f64>> {
    decode_dmat(&std::fs::read(path)?)
}

/// Reads a headerless, comma-separated numeric CSV.
pub fn read_csv_matrix<R: Read>(r: R) -> Result<Array2<f64>> {
    let mut reader = csv::ReaderBuilder::new().has_headers(false).from_reader(r);
    let mut values = Vec::new();
    let mut cols = None;
    let mut rows = 0;
    for record in reader.records() {
        let record = record.map_err(|e| Error::Parse {
            offset: e.position().map_or(0, |p| p.byte() as usize),
            msg: e.to_string(),
        })?;
        let offset = record.position().map_or(0, |p| p.byte() as usize);
        match cols {
            None => cols = Some(record.len()),
            Some(c) if c != record.len() => {
                return parse_err(offset, format!("expected {c} fields, found {}", record.len()))
            }
            _ => {}
        }
        for field in record.iter() {
            let v: f64 = field
                .trim()
                .parse()
                .map_err(|_| Error::Parse {
                    offset,
                    msg: format!("not a number: {field:?}"),
                })?;
            values.push(v);
        }
        rows += 1;
    }
    let cols = cols.unwrap_or(0);
    Ok(Array2::from_shape_vec((rows, cols), values).expect("rectangular"))
}

pub fn write_csv_matrix<W: Write>(w: W, m: &Array2<f64>) -> Result<()> {
    let mut writer = csv::WriterBuilder::new().has_headers(false).from_writer(w);
    for row in m.rows() {
        writer
            .write_record(row.iter().map(|v| format!("{v:?}")))
            .map_err(|e| Error::Io(e.into()))?;
    }
    writer.flush()?;
    Ok(())
}

/// Loads `.csv` files as CSV and everything else as DMAT.
pub fn load_matrix_auto(path: impl AsRef<Path>) -> Result<Array2<f64>> {
    let path = path.as_ref();
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")) {
        read_csv_matrix(File::open(path)?)
    } else {
        load_matrix(path)
    }
}

/// Writes `.csv` paths as CSV and everything else as DMAT.
pub fn save_matrix_auto(path: impl AsRef<Path>, m: &Array2<f64>) -> Result<()> {
    let path = path.as_ref();
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")) {
        write_csv_matrix(File::create(path)?, m)
    } else {
        save_matrix(path, m)
    }
}

/// One integer per line; `-1` marks an unlabeled sample.
pub fn read_labels<R: BufRead>(r: R) -> Result<Vec<Option<usize>>> {
    let mut out = Vec::new();
    let mut offset = 0;
    for line in r.lines() {
        let line = line?;
        let trimmed = line.trim();
        if !trimmed.is_empty() {
            let v: i64 = trimmed.parse().map_err(|_| Error::Parse {
                offset,
                msg: format!("not an integer label: {trimmed:?}"),
            })?;
            match v {
                -1 => out.push(None),
                v if v >= 0 => out.push(Some(v as usize)),
                _ => return parse_err(offset, format!("negative label {v}")),
            }
        }
        offset += line.len() + 1;
    }
    Ok(out)
}

pub fn write_labels<W: Write>(mut w: W, labels: &[Option<usize>]) -> Result<()> {
    for l in labels {
        match l {
            Some(c) => writeln!(w, "{c}")?,
            None => writeln!(w, "-1")?,
        }
    }
    w.flush()?;
    Ok(())
}

pub fn load_labels(path: impl AsRef<Path>) -> Result<Vec<Option<usize>>> {
    read_labels(BufReader::new(File::open(path)?))
}

pub fn save_labels(path: impl AsRef<Path>, labels: &[Option<usize>]) -> Result<()> {
    write_labels(BufWriter::new(File::create(path)?), labels)
}
