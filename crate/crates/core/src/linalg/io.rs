//! Plain CSV matrix interchange: one matrix row per line, no header.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use super::{DenseMatrix, LinalgError};
use crate::Scalar;

pub fn write_csv_to<T: Scalar, W: Write>(m: &DenseMatrix<T>, w: W) -> Result<(), LinalgError> {
    let mut wtr = csv::WriterBuilder::new().has_headers(false).from_writer(w);
    for i in 0..m.rows() {
        wtr.write_record(m.row(i).iter().map(|v| format!("{v:e}")))
            .map_err(|e| csv_err(i + 1, e))?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn write_csv<T: Scalar>(path: impl AsRef<Path>, m: &DenseMatrix<T>) -> Result<(), LinalgError> {
    write_csv_to(m, File::create(path)?)
}

pub fn read_csv_from<T: Scalar, R: Read>(r: R) -> Result<DenseMatrix<T>, LinalgError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(r);
    let mut rows: Vec<Vec<T>> = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| csv_err(i + 1, e))?;
        let row = rec
            .iter()
            .map(|f| {
                f.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .map(T::lit)
                    .ok_or_else(|| LinalgError::Parse {
                        line: i + 1,
                        msg: format!("bad number {f:?}"),
                    })
            })
            .collect::<Result<Vec<T>, _>>()?;
        rows.push(row);
    }
    DenseMatrix::from_rows(&rows).map_err(|_| LinalgError::Parse {
        line: 0,
        msg: "ragged rows".into(),
    })
}

pub fn read_csv<T: Scalar>(path: impl AsRef<Path>) -> Result<DenseMatrix<T>, LinalgError> {
    read_csv_from(File::open(path)?)
}

fn csv_err(line: usize, e: csv::Error) -> LinalgError {
    LinalgError::Parse {
        line,
        msg: e.to_string(),
    }
}
