//! Matrix Market and CSV exchange formats.
//!
//! A system directory holds `E.mtx`, `A.mtx`, `B.mtx` and `C.mtx`
//! (coordinate real general). A missing `E.mtx` means `E = I`.

use std::fs;
use std::path::Path;

use nalgebra::DMatrix;
use nalgebra_sparse::io::{load_coo_from_matrix_market_file, load_coo_from_matrix_market_str, save_to_matrix_market};
use nalgebra_sparse::CooMatrix;

use crate::error::{Error, Result};
use crate::lti::{StateSpaceSystem, TimeSeries};
use crate::numerics::{SparseMatrix, SystemMatrix};

fn to_coo(m: &SparseMatrix) -> CooMatrix<f64> {
    let mut coo = CooMatrix::new(m.nrows(), m.ncols());
    for (i, j, v) in m.triplets() {
        coo.push(i, j, v);
    }
    coo
}

fn from_coo(coo: &CooMatrix<f64>) -> Result<SparseMatrix> {
    SparseMatrix::from_triplets(coo.nrows(), coo.ncols(), coo.triplet_iter().map(|(i, j, v)| (i, j, *v)).collect())
}

fn mm_error(context: &str, err: impl std::fmt::Display) -> Error {
    Error::Parse(format!("{context}: {err}"))
}

/// Matrix Market text (coordinate real general) of a sparse matrix.
pub fn matrix_market_string(m: &SparseMatrix) -> String {
    let mut out = Vec::new();
    save_to_matrix_market(&mut out, &to_coo(m)).expect("writing to a Vec cannot fail");
    String::from_utf8(out).expect("Matrix Market output is ASCII")
}

pub fn parse_matrix_market(text: &str) -> Result<SparseMatrix> {
    let coo = load_coo_from_matrix_market_str::<f64>(text).map_err(|e| mm_error("matrix market", e))?;
    from_coo(&coo)
}

pub fn write_matrix_market(path: impl AsRef<Path>, m: &SparseMatrix) -> Result<()> {
    fs::write(path, matrix_market_string(m))?;
    Ok(())
}

/// Read a coordinate or array Matrix Market file.
pub fn read_matrix_market(path: impl AsRef<Path>) -> Result<SparseMatrix> {
    let path = path.as_ref();
    if !path.exists() {
        return Err(Error::Io(std::io::Error::new(
            std::io::ErrorKind::NotFound,
            format!("{} does not exist", path.display()),
        )));
    }
    let coo = load_coo_from_matrix_market_file::<f64, _>(path).map_err(|e| mm_error(&path.display().to_string(), e))?;
    let m = from_coo(&coo)?;
    if m.triplets().any(|(_, _, v)| !v.is_finite()) {
        return Err(Error::NonFinite(format!("{} contains non-finite entries", path.display())));
    }
    Ok(m)
}

pub fn write_system(dir: impl AsRef<Path>, sys: &StateSpaceSystem) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    write_matrix_market(dir.join("E.mtx"), &sys.e().to_sparse())?;
    write_matrix_market(dir.join("A.mtx"), &sys.a().to_sparse())?;
    write_matrix_market(dir.join("B.mtx"), &SparseMatrix::from_dense(sys.b()))?;
    write_matrix_market(dir.join("C.mtx"), &SparseMatrix::from_dense(sys.c()))?;
    Ok(())
}

pub fn read_system(dir: impl AsRef<Path>) -> Result<StateSpaceSystem> {
    let dir = dir.as_ref();
    let a = read_matrix_market(dir.join("A.mtx"))?;
    let e_path = dir.join("E.mtx");
    let e = if e_path.exists() {
        read_matrix_market(e_path)?
    } else {
        SparseMatrix::identity(a.nrows())
    };
    let b = read_matrix_market(dir.join("B.mtx"))?.to_dense();
    let c = read_matrix_market(dir.join("C.mtx"))?.to_dense();
    StateSpaceSystem::new(SystemMatrix::Sparse(e), SystemMatrix::Sparse(a), b, c)
}

/// Shortest round-trip text; exponent form outside `[1e-4, 1e15)`.
pub fn format_number(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 {
        "0".into()
    } else if (1e-4..1e15).contains(&a) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

/// CSV with header `t,<prefix>1,...,<prefix>p`.
pub fn time_series_csv(ts: &TimeSeries, prefix: &str) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["t".to_string()];
    header.extend((1..=ts.channels()).map(|k| format!("{prefix}{k}")));
    w.write_record(&header).map_err(csv_error)?;
    for (i, t) in ts.times().iter().enumerate() {
        let mut row = vec![format_number(*t)];
        row.extend(ts.values().row(i).iter().map(|v| format_number(*v)));
        w.write_record(&row).map_err(csv_error)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Parse(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("CSV output is ASCII"))
}

fn csv_error(e: csv::Error) -> Error {
    Error::Parse(format!("csv: {e}"))
}

/// Parse a CSV whose first column is time; all other columns are channels.
pub fn parse_time_series_csv(text: &str) -> Result<TimeSeries> {
    let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let header = r.headers().map_err(csv_error)?.clone();
    if header.is_empty() || !header[0].eq_ignore_ascii_case("t") {
        return Err(Error::Parse("first CSV column must be 't'".into()));
    }
    let p = header.len() - 1;
    if p == 0 {
        return Err(Error::Parse("CSV has no data columns".into()));
    }
    let mut t = Vec::new();
    let mut vals = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(csv_error)?;
        if rec.len() != p + 1 {
            return Err(Error::Parse(format!("row {} has {} fields, expected {}", line + 2, rec.len(), p + 1)));
        }
        for (k, field) in rec.iter().enumerate() {
            let v: f64 = field
                .parse()
                .map_err(|_| Error::Parse(format!("row {}: '{field}' is not a number", line + 2)))?;
            if k == 0 {
                t.push(v);
            } else {
                vals.push(v);
            }
        }
    }
    let y = DMatrix::from_row_slice(t.len(), p, &vals);
    TimeSeries::new(t, y)
}

pub fn write_time_series_csv(path: impl AsRef<Path>, ts: &TimeSeries, prefix: &str) -> Result<()> {
    fs::write(path, time_series_csv(ts, prefix)?)?;
    Ok(())
}

pub fn read_time_series_csv(path: impl AsRef<Path>) -> Result<TimeSeries> {
    parse_time_series_csv(&fs::read_to_string(path)?)
}
