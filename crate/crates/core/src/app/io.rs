//! File formats: the run CSV, raw binary arrays, σ import and plot scripts.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use crate::error::{Error, Result};
use crate::solver::RunReport;

pub const SERIES_HEADER: [&str; 6] = ["t", "mass", "l2", "dissipation", "good_set_density_sq", "sigma_defect"];

fn csv_error(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Config(format!("csv: {other:?}")),
    }
}

/// Writes the diagnostics series. The first line is a `#` comment with the
/// generation time; everything after it depends only on the run.
pub fn write_series_csv(path: &Path, run: &RunReport) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    let stamp = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
    writeln!(out, "# generated unix-time {stamp}")?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SERIES_HEADER).map_err(csv_error)?;
    for s in &run.samples {
        let row = [s.t, s.mass, s.l2_sq.sqrt(), s.dissipation, s.good_set_density_sq, s.sigma_defect];
        w.write_record(row.iter().map(|v| format!("{v:.17e}"))).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

/// Rows of a series CSV, skipping comment lines.
pub fn read_series_csv(path: &Path) -> Result<Vec<[f64; 6]>> {
    let mut r = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(BufReader::new(File::open(path)?));
    let header = r.headers().map_err(csv_error)?.clone();
    if header.iter().ne(SERIES_HEADER) {
        return Err(Error::Config(format!("{}: unexpected header", path.display())));
    }
    r.records()
        .map(|rec| {
            let rec = rec.map_err(csv_error)?;
            let mut row = [0.0; 6];
            for (v, field) in row.iter_mut().zip(rec.iter()) {
                *v = field
                    .trim()
                    .parse()
                    .map_err(|_| Error::Config(format!("{}: bad number `{field}`", path.display())))?;
            }
            Ok(row)
        })
        .collect()
}

/// Raw array: the dimensions as little-endian `u64`, then the row-major
/// values as little-endian `f64`.
pub fn write_raw(path: &Path, dims: &[usize], values: &[f64]) -> Result<()> {
    let expected: usize = dims.iter().product();
    if expected != values.len() {
        return Err(Error::DimensionMismatch {
            expected,
            found: values.len(),
        });
    }
    let mut out = BufWriter::new(File::create(path)?);
    for &d in dims {
        out.write_all(&(d as u64).to_le_bytes())?;
    }
    for v in values {
        out.write_all(&v.to_le_bytes())?;
    }
    out.flush()?;
    Ok(())
}

/// Reads a raw array of known rank.
pub fn read_raw(path: &Path, rank: usize) -> Result<(Vec<usize>, Vec<f64>)> {
    let mut bytes = Vec::new();
    BufReader::new(File::open(path)?).read_to_end(&mut bytes)?;
    let bad = |why: &str| Error::Config(format!("{}: {why}", path.display()));
    if bytes.len() < 8 * rank {
        return Err(bad("truncated header"));
    }
    let word = |k: usize| <[u8; 8]>::try_from(&bytes[8 * k..8 * k + 8]).expect("8 bytes");
    let dims: Vec<usize> = (0..rank).map(|k| u64::from_le_bytes(word(k)) as usize).collect();
    let count = dims.iter().try_fold(1usize, |a, &d| a.checked_mul(d)).ok_or_else(|| bad("dimensions overflow"))?;
    if bytes.len() != 8 * (rank + count) {
        return Err(bad("payload length does not match the header"));
    }
    let values = (rank..rank + count).map(|k| f64::from_le_bytes(word(k))).collect();
    Ok((dims, values))
}

/// Imports an `n × n` σ matrix from CSV (extension `.csv`) or raw binary.
pub fn read_sigma_matrix(path: &Path, n: usize) -> Result<Vec<f64>> {
    let is_csv = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"));
    let (dims, values) = if is_csv {
        let mut r = csv::ReaderBuilder::new()
            .has_headers(false)
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_reader(BufReader::new(File::open(path)?));
        let mut values = Vec::new();
        let mut rows = 0;
        for rec in r.records() {
            let rec = rec.map_err(csv_error)?;
            if rec.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: rec.len(),
                });
            }
            for field in rec.iter() {
                values.push(
                    field
                        .parse::<f64>()
                        .map_err(|_| Error::Config(format!("{}: bad number `{field}`", path.display())))?,
                );
            }
            rows += 1;
        }
        (vec![rows, n], values)
    } else {
        read_raw(path, 2)?
    };
    if dims != [n, n] {
        return Err(Error::Config(format!(
            "{}: sigma matrix is {}x{}, grid needs {n}x{n}",
            path.display(),
            dims[0],
            dims[1]
        )));
    }
    Ok(values)
}

/// Companion gnuplot script plotting `log ‖g_t‖` and the dissipation rate.
pub fn gnuplot_script(csv_name: &str) -> String {
    format!(
        "set datafile separator ','\n\
         set key autotitle columnhead\n\
         set xlabel 't'\n\
         set logscale y\n\
         set multiplot layout 2,1\n\
         plot '{csv_name}' using 1:3 with lines title 'l2'\n\
         plot '{csv_name}' using 1:4 with lines title 'dissipation'\n\
         unset multiplot\n\
         pause -1\n"
    )
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text)?;
    Ok(())
}
