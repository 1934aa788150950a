//! Flattens the CSV outputs of a run into one tidy table for plotting.
//!
//! Output columns: `source,series,x,y,y_lo,y_hi`. In each input table the
//! first column is the abscissa and every other column a series. A column
//! named `stderr`, or `<series>_stderr`, becomes a 95% band around the
//! series it follows or names. When the first column repeats (long-format
//! tables such as density snapshots) it is a grouping key: the second
//! column is the abscissa and each series is split per key value.

use std::path::Path;

use anyhow::{bail, Context, Result};

use crate::output::RunManifest;

const Z95: f64 = 1.96;

struct Table {
    header: Vec<String>,
    rows: Vec<Vec<Option<f64>>>,
}

fn read_table(path: &Path) -> Result<Table> {
    let mut r = csv::Reader::from_path(path).with_context(|| format!("reading {}", path.display()))?;
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    let mut rows = Vec::new();
    for rec in r.records() {
        rows.push(rec?.iter().map(|f| f.trim().parse::<f64>().ok()).collect());
    }
    Ok(Table { header, rows })
}

fn is_grouped(t: &Table) -> bool {
    if t.header.len() < 3 || t.rows.len() < 2 {
        return false;
    }
    let first: Vec<Option<f64>> = t.rows.iter().map(|r| r[0]).collect();
    let sorted = first
        .windows(2)
        .all(|w| matches!((w[0], w[1]), (Some(a), Some(b)) if a <= b));
    sorted && first.windows(2).any(|w| w[0] == w[1])
}

/// Index of the error column for each series column.
fn error_columns(header: &[String], skip: usize) -> Vec<(usize, Option<usize>)> {
    let mut out = Vec::new();
    for (j, name) in header.iter().enumerate().skip(skip) {
        if name == "stderr" || name.ends_with("_stderr") {
            continue;
        }
        let named = header.iter().position(|h| *h == format!("{name}_stderr"));
        let next = header.get(j + 1).filter(|h| *h == "stderr").map(|_| j + 1);
        out.push((j, named.or(next)));
    }
    out
}

fn fmt(v: f64) -> String {
    format!("{v:?}")
}

fn emit(w: &mut csv::Writer<Vec<u8>>, source: &str, series: &str, x: f64, y: f64, err: Option<f64>) -> Result<()> {
    let (lo, hi) = match err {
        Some(e) => (fmt(y - Z95 * e), fmt(y + Z95 * e)),
        None => (String::new(), String::new()),
    };
    w.write_record([source, series, &fmt(x), &fmt(y), &lo, &hi])?;
    Ok(())
}

/// Tidy CSV of every table listed in the run's manifest.
pub fn plot_data(run_dir: &Path) -> Result<String> {
    if !run_dir.is_dir() {
        bail!("{} is not a run directory", run_dir.display());
    }
    let manifest = RunManifest::load(run_dir)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["source", "series", "x", "y", "y_lo", "y_hi"])?;
    for out in manifest.outputs.iter().filter(|o| o.file.ends_with(".csv")) {
        let t = read_table(&run_dir.join(&out.file))?;
        if t.header.len() < 2 {
            continue;
        }
        let grouped = is_grouped(&t);
        let x_col = usize::from(grouped);
        for (col, err_col) in error_columns(&t.header, x_col + 1) {
            for row in &t.rows {
                let (Some(x), Some(y)) = (row[x_col], row[col]) else {
                    continue;
                };
                let series = match (grouped, row[0]) {
                    (true, Some(g)) => format!("{}@{}={}", t.header[col], t.header[0], fmt(g)),
                    _ => t.header[col].clone(),
                };
                emit(&mut w, &out.file, &series, x, y, err_col.and_then(|e| row[e]))?;
            }
        }
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}
