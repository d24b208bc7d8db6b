//! CSV and gnuplot emission. Floats carry 17 significant digits so that
//! every value round-trips exactly.

use std::fs;
use std::path::{Path, PathBuf};

use super::ExperimentError;

/// `x` with 17 significant digits in scientific notation.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

/// Writes a header row and data rows to `dir/name`, creating `dir`.
pub fn write_csv(
    dir: &Path,
    name: &str,
    header: &[&str],
    rows: &[Vec<String>],
) -> Result<PathBuf, ExperimentError> {
    fs::create_dir_all(dir).map_err(|e| ExperimentError::io(dir, e))?;
    let path = dir.join(name);
    let mut w = csv::Writer::from_path(&path)?;
    w.write_record(header)?;
    for row in rows {
        w.write_record(row)?;
    }
    w.flush().map_err(|e| ExperimentError::io(&path, e))?;
    Ok(path)
}

/// Gnuplot script for one of the emitted CSV files.
pub fn gnuplot_script(
    csv_name: &str,
    xlabel: &str,
    ylabel: &str,
    x_col: usize,
    y_col: usize,
    logscale: bool,
) -> String {
    let mut s = String::new();
    s.push_str("set datafile separator ','\n");
    s.push_str("set key autotitle columnhead\n");
    if logscale {
        s.push_str("set logscale xy\n");
    }
    s.push_str(&format!("set xlabel '{xlabel}'\nset ylabel '{ylabel}'\n"));
    s.push_str(&format!(
        "plot '{csv_name}' using {x_col}:{y_col} with linespoints\n"
    ));
    s
}

pub fn write_plot(dir: &Path, name: &str, script: &str) -> Result<PathBuf, ExperimentError> {
    let path = dir.join(name);
    fs::write(&path, script).map_err(|e| ExperimentError::io(&path, e))?;
    Ok(path)
}
