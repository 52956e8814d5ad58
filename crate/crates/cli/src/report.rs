//! Artifact emission: the four CSV tables in fixed column order with
//! 16-significant-digit scientific notation, and report.json with the full
//! nested record. Emission is a pure function of the report, so re-running
//! it produces byte-identical files.

use anyhow::{Context, Result};
use std::fs;
use std::path::Path;

use crate::runner::{QoIRecord, RunReport, RunRow};

/// Scientific notation with a sign-and-two-digit exponent, e.g.
/// `8.838834764831844e-02` for 15 decimals (16 significant digits).
pub fn fmt_sci(x: f64, decimals: usize) -> String {
    let raw = format!("{x:.decimals$e}");
    let (mantissa, exponent) = raw.split_once('e').expect("scientific format");
    let (sign, digits) = match exponent.strip_prefix('-') {
        Some(d) => ('-', d),
        None => ('+', exponent),
    };
    format!("{mantissa}e{sign}{digits:0>2}")
}

/// CSV decimal count: 16 significant digits.
const CSV_DECIMALS: usize = 15;

fn f(x: f64) -> String {
    fmt_sci(x, CSV_DECIMALS)
}

/// Column order of nk.csv.
pub const NK_HEADER: [&str; 6] = ["N", "h", "eta", "rho", "q", "p"];
/// Column order of sanity.csv.
pub const SANITY_HEADER: [&str; 5] = ["N", "err", "rho", "ratio", "inside"];
/// Column order of the two functional tables.
pub const QOI_HEADER: [&str; 6] = [
    "N",
    "center",
    "err",
    "width_base",
    "width_adj",
    "err_over_width_adj",
];

fn write_csv(path: &Path, header: &[&str], rows: Vec<Vec<String>>) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)
        .with_context(|| format!("cannot create {}", path.display()))?;
    writer.write_record(header)?;
    for row in rows {
        writer.write_record(&row)?;
    }
    writer
        .flush()
        .with_context(|| format!("cannot write {}", path.display()))
}

fn nk_rows(report: &RunReport) -> Vec<Vec<String>> {
    report
        .rows()
        .map(|row| {
            vec![
                row.n.to_string(),
                f(row.h),
                f(row.eta),
                f(row.rho),
                f(row.q),
                f(row.p),
            ]
        })
        .collect()
}

fn sanity_rows(report: &RunReport) -> Vec<Vec<String>> {
    report
        .rows()
        .map(|row| {
            vec![
                row.n.to_string(),
                f(row.err),
                f(row.rho),
                f(row.ratio),
                if row.inside { "1" } else { "0" }.to_string(),
            ]
        })
        .collect()
}

fn qoi_rows(report: &RunReport, name: &str) -> Vec<Vec<String>> {
    let pick =
        |row: &RunRow| -> Option<QoIRecord> { row.qois.iter().find(|q| q.name == name).cloned() };
    report
        .rows()
        .filter_map(|row| {
            pick(row).map(|q| {
                vec![
                    row.n.to_string(),
                    f(q.center),
                    f(q.err_true),
                    f(q.width_base),
                    f(q.width_adj),
                    f(q.err_over_width_adj),
                ]
            })
        })
        .collect()
}

/// File names written by [`emit`].
pub const OUTPUT_FILES: [&str; 5] = [
    "nk.csv",
    "sanity.csv",
    "qoi_linear.csv",
    "qoi_quadratic.csv",
    "report.json",
];

/// Write the four CSV tables and report.json into `dir`, creating it if
/// needed.
pub fn emit(report: &RunReport, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    write_csv(&dir.join("nk.csv"), &NK_HEADER, nk_rows(report))?;
    write_csv(&dir.join("sanity.csv"), &SANITY_HEADER, sanity_rows(report))?;
    write_csv(
        &dir.join("qoi_linear.csv"),
        &QOI_HEADER,
        qoi_rows(report, "linear-unit"),
    )?;
    write_csv(
        &dir.join("qoi_quadratic.csv"),
        &QOI_HEADER,
        qoi_rows(report, "quadratic-l2"),
    )?;
    let json = serde_json::to_string_pretty(report).context("cannot serialize the report")?;
    let path = dir.join("report.json");
    fs::write(&path, json + "\n").with_context(|| format!("cannot write {}", path.display()))
}
