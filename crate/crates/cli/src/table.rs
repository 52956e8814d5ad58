//! Human-readable rendering of one result table to a writer.

use std::io::{self, Write};

use crate::runner::RunReport;

/// Which table to render.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Which {
    /// Radius-selection data: η, ρ, q, p per mesh.
    Nk,
    /// Manufactured-solution sanity data: true error vs radius.
    Sanity,
    /// Enclosures of the linear functional.
    QoiLinear,
    /// Enclosures of the quadratic functional.
    QoiQuadratic,
}

const COL: usize = 15;

fn cell(x: f64) -> String {
    format!("{:>COL$}", crate::report::fmt_sci(x, 6))
}

fn header(out: &mut impl Write, names: &[&str]) -> io::Result<()> {
    let mut line = format!("{:>6}", names[0]);
    for name in &names[1..] {
        line.push_str(&format!("{name:>COL$}"));
    }
    writeln!(out, "{line}")
}

fn qoi_table(report: &RunReport, name: &str, out: &mut impl Write) -> io::Result<()> {
    header(
        out,
        &[
            "N",
            "center",
            "err",
            "width_base",
            "width_adj",
            "err/width_adj",
        ],
    )?;
    for row in report.rows() {
        let Some(q) = row.qois.iter().find(|q| q.name == name) else {
            continue;
        };
        writeln!(
            out,
            "{:>6}{}{}{}{}{}",
            row.n,
            cell(q.center),
            cell(q.err_true),
            cell(q.width_base),
            cell(q.width_adj),
            cell(q.err_over_width_adj)
        )?;
    }
    Ok(())
}

/// Render the chosen table. Meshes whose run failed are listed after the
/// table with their error message.
pub fn print_table(report: &RunReport, which: Which, out: &mut impl Write) -> io::Result<()> {
    match which {
        Which::Nk => {
            header(out, &["N", "h", "eta", "rho", "q", "p"])?;
            for row in report.rows() {
                writeln!(
                    out,
                    "{:>6}{}{}{}{}{}",
                    row.n,
                    cell(row.h),
                    cell(row.eta),
                    cell(row.rho),
                    cell(row.q),
                    cell(row.p)
                )?;
            }
        }
        Which::Sanity => {
            header(out, &["N", "err", "rho", "ratio", "inside"])?;
            for row in report.rows() {
                writeln!(
                    out,
                    "{:>6}{}{}{}{:>COL$}",
                    row.n,
                    cell(row.err),
                    cell(row.rho),
                    cell(row.ratio),
                    if row.inside { 1 } else { 0 }
                )?;
            }
        }
        Which::QoiLinear => qoi_table(report, "linear-unit", out)?,
        Which::QoiQuadratic => qoi_table(report, "quadratic-l2", out)?,
    }
    for outcome in &report.outcomes {
        if let Some(error) = &outcome.error {
            writeln!(out, "N={} failed: {error}", outcome.n)?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ExperimentConfig;
    use crate::runner::run_experiment;

    #[test]
    fn every_table_renders_with_aligned_header() {
        let config = ExperimentConfig {
            mesh_sizes: vec![4],
            ..ExperimentConfig::default()
        };
        let report = run_experiment(&config).unwrap();
        for which in [
            Which::Nk,
            Which::Sanity,
            Which::QoiLinear,
            Which::QoiQuadratic,
        ] {
            let mut buf = Vec::new();
            print_table(&report, which, &mut buf).unwrap();
            let text = String::from_utf8(buf).unwrap();
            let mut lines = text.lines();
            let head = lines.next().expect("header line");
            let data = lines.next().expect("one data line");
            assert!(head.trim_start().starts_with('N'), "header: {head}");
            assert_eq!(head.len(), data.len(), "columns must align:\n{text}");
        }
    }

    #[test]
    fn failed_meshes_are_listed_with_their_message() {
        let config = ExperimentConfig {
            mesh_sizes: vec![4],
            max_newton_iters: 1,
            ..ExperimentConfig::default()
        };
        let report = run_experiment(&config).unwrap();
        let mut buf = Vec::new();
        print_table(&report, Which::Nk, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.contains("N=4 failed:"), "got:\n{text}");
    }
}
