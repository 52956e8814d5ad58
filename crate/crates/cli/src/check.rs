//! Column-wise comparison of a produced CSV against a reference CSV:
//! identical schema required, per-column relative tolerances, worst offender
//! reported per column. Values are compared numerically, never as strings.

use anyhow::{bail, ensure, Context, Result};
use std::collections::BTreeMap;
use std::path::Path;

/// Worst observed deviation in one column.
#[derive(Debug, Clone)]
pub struct ColumnSummary {
    /// Column name from the header.
    pub column: String,
    /// Key-column value of the worst row.
    pub worst_key: String,
    /// Produced value at the worst row.
    pub got: f64,
    /// Reference value at the worst row.
    pub reference: f64,
    /// Largest relative deviation in the column.
    pub worst_rel: f64,
    /// Tolerance the column was held to.
    pub rtol: f64,
}

impl ColumnSummary {
    /// Whether the whole column is within tolerance.
    pub fn ok(&self) -> bool {
        self.worst_rel <= self.rtol
    }
}

/// Parse one `NAME=VALUE` tolerance override.
pub fn parse_rtol_spec(spec: &str) -> Result<(String, f64)> {
    let (name, value) = spec
        .split_once('=')
        .with_context(|| format!("--rtol-col expects NAME=VALUE, got {spec:?}"))?;
    ensure!(
        !name.is_empty(),
        "--rtol-col column name is empty in {spec:?}"
    );
    let rtol: f64 = value
        .parse()
        .with_context(|| format!("--rtol-col value {value:?} is not a number"))?;
    ensure!(
        rtol.is_finite() && rtol >= 0.0,
        "--rtol-col tolerance must be finite and nonnegative, got {rtol}"
    );
    Ok((name.to_string(), rtol))
}

struct Table {
    headers: Vec<String>,
    /// Raw cells, row-major; the key column is kept as text.
    rows: Vec<Vec<String>>,
}

fn read_table(path: &Path) -> Result<Table> {
    let mut reader =
        csv::Reader::from_path(path).with_context(|| format!("cannot read {}", path.display()))?;
    let headers = reader
        .headers()
        .with_context(|| format!("cannot read the header of {}", path.display()))?
        .iter()
        .map(str::to_string)
        .collect();
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record =
            record.with_context(|| format!("cannot read row {} of {}", i + 2, path.display()))?;
        rows.push(record.iter().map(str::to_string).collect());
    }
    Ok(Table { headers, rows })
}

fn parse_cell(table: &Path, row_key: &str, column: &str, cell: &str) -> Result<f64> {
    cell.trim().parse().with_context(|| {
        format!(
            "{}: cell ({row_key}, {column}) is not a number: {cell:?}",
            table.display()
        )
    })
}

/// Relative deviation, falling back to absolute when the reference is zero.
fn relative(got: f64, reference: f64) -> f64 {
    if reference == 0.0 {
        got.abs()
    } else {
        ((got - reference) / reference).abs()
    }
}

/// Compare `got` against `reference` column by column. Returns one summary
/// per data column; schema differences are errors, tolerance violations are
/// visible via [`ColumnSummary::ok`].
pub fn check_csvs(
    got_path: &Path,
    ref_path: &Path,
    default_rtol: f64,
    overrides: &BTreeMap<String, f64>,
) -> Result<Vec<ColumnSummary>> {
    ensure!(
        default_rtol.is_finite() && default_rtol >= 0.0,
        "--rtol must be finite and nonnegative, got {default_rtol}"
    );
    let got = read_table(got_path)?;
    let reference = read_table(ref_path)?;

    if got.headers != reference.headers {
        bail!(
            "schema mismatch: {} has columns {:?} but {} has {:?}",
            got_path.display(),
            got.headers,
            ref_path.display(),
            reference.headers
        );
    }
    ensure!(
        !got.headers.is_empty(),
        "schema mismatch: {} has no columns",
        got_path.display()
    );
    if got.rows.len() != reference.rows.len() {
        bail!(
            "schema mismatch: {} has {} data rows but {} has {}",
            got_path.display(),
            got.rows.len(),
            ref_path.display(),
            reference.rows.len()
        );
    }
    for name in overrides.keys() {
        ensure!(
            got.headers.contains(name),
            "--rtol-col names unknown column {name:?} (columns: {:?})",
            got.headers
        );
    }

    // the key column must agree row by row, so cells are comparable
    for (i, (g, r)) in got.rows.iter().zip(&reference.rows).enumerate() {
        if g[0] != r[0] {
            bail!(
                "schema mismatch: row {} keys differ ({:?} vs {:?})",
                i + 2,
                g[0],
                r[0]
            );
        }
    }

    let mut summaries = Vec::new();
    for c in 1..got.headers.len() {
        let column = &got.headers[c];
        let rtol = overrides.get(column).copied().unwrap_or(default_rtol);
        let mut summary = ColumnSummary {
            column: column.clone(),
            worst_key: "-".to_string(),
            got: f64::NAN,
            reference: f64::NAN,
            worst_rel: 0.0,
            rtol,
        };
        for (g_row, r_row) in got.rows.iter().zip(&reference.rows) {
            let key = &g_row[0];
            let g = parse_cell(got_path, key, column, &g_row[c])?;
            let r = parse_cell(ref_path, key, column, &r_row[c])?;
            let rel = relative(g, r);
            if rel > summary.worst_rel || summary.worst_key == "-" {
                summary.worst_rel = rel;
                summary.worst_key = key.clone();
                summary.got = g;
                summary.reference = r;
            }
        }
        summaries.push(summary);
    }
    Ok(summaries)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_tmp(dir: &tempfile::TempDir, name: &str, text: &str) -> std::path::PathBuf {
        let path = dir.path().join(name);
        let mut file = std::fs::File::create(&path).unwrap();
        file.write_all(text.as_bytes()).unwrap();
        path
    }

    #[test]
    fn identical_files_pass_at_zero_tolerance() {
        let dir = tempfile::tempdir().unwrap();
        let text = "N,eta\n16,3.553034e-01\n32,1.779646e-01\n";
        let a = write_tmp(&dir, "a.csv", text);
        let b = write_tmp(&dir, "b.csv", text);
        let summaries = check_csvs(&a, &b, 0.0, &BTreeMap::new()).unwrap();
        assert_eq!(summaries.len(), 1);
        assert!(summaries[0].ok());
        assert_eq!(summaries[0].worst_rel, 0.0);
    }

    #[test]
    fn one_percent_perturbation_is_caught_and_named() {
        let dir = tempfile::tempdir().unwrap();
        let a = write_tmp(&dir, "a.csv", "N,eta,rho\n16,3.5885e-01,7.1061e-01\n");
        let b = write_tmp(&dir, "b.csv", "N,eta,rho\n16,3.5530e-01,7.1061e-01\n");
        let summaries = check_csvs(&a, &b, 1e-3, &BTreeMap::new()).unwrap();
        let eta = summaries.iter().find(|s| s.column == "eta").unwrap();
        assert!(!eta.ok(), "a 1% deviation must exceed rtol 1e-3");
        assert_eq!(eta.worst_key, "16", "the offending row must be named");
        let rho = summaries.iter().find(|s| s.column == "rho").unwrap();
        assert!(rho.ok(), "untouched columns must pass");
    }

    #[test]
    fn per_column_overrides_take_precedence() {
        let dir = tempfile::tempdir().unwrap();
        let a = write_tmp(&dir, "a.csv", "N,eta\n16,1.000e+00\n");
        let b = write_tmp(&dir, "b.csv", "N,eta\n16,1.005e+00\n");
        let strict = check_csvs(&a, &b, 1e-3, &BTreeMap::new()).unwrap();
        assert!(!strict[0].ok());
        let loose: BTreeMap<_, _> = [("eta".to_string(), 1e-1)].into();
        let relaxed = check_csvs(&a, &b, 1e-3, &loose).unwrap();
        assert!(relaxed[0].ok());
    }

    #[test]
    fn schema_differences_are_errors_not_failures() {
        let dir = tempfile::tempdir().unwrap();
        let a = write_tmp(&dir, "a.csv", "N,eta\n16,1.0\n");
        for other in [
            "N,rho\n16,1.0\n",         // different column names
            "N,eta\n16,1.0\n32,2.0\n", // different row count
            "N,eta\n32,1.0\n",         // different key values
        ] {
            let b = write_tmp(&dir, "b.csv", other);
            let err = check_csvs(&a, &b, 1e-3, &BTreeMap::new()).unwrap_err();
            assert!(
                err.to_string().contains("schema mismatch"),
                "expected a schema error, got: {err}"
            );
        }
    }

    #[test]
    fn unknown_override_columns_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let a = write_tmp(&dir, "a.csv", "N,eta\n16,1.0\n");
        let overrides: BTreeMap<_, _> = [("misspelled".to_string(), 1e-3)].into();
        assert!(check_csvs(&a, &a, 1e-3, &overrides).is_err());
    }

    #[test]
    fn tolerance_specs_parse_and_validate() {
        assert_eq!(parse_rtol_spec("eta=1e-6").unwrap(), ("eta".into(), 1e-6));
        assert_eq!(parse_rtol_spec("p=0").unwrap(), ("p".into(), 0.0));
        assert!(parse_rtol_spec("eta").is_err());
        assert!(parse_rtol_spec("=1e-6").is_err());
        assert!(parse_rtol_spec("eta=-1").is_err());
        assert!(parse_rtol_spec("eta=NaN").is_err());
    }

    #[test]
    fn zero_reference_cells_compare_absolutely() {
        let dir = tempfile::tempdir().unwrap();
        let a = write_tmp(&dir, "a.csv", "N,inside\n16,5e-17\n");
        let b = write_tmp(&dir, "b.csv", "N,inside\n16,0.0\n");
        let summaries = check_csvs(&a, &b, 1e-3, &BTreeMap::new()).unwrap();
        assert!(
            summaries[0].ok(),
            "tiny absolute deviation from zero passes"
        );
    }
}
