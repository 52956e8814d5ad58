//! JSON experiment configuration. Every field is optional; defaults match
//! the benchmark study (mesh sizes 16·2^ℓ, Newton tolerance 1e-12, degree-5
//! assembly with degree-7 reference integration, unit-square embedding
//! constants, both output functionals).

use anyhow::{bail, Context, Result};
use certfem::certify::{C2_UNIT_SQUARE, C4_UNIT_SQUARE};
use certfem::outputs::QoISpec;
use certfem::quadrature::QuadratureRule;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

/// One experiment: which meshes to run and with which numerical parameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields, default)]
pub struct ExperimentConfig {
    /// Mesh subdivisions N, one run per entry.
    pub mesh_sizes: Vec<usize>,
    /// Energy-norm tolerance on the Newton increment.
    pub tol_newton: f64,
    /// Newton iteration budget.
    pub max_newton_iters: usize,
    /// Polynomial exactness degree of the assembly quadrature.
    pub assembly_degree: usize,
    /// Polynomial exactness degree for reference-value integration.
    pub reference_degree: usize,
    /// L² embedding constant C₂ of the domain.
    pub c2: f64,
    /// L⁴ embedding constant C₄ of the domain.
    pub c4: f64,
    /// Override for the stability constant α; derived from the model when
    /// absent.
    pub alpha: Option<f64>,
    /// Output functionals to certify, by name.
    pub qois: Vec<String>,
    /// Output directory used when the command line does not name one.
    pub out_dir: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            mesh_sizes: vec![16, 32, 64, 128, 256],
            tol_newton: 1e-12,
            max_newton_iters: 25,
            assembly_degree: 5,
            reference_degree: 7,
            c2: C2_UNIT_SQUARE,
            c4: C4_UNIT_SQUARE,
            alpha: None,
            qois: vec![QoISpec::linear_unit().name, QoISpec::quadratic_l2().name],
            out_dir: None,
        }
    }
}

impl ExperimentConfig {
    /// Read and validate a configuration file.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config {}", path.display()))?;
        let config: ExperimentConfig = serde_json::from_str(&text)
            .with_context(|| format!("cannot parse config {}", path.display()))?;
        config.validate()?;
        Ok(config)
    }

    /// Reject configurations the pipeline cannot honor.
    pub fn validate(&self) -> Result<()> {
        if self.mesh_sizes.is_empty() {
            bail!("meshSizes must name at least one mesh");
        }
        if let Some(&n) = self.mesh_sizes.iter().find(|&&n| n < 1) {
            bail!("mesh size {n} is invalid: subdivisions must be at least 1");
        }
        if !(self.tol_newton > 0.0 && self.tol_newton.is_finite()) {
            bail!("tolNewton must be positive and finite");
        }
        if self.max_newton_iters < 1 {
            bail!("maxNewtonIters must be at least 1");
        }
        for (key, degree) in [
            ("assemblyDegree", self.assembly_degree),
            ("referenceDegree", self.reference_degree),
        ] {
            if QuadratureRule::by_degree(degree).is_none() {
                bail!("{key} {degree} is not available (supported: 5, 7)");
            }
        }
        if !(self.c2 > 0.0 && self.c2.is_finite()) {
            bail!("c2 must be positive and finite");
        }
        if !(self.c4 > 0.0 && self.c4.is_finite()) {
            bail!("c4 must be positive and finite");
        }
        if let Some(alpha) = self.alpha {
            if !(alpha > 0.0 && alpha.is_finite()) {
                bail!("alpha must be positive and finite");
            }
        }
        for name in &self.qois {
            if known_qoi(name).is_none() {
                bail!(
                    "unknown functional {name:?} (available: {}, {})",
                    QoISpec::linear_unit().name,
                    QoISpec::quadratic_l2().name
                );
            }
        }
        Ok(())
    }
}

/// Look up a functional by its configured name.
pub fn known_qoi(name: &str) -> Option<QoISpec> {
    let linear = QoISpec::linear_unit();
    if name == linear.name {
        return Some(linear);
    }
    let quadratic = QoISpec::quadratic_l2();
    if name == quadratic.name {
        return Some(quadratic);
    }
    None
}
