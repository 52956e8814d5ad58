//! The per-mesh certification pipeline: discrete solve, flux reconstruction,
//! radius selection, manufactured-solution sanity data, and both enclosure
//! routes for every configured functional. A failure on one mesh is recorded
//! and the remaining meshes still run.

use anyhow::{bail, Context, Result};
use certfem::certify::{
    lipschitz_affine, residual_bound, select_radius, stability_constant, CertConstants,
};
use certfem::fem::{energy_error_vs, newton_solve, NewtonSettings};
use certfem::fluxrecon::{project_source, reconstruct_rt0, solve_cr};
use certfem::manufactured;
use certfem::mesh::build_uniform;
use certfem::outputs::{adjoint_enclosure, baseline_enclosure, solve_adjoint, QoIKind, QoISpec};
use certfem::quadrature::QuadratureRule;
use serde::Serialize;

use crate::config::{known_qoi, ExperimentConfig};

/// Search budgets for the radius selection: dyadic shrink steps and
/// bisection steps.
pub const SHRINK_BUDGET: usize = 60;
/// Bisection step budget paired with [`SHRINK_BUDGET`].
pub const BISECT_BUDGET: usize = 60;

/// Certified data for one functional on one mesh.
#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct QoIRecord {
    /// Functional name from the configuration.
    pub name: String,
    /// J(ũ_h), the midpoint of both intervals.
    pub center: f64,
    /// |J(u*) − center| against the analytic value.
    pub err_true: f64,
    /// Baseline half-width from the radius alone.
    pub width_base: f64,
    /// Itemized baseline terms summing to `width_base`.
    pub base_budget: Vec<f64>,
    /// Adjoint-enhanced half-width.
    pub width_adj: f64,
    /// Itemized adjoint terms summing to `width_adj`.
    pub adj_budget: Vec<f64>,
    /// err_true / width_adj, the sharpness of the adjoint interval.
    pub err_over_width_adj: f64,
}

/// Everything certified on one mesh.
#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct RunRow {
    /// Mesh subdivisions.
    pub n: usize,
    /// Element diameter h = √2/N.
    pub h: f64,
    /// Flux-mismatch part of the residual bound.
    pub eta_mis: f64,
    /// Oscillation part of the residual bound.
    pub eta_osc: f64,
    /// η = 𝔯/α.
    pub eta: f64,
    /// Stability constant used.
    pub alpha: f64,
    /// Constant part of the Lipschitz bound.
    pub l0: f64,
    /// Slope of the Lipschitz bound.
    pub l1: f64,
    /// Selected (or attempted) radius.
    pub rho: f64,
    /// p(ρ) at the reported radius.
    pub p: f64,
    /// q(ρ) at the reported radius.
    pub q: f64,
    /// Which selection branch produced ρ.
    pub path: String,
    /// Whether both admissibility checks hold at ρ.
    pub admissible: bool,
    /// p at (1 ∓ δ)ρ, recorded on success.
    pub sanity: Option<(f64, f64)>,
    /// Every evaluated (ρ, p, q) of the radius search.
    pub trace: Vec<(f64, f64, f64)>,
    /// Newton steps taken.
    pub newton_iters: usize,
    /// True energy error ‖u* − ũ_h‖_V.
    pub err: f64,
    /// err / ρ.
    pub ratio: f64,
    /// Whether the true error lies inside the verified ball.
    pub inside: bool,
    /// Functional certificates, in configuration order.
    pub qois: Vec<QoIRecord>,
}

/// Result for one mesh: either a full row or the failure message.
#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct RunOutcome {
    /// Mesh subdivisions.
    pub n: usize,
    /// The certified row, when the pipeline succeeded.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub row: Option<RunRow>,
    /// The failure, when it did not.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// The full experiment output: the configuration echo plus one outcome per
/// configured mesh, in configuration order.
#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct RunReport {
    /// The configuration that produced this report.
    pub config: ExperimentConfig,
    /// One entry per configured mesh.
    pub outcomes: Vec<RunOutcome>,
}

impl RunReport {
    /// The successful rows, in run order.
    pub fn rows(&self) -> impl Iterator<Item = &RunRow> {
        self.outcomes.iter().filter_map(|o| o.row.as_ref())
    }
}

/// Run the whole experiment. Individual mesh failures are captured in the
/// report; only configuration errors abort.
pub fn run_experiment(config: &ExperimentConfig) -> Result<RunReport> {
    config.validate()?;
    let outcomes = config
        .mesh_sizes
        .iter()
        .map(|&n| match run_single(n, config) {
            Ok(row) => RunOutcome {
                n,
                row: Some(row),
                error: None,
            },
            Err(e) => RunOutcome {
                n,
                row: None,
                error: Some(format!("{e:#}")),
            },
        })
        .collect();
    Ok(RunReport {
        config: config.clone(),
        outcomes,
    })
}

fn analytic_value(spec: &QoISpec) -> f64 {
    match spec.kind {
        QoIKind::Linear(_) => manufactured::j1_exact(),
        QoIKind::QuadraticL2 => manufactured::j2_exact(),
    }
}

fn run_single(n: usize, config: &ExperimentConfig) -> Result<RunRow> {
    let assembly = QuadratureRule::by_degree(config.assembly_degree)
        .context("assembly quadrature degree was validated")?;
    let reference = QuadratureRule::by_degree(config.reference_degree)
        .context("reference quadrature degree was validated")?;
    let mesh = build_uniform(n);

    let settings = NewtonSettings {
        tol: config.tol_newton,
        max_iters: config.max_newton_iters,
    };
    let solution = newton_solve(&mesh, manufactured::source, &settings, &assembly)
        .with_context(|| format!("Newton solve failed on the {n}x{n} mesh"))?;
    if !solution.converged {
        bail!(
            "Newton did not reach tolerance {:.1e} within {} steps on the {n}x{n} mesh",
            config.tol_newton,
            config.max_newton_iters
        );
    }
    let u = solution.u;

    let r = project_source(&u, manufactured::source, &assembly);
    let ucr = solve_cr(&r).with_context(|| format!("broken solve failed on the {n}x{n} mesh"))?;
    let sigma = reconstruct_rt0(&ucr, &r)
        .with_context(|| format!("flux reconstruction failed on the {n}x{n} mesh"))?;
    let rb = residual_bound(&u, &sigma, &r, manufactured::source, &assembly)
        .with_context(|| format!("residual bound failed on the {n}x{n} mesh"))?;

    let alpha = config.alpha.unwrap_or_else(|| stability_constant(&u).alpha);
    let (l0, l1) = lipschitz_affine(&u, config.c4);
    let consts = CertConstants::new(rb.r_bound, alpha, l0, l1, config.c2, config.c4);
    let nk = select_radius(&consts, SHRINK_BUDGET, BISECT_BUDGET);

    let err = energy_error_vs(&u, manufactured::grad_u_star, &reference);
    let ratio = err / nk.rho;
    let inside = nk.admissible && err <= nk.rho;

    // an inadmissible radius is a result, not a pipeline failure: the NK and
    // sanity rows are still reported, but no enclosure can be certified
    let mut qois = Vec::with_capacity(config.qois.len());
    for name in config.qois.iter().filter(|_| nk.admissible) {
        let spec = known_qoi(name).context("functional names were validated")?;
        let base = baseline_enclosure(&spec, &u, nk.rho, config.c2, &assembly);
        let z = solve_adjoint(&u, &spec, &assembly)
            .with_context(|| format!("adjoint solve failed for {name} on the {n}x{n} mesh"))?;
        let adj = adjoint_enclosure(&spec, &u, &z, &nk, &consts, manufactured::source, &assembly)
            .with_context(|| {
            format!("adjoint enclosure failed for {name} on the {n}x{n} mesh")
        })?;
        let err_true = (analytic_value(&spec) - base.center).abs();
        qois.push(QoIRecord {
            name: name.clone(),
            center: base.center,
            err_true,
            width_base: base.half_width,
            base_budget: base.budget,
            width_adj: adj.half_width,
            adj_budget: adj.budget,
            err_over_width_adj: err_true / adj.half_width,
        });
    }

    Ok(RunRow {
        n,
        h: mesh.diameter[0],
        eta_mis: rb.eta_mis,
        eta_osc: rb.eta_osc,
        eta: consts.eta,
        alpha,
        l0,
        l1,
        rho: nk.rho,
        p: nk.p_val,
        q: nk.q_val,
        path: nk.path.to_string(),
        admissible: nk.admissible,
        sanity: nk.sanity,
        trace: nk.trace,
        newton_iters: solution.increment_norms.len(),
        err,
        ratio,
        inside,
        qois,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_config(sizes: Vec<usize>) -> ExperimentConfig {
        ExperimentConfig {
            mesh_sizes: sizes,
            ..ExperimentConfig::default()
        }
    }

    #[test]
    fn smallest_mesh_runs_but_cannot_certify() {
        let report = run_experiment(&small_config(vec![1])).unwrap();
        assert_eq!(report.outcomes.len(), 1);
        let row = report.outcomes[0].row.as_ref().expect("N=1 must run");
        assert!(row.eta.is_finite() && row.eta > 0.0);
        assert!(!row.trace.is_empty(), "the radius search must be traced");
        // the residual is far too large on a two-element mesh: the search
        // must report failure and no enclosure may be fabricated
        assert!(!row.admissible);
        assert_eq!(row.path, "fail");
        assert!(!row.inside);
        assert!(
            row.qois.is_empty(),
            "no interval without an admissible radius"
        );
    }

    #[test]
    fn moderate_meshes_certify_and_enclose() {
        let report = run_experiment(&small_config(vec![8])).unwrap();
        let row = report.outcomes[0].row.as_ref().unwrap();
        assert!(row.admissible);
        assert_eq!(row.path, "accepted-initial");
        assert_eq!(row.qois.len(), 2);
        assert!(row.inside);
    }

    #[test]
    fn rows_expose_enough_scalars_to_reverify_admissibility() {
        let report = run_experiment(&small_config(vec![8])).unwrap();
        let row = report.outcomes[0].row.as_ref().unwrap();
        assert!(row.admissible, "the 8x8 mesh must certify");
        // re-evaluate p, q from the emitted scalars alone
        let l = row.l0 + row.l1 * row.rho;
        let p = row.eta + l / (2.0 * row.alpha) * row.rho * row.rho - row.rho;
        let q = l * row.rho / row.alpha;
        assert!((p - row.p).abs() <= 1e-14 * row.p.abs().max(1.0));
        assert!((q - row.q).abs() <= 1e-14 * row.q.abs().max(1.0));
        assert!(p <= 0.0 && q < 1.0);
    }

    #[test]
    fn unconverged_newton_is_reported_not_panicked() {
        let config = ExperimentConfig {
            mesh_sizes: vec![8, 4],
            max_newton_iters: 1,
            ..ExperimentConfig::default()
        };
        let report = run_experiment(&config).unwrap();
        assert_eq!(report.outcomes.len(), 2, "both meshes must be attempted");
        for outcome in &report.outcomes {
            assert!(outcome.row.is_none());
            let msg = outcome.error.as_ref().expect("failure must be recorded");
            assert!(msg.contains("Newton"), "message must name the stage: {msg}");
        }
    }

    #[test]
    fn empty_qoi_list_is_allowed() {
        let config = ExperimentConfig {
            mesh_sizes: vec![4],
            qois: vec![],
            ..ExperimentConfig::default()
        };
        let report = run_experiment(&config).unwrap();
        let row = report.outcomes[0].row.as_ref().unwrap();
        assert!(row.qois.is_empty());
    }

    #[test]
    fn eta_halves_between_consecutive_meshes() {
        let report = run_experiment(&small_config(vec![16, 32])).unwrap();
        let rows: Vec<_> = report.rows().collect();
        let ratio = rows[0].eta / rows[1].eta;
        assert!(
            (1.9..=2.1).contains(&ratio),
            "eta must halve under refinement, ratio {ratio:.4}"
        );
    }
}
