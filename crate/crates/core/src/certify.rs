//! Scalar Newton–Kantorovich certification: a guaranteed residual bound from
//! the equilibrated flux, the stability and Lipschitz constants of the
//! linearized operator, the admissibility polynomials p and q, and a
//! bracketing search for a verification radius that re-checks every radius
//! it accepts.
//!
//! A radius ρ is admissible when p(ρ) = η + (L(ρ)/2α)ρ² − ρ ≤ 0 and
//! q(ρ) = L(ρ)ρ/α < 1 with η = 𝔯/α; admissibility guarantees a unique weak
//! solution within energy distance ρ of the computed state.

use crate::fem::{energy_norm, P1Function};
use crate::fluxrecon::{divergence, divergence_tol, eval_rt0, PiecewiseConstantField, RT0Flux};
use crate::quadrature::QuadratureRule;
use crate::Error;

use std::f64::consts::{PI, SQRT_2};

/// Sharp L² embedding constant ‖v‖_{L²} ≤ C₂‖v‖_V on the unit square,
/// 1/(√2·π) from the smallest Dirichlet Laplace eigenvalue 2π².
pub const C2_UNIT_SQUARE: f64 = 1.0 / (SQRT_2 * PI);

/// Certified L⁴ embedding constant ‖v‖_{L⁴} ≤ C₄‖v‖_V on the unit square
/// (upper endpoint of a verified enclosure).
pub const C4_UNIT_SQUARE: f64 = 0.28524446071929;

/// Coercivity of the diffusion tensor (identity here).
pub const ALPHA0: f64 = 1.0;

/// Relative phase shift of the three-point floating-point sanity check.
pub const SANITY_DELTA: f64 = 1e-3;

/// The guaranteed residual bound 𝔯 and its two parts.
#[derive(Debug, Clone, Copy)]
pub struct ResidualBound {
    /// 𝔯 = η_mis + α₀^{−1/2} η_osc ≥ ‖F(ũ_h)‖_{V*}.
    pub r_bound: f64,
    /// Flux mismatch ‖σ_h − ∇ũ_h‖_{L²}.
    pub eta_mis: f64,
    /// Oscillation (Σ_T (h_T/π)² ‖s_h − div σ_h‖²_{L²(T)})^{1/2}.
    pub eta_osc: f64,
}

/// Guaranteed dual-norm bound on the residual of `u` from an equilibrated
/// flux: the flux-mismatch term plus the Poincaré-weighted oscillation term.
/// The flux's divergence identity against `r` is re-audited here, so a flux
/// that drifted from its source is rejected rather than silently accepted.
pub fn residual_bound(
    u: &P1Function,
    flux: &RT0Flux,
    r: &PiecewiseConstantField,
    f: impl Fn(f64, f64) -> f64,
    rule: &QuadratureRule,
) -> Result<ResidualBound, Error> {
    let mesh = u.mesh;
    let mut mis2 = 0.0;
    let mut osc2 = 0.0;
    for t in 0..mesh.triangles.len() {
        let div = divergence(flux, t);
        let target = r.values[t];
        let tol = divergence_tol(flux, t, target);
        if (div - target).abs() > tol {
            return Err(Error::DivergenceAudit {
                element: t,
                div,
                target,
                tol,
            });
        }
        let tri = mesh.tri_coords(t);
        let grad_u = u.gradient(t);
        mis2 += rule.integrate(&tri, |x, y| {
            let sig = eval_rt0(flux, t, [x, y]);
            let dx = sig[0] - grad_u[0];
            let dy = sig[1] - grad_u[1];
            dx * dx + dy * dy
        });
        let weight = mesh.diameter[t] / PI;
        osc2 += weight
            * weight
            * rule.integrate(&tri, |x, y| {
                let uq = u.value(t, mesh.barycentric(t, [x, y]));
                let s = uq * uq * uq - f(x, y);
                let d = s - div;
                d * d
            });
    }
    let eta_mis = mis2.sqrt();
    let eta_osc = osc2.sqrt();
    Ok(ResidualBound {
        r_bound: eta_mis + eta_osc / ALPHA0.sqrt(),
        eta_mis,
        eta_osc,
    })
}

/// Stability constant of the linearized operator with its justification.
#[derive(Debug, Clone, Copy)]
pub struct Stability {
    /// Lower bound α with ‖L_u^{-1}‖ ≤ α^{-1}.
    pub alpha: f64,
    /// Why the constant is valid for this model.
    pub justification: &'static str,
}

/// Stability constant for −Δ + 3u²: the reaction derivative 3u² is
/// nonnegative, so the linearization is coercive with constant 1 in the
/// energy norm. Independent of the state for this model.
pub fn stability_constant(_u: &P1Function) -> Stability {
    Stability {
        alpha: 1.0,
        justification: "monotone cubic reaction with unit diffusion: \
                        the linearization dominates the energy inner product",
    }
}

/// Affine Lipschitz bound L(ρ) = L0 + L1·ρ for the linearization of the
/// cubic reaction: L0 = 6·C₄⁴·‖u‖_V and L1 = 6·C₄⁴.
pub fn lipschitz_affine(u: &P1Function, c4: f64) -> (f64, f64) {
    assert!(c4 > 0.0, "embedding constant must be positive");
    let l1 = 6.0 * c4.powi(4);
    (l1 * energy_norm(u), l1)
}

/// The certified scalars feeding the Newton–Kantorovich admissibility check.
#[derive(Debug, Clone, Copy)]
pub struct CertConstants {
    /// Residual bound 𝔯.
    pub r_bound: f64,
    /// Stability constant α.
    pub alpha: f64,
    /// η = 𝔯/α.
    pub eta: f64,
    /// Constant part of the Lipschitz bound L(ρ) = L0 + L1ρ.
    pub l0: f64,
    /// Slope of the Lipschitz bound.
    pub l1: f64,
    /// L² embedding constant.
    pub c2: f64,
    /// L⁴ embedding constant.
    pub c4: f64,
    /// Coercivity of the diffusion tensor.
    pub alpha0: f64,
}

impl CertConstants {
    /// Bundle validated constants; η is derived as 𝔯/α.
    pub fn new(r_bound: f64, alpha: f64, l0: f64, l1: f64, c2: f64, c4: f64) -> Self {
        let consts = CertConstants {
            r_bound,
            alpha,
            eta: r_bound / alpha,
            l0,
            l1,
            c2,
            c4,
            alpha0: ALPHA0,
        };
        consts.validate();
        consts
    }

    /// Lipschitz bound at radius ρ.
    pub fn lipschitz(&self, rho: f64) -> f64 {
        self.l0 + self.l1 * rho
    }

    fn validate(&self) {
        let all = [
            self.r_bound,
            self.alpha,
            self.eta,
            self.l0,
            self.l1,
            self.c2,
            self.c4,
            self.alpha0,
        ];
        assert!(
            all.iter().all(|v| v.is_finite() && *v >= 0.0),
            "certification constants must be finite and nonnegative"
        );
        assert!(self.alpha > 0.0, "stability constant must be positive");
        assert!(
            self.l0 > 0.0 || self.l1 > 0.0,
            "Lipschitz bound must not vanish identically"
        );
        let eta_check = self.r_bound / self.alpha;
        assert!(
            (self.eta - eta_check).abs() <= 1e-15 * eta_check.abs().max(1.0),
            "eta must equal r_bound/alpha"
        );
    }
}

/// Evaluate the admissibility pair (p(ρ), q(ρ)) at a positive radius.
pub fn pq(consts: &CertConstants, rho: f64) -> (f64, f64) {
    assert!(rho > 0.0, "radius must be positive");
    let l = consts.lipschitz(rho);
    let p = consts.eta + l / (2.0 * consts.alpha) * rho * rho - rho;
    let q = l * rho / consts.alpha;
    (p, q)
}

fn is_admissible(consts: &CertConstants, rho: f64) -> (bool, f64, f64) {
    let (p, q) = pq(consts, rho);
    (p <= 0.0 && q < 1.0, p, q)
}

/// How [`select_radius`] arrived at its radius.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SelectionPath {
    /// The initial guess 2η was already admissible.
    AcceptedInitial,
    /// An admissible radius was found by dyadic shrinking and sharpened by
    /// bisection.
    BracketedBisected,
    /// No admissible radius was found.
    Fail,
}

impl std::fmt::Display for SelectionPath {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SelectionPath::AcceptedInitial => "accepted-initial",
            SelectionPath::BracketedBisected => "bracketed+bisected",
            SelectionPath::Fail => "fail",
        })
    }
}

/// Outcome of the radius selection, with the full evaluation trace.
#[derive(Debug, Clone)]
pub struct NKReport {
    /// Selected radius (the inadmissible initial guess on the fail path).
    pub rho: f64,
    /// p(ρ) at the reported radius.
    pub p_val: f64,
    /// q(ρ) at the reported radius.
    pub q_val: f64,
    /// Whether the reported radius passes both checks.
    pub admissible: bool,
    /// Which branch produced the radius.
    pub path: SelectionPath,
    /// Every evaluated (ρ, p(ρ), q(ρ)) in evaluation order.
    pub trace: Vec<(f64, f64, f64)>,
    /// p at (1−δ)ρ and (1+δ)ρ with δ = [`SANITY_DELTA`]; recorded on
    /// success so near-boundary acceptances are visible.
    pub sanity: Option<(f64, f64)>,
}

fn sanity_probe(consts: &CertConstants, rho: f64) -> Option<(f64, f64)> {
    let lo = pq(consts, rho * (1.0 - SANITY_DELTA)).0;
    let hi = pq(consts, rho * (1.0 + SANITY_DELTA)).0;
    Some((lo, hi))
}

fn bisect_with_trace(
    consts: &CertConstants,
    mut lo: (f64, f64, f64),
    mut hi: f64,
    k_max: usize,
    trace: &mut Vec<(f64, f64, f64)>,
) -> (f64, f64, f64) {
    for _ in 0..k_max {
        let mid = 0.5 * (lo.0 + hi);
        let (ok, p, q) = is_admissible(consts, mid);
        trace.push((mid, p, q));
        if ok {
            lo = (mid, p, q);
        } else {
            hi = mid;
        }
    }
    lo
}

/// Sharpen an admissibility bracket by bisection: `lo` must be admissible
/// and `hi` inadmissible. Each step keeps the bracket property, so the
/// returned radius is admissible and within 2^{−k_max}·(hi − lo) of the
/// admissible set's upper boundary.
pub fn bisect_admissible(consts: &CertConstants, lo: f64, hi: f64, k_max: usize) -> f64 {
    consts.validate();
    assert!(0.0 < lo && lo < hi, "bracket must satisfy 0 < lo < hi");
    let (lo_ok, p, q) = is_admissible(consts, lo);
    assert!(lo_ok, "lower bracket endpoint must be admissible");
    let (hi_ok, ..) = is_admissible(consts, hi);
    assert!(!hi_ok, "upper bracket endpoint must be inadmissible");
    let mut trace = Vec::new();
    bisect_with_trace(consts, (lo, p, q), hi, k_max, &mut trace).0
}

/// Select a verification radius: try ρ = 2η first; otherwise shrink
/// dyadically at most `j_max` times looking for an admissible radius, then
/// sharpen with `k_max` bisection steps. Every radius this returns as
/// admissible has been checked directly; failure is reported as a value
/// (with the initial guess and its p, q), never as a panic.
pub fn select_radius(consts: &CertConstants, j_max: usize, k_max: usize) -> NKReport {
    consts.validate();
    assert!(
        j_max >= 1 && k_max >= 1,
        "search budgets must be at least 1"
    );
    let mut trace = Vec::new();
    let rho0 = 2.0 * consts.eta;
    if rho0 == 0.0 {
        // zero residual: the initial guess degenerates to radius 0, which is
        // not a usable ball; report failure explicitly
        return NKReport {
            rho: 0.0,
            p_val: f64::NAN,
            q_val: f64::NAN,
            admissible: false,
            path: SelectionPath::Fail,
            trace,
            sanity: None,
        };
    }
    let (ok0, p0, q0) = is_admissible(consts, rho0);
    trace.push((rho0, p0, q0));
    if ok0 {
        return NKReport {
            rho: rho0,
            p_val: p0,
            q_val: q0,
            admissible: true,
            path: SelectionPath::AcceptedInitial,
            trace,
            sanity: sanity_probe(consts, rho0),
        };
    }
    let mut rho_up = rho0;
    let mut found = None;
    for _ in 0..j_max {
        let cand = rho_up / 2.0;
        let (ok, p, q) = is_admissible(consts, cand);
        trace.push((cand, p, q));
        if ok {
            found = Some((cand, p, q));
            break;
        }
        rho_up = cand;
    }
    match found {
        Some(lo) => {
            let (rho, p, q) = bisect_with_trace(consts, lo, 2.0 * lo.0, k_max, &mut trace);
            NKReport {
                rho,
                p_val: p,
                q_val: q,
                admissible: true,
                path: SelectionPath::BracketedBisected,
                trace,
                sanity: sanity_probe(consts, rho),
            }
        }
        None => NKReport {
            rho: rho0,
            p_val: p0,
            q_val: q0,
            admissible: false,
            path: SelectionPath::Fail,
            trace,
            sanity: None,
        },
    }
}

/// Brute-force admissibility over the arithmetic grid ρ_k = k·step for
/// k = 1, …, ⌊rho_max/step⌋; returns the admissible indices k in order.
/// Serves as the oracle for interval-structure checks.
pub fn scan_admissible(consts: &CertConstants, step: f64, rho_max: f64) -> Vec<usize> {
    consts.validate();
    assert!(step > 0.0 && rho_max > 0.0, "grid must be positive");
    let mut out = Vec::new();
    let count = (rho_max / step).floor() as usize;
    for k in 1..=count {
        let rho = k as f64 * step;
        if is_admissible(consts, rho).0 {
            out.push(k);
        }
    }
    out
}
