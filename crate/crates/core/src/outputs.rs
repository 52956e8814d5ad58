//! Certified enclosures for output functionals: a baseline interval from
//! the verified radius alone, and an adjoint-enhanced interval whose
//! half-width combines the primal residual pairing, the Lipschitz tail, a
//! guaranteed dual-norm bound on the adjoint residual, and the functional's
//! own curvature.

use crate::certify::{CertConstants, NKReport};
use crate::fem::{
    assemble_jacobian, assemble_load, assemble_residual, energy_norm, free_vertices, solve_spd,
    P1Function,
};
use crate::fluxrecon::{reconstruct_rt0, solve_cr, PiecewiseConstantField};
use crate::quadrature::QuadratureRule;
use crate::Error;

/// The supported output functionals.
#[derive(Debug, Clone, Copy)]
pub enum QoIKind {
    /// J(v) = ∫ ψ v with a fixed weight ψ.
    Linear(fn(f64, f64) -> f64),
    /// J(v) = ½ ∫ v².
    QuadraticL2,
}

/// A named output functional.
#[derive(Debug, Clone)]
pub struct QoISpec {
    /// Identifier used in reports.
    pub name: String,
    /// Functional shape.
    pub kind: QoIKind,
}

impl QoISpec {
    /// The volume average J(v) = ∫ v (weight ψ ≡ 1).
    pub fn linear_unit() -> Self {
        QoISpec {
            name: "linear-unit".to_string(),
            kind: QoIKind::Linear(|_, _| 1.0),
        }
    }

    /// The quadratic energy J(v) = ½ ∫ v².
    pub fn quadratic_l2() -> Self {
        QoISpec {
            name: "quadratic-l2".to_string(),
            kind: QoIKind::QuadraticL2,
        }
    }
}

/// Which estimate produced an enclosure.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnclosureKind {
    /// Lipschitz-only interval from the verified radius.
    Baseline,
    /// Goal-oriented interval using the discrete adjoint.
    Adjoint,
}

/// A guaranteed two-sided enclosure J(u) ∈ [lo, hi].
#[derive(Debug, Clone)]
pub struct Enclosure {
    /// J(ũ_h), the midpoint.
    pub center: f64,
    /// Certified half-width.
    pub half_width: f64,
    /// center − half_width.
    pub lo: f64,
    /// center + half_width.
    pub hi: f64,
    /// Which estimate was used.
    pub kind: EnclosureKind,
    /// Itemized nonnegative terms summing to `half_width`. Baseline:
    /// [L_J·ρ, ½M_J·ρ²]. Adjoint: [|⟨F(ũ),z⟩|, ½L(ρ)ρ²‖z‖_V,
    /// (𝔯+½L(ρ)ρ²)α⁻¹·‖G(z)‖ bound, ½M_J·ρ²].
    pub budget: Vec<f64>,
}

impl Enclosure {
    fn from_budget(center: f64, kind: EnclosureKind, budget: Vec<f64>) -> Self {
        debug_assert!(budget.iter().all(|&t| t >= 0.0));
        let half_width = budget.iter().sum();
        Enclosure {
            center,
            half_width,
            lo: center - half_width,
            hi: center + half_width,
            kind,
            budget,
        }
    }

    /// Whether `value` lies in the closed interval.
    pub fn contains(&self, value: f64) -> bool {
        self.lo <= value && value <= self.hi
    }
}

/// Evaluate the functional at a discrete state.
pub fn eval_qoi(spec: &QoISpec, u: &P1Function, rule: &QuadratureRule) -> f64 {
    let mesh = u.mesh;
    let mut total = 0.0;
    for t in 0..mesh.triangles.len() {
        let tri = mesh.tri_coords(t);
        let area = mesh.area[t];
        for (lambda, w) in rule.points.iter().zip(&rule.weights) {
            let uq = u.value(t, *lambda);
            total += w
                * area
                * match spec.kind {
                    QoIKind::Linear(psi) => {
                        let x =
                            lambda[0] * tri[0][0] + lambda[1] * tri[1][0] + lambda[2] * tri[2][0];
                        let y =
                            lambda[0] * tri[0][1] + lambda[1] * tri[1][1] + lambda[2] * tri[2][1];
                        psi(x, y) * uq
                    }
                    QoIKind::QuadraticL2 => 0.5 * uq * uq,
                };
        }
    }
    total
}

/// Certified local Lipschitz and curvature constants of the functional on
/// the verification ball: linear — (C₂‖ψ‖_{L²}, 0); quadratic —
/// (C₂(‖u‖_{L²} + C₂ρ), C₂²).
pub fn qoi_constants(
    spec: &QoISpec,
    u: &P1Function,
    rho: f64,
    c2: f64,
    rule: &QuadratureRule,
) -> (f64, f64) {
    assert!(rho >= 0.0, "radius must be nonnegative");
    match spec.kind {
        QoIKind::Linear(psi) => {
            let mesh = u.mesh;
            let mut psi_sq = 0.0;
            for t in 0..mesh.triangles.len() {
                let tri = mesh.tri_coords(t);
                psi_sq += rule.integrate(&tri, |x, y| psi(x, y) * psi(x, y));
            }
            (c2 * psi_sq.sqrt(), 0.0)
        }
        QoIKind::QuadraticL2 => {
            let u_l2 = crate::fem::l2_norm(u, rule);
            (c2 * (u_l2 + c2 * rho), c2 * c2)
        }
    }
}

/// Baseline enclosure from the verified radius alone:
/// half-width L_J(ρ)·ρ + ½M_J(ρ)·ρ².
pub fn baseline_enclosure(
    spec: &QoISpec,
    u: &P1Function,
    rho: f64,
    c2: f64,
    rule: &QuadratureRule,
) -> Enclosure {
    assert!(rho >= 0.0, "radius must be nonnegative");
    let center = eval_qoi(spec, u, rule);
    let (l_j, m_j) = qoi_constants(spec, u, rho, c2, rule);
    Enclosure::from_budget(
        center,
        EnclosureKind::Baseline,
        vec![l_j * rho, 0.5 * m_j * rho * rho],
    )
}

impl QoISpec {
    /// Adjoint weight ψ of the functional linearized at `u`, evaluated at a
    /// point of element `t`: the fixed weight for linear functionals, u
    /// itself for the quadratic energy.
    fn weight_at(&self, u: &P1Function, t: usize, lambda: [f64; 3], x: f64, y: f64) -> f64 {
        match self.kind {
            QoIKind::Linear(psi) => psi(x, y),
            QoIKind::QuadraticL2 => u.value(t, lambda),
        }
    }
}

/// Solve the discrete adjoint problem: find z in the same P1 space with
/// B(v, z) = J'(u)[v] for all v, where B is the symmetric linearized form
/// (stiffness + 3u² mass).
pub fn solve_adjoint<'a>(
    u: &P1Function<'a>,
    spec: &QoISpec,
    rule: &QuadratureRule,
) -> Result<P1Function<'a>, Error> {
    let mesh = u.mesh;
    let jac = assemble_jacobian(u, rule);
    let rhs = match spec.kind {
        QoIKind::Linear(psi) => assemble_load(mesh, psi, rule),
        QoIKind::QuadraticL2 => {
            // load ∫ u φ_i, with u evaluated per element in barycentric form
            let free = free_vertices(mesh);
            let mut out = vec![0.0; free.list.len()];
            for t in 0..mesh.triangles.len() {
                let verts = mesh.triangles[t];
                let area = mesh.area[t];
                for (lambda, w) in rule.points.iter().zip(&rule.weights) {
                    let uq = u.value(t, *lambda);
                    for k in 0..3 {
                        if let Some(i) = free.index[verts[k]] {
                            out[i] += w * area * uq * lambda[k];
                        }
                    }
                }
            }
            out
        }
    };
    let z = solve_spd(&jac, &rhs)?;
    let free = free_vertices(mesh);
    Ok(P1Function::from_free(mesh, &free, &z))
}

/// Guaranteed dual-norm bound on the adjoint residual with its parts.
#[derive(Debug, Clone, Copy)]
pub struct AdjointResidualBound {
    /// mis + osc ≥ ‖G(z)‖_{V*}.
    pub bound: f64,
    /// Flux mismatch ‖σ* − ∇z‖_{L²}.
    pub mis: f64,
    /// Poincaré-weighted oscillation of s* against the flux divergence.
    pub osc: f64,
}

/// Bound the dual norm of the adjoint residual G(z): v ↦ J'(u)[v] − B(v, z)
/// by the same equilibrated-flux route as the primal residual. Writing
/// s* = ψ − 3u²z (with ψ the adjoint weight), −G(z) has the primal residual
/// shape with state z and source term −s*, so the auxiliary broken problem
/// is solved with the sign-flipped projection −Π(s*) and the reconstructed
/// flux tracks +∇z.
pub fn adjoint_residual_bound(
    u: &P1Function,
    z: &P1Function,
    spec: &QoISpec,
    rule: &QuadratureRule,
) -> Result<AdjointResidualBound, Error> {
    let mesh = u.mesh;
    // r_cr = Π(−s*) elementwise
    let mut r_values = Vec::with_capacity(mesh.triangles.len());
    for t in 0..mesh.triangles.len() {
        let tri = mesh.tri_coords(t);
        let mut mean = 0.0;
        for (lambda, w) in rule.points.iter().zip(&rule.weights) {
            let x = lambda[0] * tri[0][0] + lambda[1] * tri[1][0] + lambda[2] * tri[2][0];
            let y = lambda[0] * tri[0][1] + lambda[1] * tri[1][1] + lambda[2] * tri[2][1];
            let uq = u.value(t, *lambda);
            let zq = z.value(t, *lambda);
            let s_star = spec.weight_at(u, t, *lambda, x, y) - 3.0 * uq * uq * zq;
            mean += w * (-s_star);
        }
        r_values.push(mean);
    }
    let r_cr = PiecewiseConstantField {
        mesh,
        values: r_values,
    };
    let ucr = solve_cr(&r_cr)?;
    let flux = reconstruct_rt0(&ucr, &r_cr)?;
    let mut mis2 = 0.0;
    let mut osc2 = 0.0;
    for t in 0..mesh.triangles.len() {
        let tri = mesh.tri_coords(t);
        let grad_z = z.gradient(t);
        mis2 += rule.integrate(&tri, |x, y| {
            let sig = crate::fluxrecon::eval_rt0(&flux, t, [x, y]);
            let dx = sig[0] - grad_z[0];
            let dy = sig[1] - grad_z[1];
            dx * dx + dy * dy
        });
        let div = crate::fluxrecon::divergence(&flux, t);
        let w = mesh.diameter[t] / std::f64::consts::PI;
        osc2 += w
            * w
            * rule.integrate(&tri, |x, y| {
                let lambda = mesh.barycentric(t, [x, y]);
                let uq = u.value(t, lambda);
                let zq = z.value(t, lambda);
                let s_star = spec.weight_at(u, t, lambda, x, y) - 3.0 * uq * uq * zq;
                // residual of −G: (−s*) − div σ, same magnitude either way
                let d = s_star + div;
                d * d
            });
    }
    let mis = mis2.sqrt();
    let osc = osc2.sqrt();
    Ok(AdjointResidualBound {
        bound: mis + osc,
        mis,
        osc,
    })
}

/// Adjoint-enhanced enclosure: half-width
/// |⟨F(ũ), z⟩| + ½L(ρ)ρ²‖z‖_V + (𝔯 + ½L(ρ)ρ²)α⁻¹‖G(z)‖ + ½M_J(ρ)ρ²
/// with every term recorded in the budget. Requires an admissible radius.
pub fn adjoint_enclosure(
    spec: &QoISpec,
    u: &P1Function,
    z: &P1Function,
    nk: &NKReport,
    consts: &CertConstants,
    f: impl Fn(f64, f64) -> f64,
    rule: &QuadratureRule,
) -> Result<Enclosure, Error> {
    assert!(nk.admissible, "enclosures require an admissible radius");
    let mesh = u.mesh;
    let center = eval_qoi(spec, u, rule);
    let rho = nk.rho;
    let lip = consts.lipschitz(rho);

    let residual = assemble_residual(u, f, rule);
    let free = free_vertices(mesh);
    let pairing: f64 = residual
        .iter()
        .zip(&free.list)
        .map(|(ri, &v)| ri * z.values[v])
        .sum();
    let term_pairing = pairing.abs();

    let term_tail = 0.5 * lip * rho * rho * energy_norm(z);

    let g_bound = adjoint_residual_bound(u, z, spec, rule)?.bound;
    let term_dual = (consts.r_bound + 0.5 * lip * rho * rho) / consts.alpha * g_bound;

    let (_, m_j) = qoi_constants(spec, u, rho, consts.c2, rule);
    let term_curv = 0.5 * m_j * rho * rho;

    Ok(Enclosure::from_budget(
        center,
        EnclosureKind::Adjoint,
        vec![term_pairing, term_tail, term_dual, term_curv],
    ))
}
