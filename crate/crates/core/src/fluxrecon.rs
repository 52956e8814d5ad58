//! Explicit equilibrated-flux reconstruction: project the element residual
//! source to piecewise constants, solve one auxiliary Crouzeix–Raviart
//! problem, and assemble an H(div)-conforming lowest-order Raviart–Thomas
//! flux whose elementwise divergence equals the projected source. No local
//! mixed solves are required; conservation and divergence are audited at
//! runtime instead of assumed.

use crate::fem::{solve_spd, P1Function, SparseSymMatrix};
use crate::mesh::Mesh;
use crate::quadrature::QuadratureRule;
use crate::Error;

/// One real value per element.
#[derive(Debug, Clone)]
pub struct PiecewiseConstantField<'a> {
    /// Mesh the field lives on.
    pub mesh: &'a Mesh,
    /// Elementwise values.
    pub values: Vec<f64>,
}

/// Nonconforming Crouzeix–Raviart function with one face-mean degree of
/// freedom per face; boundary faces are pinned to 0.
#[derive(Debug, Clone)]
pub struct CRFunction<'a> {
    /// Mesh the function lives on.
    pub mesh: &'a Mesh,
    /// Face-mean values, one per face.
    pub values: Vec<f64>,
}

impl CRFunction<'_> {
    /// Constant broken gradient on element `t`. The basis function of local
    /// face k is 1 − 2λ_k (λ_k the barycentric of the opposite vertex).
    pub fn gradient(&self, t: usize) -> [f64; 2] {
        let g = self.mesh.barycentric_gradients(t);
        let faces = self.mesh.tri_faces[t];
        let mut out = [0.0, 0.0];
        for k in 0..3 {
            let c = -2.0 * self.values[faces[k]];
            out[0] += c * g[k][0];
            out[1] += c * g[k][1];
        }
        out
    }
}

/// H(div)-conforming lowest-order Raviart–Thomas flux, stored as one
/// oriented face integral ∫_F σ·n_F per face. A single value per face makes
/// normal-component continuity hold by construction.
#[derive(Debug, Clone)]
pub struct RT0Flux<'a> {
    /// Mesh the flux lives on.
    pub mesh: &'a Mesh,
    /// Oriented face integrals ∫_F σ·n_F.
    pub face_flux: Vec<f64>,
    /// Coefficient scale (∞-norm) of the broken solve behind this flux.
    /// Face values are assembled from gradient terms proportional to these
    /// coefficients, so both assembly roundoff and the iterative solver's
    /// terminal residual scale with this number; [`divergence_tol`] uses it
    /// to size the roundoff allowance of the divergence audit. Zero for
    /// synthetic fluxes written down directly.
    pub audit_scale: f64,
}

/// Elementwise mean of u³ − f: the piecewise-constant projection of the
/// strong residual source.
pub fn project_source<'a>(
    u: &P1Function<'a>,
    f: impl Fn(f64, f64) -> f64,
    rule: &QuadratureRule,
) -> PiecewiseConstantField<'a> {
    let mesh = u.mesh;
    let mut values = Vec::with_capacity(mesh.triangles.len());
    for t in 0..mesh.triangles.len() {
        let tri = mesh.tri_coords(t);
        let mut mean = 0.0;
        for (lambda, w) in rule.points.iter().zip(&rule.weights) {
            let x = lambda[0] * tri[0][0] + lambda[1] * tri[1][0] + lambda[2] * tri[2][0];
            let y = lambda[0] * tri[0][1] + lambda[1] * tri[1][1] + lambda[2] * tri[2][1];
            let uq = u.value(t, *lambda);
            mean += w * (uq * uq * uq - f(x, y));
        }
        values.push(mean);
    }
    PiecewiseConstantField { mesh, values }
}

/// Solve the auxiliary broken problem: find the Crouzeix–Raviart function
/// with Σ_T ∫_T ∇u·∇v = ∫ (−r) v for all CR test functions v, boundary
/// face-mean degrees of freedom pinned to 0. The load is elementwise
/// constant, so both the stiffness and the load are assembled exactly.
pub fn solve_cr<'a>(r: &PiecewiseConstantField<'a>) -> Result<CRFunction<'a>, Error> {
    let mesh = r.mesh;
    let mut free_index = vec![None; mesh.faces.len()];
    let mut free_list = Vec::new();
    for (fi, face) in mesh.faces.iter().enumerate() {
        if !face.is_boundary() {
            free_index[fi] = Some(free_list.len());
            free_list.push(fi);
        }
    }
    let n = free_list.len();
    let mut triplets = Vec::with_capacity(9 * mesh.triangles.len());
    let mut rhs = vec![0.0; n];
    for t in 0..mesh.triangles.len() {
        let area = mesh.area[t];
        let g = mesh.barycentric_gradients(t);
        let faces = mesh.tri_faces[t];
        // ∫_T (1 − 2λ_k) = |T|/3, so the constant load −r contributes −r|T|/3
        for i in 0..3 {
            let Some(gi) = free_index[faces[i]] else {
                continue;
            };
            rhs[gi] -= r.values[t] * area / 3.0;
            for j in 0..3 {
                if let Some(gj) = free_index[faces[j]] {
                    let s = 4.0 * area * (g[i][0] * g[j][0] + g[i][1] * g[j][1]);
                    triplets.push((gi, gj, s));
                }
            }
        }
    }
    let mat = SparseSymMatrix::from_triplets(n, triplets);
    let sol = solve_spd(&mat, &rhs)?;
    let mut values = vec![0.0; mesh.faces.len()];
    for (k, &fi) in free_list.iter().enumerate() {
        values[fi] = sol[k];
    }
    Ok(CRFunction { mesh, values })
}

/// Face integral ∫_F σ_T·n_F of the elementwise field
/// σ_T(x) = ∇u_cr|_T + (r_T/2)(x − x_T), evaluated from element `t`.
fn face_value_from(ucr: &CRFunction, r: &PiecewiseConstantField, fi: usize, t: usize) -> f64 {
    let mesh = ucr.mesh;
    let face = &mesh.faces[fi];
    let g = ucr.gradient(t);
    let xt = mesh.centroid[t];
    let corr = 0.5
        * r.values[t]
        * ((face.midpoint[0] - xt[0]) * face.normal[0]
            + (face.midpoint[1] - xt[1]) * face.normal[1]);
    face.length * (g[0] * face.normal[0] + g[1] * face.normal[1] + corr)
}

/// Roundoff allowance of the divergence audit, as a multiple of the broken
/// solve's coefficient scale divided by the element area. The face-sum
/// divergence amplifies coefficient-level noise — assembly roundoff and the
/// solver's terminal residual, both a few machine epsilons of the
/// coefficient scale — by 1/|T|, so on fine meshes the identity cannot hold
/// tighter than this floor. The multiplier leaves two orders of headroom
/// over the observed floor while staying nine orders below the O(1) defect
/// of a genuinely mismatched flux/source pair.
pub const DIV_ROUNDOFF_GUARD: f64 = 1e-12;

/// Audit tolerance for the divergence identity on element `t`: the identity
/// scale 1e-10·(1+|target|) plus the 1/|T|-amplified roundoff floor of the
/// reconstruction (see [`DIV_ROUNDOFF_GUARD`]).
pub fn divergence_tol(flux: &RT0Flux, t: usize, target: f64) -> f64 {
    1e-10 * (1.0 + target.abs()) + DIV_ROUNDOFF_GUARD * flux.audit_scale / flux.mesh.area[t]
}

/// Assemble the Raviart–Thomas flux from the Crouzeix–Raviart solution and
/// the projected source. Each face value is computed once from the face's
/// plus-side element; for interior faces the minus-side recomputation must
/// agree within 1e-10·scale (conservation audit), and every element's
/// face-sum divergence must reproduce r within [`divergence_tol`]
/// (divergence audit). Audit failures signal a mismatched (u_cr, r) pair.
pub fn reconstruct_rt0<'a>(
    ucr: &CRFunction<'a>,
    r: &PiecewiseConstantField<'a>,
) -> Result<RT0Flux<'a>, Error> {
    let mesh = ucr.mesh;
    assert!(
        std::ptr::eq(mesh, r.mesh),
        "flux inputs must share one mesh"
    );
    let mut face_flux = Vec::with_capacity(mesh.faces.len());
    for fi in 0..mesh.faces.len() {
        face_flux.push(face_value_from(ucr, r, fi, mesh.faces[fi].t_plus));
    }
    for (fi, face) in mesh.faces.iter().enumerate() {
        if face.is_boundary() {
            continue;
        }
        let from_minus = face_value_from(ucr, r, fi, face.t_minus);
        let from_plus = face_flux[fi];
        let tol = 1e-10 * (1.0 + from_plus.abs().max(from_minus.abs()));
        if (from_plus - from_minus).abs() > tol {
            return Err(Error::ConservationAudit {
                face: fi,
                from_plus,
                from_minus,
                tol,
            });
        }
    }
    let audit_scale = ucr.values.iter().fold(0.0_f64, |m, &v| m.max(v.abs()));
    let flux = RT0Flux {
        mesh,
        face_flux,
        audit_scale,
    };
    for t in 0..mesh.triangles.len() {
        let div = divergence(&flux, t);
        let target = r.values[t];
        let tol = divergence_tol(&flux, t, target);
        if (div - target).abs() > tol {
            return Err(Error::DivergenceAudit {
                element: t,
                div,
                target,
                tol,
            });
        }
    }
    Ok(flux)
}

/// Constant divergence of the flux on element `t`, computed as the sum of
/// outward face integrals divided by the area.
pub fn divergence(flux: &RT0Flux, t: usize) -> f64 {
    let mesh = flux.mesh;
    let mut total = 0.0;
    for &fi in &mesh.tri_faces[t] {
        total += mesh.face_sign(fi, t) * flux.face_flux[fi];
    }
    total / mesh.area[t]
}

/// Evaluate the flux at a point of element `t` (the point must lie in the
/// closed element). The lowest-order Raviart–Thomas basis for local face k
/// (opposite vertex P_k) is (x − P_k)/(2|T|) scaled by the outward face
/// integral.
pub fn eval_rt0(flux: &RT0Flux, t: usize, x: [f64; 2]) -> [f64; 2] {
    let mesh = flux.mesh;
    let lambda = mesh.barycentric(t, x);
    assert!(
        lambda.iter().all(|&l| l >= -1e-12),
        "point ({}, {}) lies outside element {t}",
        x[0],
        x[1]
    );
    let tri = mesh.tri_coords(t);
    let inv2a = 1.0 / (2.0 * mesh.area[t]);
    let mut out = [0.0, 0.0];
    for (&fi, corner) in mesh.tri_faces[t].iter().zip(tri.iter()) {
        let c = mesh.face_sign(fi, t) * flux.face_flux[fi];
        out[0] += c * (x[0] - corner[0]) * inv2a;
        out[1] += c * (x[1] - corner[1]) * inv2a;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::{newton_solve, NewtonSettings};
    use crate::manufactured;
    use crate::mesh::build_uniform;

    fn rule5() -> QuadratureRule {
        QuadratureRule::degree5()
    }

    #[test]
    fn projection_of_constant_source() {
        let mesh = build_uniform(2);
        let u = P1Function::zero(&mesh);
        let r = project_source(&u, |_, _| 1.0, &rule5());
        assert!(r.values.iter().all(|&v| (v + 1.0).abs() < 1e-15));
    }

    #[test]
    fn projection_is_the_centroid_value_for_linear_sources() {
        let mesh = build_uniform(1);
        let u = P1Function::zero(&mesh);
        let r = project_source(&u, |x, _| x, &rule5());
        // lower triangle (0,0)-(1,0)-(1,1) has centroid x = 2/3
        assert!((r.values[0] + 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn projection_sees_the_cubic_term() {
        let mesh = build_uniform(2);
        let c0 = 0.7;
        let u = P1Function {
            mesh: &mesh,
            values: vec![c0; mesh.vertices.len()],
        };
        let r = project_source(&u, |_, _| 0.0, &rule5());
        assert!(r.values.iter().all(|&v| (v - c0.powi(3)).abs() < 1e-15));
    }

    #[test]
    fn zero_source_gives_zero_cr_and_zero_flux() {
        let mesh = build_uniform(4);
        let r = PiecewiseConstantField {
            mesh: &mesh,
            values: vec![0.0; mesh.triangles.len()],
        };
        let ucr = solve_cr(&r).unwrap();
        assert!(ucr.values.iter().all(|&v| v == 0.0));
        let flux = reconstruct_rt0(&ucr, &r).unwrap();
        assert!(flux.face_flux.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn cr_solution_satisfies_the_broken_weak_form() {
        let mesh = build_uniform(4);
        let u = P1Function::zero(&mesh);
        let r = project_source(&u, |x, y| 1.0 + x * y, &rule5());
        let ucr = solve_cr(&r).unwrap();
        for (fi, face) in mesh.faces.iter().enumerate() {
            if face.is_boundary() {
                continue;
            }
            let mut residual = 0.0;
            for &t in &[face.t_plus, face.t_minus] {
                let k = mesh.tri_faces[t].iter().position(|&f| f == fi).unwrap();
                let g = mesh.barycentric_gradients(t);
                let gu = ucr.gradient(t);
                let gphi = [-2.0 * g[k][0], -2.0 * g[k][1]];
                residual += mesh.area[t] * (gu[0] * gphi[0] + gu[1] * gphi[1]);
                residual += r.values[t] * mesh.area[t] / 3.0;
            }
            assert!(residual.abs() < 1e-10, "face {fi}: residual {residual:e}");
        }
    }

    #[test]
    fn flux_with_prescribed_gradient_and_divergence() {
        // encode σ(x) = (1,0) + (x − x_T) on the lower triangle of the
        // one-cell mesh; div σ = 2 and σ(x_T) = (1,0)
        let mesh = build_uniform(1);
        let t = 0;
        let xt = mesh.centroid[t];
        let mut face_flux = vec![0.0; mesh.faces.len()];
        for &fi in &mesh.tri_faces[t] {
            let face = &mesh.faces[fi];
            let sig = [1.0 + (face.midpoint[0] - xt[0]), face.midpoint[1] - xt[1]];
            face_flux[fi] = face.length * (sig[0] * face.normal[0] + sig[1] * face.normal[1]);
        }
        let flux = RT0Flux {
            mesh: &mesh,
            face_flux,
            audit_scale: 0.0,
        };
        assert!((divergence(&flux, t) - 2.0).abs() < 1e-13);
        let at_centroid = eval_rt0(&flux, t, xt);
        assert!((at_centroid[0] - 1.0).abs() < 1e-13);
        assert!(at_centroid[1].abs() < 1e-13);
        // off-centroid values follow the affine formula
        let x = [0.7, 0.3];
        let v = eval_rt0(&flux, t, x);
        assert!((v[0] - (1.0 + x[0] - xt[0])).abs() < 1e-13);
        assert!((v[1] - (x[1] - xt[1])).abs() < 1e-13);
    }

    #[test]
    fn constant_fields_are_reproduced_exactly() {
        let mesh = build_uniform(2);
        let face_flux: Vec<f64> = mesh
            .faces
            .iter()
            .map(|face| face.length * face.normal[0])
            .collect();
        let flux = RT0Flux {
            mesh: &mesh,
            face_flux,
            audit_scale: 0.0,
        };
        for t in 0..mesh.triangles.len() {
            let v = eval_rt0(&flux, t, mesh.centroid[t]);
            assert!((v[0] - 1.0).abs() < 1e-13 && v[1].abs() < 1e-13);
            assert!(divergence(&flux, t).abs() < 1e-12);
        }
    }

    #[test]
    fn audits_pass_on_the_manufactured_problem() {
        let mesh = build_uniform(8);
        let rule = rule5();
        let sol = newton_solve(
            &mesh,
            manufactured::source,
            &NewtonSettings::default(),
            &rule,
        )
        .unwrap();
        let r = project_source(&sol.u, manufactured::source, &rule);
        let ucr = solve_cr(&r).unwrap();
        let flux = reconstruct_rt0(&ucr, &r).expect("conservation and divergence audits");
        // mean equilibration: ∫_T (s_h − div σ) = 0 because div σ = r = Π s_h
        for t in 0..mesh.triangles.len() {
            let tri = mesh.tri_coords(t);
            let div = divergence(&flux, t);
            let mean_residual = rule.integrate(&tri, |x, y| {
                let uq = {
                    let l = mesh.barycentric(t, [x, y]);
                    sol.u.value(t, l)
                };
                uq * uq * uq - manufactured::source(x, y) - div
            });
            assert!(
                mean_residual.abs() <= 1e-10 * (1.0 + r.values[t].abs()) * mesh.area[t],
                "element {t}: mean residual {mean_residual:e}"
            );
        }
    }

    #[test]
    fn evaluated_divergence_matches_the_face_sum() {
        let mesh = build_uniform(4);
        let rule = rule5();
        let sol = newton_solve(
            &mesh,
            manufactured::source,
            &NewtonSettings::default(),
            &rule,
        )
        .unwrap();
        let r = project_source(&sol.u, manufactured::source, &rule);
        let ucr = solve_cr(&r).unwrap();
        let flux = reconstruct_rt0(&ucr, &r).unwrap();
        let delta = 1e-5 / 4.0;
        for t in 0..mesh.triangles.len() {
            let c = mesh.centroid[t];
            let dx = (eval_rt0(&flux, t, [c[0] + delta, c[1]])[0]
                - eval_rt0(&flux, t, [c[0] - delta, c[1]])[0])
                / (2.0 * delta);
            let dy = (eval_rt0(&flux, t, [c[0], c[1] + delta])[1]
                - eval_rt0(&flux, t, [c[0], c[1] - delta])[1])
                / (2.0 * delta);
            let fd = dx + dy;
            let exact = divergence(&flux, t);
            assert!(
                (fd - exact).abs() < 1e-8 * (1.0 + exact.abs()),
                "element {t}: finite-difference divergence {fd}, face sum {exact}"
            );
        }
    }

    #[test]
    fn mismatched_inputs_fail_the_conservation_audit() {
        let mesh = build_uniform(4);
        let rule = rule5();
        let u = P1Function::zero(&mesh);
        let r = project_source(&u, |x, y| 1.0 + x + y, &rule);
        let ucr = solve_cr(&r).unwrap();
        // reconstruct against a different source than the one solved for
        let wrong = PiecewiseConstantField {
            mesh: &mesh,
            values: r.values.iter().map(|v| v * 2.0).collect(),
        };
        match reconstruct_rt0(&ucr, &wrong) {
            Err(Error::ConservationAudit { .. }) | Err(Error::DivergenceAudit { .. }) => {}
            other => panic!("expected an audit failure, got {other:?}"),
        }
    }

    #[test]
    #[should_panic(expected = "outside element")]
    fn evaluation_outside_the_element_panics() {
        let mesh = build_uniform(2);
        let flux = RT0Flux {
            mesh: &mesh,
            face_flux: vec![0.0; mesh.faces.len()],
            audit_scale: 0.0,
        };
        eval_rt0(&flux, 0, [0.9, 0.9]);
    }
}
