//! End-to-end properties of the functional enclosures on the manufactured
//! problem: budget bookkeeping, containment of the analytic values, validity
//! for arbitrary dual states, and the adjoint width advantage.

use certfem::certify::{
    lipschitz_affine, residual_bound, select_radius, stability_constant, CertConstants,
    SelectionPath, C2_UNIT_SQUARE, C4_UNIT_SQUARE,
};
use certfem::fem::{energy_norm, newton_solve, NewtonSettings, P1Function};
use certfem::fluxrecon::{project_source, reconstruct_rt0, solve_cr};
use certfem::manufactured;
use certfem::mesh::{build_uniform, Mesh};
use certfem::outputs::{
    adjoint_enclosure, baseline_enclosure, eval_qoi, qoi_constants, solve_adjoint, Enclosure,
    QoISpec,
};
use certfem::quadrature::QuadratureRule;

struct Certified<'a> {
    u: P1Function<'a>,
    consts: CertConstants,
    nk: certfem::certify::NKReport,
}

/// Run the full certification front-end on one mesh.
fn certify<'a>(mesh: &'a Mesh, rule: &QuadratureRule) -> Certified<'a> {
    let solution = newton_solve(mesh, manufactured::source, &NewtonSettings::default(), rule)
        .expect("solve must succeed");
    let u = solution.u;
    let r = project_source(&u, manufactured::source, rule);
    let ucr = solve_cr(&r).expect("broken solve must succeed");
    let sigma = reconstruct_rt0(&ucr, &r).expect("reconstruction must succeed");
    let rb = residual_bound(&u, &sigma, &r, manufactured::source, rule)
        .expect("residual bound must succeed");
    let alpha = stability_constant(&u).alpha;
    let (l0, l1) = lipschitz_affine(&u, C4_UNIT_SQUARE);
    let consts = CertConstants::new(rb.r_bound, alpha, l0, l1, C2_UNIT_SQUARE, C4_UNIT_SQUARE);
    let nk = select_radius(&consts, 60, 60);
    assert!(nk.admissible, "the manufactured problem must certify");
    assert_eq!(
        nk.path,
        SelectionPath::AcceptedInitial,
        "2η must be accepted"
    );
    Certified { u, consts, nk }
}

fn check_budget_bookkeeping(enc: &Enclosure) {
    let sum: f64 = enc.budget.iter().sum();
    assert!(
        (enc.half_width - sum).abs() <= 1e-15 * sum.max(1e-300),
        "half-width must equal the budget sum"
    );
    for (k, term) in enc.budget.iter().enumerate() {
        assert!(*term >= 0.0, "budget term {k} must be nonnegative");
    }
    assert!(
        (enc.lo - (enc.center - enc.half_width)).abs() <= 1e-15 * enc.half_width.max(1.0),
        "interval endpoints must be center ± half-width"
    );
    assert!(
        (enc.hi - (enc.center + enc.half_width)).abs() <= 1e-15 * enc.half_width.max(1.0),
        "interval endpoints must be center ± half-width"
    );
}

#[test]
fn both_functionals_are_enclosed_with_adjoint_tightening() {
    let rule = QuadratureRule::degree5();
    let mesh = build_uniform(16);
    let cert = certify(&mesh, &rule);
    let rho = cert.nk.rho;

    for (spec, exact) in [
        (QoISpec::linear_unit(), manufactured::j1_exact()),
        (QoISpec::quadratic_l2(), manufactured::j2_exact()),
    ] {
        let base = baseline_enclosure(&spec, &cert.u, rho, cert.consts.c2, &rule);
        check_budget_bookkeeping(&base);
        assert_eq!(base.budget.len(), 2, "baseline budget has two terms");
        assert!(
            base.contains(exact),
            "baseline interval must contain the analytic value for {}",
            spec.name
        );

        let z = solve_adjoint(&cert.u, &spec, &rule).expect("adjoint solve must succeed");
        let adj = adjoint_enclosure(
            &spec,
            &cert.u,
            &z,
            &cert.nk,
            &cert.consts,
            manufactured::source,
            &rule,
        )
        .expect("adjoint enclosure must succeed");
        check_budget_bookkeeping(&adj);
        assert_eq!(adj.budget.len(), 4, "adjoint budget has four terms");
        assert!(
            adj.contains(exact),
            "adjoint interval must contain the analytic value for {}",
            spec.name
        );
        assert!(
            adj.half_width < base.half_width,
            "the adjoint route must tighten the baseline for {}: {:.3e} vs {:.3e}",
            spec.name,
            adj.half_width,
            base.half_width
        );
        assert_eq!(
            adj.center, base.center,
            "both routes share the evaluated center"
        );

        // Galerkin orthogonality makes the primal-residual pairing against a
        // discrete dual state vanish up to solver tolerances
        assert!(
            adj.budget[0] <= 1e-9 * energy_norm(&z).max(1.0),
            "residual/dual pairing must be negligible, got {:.3e}",
            adj.budget[0]
        );
    }
}

#[test]
fn enclosures_remain_valid_for_an_arbitrary_dual_state() {
    // the adjoint route is certified for any discrete z; with z = 0 it must
    // still contain the analytic value (it degenerates towards the baseline)
    let rule = QuadratureRule::degree5();
    let mesh = build_uniform(16);
    let cert = certify(&mesh, &rule);

    for (spec, exact) in [
        (QoISpec::linear_unit(), manufactured::j1_exact()),
        (QoISpec::quadratic_l2(), manufactured::j2_exact()),
    ] {
        let zero = P1Function::zero(&mesh);
        let degenerate = adjoint_enclosure(
            &spec,
            &cert.u,
            &zero,
            &cert.nk,
            &cert.consts,
            manufactured::source,
            &rule,
        )
        .expect("adjoint enclosure must succeed");
        check_budget_bookkeeping(&degenerate);
        assert!(
            degenerate.contains(exact),
            "the z = 0 interval must still contain the analytic value for {}",
            spec.name
        );

        let z = solve_adjoint(&cert.u, &spec, &rule).expect("adjoint solve must succeed");
        let tuned = adjoint_enclosure(
            &spec,
            &cert.u,
            &z,
            &cert.nk,
            &cert.consts,
            manufactured::source,
            &rule,
        )
        .expect("adjoint enclosure must succeed");
        assert!(
            tuned.half_width < degenerate.half_width,
            "the solved dual state must beat z = 0 for {}",
            spec.name
        );
    }
}

#[test]
fn half_widths_grow_with_the_radius() {
    let rule = QuadratureRule::degree5();
    let mesh = build_uniform(8);
    let cert = certify(&mesh, &rule);
    for spec in [QoISpec::linear_unit(), QoISpec::quadratic_l2()] {
        let mut prev = 0.0;
        for k in 1..=8 {
            let rho = 0.1 * k as f64;
            let enc = baseline_enclosure(&spec, &cert.u, rho, cert.consts.c2, &rule);
            // the two budget terms reproduce L_J(ρ)ρ and ½M_J(ρ)ρ²
            let (l_j, m_j) = qoi_constants(&spec, &cert.u, rho, cert.consts.c2, &rule);
            let expected = l_j * rho + 0.5 * m_j * rho * rho;
            assert!(
                (enc.half_width - expected).abs() <= 1e-15 * expected,
                "baseline half-width must follow the Lipschitz/curvature formula"
            );
            assert!(
                enc.half_width > prev,
                "the half-width must increase with the radius"
            );
            prev = enc.half_width;
        }
    }
}

#[test]
fn true_error_lies_inside_every_certificate() {
    // the analytic solution is known, so the certificate claims are testable:
    // the energy error must lie below the verified radius, and the evaluated
    // centers must sit within the true-value intervals
    let rule = QuadratureRule::degree5();
    let fine = QuadratureRule::degree7();
    for n in [8, 16, 32] {
        let mesh = build_uniform(n);
        let cert = certify(&mesh, &rule);
        let err = certfem::fem::energy_error_vs(&cert.u, manufactured::grad_u_star, &fine);
        assert!(
            err <= cert.nk.rho,
            "the true energy error {err:.6e} must lie inside the verified radius {:.6e} (N = {n})",
            cert.nk.rho
        );
        let j1 = eval_qoi(&QoISpec::linear_unit(), &cert.u, &rule);
        assert!(
            (j1 - manufactured::j1_exact()).abs() <= cert.nk.rho,
            "the evaluated linear functional must be near its analytic value"
        );
    }
}

#[test]
fn adjoint_width_shrinks_quadratically_under_refinement() {
    let rule = QuadratureRule::degree5();
    let mut widths = Vec::new();
    for n in [8, 16, 32] {
        let mesh = build_uniform(n);
        let cert = certify(&mesh, &rule);
        let spec = QoISpec::linear_unit();
        let z = solve_adjoint(&cert.u, &spec, &rule).expect("adjoint solve must succeed");
        let adj = adjoint_enclosure(
            &spec,
            &cert.u,
            &z,
            &cert.nk,
            &cert.consts,
            manufactured::source,
            &rule,
        )
        .expect("adjoint enclosure must succeed");
        widths.push(2.0 * adj.half_width);
    }
    for pair in widths.windows(2) {
        let ratio = pair[0] / pair[1];
        assert!(
            ratio > 3.0 && ratio < 5.0,
            "adjoint widths must shrink roughly fourfold per refinement, ratio {ratio:.3}"
        );
    }
}
