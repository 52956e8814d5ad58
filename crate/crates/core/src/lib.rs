//! Post-processing certification for P1 finite-element solutions of the
//! semilinear problem −Δu + u³ = f on Ω = (0,1)² with homogeneous Dirichlet
//! boundary conditions.
//!
//! Given a discrete solution ũ_h, the crate computes
//!
//! * a guaranteed residual bound 𝔯 ≥ ‖F(ũ_h)‖_V* from an equilibrated
//!   Raviart–Thomas flux ([`fluxrecon`], [`certify::residual_bound`]),
//! * a verification radius ρ such that the Newton–Kantorovich scalars satisfy
//!   p(ρ) ≤ 0 and q(ρ) < 1, certifying a unique weak solution u with
//!   ‖u − ũ_h‖_V ≤ ρ ([`certify::select_radius`]), and
//! * certified interval enclosures for output functionals J(u), both a direct
//!   Lipschitz baseline and an adjoint-enhanced version ([`outputs`]).
//!
//! All arithmetic is plain `f64`; every public computation is deterministic.

pub mod certify;
pub mod fem;
pub mod fluxrecon;
pub mod manufactured;
pub mod mesh;
pub mod outputs;
pub mod quadrature;

/// Failures surfaced by solver and flux-audit operations.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// The conjugate-gradient solver did not reach its residual tolerance.
    #[error("linear solver stalled after {iterations} iterations (relative residual {rel_residual:.3e})")]
    SolverStalled {
        iterations: usize,
        rel_residual: f64,
    },
    /// The two elements adjacent to a face disagree about the reconstructed
    /// normal flux.
    #[error("flux conservation audit failed at face {face}: {from_plus:.17e} from T+, {from_minus:.17e} from T- (tolerance {tol:.3e})")]
    ConservationAudit {
        face: usize,
        from_plus: f64,
        from_minus: f64,
        tol: f64,
    },
    /// The elementwise divergence of the reconstructed flux misses its target.
    #[error("flux divergence audit failed at element {element}: div sigma = {div:.17e}, target {target:.17e} (tolerance {tol:.3e})")]
    DivergenceAudit {
        element: usize,
        div: f64,
        target: f64,
        tol: f64,
    },
}
