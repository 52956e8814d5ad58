//! Manufactured exact solution used by the experiments and tests.
//!
//! The solution u*(x, y) = sin(πx) sin(πy) vanishes on the boundary of the
//! unit square and satisfies −Δu* + (u*)³ = f with
//! f = 2π² u* + (u*)³. Closed-form values of the output functionals and the
//! energy norm are recorded here so errors can be measured exactly.

use std::f64::consts::PI;

/// Exact solution u*(x, y) = sin(πx) sin(πy).
pub fn u_star(x: f64, y: f64) -> f64 {
    (PI * x).sin() * (PI * y).sin()
}

/// Gradient of the exact solution.
pub fn grad_u_star(x: f64, y: f64) -> [f64; 2] {
    [
        PI * (PI * x).cos() * (PI * y).sin(),
        PI * (PI * x).sin() * (PI * y).cos(),
    ]
}

/// Source term f = 2π² u* + (u*)³ manufactured from u*.
pub fn source(x: f64, y: f64) -> f64 {
    let u = u_star(x, y);
    2.0 * PI * PI * u + u * u * u
}

/// ∫ u* dx = 4/π².
pub fn j1_exact() -> f64 {
    4.0 / (PI * PI)
}

/// ½ ∫ (u*)² dx = 1/8.
pub fn j2_exact() -> f64 {
    0.125
}

/// ‖∇u*‖²_{L²} = π²/2.
pub fn energy_norm_squared() -> f64 {
    PI * PI / 2.0
}
