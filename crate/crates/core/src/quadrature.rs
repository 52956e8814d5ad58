//! Symmetric triangle quadrature rules of fixed polynomial degree.
//!
//! Two rules are shipped: the 7-point degree-5 rule used for every assembly
//! and estimator integral, and a 13-point degree-7 rule reserved for
//! reference integrals (errors against a known exact solution). Points are
//! barycentric and weights are normalized to sum to 1, so the integral over a
//! triangle T is |T| · Σᵢ wᵢ f(xᵢ).

/// A symmetric quadrature rule on the reference triangle.
#[derive(Debug, Clone)]
pub struct QuadratureRule {
    /// Largest polynomial degree integrated exactly.
    pub degree: usize,
    /// Barycentric coordinates of the nodes.
    pub points: Vec<[f64; 3]>,
    /// Weights, normalized to sum to 1.
    pub weights: Vec<f64>,
}

fn orbit3(points: &mut Vec<[f64; 3]>, weights: &mut Vec<f64>, b: f64, w: f64) {
    let a = 1.0 - 2.0 * b;
    points.extend([[a, b, b], [b, a, b], [b, b, a]]);
    weights.extend([w, w, w]);
}

fn orbit6(points: &mut Vec<[f64; 3]>, weights: &mut Vec<f64>, b: f64, c: f64, w: f64) {
    let a = 1.0 - b - c;
    points.extend([
        [a, b, c],
        [a, c, b],
        [b, a, c],
        [b, c, a],
        [c, a, b],
        [c, b, a],
    ]);
    weights.extend([w; 6]);
}

impl QuadratureRule {
    /// 7-point rule, exact for polynomials of degree ≤ 5.
    pub fn degree5() -> Self {
        let s15 = 15.0_f64.sqrt();
        let mut points = vec![[1.0 / 3.0; 3]];
        let mut weights = vec![9.0 / 40.0];
        orbit3(
            &mut points,
            &mut weights,
            (6.0 + s15) / 21.0,
            (155.0 + s15) / 1200.0,
        );
        orbit3(
            &mut points,
            &mut weights,
            (6.0 - s15) / 21.0,
            (155.0 - s15) / 1200.0,
        );
        QuadratureRule {
            degree: 5,
            points,
            weights,
        }
    }

    /// 13-point rule, exact for polynomials of degree ≤ 7.
    // coefficients carry every digit of the published tabulation
    #[allow(clippy::excessive_precision)]
    pub fn degree7() -> Self {
        let mut points = vec![[1.0 / 3.0; 3]];
        let mut weights = vec![-0.14957004446768175];
        orbit3(
            &mut points,
            &mut weights,
            0.26034596607903983,
            0.17561525743320781,
        );
        orbit3(
            &mut points,
            &mut weights,
            0.065130102902215812,
            0.053347235608838491,
        );
        orbit6(
            &mut points,
            &mut weights,
            0.31286549600487386,
            0.63844418856980973,
            0.07711376089025714,
        );
        QuadratureRule {
            degree: 7,
            points,
            weights,
        }
    }

    /// Look up a shipped rule by its exactness degree (5 or 7).
    pub fn by_degree(degree: usize) -> Option<Self> {
        match degree {
            5 => Some(Self::degree5()),
            7 => Some(Self::degree7()),
            _ => None,
        }
    }

    /// Integrate `f(x, y)` over the triangle with the given vertex coordinates.
    pub fn integrate(&self, tri: &[[f64; 2]; 3], mut f: impl FnMut(f64, f64) -> f64) -> f64 {
        let [p0, p1, p2] = *tri;
        let twice = (p1[0] - p0[0]) * (p2[1] - p0[1]) - (p1[1] - p0[1]) * (p2[0] - p0[0]);
        let area = 0.5 * twice.abs();
        assert!(area > 0.0, "degenerate element has zero area");
        let mut sum = 0.0;
        for (lambda, w) in self.points.iter().zip(&self.weights) {
            let x = lambda[0] * p0[0] + lambda[1] * p1[0] + lambda[2] * p2[0];
            let y = lambda[0] * p0[1] + lambda[1] * p1[1] + lambda[2] * p2[1];
            sum += w * f(x, y);
        }
        area * sum
    }
}
