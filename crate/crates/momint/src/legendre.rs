//! Gauss–Legendre rules and Legendre-series transforms on `[-1, 1]`.
//!
//! Nodes are the roots of P_q found by Newton iteration from the Chebyshev
//! initial guesses; this is accurate to machine precision for the orders
//! used here (up to a few thousand). The series utilities convert nodal
//! values to Legendre coefficients and back, and integrate or differentiate
//! the interpolant term by term. For an analytic integrand these operations
//! converge spectrally, which is what the inner products, the resolvent
//! integrals, and the residual checks rely on.

use num_complex::Complex64;

/// Evaluate `(P_q(x), P_q'(x))` by the three-term recurrence.
fn legendre_pair(q: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if q == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=q {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    // derivative from P_q and P_{q-1}
    let dp = q as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Gauss–Legendre rule of order `q` on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(q: usize) -> Self {
        assert!(q >= 1, "quadrature order must be at least 1");
        let mut nodes = vec![0.0; q];
        let mut weights = vec![0.0; q];
        for k in 0..q {
            // Chebyshev-like initial guess, then Newton
            let mut x = (std::f64::consts::PI * (k as f64 + 0.75) / (q as f64 + 0.5)).cos();
            for _ in 0..100 {
                let (p, dp) = legendre_pair(q, x);
                let dx = p / dp;
                x -= dx;
                if dx.abs() < 1e-15 {
                    break;
                }
            }
            let (_, dp) = legendre_pair(q, x);
            // returned ascending
            nodes[q - 1 - k] = x;
            weights[q - 1 - k] = 2.0 / ((1.0 - x * x) * dp * dp);
        }
        Self { nodes, weights }
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }
}

/// Legendre coefficients (degrees `0..q`) of the polynomial interpolating
/// the given nodal values on the order-q rule. Exact for the interpolant:
/// the rule integrates `P_m P_{m'}` exactly for `m + m' <= 2q - 1`.
#[allow(clippy::needless_range_loop)] // m is the Legendre degree
pub fn values_to_coeffs(rule: &GaussLegendre, values: &[Complex64]) -> Vec<Complex64> {
    let q = rule.order();
    assert_eq!(values.len(), q);
    let mut coeffs = vec![Complex64::ZERO; q];
    // running P_m values at every node
    let mut p_prev: Vec<f64> = vec![1.0; q];
    let mut p_curr: Vec<f64> = rule.nodes.clone();
    for m in 0..q {
        let pm: &[f64] = if m == 0 { &p_prev } else { &p_curr };
        let mut acc = Complex64::ZERO;
        for k in 0..q {
            acc += values[k] * rule.weights[k] * pm[k];
        }
        coeffs[m] = acc * ((2 * m + 1) as f64 / 2.0);
        if m >= 1 {
            let mf = (m + 1) as f64;
            for k in 0..q {
                let next =
                    ((2.0 * mf - 1.0) * rule.nodes[k] * p_curr[k] - (mf - 1.0) * p_prev[k]) / mf;
                p_prev[k] = p_curr[k];
                p_curr[k] = next;
            }
        }
    }
    coeffs
}

/// Evaluate a Legendre series at one point.
#[allow(clippy::needless_range_loop)] // m is the Legendre degree
pub fn eval_series(coeffs: &[Complex64], x: f64) -> Complex64 {
    let mut p0 = 1.0;
    let mut p1 = x;
    let mut acc = match coeffs.len() {
        0 => return Complex64::ZERO,
        1 => return coeffs[0],
        _ => coeffs[0] * p0 + coeffs[1] * p1,
    };
    for m in 2..coeffs.len() {
        let mf = m as f64;
        let p2 = ((2.0 * mf - 1.0) * x * p1 - (mf - 1.0) * p0) / mf;
        acc += coeffs[m] * p2;
        p0 = p1;
        p1 = p2;
    }
    acc
}

/// Coefficients of the antiderivative `F(x) = ∫_{-1}^x f`, one degree longer.
/// Uses `∫ P_m = (P_{m+1} - P_{m-1}) / (2m + 1)`.
pub fn antiderivative_coeffs(coeffs: &[Complex64]) -> Vec<Complex64> {
    let q = coeffs.len();
    let mut out = vec![Complex64::ZERO; q + 1];
    if q == 0 {
        return out;
    }
    out[1] += coeffs[0];
    for m in 1..q {
        let inv = 1.0 / (2.0 * m as f64 + 1.0);
        out[m + 1] += coeffs[m] * inv;
        out[m - 1] -= coeffs[m] * inv;
    }
    // pin F(-1) = 0; P_m(-1) = (-1)^m
    let mut at_minus_one = Complex64::ZERO;
    for (m, c) in out.iter().enumerate() {
        at_minus_one += if m % 2 == 0 { *c } else { -*c };
    }
    out[0] -= at_minus_one;
    out
}

/// Coefficients of the derivative, one degree shorter.
/// `f' = Σ_m (2m+1) (Σ_{j>m, j-m odd} a_j) P_m`.
pub fn derivative_coeffs(coeffs: &[Complex64]) -> Vec<Complex64> {
    let q = coeffs.len();
    if q <= 1 {
        return vec![Complex64::ZERO];
    }
    let mut out = vec![Complex64::ZERO; q - 1];
    for (m, slot) in out.iter_mut().enumerate() {
        let mut acc = Complex64::ZERO;
        let mut j = m + 1;
        while j < q {
            acc += coeffs[j];
            j += 2;
        }
        *slot = acc * (2.0 * m as f64 + 1.0);
    }
    out
}

/// Barycentric weights for the Gauss nodes: `b_k ∝ (-1)^k sqrt((1-x_k²) w_k)`.
pub fn barycentric_weights(rule: &GaussLegendre) -> Vec<f64> {
    rule.nodes
        .iter()
        .zip(&rule.weights)
        .enumerate()
        .map(|(k, (&x, &w))| {
            let b = ((1.0 - x * x) * w).sqrt();
            if k % 2 == 0 {
                b
            } else {
                -b
            }
        })
        .collect()
}

/// Barycentric evaluation of the interpolant at `x`. Exact at the nodes.
pub fn barycentric_eval(
    rule: &GaussLegendre,
    bweights: &[f64],
    values: &[Complex64],
    x: f64,
) -> Complex64 {
    let mut num = Complex64::ZERO;
    let mut den = 0.0;
    for k in 0..rule.order() {
        let dx = x - rule.nodes[k];
        if dx == 0.0 {
            return values[k];
        }
        let c = bweights[k] / dx;
        num += values[k] * c;
        den += c;
    }
    num / den
}
