//! Concrete elements of L²(Ω): piecewise exponentials in closed form and
//! quadrature-sampled functions, with inner products, Fourier coefficients
//! against the exponentials e_λ, and Parseval diagnostics.
//!
//! Plain Lebesgue measure is used everywhere; the orthonormal exponential
//! family is `e_λ/√|Ω|`, and [`parseval_defect`] divides by |Ω| explicitly.
//! Boundary traces are stored, never extrapolated: closed forms set them
//! exactly, sampled data must declare them or mark them absent.

use std::sync::Arc;

use nalgebra::DVector;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::boundary::BoundaryTraces;
use crate::error::{Error, Result};
use crate::geometry::IntervalUnion;
use crate::legendre::{
    antiderivative_coeffs, barycentric_eval, barycentric_weights, derivative_coeffs, eval_series,
    values_to_coeffs, GaussLegendre,
};

pub const DEFAULT_QUAD_ORDER: usize = 32;

const TAU: f64 = std::f64::consts::TAU;

pub type CVector = DVector<Complex64>;

/// Per-interval Gauss–Legendre grid over an interval union.
///
/// Nodes are stored flattened, interval by interval; weights are already
/// scaled to physical length, so they sum to ℓᵢ on each interval.
#[derive(Debug)]
pub struct QuadGrid {
    omega: IntervalUnion,
    rule: GaussLegendre,
    bary: Vec<f64>,
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl PartialEq for QuadGrid {
    fn eq(&self, other: &Self) -> bool {
        self.omega == other.omega && self.order() == other.order()
    }
}

impl QuadGrid {
    pub fn new(omega: IntervalUnion, order: usize) -> Arc<Self> {
        let rule = GaussLegendre::new(order);
        let bary = barycentric_weights(&rule);
        let mut nodes = Vec::with_capacity(order * omega.n());
        let mut weights = Vec::with_capacity(order * omega.n());
        for i in 0..omega.n() {
            let (a, b) = (
                crate::exact::rat_to_f64(omega.alpha(i)),
                crate::exact::rat_to_f64(omega.beta(i)),
            );
            let half = 0.5 * (b - a);
            let mid = 0.5 * (b + a);
            for k in 0..order {
                nodes.push(mid + half * rule.nodes[k]);
                weights.push(half * rule.weights[k]);
            }
        }
        Arc::new(Self {
            omega,
            rule,
            bary,
            nodes,
            weights,
        })
    }

    pub fn omega(&self) -> &IntervalUnion {
        &self.omega
    }

    pub fn order(&self) -> usize {
        self.rule.order()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Flat index range of interval `i`.
    pub fn interval_range(&self, i: usize) -> std::ops::Range<usize> {
        let q = self.order();
        i * q..(i + 1) * q
    }

    /// Map a physical point in interval `i` to the reference coordinate.
    fn to_reference(&self, i: usize, x: f64) -> f64 {
        let a = crate::exact::rat_to_f64(self.omega.alpha(i));
        let b = crate::exact::rat_to_f64(self.omega.beta(i));
        (2.0 * x - a - b) / (b - a)
    }

    fn interval_half_length(&self, i: usize) -> f64 {
        let a = crate::exact::rat_to_f64(self.omega.alpha(i));
        let b = crate::exact::rat_to_f64(self.omega.beta(i));
        0.5 * (b - a)
    }
}

/// A function sampled on a [`QuadGrid`], with optional declared traces.
#[derive(Debug, Clone)]
pub struct SampledFunction {
    pub grid: Arc<QuadGrid>,
    pub values: Vec<Complex64>,
    pub traces: Option<BoundaryTraces>,
}

impl SampledFunction {
    pub fn from_fn<F>(grid: &Arc<QuadGrid>, f: F, traces: Option<BoundaryTraces>) -> Self
    where
        F: Fn(usize, f64) -> Complex64,
    {
        let q = grid.order();
        let values = grid
            .nodes()
            .iter()
            .enumerate()
            .map(|(j, &x)| f(j / q, x))
            .collect();
        Self {
            grid: grid.clone(),
            values,
            traces,
        }
    }

    pub fn zero(grid: &Arc<QuadGrid>) -> Self {
        Self {
            grid: grid.clone(),
            values: vec![Complex64::ZERO; grid.len()],
            traces: Some(BoundaryTraces::new(
                CVector::zeros(grid.omega().n()),
                CVector::zeros(grid.omega().n()),
            )),
        }
    }

    pub fn same_grid(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.grid, &other.grid) || *self.grid == *other.grid
    }

    /// ⟨f, g⟩ = ∫_Ω f ḡ by quadrature. Grids must agree.
    pub fn inner(&self, other: &Self) -> Result<Complex64> {
        if !self.same_grid(other) {
            return Err(Error::GridMismatch);
        }
        let mut acc = Complex64::ZERO;
        for ((&w, &f), &g) in self
            .grid
            .weights()
            .iter()
            .zip(&self.values)
            .zip(&other.values)
        {
            acc += w * f * g.conj();
        }
        Ok(acc)
    }

    pub fn norm_sq(&self) -> f64 {
        self.grid
            .weights()
            .iter()
            .zip(&self.values)
            .map(|(&w, v)| w * v.norm_sqr())
            .sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    /// Barycentric interpolation at a point inside interval `i`; exact at
    /// the grid nodes.
    pub fn eval_in(&self, i: usize, x: f64) -> Complex64 {
        let range = self.grid.interval_range(i);
        for j in range.clone() {
            if self.grid.nodes()[j] == x {
                return self.values[j];
            }
        }
        let u = self.grid.to_reference(i, x);
        barycentric_eval(&self.grid.rule, &self.grid.bary, &self.values[range], u)
    }

    /// Legendre coefficients of the interpolant on interval `i`.
    pub fn legendre_coeffs(&self, i: usize) -> Vec<Complex64> {
        let range = self.grid.interval_range(i);
        values_to_coeffs(&self.grid.rule, &self.values[range])
    }

    /// Cumulative integral `x ↦ ∫_{αᵢ}^x f` evaluated at all nodes of
    /// interval `i`, via the Legendre-series antiderivative of the
    /// interpolant on the same grid.
    pub fn cumulative_integral(&self, i: usize) -> Vec<Complex64> {
        let coeffs = self.legendre_coeffs(i);
        let anti = antiderivative_coeffs(&coeffs);
        let half = self.grid.interval_half_length(i);
        self.grid
            .rule
            .nodes
            .iter()
            .map(|&u| eval_series(&anti, u) * half)
            .collect()
    }

    /// Full integral `∫_{αᵢ}^{βᵢ} f` on interval `i`.
    pub fn interval_integral(&self, i: usize) -> Complex64 {
        let range = self.grid.interval_range(i);
        let mut acc = Complex64::ZERO;
        for j in range {
            acc += self.values[j] * self.grid.weights()[j];
        }
        acc
    }

    /// Spectral derivative sampled at the nodes.
    pub fn derivative_values(&self) -> Vec<Complex64> {
        let mut out = Vec::with_capacity(self.values.len());
        for i in 0..self.grid.omega().n() {
            let coeffs = self.legendre_coeffs(i);
            let deriv = derivative_coeffs(&coeffs);
            let scale = 1.0 / self.grid.interval_half_length(i);
            for &u in &self.grid.rule.nodes {
                out.push(eval_series(&deriv, u) * scale);
            }
        }
        out
    }

    /// Re-sample the interpolant onto a grid of a different order.
    pub fn resample(&self, order: usize) -> Self {
        let grid = QuadGrid::new(self.grid.omega().clone(), order);
        let q = order;
        let values = grid
            .nodes()
            .iter()
            .enumerate()
            .map(|(j, &x)| self.eval_in(j / q, x))
            .collect();
        Self {
            grid,
            values,
            traces: self.traces.clone(),
        }
    }

    /// Quadrature convergence diagnostic: the difference between `‖f‖` at
    /// the grid's own order and at half the order. Small values mean the
    /// grid resolves the data.
    pub fn norm_refinement_defect(&self) -> f64 {
        let half = self.resample((self.grid.order() / 2).max(1));
        (self.norm() - half.norm()).abs()
    }

    pub fn scale(&self, c: Complex64) -> Self {
        Self {
            grid: self.grid.clone(),
            values: self.values.iter().map(|v| v * c).collect(),
            traces: self
                .traces
                .as_ref()
                .map(|t| BoundaryTraces::new(t.at_alpha.map(|z| z * c), t.at_beta.map(|z| z * c))),
        }
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        if !self.same_grid(other) {
            return Err(Error::GridMismatch);
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a - b)
            .collect();
        let traces = match (&self.traces, &other.traces) {
            (Some(s), Some(o)) => Some(BoundaryTraces::new(
                &s.at_alpha - &o.at_alpha,
                &s.at_beta - &o.at_beta,
            )),
            _ => None,
        };
        Ok(Self {
            grid: self.grid.clone(),
            values,
            traces,
        })
    }

    /// L² distance, quadrature-measured.
    pub fn distance(&self, other: &Self) -> Result<f64> {
        Ok(self.sub(other)?.norm())
    }
}

/// Closed-form element `f(x) = cᵢ e^{2πiλx}` for `x ∈ Jᵢ`.
#[derive(Debug, Clone)]
pub struct PiecewiseExp {
    pub lambda: Complex64,
    pub coeffs: CVector,
}

impl PiecewiseExp {
    pub fn new(lambda: Complex64, coeffs: CVector) -> Self {
        Self { lambda, coeffs }
    }

    /// The exponential e_λ itself: all coefficients 1.
    pub fn exponential(lambda: f64, n: usize) -> Self {
        Self {
            lambda: Complex64::new(lambda, 0.0),
            coeffs: CVector::from_element(n, Complex64::ONE),
        }
    }

    /// Indicator of interval `i` (λ = 0, c = eᵢ).
    pub fn indicator(i: usize, n: usize) -> Self {
        let mut coeffs = CVector::zeros(n);
        coeffs[i] = Complex64::ONE;
        Self {
            lambda: Complex64::ZERO,
            coeffs,
        }
    }

    pub fn n(&self) -> usize {
        self.coeffs.len()
    }

    pub fn eval_in(&self, i: usize, x: f64) -> Complex64 {
        self.coeffs[i] * (Complex64::new(0.0, TAU) * self.lambda * x).exp()
    }

    /// Exact boundary traces.
    pub fn traces(&self, omega: &IntervalUnion) -> BoundaryTraces {
        let at_alpha = CVector::from_fn(self.n(), |i, _| {
            self.eval_in(i, crate::exact::rat_to_f64(omega.alpha(i)))
        });
        let at_beta = CVector::from_fn(self.n(), |i, _| {
            self.eval_in(i, crate::exact::rat_to_f64(omega.beta(i)))
        });
        BoundaryTraces::new(at_alpha, at_beta)
    }

    pub fn sample_on(&self, grid: &Arc<QuadGrid>) -> SampledFunction {
        let traces = self.traces(grid.omega());
        SampledFunction::from_fn(grid, |i, x| self.eval_in(i, x), Some(traces))
    }

    /// Exact ⟨f, g⟩ between two piecewise exponentials.
    pub fn inner_exact(&self, other: &Self, omega: &IntervalUnion) -> Complex64 {
        let w = self.lambda - other.lambda.conj();
        let mut acc = Complex64::ZERO;
        for i in 0..omega.n() {
            let a = crate::exact::rat_to_f64(omega.alpha(i));
            let b = crate::exact::rat_to_f64(omega.beta(i));
            acc += self.coeffs[i] * other.coeffs[i].conj() * exp_integral(w, a, b);
        }
        acc
    }

    pub fn norm_sq_exact(&self, omega: &IntervalUnion) -> f64 {
        self.inner_exact(self, omega).re
    }

    /// ⟨f, g⟩ with a sampled g, by quadrature on g's grid.
    pub fn inner_sampled(&self, other: &SampledFunction) -> Complex64 {
        let grid = &other.grid;
        let q = grid.order();
        let mut acc = Complex64::ZERO;
        for (j, (&x, &w)) in grid.nodes().iter().zip(grid.weights()).enumerate() {
            acc += w * self.eval_in(j / q, x) * other.values[j].conj();
        }
        acc
    }
}

/// `∫_a^b e^{2πi w x} dx` for complex w, stable near w = 0.
pub fn exp_integral(w: Complex64, a: f64, b: f64) -> Complex64 {
    let len = b - a;
    let phase = Complex64::new(0.0, TAU) * w;
    let z = phase * len;
    if z.norm() < 1e-3 {
        // (e^z - 1)/z * len, 6 Taylor terms
        let mut term = Complex64::ONE;
        let mut sum = Complex64::ONE;
        for k in 1..6 {
            term *= z / (k as f64 + 1.0);
            sum += term;
        }
        (phase * a).exp() * sum * len
    } else {
        ((phase * b).exp() - (phase * a).exp()) / phase
    }
}

/// Closed form for `⟨e_λ, e_μ⟩` with real λ, μ:
/// `Σ_k (e^{2πi(λ−μ)β_k} − e^{2πi(λ−μ)α_k}) / (2πi(λ−μ))`, and |Ω| at λ = μ.
pub fn exp_inner_product(omega: &IntervalUnion, lambda: f64, mu: f64) -> Complex64 {
    let w = Complex64::new(lambda - mu, 0.0);
    let mut acc = Complex64::ZERO;
    for i in 0..omega.n() {
        let a = crate::exact::rat_to_f64(omega.alpha(i));
        let b = crate::exact::rat_to_f64(omega.beta(i));
        acc += exp_integral(w, a, b);
    }
    acc
}

/// Reference to either concrete element, for the polymorphic operations.
#[derive(Clone, Copy)]
pub enum L2Ref<'a> {
    Sampled(&'a SampledFunction),
    Exp(&'a PiecewiseExp),
}

impl<'a> From<&'a SampledFunction> for L2Ref<'a> {
    fn from(f: &'a SampledFunction) -> Self {
        L2Ref::Sampled(f)
    }
}

impl<'a> From<&'a PiecewiseExp> for L2Ref<'a> {
    fn from(f: &'a PiecewiseExp) -> Self {
        L2Ref::Exp(f)
    }
}

/// ⟨f, g⟩ = ∫_Ω f ḡ. Closed form when both arguments are piecewise
/// exponentials, quadrature otherwise.
pub fn inner_product(omega: &IntervalUnion, f: L2Ref, g: L2Ref) -> Result<Complex64> {
    match (f, g) {
        (L2Ref::Sampled(a), L2Ref::Sampled(b)) => a.inner(b),
        (L2Ref::Exp(a), L2Ref::Exp(b)) => Ok(a.inner_exact(b, omega)),
        (L2Ref::Exp(a), L2Ref::Sampled(b)) => Ok(a.inner_sampled(b)),
        (L2Ref::Sampled(a), L2Ref::Exp(b)) => Ok(b.inner_sampled(a).conj()),
    }
}

pub fn norm_sq(omega: &IntervalUnion, f: L2Ref) -> f64 {
    match f {
        L2Ref::Sampled(a) => a.norm_sq(),
        L2Ref::Exp(a) => a.norm_sq_exact(omega),
    }
}

/// Fourier coefficients `(⟨f, e_λ⟩)` over a finite frequency list.
pub fn fourier_coeffs(omega: &IntervalUnion, f: L2Ref, lambdas: &[f64]) -> Result<Vec<Complex64>> {
    lambdas
        .iter()
        .map(|&lam| {
            let e = PiecewiseExp::exponential(lam, omega.n());
            inner_product(omega, f, L2Ref::Exp(&e))
        })
        .collect()
}

/// `‖f‖² − (1/|Ω|) Σ_λ |⟨f, e_λ⟩|²` over the given frequency window.
/// Nonnegative up to quadrature error when the e_λ are orthogonal; tends to
/// zero as the window exhausts a true spectrum.
pub fn parseval_defect(omega: &IntervalUnion, f: L2Ref, lambdas: &[f64]) -> Result<f64> {
    let coeffs = fourier_coeffs(omega, f, lambdas)?;
    let measure = omega.measure_f64();
    let sum: f64 = coeffs.iter().map(|c| c.norm_sqr()).sum();
    Ok(norm_sq(omega, f) - sum / measure)
}

/// Partial sums `Σ_{|λ|≤N} |λ|² |⟨f, ε_λ⟩|²` of the domain criterion, given
/// an orthonormal eigenbasis slice. Bounded iff f lies in the domain of the
/// extension; grows when traces jump.
pub fn domain_energy(
    omega: &IntervalUnion,
    f: L2Ref,
    basis: &[(f64, PiecewiseExp)],
    n_bound: f64,
) -> Result<f64> {
    let mut acc = 0.0;
    for (lambda, eps) in basis {
        if lambda.abs() > n_bound {
            continue;
        }
        let c = inner_product(omega, f, L2Ref::Exp(eps))?;
        acc += lambda * lambda * c.norm_sqr();
    }
    Ok(acc)
}

/// Smooth bump supported on the central `frac` of interval `i`, peak 1,
/// with identically zero traces. The closure form is
/// `exp(1 - 1/(1-u²))` in the scaled coordinate.
pub fn bump_value(u: f64) -> f64 {
    if u.abs() < 1.0 {
        (1.0 - 1.0 / (1.0 - u * u)).exp()
    } else {
        0.0
    }
}

/// Derivative of [`bump_value`] in the scaled coordinate.
pub fn bump_deriv(u: f64) -> f64 {
    if u.abs() < 1.0 {
        let d = 1.0 - u * u;
        bump_value(u) * (-2.0 * u / (d * d))
    } else {
        0.0
    }
}

/// Smooth bump supported on the central `frac` of one interval, evaluable
/// in closed form anywhere.
#[derive(Debug, Clone)]
pub struct SmoothBump {
    pub interval: usize,
    pub center: f64,
    pub halfwidth: f64,
}

impl SmoothBump {
    pub fn centered(omega: &IntervalUnion, interval: usize, frac: f64) -> Self {
        let a = crate::exact::rat_to_f64(omega.alpha(interval));
        let b = crate::exact::rat_to_f64(omega.beta(interval));
        Self {
            interval,
            center: 0.5 * (a + b),
            halfwidth: 0.5 * (b - a) * frac,
        }
    }

    pub fn value(&self, i: usize, x: f64) -> Complex64 {
        if i == self.interval {
            Complex64::new(bump_value((x - self.center) / self.halfwidth), 0.0)
        } else {
            Complex64::ZERO
        }
    }

    /// `(1/2πi) f'` sampled pointwise, for domain-criterion bounds.
    pub fn momentum_value(&self, i: usize, x: f64) -> Complex64 {
        if i == self.interval {
            let u = (x - self.center) / self.halfwidth;
            Complex64::new(0.0, -1.0 / TAU) * (bump_deriv(u) / self.halfwidth)
        } else {
            Complex64::ZERO
        }
    }

    pub fn sample_on(&self, grid: &Arc<QuadGrid>) -> SampledFunction {
        let n = grid.omega().n();
        SampledFunction::from_fn(
            grid,
            |i, x| self.value(i, x),
            Some(BoundaryTraces::new(CVector::zeros(n), CVector::zeros(n))),
        )
    }
}

/// Sample a bump in interval `i` on the grid.
pub fn bump_in_interval(grid: &Arc<QuadGrid>, i: usize, frac: f64) -> SampledFunction {
    SmoothBump::centered(grid.omega(), i, frac).sample_on(grid)
}

// ---------------------------------------------------------------------------
// CSV import/export
// ---------------------------------------------------------------------------

/// Trace sidecar: either both trace vectors or an explicit absence marker.
#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceSidecar {
    pub present: bool,
    #[serde(default)]
    pub at_alpha: Vec<[f64; 2]>,
    #[serde(default)]
    pub at_beta: Vec<[f64; 2]>,
}

impl TraceSidecar {
    pub fn from_traces(traces: &Option<BoundaryTraces>) -> Self {
        match traces {
            Some(t) => Self {
                present: true,
                at_alpha: t.at_alpha.iter().map(|z| [z.re, z.im]).collect(),
                at_beta: t.at_beta.iter().map(|z| [z.re, z.im]).collect(),
            },
            None => Self {
                present: false,
                at_alpha: Vec::new(),
                at_beta: Vec::new(),
            },
        }
    }

    pub fn to_traces(&self, n: usize) -> Result<Option<BoundaryTraces>> {
        if !self.present {
            return Ok(None);
        }
        if self.at_alpha.len() != n || self.at_beta.len() != n {
            return Err(Error::Config(format!(
                "trace sidecar has {} / {} entries, expected {n}",
                self.at_alpha.len(),
                self.at_beta.len()
            )));
        }
        let at_alpha = CVector::from_fn(n, |i, _| {
            Complex64::new(self.at_alpha[i][0], self.at_alpha[i][1])
        });
        let at_beta = CVector::from_fn(n, |i, _| {
            Complex64::new(self.at_beta[i][0], self.at_beta[i][1])
        });
        Ok(Some(BoundaryTraces::new(at_alpha, at_beta)))
    }
}

/// Write `interval_index, node, weight, value_re, value_im` rows.
pub fn sampled_to_csv<W: std::io::Write>(f: &SampledFunction, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["interval_index", "node", "weight", "value_re", "value_im"])?;
    let q = f.grid.order();
    for (j, &x) in f.grid.nodes().iter().enumerate() {
        w.write_record([
            (j / q).to_string(),
            crate::fmt::f64_full(x),
            crate::fmt::f64_full(f.grid.weights()[j]),
            crate::fmt::f64_full(f.values[j].re),
            crate::fmt::f64_full(f.values[j].im),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Read values back onto a freshly built grid; node positions must match
/// the grid for the declared omega and order.
pub fn sampled_from_csv<R: std::io::Read>(
    grid: &Arc<QuadGrid>,
    input: R,
    traces: Option<BoundaryTraces>,
) -> Result<SampledFunction> {
    let mut rdr = csv::Reader::from_reader(input);
    let mut values = Vec::with_capacity(grid.len());
    for (j, record) in rdr.records().enumerate() {
        let record = record?;
        if record.len() != 5 {
            return Err(Error::Config(format!(
                "csv row {j} has {} fields, expected 5",
                record.len()
            )));
        }
        let node: f64 = record[1]
            .parse()
            .map_err(|e| Error::Config(format!("csv row {j} node: {e}")))?;
        if j >= grid.len() {
            return Err(Error::Config("csv has more rows than grid nodes".into()));
        }
        if (node - grid.nodes()[j]).abs() > 1e-12 * (1.0 + node.abs()) {
            return Err(Error::Config(format!(
                "csv row {j} node {node} does not match grid node {}",
                grid.nodes()[j]
            )));
        }
        let re: f64 = record[3]
            .parse()
            .map_err(|e| Error::Config(format!("csv row {j} value_re: {e}")))?;
        let im: f64 = record[4]
            .parse()
            .map_err(|e| Error::Config(format!("csv row {j} value_im: {e}")))?;
        values.push(Complex64::new(re, im));
    }
    if values.len() != grid.len() {
        return Err(Error::Config(format!(
            "csv has {} rows, grid has {} nodes",
            values.len(),
            grid.len()
        )));
    }
    Ok(SampledFunction {
        grid: grid.clone(),
        values,
        traces,
    })
}
