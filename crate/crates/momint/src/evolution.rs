//! The one-parameter unitary group `U(t) = exp(2πitA)` by two independent
//! routes.
//!
//! The spectral propagator expands in a truncated orthonormal eigenbasis
//! and multiplies coefficients by `e^{2πiλt}`. The ray propagator uses the
//! geometric action of the group directly: inside an interval the function
//! translates, `(U(t)f)(x) = f(x+t)` while `x + t` stays in the interval,
//! and a crossing of the right endpoint splits the value across all
//! intervals through the boundary matrix:
//!
//! ```text
//! (U(t)f)(x) = Σ_k B_{ik} V_k(t - (βᵢ - x)),
//! V_k(s)     = f(α_k + s)            if s < ℓ_k,
//! V_k(s)     = Σ_j B_{kj} V_j(s-ℓ_k) otherwise.
//! ```
//!
//! Remaining times are differences of the form `t - (βᵢ-x) - Σ ℓ`, so with
//! rational endpoints the recursion is run in exact rational arithmetic
//! (every finite f64 input converts exactly) and memoization on the state
//! `(k, s)` collapses the exponential path tree. Negative times are served
//! by the spectral propagator only.

use std::collections::HashMap;

use num_complex::Complex64;
use num_traits::Zero;

use crate::boundary::{BoundaryMatrix, BoundaryTraces};
use crate::error::{Error, Result};
use crate::exact::{rat_from_f64, rat_to_f64, Rat};
use crate::funcspace::{inner_product, L2Ref, PiecewiseExp, QuadGrid, SampledFunction};
use crate::geometry::{IntervalUnion, Location};
use crate::spectral::{CVector, SpectrumWindow};

const TAU: f64 = std::f64::consts::TAU;

/// Point evaluation used by the ray propagator.
pub trait EvalOnOmega {
    /// Value at an interior point of interval `i`.
    fn value_in(&self, i: usize, x: f64) -> Complex64;
    /// Right limit at αᵢ; `None` when the data carries no traces.
    fn trace_at_alpha(&self, omega: &IntervalUnion, i: usize) -> Option<Complex64>;
}

impl EvalOnOmega for PiecewiseExp {
    fn value_in(&self, i: usize, x: f64) -> Complex64 {
        self.eval_in(i, x)
    }

    fn trace_at_alpha(&self, omega: &IntervalUnion, i: usize) -> Option<Complex64> {
        Some(self.eval_in(i, rat_to_f64(omega.alpha(i))))
    }
}

impl EvalOnOmega for SampledFunction {
    fn value_in(&self, i: usize, x: f64) -> Complex64 {
        self.eval_in(i, x)
    }

    fn trace_at_alpha(&self, _omega: &IntervalUnion, i: usize) -> Option<Complex64> {
        self.traces.as_ref().map(|t| t.at_alpha[i])
    }
}

impl EvalOnOmega for crate::funcspace::SmoothBump {
    fn value_in(&self, i: usize, x: f64) -> Complex64 {
        self.value(i, x)
    }

    fn trace_at_alpha(&self, _omega: &IntervalUnion, _i: usize) -> Option<Complex64> {
        Some(Complex64::ZERO)
    }
}

/// Guards for the ray recursion.
#[derive(Debug, Clone)]
pub struct RayParams {
    /// Abort when the memo table outgrows this; deeply incommensurate
    /// lengths with large t can explode the state space.
    pub max_states: usize,
    /// Cap on the enumerated diagnostic path list.
    pub path_cap: usize,
}

impl Default for RayParams {
    fn default() -> Self {
        Self {
            max_states: 1_000_000,
            path_cap: 4096,
        }
    }
}

/// One contributing ray.
#[derive(Debug, Clone)]
pub struct RayPath {
    /// Interval entered after each endpoint crossing, evaluation point first.
    pub crossings: Vec<usize>,
    /// Product of boundary-matrix entries along the crossings.
    pub amplitude: Complex64,
    /// Point where the ray samples the initial data.
    pub origin: f64,
}

/// Value plus path diagnostics.
#[derive(Debug, Clone)]
pub struct RayTraceResult {
    pub value: Complex64,
    /// Contributing rays; `value = Σ amplitude · f(origin)` when complete.
    pub paths: Vec<RayPath>,
    pub paths_truncated: bool,
    /// Distinct `(interval, remaining time)` states visited.
    pub states_visited: usize,
}

/// Memoized evaluation of `V_k(s)` over exact rational remaining times.
struct RayEngine<'a, F: EvalOnOmega + ?Sized> {
    omega: &'a IntervalUnion,
    b: &'a BoundaryMatrix,
    f: &'a F,
    lengths: Vec<Rat>,
    memo: HashMap<(usize, Rat), Complex64>,
    max_states: usize,
}

enum Task {
    Visit(usize, Rat),
    Combine(usize, Rat),
}

impl<'a, F: EvalOnOmega + ?Sized> RayEngine<'a, F> {
    fn new(omega: &'a IntervalUnion, b: &'a BoundaryMatrix, f: &'a F, max_states: usize) -> Self {
        let lengths = (0..omega.n()).map(|i| omega.length(i)).collect();
        Self {
            omega,
            b,
            f,
            lengths,
            memo: HashMap::new(),
            max_states,
        }
    }

    fn leaf(&self, k: usize, s: &Rat) -> Result<Complex64> {
        if s.is_zero() {
            return self
                .f
                .trace_at_alpha(self.omega, k)
                .ok_or(Error::MissingTraces);
        }
        let x = rat_to_f64(&(self.omega.alpha(k) + s));
        Ok(self.f.value_in(k, x))
    }

    fn insert(&mut self, key: (usize, Rat), value: Complex64) -> Result<()> {
        if self.memo.len() >= self.max_states {
            return Err(Error::RayBudgetExceeded {
                states: self.memo.len(),
            });
        }
        self.memo.insert(key, value);
        Ok(())
    }

    /// `V_k(s) = (U(s)f)(α_k)`, iterative depth-first walk so long chains
    /// of crossings cannot overflow the call stack.
    fn value(&mut self, k0: usize, s0: Rat) -> Result<Complex64> {
        if let Some(&v) = self.memo.get(&(k0, s0.clone())) {
            return Ok(v);
        }
        let mut stack = vec![Task::Visit(k0, s0.clone())];
        while let Some(task) = stack.pop() {
            match task {
                Task::Visit(k, s) => {
                    if self.memo.contains_key(&(k, s.clone())) {
                        continue;
                    }
                    if s < self.lengths[k] {
                        let v = self.leaf(k, &s)?;
                        self.insert((k, s), v)?;
                    } else {
                        let next = &s - &self.lengths[k];
                        stack.push(Task::Combine(k, s));
                        for j in 0..self.omega.n() {
                            if !self.memo.contains_key(&(j, next.clone())) {
                                stack.push(Task::Visit(j, next.clone()));
                            }
                        }
                    }
                }
                Task::Combine(k, s) => {
                    let next = &s - &self.lengths[k];
                    let mut acc = Complex64::ZERO;
                    for j in 0..self.omega.n() {
                        acc += self.b.entries()[(k, j)] * self.memo[&(j, next.clone())];
                    }
                    self.insert((k, s), acc)?;
                }
            }
        }
        Ok(self.memo[&(k0, s0)])
    }
}

/// Enumerate contributing rays for diagnostics, capped at `path_cap`.
fn enumerate_paths(
    omega: &IntervalUnion,
    b: &BoundaryMatrix,
    lengths: &[Rat],
    i: usize,
    s0: &Rat,
    path_cap: usize,
) -> (Vec<RayPath>, bool) {
    let mut paths = Vec::new();
    let mut truncated = false;
    let mut stack: Vec<(usize, Rat, Complex64, Vec<usize>)> = (0..omega.n())
        .rev()
        .map(|k| (k, s0.clone(), b.entries()[(i, k)], vec![k]))
        .collect();
    while let Some((k, s, amp, crossings)) = stack.pop() {
        if paths.len() >= path_cap {
            truncated = true;
            break;
        }
        if s < lengths[k] {
            paths.push(RayPath {
                crossings,
                amplitude: amp,
                origin: rat_to_f64(&(omega.alpha(k) + &s)),
            });
        } else {
            let next = &s - &lengths[k];
            for j in (0..omega.n()).rev() {
                let mut c = crossings.clone();
                c.push(j);
                stack.push((j, next.clone(), amp * b.entries()[(k, j)], c));
            }
        }
    }
    (paths, truncated)
}

/// Evolve pointwise by ray tracing: `(U(t)f)(x)` for `t ≥ 0` and `x`
/// strictly inside Ω.
pub fn evolve_ray<F: EvalOnOmega + ?Sized>(
    omega: &IntervalUnion,
    b: &BoundaryMatrix,
    f: &F,
    t: f64,
    x: f64,
    params: &RayParams,
) -> Result<RayTraceResult> {
    b.require_unitary()?;
    if t < 0.0 {
        return Err(Error::NegativeTime { t });
    }
    let x_rat = rat_from_f64(x)?;
    let t_rat = rat_from_f64(t)?;
    let i = match omega.locate(&x_rat) {
        Location::Interior(i) => i,
        Location::Boundary(_) => return Err(Error::BoundaryPoint { x }),
        Location::Outside => return Err(Error::OutsidePoint { x }),
    };

    let reach = &x_rat + &t_rat;
    if &reach < omega.beta(i) {
        // pure translation; evaluate at the plain f64 sum so the value is
        // bit-identical to a direct call
        let value = f.value_in(i, x + t);
        return Ok(RayTraceResult {
            value,
            paths: vec![RayPath {
                crossings: Vec::new(),
                amplitude: Complex64::ONE,
                origin: x + t,
            }],
            paths_truncated: false,
            states_visited: 0,
        });
    }

    let s0 = &t_rat - &(omega.beta(i) - &x_rat);
    let mut engine = RayEngine::new(omega, b, f, params.max_states);
    let mut value = Complex64::ZERO;
    for k in 0..omega.n() {
        value += b.entries()[(i, k)] * engine.value(k, s0.clone())?;
    }
    let (paths, paths_truncated) =
        enumerate_paths(omega, b, &engine.lengths, i, &s0, params.path_cap);
    Ok(RayTraceResult {
        value,
        paths,
        paths_truncated,
        states_visited: engine.memo.len(),
    })
}

/// Evolve onto a whole grid; traces attach through the one-sided limits of
/// the recursion, `(U(t)f)(αᵢ) = Vᵢ(t)` and `(U(t)f)(β̄) = B (U(t)f)(ᾱ)`.
/// When the initial data declares no traces and the recursion needs one,
/// the output traces are simply absent.
pub fn evolve_ray_function<F: EvalOnOmega + ?Sized>(
    omega: &IntervalUnion,
    b: &BoundaryMatrix,
    f: &F,
    t: f64,
    grid: &std::sync::Arc<QuadGrid>,
    params: &RayParams,
) -> Result<SampledFunction> {
    b.require_unitary()?;
    if t < 0.0 {
        return Err(Error::NegativeTime { t });
    }
    let t_rat = rat_from_f64(t)?;
    let mut engine = RayEngine::new(omega, b, f, params.max_states);
    let q = grid.order();
    let mut values = Vec::with_capacity(grid.len());
    for (j, &x) in grid.nodes().iter().enumerate() {
        let i = j / q;
        let x_rat = rat_from_f64(x)?;
        let reach = &x_rat + &t_rat;
        if &reach < omega.beta(i) {
            values.push(f.value_in(i, x + t));
        } else {
            let s0 = &t_rat - &(omega.beta(i) - &x_rat);
            let mut acc = Complex64::ZERO;
            for k in 0..omega.n() {
                acc += b.entries()[(i, k)] * engine.value(k, s0.clone())?;
            }
            values.push(acc);
        }
    }

    let traces = compute_ray_traces(omega, b, &mut engine, &t_rat)?;
    Ok(SampledFunction {
        grid: grid.clone(),
        values,
        traces,
    })
}

fn compute_ray_traces<F: EvalOnOmega + ?Sized>(
    omega: &IntervalUnion,
    b: &BoundaryMatrix,
    engine: &mut RayEngine<'_, F>,
    t_rat: &Rat,
) -> Result<Option<BoundaryTraces>> {
    let n = omega.n();
    let mut at_alpha = CVector::zeros(n);
    for i in 0..n {
        match engine.value(i, t_rat.clone()) {
            Ok(v) => at_alpha[i] = v,
            Err(Error::MissingTraces) => return Ok(None),
            Err(e) => return Err(e),
        }
    }
    let at_beta = b.entries() * &at_alpha;
    Ok(Some(BoundaryTraces::new(at_alpha, at_beta)))
}

/// Truncated orthonormal eigenbasis `{(λ, ε_λ)}` with `|λ| ≤ bound`.
#[derive(Debug, Clone)]
pub struct EigenBasisTruncation {
    pairs: Vec<(f64, PiecewiseExp)>,
    bound: f64,
}

pub const BASIS_GRAM_TOL: f64 = 1e-9;

impl EigenBasisTruncation {
    /// Keep the eigenpairs with `|λ| ≤ bound` and verify the basis Gram
    /// matrix is the identity to within `1e-9`.
    pub fn from_window(win: &SpectrumWindow, omega: &IntervalUnion, bound: f64) -> Result<Self> {
        let pairs: Vec<(f64, PiecewiseExp)> = win
            .eigenbasis()
            .into_iter()
            .filter(|(l, _)| l.abs() <= bound)
            .collect();
        if pairs.is_empty() {
            return Err(Error::Config(format!(
                "no eigenvalues with |lambda| <= {bound} in the window"
            )));
        }
        let mut defect: f64 = 0.0;
        for (j, (_, ej)) in pairs.iter().enumerate() {
            for (k, (_, ek)) in pairs.iter().enumerate().skip(j) {
                let g = ej.inner_exact(ek, omega);
                let target = if j == k {
                    Complex64::ONE
                } else {
                    Complex64::ZERO
                };
                defect = defect.max((g - target).norm());
            }
        }
        if defect > BASIS_GRAM_TOL {
            return Err(Error::Config(format!(
                "eigenbasis Gram defect {defect:.3e} exceeds {BASIS_GRAM_TOL:.1e}"
            )));
        }
        Ok(Self { pairs, bound })
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn bound(&self) -> f64 {
        self.bound
    }

    pub fn pairs(&self) -> &[(f64, PiecewiseExp)] {
        &self.pairs
    }

    /// Coefficients `⟨f, ε⟩` of a sampled function against the basis.
    pub fn project(&self, omega: &IntervalUnion, f: &SampledFunction) -> Result<Vec<Complex64>> {
        self.pairs
            .iter()
            .map(|(_, eps)| inner_product(omega, L2Ref::Sampled(f), L2Ref::Exp(eps)))
            .collect()
    }

    /// `‖P_N f‖`, the norm of the projection onto the truncated span.
    pub fn projected_norm(&self, omega: &IntervalUnion, f: &SampledFunction) -> Result<f64> {
        let coeffs = self.project(omega, f)?;
        Ok(coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt())
    }
}

/// Spectral propagator: `Σ e^{2πiλt} ⟨f, ε⟩ ε` on f's own grid, with exact
/// closed-form traces. Defined for every real t.
pub fn evolve_spectral(
    omega: &IntervalUnion,
    f: &SampledFunction,
    t: f64,
    basis: &EigenBasisTruncation,
) -> Result<SampledFunction> {
    let coeffs = basis.project(omega, f)?;
    let grid = &f.grid;
    let q = grid.order();
    let n = omega.n();
    let mut values = vec![Complex64::ZERO; grid.len()];
    let mut at_alpha = CVector::zeros(n);
    let mut at_beta = CVector::zeros(n);
    for ((lambda, eps), &a) in basis.pairs.iter().zip(&coeffs) {
        let rotate = a * Complex64::from_polar(1.0, TAU * lambda * t);
        for (j, &x) in grid.nodes().iter().enumerate() {
            values[j] += rotate * eps.eval_in(j / q, x);
        }
        let tr = eps.traces(omega);
        at_alpha += tr.at_alpha * rotate;
        at_beta += tr.at_beta * rotate;
    }
    Ok(SampledFunction {
        grid: grid.clone(),
        values,
        traces: Some(BoundaryTraces::new(at_alpha, at_beta)),
    })
}

/// Which propagator to drive.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Propagator {
    Spectral,
    Ray,
}

/// L² distance between `U(s+t)f` and `U(s)U(t)f`, quadrature-measured.
#[allow(clippy::too_many_arguments)]
pub fn group_law_defect(
    omega: &IntervalUnion,
    b: &BoundaryMatrix,
    f: &SampledFunction,
    s: f64,
    t: f64,
    propagator: Propagator,
    basis: Option<&EigenBasisTruncation>,
    params: &RayParams,
) -> Result<f64> {
    let grid = &f.grid;
    match propagator {
        Propagator::Ray => {
            let direct = evolve_ray_function(omega, b, f, s + t, grid, params)?;
            let step1 = evolve_ray_function(omega, b, f, t, grid, params)?;
            let step2 = evolve_ray_function(omega, b, &step1, s, grid, params)?;
            direct.distance(&step2)
        }
        Propagator::Spectral => {
            let basis = basis
                .ok_or_else(|| Error::Config("spectral group law needs an eigenbasis".into()))?;
            let direct = evolve_spectral(omega, f, s + t, basis)?;
            let step1 = evolve_spectral(omega, f, t, basis)?;
            let step2 = evolve_spectral(omega, &step1, s, basis)?;
            direct.distance(&step2)
        }
    }
}

/// Frame CSV: `node, value_re, value_im` rows.
pub fn frame_to_csv<W: std::io::Write>(f: &SampledFunction, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["node", "value_re", "value_im"])?;
    for (j, &x) in f.grid.nodes().iter().enumerate() {
        w.write_record([
            crate::fmt::f64_full(x),
            crate::fmt::f64_full(f.values[j].re),
            crate::fmt::f64_full(f.values[j].im),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boundary::half_shift_matrix;
    use crate::funcspace::bump_in_interval;
    use crate::spectral::{find_spectrum, SpectrumParams};
    use approx::assert_abs_diff_eq;

    fn two_interval() -> IntervalUnion {
        IntervalUnion::from_pairs(&[(0, 1), (1, 2), (1, 1), (3, 2)]).unwrap()
    }

    fn cx(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    struct Linear;
    impl EvalOnOmega for Linear {
        fn value_in(&self, _i: usize, x: f64) -> Complex64 {
            cx(x, 0.0)
        }
        fn trace_at_alpha(&self, omega: &IntervalUnion, i: usize) -> Option<Complex64> {
            Some(cx(rat_to_f64(omega.alpha(i)), 0.0))
        }
    }

    #[test]
    fn circle_translation_on_unit_interval() {
        let om = IntervalUnion::unit();
        let b = BoundaryMatrix::phase(0.0);
        let p = RayParams::default();
        let r = evolve_ray(&om, &b, &Linear, 0.25, 0.5, &p).unwrap();
        assert_abs_diff_eq!(r.value.re, 0.75, epsilon = 0.0);
        assert!(r.paths.len() == 1 && r.paths[0].crossings.is_empty());

        let r = evolve_ray(&om, &b, &Linear, 0.25, 0.9, &p).unwrap();
        assert_abs_diff_eq!(r.value.re, 0.15, epsilon = 1e-15);
        assert_eq!(r.paths.len(), 1);
        assert_eq!(r.paths[0].crossings, vec![0]);
    }

    #[test]
    fn hand_value_through_one_crossing() {
        // f = χ_{J₂}, x = 0.25, t = 0.5: value = B₁₂ = (1-i)/2
        let om = two_interval();
        let b = half_shift_matrix();
        let f = PiecewiseExp::indicator(1, 2);
        let r = evolve_ray(&om, &b, &f, 0.5, 0.25, &RayParams::default()).unwrap();
        assert_abs_diff_eq!((r.value - cx(0.5, -0.5)).norm(), 0.0, epsilon = 0.0);
        // two rays, one per interval entered; their weighted sum is the value
        assert_eq!(r.paths.len(), 2);
        let from_paths: Complex64 = r
            .paths
            .iter()
            .map(|p| {
                let i = om.interval_of_f64(p.origin, 0.0).unwrap();
                p.amplitude * f.value_in(i, p.origin)
            })
            .sum();
        assert_abs_diff_eq!((from_paths - r.value).norm(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn no_crossing_regime_is_exact_translation() {
        let om = two_interval();
        let b = half_shift_matrix();
        let grid = QuadGrid::new(om.clone(), 48);
        // support sits in the middle 60%, so small t cannot move mass
        // across an endpoint
        let f = crate::funcspace::SmoothBump::centered(&om, 0, 0.6);
        let t = 0.01;
        let evolved = evolve_ray_function(&om, &b, &f, t, &grid, &RayParams::default()).unwrap();
        for (j, &x) in grid.nodes().iter().enumerate() {
            let i = j / grid.order();
            let b_i = rat_to_f64(om.beta(i));
            let expect = if x + t < b_i {
                f.value(i, x + t)
            } else {
                // past the bump: zero mass has reached the far end
                Complex64::ZERO
            };
            assert_abs_diff_eq!((evolved.values[j] - expect).norm(), 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn eigenfunction_covariance_under_rays() {
        // U(t) ε_λ = e^{2πiλt} ε_λ, the sharpest ray-vs-closed-form check
        let om = two_interval();
        let b = half_shift_matrix();
        let win = find_spectrum(&om, &b, (-4.0, 4.0), &SpectrumParams::default()).unwrap();
        let params = RayParams::default();
        for (lambda, eps) in win.eigenbasis() {
            for &t in &[0.3, 0.75, 1.9] {
                for &x in &[0.1, 0.35, 1.2, 1.45] {
                    let r = evolve_ray(&om, &b, &eps, t, x, &params).unwrap();
                    let i = om.interval_of_f64(x, 0.0).unwrap();
                    let expect = Complex64::from_polar(1.0, TAU * lambda * t) * eps.eval_in(i, x);
                    assert_abs_diff_eq!((r.value - expect).norm(), 0.0, epsilon = 1e-10);
                }
            }
        }
    }

    #[test]
    fn ray_function_unitarity_and_traces() {
        let om = two_interval();
        let b = half_shift_matrix();
        let grid = QuadGrid::new(om.clone(), 256);
        let bump = crate::funcspace::SmoothBump::centered(&om, 0, 0.7);
        let norm0 = bump.sample_on(&grid).norm();
        for &t in &[0.2, 0.7, 1.3] {
            let ft = evolve_ray_function(&om, &b, &bump, t, &grid, &RayParams::default()).unwrap();
            assert_abs_diff_eq!(ft.norm(), norm0, epsilon = 1e-9);
            // evolved traces satisfy the boundary relation by construction
            let tr = ft.traces.as_ref().unwrap();
            let residual = (b.entries() * &tr.at_alpha - &tr.at_beta).norm();
            assert!(residual < 1e-12);
        }
    }

    #[test]
    fn spectral_propagator_basics() {
        let om = two_interval();
        let b = half_shift_matrix();
        let win = find_spectrum(&om, &b, (-30.0, 30.0), &SpectrumParams::default()).unwrap();
        let basis = EigenBasisTruncation::from_window(&win, &om, 30.0).unwrap();
        let grid = QuadGrid::new(om.clone(), 128);
        let f = bump_in_interval(&grid, 0, 0.7);

        // t = 0 reproduces the projection
        let p0 = evolve_spectral(&om, &f, 0.0, &basis).unwrap();
        let coeffs = basis.project(&om, &f).unwrap();
        let pn_norm: f64 = coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        assert_abs_diff_eq!(p0.norm(), pn_norm, epsilon = 1e-10);

        // unitarity up to truncation at any t
        let pt = evolve_spectral(&om, &f, 0.8, &basis).unwrap();
        assert_abs_diff_eq!(pt.norm(), pn_norm, epsilon = 1e-12);

        // eigenfunctions rotate by a phase
        let eps = PiecewiseExp::exponential(0.5, 2);
        let g = eps.sample_on(&grid);
        let gt = evolve_spectral(&om, &g, 0.4, &basis).unwrap();
        let rot = Complex64::from_polar(1.0, TAU * 0.5 * 0.4);
        for (j, &x) in grid.nodes().iter().enumerate() {
            let expect = rot * eps.eval_in(j / grid.order(), x);
            assert_abs_diff_eq!((gt.values[j] - expect).norm(), 0.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn all_phases_rotate_together_on_unit_interval() {
        // n = 1, B = e^{2πiθ}: U(1) = e^{2πiθ} I on the truncated span
        let om = IntervalUnion::unit();
        let theta = 0.3;
        let b = BoundaryMatrix::phase(theta);
        let win = find_spectrum(&om, &b, (-20.0, 20.0), &SpectrumParams::default()).unwrap();
        let basis = EigenBasisTruncation::from_window(&win, &om, 20.0).unwrap();
        let grid = QuadGrid::new(om.clone(), 64);
        let f = bump_in_interval(&grid, 0, 0.7);
        let ft = evolve_spectral(&om, &f, 1.0, &basis).unwrap();
        let p0 = evolve_spectral(&om, &f, 0.0, &basis).unwrap();
        let rot = Complex64::from_polar(1.0, TAU * theta);
        for (a, b) in ft.values.iter().zip(&p0.values) {
            assert_abs_diff_eq!((a - rot * b).norm(), 0.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn group_law_ray_exact() {
        // analytic initial data, so the intermediate resampling is exact to
        // interpolation accuracy at this order
        let om = two_interval();
        let b = half_shift_matrix();
        let grid = QuadGrid::new(om.clone(), 96);
        let mix = PiecewiseExp::exponential(0.5, 2);
        let f = mix.sample_on(&grid);
        let d = group_law_defect(
            &om,
            &b,
            &f,
            0.3,
            0.85,
            Propagator::Ray,
            None,
            &RayParams::default(),
        )
        .unwrap();
        assert!(d < 1e-10, "ray group-law defect {d}");
        let d0 = group_law_defect(
            &om,
            &b,
            &f,
            0.0,
            0.0,
            Propagator::Ray,
            None,
            &RayParams::default(),
        )
        .unwrap();
        assert_eq!(d0, 0.0);
    }

    #[test]
    fn group_law_spectral_truncated() {
        let om = two_interval();
        let b = half_shift_matrix();
        let win = find_spectrum(&om, &b, (-50.0, 50.0), &SpectrumParams::default()).unwrap();
        let basis = EigenBasisTruncation::from_window(&win, &om, 50.0).unwrap();
        let grid = QuadGrid::new(om.clone(), 256);
        let f = bump_in_interval(&grid, 0, 0.7);
        let d = group_law_defect(
            &om,
            &b,
            &f,
            0.4,
            0.9,
            Propagator::Spectral,
            Some(&basis),
            &RayParams::default(),
        )
        .unwrap();
        assert!(d < 1e-6, "spectral group-law defect {d}");
    }

    #[test]
    fn negative_time_is_rejected_by_rays() {
        let om = IntervalUnion::unit();
        let b = BoundaryMatrix::phase(0.0);
        assert!(matches!(
            evolve_ray(&om, &b, &Linear, -0.5, 0.5, &RayParams::default()),
            Err(Error::NegativeTime { .. })
        ));
    }

    #[test]
    fn boundary_point_is_rejected() {
        let om = IntervalUnion::unit();
        let b = BoundaryMatrix::phase(0.0);
        assert!(matches!(
            evolve_ray(&om, &b, &Linear, 0.5, 0.0, &RayParams::default()),
            Err(Error::BoundaryPoint { .. })
        ));
        assert!(matches!(
            evolve_ray(&om, &b, &Linear, 0.5, 7.0, &RayParams::default()),
            Err(Error::OutsidePoint { .. })
        ));
    }

    #[test]
    fn state_budget_guard_trips() {
        let om = IntervalUnion::unit();
        let b = BoundaryMatrix::phase(0.0);
        let params = RayParams {
            max_states: 10,
            path_cap: 8,
        };
        let err = evolve_ray(&om, &b, &Linear, 50.0, 0.5, &params);
        assert!(matches!(err, Err(Error::RayBudgetExceeded { .. })));
    }

    #[test]
    fn domain_invariance_under_spectral_flow() {
        // if B f(ᾱ) = f(β̄), the evolved traces satisfy the same relation
        let om = two_interval();
        let b = half_shift_matrix();
        let win = find_spectrum(&om, &b, (-40.0, 40.0), &SpectrumParams::default()).unwrap();
        let basis = EigenBasisTruncation::from_window(&win, &om, 40.0).unwrap();
        let grid = QuadGrid::new(om.clone(), 128);
        // bump has zero traces, which satisfy every boundary relation
        let f = bump_in_interval(&grid, 0, 0.7);
        let ft = evolve_spectral(&om, &f, 0.6, &basis).unwrap();
        let tr = ft.traces.as_ref().unwrap();
        let residual = (b.entries() * &tr.at_alpha - &tr.at_beta).norm();
        assert!(residual < 1e-8, "trace residual {residual}");
    }
}
