//! Spectrum of a self-adjoint extension through the eigenphase flow of the
//! transfer matrix, plus eigenfunctions, eigenvalue counting, and the
//! resolvent.
//!
//! λ is an eigenvalue exactly when 1 is an eigenvalue of the unitary
//! `M(λ) = E(λβ̄)⁻¹BE(λᾱ)`, i.e. when one of its eigenphases crosses 0.
//! Each eigenphase decreases strictly in λ, with speed between 2πℓ_min and
//! 2πℓ_max (first-order perturbation gives dθ/dλ = −2π⟨v, diag(ℓ)v⟩), and
//! the total phase flux is exact: Σⱼ dθⱼ/dλ = −2π|Ω|. A grid step of
//! 1/(4ℓ_max) therefore moves every phase by at most π/2, and the number of
//! zero crossings inside one step is
//!
//! ```text
//! w = round((2π|Ω|Δλ + Σθ(λ+Δλ) − Σθ(λ)) / 2π)
//! ```
//!
//! with phases taken in [0, 2π). This count is exact whenever no phase
//! moves by 2π in a step, so no root can be missed; roots are then isolated
//! by bisection on the same count. Working with phases instead of
//! |det(I−M)| avoids the catastrophic cancellation of a product of n
//! near-unit factors at multiple roots.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::boundary::{transfer_matrix, BoundaryMatrix};
use crate::error::{Error, Result};
use crate::funcspace::{PiecewiseExp, SampledFunction};
use crate::geometry::IntervalUnion;

const TAU: f64 = std::f64::consts::TAU;

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

/// Tunables for the spectrum scan.
#[derive(Debug, Clone)]
pub struct SpectrumParams {
    /// Refine each root until its eigenphase is below this bound.
    pub tol_phase: f64,
    /// Residual bound `‖BE(λᾱ)c − E(λβ̄)c‖` accepted for eigenvectors.
    pub residual_tol: f64,
    /// Memory guard on the number of grid nodes in one scan.
    pub max_grid_nodes: usize,
    /// Worker threads; the window splits at step boundaries, so results are
    /// identical to a single-threaded run.
    pub threads: usize,
}

impl Default for SpectrumParams {
    fn default() -> Self {
        Self {
            tol_phase: 1e-12,
            residual_tol: 1e-9,
            max_grid_nodes: 5_000_000,
            threads: 1,
        }
    }
}

/// One eigenvalue with an orthonormal basis of boundary coefficient
/// vectors. Vectors are orthonormal in the length-weighted inner product
/// `⟨c, c'⟩_ℓ = Σᵢ cᵢ c̄'ᵢ ℓᵢ`, which is the L²(Ω) product of the
/// corresponding eigenfunctions.
#[derive(Debug, Clone)]
pub struct Eigenpair {
    pub lambda: f64,
    pub cvectors: Vec<CVector>,
}

impl Eigenpair {
    pub fn multiplicity(&self) -> usize {
        self.cvectors.len()
    }
}

/// Spectrum over a window, with the eigenphase trace kept for diagnostics.
#[derive(Debug, Clone)]
pub struct SpectrumWindow {
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub eigenpairs: Vec<Eigenpair>,
    /// Σ multiplicities.
    pub count: usize,
    /// Scan grid.
    pub grid: Vec<f64>,
    /// Sorted eigenphases at each grid node.
    pub phases: Vec<Vec<f64>>,
}

impl SpectrumWindow {
    /// Flatten into `(λ, eigenfunction)` pairs, λ ascending, basis order
    /// within an eigenvalue preserved.
    pub fn eigenbasis(&self) -> Vec<(f64, PiecewiseExp)> {
        let mut out = Vec::with_capacity(self.count);
        for ep in &self.eigenpairs {
            for c in &ep.cvectors {
                out.push((
                    ep.lambda,
                    PiecewiseExp::new(Complex64::new(ep.lambda, 0.0), c.clone()),
                ));
            }
        }
        out
    }

    pub fn lambdas(&self) -> Vec<f64> {
        self.eigenpairs.iter().map(|e| e.lambda).collect()
    }
}

/// `det(I − M(λ))`; zero exactly on the spectrum for real λ.
pub fn char_det(omega: &IntervalUnion, b: &BoundaryMatrix, lambda: Complex64) -> Complex64 {
    let n = b.n();
    let m = transfer_matrix(omega, b, lambda);
    (CMatrix::identity(n, n) - m).determinant()
}

/// Sorted eigenphases of `M(λ)` in `[0, 2π)` for real λ.
pub fn eigenphases(omega: &IntervalUnion, b: &BoundaryMatrix, lambda: f64) -> Result<Vec<f64>> {
    b.require_unitary()?;
    Ok(phase_frame(omega, b, lambda)?.phases)
}

#[derive(Debug, Clone)]
struct PhaseFrame {
    lambda: f64,
    phases: Vec<f64>,
    sum: f64,
}

fn phase_frame(omega: &IntervalUnion, b: &BoundaryMatrix, lambda: f64) -> Result<PhaseFrame> {
    let m = transfer_matrix(omega, b, Complex64::new(lambda, 0.0));
    let eigs = m.eigenvalues().ok_or_else(|| Error::EigenSolver {
        lambda,
        detail: "QR iteration did not converge".into(),
    })?;
    let mut phases: Vec<f64> = eigs
        .iter()
        .map(|z| {
            let a = z.arg();
            if a < 0.0 {
                a + TAU
            } else {
                a
            }
        })
        .collect();
    phases.sort_by(f64::total_cmp);
    let sum = phases.iter().sum();
    Ok(PhaseFrame {
        lambda,
        phases,
        sum,
    })
}

/// Exact zero-crossing count in `(a.lambda, b.lambda]`, valid while no
/// single phase moves by a full turn.
fn wraps_between(a: &PhaseFrame, b: &PhaseFrame, measure: f64) -> i64 {
    let flux = TAU * measure * (b.lambda - a.lambda);
    ((flux + b.sum - a.sum) / TAU).round() as i64
}

/// Per-branch downward phase displacement between two nearby points, a
/// finite-difference diagnostic for the eigenphase speed law. Sorted
/// branches at `l1` are matched to branches at `l2` by the cyclic shift
/// equal to the crossing count; valid while branches move less than a
/// turn, so keep `l2 - l1` below `1/(4 ℓ_max)`.
pub fn phase_drops(
    omega: &IntervalUnion,
    b: &BoundaryMatrix,
    l1: f64,
    l2: f64,
) -> Result<Vec<f64>> {
    b.require_unitary()?;
    let fa = phase_frame(omega, b, l1)?;
    let fb = phase_frame(omega, b, l2)?;
    let n = fa.phases.len();
    let w = wraps_between(&fa, &fb, omega.measure_f64()).rem_euclid(n as i64) as usize;
    Ok((0..n)
        .map(|k| {
            let q = fb.phases[(k + n - w) % n];
            (fa.phases[k] - q).rem_euclid(TAU)
        })
        .collect())
}

/// Circular distance of the nearest eigenphase to 0.
fn nearest_phase_to_zero(frame: &PhaseFrame) -> f64 {
    frame
        .phases
        .iter()
        .map(|&p| p.min(TAU - p))
        .fold(f64::INFINITY, f64::min)
}

struct ScanOutcome {
    wraps: i64,
    /// (root position, crossings inside its final bracket)
    roots: Vec<(f64, usize)>,
    grid: Vec<f64>,
    phases: Vec<Vec<f64>>,
}

/// Walk the steps `k ∈ range` of the grid `λ_k = lo + k·h`, counting
/// crossings per step and, when `refine` is set, isolating each root by
/// count bisection down to `width_target`.
#[allow(clippy::too_many_arguments)]
fn scan_steps(
    omega: &IntervalUnion,
    b: &BoundaryMatrix,
    lo: f64,
    h: f64,
    range: std::ops::Range<usize>,
    measure: f64,
    refine: Option<f64>,
    keep_trace: bool,
) -> Result<ScanOutcome> {
    let mut roots = Vec::new();
    let mut wraps_total = 0i64;
    let mut grid = Vec::new();
    let mut phases = Vec::new();

    let mut frame_a = phase_frame(omega, b, lo + range.start as f64 * h)?;
    if keep_trace {
        grid.push(frame_a.lambda);
        phases.push(frame_a.phases.clone());
    }
    for k in range {
        let frame_b = phase_frame(omega, b, lo + (k + 1) as f64 * h)?;
        let w = wraps_between(&frame_a, &frame_b, measure);
        debug_assert!(w >= 0, "eigenphases must decrease");
        wraps_total += w;
        if w > 0 {
            if let Some(width_target) = refine {
                bisect_roots(
                    omega,
                    b,
                    &frame_a,
                    &frame_b,
                    w,
                    measure,
                    width_target,
                    &mut roots,
                )?;
            }
        }
        if keep_trace {
            grid.push(frame_b.lambda);
            phases.push(frame_b.phases.clone());
        }
        frame_a = frame_b;
    }
    Ok(ScanOutcome {
        wraps: wraps_total,
        roots,
        grid,
        phases,
    })
}

/// Count bisection: split a bracket holding `w` crossings until it is
/// narrower than `width_target`, then record its midpoint.
#[allow(clippy::too_many_arguments)]
fn bisect_roots(
    omega: &IntervalUnion,
    b: &BoundaryMatrix,
    frame_a: &PhaseFrame,
    frame_b: &PhaseFrame,
    w: i64,
    measure: f64,
    width_target: f64,
    out: &mut Vec<(f64, usize)>,
) -> Result<()> {
    let mut stack = vec![(frame_a.clone(), frame_b.clone(), w)];
    while let Some((fa, fb, w)) = stack.pop() {
        let width = fb.lambda - fa.lambda;
        let mid = 0.5 * (fa.lambda + fb.lambda);
        if width <= width_target || mid <= fa.lambda || mid >= fb.lambda {
            out.push((mid, w as usize));
            continue;
        }
        let fm = phase_frame(omega, b, mid)?;
        let w_left = wraps_between(&fa, &fm, measure);
        let w_right = w - w_left;
        debug_assert!(w_left >= 0 && w_right >= 0);
        if w_left > 0 {
            stack.push((fa, fm.clone(), w_left));
        }
        if w_right > 0 {
            stack.push((fm, fb, w_right));
        }
    }
    Ok(())
}

/// Orthonormalize in the ℓ-weighted inner product (modified Gram-Schmidt,
/// two passes).
fn weighted_orthonormalize(vectors: &mut Vec<CVector>, lengths: &[f64]) {
    let wip = |u: &CVector, v: &CVector| -> Complex64 {
        u.iter()
            .zip(v.iter())
            .zip(lengths)
            .map(|((a, b), &l)| a * b.conj() * l)
            .sum()
    };
    let mut kept: Vec<CVector> = Vec::with_capacity(vectors.len());
    for v in vectors.drain(..) {
        let mut v = v;
        for _ in 0..2 {
            for u in &kept {
                let proj = wip(&v, u);
                v -= u * proj;
            }
        }
        let norm = wip(&v, &v).re.sqrt();
        if norm > 1e-10 {
            kept.push(v / Complex64::new(norm, 0.0));
        }
    }
    *vectors = kept;
}

/// Spectrum of the extension over `[λ₁, λ₂]` (closed window; roots exactly
/// on an endpoint are captured to refinement accuracy).
pub fn find_spectrum(
    omega: &IntervalUnion,
    b: &BoundaryMatrix,
    window: (f64, f64),
    params: &SpectrumParams,
) -> Result<SpectrumWindow> {
    b.require_unitary()?;
    let (l1, l2) = window;
    if l1.partial_cmp(&l2) != Some(std::cmp::Ordering::Less) {
        return Err(Error::Config(format!(
            "window [{l1}, {l2}] must have positive length"
        )));
    }
    let phase_step_bound = std::f64::consts::FRAC_PI_2;
    if params.tol_phase >= phase_step_bound {
        return Err(Error::DegenerateTolerance {
            tol: params.tol_phase,
            bound: phase_step_bound,
        });
    }
    let l_max = omega.max_length_f64();
    let measure = omega.measure_f64();
    let h = 1.0 / (4.0 * l_max);
    let width_target =
        (params.tol_phase / (TAU * l_max)).max(1e-15 * (1.0 + l1.abs().max(l2.abs())));
    // pad so endpoint roots land inside a scanned step
    let ext = (8.0 * width_target).max(1e-9);
    let lo = l1 - ext;
    let hi = l2 + ext;
    let steps = ((hi - lo) / h).ceil() as usize;
    if steps + 1 > params.max_grid_nodes {
        return Err(Error::WindowTooLarge {
            nodes: steps + 1,
            budget: params.max_grid_nodes,
            hint: (steps + 1).div_ceil(params.max_grid_nodes),
        });
    }
    let h = (hi - lo) / steps as f64;

    let outcome = run_scan(
        omega,
        b,
        lo,
        h,
        steps,
        measure,
        Some(width_target),
        true,
        params.threads,
    )?;

    // cluster raw roots, then read off multiplicity and eigenvectors
    let mut raw = outcome.roots;
    raw.sort_by(|a, b| a.0.total_cmp(&b.0));
    let cluster_eps = 8.0 * width_target;
    let mut eigenpairs: Vec<Eigenpair> = Vec::new();
    let lengths = omega.lengths_f64();
    let n = omega.n();
    let mut idx = 0;
    while idx < raw.len() {
        let mut hi_idx = idx + 1;
        let mut crossings = raw[idx].1;
        while hi_idx < raw.len() && raw[hi_idx].0 - raw[hi_idx - 1].0 <= cluster_eps {
            crossings += raw[hi_idx].1;
            hi_idx += 1;
        }
        let lambda = raw[(idx + hi_idx - 1) / 2].0;
        if lambda >= l1 - ext / 2.0 && lambda <= l2 + ext / 2.0 {
            let cvectors = nullspace_basis(omega, b, lambda, crossings, &lengths, n, params)?;
            eigenpairs.push(Eigenpair { lambda, cvectors });
        }
        idx = hi_idx;
    }

    let count = eigenpairs.iter().map(Eigenpair::multiplicity).sum();
    Ok(SpectrumWindow {
        lambda_min: l1,
        lambda_max: l2,
        eigenpairs,
        count,
        grid: outcome.grid,
        phases: outcome.phases,
    })
}

/// Eigenvector basis at a refined root: right singular vectors of
/// `M(λ*) − I` for the `multiplicity` smallest singular values, then
/// ℓ-weighted orthonormalization. The crossing count fixes the
/// multiplicity; the singular values it selects must sit under the
/// `1e-7·n` threshold or the residual check below fails loudly.
fn nullspace_basis(
    omega: &IntervalUnion,
    b: &BoundaryMatrix,
    lambda: f64,
    multiplicity: usize,
    lengths: &[f64],
    n: usize,
    params: &SpectrumParams,
) -> Result<Vec<CVector>> {
    let m = transfer_matrix(omega, b, Complex64::new(lambda, 0.0));
    let shifted = m - CMatrix::identity(n, n);
    let svd = shifted.clone().svd(false, true);
    let v_t = svd.v_t.as_ref().ok_or_else(|| Error::EigenSolver {
        lambda,
        detail: "SVD of M(lambda) - I failed".into(),
    })?;
    // singular values ascend from the back
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| svd.singular_values[i].total_cmp(&svd.singular_values[j]));
    let mut cvectors: Vec<CVector> = order
        .iter()
        .take(multiplicity)
        .map(|&j| v_t.row(j).conjugate().transpose())
        .collect();
    weighted_orthonormalize(&mut cvectors, lengths);
    if cvectors.len() != multiplicity {
        return Err(Error::EigenSolver {
            lambda,
            detail: format!(
                "nullspace collapsed during orthonormalization: {} of {multiplicity} vectors",
                cvectors.len()
            ),
        });
    }
    for c in &cvectors {
        let residual = (&shifted * c).norm();
        if residual > params.residual_tol {
            return Err(Error::EigenSolver {
                lambda,
                detail: format!(
                    "eigenvector residual {residual:.3e} exceeds {:.3e} \
                     (singular values {:?})",
                    params.residual_tol,
                    svd.singular_values.as_slice()
                ),
            });
        }
    }
    Ok(cvectors)
}

/// Shared scan driver; splits the steps across threads at step boundaries
/// so every step is processed identically no matter the thread count.
#[allow(clippy::too_many_arguments)]
fn run_scan(
    omega: &IntervalUnion,
    b: &BoundaryMatrix,
    lo: f64,
    h: f64,
    steps: usize,
    measure: f64,
    refine: Option<f64>,
    keep_trace: bool,
    threads: usize,
) -> Result<ScanOutcome> {
    let threads = threads.max(1).min(steps.max(1));
    if threads == 1 {
        return scan_steps(omega, b, lo, h, 0..steps, measure, refine, keep_trace);
    }
    let chunk = steps.div_ceil(threads);
    let ranges: Vec<std::ops::Range<usize>> = (0..threads)
        .map(|t| (t * chunk).min(steps)..((t + 1) * chunk).min(steps))
        .filter(|r| !r.is_empty())
        .collect();
    let results: Vec<Result<ScanOutcome>> = std::thread::scope(|scope| {
        let handles: Vec<_> = ranges
            .into_iter()
            .map(|r| {
                scope.spawn(move || scan_steps(omega, b, lo, h, r, measure, refine, keep_trace))
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("scan worker panicked"))
            .collect()
    });
    let mut merged = ScanOutcome {
        wraps: 0,
        roots: Vec::new(),
        grid: Vec::new(),
        phases: Vec::new(),
    };
    for (i, res) in results.into_iter().enumerate() {
        let mut part = res?;
        merged.wraps += part.wraps;
        merged.roots.append(&mut part.roots);
        if keep_trace {
            // drop the duplicated shared node between chunks
            let skip = usize::from(i > 0);
            merged.grid.extend(part.grid.into_iter().skip(skip));
            merged.phases.extend(part.phases.into_iter().skip(skip));
        }
    }
    Ok(merged)
}

/// `|σ(A) ∩ [λ₁, λ₂]|` with multiplicity, from the total phase flux alone.
/// Endpoints on the spectrum (within `tol_phase` of a crossing) are
/// rejected.
pub fn count_spectrum(
    omega: &IntervalUnion,
    b: &BoundaryMatrix,
    l1: f64,
    l2: f64,
    params: &SpectrumParams,
) -> Result<usize> {
    b.require_unitary()?;
    if l1.partial_cmp(&l2) != Some(std::cmp::Ordering::Less) {
        return Err(Error::Config(format!(
            "count window [{l1}, {l2}] must have positive length"
        )));
    }
    for endpoint in [l1, l2] {
        let frame = phase_frame(omega, b, endpoint)?;
        let dist = nearest_phase_to_zero(&frame);
        if dist <= params.tol_phase {
            return Err(Error::EndpointOnSpectrum {
                lambda: endpoint,
                phase: dist,
            });
        }
    }
    let l_max = omega.max_length_f64();
    let measure = omega.measure_f64();
    let h = 1.0 / (4.0 * l_max);
    let steps = ((l2 - l1) / h).ceil() as usize;
    if steps + 1 > params.max_grid_nodes {
        return Err(Error::WindowTooLarge {
            nodes: steps + 1,
            budget: params.max_grid_nodes,
            hint: (steps + 1).div_ceil(params.max_grid_nodes),
        });
    }
    let h = (l2 - l1) / steps as f64;
    let outcome = run_scan(omega, b, l1, h, steps, measure, None, false, params.threads)?;
    Ok(outcome.wraps as usize)
}

/// The `which`-th basis eigenfunction of an eigenpair, L²-normalized.
pub fn eigenfunction(ep: &Eigenpair, which: usize) -> Result<PiecewiseExp> {
    let c = ep.cvectors.get(which).ok_or(Error::IndexOutOfRange {
        index: which,
        multiplicity: ep.multiplicity(),
    })?;
    Ok(PiecewiseExp::new(Complex64::new(ep.lambda, 0.0), c.clone()))
}

/// Smallest singular value the resolvent accepts for `M(λ) − I`.
pub const RESOLVENT_SV_MIN: f64 = 1e-6;

/// Apply `(A − λ)⁻¹` to a sampled right-hand side by the integrating-factor
/// formula: on each interval
///
/// ```text
/// f(x) = e^{2πiλx} (2πi ∫_{αᵢ}^x g(t) e^{-2πiλt} dt + cᵢ)
/// ```
///
/// with the constants fixed by the boundary relation,
/// `c = (M(λ) − I)⁻¹ Ā`, `Āᵢ = 2πi ∫_{Jᵢ} g e^{-2πiλt} dt`. The cumulative
/// integrals come from the Legendre antiderivative on g's own grid.
pub fn resolvent_apply(
    omega: &IntervalUnion,
    b: &BoundaryMatrix,
    lambda: Complex64,
    g: &SampledFunction,
) -> Result<SampledFunction> {
    b.require_unitary()?;
    let n = omega.n();
    let m = transfer_matrix(omega, b, lambda);
    let shifted = &m - CMatrix::identity(n, n);
    let svd = shifted.clone().svd(false, false);
    let sigma_min = svd
        .singular_values
        .iter()
        .fold(f64::INFINITY, |acc, &s| acc.min(s));
    if sigma_min < RESOLVENT_SV_MIN {
        return Err(Error::SingularResolvent {
            lambda_re: lambda.re,
            lambda_im: lambda.im,
            sigma_min,
        });
    }

    let two_pi_i = Complex64::new(0.0, TAU);
    let grid = &g.grid;
    // integrand g(t) e^{-2πiλt} sampled on the same grid
    let integrand = SampledFunction {
        grid: grid.clone(),
        values: grid
            .nodes()
            .iter()
            .zip(&g.values)
            .map(|(&x, &v)| v * (-two_pi_i * lambda * x).exp())
            .collect(),
        traces: None,
    };

    let mut a_vec = CVector::zeros(n);
    let mut cumulative: Vec<Vec<Complex64>> = Vec::with_capacity(n);
    for i in 0..n {
        a_vec[i] = two_pi_i * integrand.interval_integral(i);
        cumulative.push(integrand.cumulative_integral(i));
    }
    let c = shifted.lu().solve(&a_vec).ok_or(Error::SingularResolvent {
        lambda_re: lambda.re,
        lambda_im: lambda.im,
        sigma_min,
    })?;

    let q = grid.order();
    let mut values = Vec::with_capacity(grid.len());
    for (j, &x) in grid.nodes().iter().enumerate() {
        let i = j / q;
        let inner = two_pi_i * cumulative[i][j % q] + c[i];
        values.push((two_pi_i * lambda * x).exp() * inner);
    }
    let at_alpha = CVector::from_fn(n, |i, _| {
        let a = crate::exact::rat_to_f64(omega.alpha(i));
        (two_pi_i * lambda * a).exp() * c[i]
    });
    let at_beta = CVector::from_fn(n, |i, _| {
        let bb = crate::exact::rat_to_f64(omega.beta(i));
        (two_pi_i * lambda * bb).exp() * (a_vec[i] + c[i])
    });
    Ok(SampledFunction {
        grid: grid.clone(),
        values,
        traces: Some(crate::boundary::BoundaryTraces::new(at_alpha, at_beta)),
    })
}

// ---------------------------------------------------------------------------
// Export
// ---------------------------------------------------------------------------

/// CSV export: `lambda, multiplicity, c_re_1..c_re_n, c_im_1..c_im_n`, one
/// row per basis vector.
pub fn spectrum_to_csv<W: std::io::Write>(win: &SpectrumWindow, n: usize, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["lambda".to_string(), "multiplicity".to_string()];
    for i in 1..=n {
        header.push(format!("c_re_{i}"));
    }
    for i in 1..=n {
        header.push(format!("c_im_{i}"));
    }
    w.write_record(&header)?;
    for ep in &win.eigenpairs {
        for c in &ep.cvectors {
            let mut row = vec![
                crate::fmt::f64_full(ep.lambda),
                ep.multiplicity().to_string(),
            ];
            for i in 0..n {
                row.push(crate::fmt::f64_full(c[i].re));
            }
            for i in 0..n {
                row.push(crate::fmt::f64_full(c[i].im));
            }
            w.write_record(&row)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// JSON mirror with 17 significant digits, emitted by hand so the byte
/// output is deterministic.
pub fn spectrum_to_json(win: &SpectrumWindow) -> String {
    use crate::fmt::f64_full;
    let mut s = String::new();
    s.push_str("{\n");
    s.push_str(&format!(
        "  \"lambda_min\": {},\n",
        f64_full(win.lambda_min)
    ));
    s.push_str(&format!(
        "  \"lambda_max\": {},\n",
        f64_full(win.lambda_max)
    ));
    s.push_str(&format!("  \"count\": {},\n", win.count));
    s.push_str("  \"eigenpairs\": [\n");
    for (k, ep) in win.eigenpairs.iter().enumerate() {
        s.push_str("    {\n");
        s.push_str(&format!("      \"lambda\": {},\n", f64_full(ep.lambda)));
        s.push_str(&format!("      \"multiplicity\": {},\n", ep.multiplicity()));
        s.push_str("      \"cvectors\": [");
        for (j, c) in ep.cvectors.iter().enumerate() {
            s.push('[');
            for (i, z) in c.iter().enumerate() {
                s.push_str(&format!("[{}, {}]", f64_full(z.re), f64_full(z.im)));
                if i + 1 < c.len() {
                    s.push_str(", ");
                }
            }
            s.push(']');
            if j + 1 < ep.cvectors.len() {
                s.push_str(", ");
            }
        }
        s.push_str("]\n");
        s.push_str(if k + 1 < win.eigenpairs.len() {
            "    },\n"
        } else {
            "    }\n"
        });
    }
    s.push_str("  ]\n}\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boundary::half_shift_matrix;
    use approx::assert_abs_diff_eq;

    fn two_interval() -> IntervalUnion {
        IntervalUnion::from_pairs(&[(0, 1), (1, 2), (1, 1), (3, 2)]).unwrap()
    }

    /// Independent root oracle: dense |det(I − M)| scan plus ternary-search
    /// refinement of each local minimum that dips under a threshold.
    fn det_scan_oracle(
        omega: &IntervalUnion,
        b: &BoundaryMatrix,
        window: (f64, f64),
        dip: f64,
    ) -> Vec<f64> {
        let step = 1e-3;
        let absdet = |x: f64| char_det(omega, b, Complex64::new(x, 0.0)).norm();
        let count = ((window.1 - window.0) / step).ceil() as usize;
        let mut roots = Vec::new();
        let mut prev2 = absdet(window.0);
        let mut prev1 = absdet(window.0 + step);
        for k in 2..=count {
            let x = window.0 + k as f64 * step;
            let cur = absdet(x);
            if prev1 < prev2 && prev1 <= cur && prev1 < dip {
                // ternary search on [x - 2 step, x]
                let (mut lo, mut hi) = (x - 2.0 * step, x);
                for _ in 0..200 {
                    let m1 = lo + (hi - lo) / 3.0;
                    let m2 = hi - (hi - lo) / 3.0;
                    if absdet(m1) < absdet(m2) {
                        hi = m2;
                    } else {
                        lo = m1;
                    }
                }
                roots.push(0.5 * (lo + hi));
            }
            prev2 = prev1;
            prev1 = cur;
        }
        roots
    }

    #[test]
    fn char_det_examples() {
        let om = IntervalUnion::unit();
        let b = BoundaryMatrix::phase(0.0);
        // zero at integers, away from zero elsewhere
        for k in [-2.0, 0.0, 3.0] {
            assert_abs_diff_eq!(
                char_det(&om, &b, Complex64::new(k, 0.0)).norm(),
                0.0,
                epsilon = 1e-12
            );
        }
        assert!(char_det(&om, &b, Complex64::new(0.5, 0.0)).norm() > 1.0);

        // B = e^{2πi/3} shifts zeros to 1/3 + Z
        let b3 = BoundaryMatrix::phase(1.0 / 3.0);
        assert_abs_diff_eq!(
            char_det(&om, &b3, Complex64::new(1.0 / 3.0 + 2.0, 0.0)).norm(),
            0.0,
            epsilon = 1e-12
        );

        // M(0) = B, so det(I - B) = 0 when B = I
        let om2 = two_interval();
        let id = BoundaryMatrix::identity(2);
        assert_abs_diff_eq!(
            char_det(&om2, &id, Complex64::ZERO).norm(),
            0.0,
            epsilon = 1e-14
        );
    }

    #[test]
    fn eigenphase_examples() {
        let om = IntervalUnion::unit();
        let b = BoundaryMatrix::phase(0.0);
        // M(1/4) = e^{-πi/2} = e^{i·3π/2}
        let ph = eigenphases(&om, &b, 0.25).unwrap();
        assert_abs_diff_eq!(ph[0], 1.5 * std::f64::consts::PI, epsilon = 1e-13);

        // at λ = 0 the phases are those of B itself
        let b2 = half_shift_matrix();
        let om2 = two_interval();
        let ph = eigenphases(&om2, &b2, 0.0).unwrap();
        // eigenvalues of B are 1 and i
        assert_abs_diff_eq!(ph[0], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(ph[1], std::f64::consts::FRAC_PI_2, epsilon = 1e-12);

        // B = I on equal half-length intervals: both phases π at λ = 1
        let id = BoundaryMatrix::identity(2);
        let ph = eigenphases(&om2, &id, 1.0).unwrap();
        assert_abs_diff_eq!(ph[0], std::f64::consts::PI, epsilon = 1e-12);
        assert_abs_diff_eq!(ph[1], std::f64::consts::PI, epsilon = 1e-12);
    }

    #[test]
    fn unit_interval_spectrum() {
        let om = IntervalUnion::unit();
        let b = BoundaryMatrix::phase(0.0);
        let win = find_spectrum(&om, &b, (-2.5, 2.5), &SpectrumParams::default()).unwrap();
        let lambdas = win.lambdas();
        assert_eq!(lambdas.len(), 5);
        for (found, expect) in lambdas.iter().zip([-2.0, -1.0, 0.0, 1.0, 2.0]) {
            assert_abs_diff_eq!(found, &expect, epsilon = 1e-11);
        }
        assert!(win.eigenpairs.iter().all(|e| e.multiplicity() == 1));
        // c = (1), normalized in the ℓ-weighted product
        assert_abs_diff_eq!(
            win.eigenpairs[0].cvectors[0][0].norm(),
            1.0,
            epsilon = 1e-10
        );
    }

    #[test]
    fn two_interval_spectrum_matches_det_oracle() {
        let om = two_interval();
        let b = half_shift_matrix();
        let win = find_spectrum(&om, &b, (-1.0, 3.0), &SpectrumParams::default()).unwrap();
        let lambdas = win.lambdas();
        // 2Z ∪ (2Z + 1/2) restricted to [-1, 3]
        let expect = [0.0, 0.5, 2.0, 2.5];
        assert_eq!(lambdas.len(), expect.len(), "found {lambdas:?}");
        for (found, expect) in lambdas.iter().zip(expect) {
            assert_abs_diff_eq!(found, &expect, epsilon = 1e-10);
        }
        for ep in &win.eigenpairs {
            assert_eq!(ep.multiplicity(), 1);
            // constant eigenvector
            let c = &ep.cvectors[0];
            assert_abs_diff_eq!((c[0] - c[1]).norm(), 0.0, epsilon = 1e-9);
        }
        // independent oracle
        let oracle = det_scan_oracle(&om, &b, (-1.0, 3.0), 0.5);
        assert_eq!(oracle.len(), expect.len());
        for (o, e) in oracle.iter().zip(expect) {
            assert_abs_diff_eq!(o, &e, epsilon = 1e-7);
        }
    }

    #[test]
    fn identity_matrix_gives_double_eigenvalue() {
        let om = two_interval();
        let id = BoundaryMatrix::identity(2);
        let win = find_spectrum(&om, &id, (-0.1, 0.1), &SpectrumParams::default()).unwrap();
        assert_eq!(win.eigenpairs.len(), 1);
        assert_abs_diff_eq!(win.eigenpairs[0].lambda, 0.0, epsilon = 1e-11);
        assert_eq!(win.eigenpairs[0].multiplicity(), 2);
        assert_eq!(win.count, 2);
        // basis spans C２: weighted Gram is the identity
        let c0 = &win.eigenpairs[0].cvectors[0];
        let c1 = &win.eigenpairs[0].cvectors[1];
        let ell = om.lengths_f64();
        let ip = |u: &CVector, v: &CVector| -> Complex64 {
            u.iter()
                .zip(v.iter())
                .zip(&ell)
                .map(|((a, b), &l)| a * b.conj() * l)
                .sum()
        };
        assert_abs_diff_eq!(ip(c0, c0).re, 1.0, epsilon = 1e-10);
        assert_abs_diff_eq!(ip(c1, c1).re, 1.0, epsilon = 1e-10);
        assert_abs_diff_eq!(ip(c0, c1).norm(), 0.0, epsilon = 1e-10);
    }

    #[test]
    fn eigenfunction_extraction() {
        let om = IntervalUnion::unit();
        let b = BoundaryMatrix::phase(0.0);
        let win = find_spectrum(&om, &b, (2.9, 3.1), &SpectrumParams::default()).unwrap();
        let ep = &win.eigenpairs[0];
        let f = eigenfunction(ep, 0).unwrap();
        // f(x) = c e^{6πix} with unit norm and |c| = 1
        assert_abs_diff_eq!(f.norm_sq_exact(&om), 1.0, epsilon = 1e-10);
        let ratio = f.eval_in(0, 0.3)
            / (Complex64::new(0.0, TAU * 3.0) * Complex64::new(0.3, 0.0)).exp();
        assert_abs_diff_eq!(ratio.norm(), 1.0, epsilon = 1e-10);

        assert!(matches!(
            eigenfunction(ep, 1),
            Err(Error::IndexOutOfRange {
                index: 1,
                multiplicity: 1
            })
        ));
    }

    #[test]
    fn window_endpoints_on_roots_are_captured() {
        let om = two_interval();
        let b = half_shift_matrix();
        let win = find_spectrum(&om, &b, (-2.0, 2.0), &SpectrumParams::default()).unwrap();
        let lambdas = win.lambdas();
        let expect = [-2.0, -1.5, 0.0, 0.5, 2.0];
        assert_eq!(lambdas.len(), expect.len(), "found {lambdas:?}");
        for (found, expect) in lambdas.iter().zip(expect) {
            assert_abs_diff_eq!(found, &expect, epsilon = 1e-10);
        }
    }

    #[test]
    fn off_axis_det_is_bounded_away_from_zero() {
        let om = two_interval();
        let b = half_shift_matrix();
        for tau in [0.1, -0.1] {
            let mut min_det = f64::INFINITY;
            for k in 0..200 {
                let sigma = -2.0 + 4.0 * k as f64 / 199.0;
                let d = char_det(&om, &b, Complex64::new(sigma, tau)).norm();
                min_det = min_det.min(d);
            }
            assert!(min_det > 0.05, "min |det| = {min_det} at Im = {tau}");
        }
    }

    #[test]
    fn count_examples() {
        let om = IntervalUnion::unit();
        let b = BoundaryMatrix::phase(0.0);
        let p = SpectrumParams::default();
        assert_eq!(count_spectrum(&om, &b, -0.5, 4.5, &p).unwrap(), 5);

        let om2 = two_interval();
        let b2 = half_shift_matrix();
        assert_eq!(count_spectrum(&om2, &b2, -0.25, 2.25, &p).unwrap(), 3);

        // additivity
        let c1 = count_spectrum(&om2, &b2, -0.25, 1.1, &p).unwrap();
        let c2 = count_spectrum(&om2, &b2, 1.1, 2.25, &p).unwrap();
        assert_eq!(c1 + c2, 3);

        // endpoint on the spectrum is rejected
        assert!(matches!(
            count_spectrum(&om, &b, 0.0, 1.5, &p),
            Err(Error::EndpointOnSpectrum { .. })
        ));
    }

    #[test]
    fn weyl_density() {
        let om = two_interval();
        let b = half_shift_matrix();
        let p = SpectrumParams::default();
        for t in [10.0, 50.0, 100.0] {
            let count = count_spectrum(&om, &b, 0.1234, 0.1234 + t, &p).unwrap() as f64;
            let expect = om.measure_f64() * t;
            assert!(
                (count - expect).abs() <= 3.0,
                "count {count} vs Weyl {expect}"
            );
        }
    }

    #[test]
    fn threaded_scan_is_identical() {
        let om = two_interval();
        let b = half_shift_matrix();
        let single = find_spectrum(&om, &b, (-10.0, 10.0), &SpectrumParams::default()).unwrap();
        let multi = find_spectrum(
            &om,
            &b,
            (-10.0, 10.0),
            &SpectrumParams {
                threads: 4,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(single.count, multi.count);
        for (a, b) in single.eigenpairs.iter().zip(&multi.eigenpairs) {
            assert_eq!(a.lambda, b.lambda);
            assert_eq!(a.cvectors, b.cvectors);
        }
    }

    #[test]
    fn resolvent_constant_rhs_hand_value() {
        // unit interval, B = 1, λ = 1/2, g ≡ 1: f ≡ -2
        let om = IntervalUnion::unit();
        let b = BoundaryMatrix::phase(0.0);
        let grid = crate::funcspace::QuadGrid::new(om.clone(), 32);
        let g = SampledFunction::from_fn(&grid, |_, _| Complex64::ONE, None);
        let f = resolvent_apply(&om, &b, Complex64::new(0.5, 0.0), &g).unwrap();
        for v in &f.values {
            assert_abs_diff_eq!((v - Complex64::new(-2.0, 0.0)).norm(), 0.0, epsilon = 1e-12);
        }
        let tr = f.traces.as_ref().unwrap();
        assert_abs_diff_eq!(
            (tr.at_alpha[0] + Complex64::new(2.0, 0.0)).norm(),
            0.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn resolvent_diagonal_on_eigenfunctions() {
        // g = ε_μ  ⇒  R(λ) g = ε_μ / (μ - λ)
        let om = two_interval();
        let b = half_shift_matrix();
        let grid = crate::funcspace::QuadGrid::new(om.clone(), 32);
        let eps = PiecewiseExp::exponential(0.5, 2); // eigenfunction at μ = 1/2
        let g = eps.sample_on(&grid);
        let lambda = Complex64::new(0.2, 0.3);
        let f = resolvent_apply(&om, &b, lambda, &g).unwrap();
        let scale = (Complex64::new(0.5, 0.0) - lambda).inv();
        for (got, &x) in f.values.iter().zip(grid.nodes()) {
            let expect = eps.eval_in(grid_interval(&grid, x), x) * scale;
            assert_abs_diff_eq!((got - expect).norm(), 0.0, epsilon = 1e-10);
        }
    }

    fn grid_interval(grid: &std::sync::Arc<crate::funcspace::QuadGrid>, x: f64) -> usize {
        grid.omega().interval_of_f64(x, 0.0).unwrap()
    }

    #[test]
    fn resolvent_rejects_spectrum_proximity() {
        let om = IntervalUnion::unit();
        let b = BoundaryMatrix::phase(0.0);
        let grid = crate::funcspace::QuadGrid::new(om.clone(), 16);
        let g = SampledFunction::from_fn(&grid, |_, _| Complex64::ONE, None);
        let err = resolvent_apply(&om, &b, Complex64::new(1.0 + 1e-9, 0.0), &g);
        assert!(matches!(err, Err(Error::SingularResolvent { .. })));
    }

    #[test]
    fn resolvent_identity() {
        // R(λ) - R(μ) = (λ - μ) R(λ) R(μ)
        let om = two_interval();
        let b = half_shift_matrix();
        let grid = crate::funcspace::QuadGrid::new(om.clone(), 48);
        let g = SampledFunction::from_fn(
            &grid,
            |i, x| Complex64::new(x.cos() + i as f64, 0.3 * x),
            None,
        );
        let lam = Complex64::new(0.25, 0.0);
        let mu = Complex64::new(0.0, 1.0);
        let r_lam = resolvent_apply(&om, &b, lam, &g).unwrap();
        let r_mu = resolvent_apply(&om, &b, mu, &g).unwrap();
        let r_both = resolvent_apply(&om, &b, lam, &r_mu).unwrap();
        let lhs = r_lam.sub(&r_mu).unwrap();
        let rhs = r_both.scale(lam - mu);
        assert!(lhs.distance(&rhs).unwrap() < 1e-9);
    }

    #[test]
    fn degenerate_tolerance_rejected() {
        let om = IntervalUnion::unit();
        let b = BoundaryMatrix::phase(0.0);
        let params = SpectrumParams {
            tol_phase: 2.0,
            ..Default::default()
        };
        assert!(matches!(
            find_spectrum(&om, &b, (0.1, 0.9), &params),
            Err(Error::DegenerateTolerance { .. })
        ));
    }

    #[test]
    fn window_budget_enforced() {
        let om = IntervalUnion::unit();
        let b = BoundaryMatrix::phase(0.0);
        let params = SpectrumParams {
            max_grid_nodes: 100,
            ..Default::default()
        };
        let err = find_spectrum(&om, &b, (0.0, 1e5), &params);
        match err {
            Err(Error::WindowTooLarge { hint, .. }) => assert!(hint >= 2),
            other => panic!("expected WindowTooLarge, got {other:?}"),
        }
    }

    #[test]
    fn csv_and_json_exports() {
        let om = IntervalUnion::unit();
        let b = BoundaryMatrix::phase(0.0);
        let win = find_spectrum(&om, &b, (-1.5, 1.5), &SpectrumParams::default()).unwrap();
        let mut csv_bytes = Vec::new();
        spectrum_to_csv(&win, 1, &mut csv_bytes).unwrap();
        let text = String::from_utf8(csv_bytes).unwrap();
        assert_eq!(text.lines().count(), 4); // header + 3 roots
        assert!(text.starts_with("lambda,multiplicity,c_re_1,c_im_1"));

        let js = spectrum_to_json(&win);
        let parsed: serde_json::Value = serde_json::from_str(&js).unwrap();
        assert_eq!(parsed["count"], 3);
    }
}
