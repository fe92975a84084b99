//! Spectral-set toolkit: candidate spectra, Gram orthogonality tests,
//! construction of the boundary matrix from a spectrum, the spectral-matrix
//! verdict, and the spectral-vs-tiling harness.
//!
//! A set Ω is spectral when some frequency set Λ makes `{e_λ}` an
//! orthogonal basis of L²(Ω). That happens exactly when some unitary
//! boundary matrix is *spectral*: its eigenvector equations
//! `BE(λᾱ)c = E(λβ̄)c` admit only trivial or constant solutions. The
//! harness gathers numerical evidence for both sides of the
//! spectral ↔ tiling correspondence on concrete examples; every verdict is
//! scoped to a finite window and labeled as evidence, never proof.

use nalgebra::DMatrix;
use num_complex::Complex64;
use num_traits::Signed;
use serde::{Deserialize, Serialize};

use crate::boundary::{alpha_phases, beta_phases, unitarity_defect, BoundaryMatrix, MatrixJson};
use crate::error::{Error, Result};
use crate::exact::{rat_mod, rat_to_f64, rats_from_pairs, Rat, RatPair};
use crate::funcspace::{
    bump_in_interval, exp_inner_product, parseval_defect, L2Ref, PiecewiseExp, QuadGrid,
};
use crate::geometry::{
    tiles_by, GammaJson, IntervalUnion, OmegaJson, TilingDefect, TranslationSet,
};
use crate::spectral::{find_spectrum, CMatrix, CVector, Eigenpair, SpectrumParams};

pub const BUILD_RESIDUAL_TOL: f64 = 1e-10;
pub const GRAM_OFFDIAG_TOL: f64 = 1e-9;
pub const CONSTANCY_TOL: f64 = 1e-8;
const RANK_TOL: f64 = 1e-8;

/// A candidate spectrum: a union of arithmetic progressions with a shared
/// rational period, or an explicit finite list.
#[derive(Debug, Clone)]
pub enum LambdaSet {
    Progressions { offsets: Vec<Rat>, period: Rat },
    Explicit(Vec<f64>),
}

impl LambdaSet {
    pub fn progressions(offsets: Vec<Rat>, period: Rat) -> Result<Self> {
        if !period.is_positive() {
            return Err(Error::InvalidLambdaSet(format!(
                "period must be positive, got {period}"
            )));
        }
        let mut folded: Vec<Rat> = offsets.iter().map(|a| rat_mod(a, &period)).collect();
        folded.sort();
        if folded.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidLambdaSet(
                "offsets must be distinct modulo the period".into(),
            ));
        }
        Ok(Self::Progressions { offsets, period })
    }

    pub fn from_pairs(offsets: &[(i64, i64)], period: (i64, i64)) -> Result<Self> {
        Self::progressions(
            offsets
                .iter()
                .map(|&(n, d)| crate::exact::rat(n, d))
                .collect(),
            crate::exact::rat(period.0, period.1),
        )
    }

    pub fn explicit(mut values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidLambdaSet("frequencies must be finite".into()));
        }
        values.sort_by(f64::total_cmp);
        values.dedup();
        Ok(Self::Explicit(values))
    }

    /// The members inside `[w0, w1]`, sorted and duplicate-free.
    pub fn realize(&self, window: (f64, f64)) -> Vec<f64> {
        let (w0, w1) = window;
        match self {
            LambdaSet::Explicit(values) => values
                .iter()
                .copied()
                .filter(|&v| v >= w0 && v <= w1)
                .collect(),
            LambdaSet::Progressions { offsets, period } => {
                let p = rat_to_f64(period);
                let mut out = Vec::new();
                for a in offsets {
                    let af = rat_to_f64(a);
                    let k_lo = ((w0 - af) / p).ceil() as i64;
                    let k_hi = ((w1 - af) / p).floor() as i64;
                    for k in k_lo..=k_hi {
                        let v = rat_to_f64(&(a + Rat::from_integer(k.into()) * period));
                        if v >= w0 && v <= w1 {
                            out.push(v);
                        }
                    }
                }
                out.sort_by(f64::total_cmp);
                out.dedup();
                out
            }
        }
    }

    /// Shift the whole set by a rational constant.
    pub fn translate(&self, c: &Rat) -> Self {
        match self {
            LambdaSet::Progressions { offsets, period } => LambdaSet::Progressions {
                offsets: offsets.iter().map(|a| a + c).collect(),
                period: period.clone(),
            },
            LambdaSet::Explicit(values) => {
                let cf = rat_to_f64(c);
                LambdaSet::Explicit(values.iter().map(|v| v + cf).collect())
            }
        }
    }
}

/// Gram matrix of the exponentials over a frequency window.
#[derive(Debug, Clone)]
pub struct GramReport {
    pub lambdas: Vec<f64>,
    pub matrix: CMatrix,
    pub max_offdiag: f64,
}

/// `G_{λμ} = ⟨e_λ, e_μ⟩` in closed form; the diagonal is |Ω|.
pub fn gram_matrix(omega: &IntervalUnion, lambdas: &[f64]) -> GramReport {
    let k = lambdas.len();
    let matrix = DMatrix::from_fn(k, k, |i, j| {
        exp_inner_product(omega, lambdas[i], lambdas[j])
    });
    let mut max_offdiag: f64 = 0.0;
    for i in 0..k {
        for j in 0..k {
            if i != j {
                max_offdiag = max_offdiag.max(matrix[(i, j)].norm());
            }
        }
    }
    GramReport {
        lambdas: lambdas.to_vec(),
        matrix,
        max_offdiag,
    }
}

/// Outcome of a successful boundary-matrix construction.
#[derive(Debug)]
pub struct BuildReport {
    pub matrix: BoundaryMatrix,
    /// Frequencies whose trace vectors were used to solve for B.
    pub spanning: Vec<f64>,
    /// Largest `‖B e_λ(ᾱ) − e_λ(β̄)‖` over all verification frequencies.
    pub residual_max: f64,
    /// Unitarity defect of the solved matrix before the polar projection.
    pub raw_unitarity_defect: f64,
    /// (number of frequencies examined, rank reached), recorded at each
    /// rank increase.
    pub rank_growth: Vec<(usize, usize)>,
}

fn trace_vectors(omega: &IntervalUnion, lambda: f64) -> (CVector, CVector) {
    let l = Complex64::new(lambda, 0.0);
    (
        CVector::from_vec(alpha_phases(omega, l)),
        CVector::from_vec(beta_phases(omega, l)),
    )
}

/// Build the unitary B with `B e_λ(ᾱ) = e_λ(β̄)` for every λ of the set
/// inside the window.
///
/// A spanning subset is chosen greedily by largest component orthogonal to
/// the span so far; B is solved on that subset and verified on the rest.
/// Residuals above `1e-10` mean Λ is not a spectrum for Ω; a trace Gram
/// mismatch shows up as a non-unitary solution. The verified matrix is
/// projected onto its polar factor before construction, so the returned B
/// is unitary to machine precision; the pre-projection defect is reported.
pub fn build_boundary_matrix(
    omega: &IntervalUnion,
    lambda: &LambdaSet,
    window: (f64, f64),
) -> Result<BuildReport> {
    let n = omega.n();
    let realized = lambda.realize(window);
    if realized.is_empty() {
        return Err(Error::InvalidLambdaSet(format!(
            "no frequencies inside [{}, {}]",
            window.0, window.1
        )));
    }

    // rank growth over the realized list, in |λ| order so small windows are
    // prefixes of large ones
    let mut by_magnitude = realized.clone();
    by_magnitude.sort_by(|a, b| (a.abs(), *a).partial_cmp(&(b.abs(), *b)).unwrap());
    let mut growth = Vec::new();
    {
        let mut basis: Vec<CVector> = Vec::new();
        for (k, &lam) in by_magnitude.iter().enumerate() {
            let (a, _) = trace_vectors(omega, lam);
            let mut v = a;
            for q in &basis {
                let proj: Complex64 = v.dotc(q).conj();
                v -= q * proj;
            }
            if v.norm() > RANK_TOL {
                basis.push(v.normalize());
                growth.push((k + 1, basis.len()));
            }
        }
    }
    let rank = growth.last().map_or(0, |&(_, r)| r);
    if rank < n {
        return Err(Error::SpanDeficient { rank, n, growth });
    }

    // greedy spanning subset
    let mut selected: Vec<usize> = Vec::new();
    let mut basis: Vec<CVector> = Vec::new();
    while selected.len() < n {
        let mut best: Option<(f64, usize, CVector)> = None;
        for (idx, &lam) in by_magnitude.iter().enumerate() {
            if selected.contains(&idx) {
                continue;
            }
            let (a, _) = trace_vectors(omega, lam);
            let mut v = a;
            for q in &basis {
                let proj: Complex64 = v.dotc(q).conj();
                v -= q * proj;
            }
            let r = v.norm();
            if best.as_ref().is_none_or(|(br, _, _)| r > *br) {
                best = Some((r, idx, v));
            }
        }
        let (r, idx, v) = best.expect("spanning loop has candidates");
        debug_assert!(r > RANK_TOL, "rank was verified above");
        selected.push(idx);
        basis.push(v.normalize());
    }

    let spanning: Vec<f64> = selected.iter().map(|&i| by_magnitude[i]).collect();
    let mut a_mat = CMatrix::zeros(n, n);
    let mut b_mat = CMatrix::zeros(n, n);
    for (col, &lam) in spanning.iter().enumerate() {
        let (a, b) = trace_vectors(omega, lam);
        a_mat.set_column(col, &a);
        b_mat.set_column(col, &b);
    }
    let a_inv = a_mat.lu().try_inverse().ok_or(Error::SpanDeficient {
        rank: n - 1,
        n,
        growth: growth.clone(),
    })?;
    let solved = b_mat * a_inv;

    // verify the rest of the window
    let mut residual_max: f64 = 0.0;
    for &lam in &realized {
        let (a, b) = trace_vectors(omega, lam);
        let residual = (&solved * a - b).norm();
        if residual > BUILD_RESIDUAL_TOL {
            return Err(Error::InconsistentLambda {
                lambda: lam,
                residual,
            });
        }
        residual_max = residual_max.max(residual);
    }

    let raw_defect = unitarity_defect(&solved);
    if raw_defect > BUILD_RESIDUAL_TOL {
        return Err(Error::NonUnitaryGram { defect: raw_defect });
    }
    let matrix = BoundaryMatrix::repair_unitary(&solved)?;
    Ok(BuildReport {
        matrix,
        spanning,
        residual_max,
        raw_unitarity_defect: raw_defect,
        rank_growth: growth,
    })
}

/// Why a matrix failed the spectral test.
#[derive(Debug, Clone, Serialize)]
pub struct NotSpectralWitness {
    pub lambda: f64,
    pub multiplicity: usize,
    /// `max_i |c_i − mean(c)| / ‖c‖` of the least constant eigenvector.
    pub nonconstancy: f64,
}

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Classification {
    /// Every eigenpair in the window is simple with a constant eigenvector.
    SpectralEvidence,
    NotSpectral {
        witness: NotSpectralWitness,
    },
    Inconclusive {
        reason: String,
    },
}

/// Verdict of [`is_spectral_matrix`], explicitly scoped to its window.
#[derive(Debug, Clone, Serialize)]
pub struct SpectralVerdict {
    pub classification: Classification,
    pub window: [f64; 2],
    pub eigenvalue_count: usize,
    pub max_nonconstancy: f64,
}

impl SpectralVerdict {
    pub fn is_spectral_evidence(&self) -> bool {
        matches!(self.classification, Classification::SpectralEvidence)
    }
}

/// Relative deviation of an eigenvector from a constant vector.
fn nonconstancy(c: &CVector) -> f64 {
    let n = c.len() as f64;
    let mean = c.iter().sum::<Complex64>() / n;
    let max_dev = c.iter().map(|z| (z - mean).norm()).fold(0.0, f64::max);
    max_dev / c.norm()
}

/// Check each eigenpair in the window for simplicity and constant
/// eigenvectors. The underlying definition quantifies over all real λ, so
/// the verdict is evidence over the window only.
pub fn is_spectral_matrix(
    omega: &IntervalUnion,
    b: &BoundaryMatrix,
    window: (f64, f64),
    params: &SpectrumParams,
) -> Result<SpectralVerdict> {
    let spectrum = find_spectrum(omega, b, window, params)?;
    let mut max_nc: f64 = 0.0;
    let mut witness: Option<NotSpectralWitness> = None;
    for ep in &spectrum.eigenpairs {
        let worst = ep.cvectors.iter().map(nonconstancy).fold(0.0, f64::max);
        max_nc = max_nc.max(worst);
        let bad = ep.multiplicity() > 1 || worst > CONSTANCY_TOL;
        if bad && witness.is_none() {
            witness = Some(NotSpectralWitness {
                lambda: ep.lambda,
                multiplicity: ep.multiplicity(),
                nonconstancy: worst,
            });
        }
    }
    let classification = match witness {
        Some(w) => Classification::NotSpectral { witness: w },
        None if spectrum.eigenpairs.is_empty() => Classification::Inconclusive {
            reason: "window contains no eigenvalues".into(),
        },
        None => Classification::SpectralEvidence,
    };
    Ok(SpectralVerdict {
        classification,
        window: [window.0, window.1],
        eigenvalue_count: spectrum.count,
        max_nonconstancy: max_nc,
    })
}

// ---------------------------------------------------------------------------
// Harness
// ---------------------------------------------------------------------------

/// JSON form of a candidate spectrum.
#[derive(Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LambdaJson {
    Progressions {
        offsets: Vec<RatPair>,
        period: RatPair,
    },
    Explicit {
        explicit: Vec<f64>,
    },
}

impl LambdaJson {
    pub fn load(&self) -> Result<LambdaSet> {
        match self {
            LambdaJson::Progressions { offsets, period } => {
                LambdaSet::progressions(rats_from_pairs(offsets)?, period.to_rat()?)
            }
            LambdaJson::Explicit { explicit } => LambdaSet::explicit(explicit.clone()),
        }
    }

    pub fn save(set: &LambdaSet) -> Result<Self> {
        Ok(match set {
            LambdaSet::Progressions { offsets, period } => LambdaJson::Progressions {
                offsets: crate::exact::pairs_from_rats(offsets)?,
                period: RatPair::from_rat(period)?,
            },
            LambdaSet::Explicit(values) => LambdaJson::Explicit {
                explicit: values.clone(),
            },
        })
    }
}

#[derive(Debug, Serialize)]
pub struct ParsevalEntry {
    pub function: String,
    pub defect: f64,
}

#[derive(Debug, Serialize)]
pub struct BuildOutcome {
    pub built: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub matrix: Option<MatrixJson>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub residual_max: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub raw_unitarity_defect: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Everything the harness measured, JSON-serializable.
#[derive(Debug, Serialize)]
pub struct HarnessReport {
    pub omega: OmegaJson,
    pub lambda: LambdaJson,
    pub gamma: GammaJson,
    pub window: [f64; 2],
    pub gram_max_offdiag: f64,
    pub parseval: Vec<ParsevalEntry>,
    pub b_matrix: BuildOutcome,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub spectral_verdict: Option<SpectralVerdict>,
    pub spectral_evidence: bool,
    pub tiles: bool,
    pub tiling_defects: Vec<String>,
    pub agreement: bool,
}

impl HarnessReport {
    /// Human-readable summary for standard output.
    pub fn summary(&self) -> String {
        let mut s = String::new();
        s.push_str(&format!(
            "window [{}, {}]\n",
            self.window[0], self.window[1]
        ));
        s.push_str(&format!(
            "gram max off-diagonal: {:.3e}\n",
            self.gram_max_offdiag
        ));
        for p in &self.parseval {
            s.push_str(&format!(
                "parseval defect ({}): {:.3e}\n",
                p.function, p.defect
            ));
        }
        match (&self.b_matrix.built, &self.b_matrix.error) {
            (true, _) => s.push_str(&format!(
                "boundary matrix built, max residual {:.3e}\n",
                self.b_matrix.residual_max.unwrap_or(f64::NAN)
            )),
            (false, Some(e)) => s.push_str(&format!("boundary matrix failed: {e}\n")),
            _ => {}
        }
        if let Some(v) = &self.spectral_verdict {
            let label = match &v.classification {
                Classification::SpectralEvidence => "spectral evidence".to_string(),
                Classification::NotSpectral { witness } => format!(
                    "not spectral (lambda = {}, multiplicity {}, nonconstancy {:.2e})",
                    witness.lambda, witness.multiplicity, witness.nonconstancy
                ),
                Classification::Inconclusive { reason } => format!("inconclusive: {reason}"),
            };
            s.push_str(&format!("matrix verdict: {label}\n"));
        }
        s.push_str(&format!(
            "spectral evidence: {} | tiles: {} | agreement: {}\n",
            self.spectral_evidence, self.tiles, self.agreement
        ));
        s
    }
}

/// Pick a test frequency that avoids the realized set.
fn off_spectrum_frequency(realized: &[f64]) -> f64 {
    if realized.len() < 2 {
        return 0.123_456_789;
    }
    // midpoint of the gap nearest zero
    let mut best = (f64::INFINITY, 0.0);
    for w in realized.windows(2) {
        let mid = 0.5 * (w[0] + w[1]);
        if mid.abs() < best.0 {
            best = (mid.abs(), mid);
        }
    }
    best.1
}

/// Run every component of the spectral ↔ tiling comparison and aggregate.
///
/// Spectral evidence requires an orthogonal Gram window, a consistent
/// boundary-matrix construction, and a spectral verdict for that matrix;
/// the tiling side is decided exactly. `agreement` records whether the two
/// sides match, as the conjectured correspondence predicts.
pub fn fuglede_harness(
    omega: &IntervalUnion,
    lambda: &LambdaSet,
    gamma: &TranslationSet,
    window: (f64, f64),
    quad_order: usize,
    params: &SpectrumParams,
) -> Result<HarnessReport> {
    let realized = lambda.realize(window);
    let gram = gram_matrix(omega, &realized);

    // Parseval family: a bump and an indicator per interval, plus one
    // exponential off the candidate set
    let grid = QuadGrid::new(omega.clone(), quad_order);
    let mut parseval = Vec::new();
    for i in 0..omega.n() {
        let bump = bump_in_interval(&grid, i, 0.7);
        parseval.push(ParsevalEntry {
            function: format!("bump_{i}"),
            defect: parseval_defect(omega, L2Ref::Sampled(&bump), &realized)?,
        });
        let chi = PiecewiseExp::indicator(i, omega.n());
        parseval.push(ParsevalEntry {
            function: format!("indicator_{i}"),
            defect: parseval_defect(omega, L2Ref::Exp(&chi), &realized)?,
        });
    }
    let mu = off_spectrum_frequency(&realized);
    let e_mu = PiecewiseExp::exponential(mu, omega.n());
    parseval.push(ParsevalEntry {
        function: format!("exp_{mu}"),
        defect: parseval_defect(omega, L2Ref::Exp(&e_mu), &realized)?,
    });

    let build = build_boundary_matrix(omega, lambda, window);
    let (b_outcome, verdict) = match build {
        Ok(report) => {
            let verdict = is_spectral_matrix(omega, &report.matrix, window, params)?;
            (
                BuildOutcome {
                    built: true,
                    matrix: Some(MatrixJson::save(&report.matrix)),
                    residual_max: Some(report.residual_max),
                    raw_unitarity_defect: Some(report.raw_unitarity_defect),
                    error: None,
                },
                Some(verdict),
            )
        }
        Err(e) => (
            BuildOutcome {
                built: false,
                matrix: None,
                residual_max: None,
                raw_unitarity_defect: None,
                error: Some(e.to_string()),
            },
            None,
        ),
    };

    let tiling = tiles_by(omega, gamma);
    let tiling_defects = tiling
        .defects
        .iter()
        .map(|d| match d {
            TilingDefect::MeasureMismatch { covered, period } => {
                format!("measure mismatch: m*|omega| = {covered} but period = {period}")
            }
            TilingDefect::Coverage {
                lo,
                hi,
                multiplicity,
            } => format!("coverage {multiplicity} on ({lo}, {hi})"),
        })
        .collect();

    let spectral_evidence = gram.max_offdiag <= GRAM_OFFDIAG_TOL
        && b_outcome.built
        && verdict
            .as_ref()
            .is_some_and(SpectralVerdict::is_spectral_evidence);
    let agreement = spectral_evidence == tiling.tiles;

    Ok(HarnessReport {
        omega: OmegaJson::save(omega)?,
        lambda: LambdaJson::save(lambda)?,
        gamma: GammaJson::save(gamma)?,
        window: [window.0, window.1],
        gram_max_offdiag: gram.max_offdiag,
        parseval,
        b_matrix: b_outcome,
        spectral_verdict: verdict,
        spectral_evidence,
        tiles: tiling.tiles,
        tiling_defects,
        agreement,
    })
}

/// ℂⁿ inner product `Σ f_i conj(g_i)`, linear in the first slot.
pub fn cn_inner(f: &CVector, g: &CVector) -> Complex64 {
    f.iter().zip(g.iter()).map(|(a, b)| a * b.conj()).sum()
}

/// Consistency check helper used by tests and the round-trip invariant:
/// compare a found spectrum against the realized candidate set.
pub fn spectrum_matches_set(eigenpairs: &[Eigenpair], realized: &[f64], tol: f64) -> bool {
    if eigenpairs.len() != realized.len() {
        return false;
    }
    eigenpairs
        .iter()
        .zip(realized)
        .all(|(ep, &lam)| ep.multiplicity() == 1 && (ep.lambda - lam).abs() <= tol)
}
