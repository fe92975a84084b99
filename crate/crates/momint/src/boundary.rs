//! Boundary matrices and extension-domain checks.
//!
//! A closed symmetric extension of the momentum operator on Ω is encoded by
//! a partial isometry B between subspaces of ℂⁿ acting on boundary traces,
//! `B f(ᾱ) = f(β̄)`; the extension is self-adjoint exactly when B is
//! unitary. This module holds the matrix types, the diagonal phase matrix
//! E(z), the transfer matrix `M(λ) = E(λβ̄)⁻¹ B E(λᾱ)`, and membership
//! checks for the extension domain and its adjoint.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::IntervalUnion;

pub const UNITARY_TOL: f64 = 1e-12;
pub const TRACE_TOL: f64 = 1e-9;

const TAU: f64 = std::f64::consts::TAU;

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

/// Boundary trace vectors `f(ᾱ)` and `f(β̄)`.
#[derive(Debug, Clone)]
pub struct BoundaryTraces {
    pub at_alpha: CVector,
    pub at_beta: CVector,
}

impl BoundaryTraces {
    pub fn new(at_alpha: CVector, at_beta: CVector) -> Self {
        assert_eq!(at_alpha.len(), at_beta.len());
        debug_assert!(at_alpha.iter().chain(at_beta.iter()).all(|z| z.is_finite()));
        Self { at_alpha, at_beta }
    }
}

/// How the matrix acts on ℂⁿ.
#[derive(Debug, Clone)]
pub enum BoundaryMode {
    Unitary,
    /// Isometric from `span(left_basis)` to `span(right_basis)`, zero on the
    /// orthogonal complement of the left subspace. Bases are orthonormal
    /// columns supplied by the caller.
    PartialIsometry {
        left_basis: CMatrix,
        right_basis: CMatrix,
    },
}

/// The n×n boundary matrix of an extension.
#[derive(Debug, Clone)]
pub struct BoundaryMatrix {
    entries: CMatrix,
    mode: BoundaryMode,
}

/// max |(B*B - I)_{jk}|
pub fn unitarity_defect(b: &CMatrix) -> f64 {
    let n = b.nrows();
    let gram = b.adjoint() * b;
    let mut defect: f64 = 0.0;
    for j in 0..n {
        for k in 0..n {
            let target = if j == k {
                Complex64::ONE
            } else {
                Complex64::ZERO
            };
            defect = defect.max((gram[(j, k)] - target).norm());
        }
    }
    defect
}

fn orthonormality_defect(basis: &CMatrix) -> f64 {
    let gram = basis.adjoint() * basis;
    let mut defect: f64 = 0.0;
    for j in 0..gram.nrows() {
        for k in 0..gram.ncols() {
            let target = if j == k {
                Complex64::ONE
            } else {
                Complex64::ZERO
            };
            defect = defect.max((gram[(j, k)] - target).norm());
        }
    }
    defect
}

impl BoundaryMatrix {
    /// Construct a unitary boundary matrix; rejects `max |B*B - I| > 1e-12`.
    pub fn unitary(entries: CMatrix) -> Result<Self> {
        if entries.nrows() != entries.ncols() || entries.nrows() == 0 {
            return Err(Error::InvalidPartialIsometry(format!(
                "matrix must be square and nonempty, got {}x{}",
                entries.nrows(),
                entries.ncols()
            )));
        }
        let defect = unitarity_defect(&entries);
        if defect > UNITARY_TOL {
            return Err(Error::NotUnitary {
                defect,
                tol: UNITARY_TOL,
            });
        }
        Ok(Self {
            entries,
            mode: BoundaryMode::Unitary,
        })
    }

    /// 1x1 unitary `(e^{2πiθ})`.
    pub fn phase(theta: f64) -> Self {
        let z = Complex64::from_polar(1.0, TAU * theta);
        Self::unitary(CMatrix::from_element(1, 1, z)).expect("unit modulus")
    }

    pub fn identity(n: usize) -> Self {
        Self::unitary(CMatrix::identity(n, n)).expect("identity")
    }

    /// Construct a partial isometry with explicit orthonormal bases for the
    /// domain and range subspaces. The matrix must be isometric on the left
    /// subspace, map it onto the right one, and vanish on its complement.
    pub fn partial_isometry(
        entries: CMatrix,
        left_basis: CMatrix,
        right_basis: CMatrix,
    ) -> Result<Self> {
        let n = entries.nrows();
        if entries.ncols() != n || n == 0 {
            return Err(Error::InvalidPartialIsometry(
                "matrix must be square".into(),
            ));
        }
        if left_basis.nrows() != n || right_basis.nrows() != n {
            return Err(Error::InvalidPartialIsometry(
                "basis vectors must have length n".into(),
            ));
        }
        if left_basis.ncols() != right_basis.ncols() {
            return Err(Error::InvalidPartialIsometry(format!(
                "domain and range dimensions differ: {} vs {}",
                left_basis.ncols(),
                right_basis.ncols()
            )));
        }
        let tol = 1e-10;
        if orthonormality_defect(&left_basis) > tol || orthonormality_defect(&right_basis) > tol {
            return Err(Error::InvalidPartialIsometry(
                "subspace bases are not orthonormal".into(),
            ));
        }
        // isometric on the left subspace: B U_l has orthonormal columns in
        // the right subspace
        let image = &entries * &left_basis;
        if orthonormality_defect(&image) > tol {
            return Err(Error::InvalidPartialIsometry(
                "matrix is not isometric on the left subspace".into(),
            ));
        }
        let proj_right = &right_basis * right_basis.adjoint();
        let outside = &image - &proj_right * &image;
        if outside.iter().map(|z| z.norm()).fold(0.0, f64::max) > tol {
            return Err(Error::InvalidPartialIsometry(
                "image of the left subspace leaves the right subspace".into(),
            ));
        }
        // zero on the complement of the left subspace
        let proj_left = &left_basis * left_basis.adjoint();
        let on_complement = &entries - &entries * &proj_left;
        if on_complement.iter().map(|z| z.norm()).fold(0.0, f64::max) > tol {
            return Err(Error::InvalidPartialIsometry(
                "matrix does not vanish on the complement of the left subspace".into(),
            ));
        }
        Ok(Self {
            entries,
            mode: BoundaryMode::PartialIsometry {
                left_basis,
                right_basis,
            },
        })
    }

    /// The zero partial isometry (B_l = B_r = {0}).
    pub fn zero(n: usize) -> Self {
        Self {
            entries: CMatrix::zeros(n, n),
            mode: BoundaryMode::PartialIsometry {
                left_basis: CMatrix::zeros(n, 0),
                right_basis: CMatrix::zeros(n, 0),
            },
        }
    }

    pub fn n(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &CMatrix {
        &self.entries
    }

    pub fn mode(&self) -> &BoundaryMode {
        &self.mode
    }

    pub fn is_unitary(&self) -> bool {
        matches!(self.mode, BoundaryMode::Unitary)
    }

    pub fn require_unitary(&self) -> Result<()> {
        if self.is_unitary() {
            Ok(())
        } else {
            Err(Error::UnitaryRequired)
        }
    }

    /// Explicit repair: project onto the nearest unitary (the polar factor
    /// of the SVD). Never applied silently by constructors.
    pub fn repair_unitary(entries: &CMatrix) -> Result<BoundaryMatrix> {
        let svd = entries.clone().svd(true, true);
        let u = svd
            .u
            .ok_or_else(|| Error::InvalidPartialIsometry("svd failed".into()))?;
        let v_t = svd
            .v_t
            .ok_or_else(|| Error::InvalidPartialIsometry("svd failed".into()))?;
        BoundaryMatrix::unitary(u * v_t)
    }
}

/// Diagonal phase matrix `E(z) = diag(e^{2πi z_1}, …, e^{2πi z_n})`.
pub fn phase_matrix(z: &[Complex64]) -> CMatrix {
    let n = z.len();
    CMatrix::from_fn(n, n, |j, k| {
        if j == k {
            (Complex64::new(0.0, TAU) * z[j]).exp()
        } else {
            Complex64::ZERO
        }
    })
}

/// `e^{2πi λ x}` for complex λ.
pub fn phase_scalar(lambda: Complex64, x: f64) -> Complex64 {
    (Complex64::new(0.0, TAU) * lambda * x).exp()
}

/// Diagonal of `E(λ ᾱ)` for an interval union.
pub fn alpha_phases(omega: &IntervalUnion, lambda: Complex64) -> Vec<Complex64> {
    omega
        .alphas_f64()
        .into_iter()
        .map(|a| phase_scalar(lambda, a))
        .collect()
}

/// Diagonal of `E(λ β̄)`.
pub fn beta_phases(omega: &IntervalUnion, lambda: Complex64) -> Vec<Complex64> {
    omega
        .betas_f64()
        .into_iter()
        .map(|b| phase_scalar(lambda, b))
        .collect()
}

/// Transfer matrix `M(λ) = E(λβ̄)⁻¹ B E(λᾱ)`, built entrywise:
/// `M_{kj} = e^{-2πiλβ_k} B_{kj} e^{2πiλα_j}`. Unitary for real λ.
pub fn transfer_matrix(omega: &IntervalUnion, b: &BoundaryMatrix, lambda: Complex64) -> CMatrix {
    let n = b.n();
    assert_eq!(n, omega.n(), "matrix size must match the interval count");
    let alphas = omega.alphas_f64();
    let betas = omega.betas_f64();
    let left: Vec<Complex64> = betas.iter().map(|&bk| phase_scalar(-lambda, bk)).collect();
    let right: Vec<Complex64> = alphas.iter().map(|&aj| phase_scalar(lambda, aj)).collect();
    CMatrix::from_fn(n, n, |k, j| left[k] * b.entries()[(k, j)] * right[j])
}

/// True iff `‖B f(ᾱ) − f(β̄)‖ ≤ tol`, i.e. the traces satisfy the
/// self-adjoint boundary condition.
pub fn check_selfadjoint_domain(
    traces: &BoundaryTraces,
    b: &BoundaryMatrix,
    tol: f64,
) -> Result<bool> {
    b.require_unitary()?;
    Ok(selfadjoint_residual(traces, b) <= tol)
}

/// `‖B f(ᾱ) − f(β̄)‖`
pub fn selfadjoint_residual(traces: &BoundaryTraces, b: &BoundaryMatrix) -> f64 {
    (b.entries() * &traces.at_alpha - &traces.at_beta).norm()
}

/// Adjoint-domain membership: the projection of `B* f(β̄) − f(ᾱ)` onto the
/// left subspace must vanish. For a unitary matrix the left subspace is all
/// of ℂⁿ and the check reduces to `B* f(β̄) = f(ᾱ)`.
pub fn check_adjoint_domain(traces: &BoundaryTraces, b: &BoundaryMatrix, tol: f64) -> bool {
    let residual = b.entries().adjoint() * &traces.at_beta - &traces.at_alpha;
    let projected_norm = match b.mode() {
        BoundaryMode::Unitary => residual.norm(),
        BoundaryMode::PartialIsometry { left_basis, .. } => {
            (left_basis.adjoint() * residual).norm()
        }
    };
    projected_norm <= tol
}

// ---------------------------------------------------------------------------
// JSON wire format
// ---------------------------------------------------------------------------

/// JSON form of a boundary matrix. Entries are `[re, im]` pairs in row-major
/// nested arrays. The loader re-validates the mode invariants and reports
/// the unitarity defect it measured.
#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum MatrixJson {
    Unitary {
        entries: Vec<Vec<[f64; 2]>>,
    },
    PartialIsometry {
        entries: Vec<Vec<[f64; 2]>>,
        left_basis: Vec<Vec<[f64; 2]>>,
        right_basis: Vec<Vec<[f64; 2]>>,
    },
}

fn rows_to_matrix(rows: &[Vec<[f64; 2]>], what: &str) -> Result<CMatrix> {
    let nrows = rows.len();
    if nrows == 0 {
        return Err(Error::Config(format!("{what}: empty matrix")));
    }
    let ncols = rows[0].len();
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(Error::Config(format!("{what}: ragged rows")));
    }
    Ok(CMatrix::from_fn(nrows, ncols, |j, k| {
        Complex64::new(rows[j][k][0], rows[j][k][1])
    }))
}

fn matrix_to_rows(m: &CMatrix) -> Vec<Vec<[f64; 2]>> {
    (0..m.nrows())
        .map(|j| {
            (0..m.ncols())
                .map(|k| [m[(j, k)].re, m[(j, k)].im])
                .collect()
        })
        .collect()
}

/// Loader report: the matrix plus the measured unitarity defect.
#[derive(Debug)]
pub struct LoadedMatrix {
    pub matrix: BoundaryMatrix,
    pub unitarity_defect: f64,
}

impl MatrixJson {
    pub fn load(&self) -> Result<LoadedMatrix> {
        match self {
            MatrixJson::Unitary { entries } => {
                let m = rows_to_matrix(entries, "unitary matrix")?;
                let defect = unitarity_defect(&m);
                Ok(LoadedMatrix {
                    matrix: BoundaryMatrix::unitary(m)?,
                    unitarity_defect: defect,
                })
            }
            MatrixJson::PartialIsometry {
                entries,
                left_basis,
                right_basis,
            } => {
                let m = rows_to_matrix(entries, "partial isometry")?;
                let defect = unitarity_defect(&m);
                let lb = rows_to_matrix(left_basis, "left basis")?;
                let rb = rows_to_matrix(right_basis, "right basis")?;
                Ok(LoadedMatrix {
                    matrix: BoundaryMatrix::partial_isometry(m, lb, rb)?,
                    unitarity_defect: defect,
                })
            }
        }
    }

    pub fn save(b: &BoundaryMatrix) -> Self {
        match b.mode() {
            BoundaryMode::Unitary => MatrixJson::Unitary {
                entries: matrix_to_rows(b.entries()),
            },
            BoundaryMode::PartialIsometry {
                left_basis,
                right_basis,
            } => MatrixJson::PartialIsometry {
                entries: matrix_to_rows(b.entries()),
                left_basis: matrix_to_rows(left_basis),
                right_basis: matrix_to_rows(right_basis),
            },
        }
    }
}

/// The derived 2x2 boundary matrix `(1/2)[[1+i, 1-i], [1-i, 1+i]]` used all
/// over the tests: it maps `(1,1) ↦ (1,1)` and `(1,-1) ↦ (i,-i)`.
pub fn half_shift_matrix() -> BoundaryMatrix {
    let i = Complex64::I;
    let one = Complex64::ONE;
    BoundaryMatrix::unitary(CMatrix::from_row_slice(
        2,
        2,
        &[
            (one + i) * 0.5,
            (one - i) * 0.5,
            (one - i) * 0.5,
            (one + i) * 0.5,
        ],
    ))
    .expect("unitary by construction")
}
