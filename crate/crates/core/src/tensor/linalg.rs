use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

pub(crate) const ZERO: C64 = C64::new(0.0, 0.0);
pub(crate) const ONE: C64 = C64::new(1.0, 0.0);

/// Spectral decomposition of a Hermitian matrix.
#[derive(Clone, Debug)]
pub struct HermitianEigen {
    /// Eigenvalues in descending order.
    pub values: Vec<f64>,
    /// Orthonormal eigenvectors; column `k` belongs to `values[k]`.
    pub vectors: CMatrix,
}

impl HermitianEigen {
    /// `V diag(f(λ)) V†`.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> CMatrix {
        let n = self.values.len();
        let mut scaled = self.vectors.clone();
        for (k, &v) in self.values.iter().enumerate() {
            let s = f(v);
            for i in 0..n {
                scaled[(i, k)] *= s;
            }
        }
        &scaled * self.vectors.adjoint()
    }
}

/// Largest entry of `|M - M†|`.
pub fn hermiticity_defect(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Frobenius norm.
pub fn frobenius(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Eigendecomposition of a Hermitian matrix, eigenvalues descending.
///
/// The input must be Hermitian to within `1e-8 * max(1, ‖M‖_F)`.
///
/// ```
/// use qrs_core::tensor::{eig_hermitian, CMatrix, C64};
/// let x = CMatrix::from_row_slice(2, 2, &[
///     C64::new(0.0, 0.0), C64::new(1.0, 0.0),
///     C64::new(1.0, 0.0), C64::new(0.0, 0.0),
/// ]);
/// let eig = eig_hermitian(&x).unwrap();
/// assert!((eig.values[0] - 1.0).abs() < 1e-12);
/// assert!((eig.values[1] + 1.0).abs() < 1e-12);
/// ```
pub fn eig_hermitian(m: &CMatrix) -> Result<HermitianEigen> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch {
            expected: m.nrows(),
            got: m.ncols(),
        });
    }
    let defect = hermiticity_defect(m);
    if defect > 1e-8 * frobenius(m).max(1.0) {
        return Err(Error::NotHermitian(defect));
    }
    eigh(m)
}

/// Eigendecomposition of the Hermitian part of `m`, without the input check.
pub(crate) fn eigh(m: &CMatrix) -> Result<HermitianEigen> {
    let n = m.nrows();
    if n == 0 {
        return Ok(HermitianEigen {
            values: vec![],
            vectors: CMatrix::zeros(0, 0),
        });
    }
    let sym = (m + m.adjoint()).scale(0.5);
    let eig = sym
        .try_symmetric_eigen(f64::EPSILON, 100_000)
        .ok_or(Error::EigenFailed)?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut vectors = CMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    Ok(HermitianEigen { values, vectors })
}

/// Kronecker product, first argument most significant.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

/// Dense identity.
pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

/// `(K ⊗ I_rest) M` where `M` has `K.ncols() * rest` rows.
pub(crate) fn left_apply(k: &CMatrix, m: &CMatrix, rest: usize) -> CMatrix {
    let (d_out, d_in) = k.shape();
    debug_assert_eq!(m.nrows(), d_in * rest);
    let cols = m.ncols();
    let mut out = CMatrix::zeros(d_out * rest, cols);
    for o in 0..d_out {
        for i in 0..d_in {
            let kv = k[(o, i)];
            if kv == ZERO {
                continue;
            }
            for r in 0..rest {
                let src_row = i * rest + r;
                let dst_row = o * rest + r;
                for c in 0..cols {
                    out[(dst_row, c)] += kv * m[(src_row, c)];
                }
            }
        }
    }
    out
}

/// `Σ_k (K_k ⊗ I) ρ (K_k ⊗ I)†`.
pub(crate) fn conjugate_sum(kraus: &[CMatrix], rho: &CMatrix, rest: usize) -> CMatrix {
    let d_out = kraus.first().map(|k| k.nrows()).unwrap_or(0);
    let mut out = CMatrix::zeros(d_out * rest, d_out * rest);
    for k in kraus {
        let half = left_apply(k, rho, rest);
        let full = left_apply(k, &half.adjoint(), rest).adjoint();
        out += full;
    }
    out
}

/// Unitary factor of the polar decomposition of a square matrix.
pub(crate) fn polar_unitary(m: &CMatrix) -> CMatrix {
    let svd = m.clone().svd(true, true);
    let u = svd.u.expect("requested U");
    let v_t = svd.v_t.expect("requested V^T");
    u * v_t
}

/// Reduced QR with the phase of each `R_kk` moved into `Q`, so `R` has a
/// nonnegative real diagonal. Returns `Q` with the same shape as `m`.
pub(crate) fn qr_isometry(m: &CMatrix) -> CMatrix {
    let qr = m.clone().qr();
    let mut q = qr.q();
    let r = qr.r();
    for k in 0..q.ncols() {
        let d = r[(k, k)];
        if d.norm() > 0.0 {
            let phase = d / d.norm();
            for i in 0..q.nrows() {
                q[(i, k)] *= phase;
            }
        }
    }
    q
}

/// Eigenvalues of a Hermitian matrix, clamped to be nonnegative, with the
/// mass removed by clamping.
pub(crate) fn clamped_spectrum(m: &CMatrix) -> Result<(Vec<f64>, f64)> {
    let eig = eigh(m)?;
    let mut clamped = 0.0;
    let values = eig
        .values
        .into_iter()
        .map(|v| {
            if v < 0.0 {
                clamped += -v;
                0.0
            } else {
                v
            }
        })
        .collect();
    Ok((values, clamped))
}

/// Sum of singular values of a Hermitian matrix.
pub(crate) fn hermitian_trace_norm(m: &CMatrix) -> Result<f64> {
    Ok(eigh(m)?.values.iter().map(|v| v.abs()).sum())
}

/// Sets the global phase of `v` so its first entry above `tol` is real positive.
pub(crate) fn fix_phase(v: &mut [C64], tol: f64) {
    if let Some(first) = v.iter().find(|z| z.norm() > tol).copied() {
        let phase = first.conj() / first.norm();
        for z in v.iter_mut() {
            *z *= phase;
        }
    }
}
