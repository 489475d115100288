//! Seeded random matrices and states for tests, self-tests and restarts.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::Result;

use super::layout::SystemLayout;
use super::linalg::{qr_isometry, CMatrix, CVector, C64};
use super::state::{DensityOperator, Ket};

/// Matrix with i.i.d. standard complex Gaussian entries.
pub fn ginibre<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
    })
}

/// Haar-random isometry with `cols ≤ rows`.
pub fn haar_isometry<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMatrix {
    assert!(cols <= rows, "isometry needs cols <= rows");
    qr_isometry(&ginibre(rows, cols, rng))
}

/// Haar-random unitary.
pub fn haar_unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CMatrix {
    haar_isometry(n, n, rng)
}

/// Haar-random pure state.
pub fn random_ket<R: Rng + ?Sized>(layout: &SystemLayout, rng: &mut R) -> Result<Ket> {
    let g = ginibre(layout.total_dim(), 1, rng);
    Ket::normalized(layout.clone(), CVector::from_column_slice(g.as_slice()))
}

/// Induced-measure mixed state `GG†/Tr(GG†)` with `G` of shape `d × rank`.
pub fn random_density_with_rank<R: Rng + ?Sized>(
    layout: &SystemLayout,
    rank: usize,
    rng: &mut R,
) -> Result<DensityOperator> {
    let g = ginibre(layout.total_dim(), rank.max(1), rng);
    DensityOperator::from_unnormalized(layout.clone(), &g * g.adjoint())
}

/// Full-rank random mixed state (Hilbert-Schmidt measure).
pub fn random_density<R: Rng + ?Sized>(layout: &SystemLayout, rng: &mut R) -> Result<DensityOperator> {
    random_density_with_rank(layout, layout.total_dim(), rng)
}
