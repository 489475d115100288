#![allow(dead_code)]

use qrs_core::tensor::random::{haar_unitary, random_density};
use qrs_core::tensor::{CMatrix, C64};
use qrs_core::{DensityOperator, SystemLayout};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn layout(factors: &[(&str, usize)]) -> SystemLayout {
    SystemLayout::new(factors.iter().copied()).unwrap()
}

/// Sorted `(p_c, N_c, Q_c)` signature with probabilities rounded for
/// comparison.
pub type Signature = Vec<(usize, usize, f64)>;

pub fn sorted_signature(mut sig: Vec<(usize, usize, f64)>) -> Signature {
    sig.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)).then(a.2.total_cmp(&b.2)));
    sig
}

/// `U (⊕_c p_c ω_c ⊗ ρ_c^{QR} ⊕ 0) U†` on `A ⊗ R` with random block data
/// and a random unitary `U` on `A`. Returns the state and its signature.
pub fn scrambled_block_state(rng: &mut ChaCha8Rng, max_a: usize) -> (DensityOperator, Signature) {
    let dr = 2;
    loop {
        let n_blocks = rng.random_range(1..=3);
        let dims: Vec<(usize, usize)> = (0..n_blocks)
            .map(|_| (rng.random_range(1..=2), rng.random_range(1..=2)))
            .collect();
        let used: usize = dims.iter().map(|(n, q)| n * q).sum();
        if used > max_a {
            continue;
        }
        let da = rng.random_range(used..=max_a);
        let weights: Vec<f64> = (0..n_blocks).map(|_| rng.random_range(0.2..1.0)).collect();
        let total: f64 = weights.iter().sum();
        let mut m = CMatrix::zeros(da * dr, da * dr);
        let mut offset = 0;
        let mut sig = Vec::new();
        for (&(n, q), w) in dims.iter().zip(&weights) {
            let p = w / total;
            let omega = random_density(&layout(&[("N", n)]), rng).unwrap();
            let rho = random_density(&layout(&[("Q", q), ("R", dr)]), rng).unwrap();
            let local = omega.matrix().kronecker(rho.matrix()) * C64::new(p, 0.0);
            let size = n * q * dr;
            m.view_mut((offset * dr, offset * dr), (size, size)).copy_from(&local);
            offset += n * q;
            sig.push((n, q, p));
        }
        let u = haar_unitary(da, rng).kronecker(&CMatrix::identity(dr, dr));
        let scrambled = &u * m * u.adjoint();
        let state = DensityOperator::from_unnormalized(layout(&[("A", da), ("R", dr)]), scrambled).unwrap();
        return (state, sorted_signature(sig));
    }
}

/// Uniformly correlated classical bit on `a ⊗ r`.
pub fn correlated_bit(a: &str, r: &str) -> DensityOperator {
    DensityOperator::diagonal(layout(&[(a, 2), (r, 2)]), &[0.5, 0.0, 0.0, 0.5]).unwrap()
}

pub fn bell(a: &str, r: &str) -> DensityOperator {
    qrs_core::Ket::maximally_entangled(a, r, 2).unwrap().to_density()
}

pub fn identity(a: &str, b: &str) -> qrs_core::QuantumChannel {
    qrs_core::QuantumChannel::identity_between(layout(&[(a, 2)]), layout(&[(b, 2)])).unwrap()
}

/// Random qubit source on `A ⊗ R` and random channel `A → B`.
pub fn qubit_instance(rng: &mut ChaCha8Rng) -> (DensityOperator, qrs_core::QuantumChannel) {
    let rank = rng.random_range(1..=4);
    let source = qrs_core::tensor::random::random_density_with_rank(&layout(&[("A", 2), ("R", 2)]), rank, rng).unwrap();
    let kraus = rng.random_range(1..=2);
    let channel = qrs_core::QuantumChannel::random(layout(&[("A", 2)]), layout(&[("B", 2)]), kraus, rng).unwrap();
    (source, channel)
}
