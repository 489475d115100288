mod common;

use common::{layout, rng};
use proptest::prelude::*;
use qrs_core::entropics::trace_distance;
use qrs_core::tensor::random::{haar_unitary, random_density, random_ket};
use qrs_core::tensor::{eig_hermitian, CMatrix, C64};
use qrs_core::{DensityOperator, Error, Ket, SystemLayout};

/// Partial trace over the last factor of a two-factor state, by explicit
/// index sums.
fn trace_second(m: &CMatrix, d1: usize, d2: usize) -> CMatrix {
    CMatrix::from_fn(d1, d1, |i, j| (0..d2).map(|k| m[(i * d2 + k, j * d2 + k)]).sum())
}

/// Partial trace over the first factor.
fn trace_first(m: &CMatrix, d1: usize, d2: usize) -> CMatrix {
    CMatrix::from_fn(d2, d2, |i, j| (0..d1).map(|k| m[(k * d2 + i, k * d2 + j)]).sum())
}

fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0, |a, z| a.max(z.norm()))
}

fn dims3() -> impl Strategy<Value = (usize, usize, usize, u64)> {
    (1usize..=3, 1usize..=2, 1usize..=3, any::<u64>()).prop_filter("total ≤ 12", |(a, b, c, _)| a * b * c <= 12)
}

#[test]
fn partial_trace_examples() {
    let bell = Ket::maximally_entangled("A", "B", 2).unwrap().to_density();
    let half = DensityOperator::maximally_mixed(layout(&[("A", 2)]));
    assert!(max_abs(&(bell.partial_trace(&["A"]).unwrap().matrix() - half.matrix())) < 1e-15);

    let mut r = rng(1);
    let a = random_density(&layout(&[("A", 2)]), &mut r).unwrap();
    let rr = random_density(&layout(&[("R", 3)]), &mut r).unwrap();
    let prod = a.tensor(&rr).unwrap();
    assert!(max_abs(&(prod.partial_trace(&["A"]).unwrap().matrix() - a.matrix())) < 1e-14);
    assert_eq!(prod.partial_trace(&["A", "R"]).unwrap(), prod);
    assert!(matches!(prod.partial_trace(&["Z"]), Err(Error::UnknownLabel(_))));
}

#[test]
fn partial_trace_keeps_original_order() {
    let mut r = rng(2);
    let s = random_density(&layout(&[("A", 2), ("B", 3), ("C", 2)]), &mut r).unwrap();
    let kept = s.partial_trace(&["C", "A"]).unwrap();
    let labels: Vec<&str> = kept.layout().labels().map(|l| l.as_str()).collect();
    assert_eq!(labels, ["A", "C"]);
}

#[test]
fn purification_examples() {
    let mut r = rng(3);
    let pure = random_ket(&layout(&[("A", 3)]), &mut r).unwrap().to_density();
    let p = pure.purify("P").unwrap();
    assert_eq!(p.layout().dim_of("P").unwrap(), 1);
    assert!(trace_distance(&p.reduced(&["A"]).unwrap(), &pure).unwrap() < 1e-12);

    let mixed = DensityOperator::maximally_mixed(layout(&[("A", 2)]));
    let p = mixed.purify("P").unwrap();
    assert_eq!(p.layout().dim_of("P").unwrap(), 2);
    assert!(trace_distance(&p.reduced(&["P"]).unwrap().relabel("P", "A").unwrap(), &mixed).unwrap() < 1e-12);

    let rho = DensityOperator::diagonal(layout(&[("A", 2)]), &[0.75, 0.25]).unwrap();
    let p = rho.purify("P").unwrap();
    let expected = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
        C64::new(0.75, 0.0),
        C64::new(0.25, 0.0),
    ]));
    assert!(max_abs(&(p.reduced(&["A"]).unwrap().matrix() - &expected)) < 1e-12);
    // Schmidt coefficients √¾ and √¼ from the amplitude matrix
    let amp = CMatrix::from_fn(2, 2, |i, j| p.amplitudes()[i * 2 + j]);
    let gram = &amp * amp.adjoint();
    let eig = eig_hermitian(&gram).unwrap();
    assert!((eig.values[0] - 0.75).abs() < 1e-12 && (eig.values[1] - 0.25).abs() < 1e-12);
    assert!(rho.purify_with_dim("P", 1).is_err());
    assert_eq!(rho.purify_with_dim("P", 4).unwrap().layout().dim_of("P").unwrap(), 4);
}

#[test]
fn permutation_examples() {
    let mut r = rng(4);
    let a = random_density(&layout(&[("A", 2)]), &mut r).unwrap();
    let rr = random_density(&layout(&[("R", 3)]), &mut r).unwrap();
    let ar = a.tensor(&rr).unwrap();
    assert_eq!(ar.permute(&["A", "R"]).unwrap(), ar);
    let swapped = ar.permute(&["R", "A"]).unwrap();
    assert!(max_abs(&(swapped.matrix() - rr.tensor(&a).unwrap().matrix())) < 1e-15);
    assert_eq!(swapped.permute(&["A", "R"]).unwrap(), ar);
    assert!(matches!(ar.permute(&["A"]), Err(Error::NotPermutation(_))));
    assert!(matches!(ar.permute(&["A", "A"]), Err(Error::NotPermutation(_))));
}

#[test]
fn ket_permutation_matches_density_permutation() {
    let mut r = rng(5);
    let k = random_ket(&layout(&[("A", 2), ("B", 3), ("C", 2)]), &mut r).unwrap();
    let via_ket = k.permute(&["C", "A", "B"]).unwrap().to_density();
    let via_rho = k.to_density().permute(&["C", "A", "B"]).unwrap();
    assert!(max_abs(&(via_ket.matrix() - via_rho.matrix())) < 1e-15);
}

#[test]
fn eigendecomposition_examples() {
    let half = CMatrix::identity(2, 2) * C64::new(0.5, 0.0);
    assert_eq!(eig_hermitian(&half).unwrap().values, [0.5, 0.5]);
    let proj = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
        C64::new(1.0, 0.0),
        C64::new(0.0, 0.0),
    ]));
    let e = eig_hermitian(&proj).unwrap();
    assert_eq!(e.values, [1.0, 0.0]);
    assert!((e.vectors[(0, 0)].norm() - 1.0).abs() < 1e-15);
    let x = CMatrix::from_row_slice(
        2,
        2,
        &[
            C64::new(0.0, 0.0),
            C64::new(1.0, 0.0),
            C64::new(1.0, 0.0),
            C64::new(0.0, 0.0),
        ],
    );
    let e = eig_hermitian(&x).unwrap();
    assert!((e.values[0] - 1.0).abs() < 1e-15 && (e.values[1] + 1.0).abs() < 1e-15);
    let bad = CMatrix::from_row_slice(
        2,
        2,
        &[
            C64::new(0.0, 0.0),
            C64::new(1.0, 0.0),
            C64::new(0.0, 0.0),
            C64::new(0.0, 0.0),
        ],
    );
    assert!(matches!(eig_hermitian(&bad), Err(Error::NotHermitian(_))));
}

#[test]
fn states_reject_invalid_matrices() {
    let l = layout(&[("A", 2)]);
    let not_unit = CMatrix::identity(2, 2);
    assert!(DensityOperator::new(l.clone(), not_unit).is_err());
    let negative = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
        C64::new(1.5, 0.0),
        C64::new(-0.5, 0.0),
    ]));
    assert!(DensityOperator::new(l.clone(), negative).is_err());
    assert!(DensityOperator::new(l, CMatrix::identity(3, 3)).is_err());
    assert!(SystemLayout::new([("A", 2), ("A", 2)]).is_err());
    assert!(SystemLayout::new([("", 2)]).is_err());
    assert!(SystemLayout::new([("A", 0)]).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn partial_trace_preserves_trace_and_positivity((d1, d2, d3, seed) in dims3()) {
        let mut r = rng(seed);
        let s = random_density(&layout(&[("A", d1), ("B", d2), ("C", d3)]), &mut r).unwrap();
        for keep in [&["A"][..], &["B", "C"], &["A", "C"]] {
            let t = s.partial_trace(keep).unwrap();
            prop_assert!((t.trace().re - 1.0).abs() < 1e-12);
            prop_assert!(eig_hermitian(t.matrix()).unwrap().values.iter().all(|&v| v >= -1e-12));
        }
    }

    #[test]
    fn partial_trace_matches_index_sums(d1 in 1usize..=3, d2 in 1usize..=3, seed: u64) {
        let mut r = rng(seed);
        let s = random_density(&layout(&[("A", d1), ("B", d2)]), &mut r).unwrap();
        let a = s.partial_trace(&["A"]).unwrap();
        let b = s.partial_trace(&["B"]).unwrap();
        prop_assert!(max_abs(&(a.matrix() - trace_second(s.matrix(), d1, d2))) < 1e-14);
        prop_assert!(max_abs(&(b.matrix() - trace_first(s.matrix(), d1, d2))) < 1e-14);
    }

    #[test]
    fn purification_reduces_to_input(d1 in 1usize..=3, d2 in 1usize..=2, rank in 1usize..=6, seed: u64) {
        let mut r = rng(seed);
        let l = layout(&[("A", d1), ("B", d2)]);
        let s = qrs_core::tensor::random::random_density_with_rank(&l, rank, &mut r).unwrap();
        let p = s.purify("P").unwrap();
        prop_assert_eq!(p.layout().dim_of("P").unwrap(), s.rank().unwrap());
        prop_assert!(trace_distance(&p.reduced(&["A", "B"]).unwrap(), &s).unwrap() <= 1e-9);
    }

    #[test]
    fn permutation_inverse_is_bit_exact((d1, d2, d3, seed) in dims3()) {
        let mut r = rng(seed);
        let s = random_density(&layout(&[("A", d1), ("B", d2), ("C", d3)]), &mut r).unwrap();
        let there = s.permute(&["C", "A", "B"]).unwrap();
        prop_assert_eq!(there.permute(&["A", "B", "C"]).unwrap(), s.clone());
        let k = random_ket(s.layout(), &mut r).unwrap();
        prop_assert_eq!(k.permute(&["B", "C", "A"]).unwrap().permute(&["A", "B", "C"]).unwrap(), k);
    }

    #[test]
    fn eigenvalues_sum_to_trace_and_reconstruct(n in 1usize..=6, seed: u64) {
        let mut r = rng(seed);
        let g = qrs_core::tensor::random::ginibre(n, n, &mut r);
        let h = &g + g.adjoint();
        let e = eig_hermitian(&h).unwrap();
        let tr: f64 = (0..n).map(|i| h[(i, i)].re).sum();
        prop_assert!((e.values.iter().sum::<f64>() - tr).abs() <= 1e-9 * (1.0 + tr.abs()));
        prop_assert!(e.values.windows(2).all(|w| w[0] >= w[1]));
        let back = e.map(|v| v);
        prop_assert!((back - &h).norm() <= 1e-9 * h.norm().max(1.0));
    }

    #[test]
    fn unitary_conjugation_keeps_spectrum(n in 1usize..=4, seed: u64) {
        let mut r = rng(seed);
        let s = random_density(&layout(&[("A", n)]), &mut r).unwrap();
        let u = haar_unitary(n, &mut r);
        let moved = DensityOperator::new(s.layout().clone(), &u * s.matrix() * u.adjoint()).unwrap();
        let (a, b) = (s.eigenvalues().unwrap(), moved.eigenvalues().unwrap());
        prop_assert!(a.iter().zip(&b).all(|(x, y)| (x - y).abs() < 1e-12));
    }
}
