mod common;

use common::{bell, correlated_bit, layout, rng};
use proptest::prelude::*;
use qrs_core::entropics::{
    afw_bound, binary_entropy, conditional_entropy, conditional_mutual_information, decoupling_delta, entropy_report,
    fannes_audenaert_bound, fidelity, mutual_information, trace_distance, von_neumann_entropy,
};
use qrs_core::tensor::random::{ginibre, haar_unitary, random_density, random_density_with_rank, random_ket};
use qrs_core::tensor::{CMatrix, C64};
use qrs_core::{DensityOperator, Error, QuantumChannel, SystemLayout};
use rand::Rng;

fn h(p: f64) -> f64 {
    if p <= 0.0 || p >= 1.0 {
        0.0
    } else {
        -p * p.log2() - (1.0 - p) * (1.0 - p).log2()
    }
}

/// State `GG†/‖G‖²` together with its factor `G/‖G‖`.
fn factored_state(l: &SystemLayout, rank: usize, r: &mut impl Rng) -> (DensityOperator, CMatrix) {
    let g = ginibre(l.total_dim(), rank, r);
    let g = &g / C64::new(g.norm(), 0.0);
    (DensityOperator::new(l.clone(), &g * g.adjoint()).unwrap(), g)
}

/// `‖√ρ √ξ‖₁ = ‖G₁† G₂‖₁` for factorizations `ρ = G₁G₁†`, `ξ = G₂G₂†`.
fn fidelity_oracle(g1: &CMatrix, g2: &CMatrix) -> f64 {
    (g1.adjoint() * g2).singular_values().iter().sum()
}

fn pure(l: &SystemLayout, index: usize) -> DensityOperator {
    qrs_core::Ket::basis(l.clone(), index).unwrap().to_density()
}

/// A nearby state: `(1−t)ρ + t ξ` for a random `ξ`.
fn nearby(rho: &DensityOperator, t: f64, r: &mut impl Rng) -> DensityOperator {
    let xi = random_density(rho.layout(), r).unwrap();
    let m = rho.matrix() * C64::new(1.0 - t, 0.0) + xi.matrix() * C64::new(t, 0.0);
    DensityOperator::new(rho.layout().clone(), m).unwrap()
}

#[test]
fn entropy_examples() {
    let q = layout(&[("A", 2)]);
    assert!((von_neumann_entropy(&DensityOperator::maximally_mixed(q.clone()), &["A"]).unwrap() - 1.0).abs() < 1e-15);
    let mut r = rng(1);
    let k = random_ket(&layout(&[("A", 3), ("B", 2)]), &mut r).unwrap().to_density();
    assert!(von_neumann_entropy(&k, &["A", "B"]).unwrap().abs() < 1e-9);
    let skew = DensityOperator::diagonal(q, &[0.75, 0.25]).unwrap();
    assert!((von_neumann_entropy(&skew, &["A"]).unwrap() - h(0.25)).abs() < 1e-14);
    assert!((h(0.25) - 0.811_278).abs() < 1e-6);
    assert!(matches!(
        von_neumann_entropy(&skew, &["Z"]),
        Err(Error::UnknownLabel(_))
    ));
    let rep = entropy_report(&k, &["A"]).unwrap();
    assert_eq!(rep.spectrum.len(), 3);
    assert!(rep.clamped_mass < 1e-12);
}

#[test]
fn mutual_information_examples() {
    assert!((mutual_information(&bell("A", "B"), &["A"], &["B"]).unwrap() - 2.0).abs() < 1e-12);
    let mut r = rng(2);
    let a = random_density(&layout(&[("A", 2)]), &mut r).unwrap();
    let b = random_density(&layout(&[("B", 3)]), &mut r).unwrap();
    assert!(
        mutual_information(&a.tensor(&b).unwrap(), &["A"], &["B"])
            .unwrap()
            .abs()
            < 1e-12
    );
    assert!((mutual_information(&correlated_bit("A", "R"), &["A"], &["R"]).unwrap() - 1.0).abs() < 1e-12);
    assert!(matches!(
        mutual_information(&bell("A", "B"), &["A"], &["A", "B"]),
        Err(Error::OverlappingParts(_))
    ));
    assert!(conditional_mutual_information(&bell("A", "B"), &["A"], &["B"], &["A"]).is_err());
}

#[test]
fn fidelity_and_distance_examples() {
    let q = layout(&[("A", 2)]);
    let mut r = rng(3);
    let s = random_density(&q, &mut r).unwrap();
    assert!((fidelity(&s, &s).unwrap() - 1.0).abs() < 1e-9);
    let half = DensityOperator::maximally_mixed(q.clone());
    let zero = pure(&q, 0);
    let one = pure(&q, 1);
    assert!((fidelity(&zero, &half).unwrap() - 0.5f64.sqrt()).abs() < 1e-12);
    assert!(fidelity(&zero, &one).unwrap().abs() < 1e-12);
    assert!(trace_distance(&s, &s).unwrap().abs() < 1e-15);
    assert!((trace_distance(&zero, &one).unwrap() - 1.0).abs() < 1e-15);
    assert!((trace_distance(&zero, &half).unwrap() - 0.5).abs() < 1e-15);
    let other = DensityOperator::maximally_mixed(layout(&[("B", 2)]));
    assert!(matches!(fidelity(&zero, &other), Err(Error::LayoutMismatch(_))));
}

#[test]
fn bound_examples() {
    assert_eq!(binary_entropy(0.0).unwrap(), 0.0);
    assert!((binary_entropy(0.5).unwrap() - 1.0).abs() < 1e-15);
    for dims in [(1, 1), (2, 3), (8, 8)] {
        assert_eq!(decoupling_delta(1, 0.0, dims.0, dims.1).unwrap(), 0.0);
    }
    let direct = 2.0 * 0.01 + 1.01 * h(0.01 / 1.01);
    assert!((afw_bound(0.01, 2).unwrap() - direct).abs() < 1e-15);
    assert!((direct - 0.100_937_407_8).abs() < 1e-9);
    let x = (6.0f64 * 0.01).sqrt();
    let dd = 2.0 * x * 4f64.log2() + 2.0 * h(x);
    assert!((decoupling_delta(3, 0.01, 2, 2).unwrap() - dd).abs() < 1e-15);
    for bad in [-0.1, 1.1, f64::NAN] {
        assert!(binary_entropy(bad).is_err());
        assert!(afw_bound(bad, 2).is_err());
    }
    assert!(fannes_audenaert_bound(0.1, 0).is_err());
}

#[test]
fn bounds_are_monotone_on_the_lower_half() {
    let grid: Vec<f64> = (0..=500).map(|i| i as f64 / 1000.0).collect();
    for w in grid.windows(2) {
        assert!(binary_entropy(w[1]).unwrap() >= binary_entropy(w[0]).unwrap());
        assert!(fannes_audenaert_bound(w[1], 3).unwrap() >= fannes_audenaert_bound(w[0], 3).unwrap());
        assert!(afw_bound(w[1], 3).unwrap() >= afw_bound(w[0], 3).unwrap());
        assert!(decoupling_delta(1, w[1], 2, 2).unwrap() >= decoupling_delta(1, w[0], 2, 2).unwrap() - 1e-15);
        assert!(decoupling_delta(1, w[0], 2, 2).unwrap() >= 0.0);
    }
}

fn dims() -> impl Strategy<Value = (usize, usize, u64)> {
    (1usize..=3, 1usize..=2, any::<u64>())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn entropy_is_within_range((da, db, seed) in dims(), rank in 1usize..=6) {
        let mut r = rng(seed);
        let s = random_density_with_rank(&layout(&[("A", da), ("B", db)]), rank, &mut r).unwrap();
        let v = von_neumann_entropy(&s, &["A", "B"]).unwrap();
        prop_assert!(v >= 0.0 && v <= ((da * db) as f64).log2() + 1e-12);
    }

    #[test]
    fn subadditivity_and_araki_lieb((da, db, seed) in dims()) {
        let mut r = rng(seed);
        let s = random_density_with_rank(&layout(&[("A", da), ("B", db)]), r.random_range(1..=da * db), &mut r).unwrap();
        let (a, b, ab) = (
            von_neumann_entropy(&s, &["A"]).unwrap(),
            von_neumann_entropy(&s, &["B"]).unwrap(),
            von_neumann_entropy(&s, &["A", "B"]).unwrap(),
        );
        prop_assert!(ab <= a + b + 1e-9);
        prop_assert!((a - b).abs() <= ab + 1e-9);
        let i = mutual_information(&s, &["A"], &["B"]).unwrap();
        prop_assert!(i <= 2.0 * a.min(b) + 1e-9);
    }

    #[test]
    fn strong_subadditivity(d in 1usize..=2, seed: u64) {
        let mut r = rng(seed);
        let l = layout(&[("A", 2), ("B", d), ("C", 2)]);
        let s = random_density_with_rank(&l, r.random_range(1..=4 * d), &mut r).unwrap();
        prop_assert!(conditional_mutual_information(&s, &["A"], &["B"], &["C"]).unwrap() >= -1e-9);
    }

    #[test]
    fn fuchs_van_de_graaf((da, db, seed) in dims()) {
        let mut r = rng(seed);
        let l = layout(&[("A", da), ("B", db)]);
        let n = da * db;
        let (s, gs) = factored_state(&l, r.random_range(1..=n), &mut r);
        let (t, gt) = factored_state(&l, r.random_range(1..=n), &mut r);
        let f = fidelity(&s, &t).unwrap();
        let d = trace_distance(&s, &t).unwrap();
        prop_assert!((0.0..=1.0 + 1e-12).contains(&f));
        prop_assert!((f - fidelity(&t, &s).unwrap()).abs() <= 1e-9);
        prop_assert!((f - fidelity_oracle(&gs, &gt)).abs() <= 1e-9);
        prop_assert!(1.0 - f <= d + 1e-9);
        prop_assert!(d <= (1.0 - f * f).max(0.0).sqrt() + 1e-9);
    }

    #[test]
    fn afw_continuity(da in 1usize..=3, db in 1usize..=2, t in 0.0f64..0.3, seed: u64) {
        let mut r = rng(seed);
        let s = random_density(&layout(&[("A", da), ("B", db)]), &mut r).unwrap();
        let u = nearby(&s, t, &mut r);
        let eps = trace_distance(&s, &u).unwrap();
        let gap = (conditional_entropy(&s, &["A"], &["B"]).unwrap() - conditional_entropy(&u, &["A"], &["B"]).unwrap()).abs();
        prop_assert!(gap <= afw_bound(eps, da).unwrap() + 1e-9);
    }

    #[test]
    fn data_processing_on_b(seed: u64) {
        let mut r = rng(seed);
        let s = random_density_with_rank(&layout(&[("B", 2), ("R", 2)]), r.random_range(1..=4), &mut r).unwrap();
        let ch = QuantumChannel::random(layout(&[("B", 2)]), layout(&[("B", 2)]), r.random_range(1..=4), &mut r).unwrap();
        let after = ch.apply(&s, &["B"]).unwrap();
        let before = mutual_information(&s, &["B"], &["R"]).unwrap();
        prop_assert!(mutual_information(&after, &["B"], &["R"]).unwrap() <= before + 1e-8);
    }

    #[test]
    fn mutual_information_is_superadditive(seed: u64) {
        let mut r = rng(seed);
        let one = random_ket(&layout(&[("A1", 2), ("R1", 2)]), &mut r).unwrap().to_density();
        let two = random_ket(&layout(&[("A2", 2), ("R2", 2)]), &mut r).unwrap().to_density();
        let joint = one.tensor(&two).unwrap().permute(&["A1", "A2", "R1", "R2"]).unwrap();
        let ch = QuantumChannel::random(
            layout(&[("A1", 2), ("A2", 2)]),
            layout(&[("B1", 2), ("B2", 2)]),
            r.random_range(1..=4),
            &mut r,
        )
        .unwrap();
        let w = ch.apply(&joint, &["A1", "A2"]).unwrap();
        let whole = mutual_information(&w, &["B1", "B2"], &["R1", "R2"]).unwrap();
        let parts = mutual_information(&w, &["B1"], &["R1"]).unwrap() + mutual_information(&w, &["B2"], &["R2"]).unwrap();
        prop_assert!(whole >= parts - 1e-9);
    }

    #[test]
    fn entropy_is_unitarily_invariant(n in 1usize..=4, seed: u64) {
        let mut r = rng(seed);
        let s = random_density(&layout(&[("A", n)]), &mut r).unwrap();
        let u = haar_unitary(n, &mut r);
        let moved = DensityOperator::new(s.layout().clone(), &u * s.matrix() * u.adjoint()).unwrap();
        prop_assert!((von_neumann_entropy(&s, &["A"]).unwrap() - von_neumann_entropy(&moved, &["A"]).unwrap()).abs() < 1e-10);
    }
}
