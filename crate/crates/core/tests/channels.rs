mod common;

use common::{layout, rng};
use proptest::prelude::*;
use qrs_core::channels::{
    apply_channel, channel_distance, complementary_channel, from_choi, stinespring_dilation, to_choi, validate_cptp,
};
use qrs_core::entropics::trace_distance;
use qrs_core::tensor::random::{random_density, random_ket};
use qrs_core::tensor::{eig_hermitian, identity, kron, CMatrix, C64};
use qrs_core::{DensityOperator, Error, Ket, QuantumChannel, SystemLayout};
use rand::Rng;

fn qubit(l: &str) -> SystemLayout {
    layout(&[(l, 2)])
}

fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0, |a, z| a.max(z.norm()))
}

/// `Σ_k (K_k ⊗ I) ρ (K_k ⊗ I)†` for a channel acting on the first factor.
fn kron_apply(kraus: &[CMatrix], rho: &CMatrix) -> CMatrix {
    let rest = rho.nrows() / kraus[0].ncols();
    let id = identity(rest);
    let d = kraus[0].nrows() * rest;
    kraus.iter().fold(CMatrix::zeros(d, d), |acc, k| {
        let big = kron(k, &id);
        acc + &big * rho * big.adjoint()
    })
}

fn random_channel(d_in: usize, d_out: usize, n_kraus: usize, seed: u64) -> QuantumChannel {
    QuantumChannel::random(layout(&[("A", d_in)]), layout(&[("B", d_out)]), n_kraus, &mut rng(seed)).unwrap()
}

#[test]
fn apply_examples() {
    let mut r = rng(1);
    let s = random_density(&layout(&[("A", 2), ("R", 2)]), &mut r).unwrap();
    let out = apply_channel(&QuantumChannel::identity(&qubit("A")), &s, &["A"]).unwrap();
    assert!(max_abs(&(out.matrix() - s.matrix())) < 1e-15);

    let dep = QuantumChannel::fully_depolarizing(qubit("A"), qubit("A"));
    let q = random_density(&qubit("A"), &mut r).unwrap();
    let half = DensityOperator::maximally_mixed(qubit("A"));
    assert!(trace_distance(&dep.apply(&q, &["A"]).unwrap(), &half).unwrap() < 1e-15);

    let plus = Ket::normalized(qubit("A"), nalgebra::DVector::from_element(2, C64::new(1.0, 0.0)))
        .unwrap()
        .to_density();
    let deph = QuantumChannel::dephasing(&qubit("A"));
    assert!(trace_distance(&deph.apply(&plus, &["A"]).unwrap(), &half).unwrap() < 1e-15);

    assert!(dep.apply(&s, &["R", "A"]).is_err());
    assert!(dep.apply(&s, &["Z"]).is_err());
}

#[test]
fn apply_acts_on_the_named_factor() {
    let mut r = rng(2);
    let s = random_density(&layout(&[("R", 2), ("A", 3)]), &mut r).unwrap();
    let ch = QuantumChannel::random(layout(&[("A", 3)]), layout(&[("B", 2)]), 3, &mut r).unwrap();
    let via_lib = ch.apply(&s, &["A"]).unwrap();
    let labels: Vec<&str> = via_lib.layout().labels().map(|l| l.as_str()).collect();
    assert_eq!(labels, ["R", "B"]);
    let swapped = s.permute(&["A", "R"]).unwrap();
    let oracle = kron_apply(ch.kraus(), swapped.matrix());
    let oracle = DensityOperator::new(layout(&[("B", 2), ("R", 2)]), oracle).unwrap();
    let back = via_lib.permute(&["B", "R"]).unwrap();
    assert!(max_abs(&(back.matrix() - oracle.matrix())) < 1e-14);
}

#[test]
fn stinespring_examples() {
    let v = stinespring_dilation(&QuantumChannel::identity(&qubit("A"))).unwrap();
    assert_eq!(v.environment_dim(), 1);
    assert!(max_abs(&(v.isometry.matrix() - identity(2))) < 1e-15);

    // dephasing dilates to the copy isometry |x⟩ ↦ |x⟩|x⟩ up to a basis change on E
    let deph = QuantumChannel::dephasing(&qubit("A"));
    let v = stinespring_dilation(&deph).unwrap();
    assert_eq!(v.environment_dim(), 2);
    let copy = CMatrix::from_fn(4, 2, |row, i| {
        if row == 3 * i {
            C64::new(1.0, 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    });
    let mut r = rng(3);
    for _ in 0..5 {
        let s = random_density(&layout(&[("A", 2), ("R", 2)]), &mut r).unwrap();
        let lib = s.conjugate(&v.isometry, &["A"]).unwrap().trace_out(&["E"]).unwrap();
        let oracle = kron_apply(std::slice::from_ref(&copy), s.matrix());
        let oracle = DensityOperator::new(layout(&[("A", 2), ("E", 2), ("R", 2)]), oracle)
            .unwrap()
            .trace_out(&["E"])
            .unwrap();
        assert!(trace_distance(&lib, &oracle).unwrap() < 1e-12);
    }
}

#[test]
fn choi_examples() {
    let id = to_choi(&QuantumChannel::identity(&qubit("A")));
    let mut expected = CMatrix::zeros(4, 4);
    for (i, j) in [(0, 0), (0, 3), (3, 0), (3, 3)] {
        expected[(i, j)] = C64::new(1.0, 0.0);
    }
    assert!(max_abs(&(id - expected)) < 1e-15);
    let dep = to_choi(&QuantumChannel::fully_depolarizing(qubit("A"), qubit("B")));
    assert!(max_abs(&(dep - identity(4) * C64::new(0.5, 0.0))) < 1e-15);

    let ch = random_channel(2, 3, 4, 4);
    let j = to_choi(&ch);
    let back = from_choi(qubit("A"), layout(&[("B", 3)]), &j).unwrap();
    assert!(max_abs(&(to_choi(&back) - &j)) <= 1e-9);
    assert!(channel_distance(&ch, &back).unwrap() <= 1e-9);

    let negative = -identity(4) * C64::new(0.5, 0.0)
        + CMatrix::from_fn(4, 4, |i, j| {
            if (i == 0 || i == 3) && (j == 0 || j == 3) {
                C64::new(2.0, 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        });
    assert!(matches!(
        from_choi(qubit("A"), qubit("B"), &negative),
        Err(Error::InvalidChannel(_))
    ));
    assert!(matches!(
        from_choi(qubit("A"), qubit("B"), &identity(4)),
        Err(Error::InvalidChannel(_))
    ));
}

#[test]
fn validate_examples() {
    let id = validate_cptp(&QuantumChannel::identity(&qubit("A")));
    assert_eq!(id.tp_residual, 0.0);
    assert!(id.cp_min_eigenvalue.abs() < 1e-15);
    assert!(id.passed());
    let single = QuantumChannel::from_kraus_unchecked(qubit("A"), qubit("A"), vec![identity(2)]).unwrap();
    assert!(validate_cptp(&single).passed());
    let doubled = QuantumChannel::from_kraus_unchecked(qubit("A"), qubit("A"), vec![identity(2), identity(2)]).unwrap();
    let rep = validate_cptp(&doubled);
    assert!((rep.tp_residual - 1.0).abs() < 1e-12 && !rep.passed());
    assert!(QuantumChannel::new(qubit("A"), qubit("A"), vec![identity(2), identity(2)]).is_err());
}

#[test]
fn complementary_channel_sees_the_environment() {
    let mut r = rng(5);
    for seed in 0..10 {
        let ch = random_channel(2, 2, 3, seed);
        let comp = complementary_channel(&ch).unwrap();
        let v = stinespring_dilation(&ch).unwrap();
        let s = random_density(&qubit("A"), &mut r).unwrap();
        let env = s.conjugate(&v.isometry, &["A"]).unwrap().partial_trace(&["E"]).unwrap();
        let direct = comp.apply(&s, &["A"]).unwrap();
        assert!(trace_distance(&env, &direct).unwrap() < 1e-12);
    }
    let full = complementary_channel(&QuantumChannel::identity(&qubit("A"))).unwrap();
    assert_eq!(full.output().total_dim(), 1);
}

#[test]
fn depolarizing_channel_has_four_canonical_kraus_operators() {
    let dep = QuantumChannel::fully_depolarizing(qubit("A"), qubit("B"));
    assert_eq!(dep.canonical().unwrap().num_kraus(), 4);
    assert_eq!(stinespring_dilation(&dep).unwrap().environment_dim(), 4);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn kraus_and_stinespring_agree(d_in in 1usize..=4, d_out in 1usize..=4, extra in 0usize..=3, seed: u64) {
        let n_kraus = d_in.div_ceil(d_out) + extra;
        let ch = random_channel(d_in, d_out, n_kraus, seed);
        let mut r = rng(seed ^ 0x5eed);
        let s = random_density(&layout(&[("A", d_in), ("R", 2)]), &mut r).unwrap();
        let direct = ch.apply(&s, &["A"]).unwrap();
        let v = stinespring_dilation(&ch).unwrap();
        let dilated = s.conjugate(&v.isometry, &["A"]).unwrap().trace_out(&["E"]).unwrap();
        prop_assert!(trace_distance(&direct, &dilated).unwrap() <= 1e-9);
        prop_assert!(v.isometry.is_isometry(1e-9));
        prop_assert!((direct.trace().re - 1.0).abs() <= 1e-10);
        prop_assert!(eig_hermitian(direct.matrix()).unwrap().values.iter().all(|&x| x >= -1e-10));
    }

    #[test]
    fn canonical_kraus_count_is_bounded(d_in in 1usize..=3, d_out in 1usize..=3, extra in 0usize..=12, seed: u64) {
        let n_kraus = d_in.div_ceil(d_out) + extra;
        let ch = random_channel(d_in, d_out, n_kraus, seed);
        let canon = ch.canonical().unwrap();
        prop_assert!(canon.num_kraus() <= d_in * d_out);
        prop_assert!(canon.num_kraus() <= n_kraus);
        prop_assert!(channel_distance(&ch, &canon).unwrap() <= 1e-9);
    }

    #[test]
    fn choi_round_trip(d_in in 1usize..=3, d_out in 1usize..=3, extra in 0usize..=4, seed: u64) {
        let ch = random_channel(d_in, d_out, d_in.div_ceil(d_out) + extra, seed);
        let j = to_choi(&ch);
        let back = from_choi(ch.input().clone(), ch.output().clone(), &j).unwrap();
        prop_assert!(max_abs(&(to_choi(&back) - j)) <= 1e-9);
    }

    #[test]
    fn composition_and_tensoring_stay_valid(seed: u64) {
        let mut r = rng(seed);
        let a = random_channel(2, 3, r.random_range(1..=3), seed);
        let b = QuantumChannel::random(layout(&[("B", 3)]), qubit("C"), r.random_range(2..=4), &mut r).unwrap();
        prop_assert!(validate_cptp(&a.then(&b).unwrap()).passed());
        let c = QuantumChannel::random(qubit("X"), qubit("Y"), r.random_range(1..=3), &mut r).unwrap();
        let t = a.tensor(&c).unwrap();
        prop_assert!(validate_cptp(&t).passed());
        let s = random_ket(&layout(&[("A", 2), ("X", 2)]), &mut r).unwrap().to_density();
        let joint = t.apply(&s, &["A", "X"]).unwrap();
        let staged = c.apply(&a.apply(&s, &["A"]).unwrap(), &["X"]).unwrap();
        prop_assert!(trace_distance(&joint, &staged).unwrap() <= 1e-9);
    }
}
