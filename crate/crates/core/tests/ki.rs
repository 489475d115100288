mod common;

use common::{rng, scrambled_block_state, sorted_signature};
use qrs_core::entropics::trace_distance;
use qrs_core::ki::{ki_decompose, ki_entropies, ki_reconstruct, KiConfig};
use qrs_core::tensor::random::{haar_unitary, random_ket};
use qrs_core::tensor::{CMatrix, C64};
use qrs_core::{DensityOperator, Ket, LinearOperator, SystemLayout};

fn signature_of(dec: &qrs_core::ki::KIDecomposition) -> common::Signature {
    sorted_signature(dec.blocks.iter().map(|b| (b.dim_n, b.dim_q, b.probability)).collect())
}

fn same_signature(a: &common::Signature, b: &common::Signature, tol: f64) -> bool {
    a.len() == b.len()
        && a.iter()
            .zip(b)
            .all(|(x, y)| x.0 == y.0 && x.1 == y.1 && (x.2 - y.2).abs() <= tol)
}

#[test]
fn scrambled_block_states_round_trip() {
    let mut r = rng(11);
    for _ in 0..100 {
        let (state, expected) = scrambled_block_state(&mut r, 6);
        let dec = ki_decompose(&state, &["A"], &KiConfig::default()).unwrap();
        let back = ki_reconstruct(&dec).unwrap();
        let dist = trace_distance(&back, &state).unwrap();
        assert!(dist <= 1e-9, "reconstruction distance {dist:e}");
        assert!(
            same_signature(&signature_of(&dec), &expected, 1e-7),
            "{:?} vs {expected:?}",
            signature_of(&dec)
        );
    }
}

#[test]
fn signatures_survive_further_scrambling() {
    let mut r = rng(12);
    for _ in 0..30 {
        let (state, _) = scrambled_block_state(&mut r, 6);
        let da = state.layout().dim_of("A").unwrap();
        let u = haar_unitary(da, &mut r);
        let op = LinearOperator::new(
            SystemLayout::single("A", da).unwrap(),
            SystemLayout::single("A", da).unwrap(),
            u,
        )
        .unwrap();
        let moved = state.conjugate(&op, &["A"]).unwrap();
        let a = ki_decompose(&state, &["A"], &KiConfig::default()).unwrap();
        let b = ki_decompose(
            &moved,
            &["A"],
            &KiConfig {
                seed: 99,
                ..KiConfig::default()
            },
        )
        .unwrap();
        assert!(same_signature(&signature_of(&a), &signature_of(&b), 1e-7));
    }
}

#[test]
fn unitary_is_isometric() {
    let mut r = rng(13);
    let (state, _) = scrambled_block_state(&mut r, 6);
    let dec = ki_decompose(&state, &["A"], &KiConfig::default()).unwrap();
    assert!(dec.u_ki.isometry_defect() <= 1e-9);
    let total: f64 = dec.blocks.iter().map(|b| b.probability).sum();
    assert!((total - 1.0).abs() <= 1e-9);
}

/// A unitary acting on `N_c` that commutes with `ω_c` (phases in its
/// eigenbasis), conjugated back by `U_KI`, leaves the state unchanged.
#[test]
fn redundant_part_unitaries_preserve_state() {
    let mut r = rng(14);
    for _ in 0..20 {
        let (state, _) = scrambled_block_state(&mut r, 6);
        let dec = ki_decompose(&state, &["A"], &KiConfig::default()).unwrap();
        let da = dec.a_layout.total_dim();
        let mut offset = 0;
        for b in &dec.blocks {
            let eig = qrs_core::tensor::eig_hermitian(b.omega.matrix()).unwrap();
            let phases = CMatrix::from_fn(b.dim_n, b.dim_n, |i, j| {
                if i == j {
                    C64::from_polar(1.0, 0.7 + 1.3 * i as f64)
                } else {
                    C64::new(0.0, 0.0)
                }
            });
            let v = &eig.vectors * phases * eig.vectors.adjoint();
            let local = v.kronecker(&CMatrix::identity(b.dim_q, b.dim_q));
            let mut full = CMatrix::identity(da, da);
            let m = b.dim_n * b.dim_q;
            full.view_mut((offset, offset), (m, m)).copy_from(&local);
            offset += m;
            let u = dec.u_ki.matrix().adjoint() * full * dec.u_ki.matrix();
            let op = LinearOperator::new(dec.a_layout.clone(), dec.a_layout.clone(), u).unwrap();
            let moved = state.conjugate(&op, &["A"]).unwrap();
            assert!(trace_distance(&moved, &state).unwrap() <= 1e-9);
        }
    }
}

#[test]
fn entropies_of_standard_examples() {
    let cfg = KiConfig::default();
    let bell = Ket::maximally_entangled("A", "R", 2).unwrap().to_density();
    let s = ki_entropies(&ki_decompose(&bell, &["A"], &cfg).unwrap()).unwrap();
    assert!(s.s_c.abs() < 1e-9 && (s.s_cq - 1.0).abs() < 1e-9);

    let corr = DensityOperator::diagonal(common::layout(&[("A", 2), ("R", 2)]), &[0.5, 0.0, 0.0, 0.5]).unwrap();
    let s = ki_entropies(&ki_decompose(&corr, &["A"], &cfg).unwrap()).unwrap();
    assert!((s.s_c - 1.0).abs() < 1e-9 && (s.s_cq - 1.0).abs() < 1e-9);

    let prod = DensityOperator::diagonal(common::layout(&[("A", 2), ("R", 2)]), &[0.12, 0.18, 0.28, 0.42]).unwrap();
    let s = ki_entropies(&ki_decompose(&prod, &["A"], &cfg).unwrap()).unwrap();
    assert!(s.s_c.abs() < 1e-9 && s.s_cq.abs() < 1e-9);
}

#[test]
fn pure_states_have_a_single_quantum_block() {
    let mut r = rng(15);
    for da in 2..=4 {
        let ket = random_ket(&common::layout(&[("A", da), ("R", da)]), &mut r).unwrap();
        let dec = ki_decompose(&ket.to_density(), &["A"], &KiConfig::default()).unwrap();
        assert_eq!(dec.blocks.len(), 1);
        assert_eq!((dec.blocks[0].dim_n, dec.blocks[0].dim_q), (1, da));
        let back = ki_reconstruct(&dec).unwrap();
        assert!(trace_distance(&back, &ket.to_density()).unwrap() <= 1e-9);
    }
}

#[test]
fn a_factors_may_sit_anywhere_in_the_layout() {
    let corr = DensityOperator::diagonal(common::layout(&[("R", 2), ("A", 2)]), &[0.5, 0.0, 0.0, 0.5]).unwrap();
    let dec = ki_decompose(&corr, &["A"], &KiConfig::default()).unwrap();
    assert_eq!(dec.blocks.len(), 2);
    let back = ki_reconstruct(&dec).unwrap();
    assert_eq!(back.layout(), corr.layout());
    assert!(trace_distance(&back, &corr).unwrap() < 1e-12);
}
