//! The acceptance criteria as executable checks.
//!
//! Every check runs at its stated tolerance. `Scale::Quick` shrinks instance
//! counts (never tolerances) so `qrs selftest --quick` finishes in seconds.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use qrs_core::channels::QuantumChannel;
use qrs_core::entropics::{
    afw_bound, conditional_entropy, conditional_mutual_information, fidelity, mutual_information, trace_distance,
    von_neumann_entropy,
};
use qrs_core::ki::{ki_decompose, ki_reconstruct, KIDecomposition, KiConfig};
use qrs_core::protocol::{random_protocol, run_protocol};
use qrs_core::rates::{
    assisted_point_value, assisted_rate, entanglement_of_purification, flag_mixture, gradient_check,
    oracle_identity_assisted, oracle_identity_unassisted, tensor_points, tensor_points_merged, unassisted_rate,
    CheckedObjective, OptimizerConfig, RateQuery, RateResult,
};
use qrs_core::tensor::json::{channel_to_string, state_to_string};
use qrs_core::tensor::random::{haar_unitary, random_density, random_density_with_rank, random_ket};
use qrs_core::tensor::{CMatrix, C64};
use qrs_core::{DensityOperator, Ket, LinearOperator, Result, SystemLayout};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scale {
    Full,
    Quick,
}

impl Scale {
    fn count(self, full: usize, quick: usize) -> usize {
        match self {
            Scale::Full => full,
            Scale::Quick => quick,
        }
    }
}

/// Outcome of one criterion.
#[derive(Clone, Debug, Serialize)]
pub struct Outcome {
    pub id: u8,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    #[serde(skip)]
    pub seconds: f64,
}

impl Outcome {
    pub fn line(&self) -> String {
        format!(
            "criterion {:>2} {:<34} {} ({:.1} s) {}",
            self.id,
            self.name,
            if self.passed { "PASS" } else { "FAIL" },
            self.seconds,
            self.detail
        )
    }
}

pub const CRITERIA: [(u8, &str); 12] = [
    (1, "identity channel, assisted"),
    (2, "identity channel, unassisted"),
    (3, "fully depolarizing channel"),
    (4, "pure-input collapse"),
    (5, "entanglement of purification"),
    (6, "Koashi-Imoto round trip"),
    (7, "decoupling inequality"),
    (8, "flag construction"),
    (9, "superadditivity"),
    (10, "gradient correctness"),
    (11, "entropic property suite"),
    (12, "CLI determinism"),
];

/// Runs criterion `id`. `binary` is the `qrs` executable used by the
/// determinism check.
pub fn run(id: u8, scale: Scale, binary: &Path) -> Outcome {
    let name = CRITERIA
        .iter()
        .find(|(i, _)| *i == id)
        .map(|(_, n)| *n)
        .unwrap_or("unknown");
    let started = Instant::now();
    let result = match id {
        1 => identity_assisted(),
        2 => identity_unassisted(),
        3 => depolarizing(scale),
        4 => pure_input_collapse(scale),
        5 => purification(),
        6 => ki_round_trip(scale),
        7 => decoupling(scale),
        8 => flag_construction(scale),
        9 => superadditivity(scale),
        10 => gradients(scale),
        11 => entropic_suite(scale),
        12 => determinism(binary),
        _ => Ok(Check::fail(format!("no criterion {id}"))),
    };
    let check = result.unwrap_or_else(|e| Check::fail(format!("error: {e}")));
    Outcome {
        id,
        name,
        passed: check.passed,
        detail: check.detail,
        seconds: started.elapsed().as_secs_f64(),
    }
}

pub fn run_all(scale: Scale, binary: &Path) -> Vec<Outcome> {
    CRITERIA.iter().map(|(id, _)| run(*id, scale, binary)).collect()
}

struct Check {
    passed: bool,
    detail: String,
}

impl Check {
    fn new(passed: bool, detail: String) -> Self {
        Check { passed, detail }
    }

    fn fail(detail: String) -> Self {
        Check::new(false, detail)
    }
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn layout(factors: &[(&str, usize)]) -> SystemLayout {
    SystemLayout::new(factors.iter().copied()).expect("fixed layouts are valid")
}

fn bell(a: &str, b: &str) -> DensityOperator {
    Ket::maximally_entangled(a, b, 2).expect("qubit pair").to_density()
}

fn correlated_bit(a: &str, b: &str) -> DensityOperator {
    DensityOperator::diagonal(layout(&[(a, 2), (b, 2)]), &[0.5, 0.0, 0.0, 0.5]).expect("diagonal state")
}

fn identity_channel() -> QuantumChannel {
    QuantumChannel::identity_between(layout(&[("A", 2)]), layout(&[("B", 2)])).expect("qubit identity")
}

fn depolarizing_channel() -> QuantumChannel {
    QuantumChannel::fully_depolarizing(layout(&[("A", 2)]), layout(&[("B", 2)]))
}

fn timed<T>(f: impl FnOnce() -> Result<T>) -> Result<(T, f64)> {
    let t = Instant::now();
    let v = f()?;
    Ok((v, t.elapsed().as_secs_f64()))
}

fn rate(
    kind: fn(&RateQuery) -> Result<RateResult>,
    source: DensityOperator,
    channel: QuantumChannel,
    gamma: f64,
) -> Result<(RateResult, f64)> {
    let q = RateQuery::new(source, channel, gamma)?;
    timed(|| kind(&q))
}

fn identity_oracle_check(
    kind: fn(&RateQuery) -> Result<RateResult>,
    oracle: fn(&DensityOperator) -> Result<f64>,
    cases: [(&str, DensityOperator, f64); 2],
) -> Result<Check> {
    let mut ok = true;
    let mut parts = Vec::new();
    for (name, state, expected) in cases {
        let exact = oracle(&state)?;
        let (r, secs) = rate(kind, state, identity_channel(), 0.0)?;
        ok &= (r.value - expected).abs() <= 0.01 && (r.value - exact).abs() <= 0.01 && secs <= 60.0 && !r.fallback;
        parts.push(format!("{name} {:.6} (oracle {exact:.6}, {secs:.1} s)", r.value));
    }
    Ok(Check::new(ok, parts.join(", ")))
}

fn identity_assisted() -> Result<Check> {
    identity_oracle_check(
        assisted_rate,
        |s| oracle_identity_assisted(s, &["A"]),
        [
            ("Bell", bell("A", "R"), 1.0),
            ("correlated bit", correlated_bit("A", "R"), 0.5),
        ],
    )
}

fn identity_unassisted() -> Result<Check> {
    identity_oracle_check(
        unassisted_rate,
        |s| oracle_identity_unassisted(s, &["A"]),
        [
            ("Bell", bell("A", "R"), 1.0),
            ("correlated bit", correlated_bit("A", "R"), 1.0),
        ],
    )
}

fn depolarizing(scale: Scale) -> Result<Check> {
    let mut r = rng(3);
    let mut inputs = vec![bell("A", "R"), correlated_bit("A", "R")];
    for _ in 0..scale.count(2, 0) {
        inputs.push(random_density(&layout(&[("A", 2), ("R", 2)]), &mut r)?);
    }
    let mut worst = 0.0f64;
    let mut slowest = 0.0f64;
    for s in &inputs {
        for kind in [assisted_rate as fn(&RateQuery) -> Result<RateResult>, unassisted_rate] {
            let (res, secs) = rate(kind, s.clone(), depolarizing_channel(), 0.0)?;
            worst = worst.max(res.value);
            slowest = slowest.max(secs);
        }
    }
    Ok(Check::new(
        worst <= 0.01 && slowest <= 60.0,
        format!(
            "{} inputs, largest rate {worst:.2e}, slowest run {slowest:.1} s",
            inputs.len()
        ),
    ))
}

fn pure_input_collapse(scale: Scale) -> Result<Check> {
    let mut r = rng(4);
    let mut worst = 0.0f64;
    let n = scale.count(20, 3);
    for _ in 0..n {
        let source = random_ket(&layout(&[("A", 2), ("R", 2)]), &mut r)?.to_density();
        let channel = QuantumChannel::random(
            layout(&[("A", 2)]),
            layout(&[("B", 2), ("K", 2)]),
            r.random_range(1..=2),
            &mut r,
        )?;
        let sigma = channel.apply(&source, &["A"])?;
        let expected = 0.5 * mutual_information(&sigma, &["B"], &["R"])?;
        let res = assisted_rate(&RateQuery::new(source, channel, 0.0)?)?;
        worst = worst.max((res.value - expected).abs());
    }
    Ok(Check::new(
        worst <= 1e-4,
        format!("{n} instances, largest gap {worst:.2e}"),
    ))
}

/// `min S(XE′)` over random channels on the purifier with output dimension
/// up to 4, `samples` draws in total.
fn brute_force_purification(state: &DensityOperator, x: &str, samples: usize, seed: u64) -> Result<f64> {
    let ket = state.purify("Z")?;
    let rho = ket.to_density();
    let d_z = ket.layout().dim_of("Z")?;
    let mut r = rng(seed);
    let mut best = f64::INFINITY;
    for i in 0..samples {
        let d = 1 + i % 4;
        let min_kraus = d_z.div_ceil(d);
        let channel = QuantumChannel::random(
            layout(&[("Z", d_z)]),
            layout(&[("E", d)]),
            r.random_range(min_kraus..=min_kraus + 3),
            &mut r,
        )?;
        let out = channel.apply(&rho, &["Z"])?;
        best = best.min(von_neumann_entropy(&out, &[x, "E"])?);
    }
    Ok(best)
}

fn purification() -> Result<Check> {
    let state = correlated_bit("X", "Y");
    let found = entanglement_of_purification(&state, &["X"], 4, &OptimizerConfig::default())?;
    let oracle = brute_force_purification(&state, "X", 10_000, 5)?;
    Ok(Check::new(
        (found.value - 1.0).abs() <= 0.01 && (found.value - oracle).abs() <= 0.02,
        format!("optimizer {:.6}, brute force {oracle:.6}", found.value),
    ))
}

type Signature = Vec<(usize, usize, f64)>;

fn sorted(mut sig: Signature) -> Signature {
    sig.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)).then(a.2.total_cmp(&b.2)));
    sig
}

fn signature_of(dec: &KIDecomposition) -> Signature {
    sorted(dec.blocks.iter().map(|b| (b.dim_n, b.dim_q, b.probability)).collect())
}

fn same_signature(a: &Signature, b: &Signature) -> bool {
    a.len() == b.len()
        && a.iter()
            .zip(b)
            .all(|(x, y)| x.0 == y.0 && x.1 == y.1 && (x.2 - y.2).abs() <= 1e-7)
}

/// `U (⊕_c p_c ω_c ⊗ ρ_c^{QR} ⊕ 0) U†` with `|A| ≤ 6`, `|R| = 2`.
fn scrambled_block_state(r: &mut ChaCha8Rng) -> Result<(DensityOperator, Signature)> {
    let dr = 2;
    loop {
        let n_blocks = r.random_range(1..=3);
        let dims: Vec<(usize, usize)> = (0..n_blocks)
            .map(|_| (r.random_range(1..=2), r.random_range(1..=2)))
            .collect();
        let used: usize = dims.iter().map(|(n, q)| n * q).sum();
        if used > 6 {
            continue;
        }
        let da = r.random_range(used..=6);
        let weights: Vec<f64> = (0..n_blocks).map(|_| r.random_range(0.2..1.0)).collect();
        let total: f64 = weights.iter().sum();
        let mut m = CMatrix::zeros(da * dr, da * dr);
        let mut offset = 0;
        let mut sig = Vec::new();
        for (&(n, q), w) in dims.iter().zip(&weights) {
            let p = w / total;
            let omega = random_density(&layout(&[("N", n)]), r)?;
            let rho = random_density(&layout(&[("Q", q), ("R", dr)]), r)?;
            let local = omega.matrix().kronecker(rho.matrix()) * C64::new(p, 0.0);
            let size = n * q * dr;
            m.view_mut((offset * dr, offset * dr), (size, size)).copy_from(&local);
            offset += n * q;
            sig.push((n, q, p));
        }
        let u = haar_unitary(da, r).kronecker(&CMatrix::identity(dr, dr));
        let state = DensityOperator::from_unnormalized(layout(&[("A", da), ("R", dr)]), &u * m * u.adjoint())?;
        return Ok((state, sorted(sig)));
    }
}

fn ki_round_trip(scale: Scale) -> Result<Check> {
    let mut r = rng(6);
    let n = scale.count(100, 10);
    let mut worst = 0.0f64;
    let mut mismatches = 0;
    for _ in 0..n {
        let (state, expected) = scrambled_block_state(&mut r)?;
        let dec = ki_decompose(&state, &["A"], &KiConfig::default())?;
        worst = worst.max(trace_distance(&ki_reconstruct(&dec)?, &state)?);
        let da = state.layout().dim_of("A")?;
        let a = layout(&[("A", da)]);
        let u = LinearOperator::new(a.clone(), a, haar_unitary(da, &mut r))?;
        let moved = ki_decompose(&state.conjugate(&u, &["A"])?, &["A"], &KiConfig::default())?;
        if !same_signature(&signature_of(&dec), &expected) || !same_signature(&signature_of(&moved), &expected) {
            mismatches += 1;
        }
    }
    Ok(Check::new(
        worst <= 1e-9 && mismatches == 0,
        format!("{n} states, worst reconstruction {worst:.2e}, signature mismatches {mismatches}"),
    ))
}

fn decoupling(scale: Scale) -> Result<Check> {
    let want = scale.count(100, 10);
    let started = Instant::now();
    let (mut tested, mut violations, mut seed) = (0, 0, 0u64);
    let mut tightest = f64::INFINITY;
    while tested < want && seed < 10 * want as u64 {
        let inst = random_protocol(0.3, &mut rng(1000 + seed))?;
        seed += 1;
        let rep = run_protocol(&inst.protocol, &inst.source, &inst.channel)?;
        if rep.fidelity < 0.9 {
            continue;
        }
        tested += 1;
        if !rep.decoupling.holds {
            violations += 1;
        }
        tightest = tightest.min(rep.decoupling.rhs - rep.decoupling.lhs);
    }
    let secs = started.elapsed().as_secs_f64();
    Ok(Check::new(
        tested == want && violations == 0 && secs <= 120.0,
        format!("{tested} protocols with F >= 0.9, violations {violations}, smallest margin {tightest:.3e}"),
    ))
}

/// Random qubit source on `A ⊗ R` and random channel `A → B`.
fn qubit_instance(r: &mut ChaCha8Rng) -> Result<(DensityOperator, QuantumChannel)> {
    let rank = r.random_range(1..=4);
    let source = random_density_with_rank(&layout(&[("A", 2), ("R", 2)]), rank, r)?;
    let channel = QuantumChannel::random(layout(&[("A", 2)]), layout(&[("B", 2)]), r.random_range(1..=2), r)?;
    Ok((source, channel))
}

fn flag_construction(scale: Scale) -> Result<Check> {
    let mut r = rng(8);
    let n = scale.count(10, 2);
    let (g1, g2, t) = (0.02, 0.10, 0.5);
    let mixed = t * g1 + (1.0 - t) * g2;
    let (mut worst_gap, mut worst_slack) = (0.0f64, f64::INFINITY);
    for _ in 0..n {
        let (source, channel) = qubit_instance(&mut r)?;
        let one = assisted_rate(&RateQuery::new(source.clone(), channel.clone(), g1)?)?;
        let two = assisted_rate(&RateQuery::new(source.clone(), channel.clone(), g2)?)?;
        let u0 = flag_mixture(&one.isometries[0], &two.isometries[0], t)?;
        let q = RateQuery::new(source, channel, mixed)?;
        let point = assisted_point_value(&q, &u0, &["F"])?;
        worst_gap = worst_gap.max((point.value - (t * one.value + (1.0 - t) * two.value)).abs());
        worst_slack = worst_slack.min(point.fidelity - (1.0 - mixed));
    }
    Ok(Check::new(
        worst_gap <= 1e-8 && worst_slack >= -1e-9,
        format!("{n} instances, largest objective gap {worst_gap:.2e}, smallest fidelity slack {worst_slack:.2e}"),
    ))
}

fn relabeled(
    source: &DensityOperator,
    channel: &QuantumChannel,
    k: usize,
) -> Result<(DensityOperator, QuantumChannel)> {
    let (a, rr, b) = (format!("A{k}"), format!("R{k}"), format!("B{k}"));
    let s = source.relabel("A", &a)?.relabel("R", &rr)?;
    let c = channel.with_layouts(layout(&[(&a, 2)]), layout(&[(&b, 2)]))?;
    Ok((s, c))
}

fn superadditivity(scale: Scale) -> Result<Check> {
    let mut r = rng(9);
    let n = scale.count(10, 1);
    let gamma = 0.05;
    let (mut worst_gap, mut worst_margin) = (0.0f64, f64::INFINITY);
    for _ in 0..n {
        let mut parts = Vec::new();
        for k in 1..=2 {
            let source = random_ket(&layout(&[("A", 2), ("R", 2)]), &mut r)?.to_density();
            let channel = QuantumChannel::random(layout(&[("A", 2)]), layout(&[("B", 2)]), 2, &mut r)?;
            let (s, c) = relabeled(&source, &channel, k)?;
            let res = assisted_rate(&RateQuery::new(s.clone(), c.clone(), gamma)?)?;
            parts.push((s, c, res));
        }
        let (s1, c1, a1) = &parts[0];
        let (s2, c2, a2) = &parts[1];
        let point = tensor_points(&a1.isometries[0], &a2.isometries[0])?;
        let mut q = RateQuery::new(s1.tensor(s2)?, c1.tensor(c2)?, gamma)?.with_bob(&["B1", "B2"])?;
        let pv = assisted_point_value(&q, &point, &[] as &[&str])?;
        worst_gap = worst_gap.max((pv.value - (a1.value + a2.value)).abs());
        q.warm_start = Some(tensor_points_merged(&a1.isometries[0], &a2.isometries[0])?);
        let joint = assisted_rate(&q)?;
        worst_margin = worst_margin.min(joint.value - (a1.value + a2.value));
    }
    Ok(Check::new(
        worst_gap <= 1e-8 && worst_margin >= -0.05,
        format!("{n} pairs, tensor point gap {worst_gap:.2e}, smallest a(ρ₁⊗ρ₂) − a(ρ₁) − a(ρ₂) = {worst_margin:.4}"),
    ))
}

fn gradients(scale: Scale) -> Result<Check> {
    let mut r = rng(10);
    let n = scale.count(20, 4);
    let mut worst = [0.0f64; 2];
    for seed in 0..n as u64 {
        let (source, channel) = qubit_instance(&mut r)?;
        let q = RateQuery::new(source, channel, 0.05)?;
        worst[0] = worst[0].max(gradient_check(&q, CheckedObjective::Assisted, seed)?);
        worst[1] = worst[1].max(gradient_check(&q, CheckedObjective::Unassisted, seed)?);
    }
    Ok(Check::new(
        worst[0] <= 1e-5 && worst[1] <= 1e-5,
        format!(
            "{n} points each, assisted {:.2e}, unassisted {:.2e}",
            worst[0], worst[1]
        ),
    ))
}

/// `(1−t)ρ + t ξ` for a random `ξ`.
fn nearby(rho: &DensityOperator, t: f64, r: &mut ChaCha8Rng) -> Result<DensityOperator> {
    let xi = random_density(rho.layout(), r)?;
    let m = rho.matrix() * C64::new(1.0 - t, 0.0) + xi.matrix() * C64::new(t, 0.0);
    DensityOperator::new(rho.layout().clone(), m)
}

fn random_bipartite(r: &mut ChaCha8Rng) -> Result<DensityOperator> {
    let (da, db) = (r.random_range(1..=3), r.random_range(1..=2));
    let rank = r.random_range(1..=da * db);
    random_density_with_rank(&layout(&[("A", da), ("B", db)]), rank, r)
}

fn entropic_suite(scale: Scale) -> Result<Check> {
    let started = Instant::now();
    let n = scale.count(1000, 100);
    let half = scale.count(500, 50);
    let mut r = rng(11);
    let mut failures: Vec<&str> = Vec::new();
    let mut note = |ok: bool, name: &'static str| {
        if !ok && !failures.contains(&name) {
            failures.push(name);
        }
    };
    for _ in 0..n {
        let s = random_bipartite(&mut r)?;
        let (a, b, ab) = (
            von_neumann_entropy(&s, &["A"])?,
            von_neumann_entropy(&s, &["B"])?,
            von_neumann_entropy(&s, &["A", "B"])?,
        );
        note(ab <= a + b + 1e-9, "subadditivity");
        note((a - b).abs() <= ab + 1e-9, "Araki-Lieb");

        let d = r.random_range(1..=2);
        let t = random_density_with_rank(
            &layout(&[("A", 2), ("B", d), ("C", 2)]),
            r.random_range(1..=4 * d),
            &mut r,
        )?;
        note(
            conditional_mutual_information(&t, &["A"], &["B"], &["C"])? >= -1e-9,
            "strong subadditivity",
        );

        let other = random_density_with_rank(s.layout(), r.random_range(1..=s.dim()), &mut r)?;
        let f = fidelity(&s, &other)?;
        let dist = trace_distance(&s, &other)?;
        note(
            1.0 - f <= dist + 1e-9 && dist <= (1.0 - f * f).max(0.0).sqrt() + 1e-9,
            "Fuchs-van de Graaf",
        );
    }
    for _ in 0..half {
        let s = random_density(
            &layout(&[("A", r.random_range(1..=3)), ("B", r.random_range(1..=2))]),
            &mut r,
        )?;
        let t = nearby(&s, r.random_range(0.0..0.3), &mut r)?;
        let eps = trace_distance(&s, &t)?;
        let gap = (conditional_entropy(&s, &["A"], &["B"])? - conditional_entropy(&t, &["A"], &["B"])?).abs();
        note(gap <= afw_bound(eps, s.layout().dim_of("A")?)? + 1e-9, "AFW continuity");

        let one = random_ket(&layout(&[("A1", 2), ("R1", 2)]), &mut r)?.to_density();
        let two = random_ket(&layout(&[("A2", 2), ("R2", 2)]), &mut r)?.to_density();
        let joint = one.tensor(&two)?.permute(&["A1", "A2", "R1", "R2"])?;
        let ch = QuantumChannel::random(
            layout(&[("A1", 2), ("A2", 2)]),
            layout(&[("B1", 2), ("B2", 2)]),
            r.random_range(1..=4),
            &mut r,
        )?;
        let w = ch.apply(&joint, &["A1", "A2"])?;
        let whole = mutual_information(&w, &["B1", "B2"], &["R1", "R2"])?;
        let parts = mutual_information(&w, &["B1"], &["R1"])? + mutual_information(&w, &["B2"], &["R2"])?;
        note(whole >= parts - 1e-9, "superadditivity of I");
    }
    let secs = started.elapsed().as_secs_f64();
    let ok = failures.is_empty() && secs <= 60.0;
    let detail = if failures.is_empty() {
        format!("{n} instances for four properties, {half} for two")
    } else {
        format!("failed: {}", failures.join(", "))
    };
    Ok(Check::new(ok, detail))
}

fn scratch_dir() -> std::io::Result<PathBuf> {
    let dir = std::env::temp_dir().join(format!("qrs-determinism-{}", std::process::id()));
    std::fs::create_dir_all(&dir)?;
    Ok(dir)
}

fn determinism(binary: &Path) -> Result<Check> {
    let io = |e: std::io::Error| qrs_core::Error::Protocol(format!("determinism check: {e}"));
    let dir = scratch_dir().map_err(io)?;
    let state = dir.join("state.json");
    let channel = dir.join("channel.json");
    let mut r = rng(12);
    let (source, ch) = qubit_instance(&mut r)?;
    std::fs::write(&state, state_to_string(&source)).map_err(io)?;
    std::fs::write(&channel, channel_to_string(&ch)).map_err(io)?;
    let (s, c) = (state.display().to_string(), channel.display().to_string());
    let invocations: Vec<Vec<&str>> = vec![
        vec![
            "rate",
            "assisted",
            "--state",
            &s,
            "--channel",
            &c,
            "--gamma",
            "0.05",
            "--restarts",
            "4",
            "--seed",
            "7",
        ],
        vec![
            "rate",
            "unassisted",
            "--state",
            &s,
            "--channel",
            &c,
            "--gamma",
            "0.05",
            "--restarts",
            "2",
            "--seed",
            "7",
        ],
        vec!["eop", "--state", &s, "--x", "A", "--restarts", "4", "--seed", "3"],
        vec!["ki", "--state", &s],
        vec!["verify", "decoupling", "--seed", "5", "--instances", "5"],
    ];
    let mut differing = Vec::new();
    for args in &invocations {
        let outputs: Vec<Vec<u8>> = (0..2)
            .map(|_| Command::new(binary).args(args).output().map(|o| o.stdout))
            .collect::<std::io::Result<_>>()
            .map_err(io)?;
        if outputs[0] != outputs[1] || outputs[0].is_empty() {
            differing.push(format!("{} {}", args[0], args[1]));
        }
    }
    let _ = std::fs::remove_dir_all(&dir);
    let ok = differing.is_empty();
    let detail = if ok {
        format!("{} commands, each run twice, identical bytes", invocations.len())
    } else {
        format!("differing or empty output: {}", differing.join("; "))
    };
    Ok(Check::new(ok, detail))
}
