//! Explicit channel-simulation protocols and the decoupling bound.
//!
//! Alice holds `Aⁿ` of `ρ^{⊗n}` and `A₀` of a shared pure state
//! `|Φ⟩^{A₀B₀}`. She applies an encoder `𝒞: AⁿA₀ → M Kⁿ A₁` and sends `M`;
//! Bob applies a decoder `𝒟: M B₀ → Bⁿ B₁`. Both maps are dilated, with
//! environments `W_A` and `W_B` kept, so the final state
//! `|ξ_n⟩^{BⁿKⁿW_AW_BRⁿR′A₁B₁}` is pure and the mutual information between
//! `A₁B₁` and everything else can be read off exactly.

use rand::Rng;
use serde::Serialize;

use crate::channels::QuantumChannel;
use crate::entropics::{decoupling_delta, fidelity, ket_entropy};
use crate::error::{Error, Result};
use crate::tensor::random::haar_unitary;
use crate::tensor::{kron, CMatrix, DensityOperator, Ket, SystemLabel, SystemLayout, C64};

/// Largest total dimension of `|ξ_n⟩` that will be simulated.
pub const MAX_PROTOCOL_DIM: usize = 1 << 20;

/// Names of the protocol's own systems.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProtocolLabels {
    pub message: String,
    pub a0: String,
    pub b0: String,
    pub a1: String,
    pub b1: String,
}

impl Default for ProtocolLabels {
    fn default() -> Self {
        ProtocolLabels {
            message: "M".into(),
            a0: "A0".into(),
            b0: "B0".into(),
            a1: "A1".into(),
            b1: "B1".into(),
        }
    }
}

/// An `n`-copy simulation code. Channel inputs and outputs carry the source
/// and channel labels, with `#k` copy suffixes when `n > 1`.
#[derive(Clone, Debug)]
pub struct SimProtocol {
    pub n: usize,
    /// `AⁿA₀ → M Kⁿ A₁`.
    pub encoder: QuantumChannel,
    /// `M B₀ → Bⁿ B₁`.
    pub decoder: QuantumChannel,
    /// `|Φ⟩^{A₀B₀}`.
    pub shared_state: Ket,
    pub labels: ProtocolLabels,
}

/// Infidelities at or below this are roundoff and are reported as zero.
pub const FIDELITY_ROUNDOFF: f64 = 1e-12;

/// Decoupling check: `I(rest : A₁B₁)_ξ ≤ n·δ(n,ε)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DecouplingCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct ProtocolReport {
    pub n: usize,
    /// `F(σ^{⊗n} ⊗ Φ^{A₁B₁}, ξ^{BⁿKⁿRⁿA₁B₁})`.
    pub fidelity: f64,
    pub epsilon: f64,
    /// `log₂|M| / n`.
    pub qubit_rate: f64,
    /// `(S(A₀) − S(A₁)) / n`.
    pub entanglement_rate: f64,
    pub decoupling: DecouplingCheck,
    /// `|1 − ‖ξ‖²|` of the dilated final state.
    pub purity_defect: f64,
}

fn labels_of(layout: &SystemLayout) -> Vec<SystemLabel> {
    layout.labels().cloned().collect()
}

fn same_set(a: &[SystemLabel], b: &[SystemLabel]) -> bool {
    a.len() == b.len() && a.iter().all(|l| b.contains(l))
}

/// `layout` repeated `n` times with copy suffixes (unchanged for `n = 1`).
fn copy_layout(layout: &SystemLayout, n: usize) -> Result<SystemLayout> {
    if n == 1 {
        return Ok(layout.clone());
    }
    let factors = (1..=n)
        .flat_map(|c| layout.factors().iter().map(move |(l, d)| (l.with_copy_index(c), *d)))
        .collect();
    SystemLayout::from_factors(factors)
}

fn copy_labels(layout: &SystemLayout, n: usize) -> Result<Vec<SystemLabel>> {
    Ok(labels_of(&copy_layout(layout, n)?))
}

fn label(name: &str) -> Result<SystemLabel> {
    SystemLabel::new(name)
}

/// The state `|Φ⟩^{A₁B₁}` the protocol should leave behind: maximally
/// entangled with Schmidt rank `|A₁| = |B₁|`.
fn target_entanglement(labels: &ProtocolLabels, d: usize) -> Result<DensityOperator> {
    Ok(Ket::maximally_entangled(&labels.a1, &labels.b1, d)?.to_density())
}

impl SimProtocol {
    /// Checks that the encoder and decoder chain together and that their
    /// outputs together cover the `n`-copy channel outputs.
    pub fn validate(&self, channel: &QuantumChannel) -> Result<()> {
        if !(1..=2).contains(&self.n) {
            return Err(Error::OutOfRange(format!("n = {} outside 1..=2", self.n)));
        }
        let l = &self.labels;
        let shared = labels_of(self.shared_state.layout());
        if !same_set(&shared, &[label(&l.a0)?, label(&l.b0)?]) {
            return Err(Error::LayoutMismatch(format!(
                "shared state must live on {} and {}, got {}",
                l.a0,
                l.b0,
                self.shared_state.layout()
            )));
        }
        let inputs = copy_layout(channel.input(), self.n)?;
        let mut enc_in = labels_of(&inputs);
        enc_in.push(label(&l.a0)?);
        if !same_set(&labels_of(self.encoder.input()), &enc_in) {
            return Err(Error::LayoutMismatch(format!(
                "encoder input {} should consist of {enc_in:?}",
                self.encoder.input()
            )));
        }
        let dec_in = vec![label(&l.message)?, label(&l.b0)?];
        if !same_set(&labels_of(self.decoder.input()), &dec_in) {
            return Err(Error::LayoutMismatch(format!(
                "decoder input {} should consist of {dec_in:?}",
                self.decoder.input()
            )));
        }
        let m_enc = self.encoder.output().dim_of(&l.message)?;
        let m_dec = self.decoder.input().dim_of(&l.message)?;
        if m_enc != m_dec {
            return Err(Error::DimensionMismatch {
                expected: m_enc,
                got: m_dec,
            });
        }
        for (name, dim) in self.encoder.input().factors() {
            let expected = inputs
                .dim_of(name.as_str())
                .or_else(|_| self.shared_state.layout().dim_of(name.as_str()))?;
            if expected != *dim {
                return Err(Error::DimensionMismatch { expected, got: *dim });
            }
        }
        let b0 = self.shared_state.layout().dim_of(&l.b0)?;
        if self.decoder.input().dim_of(&l.b0)? != b0 {
            return Err(Error::DimensionMismatch {
                expected: b0,
                got: self.decoder.input().dim_of(&l.b0)?,
            });
        }
        let outputs = copy_labels(channel.output(), self.n)?;
        let mut produced: Vec<SystemLabel> = labels_of(self.encoder.output())
            .into_iter()
            .filter(|x| x.as_str() != l.message && x.as_str() != l.a1)
            .collect();
        produced.extend(
            labels_of(self.decoder.output())
                .into_iter()
                .filter(|x| x.as_str() != l.b1),
        );
        if !same_set(&produced, &outputs) {
            return Err(Error::LayoutMismatch(format!(
                "encoder K outputs and decoder B outputs {produced:?} should be the channel outputs {outputs:?}"
            )));
        }
        let (a1, b1) = (
            self.encoder.output().dim_of(&l.a1)?,
            self.decoder.output().dim_of(&l.b1)?,
        );
        if a1 != b1 {
            return Err(Error::DimensionMismatch { expected: a1, got: b1 });
        }
        Ok(())
    }
}

/// `I(rest : A₁B₁)` of a pure state against `n·δ(n, ε)`.
pub fn decoupling_check(xi: &Ket, a1: &str, b1: &str, n: usize, eps: f64) -> Result<DecouplingCheck> {
    let layout = xi.layout();
    let pair = [label(a1)?, label(b1)?];
    let rest: Vec<SystemLabel> = layout.labels().filter(|l| !pair.contains(l)).cloned().collect();
    // For a pure global state S(rest ∪ A₁B₁) = 0.
    let lhs = if rest.is_empty() {
        0.0
    } else {
        ket_entropy(xi, &rest)? + ket_entropy(xi, &pair)?
    };
    let rhs = decoupling_delta(n, eps, layout.dim_of(a1)?, layout.dim_of(b1)?)?;
    Ok(DecouplingCheck {
        lhs,
        rhs,
        holds: lhs <= rhs + 1e-9,
    })
}

/// The dilated final state `|ξ_n⟩` of a protocol.
pub fn final_state(protocol: &SimProtocol, source: &DensityOperator, channel: &QuantumChannel) -> Result<Ket> {
    protocol.validate(channel)?;
    let rho = if protocol.n == 1 {
        source.clone()
    } else {
        source.tensor_power(protocol.n)?
    };
    let purifier = fresh(&["R'"], rho.layout());
    let state = rho.purify(&purifier)?.tensor(&protocol.shared_state)?;
    let enc = protocol.encoder.stinespring(&fresh(&["W_A"], state.layout()))?;
    let dec = protocol.decoder.stinespring(&fresh(&["W_B"], state.layout()))?;
    let total = state.layout().total_dim() / protocol.encoder.input().total_dim() * enc.isometry.output().total_dim()
        / protocol.decoder.input().total_dim()
        * dec.isometry.output().total_dim();
    if total > MAX_PROTOCOL_DIM {
        return Err(Error::OutOfRange(format!(
            "final state dimension {total} exceeds {MAX_PROTOCOL_DIM}"
        )));
    }
    let nu = state.apply(&enc.isometry, &labels_of(protocol.encoder.input()))?;
    nu.apply(&dec.isometry, &labels_of(protocol.decoder.input()))
}

fn fresh(base: &[&str], layout: &SystemLayout) -> String {
    let mut name = base[0].to_string();
    while layout.contains(&name) {
        name.push('\'');
    }
    name
}

/// Simulates the protocol exactly and evaluates its figures of merit.
///
/// ```
/// use qrs_core::protocol::{run_protocol, ProtocolLabels, SimProtocol};
/// use qrs_core::{Ket, QuantumChannel, SystemLayout};
///
/// let l = |s: &[(&str, usize)]| SystemLayout::new(s.iter().copied()).unwrap();
/// let bell = Ket::maximally_entangled("A", "R", 2).unwrap().to_density();
/// let id = QuantumChannel::identity_between(l(&[("A", 2)]), l(&[("B", 2)])).unwrap();
/// let protocol = SimProtocol {
///     n: 1,
///     encoder: QuantumChannel::identity_between(
///         l(&[("A", 2), ("A0", 1)]),
///         l(&[("M", 2), ("A1", 1)]),
///     )
///     .unwrap(),
///     decoder: QuantumChannel::identity_between(
///         l(&[("M", 2), ("B0", 1)]),
///         l(&[("B", 2), ("B1", 1)]),
///     )
///     .unwrap(),
///     shared_state: Ket::maximally_entangled("A0", "B0", 1).unwrap(),
///     labels: ProtocolLabels::default(),
/// };
/// let report = run_protocol(&protocol, &bell, &id).unwrap();
/// assert!((report.fidelity - 1.0).abs() < 1e-12);
/// assert_eq!(report.qubit_rate, 1.0);
/// ```
pub fn run_protocol(
    protocol: &SimProtocol,
    source: &DensityOperator,
    channel: &QuantumChannel,
) -> Result<ProtocolReport> {
    let xi = final_state(protocol, source, channel)?;
    let l = &protocol.labels;
    let n = protocol.n;
    let (rho, nch) = if n == 1 {
        (source.clone(), channel.clone())
    } else {
        (source.tensor_power(n)?, channel.tensor_power(n)?)
    };
    let sigma = nch.apply(&rho, &labels_of(nch.input()))?;
    let d1 = xi.layout().dim_of(&l.a1)?;
    let target = sigma.tensor(&target_entanglement(l, d1)?)?;
    let order = labels_of(target.layout());
    let tau = xi.reduced(&order)?.permute(&order)?;
    let fid = fidelity(&target, &tau)?;
    let eps = match 1.0 - fid {
        d if d <= FIDELITY_ROUNDOFF => 0.0,
        d => d.min(1.0),
    };
    let norm = xi.amplitudes().norm_squared();
    let s_a0 = ket_entropy(&protocol.shared_state, &[l.a0.as_str()])?;
    let s_a1 = ket_entropy(&xi, &[l.a1.as_str()])?;
    let m = protocol.encoder.output().dim_of(&l.message)?;
    Ok(ProtocolReport {
        n,
        fidelity: fid,
        epsilon: eps,
        qubit_rate: (m as f64).log2() / n as f64,
        entanglement_rate: (s_a0 - s_a1) / n as f64,
        decoupling: decoupling_check(&xi, &l.a1, &l.b1, n, eps)?,
        purity_defect: (1.0 - norm).abs(),
    })
}

/// A single-copy qubit test case: source, channel and protocol.
#[derive(Clone, Debug)]
pub struct ProtocolInstance {
    pub source: DensityOperator,
    pub channel: QuantumChannel,
    pub protocol: SimProtocol,
}

fn c(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// Unitary `exp(−i t H)` for a random Hermitian `H` of unit operator norm.
fn near_identity<R: Rng + ?Sized>(d: usize, t: f64, rng: &mut R) -> Result<CMatrix> {
    let u = haar_unitary(d, rng);
    let phases: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
    let diag = CMatrix::from_fn(d, d, |i, j| {
        if i == j {
            C64::from_polar(1.0, -t * phases[i])
        } else {
            c(0.0)
        }
    });
    Ok(&u * diag * u.adjoint())
}

/// Mixes `channel` with probability `p` of a random channel on the same
/// layouts.
fn perturb<R: Rng + ?Sized>(channel: &QuantumChannel, p: f64, rng: &mut R) -> Result<QuantumChannel> {
    let noise = QuantumChannel::random(channel.input().clone(), channel.output().clone(), 2, rng)?;
    let kraus = channel
        .kraus()
        .iter()
        .map(|k| k * c((1.0 - p).sqrt()))
        .chain(noise.kraus().iter().map(|k| k * c(p.sqrt())))
        .collect();
    QuantumChannel::new(channel.input().clone(), channel.output().clone(), kraus)
}

/// Random single-copy qubit instance with a near-perfect protocol.
///
/// The ideal code runs the channel's dilation on Alice's side, sends `B` as
/// the message, keeps `K`, and passes one ebit from `A₀B₀` to `A₁B₁`
/// untouched, which reproduces `σ ⊗ Φ` exactly. Both maps are then rotated
/// by near-identity unitaries of angle up to `strength` and mixed with
/// random channels with weight up to `strength / 4`.
pub fn random_protocol<R: Rng + ?Sized>(strength: f64, rng: &mut R) -> Result<ProtocolInstance> {
    let l = |s: &[(&str, usize)]| SystemLayout::new(s.iter().copied());
    let source = crate::tensor::random::random_density(&l(&[("A", 2), ("R", 2)])?, rng)?;
    let channel = QuantumChannel::random(l(&[("A", 2)])?, l(&[("B", 2), ("K", 2)])?, 2, rng)?;
    // encoder: A A0 → B K A1 via the channel's Kraus operators tensored with
    // the identity A0 → A1, then relabel B as the message
    let id2 = CMatrix::identity(2, 2);
    let enc_kraus: Vec<CMatrix> = channel.kraus().iter().map(|k| kron(k, &id2)).collect();
    let enc_out = l(&[("M", 2), ("K", 2), ("A1", 2)])?;
    // the rotation acts on (K, A1), the last two output factors
    let u_enc = kron(
        &CMatrix::identity(2, 2),
        &near_identity(4, strength * rng.random::<f64>(), rng)?,
    );
    let enc_kraus: Vec<CMatrix> = enc_kraus.iter().map(|k| &u_enc * k).collect();
    let encoder = QuantumChannel::new(l(&[("A", 2), ("A0", 2)])?, enc_out, enc_kraus)?;
    let encoder = perturb(&encoder, 0.25 * strength * rng.random::<f64>(), rng)?;
    let u_dec = near_identity(4, strength * rng.random::<f64>(), rng)?;
    let decoder = QuantumChannel::unitary(l(&[("M", 2), ("B0", 2)])?, l(&[("B", 2), ("B1", 2)])?, u_dec)?;
    let decoder = perturb(&decoder, 0.25 * strength * rng.random::<f64>(), rng)?;
    Ok(ProtocolInstance {
        source,
        channel,
        protocol: SimProtocol {
            n: 1,
            encoder,
            decoder,
            shared_state: Ket::maximally_entangled("A0", "B0", 2)?,
            labels: ProtocolLabels::default(),
        },
    })
}
