//! Problem instances and the objective engines evaluated on them.
//!
//! Every engine works on the purification `|ρ⟩^{ARR′}` stored as a
//! `|A| × |R||R′|` matrix `Ψ`. A Stinespring isometry `V: A → BKE` gives the
//! global pure state `Φ = VΨ`, a flat vector over the factors
//! `[B, K, E, R, R′]`. Unassisted and purification problems apply a second
//! isometry `W: E → E′E″` to `Φ`; its output is kept in the staged order
//! `[E′, E″, rest]`.

use crate::channels::QuantumChannel;
use crate::error::{Error, Result};
use crate::tensor::{axis_permutation, eigh, CMatrix, DensityOperator, Ket, SystemLabel, SystemLayout, C64, ZERO};

use super::marginal::{entropy_term, fidelity_term, FidelityTarget, Split};
use super::stiefel::{Evaluation, Objective};

/// Largest flat pure-state dimension an engine will handle.
const MAX_ENGINE_DIM: usize = 1 << 21;

/// Picks `base`, or `base` followed by enough primes to be unused.
pub(crate) fn fresh_label(base: &str, taken: &[&SystemLayout]) -> String {
    let mut name = base.to_string();
    while taken.iter().any(|l| l.contains(&name)) {
        name.push('\'');
    }
    name
}

/// Reorders the output factors of every Kraus operator.
pub(crate) fn permute_channel_output(channel: &QuantumChannel, order: &[SystemLabel]) -> Result<QuantumChannel> {
    let out = channel.output();
    let pos = out.positions(order)?;
    if pos.len() != out.len() {
        return Err(Error::NotPermutation(format!("{order:?} for {out}")));
    }
    let src = axis_permutation(&out.dims(), &pos);
    let kraus = channel
        .kraus()
        .iter()
        .map(|k| CMatrix::from_fn(k.nrows(), k.ncols(), |r, c| k[(src[r], c)]))
        .collect();
    QuantumChannel::new(channel.input().clone(), out.pick(&pos), kraus)
}

/// Matrix of a Stinespring isometry with the environment (last factor)
/// zero-padded from `from` to `to` dimensions.
pub(crate) fn pad_environment(v: &CMatrix, from: usize, to: usize) -> CMatrix {
    let d_out = v.nrows() / from;
    let mut padded = CMatrix::zeros(d_out * to, v.ncols());
    for o in 0..d_out {
        for e in 0..from {
            for c in 0..v.ncols() {
                padded[(o * to + e, c)] = v[(o * from + e, c)];
            }
        }
    }
    padded
}

/// A rate problem expanded to `m` copies and purified.
#[derive(Clone, Debug)]
pub(crate) struct Instance {
    /// `ρ^{⊗m}` over the input and reference factors.
    pub source: DensityOperator,
    /// `𝒩^{⊗m}` with output factors reordered to Bob's first.
    pub channel: QuantumChannel,
    pub a_labels: Vec<SystemLabel>,
    pub r_labels: Vec<SystemLabel>,
    pub bob: Vec<SystemLabel>,
    pub purifier: SystemLabel,
    pub copies: usize,
    /// `|ρ⟩` over `A ++ R ++ R′`.
    pub ket: Ket,
    pub psi: CMatrix,
    pub d_a: usize,
    pub d_b: usize,
    pub d_k: usize,
    pub d_r: usize,
    pub d_rp: usize,
    /// `S(A)_ρ` in bits.
    pub s_a: f64,
}

impl Instance {
    pub fn new(source: &DensityOperator, channel: &QuantumChannel, bob: &[SystemLabel], copies: usize) -> Result<Self> {
        if copies == 0 {
            return Err(Error::OutOfRange("copies must be at least 1".into()));
        }
        for (label, dim) in channel.input().factors() {
            match source.layout().dim_of(label.as_str()) {
                Ok(d) if d == *dim => {}
                Ok(d) => return Err(Error::DimensionMismatch { expected: *dim, got: d }),
                Err(_) => {
                    return Err(Error::LayoutMismatch(format!(
                        "channel input {label} is not a factor of the source {}",
                        source.layout()
                    )))
                }
            }
        }
        let bob: Vec<SystemLabel> = if bob.is_empty() {
            let first = channel
                .output()
                .factors()
                .first()
                .ok_or_else(|| Error::LayoutMismatch("channel has no output factors".into()))?;
            vec![first.0.clone()]
        } else {
            bob.to_vec()
        };
        channel.output().positions(&bob)?;
        let (source, channel, bob) = if copies == 1 {
            (source.clone(), channel.clone(), bob)
        } else {
            let bob = (1..=copies)
                .flat_map(|c| bob.iter().map(move |b| b.with_copy_index(c)))
                .collect();
            (source.tensor_power(copies)?, channel.tensor_power(copies)?, bob)
        };
        let kay: Vec<SystemLabel> = channel
            .output()
            .labels()
            .filter(|l| !bob.contains(l))
            .cloned()
            .collect();
        let order: Vec<SystemLabel> = bob.iter().chain(&kay).cloned().collect();
        let channel = permute_channel_output(&channel, &order)?;
        let a_labels: Vec<SystemLabel> = channel.input().labels().cloned().collect();
        let r_labels: Vec<SystemLabel> = source
            .layout()
            .labels()
            .filter(|l| !a_labels.contains(l))
            .cloned()
            .collect();
        for label in channel.output().labels() {
            if r_labels.contains(label) {
                return Err(Error::DuplicateLabel(format!(
                    "channel output {label} collides with a reference factor"
                )));
            }
        }
        let purifier = fresh_label("R'", &[source.layout(), channel.output()]);
        let ordered: Vec<SystemLabel> = a_labels.iter().chain(&r_labels).cloned().collect();
        let ket = source.permute(&ordered)?.purify(&purifier)?;
        let d_a = channel.input().total_dim();
        let (psi, _) = ket.split(&a_labels)?;
        let out = channel.output();
        let d_b: usize = bob.iter().map(|b| out.dim_of(b.as_str()).unwrap()).product();
        let d_k = out.total_dim() / d_b;
        let d_r = source.dim() / d_a;
        let d_rp = psi.ncols() / d_r;
        let s_a = crate::entropics::shannon_entropy(
            &eigh(&(&psi * psi.adjoint()))?
                .values
                .iter()
                .map(|v| v.max(0.0))
                .collect::<Vec<_>>(),
        );
        Ok(Instance {
            source,
            channel,
            a_labels,
            r_labels,
            bob,
            purifier: SystemLabel::new(purifier)?,
            copies,
            ket,
            psi,
            d_a,
            d_b,
            d_k,
            d_r,
            d_rp,
            s_a,
        })
    }

    pub fn default_env_dim(&self) -> usize {
        self.d_a * self.d_b * self.d_k
    }

    /// Output layout `[B…, K…, E]` of the Stinespring isometries.
    pub fn dilation_output(&self, env: &str, d_e: usize) -> Result<SystemLayout> {
        self.channel.output().concat(&SystemLayout::single(env, d_e)?)
    }

    /// Canonical dilation of `𝒩^{⊗m}` padded to `d_e`.
    pub fn reference_dilation(&self, d_e: usize) -> Result<CMatrix> {
        let st = self.channel.stinespring("E")?;
        let n_k = st.environment_dim();
        if n_k > d_e {
            return Err(Error::OutOfRange(format!(
                "environment dimension {d_e} is below the Kraus rank {n_k} of the channel"
            )));
        }
        Ok(pad_environment(st.isometry.matrix(), n_k, d_e))
    }

    /// `Φ = VΨ` as a flat vector over `[B, K, E, R, R′]`.
    fn phi(&self, v: &CMatrix) -> Vec<C64> {
        (v * &self.psi).transpose().iter().copied().collect()
    }

    /// `∇_V` from `∂/∂Φ̄`.
    fn pull_back(&self, grad_phi: &[C64], d_e: usize) -> CMatrix {
        let rows = self.d_b * self.d_k * d_e;
        let gamma = CMatrix::from_row_slice(rows, self.psi.ncols(), grad_phi);
        (gamma * self.psi.adjoint()).scale(2.0)
    }

    fn check_size(&self, total: usize) -> Result<()> {
        if total > MAX_ENGINE_DIM {
            return Err(Error::OutOfRange(format!(
                "pure-state dimension {total} exceeds the dense limit {MAX_ENGINE_DIM}"
            )));
        }
        Ok(())
    }
}

/// Penalty `μ·max(0, g + λ/2μ)²` on `g = √(1−F+η) − √(h²+η)`, which is
/// nonpositive exactly when `F ≥ 1 − h²`. The offset `η` keeps the
/// derivative finite at `F = 1`.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Penalty {
    pub mu: f64,
    pub lambda: f64,
    pub gamma: f64,
}

impl Penalty {
    fn eta(&self) -> f64 {
        (1e-3 * self.gamma).max(1e-14)
    }

    pub fn constraint(&self, f: f64) -> f64 {
        let eta = self.eta();
        (1.0 - f + eta).max(eta).sqrt() - (self.gamma + eta).sqrt()
    }

    /// Penalty value and its derivative in `F`.
    pub fn evaluate(&self, f: f64) -> (f64, f64) {
        let shifted = self.constraint(f) + self.lambda / (2.0 * self.mu);
        if shifted <= 0.0 {
            return (0.0, 0.0);
        }
        let root = (1.0 - f + self.eta()).max(self.eta()).sqrt();
        (self.mu * shifted * shifted, -self.mu * shifted / root)
    }

    pub fn update(&mut self, f: f64) {
        self.lambda = (self.lambda + 2.0 * self.mu * self.constraint(f)).max(0.0);
    }
}

/// Objective value, fidelity and their `Φ̄` derivatives at one `V`.
pub(crate) struct PhiTerms {
    pub value: f64,
    pub fidelity: f64,
    pub grad_value: Vec<C64>,
    pub grad_fidelity: Vec<C64>,
}

/// `½ I(B:RR′)` with the constraint on `τ^{BKR}`.
pub(crate) struct AssistedEngine<'a> {
    inst: &'a Instance,
    pub d_e: usize,
    split_b: Split,
    split_ke: Split,
    split_bkr: Split,
    target: FidelityTarget,
}

fn bkr_split(inst: &Instance, d_e: usize) -> Split {
    Split::new(&[inst.d_b, inst.d_k, d_e, inst.d_r, inst.d_rp], &[0, 1, 3])
}

/// `σ^{BKR}` in engine order, from the reference dilation.
pub(crate) fn target_state(inst: &Instance) -> Result<FidelityTarget> {
    let n_k = inst.channel.num_kraus();
    let v = inst.reference_dilation(n_k)?;
    let m = bkr_split(inst, n_k).gather(&inst.phi(&v));
    FidelityTarget::new(&(&m * m.adjoint()))
}

impl<'a> AssistedEngine<'a> {
    pub fn new(inst: &'a Instance, d_e: usize, target: FidelityTarget) -> Result<Self> {
        let dims = [inst.d_b, inst.d_k, d_e, inst.d_r, inst.d_rp];
        inst.check_size(dims.iter().product())?;
        Ok(AssistedEngine {
            inst,
            d_e,
            split_b: Split::smaller_side(&dims, &[0]),
            split_ke: Split::smaller_side(&dims, &[1, 2]),
            split_bkr: bkr_split(inst, d_e),
            target,
        })
    }

    pub fn terms(&self, v: &CMatrix, want_grad: bool) -> Result<PhiTerms> {
        let phi = self.inst.phi(v);
        let b = entropy_term(&self.split_b, &phi, want_grad)?;
        let ke = entropy_term(&self.split_ke, &phi, want_grad)?;
        let f = fidelity_term(&self.split_bkr, &phi, &self.target, want_grad)?;
        let grad_value = b.grad.iter().zip(&ke.grad).map(|(x, y)| (x - y) * 0.5).collect();
        Ok(PhiTerms {
            value: 0.5 * (b.value + self.inst.s_a - ke.value),
            fidelity: f.value,
            grad_value,
            grad_fidelity: f.grad,
        })
    }

    pub fn fidelity(&self, v: &CMatrix) -> Result<f64> {
        Ok(fidelity_term(&self.split_bkr, &self.inst.phi(v), &self.target, false)?.value)
    }
}

/// Penalized assisted objective over `[V]`.
pub(crate) struct AssistedObjective<'a> {
    pub engine: &'a AssistedEngine<'a>,
    pub penalty: Penalty,
}

impl Objective for AssistedObjective<'_> {
    fn evaluate(&self, x: &[CMatrix], want_grad: bool) -> Result<Evaluation> {
        let t = self.engine.terms(&x[0], want_grad)?;
        let (p, dp) = self.penalty.evaluate(t.fidelity);
        let grad = if want_grad {
            let g: Vec<C64> = t
                .grad_value
                .iter()
                .zip(&t.grad_fidelity)
                .map(|(a, b)| a + b * dp)
                .collect();
            vec![self.engine.inst.pull_back(&g, self.engine.d_e)]
        } else {
            Vec::new()
        };
        Ok(Evaluation {
            value: t.value + p,
            grad,
        })
    }
}

/// `S(BE′)` after `W: E → E′E″`, with the constraint on `τ^{BKR}`.
pub(crate) struct UnassistedEngine<'a> {
    inst: &'a Instance,
    pub d_e: usize,
    pub d_ep: usize,
    split_e: Split,
    split_be: Split,
    split_bkr: Split,
    target: FidelityTarget,
}

pub(crate) struct UnassistedTerms {
    pub value: f64,
    pub fidelity: f64,
    pub grad_v: Option<CMatrix>,
    pub grad_v_fidelity: Option<CMatrix>,
    pub grad_w: Option<CMatrix>,
}

impl<'a> UnassistedEngine<'a> {
    pub fn new(inst: &'a Instance, d_e: usize, d_ep: usize, target: FidelityTarget) -> Result<Self> {
        let dims = [inst.d_b, inst.d_k, d_e, inst.d_r, inst.d_rp];
        let rest = inst.d_b * inst.d_k * inst.d_r * inst.d_rp;
        inst.check_size(d_ep * d_e * rest)?;
        Ok(UnassistedEngine {
            inst,
            d_e,
            d_ep,
            split_e: Split::new(&dims, &[2]),
            split_be: Split::smaller_side(&[d_ep, d_e, inst.d_b, inst.d_k, inst.d_r, inst.d_rp], &[0, 2]),
            split_bkr: bkr_split(inst, d_e),
            target,
        })
    }

    /// `grad_v` requests both `V` gradients; `grad_w` the `W` gradient.
    pub fn terms(&self, v: &CMatrix, w: &CMatrix, grad_v: bool, grad_w: bool) -> Result<UnassistedTerms> {
        let phi = self.inst.phi(v);
        let x = self.split_e.gather(&phi);
        let omega = w * &x;
        let flat: Vec<C64> = omega.transpose().iter().copied().collect();
        let s = entropy_term(&self.split_be, &flat, grad_v || grad_w)?;
        let f = fidelity_term(&self.split_bkr, &phi, &self.target, grad_v)?;
        let gamma = CMatrix::from_row_slice(omega.nrows(), omega.ncols(), &s.grad);
        let gw = grad_w.then(|| (&gamma * x.adjoint()).scale(2.0));
        let (gv, gvf) = if grad_v {
            let mut g = vec![ZERO; phi.len()];
            self.split_e.scatter_add(&(w.adjoint() * &gamma), &mut g);
            (
                Some(self.inst.pull_back(&g, self.d_e)),
                Some(self.inst.pull_back(&f.grad, self.d_e)),
            )
        } else {
            (None, None)
        };
        Ok(UnassistedTerms {
            value: s.value,
            fidelity: f.value,
            grad_v: gv,
            grad_v_fidelity: gvf,
            grad_w: gw,
        })
    }

    pub fn fidelity(&self, v: &CMatrix) -> Result<f64> {
        Ok(fidelity_term(&self.split_bkr, &self.inst.phi(v), &self.target, false)?.value)
    }

    /// `W` that keeps nothing: `|e⟩ ↦ |0⟩_{E′}|e⟩_{E″}`.
    pub fn trace_out_w(&self) -> CMatrix {
        let mut w = CMatrix::zeros(self.d_ep * self.d_e, self.d_e);
        for e in 0..self.d_e {
            w[(e, e)] = C64::new(1.0, 0.0);
        }
        w
    }
}

/// Which blocks of `[V, W]` are free; the others are held fixed.
pub(crate) enum Free<'m> {
    Both,
    V(&'m CMatrix),
    W(&'m CMatrix),
}

/// Penalized unassisted objective.
pub(crate) struct UnassistedObjective<'a, 'm> {
    pub engine: &'a UnassistedEngine<'a>,
    pub penalty: Penalty,
    pub free: Free<'m>,
}

impl Objective for UnassistedObjective<'_, '_> {
    fn evaluate(&self, x: &[CMatrix], want_grad: bool) -> Result<Evaluation> {
        let (v, w, gv, gw) = match self.free {
            Free::Both => (&x[0], &x[1], true, true),
            Free::V(w) => (&x[0], w, true, false),
            Free::W(v) => (v, &x[0], false, true),
        };
        let t = self.engine.terms(v, w, gv && want_grad, gw && want_grad)?;
        let (p, dp) = self.penalty.evaluate(t.fidelity);
        let mut grad = Vec::new();
        if want_grad {
            if gv {
                grad.push(t.grad_v.unwrap() + t.grad_v_fidelity.unwrap().scale(dp));
            }
            if gw {
                grad.push(t.grad_w.unwrap());
            }
        }
        let value = if gv { t.value + p } else { t.value };
        Ok(Evaluation { value, grad })
    }
}

/// `S(XE′)` for `W: Z → E′E″` applied to a purification `|ψ⟩^{XYZ}`.
pub(crate) struct PurificationEngine {
    x_z: CMatrix,
    pub d_z: usize,
    pub d_ep: usize,
    split: Split,
}

impl PurificationEngine {
    pub fn new(psi: &[C64], d_x: usize, d_y: usize, d_z: usize, d_ep: usize) -> Result<Self> {
        if d_ep * d_z * d_x * d_y > MAX_ENGINE_DIM {
            return Err(Error::OutOfRange("purification problem too large".into()));
        }
        let x_z = Split::new(&[d_x, d_y, d_z], &[2]).gather(psi);
        Ok(PurificationEngine {
            x_z,
            d_z,
            d_ep,
            split: Split::smaller_side(&[d_ep, d_z, d_x, d_y], &[0, 2]),
        })
    }

    pub fn keep_nothing(&self) -> CMatrix {
        let mut w = CMatrix::zeros(self.d_ep * self.d_z, self.d_z);
        for z in 0..self.d_z {
            w[(z, z)] = C64::new(1.0, 0.0);
        }
        w
    }
}

impl Objective for PurificationEngine {
    fn evaluate(&self, x: &[CMatrix], want_grad: bool) -> Result<Evaluation> {
        let omega = &x[0] * &self.x_z;
        let flat: Vec<C64> = omega.transpose().iter().copied().collect();
        let s = entropy_term(&self.split, &flat, want_grad)?;
        let grad = if want_grad {
            let gamma = CMatrix::from_row_slice(omega.nrows(), omega.ncols(), &s.grad);
            vec![(gamma * self.x_z.adjoint()).scale(2.0)]
        } else {
            Vec::new()
        };
        Ok(Evaluation { value: s.value, grad })
    }
}

/// `F(σ, τ^{BKR})` for a dilation with environment dimension `d_e`.
pub(crate) fn constraint_fidelity(inst: &Instance, target: &FidelityTarget, v: &CMatrix, d_e: usize) -> Result<f64> {
    Ok(fidelity_term(&bkr_split(inst, d_e), &inst.phi(v), target, false)?.value)
}
