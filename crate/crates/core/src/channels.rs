//! CPTP maps in Kraus, Choi and Stinespring form.

use rand::Rng;

use crate::error::{Error, Result};
use crate::tensor::random::haar_isometry;
use crate::tensor::{
    eigh, fix_phase, hermitian_trace_norm, hermiticity_defect, identity, kron, CMatrix, DensityOperator,
    LinearOperator, SystemLabel, SystemLayout, C64, ONE, ZERO,
};

/// Trace-preservation tolerance for channels.
pub const TP_TOL: f64 = 1e-9;
/// Choi eigenvalues at or below this are dropped by canonicalization.
pub const KRAUS_CUTOFF: f64 = 1e-12;

/// A CPTP map given by Kraus operators.
#[derive(Clone, Debug, PartialEq)]
pub struct QuantumChannel {
    input: SystemLayout,
    output: SystemLayout,
    kraus: Vec<CMatrix>,
}

/// An isometry `V: in → out ⊗ E` with the environment factor last.
#[derive(Clone, Debug, PartialEq)]
pub struct StinespringIsometry {
    pub isometry: LinearOperator,
    pub environment: SystemLabel,
}

/// Result of [`validate_cptp`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CptpReport {
    /// Operator norm of `Σ K†K − I`.
    pub tp_residual: f64,
    /// Smallest eigenvalue of the Choi matrix.
    pub cp_min_eigenvalue: f64,
}

impl CptpReport {
    pub fn passed(&self) -> bool {
        self.tp_residual <= TP_TOL && self.cp_min_eigenvalue >= -TP_TOL
    }
}

fn tp_residual(input_dim: usize, kraus: &[CMatrix]) -> f64 {
    let mut sum = -identity(input_dim);
    for k in kraus {
        sum += k.adjoint() * k;
    }
    eigh(&sum)
        .map(|e| e.values.iter().fold(0.0f64, |m, v| m.max(v.abs())))
        .unwrap_or(f64::INFINITY)
}

impl QuantumChannel {
    /// Builds a channel, requiring trace preservation within [`TP_TOL`].
    pub fn new(input: SystemLayout, output: SystemLayout, kraus: Vec<CMatrix>) -> Result<Self> {
        let channel = QuantumChannel::from_kraus_unchecked(input, output, kraus)?;
        let res = tp_residual(channel.input.total_dim(), &channel.kraus);
        if !(res <= TP_TOL) {
            return Err(Error::InvalidChannel(format!(
                "not trace preserving (residual {res:.3e})"
            )));
        }
        Ok(channel)
    }

    /// Checks only shapes. Use [`validate_cptp`] to inspect the result.
    pub fn from_kraus_unchecked(input: SystemLayout, output: SystemLayout, kraus: Vec<CMatrix>) -> Result<Self> {
        if kraus.is_empty() {
            return Err(Error::InvalidChannel("empty Kraus list".into()));
        }
        let (d_in, d_out) = (input.total_dim(), output.total_dim());
        for (k, m) in kraus.iter().enumerate() {
            if m.shape() != (d_out, d_in) {
                return Err(Error::InvalidChannel(format!(
                    "Kraus operator {k} has shape {:?}, expected ({d_out}, {d_in})",
                    m.shape()
                )));
            }
        }
        Ok(QuantumChannel { input, output, kraus })
    }

    /// Identity map on `layout`.
    pub fn identity(layout: &SystemLayout) -> Self {
        QuantumChannel {
            input: layout.clone(),
            output: layout.clone(),
            kraus: vec![identity(layout.total_dim())],
        }
    }

    /// Identity map between two layouts of equal total dimension.
    pub fn identity_between(input: SystemLayout, output: SystemLayout) -> Result<Self> {
        let d = input.total_dim();
        QuantumChannel::new(input, output, vec![identity(d)])
    }

    /// `ρ ↦ U ρ U†`.
    pub fn unitary(input: SystemLayout, output: SystemLayout, u: CMatrix) -> Result<Self> {
        QuantumChannel::new(input, output, vec![u])
    }

    /// `ρ ↦ Tr(ρ) I/d_out`.
    pub fn fully_depolarizing(input: SystemLayout, output: SystemLayout) -> Self {
        let (d_in, d_out) = (input.total_dim(), output.total_dim());
        let amp = C64::new(1.0 / (d_out as f64).sqrt(), 0.0);
        let mut kraus = Vec::with_capacity(d_in * d_out);
        for o in 0..d_out {
            for i in 0..d_in {
                let mut k = CMatrix::zeros(d_out, d_in);
                k[(o, i)] = amp;
                kraus.push(k);
            }
        }
        QuantumChannel { input, output, kraus }
    }

    /// `ρ ↦ Tr(ρ) σ` for a fixed output state `σ`.
    pub fn replacement(input: SystemLayout, sigma: &DensityOperator) -> Result<Self> {
        let d_in = input.total_dim();
        let d_out = sigma.dim();
        let eig = eigh(sigma.matrix())?;
        let mut kraus = Vec::new();
        for (k, &lam) in eig.values.iter().enumerate() {
            if lam <= KRAUS_CUTOFF {
                continue;
            }
            for i in 0..d_in {
                let mut m = CMatrix::zeros(d_out, d_in);
                for o in 0..d_out {
                    m[(o, i)] = eig.vectors[(o, k)] * lam.sqrt();
                }
                kraus.push(m);
            }
        }
        let norm: f64 = eig.values.iter().filter(|&&v| v > KRAUS_CUTOFF).sum();
        for m in &mut kraus {
            *m = m.unscale(norm.sqrt());
        }
        QuantumChannel::new(input, sigma.layout().clone(), kraus)
    }

    /// Discards the input: output is the one-dimensional trivial layout.
    pub fn trace_out(input: SystemLayout) -> Self {
        let d = input.total_dim();
        let kraus = (0..d)
            .map(|i| {
                let mut m = CMatrix::zeros(1, d);
                m[(0, i)] = ONE;
                m
            })
            .collect();
        QuantumChannel {
            input,
            output: SystemLayout::trivial(),
            kraus,
        }
    }

    /// Complete dephasing in the computational basis.
    pub fn dephasing(layout: &SystemLayout) -> Self {
        let d = layout.total_dim();
        let kraus = (0..d)
            .map(|i| {
                let mut m = CMatrix::zeros(d, d);
                m[(i, i)] = ONE;
                m
            })
            .collect();
        QuantumChannel {
            input: layout.clone(),
            output: layout.clone(),
            kraus,
        }
    }

    /// Qubit amplitude damping with decay probability `gamma`.
    pub fn amplitude_damping(label: &str, gamma: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&gamma) {
            return Err(Error::OutOfRange(format!("damping {gamma}")));
        }
        let layout = SystemLayout::single(label, 2)?;
        let c = |x: f64| C64::new(x, 0.0);
        let k0 = CMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, c((1.0 - gamma).sqrt())]);
        let k1 = CMatrix::from_row_slice(2, 2, &[ZERO, c(gamma.sqrt()), ZERO, ZERO]);
        QuantumChannel::new(layout.clone(), layout, vec![k0, k1])
    }

    /// Channel induced by an isometry by tracing out the `env` factors of
    /// its output.
    pub fn from_isometry<L: AsRef<str>>(iso: &LinearOperator, env: &[L]) -> Result<Self> {
        let out = iso.output();
        let env_pos = out.positions(env)?;
        let keep_pos = out.complement_positions(&env_pos);
        let keep = out.pick(&keep_pos);
        let env_layout = out.pick(&env_pos);
        let order: Vec<SystemLabel> = keep.labels().chain(env_layout.labels()).cloned().collect();
        let staged = iso.permute_output(&order)?;
        let (d_out, d_env, d_in) = (keep.total_dim(), env_layout.total_dim(), iso.input().total_dim());
        let v = staged.matrix();
        let kraus = (0..d_env)
            .map(|e| CMatrix::from_fn(d_out, d_in, |o, i| v[(o * d_env + e, i)]))
            .collect();
        QuantumChannel::new(iso.input().clone(), keep, kraus)
    }

    /// Random channel with `n_kraus` Kraus operators, from a Haar isometry.
    pub fn random<R: Rng + ?Sized>(
        input: SystemLayout,
        output: SystemLayout,
        n_kraus: usize,
        rng: &mut R,
    ) -> Result<Self> {
        let (d_in, d_out) = (input.total_dim(), output.total_dim());
        if d_out * n_kraus < d_in {
            return Err(Error::OutOfRange(format!(
                "{n_kraus} Kraus operators cannot dilate {d_in} -> {d_out}"
            )));
        }
        let v = haar_isometry(d_out * n_kraus, d_in, rng);
        let kraus = (0..n_kraus)
            .map(|k| CMatrix::from_fn(d_out, d_in, |o, i| v[(o * n_kraus + k, i)]))
            .collect();
        QuantumChannel::new(input, output, kraus)
    }

    pub fn input(&self) -> &SystemLayout {
        &self.input
    }

    pub fn output(&self) -> &SystemLayout {
        &self.output
    }

    pub fn kraus(&self) -> &[CMatrix] {
        &self.kraus
    }

    pub fn num_kraus(&self) -> usize {
        self.kraus.len()
    }

    pub fn kraus_operators(&self) -> Vec<LinearOperator> {
        self.kraus
            .iter()
            .map(|k| LinearOperator::new(self.input.clone(), self.output.clone(), k.clone()).expect("shapes checked"))
            .collect()
    }

    /// Same Kraus operators with relabeled layouts of equal dimensions.
    pub fn with_layouts(&self, input: SystemLayout, output: SystemLayout) -> Result<Self> {
        if input.dims() != self.input.dims() || output.dims() != self.output.dims() {
            return Err(Error::LayoutMismatch(format!(
                "{input} -> {output} for channel {} -> {}",
                self.input, self.output
            )));
        }
        Ok(QuantumChannel {
            input,
            output,
            kraus: self.kraus.clone(),
        })
    }

    /// Applies the channel to the factors `acting_on` (listed in the order of
    /// the channel input); other factors are left alone. Output factors sit
    /// where the first acted-on factor was.
    pub fn apply<L: AsRef<str>>(&self, state: &DensityOperator, acting_on: &[L]) -> Result<DensityOperator> {
        state.apply_kraus(&self.kraus, &self.input, &self.output, acting_on)
    }

    /// Applies the channel to the factors carrying its own input labels.
    pub fn apply_in_place(&self, state: &DensityOperator) -> Result<DensityOperator> {
        let labels: Vec<SystemLabel> = self.input.labels().cloned().collect();
        self.apply(state, &labels)
    }

    /// `next ∘ self`.
    pub fn then(&self, next: &QuantumChannel) -> Result<QuantumChannel> {
        if self.output.dims() != next.input.dims() {
            return Err(Error::LayoutMismatch(format!(
                "cannot feed {} into {}",
                self.output, next.input
            )));
        }
        let mut kraus = Vec::with_capacity(self.kraus.len() * next.kraus.len());
        for b in &next.kraus {
            for a in &self.kraus {
                kraus.push(b * a);
            }
        }
        Ok(QuantumChannel {
            input: self.input.clone(),
            output: next.output.clone(),
            kraus,
        })
    }

    /// `self ⊗ other`.
    pub fn tensor(&self, other: &QuantumChannel) -> Result<QuantumChannel> {
        let mut kraus = Vec::with_capacity(self.kraus.len() * other.kraus.len());
        for a in &self.kraus {
            for b in &other.kraus {
                kraus.push(kron(a, b));
            }
        }
        Ok(QuantumChannel {
            input: self.input.concat(&other.input)?,
            output: self.output.concat(&other.output)?,
            kraus,
        })
    }

    /// `𝒩^{⊗m}` with labels `X#1, X#2, ...`, grouped by copy.
    pub fn tensor_power(&self, m: usize) -> Result<QuantumChannel> {
        if m == 0 {
            return Err(Error::OutOfRange("tensor power 0".into()));
        }
        let mut acc: Option<QuantumChannel> = None;
        for copy in 1..=m {
            let piece = self.with_layouts(
                self.input.relabel(|l| l.with_copy_index(copy))?,
                self.output.relabel(|l| l.with_copy_index(copy))?,
            )?;
            acc = Some(match acc {
                None => piece,
                Some(a) => a.tensor(&piece)?.canonical()?,
            });
        }
        Ok(acc.expect("m >= 1"))
    }

    /// Unnormalized Choi matrix `Σ_ij |i⟩⟨j| ⊗ 𝒩(|i⟩⟨j|)`, input factor first.
    pub fn to_choi(&self) -> CMatrix {
        let (d_in, d_out) = (self.input.total_dim(), self.output.total_dim());
        let n = d_in * d_out;
        let mut j = CMatrix::zeros(n, n);
        for k in &self.kraus {
            // |K⟫ with entries K[o, i] at position i·d_out + o
            let v: Vec<C64> = (0..n).map(|x| k[(x % d_out, x / d_out)]).collect();
            for a in 0..n {
                if v[a] == ZERO {
                    continue;
                }
                for b in 0..n {
                    j[(a, b)] += v[a] * v[b].conj();
                }
            }
        }
        j
    }

    /// Channel with the given Choi matrix, in canonical Kraus form.
    pub fn from_choi(input: SystemLayout, output: SystemLayout, choi: &CMatrix) -> Result<Self> {
        let (d_in, d_out) = (input.total_dim(), output.total_dim());
        let n = d_in * d_out;
        if choi.shape() != (n, n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: choi.nrows(),
            });
        }
        let defect = hermiticity_defect(choi);
        if defect > 1e-8 {
            return Err(Error::NotHermitian(defect));
        }
        let mut marginal = CMatrix::zeros(d_in, d_in);
        for i in 0..d_in {
            for j in 0..d_in {
                for o in 0..d_out {
                    marginal[(i, j)] += choi[(i * d_out + o, j * d_out + o)];
                }
            }
        }
        let tp = crate::tensor::frobenius(&(marginal - identity(d_in)));
        if tp > 1e-8 {
            return Err(Error::InvalidChannel(format!(
                "Choi marginal differs from identity by {tp:.3e}"
            )));
        }
        let eig = eigh(choi)?;
        let min = eig.values.last().copied().unwrap_or(0.0);
        if min < -1e-8 {
            return Err(Error::InvalidChannel(format!("Choi matrix has eigenvalue {min:.3e}")));
        }
        let mut kraus = Vec::new();
        for (k, &lam) in eig.values.iter().enumerate() {
            if lam <= KRAUS_CUTOFF {
                continue;
            }
            let mut v: Vec<C64> = eig.vectors.column(k).iter().copied().collect();
            fix_phase(&mut v, 1e-8);
            let s = lam.sqrt();
            kraus.push(CMatrix::from_fn(d_out, d_in, |o, i| v[i * d_out + o] * s));
        }
        if kraus.is_empty() {
            return Err(Error::InvalidChannel("zero Choi matrix".into()));
        }
        QuantumChannel::new(input, output, kraus)
    }

    /// Minimal Kraus form: eigenvectors of the Choi matrix, by descending
    /// eigenvalue, each with its first nonzero entry real positive.
    pub fn canonical(&self) -> Result<Self> {
        QuantumChannel::from_choi(self.input.clone(), self.output.clone(), &self.to_choi())
    }

    /// Stinespring isometry `V = Σ_k K_k ⊗ |k⟩_E` of the canonical form.
    pub fn stinespring(&self, environment: &str) -> Result<StinespringIsometry> {
        let canon = self.canonical()?;
        canon.stinespring_of_kraus(environment)
    }

    /// Stinespring isometry built from the Kraus operators as stored.
    pub fn stinespring_of_kraus(&self, environment: &str) -> Result<StinespringIsometry> {
        let n_k = self.kraus.len();
        let env = SystemLayout::single(environment, n_k)?;
        let output = self.output.concat(&env)?;
        let (d_in, d_out) = (self.input.total_dim(), self.output.total_dim());
        let v = CMatrix::from_fn(d_out * n_k, d_in, |row, i| self.kraus[row % n_k][(row / n_k, i)]);
        Ok(StinespringIsometry {
            isometry: LinearOperator::new(self.input.clone(), output, v)?,
            environment: SystemLabel::new(environment)?,
        })
    }

    /// Map from the input to the environment of the canonical dilation.
    pub fn complementary(&self, environment: &str) -> Result<QuantumChannel> {
        let canon = self.canonical()?;
        let n_k = canon.kraus.len();
        let (d_in, d_out) = (self.input.total_dim(), self.output.total_dim());
        let kraus = (0..d_out)
            .map(|o| CMatrix::from_fn(n_k, d_in, |k, i| canon.kraus[k][(o, i)]))
            .collect();
        QuantumChannel::new(self.input.clone(), SystemLayout::single(environment, n_k)?, kraus)
    }
}

impl StinespringIsometry {
    /// The channel obtained by tracing out the environment.
    pub fn channel(&self) -> Result<QuantumChannel> {
        QuantumChannel::from_isometry(&self.isometry, &[self.environment.as_str()])
    }

    pub fn environment_dim(&self) -> usize {
        self.isometry
            .output()
            .dim_of(self.environment.as_str())
            .expect("environment factor present")
    }
}

/// Applies `channel` to the factors `acting_on` of `state`.
pub fn apply_channel<L: AsRef<str>>(
    channel: &QuantumChannel,
    state: &DensityOperator,
    acting_on: &[L],
) -> Result<DensityOperator> {
    channel.apply(state, acting_on)
}

/// Canonical Stinespring dilation; the environment is labeled `E`.
pub fn stinespring_dilation(channel: &QuantumChannel) -> Result<StinespringIsometry> {
    channel.stinespring("E")
}

/// Complementary channel to the environment `E` of the canonical dilation.
pub fn complementary_channel(channel: &QuantumChannel) -> Result<QuantumChannel> {
    channel.complementary("E")
}

pub fn to_choi(channel: &QuantumChannel) -> CMatrix {
    channel.to_choi()
}

pub fn from_choi(input: SystemLayout, output: SystemLayout, choi: &CMatrix) -> Result<QuantumChannel> {
    QuantumChannel::from_choi(input, output, choi)
}

/// Reports trace-preservation and complete-positivity residuals; never fails.
///
/// ```
/// use qrs_core::channels::{validate_cptp, QuantumChannel};
/// use qrs_core::tensor::identity;
/// use qrs_core::SystemLayout;
/// let q = SystemLayout::new([("A", 2)]).unwrap();
/// let doubled = QuantumChannel::from_kraus_unchecked(
///     q.clone(), q, vec![identity(2), identity(2)]).unwrap();
/// let report = validate_cptp(&doubled);
/// assert!((report.tp_residual - 1.0).abs() < 1e-12);
/// assert!(!report.passed());
/// ```
pub fn validate_cptp(channel: &QuantumChannel) -> CptpReport {
    let tp = tp_residual(channel.input.total_dim(), &channel.kraus);
    let cp = eigh(&channel.to_choi())
        .map(|e| e.values.last().copied().unwrap_or(0.0))
        .unwrap_or(f64::NEG_INFINITY);
    CptpReport {
        tp_residual: tp,
        cp_min_eigenvalue: cp,
    }
}

/// `½‖J₁ − J₂‖₁ / d_in` between the Choi matrices.
pub fn channel_distance(a: &QuantumChannel, b: &QuantumChannel) -> Result<f64> {
    if a.input.dims() != b.input.dims() || a.output.dims() != b.output.dims() {
        return Err(Error::LayoutMismatch(format!(
            "{} -> {} vs {} -> {}",
            a.input, a.output, b.input, b.output
        )));
    }
    let diff = a.to_choi() - b.to_choi();
    Ok(0.5 * hermitian_trace_norm(&diff)? / a.input.total_dim() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::Ket;

    fn qubit(l: &str) -> SystemLayout {
        SystemLayout::single(l, 2).unwrap()
    }

    #[test]
    fn identity_choi_has_trace_two() {
        let j = QuantumChannel::identity(&qubit("A")).to_choi();
        assert!((j.trace().re - 2.0).abs() < 1e-15);
        assert!((j[(0, 3)].re - 1.0).abs() < 1e-15);
    }

    #[test]
    fn depolarizing_choi_is_half_identity() {
        let j = QuantumChannel::fully_depolarizing(qubit("A"), qubit("B")).to_choi();
        assert!(crate::tensor::frobenius(&(j - identity(4).scale(0.5))) < 1e-15);
    }

    #[test]
    fn dephasing_destroys_coherence() {
        let plus = Ket::normalized(qubit("A"), crate::tensor::CVector::from_element(2, ONE))
            .unwrap()
            .to_density();
        let out = QuantumChannel::dephasing(&qubit("A")).apply(&plus, &["A"]).unwrap();
        assert!(out.matrix()[(0, 1)].norm() < 1e-15);
        assert!((out.matrix()[(0, 0)].re - 0.5).abs() < 1e-15);
    }

    #[test]
    fn identity_dilation_has_trivial_environment() {
        let s = stinespring_dilation(&QuantumChannel::identity(&qubit("A"))).unwrap();
        assert_eq!(s.environment_dim(), 1);
        assert!(s.isometry.is_isometry(1e-12));
    }

    #[test]
    fn rejects_non_tp_kraus() {
        let r = QuantumChannel::new(qubit("A"), qubit("A"), vec![identity(2), identity(2)]);
        assert!(matches!(r, Err(Error::InvalidChannel(_))));
    }
}
