//! Entropies, fidelity, trace distance and continuity bounds, in bits.

use crate::error::{Error, Result};
use crate::tensor::{clamped_spectrum, eigh, hermitian_trace_norm, CMatrix, DensityOperator, Ket, SystemLabel};

/// Entropy value together with the spectrum it was computed from.
#[derive(Clone, Debug, PartialEq)]
pub struct EntropyReport {
    /// Entropy in bits.
    pub value: f64,
    /// Eigenvalues after clamping negatives to zero, descending.
    pub spectrum: Vec<f64>,
    /// Total magnitude of the negative eigenvalues that were clamped.
    pub clamped_mass: f64,
}

/// `−Σ p log₂ p` over the positive entries.
pub fn shannon_entropy(p: &[f64]) -> f64 {
    p.iter()
        .filter(|&&x| x > 0.0)
        .map(|&x| -x * x.log2())
        .sum::<f64>()
        .max(0.0)
}

/// Entropy of a Hermitian positive matrix.
pub fn matrix_entropy(m: &CMatrix) -> Result<f64> {
    Ok(shannon_entropy(&clamped_spectrum(m)?.0))
}

/// Entropy of the reduced state on `subsystem` with its spectrum.
pub fn entropy_report<L: AsRef<str>>(state: &DensityOperator, subsystem: &[L]) -> Result<EntropyReport> {
    let reduced = state.partial_trace(subsystem)?;
    let (spectrum, clamped_mass) = clamped_spectrum(reduced.matrix())?;
    Ok(EntropyReport {
        value: shannon_entropy(&spectrum),
        spectrum,
        clamped_mass,
    })
}

/// `S(X)` for the factors `X = subsystem` of `state`.
///
/// ```
/// use qrs_core::{entropics::von_neumann_entropy, DensityOperator, SystemLayout};
/// let rho = DensityOperator::diagonal(SystemLayout::new([("A", 2)]).unwrap(), &[0.75, 0.25]).unwrap();
/// let s = von_neumann_entropy(&rho, &["A"]).unwrap();
/// assert!((s - 0.811_278_124_459_132_9).abs() < 1e-12);
/// ```
pub fn von_neumann_entropy<L: AsRef<str>>(state: &DensityOperator, subsystem: &[L]) -> Result<f64> {
    Ok(entropy_report(state, subsystem)?.value)
}

/// `S(X)` of a pure state, computed on the smaller side of the cut.
pub fn ket_entropy<L: AsRef<str>>(ket: &Ket, subsystem: &[L]) -> Result<f64> {
    let pos = ket.layout().positions(subsystem)?;
    let inside: usize = pos.iter().map(|&p| ket.layout().factors()[p].1).product();
    let outside = ket.layout().total_dim() / inside;
    let reduced = if inside <= outside {
        ket.reduced(subsystem)?
    } else {
        let rest: Vec<SystemLabel> = ket
            .layout()
            .complement_positions(&pos)
            .into_iter()
            .map(|p| ket.layout().factors()[p].0.clone())
            .collect();
        ket.reduced(&rest)?
    };
    matrix_entropy(reduced.matrix())
}

fn check_disjoint(groups: &[&[String]]) -> Result<()> {
    let mut seen: Vec<&String> = Vec::new();
    for g in groups {
        for l in g.iter() {
            if seen.contains(&l) {
                return Err(Error::OverlappingParts(l.clone()));
            }
            seen.push(l);
        }
    }
    Ok(())
}

fn owned<L: AsRef<str>>(labels: &[L]) -> Vec<String> {
    labels.iter().map(|l| l.as_ref().to_string()).collect()
}

fn union(groups: &[&[String]]) -> Vec<String> {
    groups.iter().flat_map(|g| g.iter().cloned()).collect()
}

/// `I(X:Y) = S(X) + S(Y) − S(XY)`.
pub fn mutual_information<L: AsRef<str>, M: AsRef<str>>(
    state: &DensityOperator,
    part1: &[L],
    part2: &[M],
) -> Result<f64> {
    let (a, b) = (owned(part1), owned(part2));
    check_disjoint(&[&a, &b])?;
    Ok(von_neumann_entropy(state, &a)? + von_neumann_entropy(state, &b)?
        - von_neumann_entropy(state, &union(&[&a, &b]))?)
}

/// `I(X:Y|Z) = S(XZ) + S(YZ) − S(XYZ) − S(Z)`.
pub fn conditional_mutual_information<L: AsRef<str>, M: AsRef<str>, N: AsRef<str>>(
    state: &DensityOperator,
    part1: &[L],
    part2: &[M],
    cond: &[N],
) -> Result<f64> {
    let (a, b, c) = (owned(part1), owned(part2), owned(cond));
    check_disjoint(&[&a, &b, &c])?;
    Ok(
        von_neumann_entropy(state, &union(&[&a, &c]))? + von_neumann_entropy(state, &union(&[&b, &c]))?
            - von_neumann_entropy(state, &union(&[&a, &b, &c]))?
            - von_neumann_entropy(state, &c)?,
    )
}

/// `S(X|Y) = S(XY) − S(Y)`.
pub fn conditional_entropy<L: AsRef<str>, M: AsRef<str>>(
    state: &DensityOperator,
    part: &[L],
    given: &[M],
) -> Result<f64> {
    let (a, b) = (owned(part), owned(given));
    check_disjoint(&[&a, &b])?;
    Ok(von_neumann_entropy(state, &union(&[&a, &b]))? - von_neumann_entropy(state, &b)?)
}

fn same_layout(rho: &DensityOperator, xi: &DensityOperator) -> Result<()> {
    if rho.layout() != xi.layout() {
        return Err(Error::LayoutMismatch(format!("{} vs {}", rho.layout(), xi.layout())));
    }
    Ok(())
}

/// Fidelity of two positive matrices as the trace norm of `A†B`, where
/// `AA† = ρ` and `BB† = ξ` come from eigendecompositions. `‖A†B‖₁ = ‖√ρ √ξ‖₁`, and swapping the
/// arguments only transposes the product, so the value is symmetric.
pub fn matrix_fidelity(rho: &CMatrix, xi: &CMatrix) -> Result<f64> {
    let (a, b) = (square_root_factor(rho)?, square_root_factor(xi)?);
    if a.ncols() == 0 || b.ncols() == 0 {
        return Ok(0.0);
    }
    let total: f64 = (a.adjoint() * b).singular_values().iter().sum();
    Ok(total.min(1.0))
}

/// `V √Λ` restricted to the numerical support: eigenvalues above
/// `n·ε·λ_max` are kept, the rest cannot be told apart from zero.
fn square_root_factor(m: &CMatrix) -> Result<CMatrix> {
    let eig = eigh(m)?;
    let top = eig.values.first().copied().unwrap_or(0.0);
    let cutoff = m.nrows() as f64 * f64::EPSILON * top;
    let support: Vec<usize> = (0..eig.values.len()).filter(|&k| eig.values[k] > cutoff).collect();
    let mut f = CMatrix::zeros(m.nrows(), support.len());
    for (c, &k) in support.iter().enumerate() {
        let s = eig.values[k].sqrt();
        for i in 0..m.nrows() {
            f[(i, c)] = eig.vectors[(i, k)] * s;
        }
    }
    Ok(f)
}

/// Uhlmann fidelity `‖√ρ √ξ‖₁` (not squared).
///
/// ```
/// use qrs_core::{entropics::fidelity, DensityOperator, SystemLayout};
/// let q = SystemLayout::new([("A", 2)]).unwrap();
/// let zero = DensityOperator::diagonal(q.clone(), &[1.0, 0.0]).unwrap();
/// let mixed = DensityOperator::maximally_mixed(q);
/// assert!((fidelity(&zero, &mixed).unwrap() - 0.5f64.sqrt()).abs() < 1e-12);
/// ```
pub fn fidelity(rho: &DensityOperator, xi: &DensityOperator) -> Result<f64> {
    same_layout(rho, xi)?;
    matrix_fidelity(rho.matrix(), xi.matrix())
}

/// `½‖ρ − ξ‖₁`.
pub fn trace_distance(rho: &DensityOperator, xi: &DensityOperator) -> Result<f64> {
    same_layout(rho, xi)?;
    Ok(0.5 * hermitian_trace_norm(&(rho.matrix() - xi.matrix()))?)
}

fn check_eps(eps: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&eps) {
        return Err(Error::OutOfRange(format!("epsilon {eps} outside [0, 1]")));
    }
    Ok(())
}

fn h(p: f64) -> f64 {
    if p <= 0.0 || p >= 1.0 {
        0.0
    } else {
        -p * p.log2() - (1.0 - p) * (1.0 - p).log2()
    }
}

/// `h(min(x, ½))`: the smallest non-decreasing function above the binary
/// entropy, defined for every `x ≥ 0`.
fn h_envelope(x: f64) -> f64 {
    h(x.min(0.5))
}

/// Binary entropy `h(ε)` in bits.
pub fn binary_entropy(eps: f64) -> Result<f64> {
    check_eps(eps)?;
    Ok(h(eps))
}

/// Entropy continuity bound `ε log₂ d + h(ε)` for states at trace distance
/// at most `ε`, with `h` replaced by its monotone envelope past ½.
pub fn fannes_audenaert_bound(eps: f64, dim: usize) -> Result<f64> {
    check_eps(eps)?;
    check_dim(dim)?;
    Ok(eps * (dim as f64).log2() + h_envelope(eps))
}

/// Conditional-entropy continuity bound `2ε log₂|A| + (1+ε) h(ε/(1+ε))`.
pub fn afw_bound(eps: f64, dim_a: usize) -> Result<f64> {
    check_eps(eps)?;
    check_dim(dim_a)?;
    Ok(2.0 * eps * (dim_a as f64).log2() + (1.0 + eps) * h(eps / (1.0 + eps)))
}

/// Decoupling bound `n·δ = 2√(6ε) log₂(|A₁||B₁|) + 2h(√(6ε))`.
///
/// `√(6ε)` exceeds ½ once `ε > 1/24`; there the monotone envelope of `h` is
/// used, which keeps the bound valid and non-decreasing in `ε`.
pub fn decoupling_delta(n: usize, eps: f64, dim_a1: usize, dim_b1: usize) -> Result<f64> {
    check_eps(eps)?;
    check_dim(dim_a1)?;
    check_dim(dim_b1)?;
    if n == 0 {
        return Err(Error::OutOfRange("n = 0".into()));
    }
    let x = (6.0 * eps).sqrt();
    Ok(2.0 * x * ((dim_a1 * dim_b1) as f64).log2() + 2.0 * h_envelope(x))
}

fn check_dim(d: usize) -> Result<()> {
    if d == 0 {
        return Err(Error::OutOfRange("dimension 0".into()));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::SystemLayout;

    #[test]
    fn binary_entropy_endpoints() {
        assert_eq!(binary_entropy(0.0).unwrap(), 0.0);
        assert!((binary_entropy(0.5).unwrap() - 1.0).abs() < 1e-15);
        assert!(binary_entropy(1.5).is_err());
    }

    #[test]
    fn afw_direct_evaluation() {
        // 2·0.01·1 + 1.01·h(0.01/1.01), evaluated independently in f64
        let x: f64 = 0.01 / 1.01;
        let hx = -x * x.log2() - (1.0 - x) * (1.0 - x).log2();
        let expected = 0.02 + 1.01 * hx;
        assert!((afw_bound(0.01, 2).unwrap() - expected).abs() < 1e-15);
        assert!((expected - 0.100_937_407_8).abs() < 1e-9);
    }

    #[test]
    fn decoupling_delta_vanishes_at_zero() {
        assert_eq!(decoupling_delta(1, 0.0, 2, 2).unwrap(), 0.0);
        assert_eq!(decoupling_delta(2, 0.0, 7, 3).unwrap(), 0.0);
    }

    #[test]
    fn overlapping_parts_rejected() {
        let rho = DensityOperator::maximally_mixed(SystemLayout::new([("A", 2), ("B", 2)]).unwrap());
        assert!(matches!(
            mutual_information(&rho, &["A"], &["A", "B"]),
            Err(Error::OverlappingParts(_))
        ));
    }

    #[test]
    fn orthogonal_states() {
        let q = SystemLayout::new([("A", 2)]).unwrap();
        let a = DensityOperator::diagonal(q.clone(), &[1.0, 0.0]).unwrap();
        let b = DensityOperator::diagonal(q, &[0.0, 1.0]).unwrap();
        assert!(fidelity(&a, &b).unwrap().abs() < 1e-15);
        assert!((trace_distance(&a, &b).unwrap() - 1.0).abs() < 1e-15);
    }
}
