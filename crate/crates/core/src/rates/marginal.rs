//! Reduced states of a flat pure-state vector and the gradients of
//! spectral functions of them.

use crate::error::Result;
use crate::tensor::{axis_permutation, eigh, CMatrix, C64, ZERO};

/// Eigenvalues below this are floored before taking logarithms in gradients.
pub(crate) const LOG_FLOOR: f64 = 1e-15;

/// Index split of a flat vector over `dims` into `(kept, rest)`.
#[derive(Clone, Debug)]
pub(crate) struct Split {
    pub kept: usize,
    pub rest: usize,
    /// `src[s * rest + t]` is the flat index of `(s, t)`.
    src: Vec<usize>,
}

impl Split {
    pub fn new(dims: &[usize], keep: &[usize]) -> Self {
        let mut order: Vec<usize> = keep.to_vec();
        order.extend((0..dims.len()).filter(|p| !keep.contains(p)));
        let kept: usize = keep.iter().map(|&p| dims[p]).product();
        let total: usize = dims.iter().product();
        Split {
            kept,
            rest: total / kept,
            src: axis_permutation(dims, &order),
        }
    }

    /// For entropies of pure states either side of the cut will do; this
    /// picks the smaller one.
    pub fn smaller_side(dims: &[usize], keep: &[usize]) -> Self {
        let kept: usize = keep.iter().map(|&p| dims[p]).product();
        let total: usize = dims.iter().product();
        if kept * kept <= total {
            Split::new(dims, keep)
        } else {
            let other: Vec<usize> = (0..dims.len()).filter(|p| !keep.contains(p)).collect();
            Split::new(dims, &other)
        }
    }

    /// `kept × rest` matrix view of `flat`.
    pub fn gather(&self, flat: &[C64]) -> CMatrix {
        CMatrix::from_fn(self.kept, self.rest, |s, t| flat[self.src[s * self.rest + t]])
    }

    /// Adds the `kept × rest` matrix `m` back into flat layout.
    pub fn scatter_add(&self, m: &CMatrix, out: &mut [C64]) {
        for s in 0..self.kept {
            for t in 0..self.rest {
                out[self.src[s * self.rest + t]] += m[(s, t)];
            }
        }
    }
}

/// Value and Wirtinger derivative `∂/∂Φ̄` of a term.
pub(crate) struct Term {
    pub value: f64,
    pub grad: Vec<C64>,
}

fn zeros(n: usize) -> Vec<C64> {
    vec![ZERO; n]
}

/// `S(Tr_rest |Φ⟩⟨Φ|)` in bits and, if requested, its derivative.
pub(crate) fn entropy_term(split: &Split, flat: &[C64], want_grad: bool) -> Result<Term> {
    let m = split.gather(flat);
    let rho = &m * m.adjoint();
    let eig = eigh(&rho)?;
    let value = crate::entropics::shannon_entropy(&eig.values.iter().map(|v| v.max(0.0)).collect::<Vec<_>>());
    let mut grad = zeros(flat.len());
    if want_grad {
        let inv_ln2 = std::f64::consts::LOG2_E;
        let g = eig.map(|v| -(v.max(LOG_FLOOR).log2() + inv_ln2));
        split.scatter_add(&(g * m), &mut grad);
    }
    Ok(Term { value, grad })
}

/// Target state for fidelity terms, stored as `σ = K K†` on its support.
#[derive(Clone, Debug)]
pub(crate) struct FidelityTarget {
    k: CMatrix,
}

impl FidelityTarget {
    pub fn new(sigma: &CMatrix) -> Result<Self> {
        let eig = eigh(sigma)?;
        let support: Vec<usize> = (0..eig.values.len()).filter(|&i| eig.values[i] > 1e-14).collect();
        let n = sigma.nrows();
        let mut k = CMatrix::zeros(n, support.len());
        for (c, &i) in support.iter().enumerate() {
            let s = eig.values[i].sqrt();
            for r in 0..n {
                k[(r, c)] = eig.vectors[(r, i)] * s;
            }
        }
        Ok(FidelityTarget { k })
    }
}

/// `F(σ, Tr_rest |Φ⟩⟨Φ|)` and its derivative
/// `∂F/∂Φ̄ = ½ K (K†τK)^{-1/2} K† M`.
pub(crate) fn fidelity_term(split: &Split, flat: &[C64], target: &FidelityTarget, want_grad: bool) -> Result<Term> {
    let m = split.gather(flat);
    let tau = &m * m.adjoint();
    let inner = target.k.adjoint() * tau * &target.k;
    let eig = eigh(&inner)?;
    let value: f64 = eig.values.iter().map(|v| v.max(0.0).sqrt()).sum();
    let mut grad = zeros(flat.len());
    if want_grad {
        let inv_sqrt = eig.map(|v| 0.5 / v.max(1e-300).sqrt().max(1e-12));
        let g = &target.k * inv_sqrt * target.k.adjoint();
        split.scatter_add(&(g * m), &mut grad);
    }
    Ok(Term { value, grad })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::random::random_ket;
    use crate::SystemLayout;
    use rand::SeedableRng;

    #[test]
    fn split_round_trips() {
        let dims = [2, 3, 2];
        let flat: Vec<C64> = (0..12).map(|i| C64::new(i as f64, 0.0)).collect();
        let s = Split::new(&dims, &[2, 0]);
        let m = s.gather(&flat);
        let mut back = vec![ZERO; 12];
        s.scatter_add(&m, &mut back);
        assert_eq!(back, flat);
    }

    #[test]
    fn entropy_matches_density_path() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let layout = SystemLayout::new([("X", 2), ("Y", 3), ("Z", 2)]).unwrap();
        let ket = random_ket(&layout, &mut rng).unwrap();
        let flat: Vec<C64> = ket.amplitudes().iter().copied().collect();
        let t = entropy_term(&Split::smaller_side(&[2, 3, 2], &[0, 2]), &flat, false).unwrap();
        let direct = crate::entropics::von_neumann_entropy(&ket.to_density(), &["X", "Z"]).unwrap();
        assert!((t.value - direct).abs() < 1e-12);
    }
}
