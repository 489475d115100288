use crate::error::{Error, Result};

use super::layout::{axis_permutation, substitution, SystemLabel, SystemLayout};
use super::linalg::{conjugate_sum, eigh, hermiticity_defect, kron, CMatrix, CVector, C64, ZERO};
use super::operator::{permutation_positions, LinearOperator};

/// Tolerance for the state invariants (Hermiticity, positivity, trace, norm).
pub const STATE_TOL: f64 = 1e-10;
/// Eigenvalues at or below this are treated as zero when computing ranks.
pub const RANK_CUTOFF: f64 = 1e-12;

/// Normalized pure state over a layout.
#[derive(Clone, Debug, PartialEq)]
pub struct Ket {
    layout: SystemLayout,
    amplitudes: CVector,
}

/// Density operator over a layout.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityOperator {
    layout: SystemLayout,
    matrix: CMatrix,
}

fn reorder_vector(v: &CVector, src: &[usize]) -> CVector {
    CVector::from_iterator(src.len(), src.iter().map(|&s| v[s]))
}

fn reorder_matrix(m: &CMatrix, src: &[usize]) -> CMatrix {
    let n = src.len();
    CMatrix::from_fn(n, n, |i, j| m[(src[i], src[j])])
}

/// Views a flat vector over `front ⊗ back` as a `front × back` matrix.
fn unflatten(v: &CVector, front: usize, back: usize) -> CMatrix {
    CMatrix::from_fn(front, back, |i, j| v[i * back + j])
}

fn flatten(m: &CMatrix) -> CVector {
    let (r, c) = m.shape();
    CVector::from_iterator(r * c, (0..r).flat_map(|i| (0..c).map(move |j| m[(i, j)])))
}

impl Ket {
    /// Builds a ket, requiring unit norm within `STATE_TOL`.
    pub fn new(layout: SystemLayout, amplitudes: CVector) -> Result<Self> {
        check_len(&layout, amplitudes.len())?;
        let norm = amplitudes.norm();
        if (norm - 1.0).abs() > STATE_TOL {
            return Err(Error::InvalidState(format!("ket norm {norm}")));
        }
        Ok(Ket { layout, amplitudes })
    }

    /// Builds a ket after rescaling to unit norm.
    pub fn normalized(layout: SystemLayout, amplitudes: CVector) -> Result<Self> {
        check_len(&layout, amplitudes.len())?;
        let norm = amplitudes.norm();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::InvalidState("zero or non-finite vector".into()));
        }
        Ok(Ket {
            layout,
            amplitudes: amplitudes.unscale(norm),
        })
    }

    /// Computational basis state `|index⟩`.
    pub fn basis(layout: SystemLayout, index: usize) -> Result<Self> {
        let d = layout.total_dim();
        if index >= d {
            return Err(Error::OutOfRange(format!("basis index {index} >= {d}")));
        }
        let mut v = CVector::zeros(d);
        v[index] = C64::new(1.0, 0.0);
        Ok(Ket { layout, amplitudes: v })
    }

    /// `Σ_i |i⟩|i⟩ / √d` on two factors of equal dimension.
    pub fn maximally_entangled(a: &str, b: &str, dim: usize) -> Result<Self> {
        let layout = SystemLayout::new([(a, dim), (b, dim)])?;
        let mut v = CVector::zeros(dim * dim);
        let amp = C64::new(1.0 / (dim as f64).sqrt(), 0.0);
        for i in 0..dim {
            v[i * dim + i] = amp;
        }
        Ok(Ket { layout, amplitudes: v })
    }

    pub fn layout(&self) -> &SystemLayout {
        &self.layout
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amplitudes
    }

    pub fn to_density(&self) -> DensityOperator {
        DensityOperator {
            layout: self.layout.clone(),
            matrix: &self.amplitudes * self.amplitudes.adjoint(),
        }
    }

    pub fn tensor(&self, other: &Ket) -> Result<Ket> {
        Ok(Ket {
            layout: self.layout.concat(&other.layout)?,
            amplitudes: self.amplitudes.kronecker(&other.amplitudes),
        })
    }

    pub fn inner(&self, other: &Ket) -> Result<C64> {
        same_layout(&self.layout, &other.layout)?;
        Ok(self.amplitudes.dotc(&other.amplitudes))
    }

    /// Reorders the factors; `new_order` must list every label once.
    pub fn permute<L: AsRef<str>>(&self, new_order: &[L]) -> Result<Ket> {
        let order = permutation_positions(&self.layout, new_order)?;
        let src = axis_permutation(&self.layout.dims(), &order);
        Ok(Ket {
            layout: self.layout.pick(&order),
            amplitudes: reorder_vector(&self.amplitudes, &src),
        })
    }

    /// Amplitudes as a `keep × rest` matrix, with `keep` in the given order.
    pub(crate) fn split<L: AsRef<str>>(&self, keep: &[L]) -> Result<(CMatrix, SystemLayout)> {
        let pos = self.layout.positions(keep)?;
        let rest = self.layout.complement_positions(&pos);
        let mut order = pos.clone();
        order.extend(&rest);
        let src = axis_permutation(&self.layout.dims(), &order);
        let v = reorder_vector(&self.amplitudes, &src);
        let kept = self.layout.pick(&pos);
        let front = kept.total_dim();
        Ok((unflatten(&v, front, self.layout.total_dim() / front), kept))
    }

    /// Reduced density operator on `keep`, factors in layout order.
    pub fn reduced<L: AsRef<str>>(&self, keep: &[L]) -> Result<DensityOperator> {
        let mut pos = self.layout.positions(keep)?;
        pos.sort_unstable();
        let labels: Vec<SystemLabel> = pos.iter().map(|&p| self.layout.factors()[p].0.clone()).collect();
        let (m, layout) = self.split(&labels)?;
        Ok(DensityOperator {
            layout,
            matrix: &m * m.adjoint(),
        })
    }

    /// Applies `op` to the factors `acting_on` (listed in the order of
    /// `op.input()`). Output factors take `op.output()` labels and sit where
    /// the first acted-on factor was. The result is renormalized only if
    /// `op` is an isometry on the relevant support; otherwise an error is
    /// returned when the norm drifts by more than `STATE_TOL`.
    pub fn apply<L: AsRef<str>>(&self, op: &LinearOperator, acting_on: &[L]) -> Result<Ket> {
        let pos = self.layout.positions(acting_on)?;
        let acting = self.layout.pick(&pos);
        if acting.dims() != op.input().dims() {
            return Err(Error::LayoutMismatch(format!(
                "operator input {} does not match {}",
                op.input(),
                acting
            )));
        }
        let (m, _) = self.split(acting_on)?;
        let out = op.matrix() * m;
        let (staged, final_layout, order) = substitution(&self.layout, &pos, op.output())?;
        let v = flatten(&out);
        let src = axis_permutation(&staged.dims(), &order);
        Ket::new(final_layout, reorder_vector(&v, &src))
    }

    /// Renames one factor.
    pub fn relabel(&self, from: &str, to: &str) -> Result<Ket> {
        Ok(Ket {
            layout: rename(&self.layout, from, to)?,
            amplitudes: self.amplitudes.clone(),
        })
    }
}

impl DensityOperator {
    /// Builds a state, checking Hermiticity, positivity and unit trace to
    /// within `STATE_TOL`.
    ///
    /// ```
    /// use qrs_core::tensor::{CMatrix, C64};
    /// use qrs_core::{DensityOperator, SystemLayout};
    /// let layout = SystemLayout::new([("A", 2)]).unwrap();
    /// let half = CMatrix::identity(2, 2).scale(0.5);
    /// assert!(DensityOperator::new(layout.clone(), half).is_ok());
    /// assert!(DensityOperator::new(layout, CMatrix::identity(2, 2)).is_err());
    /// # let _ = C64::new(0.0, 0.0);
    /// ```
    pub fn new(layout: SystemLayout, matrix: CMatrix) -> Result<Self> {
        let state = DensityOperator::shaped(layout, matrix)?;
        state.validate()?;
        Ok(state)
    }

    /// Checks shapes only; for matrices produced by trusted computations.
    pub(crate) fn shaped(layout: SystemLayout, matrix: CMatrix) -> Result<Self> {
        let d = layout.total_dim();
        if matrix.nrows() != d || matrix.ncols() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: matrix.nrows().max(matrix.ncols()),
            });
        }
        Ok(DensityOperator { layout, matrix })
    }

    /// Rescales a positive matrix to unit trace.
    pub fn from_unnormalized(layout: SystemLayout, matrix: CMatrix) -> Result<Self> {
        let tr = matrix.trace().re;
        if !(tr > 0.0) || !tr.is_finite() {
            return Err(Error::InvalidState(format!("trace {tr}")));
        }
        let herm = (&matrix + matrix.adjoint()).scale(0.5 / tr);
        DensityOperator::new(layout, herm)
    }

    /// Re-checks the state invariants.
    pub fn validate(&self) -> Result<()> {
        let defect = hermiticity_defect(&self.matrix);
        if defect > STATE_TOL {
            return Err(Error::NotHermitian(defect));
        }
        let tr = self.matrix.trace();
        if (tr.re - 1.0).abs() > STATE_TOL || tr.im.abs() > STATE_TOL {
            return Err(Error::InvalidState(format!("trace {tr}")));
        }
        let min = eigh(&self.matrix)?.values.last().copied().unwrap_or(0.0);
        if min < -STATE_TOL {
            return Err(Error::InvalidState(format!("negative eigenvalue {min:e}")));
        }
        Ok(())
    }

    /// `I/d` on the given layout.
    pub fn maximally_mixed(layout: SystemLayout) -> Self {
        let d = layout.total_dim();
        DensityOperator {
            layout,
            matrix: CMatrix::identity(d, d).unscale(d as f64),
        }
    }

    /// Diagonal state from a probability vector.
    pub fn diagonal(layout: SystemLayout, probabilities: &[f64]) -> Result<Self> {
        check_len(&layout, probabilities.len())?;
        let diag = CVector::from_iterator(probabilities.len(), probabilities.iter().map(|&p| C64::new(p, 0.0)));
        DensityOperator::new(layout, CMatrix::from_diagonal(&diag))
    }

    pub fn layout(&self) -> &SystemLayout {
        &self.layout
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.layout.total_dim()
    }

    pub fn trace(&self) -> C64 {
        self.matrix.trace()
    }

    /// Eigenvalues, descending.
    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        Ok(eigh(&self.matrix)?.values)
    }

    /// Number of eigenvalues above `RANK_CUTOFF`.
    pub fn rank(&self) -> Result<usize> {
        Ok(self.eigenvalues()?.iter().filter(|&&v| v > RANK_CUTOFF).count())
    }

    pub fn tensor(&self, other: &DensityOperator) -> Result<DensityOperator> {
        Ok(DensityOperator {
            layout: self.layout.concat(&other.layout)?,
            matrix: kron(&self.matrix, &other.matrix),
        })
    }

    /// `ρ^{⊗m}` with factors renamed `X#1, X#2, ...` and grouped by copy.
    pub fn tensor_power(&self, m: usize) -> Result<DensityOperator> {
        if m == 0 {
            return Err(Error::OutOfRange("tensor power 0".into()));
        }
        let mut acc: Option<DensityOperator> = None;
        for copy in 1..=m {
            let layout = self.layout.relabel(|l| l.with_copy_index(copy))?;
            let piece = DensityOperator {
                layout,
                matrix: self.matrix.clone(),
            };
            acc = Some(match acc {
                None => piece,
                Some(a) => a.tensor(&piece)?,
            });
        }
        Ok(acc.expect("m >= 1"))
    }

    /// Traces out every factor not in `keep`; kept factors stay in layout
    /// order.
    ///
    /// ```
    /// use qrs_core::{Ket, SystemLayout};
    /// let bell = Ket::maximally_entangled("A", "B", 2).unwrap().to_density();
    /// let a = bell.partial_trace(&["A"]).unwrap();
    /// assert_eq!(a.layout(), &SystemLayout::new([("A", 2)]).unwrap());
    /// assert!((a.matrix()[(0, 0)].re - 0.5).abs() < 1e-15);
    /// ```
    pub fn partial_trace<L: AsRef<str>>(&self, keep: &[L]) -> Result<DensityOperator> {
        let mut pos = self.layout.positions(keep)?;
        pos.sort_unstable();
        if pos.len() == self.layout.len() {
            return Ok(self.clone());
        }
        let rest = self.layout.complement_positions(&pos);
        let kept = self.layout.pick(&pos);
        let mut order = pos;
        order.extend(&rest);
        let src = axis_permutation(&self.layout.dims(), &order);
        let dk = kept.total_dim();
        let dr = self.layout.total_dim() / dk;
        let mut out = CMatrix::zeros(dk, dk);
        for a in 0..dk {
            for b in 0..dk {
                let mut acc = ZERO;
                for r in 0..dr {
                    acc += self.matrix[(src[a * dr + r], src[b * dr + r])];
                }
                out[(a, b)] = acc;
            }
        }
        Ok(DensityOperator {
            layout: kept,
            matrix: out,
        })
    }

    /// Traces out the named factors.
    pub fn trace_out<L: AsRef<str>>(&self, discard: &[L]) -> Result<DensityOperator> {
        let pos = self.layout.positions(discard)?;
        let keep: Vec<SystemLabel> = self
            .layout
            .complement_positions(&pos)
            .into_iter()
            .map(|p| self.layout.factors()[p].0.clone())
            .collect();
        self.partial_trace(&keep)
    }

    /// Reorders the factors; `new_order` must list every label once.
    /// Reordering back with the original labels restores the matrix exactly.
    pub fn permute<L: AsRef<str>>(&self, new_order: &[L]) -> Result<DensityOperator> {
        let order = permutation_positions(&self.layout, new_order)?;
        let src = axis_permutation(&self.layout.dims(), &order);
        Ok(DensityOperator {
            layout: self.layout.pick(&order),
            matrix: reorder_matrix(&self.matrix, &src),
        })
    }

    /// Minimal purification: the purifier factor has dimension equal to the
    /// rank and is appended last.
    pub fn purify(&self, purifier: &str) -> Result<Ket> {
        self.purify_impl(purifier, None)
    }

    /// Purification with an explicit purifier dimension (at least the rank).
    pub fn purify_with_dim(&self, purifier: &str, dim: usize) -> Result<Ket> {
        self.purify_impl(purifier, Some(dim))
    }

    fn purify_impl(&self, purifier: &str, dim: Option<usize>) -> Result<Ket> {
        let eig = eigh(&self.matrix)?;
        let rank = eig.values.iter().filter(|&&v| v > RANK_CUTOFF).count().max(1);
        let pdim = match dim {
            None => rank,
            Some(d) if d >= rank => d,
            Some(d) => return Err(Error::OutOfRange(format!("purifier dimension {d} below rank {rank}"))),
        };
        let layout = self.layout.concat(&SystemLayout::single(purifier, pdim)?)?;
        let d = self.dim();
        let mut v = CVector::zeros(d * pdim);
        for k in 0..rank {
            let w = eig.values[k].max(0.0).sqrt();
            for i in 0..d {
                v[i * pdim + k] = eig.vectors[(i, k)] * w;
            }
        }
        Ket::normalized(layout, v)
    }

    /// `V ρ V†` for an isometry acting on `acting_on` (in `op.input()`
    /// order). Output placement follows [`Ket::apply`].
    pub fn conjugate<L: AsRef<str>>(&self, op: &LinearOperator, acting_on: &[L]) -> Result<DensityOperator> {
        if !op.is_isometry(1e-9) {
            return Err(Error::InvalidChannel(format!(
                "operator is not an isometry (defect {:.3e})",
                op.isometry_defect()
            )));
        }
        self.apply_kraus(std::slice::from_ref(op.matrix()), op.input(), op.output(), acting_on)
    }

    /// `Σ_k (K_k ⊗ I) ρ (K_k ⊗ I)†` with the output placed like
    /// [`Ket::apply`]. Trace preservation is the caller's responsibility.
    pub(crate) fn apply_kraus<L: AsRef<str>>(
        &self,
        kraus: &[CMatrix],
        input: &SystemLayout,
        output: &SystemLayout,
        acting_on: &[L],
    ) -> Result<DensityOperator> {
        let pos = self.layout.positions(acting_on)?;
        let acting = self.layout.pick(&pos);
        if acting.dims() != input.dims() {
            return Err(Error::LayoutMismatch(format!(
                "channel input {input} does not match {acting}"
            )));
        }
        let rest = self.layout.complement_positions(&pos);
        let mut order = pos.clone();
        order.extend(&rest);
        let src = axis_permutation(&self.layout.dims(), &order);
        let staged_in = reorder_matrix(&self.matrix, &src);
        let d_rest = self.dim() / acting.total_dim();
        let out = conjugate_sum(kraus, &staged_in, d_rest);
        let (staged, final_layout, order) = substitution(&self.layout, &pos, output)?;
        let src = axis_permutation(&staged.dims(), &order);
        Ok(DensityOperator {
            layout: final_layout,
            matrix: reorder_matrix(&out, &src),
        })
    }

    /// Renames one factor.
    pub fn relabel(&self, from: &str, to: &str) -> Result<DensityOperator> {
        Ok(DensityOperator {
            layout: rename(&self.layout, from, to)?,
            matrix: self.matrix.clone(),
        })
    }

    /// Same matrix on a layout with equal total dimension.
    pub fn with_layout(&self, layout: SystemLayout) -> Result<DensityOperator> {
        DensityOperator::shaped(layout, self.matrix.clone())
    }

    /// Is the state pure within `tol` (`1 − Tr ρ² ≤ tol`)?
    pub fn is_pure(&self, tol: f64) -> bool {
        let purity: f64 = self.matrix.iter().map(|z| z.norm_sqr()).sum();
        1.0 - purity <= tol
    }
}

fn rename(layout: &SystemLayout, from: &str, to: &str) -> Result<SystemLayout> {
    layout.index_of(from)?;
    let to = SystemLabel::new(to)?;
    layout.relabel(|l| if l.as_str() == from { to.clone() } else { l.clone() })
}

fn check_len(layout: &SystemLayout, len: usize) -> Result<()> {
    if layout.total_dim() != len {
        return Err(Error::DimensionMismatch {
            expected: layout.total_dim(),
            got: len,
        });
    }
    Ok(())
}

pub(crate) fn same_layout(a: &SystemLayout, b: &SystemLayout) -> Result<()> {
    if a != b {
        return Err(Error::LayoutMismatch(format!("{a} vs {b}")));
    }
    Ok(())
}
