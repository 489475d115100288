use crate::error::{Error, Result};

use super::layout::{axis_permutation, SystemLayout};
use super::linalg::{frobenius, identity, kron, CMatrix};

/// Linear map between two labeled spaces; rows index the output.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearOperator {
    input: SystemLayout,
    output: SystemLayout,
    matrix: CMatrix,
}

impl LinearOperator {
    pub fn new(input: SystemLayout, output: SystemLayout, matrix: CMatrix) -> Result<Self> {
        if matrix.nrows() != output.total_dim() {
            return Err(Error::DimensionMismatch {
                expected: output.total_dim(),
                got: matrix.nrows(),
            });
        }
        if matrix.ncols() != input.total_dim() {
            return Err(Error::DimensionMismatch {
                expected: input.total_dim(),
                got: matrix.ncols(),
            });
        }
        Ok(LinearOperator { input, output, matrix })
    }

    pub fn identity(layout: &SystemLayout) -> Self {
        LinearOperator {
            input: layout.clone(),
            output: layout.clone(),
            matrix: identity(layout.total_dim()),
        }
    }

    pub fn input(&self) -> &SystemLayout {
        &self.input
    }

    pub fn output(&self) -> &SystemLayout {
        &self.output
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    /// `‖V†V − I‖_F`; zero for an exact isometry.
    pub fn isometry_defect(&self) -> f64 {
        frobenius(&(self.matrix.adjoint() * &self.matrix - identity(self.input.total_dim())))
    }

    pub fn is_isometry(&self, tol: f64) -> bool {
        self.isometry_defect() <= tol
    }

    pub fn adjoint(&self) -> LinearOperator {
        LinearOperator {
            input: self.output.clone(),
            output: self.input.clone(),
            matrix: self.matrix.adjoint(),
        }
    }

    /// `next ∘ self`; the output of `self` must have the dimensions of
    /// `next`'s input.
    pub fn then(&self, next: &LinearOperator) -> Result<LinearOperator> {
        if self.output.dims() != next.input.dims() {
            return Err(Error::LayoutMismatch(format!(
                "cannot feed {} into {}",
                self.output, next.input
            )));
        }
        Ok(LinearOperator {
            input: self.input.clone(),
            output: next.output.clone(),
            matrix: &next.matrix * &self.matrix,
        })
    }

    pub fn tensor(&self, other: &LinearOperator) -> Result<LinearOperator> {
        Ok(LinearOperator {
            input: self.input.concat(&other.input)?,
            output: self.output.concat(&other.output)?,
            matrix: kron(&self.matrix, &other.matrix),
        })
    }

    /// Reorders the output factors; `new_order` lists output labels.
    pub fn permute_output<L: AsRef<str>>(&self, new_order: &[L]) -> Result<LinearOperator> {
        let order = permutation_positions(&self.output, new_order)?;
        let src = axis_permutation(&self.output.dims(), &order);
        let matrix = CMatrix::from_fn(self.matrix.nrows(), self.matrix.ncols(), |i, j| {
            self.matrix[(src[i], j)]
        });
        Ok(LinearOperator {
            input: self.input.clone(),
            output: self.output.pick(&order),
            matrix,
        })
    }

    /// Same matrix with new layouts of equal total dimension.
    pub fn with_layouts(&self, input: SystemLayout, output: SystemLayout) -> Result<LinearOperator> {
        LinearOperator::new(input, output, self.matrix.clone())
    }
}

pub(crate) fn permutation_positions<L: AsRef<str>>(layout: &SystemLayout, new_order: &[L]) -> Result<Vec<usize>> {
    if new_order.len() != layout.len() {
        return Err(Error::NotPermutation(format!(
            "{} labels given for layout {}",
            new_order.len(),
            layout
        )));
    }
    layout.positions(new_order).map_err(|e| match e {
        Error::UnknownLabel(l) | Error::DuplicateLabel(l) => {
            Error::NotPermutation(format!("`{l}` in reordering of {layout}"))
        }
        other => other,
    })
}
