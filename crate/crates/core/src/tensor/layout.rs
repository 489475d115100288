use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Name of one tensor factor, e.g. `A`, `R'` or `W_A`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct SystemLabel(String);

impl SystemLabel {
    pub fn new(name: impl Into<String>) -> Result<Self> {
        let name = name.into();
        if name.is_empty() {
            return Err(Error::EmptyLabel);
        }
        Ok(SystemLabel(name))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// `A` -> `A#3`, used when building tensor powers.
    pub fn with_copy_index(&self, copy: usize) -> SystemLabel {
        SystemLabel(format!("{}#{}", self.0, copy))
    }
}

impl TryFrom<String> for SystemLabel {
    type Error = Error;
    fn try_from(value: String) -> Result<Self> {
        SystemLabel::new(value)
    }
}

impl From<SystemLabel> for String {
    fn from(value: SystemLabel) -> Self {
        value.0
    }
}

impl AsRef<str> for SystemLabel {
    fn as_ref(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for SystemLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Ordered tensor factorization of a Hilbert space.
///
/// Basis indices are big-endian: the first factor is the most significant
/// digit of the flat index. An empty layout is the one-dimensional space.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct SystemLayout {
    factors: Vec<(SystemLabel, usize)>,
}

impl SystemLayout {
    /// Builds a layout from `(label, dimension)` pairs.
    ///
    /// ```
    /// use qrs_core::SystemLayout;
    /// let layout = SystemLayout::new([("A", 2), ("R", 3)]).unwrap();
    /// assert_eq!(layout.total_dim(), 6);
    /// assert!(SystemLayout::new([("A", 2), ("A", 2)]).is_err());
    /// ```
    pub fn new<S: Into<String>>(factors: impl IntoIterator<Item = (S, usize)>) -> Result<Self> {
        let factors = factors
            .into_iter()
            .map(|(l, d)| Ok((SystemLabel::new(l)?, d)))
            .collect::<Result<Vec<_>>>()?;
        Self::from_factors(factors)
    }

    pub fn from_factors(factors: Vec<(SystemLabel, usize)>) -> Result<Self> {
        for (i, (label, dim)) in factors.iter().enumerate() {
            if *dim == 0 {
                return Err(Error::ZeroDimension(label.to_string()));
            }
            if factors[..i].iter().any(|(l, _)| l == label) {
                return Err(Error::DuplicateLabel(label.to_string()));
            }
        }
        Ok(SystemLayout { factors })
    }

    /// The one-dimensional layout with no factors.
    pub fn trivial() -> Self {
        SystemLayout::default()
    }

    /// A single factor.
    pub fn single(label: impl Into<String>, dim: usize) -> Result<Self> {
        Self::new([(label.into(), dim)])
    }

    pub fn factors(&self) -> &[(SystemLabel, usize)] {
        &self.factors
    }

    pub fn len(&self) -> usize {
        self.factors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.factors.is_empty()
    }

    pub fn total_dim(&self) -> usize {
        self.factors.iter().map(|(_, d)| d).product()
    }

    pub fn dims(&self) -> Vec<usize> {
        self.factors.iter().map(|(_, d)| *d).collect()
    }

    pub fn labels(&self) -> impl Iterator<Item = &SystemLabel> {
        self.factors.iter().map(|(l, _)| l)
    }

    pub fn position(&self, label: &str) -> Option<usize> {
        self.factors.iter().position(|(l, _)| l.as_str() == label)
    }

    pub fn contains(&self, label: &str) -> bool {
        self.position(label).is_some()
    }

    pub fn index_of(&self, label: &str) -> Result<usize> {
        self.position(label)
            .ok_or_else(|| Error::UnknownLabel(label.to_string()))
    }

    pub fn dim_of(&self, label: &str) -> Result<usize> {
        Ok(self.factors[self.index_of(label)?].1)
    }

    /// Positions of `labels`, in the order given. Rejects repeats.
    pub fn positions<L: AsRef<str>>(&self, labels: &[L]) -> Result<Vec<usize>> {
        let mut out = Vec::with_capacity(labels.len());
        for l in labels {
            let p = self.index_of(l.as_ref())?;
            if out.contains(&p) {
                return Err(Error::DuplicateLabel(l.as_ref().to_string()));
            }
            out.push(p);
        }
        Ok(out)
    }

    /// Factors whose labels appear in `labels`, kept in layout order.
    pub fn subset<L: AsRef<str>>(&self, labels: &[L]) -> Result<SystemLayout> {
        let mut pos = self.positions(labels)?;
        pos.sort_unstable();
        Ok(self.pick(&pos))
    }

    pub(crate) fn pick(&self, positions: &[usize]) -> SystemLayout {
        SystemLayout {
            factors: positions.iter().map(|&p| self.factors[p].clone()).collect(),
        }
    }

    /// Positions of the factors not named in `labels`, in layout order.
    pub(crate) fn complement_positions(&self, positions: &[usize]) -> Vec<usize> {
        (0..self.len()).filter(|p| !positions.contains(p)).collect()
    }

    /// `self ⊗ other`; labels must stay unique.
    pub fn concat(&self, other: &SystemLayout) -> Result<SystemLayout> {
        let mut factors = self.factors.clone();
        factors.extend(other.factors.iter().cloned());
        SystemLayout::from_factors(factors)
    }

    /// Same dimensions with every label passed through `f`.
    pub fn relabel(&self, f: impl Fn(&SystemLabel) -> SystemLabel) -> Result<SystemLayout> {
        SystemLayout::from_factors(self.factors.iter().map(|(l, d)| (f(l), *d)).collect())
    }

    /// Merges all factors into one factor named `label`.
    pub fn merged(&self, label: impl Into<String>) -> Result<SystemLayout> {
        SystemLayout::single(label, self.total_dim())
    }

    /// Label names joined with commas; for diagnostics.
    pub fn describe(&self) -> String {
        self.factors
            .iter()
            .map(|(l, d)| format!("{l}:{d}"))
            .collect::<Vec<_>>()
            .join(",")
    }
}

impl fmt::Display for SystemLayout {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}]", self.describe())
    }
}

/// `src[new_flat] = old_flat` for the axis reordering `order`
/// (`order[k]` is the old axis placed at new position `k`).
pub(crate) fn axis_permutation(dims: &[usize], order: &[usize]) -> Vec<usize> {
    debug_assert_eq!(dims.len(), order.len());
    let total: usize = dims.iter().product();
    let n = dims.len();
    let mut old_strides = vec![1usize; n];
    for k in (0..n.saturating_sub(1)).rev() {
        old_strides[k] = old_strides[k + 1] * dims[k + 1];
    }
    let new_dims: Vec<usize> = order.iter().map(|&o| dims[o]).collect();
    let strides: Vec<usize> = order.iter().map(|&o| old_strides[o]).collect();
    let mut src = Vec::with_capacity(total);
    let mut counter = vec![0usize; n];
    let mut flat = 0usize;
    for _ in 0..total {
        src.push(flat);
        // increment the big-endian counter over the new axes
        for k in (0..n).rev() {
            counter[k] += 1;
            flat += strides[k];
            if counter[k] < new_dims[k] {
                break;
            }
            flat -= strides[k] * new_dims[k];
            counter[k] = 0;
        }
    }
    src
}

/// Layout and axis order that replaces the factors at `acting` with
/// `replacement`, inserted where the first replaced factor was.
///
/// Returns `(staged, final, order)`: `staged` is `replacement ++ rest`, and
/// `order` maps `final` positions to `staged` positions.
pub(crate) fn substitution(
    layout: &SystemLayout,
    acting: &[usize],
    replacement: &SystemLayout,
) -> Result<(SystemLayout, SystemLayout, Vec<usize>)> {
    let rest = layout.complement_positions(acting);
    let rest_layout = layout.pick(&rest);
    let staged = replacement.concat(&rest_layout)?;
    let insert_at = acting
        .iter()
        .min()
        .map(|&first| rest.iter().filter(|&&r| r < first).count())
        .unwrap_or(0);
    let n_rep = replacement.len();
    let mut order = Vec::with_capacity(staged.len());
    order.extend(n_rep..n_rep + insert_at);
    order.extend(0..n_rep);
    order.extend(n_rep + insert_at..staged.len());
    let final_layout = staged.pick(&order);
    Ok((staged, final_layout, order))
}
