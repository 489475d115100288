//! Closed-form anchors and explicit constructions of feasible points.

use crate::error::{Error, Result};
use crate::ki::{ki_decompose, ki_entropies, KiConfig};
use crate::tensor::{CMatrix, DensityOperator, LinearOperator, SystemLayout, C64};

use super::instance::{fresh_label, pad_environment};

/// `S(CQ)_ω − ½ S(C)_ω` from the Koashi-Imoto decomposition: the assisted
/// rate of the identity channel on `A`.
///
/// ```
/// use qrs_core::rates::oracle_identity_assisted;
/// use qrs_core::Ket;
/// let bell = Ket::maximally_entangled("A", "R", 2).unwrap().to_density();
/// assert!((oracle_identity_assisted(&bell, &["A"]).unwrap() - 1.0).abs() < 1e-9);
/// ```
pub fn oracle_identity_assisted<L: AsRef<str>>(state: &DensityOperator, a_labels: &[L]) -> Result<f64> {
    let e = ki_entropies(&ki_decompose(state, a_labels, &KiConfig::default())?)?;
    Ok(e.s_cq - 0.5 * e.s_c)
}

/// `S(CQ)_ω`: the unassisted rate of the identity channel on `A`.
pub fn oracle_identity_unassisted<L: AsRef<str>>(state: &DensityOperator, a_labels: &[L]) -> Result<f64> {
    Ok(ki_entropies(&ki_decompose(state, a_labels, &KiConfig::default())?)?.s_cq)
}

fn split_environment(iso: &LinearOperator) -> Result<(SystemLayout, usize)> {
    let out = iso.output();
    let n = out.len();
    if n < 2 {
        return Err(Error::LayoutMismatch(format!("{out} has no environment factor")));
    }
    Ok((
        SystemLayout::from_factors(out.factors()[..n - 1].to_vec())?,
        out.factors()[n - 1].1,
    ))
}

/// Flagged mixture `√t U₁ ⊗ |00⟩^{FF′} + √(1−t) U₂ ⊗ |11⟩^{FF′}` of two
/// dilations with equal input and equal non-environment outputs. The last
/// output factor of each is its environment; the smaller one is padded. The
/// result has output `[…, E, F, F′]`.
pub fn flag_mixture(first: &LinearOperator, second: &LinearOperator, t: f64) -> Result<LinearOperator> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::OutOfRange(format!("mixing weight {t}")));
    }
    let (head1, d1) = split_environment(first)?;
    let (head2, d2) = split_environment(second)?;
    if first.input() != second.input() || head1 != head2 {
        return Err(Error::LayoutMismatch(format!(
            "cannot mix {} -> {} with {} -> {}",
            first.input(),
            first.output(),
            second.input(),
            second.output()
        )));
    }
    let d = d1.max(d2);
    let u1 = pad_environment(first.matrix(), d1, d);
    let u2 = pad_environment(second.matrix(), d2, d);
    let (a, b) = (C64::new(t.sqrt(), 0.0), C64::new((1.0 - t).sqrt(), 0.0));
    let m = CMatrix::from_fn(u1.nrows() * 4, u1.ncols(), |r, c| match r % 4 {
        0 => u1[(r / 4, c)] * a,
        3 => u2[(r / 4, c)] * b,
        _ => C64::new(0.0, 0.0),
    });
    let env = first.output().factors().last().unwrap().0.clone();
    let f = fresh_label("F", &[first.output(), first.input()]);
    let fp = format!("{f}'");
    let output = head1
        .concat(&SystemLayout::from_factors(vec![(env, d)])?)?
        .concat(&SystemLayout::new([(f.as_str(), 2), (fp.as_str(), 2)])?)?;
    LinearOperator::new(first.input().clone(), output, m)
}

/// `U₁ ⊗ U₂`, renaming output factors of `second` that clash with `first`.
pub fn tensor_points(first: &LinearOperator, second: &LinearOperator) -> Result<LinearOperator> {
    let taken = first.output().clone();
    let renamed = second.output().relabel(|l| {
        if taken.contains(l.as_str()) {
            crate::tensor::SystemLabel::new(fresh_label(l.as_str(), &[&taken, second.output()]))
                .expect("nonempty label")
        } else {
            l.clone()
        }
    })?;
    first.tensor(&second.with_layouts(second.input().clone(), renamed)?)
}

/// [`tensor_points`] reordered to `[outputs₁, outputs₂, E]` with both
/// environments merged into one last factor, the shape `warm_start` expects.
pub fn tensor_points_merged(first: &LinearOperator, second: &LinearOperator) -> Result<LinearOperator> {
    let (head1, d1) = split_environment(first)?;
    let (head2, d2) = split_environment(second)?;
    let joint = tensor_points(first, second)?;
    let labels: Vec<String> = joint.output().labels().map(|l| l.to_string()).collect();
    let (n1, n2) = (head1.len(), head2.len());
    let env1 = labels[n1].clone();
    let order: Vec<&str> = labels[..n1]
        .iter()
        .chain(&labels[n1 + 1..n1 + 1 + n2])
        .chain([&env1, &labels[n1 + 1 + n2]])
        .map(String::as_str)
        .collect();
    let reordered = joint.permute_output(&order)?;
    let heads = SystemLayout::from_factors(reordered.output().factors()[..n1 + n2].to_vec())?;
    let output = heads.concat(&SystemLayout::single(env1.as_str(), d1 * d2)?)?;
    reordered.with_layouts(reordered.input().clone(), output)
}
