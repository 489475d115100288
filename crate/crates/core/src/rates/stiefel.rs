//! Riemannian gradient descent on products of complex Stiefel manifolds.
//!
//! A point is a list of isometries `X_i` (`X_i†X_i = I`). Gradients are
//! Euclidean with respect to `Re Tr(A†B)` and are projected onto the
//! tangent space `Z − X herm(X†Z)`. Steps are retracted by a QR
//! decomposition with a fixed phase convention.

use rand::Rng;

use crate::error::Result;
use crate::tensor::random::ginibre;
use crate::tensor::{qr_isometry, CMatrix};

/// Value and Euclidean gradient (one matrix per factor).
pub(crate) struct Evaluation {
    pub value: f64,
    pub grad: Vec<CMatrix>,
}

pub(crate) trait Objective {
    fn evaluate(&self, x: &[CMatrix], want_grad: bool) -> Result<Evaluation>;
}

/// Stopping rules for [`minimize`].
#[derive(Clone, Copy, Debug)]
pub(crate) struct Schedule {
    pub max_iterations: usize,
    /// Stop after three consecutive steps improving by less than this.
    pub tolerance: f64,
}

pub(crate) struct Minimum {
    pub point: Vec<CMatrix>,
    pub value: f64,
    pub iterations: usize,
}

fn herm(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()).scale(0.5)
}

pub(crate) fn project(x: &CMatrix, z: &CMatrix) -> CMatrix {
    z - x * herm(&(x.adjoint() * z))
}

pub(crate) fn retract(x: &CMatrix, step: &CMatrix, t: f64) -> CMatrix {
    qr_isometry(&(x + step.scale(t)))
}

fn inner(a: &[CMatrix], b: &[CMatrix]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.iter().zip(y.iter()).map(|(p, q)| (p.conj() * q).re).sum::<f64>())
        .sum()
}

fn riemannian(x: &[CMatrix], egrad: &[CMatrix]) -> Vec<CMatrix> {
    x.iter().zip(egrad).map(|(x, g)| project(x, g)).collect()
}

/// Armijo-backtracked gradient descent with Barzilai-Borwein initial steps.
pub(crate) fn minimize(objective: &dyn Objective, start: Vec<CMatrix>, schedule: Schedule) -> Result<Minimum> {
    let mut x = start;
    let mut eval = objective.evaluate(&x, true)?;
    let mut g = riemannian(&x, &eval.grad);
    let mut step = 1.0 / inner(&g, &g).sqrt().max(1.0);
    let mut prev: Option<(Vec<CMatrix>, Vec<CMatrix>)> = None;
    let mut quiet = 0;
    let mut iterations = 0;
    while iterations < schedule.max_iterations {
        let gg = inner(&g, &g);
        if !(gg > 1e-26) {
            break;
        }
        if let Some((px, pg)) = &prev {
            let s: Vec<CMatrix> = x.iter().zip(px).map(|(a, b)| a - b).collect();
            let y: Vec<CMatrix> = g.iter().zip(pg).map(|(a, b)| a - b).collect();
            let sy = inner(&s, &y).abs();
            if sy > 1e-300 {
                step = (inner(&s, &s) / sy).clamp(1e-10, 1e4);
            }
        }
        let mut t = step;
        let mut accepted = None;
        for _ in 0..50 {
            let trial: Vec<CMatrix> = x.iter().zip(&g).map(|(x, g)| retract(x, g, -t)).collect();
            let e = objective.evaluate(&trial, false)?;
            if e.value.is_finite() && e.value <= eval.value - 1e-4 * t * gg {
                accepted = Some((trial, e.value));
                break;
            }
            t *= 0.5;
        }
        let Some((trial, value)) = accepted else { break };
        iterations += 1;
        let improvement = eval.value - value;
        prev = Some((std::mem::replace(&mut x, trial), g));
        eval = objective.evaluate(&x, true)?;
        g = riemannian(&x, &eval.grad);
        if improvement < schedule.tolerance * eval.value.abs().max(1.0) {
            quiet += 1;
            if quiet >= 3 {
                break;
            }
        } else {
            quiet = 0;
        }
    }
    Ok(Minimum {
        value: eval.value,
        point: x,
        iterations,
    })
}

/// Largest discrepancy between the analytic Riemannian directional
/// derivative and a central finite difference along the retraction, over
/// `directions` random unit tangent directions. Each discrepancy is divided
/// by the norm of the Riemannian gradient, so the figure is scale free and
/// does not blow up along directions orthogonal to the gradient.
pub(crate) fn gradient_check<R: Rng + ?Sized>(
    objective: &dyn Objective,
    x: &[CMatrix],
    directions: usize,
    h: f64,
    rng: &mut R,
) -> Result<f64> {
    let eval = objective.evaluate(x, true)?;
    let g = riemannian(x, &eval.grad);
    let gnorm = inner(&g, &g).sqrt();
    let mut worst = 0.0f64;
    for _ in 0..directions {
        let mut d: Vec<CMatrix> = x
            .iter()
            .map(|xi| project(xi, &ginibre(xi.nrows(), xi.ncols(), rng)))
            .collect();
        let norm = inner(&d, &d).sqrt();
        for m in &mut d {
            *m = m.unscale(norm);
        }
        let analytic = inner(&g, &d);
        let plus: Vec<CMatrix> = x.iter().zip(&d).map(|(x, d)| retract(x, d, h)).collect();
        let minus: Vec<CMatrix> = x.iter().zip(&d).map(|(x, d)| retract(x, d, -h)).collect();
        let numeric = (objective.evaluate(&plus, false)?.value - objective.evaluate(&minus, false)?.value) / (2.0 * h);
        let scale = gnorm.max(analytic.abs()).max(numeric.abs()).max(1e-300);
        worst = worst.max((analytic - numeric).abs() / scale);
    }
    Ok(worst)
}
