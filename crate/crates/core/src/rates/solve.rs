//! Restarted optimization, feasibility restoration and certification.

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::channels::QuantumChannel;
use crate::entropics::{ket_entropy, mutual_information};
use crate::error::{Error, Result};
use crate::tensor::random::haar_isometry;
use crate::tensor::{CMatrix, DensityOperator, LinearOperator, SystemLabel, SystemLayout, C64};

use super::instance::{
    constraint_fidelity, fresh_label, pad_environment, target_state, AssistedEngine, AssistedObjective, Free, Instance,
    Penalty, PurificationEngine, UnassistedEngine, UnassistedObjective,
};
use super::marginal::FidelityTarget;
use super::stiefel::{self, minimize, Objective, Schedule};
use super::{OptimizerConfig, RateKind, RateQuery, RateResult, RestartTrace};

/// Engine and certified values may differ by at most this much.
const AGREEMENT_TOL: f64 = 1e-8;

fn restart_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

fn schedule(cfg: &OptimizerConfig) -> Schedule {
    Schedule {
        max_iterations: cfg.max_iterations,
        tolerance: cfg.tolerance,
    }
}

/// Penalty weight of stage `s`; the last stage repeats the previous weight
/// with updated multipliers.
fn stage_mu(cfg: &OptimizerConfig, s: usize) -> f64 {
    let capped = s.min(cfg.penalty_stages.saturating_sub(1));
    cfg.penalty_initial * cfg.penalty_growth.powi(capped as i32)
}

/// `√(1−t) V ⊗ |0⟩_F + √t V_ref ⊗ |1⟩_F` with `F` the least significant part
/// of the enlarged environment.
fn flag_mix(v: &CMatrix, reference: &CMatrix, t: f64) -> CMatrix {
    let (a, b) = ((1.0 - t).sqrt(), t.sqrt());
    CMatrix::from_fn(2 * v.nrows(), v.ncols(), |r, c| {
        if r % 2 == 0 {
            v[(r / 2, c)] * a
        } else {
            reference[(r / 2, c)] * b
        }
    })
}

/// Smallest reference weight making the point feasible. Fidelity is concave
/// along the mixing path and equals one at the reference, so the feasible
/// weights form an interval ending at 1.
fn restore(
    inst: &Instance,
    target: &FidelityTarget,
    v: CMatrix,
    reference: &CMatrix,
    d_e: usize,
    threshold: f64,
) -> Result<(CMatrix, usize, f64)> {
    if constraint_fidelity(inst, target, &v, d_e)? >= threshold {
        return Ok((v, d_e, 0.0));
    }
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if constraint_fidelity(inst, target, &flag_mix(&v, reference, mid), 2 * d_e)? >= threshold {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok((flag_mix(&v, reference, hi), 2 * d_e, hi))
}

struct Candidate {
    trace: RestartTrace,
    /// Certified point: value per copy, isometries and channels.
    point: Option<Certified>,
}

#[derive(Clone)]
struct Certified {
    value: f64,
    fidelity: f64,
    isometries: Vec<LinearOperator>,
    channels: Vec<QuantumChannel>,
}

/// Labels and dimensions shared by certification.
struct Context<'a> {
    inst: &'a Instance,
    sigma: DensityOperator,
    env: String,
    threshold: f64,
}

impl<'a> Context<'a> {
    fn new(inst: &'a Instance, threshold: f64) -> Result<Self> {
        let sigma = inst.channel.apply(&inst.source, &inst.a_labels)?;
        let env = fresh_label("E", &[inst.source.layout(), inst.channel.output()]);
        Ok(Context {
            inst,
            sigma,
            env,
            threshold,
        })
    }

    fn dilation(&self, v: &CMatrix, d_e: usize) -> Result<LinearOperator> {
        LinearOperator::new(
            self.inst.channel.input().clone(),
            self.inst.dilation_output(&self.env, d_e)?,
            v.clone(),
        )
    }

    fn refs(&self) -> Vec<SystemLabel> {
        let mut r = self.inst.r_labels.clone();
        r.push(self.inst.purifier.clone());
        r
    }

    /// Rebuilds the dilation from the Kraus operators of `channel` and
    /// applies it to `|ρ⟩`.
    fn dilated_ket(&self, channel: &QuantumChannel) -> Result<crate::tensor::Ket> {
        let dil = channel.stinespring_of_kraus(&self.env)?;
        self.inst.ket.apply(&dil.isometry, &self.inst.a_labels)
    }

    fn fidelity(&self, channel: &QuantumChannel) -> Result<f64> {
        let tau = channel.apply(&self.inst.source, &self.inst.a_labels)?;
        let order: Vec<SystemLabel> = self.sigma.layout().labels().cloned().collect();
        crate::entropics::fidelity(&self.sigma, &tau.permute(&order)?)
    }

    fn certify_assisted(&self, v: &CMatrix, d_e: usize) -> Result<Option<Certified>> {
        let iso = self.dilation(v, d_e)?;
        let lambda1 = QuantumChannel::from_isometry(&iso, &[self.env.as_str()])?;
        let fidelity = self.fidelity(&lambda1)?;
        if fidelity < self.threshold {
            return Ok(None);
        }
        let ket = self.dilated_ket(&lambda1)?;
        let refs = self.refs();
        let keep: Vec<SystemLabel> = self.inst.bob.iter().chain(&refs).cloned().collect();
        let tau = ket.reduced(&keep)?;
        let value = 0.5 * mutual_information(&tau, &self.inst.bob, &refs)?;
        Ok(Some(Certified {
            value: value / self.copies(),
            fidelity,
            isometries: vec![iso],
            channels: vec![lambda1],
        }))
    }

    fn copies(&self) -> f64 {
        self.inst.copies as f64
    }

    fn environment_channel(&self, w: &CMatrix, d_e: usize, d_ep: usize) -> Result<(LinearOperator, QuantumChannel)> {
        let e1 = fresh_label(
            &format!("{}'", self.env),
            &[self.inst.source.layout(), self.inst.channel.output()],
        );
        let e2 = format!("{e1}'");
        let iso = LinearOperator::new(
            SystemLayout::single(self.env.as_str(), d_e)?,
            SystemLayout::new([(e1.as_str(), d_ep), (e2.as_str(), w.nrows() / d_ep)])?,
            w.clone(),
        )?;
        let channel = QuantumChannel::from_isometry(&iso, &[e2.as_str()])?;
        Ok((iso, channel))
    }

    fn certify_unassisted(&self, v: &CMatrix, w: &CMatrix, d_e: usize, d_ep: usize) -> Result<Option<Certified>> {
        let iso_v = self.dilation(v, d_e)?;
        let lambda2 = QuantumChannel::from_isometry(&iso_v, &[self.env.as_str()])?;
        let fidelity = self.fidelity(&lambda2)?;
        if fidelity < self.threshold {
            return Ok(None);
        }
        let (iso_w, lambda3) = self.environment_channel(w, d_e, d_ep)?;
        let ket = self.dilated_ket(&lambda2)?;
        let dil3 = lambda3.stinespring_of_kraus("W~")?;
        let ket = ket.apply(&dil3.isometry, &[self.env.as_str()])?;
        let keep: Vec<SystemLabel> = self
            .inst
            .bob
            .iter()
            .cloned()
            .chain(lambda3.output().labels().cloned())
            .collect();
        let value = ket_entropy(&ket, &keep)?;
        Ok(Some(Certified {
            value: value / self.copies(),
            fidelity,
            isometries: vec![iso_v, iso_w],
            channels: vec![lambda2, lambda3],
        }))
    }
}

fn agree(engine: f64, certified: &Certified, copies: f64) -> bool {
    (engine / copies - certified.value).abs() <= AGREEMENT_TOL
}

/// Lowest certified value, ties to the lower index.
fn best(candidates: &[Candidate]) -> Option<&Candidate> {
    candidates.iter().filter(|c| c.point.is_some()).min_by(|a, b| {
        let (x, y) = (a.point.as_ref().unwrap().value, b.point.as_ref().unwrap().value);
        x.total_cmp(&y).then(a.trace.index.cmp(&b.trace.index))
    })
}

fn finish(
    kind: RateKind,
    query_gamma: f64,
    internal_gamma: f64,
    copies: usize,
    threshold: f64,
    candidates: Vec<Candidate>,
    optimized: usize,
    fallback: Certified,
    started: Instant,
) -> RateResult {
    let winner = best(&candidates).map(|c| c.point.clone().unwrap());
    let fallback_used = !candidates[..optimized].iter().any(|c| c.point.is_some());
    let point = match winner {
        Some(p) if !fallback_used || p.value <= fallback.value => p,
        _ => fallback,
    };
    RateResult {
        kind,
        value: point.value,
        copies,
        gamma: query_gamma,
        internal_gamma,
        fidelity: point.fidelity,
        constraint_residual: (threshold - point.fidelity).max(0.0),
        fallback: fallback_used,
        channels: point.channels,
        isometries: point.isometries,
        restarts: candidates.into_iter().map(|c| c.trace).collect(),
        wall_clock_seconds: started.elapsed().as_secs_f64(),
    }
}

/// Certified upper bound on `a(ρ^{⊗m}, γ)/m`.
///
/// ```
/// use qrs_core::rates::{assisted_rate, OptimizerConfig, RateQuery};
/// use qrs_core::{Ket, QuantumChannel, SystemLayout};
///
/// let bell = Ket::maximally_entangled("A", "R", 2).unwrap().to_density();
/// let id = QuantumChannel::identity_between(
///     SystemLayout::new([("A", 2)]).unwrap(),
///     SystemLayout::new([("B", 2)]).unwrap(),
/// )
/// .unwrap();
/// let cfg = OptimizerConfig { restarts: 2, ..OptimizerConfig::default() };
/// let q = RateQuery::new(bell, id, 0.0).unwrap().with_optimizer(cfg).unwrap();
/// let r = assisted_rate(&q).unwrap();
/// assert!((r.value - 1.0).abs() < 1e-3);
/// ```
pub fn assisted_rate(query: &RateQuery) -> Result<RateResult> {
    let started = Instant::now();
    query.validate()?;
    let cfg = &query.optimizer;
    let inst = Instance::new(&query.source, &query.channel, &query.bob, query.copies)?;
    let ctx = Context::new(&inst, query.fidelity_threshold())?;
    let copies = ctx.copies();
    let internal = query.internal_gamma();
    let target = target_state(&inst)?;

    let warm = match &query.warm_start {
        None => None,
        Some(w) => {
            let env_pos = w
                .output()
                .len()
                .checked_sub(1)
                .ok_or_else(|| Error::LayoutMismatch("warm start has no environment factor".into()))?;
            let d_w = w.output().factors()[env_pos].1;
            if w.input().dims() != inst.channel.input().dims()
                || w.output().total_dim() != inst.channel.output().total_dim() * d_w
            {
                return Err(Error::LayoutMismatch(format!(
                    "warm start {} -> {} does not fit the query",
                    w.input(),
                    w.output()
                )));
            }
            Some((w.matrix().clone(), d_w))
        }
    };
    let mut d_e = cfg.dim_e.unwrap_or(inst.default_env_dim());
    if let Some((_, d_w)) = &warm {
        d_e = d_e.max(*d_w);
    }
    let reference = inst.reference_dilation(d_e)?;
    let engine = AssistedEngine::new(&inst, d_e, target.clone())?;
    let rows = reference.nrows();

    let run = |i: usize| -> Result<Candidate> {
        let mut rng = restart_rng(cfg.seed, i);
        let (start, label) = match (i, &warm) {
            (0, Some((w, d_w))) => (pad_environment(w, *d_w, d_e), "warm"),
            (0, None) => (reference.clone(), "reference"),
            _ => (haar_isometry(rows, inst.d_a, &mut rng), "haar"),
        };
        let mut x = vec![start];
        let mut penalty = Penalty {
            mu: cfg.penalty_initial,
            lambda: 0.0,
            gamma: internal,
        };
        let mut iterations = 0;
        for s in 0..=cfg.penalty_stages {
            penalty.mu = stage_mu(cfg, s);
            let obj = AssistedObjective {
                engine: &engine,
                penalty,
            };
            let m = minimize(&obj, x, schedule(cfg))?;
            x = m.point;
            iterations += m.iterations;
            penalty.update(engine.fidelity(&x[0])?);
        }
        let v = x.pop().unwrap();
        let (v, d_env, restoration) = restore(&inst, &target, v, &reference, d_e, 1.0 - internal)?;
        let engine_value = if d_env == d_e {
            engine.terms(&v, false)?.value
        } else {
            AssistedEngine::new(&inst, d_env, target.clone())?
                .terms(&v, false)?
                .value
        };
        let point = ctx
            .certify_assisted(&v, d_env)?
            .filter(|p| agree(engine_value, p, copies));
        Ok(Candidate {
            trace: RestartTrace {
                index: i,
                start: label,
                value: point.as_ref().map(|p| p.value),
                fidelity: constraint_fidelity(&inst, &target, &v, d_env)?,
                iterations,
                restoration,
            },
            point,
        })
    };
    let mut candidates: Vec<Candidate> = (0..cfg.restarts).into_par_iter().map(run).collect::<Result<_>>()?;
    if let Some((w, d_w)) = &warm {
        let point = ctx.certify_assisted(w, *d_w)?;
        candidates.push(Candidate {
            trace: RestartTrace {
                index: cfg.restarts,
                start: "warm",
                value: point.as_ref().map(|p| p.value),
                fidelity: constraint_fidelity(&inst, &target, w, *d_w)?,
                iterations: 0,
                restoration: 0.0,
            },
            point,
        });
    }
    let fallback = ctx
        .certify_assisted(&reference, d_e)?
        .ok_or_else(|| Error::Protocol("reference channel failed certification".into()))?;
    Ok(finish(
        RateKind::Assisted,
        query.gamma,
        internal,
        query.copies,
        ctx.threshold,
        candidates,
        cfg.restarts,
        fallback,
        started,
    ))
}

/// `W ⊗ I_F` for a flag appended to the environment as its least
/// significant part; the flag ends up in `E″`.
fn extend_w(w: &CMatrix, d_e: usize, d_ep: usize) -> CMatrix {
    let mut out = CMatrix::zeros(w.nrows() * 2, w.ncols() * 2);
    for e1 in 0..d_ep {
        for e2 in 0..d_e {
            for e in 0..d_e {
                let val = w[(e1 * d_e + e2, e)];
                for f in 0..2 {
                    out[(e1 * 2 * d_e + e2 * 2 + f, e * 2 + f)] = val;
                }
            }
        }
    }
    out
}

/// Minimizes over `W` with `V` fixed, from the current `W` and from
/// `fresh` Haar-random starts. The objective is concave in the channel
/// `Λ₃`, so descent from a single start easily stalls at a poor extreme
/// point.
fn environment_step(
    engine: &UnassistedEngine,
    penalty: Penalty,
    v: &CMatrix,
    w: CMatrix,
    fresh: usize,
    rng: &mut ChaCha8Rng,
    sched: Schedule,
) -> Result<(CMatrix, usize)> {
    let obj = UnassistedObjective {
        engine,
        penalty,
        free: Free::W(v),
    };
    let (rows, cols) = w.shape();
    let mut iterations = 0;
    let mut best: Option<(CMatrix, f64)> = None;
    let starts = std::iter::once(w)
        .chain((0..fresh).map(|_| haar_isometry(rows, cols, rng)))
        .collect::<Vec<_>>();
    for start in starts {
        let m = minimize(&obj, vec![start], sched)?;
        iterations += m.iterations;
        if best.as_ref().is_none_or(|(_, b)| m.value < *b - 1e-12) {
            best = Some((m.point.into_iter().next().unwrap(), m.value));
        }
    }
    Ok((best.unwrap().0, iterations))
}

/// Certified upper bound on `u(ρ^{⊗m}, γ)/m` by alternating between the
/// dilation of `Λ₂` (penalized) and the environment isometry of `Λ₃`.
pub fn unassisted_rate(query: &RateQuery) -> Result<RateResult> {
    let started = Instant::now();
    query.validate()?;
    if query.warm_start.is_some() {
        return Err(Error::OutOfRange(
            "warm starts are supported for assisted_rate only".into(),
        ));
    }
    let cfg = &query.optimizer;
    let inst = Instance::new(&query.source, &query.channel, &query.bob, query.copies)?;
    let ctx = Context::new(&inst, query.fidelity_threshold())?;
    let copies = ctx.copies();
    let internal = query.internal_gamma();
    let target = target_state(&inst)?;
    let d_e = cfg.dim_e.unwrap_or(inst.default_env_dim());
    let d_ep = cfg.dim_eprime.unwrap_or(d_e);
    let reference = inst.reference_dilation(d_e)?;
    let engine = UnassistedEngine::new(&inst, d_e, d_ep, target.clone())?;
    let sched = schedule(cfg);

    let run = |i: usize| -> Result<Candidate> {
        let mut rng = restart_rng(cfg.seed, i);
        let (mut v, mut w, label) = if i == 0 {
            (reference.clone(), engine.trace_out_w(), "reference")
        } else {
            (
                haar_isometry(reference.nrows(), inst.d_a, &mut rng),
                haar_isometry(d_ep * d_e, d_e, &mut rng),
                "haar",
            )
        };
        let mut penalty = Penalty {
            mu: cfg.penalty_initial,
            lambda: 0.0,
            gamma: internal,
        };
        let mut iterations = 0;
        for s in 0..=cfg.penalty_stages {
            penalty.mu = stage_mu(cfg, s);
            let mut previous = f64::INFINITY;
            for _ in 0..cfg.see_saw_rounds.max(1) {
                let m = minimize(
                    &UnassistedObjective {
                        engine: &engine,
                        penalty,
                        free: Free::V(&w),
                    },
                    vec![v],
                    sched,
                )?;
                v = m.point.into_iter().next().unwrap();
                iterations += m.iterations;
                let (best_w, its) = environment_step(&engine, penalty, &v, w, cfg.w_starts, &mut rng, sched)?;
                w = best_w;
                iterations += its;
                let current = UnassistedObjective {
                    engine: &engine,
                    penalty,
                    free: Free::V(&w),
                }
                .evaluate(std::slice::from_ref(&v), false)?
                .value;
                if previous - current < cfg.tolerance * current.abs().max(1.0) {
                    break;
                }
                previous = current;
            }
            penalty.update(engine.fidelity(&v)?);
        }
        let (v, d_env, restoration) = restore(&inst, &target, v, &reference, d_e, 1.0 - internal)?;
        let (w, engine_value) = if d_env == d_e {
            let value = engine.terms(&v, &w, false, false)?.value;
            (w, value)
        } else {
            let wide = UnassistedEngine::new(&inst, d_env, d_ep, target.clone())?;
            let obj = UnassistedObjective {
                engine: &wide,
                penalty,
                free: Free::W(&v),
            };
            let m = minimize(&obj, vec![extend_w(&w, d_e, d_ep)], sched)?;
            iterations += m.iterations;
            let w = m.point.into_iter().next().unwrap();
            let value = wide.terms(&v, &w, false, false)?.value;
            (w, value)
        };
        let point = ctx
            .certify_unassisted(&v, &w, d_env, d_ep)?
            .filter(|p| agree(engine_value, p, copies));
        Ok(Candidate {
            trace: RestartTrace {
                index: i,
                start: label,
                value: point.as_ref().map(|p| p.value),
                fidelity: constraint_fidelity(&inst, &target, &v, d_env)?,
                iterations,
                restoration,
            },
            point,
        })
    };
    let candidates: Vec<Candidate> = (0..cfg.restarts).into_par_iter().map(run).collect::<Result<_>>()?;
    let fallback = ctx
        .certify_unassisted(&reference, &engine.trace_out_w(), d_e, d_ep)?
        .ok_or_else(|| Error::Protocol("reference channel failed certification".into()))?;
    Ok(finish(
        RateKind::Unassisted,
        query.gamma,
        internal,
        query.copies,
        ctx.threshold,
        candidates,
        cfg.restarts,
        fallback,
        started,
    ))
}

/// Certified upper bound on `E_p(X:Y)` with the kept part of the purifying
/// system limited to `ancilla_bound` dimensions. `Y` is every factor of
/// `state` outside `x_labels`.
///
/// ```
/// use qrs_core::rates::{entanglement_of_purification, OptimizerConfig};
/// use qrs_core::Ket;
///
/// let bell = Ket::maximally_entangled("X", "Y", 2).unwrap().to_density();
/// let cfg = OptimizerConfig { restarts: 2, ..OptimizerConfig::default() };
/// let r = entanglement_of_purification(&bell, &["X"], 2, &cfg).unwrap();
/// assert!((r.value - 1.0).abs() < 1e-9);
/// ```
pub fn entanglement_of_purification<L: AsRef<str>>(
    state: &DensityOperator,
    x_labels: &[L],
    ancilla_bound: usize,
    config: &OptimizerConfig,
) -> Result<RateResult> {
    let started = Instant::now();
    config.validate()?;
    if ancilla_bound == 0 {
        return Err(Error::ZeroDimension("ancilla bound".into()));
    }
    let layout = state.layout();
    let x_pos = layout.positions(x_labels)?;
    let x: Vec<SystemLabel> = x_pos.iter().map(|&p| layout.factors()[p].0.clone()).collect();
    let y: Vec<SystemLabel> = layout.labels().filter(|l| !x.contains(l)).cloned().collect();
    let order: Vec<SystemLabel> = x.iter().chain(&y).cloned().collect();
    let z = fresh_label("Z", &[layout]);
    let ket = state.permute(&order)?.purify(&z)?;
    let d_x = layout.subset(&x)?.total_dim();
    let d_y = state.dim() / d_x;
    let d_z = ket.layout().dim_of(&z)?;
    let psi: Vec<C64> = ket.amplitudes().iter().copied().collect();
    let engine = PurificationEngine::new(&psi, d_x, d_y, d_z, ancilla_bound)?;
    let e1 = fresh_label("E'", &[ket.layout()]);
    let e2 = format!("{e1}'");
    let certify = |w: &CMatrix, engine_value: f64| -> Result<Option<Certified>> {
        let iso = LinearOperator::new(
            SystemLayout::single(z.as_str(), d_z)?,
            SystemLayout::new([(e1.as_str(), ancilla_bound), (e2.as_str(), d_z)])?,
            w.clone(),
        )?;
        let channel = QuantumChannel::from_isometry(&iso, &[e2.as_str()])?;
        let dil = channel.stinespring_of_kraus(&e2)?;
        let out = ket.apply(&dil.isometry, &[z.as_str()])?;
        let keep: Vec<SystemLabel> = x.iter().cloned().chain([SystemLabel::new(e1.as_str())?]).collect();
        let value = ket_entropy(&out, &keep)?;
        Ok(((value - engine_value).abs() <= AGREEMENT_TOL).then_some(Certified {
            value,
            fidelity: 1.0,
            isometries: vec![iso],
            channels: vec![channel],
        }))
    };
    let sched = Schedule {
        max_iterations: config.max_iterations * (config.penalty_stages + 1),
        tolerance: config.tolerance,
    };
    let run = |i: usize| -> Result<Candidate> {
        let mut rng = restart_rng(config.seed, i);
        let (start, label) = if i == 0 {
            (engine.keep_nothing(), "trace-out")
        } else {
            (haar_isometry(ancilla_bound * d_z, d_z, &mut rng), "haar")
        };
        let m = minimize(&engine, vec![start], sched)?;
        let w = &m.point[0];
        let point = certify(w, engine.evaluate(&m.point, false)?.value)?;
        Ok(Candidate {
            trace: RestartTrace {
                index: i,
                start: label,
                value: point.as_ref().map(|p| p.value),
                fidelity: 1.0,
                iterations: m.iterations,
                restoration: 0.0,
            },
            point,
        })
    };
    let candidates: Vec<Candidate> = (0..config.restarts).into_par_iter().map(run).collect::<Result<_>>()?;
    let keep_nothing = engine.keep_nothing();
    let fallback = certify(
        &keep_nothing,
        engine.evaluate(std::slice::from_ref(&keep_nothing), false)?.value,
    )?
    .ok_or_else(|| Error::Protocol("trivial purification failed certification".into()))?;
    Ok(finish(
        RateKind::EntanglementOfPurification,
        0.0,
        0.0,
        1,
        1.0,
        candidates,
        config.restarts,
        fallback,
        started,
    ))
}

/// Objective examined by [`gradient_check`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CheckedObjective {
    Assisted,
    Unassisted,
}

/// Largest relative discrepancy between the analytic Riemannian gradient of
/// a penalized objective and central finite differences (step `1e-5`) over
/// 20 random tangent directions at a Haar-random point. Discrepancies are
/// measured relative to the norm of the Riemannian gradient.
pub fn gradient_check(query: &RateQuery, objective: CheckedObjective, seed: u64) -> Result<f64> {
    query.validate()?;
    let inst = Instance::new(&query.source, &query.channel, &query.bob, query.copies)?;
    let target = target_state(&inst)?;
    let cfg = &query.optimizer;
    let d_e = cfg.dim_e.unwrap_or(inst.default_env_dim());
    let mut rng = restart_rng(seed, 0);
    let penalty = Penalty {
        mu: 10.0,
        lambda: 0.5,
        gamma: query.internal_gamma(),
    };
    let v = haar_isometry(inst.d_b * inst.d_k * d_e, inst.d_a, &mut rng);
    match objective {
        CheckedObjective::Assisted => {
            let engine = AssistedEngine::new(&inst, d_e, target)?;
            let obj = AssistedObjective {
                engine: &engine,
                penalty,
            };
            stiefel::gradient_check(&obj, &[v], 20, 1e-5, &mut rng)
        }
        CheckedObjective::Unassisted => {
            let d_ep = cfg.dim_eprime.unwrap_or(d_e);
            let engine = UnassistedEngine::new(&inst, d_e, d_ep, target)?;
            let w = haar_isometry(d_ep * d_e, d_e, &mut rng);
            let obj = UnassistedObjective {
                engine: &engine,
                penalty,
                free: Free::Both,
            };
            stiefel::gradient_check(&obj, &[v, w], 20, 1e-5, &mut rng)
        }
    }
}

/// Objective and fidelity of an explicit point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PointValue {
    /// Bits per copy.
    pub value: f64,
    pub fidelity: f64,
}

/// `½ I(B X : RR′)/m` and `F(σ, τ^{BKR})` for a dilation `A → BK…` whose
/// output contains every channel output plus arbitrary environment
/// factors; `extra_bob` lists environment factors counted on Bob's side.
pub fn assisted_point_value<L: AsRef<str>>(
    query: &RateQuery,
    isometry: &LinearOperator,
    extra_bob: &[L],
) -> Result<PointValue> {
    let inst = Instance::new(&query.source, &query.channel, &query.bob, query.copies)?;
    let ctx = Context::new(&inst, query.fidelity_threshold())?;
    let ket = inst.ket.apply(isometry, &inst.a_labels)?;
    let refs = ctx.refs();
    let mut bob = inst.bob.clone();
    for l in extra_bob {
        bob.push(SystemLabel::new(l.as_ref())?);
    }
    let keep: Vec<SystemLabel> = bob.iter().chain(&refs).cloned().collect();
    let value = 0.5 * mutual_information(&ket.reduced(&keep)?, &bob, &refs)? / ctx.copies();
    let order: Vec<SystemLabel> = ctx.sigma.layout().labels().cloned().collect();
    let tau = ket.reduced(&order)?.permute(&order)?;
    Ok(PointValue {
        value,
        fidelity: crate::entropics::fidelity(&ctx.sigma, &tau)?,
    })
}

/// Objective at the trivial feasible point: `Λ₁ = 𝒩^{⊗m}` for the assisted
/// rate, `(Λ₂, Λ₃) = (𝒩^{⊗m}, trace-out)` for the unassisted one.
pub fn feasible_point_value(query: &RateQuery, kind: RateKind) -> Result<RateResult> {
    let started = Instant::now();
    query.validate()?;
    let inst = Instance::new(&query.source, &query.channel, &query.bob, query.copies)?;
    let ctx = Context::new(&inst, query.fidelity_threshold())?;
    let d_e = inst.channel.num_kraus();
    let reference = inst.reference_dilation(d_e)?;
    let point = match kind {
        RateKind::Assisted => ctx.certify_assisted(&reference, d_e)?,
        RateKind::Unassisted => {
            let mut w = CMatrix::zeros(d_e, d_e);
            for e in 0..d_e {
                w[(e, e)] = C64::new(1.0, 0.0);
            }
            ctx.certify_unassisted(&reference, &w, d_e, 1)?
        }
        RateKind::EntanglementOfPurification => {
            return Err(Error::OutOfRange("no rate query for purifications".into()))
        }
    }
    .ok_or_else(|| Error::Protocol("reference channel failed certification".into()))?;
    Ok(finish(
        kind,
        query.gamma,
        query.internal_gamma(),
        query.copies,
        ctx.threshold,
        Vec::new(),
        0,
        point,
        started,
    ))
}
