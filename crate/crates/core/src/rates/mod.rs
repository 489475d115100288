//! Numerical upper bounds on the assisted and unassisted simulation rates,
//! and on the entanglement of purification.
//!
//! Both rates are infima over channels subject to a fidelity constraint
//! against `σ^{BKR} = 𝒩(ρ^{AR})`:
//!
//! - assisted: `a(ρ,γ) = inf ½ I(B:RR′)_{τ₁}` over `Λ₁: A → BK` with
//!   `F(σ, τ₁^{BKR}) ≥ 1 − γ`;
//! - unassisted: `u(ρ,γ) = inf S(BE′)_{τ₃}` over `Λ₂: A → BK` with the same
//!   constraint, and over `Λ₃: E → E′` acting on the environment of `Λ₂`.
//!
//! Channels are parameterized by Stinespring isometries on the complex
//! Stiefel manifold. Every reported value comes with explicit channels whose
//! objective and fidelity are recomputed through the generic
//! [`crate::channels`] and [`crate::entropics`] code, so a returned value is
//! a certified upper bound.

mod instance;
mod marginal;
mod points;
mod solve;
mod stiefel;

use serde::Serialize;

use crate::channels::QuantumChannel;
use crate::error::{Error, Result};
use crate::tensor::{DensityOperator, LinearOperator, SystemLabel};

pub use points::{
    flag_mixture, oracle_identity_assisted, oracle_identity_unassisted, tensor_points, tensor_points_merged,
};
pub use solve::{
    assisted_point_value, assisted_rate, entanglement_of_purification, feasible_point_value, gradient_check,
    unassisted_rate, CheckedObjective, PointValue,
};

/// Fidelity slack allowed when certifying a point at `γ > 0`.
pub const CERTIFY_SLACK: f64 = 1e-9;
/// At `γ = 0` a point is accepted when `F ≥ 1 − ZERO_GAMMA_FLOOR`.
pub const ZERO_GAMMA_FLOOR: f64 = 1e-6;

/// Knobs of the restarted Stiefel optimizer.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OptimizerConfig {
    pub restarts: usize,
    /// Iteration cap for each inner descent run.
    pub max_iterations: usize,
    pub seed: u64,
    pub penalty_initial: f64,
    pub penalty_growth: f64,
    pub penalty_stages: usize,
    /// Relative objective change (bits) below which a descent run stops.
    pub tolerance: f64,
    /// Alternation rounds per penalty stage of the unassisted see-saw.
    pub see_saw_rounds: usize,
    /// Extra random starts for each environment step of the see-saw.
    pub w_starts: usize,
    /// Infidelity target used inside the optimizer when `γ = 0`.
    pub zero_gamma_target: f64,
    pub dim_e: Option<usize>,
    pub dim_eprime: Option<usize>,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            restarts: 16,
            max_iterations: 400,
            seed: 0,
            penalty_initial: 1e2,
            penalty_growth: 10.0,
            penalty_stages: 4,
            tolerance: 1e-10,
            see_saw_rounds: 8,
            w_starts: 2,
            zero_gamma_target: 1e-12,
            dim_e: None,
            dim_eprime: None,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.restarts == 0 {
            return Err(Error::OutOfRange("restarts must be at least 1".into()));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::OutOfRange("tolerance must be positive".into()));
        }
        if !(self.penalty_initial > 0.0 && self.penalty_growth >= 1.0) {
            return Err(Error::OutOfRange(
                "penalty schedule must be positive and non-decreasing".into(),
            ));
        }
        if !(self.zero_gamma_target > 0.0 && self.zero_gamma_target <= ZERO_GAMMA_FLOOR) {
            return Err(Error::OutOfRange(format!(
                "zero_gamma_target must lie in (0, {ZERO_GAMMA_FLOOR}]"
            )));
        }
        if self.dim_e == Some(0) || self.dim_eprime == Some(0) {
            return Err(Error::ZeroDimension("environment override".into()));
        }
        Ok(())
    }
}

/// A rate problem: source `ρ^{AR}`, channel `𝒩: A → BK`, infidelity budget
/// and number of copies.
#[derive(Clone, Debug)]
pub struct RateQuery {
    pub source: DensityOperator,
    pub channel: QuantumChannel,
    /// Output factors received by Bob; the other outputs form `K`. Empty
    /// means the first output factor.
    pub bob: Vec<SystemLabel>,
    pub gamma: f64,
    pub copies: usize,
    pub optimizer: OptimizerConfig,
    /// Stinespring isometry of a known feasible `Λ₁` (assisted rate only),
    /// e.g. `RateResult::isometries[0]` of an earlier run at a smaller `γ`.
    pub warm_start: Option<LinearOperator>,
}

impl RateQuery {
    pub fn new(source: DensityOperator, channel: QuantumChannel, gamma: f64) -> Result<Self> {
        let q = RateQuery {
            source,
            channel,
            bob: Vec::new(),
            gamma,
            copies: 1,
            optimizer: OptimizerConfig::default(),
            warm_start: None,
        };
        q.validate()?;
        Ok(q)
    }

    pub fn with_bob<L: AsRef<str>>(mut self, bob: &[L]) -> Result<Self> {
        self.bob = bob
            .iter()
            .map(|l| SystemLabel::new(l.as_ref()))
            .collect::<Result<_>>()?;
        self.validate()?;
        Ok(self)
    }

    pub fn with_copies(mut self, copies: usize) -> Result<Self> {
        self.copies = copies;
        self.validate()?;
        Ok(self)
    }

    pub fn with_optimizer(mut self, optimizer: OptimizerConfig) -> Result<Self> {
        self.optimizer = optimizer;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(Error::OutOfRange(format!("gamma {} outside [0, 1]", self.gamma)));
        }
        if !(1..=3).contains(&self.copies) {
            return Err(Error::OutOfRange(format!("copies {} outside 1..=3", self.copies)));
        }
        self.optimizer.validate()?;
        instance::Instance::new(&self.source, &self.channel, &self.bob, 1).map(|_| ())
    }

    /// Infidelity target handed to the optimizer.
    pub fn internal_gamma(&self) -> f64 {
        if self.gamma > 0.0 {
            self.gamma
        } else {
            self.optimizer.zero_gamma_target
        }
    }

    /// Smallest fidelity accepted by certification.
    pub fn fidelity_threshold(&self) -> f64 {
        if self.gamma > 0.0 {
            1.0 - self.gamma - CERTIFY_SLACK
        } else {
            1.0 - ZERO_GAMMA_FLOOR
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RateKind {
    Assisted,
    Unassisted,
    EntanglementOfPurification,
}

/// Outcome of one restart.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RestartTrace {
    pub index: usize,
    /// `reference`, `warm`, `trace-out` or `haar`.
    pub start: &'static str,
    /// Certified value per copy, if the restart produced a feasible point.
    pub value: Option<f64>,
    pub fidelity: f64,
    pub iterations: usize,
    /// Weight of the reference dilation mixed in to restore feasibility.
    pub restoration: f64,
}

/// A certified upper bound together with the channels achieving it.
#[derive(Clone, Debug)]
pub struct RateResult {
    pub kind: RateKind,
    /// Bits per copy.
    pub value: f64,
    pub copies: usize,
    pub gamma: f64,
    /// Infidelity target the optimizer worked with.
    pub internal_gamma: f64,
    pub fidelity: f64,
    /// `max(0, threshold − F)`; zero for every certified result.
    pub constraint_residual: f64,
    /// True when no restart certified and the trivial feasible point is
    /// reported instead.
    pub fallback: bool,
    /// `[Λ₁]`, `[Λ₂, Λ₃]`, or `[Λ]` on the purifying system.
    pub channels: Vec<QuantumChannel>,
    /// Stinespring isometries of `channels`.
    pub isometries: Vec<LinearOperator>,
    pub restarts: Vec<RestartTrace>,
    pub wall_clock_seconds: f64,
}
