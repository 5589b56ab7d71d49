//! The stochastic game with stopping times.
//!
//! The state follows the uncontrolled SDE `dX = b(X) dt + σ(X) dW` with
//! `σσᵀ = a`. Player 1 (the minimizer) stops at `θ` and pays `ψ₁(X_θ)`,
//! player 2 (the maximizer) stops at `τ` and receives `ψ₂(X_τ)`; until then
//! the running reward `r` accrues at discount rate `λ`:
//!
//! `R(x, θ, τ) = E[∫₀^{θ∧τ} e^{−λs} r(X_s) ds + e^{−λ(θ∧τ)}(ψ₁(X_θ)1{θ<τ} + ψ₂(X_τ)1{τ≤θ})]`.
//!
//! This module simulates the SDE by Euler–Maruyama, evaluates the payoff
//! for non-anticipating stopping rules, estimates values by Monte Carlo,
//! checks the saddle property of the hitting times of the contact sets of a
//! solved grid function, and provides an independent Markov-chain oracle for
//! the value function.

mod engine;
mod oracle;
mod output;
pub mod philox;
mod rules;
mod saddle;
mod sde;
pub mod stats;

pub use engine::{
    estimate_pairs, estimate_value, payoff, simulate_paths, simulate_terminal, BatchResult, MCEstimate, PairOutcome,
    PathBatch, PayoffData, RuleBattery,
};
pub use oracle::{default_chain_step, dynkin_oracle, OracleReport, ORACLE_TOLERANCE};
pub use output::{write_estimates_csv, write_saddle_csv, write_samples_csv, SAMPLE_ROW_CAP};
pub use rules::{ContactData, Direction, RuleMonitor, StoppingRule};
pub use saddle::{
    default_alternatives, game_contact_eps, saddle_check, saddle_check_with_samples, Alternatives, ComparisonCheck, SaddleReport,
    MAX_EXIT_FRACTION, TOL_NUM_CONSTANT,
};
pub use sde::SdeModel;

use thiserror::Error;

use crate::grid::GridError;
use crate::problem::ProblemError;
use crate::solver::SolverError;

/// Largest fraction of aborted paths tolerated in an estimate.
pub const MAX_EXCLUDED_FRACTION: f64 = 0.01;

#[derive(Debug, Error)]
pub enum GameError {
    #[error("the stopping game requires singleton control sets")]
    Controlled,
    #[error("invalid Monte Carlo configuration: {0}")]
    InvalidConfig(String),
    #[error("{excluded} of {total} paths aborted on non-finite states (more than 1%)")]
    ExcessiveExclusion { excluded: usize, total: usize },
    #[error("negative transition weight {weight} at node {node}: the stencil is not monotone there")]
    NegativeTransition { node: usize, weight: f64 },
    #[error("the chain oracle supports one-dimensional instances only")]
    OracleDimension,
    #[error("chain oracle did not converge after {iterations} iterations (last change {change:e})")]
    OracleNonConvergence { iterations: usize, change: f64 },
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Monte Carlo sampling parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct MCConfig {
    pub paths: usize,
    pub dt: f64,
    /// Payoff truncation time `T`.
    pub horizon: f64,
    pub seed: u64,
    /// Pair path `2k + 1` with the negated noise of path `2k`.
    pub antithetic: bool,
}

impl Default for MCConfig {
    fn default() -> Self {
        MCConfig {
            paths: 100_000,
            dt: 1e-3,
            horizon: 10.0,
            seed: 0,
            antithetic: false,
        }
    }
}

impl MCConfig {
    pub fn validate(&self) -> Result<(), GameError> {
        if self.paths < 1 {
            return Err(GameError::InvalidConfig("paths must be at least 1".into()));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(GameError::InvalidConfig(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.horizon >= self.dt) || !self.horizon.is_finite() {
            return Err(GameError::InvalidConfig(format!(
                "horizon {} must be finite and at least dt = {}",
                self.horizon, self.dt
            )));
        }
        if self.antithetic && !self.paths.is_multiple_of(2) {
            return Err(GameError::InvalidConfig(format!(
                "antithetic sampling needs an even path count, got {}",
                self.paths
            )));
        }
        if self.steps() > u32::MAX as usize {
            return Err(GameError::InvalidConfig("too many time steps".into()));
        }
        Ok(())
    }

    /// `⌈T/dt⌉`, robust to the rounding of `T/dt` for exact multiples.
    pub fn steps(&self) -> usize {
        ((self.horizon / self.dt - 1e-9).ceil() as usize).max(1)
    }

    /// `⌈T/dt⌉·dt`, the time of the last observed step.
    pub fn effective_horizon(&self) -> f64 {
        self.steps() as f64 * self.dt
    }
}
