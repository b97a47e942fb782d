//! Least-squares estimation of `(p1, d)` on the log scale.
//!
//! The fitted quantity is `S(p1, d) = Σ_j [ln r_j - ln μ(t_j; p1, d)]²` over the
//! measurement points with at least one failure. The search runs in an
//! unconstrained space: `p1 = σ(u)` and `d = MAX_FIT_DECAY · σ(v)` with `σ` the
//! logistic function, so every candidate the simplex proposes is a valid
//! parameter pair. The truncation follows the candidate `d` through
//! [`default_truncation`](crate::geometric::default_truncation).

use serde::{Deserialize, Serialize};

use crate::data::FailureDataset;
use crate::error::{Error, Result};
use crate::geometric::{mean_from_log_survivals, GeometricModelParams};
use crate::optim::{nelder_mead, OptimizerConfig};

/// Largest `d` the fit explores. Keeps the default truncation below ~14k faults.
pub const MAX_FIT_DECAY: f64 = 0.999;

/// Starting `d`, the middle of the range seen in past projects.
pub const INITIAL_DECAY: f64 = 0.94;

/// A measurement entering a log-scale least-squares objective.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observation {
    pub time: f64,
    pub count: f64,
}

/// Usable observations of `ds` and the number of zero-count points skipped.
pub fn observations(ds: &FailureDataset) -> (Vec<Observation>, usize) {
    let obs: Vec<Observation> = ds
        .usable_points()
        .map(|p| Observation {
            time: p.time,
            count: p.cumulative_failures as f64,
        })
        .collect();
    let skipped = ds.len() - obs.len();
    (obs, skipped)
}

/// `Σ [ln r - ln mean(t)]²` for an arbitrary mean value function.
pub fn log_squared_residuals(obs: &[Observation], mean: impl Fn(f64) -> f64) -> f64 {
    obs.iter()
        .map(|o| {
            let r = o.count.ln() - mean(o.time).ln();
            r * r
        })
        .sum()
}

fn require_usable(ds: &FailureDataset, needed: usize) -> Result<(Vec<Observation>, usize)> {
    let (obs, skipped) = observations(ds);
    if obs.len() < needed {
        return Err(Error::InsufficientData {
            needed,
            found: obs.len(),
        });
    }
    Ok((obs, skipped))
}

/// The least-squares objective `S(p1, d)` at `params`.
pub fn least_squares_objective(params: &GeometricModelParams, ds: &FailureDataset) -> Result<f64> {
    let (obs, _) = require_usable(ds, 1)?;
    Ok(geometric_objective(params, &obs))
}

fn geometric_objective(params: &GeometricModelParams, obs: &[Observation]) -> f64 {
    let survivals = params.log_survivals();
    log_squared_residuals(obs, |t| mean_from_log_survivals(&survivals, t))
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub params: GeometricModelParams,
    /// `S` at the returned parameters.
    pub objective_value: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
    /// Spread of objective values across the final simplex.
    pub simplex_spread: f64,
    /// Points with zero cumulative failures, left out of the objective.
    pub skipped_points: usize,
    pub restarts: usize,
    pub non_finite_evaluations: usize,
    /// Starting `(p1, d)`.
    pub initial_guess: (f64, f64),
    /// Initial simplex step in the transformed space.
    pub initial_step: f64,
}

/// The JSON document emitted for a fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub p1: f64,
    pub d: f64,
    pub truncation: usize,
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
    pub skipped_points: usize,
}

impl FitResult {
    pub fn report(&self) -> FitReport {
        FitReport {
            p1: self.params.p1(),
            d: self.params.d(),
            truncation: self.params.truncation(),
            objective: self.objective_value,
            iterations: self.iterations,
            converged: self.converged,
            skipped_points: self.skipped_points,
        }
    }
}

impl FitReport {
    pub fn params(&self) -> Result<GeometricModelParams> {
        GeometricModelParams::new(self.p1, self.d, self.truncation)
    }
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

fn decode(z: &[f64]) -> Result<GeometricModelParams> {
    GeometricModelParams::with_default_truncation(sigmoid(z[0]), MAX_FIT_DECAY * sigmoid(z[1]))
}

fn encode(p1: f64, d: f64) -> [f64; 2] {
    [logit(p1), logit(d / MAX_FIT_DECAY)]
}

/// Deterministic start: `d = INITIAL_DECAY` and `p1` chosen by bisection so
/// that `μ(t_q) = q`.
pub fn initial_guess(ds: &FailureDataset) -> (f64, f64) {
    let (t_q, q) = (ds.final_time(), ds.final_count() as f64);
    let mean_at = |p1: f64| {
        GeometricModelParams::with_default_truncation(p1, INITIAL_DECAY)
            .map(|p| p.mean_failures(t_q))
            .unwrap_or(f64::NAN)
    };
    let (mut lo, mut hi) = (1e-12f64.ln(), 0.99f64.ln());
    if mean_at(hi.exp()) <= q {
        return (hi.exp(), INITIAL_DECAY);
    }
    if mean_at(lo.exp()) >= q {
        return (lo.exp(), INITIAL_DECAY);
    }
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if mean_at(mid.exp()) < q {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    ((0.5 * (lo + hi)).exp(), INITIAL_DECAY)
}

/// Fits the geometric-rates model to `ds`.
///
/// Non-convergence is not an error: the best vertex is returned with
/// `converged = false`.
pub fn fit(ds: &FailureDataset, config: &OptimizerConfig) -> Result<FitResult> {
    config.validate()?;
    let (obs, skipped) = require_usable(ds, 2)?;
    let guess = config.initial_guess.unwrap_or_else(|| initial_guess(ds));
    if guess.1 >= MAX_FIT_DECAY {
        return Err(Error::InvalidParameter(format!(
            "initial d must be below {MAX_FIT_DECAY}, got {}",
            guess.1
        )));
    }
    let objective = |z: &[f64]| match decode(z) {
        Ok(params) => geometric_objective(&params, &obs),
        Err(_) => f64::INFINITY,
    };
    let minimum = nelder_mead(objective, config, &encode(guess.0, guess.1))?;
    let params = decode(&minimum.point)?;
    Ok(FitResult {
        params,
        objective_value: minimum.value,
        iterations: minimum.iterations,
        evaluations: minimum.evaluations,
        converged: minimum.converged,
        simplex_spread: minimum.spread,
        skipped_points: skipped,
        restarts: minimum.restarts,
        non_finite_evaluations: minimum.non_finite_evaluations,
        initial_guess: guess,
        initial_step: config.initial_step,
    })
}
