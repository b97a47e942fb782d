//! The geometric-rates reliability model.
//!
//! Faults are ordered by decreasing failure rate and the rates form a
//! geometric sequence `p_n = p1 * d^(n-1)`. Each fault's first failure time is
//! geometrically distributed in incidents, so the expected cumulative number of
//! failures is a sum of geometric CDFs and the failure intensity a sum of
//! geometric pmfs.
//!
//! The fault population is infinite in principle; every computation here runs
//! over the first `truncation` faults. All operations accept real `t` and
//! agree with the discrete model at integer `t`.

use itertools::Itertools;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Faults with a rate below `p1 * DEFAULT_TRUNCATION_EPSILON` are dropped.
pub const DEFAULT_TRUNCATION_EPSILON: f64 = 1e-6;

/// Range of `d` reported for past telecommunication projects.
pub const TYPICAL_DECAY_RANGE: (f64, f64) = (0.92, 0.96);

/// Upper bound on `truncation` for [`log_likelihood_small`](GeometricModelParams::log_likelihood_small).
pub const MAX_LIKELIHOOD_FAULTS: usize = 20;
/// Upper bound on the failure count for [`log_likelihood_small`](GeometricModelParams::log_likelihood_small).
pub const MAX_LIKELIHOOD_FAILURES: u64 = 5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeometricModelParams {
    p1: f64,
    d: f64,
    truncation: usize,
}

/// Number of faults needed to reach rates down to `p1 * epsilon`.
pub fn default_truncation(d: f64) -> usize {
    truncation_for(d, DEFAULT_TRUNCATION_EPSILON)
}

pub fn truncation_for(d: f64, epsilon: f64) -> usize {
    let n = (epsilon.ln() / d.ln()).ceil();
    if n.is_finite() && n >= 1.0 {
        n as usize
    } else {
        1
    }
}

impl GeometricModelParams {
    pub fn new(p1: f64, d: f64, truncation: usize) -> Result<Self> {
        if !(p1 > 0.0 && p1 < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "p1 must lie in (0, 1), got {p1}"
            )));
        }
        if !(d > 0.0 && d < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "d must lie in (0, 1), got {d}"
            )));
        }
        if truncation == 0 {
            return Err(Error::InvalidParameter(
                "truncation must be at least 1".into(),
            ));
        }
        Ok(Self { p1, d, truncation })
    }

    /// Parameters with the truncation picked by [`default_truncation`].
    pub fn with_default_truncation(p1: f64, d: f64) -> Result<Self> {
        if !(d > 0.0 && d < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "d must lie in (0, 1), got {d}"
            )));
        }
        Self::new(p1, d, default_truncation(d))
    }

    /// Test mode with `d = 1`: `truncation` faults that all share rate `p1`.
    ///
    /// The release-time formulas still evaluate, but the default truncation
    /// rule does not apply.
    pub fn constant_rates(p1: f64, truncation: usize) -> Result<Self> {
        let mut params = Self::new(p1, 0.5, truncation)?;
        params.d = 1.0;
        Ok(params)
    }

    pub fn p1(&self) -> f64 {
        self.p1
    }

    pub fn d(&self) -> f64 {
        self.d
    }

    pub fn truncation(&self) -> usize {
        self.truncation
    }

    /// Whether `d` falls in [`TYPICAL_DECAY_RANGE`].
    pub fn has_typical_decay(&self) -> bool {
        self.d >= TYPICAL_DECAY_RANGE.0 && self.d <= TYPICAL_DECAY_RANGE.1
    }

    /// Failure rate of the `n`-th fault, 1-based.
    pub fn fault_rate(&self, n: usize) -> Result<f64> {
        if n == 0 || n > self.truncation {
            return Err(Error::OutOfRange(format!(
                "fault index {n} outside 1..={}",
                self.truncation
            )));
        }
        Ok(self.rate_unchecked(n))
    }

    fn rate_unchecked(&self, n: usize) -> f64 {
        self.p1 * self.d.powi((n - 1) as i32)
    }

    pub fn rates(&self) -> impl Iterator<Item = f64> + '_ {
        (1..=self.truncation).map(|n| self.rate_unchecked(n))
    }

    /// Expected cumulative failures by time `t`.
    pub fn mean_failures(&self, t: f64) -> f64 {
        mean_from_log_survivals(&self.log_survivals(), t)
    }

    /// `ln(1 - p_a)` for every fault, for callers evaluating the mean at many times.
    pub fn log_survivals(&self) -> Vec<f64> {
        self.rates().map(log_survival).collect()
    }

    /// Expected failures occurring at incident `t`; meaningful for `t >= 1`.
    pub fn failure_intensity(&self, t: f64) -> f64 {
        self.rates()
            .map(|p| p * ((t - 1.0) * log_survival(p)).exp())
            .sum()
    }

    /// `sum_a (p_a - p_a^2)`, the denominator of the release-time formulas.
    pub fn rate_variance_sum(&self) -> f64 {
        self.rates().map(|p| p - p * p).sum()
    }

    /// Closed form of [`rate_variance_sum`](Self::rate_variance_sum) via the
    /// two geometric series in `d` and `d^2`.
    pub fn rate_variance_sum_closed_form(&self) -> f64 {
        let (p1, d, n) = (self.p1, self.d, self.truncation as f64);
        if self.d == 1.0 {
            return n * (p1 - p1 * p1);
        }
        p1 * (1.0 - d.powf(n)) / (1.0 - d) - p1 * p1 * (1.0 - d.powf(2.0 * n)) / (1.0 - d * d)
    }

    /// Initial failure intensity `λ(1) = p1 (1 - d^N) / (1 - d)` in closed form.
    pub fn initial_intensity_closed_form(&self) -> f64 {
        let n = self.truncation as f64;
        if self.d == 1.0 {
            return n * self.p1;
        }
        self.p1 * (1.0 - self.d.powf(n)) / (1.0 - self.d)
    }

    /// Time at which the intensity reaches `lambda_target`, using the
    /// log-linear rearrangement `t = ln λ / Σ(p_a - p_a²) + 1`.
    ///
    /// That rearrangement is not an exact inverse of
    /// [`failure_intensity`](Self::failure_intensity) for more than one fault
    /// and can return times below 1 or below zero; the value is returned as
    /// computed. See [`time_for_intensity_exact`](Self::time_for_intensity_exact).
    pub fn time_for_intensity(&self, lambda_target: f64) -> Result<f64> {
        self.check_target(lambda_target)?;
        Ok(lambda_target.ln() / self.rate_variance_sum() + 1.0)
    }

    /// Time at which [`failure_intensity`](Self::failure_intensity) equals
    /// `lambda_target`, found by bisection on `t >= 1`.
    pub fn time_for_intensity_exact(&self, lambda_target: f64) -> Result<f64> {
        let initial = self.check_target(lambda_target)?;
        if lambda_target == initial {
            return Ok(1.0);
        }
        let mut lo = 1.0;
        let mut hi = 2.0;
        while self.failure_intensity(hi) > lambda_target {
            lo = hi;
            hi *= 2.0;
            if !hi.is_finite() {
                return Err(Error::OutOfRange(format!(
                    "intensity {lambda_target} is not reached in finite time"
                )));
            }
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.failure_intensity(mid) > lambda_target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    fn check_target(&self, lambda_target: f64) -> Result<f64> {
        let initial = self.failure_intensity(1.0);
        if !(lambda_target > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "target intensity must be positive, got {lambda_target}"
            )));
        }
        if lambda_target > initial {
            return Err(Error::OutOfRange(format!(
                "target intensity {lambda_target} exceeds the initial intensity {initial}"
            )));
        }
        Ok(initial)
    }

    /// Further time needed to move from intensity `lambda_now` to the
    /// objective `lambda_objective`:
    /// `(ln λ_F - ln λ) / Σ(p_a - p_a²)`.
    pub fn additional_time(
        &self,
        lambda_now: f64,
        lambda_objective: f64,
    ) -> Result<AdditionalTime> {
        if !(lambda_now > 0.0) || !(lambda_objective > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "intensities must be positive, got current {lambda_now} and objective {lambda_objective}"
            )));
        }
        if lambda_objective > lambda_now {
            return Err(Error::OutOfRange(format!(
                "objective {lambda_objective} exceeds the current intensity {lambda_now}"
            )));
        }
        let raw = if lambda_objective == lambda_now {
            0.0
        } else {
            (lambda_objective.ln() - lambda_now.ln()) / self.rate_variance_sum()
        };
        Ok(AdditionalTime { raw })
    }

    /// Log-probability of exactly `failures` failures by time `t`, summing
    /// over every subset of faults that could have produced them.
    ///
    /// The sum has `C(N, x)` terms, so `N` is capped at
    /// [`MAX_LIKELIHOOD_FAULTS`] and `x` at [`MAX_LIKELIHOOD_FAILURES`].
    pub fn log_likelihood_small(&self, failures: u64, t: f64) -> Result<f64> {
        if self.truncation > MAX_LIKELIHOOD_FAULTS || failures > MAX_LIKELIHOOD_FAILURES {
            return Err(Error::OutOfRange(format!(
                "likelihood enumeration limited to N <= {MAX_LIKELIHOOD_FAULTS} and x <= {MAX_LIKELIHOOD_FAILURES}, got N = {} and x = {failures}",
                self.truncation
            )));
        }
        if !(t >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "time must be non-negative, got {t}"
            )));
        }
        let x = failures as usize;
        if x > self.truncation {
            return Ok(f64::NEG_INFINITY);
        }
        // log survival and log occurrence per fault
        let log_surv: Vec<f64> = self.rates().map(|p| t * log_survival(p)).collect();
        let log_occ: Vec<f64> = log_surv.iter().map(|&s| (-s.exp_m1()).ln()).collect();
        let all_surv: f64 = log_surv.iter().sum();

        let terms: Vec<f64> = (0..self.truncation)
            .combinations(x)
            .map(|subset| {
                subset
                    .iter()
                    .fold(all_surv, |acc, &a| acc - log_surv[a] + log_occ[a])
            })
            .collect();
        Ok(log_sum_exp(&terms))
    }
}

/// Result of [`GeometricModelParams::additional_time`].
///
/// With `λ_F < λ` the formula yields a negative value; `raw` keeps that sign
/// and [`abs`](Self::abs) gives the magnitude.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AdditionalTime {
    pub raw: f64,
}

impl AdditionalTime {
    pub fn abs(&self) -> f64 {
        self.raw.abs()
    }
}

/// `ln(1 - p)` without cancellation for small `p`.
pub(crate) fn log_survival(p: f64) -> f64 {
    (-p).ln_1p()
}

/// `1 - exp(t * log_surv)`, i.e. `1 - (1 - p)^t`.
pub(crate) fn occurrence_probability(log_surv: f64, t: f64) -> f64 {
    -(t * log_surv).exp_m1()
}

pub fn mean_from_log_survivals(log_survivals: &[f64], t: f64) -> f64 {
    log_survivals
        .iter()
        .map(|&s| occurrence_probability(s, t))
        .sum()
}

/// Probability that a fault with rate `p` has failed by time `t`: `1 - (1-p)^t`.
pub fn fault_cdf(p: f64, t: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "p must lie in (0, 1), got {p}"
        )));
    }
    if !(t >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "time must be non-negative, got {t}"
        )));
    }
    Ok(occurrence_probability(log_survival(p), t))
}

fn log_sum_exp(terms: &[f64]) -> f64 {
    let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + terms.iter().map(|&v| (v - max).exp()).sum::<f64>().ln()
}
