//! Monte-Carlo failure histories drawn from the geometric-rates model.
//!
//! Every fault `a <= N` gets a geometric first-failure time with success
//! probability `p_a`, sampled by inversion as `ceil(ln u / ln(1 - p_a))` with
//! `u` uniform on the open interval (0, 1). Draws beyond the horizon are
//! discarded.
//!
//! Randomness comes from ChaCha8 (`rand_chacha::ChaCha8Rng`) seeded with
//! `seed + replication_index` through `SeedableRng::seed_from_u64`, so any
//! replication can be regenerated on its own and results do not depend on how
//! replications are scheduled across threads.

use std::io::Write;

use rand::distr::Open01;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{write_cumulative_points, FailureDataset, FailurePoint, TimeUnit};
use crate::error::{Error, Result};
use crate::geometric::{log_survival, GeometricModelParams};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    pub params: GeometricModelParams,
    /// Last incident observed.
    pub horizon: u64,
    pub seed: u64,
    pub replications: usize,
}

impl SimulationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.horizon == 0 {
            return Err(Error::InvalidParameter("horizon must be at least 1".into()));
        }
        if self.replications == 0 {
            return Err(Error::InvalidParameter(
                "replications must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// First failure of one fault.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FaultRealization {
    /// 1-based position in the rate ordering.
    pub fault_index: usize,
    /// Incident at which the fault first fails, at least 1. Saturates at `u64::MAX`.
    pub failure_time: u64,
}

pub fn replication_rng(seed: u64, replication: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed.wrapping_add(replication as u64))
}

/// Geometric draw on {1, 2, ...} with success probability `p`, as a real so
/// astronomically late failures stay representable.
pub fn sample_failure_time<R: Rng + ?Sized>(p: f64, rng: &mut R) -> f64 {
    let u: f64 = rng.sample(Open01);
    (u.ln() / log_survival(p)).ceil().max(1.0)
}

pub fn draw_faults<R: Rng + ?Sized>(
    params: &GeometricModelParams,
    rng: &mut R,
) -> Vec<FaultRealization> {
    params
        .rates()
        .enumerate()
        .map(|(i, p)| {
            let t = sample_failure_time(p, rng);
            FaultRealization {
                fault_index: i + 1,
                failure_time: if t >= u64::MAX as f64 {
                    u64::MAX
                } else {
                    t as u64
                },
            }
        })
        .collect()
}

/// Failures of one replication observed up to the horizon.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimulatedHistory {
    pub replication: usize,
    pub horizon: u64,
    failure_times: Vec<u64>,
}

impl SimulatedHistory {
    /// Sorted failure incidents, one entry per failure.
    pub fn failure_times(&self) -> &[u64] {
        &self.failure_times
    }

    pub fn failure_count(&self) -> usize {
        self.failure_times.len()
    }

    /// Failures at or before incident `t`.
    pub fn count_at(&self, t: u64) -> usize {
        self.failure_times.partition_point(|&x| x <= t)
    }

    /// Failures at exactly incident `t`.
    pub fn failures_at(&self, t: u64) -> usize {
        self.count_at(t) - self.count_at(t.saturating_sub(1))
    }

    /// The history as a dataset; fails when the replication saw no failures.
    pub fn to_dataset(&self, label: impl Into<String>) -> Result<FailureDataset> {
        FailureDataset::new(label, TimeUnit::Incident, self.points())
    }

    fn points(&self) -> Vec<FailurePoint> {
        let mut points: Vec<FailurePoint> = Vec::new();
        for (i, &t) in self.failure_times.iter().enumerate() {
            let count = i as u64 + 1;
            match points.last_mut() {
                Some(last) if last.time == t as f64 => last.cumulative_failures = count,
                _ => points.push(FailurePoint::new(t as f64, count)),
            }
        }
        points
    }

    /// Writes `cumulative_csv`; a replication without failures yields only the header.
    pub fn write_cumulative_csv<W: Write>(&self, writer: W) -> Result<()> {
        write_cumulative_points(&self.points(), writer)
    }
}

pub fn simulate_replication(config: &SimulationConfig, replication: usize) -> SimulatedHistory {
    let mut rng = replication_rng(config.seed, replication);
    let mut failure_times: Vec<u64> = draw_faults(&config.params, &mut rng)
        .into_iter()
        .map(|f| f.failure_time)
        .filter(|&t| t <= config.horizon)
        .collect();
    failure_times.sort_unstable();
    SimulatedHistory {
        replication,
        horizon: config.horizon,
        failure_times,
    }
}

/// Runs every replication; output is ordered by replication index.
pub fn simulate(config: &SimulationConfig) -> Result<Vec<SimulatedHistory>> {
    config.validate()?;
    Ok((0..config.replications)
        .into_par_iter()
        .map(|r| simulate_replication(config, r))
        .collect())
}

/// Sample mean across replications with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub mean: f64,
    pub std_error: f64,
}

impl Estimate {
    fn from_samples(samples: impl Iterator<Item = f64>) -> Self {
        let values: Vec<f64> = samples.collect();
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        if values.len() < 2 {
            return Self {
                mean,
                std_error: 0.0,
            };
        }
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
        Self {
            mean,
            std_error: (var / n).sqrt(),
        }
    }

    /// Whether `value` lies within `k` standard errors of the mean.
    pub fn covers(&self, value: f64, k: f64) -> bool {
        (self.mean - value).abs() <= k * self.std_error
    }
}

fn check_horizon(histories: &[SimulatedHistory], t: u64) -> Result<()> {
    if histories.is_empty() {
        return Err(Error::InvalidParameter("no replications".into()));
    }
    if let Some(h) = histories.iter().find(|h| t > h.horizon) {
        return Err(Error::OutOfRange(format!(
            "time {t} lies beyond the simulation horizon {}",
            h.horizon
        )));
    }
    Ok(())
}

/// Mean cumulative failure count at incident `t`.
pub fn empirical_mean(histories: &[SimulatedHistory], t: u64) -> Result<Estimate> {
    check_horizon(histories, t)?;
    Ok(Estimate::from_samples(
        histories.iter().map(|h| h.count_at(t) as f64),
    ))
}

/// Mean number of failures occurring exactly at incident `t`.
pub fn empirical_intensity(histories: &[SimulatedHistory], t: u64) -> Result<Estimate> {
    if t == 0 {
        return Err(Error::OutOfRange(
            "intensity is defined from incident 1".into(),
        ));
    }
    check_horizon(histories, t)?;
    Ok(Estimate::from_samples(
        histories.iter().map(|h| h.failures_at(t) as f64),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{parse_dataset, DataFormat};
    use crate::geometric::fault_cdf;

    fn config(p1: f64, d: f64, horizon: u64, replications: usize) -> SimulationConfig {
        SimulationConfig {
            params: GeometricModelParams::with_default_truncation(p1, d).unwrap(),
            horizon,
            seed: 7,
            replications,
        }
    }

    #[test]
    fn vanishing_rates_give_no_failures() {
        let sims = simulate(&config(1e-12, 0.9, 1_000_000, 50)).unwrap();
        assert!(sims.iter().all(|h| h.failure_count() == 0));
        assert!(sims[0].to_dataset("x").is_err());
        let mut buf = Vec::new();
        sims[0].write_cumulative_csv(&mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "time,cumulative_failures\n"
        );
    }

    #[test]
    fn every_fault_fails_eventually() {
        let cfg = SimulationConfig {
            params: GeometricModelParams::new(0.5, 0.5, 2).unwrap(),
            horizon: 10_000,
            seed: 3,
            replications: 200,
        };
        for h in simulate(&cfg).unwrap() {
            assert_eq!(h.failure_count(), 2);
        }
    }

    #[test]
    fn same_seed_same_histories() {
        let cfg = config(0.05, 0.95, 500, 20);
        assert_eq!(simulate(&cfg).unwrap(), simulate(&cfg).unwrap());
        let other = SimulationConfig { seed: 8, ..cfg };
        assert_ne!(simulate(&cfg).unwrap(), simulate(&other).unwrap());
        // a replication can be regenerated on its own
        assert_eq!(simulate(&cfg).unwrap()[13], simulate_replication(&cfg, 13));
    }

    #[test]
    fn counts_bounded_by_truncation() {
        let cfg = config(0.5, 0.6, 1_000_000, 100);
        let n = cfg.params.truncation();
        assert!(simulate(&cfg)
            .unwrap()
            .iter()
            .all(|h| h.failure_count() <= n));
    }

    #[test]
    fn failure_times_start_at_one() {
        let mut rng = replication_rng(1, 0);
        for _ in 0..10_000 {
            assert!(sample_failure_time(0.999_999, &mut rng) >= 1.0);
        }
        let faults = draw_faults(&GeometricModelParams::new(0.3, 0.5, 10).unwrap(), &mut rng);
        assert_eq!(faults.len(), 10);
        assert!(faults.iter().all(|f| f.failure_time >= 1));
        assert_eq!(faults[9].fault_index, 10);
    }

    #[test]
    fn csv_round_trip() {
        let cfg = config(0.2, 0.9, 300, 3);
        for h in simulate(&cfg).unwrap() {
            let mut buf = Vec::new();
            h.write_cumulative_csv(&mut buf).unwrap();
            let parsed = parse_dataset(buf.as_slice(), DataFormat::CumulativeCsv).unwrap();
            assert_eq!(parsed, h.to_dataset("dataset").unwrap());
            assert_eq!(parsed.final_count() as usize, h.failure_count());
        }
    }

    #[test]
    fn intensity_estimates() {
        let sims = simulate(&config(0.05, 0.95, 100, 10_000)).unwrap();
        let params = config(0.05, 0.95, 100, 1).params;
        for t in [1u64, 10, 50, 100] {
            let est = empirical_intensity(&sims, t).unwrap();
            assert!(est.mean >= 0.0);
            assert!(
                est.covers(params.failure_intensity(t as f64), 3.0),
                "{t}: {est:?}"
            );
        }
        assert!(empirical_intensity(&sims, 101).is_err());
        assert!(empirical_intensity(&sims, 0).is_err());
    }

    #[test]
    fn intensity_is_zero_without_failures() {
        let sims = simulate(&config(1e-12, 0.9, 100, 10)).unwrap();
        assert_eq!(empirical_intensity(&sims, 5).unwrap().mean, 0.0);
    }

    #[test]
    fn single_fault_ks() {
        // one fault; the 1% Kolmogorov-Smirnov critical value is 1.628 / sqrt(n)
        let p = 0.03;
        let n = 10_000;
        let mut rng = replication_rng(99, 0);
        let mut draws: Vec<f64> = (0..n).map(|_| sample_failure_time(p, &mut rng)).collect();
        draws.sort_by(f64::total_cmp);
        let mut d_max: f64 = 0.0;
        let mut i = 0;
        while i < n {
            let t = draws[i];
            let before = i as f64 / n as f64;
            while i < n && draws[i] == t {
                i += 1;
            }
            let after = i as f64 / n as f64;
            let model = fault_cdf(p, t).unwrap();
            let model_before = fault_cdf(p, t - 1.0).unwrap();
            d_max = d_max
                .max((after - model).abs())
                .max((before - model_before).abs());
        }
        assert!(d_max < 1.628 / (n as f64).sqrt(), "D = {d_max}");
    }
}
