//! Reference models used to benchmark the geometric-rates model.
//!
//! Musa basic, Musa-Okumoto and the exponential NHPP are fitted with the same
//! log-scale least squares as the geometric model, applied to their mean value
//! functions. Littlewood-Verrall (quadratic `φ(i) = β0 + β1·i²`) is fitted by
//! maximising the marginal likelihood of the times between failures, each of
//! which is Pareto distributed once the gamma-distributed rate is integrated
//! out. All searches use [`nelder_mead`] over log-transformed parameters.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::data::FailureDataset;
use crate::error::{Error, Result};
use crate::estimation::{self, log_squared_residuals, observations, Observation};
use crate::geometric::GeometricModelParams;
use crate::optim::{nelder_mead, OptimizerConfig};

/// A fitted model able to predict the expected cumulative failure count.
pub trait ReliabilityModel {
    fn model_name(&self) -> &str;

    /// Expected cumulative failures by `t`; zero at `t = 0` and non-decreasing.
    fn predict_mean(&self, t: f64) -> f64;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    Geometric,
    MusaBasic,
    MusaOkumoto,
    LittlewoodVerrall,
    Nhpp,
}

impl ModelKind {
    pub const ALL: [ModelKind; 5] = [
        ModelKind::Geometric,
        ModelKind::MusaBasic,
        ModelKind::MusaOkumoto,
        ModelKind::LittlewoodVerrall,
        ModelKind::Nhpp,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Geometric => "geometric",
            ModelKind::MusaBasic => "musa-basic",
            ModelKind::MusaOkumoto => "musa-okumoto",
            ModelKind::LittlewoodVerrall => "littlewood-verrall",
            ModelKind::Nhpp => "nhpp",
        }
    }

    /// Parses `all` or a comma-separated list of model names.
    pub fn parse_list(list: &str) -> Result<Vec<ModelKind>> {
        if list.trim() == "all" {
            return Ok(Self::ALL.to_vec());
        }
        let mut kinds = Vec::new();
        for name in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let kind: ModelKind = name.parse()?;
            if !kinds.contains(&kind) {
                kinds.push(kind);
            }
        }
        if kinds.is_empty() {
            return Err(unknown_model(list));
        }
        Ok(kinds)
    }
}

fn unknown_model(name: &str) -> Error {
    Error::UnknownModel {
        name: name.to_string(),
        supported: ModelKind::ALL.map(ModelKind::name).join(", "),
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ModelKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| unknown_model(s))
    }
}

/// Musa basic execution time model: `μ(t) = β0 (1 - e^{-β1 t})`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MusaBasicParams {
    pub total_faults: f64,
    pub hazard: f64,
}

impl MusaBasicParams {
    pub fn new(total_faults: f64, hazard: f64) -> Result<Self> {
        positive("total_faults", total_faults)?;
        positive("hazard", hazard)?;
        Ok(Self {
            total_faults,
            hazard,
        })
    }

    pub fn mean(&self, t: f64) -> f64 {
        -self.total_faults * (-self.hazard * t).exp_m1()
    }
}

/// Musa-Okumoto logarithmic Poisson model: `μ(t) = ln(λ0 θ t + 1) / θ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MusaOkumotoParams {
    pub initial_intensity: f64,
    pub decay: f64,
}

impl MusaOkumotoParams {
    pub fn new(initial_intensity: f64, decay: f64) -> Result<Self> {
        positive("initial_intensity", initial_intensity)?;
        positive("decay", decay)?;
        Ok(Self {
            initial_intensity,
            decay,
        })
    }

    pub fn mean(&self, t: f64) -> f64 {
        (self.initial_intensity * self.decay * t).ln_1p() / self.decay
    }
}

/// Exponential NHPP: `m(t) = a (1 - e^{-b t})`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NhppParams {
    pub expected_total: f64,
    pub detection_rate: f64,
}

impl NhppParams {
    pub fn new(expected_total: f64, detection_rate: f64) -> Result<Self> {
        positive("expected_total", expected_total)?;
        positive("detection_rate", detection_rate)?;
        Ok(Self {
            expected_total,
            detection_rate,
        })
    }

    pub fn mean(&self, t: f64) -> f64 {
        -self.expected_total * (-self.detection_rate * t).exp_m1()
    }
}

/// Littlewood-Verrall with quadratic scale `φ(i) = β0 + β1 i²`.
///
/// The `i`-th time between failures is exponential with a gamma(α, φ(i))
/// distributed rate, which makes its marginal density
/// `α φ(i)^α / (t + φ(i))^(α+1)` and its mean `φ(i) / (α - 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LittlewoodVerrallParams {
    pub alpha: f64,
    pub beta0: f64,
    pub beta1: f64,
}

impl LittlewoodVerrallParams {
    pub fn new(alpha: f64, beta0: f64, beta1: f64) -> Result<Self> {
        if !(alpha > 1.0 && alpha.is_finite()) {
            return Err(Error::ShapeNotAboveOne { alpha });
        }
        positive("beta0", beta0)?;
        positive("beta1", beta1)?;
        Ok(Self {
            alpha,
            beta0,
            beta1,
        })
    }

    pub fn scale(&self, i: f64) -> f64 {
        self.beta0 + self.beta1 * i * i
    }

    /// Expected `i`-th time between failures, 1-based.
    pub fn expected_tbf(&self, i: u64) -> f64 {
        self.scale(i as f64) / (self.alpha - 1.0)
    }

    /// Expected time of the `k`-th failure: `Σ_{i<=k} φ(i) / (α - 1)`.
    pub fn expected_failure_time(&self, k: u64) -> f64 {
        let k = k as f64;
        (k * self.beta0 + self.beta1 * k * (k + 1.0) * (2.0 * k + 1.0) / 6.0) / (self.alpha - 1.0)
    }

    /// Failure index reached at `t` by accumulating expected times between
    /// failures, interpolated linearly inside the current interval.
    pub fn mean(&self, t: f64) -> f64 {
        if !(t > 0.0) {
            return 0.0;
        }
        // largest k with expected_failure_time(k) <= t
        let mut hi: u64 = 1;
        while self.expected_failure_time(hi) <= t {
            if hi > u64::MAX / 4 {
                return f64::INFINITY;
            }
            hi *= 2;
        }
        let mut lo = 0;
        while hi - lo > 1 {
            let mid = lo + (hi - lo) / 2;
            if self.expected_failure_time(mid) <= t {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let start = self.expected_failure_time(lo);
        lo as f64 + (t - start) / self.expected_tbf(lo + 1)
    }

    /// Log marginal likelihood of a sequence of times between failures.
    pub fn log_likelihood(&self, tbfs: &[f64]) -> f64 {
        lv_log_likelihood(self.alpha, self.beta0, self.beta1, tbfs)
    }
}

fn lv_log_likelihood(alpha: f64, beta0: f64, beta1: f64, tbfs: &[f64]) -> f64 {
    tbfs.iter()
        .enumerate()
        .map(|(idx, &t)| {
            let i = (idx + 1) as f64;
            let phi = beta0 + beta1 * i * i;
            // α ln φ - (α + 1) ln(t + φ), kept accurate when φ >> t
            alpha.ln() - (t + phi).ln() - alpha * (t / phi).ln_1p()
        })
        .sum()
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "{name} must be positive and finite, got {v}"
        )))
    }
}

/// A fitted model of any supported kind.
///
/// Serialises externally tagged by model name, e.g.
/// `{"musa-basic": {"total_faults": .., "hazard": ..}}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FittedModel {
    Geometric(GeometricModelParams),
    MusaBasic(MusaBasicParams),
    MusaOkumoto(MusaOkumotoParams),
    LittlewoodVerrall(LittlewoodVerrallParams),
    Nhpp(NhppParams),
}

impl FittedModel {
    pub fn kind(&self) -> ModelKind {
        match self {
            FittedModel::Geometric(_) => ModelKind::Geometric,
            FittedModel::MusaBasic(_) => ModelKind::MusaBasic,
            FittedModel::MusaOkumoto(_) => ModelKind::MusaOkumoto,
            FittedModel::LittlewoodVerrall(_) => ModelKind::LittlewoodVerrall,
            FittedModel::Nhpp(_) => ModelKind::Nhpp,
        }
    }
}

impl ReliabilityModel for FittedModel {
    fn model_name(&self) -> &str {
        self.kind().name()
    }

    fn predict_mean(&self, t: f64) -> f64 {
        match self {
            FittedModel::Geometric(p) => p.mean_failures(t),
            FittedModel::MusaBasic(p) => p.mean(t),
            FittedModel::MusaOkumoto(p) => p.mean(t),
            FittedModel::LittlewoodVerrall(p) => p.mean(t),
            FittedModel::Nhpp(p) => p.mean(t),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonFit {
    pub model: FittedModel,
    /// Least-squares objective, or the negative log-likelihood for Littlewood-Verrall.
    pub objective: f64,
    pub converged: bool,
    pub iterations: usize,
}

/// Fits the named model to `ds`. Errors carry the model name.
pub fn fit_comparison(
    kind: ModelKind,
    ds: &FailureDataset,
    config: &OptimizerConfig,
) -> Result<ComparisonFit> {
    fit_kind(kind, ds, config).map_err(|e| e.in_model(kind.name()))
}

fn fit_kind(
    kind: ModelKind,
    ds: &FailureDataset,
    config: &OptimizerConfig,
) -> Result<ComparisonFit> {
    match kind {
        ModelKind::Geometric => {
            let fit = estimation::fit(ds, config)?;
            Ok(ComparisonFit {
                model: FittedModel::Geometric(fit.params),
                objective: fit.objective_value,
                converged: fit.converged,
                iterations: fit.iterations,
            })
        }
        ModelKind::MusaBasic | ModelKind::Nhpp => {
            let obs = usable(ds, 2)?;
            let (t_q, q) = (ds.final_time(), ds.final_count() as f64);
            // β0 = 2q reaches q at t_q when β1 = ln 2 / t_q
            let start = [(2.0 * q).ln(), (std::f64::consts::LN_2 / t_q).ln()];
            let (x, objective, converged, iterations) = log_ls(&obs, config, &start, |x, t| {
                -x[0].exp() * (-x[1].exp() * t).exp_m1()
            })?;
            let model = if kind == ModelKind::MusaBasic {
                FittedModel::MusaBasic(MusaBasicParams::new(x[0].exp(), x[1].exp())?)
            } else {
                FittedModel::Nhpp(NhppParams::new(x[0].exp(), x[1].exp())?)
            };
            Ok(ComparisonFit {
                model,
                objective,
                converged,
                iterations,
            })
        }
        ModelKind::MusaOkumoto => {
            let obs = usable(ds, 2)?;
            let (t_q, q) = (ds.final_time(), ds.final_count() as f64);
            // λ0 t_q = 2q; ln(1 + x) / x = 1/2 near x = 2.5 puts μ(t_q) close to q
            let lambda0 = 2.0 * q / t_q;
            let theta = 2.5 / (lambda0 * t_q);
            let start = [lambda0.ln(), theta.ln()];
            let (x, objective, converged, iterations) = log_ls(&obs, config, &start, |x, t| {
                let (l0, th) = (x[0].exp(), x[1].exp());
                (l0 * th * t).ln_1p() / th
            })?;
            Ok(ComparisonFit {
                model: FittedModel::MusaOkumoto(MusaOkumotoParams::new(x[0].exp(), x[1].exp())?),
                objective,
                converged,
                iterations,
            })
        }
        ModelKind::LittlewoodVerrall => fit_littlewood_verrall(ds, config),
    }
}

fn usable(ds: &FailureDataset, needed: usize) -> Result<Vec<Observation>> {
    let (obs, _) = observations(ds);
    if obs.len() < needed {
        return Err(Error::InsufficientData {
            needed,
            found: obs.len(),
        });
    }
    Ok(obs)
}

fn log_ls(
    obs: &[Observation],
    config: &OptimizerConfig,
    start: &[f64],
    mean: impl Fn(&[f64], f64) -> f64,
) -> Result<(Vec<f64>, f64, bool, usize)> {
    let m = nelder_mead(
        |x| log_squared_residuals(obs, |t| mean(x, t)),
        config,
        start,
    )?;
    Ok((m.point, m.value, m.converged, m.iterations))
}

/// Minimum number of failures for a Littlewood-Verrall fit.
pub const LV_MIN_FAILURES: usize = 5;

fn fit_littlewood_verrall(ds: &FailureDataset, config: &OptimizerConfig) -> Result<ComparisonFit> {
    let tbfs = ds.times_between_failures();
    if tbfs.len() < LV_MIN_FAILURES {
        return Err(Error::InsufficientData {
            needed: LV_MIN_FAILURES,
            found: tbfs.len(),
        });
    }
    let n = tbfs.len();
    let head = tbfs[..LV_MIN_FAILURES].iter().sum::<f64>() / LV_MIN_FAILURES as f64;
    let tail = tbfs[n - LV_MIN_FAILURES..].iter().sum::<f64>() / LV_MIN_FAILURES as f64;
    // Searched over ln(α - 1) and ln of the mean-scale coefficients
    // m = β / (α - 1), which fix the expected times between failures. As α
    // grows the likelihood flattens along α alone, leaving predictions stable.
    let m0 = head;
    let m1 = ((tail - head) / (n * n) as f64).max(1e-3 * head / (n * n) as f64);
    let decode = |x: &[f64]| {
        let shape_excess = x[0].exp();
        (
            1.0 + shape_excess,
            x[1].exp() * shape_excess,
            x[2].exp() * shape_excess,
        )
    };
    let start = [0.0, m0.ln(), m1.ln()];
    let m = nelder_mead(
        |x| {
            let (alpha, beta0, beta1) = decode(x);
            -lv_log_likelihood(alpha, beta0, beta1, &tbfs)
        },
        config,
        &start,
    )?;
    let (alpha, beta0, beta1) = decode(&m.point);
    Ok(ComparisonFit {
        model: FittedModel::LittlewoodVerrall(LittlewoodVerrallParams::new(alpha, beta0, beta1)?),
        objective: m.value,
        converged: m.converged,
        iterations: m.iterations,
    })
}

/// Fitting strategy consumed by the validity harness.
pub trait ModelFitter: Sync {
    fn name(&self) -> &str;

    fn fit_model(&self, ds: &FailureDataset) -> Result<FitOutcome>;
}

pub struct FitOutcome {
    pub model: Box<dyn ReliabilityModel + Send + Sync>,
    pub converged: bool,
}

/// A [`ModelKind`] paired with the optimizer settings used to fit it.
#[derive(Debug, Clone)]
pub struct ModelSpec {
    pub kind: ModelKind,
    pub config: OptimizerConfig,
}

impl ModelSpec {
    pub fn new(kind: ModelKind) -> Self {
        Self {
            kind,
            config: OptimizerConfig::default(),
        }
    }
}

impl ModelFitter for ModelSpec {
    fn name(&self) -> &str {
        self.kind.name()
    }

    fn fit_model(&self, ds: &FailureDataset) -> Result<FitOutcome> {
        let fit = fit_comparison(self.kind, ds, &self.config)?;
        Ok(FitOutcome {
            model: Box::new(fit.model),
            converged: fit.converged,
        })
    }
}
