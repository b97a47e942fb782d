//! Nelder-Mead downhill simplex minimisation.
//!
//! Textbook reflection / expansion / contraction / shrink moves. The run stops
//! once the spread of objective values across the simplex falls to the
//! configured tolerance; at that point the simplex is rebuilt around the best
//! vertex and the search resumes only if the fresh simplex finds a value
//! better than the best by more than the tolerance. This guards against
//! collapsing onto two vertices that happen to share a value on opposite
//! sides of the minimum.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub reflection: f64,
    pub expansion: f64,
    pub contraction: f64,
    pub shrink: f64,
    /// Termination threshold on `f(worst) - f(best)`.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Offset of each extra initial vertex along its coordinate axis.
    pub initial_step: f64,
    /// Starting `(p1, d)` for geometric-model fits; `None` derives one from the data.
    pub initial_guess: Option<(f64, f64)>,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            reflection: 1.0,
            expansion: 2.0,
            contraction: 0.5,
            shrink: 0.5,
            tolerance: 1e-8,
            max_iterations: 2000,
            initial_step: 0.25,
            initial_guess: None,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidParameter(format!("optimizer: {what}")));
        if !(self.reflection > 0.0) {
            return bad("reflection must be positive");
        }
        if !(self.expansion > 1.0) {
            return bad("expansion must exceed 1");
        }
        if !(self.contraction > 0.0 && self.contraction < 1.0) {
            return bad("contraction must lie in (0, 1)");
        }
        if !(self.shrink > 0.0 && self.shrink < 1.0) {
            return bad("shrink must lie in (0, 1)");
        }
        if !(self.tolerance >= 0.0) {
            return bad("tolerance must be non-negative");
        }
        if !(self.initial_step > 0.0 && self.initial_step.is_finite()) {
            return bad("initial step must be positive");
        }
        if let Some((p1, d)) = self.initial_guess {
            if !(p1 > 0.0 && p1 < 1.0 && d > 0.0 && d < 1.0) {
                return bad("initial guess must lie in (0, 1) x (0, 1)");
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub point: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
    /// `f(worst) - f(best)` of the final simplex.
    pub spread: f64,
    /// Probed points whose objective was NaN or infinite; they count as `+inf`.
    pub non_finite_evaluations: usize,
    pub restarts: usize,
}

struct Counted<F> {
    f: F,
    evaluations: usize,
    non_finite: usize,
}

impl<F: FnMut(&[f64]) -> f64> Counted<F> {
    fn eval(&mut self, x: &[f64]) -> f64 {
        self.evaluations += 1;
        let v = (self.f)(x);
        if v.is_finite() {
            v
        } else {
            self.non_finite += 1;
            f64::INFINITY
        }
    }
}

fn axis_simplex(center: &[f64], step: f64) -> Vec<Vec<f64>> {
    let mut simplex = vec![center.to_vec()];
    for i in 0..center.len() {
        let mut v = center.to_vec();
        v[i] += step;
        simplex.push(v);
    }
    simplex
}

/// Minimises `objective` starting from `start`.
///
/// The objective must be finite at every vertex of the initial simplex. Later
/// non-finite values are treated as `+inf` and tallied in
/// [`Minimum::non_finite_evaluations`].
pub fn nelder_mead<F>(objective: F, config: &OptimizerConfig, start: &[f64]) -> Result<Minimum>
where
    F: FnMut(&[f64]) -> f64,
{
    config.validate()?;
    let n = start.len();
    if n == 0 {
        return Err(Error::InvalidParameter(
            "optimizer: empty start vector".into(),
        ));
    }
    let mut f = Counted {
        f: objective,
        evaluations: 0,
        non_finite: 0,
    };

    let mut simplex = axis_simplex(start, config.initial_step);
    let mut values = Vec::with_capacity(n + 1);
    for (i, v) in simplex.iter().enumerate() {
        let value = f.eval(v);
        if !value.is_finite() {
            return Err(Error::NonFiniteStart { vertex: i });
        }
        values.push(value);
    }

    let mut iterations = 0;
    let mut restarts = 0;
    let mut converged = false;

    loop {
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        simplex = order.iter().map(|&i| simplex[i].clone()).collect();
        values = order.iter().map(|&i| values[i]).collect();

        let spread = values[n] - values[0];
        if spread <= config.tolerance {
            let fresh = axis_simplex(&simplex[0], config.initial_step);
            let fresh_values: Vec<f64> = fresh[1..].iter().map(|v| f.eval(v)).collect();
            let fresh_best = fresh_values.iter().copied().fold(f64::INFINITY, f64::min);
            if fresh_best < values[0] - config.tolerance && iterations < config.max_iterations {
                restarts += 1;
                simplex.truncate(1);
                simplex.extend(fresh.into_iter().skip(1));
                values.truncate(1);
                values.extend(fresh_values);
                continue;
            }
            converged = true;
            break;
        }
        if iterations >= config.max_iterations {
            break;
        }
        iterations += 1;

        let worst = simplex[n].clone();
        let centroid: Vec<f64> = (0..n)
            .map(|j| simplex[..n].iter().map(|v| v[j]).sum::<f64>() / n as f64)
            .collect();
        let along = |coef: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&worst)
                .map(|(c, w)| c + coef * (c - w))
                .collect()
        };

        let reflected = along(config.reflection);
        let f_reflected = f.eval(&reflected);

        if f_reflected < values[0] {
            let expanded = along(config.reflection * config.expansion);
            let f_expanded = f.eval(&expanded);
            if f_expanded < f_reflected {
                simplex[n] = expanded;
                values[n] = f_expanded;
            } else {
                simplex[n] = reflected;
                values[n] = f_reflected;
            }
            continue;
        }
        if f_reflected < values[n - 1] {
            simplex[n] = reflected;
            values[n] = f_reflected;
            continue;
        }
        // A reflected value tied with the worst goes to the reflected side.
        if f_reflected <= values[n] {
            let outside = along(config.reflection * config.contraction);
            let f_outside = f.eval(&outside);
            if f_outside <= f_reflected {
                simplex[n] = outside;
                values[n] = f_outside;
                continue;
            }
        } else {
            let inside = along(-config.contraction);
            let f_inside = f.eval(&inside);
            if f_inside < values[n] {
                simplex[n] = inside;
                values[n] = f_inside;
                continue;
            }
        }

        let best = simplex[0].clone();
        for i in 1..=n {
            for (x, b) in simplex[i].iter_mut().zip(&best) {
                *x = b + config.shrink * (*x - b);
            }
            values[i] = f.eval(&simplex[i]);
        }
    }

    Ok(Minimum {
        point: simplex[0].clone(),
        value: values[0],
        iterations,
        evaluations: f.evaluations,
        converged,
        spread: values[n] - values[0],
        non_finite_evaluations: f.non_finite,
        restarts,
    })
}
