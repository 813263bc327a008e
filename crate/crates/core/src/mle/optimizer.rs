use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Differential evolution (rand/1/bin) settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OptimizerConfig {
    pub population: usize,
    pub generations: usize,
    /// Mutation scale `F`.
    pub differential_weight: f64,
    /// Binomial crossover probability.
    pub crossover: f64,
    pub seed: u64,
    /// Stop once the population fitness spread is below `tolerance·(1 + |best|)`.
    pub tolerance: f64,
    pub parallel: bool,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            population: 50,
            generations: 60,
            differential_weight: 0.7,
            crossover: 0.9,
            seed: 0,
            tolerance: 1e-10,
            parallel: true,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.population < 4 {
            return Err(Error::InvalidArgument("population must hold at least 4 members".into()));
        }
        if !(self.differential_weight > 0.0 && self.differential_weight <= 2.0) {
            return Err(Error::InvalidArgument("differential weight must lie in (0, 2]".into()));
        }
        if !(0.0..=1.0).contains(&self.crossover) {
            return Err(Error::InvalidArgument("crossover probability must lie in [0, 1]".into()));
        }
        if !(self.tolerance >= 0.0) {
            return Err(Error::InvalidArgument("tolerance must be non-negative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptimizationResult {
    pub best: Vec<f64>,
    pub best_value: f64,
    /// Best-so-far value after initialization and after every generation.
    pub trace: Vec<f64>,
    pub evaluations: usize,
    pub converged: bool,
}

/// Maximizes `f` over the box `bounds`. Trial vectors are generated from the
/// seeded stream before evaluation, so the result does not depend on the
/// number of worker threads.
pub fn maximize<F>(f: F, bounds: &[(f64, f64)], config: &OptimizerConfig) -> Result<OptimizationResult>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    config.validate()?;
    if bounds.is_empty() {
        return Err(Error::InvalidArgument("no variables to optimize".into()));
    }
    for (k, &(lo, hi)) in bounds.iter().enumerate() {
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return Err(Error::InvalidArgument(format!("bounds [{lo}, {hi}] of variable {k} are invalid")));
        }
    }
    let dim = bounds.len();
    let np = config.population;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let evaluate = |xs: &[Vec<f64>]| -> Vec<f64> {
        let score = |x: &Vec<f64>| {
            let v = f(x);
            if v.is_nan() {
                f64::NEG_INFINITY
            } else {
                v
            }
        };
        if config.parallel {
            xs.par_iter().map(score).collect()
        } else {
            xs.iter().map(score).collect()
        }
    };

    let mut pop: Vec<Vec<f64>> = (0..np)
        .map(|_| bounds.iter().map(|&(lo, hi)| lo + rng.random::<f64>() * (hi - lo)).collect())
        .collect();
    let mut fit = evaluate(&pop);
    let mut evaluations = np;
    let mut best = argmax(&fit);
    let mut trace = vec![fit[best]];
    let mut converged = false;

    for _ in 0..config.generations {
        if spread(&fit) <= config.tolerance * (1.0 + fit[best].abs()) {
            converged = true;
            break;
        }
        let trials: Vec<Vec<f64>> = (0..np)
            .map(|i| {
                let [r1, r2, r3] = distinct(&mut rng, np, i);
                let jrand = rng.random_range(0..dim);
                (0..dim)
                    .map(|j| {
                        if j == jrand || rng.random::<f64>() < config.crossover {
                            let v = pop[r1][j] + config.differential_weight * (pop[r2][j] - pop[r3][j]);
                            let (lo, hi) = bounds[j];
                            // out-of-box components move halfway from the parent to the bound
                            if v < lo {
                                0.5 * (pop[i][j] + lo)
                            } else if v > hi {
                                0.5 * (pop[i][j] + hi)
                            } else {
                                v
                            }
                        } else {
                            pop[i][j]
                        }
                    })
                    .collect()
            })
            .collect();
        let trial_fit = evaluate(&trials);
        evaluations += np;
        for (i, (x, v)) in trials.into_iter().zip(trial_fit).enumerate() {
            if v >= fit[i] {
                pop[i] = x;
                fit[i] = v;
            }
        }
        best = argmax(&fit);
        trace.push(fit[best]);
    }
    if !converged && spread(&fit) <= config.tolerance * (1.0 + fit[best].abs()) {
        converged = true;
    }
    Ok(OptimizationResult {
        best: pop[best].clone(),
        best_value: fit[best],
        trace,
        evaluations,
        converged,
    })
}

fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

fn spread(values: &[f64]) -> f64 {
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    if hi.is_finite() && lo.is_finite() {
        hi - lo
    } else {
        f64::INFINITY
    }
}

fn distinct(rng: &mut ChaCha8Rng, np: usize, exclude: usize) -> [usize; 3] {
    let mut picked = [exclude; 3];
    for k in 0..3 {
        loop {
            let r = rng.random_range(0..np);
            if r != exclude && !picked[..k].contains(&r) {
                picked[k] = r;
                break;
            }
        }
    }
    picked
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn finds_quadratic_peak() {
        let config = OptimizerConfig {
            population: 20,
            generations: 100,
            ..Default::default()
        };
        let r = maximize(|x| -(x[0] - 0.3).powi(2) - 2.0 * (x[1] + 1.0).powi(2), &[(-2.0, 2.0), (-2.0, 2.0)], &config).unwrap();
        assert_abs_diff_eq!(r.best[0], 0.3, epsilon = 1e-4);
        assert_abs_diff_eq!(r.best[1], -1.0, epsilon = 1e-4);
        assert!(r.trace.windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn zero_generations_returns_best_initial() {
        let config = OptimizerConfig {
            generations: 0,
            ..Default::default()
        };
        let r = maximize(|x| -x[0].abs(), &[(-1.0, 1.0)], &config).unwrap();
        assert_eq!(r.trace.len(), 1);
        assert_eq!(r.evaluations, 50);
        assert_eq!(r.best_value, r.trace[0]);
    }

    #[test]
    fn worker_count_does_not_matter() {
        let f = |x: &[f64]| -(x[0] * x[0] + (x[1] - 0.5).powi(2)).sqrt().sin();
        let seq = OptimizerConfig {
            parallel: false,
            seed: 9,
            ..Default::default()
        };
        let par = OptimizerConfig { parallel: true, ..seq.clone() };
        let a = maximize(f, &[(-1.0, 1.0), (-1.0, 1.0)], &seq).unwrap();
        let b = maximize(f, &[(-1.0, 1.0), (-1.0, 1.0)], &par).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rejects_bad_bounds() {
        assert!(maximize(|_| 0.0, &[(1.0, 0.0)], &OptimizerConfig::default()).is_err());
        assert!(maximize(|_| 0.0, &[(0.0, f64::INFINITY)], &OptimizerConfig::default()).is_err());
    }
}
