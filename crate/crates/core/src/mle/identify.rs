use serde::{Deserialize, Serialize};

use super::experiments::ExperimentSet;
use super::optimizer::{maximize, OptimizerConfig};
use super::propagation::{LikelihoodEngine, LikelihoodReport};
use crate::error::{Error, Result};
use crate::models::ForwardModel;
use crate::transform::InputProbabilityModel;

/// Search box for `α = (μ₁..μₙ, σ₁..σₙ)` and the fixed clipping bounds of the inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaBounds {
    pub mu: Vec<(f64, f64)>,
    pub sigma: Vec<(f64, f64)>,
    /// Lower clip per input; `null` for none.
    #[serde(default)]
    pub clip_lower: Option<Vec<Option<f64>>>,
    #[serde(default)]
    pub clip_upper: Option<Vec<Option<f64>>>,
}

impl AlphaBounds {
    pub fn dimension(&self) -> usize {
        self.mu.len()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.mu.len();
        if n == 0 || self.sigma.len() != n {
            return Err(Error::InvalidArgument("mu and sigma bounds need one pair per input".into()));
        }
        for (k, &(lo, hi)) in self.mu.iter().chain(&self.sigma).enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(Error::InvalidArgument(format!("bound pair {k} [{lo}, {hi}] is invalid")));
            }
        }
        if let Some(k) = self.sigma.iter().position(|&(lo, _)| !(lo > 0.0)) {
            return Err(Error::InvalidArgument(format!("sigma lower bound of input {k} must be positive")));
        }
        for clip in [&self.clip_lower, &self.clip_upper].into_iter().flatten() {
            if clip.len() != n {
                return Err(Error::InvalidArgument("clip bounds need one entry per input".into()));
            }
        }
        Ok(())
    }

    pub fn search_box(&self) -> Vec<(f64, f64)> {
        self.mu.iter().chain(&self.sigma).copied().collect()
    }

    /// Input model for the packed vector `(μ, σ)`.
    pub fn model(&self, packed: &[f64]) -> Result<InputProbabilityModel> {
        let n = self.dimension();
        if packed.len() != 2 * n {
            return Err(Error::InvalidArgument(format!("expected {} parameters, got {}", 2 * n, packed.len())));
        }
        let clip = |c: &Option<Vec<Option<f64>>>, fill: f64| -> Vec<f64> {
            match c {
                Some(v) => v.iter().map(|b| b.unwrap_or(fill)).collect(),
                None => vec![fill; n],
            }
        };
        InputProbabilityModel::new(
            packed[..n].to_vec(),
            packed[n..].to_vec(),
            clip(&self.clip_lower, f64::NEG_INFINITY),
            clip(&self.clip_upper, f64::INFINITY),
        )
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct IdentificationResult {
    pub alpha: InputProbabilityModel,
    pub log_likelihood: f64,
    pub trace: Vec<f64>,
    pub at_optimum: LikelihoodReport,
    /// Likelihood evaluations by the optimizer.
    pub likelihood_evaluations: usize,
    pub model_evaluations: usize,
    pub converged: bool,
}

/// Maximum-likelihood estimate of the input model over the box `bounds`.
pub fn identify(
    engine: &LikelihoodEngine,
    experiments: &ExperimentSet,
    bounds: &AlphaBounds,
    config: &OptimizerConfig,
) -> Result<IdentificationResult> {
    bounds.validate()?;
    if bounds.dimension() != engine.model().input_dimension() {
        return Err(Error::Contract(format!(
            "bounds describe {} inputs, model has {}",
            bounds.dimension(),
            engine.model().input_dimension()
        )));
    }
    let objective = |packed: &[f64]| {
        bounds
            .model(packed)
            .and_then(|alpha| engine.log_likelihood(&alpha, experiments))
            .map(|r| r.total)
            .unwrap_or(f64::NEG_INFINITY)
    };
    let run = maximize(objective, &bounds.search_box(), config)?;
    let alpha = bounds.model(&run.best)?;
    let at_optimum = engine.log_likelihood(&alpha, experiments)?;
    Ok(IdentificationResult {
        alpha,
        log_likelihood: run.best_value,
        trace: run.trace,
        likelihood_evaluations: run.evaluations,
        model_evaluations: run.evaluations * experiments.len() * engine.evaluations_per_experiment(),
        converged: run.converged,
        at_optimum,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LeastSquaresResult {
    pub x: Vec<f64>,
    pub sum_of_squares: f64,
    /// `Σ log φ(y_l − 𝒴(l, x̂))` with unit variance.
    pub implied_log_likelihood: f64,
    pub trace: Vec<f64>,
    pub converged: bool,
}

/// Residual sum of squares assigned to a parameter vector at which the model fails.
const FAILED_SUM_OF_SQUARES: f64 = 1e12;

/// Deterministic point fit `min_x Σ (y_l − 𝒴(l, x))²` by the same optimizer.
pub fn least_squares_baseline(
    model: &dyn ForwardModel,
    experiments: &ExperimentSet,
    bounds: &[(f64, f64)],
    config: &OptimizerConfig,
) -> Result<LeastSquaresResult> {
    if bounds.len() != model.input_dimension() {
        return Err(Error::Contract(format!(
            "{} bounds for a model with {} inputs",
            bounds.len(),
            model.input_dimension()
        )));
    }
    let sse = |x: &[f64]| -> Result<f64> {
        experiments
            .records()
            .iter()
            .map(|r| model.evaluate(&r.config, x).map(|v| (r.y - v).powi(2)))
            .sum()
    };
    let run = maximize(|x| -sse(x).unwrap_or(FAILED_SUM_OF_SQUARES), bounds, config)?;
    let sum_of_squares = sse(&run.best)?;
    let half_log_2pi = 0.5 * (2.0 * std::f64::consts::PI).ln();
    Ok(LeastSquaresResult {
        implied_log_likelihood: -0.5 * sum_of_squares - experiments.len() as f64 * half_log_2pi,
        x: run.best,
        sum_of_squares,
        trace: run.trace,
        converged: run.converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mle::experiments::ExperimentRecord;
    use crate::models::{ExperimentConfig, LoadLevel};
    use approx::assert_abs_diff_eq;

    /// `y = a · l`.
    struct Linear;

    impl ForwardModel for Linear {
        fn input_dimension(&self) -> usize {
            1
        }

        fn evaluate(&self, c: &ExperimentConfig, x: &[f64]) -> Result<f64> {
            Ok(x[0] * c.id as f64)
        }
    }

    fn set(ys: &[f64]) -> ExperimentSet {
        ExperimentSet::new(
            ys.iter()
                .enumerate()
                .map(|(k, &y)| ExperimentRecord {
                    config: ExperimentConfig {
                        id: k as u32 + 1,
                        dt: 0.1,
                        u0: 0.4,
                        du: 0.2,
                        omega_m_rpm: 1500.0,
                        load: LoadLevel::Low,
                    },
                    y,
                })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn exact_linear_fit() {
        let data = set(&[2.0, 4.0, 6.0, 8.0]);
        let r = least_squares_baseline(&Linear, &data, &[(-5.0, 5.0)], &OptimizerConfig::default()).unwrap();
        assert_abs_diff_eq!(r.x[0], 2.0, epsilon = 1e-6);
    }

    #[test]
    fn bounds_validation() {
        let b = AlphaBounds {
            mu: vec![(0.0, 1.0)],
            sigma: vec![(0.0, 1.0)],
            clip_lower: None,
            clip_upper: None,
        };
        assert!(b.validate().is_err());
        let ok = AlphaBounds {
            sigma: vec![(0.1, 1.0)],
            clip_lower: Some(vec![Some(-1.0)]),
            ..b
        };
        ok.validate().unwrap();
        let m = ok.model(&[0.5, 0.2]).unwrap();
        assert_eq!(m.lower(), &[-1.0]);
        assert_eq!(m.upper(), &[f64::INFINITY]);
    }
}
