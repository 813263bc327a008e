use super::{ExperimentConfig, ForwardModel};
use crate::error::{Error, Result};

/// Largest admissible |x|; `tan(x/4)` has its first pole at 2π.
pub const CAMELBACK_DOMAIN: f64 = 6.0;

/// `tan(x/4) + exp(x/3 − 1) + tanh(x)`.
pub fn camelback(x: f64) -> Result<f64> {
    if !(x.abs() <= CAMELBACK_DOMAIN) {
        return Err(Error::Domain(format!("camelback argument {x} outside [-6, 6]")));
    }
    Ok((0.25 * x).tan() + (x / 3.0 - 1.0).exp() + x.tanh())
}

/// The univariate function itself, ignoring the experiment configuration.
#[derive(Debug, Clone, Copy, Default)]
pub struct CamelbackModel;

impl ForwardModel for CamelbackModel {
    fn input_dimension(&self) -> usize {
        1
    }

    fn evaluate(&self, _config: &ExperimentConfig, x: &[f64]) -> Result<f64> {
        camelback(x[0])
    }
}

/// Two-input experiment family `y_l = camelback(s_l + a_l x₁ + b_l x₂)`,
/// with the shift, weights read from the `dt`, `u0`, `du` columns.
#[derive(Debug, Clone, Copy, Default)]
pub struct CamelbackExperimentModel;

impl CamelbackExperimentModel {
    pub fn argument(config: &ExperimentConfig, x: &[f64]) -> f64 {
        config.dt + config.u0 * x[0] + config.du * x[1]
    }
}

impl ForwardModel for CamelbackExperimentModel {
    fn input_dimension(&self) -> usize {
        2
    }

    fn evaluate(&self, config: &ExperimentConfig, x: &[f64]) -> Result<f64> {
        camelback(Self::argument(config, x))
    }
}
