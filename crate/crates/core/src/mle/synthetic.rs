use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::experiments::{ExperimentRecord, ExperimentSet};
use crate::error::{Error, Result};
use crate::models::{ExperimentConfig, ForwardModel, LoadLevel};
use crate::transform::InputProbabilityModel;

/// Ground truth written next to a synthetic experiment set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticTruth {
    pub model: String,
    pub alpha: InputProbabilityModel,
    pub seed: u64,
    pub experiments: usize,
}

const CAMELBACK_WEIGHTS_X1: [f64; 3] = [3.0, 4.0, 5.0];
const CAMELBACK_WEIGHTS_X2: [f64; 3] = [6.0, 8.0, 10.0];
const CAMELBACK_TARGETS: [f64; 5] = [-1.0, -0.5, 0.0, 0.5, 1.0];

/// Design for the two-input camelback family: odd ids act on `x₁` only,
/// even ids on `x₂` only, with the shift chosen so that the argument at
/// `center` sweeps `[-1, 1]`.
pub fn camelback_design(experiments: usize, center: [f64; 2]) -> Vec<ExperimentConfig> {
    (0..experiments)
        .map(|k| {
            let j = k / 2;
            let target = CAMELBACK_TARGETS[j % CAMELBACK_TARGETS.len()];
            let (a, b) = if k % 2 == 0 {
                (CAMELBACK_WEIGHTS_X1[j % 3], 0.0)
            } else {
                (0.0, CAMELBACK_WEIGHTS_X2[j % 3])
            };
            ExperimentConfig {
                id: k as u32 + 1,
                dt: target - a * center[0] - b * center[1],
                u0: a,
                du: b,
                omega_m_rpm: 1.0,
                load: LoadLevel::Low,
            }
        })
        .collect()
}

/// Full factorial of the engagement settings, cycled up to `experiments` runs.
pub fn clutch_design(experiments: usize) -> Vec<ExperimentConfig> {
    let mut grid = Vec::new();
    for load in [LoadLevel::Low, LoadLevel::High] {
        for omega in [1000.0, 1500.0] {
            for dt in [0.1, 0.15, 0.2] {
                for u0 in [0.35, 0.4, 0.45] {
                    for du in [0.1, 0.2] {
                        grid.push((dt, u0, du, omega, load));
                    }
                }
            }
        }
    }
    (0..experiments)
        .map(|k| {
            let (dt, u0, du, omega_m_rpm, load) = grid[k % grid.len()];
            ExperimentConfig {
                id: k as u32 + 1,
                dt,
                u0,
                du,
                omega_m_rpm,
                load,
            }
        })
        .collect()
}

/// One observation per experiment at an independent draw `x ~ α`.
pub fn draw_observations(
    model: &dyn ForwardModel,
    configs: &[ExperimentConfig],
    alpha: &InputProbabilityModel,
    seed: u64,
) -> Result<ExperimentSet> {
    if alpha.dimension() != model.input_dimension() {
        return Err(Error::Contract("input model and forward model dimensions differ".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut records = Vec::with_capacity(configs.len());
    for config in configs {
        let theta: Vec<f64> = (0..alpha.dimension()).map(|_| StandardNormal.sample(&mut rng)).collect();
        let y = model.evaluate(config, &alpha.to_physical(&theta))?;
        records.push(ExperimentRecord { config: *config, y });
    }
    ExperimentSet::new(records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{CamelbackExperimentModel, CAMELBACK_DOMAIN};

    #[test]
    fn design_stays_in_domain_over_clip_box() {
        for c in camelback_design(20, [2.0, 1.0]) {
            for (x1, x2) in [(1.0, 0.5), (3.0, 1.5), (1.0, 1.5), (3.0, 0.5)] {
                assert!(CamelbackExperimentModel::argument(&c, &[x1, x2]).abs() <= CAMELBACK_DOMAIN);
            }
        }
    }

    #[test]
    fn draws_are_seeded() {
        let alpha = InputProbabilityModel::unbounded(vec![2.0, 1.0], vec![0.1, 0.05]).unwrap();
        let design = camelback_design(6, [2.0, 1.0]);
        let a = draw_observations(&CamelbackExperimentModel, &design, &alpha, 3).unwrap();
        let b = draw_observations(&CamelbackExperimentModel, &design, &alpha, 3).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 6);
    }
}
