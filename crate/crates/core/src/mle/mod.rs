//! Likelihood of experiment sets under an input probability model, sampling
//! baselines, and maximum-likelihood identification.

mod benchmark;
mod experiments;
mod identify;
mod optimizer;
mod propagation;
mod synthetic;

pub use benchmark::{
    benchmark_mae, crossing_samples, mean_absolute_error, reference_log_likelihoods, BenchmarkConfig, BenchmarkRow,
    BenchmarkTable, Crossing,
};
pub use experiments::{ExperimentRecord, ExperimentSet};
pub use identify::{identify, least_squares_baseline, AlphaBounds, IdentificationResult, LeastSquaresResult};
pub use optimizer::{maximize, OptimizationResult, OptimizerConfig};
pub use propagation::{
    mc_output_samples, mc_propagate, qmc_nodes, qmc_output_samples, qmc_propagate, GpcSettings, LikelihoodEngine,
    LikelihoodReport, PropagationMethod, SampleOutcome, TermStatus, DEFAULT_FAILURE_LOG_LIKELIHOOD,
};
pub use synthetic::{camelback_design, clutch_design, draw_observations, SyntheticTruth};
