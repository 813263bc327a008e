use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::experiments::ExperimentSet;
use super::propagation::{GpcSettings, LikelihoodEngine, PropagationMethod};
use crate::error::{Error, Result};
use crate::gpc::CacheSet;
use crate::models::ForwardModel;
use crate::transform::InputProbabilityModel;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BenchmarkConfig {
    pub gpc: GpcSettings,
    pub maxent_order: u32,
    pub reference_samples: usize,
    pub reference_seed: u64,
    pub mc_samples: Vec<usize>,
    /// Independent MC runs averaged at each sample count.
    pub mc_replicates: usize,
    pub mc_seed: u64,
    /// Grid points per input; the sample count is `k^n`.
    pub qmc_points_per_input: Vec<usize>,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        Self {
            gpc: GpcSettings::default(),
            maxent_order: 4,
            reference_samples: 200_000,
            reference_seed: 20_000,
            mc_samples: vec![25, 50, 100, 200, 400, 800, 1600, 3200, 6400, 12_800],
            mc_replicates: 10,
            mc_seed: 1,
            qmc_points_per_input: vec![2, 3, 5, 7, 10, 14, 20, 28, 40, 57, 80, 113],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchmarkRow {
    pub method: String,
    pub samples: usize,
    pub mae: f64,
}

/// Where a decreasing error curve first reaches a target.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", content = "samples", rename_all = "snake_case")]
pub enum Crossing {
    /// Already met at the smallest sample count.
    AtOrBelow(f64),
    Interpolated(f64),
    /// Never met up to the largest sample count.
    Beyond(f64),
}

impl Crossing {
    /// Lower bound on the matching sample count.
    pub fn lower_bound(&self) -> f64 {
        match *self {
            Crossing::AtOrBelow(_) => 0.0,
            Crossing::Interpolated(s) | Crossing::Beyond(s) => s,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchmarkTable {
    pub rows: Vec<BenchmarkRow>,
    pub gpc_evaluations: usize,
    pub gpc_maxent_mae: f64,
    pub gpc_gaussian_mae: f64,
    pub mc_match: Crossing,
    pub qmc_match: Crossing,
}

impl BenchmarkTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("method,samples,mae\n");
        for r in &self.rows {
            out.push_str(&format!("{},{},{:e}\n", r.method, r.samples, r.mae));
        }
        out
    }

    /// Gnuplot data blocks of `samples mae`, one per method.
    pub fn to_plot_data(&self) -> String {
        let mut out = String::new();
        for method in ["mc", "qmc"] {
            out.push_str(&format!("# {method}: samples mae\n"));
            for r in self.rows.iter().filter(|r| r.method == method) {
                out.push_str(&format!("{} {:e}\n", r.samples, r.mae));
            }
            out.push_str("\n\n");
        }
        out.push_str(&format!(
            "# gpc-maxent: samples mae\n{} {:e}\n\n\n# gpc-gauss: samples mae\n{} {:e}\n",
            self.gpc_evaluations, self.gpc_maxent_mae, self.gpc_evaluations, self.gpc_gaussian_mae
        ));
        out
    }
}

pub fn mean_absolute_error(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::Contract(format!("MAE of vectors of length {} and {}", a.len(), b.len())));
    }
    if a.is_empty() {
        return Ok(0.0);
    }
    Ok(a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>() / a.len() as f64)
}

/// Per-experiment log-likelihoods of the high-sample MC reference.
pub fn reference_log_likelihoods(
    model: Arc<dyn ForwardModel>,
    alpha: &InputProbabilityModel,
    experiments: &ExperimentSet,
    samples: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    let engine = LikelihoodEngine::new(model, PropagationMethod::Mc { samples, seed }, GpcSettings::default())?;
    Ok(engine.log_likelihood(alpha, experiments)?.per_experiment)
}

/// First sample count at which `curve` (sorted by samples) falls to `target`,
/// linearly interpolated in `log S` against `log MAE`.
pub fn crossing_samples(curve: &[(usize, f64)], target: f64) -> Result<Crossing> {
    if curve.is_empty() {
        return Err(Error::InvalidArgument("empty error curve".into()));
    }
    if curve[0].1 <= target {
        return Ok(Crossing::AtOrBelow(curve[0].0 as f64));
    }
    for w in curve.windows(2) {
        let ((s0, e0), (s1, e1)) = (w[0], w[1]);
        if e1 <= target {
            let (ls0, ls1) = ((s0 as f64).ln(), (s1 as f64).ln());
            let (le0, le1) = (e0.ln(), e1.ln());
            let t = if le1 == le0 { 1.0 } else { (target.ln() - le0) / (le1 - le0) };
            return Ok(Crossing::Interpolated((ls0 + t * (ls1 - ls0)).exp()));
        }
    }
    Ok(Crossing::Beyond(curve[curve.len() - 1].0 as f64))
}

/// MAE of per-experiment log-likelihoods against `reference` for the gPC
/// methods and for MC/qMC over the configured sample counts.
pub fn benchmark_mae(
    model: Arc<dyn ForwardModel>,
    alpha: &InputProbabilityModel,
    experiments: &ExperimentSet,
    reference: &[f64],
    caches: CacheSet,
    config: &BenchmarkConfig,
) -> Result<BenchmarkTable> {
    if reference.len() != experiments.len() {
        return Err(Error::Contract("reference has a different experiment count".into()));
    }
    let n = model.input_dimension();
    let per = |method: PropagationMethod| -> Result<Vec<f64>> {
        let engine = LikelihoodEngine::with_caches(model.clone(), method, config.gpc, caches.clone())?;
        Ok(engine.log_likelihood(alpha, experiments)?.per_experiment)
    };
    let gpc_maxent_mae = mean_absolute_error(&per(PropagationMethod::GpcMaxEnt { order: config.maxent_order })?, reference)?;
    let gpc_gaussian_mae = mean_absolute_error(&per(PropagationMethod::GpcGaussian)?, reference)?;
    let gpc_evaluations = config.gpc.nodes.pow(n as u32);
    let mut rows = vec![
        BenchmarkRow {
            method: "gpc-maxent".into(),
            samples: gpc_evaluations,
            mae: gpc_maxent_mae,
        },
        BenchmarkRow {
            method: "gpc-gauss".into(),
            samples: gpc_evaluations,
            mae: gpc_gaussian_mae,
        },
    ];
    let replicates = config.mc_replicates.max(1);
    let mut mc_curve = Vec::new();
    for &s in &config.mc_samples {
        let mut total = 0.0;
        for r in 0..replicates {
            let seed = config.mc_seed.wrapping_add(r as u64);
            total += mean_absolute_error(&per(PropagationMethod::Mc { samples: s, seed })?, reference)?;
        }
        let mae = total / replicates as f64;
        log::info!("mc S={s}: MAE {mae:.4e}");
        mc_curve.push((s, mae));
        rows.push(BenchmarkRow {
            method: "mc".into(),
            samples: s,
            mae,
        });
    }
    let mut qmc_curve = Vec::new();
    for &k in &config.qmc_points_per_input {
        let s = k
            .checked_pow(n as u32)
            .ok_or_else(|| Error::InvalidArgument(format!("{k}^{n} grid is too large")))?;
        if s < 2 {
            continue;
        }
        let mae = mean_absolute_error(&per(PropagationMethod::Qmc { samples: s })?, reference)?;
        log::info!("qmc S={s}: MAE {mae:.4e}");
        qmc_curve.push((s, mae));
        rows.push(BenchmarkRow {
            method: "qmc".into(),
            samples: s,
            mae,
        });
    }
    Ok(BenchmarkTable {
        rows,
        gpc_evaluations,
        gpc_maxent_mae,
        gpc_gaussian_mae,
        mc_match: crossing_samples(&mc_curve, gpc_maxent_mae)?,
        qmc_match: crossing_samples(&qmc_curve, gpc_maxent_mae)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn log_log_crossing() {
        let curve = [(10, 1.0), (100, 0.1), (1000, 0.01)];
        match crossing_samples(&curve, 0.1f64.sqrt()).unwrap() {
            Crossing::Interpolated(s) => assert_abs_diff_eq!(s, 10f64.powf(1.5), epsilon = 1e-9),
            other => panic!("{other:?}"),
        }
        assert_eq!(crossing_samples(&curve, 2.0).unwrap(), Crossing::AtOrBelow(10.0));
        assert_eq!(crossing_samples(&curve, 1e-3).unwrap(), Crossing::Beyond(1000.0));
    }

    #[test]
    fn mae_of_self_is_zero() {
        let v = [1.0, -2.0, 3.5];
        assert_eq!(mean_absolute_error(&v, &v).unwrap(), 0.0);
        assert!(mean_absolute_error(&v, &v[..2]).is_err());
    }
}
