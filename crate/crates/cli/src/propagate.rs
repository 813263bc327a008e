//! Univariate camelback demonstration: gPC coefficients and moments against
//! an integration oracle, and Gaussian / MaxEnt fits scored by EMD against a
//! Monte Carlo reference.

use std::path::PathBuf;
use std::sync::Arc;

use gpcid_core::basis::PolynomialFamily;
use gpcid_core::density::{
    emd_density, fit_gaussian, fit_maxent, maxent_support, Density, GaussianDensity, HistogramDensity,
    MaxEntDensity, MaxEntOptions,
};
use gpcid_core::gpc::{CacheOptions, CacheSet, ChaosBasis, GpcExpansion, MomentVector, Projector, TensorQuadrature};
use gpcid_core::integrate::integrate;
use gpcid_core::mle::mc_output_samples;
use gpcid_core::models::{camelback, CamelbackModel, ExperimentConfig, LoadLevel, CAMELBACK_DOMAIN};
use gpcid_core::transform::{std_normal_pdf, InputProbabilityModel};
use gpcid_core::{Error, Result};
use serde::Serialize;

/// Relative spread given to the Gaussian of a constant output.
pub const NEAR_POINT_SD: f64 = 1e-6;
/// Relative moment errors below this are reported as this value.
pub const ERROR_FLOOR: f64 = 1e-10;

#[derive(Debug, Clone, Serialize)]
pub struct DemoSettings {
    pub degree: usize,
    /// Quadrature points; `degree + 1` when absent.
    pub nodes: Option<usize>,
    pub max_moment: u32,
    pub reference_samples: usize,
    pub reference_seed: u64,
    pub emd_grid: usize,
    pub curve_points: usize,
    #[serde(skip)]
    pub cache_dir: Option<PathBuf>,
}

impl Default for DemoSettings {
    fn default() -> Self {
        Self {
            degree: 4,
            nodes: None,
            max_moment: 4,
            reference_samples: 200_000,
            reference_seed: 20_000,
            emd_grid: gpcid_core::density::DEFAULT_EMD_GRID,
            curve_points: 401,
            cache_dir: None,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CoefficientRow {
    pub degree: usize,
    pub index: usize,
    pub coefficient: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct MomentRow {
    pub degree: usize,
    pub order: usize,
    pub gpc: f64,
    pub oracle: f64,
    pub rel_error: f64,
}

/// Gaussian and MaxEnt fits to one moment vector, scored against the reference.
#[derive(Debug, Clone, Serialize)]
pub struct FitScores {
    pub moments: Vec<f64>,
    pub emd_gaussian: f64,
    pub emd_maxent: Option<f64>,
    pub maxent_error: Option<String>,
    /// Largest deviation of the fitted density's standardized moments from the targets.
    pub maxent_moment_residual: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct PropagateReport {
    pub settings: DemoSettings,
    pub evaluations: usize,
    pub oracle_moments: Vec<f64>,
    pub from_gpc: FitScores,
    pub from_mc: FitScores,
    pub reference_failures: usize,
    #[serde(skip)]
    pub coefficients: Vec<CoefficientRow>,
    #[serde(skip)]
    pub moment_table: Vec<MomentRow>,
    /// `(y, reference, gaussian, maxent)` from the gPC-moment fits.
    #[serde(skip)]
    pub curves: Vec<[f64; 4]>,
}

impl PropagateReport {
    /// `EMD(maxent) < EMD(gaussian)` for the gPC-moment fits.
    pub fn maxent_beats_gaussian(&self) -> Option<bool> {
        self.from_gpc.emd_maxent.map(|m| m < self.from_gpc.emd_gaussian)
    }

    pub fn coefficients_csv(&self) -> String {
        let mut s = String::from("degree,index,coefficient\n");
        for r in &self.coefficients {
            s.push_str(&format!("{},{},{:e}\n", r.degree, r.index, r.coefficient));
        }
        s
    }

    pub fn moments_csv(&self) -> String {
        let mut s = String::from("degree,order,gpc,oracle,rel_error\n");
        for r in &self.moment_table {
            s.push_str(&format!("{},{},{:e},{:e},{:e}\n", r.degree, r.order, r.gpc, r.oracle, r.rel_error));
        }
        s
    }

    pub fn curves_csv(&self) -> String {
        let mut s = String::from("y,reference,gaussian,maxent\n");
        for [y, r, g, m] in &self.curves {
            s.push_str(&format!("{y:e},{r:e},{g:e},{m:e}\n"));
        }
        s
    }
}

fn families() -> [PolynomialFamily; 1] {
    [PolynomialFamily::Hermite]
}

/// Raw moments `E[y(X)^m]`, `m = 1..=max_order`, of the camelback output for
/// `X ~ N(0,1)` by adaptive quadrature over the model's domain.
pub fn oracle_moments(max_order: u32) -> Result<Vec<f64>> {
    (1..=max_order as i32)
        .map(|m| {
            integrate(
                |x| camelback(x).map(|y| y.powi(m)).unwrap_or(0.0) * std_normal_pdf(x),
                -CAMELBACK_DOMAIN,
                CAMELBACK_DOMAIN,
                1e-14,
                1e-13,
            )
        })
        .collect()
}

/// Moment caches for orders `3..=max_order`, persisted under `cache_dir` when given.
pub fn moment_caches(
    families: &[PolynomialFamily],
    d: usize,
    max_order: u32,
    cache_dir: Option<&std::path::Path>,
) -> Result<CacheSet> {
    let options = CacheOptions::default();
    match cache_dir {
        Some(dir) => {
            std::fs::create_dir_all(dir)?;
            CacheSet::load_or_build(dir, families, d, max_order, &options)
        }
        None => CacheSet::build(families, d, max_order, &options),
    }
}

/// Degree-`d` Hermite expansion of the camelback map projected with `q` nodes,
/// and the model values at those nodes.
pub fn camelback_expansion(d: usize, q: usize) -> Result<(GpcExpansion, Vec<f64>)> {
    let basis = Arc::new(ChaosBasis::new(&families(), d)?);
    let projector = Projector::new(basis, TensorQuadrature::new(&families(), q)?)?;
    let values = projector
        .quadrature()
        .nodes()
        .iter()
        .map(|x| camelback(x[0]))
        .collect::<Result<Vec<_>>>()?;
    Ok((projector.project_values(&values)?, values))
}

fn standard_normal_input() -> (InputProbabilityModel, ExperimentConfig) {
    let alpha = InputProbabilityModel::unbounded(vec![0.0], vec![1.0]).expect("valid standard normal");
    let config = ExperimentConfig {
        id: 1,
        dt: 0.0,
        u0: 0.0,
        du: 0.0,
        omega_m_rpm: 1.0,
        load: LoadLevel::Low,
    };
    (alpha, config)
}

/// Gaussian fit, widened to a near-point density when the variance vanishes.
pub fn gaussian_or_point(moments: &MomentVector) -> Result<GaussianDensity> {
    match fit_gaussian(moments) {
        Err(Error::Degenerate(_)) => {
            let mean = moments.raw(1);
            GaussianDensity::new(mean, NEAR_POINT_SD * mean.abs().max(1.0))
        }
        other => other,
    }
}

pub fn fit_maxent_to(moments: &MomentVector, values: &[f64]) -> Result<MaxEntDensity> {
    let support = maxent_support(moments, values)?;
    fit_maxent(moments, support, None, &MaxEntOptions::default())
}

fn score(
    moments: &MomentVector,
    values: &[f64],
    reference: &HistogramDensity,
    grid: usize,
) -> Result<(FitScores, GaussianDensity, Option<MaxEntDensity>)> {
    let gaussian = gaussian_or_point(&moments.truncated(2)?)?;
    let emd_gaussian = emd_density(&gaussian, reference, grid)?;
    let (maxent, maxent_error) = match fit_maxent_to(moments, values) {
        Ok(d) => (Some(d), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let emd_maxent = maxent.as_ref().map(|d| emd_density(d, reference, grid)).transpose()?;
    let maxent_moment_residual = match &maxent {
        Some(d) => {
            let fitted = d.standardized_moments(moments.order())?;
            let target = moments.standardized(d.shift(), d.scale());
            Some(fitted.iter().zip(&target).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
        }
        None => None,
    };
    Ok((
        FitScores {
            moments: moments.as_slice().to_vec(),
            emd_gaussian,
            emd_maxent,
            maxent_error,
            maxent_moment_residual,
        },
        gaussian,
        maxent,
    ))
}

/// Runs the full demonstration for `settings`.
pub fn run(settings: &DemoSettings) -> Result<PropagateReport> {
    let m = settings.max_moment;
    if !(2..=5).contains(&m) {
        return Err(Error::InvalidArgument(format!("max moment {m} outside 2..=5")));
    }
    let oracle = oracle_moments(m)?;
    let mut coefficients = Vec::new();
    let mut moment_table = Vec::new();
    let mut target = None;
    for d in 0..=settings.degree {
        let q = settings.nodes.unwrap_or(d + 1);
        let (expansion, values) = camelback_expansion(d, q)?;
        let caches = moment_caches(&families(), d, m, settings.cache_dir.as_deref())?;
        let moments = expansion.moments(&caches, m)?;
        for (index, &c) in expansion.coefficients().iter().enumerate() {
            coefficients.push(CoefficientRow {
                degree: d,
                index,
                coefficient: c,
            });
        }
        for (k, &o) in oracle.iter().enumerate() {
            let gpc = moments.raw(k + 1);
            moment_table.push(MomentRow {
                degree: d,
                order: k + 1,
                gpc,
                oracle: o,
                rel_error: ((gpc - o).abs() / o.abs()).max(ERROR_FLOOR),
            });
        }
        if d == settings.degree {
            target = Some((moments, values, q));
        }
    }
    let (moments, values, q) = target.expect("degree loop is non-empty");

    let (alpha, config) = standard_normal_input();
    let sample = mc_output_samples(&CamelbackModel, &alpha, &config, settings.reference_samples, settings.reference_seed)?;
    let reference = HistogramDensity::from_samples(&sample.values)?;
    let n = sample.values.len() as f64;
    let mc_raw: Vec<f64> = (1..=m as i32)
        .map(|k| sample.values.iter().map(|y| y.powi(k)).sum::<f64>() / n)
        .collect();
    let mc_moments = MomentVector::new(mc_raw)?;

    let (from_gpc, gaussian, maxent) = score(&moments, &values, &reference, settings.emd_grid)?;
    let (from_mc, _, _) = score(&mc_moments, &sample.values, &reference, settings.emd_grid)?;

    let (lo, hi) = reference.effective_support();
    let points = settings.curve_points.max(2);
    let curves = (0..points)
        .map(|k| {
            let y = lo + (hi - lo) * k as f64 / (points - 1) as f64;
            let me = maxent.as_ref().map_or(f64::NAN, |d| d.pdf(y));
            [y, reference.pdf(y), gaussian.pdf(y), me]
        })
        .collect();

    Ok(PropagateReport {
        settings: settings.clone(),
        evaluations: q,
        oracle_moments: oracle,
        from_gpc,
        from_mc,
        reference_failures: sample.failures,
        coefficients,
        moment_table,
        curves,
    })
}
