//! Output densities fitted to moment vectors or samples, and Earth Mover's
//! Distance between densities and discrete signatures.

mod emd;
mod histogram;
mod maxent;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::gpc::MomentVector;

pub use emd::{emd_density, emd_discrete, Signature, DEFAULT_EMD_GRID};
pub use histogram::HistogramDensity;
pub use maxent::{fit_maxent, maxent_support, MaxEntDensity, MaxEntOptions};

/// Slope of the out-of-support log-density penalty per standard deviation.
pub const OUTSIDE_PENALTY_SLOPE: f64 = 50.0;

/// A normalized univariate density.
pub trait Density: Send + Sync {
    fn log_pdf(&self, y: f64) -> f64;

    fn pdf(&self, y: f64) -> f64 {
        self.log_pdf(y).exp()
    }

    /// Interval outside of which the density is negligible.
    fn effective_support(&self) -> (f64, f64);

    /// Closed-form distribution function, when one exists.
    fn cdf(&self, _y: f64) -> Option<f64> {
        None
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GaussianDensity {
    pub mean: f64,
    pub sd: f64,
}

impl GaussianDensity {
    pub fn new(mean: f64, sd: f64) -> Result<Self> {
        if !(sd > 0.0 && sd.is_finite() && mean.is_finite()) {
            return Err(Error::Degenerate(format!("normal density needs sd > 0, got {sd}")));
        }
        Ok(Self { mean, sd })
    }
}

impl Density for GaussianDensity {
    fn log_pdf(&self, y: f64) -> f64 {
        let z = (y - self.mean) / self.sd;
        -0.5 * z * z - self.sd.ln() - 0.5 * (2.0 * std::f64::consts::PI).ln()
    }

    fn effective_support(&self) -> (f64, f64) {
        (self.mean - 10.0 * self.sd, self.mean + 10.0 * self.sd)
    }

    fn cdf(&self, y: f64) -> Option<f64> {
        Some(crate::transform::std_normal_cdf((y - self.mean) / self.sd))
    }
}

/// Normal density with the first two moments.
pub fn fit_gaussian(moments: &MomentVector) -> Result<GaussianDensity> {
    if moments.order() < 2 {
        return Err(Error::InvalidArgument("a normal fit needs two moments".into()));
    }
    let mean = moments.raw(1);
    let var = moments.raw(2) - mean * mean;
    if !(var > 0.0) {
        return Err(Error::Degenerate(format!("variance {var} is not positive")));
    }
    GaussianDensity::new(mean, var.sqrt())
}

/// Any of the densities produced by this crate.
#[derive(Debug, Clone)]
pub enum FittedDensity {
    Gaussian(GaussianDensity),
    MaxEnt(MaxEntDensity),
    Histogram(HistogramDensity),
}

impl Density for FittedDensity {
    fn log_pdf(&self, y: f64) -> f64 {
        match self {
            FittedDensity::Gaussian(d) => d.log_pdf(y),
            FittedDensity::MaxEnt(d) => d.log_pdf(y),
            FittedDensity::Histogram(d) => d.log_pdf(y),
        }
    }

    fn pdf(&self, y: f64) -> f64 {
        match self {
            FittedDensity::Gaussian(d) => d.pdf(y),
            FittedDensity::MaxEnt(d) => d.pdf(y),
            FittedDensity::Histogram(d) => d.pdf(y),
        }
    }

    fn effective_support(&self) -> (f64, f64) {
        match self {
            FittedDensity::Gaussian(d) => d.effective_support(),
            FittedDensity::MaxEnt(d) => d.effective_support(),
            FittedDensity::Histogram(d) => d.effective_support(),
        }
    }

    fn cdf(&self, y: f64) -> Option<f64> {
        match self {
            FittedDensity::Gaussian(d) => d.cdf(y),
            FittedDensity::MaxEnt(d) => d.cdf(y),
            FittedDensity::Histogram(d) => d.cdf(y),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn gaussian_fits() {
        let g = fit_gaussian(&MomentVector::new(vec![2.0, 5.0]).unwrap()).unwrap();
        assert_eq!((g.mean, g.sd), (2.0, 1.0));
        assert!(matches!(
            fit_gaussian(&MomentVector::new(vec![2.0, 4.0]).unwrap()),
            Err(Error::Degenerate(_))
        ));
        let n = fit_gaussian(&MomentVector::new(vec![0.0, 1.0]).unwrap()).unwrap();
        assert_abs_diff_eq!(n.log_pdf(0.0), -0.918_938_533_204_672_7, epsilon = 1e-15);
    }
}
