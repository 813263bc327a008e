use super::{Density, OUTSIDE_PENALTY_SLOPE};
use crate::error::{Error, Result};

/// Relative floor of the log-density inside the knot range.
const FLOOR_RATIO: f64 = 1e-6;

const MAX_BINS: usize = 10_000;

/// Histogram with Freedman–Diaconis bins, smoothed by monotone piecewise
/// cubic (Fritsch–Carlson) interpolation through the bin densities and
/// renormalized to unit mass.
#[derive(Debug, Clone)]
pub struct HistogramDensity {
    /// Knots: bin centres plus one zero-density knot beyond each end.
    x: Vec<f64>,
    y: Vec<f64>,
    slopes: Vec<f64>,
    sd: f64,
    floor: f64,
}

impl HistogramDensity {
    pub fn from_samples(samples: &[f64]) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::InvalidArgument("histogram needs at least two samples".into()));
        }
        if samples.iter().any(|s| !s.is_finite()) {
            return Err(Error::Numeric("non-finite sample".into()));
        }
        let mut sorted = samples.to_vec();
        sorted.sort_by(f64::total_cmp);
        let n = sorted.len() as f64;
        let (lo, hi) = (sorted[0], sorted[sorted.len() - 1]);
        if hi <= lo {
            return Err(Error::Degenerate("all samples are identical".into()));
        }
        let mean = sorted.iter().sum::<f64>() / n;
        let sd = (sorted.iter().map(|s| (s - mean) * (s - mean)).sum::<f64>() / (n - 1.0)).sqrt();
        let iqr = quantile(&sorted, 0.75) - quantile(&sorted, 0.25);
        let mut width = 2.0 * iqr / n.cbrt();
        if !(width > 0.0) {
            width = 3.49 * sd / n.cbrt();
        }
        let bins = (((hi - lo) / width).ceil() as usize).clamp(1, MAX_BINS);
        let width = (hi - lo) / bins as f64;
        let mut counts = vec![0usize; bins];
        for &s in &sorted {
            let k = (((s - lo) / width) as usize).min(bins - 1);
            counts[k] += 1;
        }
        let mut x = Vec::with_capacity(bins + 2);
        let mut y = Vec::with_capacity(bins + 2);
        x.push(lo - 0.5 * width);
        y.push(0.0);
        for (k, &c) in counts.iter().enumerate() {
            x.push(lo + (k as f64 + 0.5) * width);
            y.push(c as f64 / (n * width));
        }
        x.push(hi + 0.5 * width);
        y.push(0.0);
        let slopes = pchip_slopes(&x, &y);
        let mut density = Self {
            x,
            y,
            slopes,
            sd,
            floor: 0.0,
        };
        let mass = density.mass();
        for v in density.y.iter_mut() {
            *v /= mass;
        }
        for d in density.slopes.iter_mut() {
            *d /= mass;
        }
        let peak = density.y.iter().copied().fold(0.0, f64::max);
        density.floor = (FLOOR_RATIO * peak).ln();
        Ok(density)
    }

    /// Exact integral of the interpolant.
    fn mass(&self) -> f64 {
        (0..self.x.len() - 1)
            .map(|k| {
                let h = self.x[k + 1] - self.x[k];
                h * (self.y[k] + self.y[k + 1]) / 2.0 + h * h * (self.slopes[k] - self.slopes[k + 1]) / 12.0
            })
            .sum()
    }

    fn interpolate(&self, t: f64) -> f64 {
        let k = match self.x.partition_point(|&v| v <= t) {
            0 => 0,
            i => (i - 1).min(self.x.len() - 2),
        };
        let (x0, x1) = (self.x[k], self.x[k + 1]);
        let h = x1 - x0;
        let s = (t - x0) / h;
        let (h00, h10, h01, h11) = (
            (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s),
            s * (1.0 - s) * (1.0 - s),
            s * s * (3.0 - 2.0 * s),
            s * s * (s - 1.0),
        );
        (h00 * self.y[k] + h10 * h * self.slopes[k] + h01 * self.y[k + 1] + h11 * h * self.slopes[k + 1]).max(0.0)
    }

    /// Sample mean and variance of the interpolated density, by Simpson's rule
    /// on each knot interval.
    pub fn mean_sd(&self) -> (f64, f64) {
        let mut m = [0.0; 3];
        for k in 0..self.x.len() - 1 {
            let (a, b) = (self.x[k], self.x[k + 1]);
            for (t, w) in [(a, 1.0), (0.5 * (a + b), 4.0), (b, 1.0)] {
                let f = self.interpolate(t) * w * (b - a) / 6.0;
                m[0] += f;
                m[1] += f * t;
                m[2] += f * t * t;
            }
        }
        let mean = m[1] / m[0];
        (mean, (m[2] / m[0] - mean * mean).max(0.0).sqrt())
    }
}

impl Density for HistogramDensity {
    fn log_pdf(&self, y: f64) -> f64 {
        let (lo, hi) = (self.x[0], self.x[self.x.len() - 1]);
        if y < lo || y > hi || y.is_nan() {
            let dist = if y < lo { lo - y } else { y - hi };
            return self.floor - OUTSIDE_PENALTY_SLOPE * dist / self.sd;
        }
        self.interpolate(y).ln().max(self.floor)
    }

    fn pdf(&self, y: f64) -> f64 {
        let (lo, hi) = (self.x[0], self.x[self.x.len() - 1]);
        if y < lo || y > hi || y.is_nan() {
            return 0.0;
        }
        self.interpolate(y)
    }

    fn effective_support(&self) -> (f64, f64) {
        (self.x[0], self.x[self.x.len() - 1])
    }
}

fn quantile(sorted: &[f64], p: f64) -> f64 {
    let pos = p * (sorted.len() - 1) as f64;
    let k = pos.floor() as usize;
    let frac = pos - k as f64;
    if k + 1 < sorted.len() {
        sorted[k] + frac * (sorted[k + 1] - sorted[k])
    } else {
        sorted[k]
    }
}

/// Fritsch–Carlson derivative estimates for a shape-preserving cubic.
fn pchip_slopes(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
    let delta: Vec<f64> = (0..n - 1).map(|k| (y[k + 1] - y[k]) / h[k]).collect();
    let mut d = vec![0.0; n];
    for k in 1..n - 1 {
        if delta[k - 1] * delta[k] > 0.0 {
            let w1 = 2.0 * h[k] + h[k - 1];
            let w2 = h[k] + 2.0 * h[k - 1];
            d[k] = (w1 + w2) / (w1 / delta[k - 1] + w2 / delta[k]);
        }
    }
    d[0] = end_slope(h[0], h.get(1).copied().unwrap_or(h[0]), delta[0], delta.get(1).copied().unwrap_or(0.0));
    d[n - 1] = end_slope(
        h[n - 2],
        if n >= 3 { h[n - 3] } else { h[n - 2] },
        delta[n - 2],
        if n >= 3 { delta[n - 3] } else { 0.0 },
    );
    d
}

fn end_slope(h0: f64, h1: f64, d0: f64, d1: f64) -> f64 {
    let d = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if d * d0 <= 0.0 {
        0.0
    } else if d0 * d1 <= 0.0 && d.abs() > 3.0 * d0.abs() {
        3.0 * d0
    } else {
        d
    }
}
