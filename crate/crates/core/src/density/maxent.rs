use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::{Density, OUTSIDE_PENALTY_SLOPE};
use crate::basis::{gauss_quadrature, PolynomialFamily, QuadratureRule};
use crate::error::{Error, Result};
use crate::gpc::MomentVector;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MaxEntOptions {
    pub max_iterations: usize,
    /// Newton iterations stop once the dual gradient is this small.
    pub tolerance: f64,
    /// Largest standardized moment residual accepted as a successful fit.
    pub accept: f64,
    pub initial_panels: usize,
    pub max_panels: usize,
}

impl Default for MaxEntOptions {
    fn default() -> Self {
        Self {
            max_iterations: 200,
            tolerance: 1e-11,
            accept: 1e-6,
            initial_panels: 32,
            max_panels: 4096,
        }
    }
}

/// `p(y) = exp(−Σ_{k=0}^M λ_k z^k) / scale` on a finite support, where
/// `z = (y − shift) / scale`.
#[derive(Debug, Clone, Serialize)]
pub struct MaxEntDensity {
    support: (f64, f64),
    shift: f64,
    scale: f64,
    /// `λ₀..λ_M` in the standardized variable.
    lambda: Vec<f64>,
    panels: usize,
    iterations: usize,
    gradient_norm: f64,
    floor: f64,
}

impl MaxEntDensity {
    pub fn support(&self) -> (f64, f64) {
        self.support
    }

    pub fn shift(&self) -> f64 {
        self.shift
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn lambda(&self) -> &[f64] {
        &self.lambda
    }

    pub fn panels(&self) -> usize {
        self.panels
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    /// Euclidean norm of the dual gradient at the returned multipliers.
    pub fn gradient_norm(&self) -> f64 {
        self.gradient_norm
    }

    /// `E[z^k]` for `k = 1..=order` under the fitted density.
    pub fn standardized_moments(&self, order: usize) -> Result<Vec<f64>> {
        let grid = Grid::new(self.z_support(), self.panels)?;
        let eval = evaluate(&self.lambda[1..], &grid, order);
        Ok(eval.moments[1..=order].to_vec())
    }

    /// `∫ p` over the support.
    pub fn total_mass(&self) -> Result<f64> {
        let grid = Grid::new(self.z_support(), self.panels)?;
        Ok(grid
            .z
            .iter()
            .zip(&grid.w)
            .map(|(&z, &w)| w * self.standardized_log_pdf(z).exp())
            .sum())
    }

    fn z_support(&self) -> (f64, f64) {
        (
            (self.support.0 - self.shift) / self.scale,
            (self.support.1 - self.shift) / self.scale,
        )
    }

    fn standardized_log_pdf(&self, z: f64) -> f64 {
        -self.lambda.iter().rev().fold(0.0, |acc, &l| acc * z + l)
    }
}

impl Density for MaxEntDensity {
    fn log_pdf(&self, y: f64) -> f64 {
        let (lo, hi) = self.support;
        if y < lo || y > hi || y.is_nan() {
            let dist = if y < lo { lo - y } else { y - hi };
            return self.floor - OUTSIDE_PENALTY_SLOPE * dist / self.scale;
        }
        self.standardized_log_pdf((y - self.shift) / self.scale) - self.scale.ln()
    }

    fn pdf(&self, y: f64) -> f64 {
        let (lo, hi) = self.support;
        if y < lo || y > hi || y.is_nan() {
            return 0.0;
        }
        self.log_pdf(y).exp()
    }

    fn effective_support(&self) -> (f64, f64) {
        self.support
    }
}

/// `[μ − 10σ, μ + 10σ]` intersected with the range of `values` widened by
/// 20% of its width on each side.
pub fn maxent_support(moments: &MomentVector, values: &[f64]) -> Result<(f64, f64)> {
    if moments.order() < 2 {
        return Err(Error::InvalidArgument("support needs mean and variance".into()));
    }
    let mean = moments.raw(1);
    let var = moments.raw(2) - mean * mean;
    if !(var > 0.0) {
        return Err(Error::Degenerate(format!("variance {var} is not positive")));
    }
    let sd = var.sqrt();
    let (mut lo, mut hi) = (mean - 10.0 * sd, mean + 10.0 * sd);
    let vmin = values.iter().copied().fold(f64::INFINITY, f64::min);
    let vmax = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if vmax > vmin {
        let pad = 0.2 * (vmax - vmin);
        lo = lo.max(vmin - pad);
        hi = hi.min(vmax + pad);
    }
    if !(hi > lo) {
        return Err(Error::Degenerate("empty density support".into()));
    }
    Ok((lo, hi))
}

struct Grid {
    z: Vec<f64>,
    w: Vec<f64>,
}

fn panel_rule() -> &'static QuadratureRule {
    static RULE: std::sync::OnceLock<QuadratureRule> = std::sync::OnceLock::new();
    RULE.get_or_init(|| gauss_quadrature(PolynomialFamily::Legendre, 16).expect("Gauss-Legendre rule"))
}

impl Grid {
    /// Composite 16-point Gauss–Legendre rule with `panels` equal panels.
    fn new((a, b): (f64, f64), panels: usize) -> Result<Self> {
        if !(a.is_finite() && b.is_finite() && b > a) {
            return Err(Error::InvalidArgument(format!("invalid support [{a}, {b}]")));
        }
        let rule = panel_rule();
        let width = (b - a) / panels as f64;
        let mut z = Vec::with_capacity(panels * rule.order());
        let mut w = Vec::with_capacity(panels * rule.order());
        for k in 0..panels {
            let c = a + (k as f64 + 0.5) * width;
            for (&x, &wx) in rule.nodes.iter().zip(&rule.weights) {
                // Legendre weights are probability weights on [-1, 1]
                z.push(c + 0.5 * width * x);
                w.push(wx * width);
            }
        }
        Ok(Self { z, w })
    }
}

struct Evaluation {
    log_z: f64,
    /// `E[z^k]` for `k = 0..=order`.
    moments: Vec<f64>,
}

fn evaluate(lambda: &[f64], grid: &Grid, order: usize) -> Evaluation {
    let poly: Vec<f64> = grid
        .z
        .iter()
        .map(|&z| lambda.iter().rev().fold(0.0, |acc, &l| acc * z + l) * z)
        .collect();
    let c = poly.iter().copied().fold(f64::INFINITY, f64::min);
    let mut moments = vec![0.0; order + 1];
    for ((&z, &w), &p) in grid.z.iter().zip(&grid.w).zip(&poly) {
        let e = w * (c - p).exp();
        let mut zk = 1.0;
        for m in moments.iter_mut() {
            *m += e * zk;
            zk *= z;
        }
    }
    let mass = moments[0];
    for m in moments.iter_mut() {
        *m /= mass;
    }
    Evaluation {
        log_z: mass.ln() - c,
        moments,
    }
}

fn dual(lambda: &[f64], target: &[f64], grid: &Grid) -> (f64, Evaluation) {
    let eval = evaluate(lambda, grid, 2 * target.len());
    let gamma = eval.log_z + lambda.iter().zip(target).map(|(l, n)| l * n).sum::<f64>();
    (gamma, eval)
}

/// Maximum-entropy density on `support` matching the raw moments, fitted by
/// damped Newton iteration on the convex dual in the standardized variable.
pub fn fit_maxent(
    moments: &MomentVector,
    support: (f64, f64),
    init: Option<&[f64]>,
    options: &MaxEntOptions,
) -> Result<MaxEntDensity> {
    let order = moments.order();
    let (lo, hi) = support;
    if !(lo.is_finite() && hi.is_finite() && hi > lo) {
        return Err(Error::InvalidArgument(format!("maxent support [{lo}, {hi}] must be finite")));
    }
    let (shift, scale) = if order >= 2 {
        let mean = moments.raw(1);
        let var = moments.raw(2) - mean * mean;
        if !(var > 0.0) {
            return Err(Error::Degenerate(format!("variance {var} is not positive")));
        }
        (mean, var.sqrt())
    } else {
        (0.5 * (lo + hi), 0.5 * (hi - lo))
    };
    let target = moments.standardized(shift, scale);
    let zs = ((lo - shift) / scale, (hi - shift) / scale);
    let mut lambda: Vec<f64> = match init {
        Some(l) if l.len() == order => l.to_vec(),
        Some(l) => {
            return Err(Error::InvalidArgument(format!(
                "initial multipliers have length {}, expected {order}",
                l.len()
            )))
        }
        None => {
            let mut l = vec![0.0; order];
            if order >= 2 {
                l[1] = 0.5;
            }
            l
        }
    };

    let mut panels = options.initial_panels.max(1);
    let mut grid = Grid::new(zs, panels)?;
    let mut iterations = 0;
    let mut stuck = false;
    let mut flat = 0;
    let (mut gamma, mut eval) = dual(&lambda, &target, &grid);
    loop {
        let grad: Vec<f64> = (0..order).map(|k| target[k] - eval.moments[k + 1]).collect();
        let gnorm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
        let exhausted = iterations >= options.max_iterations;
        if gnorm < options.tolerance || stuck || exhausted {
            // refine the panels until the moment integrals are resolved
            let fine = Grid::new(zs, 2 * panels)?;
            let check = evaluate(&lambda, &fine, order);
            let drift = (1..=order)
                .map(|k| (check.moments[k] - eval.moments[k]).abs())
                .fold(0.0, f64::max);
            if drift > 1e-10 && 2 * panels <= options.max_panels && !exhausted {
                panels *= 2;
                grid = fine;
                stuck = false;
                flat = 0;
                (gamma, eval) = dual(&lambda, &target, &grid);
                continue;
            }
            let max_residual = grad.iter().fold(0.0f64, |m, g| m.max(g.abs()));
            if max_residual > options.accept || !gnorm.is_finite() {
                return Err(Error::FitFailure {
                    iterations,
                    max_residual,
                    residuals: grad,
                });
            }
            return Ok(finish(support, shift, scale, &lambda, eval.log_z, panels, iterations, gnorm, &grid));
        }
        iterations += 1;
        let hess = DMatrix::from_fn(order, order, |j, k| {
            eval.moments[j + k + 2] - eval.moments[j + 1] * eval.moments[k + 1]
        });
        let g = DVector::from_vec(grad.clone());
        let step = match hess.clone().cholesky() {
            Some(ch) => -ch.solve(&g),
            None => match hess.lu().solve(&g) {
                Some(s) => -s,
                None => -g.clone(),
            },
        };
        let slope = g.dot(&step);
        let direction = if slope < 0.0 { step } else { -g.clone() };
        let slope = g.dot(&direction);
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..40 {
            let trial: Vec<f64> = lambda.iter().zip(direction.iter()).map(|(l, d)| l + t * d).collect();
            let (gt, et) = dual(&trial, &target, &grid);
            if gt.is_finite() && gt <= gamma + 1e-4 * t * slope {
                flat = if gt < gamma { 0 } else { flat + 1 };
                lambda = trial;
                gamma = gt;
                eval = et;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        // no further decrease is representable; judge the current point
        stuck = !accepted || flat >= 3;
    }
}

#[allow(clippy::too_many_arguments)]
fn finish(
    support: (f64, f64),
    shift: f64,
    scale: f64,
    lambda: &[f64],
    log_z: f64,
    panels: usize,
    iterations: usize,
    gradient_norm: f64,
    grid: &Grid,
) -> MaxEntDensity {
    let mut full = Vec::with_capacity(lambda.len() + 1);
    full.push(log_z);
    full.extend_from_slice(lambda);
    let mut density = MaxEntDensity {
        support,
        shift,
        scale,
        lambda: full,
        panels,
        iterations,
        gradient_norm,
        floor: 0.0,
    };
    let zs = density.z_support();
    let min_inside = grid
        .z
        .iter()
        .copied()
        .chain([zs.0, zs.1])
        .map(|z| density.standardized_log_pdf(z))
        .fold(f64::INFINITY, f64::min)
        - scale.ln();
    density.floor = min_inside - 1.0;
    density
}
