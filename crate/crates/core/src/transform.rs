//! Map from standard normal variables to clipped physical parameters, and the
//! standard normal CDF and quantile.

use libm::erfc;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const U_CLAMP: f64 = 1e-15;

/// `Φ(z)`.
pub fn std_normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

/// `1 − Φ(z)` without cancellation in the upper tail.
pub fn std_normal_sf(z: f64) -> f64 {
    0.5 * erfc(z / std::f64::consts::SQRT_2)
}

pub fn std_normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// `Φ⁻¹(p)` for `p ∈ (0, 1)`.
pub fn std_normal_quantile(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::Domain(format!("normal quantile needs p in (0,1), got {p}")));
    }
    if p > 0.5 {
        return Ok(-lower_quantile(1.0 - p));
    }
    Ok(lower_quantile(p))
}

/// Quantile for `p ≤ 0.5`: Wichura's AS 241 followed by one Halley step.
fn lower_quantile(p: f64) -> f64 {
    if p == 0.5 {
        return 0.0;
    }
    let q = p - 0.5;
    let z = if q.abs() <= 0.425 {
        let r = 0.180625 - q * q;
        q * poly(&A, r) / poly(&B, r)
    } else {
        let mut r = (-p.ln()).sqrt();
        let val = if r <= 5.0 {
            r -= 1.6;
            poly(&C, r) / poly(&D, r)
        } else {
            r -= 5.0;
            poly(&E, r) / poly(&F, r)
        };
        -val
    };
    let err = std_normal_cdf(z) - p;
    let pdf = std_normal_pdf(z);
    if pdf > 0.0 {
        let u = err / pdf;
        z - u / (1.0 + 0.5 * z * u)
    } else {
        z
    }
}

fn poly(c: &[f64; 8], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &k| acc * x + k)
}

const A: [f64; 8] = [
    3.387_132_872_796_366_5,
    1.331_416_678_917_843_8e2,
    1.971_590_950_306_551_4e3,
    1.373_169_376_550_946e4,
    4.592_195_393_154_987e4,
    6.726_577_092_700_87e4,
    3.343_057_558_358_813e4,
    2.509_080_928_730_122_7e3,
];
const B: [f64; 8] = [
    1.0,
    4.231_333_070_160_091e1,
    6.871_870_074_920_579e2,
    5.394_196_021_424_751e3,
    2.121_379_430_158_659_7e4,
    3.930_789_580_009_271e4,
    2.872_908_573_572_194_3e4,
    5.226_495_278_852_545e3,
];
const C: [f64; 8] = [
    1.423_437_110_749_683_5,
    4.630_337_846_156_546,
    5.769_497_221_460_691,
    3.647_848_324_763_204_5,
    1.270_458_252_452_368_4,
    2.417_807_251_774_506e-1,
    2.272_384_498_926_918_4e-2,
    7.745_450_142_783_414e-4,
];
const D: [f64; 8] = [
    1.0,
    2.053_191_626_637_759,
    1.676_384_830_183_803_8,
    6.897_673_349_851e-1,
    1.481_039_764_274_800_8e-1,
    1.519_866_656_361_645_7e-2,
    5.475_938_084_995_345e-4,
    1.050_750_071_644_416_9e-9,
];
const E: [f64; 8] = [
    6.657_904_643_501_103,
    5.463_784_911_164_114,
    1.784_826_539_917_291_3,
    2.965_605_718_285_048_7e-1,
    2.653_218_952_657_612_4e-2,
    1.242_660_947_388_078_4e-3,
    2.711_555_568_743_487_6e-5,
    2.010_334_399_292_288_1e-7,
];
const F: [f64; 8] = [
    1.0,
    5.998_322_065_558_88e-1,
    1.369_298_809_227_358e-1,
    1.487_536_129_085_061_5e-2,
    7.868_691_311_456_133e-4,
    1.846_318_317_510_054_8e-5,
    1.421_511_758_316_446e-7,
    2.044_263_103_389_939_7e-15,
];

/// Independent normal inputs `x = μ + σ·clip(θ)` with per-component bounds.
/// Infinite bounds serialize as `null`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SerializedModel", into = "SerializedModel")]
pub struct InputProbabilityModel {
    mu: Vec<f64>,
    sigma: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl InputProbabilityModel {
    pub fn new(mu: Vec<f64>, sigma: Vec<f64>, lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        let n = mu.len();
        if n == 0 || sigma.len() != n || lower.len() != n || upper.len() != n {
            return Err(Error::InvalidArgument(
                "mu, sigma and bounds need one entry per input".into(),
            ));
        }
        for i in 0..n {
            if !mu[i].is_finite() {
                return Err(Error::ParameterDomain(format!("mu[{i}] = {} is not finite", mu[i])));
            }
            if !(sigma[i] > 0.0 && sigma[i].is_finite()) {
                return Err(Error::ParameterDomain(format!("sigma[{i}] = {} must be positive", sigma[i])));
            }
            if lower[i].is_nan() || upper[i].is_nan() || lower[i] >= upper[i] {
                return Err(Error::ParameterDomain(format!(
                    "bounds [{}, {}] of input {i} are empty",
                    lower[i], upper[i]
                )));
            }
        }
        Ok(Self {
            mu,
            sigma,
            lower,
            upper,
        })
    }

    /// Unbounded normal inputs.
    pub fn unbounded(mu: Vec<f64>, sigma: Vec<f64>) -> Result<Self> {
        let n = mu.len();
        Self::new(mu, sigma, vec![f64::NEG_INFINITY; n], vec![f64::INFINITY; n])
    }

    pub fn dimension(&self) -> usize {
        self.mu.len()
    }

    pub fn mu(&self) -> &[f64] {
        &self.mu
    }

    pub fn sigma(&self) -> &[f64] {
        &self.sigma
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn to_physical(&self, theta: &[f64]) -> Vec<f64> {
        theta
            .iter()
            .enumerate()
            .map(|(i, &t)| self.component(i, t))
            .collect()
    }

    fn component(&self, i: usize, theta: f64) -> f64 {
        let (mu, sigma, lo, hi) = (self.mu[i], self.sigma[i], self.lower[i], self.upper[i]);
        if lo == f64::NEG_INFINITY && hi == f64::INFINITY {
            return mu + sigma * theta;
        }
        let (tl, th) = ((lo - mu) / sigma, (hi - mu) / sigma);
        let (cl, ch) = (std_normal_cdf(tl), std_normal_cdf(th));
        let mass = ch - cl;
        // evaluate whichever of u and 1-u is smaller for tail accuracy
        let lower_u = cl + std_normal_cdf(theta) * mass;
        let tt = if lower_u <= 0.5 {
            lower_quantile(lower_u.clamp(U_CLAMP, 0.5))
        } else {
            let upper_u = std_normal_sf(th) + std_normal_sf(theta) * mass;
            -lower_quantile(upper_u.clamp(U_CLAMP, 0.5))
        };
        let mut x = mu + sigma * tt;
        if x <= lo {
            x = lo.next_up();
        }
        if x >= hi {
            x = hi.next_down();
        }
        x
    }
}

#[derive(Serialize, Deserialize)]
struct SerializedModel {
    mu: Vec<f64>,
    sigma: Vec<f64>,
    lower: Vec<Option<f64>>,
    upper: Vec<Option<f64>>,
}

impl TryFrom<SerializedModel> for InputProbabilityModel {
    type Error = Error;

    fn try_from(s: SerializedModel) -> Result<Self> {
        let fill = |v: Vec<Option<f64>>, inf: f64| v.into_iter().map(|b| b.unwrap_or(inf)).collect();
        Self::new(s.mu, s.sigma, fill(s.lower, f64::NEG_INFINITY), fill(s.upper, f64::INFINITY))
    }
}

impl From<InputProbabilityModel> for SerializedModel {
    fn from(m: InputProbabilityModel) -> Self {
        let finite = |v: Vec<f64>| v.into_iter().map(|b| b.is_finite().then_some(b)).collect();
        Self {
            mu: m.mu,
            sigma: m.sigma,
            lower: finite(m.lower),
            upper: finite(m.upper),
        }
    }
}
