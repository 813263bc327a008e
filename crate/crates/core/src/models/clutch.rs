//! Wet-clutch engagement: affine pressure/piston dynamics driven by the
//! feedforward current, blended Couette/contact torque, and the two-inertia
//! drivetrain until the input and output shafts synchronize.
//!
//! The default parameter set is synthetic. It produces qualitatively sensible
//! fill, slip and lock-up behaviour but does not describe any physical clutch.

use serde::{Deserialize, Serialize};

use super::{ExperimentConfig, FeedforwardProfile, ForwardModel, LoadLevel};
use crate::error::{Error, Result};

const RPM_TO_RAD: f64 = std::f64::consts::PI / 30.0;

/// Polynomial in the converter speed ratio `ν = ω₁/ω_m`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TorqueMap {
    pub coefficients: Vec<f64>,
}

impl TorqueMap {
    pub fn new(coefficients: Vec<f64>) -> Self {
        Self { coefficients }
    }

    pub fn eval(&self, nu: f64) -> f64 {
        self.coefficients.iter().rev().fold(0.0, |acc, &c| acc * nu + c)
    }

    fn derivative(&self, nu: f64) -> f64 {
        self.coefficients
            .iter()
            .enumerate()
            .skip(1)
            .rev()
            .fold(0.0, |acc, (k, &c)| acc * nu + k as f64 * c)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WetClutchParams {
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
    pub a4: f64,
    pub a5: f64,
    pub b1: f64,
    pub b2: f64,
    pub c1: f64,
    pub c2: f64,
    /// Affine map from the piston state to the position `z` (m).
    pub z_scale: f64,
    pub z_offset: f64,
    /// Plate contact position (m).
    pub z_p: f64,
    /// Fully engaged position (m).
    pub z_m: f64,
    /// Couette gain (N·m·s).
    pub gamma: f64,
    /// Contact torque per unit pressure (N·m/Pa).
    pub alpha_t: f64,
    pub ratio: f64,
    pub j1: f64,
    pub j2: f64,
    pub tb0_low: f64,
    pub tb0_high: f64,
    /// Viscous brake coefficient (N·m·s).
    pub b: f64,
    pub f_t: TorqueMap,
    pub f_c: TorqueMap,
    pub profile: FeedforwardProfile,
}

impl Default for WetClutchParams {
    fn default() -> Self {
        let a3 = 1.5e-8;
        Self {
            a1: -1600.0,
            a2: -56.0,
            a3,
            a4: 0.0,
            a5: -0.2,
            b1: 1.6e9,
            b2: 1.0e6,
            c1: -3.2e8,
            c2: -a3 * 1.5e5,
            z_scale: 1.0,
            z_offset: 0.0,
            z_p: 1.0e-3,
            z_m: 2.0e-3,
            gamma: 5.0e-5,
            alpha_t: 5.0e-4,
            ratio: 2.0,
            j1: 0.2,
            j2: 2.5,
            tb0_low: 30.0,
            tb0_high: 60.0,
            b: 0.2,
            f_t: TorqueMap::new(vec![2.0, -1.0, -1.0]),
            f_c: TorqueMap::new(vec![14.0, 2.0, 0.0]),
            profile: FeedforwardProfile::default(),
        }
    }
}

impl WetClutchParams {
    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.a1, self.a2, self.a3, self.a4, self.a5, self.b1, self.b2, self.c1, self.c2,
            self.z_scale, self.z_offset, self.gamma, self.alpha_t, self.tb0_low, self.tb0_high,
            self.b,
        ];
        if finite.iter().any(|v| !v.is_finite()) {
            return Err(Error::ParameterDomain("clutch parameters must be finite".into()));
        }
        if !(self.z_p > 0.0 && self.z_p < self.z_m) {
            return Err(Error::ParameterDomain("need 0 < z_p < z_M".into()));
        }
        if !(self.j1 > 0.0 && self.j2 > 0.0 && self.ratio > 0.0) {
            return Err(Error::ParameterDomain("inertias and gear ratio must be positive".into()));
        }
        if self.gamma < 0.0 || self.alpha_t < 0.0 {
            return Err(Error::ParameterDomain("torque gains must be non-negative".into()));
        }
        for k in 0..=20 {
            let nu = k as f64 / 10.0;
            if !(self.f_c.eval(nu) > 0.0) {
                return Err(Error::ParameterDomain(format!("f_c must be positive, fails at ratio {nu}")));
            }
        }
        self.free_running_ratio()?;
        Ok(())
    }

    fn brake_torque(&self, load: LoadLevel) -> f64 {
        match load {
            LoadLevel::Low => self.tb0_low,
            LoadLevel::High => self.tb0_high,
        }
    }

    /// Speed ratio where the converter output torque vanishes.
    pub fn free_running_ratio(&self) -> Result<f64> {
        let (mut lo, mut hi) = (0.0, 2.0);
        let (flo, fhi) = (self.f_t.eval(lo), self.f_t.eval(hi));
        if !(flo > 0.0 && fhi < 0.0) {
            return Err(Error::ParameterDomain(
                "f_t must change sign from positive to negative on [0, 2]".into(),
            ));
        }
        let mut nu = 1.0;
        for _ in 0..100 {
            let f = self.f_t.eval(nu);
            if f == 0.0 {
                break;
            }
            if f > 0.0 {
                lo = nu;
            } else {
                hi = nu;
            }
            let d = self.f_t.derivative(nu);
            let newton = nu - f / d;
            nu = if d != 0.0 && newton > lo && newton < hi {
                newton
            } else {
                0.5 * (lo + hi)
            };
            if hi - lo < 1e-15 {
                break;
            }
        }
        Ok(nu)
    }

    pub fn input_torque(&self, omega_m: f64, omega1: f64) -> f64 {
        let nu = omega1 / omega_m;
        let fc = self.f_c.eval(nu);
        omega_m * omega_m * self.f_t.eval(nu) / (fc * fc)
    }

    /// Piston position from the piston state.
    pub fn position(&self, z_tilde: f64) -> f64 {
        (self.z_scale * z_tilde + self.z_offset).clamp(0.0, self.z_m)
    }

    /// Transmitted clutch torque `T_c` for slip `ω₁ − Rω₂`, with the contact
    /// threshold scaled by `x₂`.
    pub fn clutch_torque(&self, z: f64, p_hc: f64, slip: f64, x2: f64) -> Result<f64> {
        let zp = x2 * self.z_p;
        let zm = self.z_m;
        if z < zp {
            let gap = zm - z;
            if gap <= 0.0 {
                return Err(Error::Singularity(format!(
                    "Couette gap closed at z = {z} before plate contact at {zp}"
                )));
            }
            return Ok(self.gamma * slip / gap);
        }
        let s = ((z - zp) / (zm - zp)).min(1.0);
        let delta = s * s * (3.0 - 2.0 * s);
        let p = s * p_hc.max(0.0);
        // (1 − δ)/(z_M − z) simplifies to (1 − s)(1 + 2s)/(z_M − z_p)
        let couette = (1.0 - s) * (1.0 + 2.0 * s) / (zm - zp) * self.gamma * slip;
        Ok(delta * self.alpha_t * p + couette)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimulatorOptions {
    pub step: f64,
    pub event_tolerance: f64,
    pub horizon: f64,
    /// Duration simulated after synchronization when recording a trace.
    pub sync_tail: f64,
}

impl Default for SimulatorOptions {
    fn default() -> Self {
        Self {
            step: 5e-4,
            event_tolerance: 1e-6,
            horizon: 5.0,
            sync_tail: 0.3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Asynchronous,
    Synchronous,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TracePoint {
    pub t: f64,
    pub p_hc: f64,
    pub dp_hc: f64,
    pub z_tilde: f64,
    pub z: f64,
    pub omega1: f64,
    pub omega2: f64,
    pub tc: f64,
    pub u: f64,
    pub phase: Phase,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationTrace {
    pub points: Vec<TracePoint>,
    pub shifting_time: f64,
}

impl SimulationTrace {
    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["t", "p_hc", "z", "omega1", "omega2", "Tc", "u"])?;
        for p in &self.points {
            out.write_record(
                [p.t, p.p_hc, p.z, p.omega1, p.omega2, p.tc, p.u]
                    .iter()
                    .map(|v| format!("{v:.9e}")),
            )?;
        }
        out.flush()?;
        Ok(())
    }
}

type State = [f64; 5];

struct Run<'a> {
    params: &'a WetClutchParams,
    config: &'a ExperimentConfig,
    omega_m: f64,
    brake: f64,
    c2: f64,
    x2: f64,
}

impl Run<'_> {
    fn torque(&self, y: &State) -> Result<f64> {
        let slip = y[3] - self.params.ratio * y[4];
        self.params
            .clutch_torque(self.params.position(y[2]), y[0], slip, self.x2)
    }

    fn derivative(&self, t: f64, piece: f64, y: &State) -> Result<State> {
        let p = self.params;
        let (u, du) = p.profile.signal_on_piece(t, piece, self.config);
        let tc = self.torque(y)?;
        let t1 = p.input_torque(self.omega_m, y[3]);
        let drive = p.ratio * tc;
        let w2dot = if y[4] <= 0.0 && drive <= self.brake {
            0.0
        } else {
            (drive - self.brake - p.b * y[4]) / p.j2
        };
        Ok([
            y[1],
            p.a1 * y[0] + p.a2 * y[1] + p.b1 * u + p.b2 * du + p.c1,
            p.a3 * y[0] + p.a4 * y[1] + p.a5 * y[2] + self.c2,
            (t1 - tc) / p.j1,
            w2dot,
        ])
    }

    /// Locked drivetrain: ω₁ = Rω₂ share one equivalent inertia.
    fn sync_derivative(&self, t: f64, piece: f64, y: &State) -> State {
        let p = self.params;
        let (u, du) = p.profile.signal_on_piece(t, piece, self.config);
        let w1dot = self.sync_acceleration(y);
        [
            y[1],
            p.a1 * y[0] + p.a2 * y[1] + p.b1 * u + p.b2 * du + p.c1,
            p.a3 * y[0] + p.a4 * y[1] + p.a5 * y[2] + self.c2,
            w1dot,
            w1dot / p.ratio,
        ]
    }

    fn sync_acceleration(&self, y: &State) -> f64 {
        let p = self.params;
        let t1 = p.input_torque(self.omega_m, y[3]);
        let tb = self.brake + p.b * y[4];
        (t1 - tb / p.ratio) / (p.j1 + p.j2 / (p.ratio * p.ratio))
    }

    fn rk4_step(&self, t: f64, y: &State, h: f64) -> Result<State> {
        let piece = t + 0.5 * h;
        let k1 = self.derivative(t, piece, y)?;
        let k2 = self.derivative(t + 0.5 * h, piece, &axpy(y, 0.5 * h, &k1))?;
        let k3 = self.derivative(t + 0.5 * h, piece, &axpy(y, 0.5 * h, &k2))?;
        let k4 = self.derivative(t + h, piece, &axpy(y, h, &k3))?;
        let mut out = combine(y, h, &k1, &k2, &k3, &k4);
        out[4] = out[4].max(0.0);
        if out.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric(format!("clutch state became non-finite at t = {t}")));
        }
        Ok(out)
    }

    fn sync_step(&self, t: f64, y: &State, h: f64) -> State {
        let piece = t + 0.5 * h;
        let k1 = self.sync_derivative(t, piece, y);
        let k2 = self.sync_derivative(t + 0.5 * h, piece, &axpy(y, 0.5 * h, &k1));
        let k3 = self.sync_derivative(t + 0.5 * h, piece, &axpy(y, 0.5 * h, &k2));
        let k4 = self.sync_derivative(t + h, piece, &axpy(y, h, &k3));
        combine(y, h, &k1, &k2, &k3, &k4)
    }

    fn slip(&self, y: &State) -> f64 {
        y[3] - self.params.ratio * y[4]
    }

    fn point(&self, t: f64, y: &State, tc: f64, phase: Phase) -> TracePoint {
        TracePoint {
            t,
            p_hc: y[0],
            dp_hc: y[1],
            z_tilde: y[2],
            z: self.params.position(y[2]),
            omega1: y[3],
            omega2: y[4],
            tc,
            u: self.params.profile.current(t, self.config),
            phase,
        }
    }
}

fn axpy(y: &State, a: f64, k: &State) -> State {
    std::array::from_fn(|i| y[i] + a * k[i])
}

fn combine(y: &State, h: f64, k1: &State, k2: &State, k3: &State, k4: &State) -> State {
    std::array::from_fn(|i| y[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
}

/// Engagement simulator; `x = (x₁, x₂)` scale `c₂` and `z_p`.
#[derive(Debug, Clone, Default)]
pub struct ClutchModel {
    pub params: WetClutchParams,
    pub options: SimulatorOptions,
}

impl ClutchModel {
    pub fn new(params: WetClutchParams, options: SimulatorOptions) -> Result<Self> {
        params.validate()?;
        if !(options.step > 0.0 && options.event_tolerance > 0.0 && options.horizon > 0.0) {
            return Err(Error::ParameterDomain("simulator step, tolerance and horizon must be positive".into()));
        }
        Ok(Self { params, options })
    }

    pub fn shifting_time(&self, config: &ExperimentConfig, x: &[f64]) -> Result<f64> {
        self.simulate(config, x, false).map(|tr| tr.shifting_time)
    }

    pub fn trace(&self, config: &ExperimentConfig, x: &[f64]) -> Result<SimulationTrace> {
        self.simulate(config, x, true)
    }

    fn simulate(&self, config: &ExperimentConfig, x: &[f64], record: bool) -> Result<SimulationTrace> {
        config.validate()?;
        self.params.profile.validate(config)?;
        if x.len() != 2 {
            return Err(Error::InvalidArgument(format!("clutch model takes 2 inputs, got {}", x.len())));
        }
        let p = &self.params;
        let omega_m = config.omega_m_rpm * RPM_TO_RAD;
        let run = Run {
            params: p,
            config,
            omega_m,
            brake: p.brake_torque(config.load),
            c2: x[0] * p.c2,
            x2: x[1],
        };
        let h = self.options.step;
        let mut y: State = [0.0, 0.0, 0.0, p.free_running_ratio()? * omega_m, 0.0];
        let mut t = 0.0;
        let mut points = Vec::new();
        let steps = (self.options.horizon / h).ceil() as usize;
        let breakpoints = p.profile.breakpoint_times(config);
        let mut crossing = None;
        'outer: for k in 0..steps {
            if record {
                points.push(run.point(t, &y, run.torque(&y)?, Phase::Asynchronous));
            }
            let end = (k + 1) as f64 * h;
            // sub-steps never straddle a discontinuity of the forcing
            let mut cuts: Vec<f64> = breakpoints
                .iter()
                .copied()
                .filter(|&b| b > t + 1e-12 && b < end - 1e-12)
                .collect();
            cuts.push(end);
            let mut ts = t;
            for cut in cuts {
                let next = run.rk4_step(ts, &y, cut - ts)?;
                if run.slip(&next) <= 0.0 {
                    crossing = Some(self.locate(&run, ts, &y, cut - ts)?);
                    t = ts;
                    break 'outer;
                }
                y = next;
                ts = cut;
            }
            t = end;
        }
        let (tau, y_sync) = crossing.ok_or(Error::Timeout {
            horizon: self.options.horizon,
        })?;
        let shifting_time = t + tau;
        if record {
            let mut ys = y_sync;
            ys[4] = ys[3] / p.ratio;
            let mut ts = shifting_time;
            let tail = (self.options.sync_tail / h).ceil() as usize;
            for _ in 0..=tail {
                let tc = p.input_torque(omega_m, ys[3]) - p.j1 * run.sync_acceleration(&ys);
                points.push(run.point(ts, &ys, tc, Phase::Synchronous));
                ys = run.sync_step(ts, &ys, h);
                ts += h;
            }
        }
        Ok(SimulationTrace {
            points,
            shifting_time,
        })
    }

    /// Bisection on the sub-step length for the zero of the slip.
    fn locate(&self, run: &Run, t: f64, y: &State, h: f64) -> Result<(f64, State)> {
        let (mut lo, mut hi) = (0.0, h);
        while hi - lo > self.options.event_tolerance {
            let mid = 0.5 * (lo + hi);
            if run.slip(&run.rk4_step(t, y, mid)?) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let tau = 0.5 * (lo + hi);
        Ok((tau, run.rk4_step(t, y, tau)?))
    }
}

impl ForwardModel for ClutchModel {
    fn input_dimension(&self) -> usize {
        2
    }

    fn evaluate(&self, config: &ExperimentConfig, x: &[f64]) -> Result<f64> {
        self.shifting_time(config, x)
    }
}
