use serde::{Deserialize, Serialize};

use super::ExperimentConfig;
use crate::error::{Error, Result};

/// Shape of the feedforward current beyond the per-experiment `Δt`, `u₀`, `Δu`.
///
/// Level changes are linear ramps of length `ramp` that end at their
/// breakpoint, so the level just after a breakpoint is already the new one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FeedforwardProfile {
    /// Current of the initial fill pulse (A).
    pub u_max: f64,
    /// Time from the end of the fill pulse to the top of the second pulse (s).
    pub pulse_gap: f64,
    /// Duration of the flat top of the second pulse (s).
    pub second_hold: f64,
    /// Duration of the linear flank from `u₀ + Δu` back to `u₀` (s).
    pub flank: f64,
    /// Time from the end of the fill pulse to the final hold level (s).
    pub final_delay: f64,
    /// Final hold current (A).
    pub u_final: f64,
    pub ramp: f64,
}

impl Default for FeedforwardProfile {
    fn default() -> Self {
        Self {
            u_max: 1.0,
            pulse_gap: 0.25,
            second_hold: 0.1,
            flank: 0.25,
            final_delay: 1.5,
            u_final: 1.0,
            ramp: 1e-3,
        }
    }
}

struct Breakpoints {
    t1: f64,
    t2: f64,
    t3: f64,
    t4: f64,
    t5: f64,
}

impl FeedforwardProfile {
    pub fn validate(&self, config: &ExperimentConfig) -> Result<()> {
        let b = self.breakpoints(config);
        let r = self.ramp;
        let ok = r > 0.0
            && self.flank > 0.0
            && b.t1 >= r
            && b.t2 - r >= b.t1
            && b.t3 >= b.t2
            && b.t5 - r >= b.t4;
        if !ok {
            return Err(Error::ParameterDomain(format!(
                "feedforward breakpoints out of order for experiment {}",
                config.id
            )));
        }
        Ok(())
    }

    fn breakpoints(&self, config: &ExperimentConfig) -> Breakpoints {
        let t1 = config.dt;
        let t2 = t1 + self.pulse_gap;
        let t3 = t2 + self.second_hold;
        Breakpoints {
            t1,
            t2,
            t3,
            t4: t3 + self.flank,
            t5: t1 + self.final_delay,
        }
    }

    /// Times where `u̇` is discontinuous, ascending.
    pub fn breakpoint_times(&self, config: &ExperimentConfig) -> [f64; 8] {
        let b = self.breakpoints(config);
        let r = self.ramp;
        [b.t1 - r, b.t1, b.t2 - r, b.t2, b.t3, b.t4, b.t5 - r, b.t5]
    }

    /// `(u(t), u̇(t))`.
    pub fn signal(&self, t: f64, config: &ExperimentConfig) -> (f64, f64) {
        self.signal_on_piece(t, t, config)
    }

    /// Evaluates the piece of the profile that contains `piece_at` at time
    /// `t`, so an integrator step inside one piece never sees a neighbour.
    pub fn signal_on_piece(&self, t: f64, piece_at: f64, config: &ExperimentConfig) -> (f64, f64) {
        let b = self.breakpoints(config);
        let r = self.ramp;
        let (u0, u2) = (config.u0, config.u0 + config.du);
        let ramp = |from: f64, to: f64, end: f64| {
            let slope = (to - from) / r;
            (to - slope * (end - t), slope)
        };
        let s = piece_at;
        if s < b.t1 - r {
            (self.u_max, 0.0)
        } else if s <= b.t1 {
            ramp(self.u_max, u0, b.t1)
        } else if s < b.t2 - r {
            (u0, 0.0)
        } else if s <= b.t2 {
            ramp(u0, u2, b.t2)
        } else if s <= b.t3 {
            (u2, 0.0)
        } else if s <= b.t4 {
            let slope = -config.du / self.flank;
            (u2 + slope * (t - b.t3), slope)
        } else if s < b.t5 - r {
            (u0, 0.0)
        } else if s <= b.t5 {
            ramp(u0, self.u_final, b.t5)
        } else {
            (self.u_final, 0.0)
        }
    }

    pub fn current(&self, t: f64, config: &ExperimentConfig) -> f64 {
        self.signal(t, config).0
    }
}
