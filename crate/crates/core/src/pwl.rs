//! Piecewise-linear source waveforms.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Continuous piecewise-linear function of time.
///
/// Evaluation holds the first value before the first breakpoint and the
/// last value after the last one, unless a `period` is set, in which
/// case the segment-covered span repeats forever after the first
/// breakpoint (the value is still held constant before it).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PwlSource {
    breakpoints: Vec<(f64, f64)>,
    period: Option<f64>,
}

impl PwlSource {
    pub fn new(breakpoints: Vec<(f64, f64)>) -> Result<Self> {
        Self::build(breakpoints, None)
    }

    pub fn periodic(breakpoints: Vec<(f64, f64)>, period: f64) -> Result<Self> {
        Self::build(breakpoints, Some(period))
    }

    fn build(breakpoints: Vec<(f64, f64)>, period: Option<f64>) -> Result<Self> {
        if breakpoints.is_empty() {
            return Err(Error::Config(
                "PWL source needs at least one breakpoint".into(),
            ));
        }
        for w in breakpoints.windows(2) {
            if w[1].0 <= w[0].0 {
                return Err(Error::Config(format!(
                    "PWL breakpoint times must strictly increase: {} then {}",
                    w[0].0, w[1].0
                )));
            }
        }
        if let Some(p) = period {
            let span = breakpoints.last().unwrap().0 - breakpoints[0].0;
            if p <= 0.0 {
                return Err(Error::Config(format!(
                    "PWL period must be positive, got {p}"
                )));
            }
            if span > p {
                return Err(Error::Config(format!(
                    "PWL breakpoints span {span}, longer than period {p}"
                )));
            }
            let first = breakpoints[0].1;
            let last = breakpoints.last().unwrap().1;
            if span == p && first != last {
                return Err(Error::Config(
                    "periodic PWL wrap is discontinuous (first and last values differ)".into(),
                ));
            }
        }
        Ok(Self {
            breakpoints,
            period,
        })
    }

    pub fn breakpoints(&self) -> &[(f64, f64)] {
        &self.breakpoints
    }

    pub fn period(&self) -> Option<f64> {
        self.period
    }

    /// Shifts every breakpoint later by `dt`; the pre-history hold
    /// extends accordingly.
    pub fn delayed(mut self, dt: f64) -> Self {
        for bp in &mut self.breakpoints {
            bp.0 += dt;
        }
        self
    }

    pub fn eval(&self, t: f64) -> f64 {
        let t0 = self.breakpoints[0].0;
        if t <= t0 {
            return self.breakpoints[0].1;
        }
        let t = match self.period {
            Some(p) => {
                let phase = (t - t0).rem_euclid(p);
                t0 + phase
            }
            None => t,
        };
        let last = self.breakpoints.last().unwrap();
        if t >= last.0 {
            return last.1;
        }
        // linear scan; sources have a handful of breakpoints
        for w in self.breakpoints.windows(2) {
            let (ta, va) = w[0];
            let (tb, vb) = w[1];
            if t <= tb {
                let frac = (t - ta) / (tb - ta);
                return va + frac * (vb - va);
            }
        }
        last.1
    }
}

/// Pulse train: ramp from `v_low` to `v_high` over `rise`, back down
/// over `fall`, then hold low for `delta_t`; fundamental period is
/// `rise + fall + delta_t`.
pub fn make_pulse_train(
    delta_t: f64,
    v_low: f64,
    v_high: f64,
    rise: f64,
    fall: f64,
) -> Result<PwlSource> {
    if rise <= 0.0 || fall <= 0.0 {
        return Err(Error::Config(format!(
            "pulse edges must have positive duration (rise {rise}, fall {fall})"
        )));
    }
    if delta_t < 0.0 {
        return Err(Error::Config(format!(
            "pulse delay must be >= 0, got {delta_t}"
        )));
    }
    let period = rise + fall + delta_t;
    PwlSource::periodic(
        vec![(0.0, v_low), (rise, v_high), (rise + fall, v_low)],
        period,
    )
}
