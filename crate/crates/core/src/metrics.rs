//! Step-response metrics for a single channel.
//!
//! Conventions: rise time is the 10 % to 90 % interval of the step
//! magnitude, settling time uses a ±2 % band around the setpoint. Threshold
//! crossings are located by linear interpolation between samples. Times are
//! measured from the first sample.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

pub const RISE_LOW: f64 = 0.1;
pub const RISE_HIGH: f64 = 0.9;
pub const SETTLING_BAND: f64 = 0.02;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepMetrics {
    /// Largest excursion past the setpoint in the approach direction; 0 if never crossed.
    pub overshoot: f64,
    /// `None` when the 90 % level is never reached.
    pub rise_time: Option<f64>,
    /// `None` when the final sample lies outside the band.
    pub settling_time: Option<f64>,
    pub steady_state_error: f64,
}

/// Computes step metrics for `values` sampled at `times`, stepping from
/// `initial` toward `setpoint`.
pub fn step_metrics(times: &[f64], values: &[f64], initial: f64, setpoint: f64) -> Result<StepMetrics> {
    if initial == setpoint {
        return Err(Error::DegenerateStep(setpoint));
    }
    if times.is_empty() || times.len() != values.len() {
        return Err(invalid("step metrics need equally long, nonempty time and value series"));
    }
    if times.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(invalid("sample times must be strictly increasing"));
    }

    let step = setpoint - initial;
    let dir = step.signum();
    let magnitude = step.abs();
    // normalized progress: 0 at the initial value, 1 at the setpoint
    let progress: Vec<f64> = values.iter().map(|v| (v - initial) / step).collect();
    let t0 = times[0];

    let overshoot = values
        .iter()
        .map(|v| dir * (v - setpoint))
        .fold(0.0_f64, f64::max);

    let rise_time = match (first_crossing(times, &progress, RISE_LOW), first_crossing(times, &progress, RISE_HIGH)) {
        (Some(lo), Some(hi)) => Some(hi - lo),
        _ => None,
    };

    let band = SETTLING_BAND * magnitude;
    let outside = |v: f64| (v - setpoint).abs() > band;
    let settling_time = match values.iter().rposition(|v| outside(*v)) {
        None => Some(0.0),
        Some(last) if last + 1 == values.len() => None,
        Some(last) => {
            // interpolate the final entry into the band
            let (a, b) = (values[last], values[last + 1]);
            let edge = if a > setpoint { setpoint + band } else { setpoint - band };
            let frac = if a == b { 1.0 } else { ((edge - a) / (b - a)).clamp(0.0, 1.0) };
            Some(times[last] + frac * (times[last + 1] - times[last]) - t0)
        }
    };

    Ok(StepMetrics {
        overshoot,
        rise_time,
        settling_time,
        steady_state_error: (values[values.len() - 1] - setpoint).abs(),
    })
}

fn first_crossing(times: &[f64], progress: &[f64], level: f64) -> Option<f64> {
    if progress[0] >= level {
        return Some(times[0]);
    }
    progress.windows(2).zip(times.windows(2)).find_map(|(p, t)| {
        (p[1] >= level).then(|| t[0] + (level - p[0]) / (p[1] - p[0]) * (t[1] - t[0]))
    })
}
