//! Replay of gain sets: trajectory files, per-channel step metrics and
//! side-by-side comparison.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::campaign::{json_bytes, write_atomic};
use crate::controller::{GainSet, Reference};
use crate::error::{invalid, Error, Result};
use crate::metrics::{step_metrics, StepMetrics};
use crate::objective::{
    evaluate, simulate_closed_loop, Channel, CostVector, ObjectiveWeights, ScenarioConfig, Trajectory,
    TRAJECTORY_HEADER,
};
use crate::vehicle::{ControlInput, State};

/// Step metrics for one tracked channel. `metrics` is `None` when the
/// channel starts at its setpoint (no step to characterize).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelReport {
    pub channel: Channel,
    pub initial: f64,
    pub setpoint: f64,
    pub metrics: Option<StepMetrics>,
    pub steady_state_error: f64,
}

pub fn channel_reports(traj: &Trajectory, reference: &Reference) -> Result<Vec<ChannelReport>> {
    if traj.is_empty() {
        return Err(invalid("empty trajectory"));
    }
    Channel::ALL
        .iter()
        .map(|&channel| {
            let values = traj.channel(channel);
            let initial = values[0];
            let setpoint = channel.setpoint(reference);
            let metrics = match step_metrics(&traj.times, &values, initial, setpoint) {
                Ok(m) => Some(m),
                Err(Error::DegenerateStep(_)) => None,
                Err(e) => return Err(e),
            };
            Ok(ChannelReport {
                channel,
                initial,
                setpoint,
                metrics,
                steady_state_error: (values[values.len() - 1] - setpoint).abs(),
            })
        })
        .collect()
}

/// Parses a trajectory written by [`Trajectory::write_csv`].
pub fn read_trajectory_csv(text: &str) -> Result<Trajectory> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h.trim() == TRAJECTORY_HEADER => {}
        _ => return Err(invalid(format!("line 1: expected header `{TRAJECTORY_HEADER}`"))),
    }
    let mut traj = Trajectory {
        dt: 0.0,
        times: Vec::new(),
        states: Vec::new(),
        inputs: Vec::new(),
    };
    for (i, line) in lines.enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let row: Vec<f64> = line
            .split(',')
            .map(|v| v.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| invalid(format!("line {}: {e}", i + 2)))?;
        if row.len() != 14 {
            return Err(invalid(format!("line {}: expected 14 columns, got {}", i + 2, row.len())));
        }
        traj.times.push(row[0]);
        traj.states.push(State {
            position: Vector3::new(row[1], row[2], row[3]),
            attitude: Vector3::new(row[4], row[5], row[6]),
            // velocities are not part of the file format
            velocity: Vector3::zeros(),
            body_rates: Vector3::new(row[7], row[8], row[9]),
        });
        traj.inputs.push(ControlInput::new(row[10], Vector3::new(row[11], row[12], row[13])));
    }
    if traj.times.len() >= 2 {
        traj.dt = traj.times[1] - traj.times[0];
    }
    Ok(traj)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationReport {
    pub gains: GainSet,
    pub cost: CostVector,
    pub channels: Vec<ChannelReport>,
}

/// Simulates `gains` and writes `trajectory.csv`, `cost.json` and `metrics.json` to `out`.
pub fn simulate_to_dir(
    gains: &GainSet,
    scenario: &ScenarioConfig,
    weights: &ObjectiveWeights,
    out: &Path,
) -> Result<SimulationReport> {
    scenario.validate()?;
    gains.validate()?;
    let traj = simulate_closed_loop(gains, scenario)?;
    let cost = evaluate(gains, scenario, weights);
    let channels = channel_reports(&traj, &scenario.reference)?;

    let mut csv = Vec::new();
    traj.write_csv(&mut csv)?;
    write_atomic(&out.join("trajectory.csv"), &csv)?;
    write_atomic(&out.join("cost.json"), &json_bytes(&cost)?)?;
    write_atomic(&out.join("metrics.json"), &json_bytes(&channels)?)?;
    Ok(SimulationReport {
        gains: *gains,
        cost,
        channels,
    })
}

/// One column of a comparison table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonColumn {
    pub label: String,
    pub gains: GainSet,
    pub cost: CostVector,
    /// Empty when the simulation diverged.
    pub channels: Vec<ChannelReport>,
}

pub fn compare(
    entries: &[(String, GainSet)],
    scenario: &ScenarioConfig,
    weights: &ObjectiveWeights,
) -> Result<Vec<ComparisonColumn>> {
    if entries.len() < 2 {
        return Err(invalid("compare needs at least two gain sets"));
    }
    entries
        .iter()
        .map(|(label, gains)| {
            let cost = evaluate(gains, scenario, weights);
            let channels = match simulate_closed_loop(gains, scenario) {
                Ok(traj) => channel_reports(&traj, &scenario.reference)?,
                Err(_) => Vec::new(),
            };
            Ok(ComparisonColumn {
                label: label.clone(),
                gains: *gains,
                cost,
                channels,
            })
        })
        .collect()
}

fn cell(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |x| format!("{x:.4}"))
}

/// Plain-text table, one column per gain set.
pub fn render_comparison(columns: &[ComparisonColumn]) -> String {
    let mut rows: Vec<(String, Vec<String>)> = Vec::new();
    for (i, name) in GainSet::NAMES.iter().enumerate() {
        rows.push((name.to_string(), columns.iter().map(|c| cell(Some(c.gains.to_array()[i]))).collect()));
    }
    for (i, ch) in Channel::ALL.iter().enumerate() {
        rows.push((
            format!("F_{}", ch.name()),
            columns.iter().map(|c| cell(Some(c.cost.components().as_array()[i]))).collect(),
        ));
    }
    rows.push(("F (aggregate)".into(), columns.iter().map(|c| cell(Some(c.cost.aggregate))).collect()));
    for ch in Channel::ALL {
        let pick = |f: fn(&StepMetrics) -> Option<f64>| -> Vec<String> {
            columns
                .iter()
                .map(|c| {
                    cell(c.channels
                        .iter()
                        .find(|r| r.channel == ch)
                        .and_then(|r| r.metrics.as_ref())
                        .and_then(f))
                })
                .collect()
        };
        let n = ch.name();
        rows.push((format!("{n} overshoot"), pick(|m| Some(m.overshoot))));
        rows.push((format!("{n} rise [s]"), pick(|m| m.rise_time)));
        rows.push((format!("{n} settling [s]"), pick(|m| m.settling_time)));
        rows.push((format!("{n} ss error"), pick(|m| Some(m.steady_state_error))));
    }

    let label_w = rows.iter().map(|r| r.0.len()).max().unwrap_or(0);
    let col_w: Vec<usize> = columns
        .iter()
        .enumerate()
        .map(|(i, c)| rows.iter().map(|r| r.1[i].len()).chain([c.label.len()]).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    let _ = write!(out, "{:label_w$}", "");
    for (c, w) in columns.iter().zip(&col_w) {
        let _ = write!(out, "  {:>w$}", c.label);
    }
    out.push('\n');
    for (label, cells) in rows {
        let _ = write!(out, "{label:label_w$}");
        for (v, w) in cells.iter().zip(&col_w) {
            let _ = write!(out, "  {v:>w$}");
        }
        out.push('\n');
    }
    out
}
