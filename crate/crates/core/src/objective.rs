//! Closed-loop simulation and the weighted integral-of-absolute-error cost.
//!
//! Each tracked channel (phi, theta, psi, z) contributes the trapezoidal
//! integral of `|x(t) - x_d|` over the whole horizon. The scalar objective
//! handed to the optimizers is the weighted sum of the four integrals.

use std::io::Write;
use std::path::Path;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::controller::{pd_control, GainSet, Reference};
use crate::error::{invalid, Error, Result};
use crate::vehicle::{rk4_step, ControlInput, DroneParams, State};

pub const DEFAULT_PENALTY: f64 = 1e6;

/// Everything needed to run one closed-loop simulation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub initial_state: State,
    pub reference: Reference,
    /// Horizon, s.
    pub duration: f64,
    /// Integrator and controller step, s.
    pub dt: f64,
    pub drone: DroneParams,
    /// Optional upper limit on commanded thrust, N.
    pub thrust_ceiling: Option<f64>,
    /// Cost assigned to every channel of a diverged simulation.
    pub divergence_penalty: f64,
}

impl Default for ScenarioConfig {
    /// Start 1 m below the setpoint with all three Euler angles at -0.7 rad
    /// and regulate to level hover at z = 0.
    fn default() -> Self {
        Self {
            initial_state: State::at_rest(Vector3::new(0.0, 0.0, -1.0), Vector3::new(-0.7, -0.7, -0.7)),
            reference: Reference::default(),
            duration: 10.0,
            dt: 0.01,
            drone: DroneParams::default(),
            thrust_ceiling: None,
            divergence_penalty: DEFAULT_PENALTY,
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.duration.is_finite() && self.duration > 0.0) {
            return Err(invalid(format!("scenario.duration must be > 0, got {}", self.duration)));
        }
        if !(self.dt > 0.0 && self.dt <= self.duration) {
            return Err(invalid(format!("scenario.dt must lie in (0, duration], got {}", self.dt)));
        }
        if !self.initial_state.is_finite() {
            return Err(invalid("scenario.initial_state must be finite"));
        }
        let att = self.initial_state.attitude;
        if (att.x.cos() * att.y.cos()).abs() <= crate::vehicle::SINGULARITY_EPS {
            return Err(invalid("scenario.initial_state attitude is singular"));
        }
        if let Some(c) = self.thrust_ceiling {
            if !(c > 0.0) {
                return Err(invalid(format!("scenario.thrust_ceiling must be > 0, got {c}")));
            }
        }
        if !(self.divergence_penalty >= 0.0) {
            return Err(invalid("scenario.divergence_penalty must be >= 0"));
        }
        self.reference.validate()?;
        self.drone.validate()
    }

    pub fn sample_count(&self) -> usize {
        // guard against 10.0 / 0.01 landing a hair under 1000
        (self.duration / self.dt * (1.0 + 1e-12)).floor() as usize + 1
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let sc: Self = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        sc.validate()?;
        Ok(sc)
    }
}

/// Uniformly sampled closed-loop response.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub dt: f64,
    pub times: Vec<f64>,
    pub states: Vec<State>,
    /// `inputs[k]` is the command computed from `states[k]` and held over the next step.
    pub inputs: Vec<ControlInput>,
}

pub const TRAJECTORY_HEADER: &str = "t,x,y,z,phi,theta,psi,p,q,r,T,tau_phi,tau_theta,tau_psi";

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Samples of a tracked channel.
    pub fn channel(&self, channel: Channel) -> Vec<f64> {
        self.states.iter().map(|s| channel.value(s)).collect()
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "{TRAJECTORY_HEADER}")?;
        for ((t, s), u) in self.times.iter().zip(&self.states).zip(&self.inputs) {
            let (pos, att, nu, tau) = (s.position, s.attitude, s.body_rates, u.torque);
            writeln!(
                out,
                "{t},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                pos.x, pos.y, pos.z, att.x, att.y, att.z, nu.x, nu.y, nu.z, u.thrust, tau.x, tau.y, tau.z
            )?;
        }
        Ok(())
    }
}

/// The four tracked channels, in cost-vector order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Channel {
    Phi,
    Theta,
    Psi,
    Z,
}

impl Channel {
    pub const ALL: [Channel; 4] = [Channel::Phi, Channel::Theta, Channel::Psi, Channel::Z];

    pub fn value(self, s: &State) -> f64 {
        match self {
            Channel::Phi => s.attitude.x,
            Channel::Theta => s.attitude.y,
            Channel::Psi => s.attitude.z,
            Channel::Z => s.position.z,
        }
    }

    pub fn setpoint(self, r: &Reference) -> f64 {
        match self {
            Channel::Phi => r.phi,
            Channel::Theta => r.theta,
            Channel::Psi => r.psi,
            Channel::Z => r.z,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Channel::Phi => "phi",
            Channel::Theta => "theta",
            Channel::Psi => "psi",
            Channel::Z => "z",
        }
    }
}

/// Weights for the (phi, theta, psi, z) error integrals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectiveWeights {
    pub phi: f64,
    pub theta: f64,
    pub psi: f64,
    pub z: f64,
}

impl Default for ObjectiveWeights {
    fn default() -> Self {
        Self::uniform(1.0)
    }
}

impl ObjectiveWeights {
    pub fn uniform(w: f64) -> Self {
        Self { phi: w, theta: w, psi: w, z: w }
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.phi, self.theta, self.psi, self.z]
    }

    pub fn validate(&self) -> Result<()> {
        let w = self.as_array();
        if w.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(invalid("objective weights must be finite and >= 0"));
        }
        if w.iter().all(|v| *v == 0.0) {
            return Err(invalid("objective weights must not all be zero"));
        }
        Ok(())
    }
}

/// Per-channel error integrals `F_1..F_4`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostComponents {
    pub phi: f64,
    pub theta: f64,
    pub psi: f64,
    pub z: f64,
}

impl CostComponents {
    pub fn from_array(v: [f64; 4]) -> Self {
        Self { phi: v[0], theta: v[1], psi: v[2], z: v[3] }
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.phi, self.theta, self.psi, self.z]
    }

    pub fn penalty(value: f64) -> Self {
        Self::from_array([value; 4])
    }
}

/// Error integrals plus their weighted aggregate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostVector {
    pub phi: f64,
    pub theta: f64,
    pub psi: f64,
    pub z: f64,
    pub aggregate: f64,
    /// True when the simulation diverged and the penalty was substituted.
    pub diverged: bool,
}

impl CostVector {
    pub fn new(components: CostComponents, weights: &ObjectiveWeights, diverged: bool) -> Self {
        Self {
            phi: components.phi,
            theta: components.theta,
            psi: components.psi,
            z: components.z,
            aggregate: aggregate_cost(&components, weights),
            diverged,
        }
    }

    pub fn components(&self) -> CostComponents {
        CostComponents::from_array([self.phi, self.theta, self.psi, self.z])
    }
}

/// Runs the PD loop from the scenario's initial state for the full horizon.
pub fn simulate_closed_loop(gains: &GainSet, scenario: &ScenarioConfig) -> Result<Trajectory> {
    let n = scenario.sample_count();
    let dt = scenario.dt;
    let mut traj = Trajectory {
        dt,
        times: Vec::with_capacity(n),
        states: Vec::with_capacity(n),
        inputs: Vec::with_capacity(n),
    };
    let mut state = scenario.initial_state;
    for k in 0..n {
        let t = k as f64 * dt;
        let diverged = |_| Error::Diverged { time: t };
        let mut input = pd_control(&state, &scenario.reference, gains, &scenario.drone).map_err(diverged)?;
        if let Some(ceiling) = scenario.thrust_ceiling {
            input.thrust = input.thrust.min(ceiling);
        }
        traj.times.push(t);
        traj.states.push(state);
        traj.inputs.push(input);
        if k + 1 < n {
            state = rk4_step(&state, &input, &scenario.drone, dt).map_err(diverged)?;
        }
    }
    Ok(traj)
}

/// Trapezoidal integral of `|x - x_d|` for each tracked channel.
pub fn cost_components(traj: &Trajectory, reference: &Reference) -> CostComponents {
    let mut out = [0.0; 4];
    if traj.len() < 2 {
        return CostComponents::from_array(out);
    }
    for (slot, channel) in out.iter_mut().zip(Channel::ALL) {
        let target = channel.setpoint(reference);
        let err: Vec<f64> = traj.states.iter().map(|s| (channel.value(s) - target).abs()).collect();
        *slot = trapezoid(&err, traj.dt);
    }
    CostComponents::from_array(out)
}

pub(crate) fn trapezoid(samples: &[f64], dt: f64) -> f64 {
    match samples {
        [] | [_] => 0.0,
        [first, inner @ .., last] => dt * (0.5 * (first + last) + inner.iter().sum::<f64>()),
    }
}

pub fn aggregate_cost(components: &CostComponents, weights: &ObjectiveWeights) -> f64 {
    components
        .as_array()
        .iter()
        .zip(weights.as_array())
        .map(|(f, w)| w * f)
        .sum()
}

/// The objective handed to the optimizers. Diverged runs receive the
/// scenario's penalty on every channel instead of an error.
pub fn evaluate(gains: &GainSet, scenario: &ScenarioConfig, weights: &ObjectiveWeights) -> CostVector {
    match simulate_closed_loop(gains, scenario) {
        Ok(traj) => {
            let c = cost_components(&traj, &scenario.reference);
            if c.as_array().iter().all(|v| v.is_finite()) {
                CostVector::new(c, weights, false)
            } else {
                CostVector::new(CostComponents::penalty(scenario.divergence_penalty), weights, true)
            }
        }
        Err(_) => CostVector::new(CostComponents::penalty(scenario.divergence_penalty), weights, true),
    }
}
