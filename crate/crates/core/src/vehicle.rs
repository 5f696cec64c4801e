//! Rigid-body quadrotor model.
//!
//! Frames: inertial z points up and gravity acts along -z. Attitude is the
//! ZYX (yaw-pitch-roll) Euler triple `(phi, theta, psi)`; body rates
//! `(p, q, r)` are expressed in the body frame. Rotors are in the plus
//! configuration: rotors 1 and 3 lie on the body x axis, 2 and 4 on the
//! body y axis, and 1/3 spin opposite to 2/4.

use std::path::Path;

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Below this value of |cos theta| the Euler-rate transform is treated as singular.
pub const SINGULARITY_EPS: f64 = 1e-6;

/// Full 12-component rigid-body state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct State {
    /// `(x, y, z)` in the inertial frame, meters.
    pub position: Vector3<f64>,
    /// `(phi, theta, psi)`, radians.
    pub attitude: Vector3<f64>,
    /// `(x', y', z')` in the inertial frame, m/s.
    pub velocity: Vector3<f64>,
    /// `(p, q, r)` in the body frame, rad/s.
    pub body_rates: Vector3<f64>,
}

impl Default for State {
    fn default() -> Self {
        Self::at_rest(Vector3::zeros(), Vector3::zeros())
    }
}

impl State {
    pub fn at_rest(position: Vector3<f64>, attitude: Vector3<f64>) -> Self {
        Self {
            position,
            attitude,
            velocity: Vector3::zeros(),
            body_rates: Vector3::zeros(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.as_array().iter().all(|v| v.is_finite())
    }

    /// Components in the order `x y z phi theta psi x' y' z' p q r`.
    pub fn as_array(&self) -> [f64; 12] {
        let mut out = [0.0; 12];
        for i in 0..3 {
            out[i] = self.position[i];
            out[3 + i] = self.attitude[i];
            out[6 + i] = self.velocity[i];
            out[9 + i] = self.body_rates[i];
        }
        out
    }

    /// `self + h * rate`, component-wise.
    fn offset(&self, rate: &State, h: f64) -> State {
        State {
            position: self.position + rate.position * h,
            attitude: self.attitude + rate.attitude * h,
            velocity: self.velocity + rate.velocity * h,
            body_rates: self.body_rates + rate.body_rates * h,
        }
    }
}

/// Collective thrust along body z plus body-frame torques.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControlInput {
    /// Total thrust, N. Never negative.
    pub thrust: f64,
    /// `(tau_phi, tau_theta, tau_psi)`, N·m.
    pub torque: Vector3<f64>,
}

impl ControlInput {
    pub fn new(thrust: f64, torque: Vector3<f64>) -> Self {
        Self { thrust, torque }
    }
}

/// Squared rotor speeds `omega_i^2`, rad²/s².
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RotorCommand(pub [f64; 4]);

impl RotorCommand {
    /// Per-rotor thrust `f_i = k omega_i^2`.
    pub fn forces(&self, params: &DroneParams) -> [f64; 4] {
        self.0.map(|w2| params.thrust_constant * w2)
    }

    /// Per-rotor reaction torque `M_i = b omega_i^2`.
    pub fn moments(&self, params: &DroneParams) -> [f64; 4] {
        self.0.map(|w2| params.drag_constant * w2)
    }

    /// Rotor speeds `omega_i` in rad/s.
    pub fn speeds(&self) -> [f64; 4] {
        self.0.map(f64::sqrt)
    }

    /// Forward allocation: squared rotor speeds to thrust and body torques.
    pub fn to_control(&self, params: &DroneParams) -> ControlInput {
        let [w1, w2, w3, w4] = self.0;
        let (k, b, l) = (params.thrust_constant, params.drag_constant, params.arm_length);
        ControlInput {
            thrust: k * (w1 + w2 + w3 + w4),
            torque: Vector3::new(l * k * (w4 - w2), l * k * (w3 - w1), b * (w1 - w2 + w3 - w4)),
        }
    }
}

/// Physical constants of the airframe.
///
/// The defaults are a 0.468 kg class quadrotor with small linear drag. They
/// are a choice of this crate, not measured values of any particular vehicle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DroneParams {
    /// kg
    pub mass: f64,
    /// kg·m²
    pub ixx: f64,
    pub iyy: f64,
    pub izz: f64,
    /// Rotor center to center of mass, m.
    pub arm_length: f64,
    /// Rotor thrust constant k, N·s²/rad².
    pub thrust_constant: f64,
    /// Rotor drag constant b, N·m·s²/rad².
    pub drag_constant: f64,
    /// Linear aerodynamic drag per inertial axis, kg/s.
    pub drag_x: f64,
    pub drag_y: f64,
    pub drag_z: f64,
    /// m/s²
    pub gravity: f64,
}

impl Default for DroneParams {
    fn default() -> Self {
        Self {
            mass: 0.468,
            ixx: 4.856e-3,
            iyy: 4.856e-3,
            izz: 8.801e-3,
            arm_length: 0.225,
            thrust_constant: 2.980e-6,
            drag_constant: 1.140e-7,
            drag_x: 0.25,
            drag_y: 0.25,
            drag_z: 0.25,
            gravity: 9.81,
        }
    }
}

impl DroneParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("mass", self.mass),
            ("ixx", self.ixx),
            ("iyy", self.iyy),
            ("izz", self.izz),
            ("arm_length", self.arm_length),
            ("thrust_constant", self.thrust_constant),
            ("drag_constant", self.drag_constant),
            ("gravity", self.gravity),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(invalid(format!("drone.{name} must be > 0, got {v}")));
            }
        }
        for (name, v) in [("drag_x", self.drag_x), ("drag_y", self.drag_y), ("drag_z", self.drag_z)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(invalid(format!("drone.{name} must be >= 0, got {v}")));
            }
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let params: Self = serde_json::from_str(text)?;
        params.validate()?;
        Ok(params)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn inertia(&self) -> Matrix3<f64> {
        Matrix3::from_diagonal(&Vector3::new(self.ixx, self.iyy, self.izz))
    }

    pub fn hover_thrust(&self) -> f64 {
        self.mass * self.gravity
    }
}

/// Body-to-inertial rotation `R = Rz(psi) Ry(theta) Rx(phi)`.
pub fn euler_to_rotation(attitude: &Vector3<f64>) -> Matrix3<f64> {
    let (sphi, cphi) = attitude.x.sin_cos();
    let (sth, cth) = attitude.y.sin_cos();
    let (spsi, cpsi) = attitude.z.sin_cos();
    Matrix3::new(
        cpsi * cth,
        cpsi * sth * sphi - spsi * cphi,
        cpsi * sth * cphi + spsi * sphi,
        spsi * cth,
        spsi * sth * sphi + cpsi * cphi,
        spsi * sth * cphi - cpsi * sphi,
        -sth,
        cth * sphi,
        cth * cphi,
    )
}

fn check_pitch(attitude: &Vector3<f64>) -> Result<f64> {
    let cth = attitude.y.cos();
    if cth.abs() < SINGULARITY_EPS || !cth.is_finite() {
        return Err(Error::SingularAttitude {
            phi: attitude.x,
            theta: attitude.y,
            cos: cth.abs(),
        });
    }
    Ok(cth)
}

/// Euler-angle rates to body rates, `nu = W(eta) eta_dot`.
pub fn euler_rate_transform(attitude: &Vector3<f64>, euler_rates: &Vector3<f64>) -> Result<Vector3<f64>> {
    let cth = check_pitch(attitude)?;
    let (sphi, cphi) = attitude.x.sin_cos();
    let sth = attitude.y.sin();
    let w = Matrix3::new(
        1.0, 0.0, -sth, //
        0.0, cphi, sphi * cth, //
        0.0, -sphi, cphi * cth,
    );
    Ok(w * euler_rates)
}

/// Body rates to Euler-angle rates, `eta_dot = W(eta)^-1 nu`.
pub fn body_to_euler_rates(attitude: &Vector3<f64>, body_rates: &Vector3<f64>) -> Result<Vector3<f64>> {
    let cth = check_pitch(attitude)?;
    let (sphi, cphi) = attitude.x.sin_cos();
    let tth = attitude.y.sin() / cth;
    let w_inv = Matrix3::new(
        1.0, sphi * tth, cphi * tth, //
        0.0, cphi, -sphi, //
        0.0, sphi / cth, cphi / cth,
    );
    Ok(w_inv * body_rates)
}

/// Right-hand side of the rigid-body equations of motion.
pub fn state_derivative(state: &State, input: &ControlInput, params: &DroneParams) -> Result<State> {
    let euler_rates = body_to_euler_rates(&state.attitude, &state.body_rates)?;

    let rotation = euler_to_rotation(&state.attitude);
    let thrust_accel = rotation.column(2) * (input.thrust / params.mass);
    let drag = Vector3::new(params.drag_x, params.drag_y, params.drag_z);
    let accel = thrust_accel - Vector3::new(0.0, 0.0, params.gravity)
        - drag.component_mul(&state.velocity) / params.mass;

    let inertia = params.inertia();
    let nu = state.body_rates;
    let gyro = nu.cross(&(inertia * nu));
    let ang_accel = (input.torque - gyro).component_div(&Vector3::new(params.ixx, params.iyy, params.izz));

    Ok(State {
        position: state.velocity,
        attitude: euler_rates,
        velocity: accel,
        body_rates: ang_accel,
    })
}

/// One classical fourth-order Runge-Kutta step with `input` held constant.
pub fn rk4_step(state: &State, input: &ControlInput, params: &DroneParams, dt: f64) -> Result<State> {
    if !(dt > 0.0) {
        return Err(invalid(format!("integration step must be > 0, got {dt}")));
    }
    let k1 = state_derivative(state, input, params)?;
    let k2 = state_derivative(&state.offset(&k1, dt / 2.0), input, params)?;
    let k3 = state_derivative(&state.offset(&k2, dt / 2.0), input, params)?;
    let k4 = state_derivative(&state.offset(&k3, dt), input, params)?;

    let sixth = dt / 6.0;
    let next = state
        .offset(&k1, sixth)
        .offset(&k2, 2.0 * sixth)
        .offset(&k3, 2.0 * sixth)
        .offset(&k4, sixth);
    if !next.is_finite() {
        return Err(Error::Diverged { time: f64::NAN });
    }
    Ok(next)
}

/// Inverts the plus-configuration allocation.
pub fn mix_rotors(input: &ControlInput, params: &DroneParams) -> Result<RotorCommand> {
    let (k, b, l) = (params.thrust_constant, params.drag_constant, params.arm_length);
    if !(k > 0.0 && b > 0.0 && l > 0.0) {
        return Err(invalid("rotor constants and arm length must be > 0"));
    }
    let total = input.thrust / k;
    let yaw = input.torque.z / b;
    let roll = input.torque.x / (l * k);
    let pitch = input.torque.y / (l * k);
    // rotors 1+3 versus 2+4
    let odd = 0.5 * (total + yaw);
    let even = 0.5 * (total - yaw);
    let cmd = [
        0.5 * (odd - pitch),
        0.5 * (even - roll),
        0.5 * (odd + pitch),
        0.5 * (even + roll),
    ];
    if let Some((i, &v)) = cmd.iter().enumerate().find(|(_, v)| **v < 0.0) {
        return Err(Error::InfeasibleCommand { rotor: i + 1, value: v });
    }
    Ok(RotorCommand(cmd))
}
