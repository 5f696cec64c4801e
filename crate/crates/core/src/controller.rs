//! Four decoupled PD loops: altitude plus roll, pitch and yaw.

use std::f64::consts::FRAC_PI_2;
use std::path::Path;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::vehicle::{body_to_euler_rates, ControlInput, DroneParams, State, SINGULARITY_EPS};

/// The eight PD gains, in the row order used throughout the crate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GainSet {
    #[serde(rename = "Kp_phi")]
    pub kp_phi: f64,
    #[serde(rename = "Kd_phi")]
    pub kd_phi: f64,
    #[serde(rename = "Kp_theta")]
    pub kp_theta: f64,
    #[serde(rename = "Kd_theta")]
    pub kd_theta: f64,
    #[serde(rename = "Kp_psi")]
    pub kp_psi: f64,
    #[serde(rename = "Kd_psi")]
    pub kd_psi: f64,
    #[serde(rename = "Kp_z")]
    pub kp_z: f64,
    #[serde(rename = "Kd_z")]
    pub kd_z: f64,
}

impl GainSet {
    pub const DIM: usize = 8;
    pub const NAMES: [&'static str; 8] = [
        "Kp_phi", "Kd_phi", "Kp_theta", "Kd_theta", "Kp_psi", "Kd_psi", "Kp_z", "Kd_z",
    ];

    /// Hand-tuned baseline gains of the conventional PD controller.
    pub const CONVENTIONAL_PD: GainSet = GainSet::from_array([6.0, 1.75, 6.0, 1.75, 6.0, 1.75, 1.5, 2.5]);
    /// Published mean of PSO-tuned gains (5 trials, 30 iterations).
    pub const PUBLISHED_PSO: GainSet =
        GainSet::from_array([14.015, 10.0, 2.7624, 10.0, 6.4304, 10.0, 3.0, 2.7755]);
    /// Published mean of BBO-tuned gains (5 trials, 30 iterations).
    pub const PUBLISHED_BBO: GainSet =
        GainSet::from_array([19.7704, 9.6322, 3.04, 9.6105, 1.49, 9.9945, 2.8141, 2.89]);

    pub const fn from_array(v: [f64; 8]) -> Self {
        Self {
            kp_phi: v[0],
            kd_phi: v[1],
            kp_theta: v[2],
            kd_theta: v[3],
            kp_psi: v[4],
            kd_psi: v[5],
            kp_z: v[6],
            kd_z: v[7],
        }
    }

    pub fn from_slice(v: &[f64]) -> Result<Self> {
        let arr: [f64; 8] = v
            .try_into()
            .map_err(|_| invalid(format!("gain vector must have 8 entries, got {}", v.len())))?;
        Ok(Self::from_array(arr))
    }

    pub fn to_array(&self) -> [f64; 8] {
        [
            self.kp_phi,
            self.kd_phi,
            self.kp_theta,
            self.kd_theta,
            self.kp_psi,
            self.kd_psi,
            self.kp_z,
            self.kd_z,
        ]
    }

    pub fn validate(&self) -> Result<()> {
        for (name, g) in Self::NAMES.iter().zip(self.to_array()) {
            if !(g.is_finite() && g >= 0.0) {
                return Err(invalid(format!("gain {name} must be finite and >= 0, got {g}")));
            }
        }
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let gains: Self = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        gains.validate()?;
        Ok(gains)
    }
}

/// Constant setpoints; desired rates are zero.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Reference {
    pub z: f64,
    pub phi: f64,
    pub theta: f64,
    pub psi: f64,
}

impl Reference {
    pub fn validate(&self) -> Result<()> {
        let all = [self.z, self.phi, self.theta, self.psi];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(invalid("reference must be finite"));
        }
        if self.phi.abs() >= FRAC_PI_2 || self.theta.abs() >= FRAC_PI_2 {
            return Err(invalid("reference roll and pitch must lie inside (-pi/2, pi/2)"));
        }
        Ok(())
    }

    pub fn attitude(&self) -> Vector3<f64> {
        Vector3::new(self.phi, self.theta, self.psi)
    }
}

/// PD law with gravity feed-forward and tilt compensation on thrust and
/// inertia-scaled attitude torques. Thrust is clamped below at zero.
pub fn pd_control(state: &State, reference: &Reference, gains: &GainSet, params: &DroneParams) -> Result<ControlInput> {
    let (phi, theta) = (state.attitude.x, state.attitude.y);
    let tilt = phi.cos() * theta.cos();
    // leaving (-pi/2, pi/2) on roll or pitch ends controlled flight
    if !(tilt.abs() > SINGULARITY_EPS) || phi.abs() >= FRAC_PI_2 || theta.abs() >= FRAC_PI_2 {
        return Err(Error::SingularAttitude {
            phi,
            theta,
            cos: tilt.abs(),
        });
    }
    let euler_rates = body_to_euler_rates(&state.attitude, &state.body_rates)?;

    let z_cmd = params.gravity + gains.kd_z * (0.0 - state.velocity.z) + gains.kp_z * (reference.z - state.position.z);
    let thrust = (params.mass * z_cmd / tilt).max(0.0);

    let err = reference.attitude() - state.attitude;
    let torque = Vector3::new(
        params.ixx * (gains.kd_phi * -euler_rates.x + gains.kp_phi * err.x),
        params.iyy * (gains.kd_theta * -euler_rates.y + gains.kp_theta * err.y),
        params.izz * (gains.kd_psi * -euler_rates.z + gains.kp_psi * err.z),
    );
    Ok(ControlInput { thrust, torque })
}
