//! Quadrotor PD gain tuning.
//!
//! A 12-state rigid-body quadrotor is flown by four PD loops (altitude,
//! roll, pitch, yaw). The eight gains are tuned by biogeography-based
//! optimization or particle swarm optimization against the weighted sum of
//! the integrated absolute tracking errors of phi, theta, psi and z.

pub mod campaign;
pub mod controller;
pub mod error;
pub mod metrics;
pub mod objective;
pub mod optim;
pub mod report;
pub mod vehicle;

pub use controller::{pd_control, GainSet, Reference};
pub use error::{Error, Result};
pub use metrics::{step_metrics, StepMetrics};
pub use objective::{
    aggregate_cost, cost_components, evaluate, simulate_closed_loop, Channel, CostComponents, CostVector,
    ObjectiveWeights, ScenarioConfig, Trajectory,
};
pub use optim::{optimize, Algorithm, AlgorithmConfig, BboConfig, OptimizationTrace, PsoConfig, SearchSpace};
pub use vehicle::{ControlInput, DroneParams, RotorCommand, State};
