use thiserror::Error;

/// Errors produced by the simulator, controller, optimizers and campaign runner.
#[derive(Debug, Error)]
pub enum Error {
    /// Pitch (or the combined roll/pitch tilt) reached the Euler-angle singularity.
    #[error("singular attitude: |cos| = {cos:e} below 1e-6 (phi = {phi}, theta = {theta})")]
    SingularAttitude { phi: f64, theta: f64, cos: f64 },

    #[error("simulation diverged at t = {time} s: non-finite state")]
    Diverged { time: f64 },

    /// Allocation produced a negative squared rotor speed.
    #[error("infeasible rotor command: omega_{rotor}^2 = {value}")]
    InfeasibleCommand { rotor: usize, value: f64 },

    #[error("rank {rank} out of range 1..={population}")]
    RankOutOfRange { rank: usize, population: usize },

    #[error("degenerate step: initial value equals setpoint ({0})")]
    DegenerateStep(f64),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidConfig(msg.into())
}
