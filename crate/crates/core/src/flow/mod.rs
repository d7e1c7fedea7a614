//! Mean-field flow models `ċ = Ψ·v(c)` derived from reaction networks, and
//! their steady states, trajectories and relaxation times.

mod conservation;
mod model;
mod solve;

pub use conservation::{conservation_laws, ConservationLaw};
pub use model::{derive_odes, FlowModel, InflowTerm, RateTerm, StoichiometricMatrix};
pub use solve::{
    integrate, michaelis_menten_rate, relaxation_rates, settle_time, settle_time_estimate,
    steady_state, steady_state_clamped, ClampEvent, SteadyState, Trajectory,
};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FlowError {
    #[error("integration diverged at t = {time}")]
    Diverged { time: f64 },
    #[error("Newton iteration did not converge after {iterations} steps (residual {residual:e})")]
    NewtonFailed { iterations: usize, residual: f64 },
    #[error("unstable mode with real part {real_part} at a claimed steady state")]
    StabilityViolation { real_part: f64 },
    #[error("expected {expected} values, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("initial concentration of species #{0} is negative or not finite")]
    NegativeInitial(usize),
    #[error("unknown inflow `{0}`")]
    UnknownInflow(alloc::string::String),
    #[error("{0}")]
    InvalidParameter(&'static str),
}

#[cfg(test)]
mod tests;
