//! Two-node discrete-event world: event calendar, links with cross-traffic,
//! scenarios, trials and evolutionary experiments.

mod calendar;
mod experiment;
mod link;
mod scenario;
mod world;

pub use calendar::EventCalendar;
pub use experiment::{known_optimum, optimum_fitness, replay, run_experiment, score_trial, Experiment};
pub use link::{Link, LinkConfig};
pub use scenario::{e0_override, DomainOverride, Scenario};
pub use world::{run_trial, settle_window, splitmix, TrialSeeds, TrialStats};

use alloc::string::String;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SimError {
    #[error("scenario: {0}")]
    Config(String),
    #[error("runtime: {0}")]
    Runtime(String),
}

#[cfg(test)]
mod tests;
