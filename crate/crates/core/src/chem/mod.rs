//! Reaction networks over packet-bearing species and their discrete
//! mass-action scheduling.

mod engine;
mod grammar;
mod network;
mod state;

use alloc::string::String;

pub use engine::{
    loma_rate, step, ChemEngine, EngineEvent, InflowHandle, OnOffRate, RateSource, SchedulerMode,
    Step, TraceEntry,
};
pub use grammar::{parse_network, ParsedNetwork};
pub use network::{
    Reaction, ReactionId, ReactionNetwork, Species, SpeciesId, SpeciesKind, TRANSMIT,
};
pub use state::{NetworkState, Payload};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ChemError {
    #[error("species `{0}` declared twice")]
    DuplicateSpecies(String),
    #[error("reaction `{0}` declared twice")]
    DuplicateReaction(String),
    #[error("unknown species `{0}`")]
    UnknownSpecies(String),
    #[error("reaction `{reaction}` has invalid rate {rate}")]
    InvalidRate { reaction: String, rate: f64 },
    #[error("reaction `{0}` has no reactants")]
    NoReactants(String),
    #[error("reaction `{reaction}` consumes {consumed} payload molecules and produces {produced}")]
    PayloadFlow {
        reaction: String,
        consumed: u32,
        produced: u32,
    },
    #[error("species #{0} is not counter-only")]
    NotCounter(usize),
    #[error("species #{0} does not carry payload")]
    NotPayload(usize),
    #[error("species #{species}: count {count} but {queued} packets queued")]
    InconsistentState {
        species: usize,
        count: u64,
        queued: usize,
    },
    #[error("reaction `{reaction}` fired without enough of species #{species}")]
    InsufficientReactant { reaction: String, species: usize },
    #[error("reaction `{reaction}` has no packet to carry into its payload product")]
    MissingPayload { reaction: String },
    #[error("inflow attached to counter-only species `{0}`")]
    CounterInflow(String),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}
