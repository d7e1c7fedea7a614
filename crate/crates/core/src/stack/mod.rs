//! Module registry, genome layout and blueprint text, stack composition and
//! the persistent store.

mod compose;
mod genome;
mod registry;

pub use compose::{
    compose, describe_path, resolve_path, ComposeOptions, Frame, InvalidBlueprint, Layer, PersistentStore,
    Role, RunningStack, Scope, TcpLayer,
};
pub use genome::{ChromosomeLayout, GeneRole, GeneSpec, Genome, GenomeLayout, CONNECTOR_DOMAIN};
pub use registry::{ControlSpec, Mapping, ModuleKind, ModuleSpec, Service, K_F_MAPPING, REGISTRY};

use alloc::string::String;
use alloc::vec::Vec;

use crate::math;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum StackError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("genome shape: {0}")]
    Shape(String),
    #[error("gene domain: {0}")]
    Domain(String),
}

/// Measurements of one trial.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrialRecord {
    pub generation: usize,
    pub index: usize,
    /// Blueprint text form.
    pub blueprint: String,
    /// Resolved data path, empty for invalid blueprints.
    pub path: String,
    pub invalid: Option<String>,
    pub duration: f64,
    pub settle: f64,
    /// Set when the requested duration was shorter than the settle window
    /// plus the minimum measurement time.
    pub extended: bool,
    /// Ethernet byte rate of the sending node per 1 s bin.
    pub phy_rate: Vec<f64>,
    /// Application payload offered per 1 s bin.
    pub app_rate: Vec<f64>,
    /// Data packets that left the sending node's Ethernet in the window.
    pub sent: u64,
    /// Of those, first-time deliveries attributed to the right flow.
    pub delivered: u64,
    pub misattributed: u64,
    pub duplicates: u64,
    /// Data payload and wire bytes at the sending node's Ethernet in the
    /// window.
    pub payload_bytes: u64,
    pub wire_bytes: u64,
    pub mean_delay: f64,
    pub fitness: f64,
}

impl TrialRecord {
    pub fn overhead_bytes(&self) -> u64 {
        self.wire_bytes - self.payload_bytes
    }

    /// First bin fully after the settle window.
    pub fn first_measured_bin(&self) -> usize {
        math::ceil(self.settle) as usize
    }

    /// Post-settle part of the phy series.
    pub fn measured_phy(&self) -> &[f64] {
        let start = self.first_measured_bin().min(self.phy_rate.len());
        &self.phy_rate[start..]
    }

    pub fn mean_phy_rate(&self) -> Option<f64> {
        math::mean(self.measured_phy())
    }

    pub fn delivery_ratio(&self) -> f64 {
        if self.sent == 0 {
            0.0
        } else {
            (self.delivered as f64 / self.sent as f64).min(1.0)
        }
    }

    /// Goodput over wire bytes.
    pub fn efficiency(&self) -> f64 {
        if self.wire_bytes == 0 {
            0.0
        } else {
            self.payload_bytes as f64 / self.wire_bytes as f64
        }
    }
}

#[cfg(test)]
mod tests;
