use alloc::collections::VecDeque;
use alloc::string::String;
use alloc::vec::Vec;

use super::network::{ReactionId, ReactionNetwork, SpeciesId, SpeciesKind};
use super::ChemError;

/// Packets carried by payload-bearing species.
///
/// `from_arrival` builds the packet injected by an attached inflow. `merge`
/// implements the packet merge applied when a single firing dequeues more
/// than one payload molecule: the first packet survives and absorbs the
/// others.
pub trait Payload: Sized {
    fn from_arrival(seq: u64, time: f64) -> Self;

    fn merge(&mut self, _other: Self) {}
}

impl Payload for u64 {
    fn from_arrival(seq: u64, _time: f64) -> Self {
        seq
    }
}

/// Concentrations, packet queues and the simulation clock of a network.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkState<P> {
    counts: Vec<u64>,
    queues: Vec<VecDeque<P>>,
    kinds: Vec<SpeciesKind>,
    clock: f64,
}

impl<P> NetworkState<P> {
    /// All-zero state at clock 0.
    pub fn new(network: &ReactionNetwork) -> Self {
        let n = network.species().len();
        NetworkState {
            counts: alloc::vec![0; n],
            queues: (0..n).map(|_| VecDeque::new()).collect(),
            kinds: network.species().iter().map(|s| s.kind()).collect(),
            clock: 0.0,
        }
    }

    /// Assembles a state without checking that payload counts match queue
    /// lengths. Used when restoring snapshots; `check` catches mismatches.
    pub fn from_parts(
        network: &ReactionNetwork,
        counts: Vec<u64>,
        queues: Vec<VecDeque<P>>,
        clock: f64,
    ) -> Self {
        NetworkState {
            counts,
            queues,
            kinds: network.species().iter().map(|s| s.kind()).collect(),
            clock,
        }
    }

    pub fn clock(&self) -> f64 {
        self.clock
    }

    pub(crate) fn set_clock(&mut self, t: f64) {
        self.clock = t;
    }

    pub fn count(&self, s: SpeciesId) -> u64 {
        self.counts[s.0]
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn queue(&self, s: SpeciesId) -> &VecDeque<P> {
        &self.queues[s.0]
    }

    /// Sets the count of a counter-only species.
    pub fn set_count(&mut self, s: SpeciesId, n: u64) -> Result<(), ChemError> {
        if self.kinds[s.0] != SpeciesKind::Counter {
            return Err(ChemError::NotCounter(s.0));
        }
        self.counts[s.0] = n;
        Ok(())
    }

    /// Appends a packet to a payload-bearing species.
    pub fn push_packet(&mut self, s: SpeciesId, packet: P) -> Result<(), ChemError> {
        if self.kinds[s.0] != SpeciesKind::Payload {
            return Err(ChemError::NotPayload(s.0));
        }
        self.queues[s.0].push_back(packet);
        self.counts[s.0] += 1;
        Ok(())
    }

    /// Removes every packet from a payload species, oldest first.
    pub fn drain_queue(&mut self, s: SpeciesId) -> Vec<P> {
        self.counts[s.0] -= self.queues[s.0].len() as u64;
        self.queues[s.0].drain(..).collect()
    }

    /// Verifies `count == queue length` for every payload species.
    pub fn check(&self) -> Result<(), ChemError> {
        for (i, kind) in self.kinds.iter().enumerate() {
            if *kind == SpeciesKind::Payload && self.counts[i] != self.queues[i].len() as u64 {
                return Err(ChemError::InconsistentState {
                    species: i,
                    count: self.counts[i],
                    queued: self.queues[i].len(),
                });
            }
        }
        Ok(())
    }
}

impl<P: Payload> NetworkState<P> {
    /// Applies one firing of `id`: removes χ reactant molecules (dequeuing
    /// payload FIFO), adds ξ product molecules, and carries the dequeued
    /// packet into the payload product. Returns the packet when the reaction
    /// has no payload product (it leaves the network).
    pub fn fire(
        &mut self,
        network: &ReactionNetwork,
        id: ReactionId,
    ) -> Result<Option<P>, ChemError> {
        let r = network.reaction(id);
        for (s, chi) in r.reactants() {
            if self.counts[s.0] < u64::from(*chi) {
                return Err(ChemError::InsufficientReactant {
                    reaction: String::from(r.name()),
                    species: s.0,
                });
            }
        }
        let mut carried: Option<P> = None;
        for (s, chi) in r.reactants() {
            self.counts[s.0] -= u64::from(*chi);
            if self.kinds[s.0] == SpeciesKind::Payload {
                for _ in 0..*chi {
                    let p = self.queues[s.0].pop_front().ok_or_else(|| {
                        ChemError::InconsistentState {
                            species: s.0,
                            count: self.counts[s.0] + 1,
                            queued: 0,
                        }
                    })?;
                    match carried.as_mut() {
                        None => carried = Some(p),
                        Some(first) => first.merge(p),
                    }
                }
            }
        }
        for (s, xi) in r.products() {
            if self.kinds[s.0] == SpeciesKind::Payload {
                // Validation guarantees exactly one payload product molecule.
                let p = carried.take().ok_or_else(|| ChemError::MissingPayload {
                    reaction: String::from(r.name()),
                })?;
                self.queues[s.0].push_back(p);
            }
            self.counts[s.0] += u64::from(*xi);
        }
        Ok(carried)
    }
}
