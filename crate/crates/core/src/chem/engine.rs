//! Discrete scheduling of reaction firings.
//!
//! The stochastic scheduler is Gillespie's direct method: with total
//! propensity `a0`, the waiting time is `Exp(a0)` and a channel is picked
//! with probability `a_i / a0`. Inflows are zero-order channels whose rate is
//! supplied by a [`RateSource`]. Because waiting times are memoryless, a
//! pending draw may be discarded whenever the state changes from outside
//! (an injected packet, a rate boundary) and redrawn from the new rates.
//!
//! The deterministic scheduler keeps a phase per channel that advances at the
//! channel's current rate; a channel fires when its phase reaches one. Phases
//! start at one half so a constant rate `v` fires at `(i + 1/2) / v`.

use alloc::boxed::Box;
use alloc::string::String;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Distribution, Exp};

use super::network::{ReactionId, ReactionNetwork, SpeciesId, SpeciesKind};
use super::state::{NetworkState, Payload};
use super::ChemError;
use crate::math;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SchedulerMode {
    #[default]
    Stochastic,
    Deterministic,
}

/// Time-varying rate of an inflow, piecewise constant between the instants
/// reported by `next_change`.
pub trait RateSource {
    fn rate_at(&self, t: f64) -> f64;

    /// First instant strictly after `t` at which the rate may change.
    fn next_change(&self, _t: f64) -> Option<f64> {
        None
    }
}

impl RateSource for f64 {
    fn rate_at(&self, _t: f64) -> f64 {
        *self
    }
}

/// Square-wave rate: `on_rate` for `on_duration`, then `off_rate` for
/// `off_duration`, repeating from `offset`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OnOffRate {
    pub on_rate: f64,
    pub off_rate: f64,
    pub on_duration: f64,
    pub off_duration: f64,
    pub offset: f64,
}

impl OnOffRate {
    pub fn new(on_rate: f64, on_duration: f64, off_duration: f64) -> Self {
        OnOffRate {
            on_rate,
            off_rate: 0.0,
            on_duration,
            off_duration,
            offset: 0.0,
        }
    }

    fn period(&self) -> f64 {
        self.on_duration + self.off_duration
    }

    fn tolerance(&self) -> f64 {
        1e-9 * self.period()
    }

    pub fn is_on(&self, t: f64) -> bool {
        let p = self.period();
        let rel = t - self.offset;
        let pos = rel - math::floor(rel / p) * p;
        pos < self.on_duration - self.tolerance()
    }
}

impl RateSource for OnOffRate {
    fn rate_at(&self, t: f64) -> f64 {
        if self.is_on(t) {
            self.on_rate
        } else {
            self.off_rate
        }
    }

    fn next_change(&self, t: f64) -> Option<f64> {
        let p = self.period();
        let n = math::floor((t - self.offset) / p);
        let eps = self.tolerance();
        let start = self.offset + n * p;
        [start + self.on_duration, start + p, start + p + self.on_duration]
            .into_iter()
            .find(|&c| c > t + eps)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct InflowHandle(usize);

impl InflowHandle {
    pub fn index(self) -> usize {
        self.0
    }
}

struct Inflow {
    name: String,
    species: SpeciesId,
    source: Box<dyn RateSource + Send>,
    arrivals: u64,
}

/// Something that happened inside the engine.
#[derive(Debug, Clone, PartialEq)]
pub enum EngineEvent<P> {
    /// A reaction fired. `emitted` holds the packet that left the network
    /// when the reaction has no payload product.
    Reaction {
        id: ReactionId,
        emitted: Option<P>,
    },
    /// An inflow injected one packet.
    Arrival { inflow: InflowHandle, species: SpeciesId },
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceEntry<P> {
    pub time: f64,
    pub event: EngineEvent<P>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Pending {
    Channel { time: f64, channel: usize },
    Boundary { time: f64 },
    Never,
}

/// A reaction network together with its state, attached inflows and a
/// scheduler.
pub struct ChemEngine<P> {
    network: ReactionNetwork,
    state: NetworkState<P>,
    mode: SchedulerMode,
    inflows: Vec<Inflow>,
    phases: Vec<f64>,
    propensities: Vec<f64>,
    pending: Option<Pending>,
    arrival_seq: u64,
}

/// Propensity of `reaction` under the Law of Mass Action:
/// `k · Π c_s^χ_s` over its reactants.
pub fn loma_rate<P>(reaction: &super::Reaction, state: &NetworkState<P>) -> f64 {
    reaction
        .reactants()
        .iter()
        .fold(reaction.rate(), |acc, (s, chi)| {
            acc * math::powu(state.count(*s) as f64, *chi)
        })
}

/// Outcome of [`step`].
#[derive(Debug, Clone, PartialEq)]
pub enum Step<P> {
    Fired {
        reaction: ReactionId,
        dt: f64,
        emitted: Option<P>,
    },
    Quiescent,
}

/// One Gillespie direct-method step on a bare network (no inflows).
pub fn step<P: Payload, R: Rng + ?Sized>(
    network: &ReactionNetwork,
    state: &mut NetworkState<P>,
    rng: &mut R,
) -> Result<Step<P>, ChemError> {
    state.check()?;
    let rates: Vec<f64> = network
        .reactions()
        .iter()
        .map(|r| loma_rate(r, state))
        .collect();
    let a0: f64 = rates.iter().sum();
    if a0 <= 0.0 {
        return Ok(Step::Quiescent);
    }
    let dt = Exp::new(a0).expect("positive rate").sample(rng);
    let idx = pick(&rates, a0, rng);
    let id = ReactionId(idx);
    let emitted = state.fire(network, id)?;
    let t = state.clock() + dt;
    state.set_clock(t);
    Ok(Step::Fired {
        reaction: id,
        dt,
        emitted,
    })
}

fn pick<R: Rng + ?Sized>(rates: &[f64], total: f64, rng: &mut R) -> usize {
    let target = rng.random::<f64>() * total;
    let mut acc = 0.0;
    let mut last = 0;
    for (i, &a) in rates.iter().enumerate() {
        if a <= 0.0 {
            continue;
        }
        acc += a;
        last = i;
        if target < acc {
            return i;
        }
    }
    last
}

impl<P: Payload> ChemEngine<P> {
    pub fn new(network: ReactionNetwork, mode: SchedulerMode) -> Self {
        let state = NetworkState::new(&network);
        Self::assemble(network, state, mode)
    }

    pub fn with_state(
        network: ReactionNetwork,
        state: NetworkState<P>,
        mode: SchedulerMode,
    ) -> Result<Self, ChemError> {
        state.check()?;
        Ok(Self::assemble(network, state, mode))
    }

    fn assemble(network: ReactionNetwork, state: NetworkState<P>, mode: SchedulerMode) -> Self {
        let n = network.reactions().len();
        ChemEngine {
            network,
            state,
            mode,
            inflows: Vec::new(),
            phases: alloc::vec![0.5; n],
            propensities: Vec::with_capacity(n),
            pending: None,
            arrival_seq: 0,
        }
    }

    pub fn network(&self) -> &ReactionNetwork {
        &self.network
    }

    pub fn state(&self) -> &NetworkState<P> {
        &self.state
    }

    pub fn mode(&self) -> SchedulerMode {
        self.mode
    }

    pub fn clock(&self) -> f64 {
        self.state.clock()
    }

    pub fn count(&self, s: SpeciesId) -> u64 {
        self.state.count(s)
    }

    /// Attaches an external packet source feeding a payload species.
    pub fn attach_inflow(
        &mut self,
        species: SpeciesId,
        name: impl Into<String>,
        source: impl RateSource + Send + 'static,
    ) -> Result<InflowHandle, ChemError> {
        if self.network.species_by_id(species).kind() != SpeciesKind::Payload {
            return Err(ChemError::CounterInflow(String::from(
                self.network.species_by_id(species).name(),
            )));
        }
        self.inflows.push(Inflow {
            name: name.into(),
            species,
            source: Box::new(source),
            arrivals: 0,
        });
        self.phases.push(0.5);
        self.pending = None;
        Ok(InflowHandle(self.inflows.len() - 1))
    }

    pub fn inflow_name(&self, h: InflowHandle) -> &str {
        &self.inflows[h.0].name
    }

    pub fn inflow_arrivals(&self, h: InflowHandle) -> u64 {
        self.inflows[h.0].arrivals
    }

    /// Enqueues an external packet at the current clock.
    pub fn inject(&mut self, species: SpeciesId, packet: P) -> Result<(), ChemError> {
        self.state.push_packet(species, packet)?;
        self.pending = None;
        Ok(())
    }

    pub fn set_count(&mut self, species: SpeciesId, n: u64) -> Result<(), ChemError> {
        self.state.set_count(species, n)?;
        self.pending = None;
        Ok(())
    }

    pub fn drain_queue(&mut self, species: SpeciesId) -> Vec<P> {
        self.pending = None;
        self.state.drain_queue(species)
    }

    fn refresh_propensities(&mut self, t: f64) {
        self.propensities.clear();
        for r in self.network.reactions() {
            self.propensities.push(loma_rate(r, &self.state));
        }
        for inflow in &self.inflows {
            self.propensities.push(inflow.source.rate_at(t).max(0.0));
        }
    }

    fn next_boundary(&self, t: f64) -> Option<f64> {
        self.inflows
            .iter()
            .filter_map(|i| i.source.next_change(t))
            .fold(None, |acc: Option<f64>, x| Some(acc.map_or(x, |a| a.min(x))))
    }

    fn compute_pending<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Pending {
        let now = self.state.clock();
        self.refresh_propensities(now);
        let boundary = self.next_boundary(now);
        let candidate = match self.mode {
            SchedulerMode::Stochastic => {
                let a0: f64 = self.propensities.iter().sum();
                if a0 > 0.0 {
                    let dt = Exp::new(a0).expect("positive rate").sample(rng);
                    let channel = pick(&self.propensities, a0, rng);
                    Some((now + dt, channel))
                } else {
                    None
                }
            }
            SchedulerMode::Deterministic => {
                let mut best: Option<(f64, usize)> = None;
                for (i, &a) in self.propensities.iter().enumerate() {
                    if a <= 0.0 {
                        continue;
                    }
                    let dt = ((1.0 - self.phases[i]) / a).max(0.0);
                    if best.is_none_or(|(b, _)| dt < b) {
                        best = Some((dt, i));
                    }
                }
                best.map(|(dt, i)| (now + dt, i))
            }
        };
        match (candidate, boundary) {
            (Some((t, _)), Some(b)) if t > b => Pending::Boundary { time: b },
            (Some((time, channel)), _) => Pending::Channel { time, channel },
            (None, Some(b)) => Pending::Boundary { time: b },
            (None, None) => Pending::Never,
        }
    }

    fn pending<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Pending {
        match self.pending {
            Some(p) => p,
            None => {
                let p = self.compute_pending(rng);
                self.pending = Some(p);
                p
            }
        }
    }

    /// Time of the next internal event (firing, arrival, or rate boundary),
    /// or `None` if the engine is quiescent forever.
    pub fn next_event_time<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Option<f64> {
        match self.pending(rng) {
            Pending::Channel { time, .. } | Pending::Boundary { time } => Some(time),
            Pending::Never => None,
        }
    }

    fn advance_phases(&mut self, dt: f64) {
        if self.mode == SchedulerMode::Deterministic && dt > 0.0 {
            for (phase, a) in self.phases.iter_mut().zip(&self.propensities) {
                *phase += a * dt;
            }
        }
    }

    /// Moves the clock forward to `t` without firing. `t` must not pass the
    /// pending event; the pending draw is discarded.
    pub fn advance_to(&mut self, t: f64) {
        let now = self.state.clock();
        if t <= now {
            return;
        }
        if self.mode == SchedulerMode::Deterministic {
            // Reaction propensities are fixed between events; inflow rates
            // may step at boundaries inside (now, t].
            let mut cur = now;
            while cur < t {
                let seg_end = self.next_boundary(cur).map_or(t, |b| b.min(t));
                self.refresh_propensities(cur);
                self.advance_phases(seg_end - cur);
                cur = seg_end;
            }
        }
        self.state.set_clock(t);
        self.pending = None;
    }

    /// Executes the pending event. Returns `None` when the pending event was
    /// only a rate boundary or nothing will ever happen.
    pub fn fire_next<R: Rng + ?Sized>(
        &mut self,
        rng: &mut R,
    ) -> Result<Option<TraceEntry<P>>, ChemError> {
        match self.pending(rng) {
            Pending::Never => Ok(None),
            Pending::Boundary { time } => {
                self.advance_to(time);
                Ok(None)
            }
            Pending::Channel { time, channel } => {
                let now = self.state.clock();
                self.advance_phases(time - now);
                if self.mode == SchedulerMode::Deterministic {
                    self.phases[channel] = 0.0;
                }
                self.state.set_clock(time);
                self.pending = None;
                let n_reactions = self.network.reactions().len();
                let event = if channel < n_reactions {
                    let id = ReactionId(channel);
                    let emitted = self.state.fire(&self.network, id)?;
                    EngineEvent::Reaction { id, emitted }
                } else {
                    let k = channel - n_reactions;
                    let seq = self.arrival_seq;
                    self.arrival_seq += 1;
                    let species = self.inflows[k].species;
                    self.inflows[k].arrivals += 1;
                    self.state.push_packet(species, P::from_arrival(seq, time))?;
                    EngineEvent::Arrival {
                        inflow: InflowHandle(k),
                        species,
                    }
                };
                Ok(Some(TraceEntry { time, event }))
            }
        }
    }

    /// Processes every event with time `<= t_end` in order and leaves the
    /// clock at `t_end`.
    pub fn run_until<R: Rng + ?Sized>(
        &mut self,
        t_end: f64,
        rng: &mut R,
    ) -> Result<Vec<TraceEntry<P>>, ChemError> {
        let mut trace = Vec::new();
        self.run_until_with(t_end, rng, |e| trace.push(e))?;
        Ok(trace)
    }

    /// Like [`run_until`](Self::run_until) but hands each event to `sink`
    /// instead of collecting a trace.
    pub fn run_until_with<R: Rng + ?Sized>(
        &mut self,
        t_end: f64,
        rng: &mut R,
        mut sink: impl FnMut(TraceEntry<P>),
    ) -> Result<(), ChemError> {
        while let Some(t) = self.next_event_time(rng) {
            if t > t_end {
                break;
            }
            if let Some(entry) = self.fire_next(rng)? {
                sink(entry);
            }
        }
        self.advance_to(t_end);
        Ok(())
    }
}
