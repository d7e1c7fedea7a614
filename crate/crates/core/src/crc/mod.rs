//! The chemical rate controller: a FIFO buffer `S` served through the token
//! loop `E`/`ES`, with an optional first-order output stage `F`.
//!
//! ```text
//! r1: S + E -k1-> ES
//! r2: ES -k2-> E          !transmit     (k_F = 0)
//! r2: ES -k2-> E + F, r3: F -k_F-> 0 !transmit
//! ```

use alloc::collections::VecDeque;
use alloc::vec::Vec;

use rand::Rng;

use crate::chem::{
    ChemEngine, ChemError, EngineEvent, InflowHandle, Payload, RateSource, Reaction,
    ReactionNetwork, SchedulerMode, SpeciesId, SpeciesKind, TRANSMIT,
};
use crate::math;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CrcError {
    #[error("e0 must be at least 1")]
    ZeroTokens,
    #[error("rate constant `{0}` must be positive and finite")]
    InvalidRate(&'static str),
    #[error(transparent)]
    Chem(#[from] ChemError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrcConfig {
    pub e0: u64,
    pub k1: f64,
    pub k2: f64,
    /// Output-stage coefficient; `0` disables the stage.
    pub k_f: f64,
}

impl Default for CrcConfig {
    fn default() -> Self {
        CrcConfig {
            e0: 10,
            k1: 1.0,
            k2: 1.0,
            k_f: 0.0,
        }
    }
}

impl CrcConfig {
    pub fn new(e0: u64, k1: f64, k2: f64, k_f: f64) -> Self {
        CrcConfig { e0, k1, k2, k_f }
    }

    pub fn validate(&self) -> Result<(), CrcError> {
        if self.e0 < 1 {
            return Err(CrcError::ZeroTokens);
        }
        for (name, k) in [("k1", self.k1), ("k2", self.k2)] {
            if !(k.is_finite() && k > 0.0) {
                return Err(CrcError::InvalidRate(name));
            }
        }
        if !(self.k_f.is_finite() && self.k_f >= 0.0) {
            return Err(CrcError::InvalidRate("k_F"));
        }
        Ok(())
    }

    /// Service ceiling `e0·k2` in packets per second.
    pub fn rate_cap(&self) -> f64 {
        self.e0 as f64 * self.k2
    }

    pub fn reaction_network(&self) -> (ReactionNetwork, CrcSpecies) {
        reaction_network(self.k1, self.k2, self.k_f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CrcSpecies {
    pub s: SpeciesId,
    pub es: SpeciesId,
    pub e: SpeciesId,
    pub f: Option<SpeciesId>,
}

/// Builds the controller network. Species are ordered `S, ES, E[, F]`.
pub fn reaction_network(k1: f64, k2: f64, k_f: f64) -> (ReactionNetwork, CrcSpecies) {
    let mut net = ReactionNetwork::new();
    let s = net.add_species("S", SpeciesKind::Payload).expect("fresh");
    let es = net.add_species("ES", SpeciesKind::Payload).expect("fresh");
    let e = net.add_species("E", SpeciesKind::Counter).expect("fresh");
    net.add_reaction(
        Reaction::new("r1", k1)
            .rate_name("k1")
            .reactant(s, 1)
            .reactant(e, 1)
            .product(es, 1),
    )
    .expect("valid r1");
    let f = if k_f > 0.0 {
        let f = net.add_species("F", SpeciesKind::Payload).expect("fresh");
        net.add_reaction(
            Reaction::new("r2", k2)
                .rate_name("k2")
                .reactant(es, 1)
                .product(e, 1)
                .product(f, 1),
        )
        .expect("valid r2");
        net.add_reaction(
            Reaction::new("r3", k_f)
                .rate_name("k_F")
                .reactant(f, 1)
                .emit(TRANSMIT),
        )
        .expect("valid r3");
        Some(f)
    } else {
        net.add_reaction(
            Reaction::new("r2", k2)
                .rate_name("k2")
                .reactant(es, 1)
                .product(e, 1)
                .emit(TRANSMIT),
        )
        .expect("valid r2");
        None
    };
    (net, CrcSpecies { s, es, e, f })
}

/// Packet tagged with the time it entered the controller.
#[derive(Debug, Clone, PartialEq)]
pub struct Stamped<P> {
    pub packet: P,
    pub enqueued_at: f64,
}

impl<P: Payload> Payload for Stamped<P> {
    fn from_arrival(seq: u64, time: f64) -> Self {
        Stamped {
            packet: P::from_arrival(seq, time),
            enqueued_at: time,
        }
    }

    fn merge(&mut self, other: Self) {
        self.packet.merge(other.packet);
    }
}

/// Sliding-window measurements.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CrcSensors {
    pub queue_len: u64,
    pub in_rate: f64,
    pub out_rate: f64,
    pub mean_delay: f64,
}

/// State carried across recomposition.
#[derive(Debug, Clone, PartialEq)]
pub struct CrcSnapshot {
    pub e0: u64,
    pub enqueued: u64,
    pub transmitted: u64,
    arrivals: VecDeque<f64>,
    departures: VecDeque<(f64, f64)>,
}

pub const DEFAULT_SENSOR_WINDOW: f64 = 1.0;

pub struct Crc<P> {
    config: CrcConfig,
    ids: CrcSpecies,
    engine: ChemEngine<Stamped<P>>,
    token_debt: u64,
    enqueued: u64,
    transmitted: u64,
    window: f64,
    arrivals: VecDeque<f64>,
    departures: VecDeque<(f64, f64)>,
}

impl<P: Payload> Crc<P> {
    pub fn new(config: CrcConfig, mode: SchedulerMode) -> Result<Self, CrcError> {
        config.validate()?;
        let (net, ids) = config.reaction_network();
        let mut engine = ChemEngine::new(net, mode);
        engine.set_count(ids.e, config.e0)?;
        Ok(Crc {
            config,
            ids,
            engine,
            token_debt: 0,
            enqueued: 0,
            transmitted: 0,
            window: DEFAULT_SENSOR_WINDOW,
            arrivals: VecDeque::new(),
            departures: VecDeque::new(),
        })
    }

    pub fn with_sensor_window(mut self, window: f64) -> Self {
        self.window = window;
        self
    }

    pub fn config(&self) -> &CrcConfig {
        &self.config
    }

    pub fn species(&self) -> CrcSpecies {
        self.ids
    }

    pub fn engine(&self) -> &ChemEngine<Stamped<P>> {
        &self.engine
    }

    pub fn clock(&self) -> f64 {
        self.engine.clock()
    }

    pub fn e0(&self) -> u64 {
        self.config.e0
    }

    pub fn free_tokens(&self) -> u64 {
        self.engine.count(self.ids.e)
    }

    pub fn busy_tokens(&self) -> u64 {
        self.engine.count(self.ids.es)
    }

    pub fn queue_len(&self) -> u64 {
        self.engine.count(self.ids.s)
    }

    /// Packets inside the controller (`S`, `ES` and `F`).
    pub fn resident(&self) -> u64 {
        self.queue_len() + self.busy_tokens() + self.ids.f.map_or(0, |f| self.engine.count(f))
    }

    pub fn enqueued(&self) -> u64 {
        self.enqueued
    }

    pub fn transmitted(&self) -> u64 {
        self.transmitted
    }

    /// Appends `packet` to `S` at time `now`.
    pub fn enqueue(&mut self, now: f64, packet: P) -> Result<(), CrcError> {
        self.engine.advance_to(now);
        self.engine.inject(
            self.ids.s,
            Stamped {
                packet,
                enqueued_at: now,
            },
        )?;
        self.enqueued += 1;
        self.arrivals.push_back(now);
        Ok(())
    }

    /// Attaches an external source feeding `S` directly.
    pub fn attach_inflow(
        &mut self,
        source: impl RateSource + Send + 'static,
    ) -> Result<InflowHandle, CrcError> {
        Ok(self.engine.attach_inflow(self.ids.s, "v_src", source)?)
    }

    pub fn next_event_time<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Option<f64> {
        self.engine.next_event_time(rng)
    }

    /// Processes every firing up to `t_end`, handing each transmitted packet
    /// and its departure time to `sink`.
    pub fn advance<R: Rng + ?Sized>(
        &mut self,
        t_end: f64,
        rng: &mut R,
        mut sink: impl FnMut(f64, P),
    ) -> Result<(), CrcError> {
        while let Some(t) = self.engine.next_event_time(rng) {
            if t > t_end {
                break;
            }
            let Some(entry) = self.engine.fire_next(rng)? else {
                continue;
            };
            match entry.event {
                EngineEvent::Reaction { emitted, .. } => {
                    if self.token_debt > 0 {
                        self.pay_token_debt()?;
                    }
                    if let Some(p) = emitted {
                        self.transmitted += 1;
                        self.departures.push_back((entry.time, entry.time - p.enqueued_at));
                        sink(entry.time, p.packet);
                    }
                }
                EngineEvent::Arrival { .. } => {
                    self.enqueued += 1;
                    self.arrivals.push_back(entry.time);
                }
            }
        }
        self.engine.advance_to(t_end);
        self.prune(t_end);
        Ok(())
    }

    fn pay_token_debt(&mut self) -> Result<(), CrcError> {
        let free = self.engine.count(self.ids.e);
        let paid = free.min(self.token_debt);
        if paid > 0 {
            self.engine.set_count(self.ids.e, free - paid)?;
            self.token_debt -= paid;
        }
        Ok(())
    }

    /// Changes the token total. New tokens are added free; removed tokens
    /// are taken from the free pool, and busy ones as they return.
    pub fn set_e0(&mut self, e0: u64) -> Result<(), CrcError> {
        if e0 < 1 {
            return Err(CrcError::ZeroTokens);
        }
        let current = self.config.e0;
        if e0 >= current {
            let mut add = e0 - current;
            let cancel = add.min(self.token_debt);
            self.token_debt -= cancel;
            add -= cancel;
            let free = self.engine.count(self.ids.e);
            self.engine.set_count(self.ids.e, free + add)?;
        } else {
            self.token_debt += current - e0;
            self.pay_token_debt()?;
        }
        self.config.e0 = e0;
        Ok(())
    }

    /// Tokens still owed after an `e0` decrease.
    pub fn token_debt(&self) -> u64 {
        self.token_debt
    }

    /// Removes every resident packet, output side first, returning busy
    /// tokens to the free pool. Flushed packets count as transmitted.
    pub fn flush(&mut self) -> Vec<P> {
        let mut out = Vec::new();
        let now = self.engine.clock();
        let mut order = Vec::new();
        if let Some(f) = self.ids.f {
            order.push(f);
        }
        order.push(self.ids.es);
        order.push(self.ids.s);
        for s in order {
            let drained = self.engine.drain_queue(s);
            if s == self.ids.es && !drained.is_empty() {
                let free = self.engine.count(self.ids.e);
                self.engine
                    .set_count(self.ids.e, free + drained.len() as u64)
                    .expect("E is a counter");
            }
            for p in drained {
                self.transmitted += 1;
                self.departures.push_back((now, now - p.enqueued_at));
                out.push(p.packet);
            }
        }
        let _ = self.pay_token_debt();
        out
    }

    fn prune(&mut self, now: f64) {
        let start = now - self.window;
        while self.arrivals.front().is_some_and(|&t| t <= start) {
            self.arrivals.pop_front();
        }
        while self.departures.front().is_some_and(|&(t, _)| t <= start) {
            self.departures.pop_front();
        }
    }

    pub fn sensors(&mut self) -> CrcSensors {
        let now = self.engine.clock();
        self.prune(now);
        let w = self.window;
        let mean_delay = if self.departures.is_empty() {
            0.0
        } else {
            self.departures.iter().map(|(_, d)| d).sum::<f64>() / self.departures.len() as f64
        };
        CrcSensors {
            queue_len: self.queue_len(),
            in_rate: self.arrivals.len() as f64 / w,
            out_rate: self.departures.len() as f64 / w,
            mean_delay,
        }
    }

    /// Counters and sensor history. Call after [`flush`](Self::flush) so no
    /// packets are left inside.
    pub fn snapshot(&self) -> CrcSnapshot {
        CrcSnapshot {
            e0: self.config.e0,
            enqueued: self.enqueued,
            transmitted: self.transmitted,
            arrivals: self.arrivals.clone(),
            departures: self.departures.clone(),
        }
    }

    /// Continues the counters and sensor history of a previous instance.
    /// The token total stays at this instance's configured `e0`.
    pub fn restore(&mut self, snap: &CrcSnapshot, now: f64) {
        self.engine.advance_to(now);
        self.enqueued += snap.enqueued;
        self.transmitted += snap.transmitted;
        // History from a world whose clock ran past `now` is dropped.
        self.arrivals = snap.arrivals.iter().copied().filter(|&t| t <= now).collect();
        self.departures = snap.departures.iter().copied().filter(|&(t, _)| t <= now).collect();
        self.prune(now);
    }
}

/// `e0` giving a saturated service rate of `pkt_rate` for a given `k2`.
pub fn e0_for_rate(pkt_rate: f64, k2: f64) -> u64 {
    math::round(pkt_rate / k2).max(1.0) as u64
}

/// Integer `e0` range whose saturated service rate stays within
/// `[(1 - below)·rate, (1 + above)·rate]`.
pub fn e0_domain(pkt_rate: f64, k2: f64, below: f64, above: f64) -> (u64, u64) {
    let lo = math::floor(pkt_rate * (1.0 - below) / k2).max(1.0) as u64;
    let hi = math::ceil(pkt_rate * (1.0 + above) / k2).max(lo as f64) as u64;
    (lo, hi)
}
