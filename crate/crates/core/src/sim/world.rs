use alloc::collections::BTreeMap;
use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::calendar::EventCalendar;
use super::link::Link;
use super::scenario::Scenario;
use crate::flow::settle_time_estimate;
use crate::math;
use crate::proto::{Packet, PacketKind, Protocol, Sink, Source};
use crate::stack::{
    compose, Frame, Genome, GenomeLayout, PersistentStore, Role, RunningStack, TrialRecord,
};

/// Random streams of one trial. Source traffic is fixed for a whole run so
/// that fitness is noiseless without cross-traffic; cross-traffic varies by
/// generation and is shared by its genomes; stack and link streams are per
/// genome.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrialSeeds {
    pub traffic: u64,
    pub cross: u64,
    pub stack: u64,
}

impl TrialSeeds {
    pub fn single(seed: u64) -> Self {
        TrialSeeds { traffic: seed, cross: seed, stack: seed }
    }

    /// Traffic `mix(run)`, cross `base = mix(run, generation)`, stack
    /// `base ⊕ index`.
    pub fn derive(run_seed: u64, generation: usize, index: usize) -> Self {
        let base = splitmix(run_seed ^ splitmix(generation as u64));
        TrialSeeds { traffic: splitmix(run_seed), cross: base, stack: base ^ index as u64 }
    }
}

pub fn splitmix(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(id);
    r
}

#[derive(Debug)]
enum Event {
    Source(usize),
    Cross,
    Wake { node: usize, generation: u64 },
    Arrive { node: usize, frame: Packet },
}

const SENDER: usize = 0;
const RECEIVER: usize = 1;

/// Settle window for a composed sender stack.
pub fn settle_window(scenario: &Scenario, stack: &RunningStack) -> f64 {
    let Some(crc) = stack.crc() else {
        return scenario.warmup;
    };
    let c = crc.config();
    settle_time_estimate(c.e0 as f64, c.k1, c.k2, c.k_f, scenario.settle_tolerance)
        .unwrap_or(scenario.warmup)
        .max(scenario.warmup)
}

/// Per-trial accounting that is not part of the record.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrialStats {
    pub generated: u64,
    pub delivered_total: u64,
    pub link_drops: u64,
    pub non_ip_drops: u64,
    /// Data packets still inside the sender's CRC at the end.
    pub crc_resident: u64,
    /// Data frames on the link when the trial ended.
    pub in_flight: u64,
    /// Data packets waiting in TCP senders at the end.
    pub tcp_backlog: u64,
    pub app_acks: u64,
}

struct World {
    cal: EventCalendar<Event>,
    nodes: [RunningStack; 2],
    links: [Link; 2],
    wake_gen: [u64; 2],
    wake_at: [Option<f64>; 2],
    sources: Vec<Source>,
    cross: Option<Source>,
    sink: Sink,
    traffic_rng: ChaCha8Rng,
    cross_rng: ChaCha8Rng,
    link_rng: ChaCha8Rng,
    stack_rng: ChaCha8Rng,
    end: f64,
    window: (f64, f64),
    phy: Vec<f64>,
    app: Vec<f64>,
    /// First send time of data packets sent in the window.
    sent: BTreeMap<u64, f64>,
    payload_bytes: u64,
    wire_bytes: u64,
    stats: TrialStats,
    frames: Vec<Frame>,
}

impl World {
    fn bin(&self, t: f64) -> Option<usize> {
        let i = math::floor(t) as usize;
        (t >= 0.0 && i < self.phy.len()).then_some(i)
    }

    fn reschedule(&mut self, node: usize) {
        let next = self.nodes[node].next_wake(&mut self.stack_rng);
        if next != self.wake_at[node] {
            self.wake_gen[node] += 1;
            self.wake_at[node] = next;
            if let Some(t) = next {
                self.cal.schedule(t, Event::Wake { node, generation: self.wake_gen[node] });
            }
        }
    }

    /// Puts frames produced by `node` on its outgoing link.
    fn transmit(&mut self, node: usize) {
        let frames = core::mem::take(&mut self.frames);
        for (t, frame) in frames {
            let len = frame.wire_len();
            if node == SENDER {
                if let Some(b) = self.bin(t) {
                    self.phy[b] += f64::from(len);
                }
                if frame.kind == PacketKind::Data && t >= self.window.0 && t < self.window.1 {
                    self.wire_bytes += u64::from(len);
                    if !self.sent.contains_key(&frame.id) {
                        self.sent.insert(frame.id, t);
                        self.payload_bytes += u64::from(frame.payload_len);
                    }
                }
            }
            let u: f64 = self.link_rng.random();
            let Some(arrival) = self.links[node].transmit(t, len, u) else {
                if frame.kind == PacketKind::Data {
                    self.stats.link_drops += 1;
                }
                continue;
            };
            if frame.inner_protocol() != Some(Protocol::Ipv4) {
                self.links[node].non_ip_drops += 1;
                if frame.kind == PacketKind::Data {
                    self.stats.non_ip_drops += 1;
                }
                continue;
            }
            self.cal.schedule(arrival, Event::Arrive { node: 1 - node, frame });
        }
    }

    fn run(&mut self) {
        for i in 0..self.sources.len() {
            let t = self.sources[i].peek_arrival(&mut self.traffic_rng);
            self.cal.schedule(t, Event::Source(i));
        }
        if let Some(c) = &mut self.cross {
            let t = c.peek_arrival(&mut self.cross_rng);
            self.cal.schedule(t, Event::Cross);
        }
        while let Some((t, ev)) = self.cal.pop() {
            if t >= self.end {
                if let Event::Arrive { frame, .. } = ev {
                    if frame.kind == PacketKind::Data {
                        self.stats.in_flight += 1;
                    }
                }
                continue;
            }
            match ev {
                Event::Source(i) => {
                    let p = self.sources[i].take(&mut self.traffic_rng);
                    self.stats.generated += 1;
                    if let Some(b) = self.bin(t) {
                        self.app[b] += f64::from(p.payload_len);
                    }
                    self.nodes[SENDER].send(t, p, &mut self.frames);
                    self.transmit(SENDER);
                    self.reschedule(SENDER);
                    let next = self.sources[i].peek_arrival(&mut self.traffic_rng);
                    self.cal.schedule(next, Event::Source(i));
                }
                Event::Cross => {
                    let c = self.cross.as_mut().expect("cross traffic");
                    let frame = c.take(&mut self.cross_rng);
                    let next = c.peek_arrival(&mut self.cross_rng);
                    self.links[SENDER].serialize(t, frame.payload_len);
                    self.cal.schedule(next, Event::Cross);
                }
                Event::Wake { node, generation } => {
                    if generation != self.wake_gen[node] {
                        continue;
                    }
                    self.wake_at[node] = None;
                    self.nodes[node].wake(t, &mut self.stack_rng, &mut self.frames);
                    self.transmit(node);
                    self.reschedule(node);
                }
                Event::Arrive { node, frame } => {
                    let mut up = Vec::new();
                    self.nodes[node].receive(t, frame, &mut self.frames, &mut up);
                    self.transmit(node);
                    for p in up {
                        if node == RECEIVER {
                            if let Some(ack) = self.sink.receive(t, &p) {
                                self.nodes[RECEIVER].send(t, ack, &mut self.frames);
                                self.transmit(RECEIVER);
                            }
                        } else if p.kind == PacketKind::AppAck {
                            self.stats.app_acks += 1;
                        }
                    }
                    self.reschedule(node);
                }
            }
        }
    }
}

/// Composes `genome` on both nodes and drives one trial. Invalid blueprints
/// yield a zero-fitness record without simulation; the caller scores the
/// record.
pub fn run_trial(
    scenario: &Scenario,
    layout: &GenomeLayout,
    genome: &Genome,
    store: &mut PersistentStore,
    seeds: TrialSeeds,
) -> (TrialRecord, TrialStats) {
    let blueprint = layout.to_text(genome);
    let opts = scenario.compose;
    let sender = match compose(layout, genome, &opts, Role::Sender, store, 0.0) {
        Ok(s) => s,
        Err(e) => {
            let rec = TrialRecord { blueprint, invalid: Some(e.code().to_string()), ..Default::default() };
            return (rec, TrialStats::default());
        }
    };
    let receiver = compose(layout, genome, &opts, Role::Receiver, &PersistentStore::new(), 0.0)
        .expect("receiver mirrors a valid sender");

    let settle = settle_window(scenario, &sender);
    let needed = math::ceil(settle) + scenario.min_measure;
    let requested = math::ceil(scenario.duration);
    let duration = requested.max(needed);
    let extended = duration > requested;
    let bins = duration as usize;

    let mut traffic_rng = stream(seeds.traffic, 1);
    let stride = u64::from(scenario.flows);
    let sources = (0..scenario.flows)
        .map(|f| Source::new(scenario.source, f, stride, &mut traffic_rng))
        .collect();
    let mut cross_rng = stream(seeds.cross, 2);
    let cross = scenario.link.cross_traffic.map(|c| Source::new(c.source_profile(), 0, 1, &mut cross_rng));

    let path = sender.path().to_string();
    let mut w = World {
        cal: EventCalendar::new(),
        nodes: [sender, receiver],
        links: [Link::new(scenario.link), Link::new(scenario.link)],
        wake_gen: [0; 2],
        wake_at: [None; 2],
        sources,
        cross,
        sink: Sink::new(),
        traffic_rng,
        cross_rng,
        link_rng: stream(seeds.stack, 3),
        stack_rng: stream(seeds.stack, 4),
        end: duration,
        window: (math::ceil(settle), duration - scenario.drain),
        phy: vec![0.0; bins],
        app: vec![0.0; bins],
        sent: BTreeMap::new(),
        payload_bytes: 0,
        wire_bytes: 0,
        stats: TrialStats::default(),
        frames: Vec::new(),
    };
    w.run();

    let mut delivered = 0;
    let mut misattributed = 0;
    let mut delay_sum = 0.0;
    let mut delay_n = 0u64;
    for d in w.sink.deliveries() {
        if !w.sent.contains_key(&d.id) {
            continue;
        }
        if d.correct() {
            delivered += 1;
        } else {
            misattributed += 1;
        }
        delay_sum += d.delay();
        delay_n += 1;
    }
    let [sender, _] = w.nodes;
    w.stats.delivered_total = w.sink.delivered();
    w.stats.crc_resident = sender.crc().map_or(0, |c| c.resident());
    w.stats.tcp_backlog = sender.tcp().map_or(0, |t| {
        (0..scenario.flows)
            .filter_map(|f| t.sender(f))
            .map(|s| (s.backlog() + s.in_flight()) as u64)
            .sum()
    });
    sender.persist_detach(duration, store);

    let record = TrialRecord {
        generation: 0,
        index: 0,
        blueprint,
        path,
        invalid: None,
        duration,
        settle,
        extended,
        phy_rate: w.phy,
        app_rate: w.app,
        sent: w.sent.len() as u64,
        delivered,
        misattributed,
        duplicates: w.sink.duplicates(),
        payload_bytes: w.payload_bytes,
        wire_bytes: w.wire_bytes,
        mean_delay: if delay_n > 0 { delay_sum / delay_n as f64 } else { 0.0 },
        fitness: 0.0,
    };
    (record, w.stats)
}
