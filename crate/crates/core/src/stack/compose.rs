use alloc::boxed::Box;
use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::any::Any;

use rand::Rng;

use super::genome::{GeneRole, Genome, GenomeLayout};
use super::registry::{ModuleKind, Service};
use crate::chem::SchedulerMode;
use crate::crc::{Crc, CrcConfig, CrcSensors, CrcSnapshot, DEFAULT_SENSOR_WINDOW};
use crate::proto::{
    ethernet_decap, ethernet_encap, ipv4_decap, ipv4_encap, tcp, udp_decap, udp_encap, AckMode, Packet,
    PacketKind, PhyCounter, Retransmission, TcpConfig, TcpReceiver, TcpSegment, TcpSender,
};

/// Why a genome does not describe a usable stack.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum InvalidBlueprint {
    #[error("{module} requires a `{service}` provider but none is present")]
    MissingProvider { module: ModuleKind, service: Service },
    #[error("connector of {module} closes a cycle")]
    Cycle { module: ModuleKind },
    #[error("malformed genome: {0}")]
    Malformed(String),
}

impl InvalidBlueprint {
    /// Stable machine-readable code.
    pub fn code(&self) -> &'static str {
        match self {
            InvalidBlueprint::MissingProvider { .. } => "missing_provider",
            InvalidBlueprint::Cycle { .. } => "cycle",
            InvalidBlueprint::Malformed(_) => "malformed",
        }
    }
}

/// Walks connectors from the PubSub head. Returns chromosome positions of the
/// data path, head first, Ethernet last.
pub fn resolve_path(layout: &GenomeLayout, genome: &Genome) -> Result<Vec<usize>, InvalidBlueprint> {
    layout.check(genome).map_err(|e| InvalidBlueprint::Malformed(alloc::format!("{e}")))?;
    let chromosomes = layout.chromosomes();
    let head = layout
        .position(ModuleKind::PubSub)
        .ok_or_else(|| InvalidBlueprint::Malformed("no pubsub chromosome".into()))?;
    let mut path = alloc::vec![head];
    let mut cur = head;
    loop {
        let c = &chromosomes[cur];
        let spec = c.kind.spec();
        let Some(&service) = spec.requires.first() else {
            return Ok(path);
        };
        let providers: Vec<usize> = (0..chromosomes.len())
            .filter(|&p| p != cur && layout.is_present(genome, p))
            .filter(|&p| service.accepts(chromosomes[p].kind.spec().provides))
            .collect();
        if providers.is_empty() {
            return Err(InvalidBlueprint::MissingProvider { module: c.kind, service });
        }
        let gene = c.index_of(GeneRole::Connector(0)).map_or(0, |i| genome.0[cur][i]);
        let next = providers[gene.rem_euclid(providers.len() as i64) as usize];
        if path.contains(&next) {
            return Err(InvalidBlueprint::Cycle { module: c.kind });
        }
        path.push(next);
        cur = next;
    }
}

/// `pubsub>crc>ipv4>ethernet`.
pub fn describe_path(layout: &GenomeLayout, path: &[usize]) -> String {
    let names: Vec<&str> = path.iter().map(|&p| layout.chromosomes()[p].kind.name()).collect();
    names.join(">")
}

/// Scenario-level parameters applied at composition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComposeOptions {
    pub k1: f64,
    pub k2: f64,
    pub crc_mode: SchedulerMode,
    pub sensor_window: f64,
    pub tcp_window: usize,
}

impl Default for ComposeOptions {
    fn default() -> Self {
        ComposeOptions {
            k1: 1.0,
            k2: 1.0,
            crc_mode: SchedulerMode::Stochastic,
            sensor_window: DEFAULT_SENSOR_WINDOW,
            tcp_window: tcp::DEFAULT_WINDOW,
        }
    }
}

/// Which end of the link a stack serves. The CRC shapes only the sending
/// node's traffic; on the receiving node it passes packets through.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Sender,
    Receiver,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Scope {
    /// One chromosome position.
    Instance(usize),
    Kind,
    Interface(Service),
}

/// Module state surviving stack teardown.
#[derive(Default)]
pub struct PersistentStore {
    entries: BTreeMap<(ModuleKind, Scope), Box<dyn Any + Send>>,
}

impl core::fmt::Debug for PersistentStore {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_set().entries(self.entries.keys()).finish()
    }
}

impl PersistentStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn put<T: Any + Send>(&mut self, kind: ModuleKind, scope: Scope, value: T) {
        self.entries.insert((kind, scope), Box::new(value));
    }

    pub fn get<T: Any + Send>(&self, kind: ModuleKind, scope: Scope) -> Option<&T> {
        self.entries.get(&(kind, scope))?.downcast_ref()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

#[derive(Debug, Clone)]
pub struct TcpLayer {
    cfg: TcpConfig,
    flows: BTreeMap<u16, (TcpSender, TcpReceiver)>,
}

impl TcpLayer {
    fn flow(&mut self, port: u16) -> &mut (TcpSender, TcpReceiver) {
        let cfg = self.cfg;
        self.flows.entry(port).or_insert_with(|| (TcpSender::new(cfg, port), TcpReceiver::new(cfg)))
    }

    pub fn config(&self) -> &TcpConfig {
        &self.cfg
    }

    pub fn sender(&self, port: u16) -> Option<&TcpSender> {
        self.flows.get(&port).map(|f| &f.0)
    }

    pub fn receiver(&self, port: u16) -> Option<&TcpReceiver> {
        self.flows.get(&port).map(|f| &f.1)
    }
}

pub enum Layer {
    PubSub,
    Crc(Box<Crc<Packet>>),
    /// CRC on the receiving node.
    CrcPassthrough,
    Ipv4,
    Udp,
    Tcp(TcpLayer),
    Ethernet(PhyCounter),
}

impl Layer {
    pub fn kind(&self) -> ModuleKind {
        match self {
            Layer::PubSub => ModuleKind::PubSub,
            Layer::Crc(_) | Layer::CrcPassthrough => ModuleKind::Crc,
            Layer::Ipv4 => ModuleKind::Ipv4,
            Layer::Udp => ModuleKind::Udp,
            Layer::Tcp(_) => ModuleKind::Tcp,
            Layer::Ethernet(_) => ModuleKind::Ethernet,
        }
    }
}

/// A frame handed to the link at `time`.
pub type Frame = (f64, Packet);

pub struct RunningStack {
    layers: Vec<Layer>,
    positions: Vec<usize>,
    role: Role,
    path: String,
    blueprint: String,
    dropped: u64,
}

/// Builds the stack a genome describes, top-down, and re-attaches persisted
/// state.
pub fn compose(
    layout: &GenomeLayout,
    genome: &Genome,
    opts: &ComposeOptions,
    role: Role,
    store: &PersistentStore,
    now: f64,
) -> Result<RunningStack, InvalidBlueprint> {
    let path = resolve_path(layout, genome)?;
    let mut layers = Vec::with_capacity(path.len());
    for &p in &path {
        let c = &layout.chromosomes()[p];
        let control = |name: &str| -> f64 {
            let i = c.gene_index(name).expect("registered control");
            let GeneRole::Control(ci) = c.genes[i].role else { unreachable!() };
            c.kind.spec().controls[ci].mapping.apply(genome.0[p][i])
        };
        let layer = match c.kind {
            ModuleKind::PubSub => Layer::PubSub,
            ModuleKind::Ipv4 => Layer::Ipv4,
            ModuleKind::Udp => Layer::Udp,
            ModuleKind::Ethernet => {
                let counter = store
                    .get::<PhyCounter>(ModuleKind::Ethernet, Scope::Interface(Service::Link))
                    .filter(|_| role == Role::Sender)
                    .cloned()
                    .unwrap_or_default();
                Layer::Ethernet(counter)
            }
            ModuleKind::Crc if role == Role::Receiver => Layer::CrcPassthrough,
            ModuleKind::Crc => {
                let cfg = CrcConfig::new(control("e0") as u64, opts.k1, opts.k2, control("k_f"));
                let mut crc = Crc::new(cfg, opts.crc_mode)
                    .map_err(|e| InvalidBlueprint::Malformed(alloc::format!("{e}")))?
                    .with_sensor_window(opts.sensor_window);
                if let Some(snap) = store.get::<CrcSnapshot>(ModuleKind::Crc, Scope::Kind) {
                    crc.restore(snap, now);
                }
                Layer::Crc(Box::new(crc))
            }
            ModuleKind::Tcp => {
                let cfg = TcpConfig {
                    ack: if control("ack") == 0.0 { AckMode::Cumulative } else { AckMode::Selective },
                    retransmission: if control("retx") == 0.0 {
                        Retransmission::Off
                    } else {
                        Retransmission::Timeout
                    },
                    timestamps: control("ts") != 0.0,
                    window: opts.tcp_window,
                };
                let mut t = TcpLayer { cfg, flows: BTreeMap::new() };
                if role == Role::Sender {
                    if let Some(seqs) = store.get::<BTreeMap<u16, u64>>(ModuleKind::Tcp, Scope::Instance(p)) {
                        for (&port, &seq) in seqs {
                            t.flow(port).0.resume_from(seq);
                        }
                    }
                }
                Layer::Tcp(t)
            }
        };
        layers.push(layer);
    }
    Ok(RunningStack {
        layers,
        path: describe_path(layout, &path),
        positions: path,
        role,
        blueprint: layout.to_text(genome),
        dropped: 0,
    })
}

impl RunningStack {
    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn kinds(&self) -> Vec<ModuleKind> {
        self.layers.iter().map(Layer::kind).collect()
    }

    pub fn role(&self) -> Role {
        self.role
    }

    /// Data path as `pubsub>…>ethernet`.
    pub fn path(&self) -> &str {
        &self.path
    }

    pub fn blueprint(&self) -> &str {
        &self.blueprint
    }

    /// Frames discarded because a header did not match this stack.
    pub fn dropped(&self) -> u64 {
        self.dropped
    }

    pub fn has(&self, kind: ModuleKind) -> bool {
        self.layers.iter().any(|l| l.kind() == kind)
    }

    pub fn crc(&self) -> Option<&Crc<Packet>> {
        self.layers.iter().find_map(|l| match l {
            Layer::Crc(c) => Some(c.as_ref()),
            _ => None,
        })
    }

    pub fn crc_sensors(&mut self) -> Option<CrcSensors> {
        self.layers.iter_mut().find_map(|l| match l {
            Layer::Crc(c) => Some(c.sensors()),
            _ => None,
        })
    }

    pub fn phy(&self) -> &PhyCounter {
        match self.layers.last() {
            Some(Layer::Ethernet(c)) => c,
            _ => unreachable!("resolved paths end at ethernet"),
        }
    }

    pub fn tcp(&self) -> Option<&TcpLayer> {
        self.layers.iter().find_map(|l| match l {
            Layer::Tcp(t) => Some(t),
            _ => None,
        })
    }

    /// Hands an application packet to the top of the stack.
    pub fn send(&mut self, now: f64, packet: Packet, out: &mut Vec<Frame>) {
        self.down(0, now, packet, out);
    }

    fn down(&mut self, i: usize, now: f64, p: Packet, out: &mut Vec<Frame>) {
        let role = self.role;
        match &mut self.layers[i] {
            Layer::PubSub | Layer::CrcPassthrough => self.down(i + 1, now, p, out),
            Layer::Crc(c) => c.enqueue(now, p).expect("enqueue on a payload species"),
            Layer::Ipv4 => self.down(i + 1, now, ipv4_encap(p), out),
            Layer::Udp => self.down(i + 1, now, udp_encap(p), out),
            Layer::Tcp(t) => {
                let segs = if p.kind == PacketKind::Data && role == Role::Sender {
                    t.flow(p.flow).0.send(now, p)
                } else if p.kind == PacketKind::Control {
                    alloc::vec![p]
                } else {
                    let port = p.flow;
                    alloc::vec![t.flow(port).0.wrap_unsequenced(now, p)]
                };
                for s in segs {
                    self.down(i + 1, now, s, out);
                }
            }
            Layer::Ethernet(c) => {
                let frame = ethernet_encap(p);
                c.count(&frame);
                out.push((now, frame));
            }
        }
    }

    /// Takes a frame off the link and passes it up. Packets reaching the
    /// top are appended to `up`; frames generated on the way (transport acks,
    /// window openings) go to `out`.
    pub fn receive(&mut self, now: f64, frame: Packet, out: &mut Vec<Frame>, up: &mut Vec<Packet>) {
        let mut p = frame;
        let mut i = self.layers.len();
        while i > 0 {
            i -= 1;
            let next = match &mut self.layers[i] {
                Layer::Ethernet(_) => ethernet_decap(p),
                Layer::Ipv4 => ipv4_decap(p),
                Layer::Udp => udp_decap(p),
                Layer::Crc(_) | Layer::CrcPassthrough => Some(p),
                Layer::PubSub => {
                    up.push(p);
                    return;
                }
                Layer::Tcp(t) => {
                    let Some((h, inner)) = tcp::strip(p) else {
                        self.dropped += 1;
                        return;
                    };
                    match h.segment {
                        TcpSegment::Data { .. } => {
                            let r = t.flow(h.port).1.on_segment(now, &h, inner);
                            self.down(i + 1, now, r.ack, out);
                            match r.deliver {
                                Some(d) => Some(d),
                                None => return,
                            }
                        }
                        TcpSegment::Ack { .. } => {
                            let segs = t.flow(h.port).0.on_ack(now, &h);
                            for s in segs {
                                self.down(i + 1, now, s, out);
                            }
                            return;
                        }
                        TcpSegment::Unsequenced => Some(inner),
                    }
                }
            };
            match next {
                Some(n) => p = n,
                None => {
                    self.dropped += 1;
                    return;
                }
            }
        }
    }

    /// Earliest internal event: a CRC firing or a TCP timeout.
    pub fn next_wake<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Option<f64> {
        let mut best: Option<f64> = None;
        let mut consider = |t: Option<f64>| {
            if let Some(t) = t {
                best = Some(best.map_or(t, |b: f64| b.min(t)));
            }
        };
        for l in &mut self.layers {
            match l {
                Layer::Crc(c) => consider(c.next_event_time(rng)),
                Layer::Tcp(t) => {
                    for (s, _) in t.flows.values() {
                        consider(s.next_timeout());
                    }
                }
                _ => {}
            }
        }
        best
    }

    /// Runs internal events up to `now`.
    pub fn wake<R: Rng + ?Sized>(&mut self, now: f64, rng: &mut R, out: &mut Vec<Frame>) {
        for i in 0..self.layers.len() {
            match &mut self.layers[i] {
                Layer::Crc(c) => {
                    let mut emitted = Vec::new();
                    c.advance(now, rng, |t, p| emitted.push((t, p))).expect("crc advance");
                    for (t, p) in emitted {
                        self.down(i + 1, t, p, out);
                    }
                }
                Layer::Tcp(t) => {
                    let mut segs = Vec::new();
                    for (s, _) in t.flows.values_mut() {
                        if s.next_timeout().is_some_and(|d| d <= now) {
                            segs.extend(s.on_timeout(now));
                        }
                    }
                    for s in segs {
                        self.down(i + 1, now, s, out);
                    }
                }
                _ => {}
            }
        }
    }

    /// Flushes resident CRC packets downward, writes module state to the
    /// store and tears the stack down. Returns the flushed frames.
    pub fn persist_detach(mut self, now: f64, store: &mut PersistentStore) -> Vec<Frame> {
        let mut out = Vec::new();
        for i in 0..self.layers.len() {
            if let Layer::Crc(c) = &mut self.layers[i] {
                let flushed = c.flush();
                for p in flushed {
                    self.down(i + 1, now, p, &mut out);
                }
            }
        }
        if self.role == Role::Receiver {
            return out;
        }
        for (l, &pos) in self.layers.iter().zip(&self.positions) {
            match l {
                Layer::Crc(c) => store.put(ModuleKind::Crc, Scope::Kind, c.snapshot()),
                Layer::Ethernet(c) => store.put(ModuleKind::Ethernet, Scope::Interface(Service::Link), c.clone()),
                Layer::Tcp(t) => {
                    let seqs: BTreeMap<u16, u64> = t.flows.iter().map(|(&k, (s, _))| (k, s.next_seq())).collect();
                    store.put(ModuleKind::Tcp, Scope::Instance(pos), seqs);
                }
                _ => {}
            }
        }
        out
    }
}
