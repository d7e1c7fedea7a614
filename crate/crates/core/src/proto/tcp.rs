//! TCP-lite: a fixed-window sliding-window transport with the three controls
//! ack type, retransmission and timestamps.

use alloc::collections::{BTreeMap, BTreeSet, VecDeque};
use alloc::vec::Vec;

use super::packet::{Header, Packet, PacketKind, Protocol, TcpHeader, TcpSegment};

pub const DEFAULT_WINDOW: usize = 16;
pub const INITIAL_RTO: f64 = 1.0;
/// Upper bound on SACK entries carried by one ack.
pub const MAX_SACK: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AckMode {
    #[default]
    Cumulative,
    Selective,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Retransmission {
    Off,
    #[default]
    Timeout,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TcpConfig {
    pub ack: AckMode,
    pub retransmission: Retransmission,
    pub timestamps: bool,
    pub window: usize,
}

impl Default for TcpConfig {
    fn default() -> Self {
        TcpConfig {
            ack: AckMode::Cumulative,
            retransmission: Retransmission::Timeout,
            timestamps: false,
            window: DEFAULT_WINDOW,
        }
    }
}

#[derive(Debug, Clone)]
struct Flight {
    packet: Packet,
    sent_at: f64,
    retransmitted: bool,
}

/// Sending half of one flow.
#[derive(Debug, Clone)]
pub struct TcpSender {
    cfg: TcpConfig,
    port: u16,
    next_seq: u64,
    flights: BTreeMap<u64, Flight>,
    backlog: VecDeque<Packet>,
    srtt: Option<f64>,
    retransmissions: u64,
    abandoned: u64,
}

impl TcpSender {
    pub fn new(cfg: TcpConfig, port: u16) -> Self {
        TcpSender {
            cfg,
            port,
            next_seq: 0,
            flights: BTreeMap::new(),
            backlog: VecDeque::new(),
            srtt: None,
            retransmissions: 0,
            abandoned: 0,
        }
    }

    pub fn next_seq(&self) -> u64 {
        self.next_seq
    }

    /// Continues sequence numbering from a previous instance.
    pub fn resume_from(&mut self, next_seq: u64) {
        self.next_seq = self.next_seq.max(next_seq);
    }

    pub fn in_flight(&self) -> usize {
        self.flights.len()
    }

    pub fn backlog(&self) -> usize {
        self.backlog.len()
    }

    pub fn srtt(&self) -> Option<f64> {
        self.srtt
    }

    pub fn rto(&self) -> f64 {
        self.srtt.map_or(INITIAL_RTO, |s| 2.0 * s)
    }

    pub fn retransmissions(&self) -> u64 {
        self.retransmissions
    }

    pub fn abandoned(&self) -> u64 {
        self.abandoned
    }

    /// Queues `packet` and returns the segments the window admits now.
    pub fn send(&mut self, now: f64, packet: Packet) -> Vec<Packet> {
        self.backlog.push_back(packet);
        self.fill(now)
    }

    fn fill(&mut self, now: f64) -> Vec<Packet> {
        let mut out = Vec::new();
        while self.flights.len() < self.cfg.window {
            let Some(p) = self.backlog.pop_front() else { break };
            let seq = self.next_seq;
            self.next_seq += 1;
            self.flights.insert(seq, Flight { packet: p.clone(), sent_at: now, retransmitted: false });
            out.push(self.segment(now, p, seq));
        }
        out
    }

    fn segment(&self, now: f64, mut p: Packet, seq: u64) -> Packet {
        p.push(Header::Tcp(TcpHeader {
            port: self.port,
            segment: TcpSegment::Data { seq },
            timestamp: self.cfg.timestamps.then_some(now),
        }));
        p
    }

    /// Processes an ack and returns newly admitted segments.
    pub fn on_ack(&mut self, now: f64, header: &TcpHeader) -> Vec<Packet> {
        let TcpSegment::Ack { cumulative, sack, echo_seq } = &header.segment else {
            return Vec::new();
        };
        let sample = match header.timestamp {
            Some(ts) => Some(now - ts),
            None => self
                .flights
                .get(echo_seq)
                .filter(|f| !f.retransmitted)
                .map(|f| now - f.sent_at),
        };
        if let Some(rtt) = sample.filter(|r| *r >= 0.0) {
            self.srtt = Some(match self.srtt {
                None => rtt,
                Some(s) => 0.875 * s + 0.125 * rtt,
            });
        }
        self.flights = self.flights.split_off(cumulative);
        for s in sack {
            self.flights.remove(s);
        }
        self.fill(now)
    }

    pub fn next_timeout(&self) -> Option<f64> {
        let rto = self.rto();
        self.flights.values().map(|f| f.sent_at + rto).min_by(f64::total_cmp)
    }

    /// Handles every segment whose timer expired by `now`; returns
    /// retransmissions and segments admitted by abandoned slots.
    pub fn on_timeout(&mut self, now: f64) -> Vec<Packet> {
        let rto = self.rto();
        let expired: Vec<u64> = self
            .flights
            .iter()
            .filter(|(_, f)| f.sent_at + rto <= now)
            .map(|(s, _)| *s)
            .collect();
        let mut out = Vec::new();
        for seq in expired {
            match self.cfg.retransmission {
                Retransmission::Timeout => {
                    let f = self.flights.get_mut(&seq).expect("expired flight");
                    f.sent_at = now;
                    f.retransmitted = true;
                    self.retransmissions += 1;
                    let p = f.packet.clone();
                    out.push(self.segment(now, p, seq));
                }
                Retransmission::Off => {
                    self.flights.remove(&seq);
                    self.abandoned += 1;
                }
            }
        }
        out.extend(self.fill(now));
        out
    }

    /// Stamps reverse-direction traffic that travels without sequencing.
    pub fn wrap_unsequenced(&self, now: f64, mut p: Packet) -> Packet {
        p.push(Header::Tcp(TcpHeader {
            port: self.port,
            segment: TcpSegment::Unsequenced,
            timestamp: self.cfg.timestamps.then_some(now),
        }));
        p
    }
}

/// Receiving half of one flow.
#[derive(Debug, Clone, Default)]
pub struct TcpReceiver {
    cfg: TcpConfig,
    cumulative: u64,
    above: BTreeSet<u64>,
    duplicates: u64,
}

/// Outcome of a data segment at the receiver.
#[derive(Debug, Clone, PartialEq)]
pub struct Received {
    /// The packet to hand upward, `None` for duplicates.
    pub deliver: Option<Packet>,
    pub ack: Packet,
}

impl TcpReceiver {
    pub fn new(cfg: TcpConfig) -> Self {
        TcpReceiver { cfg, ..Default::default() }
    }

    pub fn duplicates(&self) -> u64 {
        self.duplicates
    }

    pub fn cumulative(&self) -> u64 {
        self.cumulative
    }

    /// `packet` has its TCP header already removed; `header` is that header.
    pub fn on_segment(&mut self, now: f64, header: &TcpHeader, mut packet: Packet) -> Received {
        let seq = match header.segment {
            TcpSegment::Data { seq } => seq,
            _ => 0,
        };
        let fresh = seq >= self.cumulative && self.above.insert(seq);
        while self.above.remove(&self.cumulative) {
            self.cumulative += 1;
        }
        if !fresh {
            self.duplicates += 1;
        }
        let sack = match self.cfg.ack {
            AckMode::Cumulative => Vec::new(),
            AckMode::Selective => self.above.iter().rev().take(MAX_SACK).copied().collect(),
        };
        let mut ack = Packet::control(packet.flow, now);
        ack.push(Header::Tcp(TcpHeader {
            port: header.port,
            segment: TcpSegment::Ack { cumulative: self.cumulative, sack, echo_seq: seq },
            timestamp: header.timestamp,
        }));
        packet.demux = Some(header.port);
        Received { deliver: fresh.then_some(packet), ack }
    }
}

/// Strips a TCP header, returning it with the remaining packet.
pub fn strip(mut p: Packet) -> Option<(TcpHeader, Packet)> {
    match p.pop(Protocol::Tcp)? {
        Header::Tcp(h) => {
            if !matches!(h.segment, TcpSegment::Ack { .. }) && p.kind != PacketKind::Control {
                p.demux = Some(h.port);
            }
            Some((h, p))
        }
        _ => None,
    }
}
