//! On/off modulated Poisson traffic.

use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Distribution, Exp};

use super::packet::{Packet, DEFAULT_PAYLOAD};
use super::ProtoError;

/// How long each burst lasts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BurstShape {
    /// Exponentially distributed bursts with the given mean (s).
    Exponential { mean_on: f64 },
    /// Each burst transfers one file of `file_size` bytes at the peak rate.
    Download { file_size: f64 },
    /// Never idle.
    Constant,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SourceProfile {
    /// Long-run mean payload rate, B/s.
    pub mean_rate: f64,
    /// Payload rate while in a burst, B/s.
    pub peak_rate: f64,
    pub payload_len: u32,
    pub shape: BurstShape,
}

impl SourceProfile {
    pub fn constant(mean_rate: f64) -> Self {
        SourceProfile { mean_rate, peak_rate: mean_rate, payload_len: DEFAULT_PAYLOAD, shape: BurstShape::Constant }
    }

    pub fn validate(&self) -> Result<(), ProtoError> {
        let ok = |v: f64| v.is_finite() && v > 0.0;
        if !ok(self.mean_rate) || !ok(self.peak_rate) || self.peak_rate < self.mean_rate {
            return Err(ProtoError::Config("source rates need 0 < mean_rate <= peak_rate"));
        }
        if self.payload_len == 0 {
            return Err(ProtoError::Config("payload_len must be positive"));
        }
        match self.shape {
            BurstShape::Exponential { mean_on } if !ok(mean_on) => {
                Err(ProtoError::Config("mean_on must be positive"))
            }
            BurstShape::Download { file_size } if !ok(file_size) => {
                Err(ProtoError::Config("file_size must be positive"))
            }
            _ => Ok(()),
        }
    }

    /// Mean burst duration, s.
    pub fn mean_on(&self) -> f64 {
        match self.shape {
            BurstShape::Exponential { mean_on } => mean_on,
            BurstShape::Download { file_size } => file_size / self.peak_rate,
            BurstShape::Constant => f64::INFINITY,
        }
    }

    /// Mean idle duration chosen so the long-run rate equals `mean_rate`.
    pub fn mean_off(&self) -> f64 {
        match self.shape {
            BurstShape::Constant => 0.0,
            _ => self.mean_on() * (self.peak_rate / self.mean_rate - 1.0),
        }
    }

    /// Packets per second while bursting.
    pub fn burst_packet_rate(&self) -> f64 {
        self.peak_rate / f64::from(self.payload_len)
    }
}

/// Packet generator for one flow.
#[derive(Debug, Clone)]
pub struct Source {
    profile: SourceProfile,
    flow: u16,
    on: bool,
    phase_end: f64,
    clock: f64,
    next_id: u64,
    id_stride: u64,
    generated_bytes: u64,
    pending: Option<f64>,
}

impl Source {
    /// Packet ids are `flow + k·id_stride`, unique across flows when the
    /// stride is at least the number of flows.
    pub fn new<R: Rng + ?Sized>(profile: SourceProfile, flow: u16, id_stride: u64, rng: &mut R) -> Self {
        let mut s = Source {
            profile,
            flow,
            on: true,
            phase_end: 0.0,
            clock: 0.0,
            next_id: u64::from(flow),
            id_stride: id_stride.max(1),
            generated_bytes: 0,
            pending: None,
        };
        // The first burst starts at t = 0.
        s.phase_end = s.draw_phase(rng);
        s
    }

    pub fn profile(&self) -> &SourceProfile {
        &self.profile
    }

    pub fn flow(&self) -> u16 {
        self.flow
    }

    pub fn generated_bytes(&self) -> u64 {
        self.generated_bytes
    }

    fn draw_phase<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let p = &self.profile;
        let d = match (self.on, p.shape) {
            (_, BurstShape::Constant) => f64::INFINITY,
            (true, BurstShape::Download { .. }) => p.mean_on(),
            (true, BurstShape::Exponential { mean_on }) => exp(mean_on, rng),
            (false, _) => exp(p.mean_off(), rng),
        };
        self.clock + d
    }

    /// Whether the source is bursting at its current clock.
    pub fn is_on(&self) -> bool {
        self.on
    }

    /// Time of the next packet, drawn once and kept until taken.
    pub fn peek_arrival<R: Rng + ?Sized>(&mut self, rng: &mut R) -> f64 {
        if let Some(t) = self.pending {
            return t;
        }
        let rate = self.profile.burst_packet_rate();
        let t = loop {
            if self.on {
                let t = self.clock + exp(1.0 / rate, rng);
                if t < self.phase_end {
                    break t;
                }
            }
            self.clock = self.phase_end;
            self.on = !self.on;
            self.phase_end = self.draw_phase(rng);
        };
        self.clock = t;
        self.pending = Some(t);
        t
    }

    /// Emits the pending packet.
    pub fn take<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Packet {
        let t = self.peek_arrival(rng);
        self.pending = None;
        let id = self.next_id;
        self.next_id += self.id_stride;
        self.generated_bytes += u64::from(self.profile.payload_len);
        Packet::data(id, self.flow, self.profile.payload_len, t)
    }

    /// All packets generated before `t_end`.
    pub fn step<R: Rng + ?Sized>(&mut self, rng: &mut R, t_end: f64) -> Vec<Packet> {
        let mut out = Vec::new();
        while self.peek_arrival(rng) < t_end {
            out.push(self.take(rng));
        }
        out
    }
}

fn exp<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> f64 {
    if mean <= 0.0 {
        return 0.0;
    }
    Exp::new(1.0 / mean).map(|d| d.sample(rng)).unwrap_or(f64::INFINITY)
}

/// Competing frames that occupy link serialization time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrossTrafficProfile {
    /// Mean rate, B/s.
    pub mean_rate: f64,
    /// Peak to mean ratio, at least 1.
    pub burstiness: f64,
    /// Mean burst duration, s.
    pub mean_on: f64,
    pub frame_len: u32,
}

impl CrossTrafficProfile {
    pub fn source_profile(&self) -> SourceProfile {
        let peak = self.mean_rate * self.burstiness.max(1.0);
        SourceProfile {
            mean_rate: self.mean_rate,
            peak_rate: peak,
            payload_len: self.frame_len,
            shape: if self.burstiness <= 1.0 {
                BurstShape::Constant
            } else {
                BurstShape::Exponential { mean_on: self.mean_on }
            },
        }
    }
}
