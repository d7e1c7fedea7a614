use alloc::string::{String, ToString};
use alloc::vec::Vec;

use super::link::LinkConfig;
use super::SimError;
use crate::chem::SchedulerMode;
use crate::evolution::{EvolutionConfig, FitnessSpec, FitnessVariant};
use crate::proto::{BurstShape, CrossTrafficProfile, SourceProfile};
use crate::stack::{ComposeOptions, GenomeLayout, ModuleKind};

/// Replaces one gene's domain in the standard layout.
#[derive(Debug, Clone, PartialEq)]
pub struct DomainOverride {
    pub kind: ModuleKind,
    pub gene: String,
    pub lo: i64,
    pub hi: i64,
}

impl DomainOverride {
    pub fn new(kind: ModuleKind, gene: &str, lo: i64, hi: i64) -> Self {
        DomainOverride { kind, gene: gene.to_string(), lo, hi }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub link: LinkConfig,
    /// Traffic of each flow.
    pub source: SourceProfile,
    pub flows: u16,
    /// Phy-layer rate target, B/s.
    pub target: f64,
    /// Requested trial length, s.
    pub duration: f64,
    /// Shortest measurement span after the settle window, s.
    pub min_measure: f64,
    /// Settle window used when no CRC is on the path, s.
    pub warmup: f64,
    /// Relative distance from steady state that ends the settle window.
    pub settle_tolerance: f64,
    /// Frames sent in the last `drain` seconds are left out of the
    /// delivery ratio.
    pub drain: f64,
    pub compose: ComposeOptions,
    pub evolution: EvolutionConfig,
    pub fitness: FitnessSpec,
    pub domains: Vec<DomainOverride>,
}

impl Scenario {
    pub fn layout(&self) -> Result<GenomeLayout, SimError> {
        let mut l = GenomeLayout::standard();
        for d in &self.domains {
            l.set_domain(d.kind, &d.gene, d.lo, d.hi).map_err(|e| SimError::Config(e.to_string()))?;
        }
        Ok(l)
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let cfg = |m: &str| Err(SimError::Config(m.to_string()));
        self.source.validate().map_err(|e| SimError::Config(e.to_string()))?;
        self.evolution.validate().map_err(|e| SimError::Config(e.to_string()))?;
        self.layout()?;
        let l = &self.link;
        if !(l.bandwidth > 0.0 && l.bandwidth.is_finite()) || !(l.delay >= 0.0) || !(0.0..=1.0).contains(&l.loss) {
            return cfg("link needs bandwidth > 0, delay >= 0 and loss in [0, 1]");
        }
        if l.queue_limit == 0 {
            return cfg("link.queue_limit must be positive");
        }
        if let Some(c) = &l.cross_traffic {
            if !(c.mean_rate > 0.0) || !(c.mean_on > 0.0) || c.frame_len == 0 || !(c.burstiness >= 1.0) {
                return cfg("cross traffic needs mean_rate > 0, mean_on > 0, frame_len > 0, burstiness >= 1");
            }
        }
        if !(self.target > 0.0 && self.target < l.bandwidth) {
            return cfg("target must lie in (0, link bandwidth)");
        }
        if self.flows == 0 {
            return cfg("flows must be at least 1");
        }
        if !(self.duration > 0.0) || !(self.min_measure > 0.0) || !(self.warmup >= 0.0) || !(self.drain >= 0.0) {
            return cfg("durations must be positive");
        }
        if self.drain >= self.min_measure {
            return cfg("drain must be shorter than min_measure");
        }
        if !(self.settle_tolerance > 0.0 && self.settle_tolerance < 1.0) {
            return cfg("settle_tolerance must lie in (0, 1)");
        }
        let c = &self.compose;
        if !(c.k1 > 0.0 && c.k2 > 0.0 && c.sensor_window > 0.0) || c.tcp_window == 0 {
            return cfg("k1, k2, sensor_window and tcp_window must be positive");
        }
        match self.fitness.variant {
            FitnessVariant::RateTarget { sigma, .. } if !(sigma > 0.0) => cfg("fitness sigma must be positive"),
            FitnessVariant::ConstancyDelay { d_ref, .. } if !(d_ref > 0.0) => cfg("fitness d_ref must be positive"),
            _ => Ok(()),
        }
    }

    /// Single bursty flow, rate-target fitness.
    pub fn e1() -> Self {
        let target = 50_000.0;
        let k2 = 1.0;
        Scenario {
            name: "e1".into(),
            link: LinkConfig::default(),
            source: SourceProfile {
                mean_rate: 100_000.0,
                peak_rate: 200_000.0,
                payload_len: 1000,
                shape: BurstShape::Download { file_size: 400_000.0 },
            },
            flows: 1,
            target,
            duration: 30.0,
            min_measure: 20.0,
            warmup: 2.0,
            settle_tolerance: 0.05,
            drain: 0.5,
            compose: ComposeOptions { k1: 1.0, k2, crc_mode: SchedulerMode::Deterministic, ..Default::default() },
            evolution: EvolutionConfig::default(),
            fitness: FitnessSpec::rate_target(target),
            domains: alloc::vec![
                e0_override(target, k2, 1000),
                DomainOverride::new(ModuleKind::Crc, "k_f", 28, 28),
            ],
        }
    }

    /// E1 with bursty cross-traffic at a fifth of the link bandwidth.
    pub fn e1_cross() -> Self {
        let mut s = Self::e1();
        s.name = "e1-cross".into();
        s.link.cross_traffic = Some(CrossTrafficProfile {
            mean_rate: 0.2 * s.link.bandwidth,
            burstiness: 8.0,
            mean_on: 0.2,
            frame_len: 1000,
        });
        s
    }

    /// Two concurrent flows sharing the target.
    pub fn e2() -> Self {
        let mut s = Self::e1();
        s.name = "e2".into();
        s.flows = 2;
        s.source.mean_rate = 50_000.0;
        s.source.peak_rate = 100_000.0;
        s
    }

    /// Fixed CRC over IPv4; `k_F` evolves under the constancy-delay
    /// fitness.
    pub fn e3() -> Self {
        let mut s = Self::e1();
        s.name = "e3".into();
        s.source = SourceProfile {
            mean_rate: 40_000.0,
            peak_rate: 80_000.0,
            payload_len: 1000,
            shape: BurstShape::Exponential { mean_on: 1.0 },
        };
        s.duration = 90.0;
        s.min_measure = 60.0;
        s.compose.crc_mode = SchedulerMode::Stochastic;
        s.fitness = FitnessSpec::constancy_delay(1.0, 1.0, 10.0);
        s.domains = alloc::vec![
            DomainOverride::new(ModuleKind::PubSub, "to", 0, 0),
            DomainOverride::new(ModuleKind::Crc, "present", 1, 1),
            DomainOverride::new(ModuleKind::Crc, "e0", 100, 100),
            DomainOverride::new(ModuleKind::Crc, "k_f", 8, 28),
            DomainOverride::new(ModuleKind::Ipv4, "present", 1, 1),
            DomainOverride::new(ModuleKind::Udp, "present", 0, 0),
            DomainOverride::new(ModuleKind::Tcp, "present", 0, 0),
        ];
        s
    }

    pub fn preset(name: &str) -> Option<Self> {
        match name {
            "e1" => Some(Self::e1()),
            "e1-cross" => Some(Self::e1_cross()),
            "e2" => Some(Self::e2()),
            "e3" => Some(Self::e3()),
            _ => None,
        }
    }
}

/// `e0` range bracketing the target for every header combination the
/// layout can produce: from the heaviest path (Ethernet, IPv4, TCP with
/// timestamps, UDP) to a bare payload.
pub fn e0_override(target: f64, k2: f64, payload: u32) -> DomainOverride {
    use crate::proto::{ETHERNET_HEADER, IPV4_HEADER, TCP_HEADER, TCP_TIMESTAMP_OPTION, UDP_HEADER};
    let heaviest = payload + ETHERNET_HEADER + IPV4_HEADER + TCP_HEADER + TCP_TIMESTAMP_OPTION + UDP_HEADER;
    let lo = crate::math::floor(target / (k2 * f64::from(heaviest))).max(1.0) as i64;
    let hi = crate::math::ceil(target / (k2 * f64::from(payload))) as i64;
    DomainOverride::new(ModuleKind::Crc, "e0", lo, hi.max(lo))
}
