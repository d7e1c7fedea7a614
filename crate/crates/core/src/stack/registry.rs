use core::fmt;
use core::str::FromStr;

use crate::math;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ModuleKind {
    PubSub,
    Crc,
    Ipv4,
    Udp,
    Tcp,
    Ethernet,
}

impl ModuleKind {
    pub const ALL: [ModuleKind; 6] = [
        ModuleKind::PubSub,
        ModuleKind::Crc,
        ModuleKind::Ipv4,
        ModuleKind::Udp,
        ModuleKind::Tcp,
        ModuleKind::Ethernet,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ModuleKind::PubSub => "pubsub",
            ModuleKind::Crc => "crc",
            ModuleKind::Ipv4 => "ipv4",
            ModuleKind::Udp => "udp",
            ModuleKind::Tcp => "tcp",
            ModuleKind::Ethernet => "ethernet",
        }
    }

    pub fn spec(self) -> &'static ModuleSpec {
        REGISTRY.iter().find(|s| s.kind == self).expect("every kind is registered")
    }
}

impl fmt::Display for ModuleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModuleKind {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        ModuleKind::ALL.into_iter().find(|k| k.name() == s).ok_or(())
    }
}

/// Service-interface tags used for connector matching.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Service {
    App,
    Transport,
    Net,
    Link,
    /// Matches every service except `App`.
    Any,
}

impl Service {
    pub fn accepts(self, provided: Service) -> bool {
        match self {
            Service::Any => provided != Service::App,
            s => s == provided,
        }
    }
}

impl fmt::Display for Service {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Service::App => "app",
            Service::Transport => "transport",
            Service::Net => "net",
            Service::Link => "link",
            Service::Any => "any",
        };
        f.write_str(s)
    }
}

/// Maps an integer gene onto the control's parameter space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Mapping {
    Identity,
    /// `0` disables the control; `g ≥ 1` maps to
    /// `anchor · 10^((g − anchor_gene) / steps_per_decade)` clamped to
    /// `[min, max]`.
    LogScale { anchor: f64, anchor_gene: i64, steps_per_decade: f64, min: f64, max: f64 },
}

impl Mapping {
    pub fn apply(&self, gene: i64) -> f64 {
        match *self {
            Mapping::Identity => gene as f64,
            Mapping::LogScale { anchor, anchor_gene, steps_per_decade, min, max } => {
                if gene <= 0 {
                    0.0
                } else {
                    let v = anchor * math::pow(10.0, (gene - anchor_gene) as f64 / steps_per_decade);
                    v.clamp(min, max)
                }
            }
        }
    }

    /// Smallest gene whose value is at least `value` (inverse for grid
    /// points).
    pub fn gene_for(&self, value: f64, lo: i64, hi: i64) -> i64 {
        (lo..=hi)
            .min_by(|a, b| {
                let da = (self.apply(*a) - value).abs();
                let db = (self.apply(*b) - value).abs();
                da.total_cmp(&db)
            })
            .unwrap_or(lo)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlSpec {
    pub name: &'static str,
    pub lo: i64,
    pub hi: i64,
    pub mapping: Mapping,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModuleSpec {
    pub kind: ModuleKind,
    pub provides: Service,
    pub requires: &'static [Service],
    pub controls: &'static [ControlSpec],
    pub sensors: &'static [&'static str],
}

pub const K_F_MAPPING: Mapping = Mapping::LogScale {
    anchor: 0.05,
    anchor_gene: 8,
    steps_per_decade: 10.0,
    min: 0.01,
    max: 10.0,
};

pub static REGISTRY: [ModuleSpec; 6] = [
    ModuleSpec {
        kind: ModuleKind::PubSub,
        provides: Service::App,
        requires: &[Service::Any],
        controls: &[],
        sensors: &["app_rate"],
    },
    ModuleSpec {
        kind: ModuleKind::Crc,
        provides: Service::Net,
        requires: &[Service::Net],
        controls: &[
            ControlSpec { name: "e0", lo: 1, hi: 10_000, mapping: Mapping::Identity },
            ControlSpec { name: "k_f", lo: 0, hi: 31, mapping: K_F_MAPPING },
        ],
        sensors: &["queue_len", "in_rate", "out_rate", "mean_delay"],
    },
    ModuleSpec {
        kind: ModuleKind::Ipv4,
        provides: Service::Net,
        requires: &[Service::Link],
        controls: &[],
        sensors: &[],
    },
    ModuleSpec {
        kind: ModuleKind::Udp,
        provides: Service::Transport,
        requires: &[Service::Net],
        controls: &[],
        sensors: &[],
    },
    ModuleSpec {
        kind: ModuleKind::Tcp,
        provides: Service::Transport,
        requires: &[Service::Net],
        controls: &[
            // 0 cumulative, 1 selective
            ControlSpec { name: "ack", lo: 0, hi: 1, mapping: Mapping::Identity },
            // 0 off, 1 timeout
            ControlSpec { name: "retx", lo: 0, hi: 1, mapping: Mapping::Identity },
            ControlSpec { name: "ts", lo: 0, hi: 1, mapping: Mapping::Identity },
        ],
        sensors: &["srtt"],
    },
    ModuleSpec {
        kind: ModuleKind::Ethernet,
        provides: Service::Link,
        requires: &[],
        controls: &[],
        sensors: &["phy_rate"],
    },
];

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registry_domains_nonempty() {
        for s in REGISTRY.iter() {
            for c in s.controls {
                assert!(c.lo <= c.hi, "{}", c.name);
            }
        }
    }

    #[test]
    fn k_f_mapping_grid() {
        assert_eq!(K_F_MAPPING.apply(0), 0.0);
        assert!((K_F_MAPPING.apply(8) - 0.05).abs() < 1e-12);
        assert!((K_F_MAPPING.apply(18) - 0.5).abs() < 1e-12);
        assert!((K_F_MAPPING.apply(28) - 5.0).abs() < 1e-12);
        assert_eq!(K_F_MAPPING.apply(1), 0.01);
        assert!(K_F_MAPPING.apply(31) <= 10.0);
        assert_eq!(K_F_MAPPING.gene_for(5.0, 0, 31), 28);
    }

    #[test]
    fn any_excludes_app() {
        assert!(Service::Any.accepts(Service::Net));
        assert!(!Service::Any.accepts(Service::App));
        assert!(!Service::Net.accepts(Service::Link));
    }

    #[test]
    fn kind_names_roundtrip() {
        for k in ModuleKind::ALL {
            assert_eq!(k.name().parse::<ModuleKind>(), Ok(k));
        }
    }
}
