//! Versioned TOML scenario files.
//!
//! A file names a built-in preset as its `base` and overrides any subset of
//! its fields. Unknown keys, unknown presets and unsupported versions are
//! errors.
//!
//! ```toml
//! version = 1
//! base = "e1"
//!
//! [link]
//! delay = 0.01
//!
//! [link.cross_traffic]
//! mean_rate = 200000.0
//! burstiness = 8.0
//!
//! [[domain]]
//! module = "crc"
//! gene = "k_f"
//! lo = 8
//! hi = 28
//! ```

use std::path::Path;

use chemstack_core::chem::SchedulerMode;
use chemstack_core::evolution::{FitnessSpec, FitnessVariant};
use chemstack_core::proto::{BurstShape, CrossTrafficProfile};
use chemstack_core::sim::{DomainOverride, Scenario};
use chemstack_core::stack::ModuleKind;
use serde::Deserialize;

use crate::Error;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub version: u32,
    pub base: String,
    pub name: Option<String>,
    #[serde(default)]
    pub link: LinkSection,
    #[serde(default)]
    pub source: SourceSection,
    #[serde(default)]
    pub trial: TrialSection,
    #[serde(default)]
    pub stack: StackSection,
    #[serde(default)]
    pub evolution: EvolutionSection,
    pub fitness: Option<FitnessSection>,
    /// Appended to the preset's overrides; later entries win.
    #[serde(default)]
    pub domain: Vec<DomainSection>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkSection {
    pub delay: Option<f64>,
    pub bandwidth: Option<f64>,
    pub loss: Option<f64>,
    pub queue_limit: Option<u64>,
    pub cross_traffic: Option<CrossSection>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CrossSection {
    /// `false` removes cross-traffic inherited from the base.
    #[serde(default = "yes")]
    pub enabled: bool,
    pub mean_rate: Option<f64>,
    pub burstiness: Option<f64>,
    pub mean_on: Option<f64>,
    pub frame_len: Option<u32>,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceSection {
    pub mean_rate: Option<f64>,
    pub peak_rate: Option<f64>,
    pub payload_len: Option<u32>,
    pub shape: Option<ShapeSection>,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ShapeSection {
    Exponential { mean_on: f64 },
    Download { file_size: f64 },
    Constant {},
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrialSection {
    pub flows: Option<u16>,
    pub target: Option<f64>,
    pub duration: Option<f64>,
    pub min_measure: Option<f64>,
    pub warmup: Option<f64>,
    pub settle_tolerance: Option<f64>,
    pub drain: Option<f64>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Stochastic,
    Deterministic,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StackSection {
    pub k1: Option<f64>,
    pub k2: Option<f64>,
    pub crc_mode: Option<Mode>,
    pub sensor_window: Option<f64>,
    pub tcp_window: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolutionSection {
    pub population_size: Option<usize>,
    pub elite_size: Option<usize>,
    pub crossover_p: Option<f64>,
    pub mutation_p: Option<f64>,
    pub generations: Option<usize>,
}

/// Replaces the base fitness. A missing `sigma` is 5% of the target; a
/// missing rate-target `target` is the trial target.
#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum FitnessSection {
    RateTarget {
        target: Option<f64>,
        sigma: Option<f64>,
        w_delivery: Option<f64>,
        w_efficiency: Option<f64>,
        efficiency_reference: Option<f64>,
    },
    ConstancyDelay {
        w_var: f64,
        w_delay: f64,
        d_ref: f64,
        w_delivery: Option<f64>,
        w_efficiency: Option<f64>,
        efficiency_reference: Option<f64>,
    },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSection {
    pub module: String,
    pub gene: String,
    pub lo: i64,
    pub hi: i64,
}

fn set<T>(slot: &mut T, v: Option<T>) {
    if let Some(v) = v {
        *slot = v;
    }
}

impl ScenarioFile {
    pub fn parse(text: &str) -> Result<Self, Error> {
        let file: ScenarioFile = toml::from_str(text).map_err(|e| Error::Config(format!("scenario: {e}")))?;
        if file.version != SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "scenario: unsupported version {} (expected {SCHEMA_VERSION})",
                file.version
            )));
        }
        Ok(file)
    }

    pub fn into_scenario(self) -> Result<Scenario, Error> {
        let mut s = Scenario::preset(&self.base)
            .ok_or_else(|| Error::Config(format!("scenario: unknown base `{}` (e1, e1-cross, e2, e3)", self.base)))?;
        set(&mut s.name, self.name);

        let l = self.link;
        set(&mut s.link.delay, l.delay);
        set(&mut s.link.bandwidth, l.bandwidth);
        set(&mut s.link.loss, l.loss);
        set(&mut s.link.queue_limit, l.queue_limit);
        if let Some(c) = l.cross_traffic {
            if c.enabled {
                let mut p = s.link.cross_traffic.unwrap_or(CrossTrafficProfile {
                    mean_rate: 0.2 * s.link.bandwidth,
                    burstiness: 8.0,
                    mean_on: 0.2,
                    frame_len: 1000,
                });
                set(&mut p.mean_rate, c.mean_rate);
                set(&mut p.burstiness, c.burstiness);
                set(&mut p.mean_on, c.mean_on);
                set(&mut p.frame_len, c.frame_len);
                s.link.cross_traffic = Some(p);
            } else {
                s.link.cross_traffic = None;
            }
        }

        let src = self.source;
        set(&mut s.source.mean_rate, src.mean_rate);
        set(&mut s.source.peak_rate, src.peak_rate);
        set(&mut s.source.payload_len, src.payload_len);
        if let Some(shape) = src.shape {
            s.source.shape = match shape {
                ShapeSection::Exponential { mean_on } => BurstShape::Exponential { mean_on },
                ShapeSection::Download { file_size } => BurstShape::Download { file_size },
                ShapeSection::Constant {} => BurstShape::Constant,
            };
        }

        let t = self.trial;
        let target_changed = t.target.is_some();
        set(&mut s.flows, t.flows);
        set(&mut s.target, t.target);
        set(&mut s.duration, t.duration);
        set(&mut s.min_measure, t.min_measure);
        set(&mut s.warmup, t.warmup);
        set(&mut s.settle_tolerance, t.settle_tolerance);
        set(&mut s.drain, t.drain);

        let st = self.stack;
        set(&mut s.compose.k1, st.k1);
        set(&mut s.compose.k2, st.k2);
        set(&mut s.compose.sensor_window, st.sensor_window);
        set(&mut s.compose.tcp_window, st.tcp_window);
        if let Some(m) = st.crc_mode {
            s.compose.crc_mode = match m {
                Mode::Stochastic => SchedulerMode::Stochastic,
                Mode::Deterministic => SchedulerMode::Deterministic,
            };
        }

        let e = self.evolution;
        set(&mut s.evolution.population_size, e.population_size);
        set(&mut s.evolution.elite_size, e.elite_size);
        set(&mut s.evolution.crossover_p, e.crossover_p);
        set(&mut s.evolution.mutation_p, e.mutation_p);
        set(&mut s.evolution.generations, e.generations);

        match self.fitness {
            Some(FitnessSection::RateTarget { target, sigma, w_delivery, w_efficiency, efficiency_reference }) => {
                let target = target.unwrap_or(s.target);
                let mut f = FitnessSpec::rate_target(target);
                if let Some(sigma) = sigma {
                    f.variant = FitnessVariant::RateTarget { target, sigma };
                }
                set(&mut f.w_delivery, w_delivery);
                set(&mut f.w_efficiency, w_efficiency);
                set(&mut f.efficiency_reference, efficiency_reference);
                s.fitness = f;
            }
            Some(FitnessSection::ConstancyDelay {
                w_var,
                w_delay,
                d_ref,
                w_delivery,
                w_efficiency,
                efficiency_reference,
            }) => {
                let mut f = FitnessSpec::constancy_delay(w_var, w_delay, d_ref);
                set(&mut f.w_delivery, w_delivery);
                set(&mut f.w_efficiency, w_efficiency);
                set(&mut f.efficiency_reference, efficiency_reference);
                s.fitness = f;
            }
            None if target_changed => {
                if let FitnessVariant::RateTarget { .. } = s.fitness.variant {
                    let keep = s.fitness;
                    s.fitness = FitnessSpec { variant: FitnessSpec::rate_target(s.target).variant, ..keep };
                }
            }
            None => {}
        }

        for d in self.domain {
            let kind: ModuleKind = d
                .module
                .parse()
                .map_err(|_| Error::Config(format!("scenario: unknown module `{}` in [[domain]]", d.module)))?;
            s.domains.push(DomainOverride::new(kind, &d.gene, d.lo, d.hi));
        }

        s.validate().map_err(|e| Error::Config(e.to_string()))?;
        Ok(s)
    }
}

/// Loads a scenario from a TOML file, or a preset when `path` names one.
pub fn load_scenario(path: &Path) -> Result<Scenario, Error> {
    if !path.exists() {
        if let Some(s) = path.to_str().and_then(Scenario::preset) {
            return Ok(s);
        }
    }
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read scenario {}: {e}", path.display())))?;
    ScenarioFile::parse(&text)?.into_scenario()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn load(text: &str) -> Result<Scenario, Error> {
        ScenarioFile::parse(text)?.into_scenario()
    }

    #[test]
    fn bare_base_equals_preset() {
        for base in ["e1", "e1-cross", "e2", "e3"] {
            let s = load(&format!("version = 1\nbase = \"{base}\"\n")).unwrap();
            assert_eq!(s, Scenario::preset(base).unwrap());
        }
    }

    #[test]
    fn unknown_keys_are_rejected() {
        for text in [
            "version = 1\nbase = \"e1\"\ncolour = 3\n",
            "version = 1\nbase = \"e1\"\n[link]\nlatency = 0.1\n",
            "version = 1\nbase = \"e1\"\n[source.shape]\nkind = \"constant\"\nmean_on = 1.0\n",
        ] {
            let e = load(text).unwrap_err();
            assert!(matches!(e, Error::Config(_)), "{e}");
        }
    }

    #[test]
    fn version_and_base_are_checked() {
        assert!(load("version = 2\nbase = \"e1\"\n").unwrap_err().to_string().contains("version"));
        assert!(load("base = \"e1\"\n").is_err());
        assert!(load("version = 1\nbase = \"e9\"\n").unwrap_err().to_string().contains("e9"));
    }

    #[test]
    fn overrides_apply() {
        let s = load(
            r#"
version = 1
base = "e1"
name = "slow"
[link]
delay = 0.05
[link.cross_traffic]
mean_rate = 1000.0
[source.shape]
kind = "exponential"
mean_on = 0.5
[trial]
target = 40000.0
[stack]
crc_mode = "stochastic"
[evolution]
generations = 5
[[domain]]
module = "crc"
gene = "k_f"
lo = 8
hi = 28
"#,
        )
        .unwrap();
        assert_eq!(s.name, "slow");
        assert_eq!(s.link.delay, 0.05);
        let c = s.link.cross_traffic.unwrap();
        assert_eq!((c.mean_rate, c.frame_len), (1000.0, 1000));
        assert_eq!(s.source.shape, BurstShape::Exponential { mean_on: 0.5 });
        assert_eq!(s.fitness.variant, FitnessVariant::RateTarget { target: 40000.0, sigma: 2000.0 });
        assert_eq!(s.compose.crc_mode, SchedulerMode::Stochastic);
        assert_eq!(s.evolution.generations, 5);
        let k_f = s.layout().unwrap().gene(ModuleKind::Crc, "k_f").unwrap().clone();
        assert_eq!((k_f.lo, k_f.hi), (8, 28));
    }

    #[test]
    fn cross_traffic_can_be_removed() {
        let s = load("version = 1\nbase = \"e1-cross\"\n[link.cross_traffic]\nenabled = false\n").unwrap();
        assert_eq!(s.link.cross_traffic, None);
    }

    #[test]
    fn invalid_values_are_config_errors() {
        let e = load("version = 1\nbase = \"e1\"\n[trial]\ntarget = 5e6\n").unwrap_err();
        assert!(matches!(e, Error::Config(_)));
        let e = load("version = 1\nbase = \"e1\"\n[[domain]]\nmodule = \"crc\"\ngene = \"nope\"\nlo = 0\nhi = 1\n")
            .unwrap_err();
        assert!(matches!(e, Error::Config(_)));
    }
}
