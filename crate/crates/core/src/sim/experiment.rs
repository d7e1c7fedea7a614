use alloc::string::ToString;
use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::scenario::Scenario;
use super::world::{run_trial, splitmix, TrialSeeds};
use super::SimError;
use crate::evolution::{evolve, fitness, GenerationRecord};
use crate::stack::{Genome, GenomeLayout, ModuleKind, PersistentStore, TrialRecord};

/// Everything one evolutionary run produced.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub seed: u64,
    pub layout: GenomeLayout,
    pub history: Vec<GenerationRecord>,
    /// One record per trial, in generation then genome order.
    pub records: Vec<TrialRecord>,
}

impl Experiment {
    pub fn best_curve(&self) -> Vec<f64> {
        self.history.iter().map(GenerationRecord::best_fitness).collect()
    }

    /// Fitness of [`known_optimum`] on this run's first-generation traffic.
    pub fn reference_fitness(&self, scenario: &Scenario) -> Result<f64, SimError> {
        let g = known_optimum(scenario)?;
        let seeds = TrialSeeds::derive(self.seed, 1, 0);
        Ok(score_trial(scenario, &self.layout, &g, &mut PersistentStore::new(), seeds).fitness)
    }

    /// Best fitness per generation divided by [`Self::reference_fitness`].
    pub fn normalized_curve(&self, scenario: &Scenario) -> Result<Vec<f64>, SimError> {
        let r = self.reference_fitness(scenario)?;
        if !(r > 0.0) {
            return Err(SimError::Runtime("reference stack scored zero".to_string()));
        }
        Ok(self.best_curve().iter().map(|f| f / r).collect())
    }

    /// Longest span of consecutive generations whose first slot holds the
    /// same genome, with that genome's fitness in each. Slot 0 carries the
    /// elite from generation 2 on.
    pub fn elite_stretch(&self) -> Option<(&Genome, Vec<f64>)> {
        let mut best: Option<(usize, usize)> = None;
        let mut start = 0;
        for g in 1..=self.history.len() {
            let ends = g == self.history.len() || self.history[g].population[0] != self.history[start].population[0];
            if ends {
                if best.is_none_or(|(s, e)| g - start > e - s) {
                    best = Some((start, g));
                }
                start = g;
            }
        }
        let (s, e) = best?;
        let series = self.history[s..e].iter().map(|h| h.fitness[0]).collect();
        Some((&self.history[s].population[0], series))
    }

    pub fn final_best(&self) -> Option<&TrialRecord> {
        let last = self.history.last()?;
        let g = self.history.len();
        self.records.iter().find(|r| r.generation == g && r.index == last.best)
    }
}

/// Runs one trial and scores it. Records that cannot be scored get fitness 0.
pub fn score_trial(
    scenario: &Scenario,
    layout: &GenomeLayout,
    genome: &Genome,
    store: &mut PersistentStore,
    seeds: TrialSeeds,
) -> TrialRecord {
    let (mut rec, _) = run_trial(scenario, layout, genome, store, seeds);
    rec.fitness = if rec.invalid.is_some() { 0.0 } else { fitness(&rec, &scenario.fitness).unwrap_or(0.0) };
    rec
}

/// The evolutionary experiment for `scenario` under `seed`.
pub fn run_experiment(scenario: &Scenario, seed: u64) -> Result<Experiment, SimError> {
    scenario.validate()?;
    let layout = scenario.layout()?;
    let mut ga_rng = ChaCha8Rng::seed_from_u64(splitmix(seed));
    let mut store = PersistentStore::new();
    let mut records = Vec::new();
    let history = evolve(&layout, &scenario.evolution, None, &mut ga_rng, |generation, population| {
        population
            .iter()
            .enumerate()
            .map(|(index, genome)| {
                let seeds = TrialSeeds::derive(seed, generation, index);
                let mut rec = score_trial(scenario, &layout, genome, &mut store, seeds);
                rec.generation = generation;
                rec.index = index;
                let f = rec.fitness;
                records.push(rec);
                f
            })
            .collect()
    })
    .map_err(|e| SimError::Runtime(e.to_string()))?;
    Ok(Experiment { seed, layout, history, records })
}

/// A single trial of a fixed genome.
pub fn replay(scenario: &Scenario, genome: &Genome, seed: u64) -> Result<TrialRecord, SimError> {
    scenario.validate()?;
    let layout = scenario.layout()?;
    layout.check(genome).map_err(|e| SimError::Config(e.to_string()))?;
    Ok(score_trial(scenario, &layout, genome, &mut PersistentStore::new(), TrialSeeds::single(seed)))
}

/// Hand-configured best stack: CRC over IPv4, with UDP on top when flows
/// must be told apart. `e0` is the domain value with the highest mean
/// fitness over a few replays, since idle source periods drain the CRC and
/// push the best `e0` slightly above `target / (k2 * wire)`.
pub fn known_optimum(scenario: &Scenario) -> Result<Genome, SimError> {
    let layout = scenario.layout()?;
    let mut g = Genome(layout.chromosomes().iter().map(|c| c.genes.iter().map(|s| s.lo).collect()).collect());
    let udp = scenario.flows > 1;
    let set = |g: &mut Genome, kind, name: &str, v: i64| -> Result<(), SimError> {
        let spec = layout.gene(kind, name).ok_or_else(|| SimError::Config(alloc::format!("{kind}.{name}")))?;
        let v = v.clamp(spec.lo, spec.hi);
        layout.set_value(g, kind, name, v).map_err(|e| SimError::Config(e.to_string()))
    };
    set(&mut g, ModuleKind::Crc, "present", 1)?;
    set(&mut g, ModuleKind::Ipv4, "present", 1)?;
    set(&mut g, ModuleKind::Udp, "present", i64::from(udp))?;
    set(&mut g, ModuleKind::Tcp, "present", 0)?;
    // Pubsub providers in layout order: crc, ipv4, [udp], ethernet.
    set(&mut g, ModuleKind::PubSub, "to", if udp { 2 } else { 0 })?;
    // Net providers for crc: ipv4 only. For udp: crc, ipv4.
    set(&mut g, ModuleKind::Crc, "to", 0)?;
    set(&mut g, ModuleKind::Udp, "to", 0)?;
    let e0 = layout.gene(ModuleKind::Crc, "e0").expect("crc e0 gene");
    let mut best = (f64::NEG_INFINITY, e0.lo);
    for v in e0.lo..=e0.hi {
        set(&mut g, ModuleKind::Crc, "e0", v)?;
        let f = mean_fitness(scenario, &layout, &g, OPTIMUM_SEEDS)?;
        if f > best.0 {
            best = (f, v);
        }
    }
    set(&mut g, ModuleKind::Crc, "e0", best.1)?;
    Ok(g)
}

const OPTIMUM_SEEDS: core::ops::Range<u64> = 0..3;

fn mean_fitness(
    scenario: &Scenario,
    layout: &GenomeLayout,
    g: &Genome,
    seeds: impl IntoIterator<Item = u64>,
) -> Result<f64, SimError> {
    let fs: Vec<f64> = seeds
        .into_iter()
        .map(|s| score_trial(scenario, layout, g, &mut PersistentStore::new(), TrialSeeds::single(s)).fitness)
        .collect();
    crate::math::mean(&fs).ok_or_else(|| SimError::Config("no seeds".to_string()))
}

/// Mean fitness of [`known_optimum`] over `seeds`; the normalization
/// constant for convergence curves.
pub fn optimum_fitness(scenario: &Scenario, seeds: impl IntoIterator<Item = u64>) -> Result<f64, SimError> {
    let g = known_optimum(scenario)?;
    mean_fitness(scenario, &scenario.layout()?, &g, seeds)
}
