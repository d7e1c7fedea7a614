//! Genetic search over stack genomes: mutation, roulette selection,
//! midpoint crossover, elitism, and the fitness functions.

mod fitness;

pub use fitness::{fitness, fitness_constancy_delay, fitness_rate_target, FitnessError, FitnessSpec, FitnessVariant};

use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::math;
use crate::stack::{GeneSpec, Genome, GenomeLayout};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EvolutionError {
    #[error("elite_size ({elite}) must be below population_size ({population})")]
    EliteTooLarge { elite: usize, population: usize },
    #[error("{0} must lie in [0, 1]")]
    Probability(&'static str),
    #[error("population_size must be positive")]
    EmptyPopulation,
    #[error("trial evaluator returned {got} fitness values for {expected} genomes")]
    FitnessCount { expected: usize, got: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvolutionConfig {
    pub population_size: usize,
    pub elite_size: usize,
    pub crossover_p: f64,
    pub mutation_p: f64,
    pub generations: usize,
}

impl Default for EvolutionConfig {
    fn default() -> Self {
        EvolutionConfig { population_size: 3, elite_size: 1, crossover_p: 0.1, mutation_p: 0.9, generations: 25 }
    }
}

impl EvolutionConfig {
    pub fn validate(&self) -> Result<(), EvolutionError> {
        if self.population_size == 0 {
            return Err(EvolutionError::EmptyPopulation);
        }
        if self.elite_size >= self.population_size {
            return Err(EvolutionError::EliteTooLarge { elite: self.elite_size, population: self.population_size });
        }
        let unit = |p: f64| (0.0..=1.0).contains(&p);
        if !unit(self.crossover_p) {
            return Err(EvolutionError::Probability("crossover_p"));
        }
        if !unit(self.mutation_p) {
            return Err(EvolutionError::Probability("mutation_p"));
        }
        Ok(())
    }
}

/// Draws from `Normal(prev, |A|/2)`, rounds, then clips to the domain.
pub fn mutate_gene<R: Rng + ?Sized>(prev: i64, gene: &GeneSpec, rng: &mut R) -> i64 {
    let sigma = gene.width() as f64 / 2.0;
    if sigma <= 0.0 {
        return gene.lo;
    }
    let d = Normal::new(prev as f64, sigma).expect("positive sigma");
    let v = math::round(d.sample(rng));
    (v.clamp(gene.lo as f64, gene.hi as f64)) as i64
}

/// Two independent fitness-proportional draws. Uniform when all fitness is
/// zero.
pub fn select_parents<R: Rng + ?Sized>(fitness: &[f64], rng: &mut R) -> (usize, usize) {
    (roulette(fitness, rng), roulette(fitness, rng))
}

fn roulette<R: Rng + ?Sized>(fitness: &[f64], rng: &mut R) -> usize {
    let total: f64 = fitness.iter().map(|f| f.max(0.0)).sum();
    if total <= 0.0 || !total.is_finite() {
        return rng.random_range(0..fitness.len());
    }
    let mut x = rng.random::<f64>() * total;
    for (i, f) in fitness.iter().enumerate() {
        let f = f.max(0.0);
        if x < f {
            return i;
        }
        x -= f;
    }
    // Rounding left `x` at the top edge; take the last positive entry.
    fitness.iter().rposition(|f| *f > 0.0).unwrap_or(0)
}

/// Copies genes chromosome by chromosome from a current parent, switching
/// parents with probability `crossover_p` at each chromosome midpoint, then
/// mutates each gene with probability `mutation_p`.
pub fn recombine<R: Rng + ?Sized>(
    layout: &GenomeLayout,
    a: &Genome,
    b: &Genome,
    cfg: &EvolutionConfig,
    rng: &mut R,
) -> Genome {
    let parents = [a, b];
    let mut cur = 0;
    let mut child = Vec::with_capacity(layout.chromosomes().len());
    for (ci, c) in layout.chromosomes().iter().enumerate() {
        let n = c.genes.len();
        let mid = n / 2;
        let mut genes = Vec::with_capacity(n);
        for gi in 0..n {
            if gi == mid && rng.random_bool(cfg.crossover_p) {
                cur = 1 - cur;
            }
            genes.push(parents[cur].0[ci][gi]);
        }
        child.push(genes);
    }
    for (ci, c) in layout.chromosomes().iter().enumerate() {
        for (gi, g) in c.genes.iter().enumerate() {
            if rng.random_bool(cfg.mutation_p) {
                child[ci][gi] = mutate_gene(child[ci][gi], g, rng);
            }
        }
    }
    Genome(child)
}

/// Indices sorted by fitness, best first; ties keep the lower index first.
pub fn ranking(fitness: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..fitness.len()).collect();
    idx.sort_by(|&i, &j| fitness[j].total_cmp(&fitness[i]).then(i.cmp(&j)));
    idx
}

/// Elite copied unmodified into the first slots; children fill the rest.
pub fn next_generation<R: Rng + ?Sized>(
    layout: &GenomeLayout,
    population: &[Genome],
    fitness: &[f64],
    cfg: &EvolutionConfig,
    rng: &mut R,
) -> Vec<Genome> {
    let mut next: Vec<Genome> = ranking(fitness).into_iter().take(cfg.elite_size).map(|i| population[i].clone()).collect();
    while next.len() < cfg.population_size {
        let (i, j) = select_parents(fitness, rng);
        next.push(recombine(layout, &population[i], &population[j], cfg, rng));
    }
    next
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenerationRecord {
    pub population: Vec<Genome>,
    pub fitness: Vec<f64>,
    /// Index of the best genome in this generation.
    pub best: usize,
}

impl GenerationRecord {
    pub fn best_fitness(&self) -> f64 {
        self.fitness[self.best]
    }

    pub fn best_genome(&self) -> &Genome {
        &self.population[self.best]
    }
}

/// Runs the generation loop. `evaluate(generation, population)` returns one
/// fitness per genome; generations count from 1.
pub fn evolve<R: Rng + ?Sized>(
    layout: &GenomeLayout,
    cfg: &EvolutionConfig,
    initial: Option<Vec<Genome>>,
    rng: &mut R,
    mut evaluate: impl FnMut(usize, &[Genome]) -> Vec<f64>,
) -> Result<Vec<GenerationRecord>, EvolutionError> {
    cfg.validate()?;
    let mut population = initial.unwrap_or_default();
    population.truncate(cfg.population_size);
    while population.len() < cfg.population_size {
        population.push(layout.random(rng));
    }
    let mut history = Vec::with_capacity(cfg.generations);
    for generation in 1..=cfg.generations {
        let fitness = evaluate(generation, &population);
        if fitness.len() != population.len() {
            return Err(EvolutionError::FitnessCount { expected: population.len(), got: fitness.len() });
        }
        let best = ranking(&fitness)[0];
        let next = if generation < cfg.generations {
            next_generation(layout, &population, &fitness, cfg, rng)
        } else {
            Vec::new()
        };
        history.push(GenerationRecord { population: core::mem::replace(&mut population, next), fitness, best });
    }
    Ok(history)
}

#[cfg(test)]
mod tests;
