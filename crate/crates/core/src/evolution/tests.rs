use alloc::vec;
use alloc::vec::Vec;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::stack::{GeneRole, ModuleKind, TrialRecord};

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn gene(lo: i64, hi: i64) -> GeneSpec {
    GeneSpec { name: "g", role: GeneRole::Control(0), lo, hi }
}

/// Standard normal CDF by series, for the mutation oracle.
fn phi(x: f64) -> f64 {
    // Abramowitz-Stegun 26.2.17.
    let t = 1.0 / (1.0 + 0.231_641_9 * x.abs());
    let poly = t * (0.319_381_530 + t * (-0.356_563_782 + t * (1.781_477_937 + t * (-1.821_255_978 + t * 1.330_274_429))));
    let tail = crate::math::exp(-x * x / 2.0) / crate::math::sqrt(2.0 * core::f64::consts::PI) * poly;
    if x >= 0.0 {
        1.0 - tail
    } else {
        tail
    }
}

#[test]
fn config_validation() {
    assert!(EvolutionConfig::default().validate().is_ok());
    let bad = EvolutionConfig { elite_size: 3, ..Default::default() };
    assert!(matches!(bad.validate(), Err(EvolutionError::EliteTooLarge { .. })));
    let bad = EvolutionConfig { mutation_p: 1.5, ..Default::default() };
    assert!(bad.validate().is_err());
}

#[test]
fn mutation_matches_normal_round_clip() {
    let g = gene(0, 100);
    let mut r = rng(1);
    let n = 100_000;
    let draws: Vec<i64> = (0..n).map(|_| mutate_gene(50, &g, &mut r)).collect();
    let at_lo = draws.iter().filter(|&&v| v == 0).count() as f64 / n as f64;
    let at_50 = draws.iter().filter(|&&v| v == 50).count() as f64 / n as f64;
    // Oracle: P(round(X) <= 0) = Φ((0.5 − 50)/50); P(round(X) = 50) =
    // Φ(0.5/50) − Φ(−0.5/50).
    assert!((at_lo - phi(-49.5 / 50.0)).abs() < 0.005, "{at_lo}");
    assert!((at_50 - (phi(0.01) - phi(-0.01))).abs() < 0.002, "{at_50}");
    let mean = draws.iter().sum::<i64>() as f64 / n as f64;
    assert!((mean - 50.0).abs() < 0.5);
}

#[test]
fn degenerate_gene_never_moves() {
    let g = gene(7, 7);
    let mut r = rng(2);
    assert!((0..100).all(|_| mutate_gene(7, &g, &mut r) == 7));
}

#[test]
fn selection_examples() {
    let mut r = rng(3);
    for _ in 0..100 {
        assert_eq!(select_parents(&[1.0, 0.0, 0.0], &mut r), (0, 0));
    }
    let n = 100_000;
    let mut counts = [0usize; 3];
    for _ in 0..n {
        counts[roulette(&[2.0, 1.0, 1.0], &mut r)] += 1;
    }
    assert!((counts[0] as f64 / n as f64 - 0.5).abs() < 0.02);
    let mut counts = [0usize; 3];
    for _ in 0..n {
        counts[roulette(&[0.0, 0.0, 0.0], &mut r)] += 1;
    }
    for c in counts {
        assert!((c as f64 / n as f64 - 1.0 / 3.0).abs() < 0.02);
    }
}

#[test]
fn recombine_without_operators_copies() {
    let layout = GenomeLayout::standard();
    let mut r = rng(4);
    let a = layout.random(&mut r);
    let b = layout.random(&mut r);
    let cfg = EvolutionConfig { crossover_p: 0.0, mutation_p: 0.0, ..Default::default() };
    assert_eq!(recombine(&layout, &a, &b, &cfg, &mut r), a);
    let cfg = EvolutionConfig { crossover_p: 1.0, mutation_p: 0.0, ..Default::default() };
    assert_eq!(recombine(&layout, &a, &a, &cfg, &mut r), a);
}

#[test]
fn crossover_switches_at_chromosome_midpoints() {
    let layout = GenomeLayout::standard();
    let a = Genome(layout.chromosomes().iter().map(|c| vec![0; c.genes.len()]).collect());
    let b = Genome(layout.chromosomes().iter().map(|c| c.genes.iter().map(|g| g.hi).collect()).collect());
    let cfg = EvolutionConfig { crossover_p: 1.0, mutation_p: 0.0, ..Default::default() };
    let child = recombine(&layout, &a, &b, &cfg, &mut rng(5));
    // Always switching: each chromosome with n genes takes its second half
    // from the other parent than its first half.
    let mut from_b = false;
    for (ci, c) in layout.chromosomes().iter().enumerate() {
        let n = c.genes.len();
        for gi in 0..n {
            if gi == n / 2 {
                from_b = !from_b;
            }
            let expect = if from_b { b.0[ci][gi] } else { a.0[ci][gi] };
            assert_eq!(child.0[ci][gi], expect, "chromosome {ci} gene {gi}");
        }
    }
}

#[test]
fn elite_first_and_ties_by_index() {
    let layout = GenomeLayout::standard();
    let mut r = rng(6);
    let pop: Vec<Genome> = (0..3).map(|_| layout.random(&mut r)).collect();
    let cfg = EvolutionConfig::default();
    let next = next_generation(&layout, &pop, &[0.2, 0.9, 0.5], &cfg, &mut r);
    assert_eq!(next.len(), 3);
    assert_eq!(next[0], pop[1]);
    assert_eq!(ranking(&[0.5, 0.7, 0.7]), [1, 2, 0]);
}

#[test]
fn twenty_five_generations_of_three() {
    let layout = GenomeLayout::standard();
    let mut trials = 0;
    let h = evolve(&layout, &EvolutionConfig::default(), None, &mut rng(7), |_, pop| {
        trials += pop.len();
        vec![0.5; pop.len()]
    })
    .unwrap();
    assert_eq!(h.len(), 25);
    assert_eq!(trials, 75);
}

#[test]
fn degenerate_search_space_constant_fitness() {
    let mut layout = GenomeLayout::standard();
    for c in layout.chromosomes().to_vec() {
        for g in &c.genes {
            layout.set_domain(c.kind, g.name, g.lo, g.lo).unwrap();
        }
    }
    let h = evolve(&layout, &EvolutionConfig::default(), None, &mut rng(8), |_, pop| {
        pop.iter().map(|g| g.flat().iter().sum::<i64>() as f64 / 100.0).collect()
    })
    .unwrap();
    let f0 = h[0].fitness[0];
    assert!(h.iter().all(|g| g.fitness.iter().all(|f| *f == f0)));
}

#[test]
fn fitness_count_mismatch_is_error() {
    let layout = GenomeLayout::standard();
    let r = evolve(&layout, &EvolutionConfig::default(), None, &mut rng(9), |_, _| vec![1.0]);
    assert!(matches!(r, Err(EvolutionError::FitnessCount { .. })));
}

fn record(rate: f64, sent: u64, delivered: u64, payload: u64, wire: u64) -> TrialRecord {
    TrialRecord {
        duration: 10.0,
        settle: 2.0,
        phy_rate: vec![rate; 10],
        sent,
        delivered,
        payload_bytes: payload,
        wire_bytes: wire,
        ..Default::default()
    }
}

#[test]
fn rate_target_examples() {
    let spec = FitnessSpec::rate_target(50_000.0);
    let peak = record(50_000.0, 100, 100, 1000, 1038);
    assert!((fitness(&peak, &spec).unwrap() - 1.0).abs() < 1e-12);
    let off = record(50_000.0 + 2.0 * 2500.0, 100, 100, 1000, 1038);
    assert!((fitness(&off, &spec).unwrap() - crate::math::exp(-2.0)).abs() < 1e-12);
    let lost = record(50_000.0, 100, 0, 1000, 1038);
    assert_eq!(fitness(&lost, &spec).unwrap(), 0.0);
    let empty = TrialRecord { settle: 3.0, phy_rate: vec![1.0; 3], ..Default::default() };
    assert_eq!(fitness(&empty, &spec), Err(FitnessError::EmptyWindow));
    // Extra 8 B of header per 1000 B payload.
    let udp = record(50_000.0, 100, 100, 1000, 1046);
    assert!((fitness(&udp, &spec).unwrap() - 1038.0 / 1046.0).abs() < 1e-12);
}

#[test]
fn constancy_delay_examples() {
    let spec = FitnessSpec::constancy_delay(1.0, 1.0, 1.0);
    let flat = record(100.0, 10, 10, 1, 1);
    assert!((fitness(&flat, &spec).unwrap() - 1.0).abs() < 1e-12);
    let mut slow = flat.clone();
    slow.mean_delay = 2.0;
    assert!((fitness(&slow, &spec).unwrap() - crate::math::exp(-2.0)).abs() < 1e-12);
    let mut bursty = flat;
    bursty.phy_rate = vec![0.0, 200.0, 0.0, 200.0, 0.0, 200.0, 0.0, 200.0, 0.0, 200.0];
    assert!(fitness(&bursty, &spec).unwrap() < 0.5);
}

#[test]
fn elitism_monotone_under_noiseless_fitness() {
    let layout = GenomeLayout::standard();
    let e0 = layout.gene(ModuleKind::Crc, "e0").unwrap().clone();
    let pos = layout.position(ModuleKind::Crc).unwrap();
    let score = |g: &Genome| 1.0 / (1.0 + (g.0[pos][1] - 48).abs() as f64 / e0.hi as f64);
    for seed in 0..20 {
        let h = evolve(&layout, &EvolutionConfig::default(), None, &mut rng(seed), |_, pop| {
            pop.iter().map(score).collect()
        })
        .unwrap();
        for w in h.windows(2) {
            assert!(w[1].best_fitness() >= w[0].best_fitness());
        }
    }
}

proptest! {
    #[test]
    fn mutation_stays_in_domain(lo in -1000i64..1000, width in 0i64..5000, off in 0i64..5000, seed in any::<u64>()) {
        let g = gene(lo, lo + width);
        let prev = lo + off.min(width);
        let mut r = rng(seed);
        for _ in 0..50 {
            let v = mutate_gene(prev, &g, &mut r);
            prop_assert!(g.contains(v));
        }
    }

    #[test]
    fn recombined_genomes_parse_back(seed in any::<u64>(), cx in 0.0f64..=1.0, mu in 0.0f64..=1.0) {
        let layout = GenomeLayout::standard();
        let mut r = rng(seed);
        let a = layout.random(&mut r);
        let b = layout.random(&mut r);
        let cfg = EvolutionConfig { crossover_p: cx, mutation_p: mu, ..Default::default() };
        let c = recombine(&layout, &a, &b, &cfg, &mut r);
        prop_assert_eq!(layout.parse(&layout.to_text(&c)).unwrap(), c);
    }

    #[test]
    fn fitness_in_unit_interval(rate in 0.0f64..2e5, sent in 0u64..1000, lost in 0u64..1000, w in 0.0f64..5.0) {
        let delivered = sent.saturating_sub(lost);
        let r = record(rate, sent, delivered, 1000, 1038 + lost);
        for spec in [FitnessSpec::rate_target(5e4), FitnessSpec::constancy_delay(w, w, 1.0)] {
            let f = fitness(&r, &spec).unwrap();
            prop_assert!((0.0..=1.0).contains(&f));
        }
    }
}
