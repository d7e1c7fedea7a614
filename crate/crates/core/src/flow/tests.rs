use alloc::vec;
use alloc::vec::Vec;

use proptest::prelude::*;

use super::*;
use crate::chem::{Reaction, ReactionNetwork, SpeciesKind};
use crate::crc::reaction_network;

fn crc_model(k1: f64, k2: f64, k_f: f64, v_src: f64) -> FlowModel {
    let (net, ids) = reaction_network(k1, k2, k_f);
    derive_odes(&net, &[InflowTerm::new("v_src", ids.s, v_src)])
}

/// Closed-form underload steady state of the two-reaction controller:
/// `c_ES = v/k2`, `c_E = e0 − c_ES`, `c_S = v / (k1·c_E)`.
fn crc_oracle(e0: f64, k1: f64, k2: f64, v: f64) -> [f64; 3] {
    let es = v / k2;
    let e = e0 - es;
    [v / (k1 * e), es, e]
}

#[test]
fn crc_matrix_and_rates() {
    let m = crc_model(1.0, 1.0, 0.0, 5.0);
    assert_eq!(m.matrix().row_labels(), ["S", "ES", "E"]);
    assert_eq!(m.matrix().column_labels(), ["r1", "r2", "v_src"]);
    assert_eq!(
        m.matrix().to_rows(),
        vec![vec![-1, 0, 1], vec![1, -1, 0], vec![-1, 1, 0]]
    );
    assert_eq!(m.symbolic_rates(), ["k1·c_S·c_E", "k2·c_ES", "v_src"]);
    assert_eq!(
        m.ode_lines(),
        [
            "dc_S/dt = - k1·c_S·c_E + v_src",
            "dc_ES/dt = + k1·c_S·c_E - k2·c_ES",
            "dc_E/dt = - k1·c_S·c_E + k2·c_ES",
        ]
    );
}

#[test]
fn output_stage_adds_row_and_column() {
    let m = crc_model(1.0, 1.0, 0.05, 5.0);
    assert_eq!(m.matrix().row_labels(), ["S", "ES", "E", "F"]);
    assert_eq!(m.matrix().column_labels(), ["r1", "r2", "r3", "v_src"]);
    assert_eq!(m.matrix().row(3), [0, 1, -1, 0]);
    assert_eq!(m.symbolic_rate(2), "k_F·c_F");
}

#[test]
fn empty_and_unary_networks() {
    let m = derive_odes(&ReactionNetwork::new(), &[]);
    assert_eq!((m.matrix().nrows(), m.matrix().ncols()), (0, 0));

    let mut net = ReactionNetwork::new();
    let a = net.add_species("A", SpeciesKind::Counter).unwrap();
    let b = net.add_species("B", SpeciesKind::Counter).unwrap();
    net.add_reaction(Reaction::new("r", 0.7).rate_name("k").reactant(a, 1).product(b, 1))
        .unwrap();
    let m = derive_odes(&net, &[]);
    assert_eq!(m.matrix().to_rows(), vec![vec![-1], vec![1]]);
    assert_eq!(m.symbolic_rates(), ["k·c_A"]);
    assert_eq!(m.rate_vector(&[2.0, 0.0]), [1.4]);
}

#[test]
fn conservation_recovers_token_loop() {
    let laws = conservation_laws(crc_model(1.0, 1.0, 0.0, 5.0).matrix());
    assert_eq!(laws.len(), 1);
    assert_eq!(laws[0].coefficients(), [0, 1, 1]);
    let m = crc_model(1.0, 1.0, 0.5, 5.0);
    let laws = conservation_laws(m.matrix());
    assert_eq!(laws.len(), 1);
    assert_eq!(laws[0].coefficients(), [0, 1, 1, 0]);
    assert_eq!(laws[0].describe(m.matrix().row_labels()), "c_ES + c_E");
}

#[test]
fn conservation_scales_to_integers() {
    // 2A <-> B conserves c_A + 2 c_B.
    let mut net = ReactionNetwork::new();
    let a = net.add_species("A", SpeciesKind::Counter).unwrap();
    let b = net.add_species("B", SpeciesKind::Counter).unwrap();
    net.add_reaction(Reaction::new("f", 1.0).reactant(a, 2).product(b, 1)).unwrap();
    net.add_reaction(Reaction::new("r", 1.0).reactant(b, 1).product(a, 2)).unwrap();
    let laws = conservation_laws(derive_odes(&net, &[]).matrix());
    assert_eq!(laws.len(), 1);
    assert_eq!(laws[0].coefficients(), [1, 2]);
}

#[test]
fn integrate_equilibrium_is_constant() {
    let m = crc_model(1.0, 1.0, 0.0, 0.0);
    let t = integrate(&m, &[0.0, 0.0, 10.0], 5.0, 0.01).unwrap();
    assert!(t.states.iter().all(|c| c == &[0.0, 0.0, 10.0]));
    assert_eq!(t.times.len(), 501);
    assert!((t.times[500] - 5.0).abs() < 1e-12);
}

#[test]
fn integrate_exponential_decay() {
    let mut net = ReactionNetwork::new();
    let a = net.add_species("A", SpeciesKind::Counter).unwrap();
    let b = net.add_species("B", SpeciesKind::Counter).unwrap();
    net.add_reaction(Reaction::new("r", 1.0).reactant(a, 1).product(b, 1)).unwrap();
    let m = derive_odes(&net, &[]);
    let t = integrate(&m, &[1.0, 0.0], 1.0, 1e-4).unwrap();
    assert!((t.last()[0] - libm::exp(-1.0)).abs() < 1e-6);
    assert!((t.at(0.5, 0) - libm::exp(-0.5)).abs() < 1e-6);
}

#[test]
fn integrate_converges_to_crc_steady_state() {
    let m = crc_model(1.0, 1.0, 0.0, 5.0);
    let t = integrate(&m, &[0.0, 0.0, 10.0], 60.0, 1e-3).unwrap();
    let c = t.last();
    for (x, y) in c.iter().zip([1.0, 5.0, 5.0]) {
        assert!((x - y).abs() < 1e-6, "{c:?}");
    }
}

#[test]
fn integrate_reports_divergence_and_bad_input() {
    let mut net = ReactionNetwork::new();
    let a = net.add_species("A", SpeciesKind::Counter).unwrap();
    net.add_reaction(Reaction::new("r", 1.0).reactant(a, 2).product(a, 3)).unwrap();
    let m = derive_odes(&net, &[]);
    assert!(matches!(
        integrate(&m, &[10.0], 1.0, 0.01),
        Err(FlowError::Diverged { .. })
    ));
    assert!(matches!(
        integrate(&m, &[-1.0], 1.0, 0.01),
        Err(FlowError::NegativeInitial(0))
    ));
}

#[test]
fn integrate_logs_clamping() {
    // Coarse steps overshoot a fast second-order decay below zero.
    let mut net = ReactionNetwork::new();
    let a = net.add_species("A", SpeciesKind::Counter).unwrap();
    net.add_reaction(Reaction::new("r", 50.0).reactant(a, 2)).unwrap();
    let m = derive_odes(&net, &[]);
    let t = integrate(&m, &[1.0], 1.0, 0.1).unwrap();
    assert!(!t.clamps.is_empty());
    assert!(t.states.iter().all(|c| c[0] >= 0.0));
}

#[test]
fn steady_state_underload() {
    let m = crc_model(1.0, 1.0, 0.0, 5.0);
    let ss = steady_state(&m, &[0.0, 0.0, 10.0]).unwrap();
    let c = ss.concentrations().unwrap();
    for (x, y) in c.iter().zip([1.0, 5.0, 5.0]) {
        assert!((x - y).abs() < 1e-9, "{c:?}");
    }
    assert!((ss.emission_rate() - 5.0).abs() < 1e-9);
}

#[test]
fn steady_state_overload_is_unbounded() {
    let m = crc_model(1.0, 1.0, 0.0, 20.0);
    let ss = steady_state(&m, &[0.0, 0.0, 10.0]).unwrap();
    assert_eq!(
        ss,
        SteadyState::Unbounded {
            species: 0,
            emission_rate: 10.0
        }
    );
}

#[test]
fn steady_state_zero_inflow() {
    let m = crc_model(1.0, 1.0, 0.0, 0.0);
    let ss = steady_state(&m, &[0.0, 0.0, 10.0]).unwrap();
    let c = ss.concentrations().unwrap();
    assert!(c[0].abs() < 1e-12 && c[1].abs() < 1e-12);
    assert!((c[2] - 10.0).abs() < 1e-12);
}

#[test]
fn steady_state_with_output_stage() {
    let m = crc_model(1.0, 1.0, 0.05, 5.0);
    let ss = steady_state(&m, &[0.0, 0.0, 10.0, 0.0]).unwrap();
    let c = ss.concentrations().unwrap();
    assert!((c[3] - 100.0).abs() < 1e-7, "F holds v/k_F: {c:?}");
    assert!((ss.emission_rate() - 5.0).abs() < 1e-9);
}

#[test]
fn michaelis_menten_examples() {
    assert!((michaelis_menten_rate(1e9, 10.0, 1.0, 2.0) - 20.0).abs() < 1e-6);
    assert!((michaelis_menten_rate(2.0, 10.0, 1.0, 2.0) - 10.0).abs() < 1e-12);
    assert_eq!(michaelis_menten_rate(0.0, 10.0, 1.0, 2.0), 0.0);
}

#[test]
fn clamped_steady_state_matches_michaelis_menten() {
    for (c_s, e0, k1, k2) in [(1.0, 10.0, 1.0, 1.0), (25.0, 50.0, 0.3, 2.0), (0.2, 7.0, 4.0, 0.5)] {
        let m = crc_model(k1, k2, 0.0, 0.0);
        let ss = steady_state_clamped(&m, &[0.0, 0.0, e0], &[(0, c_s)]).unwrap();
        let mm = michaelis_menten_rate(c_s, e0, k1, k2);
        assert!((ss.emission_rate() - mm).abs() < 1e-9, "{} vs {mm}", ss.emission_rate());
    }
}

#[test]
fn settle_time_examples() {
    let slow = settle_time_estimate(10.0, 1.0, 1.0, 0.05, 0.05).unwrap();
    assert!((slow - 59.9146).abs() < 1e-3, "{slow}");
    // With k2 = 10 and k1·e0 = 10 the output stage is the slowest mode.
    let fast = settle_time_estimate(10.0, 1.0, 10.0, 5.0, 0.05).unwrap();
    assert!((fast - 0.5991).abs() < 1e-3, "{fast}");
    // With k2 = 1 the token loop dominates instead.
    let loop_bound = settle_time_estimate(10.0, 1.0, 1.0, 5.0, 0.05).unwrap();
    assert!((loop_bound - 2.9957).abs() < 1e-3, "{loop_bound}");
    assert_eq!(settle_time_estimate(10.0, 1.0, 1.0, 0.05, 1.0).unwrap(), 0.0);
    assert!(settle_time_estimate(0.0, 1.0, 1.0, 0.05, 0.05).is_err());
}

#[test]
fn relaxation_rates_at_idle() {
    let m = crc_model(1.0, 2.0, 0.3, 0.0);
    let rates = relaxation_rates(&m, &[0.0, 0.0, 10.0, 0.0]).unwrap();
    let expected = [0.3, 2.0, 10.0];
    assert_eq!(rates.len(), 3);
    for (r, e) in rates.iter().zip(expected) {
        assert!((r - e).abs() < 1e-9, "{rates:?}");
    }
}

#[test]
fn unstable_point_is_reported() {
    let mut net = ReactionNetwork::new();
    let a = net.add_species("A", SpeciesKind::Counter).unwrap();
    net.add_reaction(Reaction::new("r", 1.0).reactant(a, 1).product(a, 2)).unwrap();
    let m = derive_odes(&net, &[]);
    assert!(matches!(
        settle_time(&m, &[1.0], 0.05),
        Err(FlowError::StabilityViolation { .. })
    ));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn steady_state_matches_closed_form(
        e0 in 1u32..200,
        k1 in 0.05f64..5.0,
        k2 in 0.05f64..5.0,
        load in 0.0f64..0.95,
    ) {
        let e0 = f64::from(e0);
        let v = load * e0 * k2;
        let m = crc_model(k1, k2, 0.0, v);
        let ss = steady_state(&m, &[0.0, 0.0, e0]).unwrap();
        let c = ss.concentrations().unwrap();
        let oracle = crc_oracle(e0, k1, k2, v);
        for (x, y) in c.iter().zip(oracle) {
            prop_assert!((x - y).abs() <= 1e-8 * (1.0 + y), "{:?} vs {:?}", c, oracle);
        }
        prop_assert!((ss.emission_rate() - v).abs() <= 1e-8 * (1.0 + v));
    }

    #[test]
    fn overload_always_unbounded(
        e0 in 1u32..200,
        k2 in 0.05f64..5.0,
        over in 1.0f64..5.0,
    ) {
        let e0 = f64::from(e0);
        let m = crc_model(1.0, k2, 0.0, over * e0 * k2);
        let ss = steady_state(&m, &[0.0, 0.0, e0]).unwrap();
        let unbounded = matches!(ss, SteadyState::Unbounded { .. });
        prop_assert!(unbounded);
        prop_assert!((ss.emission_rate() - e0 * k2).abs() <= 1e-9 * e0 * k2);
    }

    #[test]
    fn integration_lands_on_steady_state(
        e0 in 2u32..60,
        k1 in 0.2f64..3.0,
        k2 in 0.2f64..3.0,
        load in 0.05f64..0.8,
        k_f in prop_oneof![Just(0.0), 0.2f64..3.0],
    ) {
        let e0 = f64::from(e0);
        let v = load * e0 * k2;
        let m = crc_model(k1, k2, k_f, v);
        let mut c0: Vec<f64> = vec![0.0; m.species_count()];
        c0[2] = e0;
        let ss = steady_state(&m, &c0).unwrap();
        let c_ss = ss.concentrations().unwrap();
        let slowest = relaxation_rates(&m, c_ss).unwrap()[0];
        let horizon = 50.0 / slowest;
        let fastest = *relaxation_rates(&m, c_ss).unwrap().last().unwrap();
        let dt = (0.1 / fastest).min(horizon / 2000.0);
        let t = integrate(&m, &c0, horizon, dt).unwrap();
        for (x, y) in t.last().iter().zip(c_ss) {
            prop_assert!((x - y).abs() <= 0.01 * y.abs() + 1e-9, "{:?} vs {:?}", t.last(), c_ss);
        }
    }
}
