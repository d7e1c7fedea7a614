use alloc::vec::Vec;

use super::*;
use crate::stack::{ModuleKind, PersistentStore};

fn optimum(s: &Scenario) -> crate::stack::Genome {
    known_optimum(s).unwrap()
}

fn with(s: &Scenario, g: &crate::stack::Genome, edits: &[(ModuleKind, &str, i64)]) -> crate::stack::Genome {
    let l = s.layout().unwrap();
    let mut g = g.clone();
    for (k, n, v) in edits {
        l.set_value(&mut g, *k, n, *v).unwrap();
    }
    g
}

#[test]
fn presets_validate() {
    for name in ["e1", "e1-cross", "e2", "e3"] {
        Scenario::preset(name).unwrap().validate().unwrap();
    }
    let mut bad = Scenario::e1();
    bad.target = 2.0e6;
    assert!(bad.validate().is_err());
}

#[test]
fn e0_domain_brackets_target() {
    let d = e0_override(50_000.0, 1.0, 1000);
    assert_eq!((d.lo, d.hi), (46, 50));
}

#[test]
fn optimum_blueprints() {
    let s = Scenario::e1();
    let l = s.layout().unwrap();
    let g = optimum(&s);
    assert!(matches!(l.value(&g, ModuleKind::Crc, "e0"), Some(49 | 50)));
    let rec = replay(&s, &g, 1).unwrap();
    assert_eq!(rec.path, "pubsub>crc>ipv4>ethernet");
    let s2 = Scenario::e2();
    let g2 = optimum(&s2);
    let rec2 = replay(&s2, &g2, 1).unwrap();
    assert_eq!(rec2.path, "pubsub>udp>crc>ipv4>ethernet");
}

#[test]
fn optimal_stack_scores_high() {
    let s = Scenario::e1();
    let rec = replay(&s, &optimum(&s), 3).unwrap();
    assert!(rec.fitness >= 0.95, "fitness {} rate {:?}", rec.fitness, rec.mean_phy_rate());
    assert_eq!(rec.delivery_ratio(), 1.0);
    assert!((rec.efficiency() - 1000.0 / 1038.0).abs() < 1e-12);
}

#[test]
fn without_crc_rate_requirement_fails() {
    let s = Scenario::e1();
    let g = with(&s, &optimum(&s), &[(ModuleKind::PubSub, "to", 1)]);
    let rec = replay(&s, &g, 3).unwrap();
    assert_eq!(rec.path, "pubsub>ipv4>ethernet");
    assert!(rec.fitness < 0.01, "{}", rec.fitness);
    assert_eq!(rec.delivery_ratio(), 1.0);
}

#[test]
fn without_ipv4_nothing_is_delivered() {
    let s = Scenario::e1();
    let g = with(&s, &optimum(&s), &[(ModuleKind::PubSub, "to", 2)]);
    let rec = replay(&s, &g, 3).unwrap();
    assert_eq!(rec.path, "pubsub>ethernet");
    assert!(rec.sent > 0);
    assert_eq!(rec.delivered, 0);
    assert_eq!(rec.fitness, 0.0);
}

#[test]
fn invalid_blueprint_scores_zero_without_trial() {
    let s = Scenario::e1();
    let g = with(&s, &optimum(&s), &[(ModuleKind::Ipv4, "present", 0)]);
    let rec = replay(&s, &g, 3).unwrap();
    assert_eq!(rec.invalid.as_deref(), Some("missing_provider"));
    assert!(rec.phy_rate.is_empty());
    assert_eq!(rec.fitness, 0.0);
}

#[test]
fn two_flows_need_demux() {
    let s = Scenario::e2();
    let good = replay(&s, &optimum(&s), 4).unwrap();
    assert_eq!(good.misattributed, 0);
    let bare = with(&s, &optimum(&s), &[(ModuleKind::PubSub, "to", 0), (ModuleKind::Udp, "present", 0)]);
    let rec = replay(&s, &bare, 4).unwrap();
    assert_eq!(rec.path, "pubsub>crc>ipv4>ethernet");
    assert!(rec.delivery_ratio() < 0.75, "{}", rec.delivery_ratio());
    assert!(rec.misattributed > 0);
    assert!(good.fitness > 1.3 * rec.fitness, "{} vs {}", good.fitness, rec.fitness);
}

#[test]
fn short_duration_is_extended() {
    let mut s = Scenario::e1();
    s.duration = 1.0;
    let rec = replay(&s, &optimum(&s), 5).unwrap();
    assert!(rec.extended);
    assert!(rec.duration >= rec.settle + s.min_measure);
    assert_eq!(rec.phy_rate.len(), rec.duration as usize);
}

#[test]
fn trials_are_deterministic() {
    let s = Scenario::e1_cross();
    let a = replay(&s, &optimum(&s), 6).unwrap();
    let b = replay(&s, &optimum(&s), 6).unwrap();
    assert_eq!(a, b);
    let c = replay(&s, &optimum(&s), 7).unwrap();
    assert_ne!(a.phy_rate, c.phy_rate);
}

#[test]
fn world_conservation_without_transport() {
    for (name, edits) in [
        ("e1", Vec::new()),
        ("e1", alloc::vec![(ModuleKind::PubSub, "to", 1)]),
        ("e1-cross", Vec::new()),
    ] {
        let mut s = Scenario::preset(name).unwrap();
        s.link.loss = 0.05;
        let l = s.layout().unwrap();
        let g = with(&s, &optimum(&s), &edits);
        let (_, st) = run_trial(&s, &l, &g, &mut PersistentStore::new(), TrialSeeds::single(8));
        assert_eq!(
            st.generated,
            st.delivered_total + st.link_drops + st.non_ip_drops + st.crc_resident + st.in_flight,
            "{name} {st:?}"
        );
    }
}

#[test]
fn tcp_over_crc_scores_below_optimum() {
    let s = Scenario::e1();
    // Pubsub providers: crc, ipv4, tcp, ethernet; tcp net providers: crc,
    // ipv4.
    let g = with(
        &s,
        &optimum(&s),
        &[(ModuleKind::Tcp, "present", 1), (ModuleKind::PubSub, "to", 2), (ModuleKind::Tcp, "to", 0)],
    );
    let rec = replay(&s, &g, 9).unwrap();
    assert_eq!(rec.path, "pubsub>tcp>crc>ipv4>ethernet");
    let best = replay(&s, &optimum(&s), 9).unwrap();
    assert!(rec.fitness < best.fitness - 0.2, "{} vs {}", rec.fitness, best.fitness);
}

#[test]
fn tcp_recovers_losses_end_to_end() {
    let mut s = Scenario::e1();
    s.link.loss = 0.1;
    s.source = crate::proto::SourceProfile::constant(20_000.0);
    let g = with(
        &s,
        &optimum(&s),
        &[
            (ModuleKind::Tcp, "present", 1),
            (ModuleKind::Tcp, "retx", 1),
            (ModuleKind::PubSub, "to", 2),
            (ModuleKind::Tcp, "to", 1),
        ],
    );
    let rec = replay(&s, &g, 10).unwrap();
    assert_eq!(rec.path, "pubsub>tcp>ipv4>ethernet");
    assert!(rec.delivery_ratio() > 0.99, "{}", rec.delivery_ratio());
}

#[test]
fn doubling_delay_weight_raises_best_k_f() {
    let s = Scenario::e3();
    let l = s.layout().unwrap();
    let g0 = known_optimum(&s).unwrap();
    let recs: Vec<_> = (8..=28)
        .step_by(2)
        .map(|kf| {
            let g = with(&s, &g0, &[(ModuleKind::Crc, "k_f", kf)]);
            let mut r = score_trial(&s, &l, &g, &mut PersistentStore::new(), TrialSeeds::single(11));
            r.fitness = 0.0;
            (kf, r)
        })
        .collect();
    let argmax = |w_delay: f64| {
        let spec = crate::evolution::FitnessSpec::constancy_delay(1.0, w_delay, 10.0);
        recs.iter()
            .map(|(kf, r)| (*kf, crate::evolution::fitness(r, &spec).unwrap()))
            .fold((0, f64::NEG_INFINITY), |a, b| if b.1 > a.1 { b } else { a })
    };
    let a = argmax(0.5);
    let b = argmax(1.0);
    let c = argmax(2.0);
    assert!(a.0 <= b.0 && b.0 <= c.0);
    assert!(a.0 < c.0);
}
