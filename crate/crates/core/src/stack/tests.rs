use alloc::vec::Vec;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::chem::SchedulerMode;
use crate::proto::{Packet, Protocol};

const CRC_IPV4: &str = "\
pubsub to=0
crc present=1 e0=10 k_f=0 to=0
ipv4 present=1 to=0
udp present=0 to=0
tcp present=0 ack=0 retx=1 ts=0 to=0
ethernet
";

fn layout() -> GenomeLayout {
    GenomeLayout::standard()
}

fn genome(text: &str) -> Genome {
    layout().parse(text).unwrap()
}

fn edit(text: &str, kind: ModuleKind, name: &str, v: i64) -> Genome {
    let l = layout();
    let mut g = l.parse(text).unwrap();
    l.set_value(&mut g, kind, name, v).unwrap();
    g
}

fn stack(g: &Genome, role: Role) -> RunningStack {
    compose(&layout(), g, &ComposeOptions::default(), role, &PersistentStore::new(), 0.0).unwrap()
}

#[test]
fn text_roundtrip() {
    let l = layout();
    let g = genome(CRC_IPV4);
    assert_eq!(l.to_text(&g), CRC_IPV4);
    assert_eq!(l.parse(&l.to_text(&g)).unwrap(), g);
}

#[test]
fn parse_errors_carry_line() {
    let l = layout();
    let bad = CRC_IPV4.replace("e0=10", "e0=0");
    assert!(matches!(l.parse(&bad), Err(StackError::Parse { line: 2, .. })));
    let bad = CRC_IPV4.replace("to=0\nipv4", "bogus=1\nipv4");
    assert!(matches!(l.parse(&bad), Err(StackError::Parse { line: 2, .. })));
    assert!(l.parse("pubsub to=0\n").is_err());
    assert!(l.parse(&alloc::format!("{CRC_IPV4}extra\n")).is_err());
}

#[test]
fn crc_over_ipv4_composes() {
    let s = stack(&genome(CRC_IPV4), Role::Sender);
    assert_eq!(s.path(), "pubsub>crc>ipv4>ethernet");
    assert_eq!(s.kinds().len(), 4);
    assert!(s.crc().is_some());
}

#[test]
fn connector_resolution_is_modulo_over_providers() {
    // PubSub providers with udp and tcp absent: crc, ipv4, ethernet.
    let l = layout();
    let paths: Vec<_> = (0..5)
        .map(|v| {
            let g = edit(CRC_IPV4, ModuleKind::PubSub, "to", v);
            describe_path(&l, &resolve_path(&l, &g).unwrap())
        })
        .collect();
    assert_eq!(
        paths,
        [
            "pubsub>crc>ipv4>ethernet",
            "pubsub>ipv4>ethernet",
            "pubsub>ethernet",
            "pubsub>crc>ipv4>ethernet",
            "pubsub>ipv4>ethernet"
        ]
    );
}

#[test]
fn missing_provider_is_invalid() {
    let g = edit(CRC_IPV4, ModuleKind::Ipv4, "present", 0);
    let err = resolve_path(&layout(), &g).unwrap_err();
    assert_eq!(err, InvalidBlueprint::MissingProvider { module: ModuleKind::Crc, service: Service::Net });
    assert_eq!(err.code(), "missing_provider");
}

#[test]
fn udp_over_crc_over_ipv4() {
    let mut g = edit(CRC_IPV4, ModuleKind::Udp, "present", 1);
    let l = layout();
    // Providers for pubsub: crc, ipv4, udp, ethernet.
    l.set_value(&mut g, ModuleKind::PubSub, "to", 2).unwrap();
    // Providers for udp (net): crc, ipv4.
    l.set_value(&mut g, ModuleKind::Udp, "to", 0).unwrap();
    assert_eq!(stack(&g, Role::Sender).path(), "pubsub>udp>crc>ipv4>ethernet");
}

#[test]
fn wire_length_matches_header_sum() {
    let mut s = stack(&edit(CRC_IPV4, ModuleKind::PubSub, "to", 1), Role::Sender);
    let mut out = Vec::new();
    s.send(0.0, Packet::data(0, 0, 1000, 0.0), &mut out);
    assert_eq!(out[0].1.wire_len(), 1038);
    assert_eq!(out[0].1.inner_protocol(), Some(Protocol::Ipv4));
    assert_eq!(s.phy().bytes, 1038);
}

#[test]
fn crc_emits_after_wake_and_receiver_unwraps() {
    let g = genome(CRC_IPV4);
    let mut tx = stack(&g, Role::Sender);
    let mut rx = stack(&g, Role::Receiver);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut out = Vec::new();
    tx.send(0.0, Packet::data(5, 0, 1000, 0.0), &mut out);
    assert!(out.is_empty());
    let t = tx.next_wake(&mut rng).unwrap();
    tx.wake(t, &mut rng, &mut out);
    assert!(out.is_empty() || out.len() == 1);
    while out.is_empty() {
        let t = tx.next_wake(&mut rng).unwrap();
        tx.wake(t, &mut rng, &mut out);
    }
    let (_, frame) = out.pop().unwrap();
    let mut up = Vec::new();
    rx.receive(1.0, frame, &mut out, &mut up);
    assert_eq!(up.len(), 1);
    assert_eq!(up[0].id, 5);
    assert!(up[0].headers.is_empty());
}

#[test]
fn tcp_roundtrip_through_both_nodes() {
    let l = layout();
    let mut g = edit(CRC_IPV4, ModuleKind::Tcp, "present", 1);
    // Pubsub providers: crc, ipv4, tcp, ethernet.
    l.set_value(&mut g, ModuleKind::PubSub, "to", 2).unwrap();
    l.set_value(&mut g, ModuleKind::Tcp, "to", 1).unwrap();
    l.set_value(&mut g, ModuleKind::Tcp, "ts", 1).unwrap();
    let mut tx = stack(&g, Role::Sender);
    let mut rx = stack(&g, Role::Receiver);
    assert_eq!(tx.path(), "pubsub>tcp>ipv4>ethernet");
    let mut out = Vec::new();
    tx.send(0.0, Packet::data(1, 0, 1000, 0.0), &mut out);
    let (_, frame) = out.pop().unwrap();
    assert_eq!(frame.wire_len(), 1000 + 32 + 20 + 18);
    let (mut back, mut up) = (Vec::new(), Vec::new());
    rx.receive(0.01, frame, &mut back, &mut up);
    assert_eq!(up[0].demux, Some(0));
    let (_, ack) = back.pop().unwrap();
    let mut none = Vec::new();
    tx.receive(0.02, ack, &mut out, &mut none);
    assert!(none.is_empty());
    assert_eq!(tx.tcp().unwrap().sender(0).unwrap().in_flight(), 0);
}

#[test]
fn detach_and_recompose_continue_counters() {
    let l = layout();
    let g = genome(CRC_IPV4);
    let opts = ComposeOptions { crc_mode: SchedulerMode::Stochastic, ..Default::default() };
    let mut store = PersistentStore::new();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut s = compose(&l, &g, &opts, Role::Sender, &store, 0.0).unwrap();
    let mut out = Vec::new();
    for i in 0..30 {
        s.send(0.0, Packet::data(i, 0, 1000, 0.0), &mut out);
    }
    s.wake(1.0, &mut rng, &mut out);
    let before = s.phy().bytes;
    let flushed = s.persist_detach(1.0, &mut store);
    // Every packet left the CRC, by firing or by flush.
    assert_eq!(out.len() + flushed.len(), 30);
    let s = compose(&l, &g, &opts, Role::Sender, &store, 1.0).unwrap();
    assert_eq!(s.crc().unwrap().transmitted(), 30);
    assert!(s.phy().bytes >= before);
    assert_eq!(s.phy().bytes, 30 * 1038);

    // Removing the CRC keeps its state in the store for later re-insertion.
    let bare = edit(CRC_IPV4, ModuleKind::PubSub, "to", 1);
    let s = compose(&l, &bare, &opts, Role::Sender, &store, 2.0).unwrap();
    assert!(s.crc().is_none());
    s.persist_detach(2.0, &mut store);
    let s = compose(&l, &g, &opts, Role::Sender, &store, 3.0).unwrap();
    assert_eq!(s.crc().unwrap().enqueued(), 30);
}

#[test]
fn restricted_domains() {
    let mut l = layout();
    l.set_domain(ModuleKind::Crc, "e0", 46, 50).unwrap();
    assert!(l.parse(CRC_IPV4).is_err());
    assert!(l.set_domain(ModuleKind::Crc, "e0", 5, 4).is_err());
    assert!(l.set_domain(ModuleKind::Crc, "nope", 1, 2).is_err());
}

#[test]
fn record_metrics() {
    let r = TrialRecord {
        settle: 2.5,
        phy_rate: alloc::vec![0.0, 0.0, 0.0, 10.0, 20.0],
        sent: 10,
        delivered: 9,
        payload_bytes: 1000,
        wire_bytes: 1038,
        ..Default::default()
    };
    assert_eq!(r.measured_phy(), &[10.0, 20.0]);
    assert_eq!(r.mean_phy_rate(), Some(15.0));
    assert!((r.delivery_ratio() - 0.9).abs() < 1e-12);
    assert_eq!(r.overhead_bytes(), 38);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    /// Every genome in the layout either composes or yields an
    /// `InvalidBlueprint`; resolved paths reach Ethernet without repeats.
    #[test]
    fn compose_is_total(seed in any::<u64>()) {
        let l = layout();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = l.random(&mut rng);
        prop_assert_eq!(l.parse(&l.to_text(&g)).unwrap(), g.clone());
        match resolve_path(&l, &g) {
            Ok(path) => {
                prop_assert_eq!(l.chromosomes()[*path.last().unwrap()].kind, ModuleKind::Ethernet);
                let mut sorted = path.clone();
                sorted.sort_unstable();
                sorted.dedup();
                prop_assert_eq!(sorted.len(), path.len());
                let s = stack(&g, Role::Sender);
                prop_assert_eq!(s.kinds().len(), path.len());
            }
            Err(e) => prop_assert!(!e.code().is_empty()),
        }
    }

    /// Wire bytes equal payload plus the headers of the composed path.
    #[test]
    fn overhead_accounting_exact(seed in any::<u64>(), payload in 1u32..2000) {
        let l = layout();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = l.random(&mut rng);
        if let Ok(mut s) = compose(&l, &g, &ComposeOptions::default(), Role::Sender, &PersistentStore::new(), 0.0) {
            if s.has(ModuleKind::Crc) {
                return Ok(());
            }
            let mut out = Vec::new();
            s.send(0.0, Packet::data(0, 0, payload, 0.0), &mut out);
            let expected: u32 = s.kinds().iter().map(|k| match k {
                ModuleKind::Ethernet => 18,
                ModuleKind::Ipv4 => 20,
                ModuleKind::Udp => 8,
                ModuleKind::Tcp => if s.tcp().unwrap().config().timestamps { 32 } else { 20 },
                _ => 0,
            }).sum();
            prop_assert_eq!(out[0].1.wire_len(), payload + expected);
        }
    }
}
