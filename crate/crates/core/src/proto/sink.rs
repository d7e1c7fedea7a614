//! Acknowledging sink.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec::Vec;

use super::packet::{Packet, PacketKind};

/// One first-time delivery.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Delivery {
    pub id: u64,
    pub flow: u16,
    pub attributed: u16,
    pub created: f64,
    pub at: f64,
    pub payload_len: u32,
}

impl Delivery {
    pub fn correct(&self) -> bool {
        self.flow == self.attributed
    }

    pub fn delay(&self) -> f64 {
        self.at - self.created
    }
}

#[derive(Debug, Clone, Default)]
pub struct Sink {
    seen: BTreeSet<u64>,
    deliveries: Vec<Delivery>,
    per_flow: BTreeMap<u16, u64>,
    duplicates: u64,
    misattributed: u64,
}

impl Sink {
    pub fn new() -> Self {
        Sink::default()
    }

    /// Records `packet` and returns the application ack. Packets without a
    /// transport-layer demux are attributed to flow 0.
    pub fn receive(&mut self, now: f64, packet: &Packet) -> Option<Packet> {
        if packet.kind != PacketKind::Data {
            return None;
        }
        let attributed = packet.demux.unwrap_or(0);
        if !self.seen.insert(packet.id) {
            self.duplicates += 1;
            return Some(Packet::app_ack(packet, attributed, now));
        }
        let d = Delivery {
            id: packet.id,
            flow: packet.flow,
            attributed,
            created: packet.created,
            at: now,
            payload_len: packet.payload_len,
        };
        if !d.correct() {
            self.misattributed += 1;
        }
        *self.per_flow.entry(attributed).or_insert(0) += 1;
        self.deliveries.push(d);
        Some(Packet::app_ack(packet, attributed, now))
    }

    pub fn deliveries(&self) -> &[Delivery] {
        &self.deliveries
    }

    pub fn delivered(&self) -> u64 {
        self.deliveries.len() as u64
    }

    pub fn was_delivered(&self, id: u64) -> bool {
        self.seen.contains(&id)
    }

    /// First-time deliveries counted per attributed flow.
    pub fn per_flow(&self) -> &BTreeMap<u16, u64> {
        &self.per_flow
    }

    pub fn duplicates(&self) -> u64 {
        self.duplicates
    }

    pub fn misattributed(&self) -> u64 {
        self.misattributed
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::proto::APP_ACK_LEN;

    #[test]
    fn n_packets_n_acks() {
        let mut s = Sink::new();
        let acks = (0..5).filter_map(|i| s.receive(1.0, &Packet::data(i, 0, 1000, 0.0))).count();
        assert_eq!(acks, 5);
        assert_eq!(s.delivered(), 5);
        assert_eq!(Packet::app_ack(&Packet::data(0, 0, 1000, 0.0), 0, 0.0).wire_len(), APP_ACK_LEN);
    }

    #[test]
    fn duplicate_flagged() {
        let mut s = Sink::new();
        let p = Packet::data(3, 0, 1000, 0.0);
        s.receive(1.0, &p);
        s.receive(2.0, &p);
        assert_eq!(s.delivered(), 1);
        assert_eq!(s.duplicates(), 1);
    }

    #[test]
    fn undemuxed_flows_misattributed() {
        let mut s = Sink::new();
        for i in 0..10u64 {
            s.receive(1.0, &Packet::data(i, (i % 2) as u16, 1000, 0.0));
        }
        assert_eq!(s.misattributed(), 5);
        let mut p = Packet::data(99, 1, 1000, 0.0);
        p.demux = Some(1);
        s.receive(1.0, &p);
        assert_eq!(s.misattributed(), 5);
    }
}
