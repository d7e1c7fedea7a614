//! Protocol modules and the traffic application pair.
//!
//! Header sizes: Ethernet 18 B (header and FCS), IPv4 20 B, UDP 8 B,
//! TCP-lite 20 B plus 12 B with timestamps and 8 B on acks carrying SACK.

mod packet;
mod sink;
mod source;
pub mod tcp;

pub use packet::{
    Header, Packet, PacketKind, Protocol, TcpHeader, TcpSegment, APP_ACK_LEN, DEFAULT_PAYLOAD,
    ETHERNET_HEADER, IPV4_HEADER, TCP_HEADER, TCP_SACK_OPTION, TCP_TIMESTAMP_OPTION, UDP_HEADER,
};
pub use sink::{Delivery, Sink};
pub use source::{BurstShape, CrossTrafficProfile, Source, SourceProfile};
pub use tcp::{AckMode, Retransmission, TcpConfig, TcpReceiver, TcpSender};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ProtoError {
    #[error("invalid configuration: {0}")]
    Config(&'static str),
}

pub fn ipv4_encap(mut p: Packet) -> Packet {
    p.push(Header::Ipv4);
    p
}

pub fn ipv4_decap(mut p: Packet) -> Option<Packet> {
    p.pop(Protocol::Ipv4).map(|_| p)
}

pub fn udp_encap(mut p: Packet) -> Packet {
    p.push(Header::Udp { port: p.flow });
    p
}

pub fn udp_decap(mut p: Packet) -> Option<Packet> {
    match p.pop(Protocol::Udp)? {
        Header::Udp { port } => {
            p.demux = Some(port);
            Some(p)
        }
        _ => None,
    }
}

pub fn ethernet_encap(mut p: Packet) -> Packet {
    p.push(Header::Ethernet);
    p
}

pub fn ethernet_decap(mut p: Packet) -> Option<Packet> {
    p.pop(Protocol::Ethernet).map(|_| p)
}

/// Byte counter behind the Ethernet `phy_rate` sensor.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PhyCounter {
    pub frames: u64,
    pub bytes: u64,
}

impl PhyCounter {
    pub fn count(&mut self, frame: &Packet) {
        self.frames += 1;
        self.bytes += u64::from(frame.wire_len());
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn crc_ipv4_ethernet_frame_is_1038() {
        let p = Packet::data(0, 0, 1000, 0.0);
        let frame = ethernet_encap(ipv4_encap(p));
        assert_eq!(frame.wire_len(), 1038);
        assert_eq!(frame.inner_protocol(), Some(Protocol::Ipv4));
        let back = ipv4_decap(ethernet_decap(frame).unwrap()).unwrap();
        assert!(back.headers.is_empty());
    }

    #[test]
    fn udp_demuxes_by_flow() {
        let p = udp_encap(Packet::data(0, 1, 1000, 0.0));
        assert_eq!(p.wire_len(), 1008);
        assert_eq!(udp_decap(p).unwrap().demux, Some(1));
        assert!(udp_decap(Packet::data(0, 1, 1000, 0.0)).is_none());
    }

    fn e1_profile() -> SourceProfile {
        SourceProfile {
            mean_rate: 100_000.0,
            peak_rate: 200_000.0,
            payload_len: 1000,
            shape: BurstShape::Download { file_size: 400_000.0 },
        }
    }

    #[test]
    fn long_run_mean_rate() {
        // Oracle: renewal-reward mean = peak · E[on] / (E[on] + E[off]).
        let p = e1_profile();
        assert!((p.peak_rate * p.mean_on() / (p.mean_on() + p.mean_off()) - p.mean_rate).abs() < 1e-9);
        let mut total = 0.0;
        for seed in 0..8 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut s = Source::new(p, 0, 1, &mut rng);
            s.step(&mut rng, 300.0);
            total += s.generated_bytes() as f64;
        }
        let mean = total / 8.0;
        assert!((mean - 30e6).abs() <= 0.05 * 30e6, "{mean}");
    }

    #[test]
    fn idle_phase_emits_nothing_and_bursts_run_at_peak() {
        let p = SourceProfile { shape: BurstShape::Exponential { mean_on: 1.0 }, ..e1_profile() };
        assert!((p.burst_packet_rate() - 200.0).abs() < 1e-12);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut s = Source::new(p, 0, 1, &mut rng);
        let mut last = 0.0;
        let mut max_gap: f64 = 0.0;
        for _ in 0..2000 {
            let t = s.peek_arrival(&mut rng);
            max_gap = max_gap.max(t - last);
            last = t;
            s.take(&mut rng);
        }
        // Idle phases show up as gaps far longer than 1/200 s.
        assert!(max_gap > 0.5);
    }

    #[test]
    fn flows_have_disjoint_ids() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut a = Source::new(SourceProfile::constant(1000.0), 0, 2, &mut rng);
        let mut b = Source::new(SourceProfile::constant(1000.0), 1, 2, &mut rng);
        let ia: alloc::vec::Vec<u64> = a.step(&mut rng, 10.0).iter().map(|p| p.id).collect();
        let ib: alloc::vec::Vec<u64> = b.step(&mut rng, 10.0).iter().map(|p| p.id).collect();
        assert!(ia.iter().all(|i| i % 2 == 0) && ib.iter().all(|i| i % 2 == 1));
    }

    #[test]
    fn profile_validation() {
        assert!(e1_profile().validate().is_ok());
        assert!(SourceProfile { peak_rate: 1.0, ..e1_profile() }.validate().is_err());
    }
}
