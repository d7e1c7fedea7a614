use alloc::vec::Vec;

use crate::chem::Payload;

pub const ETHERNET_HEADER: u32 = 18;
pub const IPV4_HEADER: u32 = 20;
pub const UDP_HEADER: u32 = 8;
pub const TCP_HEADER: u32 = 20;
pub const TCP_TIMESTAMP_OPTION: u32 = 12;
pub const TCP_SACK_OPTION: u32 = 8;
pub const APP_ACK_LEN: u32 = 64;
pub const DEFAULT_PAYLOAD: u32 = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Protocol {
    Ethernet,
    Ipv4,
    Udp,
    Tcp,
}

#[derive(Debug, Clone, PartialEq)]
pub enum TcpSegment {
    Data { seq: u64 },
    Ack {
        cumulative: u64,
        sack: Vec<u64>,
        /// Sequence number of the segment that triggered this ack.
        echo_seq: u64,
    },
    /// Reverse-direction traffic carried without sequencing.
    Unsequenced,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TcpHeader {
    pub port: u16,
    pub segment: TcpSegment,
    /// Sender timestamp (data) or echoed timestamp (ack) when enabled.
    pub timestamp: Option<f64>,
}

impl TcpHeader {
    pub fn len(&self) -> u32 {
        let mut len = TCP_HEADER;
        if self.timestamp.is_some() {
            len += TCP_TIMESTAMP_OPTION;
        }
        if let TcpSegment::Ack { sack, .. } = &self.segment {
            if !sack.is_empty() {
                len += TCP_SACK_OPTION;
            }
        }
        len
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Header {
    Ethernet,
    Ipv4,
    Udp { port: u16 },
    Tcp(TcpHeader),
}

impl Header {
    pub fn len(&self) -> u32 {
        match self {
            Header::Ethernet => ETHERNET_HEADER,
            Header::Ipv4 => IPV4_HEADER,
            Header::Udp { .. } => UDP_HEADER,
            Header::Tcp(h) => h.len(),
        }
    }

    pub fn protocol(&self) -> Protocol {
        match self {
            Header::Ethernet => Protocol::Ethernet,
            Header::Ipv4 => Protocol::Ipv4,
            Header::Udp { .. } => Protocol::Udp,
            Header::Tcp(_) => Protocol::Tcp,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PacketKind {
    /// Application data from the source.
    Data,
    /// Application-level acknowledgement from the sink.
    AppAck,
    /// Transport control without application payload.
    Control,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Packet {
    /// Unique per application packet; retransmissions keep the id.
    pub id: u64,
    /// Flow the packet really belongs to.
    pub flow: u16,
    pub kind: PacketKind,
    pub payload_len: u32,
    /// Innermost first; the last entry is the outermost header.
    pub headers: Vec<Header>,
    pub created: f64,
    /// Flow recovered by a transport-layer receiver.
    pub demux: Option<u16>,
}

impl Packet {
    pub fn data(id: u64, flow: u16, payload_len: u32, created: f64) -> Self {
        Packet {
            id,
            flow,
            kind: PacketKind::Data,
            payload_len,
            headers: Vec::new(),
            created,
            demux: None,
        }
    }

    pub fn app_ack(of: &Packet, flow: u16, now: f64) -> Self {
        Packet {
            id: of.id,
            flow,
            kind: PacketKind::AppAck,
            payload_len: APP_ACK_LEN,
            headers: Vec::new(),
            created: now,
            demux: None,
        }
    }

    pub fn control(flow: u16, now: f64) -> Self {
        Packet {
            id: u64::MAX,
            flow,
            kind: PacketKind::Control,
            payload_len: 0,
            headers: Vec::new(),
            created: now,
            demux: None,
        }
    }

    pub fn header_len(&self) -> u32 {
        self.headers.iter().map(Header::len).sum()
    }

    /// Payload plus every header.
    pub fn wire_len(&self) -> u32 {
        self.payload_len + self.header_len()
    }

    pub fn push(&mut self, h: Header) {
        self.headers.push(h);
    }

    pub fn top(&self) -> Option<&Header> {
        self.headers.last()
    }

    /// Pops the outermost header if it belongs to `proto`.
    pub fn pop(&mut self, proto: Protocol) -> Option<Header> {
        if self.top().map(Header::protocol) == Some(proto) {
            self.headers.pop()
        } else {
            None
        }
    }

    /// The protocol carried directly inside the outermost header.
    pub fn inner_protocol(&self) -> Option<Protocol> {
        let n = self.headers.len();
        (n >= 2).then(|| self.headers[n - 2].protocol())
    }
}

impl Payload for Packet {
    fn from_arrival(seq: u64, time: f64) -> Self {
        Packet::data(seq, 0, DEFAULT_PAYLOAD, time)
    }
}
