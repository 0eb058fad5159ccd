use std::fmt;
use std::net::Ipv6Addr;

use super::ProtocolError;

/// Mobile unit identifier carried in every message header.
pub type MuId = u64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ZoneId(pub u32);

impl fmt::Display for ZoneId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "MZ{}", self.0)
    }
}

impl ZoneId {
    /// Control-plane address of the mix-zone server.
    pub fn addr(self) -> Ipv6Addr {
        Ipv6Addr::new(0xfd00, 0, 0, 0, 0, 0, (self.0 >> 16) as u16, self.0 as u16)
    }

    pub fn from_addr(addr: Ipv6Addr) -> Option<ZoneId> {
        let s = addr.segments();
        if s[..6] != [0xfd00, 0, 0, 0, 0, 0] || addr == LBS_ADDR {
            return None;
        }
        Some(ZoneId(((s[6] as u32) << 16) | s[7] as u32))
    }
}

pub const LBS_ADDR: Ipv6Addr = Ipv6Addr::new(0xfd00, 0, 0, 0, 0, 0, 0xffff, 0xffff);

/// A /64 network prefix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Prefix(pub Ipv6Addr);

impl Prefix {
    /// The `index`-th prefix of a zone's pool; pools of distinct zones never
    /// overlap.
    pub fn for_zone(zone: ZoneId, index: u16) -> Self {
        Prefix(Ipv6Addr::new(
            0xfd10,
            (zone.0 >> 16) as u16,
            zone.0 as u16,
            index,
            0,
            0,
            0,
            0,
        ))
    }

    /// Zone whose pool this prefix was drawn from.
    pub fn zone(self) -> Option<ZoneId> {
        let s = self.0.segments();
        (s[0] == 0xfd10).then(|| ZoneId(((s[1] as u32) << 16) | s[2] as u32))
    }

    pub fn index(self) -> u16 {
        self.0.segments()[3]
    }

    pub fn octets(self) -> [u8; 16] {
        self.0.octets()
    }
}

impl fmt::Display for Prefix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/64", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum NodeId {
    Mu(MuId),
    Zone(ZoneId),
    Lbs,
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NodeId::Mu(id) => write!(f, "MU{id}"),
            NodeId::Zone(z) => z.fmt(f),
            NodeId::Lbs => f.write_str("LBS"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum MessageKind {
    Rs = 1,
    Ra = 2,
    Pbu = 3,
    Pba = 4,
    Hi = 5,
    Hack = 6,
    L2Report = 7,
    HandoverCommand = 8,
    Data = 9,
}

impl MessageKind {
    pub const ALL: [MessageKind; 9] = [
        MessageKind::Rs,
        MessageKind::Ra,
        MessageKind::Pbu,
        MessageKind::Pba,
        MessageKind::Hi,
        MessageKind::Hack,
        MessageKind::L2Report,
        MessageKind::HandoverCommand,
        MessageKind::Data,
    ];

    pub fn from_code(code: u8) -> Option<Self> {
        Self::ALL.into_iter().find(|k| *k as u8 == code)
    }

    pub fn is_control(self) -> bool {
        self != MessageKind::Data
    }

    /// HI and HACK are the only kinds that carry a target type.
    pub fn has_target_type(self) -> bool {
        matches!(self, MessageKind::Hi | MessageKind::Hack)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            MessageKind::Rs => "RS",
            MessageKind::Ra => "RA",
            MessageKind::Pbu => "PBU",
            MessageKind::Pba => "PBA",
            MessageKind::Hi => "HI",
            MessageKind::Hack => "HACK",
            MessageKind::L2Report => "L2_REPORT",
            MessageKind::HandoverCommand => "HANDOVER_COMMAND",
            MessageKind::Data => "DATA",
        }
    }
}

impl fmt::Display for MessageKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Target type of an HI/HACK exchange.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum TargetType {
    /// Serving mix zone towards the new one (predictive).
    ServingZone = 0,
    /// Towards a zone still anchoring one of the MU's prefixes.
    AnchoredZone = 1,
    /// New zone towards the reported server (reactive).
    ReportedServer = 2,
}

impl TargetType {
    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(TargetType::ServingZone),
            1 => Some(TargetType::AnchoredZone),
            2 => Some(TargetType::ReportedServer),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[repr(u8)]
pub enum OptionKind {
    Lnp = 1,
    PlnpList = 2,
    LbsAddr = 3,
    MuLlaIid = 4,
    ContextRequest = 5,
    MzAddr = 6,
}

impl OptionKind {
    pub fn from_code(code: u8) -> Option<Self> {
        [
            OptionKind::Lnp,
            OptionKind::PlnpList,
            OptionKind::LbsAddr,
            OptionKind::MuLlaIid,
            OptionKind::ContextRequest,
            OptionKind::MzAddr,
        ]
        .into_iter()
        .find(|k| *k as u8 == code)
    }
}

/// A prefix still anchored at an earlier zone.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Anchor {
    pub zone: ZoneId,
    pub prefix: Prefix,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum MobilityOption {
    Lnp(Prefix),
    /// Previous prefixes and the zones anchoring them.
    PlnpList(Vec<Anchor>),
    LbsAddr(Ipv6Addr),
    /// Link-layer interface identifier of the MU; never zero.
    MuLlaIid(u64),
    /// Opaque context blob; empty in a request.
    ContextRequest(Vec<u8>),
    MzAddr(Ipv6Addr),
}

impl MobilityOption {
    pub fn kind(&self) -> OptionKind {
        match self {
            MobilityOption::Lnp(_) => OptionKind::Lnp,
            MobilityOption::PlnpList(_) => OptionKind::PlnpList,
            MobilityOption::LbsAddr(_) => OptionKind::LbsAddr,
            MobilityOption::MuLlaIid(_) => OptionKind::MuLlaIid,
            MobilityOption::ContextRequest(_) => OptionKind::ContextRequest,
            MobilityOption::MzAddr(_) => OptionKind::MzAddr,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MobilityMessage {
    pub kind: MessageKind,
    pub mu_id: MuId,
    pub d_flag: bool,
    /// Present exactly on HI and HACK.
    pub t_flag: Option<TargetType>,
    /// Negative acknowledgement on PBA/HACK (binding miss, unknown context).
    pub nack: bool,
    options: Vec<MobilityOption>,
}

impl MobilityMessage {
    /// Control message without a target type.
    pub fn new(kind: MessageKind, mu_id: MuId) -> Self {
        debug_assert!(!kind.has_target_type());
        MobilityMessage {
            kind,
            mu_id,
            d_flag: false,
            t_flag: None,
            nack: false,
            options: Vec::new(),
        }
    }

    /// Builds a message from raw header fields without checking that the
    /// target type matches the kind.
    pub fn new_unchecked(
        kind: MessageKind,
        mu_id: MuId,
        d_flag: bool,
        t_flag: Option<TargetType>,
        nack: bool,
    ) -> Self {
        MobilityMessage {
            kind,
            mu_id,
            d_flag,
            t_flag,
            nack,
            options: Vec::new(),
        }
    }

    /// HI or HACK of the distributed extension (D = 1).
    pub fn handover(kind: MessageKind, mu_id: MuId, target: TargetType) -> Self {
        debug_assert!(kind.has_target_type());
        MobilityMessage {
            kind,
            mu_id,
            d_flag: true,
            t_flag: Some(target),
            nack: false,
            options: Vec::new(),
        }
    }

    pub fn nacked(mut self) -> Self {
        self.nack = true;
        self
    }

    /// Appends an option, panicking on a duplicate kind. Use
    /// [`MobilityMessage::try_push`] for untrusted input.
    pub fn with(mut self, option: MobilityOption) -> Self {
        self.try_push(option).expect("option kind already present");
        self
    }

    pub fn try_push(&mut self, option: MobilityOption) -> Result<(), ProtocolError> {
        if self.option(option.kind()).is_some() {
            return Err(ProtocolError::DuplicateOption(option.kind()));
        }
        self.options.push(option);
        Ok(())
    }

    pub fn options(&self) -> &[MobilityOption] {
        &self.options
    }

    pub fn option(&self, kind: OptionKind) -> Option<&MobilityOption> {
        self.options.iter().find(|o| o.kind() == kind)
    }

    pub fn lnp(&self) -> Option<Prefix> {
        match self.option(OptionKind::Lnp) {
            Some(MobilityOption::Lnp(p)) => Some(*p),
            _ => None,
        }
    }

    pub fn plnps(&self) -> &[Anchor] {
        match self.option(OptionKind::PlnpList) {
            Some(MobilityOption::PlnpList(list)) => list,
            _ => &[],
        }
    }

    /// Size the performance model charges for this message.
    pub fn model_size(&self, control_size: f64, data_size: f64) -> f64 {
        if self.kind.is_control() {
            control_size
        } else {
            data_size
        }
    }

    /// Flags as rendered in traces, e.g. `D=1,T=2`.
    pub fn flag_label(&self) -> String {
        let mut s = String::new();
        if self.kind.has_target_type() || self.d_flag {
            s.push_str(if self.d_flag { "D=1" } else { "D=0" });
        }
        if let Some(t) = self.t_flag {
            s.push_str(&format!(",T={}", t as u8));
        }
        if self.nack {
            if !s.is_empty() {
                s.push(',');
            }
            s.push_str("NACK");
        }
        if s.is_empty() {
            s.push('-');
        }
        s
    }
}
