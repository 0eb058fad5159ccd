//! Abstract binary framing for mobility messages.
//!
//! ```text
//! 0        1        2        3                 11       12
//! +--------+--------+--------+-----------------+--------+---------------
//! | ver=1  | kind   | flags  | MU-ID (u64, BE) | n opts | options ...
//! +--------+--------+--------+-----------------+--------+---------------
//! flags: bit0 = D, bits1-2 = T, bit3 = NACK, bits4-7 reserved (zero)
//! option: kind (u8) | length (u16, BE) | payload
//! ```
//!
//! Not wire-compatible with any IETF mobility protocol.

use std::net::Ipv6Addr;

use thiserror::Error;

use super::message::{
    Anchor, MessageKind, MobilityMessage, MobilityOption, OptionKind, Prefix, TargetType, ZoneId,
};

pub const VERSION: u8 = 1;
const HEADER_LEN: usize = 12;
const ANCHOR_LEN: usize = 20;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CodecError {
    #[error("frame truncated")]
    Truncated,
    #[error("unsupported version {0}")]
    BadVersion(u8),
    #[error("unknown message kind {0}")]
    UnknownKind(u8),
    #[error("target type {0} out of range")]
    TargetTypeOutOfRange(u8),
    #[error("target type set on {0}, which carries none")]
    UnexpectedTargetType(MessageKind),
    #[error("reserved flag bits set: {0:#04x}")]
    ReservedFlags(u8),
    #[error("unknown option kind {0}")]
    UnknownOption(u8),
    #[error("option {0:?} appears more than once")]
    DuplicateOption(OptionKind),
    #[error("malformed {0:?} option payload of {1} bytes")]
    BadOptionPayload(OptionKind, usize),
    #[error("{0} trailing bytes after the last option")]
    TrailingBytes(usize),
    #[error("too many options ({0})")]
    TooManyOptions(usize),
    #[error("option payload too large ({0} bytes)")]
    PayloadTooLarge(usize),
}

pub fn encode(msg: &MobilityMessage) -> Result<Vec<u8>, CodecError> {
    let options = msg.options();
    if options.len() > u8::MAX as usize {
        return Err(CodecError::TooManyOptions(options.len()));
    }
    let mut flags = msg.d_flag as u8;
    if let Some(t) = msg.t_flag {
        if !msg.kind.has_target_type() {
            return Err(CodecError::UnexpectedTargetType(msg.kind));
        }
        flags |= (t as u8) << 1;
    }
    if msg.nack {
        flags |= 1 << 3;
    }
    let mut out = Vec::with_capacity(HEADER_LEN + 24 * options.len());
    out.push(VERSION);
    out.push(msg.kind as u8);
    out.push(flags);
    out.extend_from_slice(&msg.mu_id.to_be_bytes());
    out.push(options.len() as u8);
    for option in options {
        let payload = encode_payload(option);
        if payload.len() > u16::MAX as usize {
            return Err(CodecError::PayloadTooLarge(payload.len()));
        }
        out.push(option.kind() as u8);
        out.extend_from_slice(&(payload.len() as u16).to_be_bytes());
        out.extend_from_slice(&payload);
    }
    Ok(out)
}

fn encode_payload(option: &MobilityOption) -> Vec<u8> {
    match option {
        MobilityOption::Lnp(p) => p.octets().to_vec(),
        MobilityOption::PlnpList(anchors) => {
            let mut v = Vec::with_capacity(anchors.len() * ANCHOR_LEN);
            for a in anchors {
                v.extend_from_slice(&a.zone.0.to_be_bytes());
                v.extend_from_slice(&a.prefix.octets());
            }
            v
        }
        MobilityOption::LbsAddr(a) | MobilityOption::MzAddr(a) => a.octets().to_vec(),
        MobilityOption::MuLlaIid(iid) => iid.to_be_bytes().to_vec(),
        MobilityOption::ContextRequest(blob) => blob.clone(),
    }
}

pub fn decode(frame: &[u8]) -> Result<MobilityMessage, CodecError> {
    if frame.len() < HEADER_LEN {
        return Err(CodecError::Truncated);
    }
    if frame[0] != VERSION {
        return Err(CodecError::BadVersion(frame[0]));
    }
    let kind = MessageKind::from_code(frame[1]).ok_or(CodecError::UnknownKind(frame[1]))?;
    let flags = frame[2];
    if flags & 0xf0 != 0 {
        return Err(CodecError::ReservedFlags(flags));
    }
    let t_code = (flags >> 1) & 0b11;
    let t_flag = if kind.has_target_type() {
        Some(TargetType::from_code(t_code).ok_or(CodecError::TargetTypeOutOfRange(t_code))?)
    } else if t_code != 0 {
        return Err(if t_code == 3 {
            CodecError::TargetTypeOutOfRange(t_code)
        } else {
            CodecError::UnexpectedTargetType(kind)
        });
    } else {
        None
    };
    let mu_id = u64::from_be_bytes(frame[3..11].try_into().expect("8 bytes"));
    let count = frame[11] as usize;

    let mut msg =
        MobilityMessage::new_unchecked(kind, mu_id, flags & 1 == 1, t_flag, flags & 0b1000 != 0);
    let mut rest = &frame[HEADER_LEN..];
    for _ in 0..count {
        if rest.len() < 3 {
            return Err(CodecError::Truncated);
        }
        let code = rest[0];
        let len = u16::from_be_bytes([rest[1], rest[2]]) as usize;
        let option_kind = OptionKind::from_code(code).ok_or(CodecError::UnknownOption(code))?;
        if rest.len() < 3 + len {
            return Err(CodecError::Truncated);
        }
        let option = decode_payload(option_kind, &rest[3..3 + len])?;
        msg.try_push(option)
            .map_err(|_| CodecError::DuplicateOption(option_kind))?;
        rest = &rest[3 + len..];
    }
    if !rest.is_empty() {
        return Err(CodecError::TrailingBytes(rest.len()));
    }
    Ok(msg)
}

fn decode_payload(kind: OptionKind, payload: &[u8]) -> Result<MobilityOption, CodecError> {
    let bad = || CodecError::BadOptionPayload(kind, payload.len());
    let addr = |bytes: &[u8]| -> Result<Ipv6Addr, CodecError> {
        let octets: [u8; 16] = bytes.try_into().map_err(|_| bad())?;
        Ok(Ipv6Addr::from(octets))
    };
    Ok(match kind {
        OptionKind::Lnp => MobilityOption::Lnp(Prefix(addr(payload)?)),
        OptionKind::PlnpList => {
            if !payload.len().is_multiple_of(ANCHOR_LEN) {
                return Err(bad());
            }
            let anchors = payload
                .chunks_exact(ANCHOR_LEN)
                .map(|c| Anchor {
                    zone: ZoneId(u32::from_be_bytes(c[..4].try_into().expect("4 bytes"))),
                    prefix: Prefix(Ipv6Addr::from(
                        <[u8; 16]>::try_from(&c[4..]).expect("16 bytes"),
                    )),
                })
                .collect();
            MobilityOption::PlnpList(anchors)
        }
        OptionKind::LbsAddr => MobilityOption::LbsAddr(addr(payload)?),
        OptionKind::MzAddr => MobilityOption::MzAddr(addr(payload)?),
        OptionKind::MuLlaIid => {
            let bytes: [u8; 8] = payload.try_into().map_err(|_| bad())?;
            MobilityOption::MuLlaIid(u64::from_be_bytes(bytes))
        }
        OptionKind::ContextRequest => MobilityOption::ContextRequest(payload.to_vec()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocol::message::LBS_ADDR;
    use proptest::prelude::*;

    fn sample_hi() -> MobilityMessage {
        MobilityMessage::handover(MessageKind::Hi, 42, TargetType::ServingZone)
            .with(MobilityOption::PlnpList(vec![Anchor {
                zone: ZoneId(3),
                prefix: Prefix::for_zone(ZoneId(3), 7),
            }]))
            .with(MobilityOption::LbsAddr(LBS_ADDR))
            .with(MobilityOption::MuLlaIid(0xdead_beef))
    }

    #[test]
    fn hi_round_trip() {
        let msg = sample_hi();
        let frame = encode(&msg).unwrap();
        assert_eq!(frame[0], VERSION);
        assert_eq!(frame[2], 0b001);
        assert_eq!(decode(&frame).unwrap(), msg);
    }

    #[test]
    fn flag_layout() {
        let msg =
            MobilityMessage::handover(MessageKind::Hack, 1, TargetType::ReportedServer).nacked();
        let frame = encode(&msg).unwrap();
        assert_eq!(frame[2], 0b1101);
        assert_eq!(&frame[3..11], &1u64.to_be_bytes());
        assert_eq!(frame.len(), HEADER_LEN);
    }

    #[test]
    fn target_type_three_is_rejected() {
        let mut frame = encode(&sample_hi()).unwrap();
        frame[2] = 0b111;
        assert_eq!(decode(&frame), Err(CodecError::TargetTypeOutOfRange(3)));
    }

    #[test]
    fn malformed_frames() {
        let good = encode(&sample_hi()).unwrap();

        let mut f = good.clone();
        f[0] = 2;
        assert_eq!(decode(&f), Err(CodecError::BadVersion(2)));

        let mut f = good.clone();
        f[1] = 0x7f;
        assert_eq!(decode(&f), Err(CodecError::UnknownKind(0x7f)));

        let mut f = encode(&MobilityMessage::new(MessageKind::Pbu, 9)).unwrap();
        f[2] = 0b100;
        assert_eq!(
            decode(&f),
            Err(CodecError::UnexpectedTargetType(MessageKind::Pbu))
        );

        let mut f = good.clone();
        f[2] |= 0x40;
        assert!(matches!(decode(&f), Err(CodecError::ReservedFlags(_))));

        assert_eq!(decode(&good[..good.len() - 1]), Err(CodecError::Truncated));
        assert_eq!(decode(&good[..5]), Err(CodecError::Truncated));

        let mut f = good.clone();
        f.push(0);
        assert_eq!(decode(&f), Err(CodecError::TrailingBytes(1)));
    }

    #[test]
    fn duplicate_option_in_frame() {
        let msg = MobilityMessage::new(MessageKind::Pbu, 5).with(MobilityOption::MuLlaIid(1));
        let mut f = encode(&msg).unwrap();
        let option = f[HEADER_LEN..].to_vec();
        f.extend_from_slice(&option);
        f[11] = 2;
        assert_eq!(
            decode(&f),
            Err(CodecError::DuplicateOption(OptionKind::MuLlaIid))
        );
    }

    #[test]
    fn bad_payload_lengths() {
        let msg = MobilityMessage::new(MessageKind::Ra, 5)
            .with(MobilityOption::Lnp(Prefix::for_zone(ZoneId(1), 1)));
        let mut f = encode(&msg).unwrap();
        // shrink the declared LNP length by one and drop a byte
        f[HEADER_LEN + 2] = 15;
        f.pop();
        assert_eq!(
            decode(&f),
            Err(CodecError::BadOptionPayload(OptionKind::Lnp, 15))
        );
    }

    fn arb_prefix() -> impl Strategy<Value = Prefix> {
        (any::<u32>(), any::<u16>()).prop_map(|(z, i)| Prefix::for_zone(ZoneId(z), i))
    }

    fn arb_option() -> impl Strategy<Value = MobilityOption> {
        prop_oneof![
            arb_prefix().prop_map(MobilityOption::Lnp),
            proptest::collection::vec(
                (any::<u32>(), arb_prefix()).prop_map(|(z, prefix)| Anchor {
                    zone: ZoneId(z),
                    prefix
                }),
                0..6
            )
            .prop_map(MobilityOption::PlnpList),
            any::<[u8; 16]>().prop_map(|o| MobilityOption::LbsAddr(Ipv6Addr::from(o))),
            any::<u64>().prop_map(MobilityOption::MuLlaIid),
            proptest::collection::vec(any::<u8>(), 0..64).prop_map(MobilityOption::ContextRequest),
            any::<[u8; 16]>().prop_map(|o| MobilityOption::MzAddr(Ipv6Addr::from(o))),
        ]
    }

    pub(crate) fn arb_message() -> impl Strategy<Value = MobilityMessage> {
        (
            proptest::sample::select(MessageKind::ALL.to_vec()),
            any::<u64>(),
            any::<bool>(),
            0u8..3,
            any::<bool>(),
            proptest::collection::vec(arb_option(), 0..6),
        )
            .prop_map(|(kind, mu, d, t, nack, options)| {
                let t_flag = kind
                    .has_target_type()
                    .then(|| TargetType::from_code(t).unwrap());
                let mut msg = MobilityMessage::new_unchecked(kind, mu, d, t_flag, nack);
                for o in options {
                    let _ = msg.try_push(o);
                }
                msg
            })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(2000))]
        #[test]
        fn decode_inverts_encode(msg in arb_message()) {
            let frame = encode(&msg).unwrap();
            prop_assert_eq!(decode(&frame).unwrap(), msg);
        }

        #[test]
        fn decode_never_panics(bytes in proptest::collection::vec(any::<u8>(), 0..80)) {
            let _ = decode(&bytes);
        }
    }
}
