//! Wire framing of mobility messages: encode, inspect, decode.

use std::net::Ipv6Addr;

use fdmm::protocol::codec::{decode, encode};
use fdmm::protocol::{
    Anchor, MessageKind, MobilityMessage, MobilityOption, Prefix, TargetType, ZoneId, LBS_ADDR,
};

fn main() {
    let lnp = Prefix::for_zone(ZoneId(3), 1);
    let old = Anchor {
        prefix: Prefix::for_zone(ZoneId(2), 5),
        zone: ZoneId(2),
    };
    let msg = MobilityMessage::handover(MessageKind::Hack, 42, TargetType::ReportedServer)
        .with(MobilityOption::Lnp(lnp))
        .with(MobilityOption::MuLlaIid(0x0211_22ff_fe33_4455))
        .with(MobilityOption::LbsAddr(LBS_ADDR))
        .with(MobilityOption::PlnpList(vec![old]))
        .with(MobilityOption::MzAddr(Ipv6Addr::LOCALHOST));

    let frame = encode(&msg).unwrap();
    println!(
        "{} {} -> {} bytes",
        msg.kind.as_str(),
        msg.flag_label(),
        frame.len()
    );
    for chunk in frame.chunks(16) {
        let hex: Vec<String> = chunk.iter().map(|b| format!("{b:02x}")).collect();
        println!("  {}", hex.join(" "));
    }
    let back = decode(&frame).unwrap();
    assert_eq!(back, msg);
    println!(
        "decoded: lnp {:?}, {} previous prefix(es)",
        back.lnp(),
        back.plnps().len()
    );

    let mut bad = frame.clone();
    bad.truncate(frame.len() - 3);
    println!("truncated frame: {}", decode(&bad).unwrap_err());
}
