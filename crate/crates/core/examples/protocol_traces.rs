//! Message exchanges of the three handover procedures, replayed through the
//! mix-zone and LBS state machines.

use fdmm::protocol::{Network, ZoneId};

fn show(title: &str, labels: &[String]) {
    println!("{title}");
    for (i, l) in labels.iter().enumerate() {
        println!("  {i:2}  {l}");
    }
}

fn main() {
    let zones = (0..4).map(ZoneId);
    let mut net = Network::new(zones, 16);
    net.add_mu(1, 0xfeed);

    let t = net.initial_attach(1, ZoneId(0), 0.0).unwrap();
    show("initial attach at MZ0", &t.labels());

    let out = net.predictive_handover(1, ZoneId(1), 10.0).unwrap();
    show(
        &format!("{} handover MZ0 -> MZ1", out.mode.as_str()),
        &out.trace.labels(),
    );

    let out = net.reactive_handover(1, ZoneId(2), 20.0).unwrap();
    show(
        &format!("{} handover MZ1 -> MZ2", out.mode.as_str()),
        &out.trace.labels(),
    );

    let mu = net.mu(1).unwrap();
    println!(
        "serving {:?}, lnp {:?}, previous prefixes {}",
        mu.serving,
        mu.lnp,
        mu.plnps.len()
    );
    for z in net.zones() {
        println!("  {:?}: {} tunnel(s)", z.id, z.tunnels.len());
    }
    net.check_invariants().expect("consistent state");

    let mut ddmm = Network::new((0..3).map(ZoneId), 16);
    ddmm.add_mu(7, 0xbeef);
    ddmm.initial_attach(7, ZoneId(0), 0.0).unwrap();
    ddmm.ddmm_handover(7, ZoneId(1), 5.0).unwrap();
    let out = ddmm.ddmm_handover(7, ZoneId(2), 9.0).unwrap();
    show(
        "DDMM handover MZ1 -> MZ2 with two anchors",
        &out.trace.labels(),
    );
}
