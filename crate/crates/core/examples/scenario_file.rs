//! Loading parameters from a scenario file, with unit suffixes and the
//! values derived when a field is left out.

use fdmm::params::{parse_scenario, unit_label};

const SCENARIO: &str = "
# denser, faster city
mix_zone_radius = 1.5km
mean_speed = 54km/h
wireless_fail_prob = 0.2
phi = 20ms
";

fn main() {
    let p = parse_scenario(SCENARIO).expect("scenario parses");
    p.validate().expect("scenario is consistent");
    for key in [
        "mix_zone_radius",
        "mean_speed",
        "phi",
        "zones_per_row",
        "k1",
    ] {
        println!("{key:<16} = {} {}", p.get(key).unwrap(), unit_label(key));
    }
    for note in p.derivation_notes() {
        println!("note: {note}");
    }

    match parse_scenario("wireless_fail_prob = 1.5") {
        Ok(_) => println!("unexpectedly accepted"),
        Err(e) => println!("rejected: {e}"),
    }
    match parse_scenario("warp_factor = 9") {
        Ok(_) => println!("unexpectedly accepted"),
        Err(e) => println!("rejected: {e}"),
    }
}
