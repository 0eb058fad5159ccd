//! Closed-form metrics for the three schemes at the default parameters.

use fdmm::analytic::evaluate;
use fdmm::{defaults, Scheme};

fn main() {
    let p = defaults();
    let ev = evaluate(&p).expect("defaults are valid");

    let m = &ev.mobility;
    println!("epoch length   {:10.2} m", m.epoch_length);
    println!("epoch time     {:10.2} s", m.epoch_time);
    println!("mean pause     {:10.2} s", m.pause_time);
    println!("crossings/epoch{:10.4}", m.expected_crossings);
    println!("crossing rate  {:10.6} 1/s", m.crossing_rate);
    println!("active prefixes{:10.4}", ev.prefixes.mean_active_prefixes);
    println!();
    println!(
        "{:<10} {:>12} {:>12} {:>14} {:>12} {:>12}",
        "scheme", "latency[s]", "failure", "recovery[s]", "loss[B]", "cost[B*h/s]"
    );
    for s in Scheme::ALL {
        let r = ev.metrics(s);
        println!(
            "{:<10} {:>12.6} {:>12.6} {:>14.6} {:>12.2} {:>12.3}",
            s,
            r.handover_latency,
            r.failure_prob,
            r.session_recovery,
            r.packet_loss,
            r.signaling_cost
        );
    }
}
