//! Simulating a small fleet under each scheme and comparing the measured
//! metrics with the closed forms.

use fdmm::sim::{empirical_vs_analytic, run_with, SimConfig, Tolerances};
use fdmm::{defaults, Scheme};

fn main() {
    let p = defaults();
    let tol = Tolerances::default();
    for scheme in Scheme::ALL {
        let cfg = SimConfig::new(scheme, 2024, 1500.0).fleet(4);
        let report = run_with(&p, &cfg).expect("valid configuration");
        let a = report.aggregates();
        println!(
            "== {scheme}: {} handovers ({} predictive, {} reactive) over {} zones",
            a.handovers, a.predictive, a.reactive, report.zone_count
        );
        println!(
            "   packets generated {}, delivered {}, lost {}, peak buffered {}",
            report.traffic.generated,
            report.traffic.delivered,
            report.traffic.lost,
            report.traffic.peak_buffered
        );
        for row in empirical_vs_analytic(&report, &p, scheme, &tol) {
            println!("   {row}");
        }
    }
}
