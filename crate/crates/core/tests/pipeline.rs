//! Library-level runs across modules: scenario -> sweep -> table -> checks,
//! and protocol state driven by the simulator.

use fdmm::analytic::{evaluate, handover_latency};
use fdmm::experiment::{
    check_table, run_analytic, run_simulate, CheckConfig, Metric, Mode, ResultTable, Sweep,
    SweepSpec,
};
use fdmm::protocol::HandoverMode;
use fdmm::sim::{run_with, SimConfig};
use fdmm::{defaults, parse_scenario, Scheme};

#[test]
fn scenario_drives_the_sweep() {
    let p = parse_scenario("mean_speed = 72km/h\nphi = 30ms\n").unwrap();
    assert_eq!(p.mean_speed, 20.0);
    let spec = SweepSpec {
        sweep: Some(Sweep::parse("r=1000,2000").unwrap()),
        ..SweepSpec::default()
    };
    let t = run_analytic(&spec, &p).unwrap();
    assert_eq!(t.rows.len(), 2 * 3 * 5);
    // row order: value, then scheme, then metric
    let keys: Vec<_> = t
        .rows
        .iter()
        .map(|r| (r.value.unwrap() as i64, r.scheme, r.metric))
        .collect();
    let mut sorted = keys.clone();
    sorted.sort();
    assert_eq!(keys, sorted);
    for c in check_table(&t, &CheckConfig::default()) {
        assert!(c.pass, "{c}");
    }
}

#[test]
fn both_mode_table_round_trips_and_compares() {
    let mut p = defaults();
    p.wireless_fail_prob = 0.0;
    let spec = SweepSpec {
        metrics: vec![Metric::Latency, Metric::SessionRecovery],
        mode: Mode::Both,
        seeds: vec![1, 2, 3],
        duration: 1500.0,
        fleet: 4,
        ..SweepSpec::default()
    };
    let t = run_simulate(&spec, &p).unwrap();
    let csv = t.to_csv_string().unwrap();
    let back = ResultTable::read_csv(csv.as_bytes()).unwrap();
    assert_eq!(back.rows.len(), t.rows.len());
    for (a, b) in t.rows.iter().zip(&back.rows) {
        assert_eq!(a.n, b.n);
        assert_eq!(a.sim_mean, b.sim_mean);
    }
    let checks = check_table(&t, &CheckConfig::default());
    let sim: Vec<_> = checks
        .iter()
        .filter(|c| c.name.starts_with("simulated"))
        .collect();
    assert_eq!(sim.len(), 6);
    assert!(checks.iter().all(|c| c.pass), "{checks:?}");
}

#[test]
fn coverage_gaps_downgrade_prediction_at_large_radius() {
    let mut p = defaults();
    p.mix_zone_radius = 6000.0;
    let r = run_with(&p, &SimConfig::new(Scheme::PreFdmm, 4, 3000.0).fleet(4)).unwrap();
    assert!(!r.is_empty());
    assert!(r
        .records
        .iter()
        .all(|h| matches!(h.mode, HandoverMode::Predictive | HandoverMode::Reactive)));
    assert!(r.traffic.conserved());
}

#[test]
fn stochastic_latency_tracks_closed_form() {
    let p = defaults();
    for scheme in Scheme::ALL {
        let r = run_with(&p, &SimConfig::new(scheme, 12, 2000.0).fleet(8)).unwrap();
        let n = r.records.len() as f64;
        let mean = r.records.iter().map(|h| h.latency).sum::<f64>() / n;
        let hl = handover_latency(scheme, &p).unwrap();
        assert!((mean - hl).abs() / hl < 0.03, "{scheme}: {mean} vs {hl}");
    }
    assert!(evaluate(&p).is_ok());
}
