//! Seeded discrete-event simulation of vehicles roaming across mix zones.
//!
//! Each vehicle follows a City Section Mobility trajectory over the road
//! grid. When the serving zone's signal drops below the handover threshold
//! and a neighbour is stronger, the chosen scheme's signaling is replayed
//! through the protocol state machines with per-link delays, wireless
//! retransmissions and processing times. The measured latency, session
//! recovery, packet loss and signaling of every handover end up in a
//! [`SimReport`].

mod engine;
pub mod queue;
pub mod report;
pub mod topology;
pub mod trajectory;

use thiserror::Error;

use crate::analytic::{evaluate, Scheme};
use crate::params::{ParamError, SystemParameters};
use crate::protocol::ProtocolError;

pub use report::{
    empirical_vs_analytic, failure_validation, relative_error, Aggregates, ComparisonRow,
    FailureValidation, HandoverRecord, RowStatus, SimReport, Tolerances, TrafficCounters,
};
pub use topology::{build_topology, rss, MixZoneTopology, Point};
pub use trajectory::{gen_trajectory, TrajectoryEpoch};

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Params(#[from] ParamError),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error("topology has no mix zones")]
    NoZones,
    #[error("distance must be positive, got {0} m")]
    Distance(f64),
    #[error("duration must be positive, got {0} s")]
    Duration(f64),
    #[error("fleet size must be at least 1")]
    EmptyFleet,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub scheme: Scheme,
    pub seed: u64,
    /// Simulated time per vehicle, s.
    pub duration: f64,
    pub fleet: u32,
    pub trace: bool,
    /// RSS sampling period, s.
    pub sample_interval: f64,
    pub pool_capacity: u16,
}

impl SimConfig {
    pub fn new(scheme: Scheme, seed: u64, duration: f64) -> Self {
        SimConfig {
            scheme,
            seed,
            duration,
            fleet: 1,
            trace: false,
            sample_interval: 0.1,
            pool_capacity: 4096,
        }
    }

    pub fn fleet(mut self, n: u32) -> Self {
        self.fleet = n;
        self
    }

    pub fn traced(mut self) -> Self {
        self.trace = true;
        self
    }
}

pub fn run(
    p: &SystemParameters,
    scheme: Scheme,
    seed: u64,
    duration: f64,
) -> Result<SimReport, SimError> {
    run_with(p, &SimConfig::new(scheme, seed, duration))
}

/// Runs every vehicle of the fleet independently; they share the topology
/// but no protocol state.
pub fn run_with(p: &SystemParameters, cfg: &SimConfig) -> Result<SimReport, SimError> {
    p.validate()?;
    if !(cfg.duration > 0.0) {
        return Err(SimError::Duration(cfg.duration));
    }
    if cfg.fleet == 0 {
        return Err(SimError::EmptyFleet);
    }
    let topo = build_topology(p)?;
    let mut report = SimReport {
        scheme: cfg.scheme,
        seed: cfg.seed,
        duration: cfg.duration,
        fleet: cfg.fleet,
        zone_count: topo.len(),
        records: Vec::new(),
        traffic: TrafficCounters::default(),
        exposure: cfg.duration * cfg.fleet as f64,
        analytic: evaluate(p).ok(),
        trace: Vec::new(),
    };
    for i in 0..cfg.fleet {
        let run = engine::simulate_mu(p, &topo, cfg, i)?;
        report.records.extend(run.records);
        report.traffic.merge(&run.traffic);
        report.trace.extend(run.trace);
    }
    report
        .records
        .sort_by(|a, b| a.time.total_cmp(&b.time).then(a.mu.cmp(&b.mu)));
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::{handover_latency, session_recovery};
    use crate::params::defaults;
    use crate::protocol::HandoverMode;

    fn deterministic() -> SystemParameters {
        let mut p = defaults();
        p.wireless_fail_prob = 0.0;
        p
    }

    #[test]
    fn deterministic_latency_matches_closed_form() {
        let p = deterministic();
        for scheme in Scheme::ALL {
            let r = run_with(&p, &SimConfig::new(scheme, 7, 3000.0).fleet(2)).unwrap();
            assert!(r.records.len() >= 20, "{scheme}: {}", r.records.len());
            let hl = handover_latency(scheme, &p).unwrap();
            let sr = session_recovery(scheme, &p).unwrap();
            for h in &r.records {
                assert!(
                    (h.latency - hl).abs() <= 1e-6,
                    "{scheme}: {} vs {hl}",
                    h.latency
                );
                assert!((h.session_recovery - sr).abs() <= 1e-6, "{scheme} sr");
            }
        }
    }

    #[test]
    fn predictive_runs_are_predictive_at_defaults() {
        let r = run(&defaults(), Scheme::PreFdmm, 3, 3000.0).unwrap();
        assert!(!r.is_empty());
        for h in &r.records {
            assert_eq!(h.mode, HandoverMode::Predictive);
            assert_eq!(h.hack_before_link_down, Some(true));
            assert_eq!(h.packets_lost, 0);
            assert!(!h.wireless_during_outage);
        }
    }

    #[test]
    fn late_hack_falls_back_to_reactive() {
        let mut p = deterministic();
        p.phi = 0.01;
        p.scan_time = 0.005;
        let r = run(&p, Scheme::PreFdmm, 3, 2000.0).unwrap();
        assert!(!r.is_empty());
        let hl = handover_latency(Scheme::ReFdmm, &p).unwrap();
        for h in &r.records {
            assert_eq!(h.mode, HandoverMode::Reactive);
            assert_eq!(h.hack_before_link_down, Some(false));
            assert!((h.latency - hl).abs() < 1e-6);
        }
    }

    #[test]
    fn same_seed_same_report() {
        let p = defaults();
        let cfg = SimConfig::new(Scheme::PreFdmm, 11, 1500.0).traced();
        let a = run_with(&p, &cfg).unwrap();
        let b = run_with(&p, &cfg).unwrap();
        assert_eq!(a, b);
        assert!(!a.trace.is_empty());
        assert_eq!(a.trace[0].split('\t').count(), 6);
    }

    #[test]
    fn packets_are_conserved() {
        let p = defaults();
        for scheme in Scheme::ALL {
            for seed in 0..3 {
                let r = run(&p, scheme, seed, 800.0).unwrap();
                assert!(r.traffic.conserved(), "{scheme} {:?}", r.traffic);
                assert!(r.traffic.generated > 0);
            }
        }
    }

    #[test]
    fn zero_buffer_loses_the_buffering_interval() {
        let mut p = deterministic();
        p.buffer_size = 0.0;
        let r = run_with(&p, &SimConfig::new(Scheme::PreFdmm, 5, 4000.0).fleet(4)).unwrap();
        let a = r.aggregates();
        let t_buf = crate::analytic::buffering_time(&p).unwrap();
        let expected = p.session_packet_rate * a.mean_active_prefixes * t_buf;
        let per_ho =
            r.records.iter().map(|h| h.packets_lost as f64).sum::<f64>() / a.handovers as f64;
        let se = (expected / a.handovers as f64).sqrt();
        assert!(
            (per_ho - expected).abs() < 4.0 * se + 0.5,
            "{per_ho} vs {expected}"
        );
    }

    #[test]
    fn buffer_never_exceeds_capacity() {
        let mut p = defaults();
        p.buffer_size = 4_000.0;
        let r = run(&p, Scheme::PreFdmm, 2, 2000.0).unwrap();
        assert!(r.traffic.peak_buffered as f64 * p.data_packet_size <= p.buffer_size);
        assert!(r.records.iter().any(|h| h.packets_lost > 0));
    }

    #[test]
    fn short_or_stationary_runs_have_no_handovers() {
        let p = defaults();
        let r = run(&p, Scheme::Ddmm, 1, 0.5).unwrap();
        assert!(r.is_empty());
        let mut still = defaults();
        still.mean_speed = 0.0;
        let r = run(&still, Scheme::Ddmm, 1, 1000.0).unwrap();
        assert!(r.is_empty());
        assert_eq!(r.aggregates().failure_fraction, 0.0);
        assert!(run(&p, Scheme::Ddmm, 1, 0.0).is_err());
    }

    #[test]
    fn comparison_rows_pass_in_deterministic_regime() {
        let p = deterministic();
        let r = run(&p, Scheme::ReFdmm, 8, 3000.0).unwrap();
        let rows = empirical_vs_analytic(&r, &p, Scheme::ReFdmm, &Tolerances::default());
        let lat = rows.iter().find(|r| r.metric == "latency").unwrap();
        assert!(lat.rel_error < 1e-6);
        assert_eq!(lat.status, RowStatus::Pass);
        assert!(rows
            .iter()
            .any(|r| r.metric == "crossing_rate" && r.status == RowStatus::Advisory));
    }
}
