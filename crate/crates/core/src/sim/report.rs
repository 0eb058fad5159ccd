use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};

use crate::analytic::{handover_failure_prob, Evaluation, Scheme};
use crate::params::SystemParameters;
use crate::protocol::{HandoverMode, ZoneId};

#[derive(Debug, Clone, PartialEq)]
pub struct HandoverRecord {
    pub mu: u64,
    /// Time the handover was triggered, s.
    pub time: f64,
    pub from: ZoneId,
    pub to: ZoneId,
    pub scheme: Scheme,
    pub mode: HandoverMode,
    pub latency: f64,
    pub session_recovery: f64,
    /// Active prefixes (LNP plus pLNPs) when the handover started.
    pub active_prefixes: usize,
    pub packets_lost: u64,
    pub bytes_lost: f64,
    pub packets_buffered: u64,
    pub control_messages: u32,
    pub control_bytes: f64,
    /// Control bytes weighted by the hops each message crossed.
    pub signaling_load: f64,
    /// The vehicle had already left the target zone on completion.
    pub failed: bool,
    /// Whether the target's HACK reached the serving zone before link-down
    /// (predictive attempts only).
    pub hack_before_link_down: Option<bool>,
    /// Any wireless control message delivered between link-down and
    /// re-attachment.
    pub wireless_during_outage: bool,
}

/// Downlink packet bookkeeping for one run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct TrafficCounters {
    pub generated: u64,
    pub delivered: u64,
    pub lost: u64,
    pub buffered: u64,
    pub in_flight: u64,
    /// Largest buffer occupancy seen, packets.
    pub peak_buffered: u64,
}

impl TrafficCounters {
    pub fn conserved(&self) -> bool {
        self.generated == self.delivered + self.lost + self.buffered + self.in_flight
    }

    pub fn merge(&mut self, o: &TrafficCounters) {
        self.generated += o.generated;
        self.delivered += o.delivered;
        self.lost += o.lost;
        self.buffered += o.buffered;
        self.in_flight += o.in_flight;
        self.peak_buffered = self.peak_buffered.max(o.peak_buffered);
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimReport {
    pub scheme: Scheme,
    pub seed: u64,
    pub duration: f64,
    pub fleet: u32,
    pub zone_count: usize,
    pub records: Vec<HandoverRecord>,
    pub traffic: TrafficCounters,
    /// Time spent moving or paused, summed over the fleet, s.
    pub exposure: f64,
    pub analytic: Option<Evaluation>,
    /// Tab-separated event lines when tracing was requested.
    pub trace: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aggregates {
    pub handovers: usize,
    pub predictive: usize,
    pub reactive: usize,
    pub mean_latency: f64,
    pub mean_session_recovery: f64,
    pub mean_bytes_lost: f64,
    pub mean_active_prefixes: f64,
    pub failure_fraction: f64,
    pub crossing_rate: f64,
    pub signaling_rate: f64,
}

fn mean(it: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = it.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        0.0
    } else {
        s / n as f64
    }
}

impl SimReport {
    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn aggregates(&self) -> Aggregates {
        let r = &self.records;
        let n = r.len();
        let exposure = self.exposure.max(f64::MIN_POSITIVE);
        Aggregates {
            handovers: n,
            predictive: r
                .iter()
                .filter(|h| h.mode == HandoverMode::Predictive)
                .count(),
            reactive: r
                .iter()
                .filter(|h| h.mode == HandoverMode::Reactive)
                .count(),
            mean_latency: mean(r.iter().map(|h| h.latency)),
            mean_session_recovery: mean(r.iter().map(|h| h.session_recovery)),
            mean_bytes_lost: mean(r.iter().map(|h| h.bytes_lost)),
            mean_active_prefixes: mean(r.iter().map(|h| h.active_prefixes as f64)),
            failure_fraction: if n == 0 {
                0.0
            } else {
                r.iter().filter(|h| h.failed).count() as f64 / n as f64
            },
            crossing_rate: n as f64 / exposure,
            signaling_rate: r.iter().map(|h| h.signaling_load).sum::<f64>() / exposure,
        }
    }

    /// Sample standard error of a per-handover metric.
    pub fn std_error(&self, f: impl Fn(&HandoverRecord) -> f64) -> f64 {
        let n = self.records.len();
        if n < 2 {
            return 0.0;
        }
        let m = mean(self.records.iter().map(&f));
        let var = self.records.iter().map(|h| (f(h) - m).powi(2)).sum::<f64>() / (n - 1) as f64;
        (var / n as f64).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowStatus {
    Pass,
    Fail,
    /// Reported for information; the model and the simulator are not
    /// expected to agree.
    Advisory,
    NoData,
}

impl fmt::Display for RowStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RowStatus::Pass => "PASS",
            RowStatus::Fail => "FAIL",
            RowStatus::Advisory => "ADVISORY",
            RowStatus::NoData => "NO DATA",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub metric: &'static str,
    pub empirical: f64,
    pub analytic: f64,
    pub rel_error: f64,
    pub tolerance: f64,
    pub status: RowStatus,
    pub note: String,
}

impl fmt::Display for ComparisonRow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.status == RowStatus::NoData {
            return write!(f, "{:<18} {}: {}", self.metric, self.status, self.note);
        }
        write!(
            f,
            "{:<18} sim {:>14.6e}  model {:>14.6e}  rel.err {:>9.3e}  tol {:>7.1e}  {}",
            self.metric, self.empirical, self.analytic, self.rel_error, self.tolerance, self.status
        )?;
        if !self.note.is_empty() {
            write!(f, "  ({})", self.note)?;
        }
        Ok(())
    }
}

/// Relative tolerances of the asserted comparison rows.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub latency: f64,
    pub session_recovery: f64,
    pub packet_loss: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            latency: 0.03,
            session_recovery: 0.03,
            packet_loss: 0.10,
        }
    }
}

pub fn relative_error(sim: f64, ana: f64) -> f64 {
    (sim - ana).abs() / ana.abs().max(1e-12)
}

fn row(metric: &'static str, sim: f64, ana: f64, tol: f64) -> ComparisonRow {
    let rel = relative_error(sim, ana);
    ComparisonRow {
        metric,
        empirical: sim,
        analytic: ana,
        rel_error: rel,
        tolerance: tol,
        status: if rel <= tol {
            RowStatus::Pass
        } else {
            RowStatus::Fail
        },
        note: String::new(),
    }
}

fn advisory(metric: &'static str, sim: f64, ana: f64, note: &str) -> ComparisonRow {
    ComparisonRow {
        status: RowStatus::Advisory,
        note: note.to_string(),
        tolerance: f64::NAN,
        ..row(metric, sim, ana, 0.0)
    }
}

/// Per-metric comparison of a run against the closed forms.
pub fn empirical_vs_analytic(
    report: &SimReport,
    p: &SystemParameters,
    scheme: Scheme,
    tol: &Tolerances,
) -> Vec<ComparisonRow> {
    let Some(ev) = report
        .analytic
        .clone()
        .or_else(|| crate::analytic::evaluate(p).ok())
    else {
        return vec![no_data(
            "model",
            "parameters outside the analytic model's domain",
        )];
    };
    if report.is_empty() {
        return vec![no_data("handovers", "no handovers")];
    }
    let a = report.aggregates();
    let m = ev.metrics(scheme);
    let n = a.handovers as f64;
    let mut rows = vec![
        row("latency", a.mean_latency, m.handover_latency, tol.latency),
        row(
            "session_recovery",
            a.mean_session_recovery,
            m.session_recovery,
            tol.session_recovery,
        ),
    ];
    // loss scales with the active prefix count the run actually had
    let scaled = m.packet_loss / ev.prefixes.mean_active_prefixes * a.mean_active_prefixes;
    let mut loss = row("packet_loss", a.mean_bytes_lost, scaled, tol.packet_loss);
    if scaled == 0.0 {
        loss.status = if a.mean_bytes_lost == 0.0 {
            RowStatus::Pass
        } else {
            RowStatus::Fail
        };
    }
    loss.note = "model rescaled to the observed prefix count".into();
    rows.push(loss);

    let pf = handover_failure_prob(ev.mobility.crossing_rate, m.handover_latency);
    let sigma = (pf * (1.0 - pf) / n).sqrt();
    let mut fail = row("failure_prob", a.failure_fraction, pf, 0.0);
    fail.tolerance = 3.0 * sigma + 1.0 / n;
    fail.status = if (a.failure_fraction - pf).abs() <= fail.tolerance {
        RowStatus::Pass
    } else {
        RowStatus::Fail
    };
    fail.note = "absolute, 3 sigma binomial".into();
    rows.push(fail);

    rows.push(advisory(
        "crossing_rate",
        a.crossing_rate,
        ev.mobility.crossing_rate,
        "zone-count ambiguity of the crossing model",
    ));
    rows.push(advisory(
        "active_prefixes",
        a.mean_active_prefixes,
        ev.prefixes.mean_active_prefixes,
        "",
    ));
    rows.push(advisory(
        "signaling_cost",
        a.signaling_rate,
        m.signaling_cost,
        "per-message hop weighting differs from the model",
    ));
    rows
}

fn no_data(metric: &'static str, note: &str) -> ComparisonRow {
    ComparisonRow {
        metric,
        empirical: f64::NAN,
        analytic: f64::NAN,
        rel_error: f64::NAN,
        tolerance: f64::NAN,
        status: RowStatus::NoData,
        note: note.to_string(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FailureValidation {
    pub crossing_rate: f64,
    pub latency: f64,
    pub trials: u64,
    pub failures: u64,
    pub empirical: f64,
    pub analytic: f64,
    /// Three binomial standard deviations of the empirical fraction.
    pub bound: f64,
}

impl FailureValidation {
    pub fn within_bound(&self) -> bool {
        (self.empirical - self.analytic).abs() <= self.bound
    }
}

/// Samples exponential zone residence times and counts those shorter than
/// the handover latency.
pub fn failure_validation(mu_sn: f64, latency: f64, trials: u64, seed: u64) -> FailureValidation {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let exp = Exp::new(mu_sn).expect("positive crossing rate");
    let failures = (0..trials)
        .filter(|_| exp.sample(&mut rng) < latency)
        .count() as u64;
    let analytic = handover_failure_prob(mu_sn, latency);
    let empirical = failures as f64 / trials as f64;
    FailureValidation {
        crossing_rate: mu_sn,
        latency,
        trials,
        failures,
        empirical,
        analytic,
        bound: 3.0 * (analytic * (1.0 - analytic) / trials as f64).sqrt(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::defaults;

    fn empty() -> SimReport {
        SimReport {
            scheme: Scheme::Ddmm,
            seed: 0,
            duration: 1.0,
            fleet: 1,
            zone_count: 1,
            records: vec![],
            traffic: TrafficCounters::default(),
            exposure: 1.0,
            analytic: None,
            trace: vec![],
        }
    }

    #[test]
    fn empty_report_has_no_data_row() {
        let rows =
            empirical_vs_analytic(&empty(), &defaults(), Scheme::Ddmm, &Tolerances::default());
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].status, RowStatus::NoData);
        assert!(rows[0].to_string().contains("no handovers"));
        let a = empty().aggregates();
        assert_eq!(a.handovers, 0);
        assert_eq!(a.mean_latency, 0.0);
    }

    #[test]
    fn failure_validation_converges() {
        for (mu, hl) in [(0.0134, 0.49), (0.5, 0.4), (2.0, 0.3)] {
            let v = failure_validation(mu, hl, 10_000, 9);
            assert!(v.within_bound(), "{v:?}");
        }
    }

    #[test]
    fn relative_error_guards_zero() {
        assert_eq!(relative_error(0.0, 0.0), 0.0);
        assert!(relative_error(1e-3, 0.0) > 1e6);
    }
}
