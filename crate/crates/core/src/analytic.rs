//! Closed-form performance model: mobility statistics, prefix population,
//! and per-scheme handover latency, failure probability, session recovery,
//! packet loss and signaling cost.
//!
//! All functions are pure. Delays are deterministic expectations; wireless
//! links carry the expected retransmission factor `1 / (1 - p_f)`.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::params::{derive_topology_counts, ParamError, SystemParameters};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalyticError {
    #[error(transparent)]
    Params(#[from] ParamError),
    #[error("expected subnet crossings E(C) = {0} is not positive")]
    NonPositiveCrossings(f64),
    #[error("L2 plus authentication time {total} s does not exceed the scan time {scan} s")]
    ScanExceedsAttach { total: f64, scan: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Scheme {
    Ddmm,
    PreFdmm,
    ReFdmm,
}

impl Scheme {
    pub const ALL: [Scheme; 3] = [Scheme::Ddmm, Scheme::PreFdmm, Scheme::ReFdmm];

    pub fn as_str(self) -> &'static str {
        match self {
            Scheme::Ddmm => "DDMM",
            Scheme::PreFdmm => "PRE_FDMM",
            Scheme::ReFdmm => "RE_FDMM",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.as_str())
    }
}

impl FromStr for Scheme {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().replace('-', "_").as_str() {
            "DDMM" => Ok(Scheme::Ddmm),
            "PRE_FDMM" | "PRE" => Ok(Scheme::PreFdmm),
            "RE_FDMM" | "RE" => Ok(Scheme::ReFdmm),
            _ => Err(format!(
                "unknown scheme `{s}` (expected DDMM, PRE_FDMM or RE_FDMM)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MobilityStats {
    pub epoch_length: f64,
    pub epoch_time: f64,
    pub pause_time: f64,
    pub expected_crossings: f64,
    pub residence_time: f64,
    pub crossing_rate: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrefixStats {
    pub mean_active_prefixes: f64,
    pub mean_anchored_prefixes: f64,
    pub handover_survival_prob: f64,
    pub mean_prefix_lifetime: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchemeMetrics {
    pub scheme: Scheme,
    pub handover_latency: f64,
    pub failure_prob: f64,
    pub session_recovery: f64,
    /// Bytes lost per handover.
    pub packet_loss: f64,
    /// Hop-weighted signaling bytes per second.
    pub signaling_cost: f64,
}

/// One hop class of the path a message travels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkSpec {
    pub packet_size: f64,
    pub bandwidth: f64,
    pub prop_delay: f64,
    pub hops: u32,
    pub loss_prob: f64,
}

/// Expected one-way delay: `(8 L / BW + l) / (1 - p) * h`.
pub fn link_delay(ls: &LinkSpec) -> f64 {
    (8.0 * ls.packet_size / ls.bandwidth + ls.prop_delay) / (1.0 - ls.loss_prob) * ls.hops as f64
}

/// Link descriptions for the hop classes used by the model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Links {
    pub mu_mz_control: LinkSpec,
    pub mu_mz_data: LinkSpec,
    pub lbs_mz_control: LinkSpec,
    pub mz_mz_control: LinkSpec,
    pub mz_mz_data: LinkSpec,
}

impl Links {
    pub fn new(p: &SystemParameters) -> Self {
        let wireless = |size| LinkSpec {
            packet_size: size,
            bandwidth: p.wireless_bandwidth,
            prop_delay: p.wireless_prop_delay,
            hops: p.hops_mu_mz,
            loss_prob: p.wireless_fail_prob,
        };
        let wired = |size, hops| LinkSpec {
            packet_size: size,
            bandwidth: p.wired_bandwidth,
            prop_delay: p.wired_prop_delay,
            hops,
            loss_prob: 0.0,
        };
        let h_mz = p.effective_hops_mz_mz();
        Links {
            mu_mz_control: wireless(p.control_packet_size),
            mu_mz_data: wireless(p.data_packet_size),
            lbs_mz_control: wired(p.control_packet_size, p.hops_lbs_mz),
            mz_mz_control: wired(p.control_packet_size, h_mz),
            mz_mz_data: wired(p.data_packet_size, h_mz),
        }
    }
}

/// The expected delays every closed form is assembled from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Delays {
    pub mu_mz_c: f64,
    pub mu_mz_d: f64,
    pub lbs_mz_c: f64,
    pub mz_mz_c: f64,
    pub mz_mz_d: f64,
    /// HI/HACK exchange including target processing.
    pub t_hi: f64,
    /// L2 attach plus authentication.
    pub attach: f64,
}

impl Delays {
    pub fn new(p: &SystemParameters) -> Self {
        let links = Links::new(p);
        let mz_mz_c = link_delay(&links.mz_mz_control);
        Delays {
            mu_mz_c: link_delay(&links.mu_mz_control),
            mu_mz_d: link_delay(&links.mu_mz_data),
            lbs_mz_c: link_delay(&links.lbs_mz_control),
            mz_mz_c,
            mz_mz_d: link_delay(&links.mz_mz_data),
            t_hi: 2.0 * mz_mz_c + p.proc_time_mz,
            attach: p.l2_latency + p.auth_latency,
        }
    }
}

pub fn mobility_stats(p: &SystemParameters) -> Result<MobilityStats, AnalyticError> {
    let counts = derive_topology_counts(p)?;
    let nx = counts.road_count_x as f64;
    let ny = counts.road_count_y as f64;
    let epoch_length = p.area_x * (nx + 1.0) / (3.0 * nx) + p.area_y * (ny + 1.0) / (3.0 * ny);
    // x-direction zone count pairs with the x road count and K1
    let crossings = expected_crossings(
        counts.zones_per_row as f64,
        counts.zones_per_col as f64,
        p.effective_k1(),
        p.effective_k2(),
        nx,
        ny,
    );
    if !(crossings > 0.0) {
        return Err(AnalyticError::NonPositiveCrossings(crossings));
    }
    let pause_time = p.max_pause / 2.0;
    let epoch_time = epoch_length / p.mean_speed;
    let residence_time = (epoch_time + 2.0 * pause_time) / crossings;
    Ok(MobilityStats {
        epoch_length,
        epoch_time,
        pause_time,
        expected_crossings: crossings,
        residence_time,
        crossing_rate: 1.0 / residence_time,
    })
}

/// Expected number of zone boundaries crossed per epoch on an `m x n`
/// zone layout with `nx x ny` roads.
pub fn expected_crossings(m: f64, n: f64, k1: f64, k2: f64, nx: f64, ny: f64) -> f64 {
    m * k1 * (m + 1.0) / (6.0 * nx * nx) * (6.0 * nx - 4.0 * m * k1 + k1 + 3.0)
        + n * k2 * (n + 1.0) / (6.0 * ny * ny) * (6.0 * ny - 4.0 * n * k2 + k2 + 3.0)
}

pub fn prefix_stats(p: &SystemParameters, mu_sn: f64) -> PrefixStats {
    let lambda = p.foreign_prefix_decay_rate;
    let g = p.g_prefixes_per_handover as f64;
    let anchored = g * mu_sn / lambda;
    PrefixStats {
        mean_active_prefixes: 1.0 + anchored,
        mean_anchored_prefixes: anchored,
        handover_survival_prob: mu_sn / (mu_sn + lambda),
        mean_prefix_lifetime: 1.0 / mu_sn + 1.0 / lambda,
    }
}

/// Probability that exactly `h` handovers happen within a foreign prefix's
/// lifetime.
pub fn geometric_handover_pmf(survival: f64, h: u32) -> f64 {
    survival.powi(h as i32) * (1.0 - survival)
}

fn check_attach(p: &SystemParameters) -> Result<f64, AnalyticError> {
    let total = p.l2_latency + p.auth_latency;
    if total <= p.scan_time {
        return Err(AnalyticError::ScanExceedsAttach {
            total,
            scan: p.scan_time,
        });
    }
    Ok(total - p.scan_time)
}

/// Time by which the handover command misses the link-down instant; zero
/// when the pre-established tunnel is ready in time.
fn command_overrun(p: &SystemParameters, d: &Delays) -> f64 {
    (2.0 * d.mu_mz_c + d.t_hi - p.phi).max(0.0)
}

pub fn handover_latency(scheme: Scheme, p: &SystemParameters) -> Result<f64, AnalyticError> {
    let d = Delays::new(p);
    let residual_attach = check_attach(p)?;
    Ok(match scheme {
        Scheme::Ddmm => {
            let movement_detection = 2.0 * d.mu_mz_c;
            let location_update = 2.0 * d.lbs_mz_c + p.proc_time_lbs + 2.0 * p.proc_time_mz;
            d.attach + movement_detection + location_update
        }
        Scheme::PreFdmm => command_overrun(p, &d) + residual_attach,
        Scheme::ReFdmm => d.attach + d.t_hi,
    })
}

pub fn handover_failure_prob(mu_sn: f64, latency: f64) -> f64 {
    -(-mu_sn * latency).exp_m1()
}

pub fn session_recovery(scheme: Scheme, p: &SystemParameters) -> Result<f64, AnalyticError> {
    let d = Delays::new(p);
    let latency = handover_latency(scheme, p)?;
    Ok(match scheme {
        Scheme::Ddmm => (latency - d.mu_mz_c) + d.mz_mz_d + d.mu_mz_d,
        Scheme::ReFdmm => latency + d.mz_mz_d + d.mu_mz_d,
        Scheme::PreFdmm => latency + d.mu_mz_d,
    })
}

/// Length of the buffering interval at the target zone in predictive mode.
pub fn buffering_time(p: &SystemParameters) -> Result<f64, AnalyticError> {
    let d = Delays::new(p);
    Ok(d.mu_mz_c + check_attach(p)? - d.mz_mz_d)
}

/// Bytes lost per handover with `n_pr` active prefixes.
pub fn packet_loss(scheme: Scheme, p: &SystemParameters, n_pr: f64) -> Result<f64, AnalyticError> {
    let rate = p.session_packet_rate * n_pr;
    let byte_rate = rate * p.data_packet_size;
    Ok(match scheme {
        Scheme::Ddmm | Scheme::ReFdmm => byte_rate * session_recovery(scheme, p)?,
        Scheme::PreFdmm => {
            let d = Delays::new(p);
            let untunneled = (d.mu_mz_c + d.t_hi - p.phi).max(0.0);
            let overflow_time = p.buffer_size / byte_rate;
            let overflow = (buffering_time(p)? - overflow_time).max(0.0);
            byte_rate * (untunneled + overflow)
        }
    })
}

/// `sum_{k=1}^{n} k` continued to real `n` as `n (n + 1) / 2`.
pub fn triangular(n: f64) -> f64 {
    n * (n + 1.0) / 2.0
}

pub fn signaling_cost(scheme: Scheme, p: &SystemParameters, mu_sn: f64, n_pr: f64) -> f64 {
    let h_mu = p.hops_mu_mz as f64;
    let h_lbs = p.hops_lbs_mz as f64;
    let h_mz = p.effective_hops_mz_mz() as f64;
    let per_crossing = match scheme {
        Scheme::Ddmm => h_mu + h_lbs * (n_pr + 1.0),
        Scheme::PreFdmm => h_lbs + h_mu + triangular(n_pr) * h_mz,
        Scheme::ReFdmm => h_mz + triangular(n_pr) * h_mz,
    };
    2.0 * mu_sn * p.control_packet_size * per_crossing
}

/// Every closed form evaluated at one parameter point.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub mobility: MobilityStats,
    pub prefixes: PrefixStats,
    pub delays: Delays,
    pub schemes: Vec<SchemeMetrics>,
}

impl Evaluation {
    pub fn metrics(&self, scheme: Scheme) -> &SchemeMetrics {
        self.schemes
            .iter()
            .find(|m| m.scheme == scheme)
            .expect("all schemes evaluated")
    }
}

pub fn evaluate(p: &SystemParameters) -> Result<Evaluation, AnalyticError> {
    p.validate()?;
    let mobility = if p.mean_speed > 0.0 {
        mobility_stats(p)?
    } else {
        stationary_stats(p)?
    };
    let mu = mobility.crossing_rate;
    let prefixes = prefix_stats(p, mu);
    let n_pr = prefixes.mean_active_prefixes;
    let schemes = Scheme::ALL
        .iter()
        .map(|&scheme| {
            let latency = handover_latency(scheme, p)?;
            Ok(SchemeMetrics {
                scheme,
                handover_latency: latency,
                failure_prob: handover_failure_prob(mu, latency),
                session_recovery: session_recovery(scheme, p)?,
                packet_loss: packet_loss(scheme, p, n_pr)?,
                signaling_cost: signaling_cost(scheme, p, mu, n_pr),
            })
        })
        .collect::<Result<Vec<_>, AnalyticError>>()?;
    Ok(Evaluation {
        mobility,
        prefixes,
        delays: Delays::new(p),
        schemes,
    })
}

/// A user that never moves never leaves its zone.
fn stationary_stats(p: &SystemParameters) -> Result<MobilityStats, AnalyticError> {
    let mut moving = p.clone();
    moving.mean_speed = 1.0;
    let base = mobility_stats(&moving)?;
    Ok(MobilityStats {
        epoch_time: f64::INFINITY,
        residence_time: f64::INFINITY,
        crossing_rate: 0.0,
        ..base
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::defaults;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn link_delay_examples() {
        let wireless = LinkSpec {
            packet_size: 80.0,
            bandwidth: 10e6,
            prop_delay: 2e-3,
            hops: 1,
            loss_prob: 0.5,
        };
        assert!(close(link_delay(&wireless), 4.128e-3, 1e-12));
        let wired = LinkSpec {
            packet_size: 80.0,
            bandwidth: 100e6,
            prop_delay: 0.5e-3,
            hops: 10,
            loss_prob: 0.0,
        };
        assert!(close(link_delay(&wired), 5.064e-3, 1e-12));
        assert_eq!(link_delay(&LinkSpec { hops: 0, ..wired }), 0.0);
    }

    #[test]
    fn mobility_at_defaults() {
        let m = mobility_stats(&defaults()).unwrap();
        assert_eq!(m.pause_time, 12.5);
        // hand evaluation: 36000*182/543 + 24000*122/363
        let expected = 36000.0 * 182.0 / 543.0 + 24000.0 * 122.0 / 363.0;
        assert!(close(m.epoch_length, expected, 1e-9));
        assert!(close(m.epoch_length, 20132.4, 0.05));
        assert!(close(m.epoch_time, 805.3, 0.05));
        assert_eq!(m.crossing_rate, 1.0 / m.residence_time);
    }

    #[test]
    fn unit_layout_crossings() {
        assert!(close(
            expected_crossings(1.0, 1.0, 1.0, 1.0, 1.0, 1.0),
            4.0,
            1e-12
        ));
    }

    #[test]
    fn pathological_layout_is_a_domain_error() {
        let mut p = defaults();
        p.k1 = Some(200.0);
        p.k2 = Some(200.0);
        assert!(matches!(
            mobility_stats(&p),
            Err(AnalyticError::NonPositiveCrossings(_))
        ));
    }

    #[test]
    fn prefix_examples() {
        let p = defaults();
        assert!(close(
            prefix_stats(&p, 1e-12).mean_active_prefixes,
            1.0,
            1e-9
        ));
        let s = prefix_stats(&p, 1.0 / 240.0);
        assert!(close(s.mean_active_prefixes, 2.0, 1e-12));
        assert!(close(s.handover_survival_prob, 0.5, 1e-12));
        let s = prefix_stats(&p, 0.01204);
        assert!(close(s.mean_active_prefixes, 3.8896, 1e-4));
        assert_eq!(s.mean_active_prefixes, 1.0 + s.mean_anchored_prefixes);
    }

    #[test]
    fn pmf_examples() {
        assert_eq!(geometric_handover_pmf(0.5, 0), 0.5);
        assert_eq!(geometric_handover_pmf(0.0, 3), 0.0);
    }

    #[test]
    fn latency_examples() {
        let p = defaults();
        let re = handover_latency(Scheme::ReFdmm, &p).unwrap();
        assert!(close(re, 0.330 + 0.100 + 0.015064, 1e-12));
        let pre = handover_latency(Scheme::PreFdmm, &p).unwrap();
        assert!(close(pre, 0.130, 1e-12));
        let ddmm = handover_latency(Scheme::Ddmm, &p).unwrap();
        assert!(close(
            ddmm,
            0.430 + 0.008256 + 0.010128 + 0.020 + 0.020,
            1e-12
        ));
    }

    #[test]
    fn scan_longer_than_attach_is_rejected() {
        let mut p = defaults();
        p.scan_time = 0.5;
        assert!(matches!(
            handover_latency(Scheme::PreFdmm, &p),
            Err(AnalyticError::ScanExceedsAttach { .. })
        ));
    }

    #[test]
    fn failure_examples() {
        assert_eq!(handover_failure_prob(0.3, 0.0), 0.0);
        assert!(close(
            handover_failure_prob(std::f64::consts::LN_2, 1.0),
            0.5,
            1e-15
        ));
        assert!(close(handover_failure_prob(0.01204, 0.4884), 0.00586, 2e-5));
    }

    #[test]
    fn session_recovery_examples() {
        let p = defaults();
        let pre = session_recovery(Scheme::PreFdmm, &p).unwrap();
        assert!(close(pre, 0.130 + 0.00464, 1e-12));
        let re = session_recovery(Scheme::ReFdmm, &p).unwrap();
        assert!(close(re, 0.445064 + 0.00266 + 0.00464, 1e-12));
        let d = Delays::new(&p);
        for s in Scheme::ALL {
            let sr = session_recovery(s, &p).unwrap();
            let hl = handover_latency(s, &p).unwrap();
            assert!(sr >= hl - d.mu_mz_c);
        }
    }

    #[test]
    fn packet_loss_examples() {
        let p = defaults();
        assert_eq!(packet_loss(Scheme::PreFdmm, &p, 3.89).unwrap(), 0.0);
        let ddmm = packet_loss(Scheme::Ddmm, &p, 3.89).unwrap();
        let sr = session_recovery(Scheme::Ddmm, &p).unwrap();
        // 0.488384 - 0.004128 + 0.00266 + 0.00464
        assert!(close(sr, 0.491556, 1e-9));
        assert!(close(ddmm, 194.5 * 400.0 * sr, 1e-6));
        assert!(close(ddmm / 1000.0, 38.24, 0.01));

        let mut zero_buffer = p.clone();
        zero_buffer.buffer_size = 0.0;
        let pl = packet_loss(Scheme::PreFdmm, &zero_buffer, 3.89).unwrap();
        let expected = 50.0 * 3.89 * 400.0 * buffering_time(&p).unwrap();
        assert!(close(pl, expected, 1e-9));
    }

    #[test]
    fn signaling_examples() {
        let p = defaults();
        for s in Scheme::ALL {
            assert_eq!(signaling_cost(s, &p, 0.0, 4.0), 0.0);
        }
        let k = 2.0 * 0.01204 * 80.0;
        assert!(close(
            signaling_cost(Scheme::Ddmm, &p, 0.01204, 4.0),
            k * 51.0,
            1e-9
        ));
        assert!(close(
            signaling_cost(Scheme::PreFdmm, &p, 0.01204, 4.0),
            k * 61.0,
            1e-9
        ));
        assert!(close(
            signaling_cost(Scheme::PreFdmm, &p, 0.01204, 1.0),
            k * 16.0,
            1e-9
        ));
        assert!(close(
            signaling_cost(Scheme::Ddmm, &p, 0.01204, 4.0),
            98.2,
            0.05
        ));
        assert!(close(
            signaling_cost(Scheme::PreFdmm, &p, 0.01204, 4.0),
            117.5,
            0.05
        ));
    }

    #[test]
    fn triangular_matches_integer_sums() {
        for n in 1..40u32 {
            let direct: u32 = (1..=n).sum();
            assert_eq!(triangular(n as f64), direct as f64);
        }
    }

    #[test]
    fn stationary_user_never_fails() {
        let mut p = defaults();
        p.mean_speed = 0.0;
        let e = evaluate(&p).unwrap();
        assert_eq!(e.mobility.crossing_rate, 0.0);
        for m in &e.schemes {
            assert_eq!(m.failure_prob, 0.0);
            assert_eq!(m.signaling_cost, 0.0);
        }
    }

    #[test]
    fn latency_ordering_at_defaults() {
        let e = evaluate(&defaults()).unwrap();
        let hl = |s| e.metrics(s).handover_latency;
        assert!(hl(Scheme::PreFdmm) < hl(Scheme::ReFdmm));
        assert!(hl(Scheme::ReFdmm) < hl(Scheme::Ddmm));
    }

    #[test]
    fn scheme_names_round_trip() {
        for s in Scheme::ALL {
            assert_eq!(s.as_str().parse::<Scheme>().unwrap(), s);
        }
        assert!("MIPv6".parse::<Scheme>().is_err());
    }
}
