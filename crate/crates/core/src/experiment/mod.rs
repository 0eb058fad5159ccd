//! Parameter sweeps over the analytic model and the simulator, result
//! tables, SVG plots and the figure trend checks.

pub mod checks;
pub mod plot;
pub mod table;

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use thiserror::Error;

use crate::analytic::{evaluate, Evaluation, Scheme};
use crate::params::{canonical_name, parse_value, SystemParameters};
use crate::sim::{run_with, SimConfig, SimReport};

pub use checks::{check_table, figure_specs, run_figures, Check, CheckConfig, FigureSpec};
pub use table::{ResultRow, ResultTable};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("invalid parameters: {0}")]
    Validation(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl ExperimentError {
    /// Process exit code: 1 for usage errors, 2 for invalid parameters.
    pub fn exit_code(&self) -> i32 {
        match self {
            ExperimentError::Validation(_) => 2,
            _ => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Metric {
    Latency,
    FailureProb,
    SessionRecovery,
    PacketLoss,
    SignalingCost,
}

impl Metric {
    pub const ALL: [Metric; 5] = [
        Metric::Latency,
        Metric::FailureProb,
        Metric::SessionRecovery,
        Metric::PacketLoss,
        Metric::SignalingCost,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Metric::Latency => "latency",
            Metric::FailureProb => "failure_prob",
            Metric::SessionRecovery => "session_recovery",
            Metric::PacketLoss => "packet_loss",
            Metric::SignalingCost => "signaling_cost",
        }
    }

    pub fn unit(self) -> &'static str {
        match self {
            Metric::Latency | Metric::SessionRecovery => "s",
            Metric::FailureProb => "",
            Metric::PacketLoss => "bytes",
            Metric::SignalingCost => "bytes x hops / s",
        }
    }

    pub fn analytic(self, ev: &Evaluation, scheme: Scheme) -> f64 {
        let m = ev.metrics(scheme);
        match self {
            Metric::Latency => m.handover_latency,
            Metric::FailureProb => m.failure_prob,
            Metric::SessionRecovery => m.session_recovery,
            Metric::PacketLoss => m.packet_loss,
            Metric::SignalingCost => m.signaling_cost,
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.as_str())
    }
}

impl FromStr for Metric {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key = s.trim().to_ascii_lowercase().replace('-', "_");
        Metric::ALL
            .into_iter()
            .find(|m| m.as_str() == key)
            .or(match key.as_str() {
                "failure" | "pf" => Some(Metric::FailureProb),
                "recovery" | "sr" => Some(Metric::SessionRecovery),
                "loss" => Some(Metric::PacketLoss),
                "signaling" | "cost" => Some(Metric::SignalingCost),
                _ => None,
            })
            .ok_or_else(|| format!("unknown metric `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Analytic,
    Simulate,
    Both,
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "analytic" => Ok(Mode::Analytic),
            "simulate" | "sim" => Ok(Mode::Simulate),
            "both" => Ok(Mode::Both),
            _ => Err(format!("unknown mode `{s}` (analytic, simulate, both)")),
        }
    }
}

/// Swept parameter and its values, in base units.
#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    pub param: &'static str,
    pub values: Vec<f64>,
}

impl Sweep {
    /// Parses `param=min:max:step` or `param=v1,v2,...`. Values may carry
    /// the same unit suffixes as scenario files.
    pub fn parse(text: &str) -> Result<Sweep, ExperimentError> {
        let usage = |m: String| ExperimentError::Usage(m);
        let (key, spec) = text
            .split_once('=')
            .ok_or_else(|| usage(format!("sweep `{text}` must look like param=min:max:step")))?;
        let key = key.trim();
        let param =
            canonical_name(key).ok_or_else(|| usage(format!("unknown parameter `{key}`")))?;
        let value = |s: &str| parse_value(param, s).map_err(|e| usage(e.to_string()));
        let values = if spec.contains(':') {
            let parts: Vec<_> = spec.split(':').collect();
            if parts.len() != 3 {
                return Err(usage(format!("range `{spec}` must be min:max:step")));
            }
            let (lo, hi, step) = (value(parts[0])?, value(parts[1])?, value(parts[2])?);
            if !(step > 0.0) || !(hi >= lo) || !lo.is_finite() || !hi.is_finite() {
                return Err(usage(format!(
                    "range `{spec}` needs min <= max and a positive step"
                )));
            }
            let n = ((hi - lo) / step + 1e-9).floor() as usize;
            if n > 100_000 {
                return Err(usage(format!("range `{spec}` has too many points")));
            }
            // computed from the index to avoid accumulated drift
            (0..=n)
                .map(|i| {
                    let v = lo + i as f64 * step;
                    (v * 1e12).round() / 1e12
                })
                .collect()
        } else {
            spec.split(',')
                .filter(|s| !s.trim().is_empty())
                .map(value)
                .collect::<Result<Vec<_>, _>>()?
        };
        if values.is_empty() {
            return Err(usage(format!("sweep `{text}` has no values")));
        }
        Ok(Sweep { param, values })
    }

    /// The base parameters with `value` applied, validated.
    pub fn apply(
        &self,
        base: &SystemParameters,
        value: f64,
    ) -> Result<SystemParameters, ExperimentError> {
        let mut p = base.clone();
        p.set(self.param, value)
            .and_then(|_| p.validate())
            .map_err(|e| ExperimentError::Validation(format!("{} = {value}: {e}", self.param)))?;
        Ok(p)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    /// `None` evaluates the base parameters only.
    pub sweep: Option<Sweep>,
    pub schemes: Vec<Scheme>,
    pub metrics: Vec<Metric>,
    pub mode: Mode,
    pub seeds: Vec<u64>,
    /// Simulated seconds per vehicle and seed.
    pub duration: f64,
    pub fleet: u32,
}

impl Default for SweepSpec {
    fn default() -> Self {
        SweepSpec {
            sweep: None,
            schemes: Scheme::ALL.to_vec(),
            metrics: Metric::ALL.to_vec(),
            mode: Mode::Analytic,
            seeds: vec![1],
            duration: 2000.0,
            fleet: 1,
        }
    }
}

impl SweepSpec {
    fn points(
        &self,
        base: &SystemParameters,
    ) -> Result<Vec<(Option<f64>, SystemParameters)>, ExperimentError> {
        base.validate()
            .map_err(|e| ExperimentError::Validation(e.to_string()))?;
        match &self.sweep {
            None => Ok(vec![(None, base.clone())]),
            Some(s) => s
                .values
                .iter()
                .map(|&v| Ok((Some(v), s.apply(base, v)?)))
                .collect(),
        }
    }

    fn param(&self) -> &'static str {
        self.sweep.as_ref().map_or("-", |s| s.param)
    }

    fn sorted(&self) -> (Vec<Scheme>, Vec<Metric>) {
        let mut schemes = self.schemes.clone();
        schemes.sort();
        schemes.dedup();
        let mut metrics = self.metrics.clone();
        metrics.sort();
        metrics.dedup();
        (schemes, metrics)
    }
}

/// Parses `1,2,3` or an inclusive range `1:5`.
pub fn parse_seeds(text: &str) -> Result<Vec<u64>, ExperimentError> {
    let bad = || ExperimentError::Usage(format!("bad seed list `{text}`"));
    if let Some((a, b)) = text.split_once(':') {
        let (a, b): (u64, u64) = (
            a.trim().parse().map_err(|_| bad())?,
            b.trim().parse().map_err(|_| bad())?,
        );
        if b < a || b - a > 10_000 {
            return Err(bad());
        }
        return Ok((a..=b).collect());
    }
    let seeds = text
        .split(',')
        .map(|s| s.trim().parse().map_err(|_| bad()))
        .collect::<Result<Vec<u64>, _>>()?;
    if seeds.is_empty() {
        return Err(bad());
    }
    Ok(seeds)
}

fn evaluate_point(p: &SystemParameters, value: Option<f64>) -> Result<Evaluation, ExperimentError> {
    evaluate(p).map_err(|e| {
        ExperimentError::Validation(match value {
            Some(v) => format!("at {v}: {e}"),
            None => e.to_string(),
        })
    })
}

/// Evaluates the closed forms across the sweep.
pub fn run_analytic(
    spec: &SweepSpec,
    base: &SystemParameters,
) -> Result<ResultTable, ExperimentError> {
    let (schemes, metrics) = spec.sorted();
    let mut table = ResultTable::new(Mode::Analytic);
    for (value, p) in spec.points(base)? {
        let ev = evaluate_point(&p, value)?;
        for &scheme in &schemes {
            for &metric in &metrics {
                table.rows.push(ResultRow {
                    param: spec.param().to_string(),
                    value,
                    scheme,
                    metric,
                    analytic: Some(metric.analytic(&ev, scheme)),
                    ..ResultRow::default()
                });
            }
        }
    }
    Ok(table)
}

/// One simulated cell of a sweep.
pub struct SimCell {
    pub value: Option<f64>,
    pub scheme: Scheme,
    pub seed: u64,
    pub report: SimReport,
}

/// Runs the simulator for every (value, scheme, seed) in parallel and
/// returns the cells in sweep order.
pub fn simulate_cells(
    spec: &SweepSpec,
    base: &SystemParameters,
    trace: bool,
) -> Result<Vec<SimCell>, ExperimentError> {
    if spec.seeds.is_empty() {
        return Err(ExperimentError::Usage(
            "at least one seed is required".into(),
        ));
    }
    let (schemes, _) = spec.sorted();
    let mut jobs = Vec::new();
    for (value, p) in spec.points(base)? {
        for &scheme in &schemes {
            for &seed in &spec.seeds {
                jobs.push((value, p.clone(), scheme, seed));
            }
        }
    }
    jobs.into_par_iter()
        .map(|(value, p, scheme, seed)| {
            let mut cfg = SimConfig::new(scheme, seed, spec.duration).fleet(spec.fleet);
            cfg.trace = trace;
            let report =
                run_with(&p, &cfg).map_err(|e| ExperimentError::Validation(e.to_string()))?;
            Ok(SimCell {
                value,
                scheme,
                seed,
                report,
            })
        })
        .collect()
}

fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (m, 0.0);
    }
    let var = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, (var / n).sqrt())
}

/// Pooled simulated mean, its standard error and the handover count.
pub fn simulated_metric(reports: &[&SimReport], metric: Metric) -> Option<(f64, f64, u64)> {
    let records: Vec<_> = reports.iter().flat_map(|r| r.records.iter()).collect();
    let n = records.len();
    if n == 0 {
        return None;
    }
    let pick = |f: fn(&crate::sim::HandoverRecord) -> f64| {
        let xs: Vec<f64> = records.iter().map(|h| f(h)).collect();
        mean_se(&xs)
    };
    let (m, se) = match metric {
        Metric::Latency => pick(|h| h.latency),
        Metric::SessionRecovery => pick(|h| h.session_recovery),
        Metric::PacketLoss => pick(|h| h.bytes_lost),
        Metric::FailureProb => {
            let f = records.iter().filter(|h| h.failed).count() as f64 / n as f64;
            (f, (f * (1.0 - f) / n as f64).sqrt())
        }
        Metric::SignalingCost => {
            let exposure: f64 = reports.iter().map(|r| r.exposure).sum();
            let load: f64 = records.iter().map(|h| h.signaling_load).sum();
            let per_seed: Vec<f64> = reports
                .iter()
                .map(|r| r.aggregates().signaling_rate)
                .collect();
            (load / exposure, mean_se(&per_seed).1)
        }
    };
    Some((m, se, n as u64))
}

/// Simulates the sweep; in [`Mode::Both`] the analytic columns and the
/// relative errors are filled as well.
pub fn run_simulate(
    spec: &SweepSpec,
    base: &SystemParameters,
) -> Result<ResultTable, ExperimentError> {
    let cells = simulate_cells(spec, base, false)?;
    table_from_cells(spec, base, &cells)
}

pub fn table_from_cells(
    spec: &SweepSpec,
    base: &SystemParameters,
    cells: &[SimCell],
) -> Result<ResultTable, ExperimentError> {
    let (schemes, metrics) = spec.sorted();
    let mode = if spec.mode == Mode::Both {
        Mode::Both
    } else {
        Mode::Simulate
    };
    let mut table = ResultTable::new(mode);
    for (value, p) in spec.points(base)? {
        let ev = if mode == Mode::Both {
            Some(evaluate_point(&p, value)?)
        } else {
            None
        };
        for &scheme in &schemes {
            let reports: Vec<_> = cells
                .iter()
                .filter(|c| c.value == value && c.scheme == scheme)
                .map(|c| &c.report)
                .collect();
            for &metric in &metrics {
                let analytic = ev.as_ref().map(|e| metric.analytic(e, scheme));
                let mut row = ResultRow {
                    param: spec.param().to_string(),
                    value,
                    scheme,
                    metric,
                    analytic,
                    ..ResultRow::default()
                };
                match simulated_metric(&reports, metric) {
                    Some((m, se, n)) => {
                        row.sim_mean = Some(m);
                        row.sim_stderr = Some(se);
                        row.n = n;
                        row.rel_error = analytic.map(|a| crate::sim::relative_error(m, a));
                    }
                    None => row.note = "insufficient events".into(),
                }
                table.rows.push(row);
            }
        }
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::defaults;

    #[test]
    fn sweep_parsing() {
        let s = Sweep::parse("r=1000:6000:1000").unwrap();
        assert_eq!(s.param, "mix_zone_radius");
        assert_eq!(s.values, [1000.0, 2000.0, 3000.0, 4000.0, 5000.0, 6000.0]);
        let s = Sweep::parse("phi=5ms,35ms").unwrap();
        assert_eq!(s.values, [0.005, 0.035]);
        let s = Sweep::parse("p_f=0.1:0.8:0.1").unwrap();
        assert_eq!(s.values.len(), 8);
        assert_eq!(s.values[2], 0.3);
        for bad in [
            "r=6000:1000:1000",
            "r=1:2:0",
            "bogus=1,2",
            "r",
            "r=1:2",
            "r=",
        ] {
            let e = Sweep::parse(bad).unwrap_err();
            assert_eq!(e.exit_code(), 1, "{bad}");
        }
    }

    #[test]
    fn out_of_range_values_are_validation_errors() {
        let spec = SweepSpec {
            sweep: Some(Sweep::parse("p_f=0.5,1.5").unwrap()),
            ..SweepSpec::default()
        };
        let e = run_analytic(&spec, &defaults()).unwrap_err();
        assert_eq!(e.exit_code(), 2);
    }

    #[test]
    fn radius_sweep_has_eighteen_latency_rows() {
        let spec = SweepSpec {
            sweep: Some(Sweep::parse("r=1000:6000:1000").unwrap()),
            metrics: vec![Metric::Latency],
            ..SweepSpec::default()
        };
        let t = run_analytic(&spec, &defaults()).unwrap();
        assert_eq!(t.rows.len(), 18);
        let pre: Vec<_> = t
            .rows
            .iter()
            .filter(|r| r.scheme == Scheme::PreFdmm)
            .map(|r| r.analytic.unwrap())
            .collect();
        assert!(pre.iter().all(|&v| v == pre[0]));
    }

    #[test]
    fn zero_speed_has_zero_failure() {
        let spec = SweepSpec {
            sweep: Some(Sweep::parse("v_mean=0").unwrap()),
            metrics: vec![Metric::FailureProb],
            ..SweepSpec::default()
        };
        let t = run_analytic(&spec, &defaults()).unwrap();
        assert_eq!(t.rows.len(), 3);
        assert!(t.rows.iter().all(|r| r.analytic == Some(0.0)));
    }

    #[test]
    fn seeds_parse() {
        assert_eq!(parse_seeds("1,2,3").unwrap(), [1, 2, 3]);
        assert_eq!(parse_seeds("4:6").unwrap(), [4, 5, 6]);
        assert!(parse_seeds("x").is_err());
        assert!(parse_seeds("5:1").is_err());
    }

    #[test]
    fn simulate_three_seeds_one_row() {
        let spec = SweepSpec {
            schemes: vec![Scheme::Ddmm],
            metrics: vec![Metric::Latency],
            mode: Mode::Simulate,
            seeds: vec![1, 2, 3],
            duration: 600.0,
            ..SweepSpec::default()
        };
        let t = run_simulate(&spec, &defaults()).unwrap();
        assert_eq!(t.rows.len(), 1);
        let r = &t.rows[0];
        assert!(r.n > 0 && r.sim_mean.is_some() && r.analytic.is_none());
    }

    #[test]
    fn both_mode_deterministic_delays_have_zero_error() {
        let mut p = defaults();
        p.wireless_fail_prob = 0.0;
        let spec = SweepSpec {
            metrics: vec![Metric::Latency],
            mode: Mode::Both,
            seeds: vec![3],
            duration: 1500.0,
            ..SweepSpec::default()
        };
        let t = run_simulate(&spec, &p).unwrap();
        for r in &t.rows {
            assert!(r.rel_error.unwrap() < 1e-6, "{r:?}");
        }
        let again = run_simulate(&spec, &p).unwrap();
        assert_eq!(t.to_csv_string().unwrap(), again.to_csv_string().unwrap());
    }

    #[test]
    fn insufficient_events_marked() {
        let spec = SweepSpec {
            schemes: vec![Scheme::Ddmm],
            metrics: vec![Metric::Latency],
            mode: Mode::Simulate,
            duration: 0.5,
            ..SweepSpec::default()
        };
        let t = run_simulate(&spec, &defaults()).unwrap();
        assert_eq!(t.rows[0].note, "insufficient events");
        assert!(t.rows[0].sim_mean.is_none());
    }
}
