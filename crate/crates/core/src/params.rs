//! System parameters, their defaults, and the scenario file format.
//!
//! Every quantity is stored in base SI units: metres, seconds, bytes,
//! bit/s and dBm. Scenario files may carry unit suffixes (`35ms`, `500KB`,
//! `25m/s`); they are normalized on parse and rendered back in base units.

use std::collections::HashSet;
use std::fmt::{self, Write as _};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParamError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("unknown parameter `{0}`")]
    UnknownField(String),
    #[error("invalid value for `{field}`: {reason}")]
    Invalid { field: &'static str, reason: String },
}

/// Full parameter set of the analytic model and the simulator.
///
/// Fields wrapped in `Option` are derived when left unset (`None`) and
/// pinned when a scenario supplies them.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemParameters {
    pub area_x: f64,
    pub area_y: f64,
    pub road_spacing_x: f64,
    pub road_spacing_y: f64,
    /// Pinned K1; derived as `2r / S_x` when unset.
    pub k1: Option<f64>,
    /// Pinned K2; derived as `2r / S_y` when unset.
    pub k2: Option<f64>,
    pub zones_per_row: Option<u32>,
    pub zones_per_col: Option<u32>,
    pub overlap_x: f64,
    pub overlap_y: f64,
    pub mix_zone_radius: f64,
    pub max_pause: f64,
    /// Mean vehicle speed. Zero is accepted and means a stationary user.
    pub mean_speed: f64,
    /// Decay rate of a foreign prefix, 1/s.
    pub foreign_prefix_decay_rate: f64,
    pub control_packet_size: f64,
    pub data_packet_size: f64,
    pub wired_bandwidth: f64,
    pub wireless_bandwidth: f64,
    pub wired_prop_delay: f64,
    pub wireless_prop_delay: f64,
    pub wireless_fail_prob: f64,
    pub proc_time_lbs: f64,
    pub proc_time_mz: f64,
    pub hops_mu_mz: u32,
    pub hops_lbs_mz: u32,
    /// Pinned MZ-MZ hop count; derived from `network_scale` when unset.
    pub hops_mz_mz: Option<u32>,
    pub network_scale: f64,
    /// Layer-2 handoff latency, scanning included.
    pub l2_latency: f64,
    pub auth_latency: f64,
    pub scan_time: f64,
    /// Interval from the L2 report until the old link goes down.
    pub phi: f64,
    /// Tunnel buffer capacity at the target zone, bytes. Zero disables buffering.
    pub buffer_size: f64,
    /// Downlink packets per second per active prefix.
    pub session_packet_rate: f64,
    pub rss_ref_power: f64,
    pub rss_ref_distance: f64,
    pub path_loss_exponent: f64,
    pub rss_handover_threshold: f64,
    pub rss_min: f64,
    pub g_prefixes_per_handover: u32,
}

/// Road and zone counts derived from the area geometry.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TopologyCounts {
    pub zones_per_row: u32,
    pub zones_per_col: u32,
    pub road_count_x: u32,
    pub road_count_y: u32,
}

pub fn defaults() -> SystemParameters {
    SystemParameters {
        area_x: 36_000.0,
        area_y: 24_000.0,
        road_spacing_x: 200.0,
        road_spacing_y: 200.0,
        k1: None,
        k2: None,
        zones_per_row: None,
        zones_per_col: None,
        overlap_x: 100.0,
        overlap_y: 100.0,
        mix_zone_radius: 1000.0,
        max_pause: 25.0,
        mean_speed: 25.0,
        foreign_prefix_decay_rate: 1.0 / 240.0,
        control_packet_size: 80.0,
        data_packet_size: 400.0,
        wired_bandwidth: 100e6,
        wireless_bandwidth: 10e6,
        wired_prop_delay: 0.5e-3,
        wireless_prop_delay: 2e-3,
        wireless_fail_prob: 0.5,
        proc_time_lbs: 20e-3,
        proc_time_mz: 10e-3,
        hops_mu_mz: 1,
        hops_lbs_mz: 10,
        hops_mz_mz: None,
        network_scale: 0.5,
        l2_latency: 0.330,
        auth_latency: 0.100,
        scan_time: 0.300,
        phi: 0.035,
        buffer_size: 500e3,
        session_packet_rate: 50.0,
        rss_ref_power: -60.0,
        rss_ref_distance: 100.0,
        path_loss_exponent: 3.5,
        rss_handover_threshold: -85.0,
        rss_min: -100.0,
        g_prefixes_per_handover: 1,
    }
}

impl Default for SystemParameters {
    fn default() -> Self {
        defaults()
    }
}

/// Road counts from the grid spacing and zone counts from the zone pitch
/// `2r - l`. Pinned zone counts in `p` take precedence.
pub fn derive_topology_counts(p: &SystemParameters) -> Result<TopologyCounts, ParamError> {
    for (field, v) in [
        ("road_spacing_x", p.road_spacing_x),
        ("road_spacing_y", p.road_spacing_y),
        ("mix_zone_radius", p.mix_zone_radius),
    ] {
        if !(v > 0.0) {
            return Err(invalid(field, "must be strictly positive"));
        }
    }
    let (pitch_x, pitch_y) = zone_pitch(p)?;
    let roads = |area: f64, spacing: f64| (area / spacing + 1e-9).floor() as u32 + 1;
    let zones = |area: f64, pitch: f64| ((area / pitch - 1e-9).ceil() as u32).max(1);
    Ok(TopologyCounts {
        zones_per_row: p.zones_per_row.unwrap_or_else(|| zones(p.area_x, pitch_x)),
        zones_per_col: p.zones_per_col.unwrap_or_else(|| zones(p.area_y, pitch_y)),
        road_count_x: roads(p.area_x, p.road_spacing_x),
        road_count_y: roads(p.area_y, p.road_spacing_y),
    })
}

/// Horizontal and vertical distance between neighbouring zone centres.
pub fn zone_pitch(p: &SystemParameters) -> Result<(f64, f64), ParamError> {
    let px = 2.0 * p.mix_zone_radius - p.overlap_x;
    let py = 2.0 * p.mix_zone_radius - p.overlap_y;
    if !(px > 0.0) || !(py > 0.0) {
        return Err(invalid(
            "mix_zone_radius",
            format!(
                "radius {} m must exceed half the overlap ({} m, {} m)",
                p.mix_zone_radius, p.overlap_x, p.overlap_y
            ),
        ));
    }
    Ok((px, py))
}

impl SystemParameters {
    pub fn effective_k1(&self) -> f64 {
        self.k1
            .unwrap_or(2.0 * self.mix_zone_radius / self.road_spacing_x)
    }

    pub fn effective_k2(&self) -> f64 {
        self.k2
            .unwrap_or(2.0 * self.mix_zone_radius / self.road_spacing_y)
    }

    pub fn effective_hops_mz_mz(&self) -> u32 {
        self.hops_mz_mz.unwrap_or_else(|| {
            ((self.network_scale * self.hops_lbs_mz as f64).round() as u32).max(1)
        })
    }

    /// Mean foreign-prefix lifetime, `1 / decay rate`.
    pub fn foreign_prefix_lifetime(&self) -> f64 {
        1.0 / self.foreign_prefix_decay_rate
    }

    /// Distance at which the serving zone's RSS falls to the handover threshold.
    pub fn threshold_distance(&self) -> f64 {
        self.rss_ref_distance
            * 10f64.powf(
                (self.rss_ref_power - self.rss_handover_threshold)
                    / (10.0 * self.path_loss_exponent),
            )
    }

    /// Human-readable notes about values derived rather than taken as given.
    pub fn derivation_notes(&self) -> Vec<String> {
        let mut notes = Vec::new();
        if self.k1.is_none() || self.k2.is_none() {
            notes.push(format!(
                "K1, K2 derived from the radius as 2r/S: K1 = {}, K2 = {} (tabulated default 5 would force r = {} m)",
                self.effective_k1(),
                self.effective_k2(),
                5.0 * self.road_spacing_x / 2.0
            ));
        }
        if self.hops_mz_mz.is_none() {
            notes.push(format!(
                "h_MZ-MZ derived as round(xi * h_LBS-MZ) = {}",
                self.effective_hops_mz_mz()
            ));
        }
        notes.push(format!(
            "RSS threshold distance D = {:.1} m",
            self.threshold_distance()
        ));
        notes
    }

    pub fn validate(&self) -> Result<(), ParamError> {
        let positive = [
            ("area_x", self.area_x),
            ("area_y", self.area_y),
            ("road_spacing_x", self.road_spacing_x),
            ("road_spacing_y", self.road_spacing_y),
            ("overlap_x", self.overlap_x),
            ("overlap_y", self.overlap_y),
            ("mix_zone_radius", self.mix_zone_radius),
            ("max_pause", self.max_pause),
            ("foreign_prefix_decay_rate", self.foreign_prefix_decay_rate),
            ("control_packet_size", self.control_packet_size),
            ("data_packet_size", self.data_packet_size),
            ("wired_bandwidth", self.wired_bandwidth),
            ("wireless_bandwidth", self.wireless_bandwidth),
            ("wired_prop_delay", self.wired_prop_delay),
            ("wireless_prop_delay", self.wireless_prop_delay),
            ("proc_time_lbs", self.proc_time_lbs),
            ("proc_time_mz", self.proc_time_mz),
            ("l2_latency", self.l2_latency),
            ("auth_latency", self.auth_latency),
            ("scan_time", self.scan_time),
            ("phi", self.phi),
            ("session_packet_rate", self.session_packet_rate),
            ("rss_ref_distance", self.rss_ref_distance),
            ("path_loss_exponent", self.path_loss_exponent),
        ];
        for (field, v) in positive {
            if !v.is_finite() || v <= 0.0 {
                return Err(invalid(
                    field,
                    format!("{v} must be finite and strictly positive"),
                ));
            }
        }
        for (field, v) in [
            ("mean_speed", self.mean_speed),
            ("buffer_size", self.buffer_size),
        ] {
            if !v.is_finite() || v < 0.0 {
                return Err(invalid(
                    field,
                    format!("{v} must be finite and non-negative"),
                ));
            }
        }
        for (field, v) in [
            ("rss_ref_power", self.rss_ref_power),
            ("rss_handover_threshold", self.rss_handover_threshold),
            ("rss_min", self.rss_min),
        ] {
            if !v.is_finite() {
                return Err(invalid(field, "must be finite"));
            }
        }
        if !(0.0..1.0).contains(&self.wireless_fail_prob) {
            return Err(invalid(
                "wireless_fail_prob",
                format!("{} is not a probability in [0, 1)", self.wireless_fail_prob),
            ));
        }
        if !(self.network_scale > 0.0 && self.network_scale <= 1.0) {
            return Err(invalid(
                "network_scale",
                format!("{} is outside (0, 1]", self.network_scale),
            ));
        }
        for (field, v) in [("k1", self.k1), ("k2", self.k2)] {
            if let Some(k) = v {
                if !k.is_finite() || k <= 0.0 {
                    return Err(invalid(field, format!("{k} must be strictly positive")));
                }
            }
        }
        for (field, v) in [
            ("zones_per_row", self.zones_per_row),
            ("zones_per_col", self.zones_per_col),
            ("hops_mz_mz", self.hops_mz_mz),
            ("hops_mu_mz", Some(self.hops_mu_mz)),
            ("hops_lbs_mz", Some(self.hops_lbs_mz)),
            (
                "g_prefixes_per_handover",
                Some(self.g_prefixes_per_handover),
            ),
        ] {
            if v == Some(0) {
                return Err(invalid(field, "must be at least 1"));
            }
        }
        if self.scan_time >= self.l2_latency {
            return Err(invalid(
                "scan_time",
                format!(
                    "scan time {} s must be shorter than the L2 latency {} s",
                    self.scan_time, self.l2_latency
                ),
            ));
        }
        if self.rss_min >= self.rss_handover_threshold {
            return Err(invalid(
                "rss_min",
                format!(
                    "{} dBm must be below the handover threshold {} dBm",
                    self.rss_min, self.rss_handover_threshold
                ),
            ));
        }
        zone_pitch(self)?;
        Ok(())
    }

    /// Reads a field (or alias) in base units. Unset optional fields report
    /// their derived value.
    pub fn get(&self, key: &str) -> Result<f64, ParamError> {
        let spec = field_spec(key).ok_or_else(|| ParamError::UnknownField(key.to_string()))?;
        Ok(match spec.slot {
            Slot::Real(get, _) => get(self),
            Slot::Count(get, _) => get(self) as f64,
            Slot::OptReal(get, _, derived) => get(self).unwrap_or_else(|| derived(self)),
            Slot::OptCount(get, _, derived) => get(self).unwrap_or_else(|| derived(self)) as f64,
            Slot::Lifetime => self.foreign_prefix_lifetime(),
        })
    }

    /// Writes a field (or alias) from a value already in base units. Does not
    /// re-validate.
    pub fn set(&mut self, key: &str, value: f64) -> Result<(), ParamError> {
        let spec = field_spec(key).ok_or_else(|| ParamError::UnknownField(key.to_string()))?;
        apply(self, spec, value).map_err(|reason| invalid(spec.name, reason))
    }

    /// Renders the scenario-file form; `parse_scenario(render())` yields `self`.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for spec in FIELDS {
            let value = match spec.slot {
                Slot::Real(get, _) => get(self),
                Slot::Count(get, _) => get(self) as f64,
                Slot::OptReal(get, _, _) => match get(self) {
                    Some(v) => v,
                    None => continue,
                },
                Slot::OptCount(get, _, _) => match get(self) {
                    Some(v) => v as f64,
                    None => continue,
                },
                Slot::Lifetime => continue,
            };
            let _ = writeln!(out, "{} = {}{}", spec.name, value, spec.dim.base_suffix());
        }
        out
    }
}

impl fmt::Display for SystemParameters {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

/// Parses a `key = value` scenario over the defaults and validates the result.
pub fn parse_scenario(text: &str) -> Result<SystemParameters, ParamError> {
    let mut p = defaults();
    let mut seen = HashSet::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content.split_once('=').ok_or_else(|| ParamError::Parse {
            line,
            message: format!("expected `key = value`, found `{content}`"),
        })?;
        let key = key.trim();
        let spec = field_spec(key).ok_or_else(|| ParamError::UnknownKey {
            line,
            key: key.to_string(),
        })?;
        if !seen.insert(spec.name) {
            return Err(ParamError::Parse {
                line,
                message: format!("`{}` given more than once", spec.name),
            });
        }
        let v = parse_quantity(value.trim(), spec.dim)
            .map_err(|message| ParamError::Parse { line, message })?;
        apply(&mut p, spec, v).map_err(|message| ParamError::Parse { line, message })?;
    }
    p.validate()?;
    Ok(p)
}

/// Parses a number with an optional unit suffix into base units.
pub fn parse_value(key: &str, text: &str) -> Result<f64, ParamError> {
    let spec = field_spec(key).ok_or_else(|| ParamError::UnknownField(key.to_string()))?;
    parse_quantity(text.trim(), spec.dim).map_err(|reason| invalid(spec.name, reason))
}

/// Canonical field name for a key or alias.
pub fn canonical_name(key: &str) -> Option<&'static str> {
    field_spec(key).map(|s| s.name)
}

/// Unit label of a field in base units, for axis titles.
pub fn unit_label(key: &str) -> &'static str {
    field_spec(key).map(|s| s.dim.label()).unwrap_or("")
}

pub fn field_names() -> impl Iterator<Item = &'static str> {
    FIELDS.iter().map(|s| s.name)
}

fn invalid(field: &'static str, reason: impl Into<String>) -> ParamError {
    ParamError::Invalid {
        field,
        reason: reason.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Dim {
    Length,
    Time,
    Speed,
    Rate,
    Size,
    Bandwidth,
    PacketRate,
    Power,
    Scalar,
    Count,
}

impl Dim {
    fn units(self) -> &'static [(&'static str, f64)] {
        match self {
            Dim::Length => &[("m", 1.0), ("km", 1e3)],
            Dim::Time => &[("s", 1.0), ("ms", 1e-3), ("us", 1e-6), ("min", 60.0)],
            Dim::Speed => &[("m/s", 1.0), ("km/h", 1.0 / 3.6)],
            Dim::Rate => &[("/s", 1.0), ("Hz", 1.0)],
            Dim::Size => &[("B", 1.0), ("bytes", 1.0), ("KB", 1e3), ("MB", 1e6)],
            Dim::Bandwidth => &[
                ("bps", 1.0),
                ("bit/s", 1.0),
                ("Kbps", 1e3),
                ("Mbps", 1e6),
                ("Gbps", 1e9),
            ],
            Dim::PacketRate => &[("pkt/s", 1.0), ("packets/s", 1.0), ("/s", 1.0)],
            Dim::Power => &[("dBm", 1.0)],
            Dim::Scalar | Dim::Count => &[],
        }
    }

    fn base_suffix(self) -> &'static str {
        match self {
            Dim::Length => "m",
            Dim::Time => "s",
            Dim::Speed => "m/s",
            Dim::Rate => "/s",
            Dim::Size => "B",
            Dim::Bandwidth => "bps",
            Dim::PacketRate => "pkt/s",
            Dim::Power => "dBm",
            Dim::Scalar | Dim::Count => "",
        }
    }

    fn label(self) -> &'static str {
        match self {
            Dim::Length => "m",
            Dim::Time => "s",
            Dim::Speed => "m/s",
            Dim::Rate => "1/s",
            Dim::Size => "bytes",
            Dim::Bandwidth => "bit/s",
            Dim::PacketRate => "packets/s",
            Dim::Power => "dBm",
            Dim::Scalar | Dim::Count => "",
        }
    }
}

fn parse_quantity(text: &str, dim: Dim) -> Result<f64, String> {
    let split = text
        .char_indices()
        .find(|&(i, c)| {
            !(c.is_ascii_digit()
                || c == '.'
                || ((c == '-' || c == '+')
                    && (i == 0 || matches!(text.as_bytes()[i - 1], b'e' | b'E')))
                || ((c == 'e' || c == 'E')
                    && i > 0
                    && text[i + 1..]
                        .starts_with(|n: char| n.is_ascii_digit() || n == '-' || n == '+')))
        })
        .map(|(i, _)| i)
        .unwrap_or(text.len());
    let (num, unit) = text.split_at(split);
    let unit = unit.trim();
    let scale = if unit.is_empty() {
        1.0
    } else {
        dim.units()
            .iter()
            .find(|(u, _)| *u == unit)
            .map(|&(_, s)| s)
            .ok_or_else(|| format!("unit `{unit}` does not apply here"))?
    };
    if dim == Dim::Count {
        let n: u32 = num
            .parse()
            .map_err(|_| format!("`{text}` is not a non-negative integer"))?;
        return Ok(n as f64);
    }
    let v: f64 = num
        .parse()
        .map_err(|_| format!("`{text}` is not a number"))?;
    if !v.is_finite() {
        return Err(format!("`{text}` is not finite"));
    }
    Ok(v * scale)
}

type Getter<T> = fn(&SystemParameters) -> T;
type Setter<T> = fn(&mut SystemParameters, T);

#[derive(Clone, Copy)]
enum Slot {
    Real(Getter<f64>, Setter<f64>),
    Count(Getter<u32>, Setter<u32>),
    OptReal(Getter<Option<f64>>, Setter<Option<f64>>, Getter<f64>),
    OptCount(Getter<Option<u32>>, Setter<Option<u32>>, Getter<u32>),
    /// Mean foreign-prefix lifetime, stored as its reciprocal rate.
    Lifetime,
}

#[derive(Clone, Copy)]
struct FieldSpec {
    name: &'static str,
    aliases: &'static [&'static str],
    dim: Dim,
    slot: Slot,
}

fn apply(p: &mut SystemParameters, spec: &FieldSpec, v: f64) -> Result<(), String> {
    let as_count = |v: f64| -> Result<u32, String> {
        if v >= 0.0 && v.fract() == 0.0 && v <= u32::MAX as f64 {
            Ok(v as u32)
        } else {
            Err(format!("{v} is not a non-negative integer"))
        }
    };
    match spec.slot {
        Slot::Real(_, set) => set(p, v),
        Slot::Count(_, set) => set(p, as_count(v)?),
        Slot::OptReal(_, set, _) => set(p, Some(v)),
        Slot::OptCount(_, set, _) => set(p, Some(as_count(v)?)),
        Slot::Lifetime => {
            if !(v > 0.0) {
                return Err(format!("lifetime {v} must be strictly positive"));
            }
            p.foreign_prefix_decay_rate = 1.0 / v;
        }
    }
    Ok(())
}

fn field_spec(key: &str) -> Option<&'static FieldSpec> {
    FIELDS
        .iter()
        .find(|s| s.name == key || s.aliases.contains(&key))
}

macro_rules! real {
    ($name:ident, $dim:expr $(, $alias:literal)*) => {
        FieldSpec {
            name: stringify!($name),
            aliases: &[$($alias),*],
            dim: $dim,
            slot: Slot::Real(|p| p.$name, |p, v| p.$name = v),
        }
    };
}

macro_rules! count {
    ($name:ident $(, $alias:literal)*) => {
        FieldSpec {
            name: stringify!($name),
            aliases: &[$($alias),*],
            dim: Dim::Count,
            slot: Slot::Count(|p| p.$name, |p, v| p.$name = v),
        }
    };
}

static FIELDS: &[FieldSpec] = &[
    real!(area_x, Dim::Length, "x_area"),
    real!(area_y, Dim::Length, "y_area"),
    real!(road_spacing_x, Dim::Length, "s_x"),
    real!(road_spacing_y, Dim::Length, "s_y"),
    FieldSpec {
        name: "k1",
        aliases: &[],
        dim: Dim::Scalar,
        slot: Slot::OptReal(|p| p.k1, |p, v| p.k1 = v, |p| p.effective_k1()),
    },
    FieldSpec {
        name: "k2",
        aliases: &[],
        dim: Dim::Scalar,
        slot: Slot::OptReal(|p| p.k2, |p, v| p.k2 = v, |p| p.effective_k2()),
    },
    FieldSpec {
        name: "zones_per_row",
        aliases: &["n"],
        dim: Dim::Count,
        slot: Slot::OptCount(
            |p| p.zones_per_row,
            |p, v| p.zones_per_row = v,
            |p| {
                derive_topology_counts(p)
                    .map(|c| c.zones_per_row)
                    .unwrap_or(0)
            },
        ),
    },
    FieldSpec {
        name: "zones_per_col",
        aliases: &["m"],
        dim: Dim::Count,
        slot: Slot::OptCount(
            |p| p.zones_per_col,
            |p, v| p.zones_per_col = v,
            |p| {
                derive_topology_counts(p)
                    .map(|c| c.zones_per_col)
                    .unwrap_or(0)
            },
        ),
    },
    real!(overlap_x, Dim::Length, "l_x"),
    real!(overlap_y, Dim::Length, "l_y"),
    real!(mix_zone_radius, Dim::Length, "r"),
    real!(max_pause, Dim::Time, "u_max"),
    real!(mean_speed, Dim::Speed, "v_mean"),
    real!(foreign_prefix_decay_rate, Dim::Rate, "lambda_pr_f"),
    FieldSpec {
        name: "foreign_prefix_lifetime",
        aliases: &["prefix_lifetime"],
        dim: Dim::Time,
        slot: Slot::Lifetime,
    },
    real!(control_packet_size, Dim::Size, "l_c"),
    real!(data_packet_size, Dim::Size, "l_d"),
    real!(wired_bandwidth, Dim::Bandwidth, "bw"),
    real!(wireless_bandwidth, Dim::Bandwidth, "bw_w"),
    real!(wired_prop_delay, Dim::Time, "l"),
    real!(wireless_prop_delay, Dim::Time, "l_w"),
    real!(wireless_fail_prob, Dim::Scalar, "p_f"),
    real!(proc_time_lbs, Dim::Time),
    real!(proc_time_mz, Dim::Time),
    count!(hops_mu_mz, "h_mu_mz"),
    count!(hops_lbs_mz, "h_lbs_mz"),
    FieldSpec {
        name: "hops_mz_mz",
        aliases: &["h_mz_mz"],
        dim: Dim::Count,
        slot: Slot::OptCount(
            |p| p.hops_mz_mz,
            |p, v| p.hops_mz_mz = v,
            |p| p.effective_hops_mz_mz(),
        ),
    },
    real!(network_scale, Dim::Scalar, "xi"),
    real!(l2_latency, Dim::Time, "t_l2"),
    real!(auth_latency, Dim::Time, "l_auth"),
    real!(scan_time, Dim::Time, "x"),
    real!(phi, Dim::Time, "delta"),
    real!(buffer_size, Dim::Size, "b"),
    real!(session_packet_rate, Dim::PacketRate, "lambda_p"),
    real!(rss_ref_power, Dim::Power),
    real!(rss_ref_distance, Dim::Length, "d_0"),
    real!(path_loss_exponent, Dim::Scalar, "e"),
    real!(rss_handover_threshold, Dim::Power, "s_th"),
    real!(rss_min, Dim::Power, "s_min"),
    count!(g_prefixes_per_handover, "g"),
];

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tabulated_defaults() {
        let p = defaults();
        assert_eq!(p.mean_speed, 25.0);
        assert_eq!(p.phi, 0.035);
        assert_eq!(p.foreign_prefix_decay_rate, 1.0 / 240.0);
        assert_eq!(p.buffer_size, 500_000.0);
        assert_eq!(p.effective_hops_mz_mz(), 5);
        p.validate().unwrap();
    }

    #[test]
    fn road_and_zone_counts() {
        let c = derive_topology_counts(&defaults()).unwrap();
        assert_eq!((c.road_count_x, c.road_count_y), (181, 121));
        assert_eq!((c.zones_per_row, c.zones_per_col), (19, 13));

        let mut p = defaults();
        p.area_x = 2000.0;
        p.area_y = 2000.0;
        assert_eq!(derive_topology_counts(&p).unwrap().zones_per_row, 2);

        // pitch exactly equal to the area width
        p.mix_zone_radius = (2000.0 + p.overlap_x) / 2.0;
        assert_eq!(derive_topology_counts(&p).unwrap().zones_per_row, 1);
    }

    #[test]
    fn non_positive_pitch_rejected() {
        let mut p = defaults();
        p.mix_zone_radius = 50.0;
        assert!(derive_topology_counts(&p).is_err());
        assert!(matches!(
            p.validate(),
            Err(ParamError::Invalid {
                field: "mix_zone_radius",
                ..
            })
        ));
    }

    #[test]
    fn zone_counts_shrink_with_radius() {
        let mut last = u32::MAX;
        for r in (100..=8000).step_by(50) {
            let mut p = defaults();
            p.mix_zone_radius = r as f64;
            let c = derive_topology_counts(&p).unwrap();
            let total = c.zones_per_row * c.zones_per_col;
            assert!(total <= last, "r = {r}");
            last = total;
        }
    }

    #[test]
    fn single_override() {
        let p = parse_scenario("v_mean=50").unwrap();
        let mut expected = defaults();
        expected.mean_speed = 50.0;
        assert_eq!(p, expected);
    }

    #[test]
    fn empty_file_is_defaults() {
        assert_eq!(parse_scenario("").unwrap(), defaults());
        assert_eq!(parse_scenario("# nothing\n\n   \n").unwrap(), defaults());
    }

    #[test]
    fn probability_out_of_range() {
        let err = parse_scenario("p_f=1.5").unwrap_err();
        assert!(matches!(
            err,
            ParamError::Invalid {
                field: "wireless_fail_prob",
                ..
            }
        ));
    }

    #[test]
    fn units_are_normalized() {
        let p = parse_scenario(
            "phi = 20ms\nbuffer_size = 1MB\nwired_bandwidth = 1 Gbps\nmean_speed = 72km/h\n\
             foreign_prefix_lifetime = 4min  # minutes\narea_x = 10km",
        )
        .unwrap();
        assert!((p.phi - 0.020).abs() < 1e-15);
        assert_eq!(p.buffer_size, 1e6);
        assert_eq!(p.wired_bandwidth, 1e9);
        assert!((p.mean_speed - 20.0).abs() < 1e-12);
        assert!((p.foreign_prefix_decay_rate - 1.0 / 240.0).abs() < 1e-15);
        assert_eq!(p.area_x, 10_000.0);
    }

    #[test]
    fn errors_carry_line_numbers() {
        match parse_scenario("phi = 35ms\nthis line is wrong") {
            Err(ParamError::Parse { line: 2, .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
        match parse_scenario("\n\nwarp_factor = 9") {
            Err(ParamError::UnknownKey { line: 3, key }) => assert_eq!(key, "warp_factor"),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            parse_scenario("phi = 35m"),
            Err(ParamError::Parse { line: 1, .. })
        ));
        assert!(matches!(
            parse_scenario("phi = 1\nphi = 2"),
            Err(ParamError::Parse { line: 2, .. })
        ));
        assert!(matches!(
            parse_scenario("hops_lbs_mz = 2.5"),
            Err(ParamError::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn invariant_violations_name_the_field() {
        let cases = [
            ("scan_time = 0.4", "scan_time"),
            ("rss_min = -80", "rss_min"),
            ("network_scale = 0", "network_scale"),
            ("network_scale = 1.5", "network_scale"),
            ("hops_lbs_mz = 0", "hops_lbs_mz"),
            ("l2_latency = -1ms", "l2_latency"),
        ];
        for (text, name) in cases {
            match parse_scenario(text) {
                Err(ParamError::Invalid { field, .. }) => assert_eq!(field, name, "{text}"),
                other => panic!("{text}: unexpected {other:?}"),
            }
        }
    }

    #[test]
    fn pinned_fields_override_derivation() {
        let p = parse_scenario("k1 = 5\nk2 = 5\nhops_mz_mz = 3\nzones_per_row = 7").unwrap();
        assert_eq!(p.effective_k1(), 5.0);
        assert_eq!(p.effective_hops_mz_mz(), 3);
        assert_eq!(derive_topology_counts(&p).unwrap().zones_per_row, 7);
        assert_eq!(defaults().effective_k1(), 10.0);
    }

    #[test]
    fn get_and_set_by_alias() {
        let mut p = defaults();
        p.set("r", 2500.0).unwrap();
        assert_eq!(p.mix_zone_radius, 2500.0);
        p.set("foreign_prefix_lifetime", 600.0).unwrap();
        assert!((p.get("foreign_prefix_lifetime").unwrap() - 600.0).abs() < 1e-9);
        assert_eq!(p.get("hops_mz_mz").unwrap(), 5.0);
        assert!(p.set("nope", 1.0).is_err());
        assert!(p.set("hops_lbs_mz", 1.5).is_err());
    }

    #[test]
    fn threshold_distance_matches_path_loss() {
        let p = defaults();
        let d = p.threshold_distance();
        let rss = p.rss_ref_power - 10.0 * p.path_loss_exponent * (d / p.rss_ref_distance).log10();
        assert!((rss - p.rss_handover_threshold).abs() < 1e-9);
    }

    mod roundtrip {
        use super::*;
        use proptest::prelude::*;

        fn params() -> impl Strategy<Value = SystemParameters> {
            (
                (1e3f64..1e5, 1e3f64..1e5, 10f64..500.0, 0.0f64..0.99),
                (0.0f64..120.0, 1e-5f64..1.0, 0.0f64..1e7, 0.01f64..1.0),
                (1u32..30, 1u32..30, proptest::option::of(1u32..20)),
                (
                    proptest::option::of(0.5f64..40.0),
                    proptest::option::of(1u32..50),
                ),
                (1e-4f64..0.2, 0.2f64..1.0, -80f64..-40.0),
            )
                .prop_map(|(a, b, c, d, e)| {
                    let mut p = defaults();
                    p.area_x = a.0;
                    p.area_y = a.1;
                    p.road_spacing_x = a.2;
                    p.wireless_fail_prob = a.3;
                    p.mean_speed = b.0;
                    p.foreign_prefix_decay_rate = b.1;
                    p.buffer_size = b.2;
                    p.network_scale = b.3;
                    p.hops_mu_mz = c.0;
                    p.hops_lbs_mz = c.1;
                    p.hops_mz_mz = c.2;
                    p.k1 = d.0;
                    p.zones_per_row = d.1;
                    p.scan_time = e.0;
                    p.l2_latency = e.0 + e.1;
                    p.rss_ref_power = e.2;
                    p
                })
        }

        proptest! {
            #[test]
            fn render_then_parse_is_identity(p in params()) {
                prop_assume!(p.validate().is_ok());
                let back = parse_scenario(&p.render()).unwrap();
                prop_assert_eq!(back, p);
            }
        }
    }
}
