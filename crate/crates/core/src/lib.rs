//! Dynamic distributed mobility management with fast handover.
//!
//! The crate has three layers:
//!
//! - [`analytic`] evaluates the closed-form performance model (handover
//!   latency, failure probability, session recovery, packet loss and
//!   signaling cost) for the DDMM, predictive FDMM and reactive FDMM schemes.
//! - [`protocol`] holds the message formats and the mix-zone / LBS state
//!   machines that produce the signaling traces.
//! - [`sim`] is a seeded discrete-event simulator that drives vehicles over
//!   a grid road network and measures the same metrics empirically.
//!
//! [`experiment`] ties them together into sweeps, CSV tables, SVG plots
//! and trend reports; [`params`] owns the parameter set and scenario files.

pub mod analytic;
pub mod experiment;
pub mod params;
pub mod protocol;
pub mod sim;

pub use analytic::{Scheme, SchemeMetrics};
pub use params::{defaults, parse_scenario, SystemParameters};
