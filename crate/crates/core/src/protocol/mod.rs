//! Mobility signaling: messages, their framing, and the deterministic state
//! machines of mobile units, mix zones and the LBS server.
//!
//! Operations on [`Network`] mutate node state and return the [`Trace`] of
//! messages the exchange produced. Each trace entry records what caused it
//! to be sent, so a simulator can replay the exchange with link delays and
//! processing times.

pub mod codec;
pub mod message;
mod network;
mod state;

use std::fmt;

use thiserror::Error;

pub use message::{
    Anchor, MessageKind, MobilityMessage, MobilityOption, MuId, NodeId, OptionKind, Prefix,
    TargetType, ZoneId, LBS_ADDR,
};
pub use network::{HandoverMode, HandoverOutcome, Network};
pub use state::{
    BindingCacheEntry, BindingState, Lbs, LocalBinding, MixZone, MobileUnit, NextHop,
    PendingHandover, PrefixPool, Tunnel,
};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ProtocolError {
    #[error("option {0:?} appears more than once")]
    DuplicateOption(OptionKind),
    #[error("message lacks the {0:?} option")]
    MissingOption(OptionKind),
    #[error("unknown mix zone {0}")]
    UnknownZone(ZoneId),
    #[error("unknown mobile unit {0}")]
    UnknownMu(MuId),
    #[error("mobile unit {0} is not attached")]
    NotAttached(MuId),
    #[error("prefix pool of {0} is exhausted")]
    PoolExhausted(ZoneId),
    #[error("no binding for mobile unit {mu_id}")]
    BindingMiss {
        mu_id: MuId,
        pba: Box<MobilityMessage>,
    },
    #[error("mobile unit {0} already has a handover in progress")]
    HandoverInProgress(MuId),
    #[error("mobile unit {0} has no pending predictive handover")]
    NoPendingHandover(MuId),
}

/// Why a message was sent.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cause {
    /// Opens the exchange (router solicitation, L2 report).
    Start,
    /// Sent once the MU has finished layer-2 attachment at the new zone.
    Attach,
    /// Sent on receipt of the trace entry with this index.
    Message(usize),
    /// Retransmission after the entry with this index went unanswered.
    Timeout(usize),
}

impl Cause {
    fn shifted(self, by: usize) -> Cause {
        match self {
            Cause::Message(i) => Cause::Message(i + by),
            Cause::Timeout(i) => Cause::Timeout(i + by),
            c => c,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceEvent {
    pub from: NodeId,
    pub to: NodeId,
    pub msg: MobilityMessage,
    pub cause: Cause,
}

impl TraceEvent {
    /// True when one end is the mobile unit.
    pub fn is_wireless(&self) -> bool {
        matches!(self.from, NodeId::Mu(_)) || matches!(self.to, NodeId::Mu(_))
    }

    /// `KIND FROM->TO FLAGS`, e.g. `HI MZ0->MZ1 D=1,T=0`.
    pub fn label(&self) -> String {
        format!(
            "{} {}->{} {}",
            self.msg.kind,
            self.from,
            self.to,
            self.msg.flag_label()
        )
    }
}

impl fmt::Display for TraceEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

/// Ordered message sequence of one exchange.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Trace {
    pub events: Vec<TraceEvent>,
}

impl Trace {
    pub fn new() -> Self {
        Trace::default()
    }

    pub fn push(&mut self, from: NodeId, to: NodeId, msg: MobilityMessage, cause: Cause) -> usize {
        self.events.push(TraceEvent {
            from,
            to,
            msg,
            cause,
        });
        self.events.len() - 1
    }

    /// Appends `other`, rebasing its message references.
    pub fn append(&mut self, other: Trace) {
        let base = self.events.len();
        self.events.extend(other.events.into_iter().map(|mut e| {
            e.cause = e.cause.shifted(base);
            e
        }));
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, TraceEvent> {
        self.events.iter()
    }

    pub fn labels(&self) -> Vec<String> {
        self.events.iter().map(TraceEvent::label).collect()
    }

    pub fn kinds(&self) -> Vec<MessageKind> {
        self.events.iter().map(|e| e.msg.kind).collect()
    }

    /// Bytes charged by the performance model (every control message costs
    /// `control_size`).
    pub fn control_bytes(&self, control_size: f64) -> f64 {
        self.events
            .iter()
            .filter(|e| e.msg.kind.is_control())
            .count() as f64
            * control_size
    }
}

impl<'a> IntoIterator for &'a Trace {
    type Item = &'a TraceEvent;
    type IntoIter = std::slice::Iter<'a, TraceEvent>;

    fn into_iter(self) -> Self::IntoIter {
        self.events.iter()
    }
}
