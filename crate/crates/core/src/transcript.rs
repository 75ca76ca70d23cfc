//! Append-only record of a protocol run and the final verdict types.
//!
//! Each event renders as one line: `STAGE ACTOR kind key=value`.

use std::fmt;

use crate::bits::BitString;
use crate::state::BellState;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Stage {
    Osb1,
    Osb2,
    Osb3,
    Osb4,
    Osb5,
    Osb6,
    Osb7,
    Osb8,
    Sq1,
    Sq2,
    Sq3,
    Sq4,
    Sq5,
    Sq6,
    Sq7,
    Sq8,
    Sq9,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Stage::Osb1 => "OSB1",
            Stage::Osb2 => "OSB2",
            Stage::Osb3 => "OSB3",
            Stage::Osb4 => "OSB4",
            Stage::Osb5 => "OSB5",
            Stage::Osb6 => "OSB6",
            Stage::Osb7 => "OSB7",
            Stage::Osb8 => "OSB8",
            Stage::Sq1 => "SQ1",
            Stage::Sq2 => "SQ2",
            Stage::Sq3 => "SQ3",
            Stage::Sq4 => "SQ4",
            Stage::Sq5 => "SQ5",
            Stage::Sq6 => "SQ6",
            Stage::Sq7 => "SQ7",
            Stage::Sq8 => "SQ8",
            Stage::Sq9 => "SQ9",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Actor {
    Tp,
    Alice,
    Bob,
}

impl fmt::Display for Actor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Actor::Tp => "TP",
            Actor::Alice => "Alice",
            Actor::Bob => "Bob",
        })
    }
}

/// Publicly announced content. Secret keys have no variant here.
#[derive(Debug, Clone, PartialEq)]
pub enum Payload {
    Positions { label: &'static str, positions: Vec<usize> },
    Bits { label: &'static str, bits: BitString },
    BellStates { label: &'static str, states: Vec<BellState> },
    Verdict(Verdict),
}

impl fmt::Display for Payload {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Payload::Positions { label, positions } => {
                write!(f, "{label}=")?;
                join(f, positions.iter())
            }
            Payload::Bits { label, bits } => write!(f, "{label}={bits}"),
            Payload::BellStates { label, states } => {
                write!(f, "{label}=")?;
                join(f, states.iter())
            }
            Payload::Verdict(v) => write!(f, "verdict={v}"),
        }
    }
}

fn join<T: fmt::Display>(f: &mut fmt::Formatter<'_>, items: impl Iterator<Item = T>) -> fmt::Result {
    for (i, item) in items.enumerate() {
        if i > 0 {
            f.write_str(",")?;
        }
        write!(f, "{item}")?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub enum EventBody {
    QuantumSend { to: Actor, qubits: usize },
    Measurement { basis: &'static str, qubits: usize },
    Announce(Payload),
    Restart { reason: String },
    Abort(Abort),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Event {
    pub stage: Stage,
    pub actor: Actor,
    pub body: EventBody,
}

impl fmt::Display for Event {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} ", self.stage, self.actor)?;
        match &self.body {
            EventBody::QuantumSend { to, qubits } => write!(f, "send to={to} qubits={qubits}"),
            EventBody::Measurement { basis, qubits } => write!(f, "measure basis={basis} qubits={qubits}"),
            EventBody::Announce(p) => write!(f, "announce {p}"),
            EventBody::Restart { reason } => write!(f, "restart reason={reason}"),
            EventBody::Abort(a) => write!(f, "abort {}", a.detail()),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Transcript {
    events: Vec<Event>,
}

impl Transcript {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, stage: Stage, actor: Actor, body: EventBody) {
        self.events.push(Event { stage, actor, body });
    }

    pub fn announce(&mut self, stage: Stage, actor: Actor, payload: Payload) {
        self.push(stage, actor, EventBody::Announce(payload));
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn announcements(&self) -> impl Iterator<Item = (&Event, &Payload)> {
        self.events.iter().filter_map(|e| match &e.body {
            EventBody::Announce(p) => Some((e, p)),
            _ => None,
        })
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// Line-delimited rendering, one event per line.
    pub fn to_log(&self) -> String {
        self.events.iter().map(|e| format!("{e}\n")).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum AbortReason {
    /// Observed disturbance above the allowed threshold.
    ErrorRate,
    /// A sacrificed bit pair disagreed with the announced Bell parity.
    ParityViolation,
    /// Malformed input to a protocol step.
    ProtocolError(String),
}

impl fmt::Display for AbortReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AbortReason::ErrorRate => f.write_str("error-rate"),
            AbortReason::ParityViolation => f.write_str("parity-violation"),
            AbortReason::ProtocolError(msg) => write!(f, "protocol-error:{}", msg.replace(' ', "_")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Abort {
    pub stage: Stage,
    pub reason: AbortReason,
    pub error_rate: Option<f64>,
}

impl Abort {
    pub fn new(stage: Stage, reason: AbortReason, error_rate: Option<f64>) -> Self {
        Self {
            stage,
            reason,
            error_rate,
        }
    }

    pub fn protocol_error(stage: Stage, msg: impl Into<String>) -> Self {
        Self::new(stage, AbortReason::ProtocolError(msg.into()), None)
    }

    fn detail(&self) -> String {
        match self.error_rate {
            Some(rate) => format!("stage={} reason={} rate={rate}", self.stage, self.reason),
            None => format!("stage={} reason={}", self.stage, self.reason),
        }
    }
}

/// TP's final verdict.
#[derive(Debug, Clone, PartialEq)]
pub enum Verdict {
    Equal,
    /// Positions `i` with `R^i = 1`; never empty.
    Unequal(Vec<usize>),
    Aborted(Abort),
}

impl Verdict {
    pub fn from_result(r: &BitString) -> Verdict {
        let ones = r.ones();
        if ones.is_empty() {
            Verdict::Equal
        } else {
            Verdict::Unequal(ones)
        }
    }

    pub fn is_aborted(&self) -> bool {
        matches!(self, Verdict::Aborted(_))
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::Equal => f.write_str("equal"),
            Verdict::Unequal(pos) => {
                f.write_str("unequal:")?;
                join(f, pos.iter())
            }
            Verdict::Aborted(a) => write!(f, "aborted:{}:{}", a.stage, a.reason),
        }
    }
}
