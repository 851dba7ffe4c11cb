//! Deterministic round-based simulation of mining nodes.
//!
//! Every node is stepped once per round in ascending id order. Messages
//! emitted in round `r` are delivered at the start of round `r + 1`, sorted
//! by `(from, kind, payload)`. Traffic is tallied from the messages
//! themselves and never from the cost model.

mod meter;
mod trace;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::itemsets::{Itemset, SupportCount};

pub use meter::{TrafficMeter, TrafficRow};
pub use trace::{
    compare_traces, replay_check, run, run_config, run_loaded, InputSource, NodeTrace, PassStats,
    Protocol, ReplayReport, ResolvedItemset, RunConfig, RunTrace,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub usize);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "N{}", self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MessageKind {
    CandidateSet,
    CountRequest,
    CountResponse,
    FrequentBroadcast,
}

impl MessageKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            MessageKind::CandidateSet => "candidate_set",
            MessageKind::CountRequest => "count_request",
            MessageKind::CountResponse => "count_response",
            MessageKind::FrequentBroadcast => "frequent_broadcast",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Payload {
    Itemsets(Vec<Itemset>),
    Counts(Vec<SupportCount>),
}

impl Payload {
    pub fn units(&self) -> usize {
        match self {
            Payload::Itemsets(v) => v.len(),
            Payload::Counts(v) => v.len(),
        }
    }

    /// Rough wire size: each itemset as a length word plus one word per item.
    pub fn bytes_estimate(&self) -> u64 {
        let words: usize = match self {
            Payload::Itemsets(v) => v.iter().map(|x| 1 + x.len()).sum(),
            Payload::Counts(v) => v.iter().map(|c| 1 + c.itemset.len()).sum(),
        };
        words as u64 * 4
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Message {
    pub from: NodeId,
    pub to: NodeId,
    /// Round the message was emitted in.
    pub round: u32,
    /// Communication pass the message belongs to (1-based).
    pub pass: u32,
    pub kind: MessageKind,
    pub payload: Payload,
}

impl Message {
    pub fn payload_units(&self) -> usize {
        self.payload.units()
    }

    fn header(&self) -> MessageHeader {
        MessageHeader {
            from: self.from,
            to: self.to,
            round: self.round,
            pass: self.pass,
            kind: self.kind,
            units: self.payload.units() as u64,
            bytes: self.payload.bytes_estimate(),
        }
    }
}

/// Everything about a message except its payload; kept in run traces.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MessageHeader {
    pub from: NodeId,
    pub to: NodeId,
    pub round: u32,
    pub pass: u32,
    pub kind: MessageKind,
    pub units: u64,
    pub bytes: u64,
}

/// Collects the messages one node emits during one round.
pub struct Outbox {
    from: NodeId,
    round: u32,
    num_nodes: usize,
    messages: Vec<Message>,
}

impl Outbox {
    pub fn round(&self) -> u32 {
        self.round
    }

    pub fn send(&mut self, to: NodeId, pass: u32, kind: MessageKind, payload: Payload) {
        assert!(to != self.from, "{} tried to message itself", self.from);
        assert!(to.0 < self.num_nodes, "no such node {to}");
        self.messages.push(Message {
            from: self.from,
            to,
            round: self.round,
            pass,
            kind,
            payload,
        });
    }

    /// Sends a copy to every other node.
    pub fn broadcast(&mut self, pass: u32, kind: MessageKind, payload: &Payload) {
        let from = self.from;
        for to in (0..self.num_nodes).map(NodeId).filter(|&n| n != from) {
            self.send(to, pass, kind, payload.clone());
        }
    }
}

/// A node state machine driven by the simulator.
pub trait NodeMachine {
    /// Handles the messages delivered this round and emits new ones.
    fn on_round(&mut self, inbox: Vec<Message>, out: &mut Outbox);

    /// True once the node has nothing left to initiate. A quiescent node
    /// still answers incoming messages.
    fn is_quiescent(&self) -> bool;

    /// Communication passes this node has started.
    fn passes(&self) -> u32;
}

/// What a finished simulation hands back.
pub struct SimOutcome<N> {
    pub nodes: Vec<N>,
    pub rounds: u32,
    pub meter: TrafficMeter,
    pub messages: Vec<MessageHeader>,
}

pub struct Simulator<N> {
    nodes: Vec<N>,
    max_rounds: u32,
}

impl<N: NodeMachine> Simulator<N> {
    pub fn new(nodes: Vec<N>) -> Self {
        Simulator {
            nodes,
            max_rounds: 1_000_000,
        }
    }

    pub fn with_max_rounds(mut self, max_rounds: u32) -> Self {
        self.max_rounds = max_rounds;
        self
    }

    pub fn run(mut self) -> Result<SimOutcome<N>> {
        let num_nodes = self.nodes.len();
        let mut meter = TrafficMeter::default();
        let mut log = Vec::new();
        let mut in_flight: Vec<Message> = Vec::new();
        let mut round = 0u32;
        loop {
            if round >= self.max_rounds {
                return Err(Error::Config(format!(
                    "simulation did not settle within {} rounds",
                    self.max_rounds
                )));
            }
            let mut inboxes: Vec<Vec<Message>> = vec![Vec::new(); num_nodes];
            for m in in_flight.drain(..) {
                debug_assert!(m.round < round, "message delivered in its own round");
                inboxes[m.to.0].push(m);
            }
            let mut emitted = Vec::new();
            for (i, (node, mut inbox)) in self.nodes.iter_mut().zip(inboxes).enumerate() {
                inbox.sort_by(|a, b| {
                    (a.from, a.kind, &a.payload).cmp(&(b.from, b.kind, &b.payload))
                });
                let mut out = Outbox {
                    from: NodeId(i),
                    round,
                    num_nodes,
                    messages: Vec::new(),
                };
                node.on_round(inbox, &mut out);
                emitted.append(&mut out.messages);
            }
            for m in &emitted {
                meter.record(m);
                log.push(m.header());
            }
            round += 1;
            if emitted.is_empty() && self.nodes.iter().all(N::is_quiescent) {
                break;
            }
            in_flight = emitted;
        }
        meter.passes = self.nodes.iter().map(N::passes).max().unwrap_or(0);
        Ok(SimOutcome {
            nodes: self.nodes,
            rounds: round,
            meter,
            messages: log,
        })
    }
}
