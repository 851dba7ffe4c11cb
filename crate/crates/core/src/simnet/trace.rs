use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{MessageHeader, NodeId, Simulator, TrafficMeter};
use crate::dataio::{self, GenParams, PartitionManifest, PartitionSpec};
use crate::error::{Error, Result};
use crate::itemsets::{Itemset, LevelStats, SupportThreshold, TransactionDb};
use crate::protocols::{gfm_finalize, CentralizedNode, FdmNode, GfmNode, NodeSetup};

pub use crate::protocols::{PassStats, ResolvedItemset};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Protocol {
    Centralized,
    Fdm,
    Gfm,
}

impl Protocol {
    pub fn as_str(&self) -> &'static str {
        match self {
            Protocol::Centralized => "centralized",
            Protocol::Fdm => "fdm",
            Protocol::Gfm => "gfm",
        }
    }
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Protocol {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "centralized" => Ok(Protocol::Centralized),
            "fdm" => Ok(Protocol::Fdm),
            "gfm" => Ok(Protocol::Gfm),
            other => Err(Error::InvalidInput(format!("unknown protocol {other:?}"))),
        }
    }
}

/// Where a run's partitions come from. Traces keep this so a run can be
/// re-executed from the trace alone.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InputSource {
    Inline {
        parts: Vec<TransactionDb>,
    },
    Generated {
        params: GenParams,
        partition: PartitionSpec,
    },
    File {
        path: String,
        partition: PartitionSpec,
    },
    Manifest {
        path: String,
    },
}

impl InputSource {
    pub fn load(&self) -> Result<Vec<TransactionDb>> {
        match self {
            InputSource::Inline { parts } => Ok(parts.clone()),
            InputSource::Generated { params, partition } => {
                dataio::partition(&dataio::generate(params)?, partition)
            }
            InputSource::File { path, partition } => {
                dataio::partition(&dataio::read_db(path)?, partition)
            }
            InputSource::Manifest { path } => {
                let path = Path::new(path);
                let base = path.parent().unwrap_or(Path::new("."));
                PartitionManifest::read(path)?.load_parts(base)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub protocol: Protocol,
    pub support: SupportThreshold,
    pub k: usize,
    pub input: InputSource,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeTrace {
    pub node: NodeId,
    pub transactions: usize,
    pub local_min_count: u64,
    /// Per-level counters: GC/GS/GFa for FDM, LC/LS/LFa otherwise.
    pub levels: Vec<LevelStats>,
    /// Top-down passes (GFM only).
    pub passes: Vec<PassStats>,
    /// Largest itemset size in the first GFM request (0 otherwise).
    pub top_level: usize,
}

/// Complete record of one protocol execution.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunTrace {
    pub protocol: Protocol,
    pub config: RunConfig,
    pub universe_size: u32,
    pub total_transactions: usize,
    pub global_min_count: u64,
    pub rounds: u32,
    pub passes: u32,
    pub nodes: Vec<NodeTrace>,
    pub meter: TrafficMeter,
    pub messages: Vec<MessageHeader>,
    /// Globally frequent itemsets, ordered by size then lexicographically.
    pub result: Vec<ResolvedItemset>,
}

impl RunTrace {
    pub fn frequent_itemsets(&self) -> BTreeSet<Itemset> {
        self.result.iter().map(|r| r.itemset.clone()).collect()
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    /// Number of levels with recorded stats, maximized over nodes.
    pub fn executed_levels(&self) -> usize {
        self.nodes.iter().map(|n| n.levels.len()).max().unwrap_or(0)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn write_json(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut text = self.to_json()?;
        text.push('\n');
        dataio::write_atomic(path.as_ref(), text.as_bytes())
    }

    pub fn read_json(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }
}

/// Runs `protocol` over in-memory partitions. The partitions are embedded in
/// the trace's config so it can be replayed.
pub fn run(
    protocol: Protocol,
    parts: &[TransactionDb],
    s: &SupportThreshold,
    k: usize,
) -> Result<RunTrace> {
    let config = RunConfig {
        protocol,
        support: *s,
        k,
        input: InputSource::Inline {
            parts: parts.to_vec(),
        },
    };
    execute(config, parts)
}

/// Loads the configured input and runs.
pub fn run_config(config: &RunConfig) -> Result<RunTrace> {
    let parts = config.input.load()?;
    execute(config.clone(), &parts)
}

/// Runs with partitions the caller already loaded from `config.input`.
pub fn run_loaded(config: &RunConfig, parts: &[TransactionDb]) -> Result<RunTrace> {
    execute(config.clone(), parts)
}

fn execute(config: RunConfig, parts: &[TransactionDb]) -> Result<RunTrace> {
    if parts.is_empty() {
        return Err(Error::Config("at least one partition is required".into()));
    }
    if config.k == 0 {
        return Err(Error::Config("k must be at least 1".into()));
    }
    let n = parts[0].universe_size();
    if let Some(p) = parts.iter().find(|p| p.universe_size() != n) {
        return Err(Error::Config(format!(
            "partitions disagree on universe size ({n} vs {})",
            p.universe_size()
        )));
    }
    let s = config.support;
    let total: usize = parts.iter().map(TransactionDb::count).sum();
    let global_min = s.absolute(total);
    let merged;
    let dbs: Vec<&TransactionDb> = match config.protocol {
        Protocol::Centralized => {
            merged = TransactionDb::concat(parts)?;
            vec![&merged]
        }
        _ => parts.iter().collect(),
    };
    let setups: Vec<NodeSetup<'_>> = dbs
        .iter()
        .enumerate()
        .map(|(i, db)| NodeSetup {
            id: NodeId(i),
            num_nodes: dbs.len(),
            db,
            global_min,
            local_min: s.absolute(db.count()),
            k: config.k,
        })
        .collect();
    let node_trace =
        |setup: &NodeSetup<'_>, levels: &[LevelStats], passes: &[PassStats], top: usize| {
            NodeTrace {
                node: setup.id,
                transactions: setup.db.count(),
                local_min_count: setup.local_min,
                levels: levels.to_vec(),
                passes: passes.to_vec(),
                top_level: top,
            }
        };

    let (nodes, result, rounds, meter, messages) = match config.protocol {
        Protocol::Centralized => {
            let out =
                Simulator::new(setups.iter().map(|s| CentralizedNode::new(*s)).collect()).run()?;
            let nodes = vec![node_trace(&setups[0], out.nodes[0].stats(), &[], 0)];
            (
                nodes,
                out.nodes[0].result(),
                out.rounds,
                out.meter,
                out.messages,
            )
        }
        Protocol::Fdm => {
            let out = Simulator::new(setups.iter().map(|s| FdmNode::new(*s)).collect()).run()?;
            let first = out.nodes[0].global_levels();
            if out.nodes.iter().any(|n| n.global_levels() != first) {
                return Err(Error::Config(
                    "FDM nodes ended with different frequent sets".into(),
                ));
            }
            let nodes = setups
                .iter()
                .zip(&out.nodes)
                .map(|(s, n)| node_trace(s, n.stats(), &[], 0))
                .collect();
            (
                nodes,
                out.nodes[0].result(),
                out.rounds,
                out.meter,
                out.messages,
            )
        }
        Protocol::Gfm => {
            let out = Simulator::new(setups.iter().map(|s| GfmNode::new(*s)).collect()).run()?;
            let nodes = setups
                .iter()
                .zip(&out.nodes)
                .map(|(s, n)| node_trace(s, n.local_stats(), n.pass_stats(), n.top_level()))
                .collect();
            (
                nodes,
                gfm_finalize(&out.nodes),
                out.rounds,
                out.meter,
                out.messages,
            )
        }
    };
    let mut result = result;
    result.sort_by(|a, b| crate::protocols::by_size_then_lex(&a.itemset, &b.itemset));
    Ok(RunTrace {
        protocol: config.protocol,
        passes: meter.passes,
        config,
        universe_size: n,
        total_transactions: total,
        global_min_count: global_min,
        rounds,
        nodes,
        meter,
        messages,
        result,
    })
}

/// Outcome of comparing two traces.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReplayReport {
    pub matches: bool,
    /// JSON path of the first difference, with both values.
    pub divergence: Option<String>,
}

/// Re-executes the trace's config and checks the new trace is identical.
pub fn replay_check(trace: &RunTrace) -> Result<ReplayReport> {
    let again = run_config(&trace.config)?;
    compare_traces(trace, &again)
}

/// Field-by-field comparison. Traces of different configs are not
/// comparable and yield an error.
pub fn compare_traces(a: &RunTrace, b: &RunTrace) -> Result<ReplayReport> {
    if a.config != b.config {
        return Err(Error::Config(
            "traces come from different run configurations".into(),
        ));
    }
    let divergence = first_divergence("$", &serde_json::to_value(a)?, &serde_json::to_value(b)?);
    Ok(ReplayReport {
        matches: divergence.is_none(),
        divergence,
    })
}

fn first_divergence(path: &str, a: &Value, b: &Value) -> Option<String> {
    match (a, b) {
        (Value::Object(x), Value::Object(y)) => {
            for (key, va) in x {
                let p = format!("{path}.{key}");
                match y.get(key) {
                    Some(vb) => {
                        if let Some(d) = first_divergence(&p, va, vb) {
                            return Some(d);
                        }
                    }
                    None => return Some(format!("{p}: missing on one side")),
                }
            }
            y.keys()
                .find(|k| !x.contains_key(*k))
                .map(|k| format!("{path}.{k}: missing on one side"))
        }
        (Value::Array(x), Value::Array(y)) => {
            for (i, (va, vb)) in x.iter().zip(y).enumerate() {
                if let Some(d) = first_divergence(&format!("{path}[{i}]"), va, vb) {
                    return Some(d);
                }
            }
            (x.len() != y.len()).then(|| format!("{path}: length {} vs {}", x.len(), y.len()))
        }
        _ => (a != b).then(|| format!("{path}: {a} vs {b}")),
    }
}
