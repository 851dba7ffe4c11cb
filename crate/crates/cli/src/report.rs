use serde::Serialize;

use itemset_grid::costmodel::{self, LogPParams};
use itemset_grid::simnet::{InputSource, RunTrace};
use itemset_grid::{FactorReportF64, LogP};

/// Costs are in analytical model units, never seconds.
pub const COST_UNIT: &str = "model-units";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Status {
    #[serde(rename = "ok")]
    Ok,
    #[serde(rename = "FAILED")]
    Failed,
}

#[derive(Debug, Serialize)]
pub struct DatasetInfo {
    pub source: String,
    pub transactions: usize,
    pub universe_size: u32,
}

#[derive(Debug, Serialize)]
pub struct PartitionInfo {
    pub nodes: usize,
    pub ratio: String,
    pub weights: Vec<f64>,
    pub seed: Option<u64>,
    pub part_sizes: Vec<usize>,
}

#[derive(Debug, Serialize)]
pub struct ProtocolSummary {
    pub frequent_per_level: Vec<usize>,
    pub frequent_total: usize,
    pub passes: u32,
    pub rounds: u32,
    pub messages: u64,
    pub itemset_units: u64,
    pub work_model_units: f64,
    pub remote_counting: u64,
    pub communication_model_units: f64,
    pub total_model_units: f64,
}

#[derive(Debug, Serialize)]
pub struct ComparisonReport {
    pub status: Status,
    pub dataset: DatasetInfo,
    pub partition: PartitionInfo,
    pub support: f64,
    pub min_count: u64,
    pub k: usize,
    pub logp: LogP,
    pub cost_unit: &'static str,
    pub fdm: ProtocolSummary,
    pub gfm: ProtocolSummary,
    pub factors: FactorReportF64,
    /// `1 − GFM total / FDM total`; 0 for a single node.
    pub factor: f64,
}

fn frequent_per_level(trace: &RunTrace) -> Vec<usize> {
    let depth = trace
        .result
        .iter()
        .map(|r| r.itemset.len())
        .max()
        .unwrap_or(0);
    let mut out = vec![0; depth];
    for r in &trace.result {
        out[r.itemset.len() - 1] += 1;
    }
    out
}

fn summary(trace: &RunTrace, work: f64, remote: u64, comm: f64, total: f64) -> ProtocolSummary {
    ProtocolSummary {
        frequent_per_level: frequent_per_level(trace),
        frequent_total: trace.result.len(),
        passes: trace.passes,
        rounds: trace.rounds,
        messages: trace.meter.total_messages(),
        itemset_units: trace.meter.total_units(),
        work_model_units: work,
        remote_counting: remote,
        communication_model_units: comm,
        total_model_units: total,
    }
}

pub fn build(
    fdm: &RunTrace,
    gfm: &RunTrace,
    logp: &LogPParams<f64>,
    ratio: &str,
) -> itemset_grid::Result<ComparisonReport> {
    let factors = costmodel::estimate_factors(fdm, gfm, logp)?;
    let c = &factors.costs;
    let status = if fdm.frequent_itemsets() == gfm.frequent_itemsets() {
        Status::Ok
    } else {
        Status::Failed
    };
    let nodes = fdm.nodes.len();
    let factor = if nodes == 1 || c.fdm_total == 0.0 {
        0.0
    } else {
        1.0 - c.gfm_total / c.fdm_total
    };
    let (source, weights, seed) = match &fdm.config.input {
        InputSource::File { path, partition } => {
            (path.clone(), partition.ratios.clone(), Some(partition.seed))
        }
        InputSource::Manifest { path } => (path.clone(), Vec::new(), None),
        InputSource::Generated { partition, .. } => (
            "generated".into(),
            partition.ratios.clone(),
            Some(partition.seed),
        ),
        InputSource::Inline { .. } => ("inline".into(), Vec::new(), None),
    };
    Ok(ComparisonReport {
        status,
        dataset: DatasetInfo {
            source,
            transactions: fdm.total_transactions,
            universe_size: fdm.universe_size,
        },
        partition: PartitionInfo {
            nodes,
            ratio: ratio.to_string(),
            weights,
            seed,
            part_sizes: fdm.nodes.iter().map(|n| n.transactions).collect(),
        },
        support: fdm.config.support.as_f64(),
        min_count: fdm.global_min_count,
        k: fdm.config.k,
        logp: logp.with_procs(nodes),
        cost_unit: COST_UNIT,
        fdm: summary(fdm, c.fdm_work, c.fdm_remote, c.c_fdm, c.fdm_total),
        gfm: summary(gfm, c.gfm_work, c.gfm_remote, c.c_gfm, c.gfm_total),
        factor,
        factors,
    })
}

pub const TABLE_HEADER: [&str; 13] = [
    "support",
    "ratio",
    "size",
    "nodes",
    "fdm_model_units",
    "gfm_model_units",
    "factor",
    "fdm_passes",
    "gfm_passes",
    "fdm_itemset_units",
    "gfm_itemset_units",
    "communication_gain",
    "status",
];

pub fn table_row(r: &ComparisonReport) -> Vec<String> {
    vec![
        r.support.to_string(),
        r.partition.ratio.clone(),
        r.dataset.transactions.to_string(),
        r.partition.nodes.to_string(),
        format!("{:.3}", r.fdm.total_model_units),
        format!("{:.3}", r.gfm.total_model_units),
        format!("{:.6}", r.factor),
        r.fdm.passes.to_string(),
        r.gfm.passes.to_string(),
        r.fdm.itemset_units.to_string(),
        r.gfm.itemset_units.to_string(),
        format!("{:.6}", r.factors.gain),
        match r.status {
            Status::Ok => "ok".into(),
            Status::Failed => "FAILED".into(),
        },
    ]
}

/// Level profile: candidate and success counts per level for both
/// protocols, with the estimated factors.
pub fn levels_series(
    fdm: &RunTrace,
    gfm: &RunTrace,
    report: &ComparisonReport,
) -> csv::Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "level",
        "fdm_candidates",
        "fdm_successes",
        "gfm_local_counted",
        "gfm_local_frequent",
        "p_l",
        "p_items",
        "fdm_success_rate",
    ])?;
    let sum = |t: &RunTrace, l: usize, f: fn(&itemset_grid::itemsets::LevelStats) -> u64| -> u64 {
        t.nodes.iter().filter_map(|n| n.levels.get(l)).map(f).sum()
    };
    for (l, f) in report.factors.levels.iter().enumerate() {
        w.serialize((
            f.level,
            sum(fdm, l, |s| s.candidates),
            sum(fdm, l, |s| s.successes),
            sum(gfm, l, |s| s.counted),
            sum(gfm, l, |s| s.locally_frequent),
            f.p_l,
            f.p_items,
            f.fdm_success_rate,
        ))?;
    }
    w.into_inner().map_err(|e| e.into_error().into())
}

/// Traffic profile: messages and itemset units per pass per protocol.
pub fn traffic_series(traces: &[&RunTrace]) -> csv::Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["protocol", "pass", "messages", "itemset_units"])?;
    for t in traces {
        let mut per_pass = std::collections::BTreeMap::<u32, (u64, u64)>::new();
        for row in &t.meter.rows {
            let e = per_pass.entry(row.pass).or_default();
            e.0 += row.messages;
            e.1 += row.itemset_units;
        }
        for (pass, (messages, units)) in per_pass {
            w.serialize((t.protocol.as_str(), pass, messages, units))?;
        }
    }
    w.into_inner().map_err(|e| e.into_error().into())
}
