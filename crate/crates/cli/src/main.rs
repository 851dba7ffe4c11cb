use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};

use itemset_grid::dataio::{self, GenParams, PartitionSpec};
use itemset_grid::itemsets::{LevelStats, SupportThreshold};
use itemset_grid::simnet::{self, InputSource, Protocol, RunConfig, RunTrace};

mod compare;
mod report;

/// Frequent itemset mining over a simulated cluster.
#[derive(Parser, Debug)]
#[command(name = "itemset-grid", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a synthetic market-basket dataset
    Gen(GenArgs),
    /// Split a dataset into per-node files plus a manifest
    Partition(PartitionArgs),
    /// Run one protocol and write its trace
    Mine(MineArgs),
    /// Run FDM and GFM on the same input and report costs
    Compare(compare::CompareArgs),
}

#[derive(Args, Debug)]
struct GenArgs {
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 10_000)]
    transactions: usize,
    #[arg(long, default_value_t = 1_000)]
    items: u32,
    #[arg(long, default_value_t = 20.0)]
    avg_size: f64,
    #[arg(long, default_value_t = 200)]
    patterns: usize,
    #[arg(long, default_value_t = 4.0)]
    avg_pattern: f64,
    #[arg(long, default_value_t = 0.25)]
    corruption: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args, Debug)]
struct PartitionArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    nodes: usize,
    /// `1:r` for a linear spread, or one weight per node (`1:2:4`)
    #[arg(long)]
    ratios: Option<String>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out_dir: PathBuf,
    /// File name prefix; defaults to the input's file stem
    #[arg(long)]
    stem: Option<String>,
}

#[derive(Args, Debug)]
struct MineArgs {
    /// Dataset file, split in memory with --nodes/--ratios/--seed
    #[arg(long, conflicts_with = "parts")]
    input: Option<PathBuf>,
    /// Partition manifest written by `partition`
    #[arg(long)]
    parts: Option<PathBuf>,
    #[arg(long)]
    protocol: Protocol,
    #[arg(long)]
    support: f64,
    #[arg(long)]
    k: usize,
    #[arg(long)]
    ratios: Option<String>,
    #[arg(long)]
    nodes: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trace_out: Option<PathBuf>,
    /// Per-node, per-level counters
    #[arg(long)]
    csv_out: Option<PathBuf>,
    /// Per-pass traffic rows
    #[arg(long)]
    traffic_out: Option<PathBuf>,
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Failed(anyhow::Error),
}

impl From<anyhow::Error> for CliError {
    fn from(e: anyhow::Error) -> Self {
        CliError::Failed(e)
    }
}

impl From<itemset_grid::Error> for CliError {
    fn from(e: itemset_grid::Error) -> Self {
        CliError::Failed(e.into())
    }
}

pub type CliResult<T> = Result<T, CliError>;

pub fn usage<T>(msg: impl Into<String>) -> CliResult<T> {
    Err(CliError::Usage(msg.into()))
}

/// Maps a library validation error to a usage error.
pub fn bad_flag<T>(r: itemset_grid::Result<T>) -> CliResult<T> {
    r.map_err(|e| CliError::Usage(e.to_string()))
}

pub fn parse_support(s: f64) -> CliResult<SupportThreshold> {
    bad_flag(SupportThreshold::new(s))
}

/// `1:r` spreads linearly over the nodes; a list of exactly `nodes` weights
/// is taken as is.
pub fn parse_ratios(text: &str, nodes: usize, seed: u64) -> CliResult<PartitionSpec> {
    let weights: Vec<f64> = text
        .split(':')
        .map(|w| w.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| CliError::Usage(format!("bad ratio {text:?}")))?;
    let spec = if weights.len() == nodes {
        PartitionSpec {
            num_nodes: nodes,
            ratios: weights,
            seed,
        }
    } else if weights.len() == 2 {
        if weights[0].is_nan() || weights[0] <= 0.0 {
            return usage(format!("bad ratio {text:?}"));
        }
        PartitionSpec::linear(nodes, weights[1] / weights[0], seed)
    } else {
        return usage(format!("ratio {text:?} does not fit {nodes} nodes"));
    };
    bad_flag(spec.validate())?;
    Ok(spec)
}

/// Resolves the input flags shared by `mine` and `compare`.
pub fn input_source(
    input: Option<&Path>,
    parts: Option<&Path>,
    nodes: Option<usize>,
    ratios: Option<&str>,
    seed: Option<u64>,
) -> CliResult<InputSource> {
    match (input, parts) {
        (Some(_), Some(_)) => usage("--input and --parts are mutually exclusive"),
        (None, None) => usage("one of --input or --parts is required"),
        (None, Some(p)) => {
            if nodes.is_some() || ratios.is_some() || seed.is_some() {
                return usage("--parts already fixes the split; drop --nodes/--ratios/--seed");
            }
            Ok(InputSource::Manifest {
                path: p.display().to_string(),
            })
        }
        (Some(path), None) => {
            if ratios.is_some() && nodes.is_none() {
                return usage("--ratios needs --nodes");
            }
            let nodes = nodes.unwrap_or(1);
            if nodes == 0 {
                return usage("--nodes must be at least 1");
            }
            let seed = seed.unwrap_or(0);
            let partition = match ratios {
                Some(r) => parse_ratios(r, nodes, seed)?,
                None => PartitionSpec::uniform(nodes, seed),
            };
            Ok(InputSource::File {
                path: path.display().to_string(),
                partition,
            })
        }
    }
}

pub fn write_output(path: &Path, bytes: &[u8]) -> CliResult<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    dataio::write_atomic(path, bytes)?;
    Ok(())
}

fn cmd_gen(a: GenArgs) -> CliResult<()> {
    let params = GenParams {
        num_transactions: a.transactions,
        universe_size: a.items,
        avg_transaction_size: a.avg_size,
        num_patterns: a.patterns,
        avg_pattern_size: a.avg_pattern,
        corruption: a.corruption,
        seed: a.seed,
    };
    bad_flag(params.validate())?;
    let db = dataio::generate(&params)?;
    write_output(&a.out, dataio::format_db(&db).as_bytes())?;
    println!("wrote {} transactions to {}", db.count(), a.out.display());
    Ok(())
}

fn cmd_partition(a: PartitionArgs) -> CliResult<()> {
    let spec = match &a.ratios {
        Some(r) => parse_ratios(r, a.nodes, a.seed)?,
        None => PartitionSpec::uniform(a.nodes, a.seed),
    };
    bad_flag(spec.validate())?;
    let db = dataio::read_db(&a.input)?;
    let stem = match a.stem {
        Some(s) => s,
        None => a
            .input
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "data".into()),
    };
    std::fs::create_dir_all(&a.out_dir)
        .with_context(|| format!("creating {}", a.out_dir.display()))?;
    let (path, manifest) = dataio::write_partitions(
        &db,
        &spec,
        &a.input.display().to_string(),
        &a.out_dir,
        &stem,
    )?;
    let sizes: Vec<String> = manifest.parts.iter().map(|p| p.count.to_string()).collect();
    println!(
        "wrote {} parts ({}) and {}",
        sizes.len(),
        sizes.join(", "),
        path.display()
    );
    Ok(())
}

fn levels_csv(trace: &RunTrace) -> CliResult<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "protocol",
        "node",
        "level",
        "counted",
        "candidates",
        "successes",
        "failures",
        "locally_frequent",
        "items_involved",
        "remote_work",
    ])
    .context("writing csv")?;
    for node in &trace.nodes {
        for LevelStats {
            level,
            counted,
            candidates,
            successes,
            failures,
            locally_frequent,
            items_involved,
            remote_work,
            ..
        } in &node.levels
        {
            w.serialize((
                trace.protocol.as_str(),
                node.node.0,
                level,
                counted,
                candidates,
                successes,
                failures,
                locally_frequent,
                items_involved,
                remote_work,
            ))
            .context("writing csv")?;
        }
    }
    Ok(w.into_inner().context("flushing csv")?)
}

fn cmd_mine(a: MineArgs) -> CliResult<()> {
    if a.protocol == Protocol::Centralized && (a.nodes.is_some() || a.ratios.is_some()) {
        return usage("the centralized protocol takes no cluster flags (--nodes, --ratios)");
    }
    if a.k == 0 {
        return usage("--k must be at least 1");
    }
    let config = RunConfig {
        protocol: a.protocol,
        support: parse_support(a.support)?,
        k: a.k,
        input: input_source(
            a.input.as_deref(),
            a.parts.as_deref(),
            a.nodes,
            a.ratios.as_deref(),
            a.seed,
        )?,
    };
    let trace = simnet::run_config(&config)?;
    if let Some(path) = &a.trace_out {
        let mut text = trace.to_json()?;
        text.push('\n');
        write_output(path, text.as_bytes())?;
    }
    if let Some(path) = &a.csv_out {
        write_output(path, &levels_csv(&trace)?)?;
    }
    if let Some(path) = &a.traffic_out {
        let mut buf = Vec::new();
        trace.meter.write_csv(trace.protocol.as_str(), &mut buf)?;
        write_output(path, &buf)?;
    }
    println!(
        "{}: {} frequent itemsets, {} passes, {} rounds, {} messages, {} itemset units",
        trace.protocol,
        trace.result.len(),
        trace.passes,
        trace.rounds,
        trace.meter.total_messages(),
        trace.meter.total_units()
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => e.exit(),
    };
    let result = match cli.command {
        Command::Gen(a) => cmd_gen(a),
        Command::Partition(a) => cmd_partition(a),
        Command::Mine(a) => cmd_mine(a),
        Command::Compare(a) => compare::cmd_compare(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Failed(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
