use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use anyhow::Context;
use clap::Args;
use serde::Deserialize;

use itemset_grid::costmodel::LogPParams;
use itemset_grid::dataio::PartitionManifest;
use itemset_grid::itemsets::TransactionDb;
use itemset_grid::simnet::{self, InputSource, Protocol, RunConfig, RunTrace};

use crate::report::{self, ComparisonReport, Status};
use crate::{bad_flag, input_source, parse_support, usage, write_output, CliError, CliResult};

const THREADS_VAR: &str = "ITEMSET_GRID_THREADS";

/// Every flag may also come from `--config`; flags given on the command line
/// win. `--support` and `--ratios` take comma-separated lists to sweep.
#[derive(Args, Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CompareArgs {
    /// JSON file with the same fields as the flags (snake_case)
    #[arg(long)]
    #[serde(skip)]
    config: Option<PathBuf>,
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long)]
    parts: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    support: Vec<f64>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    nodes: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    ratios: Vec<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// LogP parameters `L,o,g` [default: 2,1,1]
    #[arg(long)]
    logp: Option<String>,
    /// Report JSON: one object, or an array when sweeping
    #[arg(long)]
    report_out: Option<PathBuf>,
    /// One table row per comparison
    #[arg(long)]
    csv_out: Option<PathBuf>,
    /// Directory for per-level and per-pass CSV series
    #[arg(long)]
    series_dir: Option<PathBuf>,
}

impl CompareArgs {
    fn merged(self) -> CliResult<CompareArgs> {
        let Some(path) = &self.config else {
            return Ok(self);
        };
        let text =
            std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let base: CompareArgs = serde_json::from_str(&text)
            .map_err(|e| CliError::Usage(format!("config {}: {e}", path.display())))?;
        fn list_or<T>(a: Vec<T>, b: Vec<T>) -> Vec<T> {
            if a.is_empty() {
                b
            } else {
                a
            }
        }
        Ok(CompareArgs {
            config: None,
            input: self.input.or(base.input),
            parts: self.parts.or(base.parts),
            support: list_or(self.support, base.support),
            k: self.k.or(base.k),
            nodes: self.nodes.or(base.nodes),
            ratios: list_or(self.ratios, base.ratios),
            seed: self.seed.or(base.seed),
            logp: self.logp.or(base.logp),
            report_out: self.report_out.or(base.report_out),
            csv_out: self.csv_out.or(base.csv_out),
            series_dir: self.series_dir.or(base.series_dir),
        })
    }
}

fn parse_logp(text: &str) -> CliResult<LogPParams<f64>> {
    let v: Vec<f64> = text
        .split(',')
        .map(|x| x.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| CliError::Usage(format!("bad --logp {text:?}")))?;
    let [l, o, g] = v[..] else {
        return usage(format!("--logp wants L,o,g, got {text:?}"));
    };
    bad_flag(LogPParams::new(l, o, g, 1))
}

/// 0 or unset means one thread per core.
fn thread_cap() -> CliResult<usize> {
    let auto = || std::thread::available_parallelism().map_or(1, |n| n.get());
    match std::env::var(THREADS_VAR) {
        Err(_) => Ok(auto()),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(0) => Ok(auto()),
            Ok(n) => Ok(n),
            Err(_) => usage(format!("{THREADS_VAR} must be a non-negative integer")),
        },
    }
}

struct Case {
    ratio: String,
    config: RunConfig,
    parts_index: usize,
}

/// Runs every `(case, protocol)` job on at most `threads` workers. Results
/// come back in job order.
fn run_jobs(
    cases: &[Case],
    inputs: &[Vec<TransactionDb>],
    threads: usize,
) -> CliResult<Vec<(RunTrace, RunTrace)>> {
    let jobs: Vec<(usize, Protocol)> = (0..cases.len())
        .flat_map(|c| [(c, Protocol::Fdm), (c, Protocol::Gfm)])
        .collect();
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<itemset_grid::Result<RunTrace>>>> =
        Mutex::new((0..jobs.len()).map(|_| None).collect());
    std::thread::scope(|scope| {
        for _ in 0..threads.clamp(1, jobs.len().max(1)) {
            scope.spawn(|| loop {
                let j = next.fetch_add(1, Ordering::Relaxed);
                let Some(&(c, protocol)) = jobs.get(j) else {
                    break;
                };
                let case = &cases[c];
                let config = RunConfig {
                    protocol,
                    ..case.config.clone()
                };
                let out = simnet::run_loaded(&config, &inputs[case.parts_index]);
                slots.lock().expect("no worker panicked")[j] = Some(out);
            });
        }
    });
    let mut results = slots
        .into_inner()
        .expect("no worker panicked")
        .into_iter()
        .map(|r| r.expect("every job ran"));
    let mut pairs = Vec::with_capacity(cases.len());
    while let (Some(f), Some(g)) = (results.next(), results.next()) {
        pairs.push((f?, g?));
    }
    Ok(pairs)
}

/// `1:1` for equal weights, otherwise every weight relative to the first.
fn ratio_label(weights: &[f64]) -> String {
    match weights.first() {
        Some(&w0) if weights.iter().any(|&w| w != w0) => weights
            .iter()
            .map(|w| (w / w0).to_string())
            .collect::<Vec<_>>()
            .join(":"),
        _ => "1:1".into(),
    }
}

fn series_name(dir: &Path, support: f64, ratio: &str, what: &str) -> PathBuf {
    dir.join(format!(
        "s{support}_r{}_{what}.csv",
        ratio.replace(':', "-")
    ))
}

pub fn cmd_compare(args: CompareArgs) -> CliResult<()> {
    let a = args.merged()?;
    let k = match a.k {
        None => return usage("--k is required"),
        Some(0) => return usage("--k must be at least 1"),
        Some(k) => k,
    };
    if a.support.is_empty() {
        return usage("--support is required");
    }
    if !a.ratios.is_empty() && a.nodes.is_none() {
        return usage("--ratios needs --nodes");
    }
    let logp = parse_logp(a.logp.as_deref().unwrap_or("2,1,1"))?;
    let supports = a
        .support
        .iter()
        .map(|&s| parse_support(s))
        .collect::<CliResult<Vec<_>>>()?;
    let ratios: Vec<Option<String>> = if a.ratios.is_empty() {
        vec![None]
    } else {
        a.ratios.iter().cloned().map(Some).collect()
    };

    let mut inputs = Vec::new();
    let mut cases = Vec::new();
    for ratio in &ratios {
        let source = input_source(
            a.input.as_deref(),
            a.parts.as_deref(),
            a.nodes,
            ratio.as_deref(),
            a.seed,
        )?;
        inputs.push(source.load()?);
        let label = match (ratio, &source) {
            (Some(r), _) => r.clone(),
            (None, InputSource::Manifest { path }) => {
                ratio_label(&PartitionManifest::read(path)?.ratios)
            }
            _ => "1:1".into(),
        };
        for s in &supports {
            cases.push(Case {
                ratio: label.clone(),
                config: RunConfig {
                    protocol: Protocol::Fdm,
                    support: *s,
                    k,
                    input: source.clone(),
                },
                parts_index: inputs.len() - 1,
            });
        }
    }

    let traces = run_jobs(&cases, &inputs, thread_cap()?)?;
    let mut reports: Vec<ComparisonReport> = Vec::with_capacity(cases.len());
    for (case, (fdm, gfm)) in cases.iter().zip(&traces) {
        let r = report::build(fdm, gfm, &logp, &case.ratio)?;
        if let Some(dir) = &a.series_dir {
            std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            let levels = report::levels_series(fdm, gfm, &r).context("writing level series")?;
            write_output(&series_name(dir, r.support, &case.ratio, "levels"), &levels)?;
            let traffic = report::traffic_series(&[fdm, gfm]).context("writing traffic series")?;
            write_output(
                &series_name(dir, r.support, &case.ratio, "traffic"),
                &traffic,
            )?;
        }
        reports.push(r);
    }

    let mut table = csv::Writer::from_writer(Vec::new());
    table
        .write_record(report::TABLE_HEADER)
        .context("writing csv")?;
    for r in &reports {
        table
            .write_record(report::table_row(r))
            .context("writing csv")?;
    }
    let table = table.into_inner().context("flushing csv")?;
    if let Some(path) = &a.csv_out {
        write_output(path, &table)?;
    }
    if let Some(path) = &a.report_out {
        let mut text = if reports.len() == 1 {
            serde_json::to_string_pretty(&reports[0])
        } else {
            serde_json::to_string_pretty(&reports)
        }
        .context("serializing report")?;
        text.push('\n');
        write_output(path, text.as_bytes())?;
    }
    print!("{}", String::from_utf8_lossy(&table));

    let failed = reports
        .iter()
        .filter(|r| r.status == Status::Failed)
        .count();
    if failed > 0 {
        return Err(CliError::Failed(anyhow::anyhow!(
            "{failed} comparison(s) FAILED: FDM and GFM found different itemsets"
        )));
    }
    Ok(())
}
