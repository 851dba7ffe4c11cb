//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use num_rational::Ratio;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use itemset_grid::costmodel::{
    c_fdm, c_gfm, estimate_factors, work_bound, FactorReport, LogPParams,
};
use itemset_grid::dataio::{generate, partition, GenParams, PartitionSpec};
use itemset_grid::itemsets::{
    brute_force_frequent, mine_apriori, support, Itemset, LevelStats, SupportThreshold,
    TransactionDb,
};
use itemset_grid::simnet::{self, compare_traces, replay_check, Protocol, RunTrace};

type Q = Ratio<i64>;

struct Verdict {
    name: &'static str,
    pass: bool,
    detail: String,
}

fn verdict(name: &'static str, failures: &[String], detail: String) -> Verdict {
    let detail = match failures.first() {
        None => detail,
        Some(first) => format!("{} failure(s), first: {first}; {detail}", failures.len()),
    };
    Verdict {
        name,
        pass: failures.is_empty(),
        detail,
    }
}

struct Case {
    id: usize,
    whole: TransactionDb,
    parts: Vec<TransactionDb>,
    s: SupportThreshold,
    k: usize,
}

struct CaseRun {
    central: RunTrace,
    fdm: RunTrace,
    gfm: RunTrace,
}

const NODE_COUNTS: [usize; 4] = [1, 2, 3, 5];
const RATIOS: [f64; 3] = [1.0, 5.0, 10.0];
const CORPUS_SIZE: usize = 240;

fn corpus() -> Vec<Case> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    (0..CORPUS_SIZE)
        .map(|id| {
            let m = NODE_COUNTS[id % 4];
            let r = RATIOS[(id / 4) % 3];
            let n: u32 = rng.random_range(1..=20);
            let d: usize = rng.random_range(m..=200);
            let density: f64 = rng.random_range(0.05..0.5);
            let rows: Vec<Vec<u32>> = (0..d)
                .map(|_| (0..n).filter(|_| rng.random_bool(density)).collect())
                .collect();
            let whole = TransactionDb::from_rows(n, rows).unwrap();
            let spec = PartitionSpec::linear(m, r, id as u64);
            let parts = partition(&whole, &spec).unwrap();
            let s = SupportThreshold::new(f64::from(rng.random_range(1..=9u8)) / 10.0).unwrap();
            let k = rng.random_range(1..=(n as usize).min(8));
            Case {
                id,
                whole,
                parts,
                s,
                k,
            }
        })
        .collect()
}

fn counted_sets(trace: &RunTrace) -> BTreeMap<Itemset, u64> {
    trace
        .result
        .iter()
        .map(|r| (r.itemset.clone(), r.count))
        .collect()
}

fn oracle_equivalence(cases: &[Case]) -> (Verdict, Vec<CaseRun>) {
    let start = Instant::now();
    let mut failures = Vec::new();
    let mut runs = Vec::new();
    for c in cases {
        let oracle: BTreeMap<Itemset, u64> = brute_force_frequent(&c.whole, &c.s, c.k)
            .unwrap()
            .into_iter()
            .flat_map(|l| l.entries)
            .map(|e| (e.itemset, e.count))
            .collect();
        let apriori: BTreeMap<Itemset, u64> = mine_apriori(&c.whole, &c.s, c.k)
            .frequent()
            .map(|e| (e.itemset.clone(), e.count))
            .collect();
        if apriori != oracle {
            failures.push(format!("case {}: Apriori differs from brute force", c.id));
        }
        let central = simnet::run(Protocol::Centralized, &c.parts, &c.s, c.k).unwrap();
        let fdm = simnet::run(Protocol::Fdm, &c.parts, &c.s, c.k).unwrap();
        let gfm = simnet::run(Protocol::Gfm, &c.parts, &c.s, c.k).unwrap();
        if counted_sets(&central) != oracle {
            failures.push(format!(
                "case {}: centralized run differs from brute force",
                c.id
            ));
        }
        if counted_sets(&fdm) != oracle {
            failures.push(format!("case {}: FDM differs from centralized", c.id));
        }
        if gfm.frequent_itemsets() != central.frequent_itemsets() {
            failures.push(format!("case {}: GFM differs from centralized", c.id));
        }
        runs.push(CaseRun { central, fdm, gfm });
    }
    let elapsed = start.elapsed();
    if elapsed >= Duration::from_secs(60) {
        failures.push(format!("took {:.1} s", elapsed.as_secs_f64()));
    }
    let detail = format!(
        "{} DBs (n<=20, D<=200, M in {NODE_COUNTS:?}, ratios 1:1/1:5/1:10), {:.1} s (limit 60 s)",
        cases.len(),
        elapsed.as_secs_f64()
    );
    (verdict("oracle equivalence", &failures, detail), runs)
}

/// `C_{l+1} (l+1) <= (I_l - l) GS_l` checked in integers.
fn within_bound(next_counted: u64, l: u64, items: u64, gs: u64) -> bool {
    (next_counted * (l + 1)) as i128 <= (items as i128 - l as i128) * gs as i128
}

fn local_bound_violation(stats: &[LevelStats], n: u32) -> Option<usize> {
    if stats.first().is_some_and(|s| s.counted != u64::from(n)) {
        return Some(1);
    }
    stats.windows(2).find_map(|w| {
        let l = w[0].level as u64;
        (!within_bound(w[1].counted, l, w[0].items_involved, w[0].locally_frequent))
            .then_some(w[1].level)
    })
}

fn global_bound_violation(fdm: &RunTrace) -> Option<usize> {
    let result = fdm.frequent_itemsets();
    let node = &fdm.nodes[0];
    node.levels.windows(2).find_map(|w| {
        let l = w[0].level;
        let level: Vec<&Itemset> = result.iter().filter(|x| x.len() == l).collect();
        let items: BTreeSet<u32> = level
            .iter()
            .flat_map(|x| x.items().iter().copied())
            .collect();
        (!within_bound(
            w[1].counted,
            l as u64,
            items.len() as u64,
            level.len() as u64,
        ))
        .then_some(w[1].level)
    })
}

fn property_suite(cases: &[Case], runs: &[CaseRun]) -> Verdict {
    let start = Instant::now();
    let mut failures = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(0xfeed);
    let mut probes = 0usize;
    let mut bound_checks = 0usize;
    let mut inferred = 0usize;
    for (c, r) in cases.iter().zip(runs) {
        let n = c.whole.universe_size();
        for _ in 0..16 {
            let size = rng.random_range(1..=(n as usize).min(5));
            let items: Vec<u32> = (0..size).map(|_| rng.random_range(0..n)).collect();
            let x = Itemset::from_unsorted(items);
            let sx = support(&c.whole, &x).unwrap().count;
            probes += 1;
            for y in x.immediate_subsets().into_iter().filter(|y| !y.is_empty()) {
                if support(&c.whole, &y).unwrap().count < sx {
                    failures.push(format!("case {}: anti-monotonicity broken at {x}", c.id));
                }
            }
            let summed: u64 = c.parts.iter().map(|p| support(p, &x).unwrap().count).sum();
            if summed != sx {
                failures.push(format!(
                    "case {}: partition supports of {x} do not add up",
                    c.id
                ));
            }
        }

        for t in [&r.central, &r.fdm, &r.gfm] {
            let sets = t.frequent_itemsets();
            if let Some(x) = sets.iter().find(|x| {
                x.immediate_subsets()
                    .iter()
                    .any(|y| !y.is_empty() && !sets.contains(y))
            }) {
                failures.push(format!(
                    "case {}: {} result not downward closed at {x}",
                    c.id, t.protocol
                ));
            }
        }

        for node in r.central.nodes.iter().chain(&r.gfm.nodes) {
            bound_checks += node.levels.len();
            if let Some(l) = local_bound_violation(&node.levels, n) {
                failures.push(format!(
                    "case {}: candidate bound exceeded at level {l}",
                    c.id
                ));
            }
        }
        bound_checks += r.fdm.nodes[0].levels.len();
        if let Some(l) = global_bound_violation(&r.fdm) {
            failures.push(format!(
                "case {}: FDM candidate bound exceeded at level {l}",
                c.id
            ));
        }

        let global_min = r.gfm.global_min_count;
        for e in &r.gfm.result {
            let truth = support(&c.whole, &e.itemset).unwrap().count;
            let sound = truth >= global_min
                && if e.exact {
                    e.count == truth
                } else {
                    e.count <= truth
                };
            if !e.exact {
                inferred += 1;
            }
            if !sound {
                failures.push(format!("case {}: unsound GFM entry {}", c.id, e.itemset));
            }
        }
        if r.gfm.passes as usize > c.k {
            failures.push(format!("case {}: GFM used more than k passes", c.id));
        }

        for t in [&r.fdm, &r.gfm] {
            let report = replay_check(t).unwrap();
            if !report.matches {
                failures.push(format!(
                    "case {}: replay diverged at {:?}",
                    c.id, report.divergence
                ));
            }
        }
    }
    // the audit must also notice tampering
    let mut tampered = runs[1].fdm.clone();
    tampered
        .meter
        .rows
        .iter_mut()
        .for_each(|row| row.messages += 1);
    tampered.rounds += 1;
    if compare_traces(&runs[1].fdm, &tampered).map_or(true, |rep| rep.matches) {
        failures.push("a tampered trace passed replay comparison".into());
    }
    let detail = format!(
        "{probes} support probes, {bound_checks} level bound checks, {inferred} inferred itemsets, {} replays, {:.1} s",
        2 * runs.len(),
        start.elapsed().as_secs_f64()
    );
    verdict("property suite", &failures, detail)
}

struct BenchRun {
    s: f64,
    m: usize,
    fdm: RunTrace,
    gfm: RunTrace,
    report: FactorReport<f64>,
}

const BENCH_K: usize = 5;

fn benchmark() -> (Vec<BenchRun>, Duration) {
    let start = Instant::now();
    let params = GenParams {
        num_transactions: 100_000,
        universe_size: 1_000,
        avg_transaction_size: 20.0,
        seed: 1,
        ..GenParams::default()
    };
    let db = generate(&params).unwrap();
    let mut runs = Vec::new();
    for m in [4, 8] {
        let parts = partition(&db, &PartitionSpec::uniform(m, 3)).unwrap();
        for s in [0.01, 0.02] {
            let st = SupportThreshold::new(s).unwrap();
            let fdm = simnet::run(Protocol::Fdm, &parts, &st, BENCH_K).unwrap();
            let gfm = simnet::run(Protocol::Gfm, &parts, &st, BENCH_K).unwrap();
            let report =
                estimate_factors(&fdm, &gfm, &LogPParams::new(2.0, 1.0, 1.0, m).unwrap()).unwrap();
            runs.push(BenchRun {
                s,
                m,
                fdm,
                gfm,
                report,
            });
        }
    }
    (runs, start.elapsed())
}

fn pass_counts(runs: &[BenchRun], elapsed: Duration) -> Verdict {
    let mut failures = Vec::new();
    let mut shown = Vec::new();
    for r in runs {
        let (f, g) = (r.fdm.passes as usize, r.gfm.passes as usize);
        shown.push(format!("s={} M={}: FDM {f}, GFM {g}", r.s, r.m));
        if f != BENCH_K {
            failures.push(format!(
                "s={} M={}: FDM used {f} passes, expected k = {BENCH_K}",
                r.s, r.m
            ));
        }
        if g > 2.min(BENCH_K) {
            failures.push(format!("s={} M={}: GFM used {g} passes", r.s, r.m));
        }
        if r.fdm.frequent_itemsets() != r.gfm.frequent_itemsets() {
            failures.push(format!("s={} M={}: FDM and GFM disagree", r.s, r.m));
        }
    }
    if elapsed >= Duration::from_secs(300) {
        failures.push(format!("took {:.1} s", elapsed.as_secs_f64()));
    }
    let detail = format!(
        "D=100000 n=1000 T=20 k={BENCH_K}; {}; {:.1} s (limit 300 s)",
        shown.join("; "),
        elapsed.as_secs_f64()
    );
    verdict("pass counts", &failures, detail)
}

fn cost_model(runs: &[BenchRun]) -> Verdict {
    let mut failures = Vec::new();
    let q = Q::from_integer;
    let p2 = LogPParams::new(q(2), q(1), q(1), 2).unwrap();
    if c_fdm(&p2, &[vec![3, 0]], 1).unwrap() != q(32) {
        failures.push("FDM vector != 32".into());
    }
    if c_gfm(&p2, &[2, 0], &[], 3, 3).unwrap() != q(28) {
        failures.push("GFM vector != 28".into());
    }
    if work_bound::<Q>(&[3, 3, 3], &[3, 3, 1]).unwrap() != Q::new(37, 3) {
        failures.push("work bound vector != 37/3".into());
    }

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let grid = [Q::new(0, 1), Q::new(1, 2), q(1), q(2), q(3)];
    let mut sweeps = 0;
    for _ in 0..50 {
        let p = rng.random_range(1..=6usize);
        let k = rng.random_range(1..=5usize);
        let gc: Vec<Vec<u64>> = (0..k)
            .map(|_| (0..p).map(|_| rng.random_range(0..100)).collect())
            .collect();
        let sf: Vec<Vec<u64>> = gc[..k - 1].iter().rev().cloned().collect();
        for &l in &grid {
            for &o in &grid {
                for &g in &grid {
                    let base = LogPParams::new(l, o, g, p).unwrap();
                    let fdm = c_fdm(&base, &gc, k).unwrap();
                    let gfm = c_gfm(&base, &gc[k - 1], &sf, k, 1).unwrap();
                    if fdm != gfm {
                        failures.push(format!("identity broken for P={p} k={k}"));
                    }
                    let step = Q::new(1, 2);
                    for bumped in [
                        LogPParams {
                            latency: l + step,
                            ..base
                        },
                        LogPParams {
                            overhead: o + step,
                            ..base
                        },
                        LogPParams {
                            gap: g + step,
                            ..base
                        },
                    ] {
                        sweeps += 1;
                        if c_fdm(&bumped, &gc, k).unwrap() < fdm
                            || c_gfm(&bumped, &gc[k - 1], &sf, k, 1).unwrap() < gfm
                        {
                            failures.push("cost decreased when a LogP parameter grew".into());
                        }
                    }
                }
            }
        }
    }

    let mut gains = Vec::new();
    for r in runs {
        let c = &r.report.costs;
        gains.push(format!(
            "s={} M={}: totals {:.0} vs {:.0}, gain {:.3}",
            r.s, r.m, c.fdm_total, c.gfm_total, r.report.gain
        ));
        if c.gfm_total.partial_cmp(&c.fdm_total) != Some(std::cmp::Ordering::Less) {
            failures.push(format!(
                "s={} M={}: GFM total not below FDM total",
                r.s, r.m
            ));
        }
        if r.report.gain.is_nan() || r.report.gain <= 0.0 {
            failures.push(format!(
                "s={} M={}: gain {} not positive",
                r.s, r.m, r.report.gain
            ));
        }
    }
    let detail = format!(
        "vectors 32/28/37/3 exact, {sweeps} monotonicity sweeps; {}",
        gains.join("; ")
    );
    verdict("cost model", &failures, detail)
}

fn factor_sanity(runs: &[BenchRun]) -> Verdict {
    let mut failures = Vec::new();
    let mut means = Vec::new();
    for r in runs {
        for f in &r.report.levels {
            if !(0.0..=1.0).contains(&f.p_l) || !(0.0..=1.0).contains(&f.p_items) {
                failures.push(format!(
                    "s={} M={} level {}: factor out of range",
                    r.s, r.m, f.level
                ));
            }
        }
        means.push(format!(
            "s={} M={}: mean P_l {:.3}, l_c {:?}",
            r.s, r.m, r.report.mean_p_l, r.report.critical_level
        ));
    }
    verdict(
        "factor sanity",
        &failures,
        format!("P_l, P_Il in [0,1]; {}", means.join("; ")),
    )
}

fn determinism() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    let bin = env!("CARGO_BIN_EXE_itemset-grid");
    let run = |args: &[&str]| {
        Command::new(bin)
            .current_dir(dir.path())
            .args(args)
            .output()
            .expect("binary runs")
    };
    let mut failures = Vec::new();
    let gen = run(&[
        "gen",
        "--out",
        "d.txt",
        "--transactions",
        "5000",
        "--items",
        "200",
        "--avg-size",
        "10",
        "--patterns",
        "50",
        "--seed",
        "11",
    ]);
    if !gen.status.success() {
        failures.push("gen failed".to_string());
    }
    let compare = |out: &str| {
        run(&[
            "compare",
            "--input",
            "d.txt",
            "--support",
            "0.02,0.05",
            "--k",
            "4",
            "--nodes",
            "4",
            "--ratios",
            "1:5",
            "--seed",
            "2",
            "--report-out",
            out,
        ])
    };
    for out in ["a.json", "b.json"] {
        let o = compare(out);
        if !o.status.success() {
            failures.push(format!("compare exited with {:?}", o.status.code()));
        }
    }
    let read = |name: &str| std::fs::read(Path::new(dir.path()).join(name)).unwrap_or_default();
    let (a, b) = (read("a.json"), read("b.json"));
    if a.is_empty() || a != b {
        failures.push("reports differ".into());
    }
    verdict(
        "determinism",
        &failures,
        format!("two compare runs, {} byte reports identical", a.len()),
    )
}

fn main() {
    let cases = corpus();
    let (oracle, runs) = oracle_equivalence(&cases);
    let properties = property_suite(&cases, &runs);
    let (bench, elapsed) = benchmark();
    let verdicts = [
        oracle,
        properties,
        pass_counts(&bench, elapsed),
        cost_model(&bench),
        factor_sanity(&bench),
        determinism(),
    ];
    for v in &verdicts {
        println!(
            "{} {}: {}",
            if v.pass { "PASS" } else { "FAIL" },
            v.name,
            v.detail
        );
    }
    let failed = verdicts.iter().filter(|v| !v.pass).count();
    println!(
        "acceptance: {} passed, {failed} failed",
        verdicts.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
