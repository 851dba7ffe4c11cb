//! LogP communication costs, per-node work bounds, and factors estimated
//! from a pair of FDM and GFM traces.
//!
//! Everything is generic over [`Scalar`]: use `f64` for reports and
//! `Ratio<i64>` when results must be exact.
//!
//! Work-bound arrays start at level 0, which stands for the empty itemset:
//! `I_0 = n` and `GS_0 = 1`. Entry `l` then bounds the number of size
//! `l + 1` candidates, so a run that executed levels `1..=L` contributes
//! `L` terms.

use std::fmt::Debug;

use num_traits::{FromPrimitive, Num, ToPrimitive};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::itemsets::LevelStats;
use crate::simnet::{NodeTrace, Protocol, RunTrace};

pub trait Scalar: Num + Copy + PartialOrd + FromPrimitive + ToPrimitive + Debug {}

impl<T: Num + Copy + PartialOrd + FromPrimitive + ToPrimitive + Debug> Scalar for T {}

fn lift<T: Scalar>(v: u64) -> T {
    T::from_u64(v).expect("count fits the scalar type")
}

fn ratio_or_one<T: Scalar>(num: u64, den: u64) -> T {
    if den == 0 {
        return T::one();
    }
    let r = lift::<T>(num) / lift(den);
    if r > T::one() {
        T::one()
    } else {
        r
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogPParams<T> {
    /// L: latency upper bound.
    pub latency: T,
    /// o: per-message overhead.
    pub overhead: T,
    /// g: gap per itemset unit.
    pub gap: T,
    /// P: number of nodes.
    pub procs: usize,
}

impl<T: Scalar> LogPParams<T> {
    pub fn new(latency: T, overhead: T, gap: T, procs: usize) -> Result<Self> {
        let p = LogPParams {
            latency,
            overhead,
            gap,
            procs,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let zero = T::zero();
        if self.latency < zero || self.overhead < zero || self.gap < zero {
            return Err(Error::InvalidInput(
                "LogP parameters must be non-negative".into(),
            ));
        }
        if self.procs == 0 {
            return Err(Error::InvalidInput(
                "LogP needs at least one processor".into(),
            ));
        }
        Ok(())
    }

    pub fn with_procs(mut self, procs: usize) -> Self {
        self.procs = procs;
        self
    }

    /// `2P Σ_{i=1}^{P−1} (u_i g + L² + o)` over the first `P − 1` entries.
    fn exchange(&self, units: &[u64]) -> Result<T> {
        let m = self.procs - 1;
        if units.len() < m {
            return Err(Error::Dimension(format!(
                "{} node entries given, {m} needed",
                units.len()
            )));
        }
        let fixed = self.latency * self.latency + self.overhead;
        let inner = units[..m]
            .iter()
            .fold(T::zero(), |acc, &u| acc + lift::<T>(u) * self.gap + fixed);
        Ok(lift::<T>(2 * self.procs as u64) * inner)
    }
}

/// FDM communication cost. `gc[l][i]` is the candidate count of node `i` at
/// level `l + 1`; exactly `k` levels are required.
pub fn c_fdm<T: Scalar>(params: &LogPParams<T>, gc: &[Vec<u64>], k: usize) -> Result<T> {
    params.validate()?;
    if gc.len() != k {
        return Err(Error::Dimension(format!(
            "{} levels given for k = {k}",
            gc.len()
        )));
    }
    gc.iter()
        .try_fold(T::zero(), |acc, level| Ok(acc + params.exchange(level)?))
}

/// GFM communication cost: the mandatory first exchange of `lf_k`, plus one
/// exchange per entry of `sf`, which must hold the levels `k − 1` down to
/// `x`, i.e. `k − x` rounds.
pub fn c_gfm<T: Scalar>(
    params: &LogPParams<T>,
    lf_k: &[u64],
    sf: &[Vec<u64>],
    k: usize,
    x: usize,
) -> Result<T> {
    params.validate()?;
    if x > k || sf.len() != k - x {
        return Err(Error::Dimension(format!(
            "{} follow-up rounds given for k = {k}, x = {x}",
            sf.len()
        )));
    }
    sf.iter().try_fold(params.exchange(lf_k)?, |acc, round| {
        Ok(acc + params.exchange(round)?)
    })
}

/// `Σ_l (I_l − l)/(l + 1) · GS_l` with `l` running over the array indices.
pub fn work_bound<T: Scalar>(items: &[u64], gs: &[u64]) -> Result<T> {
    if items.len() != gs.len() {
        return Err(Error::Dimension(format!(
            "{} item counts vs {} success counts",
            items.len(),
            gs.len()
        )));
    }
    Ok(items
        .iter()
        .zip(gs)
        .enumerate()
        .fold(T::zero(), |acc, (l, (&i, &g))| {
            let l_ = lift::<T>(l as u64);
            acc + (lift::<T>(i) - l_) / (l_ + T::one()) * lift(g)
        }))
}

/// `Σ_l (P_Il · I_l − l)/(l + 1) · P_l · LS_l`.
pub fn work_bound_factored<T: Scalar>(
    p_items: &[T],
    items: &[u64],
    p_l: &[T],
    ls: &[u64],
) -> Result<T> {
    let n = items.len();
    if p_items.len() != n || p_l.len() != n || ls.len() != n {
        return Err(Error::Dimension(
            "factored work bound arrays differ in length".into(),
        ));
    }
    Ok((0..n).fold(T::zero(), |acc, l| {
        let l_ = lift::<T>(l as u64);
        acc + (p_items[l] * lift(items[l]) - l_) / (l_ + T::one()) * p_l[l] * lift(ls[l])
    }))
}

/// Level-0-prefixed `(I, S)` arrays from per-level stats, where `S` is picked
/// by `successes` (GS for FDM, LS for local mining).
pub fn work_arrays(
    universe_size: u32,
    stats: &[LevelStats],
    successes: impl Fn(&LevelStats) -> u64,
) -> (Vec<u64>, Vec<u64>) {
    if stats.is_empty() {
        return (Vec::new(), Vec::new());
    }
    let mut items = vec![u64::from(universe_size)];
    let mut s = vec![1];
    for st in &stats[..stats.len() - 1] {
        items.push(st.items_involved);
        s.push(successes(st));
    }
    (items, s)
}

/// Cost totals for a pair of comparable runs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CostBreakdown<T> {
    pub fdm_work: T,
    pub fdm_remote: u64,
    pub c_fdm: T,
    /// Work bound + remote counting + communication.
    pub fdm_total: T,
    pub gfm_work: T,
    pub gfm_remote: u64,
    pub c_gfm: T,
    /// Same three terms for GFM.
    pub gfm_total: T,
    /// Level index where GFM's top-down passes stopped.
    pub x: usize,
    /// The `k` used in the GFM cost: largest itemset size first sent.
    pub gfm_top: usize,
}

fn check_pair(fdm: &RunTrace, gfm: &RunTrace) -> Result<()> {
    if fdm.protocol != Protocol::Fdm || gfm.protocol != Protocol::Gfm {
        return Err(Error::Config(
            "expected one FDM trace and one GFM trace".into(),
        ));
    }
    let (a, b) = (&fdm.config, &gfm.config);
    if a.support != b.support || a.k != b.k || a.input != b.input {
        return Err(Error::Config(
            "traces come from different inputs or thresholds".into(),
        ));
    }
    if fdm.nodes.len() != gfm.nodes.len() {
        return Err(Error::Config("traces have different node counts".into()));
    }
    Ok(())
}

/// `gc[l][i]` from an FDM trace.
pub fn fdm_payloads(trace: &RunTrace) -> Vec<Vec<u64>> {
    let levels = trace.executed_levels();
    (0..levels)
        .map(|l| {
            trace
                .nodes
                .iter()
                .map(|n| n.levels.get(l).map_or(0, |s| s.candidates))
                .collect()
        })
        .collect()
}

/// `(lf_k, sf)` from a GFM trace: the first request per node, then one entry
/// per follow-up pass.
pub fn gfm_payloads(trace: &RunTrace) -> (Vec<u64>, Vec<Vec<u64>>) {
    let sent = |n: &NodeTrace, pass: usize| n.passes.get(pass).map_or(0, |p| p.sent);
    let passes = trace.passes as usize;
    let first = trace.nodes.iter().map(|n| sent(n, 0)).collect();
    let rest = (1..passes)
        .map(|p| trace.nodes.iter().map(|n| sent(n, p)).collect())
        .collect();
    (first, rest)
}

/// Evaluates both overall costs. `params.procs` is replaced by the node
/// count of the traces.
pub fn overall_cost<T: Scalar>(
    fdm: &RunTrace,
    gfm: &RunTrace,
    params: &LogPParams<T>,
) -> Result<CostBreakdown<T>> {
    check_pair(fdm, gfm)?;
    let params = params.with_procs(fdm.nodes.len());
    let n = fdm.universe_size;

    let mut fdm_work = T::zero();
    let mut fdm_remote = 0;
    for node in &fdm.nodes {
        let (items, gs) = work_arrays(n, &node.levels, |s| s.successes);
        fdm_work = fdm_work + work_bound(&items, &gs)?;
        fdm_remote += node.levels.iter().map(|s| s.remote_work).sum::<u64>();
    }
    let gc = fdm_payloads(fdm);
    let c_fdm = c_fdm(&params, &gc, gc.len())?;

    let mut gfm_work = T::zero();
    let mut gfm_remote = 0;
    for node in &gfm.nodes {
        let (items, ls) = work_arrays(n, &node.levels, |s| s.locally_frequent);
        gfm_work = gfm_work + work_bound(&items, &ls)?;
        gfm_remote += node.passes.iter().map(|p| p.remote_work).sum::<u64>();
    }
    let (lf_k, sf) = gfm_payloads(gfm);
    let top = gfm
        .nodes
        .iter()
        .map(|n| n.top_level)
        .max()
        .unwrap_or(0)
        .max(1);
    // sf has one entry per follow-up pass; the passes walk down from top - 1
    let x = top.saturating_sub(sf.len()).max(1);
    let k = x + sf.len();
    let c_gfm = c_gfm(&params, &lf_k, &sf, k, x)?;

    Ok(CostBreakdown {
        fdm_total: fdm_work + lift(fdm_remote) + c_fdm,
        fdm_work,
        fdm_remote,
        c_fdm,
        gfm_total: gfm_work + lift(gfm_remote) + c_gfm,
        gfm_work,
        gfm_remote,
        c_gfm,
        x,
        gfm_top: k,
    })
}

/// Factors and rates for one level.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelFactors<T> {
    pub level: usize,
    /// Σ GS / Σ LS, clamped to [0, 1]; 1 when nothing was locally frequent.
    pub p_l: T,
    /// Σ I (FDM) / Σ I (GFM), clamped likewise.
    pub p_items: T,
    /// FDM success rate Σ GS / Σ GC (0 with no candidates).
    pub fdm_success_rate: T,
    /// Fraction of locally counted candidates that were locally frequent.
    pub local_success_rate: T,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FactorReport<T> {
    pub levels: Vec<LevelFactors<T>>,
    pub mean_p_l: T,
    /// First level whose FDM success rate is under half the previous one.
    pub critical_level: Option<usize>,
    pub x: usize,
    pub fdm_passes: u32,
    pub gfm_passes: u32,
    pub costs: CostBreakdown<T>,
    /// `1 − C_GFM / C_FDM`, 0 when FDM communicates nothing.
    pub gain: T,
}

/// First level (1-based) whose rate `successes/candidates` is below half of
/// the previous level's rate.
pub fn critical_level(successes: &[u64], candidates: &[u64]) -> Option<usize> {
    let rates: Vec<f64> = successes
        .iter()
        .zip(candidates)
        .map(|(&s, &c)| if c == 0 { 0.0 } else { s as f64 / c as f64 })
        .collect();
    rates
        .windows(2)
        .position(|w| w[1] < w[0] / 2.0)
        .map(|i| i + 2)
}

pub fn estimate_factors<T: Scalar>(
    fdm: &RunTrace,
    gfm: &RunTrace,
    params: &LogPParams<T>,
) -> Result<FactorReport<T>> {
    let costs = overall_cost(fdm, gfm, params)?;
    let depth = fdm.executed_levels().max(gfm.executed_levels());
    let sum = |t: &RunTrace, l: usize, f: &dyn Fn(&LevelStats) -> u64| -> u64 {
        t.nodes.iter().filter_map(|n| n.levels.get(l)).map(f).sum()
    };
    let mut levels = Vec::with_capacity(depth);
    let (mut gs_all, mut gc_all) = (Vec::new(), Vec::new());
    for l in 0..depth {
        let gs = sum(fdm, l, &|s| s.successes);
        let gc = sum(fdm, l, &|s| s.candidates);
        let ls = sum(gfm, l, &|s| s.locally_frequent);
        let lc = sum(gfm, l, &|s| s.counted);
        let rate = |a: u64, b: u64| {
            if b == 0 {
                T::zero()
            } else {
                lift::<T>(a) / lift(b)
            }
        };
        levels.push(LevelFactors {
            level: l + 1,
            p_l: ratio_or_one(gs, ls),
            p_items: ratio_or_one(
                sum(fdm, l, &|s| s.items_involved),
                sum(gfm, l, &|s| s.items_involved),
            ),
            fdm_success_rate: rate(gs, gc),
            local_success_rate: rate(ls, lc),
        });
        gs_all.push(gs);
        gc_all.push(gc);
    }
    let mean_p_l = if levels.is_empty() {
        T::one()
    } else {
        levels.iter().fold(T::zero(), |a, f| a + f.p_l) / lift(levels.len() as u64)
    };
    let gain = if costs.c_fdm == T::zero() {
        T::zero()
    } else {
        T::one() - costs.c_gfm / costs.c_fdm
    };
    Ok(FactorReport {
        levels,
        mean_p_l,
        critical_level: critical_level(&gs_all, &gc_all),
        x: costs.x,
        fdm_passes: fdm.passes,
        gfm_passes: gfm.passes,
        gain,
        costs,
    })
}
