use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use super::{by_size_then_lex, NodeSetup, ResolvedItemset};
use crate::itemsets::{
    count_supports, maximal, mine_apriori_min_count, Itemset, LevelStats, SupportCount,
};
use crate::simnet::{Message, MessageKind, NodeMachine, Outbox, Payload};

/// Per-node tallies for one global pass of the top-down phase.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PassStats {
    pub pass: u32,
    /// Itemsets this node sent for remote counting (LF_k in the first pass,
    /// SF afterwards).
    pub sent: u64,
    /// Remote-originated itemsets this node counted.
    pub remote_work: u64,
    /// Sent itemsets whose exact global count met the threshold.
    pub passed: u64,
    pub failed: u64,
    /// Subsets of failed itemsets admitted from lower bounds alone.
    pub inferred: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Resolution {
    Exact(u64),
    Inferred,
}

/// One GFM node.
///
/// Round 0 runs the local phase and sends the first request. A request sent
/// in round `r` is answered in `r + 1` and resolved in `r + 2`, which is also
/// when the next request goes out.
pub struct GfmNode<'a> {
    setup: NodeSetup<'a>,
    started: bool,
    local_stats: Vec<LevelStats>,
    local_counts: HashMap<Itemset, u64>,
    /// LL_i: itemsets awaiting global resolution.
    pending: Vec<Itemset>,
    resolve_at: Option<u32>,
    /// Everything this node has had counted, with per-node counts.
    counted: Vec<(Itemset, Vec<u64>)>,
    /// L_i.
    frequent: HashMap<Itemset, Resolution>,
    infrequent: HashSet<Itemset>,
    pass_stats: Vec<PassStats>,
    pending_history: Vec<Vec<Itemset>>,
    passes: u32,
}

impl<'a> GfmNode<'a> {
    pub fn new(setup: NodeSetup<'a>) -> Self {
        GfmNode {
            setup,
            started: false,
            local_stats: Vec::new(),
            local_counts: HashMap::new(),
            pending: Vec::new(),
            resolve_at: None,
            counted: Vec::new(),
            frequent: HashMap::new(),
            infrequent: HashSet::new(),
            pass_stats: Vec::new(),
            pending_history: Vec::new(),
            passes: 0,
        }
    }

    /// Local Apriori up to size `k`, then LL_i := locally maximal itemsets.
    /// Emits nothing.
    pub fn local_phase(&mut self) {
        let s = self.setup;
        let run = mine_apriori_min_count(s.db, s.local_min, s.k);
        self.local_counts = run
            .frequent()
            .map(|e| (e.itemset.clone(), e.count))
            .collect();
        self.pending = maximal(&run.levels)
            .into_iter()
            .map(|e| e.itemset)
            .collect();
        self.pending.sort_by(by_size_then_lex);
        self.local_stats = run.stats;
        self.started = true;
    }

    pub fn local_stats(&self) -> &[LevelStats] {
        &self.local_stats
    }

    pub fn pass_stats(&self) -> &[PassStats] {
        &self.pass_stats
    }

    /// LL_i as sent in each pass.
    pub fn pending_history(&self) -> &[Vec<Itemset>] {
        &self.pending_history
    }

    pub fn pending(&self) -> &[Itemset] {
        &self.pending
    }

    pub fn local_count(&self, x: &Itemset) -> Option<u64> {
        self.local_counts.get(x).copied()
    }

    /// Size of the largest itemset in the first request.
    pub fn top_level(&self) -> usize {
        self.pending_history
            .first()
            .and_then(|p| p.iter().map(Itemset::len).max())
            .unwrap_or(0)
    }

    /// L_i with exact counts or lower bounds.
    pub fn resolved(&self) -> Vec<ResolvedItemset> {
        let mut out: Vec<ResolvedItemset> = self
            .frequent
            .iter()
            .map(|(x, r)| match *r {
                Resolution::Exact(c) => ResolvedItemset {
                    itemset: x.clone(),
                    count: c,
                    exact: true,
                },
                Resolution::Inferred => ResolvedItemset {
                    itemset: x.clone(),
                    count: self.lower_bound(x),
                    exact: false,
                },
            })
            .collect();
        out.sort_by(|a, b| by_size_then_lex(&a.itemset, &b.itemset));
        out
    }

    fn pass_entry(&mut self, pass: u32) -> &mut PassStats {
        while self.pass_stats.len() < pass as usize {
            let next = self.pass_stats.len() as u32 + 1;
            self.pass_stats.push(PassStats {
                pass: next,
                ..PassStats::default()
            });
        }
        &mut self.pass_stats[pass as usize - 1]
    }

    fn send_requests(&mut self, out: &mut Outbox) {
        debug_assert!(self
            .pending
            .iter()
            .all(|x| self.local_counts.contains_key(x)));
        self.passes += 1;
        let pass = self.passes;
        let sent = self.pending.len() as u64;
        self.pass_entry(pass).sent = sent;
        self.pending_history.push(self.pending.clone());
        out.broadcast(
            pass,
            MessageKind::CountRequest,
            &Payload::Itemsets(self.pending.clone()),
        );
        self.resolve_at = Some(out.round() + 2);
    }

    fn answer(&mut self, inbox: &[Message], out: &mut Outbox) {
        let requests: Vec<&Message> = inbox
            .iter()
            .filter(|m| m.kind == MessageKind::CountRequest)
            .collect();
        let Some(pass) = requests.first().map(|m| m.pass) else {
            return;
        };
        let mut wanted: Vec<Itemset> = requests
            .iter()
            .flat_map(|m| match &m.payload {
                Payload::Itemsets(v) => v.iter().cloned(),
                Payload::Counts(_) => unreachable!("requests carry itemsets"),
            })
            .collect();
        wanted.sort_unstable();
        wanted.dedup();
        let counts = count_supports(self.setup.db, &wanted);
        self.pass_entry(pass).remote_work += wanted.len() as u64;
        for m in requests {
            let Payload::Itemsets(asked) = &m.payload else {
                continue;
            };
            let reply = asked
                .iter()
                .map(|x| {
                    let i = wanted
                        .binary_search(x)
                        .expect("requested itemset was counted");
                    SupportCount::new(x.clone(), counts[i])
                })
                .collect();
            out.send(
                m.from,
                m.pass,
                MessageKind::CountResponse,
                Payload::Counts(reply),
            );
        }
    }

    /// One while-iteration: sum counts, admit winners (and by downward
    /// closure all their subsets), expand losers into immediate subsets, and
    /// admit any subset whose per-node lower bounds already reach the
    /// threshold. What is left becomes the next LL_i.
    fn resolve(&mut self, inbox: &[Message]) {
        let s = self.setup;
        let pending = std::mem::take(&mut self.pending);
        let mut per_node: Vec<Vec<u64>> = pending
            .iter()
            .map(|x| {
                let mut v = vec![0; s.num_nodes];
                v[s.id.0] = self.local_counts[x];
                v
            })
            .collect();
        for m in inbox
            .iter()
            .filter(|m| m.kind == MessageKind::CountResponse)
        {
            let Payload::Counts(counts) = &m.payload else {
                continue;
            };
            debug_assert_eq!(counts.len(), pending.len());
            for (slot, c) in per_node.iter_mut().zip(counts) {
                slot[m.from.0] = c.count;
            }
        }

        let mut failed = Vec::new();
        let (mut passed_n, mut inferred_n) = (0u64, 0u64);
        for (x, counts) in pending.iter().zip(per_node) {
            let total: u64 = counts.iter().sum();
            self.counted.push((x.clone(), counts));
            if total >= s.global_min {
                passed_n += 1;
                self.frequent.insert(x.clone(), Resolution::Exact(total));
                self.close_downward(x);
            } else {
                self.infrequent.insert(x.clone());
                failed.push(x.clone());
            }
        }

        let mut next: Vec<Itemset> = failed
            .iter()
            .filter(|x| x.len() > 1)
            .flat_map(Itemset::immediate_subsets)
            .filter(|y| !self.frequent.contains_key(y) && !self.infrequent.contains(y))
            .collect();
        next.sort_by(|a, b| by_size_then_lex(b, a));
        next.dedup();
        let mut remaining = Vec::new();
        // largest first, so an inferred set's closure can settle smaller ones
        for y in next {
            if self.frequent.contains_key(&y) {
                continue;
            }
            if self.lower_bound(&y) >= s.global_min {
                inferred_n += 1;
                self.frequent.insert(y.clone(), Resolution::Inferred);
                self.close_downward(&y);
            } else {
                remaining.push(y);
            }
        }
        remaining.sort_by(by_size_then_lex);

        let pass = self.passes;
        let entry = self.pass_entry(pass);
        entry.passed = passed_n;
        entry.failed = failed.len() as u64;
        entry.inferred = inferred_n;
        self.pending = remaining;
    }

    /// Marks every proper subset of `x` as globally frequent.
    fn close_downward(&mut self, x: &Itemset) {
        let mut stack = vec![x.clone()];
        while let Some(z) = stack.pop() {
            if z.len() <= 1 {
                continue;
            }
            for y in z.immediate_subsets() {
                if !self.frequent.contains_key(&y) {
                    debug_assert!(!self.infrequent.contains(&y));
                    self.frequent.insert(y.clone(), Resolution::Inferred);
                    stack.push(y);
                }
            }
        }
    }

    /// Sum over nodes of a per-node lower bound on the count of `y`: the
    /// exact local count here, and elsewhere the largest count of any
    /// already-counted superset at that node. Counts of several supersets at
    /// one node are never added, since one transaction can hold them all.
    fn lower_bound(&self, y: &Itemset) -> u64 {
        let s = self.setup;
        let mut best = vec![0u64; s.num_nodes];
        for (z, counts) in &self.counted {
            if z.len() >= y.len() && y.is_subset_of(z.items()) {
                for (b, &c) in best.iter_mut().zip(counts) {
                    *b = (*b).max(c);
                }
            }
        }
        best[s.id.0] = self.local_counts.get(y).copied().unwrap_or(best[s.id.0]);
        best.iter().sum()
    }
}

impl NodeMachine for GfmNode<'_> {
    fn on_round(&mut self, inbox: Vec<Message>, out: &mut Outbox) {
        if !self.started {
            self.local_phase();
            if !self.pending.is_empty() {
                self.send_requests(out);
            }
        }
        self.answer(&inbox, out);
        if self.resolve_at == Some(out.round()) {
            self.resolve_at = None;
            self.resolve(&inbox);
            if !self.pending.is_empty() {
                self.send_requests(out);
            }
        }
    }

    fn is_quiescent(&self) -> bool {
        self.started && self.resolve_at.is_none() && self.pending.is_empty()
    }

    fn passes(&self) -> u32 {
        self.passes
    }
}

/// Union of every node's L_i. Where any node counted an itemset exactly the
/// exact count is kept; otherwise the best lower bound.
pub fn gfm_finalize(nodes: &[GfmNode<'_>]) -> Vec<ResolvedItemset> {
    let mut all: BTreeMap<(usize, Itemset), (u64, bool)> = BTreeMap::new();
    for node in nodes {
        for r in node.resolved() {
            let slot = all
                .entry((r.itemset.len(), r.itemset))
                .or_insert((0, false));
            match (slot.1, r.exact) {
                (true, _) => {}
                (false, true) => *slot = (r.count, true),
                (false, false) => slot.0 = slot.0.max(r.count),
            }
        }
    }
    all.into_iter()
        .map(|((_, itemset), (count, exact))| ResolvedItemset {
            itemset,
            count,
            exact,
        })
        .collect()
}
