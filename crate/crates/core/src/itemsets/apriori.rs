use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::{
    count_supports, distinct_items, FrequentLevel, Itemset, LevelStats, SupportCount,
    SupportThreshold, TransactionDb,
};

/// Joins pairs of frequent `(l-1)`-itemsets that share their first `l-2`
/// items and keeps a joined `l`-itemset only if every `(l-1)`-subset is in
/// `prev`. Output is lexicographically sorted and duplicate-free.
pub fn apriori_gen(prev: &FrequentLevel) -> Vec<Itemset> {
    let sets: Vec<&Itemset> = prev.itemsets().collect();
    let width = prev.level;
    if width == 0 {
        return Vec::new();
    }
    let prefix = width - 1;
    let mut out = Vec::new();
    for (i, a) in sets.iter().enumerate() {
        for b in &sets[i + 1..] {
            if a.items()[..prefix] != b.items()[..prefix] {
                break;
            }
            let mut items = a.items().to_vec();
            items.push(b.items()[prefix]);
            let cand = Itemset(items);
            if all_subsets_frequent(&cand, prev) {
                out.push(cand);
            }
        }
    }
    out
}

fn all_subsets_frequent(cand: &Itemset, prev: &FrequentLevel) -> bool {
    // the two subsets dropping one of the last two items are the join parents
    let n = cand.len();
    (0..n.saturating_sub(2)).all(|skip| {
        let sub: Vec<_> = cand
            .items()
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != skip)
            .map(|(_, &x)| x)
            .collect();
        prev.contains(&Itemset(sub))
    })
}

/// Output of one Apriori run.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AprioriRun {
    /// One entry per counted level, starting at level 1. The last entry may
    /// be empty.
    pub levels: Vec<FrequentLevel>,
    pub stats: Vec<LevelStats>,
    pub min_count: u64,
}

impl AprioriRun {
    pub fn frequent(&self) -> impl Iterator<Item = &SupportCount> {
        self.levels.iter().flat_map(|l| l.entries.iter())
    }

    pub fn level(&self, l: usize) -> Option<&FrequentLevel> {
        self.levels.get(l.checked_sub(1)?)
    }
}

pub fn mine_apriori(db: &TransactionDb, s: &SupportThreshold, k: usize) -> AprioriRun {
    mine_apriori_min_count(db, s.absolute(db.count()), k)
}

/// Apriori with an explicit minimum count instead of a fractional threshold.
pub fn mine_apriori_min_count(db: &TransactionDb, min_count: u64, k: usize) -> AprioriRun {
    let mut levels: Vec<FrequentLevel> = Vec::new();
    let mut stats = Vec::new();
    let n = db.universe_size();

    let mut level = 1;
    while level <= k {
        let candidates: Vec<Itemset> = match levels.last() {
            None => (0..n).map(Itemset::singleton).collect(),
            Some(prev) => apriori_gen(prev),
        };
        if candidates.is_empty() {
            break;
        }
        let counts = count_supports(db, &candidates);
        let entries: Vec<SupportCount> = candidates
            .iter()
            .zip(&counts)
            .filter(|&(_, &c)| c >= min_count)
            .map(|(x, &c)| SupportCount::new(x.clone(), c))
            .collect();
        let found = entries.len() as u64;
        stats.push(LevelStats {
            level,
            counted: candidates.len() as u64,
            candidates: candidates.len() as u64,
            successes: found,
            failures: candidates.len() as u64 - found,
            locally_frequent: found,
            candidate_items: distinct_items(&candidates),
            items_involved: distinct_items(entries.iter().map(|e| &e.itemset)),
            remote_work: 0,
        });
        // candidates are already sorted and unique
        levels.push(FrequentLevel { level, entries });
        if found == 0 {
            break;
        }
        level += 1;
    }
    AprioriRun {
        levels,
        stats,
        min_count,
    }
}

/// Frequent itemsets with no frequent proper superset among `levels`.
///
/// Relies on downward closure: a set with any frequent proper superset has
/// one exactly one item larger.
pub fn maximal(levels: &[FrequentLevel]) -> Vec<SupportCount> {
    let mut covered: HashSet<Itemset> = HashSet::new();
    for lvl in levels {
        for x in lvl.itemsets() {
            covered.extend(x.immediate_subsets());
        }
    }
    let mut out: Vec<SupportCount> = levels
        .iter()
        .flat_map(|l| l.entries.iter())
        .filter(|e| !covered.contains(&e.itemset))
        .cloned()
        .collect();
    out.sort_by(|a, b| (a.itemset.len(), &a.itemset).cmp(&(b.itemset.len(), &b.itemset)));
    out
}
