//! Itemset and transaction types, support counting, the sequential Apriori
//! engine, maximal-itemset extraction and a brute-force oracle.

mod apriori;
mod counting;
mod oracle;
mod threshold;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use apriori::{apriori_gen, maximal, mine_apriori, mine_apriori_min_count, AprioriRun};
pub use counting::{count_supports, support};
pub use oracle::{brute_force_frequent, BRUTE_FORCE_MAX_UNIVERSE};
pub use threshold::SupportThreshold;

/// Index of an item in the item universe.
pub type Item = u32;

/// A strictly ascending, duplicate-free set of items.
///
/// Ordering is lexicographic over the item sequence, which is also the
/// order `apriori_gen` emits candidates in.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<Item>", into = "Vec<Item>")]
pub struct Itemset(Vec<Item>);

impl Itemset {
    pub fn new(items: Vec<Item>) -> Result<Self> {
        if let Some(w) = items.windows(2).find(|w| w[0] >= w[1]) {
            return Err(Error::InvalidInput(format!(
                "itemset items must be strictly ascending, found {} before {}",
                w[0], w[1]
            )));
        }
        Ok(Itemset(items))
    }

    /// Sorts and deduplicates arbitrary input.
    pub fn from_unsorted(mut items: Vec<Item>) -> Self {
        items.sort_unstable();
        items.dedup();
        Itemset(items)
    }

    pub fn empty() -> Self {
        Itemset(Vec::new())
    }

    pub fn singleton(item: Item) -> Self {
        Itemset(vec![item])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn items(&self) -> &[Item] {
        &self.0
    }

    pub fn max_item(&self) -> Option<Item> {
        self.0.last().copied()
    }

    /// Merge-style containment test over two ascending sequences.
    pub fn is_subset_of(&self, other: &[Item]) -> bool {
        is_sorted_subset(&self.0, other)
    }

    /// All subsets with exactly one item removed, in lexicographic order.
    pub fn immediate_subsets(&self) -> Vec<Itemset> {
        let mut out: Vec<Itemset> = (0..self.0.len())
            .map(|skip| {
                Itemset(
                    self.0
                        .iter()
                        .enumerate()
                        .filter(|&(i, _)| i != skip)
                        .map(|(_, &x)| x)
                        .collect(),
                )
            })
            .collect();
        out.sort_unstable();
        out
    }
}

impl TryFrom<Vec<Item>> for Itemset {
    type Error = Error;

    fn try_from(items: Vec<Item>) -> Result<Self> {
        Itemset::new(items)
    }
}

impl From<Itemset> for Vec<Item> {
    fn from(set: Itemset) -> Self {
        set.0
    }
}

impl fmt::Display for Itemset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, item) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{item}")?;
        }
        f.write_str("}")
    }
}

/// A transaction has the same shape and invariants as an itemset.
pub type Transaction = Itemset;

pub(crate) fn is_sorted_subset(needle: &[Item], haystack: &[Item]) -> bool {
    if needle.len() > haystack.len() {
        return false;
    }
    let mut rest = haystack.iter();
    'outer: for &x in needle {
        for &y in rest.by_ref() {
            if y == x {
                continue 'outer;
            }
            if y > x {
                return false;
            }
        }
        return false;
    }
    true
}

/// An ordered collection of transactions over a universe of `universe_size`
/// items.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransactionDb {
    universe_size: u32,
    transactions: Vec<Transaction>,
}

impl TransactionDb {
    pub fn new(universe_size: u32, transactions: Vec<Transaction>) -> Result<Self> {
        for (i, t) in transactions.iter().enumerate() {
            if let Some(max) = t.max_item() {
                if max >= universe_size {
                    return Err(Error::InvalidInput(format!(
                        "transaction {i} contains item {max} outside universe of {universe_size} items"
                    )));
                }
            }
        }
        Ok(TransactionDb {
            universe_size,
            transactions,
        })
    }

    /// Convenience constructor for literal data; items are sorted and deduplicated.
    pub fn from_rows<R, I>(universe_size: u32, rows: R) -> Result<Self>
    where
        R: IntoIterator<Item = I>,
        I: IntoIterator<Item = Item>,
    {
        let transactions = rows
            .into_iter()
            .map(|r| Itemset::from_unsorted(r.into_iter().collect()))
            .collect();
        TransactionDb::new(universe_size, transactions)
    }

    pub fn empty(universe_size: u32) -> Self {
        TransactionDb {
            universe_size,
            transactions: Vec::new(),
        }
    }

    pub fn universe_size(&self) -> u32 {
        self.universe_size
    }

    pub fn count(&self) -> usize {
        self.transactions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.transactions.is_empty()
    }

    pub fn transactions(&self) -> &[Transaction] {
        &self.transactions
    }

    pub fn iter(&self) -> impl Iterator<Item = &Transaction> {
        self.transactions.iter()
    }

    pub fn into_transactions(self) -> Vec<Transaction> {
        self.transactions
    }

    /// Concatenates partitions back into one database.
    pub fn concat<'a>(parts: impl IntoIterator<Item = &'a TransactionDb>) -> Result<Self> {
        let mut universe = None;
        let mut transactions = Vec::new();
        for p in parts {
            match universe {
                None => universe = Some(p.universe_size),
                Some(n) if n != p.universe_size => {
                    return Err(Error::Config(format!(
                        "partitions disagree on universe size ({n} vs {})",
                        p.universe_size
                    )))
                }
                _ => {}
            }
            transactions.extend(p.transactions.iter().cloned());
        }
        Ok(TransactionDb {
            universe_size: universe.unwrap_or(0),
            transactions,
        })
    }

    pub(crate) fn check_itemset(&self, x: &Itemset) -> Result<()> {
        match x.max_item() {
            Some(max) if max >= self.universe_size => Err(Error::InvalidInput(format!(
                "item {max} outside universe of {} items",
                self.universe_size
            ))),
            _ => Ok(()),
        }
    }
}

/// An itemset paired with its support count in some database.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SupportCount {
    pub itemset: Itemset,
    pub count: u64,
}

impl SupportCount {
    pub fn new(itemset: Itemset, count: u64) -> Self {
        SupportCount { itemset, count }
    }
}

/// Frequent itemsets of one size.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrequentLevel {
    pub level: usize,
    /// Sorted by itemset, duplicate-free.
    pub entries: Vec<SupportCount>,
}

impl FrequentLevel {
    pub fn new(level: usize, mut entries: Vec<SupportCount>) -> Result<Self> {
        if let Some(bad) = entries.iter().find(|e| e.itemset.len() != level) {
            return Err(Error::InvalidInput(format!(
                "itemset {} does not belong to level {level}",
                bad.itemset
            )));
        }
        entries.sort_unstable_by(|a, b| a.itemset.cmp(&b.itemset));
        if entries.windows(2).any(|w| w[0].itemset == w[1].itemset) {
            return Err(Error::InvalidInput(format!(
                "duplicate itemset in level {level}"
            )));
        }
        Ok(FrequentLevel { level, entries })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn itemsets(&self) -> impl Iterator<Item = &Itemset> {
        self.entries.iter().map(|e| &e.itemset)
    }

    pub fn contains(&self, x: &Itemset) -> bool {
        self.entries.binary_search_by(|e| e.itemset.cmp(x)).is_ok()
    }
}

/// Per-level counters recorded while mining one database (or one node's
/// share of a distributed run).
///
/// For local Apriori these are LC/LS/LFa; for FDM nodes they are GC/GS/GFa,
/// where the candidates are the locally frequent members of the globally
/// generated candidate set.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LevelStats {
    pub level: usize,
    /// Itemsets counted against the local data at this level.
    pub counted: u64,
    pub candidates: u64,
    pub successes: u64,
    pub failures: u64,
    /// Itemsets of this level found locally frequent.
    pub locally_frequent: u64,
    /// Distinct items appearing in any candidate.
    pub candidate_items: u64,
    /// Distinct items appearing in the locally frequent itemsets of this
    /// level; this is the item count the candidate bound and the work bound
    /// use.
    pub items_involved: u64,
    /// Remote-originated itemsets counted against the local data.
    pub remote_work: u64,
}

pub(crate) fn distinct_items<'a>(sets: impl IntoIterator<Item = &'a Itemset>) -> u64 {
    let mut items: Vec<Item> = sets
        .into_iter()
        .flat_map(|s| s.items().iter().copied())
        .collect();
    items.sort_unstable();
    items.dedup();
    items.len() as u64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn itemset_rejects_unsorted_and_duplicates() {
        assert!(Itemset::new(vec![3, 1]).is_err());
        assert!(Itemset::new(vec![1, 1]).is_err());
        assert!(Itemset::new(vec![1, 2, 5]).is_ok());
        assert_eq!(Itemset::from_unsorted(vec![3, 1, 3]).items(), &[1, 3]);
    }

    #[test]
    fn subset_test() {
        let a = Itemset::from_unsorted(vec![1, 3]);
        assert!(a.is_subset_of(&[0, 1, 2, 3]));
        assert!(!a.is_subset_of(&[0, 1, 2]));
        assert!(Itemset::empty().is_subset_of(&[]));
        assert!(!a.is_subset_of(&[3]));
    }

    #[test]
    fn immediate_subsets_are_sorted() {
        let s = Itemset::from_unsorted(vec![1, 2, 3]).immediate_subsets();
        let got: Vec<Vec<Item>> = s.into_iter().map(Vec::from).collect();
        assert_eq!(got, vec![vec![1, 2], vec![1, 3], vec![2, 3]]);
    }

    #[test]
    fn db_rejects_out_of_universe() {
        assert!(TransactionDb::from_rows(3, [vec![0, 3]]).is_err());
        assert!(TransactionDb::from_rows(4, [vec![0, 3]]).is_ok());
    }

    #[test]
    fn level_rejects_wrong_size_and_duplicates() {
        let x = Itemset::from_unsorted(vec![1, 2]);
        assert!(FrequentLevel::new(1, vec![SupportCount::new(x.clone(), 1)]).is_err());
        assert!(FrequentLevel::new(
            2,
            vec![SupportCount::new(x.clone(), 1), SupportCount::new(x, 1)]
        )
        .is_err());
    }

    #[test]
    fn itemset_serde_validates() {
        let ok: Itemset = serde_json::from_str("[1,2]").unwrap();
        assert_eq!(ok.len(), 2);
        assert!(serde_json::from_str::<Itemset>("[2,1]").is_err());
    }
}
