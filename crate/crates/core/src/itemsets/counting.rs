use std::collections::HashMap;

use super::{Item, Itemset, SupportCount, TransactionDb};
use crate::error::Result;

/// Number of transactions in `db` containing `x`.
pub fn support(db: &TransactionDb, x: &Itemset) -> Result<SupportCount> {
    db.check_itemset(x)?;
    let count = db.iter().filter(|t| x.is_subset_of(t.items())).count() as u64;
    Ok(SupportCount::new(x.clone(), count))
}

/// Counts every candidate against `db` in one pass per itemset size.
///
/// Candidates may mix sizes and need not be sorted; the result is aligned
/// with the input. Items outside the universe simply count zero.
pub fn count_supports(db: &TransactionDb, candidates: &[Itemset]) -> Vec<u64> {
    let mut counts = vec![0u64; candidates.len()];
    let mut by_size: HashMap<usize, Vec<usize>> = HashMap::new();
    for (i, c) in candidates.iter().enumerate() {
        by_size.entry(c.len()).or_default().push(i);
    }
    for (size, idx) in by_size {
        match size {
            0 => idx.iter().for_each(|&i| counts[i] = db.count() as u64),
            1 => count_singletons(db, candidates, &idx, &mut counts),
            _ => count_level(db, candidates, &idx, size, &mut counts),
        }
    }
    counts
}

fn count_singletons(db: &TransactionDb, candidates: &[Itemset], idx: &[usize], out: &mut [u64]) {
    let mut per_item = vec![0u64; db.universe_size() as usize];
    for t in db.iter() {
        for &item in t.items() {
            per_item[item as usize] += 1;
        }
    }
    for &i in idx {
        let item = candidates[i].items()[0] as usize;
        out[i] = per_item.get(item).copied().unwrap_or(0);
    }
}

// Each transaction is first projected onto the items that occur in some
// candidate. If the projection has few enough `size`-subsets, they are
// enumerated and looked up; otherwise every candidate is tested directly.
fn count_level(
    db: &TransactionDb,
    candidates: &[Itemset],
    idx: &[usize],
    size: usize,
    out: &mut [u64],
) {
    let mut lookup: HashMap<&[Item], usize> = HashMap::with_capacity(idx.len());
    let mut relevant = vec![false; db.universe_size() as usize];
    for &i in idx {
        let items = candidates[i].items();
        if items.iter().any(|&x| x as usize >= relevant.len()) {
            continue;
        }
        for &x in items {
            relevant[x as usize] = true;
        }
        lookup.insert(items, i);
    }
    if lookup.is_empty() {
        return;
    }

    let mut projected: Vec<Item> = Vec::new();
    let mut combo: Vec<usize> = Vec::with_capacity(size);
    let mut buf: Vec<Item> = Vec::with_capacity(size);
    for t in db.iter() {
        projected.clear();
        projected.extend(t.items().iter().copied().filter(|&x| relevant[x as usize]));
        if projected.len() < size {
            continue;
        }
        if binomial_at_most(projected.len(), size, lookup.len() as u64) {
            // enumerate size-combinations of the projection
            combo.clear();
            combo.extend(0..size);
            loop {
                buf.clear();
                buf.extend(combo.iter().map(|&p| projected[p]));
                if let Some(&i) = lookup.get(buf.as_slice()) {
                    out[i] += 1;
                }
                let n = projected.len();
                let mut pos = size;
                while pos > 0 && combo[pos - 1] == n - size + pos - 1 {
                    pos -= 1;
                }
                if pos == 0 {
                    break;
                }
                combo[pos - 1] += 1;
                for j in pos..size {
                    combo[j] = combo[j - 1] + 1;
                }
            }
        } else {
            for (items, &i) in &lookup {
                if super::is_sorted_subset(items, &projected) {
                    out[i] += 1;
                }
            }
        }
    }
}

/// Whether `C(n, k) <= limit`, without overflowing.
fn binomial_at_most(n: usize, k: usize, limit: u64) -> bool {
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
        if acc > limit as u128 {
            return false;
        }
    }
    true
}
