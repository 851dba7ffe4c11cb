use super::{FrequentLevel, Item, Itemset, SupportCount, SupportThreshold, TransactionDb};
use crate::error::{Error, Result};

/// Largest universe `brute_force_frequent` will enumerate.
pub const BRUTE_FORCE_MAX_UNIVERSE: u32 = 24;

/// Enumerates every itemset of size `1..=k` and keeps those meeting the
/// threshold. Works on bitmasks and shares no code with the Apriori path.
///
/// Returns exactly `k` levels (some possibly empty).
pub fn brute_force_frequent(
    db: &TransactionDb,
    s: &SupportThreshold,
    k: usize,
) -> Result<Vec<FrequentLevel>> {
    let n = db.universe_size();
    if n > BRUTE_FORCE_MAX_UNIVERSE {
        return Err(Error::UniverseTooLarge(n));
    }
    let min_count = s.absolute(db.count());
    let masks: Vec<u32> = db
        .iter()
        .map(|t| t.items().iter().fold(0u32, |m, &x| m | (1 << x)))
        .collect();
    let k = k.min(n as usize);

    let by_subset = |x: u32| masks.iter().filter(|&&t| t & x == x).count() as u64;
    let mut found: Vec<(u32, u64)> = Vec::new();
    let enumerate_cost: u128 =
        (1..=k).map(|j| binomial(n as usize, j)).sum::<u128>() * masks.len() as u128;
    let table_cost: u128 = (n as u128 + 1) << n;
    if enumerate_cost <= table_cost {
        for x in 1u32..(1u64 << n) as u32 {
            if x.count_ones() as usize <= k {
                let c = by_subset(x);
                if c >= min_count {
                    found.push((x, c));
                }
            }
        }
    } else {
        // superset-sum table: table[x] = #transactions whose mask contains x
        let mut table = vec![0u64; 1usize << n];
        for &t in &masks {
            table[t as usize] += 1;
        }
        for bit in 0..n {
            let b = 1usize << bit;
            for x in 0..table.len() {
                if x & b == 0 {
                    table[x] += table[x | b];
                }
            }
        }
        for (x, &c) in table.iter().enumerate().skip(1) {
            if (x as u32).count_ones() as usize <= k && c >= min_count {
                found.push((x as u32, c));
            }
        }
    }

    let mut levels: Vec<Vec<SupportCount>> = vec![Vec::new(); k];
    for (x, c) in found {
        let items: Vec<Item> = (0..n).filter(|&i| x & (1 << i) != 0).collect();
        levels[items.len() - 1].push(SupportCount::new(Itemset(items), c));
    }
    levels
        .into_iter()
        .enumerate()
        .map(|(i, entries)| FrequentLevel::new(i + 1, entries))
        .collect()
}

fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}
