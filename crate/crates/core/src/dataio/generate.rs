use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::itemsets::{Item, Itemset, TransactionDb};

/// Parameters of the simplified Quest-style market-basket generator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenParams {
    pub num_transactions: usize,
    pub universe_size: u32,
    pub avg_transaction_size: f64,
    pub num_patterns: usize,
    pub avg_pattern_size: f64,
    /// Probability of dropping each pattern item when it is placed in a
    /// transaction.
    pub corruption: f64,
    pub seed: u64,
}

impl Default for GenParams {
    fn default() -> Self {
        GenParams {
            num_transactions: 10_000,
            universe_size: 1_000,
            avg_transaction_size: 20.0,
            num_patterns: 200,
            avg_pattern_size: 4.0,
            corruption: 0.25,
            seed: 0,
        }
    }
}

impl GenParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidInput(m));
        if self.num_transactions == 0 || self.universe_size == 0 || self.num_patterns == 0 {
            return bad("transactions, items and patterns must all be >= 1".into());
        }
        if self.avg_transaction_size.is_nan() || self.avg_transaction_size < 1.0 {
            return bad(format!(
                "average transaction size {} must be >= 1",
                self.avg_transaction_size
            ));
        }
        if self.avg_transaction_size > f64::from(self.universe_size) {
            return bad(format!(
                "average transaction size {} exceeds universe of {} items",
                self.avg_transaction_size, self.universe_size
            ));
        }
        if self.avg_pattern_size.is_nan()
            || self.avg_pattern_size < 1.0
            || self.avg_pattern_size > f64::from(self.universe_size)
        {
            return bad(format!(
                "average pattern size {} must lie in [1, {}]",
                self.avg_pattern_size, self.universe_size
            ));
        }
        if !(0.0..=1.0).contains(&self.corruption) {
            return bad(format!("corruption {} must lie in [0, 1]", self.corruption));
        }
        Ok(())
    }
}

/// Generates a transaction database.
///
/// Procedure: draw `num_patterns` seed patterns, each of size
/// `1 + Poisson(avg_pattern_size - 1)` over uniformly chosen distinct items
/// and with an exponentially distributed selection weight. Each transaction
/// draws a target size from `Poisson(avg_transaction_size)` (clamped to
/// `[1, n]`), then repeatedly picks a weighted pattern and inserts its items,
/// dropping each with probability `corruption`, until the target is reached.
/// Short transactions are padded with uniform random items. Output is fully
/// determined by the seed.
pub fn generate(params: &GenParams) -> Result<TransactionDb> {
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let n = params.universe_size;

    let extra_pattern = Poisson::new(params.avg_pattern_size - 1.0).ok();
    let patterns: Vec<Vec<Item>> = (0..params.num_patterns)
        .map(|_| {
            let extra = extra_pattern.map_or(0.0, |p| p.sample(&mut rng)) as usize;
            let size = (1 + extra).min(n as usize);
            let mut items: Vec<Item> = rand::seq::index::sample(&mut rng, n as usize, size)
                .into_iter()
                .map(|i| i as Item)
                .collect();
            items.sort_unstable();
            items
        })
        .collect();
    let weights: Vec<f64> = (0..patterns.len())
        .map(|_| {
            let w: f64 = rng.sample(Exp1);
            w.max(1e-9)
        })
        .collect();
    let pick = WeightedIndex::new(&weights)
        .map_err(|e| Error::InvalidInput(format!("pattern weights: {e}")))?;
    let target = Poisson::new(params.avg_transaction_size)
        .map_err(|e| Error::InvalidInput(format!("transaction size: {e}")))?;

    let mut present = vec![false; n as usize];
    let mut transactions = Vec::with_capacity(params.num_transactions);
    for _ in 0..params.num_transactions {
        let want = (target.sample(&mut rng) as usize).clamp(1, n as usize);
        let mut items: Vec<Item> = Vec::with_capacity(want);
        let mut picks = 0;
        while items.len() < want && picks < 2 * want + 10 {
            picks += 1;
            for &item in &patterns[pick.sample(&mut rng)] {
                if items.len() == want {
                    break;
                }
                if rng.random::<f64>() < params.corruption || present[item as usize] {
                    continue;
                }
                present[item as usize] = true;
                items.push(item);
            }
        }
        while items.len() < want {
            let item = rng.random_range(0..n);
            if !present[item as usize] {
                present[item as usize] = true;
                items.push(item);
            }
        }
        for &item in &items {
            present[item as usize] = false;
        }
        transactions.push(Itemset::from_unsorted(items));
    }
    TransactionDb::new(n, transactions)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_for_seed() {
        let p = GenParams {
            num_transactions: 500,
            seed: 7,
            ..GenParams::default()
        };
        assert_eq!(generate(&p).unwrap(), generate(&p).unwrap());
        let q = GenParams {
            seed: 8,
            ..p.clone()
        };
        assert_ne!(generate(&p).unwrap(), generate(&q).unwrap());
    }

    #[test]
    fn mean_transaction_size_is_close() {
        let p = GenParams {
            num_transactions: 10_000,
            avg_transaction_size: 20.0,
            seed: 1,
            ..GenParams::default()
        };
        let db = generate(&p).unwrap();
        let mean = db.iter().map(|t| t.len()).sum::<usize>() as f64 / db.count() as f64;
        assert!((mean - 20.0).abs() <= 2.0, "mean {mean}");
    }

    #[test]
    fn tiny_universe_bounds() {
        let p = GenParams {
            num_transactions: 1,
            universe_size: 5,
            avg_transaction_size: 5.0,
            num_patterns: 3,
            avg_pattern_size: 2.0,
            corruption: 0.0,
            seed: 3,
        };
        let db = generate(&p).unwrap();
        assert_eq!(db.count(), 1);
        let t = &db.transactions()[0];
        assert!(t.len() <= 5 && !t.is_empty());
        assert!(t.items().windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn full_corruption_still_fills() {
        let p = GenParams {
            num_transactions: 50,
            universe_size: 30,
            avg_transaction_size: 5.0,
            corruption: 1.0,
            ..GenParams::default()
        };
        assert!(generate(&p).unwrap().iter().all(|t| !t.is_empty()));
    }

    #[test]
    fn rejects_bad_params() {
        let base = GenParams::default();
        for bad in [
            GenParams {
                avg_transaction_size: 2000.0,
                ..base.clone()
            },
            GenParams {
                corruption: 1.5,
                ..base.clone()
            },
            GenParams {
                num_transactions: 0,
                ..base.clone()
            },
            GenParams {
                num_patterns: 0,
                ..base.clone()
            },
            GenParams {
                avg_pattern_size: 0.5,
                ..base.clone()
            },
        ] {
            assert!(generate(&bad).is_err(), "{bad:?}");
        }
    }
}
