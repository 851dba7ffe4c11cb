//! Distributed mining state machines.
//!
//! [`FdmNode`] prunes globally at every level: candidates are generated from
//! the agreed global frequent sets, filtered to the locally frequent ones,
//! and their counts are exchanged before the next level starts.
//!
//! [`GfmNode`] mines locally up to size `k` with purely local pruning, then
//! resolves global frequency top-down: it requests remote counts for its
//! locally maximal itemsets, and for every itemset that fails it requests
//! the immediate subsets, inferring frequency from lower bounds where it can.

mod centralized;
mod fdm;
mod gfm;

use serde::{Deserialize, Serialize};

use crate::itemsets::{Itemset, TransactionDb};
use crate::simnet::NodeId;

pub use centralized::CentralizedNode;
pub use fdm::FdmNode;
pub use gfm::{gfm_finalize, GfmNode, PassStats};

/// Static facts every node is told before a run.
#[derive(Clone, Copy, Debug)]
pub struct NodeSetup<'a> {
    pub id: NodeId,
    pub num_nodes: usize,
    pub db: &'a TransactionDb,
    /// Minimum count over the whole dataset.
    pub global_min: u64,
    /// Minimum count over this node's partition.
    pub local_min: u64,
    pub k: usize,
}

/// A globally frequent itemset in a run result. `count` is exact when
/// `exact` is set and a proven lower bound otherwise.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResolvedItemset {
    pub itemset: Itemset,
    pub count: u64,
    pub exact: bool,
}

pub(crate) fn by_size_then_lex(a: &Itemset, b: &Itemset) -> std::cmp::Ordering {
    (a.len(), a).cmp(&(b.len(), b))
}
