use super::{NodeSetup, ResolvedItemset};
use crate::itemsets::{mine_apriori_min_count, AprioriRun, LevelStats};
use crate::simnet::{Message, NodeMachine, Outbox};

/// Sequential Apriori over the whole dataset, wrapped as a one-node run.
pub struct CentralizedNode<'a> {
    setup: NodeSetup<'a>,
    run: Option<AprioriRun>,
}

impl<'a> CentralizedNode<'a> {
    pub fn new(setup: NodeSetup<'a>) -> Self {
        CentralizedNode { setup, run: None }
    }

    pub fn stats(&self) -> &[LevelStats] {
        self.run.as_ref().map_or(&[], |r| &r.stats)
    }

    pub fn result(&self) -> Vec<ResolvedItemset> {
        self.run
            .iter()
            .flat_map(|r| r.frequent())
            .map(|e| ResolvedItemset {
                itemset: e.itemset.clone(),
                count: e.count,
                exact: true,
            })
            .collect()
    }
}

impl NodeMachine for CentralizedNode<'_> {
    fn on_round(&mut self, _inbox: Vec<Message>, _out: &mut Outbox) {
        if self.run.is_none() {
            let s = &self.setup;
            self.run = Some(mine_apriori_min_count(s.db, s.global_min, s.k));
        }
    }

    fn is_quiescent(&self) -> bool {
        self.run.is_some()
    }

    fn passes(&self) -> u32 {
        0
    }
}
