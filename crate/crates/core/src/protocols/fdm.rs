use std::collections::HashMap;

use super::{NodeSetup, ResolvedItemset};
use crate::itemsets::{
    apriori_gen, count_supports, distinct_items, FrequentLevel, Itemset, LevelStats, SupportCount,
};
use crate::simnet::{Message, MessageKind, NodeMachine, Outbox, Payload};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Phase {
    Start,
    /// Count the candidates other nodes broadcast and send the counts back.
    Answer,
    /// Sum returned counts for our own candidates and broadcast the winners.
    Resolve,
    /// Merge everyone's winners into the agreed level, then move on.
    Merge,
    Done,
}

/// One FDM node. Each level takes three rounds: candidate broadcast, count
/// response, frequent-set broadcast. Polling sites are not used: every node
/// broadcasts its whole candidate set.
pub struct FdmNode<'a> {
    setup: NodeSetup<'a>,
    phase: Phase,
    level: usize,
    global: Vec<FrequentLevel>,
    /// GC for the current level with local counts, sorted.
    candidates: Vec<SupportCount>,
    admitted: Vec<SupportCount>,
    stats: Vec<LevelStats>,
    history: Vec<Vec<Itemset>>,
    passes: u32,
}

impl<'a> FdmNode<'a> {
    pub fn new(setup: NodeSetup<'a>) -> Self {
        FdmNode {
            setup,
            phase: Phase::Start,
            level: 0,
            global: Vec::new(),
            candidates: Vec::new(),
            admitted: Vec::new(),
            stats: Vec::new(),
            history: Vec::new(),
            passes: 0,
        }
    }

    /// The agreed globally frequent levels so far.
    pub fn global_levels(&self) -> &[FrequentLevel] {
        &self.global
    }

    pub fn stats(&self) -> &[LevelStats] {
        &self.stats
    }

    /// GC_{l,i} for every executed level.
    pub fn candidate_history(&self) -> &[Vec<Itemset>] {
        &self.history
    }

    pub fn result(&self) -> Vec<ResolvedItemset> {
        self.global
            .iter()
            .flat_map(|l| l.entries.iter())
            .map(|e| ResolvedItemset {
                itemset: e.itemset.clone(),
                count: e.count,
                exact: true,
            })
            .collect()
    }

    fn start_level(&mut self, out: &mut Outbox) {
        let s = self.setup;
        self.level += 1;
        let generated: Vec<Itemset> = match self.global.last() {
            _ if self.level > s.k => Vec::new(),
            None => (0..s.db.universe_size()).map(Itemset::singleton).collect(),
            Some(prev) => apriori_gen(prev),
        };
        if generated.is_empty() {
            self.level -= 1;
            self.phase = Phase::Done;
            return;
        }
        let counts = count_supports(s.db, &generated);
        self.candidates = generated
            .iter()
            .zip(&counts)
            .filter(|&(_, &c)| c >= s.local_min)
            .map(|(x, &c)| SupportCount::new(x.clone(), c))
            .collect();
        self.passes += 1;
        let gc: Vec<Itemset> = self.candidates.iter().map(|c| c.itemset.clone()).collect();
        let items = distinct_items(&gc);
        self.stats.push(LevelStats {
            level: self.level,
            counted: generated.len() as u64,
            candidates: gc.len() as u64,
            locally_frequent: gc.len() as u64,
            candidate_items: items,
            items_involved: items,
            ..LevelStats::default()
        });
        if !gc.is_empty() {
            out.broadcast(
                self.passes,
                MessageKind::CandidateSet,
                &Payload::Itemsets(gc.clone()),
            );
        }
        self.history.push(gc);
        self.phase = Phase::Answer;
    }

    fn answer(&mut self, inbox: &[Message], out: &mut Outbox) {
        let mut wanted: Vec<Itemset> = inbox
            .iter()
            .filter(|m| m.kind == MessageKind::CandidateSet)
            .flat_map(|m| match &m.payload {
                Payload::Itemsets(v) => v.iter().cloned(),
                Payload::Counts(_) => unreachable!("candidate sets carry itemsets"),
            })
            .collect();
        wanted.sort_unstable();
        wanted.dedup();
        let counts = count_supports(self.setup.db, &wanted);
        if let Some(st) = self.stats.last_mut() {
            st.remote_work += wanted.len() as u64;
        }
        for m in inbox.iter().filter(|m| m.kind == MessageKind::CandidateSet) {
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
                self.passes,
                MessageKind::CountResponse,
                Payload::Counts(reply),
            );
        }
        self.phase = Phase::Resolve;
    }

    fn resolve(&mut self, inbox: &[Message], out: &mut Outbox) {
        let mut totals: Vec<u64> = self.candidates.iter().map(|c| c.count).collect();
        for m in inbox
            .iter()
            .filter(|m| m.kind == MessageKind::CountResponse)
        {
            let Payload::Counts(counts) = &m.payload else {
                continue;
            };
            debug_assert_eq!(counts.len(), totals.len());
            for (total, (mine, theirs)) in totals.iter_mut().zip(self.candidates.iter().zip(counts))
            {
                debug_assert_eq!(mine.itemset, theirs.itemset);
                *total += theirs.count;
            }
        }
        self.admitted = self
            .candidates
            .iter()
            .zip(&totals)
            .filter(|&(_, &t)| t >= self.setup.global_min)
            .map(|(c, &t)| SupportCount::new(c.itemset.clone(), t))
            .collect();
        if let Some(st) = self.stats.last_mut() {
            st.successes = self.admitted.len() as u64;
            st.failures = st.candidates - st.successes;
        }
        if !self.admitted.is_empty() {
            out.broadcast(
                self.passes,
                MessageKind::FrequentBroadcast,
                &Payload::Counts(self.admitted.clone()),
            );
        }
        self.phase = Phase::Merge;
    }

    fn merge(&mut self, inbox: &[Message], out: &mut Outbox) {
        let mut all: HashMap<Itemset, u64> = HashMap::new();
        let received = inbox
            .iter()
            .filter(|m| m.kind == MessageKind::FrequentBroadcast)
            .flat_map(|m| match &m.payload {
                Payload::Counts(v) => v.iter(),
                Payload::Itemsets(_) => unreachable!("broadcasts carry counts"),
            });
        for e in self.admitted.iter().chain(received) {
            let prev = all.insert(e.itemset.clone(), e.count);
            debug_assert!(
                prev.is_none_or(|c| c == e.count),
                "nodes disagree on a global count"
            );
        }
        let entries = all
            .into_iter()
            .map(|(itemset, count)| SupportCount::new(itemset, count))
            .collect();
        let level = FrequentLevel::new(self.level, entries).expect("well-formed level");
        let finished = level.is_empty() || self.level >= self.setup.k;
        self.global.push(level);
        self.candidates.clear();
        self.admitted.clear();
        if finished {
            self.phase = Phase::Done;
        } else {
            self.start_level(out);
        }
    }
}

impl NodeMachine for FdmNode<'_> {
    fn on_round(&mut self, inbox: Vec<Message>, out: &mut Outbox) {
        match self.phase {
            Phase::Start => self.start_level(out),
            Phase::Answer => self.answer(&inbox, out),
            Phase::Resolve => self.resolve(&inbox, out),
            Phase::Merge => self.merge(&inbox, out),
            Phase::Done => {}
        }
    }

    fn is_quiescent(&self) -> bool {
        self.phase == Phase::Done
    }

    fn passes(&self) -> u32 {
        self.passes
    }
}
