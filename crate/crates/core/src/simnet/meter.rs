use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use super::{Message, MessageKind};
use crate::error::Result;

/// Messages and itemset units one node sent during one pass, per kind.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrafficRow {
    pub node: usize,
    pub pass: u32,
    pub kind: MessageKind,
    pub messages: u64,
    pub itemset_units: u64,
    pub bytes_estimate: u64,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrafficMeter {
    /// Sorted by `(pass, node, kind)`.
    pub rows: Vec<TrafficRow>,
    pub passes: u32,
}

impl TrafficMeter {
    pub(crate) fn record(&mut self, m: &Message) {
        let key = (m.pass, m.from.0, m.kind);
        let pos = self
            .rows
            .binary_search_by(|r| (r.pass, r.node, r.kind).cmp(&key));
        let row = match pos {
            Ok(i) => &mut self.rows[i],
            Err(i) => {
                self.rows.insert(
                    i,
                    TrafficRow {
                        node: m.from.0,
                        pass: m.pass,
                        kind: m.kind,
                        messages: 0,
                        itemset_units: 0,
                        bytes_estimate: 0,
                    },
                );
                &mut self.rows[i]
            }
        };
        row.messages += 1;
        row.itemset_units += m.payload_units() as u64;
        row.bytes_estimate += m.payload.bytes_estimate();
    }

    pub fn total_messages(&self) -> u64 {
        self.rows.iter().map(|r| r.messages).sum()
    }

    pub fn total_units(&self) -> u64 {
        self.rows.iter().map(|r| r.itemset_units).sum()
    }

    /// Itemset units per pass, keyed by pass number.
    pub fn units_per_pass(&self) -> BTreeMap<u32, u64> {
        let mut out = BTreeMap::new();
        for r in &self.rows {
            *out.entry(r.pass).or_insert(0) += r.itemset_units;
        }
        out
    }

    /// CSV with columns `protocol,node,round,kind,messages,itemset_units`,
    /// where `round` is the communication pass.
    pub fn write_csv<W: Write>(&self, protocol: &str, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "protocol",
            "node",
            "round",
            "kind",
            "messages",
            "itemset_units",
        ])?;
        for r in &self.rows {
            w.write_record([
                protocol.to_string(),
                r.node.to_string(),
                r.pass.to_string(),
                r.kind.as_str().to_string(),
                r.messages.to_string(),
                r.itemset_units.to_string(),
            ])?;
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::itemsets::Itemset;
    use crate::simnet::{NodeId, Payload};

    fn msg(from: usize, pass: u32, kind: MessageKind, units: u32) -> Message {
        Message {
            from: NodeId(from),
            to: NodeId(from + 1),
            round: 0,
            pass,
            kind,
            payload: Payload::Itemsets((0..units).map(Itemset::singleton).collect()),
        }
    }

    #[test]
    fn aggregates_by_pass_node_kind() {
        let mut m = TrafficMeter::default();
        m.record(&msg(1, 1, MessageKind::CandidateSet, 3));
        m.record(&msg(0, 1, MessageKind::CandidateSet, 2));
        m.record(&msg(1, 1, MessageKind::CandidateSet, 4));
        m.record(&msg(0, 2, MessageKind::CountResponse, 1));
        assert_eq!(m.rows.len(), 3);
        assert_eq!(m.rows[1].node, 1);
        assert_eq!(m.rows[1].messages, 2);
        assert_eq!(m.rows[1].itemset_units, 7);
        assert_eq!(m.units_per_pass().get(&1), Some(&9));
        assert_eq!(m.total_units(), 10);
        assert_eq!(m.total_messages(), 4);
        assert_eq!(m.rows[1].bytes_estimate, 7 * 8);
    }

    #[test]
    fn csv_schema() {
        let mut m = TrafficMeter::default();
        m.record(&msg(0, 1, MessageKind::CountRequest, 2));
        let mut buf = Vec::new();
        m.write_csv("gfm", &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "protocol,node,round,kind,messages,itemset_units\ngfm,0,1,count_request,1,2\n"
        );
    }
}
