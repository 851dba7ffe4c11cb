use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{read_db, write_atomic, write_db};
use crate::error::{Error, Result};
use crate::itemsets::TransactionDb;

/// How to split a database horizontally over `num_nodes` nodes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PartitionSpec {
    pub num_nodes: usize,
    /// One positive weight per node.
    pub ratios: Vec<f64>,
    pub seed: u64,
}

impl PartitionSpec {
    pub fn uniform(num_nodes: usize, seed: u64) -> Self {
        PartitionSpec {
            num_nodes,
            ratios: vec![1.0; num_nodes],
            seed,
        }
    }

    /// A `1:r` split: weights interpolated linearly from 1 to `r`, so two
    /// nodes get exactly `{1, r}`.
    pub fn linear(num_nodes: usize, r: f64, seed: u64) -> Self {
        let ratios = match num_nodes {
            0 => Vec::new(),
            1 => vec![1.0],
            m => (0..m)
                .map(|i| 1.0 + (r - 1.0) * i as f64 / (m - 1) as f64)
                .collect(),
        };
        PartitionSpec {
            num_nodes,
            ratios,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_nodes == 0 {
            return Err(Error::InvalidInput("at least one node is required".into()));
        }
        if self.ratios.len() != self.num_nodes {
            return Err(Error::InvalidInput(format!(
                "{} ratios given for {} nodes",
                self.ratios.len(),
                self.num_nodes
            )));
        }
        if let Some(w) = self.ratios.iter().find(|w| !(w.is_finite() && **w > 0.0)) {
            return Err(Error::InvalidInput(format!(
                "ratio weight {w} must be positive"
            )));
        }
        Ok(())
    }
}

/// Splits `total` into parts proportional to `weights` using the
/// largest-remainder method; ties go to the lower index.
pub fn apportion(total: usize, weights: &[f64]) -> Vec<usize> {
    let sum: f64 = weights.iter().sum();
    let quotas: Vec<f64> = weights.iter().map(|w| total as f64 * w / sum).collect();
    let mut sizes: Vec<usize> = quotas.iter().map(|q| q.floor() as usize).collect();
    let assigned: usize = sizes.iter().sum();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = quotas[a] - quotas[a].floor();
        let rb = quotas[b] - quotas[b].floor();
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    for &i in order.iter().take(total.saturating_sub(assigned)) {
        sizes[i] += 1;
    }
    sizes
}

/// Seeded shuffle of the transactions followed by a contiguous split with
/// largest-remainder sizes.
pub fn partition(db: &TransactionDb, spec: &PartitionSpec) -> Result<Vec<TransactionDb>> {
    spec.validate()?;
    if spec.num_nodes > db.count() {
        return Err(Error::InvalidInput(format!(
            "cannot split {} transactions over {} nodes",
            db.count(),
            spec.num_nodes
        )));
    }
    let mut order: Vec<usize> = (0..db.count()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(spec.seed));
    let sizes = apportion(db.count(), &spec.ratios);
    let mut parts = Vec::with_capacity(sizes.len());
    let mut start = 0;
    for size in sizes {
        let transactions = order[start..start + size]
            .iter()
            .map(|&i| db.transactions()[i].clone())
            .collect();
        parts.push(TransactionDb::new(db.universe_size(), transactions)?);
        start += size;
    }
    Ok(parts)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PartEntry {
    pub path: String,
    pub count: usize,
}

/// JSON description of a partitioned dataset on disk.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PartitionManifest {
    pub source: String,
    pub parts: Vec<PartEntry>,
    pub seed: u64,
    pub ratios: Vec<f64>,
}

impl PartitionManifest {
    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        write_atomic(path.as_ref(), text.as_bytes())
    }

    /// Loads every part; relative part paths resolve against `base`.
    pub fn load_parts(&self, base: &Path) -> Result<Vec<TransactionDb>> {
        self.parts
            .iter()
            .map(|p| {
                let path = resolve(base, &p.path);
                let db = read_db(&path)?;
                if db.count() != p.count {
                    return Err(Error::Config(format!(
                        "{} holds {} transactions, manifest says {}",
                        path.display(),
                        db.count(),
                        p.count
                    )));
                }
                Ok(db)
            })
            .collect()
    }
}

fn resolve(base: &Path, p: &str) -> PathBuf {
    let p = Path::new(p);
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

/// Partitions `db` and writes `<stem>.part<i>.txt` files plus
/// `<stem>.manifest.json` into `out_dir`. Part paths in the manifest are
/// relative to `out_dir`.
pub fn write_partitions(
    db: &TransactionDb,
    spec: &PartitionSpec,
    source: &str,
    out_dir: &Path,
    stem: &str,
) -> Result<(PathBuf, PartitionManifest)> {
    let parts = partition(db, spec)?;
    let mut entries = Vec::with_capacity(parts.len());
    for (i, part) in parts.iter().enumerate() {
        let name = format!("{stem}.part{i}.txt");
        write_db(part, out_dir.join(&name))?;
        entries.push(PartEntry {
            path: name,
            count: part.count(),
        });
    }
    let manifest = PartitionManifest {
        source: source.to_string(),
        parts: entries,
        seed: spec.seed,
        ratios: spec.ratios.clone(),
    };
    let path = out_dir.join(format!("{stem}.manifest.json"));
    manifest.write(&path)?;
    Ok((path, manifest))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::itemsets::{support, Itemset};

    fn toy() -> TransactionDb {
        TransactionDb::from_rows(
            4,
            [
                vec![1, 2, 3],
                vec![1, 2],
                vec![1, 3],
                vec![2, 3],
                vec![1, 2, 3],
            ],
        )
        .unwrap()
    }

    #[test]
    fn apportion_examples() {
        assert_eq!(apportion(5, &[1.0, 1.0]), vec![3, 2]);
        assert_eq!(apportion(600, &[1.0, 5.0]), vec![100, 500]);
        assert_eq!(apportion(10, &[1.0, 1.0, 1.0]), vec![4, 3, 3]);
        assert_eq!(apportion(7, &[1.0]), vec![7]);
    }

    #[test]
    fn linear_ratios() {
        assert_eq!(PartitionSpec::linear(2, 5.0, 0).ratios, vec![1.0, 5.0]);
        assert_eq!(PartitionSpec::linear(3, 5.0, 0).ratios, vec![1.0, 3.0, 5.0]);
        assert_eq!(PartitionSpec::linear(1, 10.0, 0).ratios, vec![1.0]);
    }

    #[test]
    fn toy_split_sizes() {
        let parts = partition(&toy(), &PartitionSpec::uniform(2, 1)).unwrap();
        let sizes: Vec<usize> = parts.iter().map(|p| p.count()).collect();
        assert_eq!(sizes, vec![3, 2]);
    }

    #[test]
    fn skewed_split_sizes() {
        let db = TransactionDb::from_rows(2, (0..600).map(|i| vec![i % 2])).unwrap();
        let parts = partition(&db, &PartitionSpec::linear(2, 5.0, 9)).unwrap();
        let sizes: Vec<usize> = parts.iter().map(|p| p.count()).collect();
        assert_eq!(sizes, vec![100, 500]);
    }

    #[test]
    fn single_node_keeps_everything() {
        let parts = partition(&toy(), &PartitionSpec::uniform(1, 3)).unwrap();
        assert_eq!(parts.len(), 1);
        let mut got = parts[0].transactions().to_vec();
        let mut want = toy().transactions().to_vec();
        got.sort();
        want.sort();
        assert_eq!(got, want);
    }

    #[test]
    fn supports_add_up() {
        let db = toy();
        let parts = partition(&db, &PartitionSpec::linear(3, 2.0, 4)).unwrap();
        for x in [vec![1], vec![1, 2], vec![1, 2, 3], vec![0]] {
            let x = Itemset::new(x).unwrap();
            let total: u64 = parts.iter().map(|p| support(p, &x).unwrap().count).sum();
            assert_eq!(total, support(&db, &x).unwrap().count);
        }
    }

    #[test]
    fn too_many_nodes() {
        assert!(partition(&toy(), &PartitionSpec::uniform(6, 0)).is_err());
        assert!(partition(
            &toy(),
            &PartitionSpec {
                num_nodes: 2,
                ratios: vec![1.0],
                seed: 0
            }
        )
        .is_err());
        assert!(partition(
            &toy(),
            &PartitionSpec {
                num_nodes: 2,
                ratios: vec![1.0, 0.0],
                seed: 0
            }
        )
        .is_err());
    }

    #[test]
    fn manifest_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let db = toy();
        let spec = PartitionSpec::uniform(2, 5);
        let (path, manifest) = write_partitions(&db, &spec, "toy.txt", dir.path(), "toy").unwrap();
        let read = PartitionManifest::read(&path).unwrap();
        assert_eq!(read, manifest);
        let parts = read.load_parts(dir.path()).unwrap();
        assert_eq!(parts, partition(&db, &spec).unwrap());
        let json: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
        for key in ["source", "parts", "seed", "ratios"] {
            assert!(json.get(key).is_some(), "{key}");
        }
        assert_eq!(json["parts"][0]["count"], 3);
    }
}
