//! Resolution-parameterized clustering of a similarity graph.
//!
//! Quality of a partition is `Q = Σ_{j<k} δ(c_j, c_k)·(s_jk − γ)`. Nodes are
//! moved one at a time to the neighbouring cluster (or a fresh singleton)
//! with the largest gain until no move helps; clusters are then collapsed
//! into weighted super-nodes and the moving repeats on the smaller graph.
//! Every move strictly increases `Q`.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{SkillSimilarity, SkillnetError};

const GAIN_EPS: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkillCluster {
    pub id: usize,
    pub members: Vec<String>,
    pub name: Option<String>,
}

impl SkillCluster {
    pub fn display_name(&self) -> String {
        self.name.clone().unwrap_or_else(|| format!("cluster-{}", self.id))
    }
}

/// Partition of the skill vocabulary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkillClusterSet {
    pub clusters: Vec<SkillCluster>,
    pub resolution: f64,
    pub seed: u64,
    pub quality: f64,
    /// Quality after every local-moving pass of the winning restart.
    pub pass_quality: Vec<f64>,
}

impl SkillClusterSet {
    /// Skill → cluster index.
    pub fn membership(&self) -> BTreeMap<&str, usize> {
        self.clusters
            .iter()
            .enumerate()
            .flat_map(|(c, cl)| cl.members.iter().map(move |m| (m.as_str(), c)))
            .collect()
    }

    /// `skill,cluster_id,cluster_name` rows.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["skill", "cluster_id", "cluster_name"])
            .expect("in-memory write");
        for c in &self.clusters {
            let name = c.display_name();
            for m in &c.members {
                w.write_record([m.as_str(), &c.id.to_string(), &name])
                    .expect("in-memory write");
            }
        }
        String::from_utf8(w.into_inner().expect("flush")).expect("utf8")
    }
}

/// One restart's outcome, exposed for auditing.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterRun {
    /// Canonical labels: clusters numbered by first appearance.
    pub labels: Vec<usize>,
    pub quality: f64,
    pub pass_quality: Vec<f64>,
}

/// `Q` of the partition `labels` on `s` at resolution `gamma`.
pub fn partition_quality(s: &SkillSimilarity, labels: &[usize], gamma: f64) -> f64 {
    let m = s.len();
    let mut q = 0.0;
    for j in 0..m {
        for k in j + 1..m {
            if labels[j] == labels[k] {
                q += s.get(j, k) - gamma;
            }
        }
    }
    q
}

fn canonical(labels: &[usize]) -> Vec<usize> {
    let mut map = BTreeMap::new();
    labels
        .iter()
        .map(|l| {
            let next = map.len();
            *map.entry(*l).or_insert(next)
        })
        .collect()
}

/// Weighted graph of super-nodes: `w` is symmetric with zero diagonal,
/// `size` the number of original nodes in each super-node.
struct Level {
    size: Vec<f64>,
    adj: Vec<Vec<(usize, f64)>>,
}

/// Moves nodes of `level` until stable. Returns (assignment, any move made).
fn local_moving(level: &Level, gamma: f64, rng: &mut ChaCha8Rng, mut on_pass: impl FnMut(&[usize])) -> (Vec<usize>, bool) {
    let n = level.size.len();
    let mut cluster: Vec<usize> = (0..n).collect();
    let mut cluster_size: Vec<f64> = level.size.clone();
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut moved_any = false;
    let mut link = vec![0.0; n];
    let mut touched: Vec<usize> = Vec::new();
    loop {
        let mut moved = false;
        for &v in &order {
            let own = cluster[v];
            for &(u, w) in &level.adj[v] {
                let c = cluster[u];
                if link[c] == 0.0 {
                    touched.push(c);
                }
                link[c] += w;
            }
            cluster_size[own] -= level.size[v];
            let gain = |c: usize, link_c: f64| link_c - gamma * level.size[v] * cluster_size[c];
            let stay = gain(own, link[own]);
            let mut best = (own, stay);
            touched.sort_unstable();
            for &c in &touched {
                if c == own {
                    continue;
                }
                let g = gain(c, link[c]);
                if g > best.1 + GAIN_EPS {
                    best = (c, g);
                }
            }
            // an empty cluster always offers gain 0
            if best.1 < -GAIN_EPS && stay < -GAIN_EPS {
                if let Some(empty) = (0..n).find(|&c| cluster_size[c] == 0.0 && c != own) {
                    best = (empty, 0.0);
                }
            }
            cluster_size[best.0] += level.size[v];
            if best.0 != own {
                cluster[v] = best.0;
                moved = true;
                moved_any = true;
            }
            for &c in &touched {
                link[c] = 0.0;
            }
            touched.clear();
        }
        on_pass(&cluster);
        if !moved {
            break;
        }
    }
    (cluster, moved_any)
}

fn run_once(s: &SkillSimilarity, gamma: f64, seed: u64, live: &[usize]) -> ClusterRun {
    let m = s.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut adj = vec![Vec::new(); m];
    for &j in live {
        for &k in live {
            if j != k {
                let w = s.get(j, k);
                if w > 0.0 {
                    adj[j].push((k, w));
                }
            }
        }
    }
    let mut level = Level { size: vec![1.0; m], adj };
    // node_of[original] = node at the current level
    let mut node_of: Vec<usize> = (0..m).collect();
    let mut pass_quality = Vec::new();
    loop {
        let (assign, moved) = local_moving(&level, gamma, &mut rng, |cl| {
            let labels: Vec<usize> = node_of.iter().map(|&v| cl[v]).collect();
            pass_quality.push(partition_quality(s, &labels, gamma));
        });
        let relabel = canonical(&assign);
        for v in node_of.iter_mut() {
            *v = relabel[*v];
        }
        if !moved {
            break;
        }
        let k = relabel.iter().max().map_or(0, |x| x + 1);
        let mut size = vec![0.0; k];
        let mut weights: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        for (v, nbrs) in level.adj.iter().enumerate() {
            size[relabel[v]] += level.size[v];
            for &(u, w) in nbrs {
                let (a, b) = (relabel[v], relabel[u]);
                if a != b {
                    *weights.entry((a, b)).or_insert(0.0) += w;
                }
            }
        }
        let mut adj = vec![Vec::new(); k];
        for ((a, b), w) in weights {
            adj[a].push((b, w));
        }
        level = Level { size, adj };
    }
    let labels = canonical(&node_of);
    let quality = partition_quality(s, &labels, gamma);
    ClusterRun {
        labels,
        quality,
        pass_quality,
    }
}

/// Best-of-`restarts` clustering of `s`. Restart `r` uses seed `seed + r`;
/// the highest quality wins, ties going to the lexicographically smallest
/// canonical labeling. Flagged (zero-occurrence) skills become singletons.
pub fn cluster_skills(
    s: &SkillSimilarity,
    resolution: f64,
    seed: u64,
    restarts: usize,
) -> Result<SkillClusterSet, SkillnetError> {
    if !(resolution.is_finite() && resolution > 0.0) {
        return Err(SkillnetError::Resolution(resolution));
    }
    if restarts == 0 {
        return Err(SkillnetError::Restarts);
    }
    let live: Vec<usize> = (0..s.len()).filter(|j| !s.flagged.contains(j)).collect();
    let runs: Vec<ClusterRun> = (0..restarts as u64)
        .into_par_iter()
        .map(|r| run_once(s, resolution, seed.wrapping_add(r), &live))
        .collect();
    let best = runs
        .into_iter()
        .reduce(|a, b| {
            if b.quality > a.quality + GAIN_EPS || ((b.quality - a.quality).abs() <= GAIN_EPS && b.labels < a.labels) {
                b
            } else {
                a
            }
        })
        .expect("restarts >= 1");

    let k = best.labels.iter().max().map_or(0, |x| x + 1);
    let mut clusters: Vec<SkillCluster> = (0..k)
        .map(|id| SkillCluster {
            id,
            members: Vec::new(),
            name: None,
        })
        .collect();
    for (j, &c) in best.labels.iter().enumerate() {
        clusters[c].members.push(s.vocab.skills[j].clone());
    }
    Ok(SkillClusterSet {
        clusters,
        resolution,
        seed,
        quality: best.quality,
        pass_quality: best.pass_quality,
    })
}

/// Names file: CSV `cluster_id,name` with a header row.
pub fn parse_names(text: &str) -> Result<BTreeMap<usize, String>, SkillnetError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let mut out = BTreeMap::new();
    for (n, row) in rdr.records().enumerate() {
        let row = row.map_err(|e| SkillnetError::Names(e.to_string()))?;
        let id = row
            .get(0)
            .and_then(|x| x.parse::<usize>().ok())
            .ok_or_else(|| SkillnetError::Names(format!("row {}: bad cluster id", n + 2)))?;
        let name = row.get(1).unwrap_or("").to_string();
        out.insert(id, name);
    }
    Ok(out)
}

/// Attaches names by cluster id. Returns warnings for ids not in the set.
pub fn apply_names(set: &mut SkillClusterSet, names: &BTreeMap<usize, String>) -> Vec<String> {
    let mut warnings = Vec::new();
    for (&id, name) in names {
        match set.clusters.iter_mut().find(|c| c.id == id) {
            Some(c) => c.name = Some(name.clone()),
            None => warnings.push(format!("names file refers to unknown cluster id {id}; ignored")),
        }
    }
    for w in &warnings {
        log::warn!("{w}");
    }
    warnings
}
