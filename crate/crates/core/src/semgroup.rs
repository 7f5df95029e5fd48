//! Affinity propagation over a distance matrix, leader election, and
//! folding of value counts onto cluster leaders.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::embed::DistanceMatrix;

#[derive(Debug, Error, PartialEq)]
pub enum SemgroupError {
    #[error("invalid affinity propagation config: {0}")]
    Config(String),
    #[error("distance matrix contains NaN at ({0}, {1})")]
    NaN(usize, usize),
    #[error("messages became non-finite at iteration {0}")]
    Diverged(usize),
    #[error("cannot elect a leader for an empty cluster")]
    EmptyCluster,
    #[error("value {0:?} is not assigned to any cluster")]
    Unassigned(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preference {
    /// Median of the off-diagonal similarities.
    Median,
    Fixed(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct APConfig {
    pub damping: f64,
    pub max_iterations: usize,
    pub convergence_window: usize,
    pub preference: Preference,
}

impl Default for APConfig {
    fn default() -> Self {
        APConfig {
            damping: 0.7,
            max_iterations: 400,
            convergence_window: 30,
            preference: Preference::Median,
        }
    }
}

impl APConfig {
    pub fn validate(&self) -> Result<(), SemgroupError> {
        if !(0.5..1.0).contains(&self.damping) {
            return Err(SemgroupError::Config(format!("damping {} outside [0.5, 1)", self.damping)));
        }
        if self.max_iterations == 0 {
            return Err(SemgroupError::Config("max_iterations must be positive".into()));
        }
        if self.convergence_window == 0 || self.convergence_window >= self.max_iterations {
            return Err(SemgroupError::Config(format!(
                "convergence_window {} must be in [1, max_iterations)",
                self.convergence_window
            )));
        }
        if let Preference::Fixed(p) = self.preference {
            if !p.is_finite() {
                return Err(SemgroupError::Config("preference must be finite".into()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValueCluster {
    pub exemplar: String,
    pub members: Vec<String>,
    pub leader: Option<String>,
}

/// Partition of a label set into exemplar-led clusters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SemanticClustering {
    pub clusters: Vec<ValueCluster>,
    pub assignments: BTreeMap<String, usize>,
    pub converged: bool,
    pub iterations: usize,
    pub preference: f64,
}

impl SemanticClustering {
    fn from_labels(labels: &[String], exemplar_of: &[usize], converged: bool, iterations: usize, preference: f64) -> Self {
        let mut order: Vec<usize> = exemplar_of.to_vec();
        order.sort_unstable();
        order.dedup();
        let cluster_of: BTreeMap<usize, usize> = order.iter().enumerate().map(|(c, &e)| (e, c)).collect();
        let mut clusters: Vec<ValueCluster> = order
            .iter()
            .map(|&e| ValueCluster {
                exemplar: labels[e].clone(),
                members: Vec::new(),
                leader: None,
            })
            .collect();
        let mut assignments = BTreeMap::new();
        for (i, &e) in exemplar_of.iter().enumerate() {
            let c = cluster_of[&e];
            clusters[c].members.push(labels[i].clone());
            assignments.insert(labels[i].clone(), c);
        }
        SemanticClustering {
            clusters,
            assignments,
            converged,
            iterations,
            preference,
        }
    }

    pub fn len(&self) -> usize {
        self.clusters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clusters.is_empty()
    }

    /// Leader of the cluster holding `value`, if both exist.
    pub fn leader_of(&self, value: &str) -> Option<&str> {
        let c = *self.assignments.get(value)?;
        self.clusters[c].leader.as_deref()
    }

    /// Elects every cluster's leader from `frequency`.
    pub fn assign_leaders(&mut self, frequency: &BTreeMap<String, u64>) -> Result<(), SemgroupError> {
        for c in &mut self.clusters {
            c.leader = Some(elect_leader(&c.members, frequency)?);
        }
        Ok(())
    }

    /// Two-column audit CSV: value, leader (exemplar when no leader is set).
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["value", "leader"]).expect("in-memory write");
        for (value, &c) in &self.assignments {
            let cl = &self.clusters[c];
            let leader = cl.leader.as_deref().unwrap_or(&cl.exemplar);
            w.write_record([value.as_str(), leader]).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("flush")).expect("utf8")
    }
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(|a, b| a.total_cmp(b));
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}

fn argmax_first(values: impl Iterator<Item = (usize, f64)>) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (k, v) in values {
        if best.is_none_or(|(_, b)| v > b) {
            best = Some((k, v));
        }
    }
    best.map(|(k, _)| k)
}

/// Clusters the labels of `d` by affinity propagation on `s = -d`.
///
/// Labels at distance exactly 0 from each other are the same point: they
/// are collapsed (transitively) onto the first label of their class before
/// message passing and share its cluster afterwards. Identical points would
/// otherwise split each other's responsibility so that none of them can
/// become an exemplar. The median preference is taken over the collapsed
/// points.
///
/// Points are exemplars when `r(k,k) + a(k,k) > 0`; the run converges once
/// that set is non-empty and unchanged for `convergence_window` sweeps.
/// Every other point joins the exemplar maximizing `a(i,k) + r(i,k)`, with
/// ties going to the lower index. Self-similarities get a relative offset
/// of `1e-9 · k / n` of the similarity range so that exchangeable points do
/// not oscillate; lower-indexed (lexicographically smaller) labels are
/// marginally preferred as exemplars.
pub fn affinity_propagation(d: &DistanceMatrix, config: &APConfig) -> Result<SemanticClustering, SemgroupError> {
    config.validate()?;
    let n = d.len();
    let labels = d.labels();
    for i in 0..n {
        for j in 0..n {
            if d.get(i, j).is_nan() {
                return Err(SemgroupError::NaN(i, j));
            }
        }
    }
    if n == 0 {
        return Ok(SemanticClustering::from_labels(labels, &[], true, 0, 0.0));
    }
    let class = zero_distance_classes(d);
    let reps: Vec<usize> = (0..n).filter(|&i| class[i] == i).collect();
    if reps.len() < n {
        let sub_labels: Vec<String> = reps.iter().map(|&i| labels[i].clone()).collect();
        let sub_values: Vec<f64> = reps.iter().flat_map(|&i| reps.iter().map(move |&j| d.get(i, j))).collect();
        let sub = DistanceMatrix::new(sub_labels, sub_values).map_err(|e| SemgroupError::Config(e.to_string()))?;
        let inner = affinity_propagation(&sub, config)?;
        let position: BTreeMap<&str, usize> = labels.iter().enumerate().map(|(i, l)| (l.as_str(), i)).collect();
        let exemplar_of: Vec<usize> = (0..n)
            .map(|i| {
                let rep = &labels[class[i]];
                let c = inner.assignments[rep];
                position[inner.clusters[c].exemplar.as_str()]
            })
            .collect();
        return Ok(SemanticClustering::from_labels(
            labels,
            &exemplar_of,
            inner.converged,
            inner.iterations,
            inner.preference,
        ));
    }
    if n == 1 {
        let p = match config.preference {
            Preference::Fixed(p) => p,
            Preference::Median => 0.0,
        };
        return Ok(SemanticClustering::from_labels(labels, &[0], true, 0, p));
    }

    let off: Vec<f64> = (0..n)
        .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
        .map(|(i, j)| -d.get(i, j))
        .collect();
    let preference = match config.preference {
        Preference::Median => median(off.clone()),
        Preference::Fixed(p) => p,
    };
    let lo = off.iter().copied().fold(preference, f64::min);
    let hi = off.iter().copied().fold(preference, f64::max);
    if hi == lo {
        // every similarity equal: one cluster under the smallest label
        return Ok(SemanticClustering::from_labels(labels, &vec![0; n], true, 0, preference));
    }

    let mut s = vec![0.0; n * n];
    for i in 0..n {
        for k in 0..n {
            s[i * n + k] = if i == k {
                preference - 1e-9 * (hi - lo) * (i as f64) / (n as f64)
            } else {
                -d.get(i, k)
            };
        }
    }

    let lambda = config.damping;
    let mut r = vec![0.0; n * n];
    let mut a = vec![0.0; n * n];
    let mut last_exemplars: Vec<usize> = Vec::new();
    let mut stable = 0usize;
    let mut converged = false;
    let mut iterations = 0;

    for it in 0..config.max_iterations {
        iterations = it + 1;
        // responsibilities
        for i in 0..n {
            let row = i * n;
            let (mut first, mut second, mut arg) = (f64::NEG_INFINITY, f64::NEG_INFINITY, 0);
            for k in 0..n {
                let v = a[row + k] + s[row + k];
                if v > first {
                    second = first;
                    first = v;
                    arg = k;
                } else if v > second {
                    second = v;
                }
            }
            for k in 0..n {
                let competitor = if k == arg { second } else { first };
                let fresh = s[row + k] - competitor;
                r[row + k] = lambda * r[row + k] + (1.0 - lambda) * fresh;
            }
        }
        // availabilities
        for k in 0..n {
            let mut pos_sum = 0.0;
            for i in 0..n {
                let v = r[i * n + k];
                if i == k || v > 0.0 {
                    pos_sum += v;
                }
            }
            for i in 0..n {
                let rik = r[i * n + k];
                let own = if i == k { rik } else { rik.max(0.0) };
                let fresh = pos_sum - own;
                let fresh = if i == k { fresh } else { fresh.min(0.0) };
                a[i * n + k] = lambda * a[i * n + k] + (1.0 - lambda) * fresh;
            }
        }
        if r.iter().chain(a.iter()).any(|x| !x.is_finite()) {
            return Err(SemgroupError::Diverged(iterations));
        }

        let exemplars: Vec<usize> = (0..n).filter(|&k| r[k * n + k] + a[k * n + k] > 0.0).collect();
        if exemplars == last_exemplars {
            stable += 1;
        } else {
            stable = 1;
            last_exemplars = exemplars;
        }
        if !last_exemplars.is_empty() && stable >= config.convergence_window {
            converged = true;
            break;
        }
    }

    let criterion = |i: usize, k: usize| a[i * n + k] + r[i * n + k];
    let mut exemplars = last_exemplars;
    if exemplars.is_empty() {
        // fall back to points that pick themselves under the criterion
        exemplars = (0..n)
            .filter(|&i| argmax_first((0..n).map(|k| (k, criterion(i, k)))) == Some(i))
            .collect();
    }
    if exemplars.is_empty() {
        let best = argmax_first((0..n).map(|k| (k, criterion(k, k)))).expect("n > 0");
        exemplars.push(best);
    }
    let exemplar_of: Vec<usize> = (0..n)
        .map(|i| {
            if exemplars.binary_search(&i).is_ok() {
                i
            } else {
                argmax_first(exemplars.iter().map(|&k| (k, criterion(i, k)))).expect("non-empty")
            }
        })
        .collect();
    Ok(SemanticClustering::from_labels(
        labels,
        &exemplar_of,
        converged,
        iterations,
        preference,
    ))
}

/// For each point, the smallest index reachable from it through pairs at
/// distance exactly 0.
fn zero_distance_classes(d: &DistanceMatrix) -> Vec<usize> {
    let n = d.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn root(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for i in 0..n {
        for j in i + 1..n {
            if d.get(i, j) == 0.0 {
                let (a, b) = (root(&mut parent, i), root(&mut parent, j));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    (0..n).map(|i| root(&mut parent, i)).collect()
}

/// The member with the highest frequency; ties go to the smallest label.
pub fn elect_leader(members: &[String], frequency: &BTreeMap<String, u64>) -> Result<String, SemgroupError> {
    let mut best: Option<(&String, u64)> = None;
    for m in members {
        let f = frequency.get(m).copied().unwrap_or(0);
        best = match best {
            Some((bm, bf)) if bf > f || (bf == f && bm <= m) => Some((bm, bf)),
            _ => Some((m, f)),
        };
    }
    best.map(|(m, _)| m.clone()).ok_or(SemgroupError::EmptyCluster)
}

/// Counts `values`, crediting each occurrence to its cluster's leader (or
/// exemplar if leaders were not elected).
pub fn fold_counts<S: AsRef<str>>(values: &[S], clustering: &SemanticClustering) -> Result<BTreeMap<String, u64>, SemgroupError> {
    let mut out = BTreeMap::new();
    for v in values {
        let v = v.as_ref();
        let c = *clustering
            .assignments
            .get(v)
            .ok_or_else(|| SemgroupError::Unassigned(v.to_string()))?;
        let cl = &clustering.clusters[c];
        let leader = cl.leader.as_ref().unwrap_or(&cl.exemplar);
        *out.entry(leader.clone()).or_insert(0) += 1;
    }
    Ok(out)
}

/// Occurrence count of every distinct value.
pub fn value_frequencies<S: AsRef<str>>(values: &[S]) -> BTreeMap<String, u64> {
    let mut out = BTreeMap::new();
    for v in values {
        *out.entry(v.as_ref().to_string()).or_insert(0) += 1;
    }
    out
}
