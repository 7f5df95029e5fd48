//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

use std::collections::{BTreeMap, BTreeSet};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use minilp::{ComparisonOp, OptimizationDirection, Problem};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use skillscope_cli::demo;
use skillscope_core::analyze::{Field, FrequencyTable};
use skillscope_core::corpus::{synth_corpus, PlantedPair, SkillMarginal, SynthSpec};
use skillscope_core::embed::{pairwise_distances, parse_stopwords, to_weighted_doc, wmd, DistanceMatrix, EmbeddingStore};
use skillscope_core::mine::{apriori, generate_rules, TransactionSet};
use skillscope_core::semgroup::{affinity_propagation, fold_counts, value_frequencies, APConfig, Preference, SemanticClustering};
use skillscope_core::skillnet::{
    build_matrix, cluster_skills, filter_skills, normalize_binary_rows, partition_quality, skill_similarity, SkillSimilarity,
    SkillVocab,
};
use skillscope_core::{Corpus, JobAd};
use skillscope_harvest::fixture::write_site;
use skillscope_harvest::{crawl, CrawlConfig};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        let holds: bool = $cond;
        if !holds {
            return Err(format!($($msg)+));
        }
    };
}

fn main() -> ExitCode {
    let criteria: [Criterion; 13] = [
        ("apriori matches exhaustive enumeration", apriori_oracle),
        ("rule statistic identities", rule_identities),
        ("planted rule recovery", planted_lift),
        ("row normalization", row_normalization),
        ("cosine closed form", cosine_closed_form),
        ("word mover's distance exactness", wmd_exactness),
        ("affinity propagation planted recovery", ap_planted),
        ("leader election and fold counting", leaders),
        ("skill threshold semantics", skill_threshold),
        ("skill clustering quality", clustering_quality),
        ("harvest fixture site", harvest),
        ("end-to-end determinism", end_to_end),
        ("output format", output_format),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            Err(format!("panicked: {msg}"))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS [{:>2}] {name} ({detail}; {secs:.2}s)", i + 1),
            Err(reason) => {
                failed += 1;
                println!("FAIL [{:>2}] {name}: {reason}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

fn universe(m: usize) -> SkillVocab {
    SkillVocab {
        skills: (0..m).map(|i| format!("s{i:02}")).collect(),
        occurrence: vec![0; m],
        min_occurrence: 1,
    }
}

fn random_transactions(rng: &mut ChaCha8Rng, m: usize, n: usize) -> TransactionSet {
    let p: Vec<f64> = (0..m).map(|_| rng.gen_range(0.05..0.6)).collect();
    let tx = (0..n)
        .map(|_| (0..m).filter(|&j| rng.gen::<f64>() < p[j]).collect())
        .collect();
    TransactionSet::from_ids(tx, universe(m))
}

/// Every itemset of size ≤ max_len with count/n ≥ min_support, by bitmask.
fn exhaustive(t: &TransactionSet, min_support: f64, max_len: usize) -> BTreeMap<Vec<usize>, usize> {
    let m = t.universe.len();
    let masks: Vec<u32> = t
        .transactions
        .iter()
        .map(|tx| tx.iter().fold(0u32, |acc, &i| acc | (1 << i)))
        .collect();
    let n = t.len() as f64;
    let mut out = BTreeMap::new();
    for set in 1u32..(1 << m) {
        if set.count_ones() as usize > max_len {
            continue;
        }
        let count = masks.iter().filter(|&&tx| tx & set == set).count();
        if count as f64 / n >= min_support - 1e-12 {
            out.insert((0..m).filter(|&i| set & (1 << i) != 0).collect(), count);
        }
    }
    out
}

fn apriori_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut elapsed = Duration::ZERO;
    let mut itemsets = 0;
    for case in 0..50 {
        let m = rng.gen_range(1..=12);
        let n = rng.gen_range(1..=500);
        let min_support = rng.gen_range(1..=20) as f64 / 100.0;
        let t = random_transactions(&mut rng, m, n);
        let start = Instant::now();
        let got = apriori(&t, min_support, m).map_err(|e| e.to_string())?;
        elapsed += start.elapsed();
        let got: BTreeMap<Vec<usize>, usize> = got.into_iter().map(|f| (f.items, f.count)).collect();
        ensure!(
            got == exhaustive(&t, min_support, m),
            "case {case} (m={m}, n={n}, support={min_support}) differs"
        );
        itemsets += got.len();
    }
    ensure!(elapsed.as_secs_f64() < 10.0, "mining took {elapsed:?}");
    Ok(format!("50 sets, {itemsets} itemsets, mining {:.3}s", elapsed.as_secs_f64()))
}

fn rule_identities() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut checked = 0;
    for _ in 0..60 {
        let m = rng.gen_range(2..=9);
        let n = rng.gen_range(20..=300);
        let t = random_transactions(&mut rng, m, n);
        let freq = apriori(&t, rng.gen_range(1..=15) as f64 / 100.0, 4).map_err(|e| e.to_string())?;
        let counts = exhaustive(&t, 0.0, m);
        let rules = generate_rules(&freq, 0.0).map_err(|e| e.to_string())?;
        let lift: BTreeMap<(Vec<usize>, Vec<usize>), f64> = rules
            .iter()
            .map(|r| ((r.antecedent.clone(), r.consequent.clone()), r.lift))
            .collect();
        for r in &rules {
            let supp_y = counts.get(&r.consequent).copied().unwrap_or(0) as f64 / n as f64;
            ensure!(
                (r.confidence - r.lift * supp_y).abs() <= 1e-12,
                "confidence {} vs lift·supp {}",
                r.confidence,
                r.lift * supp_y
            );
            let mirror = lift
                .get(&(r.consequent.clone(), r.antecedent.clone()))
                .ok_or("mirror rule missing")?;
            ensure!((r.lift - mirror).abs() <= 1e-12, "lift {} vs mirrored {mirror}", r.lift);
            checked += 1;
        }
    }
    Ok(format!("{checked} rules"))
}

fn planted_lift() -> Outcome {
    let m = |s: &str, p: f64| SkillMarginal { skill: s.into(), p };
    let spec = SynthSpec {
        n_ads: 1000,
        skills: vec![m("a", 0.4), m("b", 0.5), m("c", 0.4), m("d", 0.5)],
        pairs: vec![PlantedPair {
            a: "a".into(),
            b: "b".into(),
            joint: 0.3,
        }],
        ..SynthSpec::default()
    };
    let corpus = synth_corpus(&spec, 7).map_err(|e| e.to_string())?;
    let vocab = filter_skills(&corpus, 1).map_err(|e| e.to_string())?;
    let t = TransactionSet::from_corpus(&corpus, &vocab);
    let rules = generate_rules(&apriori(&t, 0.01, 2).map_err(|e| e.to_string())?, 0.0).map_err(|e| e.to_string())?;
    let lift = |x: &str, y: &str| -> Result<f64, String> {
        let (x, y) = (
            vocab.index_of(x).ok_or("skill missing")?,
            vocab.index_of(y).ok_or("skill missing")?,
        );
        rules
            .iter()
            .find(|r| r.antecedent == [x] && r.consequent == [y])
            .map(|r| r.lift)
            .ok_or_else(|| "rule missing".to_string())
    };
    let (ab, cd) = (lift("a", "b")?, lift("c", "d")?);
    ensure!((1.30..=1.70).contains(&ab), "planted lift {ab}");
    ensure!((0.85..=1.15).contains(&cd), "independent lift {cd}");
    Ok(format!("planted {ab:.3}, independent {cd:.3}"))
}

fn random_incidence(rng: &mut ChaCha8Rng, max_jobs: usize, max_skills: usize) -> (usize, Vec<Vec<usize>>) {
    let n = rng.gen_range(1..=max_jobs);
    let m = rng.gen_range(1..=max_skills);
    let density: f64 = rng.gen_range(0.02..0.5);
    (
        m,
        (0..n)
            .map(|_| (0..m).filter(|_| rng.gen::<f64>() < density).collect())
            .collect(),
    )
}

fn row_normalization() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let (m, rows) = random_incidence(&mut rng, 500, 100);
        let n = normalize_binary_rows(&rows, m);
        for (i, r) in rows.iter().enumerate() {
            if r.is_empty() {
                ensure!(n.zero_rows.contains(&i), "empty row {i} not flagged");
                continue;
            }
            let norm = n.rows[i].iter().map(|&(_, v)| v * v).sum::<f64>().sqrt();
            worst = worst.max((norm - 1.0).abs());
        }
    }
    ensure!(worst <= 1e-12, "row norm off by {worst:e}");
    Ok(format!("100 matrices, max deviation {worst:.1e}"))
}

fn corpus_from_rows(rows: &[Vec<usize>], m: usize) -> (Corpus, SkillVocab) {
    let names: Vec<String> = (0..m).map(|j| format!("s{j:03}")).collect();
    let ads = rows
        .iter()
        .enumerate()
        .map(|(i, r)| JobAd {
            id: i.to_string(),
            job_name: "x".into(),
            key_skills: r.iter().map(|&j| names[j].clone()).collect(),
            ..Default::default()
        })
        .collect();
    let vocab = SkillVocab {
        occurrence: (0..m).map(|j| rows.iter().filter(|r| r.contains(&j)).count()).collect(),
        skills: names,
        min_occurrence: 1,
    };
    (Corpus::new(ads, "t"), vocab)
}

fn cosine_closed_form() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let (m, rows) = random_incidence(&mut rng, 500, 100);
        let (corpus, vocab) = corpus_from_rows(&rows, m);
        let s = skill_similarity(&build_matrix(&corpus, &vocab));
        let mut c = vec![vec![0u64; m]; m];
        for r in &rows {
            for &j in r {
                for &k in r {
                    c[j][k] += 1;
                }
            }
        }
        for j in 0..m {
            for k in 0..m {
                let want = if c[j][j] == 0 || c[k][k] == 0 {
                    0.0
                } else {
                    c[j][k] as f64 / ((c[j][j] * c[k][k]) as f64).sqrt()
                };
                worst = worst.max((s.get(j, k) - want).abs());
                ensure!(s.get(j, k) == s.get(k, j), "asymmetric at ({j}, {k})");
            }
            if c[j][j] > 0 {
                ensure!((s.get(j, j) - 1.0).abs() <= 1e-12, "diagonal {} at {j}", s.get(j, j));
            }
        }
    }
    ensure!(worst <= 1e-10, "closed form off by {worst:e}");
    Ok(format!("100 matrices, max deviation {worst:.1e}"))
}

fn toy_store(seed: u64) -> EmbeddingStore {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut store = EmbeddingStore::new(5).expect("dimension");
    for i in 0..12 {
        let v: Vec<f32> = (0..5).map(|_| rng.gen_range(-2.0f32..2.0)).collect();
        store.insert(&format!("w{i}"), &v).expect("insert");
    }
    store
}

fn random_doc(rng: &mut ChaCha8Rng) -> Vec<String> {
    (0..rng.gen_range(1..=8))
        .map(|_| format!("w{}", rng.gen_range(0..12)))
        .collect()
}

fn nbow(tokens: &[String]) -> Vec<(String, f64)> {
    let mut counts: BTreeMap<&str, f64> = BTreeMap::new();
    for t in tokens {
        *counts.entry(t).or_insert(0.0) += 1.0;
    }
    counts
        .into_iter()
        .map(|(t, c)| (t.to_string(), c / tokens.len() as f64))
        .collect()
}

/// Transport cost as a real-valued linear program.
fn lp_transport(a: &[String], b: &[String], store: &EmbeddingStore) -> f64 {
    let euclid = |x: &[f32], y: &[f32]| {
        x.iter()
            .zip(y)
            .map(|(p, q)| (f64::from(*p) - f64::from(*q)).powi(2))
            .sum::<f64>()
            .sqrt()
    };
    let (pa, pb) = (nbow(a), nbow(b));
    let mut lp = Problem::new(OptimizationDirection::Minimize);
    let vars: Vec<Vec<_>> = pa
        .iter()
        .map(|(ti, _)| {
            pb.iter()
                .map(|(tj, _)| lp.add_var(euclid(store.get(ti).unwrap(), store.get(tj).unwrap()), (0.0, f64::INFINITY)))
                .collect()
        })
        .collect();
    for (i, (_, w)) in pa.iter().enumerate() {
        lp.add_constraint(vars[i].iter().map(|&v| (v, 1.0)).collect::<Vec<_>>(), ComparisonOp::Eq, *w);
    }
    for (j, (_, w)) in pb.iter().enumerate() {
        lp.add_constraint(vars.iter().map(|r| (r[j], 1.0)).collect::<Vec<_>>(), ComparisonOp::Eq, *w);
    }
    lp.solve().expect("feasible transport").objective()
}

fn doc_distance(a: &[String], b: &[String], store: &EmbeddingStore) -> Result<f64, String> {
    wmd(&to_weighted_doc(a, store).0, &to_weighted_doc(b, store).0, store).map_err(|e| e.to_string())
}

fn wmd_exactness() -> Outcome {
    let store = toy_store(11);
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let (a, b) = (random_doc(&mut rng), random_doc(&mut rng));
        worst = worst.max((doc_distance(&a, &b, &store)? - lp_transport(&a, &b, &store)).abs());
    }
    ensure!(worst <= 1e-9, "oracle gap {worst:e}");
    let docs: Vec<Vec<String>> = (0..60).map(|_| random_doc(&mut rng)).collect();
    for d in &docs {
        ensure!(doc_distance(d, d, &store)? == 0.0, "nonzero self distance");
    }
    for _ in 0..1000 {
        let pick = |rng: &mut ChaCha8Rng| &docs[rng.gen_range(0..docs.len())];
        let (x, y, z) = (pick(&mut rng), pick(&mut rng), pick(&mut rng));
        let xy = doc_distance(x, y, &store)?;
        ensure!(xy == doc_distance(y, x, &store)?, "asymmetric distance");
        let (xz, zy) = (doc_distance(x, z, &store)?, doc_distance(z, y, &store)?);
        ensure!(xy <= xz + zy + 1e-9, "triangle violated: {xy} > {xz} + {zy}");
    }
    Ok(format!("200 pairs, max gap {worst:.1e}; 1000 triples"))
}

fn planted_blocks(sizes: &[usize], rng: &mut ChaCha8Rng) -> (DistanceMatrix, BTreeSet<BTreeSet<String>>) {
    let n: usize = sizes.iter().sum();
    let mut block: Vec<usize> = sizes.iter().enumerate().flat_map(|(b, &s)| vec![b; s]).collect();
    block.shuffle(rng);
    let labels: Vec<String> = (0..n).map(|i| format!("t{i:03}")).collect();
    let mut values = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            if i != j {
                values[i * n + j] = if block[i] == block[j] { 0.1 } else { 10.0 };
            }
        }
    }
    let mut groups: BTreeMap<usize, BTreeSet<String>> = BTreeMap::new();
    for (i, &b) in block.iter().enumerate() {
        groups.entry(b).or_default().insert(labels[i].clone());
    }
    (
        DistanceMatrix::new(labels, values).expect("valid matrix"),
        groups.into_values().collect(),
    )
}

fn ap_invariants(c: &SemanticClustering, d: &DistanceMatrix) -> Result<(), String> {
    let covered: Vec<&String> = c.clusters.iter().flat_map(|cl| cl.members.iter()).collect();
    let labels: BTreeSet<&String> = d.labels().iter().collect();
    ensure!(
        covered.len() == labels.len(),
        "labels covered {} times for {} labels",
        covered.len(),
        labels.len()
    );
    ensure!(
        covered.into_iter().collect::<BTreeSet<_>>() == labels,
        "partition does not cover the labels"
    );
    for (k, cl) in c.clusters.iter().enumerate() {
        ensure!(
            cl.members.contains(&cl.exemplar),
            "exemplar {} outside its cluster",
            cl.exemplar
        );
        ensure!(
            cl.members.iter().all(|m| c.assignments[m] == k),
            "assignment mismatch in cluster {k}"
        );
    }
    Ok(())
}

fn ap_planted() -> Outcome {
    let prefs = [Preference::Median, Preference::Fixed(-1.0), Preference::Fixed(-5.0)];
    for seed in 0..20u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let k = if seed % 2 == 0 { 2 } else { 3 };
        let sizes: Vec<usize> = (0..k).map(|_| rng.gen_range(5..=20)).collect();
        let (d, want) = planted_blocks(&sizes, &mut rng);
        let config = APConfig {
            preference: prefs[seed as usize % prefs.len()],
            ..APConfig::default()
        };
        let c = affinity_propagation(&d, &config).map_err(|e| e.to_string())?;
        ap_invariants(&c, &d)?;
        let got: BTreeSet<BTreeSet<String>> = c.clusters.iter().map(|cl| cl.members.iter().cloned().collect()).collect();
        ensure!(
            got == want,
            "seed {seed} sizes {sizes:?}: {} clusters instead of {k}",
            got.len()
        );
    }
    let mut unconverged = 0;
    for seed in 0..40u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
        let n = rng.gen_range(2..25);
        let pts: Vec<(f64, f64)> = (0..n).map(|_| (rng.gen_range(0.0..10.0), rng.gen_range(0.0..10.0))).collect();
        let values = (0..n * n)
            .map(|x| {
                let (a, b) = (pts[x / n], pts[x % n]);
                ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt()
            })
            .collect();
        let d = DistanceMatrix::new((0..n).map(|i| format!("p{i:02}")).collect(), values).map_err(|e| e.to_string())?;
        let config = APConfig {
            damping: rng.gen_range(0.5..0.95),
            max_iterations: rng.gen_range(6..40),
            convergence_window: 5,
            ..APConfig::default()
        };
        let c = affinity_propagation(&d, &config).map_err(|e| e.to_string())?;
        ap_invariants(&c, &d)?;
        unconverged += usize::from(!c.converged);
    }
    Ok(format!(
        "20 planted runs; invariants on 40 short runs, {unconverged} unconverged"
    ))
}

fn leaders() -> Outcome {
    let store = demo::embeddings();
    let stop = parse_stopwords(demo::STOPWORDS);
    let groups = demo::title_groups();
    for seed in 0..5u64 {
        let corpus = synth_corpus(&demo::spec(), seed).map_err(|e| e.to_string())?;
        let titles: Vec<String> = corpus.iter().map(|ad| ad.normalized_title()).collect();
        let distances = pairwise_distances(&titles, &store, &stop);
        let mut c = affinity_propagation(&distances.matrix, &APConfig::default()).map_err(|e| e.to_string())?;
        let freq = value_frequencies(&titles);
        c.assign_leaders(&freq).map_err(|e| e.to_string())?;
        let folded = fold_counts(&titles, &c).map_err(|e| e.to_string())?;
        let mut want = BTreeMap::new();
        for g in &groups {
            let size = titles.iter().filter(|t| g.contains(&t.as_str())).count() as u64;
            if size == 0 {
                continue;
            }
            // highest count, then smallest label
            let leader = g
                .iter()
                .filter(|v| freq.contains_key(**v))
                .max_by(|a, b| freq[**a].cmp(&freq[**b]).then_with(|| b.cmp(a)))
                .expect("group present");
            want.insert(leader.to_string(), size);
        }
        ensure!(folded == want, "seed {seed}: folded {folded:?}, planted {want:?}");
    }
    // equal frequencies inside a cluster
    let labels: Vec<String> = ["beta dev", "alpha dev", "zeta qa", "eta qa"].map(String::from).to_vec();
    let block = [0, 0, 1, 1];
    let values = (0..16)
        .map(|x| {
            if x / 4 == x % 4 {
                0.0
            } else if block[x / 4] == block[x % 4] {
                0.1
            } else {
                10.0
            }
        })
        .collect();
    let d = DistanceMatrix::new(labels, values).map_err(|e| e.to_string())?;
    let mut c = affinity_propagation(
        &d,
        &APConfig {
            preference: Preference::Fixed(-1.0),
            ..APConfig::default()
        },
    )
    .map_err(|e| e.to_string())?;
    let values: Vec<&str> = vec!["beta dev", "alpha dev", "zeta qa", "eta qa", "beta dev", "alpha dev"];
    c.assign_leaders(&value_frequencies(&values)).map_err(|e| e.to_string())?;
    let folded = fold_counts(&values, &c).map_err(|e| e.to_string())?;
    let want = BTreeMap::from([("alpha dev".to_string(), 4), ("eta qa".to_string(), 2)]);
    ensure!(folded == want, "tie case folded {folded:?}");
    Ok("5 seeds, 6 planted groups each; tie case".into())
}

fn skill_threshold() -> Outcome {
    let spec = SynthSpec {
        n_ads: 400,
        skills: (0..30)
            .map(|i| SkillMarginal {
                skill: format!("skill {i:02}"),
                p: 0.01 + 0.004 * i as f64,
            })
            .collect(),
        ..SynthSpec::default()
    };
    let mut kept = Vec::new();
    for seed in 0..5 {
        let corpus = synth_corpus(&spec, seed).map_err(|e| e.to_string())?;
        let mut counts: BTreeMap<String, usize> = BTreeMap::new();
        for ad in &corpus {
            for s in ad.key_skills.iter().collect::<BTreeSet<_>>() {
                *counts.entry(s.clone()).or_insert(0) += 1;
            }
        }
        let want: Vec<String> = counts.iter().filter(|(_, &c)| c >= 20).map(|(s, _)| s.clone()).collect();
        let vocab = filter_skills(&corpus, 20).map_err(|e| e.to_string())?;
        ensure!(
            vocab.skills == want,
            "seed {seed}: kept {:?}, brute force {want:?}",
            vocab.skills
        );
        ensure!(
            vocab.skills.iter().zip(&vocab.occurrence).all(|(s, c)| counts[s] == *c),
            "seed {seed}: occurrence mismatch"
        );
        kept.push(want.len());
    }
    Ok(format!("kept {kept:?} of 30 skills"))
}

fn dense_similarity(m: usize, f: impl Fn(usize, usize) -> f64) -> SkillSimilarity {
    let vocab = SkillVocab {
        skills: (0..m).map(|i| format!("k{i}")).collect(),
        occurrence: vec![1; m],
        min_occurrence: 1,
    };
    let values = (0..m * m)
        .map(|x| {
            if x / m == x % m {
                1.0
            } else {
                f((x / m).min(x % m), (x / m).max(x % m))
            }
        })
        .collect();
    SkillSimilarity::from_dense(vocab, values)
}

fn all_partitions(m: usize) -> Vec<Vec<usize>> {
    fn rec(prefix: &mut Vec<usize>, m: usize, out: &mut Vec<Vec<usize>>) {
        if prefix.len() == m {
            out.push(prefix.clone());
            return;
        }
        for l in 0..=prefix.iter().max().map_or(0, |x| x + 1) {
            prefix.push(l);
            rec(prefix, m, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::new(), m, &mut out);
    out
}

fn restricted_growth(labels: &[usize]) -> Vec<usize> {
    let mut map = BTreeMap::new();
    labels
        .iter()
        .map(|x| {
            let next = map.len();
            *map.entry(*x).or_insert(next)
        })
        .collect()
}

fn clustering_quality() -> Outcome {
    let mut matrices = 0;
    for m in 2..=8 {
        for split in 1..m {
            let s = dense_similarity(m, |j, k| if (j < split) == (k < split) { 1.0 } else { 0.0 });
            let parts = all_partitions(m);
            let qs: Vec<f64> = parts.iter().map(|p| partition_quality(&s, p, 0.5)).collect();
            let best = qs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let set = cluster_skills(&s, 0.5, 42, 10).map_err(|e| e.to_string())?;
            let mem = set.membership();
            let got = restricted_growth(&s.vocab.skills.iter().map(|k| mem[k.as_str()]).collect::<Vec<_>>());
            let optimal: Vec<&Vec<usize>> = parts
                .iter()
                .zip(&qs)
                .filter(|(_, q)| (*q - best).abs() < 1e-9)
                .map(|(p, _)| p)
                .collect();
            ensure!(
                optimal.contains(&&got),
                "m={m} split={split}: {got:?} is not optimal (Q {} vs {best})",
                set.quality
            );
            ensure!(
                set.pass_quality.windows(2).all(|w| w[1] >= w[0] - 1e-12),
                "Q decreased: {:?}",
                set.pass_quality
            );
            matrices += 1;
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    for _ in 0..100 {
        let m = rng.gen_range(1..30);
        let vals: Vec<f64> = (0..m * m)
            .map(|_| {
                if rng.gen::<f64>() < 0.4 {
                    rng.gen_range(0.0..1.0)
                } else {
                    0.0
                }
            })
            .collect();
        let s = dense_similarity(m, |j, k| vals[j * m + k]);
        let set = cluster_skills(&s, s.mean_off_diagonal().max(1e-3), rng.gen(), 3).map_err(|e| e.to_string())?;
        ensure!(
            set.pass_quality.windows(2).all(|w| w[1] >= w[0] - 1e-12),
            "Q decreased: {:?}",
            set.pass_quality
        );
        matrices += 1;
    }
    Ok(format!("{matrices} matrices"))
}

fn harvest() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let spec = SynthSpec {
        n_ads: 100,
        skills: vec![
            SkillMarginal {
                skill: "java".into(),
                p: 0.5,
            },
            SkillMarginal {
                skill: "sql".into(),
                p: 0.4,
            },
        ],
        ..SynthSpec::default()
    };
    let planted = synth_corpus(&spec, 21).map_err(|e| e.to_string())?.ads;
    write_site(dir.path(), "software engineer", &planted, 20).map_err(|e| e.to_string())?;
    let config = |workers, rate| CrawlConfig {
        root_url: format!("file://{}/", dir.path().display()),
        key_phrase: "software engineer".into(),
        max_workers: workers,
        max_requests_per_worker_per_sec: rate,
        ..CrawlConfig::default()
    };
    let out = crawl(&config(4, 20.0)).map_err(|e| e.to_string())?;
    ensure!(out.documents.len() == 100, "{} documents", out.documents.len());
    ensure!(out.documents == planted, "documents differ from the site's ads");
    ensure!(
        out.stats.duplicate_fetches() == 0,
        "{} duplicate fetches",
        out.stats.duplicate_fetches()
    );
    ensure!(
        out.stats.politeness_holds(),
        "{} requests in one second, cap {}",
        out.stats.max_in_any_window(),
        out.stats.rate_cap()
    );
    let urls = |o: &skillscope_harvest::CrawlOutput| o.stats.requests.iter().map(|r| r.url.clone()).collect::<Vec<_>>();
    let single = config(1, 500.0);
    let (a, b) = (
        crawl(&single).map_err(|e| e.to_string())?,
        crawl(&single).map_err(|e| e.to_string())?,
    );
    ensure!(urls(&a) == urls(&b), "single-worker request order differs between runs");
    ensure!(a.documents == planted, "single-worker documents differ");
    Ok(format!(
        "{} requests, peak {} per second under cap {}",
        out.stats.request_count(),
        out.stats.max_in_any_window(),
        out.stats.rate_cap()
    ))
}

fn tree(root: &Path) -> BTreeMap<String, Vec<u8>> {
    fn walk(root: &Path, dir: &Path, out: &mut BTreeMap<String, Vec<u8>>) {
        for entry in std::fs::read_dir(dir).expect("readable dir") {
            let path = entry.expect("dir entry").path();
            if path.is_dir() {
                walk(root, &path, out);
            } else {
                let rel = path.strip_prefix(root).expect("under root").display().to_string();
                out.insert(rel, std::fs::read(&path).expect("readable file"));
            }
        }
    }
    let mut out = BTreeMap::new();
    walk(root, root, &mut out);
    out
}

fn run_demo(inputs: &Path, out: &Path) -> Result<Duration, String> {
    let start = Instant::now();
    let status = Command::new(env!("CARGO_BIN_EXE_skillscope"))
        .arg("--config")
        .arg(inputs.join("config.toml"))
        .arg("--out")
        .arg(out)
        .arg("run")
        .status()
        .map_err(|e| e.to_string())?;
    ensure!(status.success(), "pipeline exited with {status}");
    Ok(start.elapsed())
}

fn end_to_end() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let inputs = dir.path().join("inputs");
    demo::write_demo(&inputs).map_err(|e| e.to_string())?;
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let ta = run_demo(&inputs, &a)?;
    let tb = run_demo(&inputs, &b)?;
    let (ra, rb) = (tree(&a), tree(&b));
    ensure!(ra.contains_key("report.json"), "report.json missing");
    let keys = |t: &BTreeMap<String, Vec<u8>>| t.keys().cloned().collect::<BTreeSet<_>>();
    ensure!(keys(&ra) == keys(&rb), "file sets differ");
    let differing: Vec<&String> = ra.iter().filter(|(k, v)| rb[*k] != **v).map(|(k, _)| k).collect();
    ensure!(differing.is_empty(), "files differ: {differing:?}");
    let slowest = ta.max(tb);
    ensure!(slowest.as_secs_f64() < 60.0, "run took {slowest:?}");
    Ok(format!(
        "{} files identical, slowest run {:.2}s",
        ra.len(),
        slowest.as_secs_f64()
    ))
}

/// `lhs → {items} x.xxx`, where lhs is one item or a parenthesized list.
fn recommendation_shape(line: &str) -> Result<bool, String> {
    let (lhs, rest) = line.split_once(" → ").ok_or_else(|| format!("no arrow in {line:?}"))?;
    let (set, lift) = rest.rsplit_once(' ').ok_or_else(|| format!("no lift in {line:?}"))?;
    ensure!(
        set.starts_with('{') && set.ends_with('}') && set.len() > 2,
        "consequent not braced in {line:?}"
    );
    let (whole, frac) = lift.split_once('.').ok_or_else(|| format!("lift {lift:?} has no decimals"))?;
    ensure!(
        !whole.is_empty()
            && whole.bytes().all(|c| c.is_ascii_digit())
            && frac.len() == 3
            && frac.bytes().all(|c| c.is_ascii_digit()),
        "lift {lift:?} not printed to three decimals"
    );
    let multi = lhs.starts_with('(') && lhs.ends_with(')') && lhs.contains(", ");
    ensure!(
        multi || !lhs.contains(", "),
        "multi-item antecedent not parenthesized in {line:?}"
    );
    Ok(multi)
}

fn output_format() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let inputs = dir.path().join("inputs");
    demo::write_demo(&inputs).map_err(|e| e.to_string())?;
    let out = dir.path().join("out");
    run_demo(&inputs, &out)?;
    let recs = std::fs::read_to_string(out.join("recommendations.txt")).map_err(|e| e.to_string())?;
    let lines: Vec<&str> = recs.lines().filter(|l| !l.trim().is_empty()).collect();
    ensure!(!lines.is_empty(), "no recommendations rendered");
    let mut multi = 0;
    for l in &lines {
        multi += usize::from(recommendation_shape(l)?);
    }
    ensure!(multi > 0, "no multi-item antecedent rendered");
    for field in [Field::JobLeader, Field::Skill, Field::Industry, Field::RoleCategory] {
        let csv =
            std::fs::read_to_string(out.join("tables").join(format!("{}.csv", field.as_str()))).map_err(|e| e.to_string())?;
        ensure!(
            csv.lines().next() == Some("rank,label,count,share"),
            "{} header {:?}",
            field.as_str(),
            csv.lines().next()
        );
        for (i, row) in csv.lines().skip(1).enumerate() {
            ensure!(
                row.split(',').next() == Some((i + 1).to_string().as_str()),
                "{} rank column broken",
                field.as_str()
            );
        }
    }
    let text = std::fs::read_to_string(out.join("tables.txt")).map_err(|e| e.to_string())?;
    let header = text
        .lines()
        .find(|l| l.starts_with("Rank"))
        .ok_or("rendered table has no header")?;
    ensure!(
        header.split_whitespace().collect::<Vec<_>>() == ["Rank", "Label", "Count"],
        "header {header:?}"
    );
    let rendered = FrequencyTable::from_counts(
        Field::Skill,
        BTreeMap::from([("python".into(), 3687), ("java script".into(), 4783)]),
    )
    .render(10);
    ensure!(
        rendered.lines().nth(1).map(|l| l.split_whitespace().collect::<Vec<_>>()) == Some(vec!["1", "java", "script", "4783"]),
        "rendered row {:?}",
        rendered.lines().nth(1)
    );
    Ok(format!(
        "{} recommendation lines, {multi} with compound antecedents",
        lines.len()
    ))
}
