use std::collections::BTreeMap;

use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use skillscope_core::analyze::{cluster_distribution, frequency_table, geo_aggregate, geocode, Field, Gazetteer};
use skillscope_core::corpus::{synth_corpus, SkillMarginal, SynthSpec, Weighted};
use skillscope_core::skillnet::{SkillCluster, SkillClusterSet};
use skillscope_core::Corpus;

const GAZ: &str = "name,lat,lon,region\nBangalore,12.9716,77.5946,Karnataka\nMumbai,19.076,72.8777,Maharashtra\nPune,18.5204,73.8567,Maharashtra\nDelhi,28.7041,77.1025,Delhi\n";

fn spec(n: usize) -> SynthSpec {
    SynthSpec {
        n_ads: n,
        skills: ["java", "sql", "php", "html", "python"]
            .iter()
            .enumerate()
            .map(|(i, s)| SkillMarginal {
                skill: s.to_string(),
                p: 0.15 + 0.1 * i as f64,
            })
            .collect(),
        cities: [("Bangalore", 0.4), ("Mumbai", 0.3), ("Pune", 0.2), ("Atlantis", 0.1)]
            .iter()
            .map(|(c, w)| Weighted {
                value: c.to_string(),
                weight: *w,
            })
            .collect(),
        second_city_p: 0.2,
        industries: [("IT", 0.7), ("Banking", 0.3)]
            .iter()
            .map(|(c, w)| Weighted {
                value: c.to_string(),
                weight: *w,
            })
            .collect(),
        ..SynthSpec::default()
    }
}

fn clusters() -> SkillClusterSet {
    SkillClusterSet {
        clusters: vec![
            SkillCluster {
                id: 0,
                members: vec!["java".into(), "sql".into()],
                name: Some("Backend".into()),
            },
            SkillCluster {
                id: 1,
                members: vec!["html".into(), "php".into()],
                name: Some("Web".into()),
            },
            SkillCluster {
                id: 2,
                members: vec!["python".into()],
                name: None,
            },
        ],
        resolution: 0.5,
        seed: 0,
        quality: 0.0,
        pass_quality: vec![],
    }
}

#[test]
fn skill_table_matches_count_script() {
    let corpus = synth_corpus(&spec(500), 3).unwrap();
    let mut want: BTreeMap<String, u64> = BTreeMap::new();
    for ad in &corpus {
        for s in &ad.key_skills {
            *want.entry(s.clone()).or_insert(0) += 1;
        }
    }
    let t = frequency_table(&corpus, Field::Skill, None).unwrap();
    let got: BTreeMap<String, u64> = t.rows.iter().map(|r| (r.label.clone(), r.count)).collect();
    assert_eq!(got, want);
    for w in t.rows.windows(2) {
        assert!(w[0].count > w[1].count || (w[0].count == w[1].count && w[0].label < w[1].label));
    }
}

#[test]
fn distribution_matches_oracle() {
    let corpus = synth_corpus(&spec(400), 5).unwrap();
    let cs = clusters();
    let of = |s: &str| match s {
        "java" | "sql" => Some("Backend"),
        "html" | "php" => Some("Web"),
        "python" => Some("cluster-2"),
        _ => None,
    };
    let mut want: BTreeMap<&str, u64> = BTreeMap::new();
    for ad in &corpus {
        let mut hit: Vec<&str> = ad.key_skills.iter().filter_map(|s| of(s)).collect();
        hit.sort();
        hit.dedup();
        for h in hit {
            *want.entry(h).or_insert(0) += 1;
        }
    }
    let d = cluster_distribution(&corpus, &cs, None);
    let got: BTreeMap<&str, u64> = d.clusters.iter().map(|(k, v)| (k.as_str(), v.count)).collect();
    assert_eq!(got, want);
    let total: f64 = d.clusters.values().map(|v| v.share).sum();
    assert!((total - 1.0).abs() < 1e-12);
}

#[test]
fn city_counts_near_planted_weights() {
    let mut s = spec(2000);
    s.second_city_p = 0.0;
    let corpus = synth_corpus(&s, 11).unwrap();
    let g = Gazetteer::from_csv(GAZ).unwrap();
    let agg = geo_aggregate(&corpus, &g, &clusters(), None, None);
    let n = 2000.0f64;
    for (city, w) in [("Bangalore", 0.4), ("Mumbai", 0.3), ("Pune", 0.2)] {
        let b = agg.buckets.iter().find(|b| b.city == city).unwrap();
        let sigma = (n * w * (1.0 - w)).sqrt();
        assert!((b.ad_count as f64 - n * w).abs() <= 3.0 * sigma, "{city}: {}", b.ad_count);
    }
    assert!(agg.unresolved.contains_key("Atlantis"));
    assert!(agg.location_basis_holds());
    assert!(agg.ad_basis_holds());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn tables_ignore_ad_order(seed in any::<u64>()) {
        let corpus = synth_corpus(&spec(120), seed).unwrap();
        let mut ads = corpus.ads.clone();
        ads.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let shuffled = Corpus::new(ads, corpus.source_tag.clone());
        for f in [Field::Skill, Field::Industry, Field::RoleCategory] {
            let a = frequency_table(&corpus, f, None).unwrap();
            let b = frequency_table(&shuffled, f, None).unwrap();
            prop_assert_eq!(&a, &b);
            if a.total > 0 {
                let sum: f64 = a.rows.iter().map(|r| r.share).sum();
                prop_assert!((sum - 1.0).abs() < 1e-12);
            }
        }
        prop_assert_eq!(
            cluster_distribution(&corpus, &clusters(), None),
            cluster_distribution(&shuffled, &clusters(), None)
        );
    }

    #[test]
    fn geocode_partitions_input(locs in proptest::collection::vec(
        prop_oneof![
            Just("Bangalore"), Just("mumbai / PUNE"), Just("Atlantis"), Just("Delhi (NCR) & Gotham"),
            Just("pune, pune"), Just(" , "),
        ],
        0..8,
    )) {
        let g = Gazetteer::from_csv(GAZ).unwrap();
        let out = geocode(&locs, &g);
        let pieces: usize = locs.iter().map(|l| skillscope_core::analyze::split_locations(l).len()).sum();
        prop_assert_eq!(out.resolved.len() + out.unresolved.len(), pieces);
        for u in &out.unresolved {
            prop_assert!(g.lookup(u).is_none());
        }
    }

    #[test]
    fn geo_conservation(seed in any::<u64>()) {
        let corpus = synth_corpus(&spec(150), seed).unwrap();
        let g = Gazetteer::from_csv(GAZ).unwrap();
        let agg = geo_aggregate(&corpus, &g, &clusters(), None, None);
        prop_assert!(agg.location_basis_holds());
        prop_assert!(agg.ad_basis_holds());
        prop_assert_eq!(agg.ads_with_location, corpus.len() as u64);
    }
}
