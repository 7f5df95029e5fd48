//! Synthetic corpora with planted structure.
//!
//! Each generated ad draws its skills from declared marginals, with
//! declared pairs drawn jointly so their co-occurrence rate is controlled,
//! a title from one of the planted title clusters, and one or more cities
//! from a weighted list. Everything is driven by a single seeded ChaCha
//! stream, so `(spec, seed)` fixes the output byte for byte.

use std::collections::{BTreeMap, BTreeSet};

use chrono::{Duration, NaiveDate};
use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::model::{normalize_skill, Corpus, JobAd};
use super::CorpusError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkillMarginal {
    pub skill: String,
    pub p: f64,
}

/// Two skills whose joint probability is fixed. Both must also appear in
/// `SynthSpec::skills`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedPair {
    pub a: String,
    pub b: String,
    pub joint: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TitleCluster {
    /// Near-duplicate spellings of one role.
    pub variants: Vec<String>,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Weighted {
    pub value: String,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperienceBand {
    pub min: u32,
    pub max: u32,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthSpec {
    pub n_ads: usize,
    pub skills: Vec<SkillMarginal>,
    pub pairs: Vec<PlantedPair>,
    pub title_clusters: Vec<TitleCluster>,
    pub cities: Vec<Weighted>,
    /// Probability an ad lists a second (distinct) city.
    pub second_city_p: f64,
    pub industries: Vec<Weighted>,
    pub role_categories: Vec<Weighted>,
    pub experience: Vec<ExperienceBand>,
    /// Vacancy drawn uniformly from this inclusive range.
    pub vacancy_range: (u32, u32),
    /// Apply count drawn uniformly from this inclusive range.
    pub apply_range: (u64, u64),
    /// Added only to ads that would otherwise have no skills.
    pub filler_skill: String,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            n_ads: 100,
            skills: Vec::new(),
            pairs: Vec::new(),
            title_clusters: vec![TitleCluster {
                variants: vec!["software engineer".into()],
                weight: 1.0,
            }],
            cities: Vec::new(),
            second_city_p: 0.0,
            industries: Vec::new(),
            role_categories: Vec::new(),
            experience: vec![ExperienceBand {
                min: 0,
                max: 5,
                weight: 1.0,
            }],
            vacancy_range: (1, 1),
            apply_range: (0, 100),
            filler_skill: "communication".into(),
        }
    }
}

impl SynthSpec {
    /// Rejects specs no distribution can satisfy.
    pub fn validate(&self) -> Result<(), CorpusError> {
        let bad = |msg: String| Err(CorpusError::InfeasibleSpec(msg));
        let mut marginals = BTreeMap::new();
        for m in &self.skills {
            if !(0.0..=1.0).contains(&m.p) {
                return bad(format!("marginal of {:?} is {} (must be in [0,1])", m.skill, m.p));
            }
            if marginals.insert(normalize_skill(&m.skill), m.p).is_some() {
                return bad(format!("skill {:?} declared twice", m.skill));
            }
        }
        let mut paired = BTreeSet::new();
        for pair in &self.pairs {
            let a = normalize_skill(&pair.a);
            let b = normalize_skill(&pair.b);
            if a == b {
                return bad(format!("pair ({a}, {b}) repeats one skill"));
            }
            let (Some(&pa), Some(&pb)) = (marginals.get(&a), marginals.get(&b)) else {
                return bad(format!("pair ({a}, {b}) names a skill without a marginal"));
            };
            if !paired.insert(a.clone()) || !paired.insert(b.clone()) {
                return bad(format!("skill in pair ({a}, {b}) already belongs to another pair"));
            }
            if pair.joint < 0.0 {
                return bad(format!("pair ({a}, {b}) has negative joint {}", pair.joint));
            }
            if pair.joint > pa.min(pb) {
                return bad(format!("joint {} of ({a}, {b}) exceeds a marginal ({pa}, {pb})", pair.joint));
            }
            if 1.0 - pa - pb + pair.joint < -1e-12 {
                return bad(format!(
                    "marginals {pa} + {pb} with joint {} leave negative mass for neither",
                    pair.joint
                ));
            }
        }
        if self.title_clusters.is_empty() || self.title_clusters.iter().any(|c| c.variants.is_empty()) {
            return bad("every title cluster needs at least one variant".into());
        }
        let weights_ok = |w: &mut dyn Iterator<Item = f64>| {
            let v: Vec<f64> = w.collect();
            v.is_empty() || (v.iter().all(|x| *x >= 0.0 && x.is_finite()) && v.iter().sum::<f64>() > 0.0)
        };
        if !weights_ok(&mut self.title_clusters.iter().map(|c| c.weight))
            || !weights_ok(&mut self.cities.iter().map(|c| c.weight))
            || !weights_ok(&mut self.industries.iter().map(|c| c.weight))
            || !weights_ok(&mut self.role_categories.iter().map(|c| c.weight))
            || !weights_ok(&mut self.experience.iter().map(|c| c.weight))
        {
            return bad("weights must be non-negative with a positive total".into());
        }
        if self.experience.iter().any(|e| e.min > e.max) {
            return bad("experience band with min > max".into());
        }
        if self.vacancy_range.0 > self.vacancy_range.1 || self.apply_range.0 > self.apply_range.1 {
            return bad("inverted numeric range".into());
        }
        if !(0.0..=1.0).contains(&self.second_city_p) {
            return bad("second_city_p must be in [0,1]".into());
        }
        if normalize_skill(&self.filler_skill).is_empty() {
            return bad("filler_skill must be non-empty".into());
        }
        Ok(())
    }
}

fn pick<'a, R: Rng>(rng: &mut R, items: &'a [Weighted]) -> Option<&'a Weighted> {
    if items.is_empty() {
        return None;
    }
    let dist = WeightedIndex::new(items.iter().map(|w| w.weight)).ok()?;
    Some(&items[dist.sample(rng)])
}

/// Generates a corpus from `spec`. Identical `(spec, seed)` give identical
/// corpora.
pub fn synth_corpus(spec: &SynthSpec, seed: u64) -> Result<Corpus, CorpusError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let pair_of: BTreeMap<String, usize> = spec
        .pairs
        .iter()
        .enumerate()
        .flat_map(|(i, p)| [(normalize_skill(&p.a), i), (normalize_skill(&p.b), i)])
        .collect();
    let marginal: BTreeMap<String, f64> = spec.skills.iter().map(|m| (normalize_skill(&m.skill), m.p)).collect();

    let title_dist = WeightedIndex::new(spec.title_clusters.iter().map(|c| c.weight))
        .map_err(|e| CorpusError::InfeasibleSpec(e.to_string()))?;
    let exp_dist =
        WeightedIndex::new(spec.experience.iter().map(|e| e.weight)).map_err(|e| CorpusError::InfeasibleSpec(e.to_string()))?;
    let base_date = NaiveDate::from_ymd_opt(2021, 1, 1).expect("valid date");

    let mut ads = Vec::with_capacity(spec.n_ads);
    for i in 0..spec.n_ads {
        // Pair outcomes first, in declaration order, then independent skills.
        let mut pair_draw: Vec<(bool, bool)> = Vec::with_capacity(spec.pairs.len());
        for p in &spec.pairs {
            let pa = marginal[&normalize_skill(&p.a)];
            let pb = marginal[&normalize_skill(&p.b)];
            let u: f64 = rng.gen();
            let draw = if u < p.joint {
                (true, true)
            } else if u < pa {
                (true, false)
            } else if u < pa + (pb - p.joint) {
                (false, true)
            } else {
                (false, false)
            };
            pair_draw.push(draw);
        }
        let mut skills = Vec::new();
        for m in &spec.skills {
            let name = normalize_skill(&m.skill);
            let present = match pair_of.get(&name) {
                Some(&pi) => {
                    let p = &spec.pairs[pi];
                    if normalize_skill(&p.a) == name {
                        pair_draw[pi].0
                    } else {
                        pair_draw[pi].1
                    }
                }
                None => rng.gen::<f64>() < m.p,
            };
            if present {
                skills.push(name);
            }
        }
        if skills.is_empty() {
            skills.push(normalize_skill(&spec.filler_skill));
        }

        let cluster = &spec.title_clusters[title_dist.sample(&mut rng)];
        let job_name = cluster.variants[rng.gen_range(0..cluster.variants.len())].clone();

        let mut locations = Vec::new();
        if let Some(c) = pick(&mut rng, &spec.cities) {
            locations.push(c.value.clone());
            if spec.cities.len() > 1 && rng.gen::<f64>() < spec.second_city_p {
                loop {
                    let c2 = pick(&mut rng, &spec.cities).expect("non-empty");
                    if c2.value != c.value {
                        locations.push(c2.value.clone());
                        break;
                    }
                }
            }
        }

        let band = &spec.experience[exp_dist.sample(&mut rng)];
        let min_experience = band.min;
        let max_experience = rng.gen_range(band.min..=band.max);
        let vacancy = rng.gen_range(spec.vacancy_range.0..=spec.vacancy_range.1);
        let apply_count = rng.gen_range(spec.apply_range.0..=spec.apply_range.1);
        let industry = pick(&mut rng, &spec.industries).map(|w| w.value.clone());
        let role_category = pick(&mut rng, &spec.role_categories).map(|w| w.value.clone());
        let day = rng.gen_range(0..365);

        ads.push(JobAd {
            id: format!("synth-{seed}-{i:05}"),
            job_name,
            company_name: Some(format!("company-{:03}", rng.gen_range(0..100))),
            advertisement_date: Some(base_date + Duration::days(day)),
            apply_count: Some(apply_count),
            view_count: Some(apply_count * 3 + rng.gen_range(0..50)),
            role_category,
            education: vec!["B.Tech/B.E.".into()],
            industry,
            min_experience: Some(min_experience),
            max_experience: Some(max_experience),
            employment_type: Some("Full Time, Permanent".into()),
            functional_area: Some("IT Software".into()),
            locations,
            key_skills: skills,
            vacancy: Some(vacancy),
            salary: Vec::new(),
            description: None,
        });
    }
    Ok(Corpus::new(ads, format!("synth:seed={seed}")))
}
