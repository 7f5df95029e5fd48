use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{clusters_touched, skill_to_cluster_name, AnalyzeError};
use crate::corpus::{normalize_text, Corpus};
use crate::skillnet::SkillClusterSet;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Place {
    pub name: String,
    pub lat: f64,
    pub lon: f64,
    pub region: String,
}

/// Offline place table keyed by normalized name.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Gazetteer {
    pub entries: BTreeMap<String, Place>,
}

impl Gazetteer {
    /// Parses `name,lat,lon,region` CSV with a header row. Later rows with
    /// the same normalized name are ignored.
    pub fn from_csv(text: &str) -> Result<Self, AnalyzeError> {
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .flexible(true)
            .from_reader(text.as_bytes());
        let mut entries = BTreeMap::new();
        for (n, row) in rdr.records().enumerate() {
            let line = n + 2;
            let err = |reason: String| AnalyzeError::Gazetteer { line, reason };
            let row = row.map_err(|e| err(e.to_string()))?;
            if row.len() < 3 {
                return Err(err("expected name,lat,lon,region".into()));
            }
            let name = row[0].to_string();
            let lat: f64 = row[1].parse().map_err(|_| err(format!("bad latitude '{}'", &row[1])))?;
            let lon: f64 = row[2].parse().map_err(|_| err(format!("bad longitude '{}'", &row[2])))?;
            if !(-90.0..=90.0).contains(&lat) {
                return Err(err(format!("latitude {lat} outside [-90, 90]")));
            }
            if !(-180.0..=180.0).contains(&lon) {
                return Err(err(format!("longitude {lon} outside [-180, 180]")));
            }
            let region = row.get(3).unwrap_or("").to_string();
            let key = normalize_text(&name);
            if key.is_empty() {
                return Err(err("empty place name".into()));
            }
            entries.entry(key).or_insert(Place { name, lat, lon, region });
        }
        Ok(Gazetteer { entries })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn lookup(&self, name: &str) -> Option<&Place> {
        self.entries.get(&normalize_text(name))
    }
}

/// Splits a location string on `,`, `/` and `&`, cutting each piece at its
/// first `(`. Empty pieces are dropped.
pub fn split_locations(raw: &str) -> Vec<String> {
    raw.split([',', '/', '&'])
        .map(|p| p.split('(').next().unwrap_or("").trim().to_string())
        .filter(|p| !p.is_empty())
        .collect()
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Geocoded {
    /// Gazetteer key and place for each resolved piece.
    pub resolved: Vec<(String, Place)>,
    /// Unresolved pieces, as written.
    pub unresolved: Vec<String>,
}

pub fn geocode<S: AsRef<str>>(locations: &[S], g: &Gazetteer) -> Geocoded {
    let mut out = Geocoded::default();
    for raw in locations {
        for piece in split_locations(raw.as_ref()) {
            let key = normalize_text(&piece);
            match g.entries.get(&key) {
                Some(p) => out.resolved.push((key, p.clone())),
                None => out.unresolved.push(piece),
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeoBucket {
    pub city: String,
    pub region: String,
    pub lat: f64,
    pub lon: f64,
    pub ad_count: u64,
    pub cluster_distribution: BTreeMap<String, u64>,
    pub segment: Option<String>,
}

/// City buckets with both bookkeeping bases.
///
/// Location basis: `Σ ad_count + unresolved_mentions = location_mentions`,
/// where a mention is a distinct place piece within one ad. Ad basis:
/// `ads_resolved + ads_unresolved_only = ads_with_location`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeoAggregate {
    pub buckets: Vec<GeoBucket>,
    pub unresolved: BTreeMap<String, u64>,
    pub location_mentions: u64,
    pub unresolved_mentions: u64,
    pub ads_with_location: u64,
    pub ads_resolved: u64,
    pub ads_unresolved_only: u64,
}

impl GeoAggregate {
    pub fn location_basis_holds(&self) -> bool {
        self.buckets.iter().map(|b| b.ad_count).sum::<u64>() + self.unresolved_mentions == self.location_mentions
    }

    pub fn ad_basis_holds(&self) -> bool {
        self.ads_resolved + self.ads_unresolved_only == self.ads_with_location
    }

    /// FeatureCollection of Point features, coordinates `[lon, lat]`.
    pub fn to_geojson(&self) -> Value {
        let features: Vec<Value> = self
            .buckets
            .iter()
            .map(|b| {
                let mut props = json!({
                    "city": b.city,
                    "region": b.region,
                    "ad_count": b.ad_count,
                    "cluster_distribution": b.cluster_distribution,
                });
                if let Some(s) = &b.segment {
                    props["segment"] = json!(s);
                }
                json!({
                    "type": "Feature",
                    "geometry": {"type": "Point", "coordinates": [b.lon, b.lat]},
                    "properties": props,
                })
            })
            .collect();
        json!({"type": "FeatureCollection", "features": features})
    }
}

/// Buckets the ads of `corpus` (or the subset `ads`) by resolved city.
pub fn geo_aggregate(
    corpus: &Corpus,
    g: &Gazetteer,
    clusters: &SkillClusterSet,
    ads: Option<&[usize]>,
    segment: Option<&str>,
) -> GeoAggregate {
    let names = skill_to_cluster_name(clusters);
    let all: Vec<usize>;
    let idx = match ads {
        Some(a) => a,
        None => {
            all = (0..corpus.len()).collect();
            &all
        }
    };
    let mut buckets: BTreeMap<String, GeoBucket> = BTreeMap::new();
    let mut unresolved: BTreeMap<String, u64> = BTreeMap::new();
    let mut agg = GeoAggregate {
        buckets: Vec::new(),
        unresolved: BTreeMap::new(),
        location_mentions: 0,
        unresolved_mentions: 0,
        ads_with_location: 0,
        ads_resolved: 0,
        ads_unresolved_only: 0,
    };
    for &i in idx {
        let ad = &corpus.ads[i];
        let coded = geocode(&ad.locations, g);
        let cities: BTreeMap<String, Place> = coded.resolved.into_iter().collect();
        let missing: BTreeSet<String> = coded.unresolved.into_iter().collect();
        if cities.is_empty() && missing.is_empty() {
            continue;
        }
        agg.ads_with_location += 1;
        agg.location_mentions += (cities.len() + missing.len()) as u64;
        agg.unresolved_mentions += missing.len() as u64;
        if cities.is_empty() {
            agg.ads_unresolved_only += 1;
        } else {
            agg.ads_resolved += 1;
        }
        for m in missing {
            *unresolved.entry(m).or_insert(0) += 1;
        }
        let touched = clusters_touched(ad, &names);
        for (key, place) in cities {
            let b = buckets.entry(key).or_insert_with(|| GeoBucket {
                city: place.name.clone(),
                region: place.region.clone(),
                lat: place.lat,
                lon: place.lon,
                ad_count: 0,
                cluster_distribution: BTreeMap::new(),
                segment: segment.map(String::from),
            });
            b.ad_count += 1;
            for c in &touched {
                *b.cluster_distribution.entry(c.clone()).or_insert(0) += 1;
            }
        }
    }
    let mut list: Vec<GeoBucket> = buckets.into_values().collect();
    list.sort_by(|a, b| b.ad_count.cmp(&a.ad_count).then_with(|| a.city.cmp(&b.city)));
    agg.buckets = list;
    agg.unresolved = unresolved;
    agg
}
