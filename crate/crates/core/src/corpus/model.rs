use chrono::NaiveDate;
use serde_json::{Map, Value};

/// One job advertisement.
///
/// Optional scalar fields are `None` when the source record omitted them;
/// they never default to zero.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct JobAd {
    pub id: String,
    pub job_name: String,
    pub company_name: Option<String>,
    pub advertisement_date: Option<NaiveDate>,
    pub apply_count: Option<u64>,
    pub view_count: Option<u64>,
    pub role_category: Option<String>,
    pub education: Vec<String>,
    pub industry: Option<String>,
    pub min_experience: Option<u32>,
    pub max_experience: Option<u32>,
    pub employment_type: Option<String>,
    pub functional_area: Option<String>,
    pub locations: Vec<String>,
    /// Normalized, deduplicated, in first-seen order.
    pub key_skills: Vec<String>,
    pub vacancy: Option<u32>,
    pub salary: Vec<String>,
    pub description: Option<String>,
}

impl JobAd {
    /// Job title after casefolding and whitespace collapsing; the value
    /// used for semantic grouping.
    pub fn normalized_title(&self) -> String {
        normalize_text(&self.job_name)
    }

    /// Canonical JSON object. Keys come out sorted because `serde_json::Map`
    /// is BTreeMap-backed.
    pub fn to_json(&self) -> Value {
        fn opt_str(v: &Option<String>) -> Value {
            v.as_ref().map_or(Value::Null, |s| Value::String(s.clone()))
        }
        fn list(v: &[String]) -> Value {
            Value::Array(v.iter().cloned().map(Value::String).collect())
        }
        let mut m = Map::new();
        m.insert("id".into(), Value::String(self.id.clone()));
        m.insert("job_name".into(), Value::String(self.job_name.clone()));
        m.insert("company_name".into(), opt_str(&self.company_name));
        m.insert(
            "advertisement_date".into(),
            self.advertisement_date
                .map_or(Value::Null, |d| Value::String(d.format("%Y-%m-%d").to_string())),
        );
        m.insert("apply_count".into(), self.apply_count.map_or(Value::Null, Value::from));
        m.insert("view_count".into(), self.view_count.map_or(Value::Null, Value::from));
        m.insert("role_category".into(), opt_str(&self.role_category));
        m.insert("education".into(), list(&self.education));
        m.insert("industry".into(), opt_str(&self.industry));
        m.insert("min_experience".into(), self.min_experience.map_or(Value::Null, Value::from));
        m.insert("max_experience".into(), self.max_experience.map_or(Value::Null, Value::from));
        m.insert("employment_type".into(), opt_str(&self.employment_type));
        m.insert("functional_area".into(), opt_str(&self.functional_area));
        m.insert("locations".into(), list(&self.locations));
        m.insert("key_skills".into(), list(&self.key_skills));
        m.insert("vacancy".into(), self.vacancy.map_or(Value::Null, Value::from));
        m.insert("salary".into(), list(&self.salary));
        m.insert("description".into(), opt_str(&self.description));
        Value::Object(m)
    }
}

/// An ordered, immutable collection of advertisements.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Corpus {
    pub ads: Vec<JobAd>,
    pub source_tag: String,
}

impl Corpus {
    pub fn new(ads: Vec<JobAd>, source_tag: impl Into<String>) -> Self {
        Corpus {
            ads,
            source_tag: source_tag.into(),
        }
    }

    pub fn len(&self) -> usize {
        self.ads.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ads.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, JobAd> {
        self.ads.iter()
    }

    /// Canonical JSON-lines: one sorted-key object per line, trailing newline.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for ad in &self.ads {
            out.push_str(&ad.to_json().to_string());
            out.push('\n');
        }
        out
    }
}

impl<'a> IntoIterator for &'a Corpus {
    type Item = &'a JobAd;
    type IntoIter = std::slice::Iter<'a, JobAd>;

    fn into_iter(self) -> Self::IntoIter {
        self.ads.iter()
    }
}

/// Casefold, trim, and collapse internal whitespace runs to one space.
pub fn normalize_text(s: &str) -> String {
    s.split_whitespace().map(|w| w.to_lowercase()).collect::<Vec<_>>().join(" ")
}

/// Skill normalization. No stemming, no alias merging.
pub fn normalize_skill(s: &str) -> String {
    normalize_text(s)
}

/// Normalizes every skill, drops empties, and removes repeats while keeping
/// first-seen order.
pub fn normalize_skill_list<S: AsRef<str>>(raw: &[S]) -> Vec<String> {
    let mut out: Vec<String> = Vec::with_capacity(raw.len());
    for s in raw {
        let n = normalize_skill(s.as_ref());
        if !n.is_empty() && !out.contains(&n) {
            out.push(n);
        }
    }
    out
}
