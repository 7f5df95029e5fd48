use std::collections::HashSet;
use std::fmt;
use std::io::Read;
use std::str::FromStr;

use chrono::NaiveDate;
use serde_json::Value;

use super::model::{normalize_skill_list, Corpus, JobAd};
use super::CorpusError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InputFormat {
    JsonLines,
    Csv,
}

impl FromStr for InputFormat {
    type Err = CorpusError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "jsonlines" | "jsonl" | "ndjson" => Ok(InputFormat::JsonLines),
            "csv" => Ok(InputFormat::Csv),
            other => Err(CorpusError::UnknownFormat(other.to_string())),
        }
    }
}

impl fmt::Display for InputFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InputFormat::JsonLines => f.write_str("jsonlines"),
            InputFormat::Csv => f.write_str("csv"),
        }
    }
}

/// Why a record was left out of the corpus.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    /// 1-based record number in the input (data rows for CSV).
    pub record: usize,
    pub id: Option<String>,
    pub reason: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.id {
            Some(id) => write!(f, "record {} (id {}): {}", self.record, id, self.reason),
            None => write!(f, "record {}: {}", self.record, self.reason),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ParseReport {
    pub total_records: usize,
    pub skipped: Vec<Diagnostic>,
}

impl ParseReport {
    pub fn duplicates(&self) -> usize {
        self.skipped.iter().filter(|d| d.reason.starts_with("duplicate id")).count()
    }
}

#[derive(Debug, Clone)]
pub struct ParseOutcome {
    pub corpus: Corpus,
    pub report: ParseReport,
}

const MANDATORY: [&str; 3] = ["id", "job_name", "key_skills"];

/// Reads a corpus from `input`. Records that violate the advertisement
/// invariants are skipped and reported; the whole parse fails if more than
/// half of the records had to be skipped.
pub fn parse_corpus<R: Read>(mut input: R, format: InputFormat, source_tag: &str) -> Result<ParseOutcome, CorpusError> {
    let mut bytes = Vec::new();
    input.read_to_end(&mut bytes)?;
    let text = String::from_utf8(bytes).map_err(|e| CorpusError::Encoding(e.utf8_error().to_string()))?;

    let records = match format {
        InputFormat::JsonLines => read_jsonlines(&text),
        InputFormat::Csv => read_csv(&text)?,
    };

    let mut report = ParseReport {
        total_records: records.len(),
        skipped: Vec::new(),
    };
    let mut seen = HashSet::new();
    let mut ads = Vec::with_capacity(records.len());
    for (idx, rec) in records.into_iter().enumerate() {
        let record = idx + 1;
        let fields = match rec {
            Ok(f) => f,
            Err(reason) => {
                report.skipped.push(Diagnostic {
                    record,
                    id: None,
                    reason,
                });
                continue;
            }
        };
        match build_ad(&fields) {
            Ok(ad) => {
                if !seen.insert(ad.id.clone()) {
                    report.skipped.push(Diagnostic {
                        record,
                        id: Some(ad.id.clone()),
                        reason: "duplicate id".into(),
                    });
                    continue;
                }
                ads.push(ad);
            }
            Err(reason) => report.skipped.push(Diagnostic {
                record,
                id: fields.text("id"),
                reason,
            }),
        }
    }

    if report.total_records > 0 && report.skipped.len() * 2 > report.total_records {
        return Err(CorpusError::Schema {
            skipped: report.skipped.len(),
            total: report.total_records,
            first: report.skipped.first().map(|d| d.to_string()).unwrap_or_default(),
        });
    }
    for d in &report.skipped {
        log::debug!("skipped {d}");
    }
    Ok(ParseOutcome {
        corpus: Corpus::new(ads, source_tag),
        report,
    })
}

/// Field access shared by the JSON and CSV readers.
enum Fields {
    Json(serde_json::Map<String, Value>),
    Csv(Vec<(String, String)>),
}

impl Fields {
    fn raw_csv(&self, key: &str) -> Option<&str> {
        match self {
            Fields::Csv(cells) => cells
                .iter()
                .find(|(k, _)| k == key)
                .map(|(_, v)| v.as_str())
                .filter(|v| !v.trim().is_empty()),
            Fields::Json(_) => None,
        }
    }

    fn json(&self, key: &str) -> Option<&Value> {
        match self {
            Fields::Json(m) => m.get(key).filter(|v| !v.is_null()),
            Fields::Csv(_) => None,
        }
    }

    fn present(&self, key: &str) -> bool {
        match self {
            Fields::Json(_) => self.json(key).is_some(),
            Fields::Csv(_) => self.raw_csv(key).is_some(),
        }
    }

    fn text(&self, key: &str) -> Option<String> {
        match self {
            Fields::Json(_) => match self.json(key)? {
                Value::String(s) => Some(s.clone()),
                Value::Number(n) => Some(n.to_string()),
                _ => None,
            },
            Fields::Csv(_) => self.raw_csv(key).map(str::to_string),
        }
    }

    fn list(&self, key: &str) -> Result<Vec<String>, String> {
        match self {
            Fields::Json(_) => match self.json(key) {
                None => Ok(Vec::new()),
                Some(Value::Array(items)) => items
                    .iter()
                    .map(|v| match v {
                        Value::String(s) => Ok(s.clone()),
                        other => Err(format!("{key}: expected string items, got {other}")),
                    })
                    .collect(),
                Some(Value::String(s)) => Ok(split_pipe(s)),
                Some(other) => Err(format!("{key}: expected a list, got {other}")),
            },
            Fields::Csv(_) => Ok(self.raw_csv(key).map(split_pipe).unwrap_or_default()),
        }
    }

    fn uint(&self, key: &str) -> Result<Option<u64>, String> {
        let bad = |v: &dyn fmt::Display| format!("{key}: not a non-negative integer: {v}");
        match self {
            Fields::Json(_) => match self.json(key) {
                None => Ok(None),
                Some(Value::Number(n)) => n.as_u64().map(Some).ok_or_else(|| bad(n)),
                Some(Value::String(s)) if s.trim().is_empty() => Ok(None),
                Some(Value::String(s)) => s.trim().parse().map(Some).map_err(|_| bad(s)),
                Some(other) => Err(bad(other)),
            },
            Fields::Csv(_) => match self.raw_csv(key) {
                None => Ok(None),
                Some(s) => s.trim().parse().map(Some).map_err(|_| bad(&s)),
            },
        }
    }
}

fn split_pipe(s: &str) -> Vec<String> {
    s.split('|')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(str::to_string)
        .collect()
}

fn read_jsonlines(text: &str) -> Vec<Result<Fields, String>> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|line| match serde_json::from_str::<Value>(line) {
            Ok(Value::Object(m)) => Ok(Fields::Json(m)),
            Ok(_) => Err("record is not a JSON object".to_string()),
            Err(e) => Err(format!("invalid JSON: {e}")),
        })
        .collect()
}

fn read_csv(text: &str) -> Result<Vec<Result<Fields, String>>, CorpusError> {
    let mut rdr = csv::ReaderBuilder::new().flexible(true).from_reader(text.as_bytes());
    let headers: Vec<String> = rdr
        .headers()
        .map_err(|e| CorpusError::Csv(e.to_string()))?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    let mut out = Vec::new();
    for row in rdr.records() {
        out.push(match row {
            Ok(r) => Ok(Fields::Csv(
                headers.iter().cloned().zip(r.iter().map(str::to_string)).collect(),
            )),
            Err(e) => Err(format!("invalid CSV row: {e}")),
        });
    }
    Ok(out)
}

/// ISO-8601 first (a datetime keeps only its date part), then day-month-year.
pub fn parse_date(s: &str) -> Option<NaiveDate> {
    let s = s.trim();
    let head = s.get(..10).unwrap_or(s);
    NaiveDate::parse_from_str(head, "%Y-%m-%d")
        .or_else(|_| NaiveDate::parse_from_str(s, "%d-%m-%Y"))
        .or_else(|_| NaiveDate::parse_from_str(s, "%d/%m/%Y"))
        .or_else(|_| NaiveDate::parse_from_str(s, "%d %b %Y"))
        .ok()
}

fn to_u32(key: &str, v: Option<u64>) -> Result<Option<u32>, String> {
    v.map(|x| u32::try_from(x).map_err(|_| format!("{key}: out of range: {x}")))
        .transpose()
}

fn build_ad(f: &Fields) -> Result<JobAd, String> {
    for key in MANDATORY {
        if !f.present(key) {
            return Err(format!("missing mandatory field {key}"));
        }
    }
    let id = f.text("id").unwrap_or_default().trim().to_string();
    if id.is_empty() {
        return Err("missing mandatory field id".into());
    }
    let job_name = f.text("job_name").unwrap_or_default();
    if job_name.trim().is_empty() {
        return Err("missing mandatory field job_name".into());
    }
    let key_skills = normalize_skill_list(&f.list("key_skills")?);
    if key_skills.is_empty() {
        return Err("no key_skills after normalization".into());
    }
    let min_experience = to_u32("min_experience", f.uint("min_experience")?)?;
    let max_experience = to_u32("max_experience", f.uint("max_experience")?)?;
    if let (Some(lo), Some(hi)) = (min_experience, max_experience) {
        if lo > hi {
            return Err("experience range inverted".into());
        }
    }
    Ok(JobAd {
        id,
        job_name,
        company_name: f.text("company_name"),
        advertisement_date: f.text("advertisement_date").as_deref().and_then(parse_date),
        apply_count: f.uint("apply_count")?,
        view_count: f.uint("view_count")?,
        role_category: f.text("role_category"),
        education: f.list("education")?,
        industry: f.text("industry"),
        min_experience,
        max_experience,
        employment_type: f.text("employment_type"),
        functional_area: f.text("functional_area"),
        locations: f.list("locations")?,
        key_skills,
        vacancy: to_u32("vacancy", f.uint("vacancy")?)?,
        salary: f.list("salary")?,
        description: f.text("description"),
    })
}
