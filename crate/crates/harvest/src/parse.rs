use scraper::{ElementRef, Html, Selector};
use serde_json::{Map, Value};
use skillscope_core::corpus::{parse_corpus, InputFormat};
use skillscope_core::JobAd;
use thiserror::Error;
use url::Url;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum ListingError {
    #[error("payload is not HTML")]
    NotHtml,
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum AdError {
    #[error("payload is not HTML")]
    NotHtml,
    #[error("missing mandatory field {0}")]
    MissingField(String),
    #[error("invalid advertisement: {0}")]
    Invalid(String),
}

/// Advertisement links of one listing page, plus its pagination link.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Listing {
    /// `a.job-link` targets in document order, duplicates included.
    pub ads: Vec<Url>,
    /// `a[rel=next]` target, if any.
    pub next: Option<Url>,
}

impl Listing {
    /// A page without advertisements or without a next link ends the chain.
    pub fn is_terminal(&self) -> bool {
        self.ads.is_empty() || self.next.is_none()
    }
}

fn looks_like_html(body: &str) -> bool {
    body.trim_start_matches('\u{feff}').trim_start().starts_with('<')
}

fn selector(s: &str) -> Selector {
    Selector::parse(s).expect("static selector")
}

pub fn parse_listing(html: &str, page: &Url) -> Result<Listing, ListingError> {
    if !looks_like_html(html) {
        return Err(ListingError::NotHtml);
    }
    let doc = Html::parse_document(html);
    let resolve = |el: ElementRef| el.value().attr("href").and_then(|h| page.join(h.trim()).ok());
    let ads = doc.select(&selector("a.job-link")).filter_map(resolve).collect();
    let next = doc.select(&selector("a[rel~=next]")).find_map(resolve);
    Ok(Listing { ads, next })
}

const LIST_FIELDS: [&str; 4] = ["key_skills", "locations", "education", "salary"];
const NUMBER_FIELDS: [&str; 5] = ["apply_count", "view_count", "min_experience", "max_experience", "vacancy"];

fn text_of(el: ElementRef) -> String {
    el.text()
        .collect::<Vec<_>>()
        .join(" ")
        .split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
}

/// Reads the `data-field` elements of an advertisement page. List fields
/// come from the `li` children of the tagged element. An absent `id` falls
/// back to the page's file stem.
pub fn parse_ad(html: &str, page: &Url) -> Result<JobAd, AdError> {
    if !looks_like_html(html) {
        return Err(AdError::NotHtml);
    }
    let doc = Html::parse_document(html);
    let li = selector("li");
    let mut fields = Map::new();
    for el in doc.select(&selector("[data-field]")) {
        let name = el.value().attr("data-field").unwrap_or("").trim().to_string();
        if name.is_empty() || fields.contains_key(&name) {
            continue;
        }
        let value = if LIST_FIELDS.contains(&name.as_str()) {
            let items: Vec<Value> = el
                .select(&li)
                .map(text_of)
                .filter(|t| !t.is_empty())
                .map(Value::String)
                .collect();
            if items.is_empty() {
                // tolerate a flat pipe-separated value
                Value::String(text_of(el))
            } else {
                Value::Array(items)
            }
        } else {
            let t = text_of(el);
            match t.parse::<u64>() {
                Ok(n) if NUMBER_FIELDS.contains(&name.as_str()) => Value::from(n),
                _ => Value::String(t),
            }
        };
        fields.insert(name, value);
    }
    if !fields.contains_key("id") {
        let stem = page
            .path_segments()
            .and_then(|mut s| s.next_back())
            .map(|f| f.trim_end_matches(".html").to_string())
            .unwrap_or_default();
        if !stem.is_empty() {
            fields.insert("id".into(), Value::String(stem));
        }
    }
    for key in ["id", "job_name", "key_skills"] {
        let empty = match fields.get(key) {
            None => true,
            Some(Value::String(s)) => s.trim().is_empty(),
            Some(Value::Array(a)) => a.is_empty(),
            Some(_) => false,
        };
        if empty {
            return Err(AdError::MissingField(key.into()));
        }
    }
    let line = Value::Object(fields).to_string();
    let out =
        parse_corpus(line.as_bytes(), InputFormat::JsonLines, page.as_str()).map_err(|e| AdError::Invalid(e.to_string()))?;
    match out.corpus.ads.into_iter().next() {
        Some(ad) => Ok(ad),
        None => {
            let reason = out.report.skipped.first().map(|d| d.reason.clone()).unwrap_or_default();
            Err(AdError::Invalid(reason))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> Url {
        Url::parse("http://x.test/site/java-jobs.html").unwrap()
    }

    #[test]
    fn listing_links_in_order() {
        let html = r#"<html><body>
            <a class="job-link" href="ads/3.html">c</a>
            <a class="job-link other" href="/site/ads/1.html">a</a>
            <a href="ads/9.html">not an ad</a>
            <a class="job-link" href="ads/2.html">b</a>
            <a rel="next" href="java-jobs-2.html">next</a>
        </body></html>"#;
        let l = parse_listing(html, &base()).unwrap();
        let paths: Vec<&str> = l.ads.iter().map(|u| u.path()).collect();
        assert_eq!(paths, vec!["/site/ads/3.html", "/site/ads/1.html", "/site/ads/2.html"]);
        assert_eq!(l.next.unwrap().path(), "/site/java-jobs-2.html");
    }

    #[test]
    fn terminal_page() {
        let l = parse_listing("<html><body><p>No more jobs</p></body></html>", &base()).unwrap();
        assert!(l.ads.is_empty());
        assert!(l.is_terminal());
        assert_eq!(parse_listing("{\"jobs\": []}", &base()), Err(ListingError::NotHtml));
    }

    #[test]
    fn ad_fields() {
        let html = r#"<html><body>
            <h1 data-field="job_name">Java   Developer</h1>
            <span data-field="company_name">Acme</span>
            <span data-field="vacancy">5</span>
            <span data-field="advertisement_date">14-08-2021</span>
            <ul data-field="key_skills"><li>Java</li><li>SQL</li></ul>
            <ul data-field="locations"><li>Pune</li><li>Mumbai</li></ul>
        </body></html>"#;
        let url = Url::parse("http://x.test/site/ads/ad-00042.html").unwrap();
        let ad = parse_ad(html, &url).unwrap();
        assert_eq!(ad.id, "ad-00042");
        assert_eq!(ad.job_name, "Java Developer");
        assert_eq!(ad.key_skills, vec!["java", "sql"]);
        assert_eq!(ad.locations, vec!["Pune", "Mumbai"]);
        assert_eq!(ad.vacancy, Some(5));
        assert_eq!(ad.advertisement_date.unwrap().to_string(), "2021-08-14");
    }

    #[test]
    fn missing_skills_named() {
        let html = r#"<html><body><h1 data-field="job_name">Dev</h1></body></html>"#;
        let url = Url::parse("http://x.test/ads/a.html").unwrap();
        assert_eq!(parse_ad(html, &url), Err(AdError::MissingField("key_skills".into())));
    }
}
