//! Writes a static job-portal site for crawling: paginated listing pages
//! named after the key phrase and one page per advertisement under `ads/`.

use std::fmt::Write as _;
use std::io;
use std::path::Path;

use serde_json::Value;
use skillscope_core::JobAd;

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Ad page with one `data-field` element per present field.
pub fn render_ad(ad: &JobAd) -> String {
    let mut body = String::new();
    if let Value::Object(fields) = ad.to_json() {
        for (name, value) in fields {
            match value {
                Value::Array(items) => {
                    let _ = write!(body, "  <ul data-field=\"{name}\">");
                    for item in items {
                        let _ = write!(body, "<li>{}</li>", escape(item.as_str().unwrap_or_default()));
                    }
                    body.push_str("</ul>\n");
                }
                Value::String(s) => {
                    let _ = writeln!(body, "  <span data-field=\"{name}\">{}</span>", escape(&s));
                }
                Value::Null => {}
                other => {
                    let _ = writeln!(body, "  <span data-field=\"{name}\">{other}</span>");
                }
            }
        }
    }
    format!(
        "<!DOCTYPE html>\n<html><head><title>{}</title></head>\n<body><article class=\"job-ad\">\n{body}</article></body></html>\n",
        escape(&ad.job_name)
    )
}

/// Listing page linking `hrefs`, with an optional `rel="next"` link.
pub fn render_listing(hrefs: &[String], next: Option<&str>) -> String {
    let mut body = String::from("<ul class=\"results\">\n");
    for h in hrefs {
        let _ = writeln!(
            body,
            "  <li><a class=\"job-link\" href=\"{}\">{}</a></li>",
            escape(h),
            escape(h)
        );
    }
    body.push_str("</ul>\n");
    if let Some(n) = next {
        let _ = writeln!(body, "<a rel=\"next\" href=\"{}\">Next</a>", escape(n));
    }
    format!("<!DOCTYPE html>\n<html><head><title>Jobs</title></head>\n<body>\n{body}</body></html>\n")
}

/// What [`write_site`] produced.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SiteInfo {
    /// Listing file names in chain order.
    pub listing_pages: Vec<String>,
    /// Ad file paths relative to the root, in link order.
    pub ad_pages: Vec<String>,
}

/// Writes `ads` into `dir`, `per_page` per listing page. The last listing
/// page has no next link. With no ads a single empty listing page is
/// written.
pub fn write_site(dir: &Path, key_phrase: &str, ads: &[JobAd], per_page: usize) -> io::Result<SiteInfo> {
    assert!(per_page > 0, "per_page must be positive");
    let slug = key_phrase
        .split_whitespace()
        .map(str::to_lowercase)
        .collect::<Vec<_>>()
        .join("-");
    std::fs::create_dir_all(dir.join("ads"))?;
    let page_name = |p: usize| {
        if p == 1 {
            format!("{slug}-jobs.html")
        } else {
            format!("{slug}-jobs-{p}.html")
        }
    };
    let mut info = SiteInfo {
        listing_pages: Vec::new(),
        ad_pages: Vec::new(),
    };
    let chunks: Vec<&[JobAd]> = if ads.is_empty() {
        vec![&[]]
    } else {
        ads.chunks(per_page).collect()
    };
    for (i, chunk) in chunks.iter().enumerate() {
        let p = i + 1;
        let mut hrefs = Vec::new();
        for ad in chunk.iter() {
            let file = format!("ads/{}.html", file_stem(&ad.id));
            std::fs::write(dir.join(&file), render_ad(ad))?;
            hrefs.push(file.clone());
            info.ad_pages.push(file);
        }
        let next = (p < chunks.len()).then(|| page_name(p + 1));
        std::fs::write(dir.join(page_name(p)), render_listing(&hrefs, next.as_deref()))?;
        info.listing_pages.push(page_name(p));
    }
    Ok(info)
}

fn file_stem(id: &str) -> String {
    id.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '_' {
                c
            } else {
                '_'
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::{parse_ad, parse_listing};
    use url::Url;

    #[test]
    fn ad_round_trip() {
        let ad = JobAd {
            id: "ad-1".into(),
            job_name: "C++ <Dev> & Lead".into(),
            key_skills: vec!["c++".into(), "stl".into()],
            locations: vec!["Pune".into(), "Bangalore(Whitefield)".into()],
            vacancy: Some(3),
            min_experience: Some(1),
            max_experience: Some(4),
            industry: Some("IT-Software, Software Services".into()),
            ..Default::default()
        };
        let url = Url::parse("http://x.test/ads/ad-1.html").unwrap();
        assert_eq!(parse_ad(&render_ad(&ad), &url).unwrap(), ad);
    }

    #[test]
    fn listing_round_trip() {
        let html = render_listing(&["ads/a.html".into(), "ads/b.html".into()], Some("x-jobs-2.html"));
        let l = parse_listing(&html, &Url::parse("http://x.test/x-jobs.html").unwrap()).unwrap();
        assert_eq!(l.ads.len(), 2);
        assert_eq!(l.next.unwrap().as_str(), "http://x.test/x-jobs-2.html");
    }
}
