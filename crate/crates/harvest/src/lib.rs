//! Crawls a job-portal fixture site: listing pages are followed through
//! their `next` links, every advertisement page found on them is fetched
//! once by a pool of throttled workers, and each page is parsed into a
//! corpus-compatible advertisement record.

mod config;
mod crawl;
mod fetch;
pub mod fixture;
mod parse;
mod throttle;

pub use config::{start_url, CrawlConfig};
pub use crawl::{crawl, crawl_with, CrawlError, CrawlOutput, CrawlStats, RequestRecord, Skipped};
pub use fetch::{fetcher_for, DirFetcher, FetchError, Fetcher, HttpFetcher};
pub use parse::{parse_ad, parse_listing, AdError, Listing, ListingError};
pub use throttle::TokenBucket;
