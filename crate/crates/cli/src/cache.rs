//! Content-addressed store for expensive intermediate matrices.

use std::path::PathBuf;

use serde::de::DeserializeOwned;
use serde::Serialize;
use sha2::{Digest, Sha256};

/// Hex SHA-256 over length-prefixed parts, so part boundaries matter.
pub fn digest(parts: &[&[u8]]) -> String {
    let mut h = Sha256::new();
    for p in parts {
        h.update((p.len() as u64).to_le_bytes());
        h.update(p);
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

pub struct Cache {
    dir: PathBuf,
    pub hits: Vec<String>,
    pub misses: Vec<String>,
}

impl Cache {
    pub fn new(dir: PathBuf) -> Self {
        Cache {
            dir,
            hits: Vec::new(),
            misses: Vec::new(),
        }
    }

    fn path(&self, kind: &str, key: &str) -> PathBuf {
        self.dir.join(format!("{kind}-{}.json", &key[..16.min(key.len())]))
    }

    /// The entry for `(kind, key)`, if present and readable. The full key is
    /// stored inside the entry and checked on read.
    pub fn get<T: DeserializeOwned>(&mut self, kind: &str, key: &str) -> Option<T> {
        let text = std::fs::read_to_string(self.path(kind, key)).ok()?;
        let (stored, value): (String, T) = match serde_json::from_str(&text) {
            Ok(v) => v,
            Err(e) => {
                log::warn!("ignoring unreadable cache entry for {kind}: {e}");
                return None;
            }
        };
        if stored != key {
            return None;
        }
        log::info!("cache hit: {kind}");
        self.hits.push(kind.to_string());
        Some(value)
    }

    pub fn put<T: Serialize>(&mut self, kind: &str, key: &str, value: &T) -> std::io::Result<()> {
        std::fs::create_dir_all(&self.dir)?;
        let text = serde_json::to_string(&(key, value)).map_err(std::io::Error::other)?;
        std::fs::write(self.path(kind, key), text)?;
        self.misses.push(kind.to_string());
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn boundaries_matter() {
        assert_ne!(digest(&[b"ab", b"c"]), digest(&[b"a", b"bc"]));
        assert_eq!(digest(&[b"x"]).len(), 64);
    }

    #[test]
    fn round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let mut c = Cache::new(dir.path().join("cache"));
        let key = digest(&[b"k"]);
        assert_eq!(c.get::<Vec<u64>>("m", &key), None);
        c.put("m", &key, &vec![1u64, 2]).unwrap();
        assert_eq!(c.get::<Vec<u64>>("m", &key), Some(vec![1, 2]));
        assert_eq!(c.hits, vec!["m"]);
        let other = digest(&[b"j"]);
        assert_eq!(c.get::<Vec<u64>>("m", &other), None);
    }
}
