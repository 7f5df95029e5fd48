use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;
use std::str::FromStr;

use super::EmbedError;

/// On-disk word2vec layouts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EmbeddingFormat {
    Text,
    Binary,
    /// Binary if the payload after the header is not valid UTF-8.
    Auto,
}

impl FromStr for EmbeddingFormat {
    type Err = EmbedError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "text" | "txt" => Ok(EmbeddingFormat::Text),
            "binary" | "bin" => Ok(EmbeddingFormat::Binary),
            "auto" => Ok(EmbeddingFormat::Auto),
            other => Err(EmbedError::Format(format!("unknown embedding format {other:?}"))),
        }
    }
}

/// Immutable token → vector table.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingStore {
    dim: usize,
    index: HashMap<String, usize>,
    tokens: Vec<String>,
    data: Vec<f32>,
}

impl EmbeddingStore {
    pub fn new(dim: usize) -> Result<Self, EmbedError> {
        if dim == 0 {
            return Err(EmbedError::Format("embedding dimension must be positive".into()));
        }
        Ok(EmbeddingStore {
            dim,
            index: HashMap::new(),
            tokens: Vec::new(),
            data: Vec::new(),
        })
    }

    /// Adds `token`. Returns `false` (and keeps the first vector) if the
    /// token is already present.
    pub fn insert(&mut self, token: &str, vector: &[f32]) -> Result<bool, EmbedError> {
        if vector.len() != self.dim {
            return Err(EmbedError::Format(format!(
                "vector for {token:?} has {} components, expected {}",
                vector.len(),
                self.dim
            )));
        }
        if vector.iter().any(|x| !x.is_finite()) {
            return Err(EmbedError::Format(format!("vector for {token:?} has a non-finite entry")));
        }
        if self.index.contains_key(token) {
            return Ok(false);
        }
        self.index.insert(token.to_string(), self.tokens.len());
        self.tokens.push(token.to_string());
        self.data.extend_from_slice(vector);
        Ok(true)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn contains(&self, token: &str) -> bool {
        self.index.contains_key(token)
    }

    pub(crate) fn index_of(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    pub fn get(&self, token: &str) -> Option<&[f32]> {
        self.index_of(token).map(|i| self.row(i))
    }

    fn row(&self, i: usize) -> &[f32] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    /// Euclidean distance between two stored rows, accumulated in f64.
    pub(crate) fn distance(&self, a: usize, b: usize) -> f64 {
        if a == b {
            return 0.0;
        }
        self.row(a)
            .iter()
            .zip(self.row(b))
            .map(|(x, y)| {
                let d = f64::from(*x) - f64::from(*y);
                d * d
            })
            .sum::<f64>()
            .sqrt()
    }

    /// Copy with every vector multiplied by `s`.
    pub fn scaled(&self, s: f32) -> EmbeddingStore {
        EmbeddingStore {
            dim: self.dim,
            index: self.index.clone(),
            tokens: self.tokens.clone(),
            data: self.data.iter().map(|x| x * s).collect(),
        }
    }

    pub fn load(path: &Path, format: EmbeddingFormat, casefold: bool) -> Result<Self, EmbedError> {
        let mut bytes = Vec::new();
        File::open(path)
            .and_then(|mut f| f.read_to_end(&mut bytes))
            .map_err(|e| EmbedError::Io(format!("{}: {e}", path.display())))?;
        Self::from_bytes(&bytes, format, casefold)
    }

    pub fn from_bytes(bytes: &[u8], format: EmbeddingFormat, casefold: bool) -> Result<Self, EmbedError> {
        let format = match format {
            EmbeddingFormat::Auto if std::str::from_utf8(bytes).is_ok() => EmbeddingFormat::Text,
            EmbeddingFormat::Auto => EmbeddingFormat::Binary,
            f => f,
        };
        match format {
            EmbeddingFormat::Binary => Self::read_binary(bytes, casefold),
            _ => Self::read_text(BufReader::new(bytes), casefold),
        }
    }

    /// `vocab_size dim` header, then `token f1 … fdim` per line.
    pub fn read_text<R: BufRead>(reader: R, casefold: bool) -> Result<Self, EmbedError> {
        let mut lines = reader.lines();
        let header = lines
            .next()
            .ok_or_else(|| EmbedError::Format("empty embedding file".into()))?
            .map_err(|e| EmbedError::Io(e.to_string()))?;
        let (count, dim) = parse_header(&header)?;
        let mut store = EmbeddingStore::new(dim)?;
        let mut buf = Vec::with_capacity(dim);
        let mut rows = 0usize;
        for (n, line) in lines.enumerate() {
            let line = line.map_err(|e| EmbedError::Io(e.to_string()))?;
            if line.trim().is_empty() {
                continue;
            }
            let mut parts = line.split_whitespace();
            let token = parts.next().expect("non-empty line");
            buf.clear();
            for p in parts {
                buf.push(
                    p.parse::<f32>()
                        .map_err(|_| EmbedError::Format(format!("line {}: bad component {p:?}", n + 2)))?,
                );
            }
            let key = if casefold { token.to_lowercase() } else { token.to_string() };
            store.insert(&key, &buf)?;
            rows += 1;
        }
        if rows != count {
            return Err(EmbedError::Format(format!("header declares {count} vectors, found {rows}")));
        }
        Ok(store)
    }

    /// Header line as text, then per entry: token bytes, one space,
    /// `dim` little-endian f32, optional newline.
    pub fn read_binary(bytes: &[u8], casefold: bool) -> Result<Self, EmbedError> {
        let nl = bytes
            .iter()
            .position(|b| *b == b'\n')
            .ok_or_else(|| EmbedError::Format("binary embedding file has no header line".into()))?;
        let header = std::str::from_utf8(&bytes[..nl]).map_err(|_| EmbedError::Format("binary header is not text".into()))?;
        let (count, dim) = parse_header(header)?;
        let mut store = EmbeddingStore::new(dim)?;
        let mut pos = nl + 1;
        let mut vec = vec![0f32; dim];
        for k in 0..count {
            while pos < bytes.len() && (bytes[pos] == b'\n' || bytes[pos] == b' ') {
                pos += 1;
            }
            let start = pos;
            while pos < bytes.len() && bytes[pos] != b' ' {
                pos += 1;
            }
            if pos >= bytes.len() {
                return Err(EmbedError::Format(format!("truncated entry {k}")));
            }
            let token = String::from_utf8_lossy(&bytes[start..pos]).into_owned();
            pos += 1;
            let need = dim * 4;
            if pos + need > bytes.len() {
                return Err(EmbedError::Format(format!("truncated vector for {token:?}")));
            }
            for (j, chunk) in bytes[pos..pos + need].chunks_exact(4).enumerate() {
                vec[j] = f32::from_le_bytes([chunk[0], chunk[1], chunk[2], chunk[3]]);
            }
            pos += need;
            let key = if casefold { token.to_lowercase() } else { token };
            store.insert(&key, &vec)?;
        }
        Ok(store)
    }

    pub fn write_text<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{} {}", self.len(), self.dim)?;
        for (i, t) in self.tokens.iter().enumerate() {
            write!(w, "{t}")?;
            for x in self.row(i) {
                write!(w, " {x}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    }

    pub fn write_binary<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{} {}", self.len(), self.dim)?;
        for (i, t) in self.tokens.iter().enumerate() {
            w.write_all(t.as_bytes())?;
            w.write_all(b" ")?;
            for x in self.row(i) {
                w.write_all(&x.to_le_bytes())?;
            }
            w.write_all(b"\n")?;
        }
        Ok(())
    }
}

fn parse_header(line: &str) -> Result<(usize, usize), EmbedError> {
    let mut it = line.split_whitespace().map(str::parse::<usize>);
    match (it.next(), it.next(), it.next()) {
        (Some(Ok(n)), Some(Ok(d)), None) => Ok((n, d)),
        _ => Err(EmbedError::Format(format!(
            "bad header {line:?}, expected \"vocab_size dim\""
        ))),
    }
}
