//! Content-addressed disk cache for convolution powers.
//!
//! One text file per `(group, mu hash, n, backend, eps)`:
//!
//! ```text
//! grouprw-measure v1
//! group F:k=2
//! mu <sha256 of the measure>
//! n 8
//! backend exact
//! eps 0
//! dropped 0
//! events 0
//! count 1234
//! <hex element bytes> <weight>
//! ...
//! checksum <sha256 of every line above>
//! ```
//!
//! Records are sorted by element. A file that fails to parse or verify is
//! reported and ignored, and the caller recomputes.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rustc_hash::FxHashMap;
use sha2::{Digest, Sha256};

use super::sparse::{ErrorLedger, SparseMeasure};
use super::weight::Weight;
use crate::error::Result;
use crate::group::{Element, Group};

pub const CACHE_FORMAT: &str = "grouprw-measure v1";
pub const CACHE_ENV: &str = "GROUPRW_CACHE";

#[derive(Clone, Debug)]
pub struct DiskCache {
    dir: PathBuf,
}

impl DiskCache {
    pub fn new(dir: impl Into<PathBuf>) -> Result<Self> {
        let dir = dir.into();
        fs::create_dir_all(&dir)?;
        Ok(DiskCache { dir })
    }

    /// Cache rooted at `$GROUPRW_CACHE`, if set.
    pub fn from_env() -> Option<Self> {
        let dir = std::env::var_os(CACHE_ENV)?;
        match DiskCache::new(PathBuf::from(dir)) {
            Ok(c) => Some(c),
            Err(e) => {
                log::warn!("ignoring {CACHE_ENV}: {e}");
                None
            }
        }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path_for<W: Weight>(&self, group: &Group, mu_hash: &str, n: u64, eps: f64) -> PathBuf {
        let key = format!("{}|{}|{}|{}|{:?}", group.id(), mu_hash, n, W::BACKEND.as_str(), eps);
        let digest = hex::encode(Sha256::digest(key.as_bytes()));
        self.dir.join(format!("{}.measure", &digest[..32]))
    }

    pub fn load<W: Weight>(
        &self,
        group: &Arc<Group>,
        mu_hash: &str,
        n: u64,
        eps: f64,
    ) -> Option<SparseMeasure<W>> {
        let path = self.path_for::<W>(group, mu_hash, n, eps);
        let text = match fs::read_to_string(&path) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return None,
            Err(e) => {
                log::warn!("cache entry {} unreadable ({e}); recomputing", path.display());
                return None;
            }
        };
        match parse::<W>(&text, group, mu_hash, n, eps) {
            Ok(m) => Some(m),
            Err(reason) => {
                log::warn!("corrupt cache entry {} ({reason}); recomputing", path.display());
                None
            }
        }
    }

    pub fn store<W: Weight>(&self, m: &SparseMeasure<W>, mu_hash: &str, n: u64, eps: f64) -> Result<()> {
        let path = self.path_for::<W>(m.group(), mu_hash, n, eps);
        let mut body = String::new();
        body.push_str(CACHE_FORMAT);
        body.push('\n');
        let ledger = m.ledger();
        for (k, v) in [
            ("group", m.group().id().to_string()),
            ("mu", mu_hash.to_string()),
            ("n", n.to_string()),
            ("backend", W::BACKEND.as_str().to_string()),
            ("eps", format!("{eps:?}")),
            ("dropped", format!("{:?}", ledger.dropped_mass)),
            ("events", ledger.truncation_events.to_string()),
            ("count", m.support_len().to_string()),
        ] {
            body.push_str(&format!("{k} {v}\n"));
        }
        for (g, w) in m.sorted_entries() {
            body.push_str(&hex::encode(g.encode()));
            body.push(' ');
            body.push_str(&w.to_text());
            body.push('\n');
        }
        let sum = hex::encode(Sha256::digest(body.as_bytes()));
        body.push_str(&format!("checksum {sum}\n"));

        let tmp = path.with_extension("tmp");
        let mut f = fs::File::create(&tmp)?;
        f.write_all(body.as_bytes())?;
        f.sync_all()?;
        fs::rename(&tmp, &path)?;
        Ok(())
    }
}

fn parse<W: Weight>(
    text: &str,
    group: &Arc<Group>,
    mu_hash: &str,
    n: u64,
    eps: f64,
) -> std::result::Result<SparseMeasure<W>, String> {
    let body_end = text
        .rfind("checksum ")
        .ok_or_else(|| "missing checksum".to_string())?;
    let (body, tail) = text.split_at(body_end);
    let stated = tail["checksum ".len()..].trim();
    if hex::encode(Sha256::digest(body.as_bytes())) != stated {
        return Err("checksum mismatch".into());
    }
    let mut lines = body.lines();
    if lines.next() != Some(CACHE_FORMAT) {
        return Err("unknown format version".into());
    }
    let mut header = |key: &str| -> std::result::Result<String, String> {
        let line = lines.next().ok_or("truncated header")?;
        let (k, v) = line.split_once(' ').ok_or("bad header line")?;
        if k != key {
            return Err(format!("expected `{key}`, found `{k}`"));
        }
        Ok(v.to_string())
    };
    let expect = |got: String, want: String, what: &str| {
        if got == want {
            Ok(())
        } else {
            Err(format!("{what} mismatch"))
        }
    };
    expect(header("group")?, group.id().to_string(), "group")?;
    expect(header("mu")?, mu_hash.to_string(), "measure hash")?;
    expect(header("n")?, n.to_string(), "n")?;
    expect(header("backend")?, W::BACKEND.as_str().to_string(), "backend")?;
    expect(header("eps")?, format!("{eps:?}"), "eps")?;
    let dropped: f64 = header("dropped")?.parse().map_err(|_| "bad dropped mass")?;
    let events: u64 = header("events")?.parse().map_err(|_| "bad event count")?;
    let count: usize = header("count")?.parse().map_err(|_| "bad count")?;

    let mut map: FxHashMap<Element, W> = FxHashMap::default();
    let mut prev: Option<Element> = None;
    for line in lines {
        let (h, w) = line.split_once(' ').ok_or("bad record")?;
        let bytes = hex::decode(h).map_err(|_| "bad element hex")?;
        let g = Element::decode(&bytes).ok_or("undecodable element")?;
        if !group.contains(&g) {
            return Err("element outside the group".into());
        }
        if prev.as_ref().is_some_and(|p| p >= &g) {
            return Err("records out of order".into());
        }
        let w = W::from_text(w).ok_or("bad weight")?;
        prev = Some(g.clone());
        map.insert(g, w);
    }
    if map.len() != count {
        return Err(format!("expected {count} records, found {}", map.len()));
    }
    let ledger = ErrorLedger {
        dropped_mass: dropped,
        truncation_events: events,
        backend: W::BACKEND,
    };
    Ok(SparseMeasure::from_map(group.clone(), map, ledger))
}
