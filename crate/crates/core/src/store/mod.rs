//! On-disk cache of snapshots, cohesion reports and per-repository manifests.
//!
//! ```text
//! <root>/<repo_id>/manifest.json
//! <root>/<repo_id>/snapshot-<tag>.json
//! <root>/<repo_id>/cohesion-<tag>.json
//! <root>/<repo_id>/git/            bare clone, remote repositories only
//! ```
//!
//! Every file carries `schema_version`. Writes go through a temporary file in
//! the same directory and are renamed into place, so readers only ever see
//! complete files.

pub mod export;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use percent_encoding::{percent_decode_str, utf8_percent_encode, AsciiSet, NON_ALPHANUMERIC};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::CohesionReport;
use crate::model::Snapshot;
use crate::repo::ReleaseTag;

pub use export::{export_view, legend_entries, ExportFormat, LegendEntry};

pub const SCHEMA_VERSION: u32 = 1;
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

const TAG_ESCAPES: &AsciiSet = &NON_ALPHANUMERIC.remove(b'-').remove(b'_');

/// File-name-safe form of a tag; `.` is escaped so `..` cannot escape the
/// repository directory.
pub fn encode_tag(tag: &str) -> String {
    utf8_percent_encode(tag, TAG_ESCAPES).to_string()
}

pub fn decode_tag(encoded: &str) -> String {
    percent_decode_str(encoded).decode_utf8_lossy().into_owned()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CacheLayout {
    root: PathBuf,
}

impl CacheLayout {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        CacheLayout { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn repo_dir(&self, repo_id: &str) -> PathBuf {
        self.root.join(repo_id)
    }

    pub fn manifest_path(&self, repo_id: &str) -> PathBuf {
        self.repo_dir(repo_id).join("manifest.json")
    }

    pub fn snapshot_path(&self, repo_id: &str, tag: &str) -> PathBuf {
        self.repo_dir(repo_id)
            .join(format!("snapshot-{}.json", encode_tag(tag)))
    }

    pub fn cohesion_path(&self, repo_id: &str, tag: &str) -> PathBuf {
        self.repo_dir(repo_id)
            .join(format!("cohesion-{}.json", encode_tag(tag)))
    }

    /// Repositories that have a manifest, sorted by id.
    pub fn repo_ids(&self) -> Result<Vec<String>> {
        let entries = match fs::read_dir(&self.root) {
            Ok(entries) => entries,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
            Err(e) => return Err(Error::io(&self.root, e)),
        };
        let mut ids = Vec::new();
        for entry in entries {
            let entry = entry.map_err(|e| Error::io(&self.root, e))?;
            let Some(name) = entry.file_name().to_str().map(str::to_owned) else {
                continue;
            };
            if self.manifest_path(&name).is_file() {
                ids.push(name);
            }
        }
        ids.sort();
        Ok(ids)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub repo_id: String,
    pub locator: String,
    /// Analyzed tags in release order.
    pub tags: Vec<ReleaseTag>,
    pub tool_version: String,
}

impl Manifest {
    pub fn new(repo_id: impl Into<String>, locator: impl Into<String>) -> Self {
        Manifest {
            repo_id: repo_id.into(),
            locator: locator.into(),
            tags: Vec::new(),
            tool_version: TOOL_VERSION.to_owned(),
        }
    }

    /// Adds or replaces tags by name, keeping release order.
    pub fn merge_tags(&mut self, tags: impl IntoIterator<Item = ReleaseTag>) {
        for t in tags {
            self.tags.retain(|existing| existing.name != t.name);
            self.tags.push(t);
        }
        self.tags
            .sort_by(|a, b| (a.timestamp, &a.name).cmp(&(b.timestamp, &b.name)));
    }

    pub fn tag(&self, name: &str) -> Option<&ReleaseTag> {
        self.tags.iter().find(|t| t.name == name)
    }
}

#[derive(Serialize)]
struct Envelope<'a, T> {
    schema_version: u32,
    #[serde(flatten)]
    body: &'a T,
}

/// Pretty JSON with `schema_version` first and a trailing newline.
pub fn to_versioned_json<T: Serialize>(body: &T) -> Result<Vec<u8>> {
    let mut bytes = serde_json::to_vec_pretty(&Envelope {
        schema_version: SCHEMA_VERSION,
        body,
    })?;
    bytes.push(b'\n');
    Ok(bytes)
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().unwrap_or(Path::new("."));
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

/// Reads a versioned file; `None` when it does not exist.
fn read_versioned<T: DeserializeOwned>(path: &Path) -> Result<Option<T>> {
    let bytes = match fs::read(path) {
        Ok(b) => b,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
        Err(e) => return Err(Error::io(path, e)),
    };
    let corrupt = |message: String| Error::CorruptPayload {
        path: path.to_owned(),
        message,
    };
    let value: serde_json::Value =
        serde_json::from_slice(&bytes).map_err(|e| corrupt(e.to_string()))?;
    let found = value
        .get("schema_version")
        .and_then(serde_json::Value::as_u64)
        .ok_or_else(|| corrupt("missing schema_version".into()))?;
    if found != SCHEMA_VERSION as u64 {
        return Err(Error::SchemaMismatch {
            path: path.to_owned(),
            found: u32::try_from(found).unwrap_or(u32::MAX),
            expected: SCHEMA_VERSION,
        });
    }
    serde_json::from_value(value)
        .map(Some)
        .map_err(|e| corrupt(e.to_string()))
}

/// Sorts entities by id and relations by `(src, dst, kind)` before writing, so
/// equal snapshots produce identical bytes.
pub fn save_snapshot(s: &Snapshot, cache: &CacheLayout) -> Result<PathBuf> {
    let mut canonical = s.clone();
    canonical.entities.sort_by_key(|e| e.id);
    canonical.relations.sort();
    canonical.relations.dedup();
    canonical.method_facts.sort_by_key(|f| f.method);
    let path = cache.snapshot_path(&s.repo_id, &s.tag.name);
    write_atomic(&path, &to_versioned_json(&canonical)?)?;
    Ok(path)
}

pub fn has_snapshot(cache: &CacheLayout, repo_id: &str, tag: &str) -> bool {
    cache.snapshot_path(repo_id, tag).is_file()
}

pub fn load_snapshot(cache: &CacheLayout, repo_id: &str, tag: &str) -> Result<Snapshot> {
    let path = cache.snapshot_path(repo_id, tag);
    let s: Snapshot = read_versioned(&path)?.ok_or_else(|| Error::SnapshotNotCached {
        repo_id: repo_id.to_owned(),
        tag: tag.to_owned(),
    })?;
    s.validate().map_err(|e| Error::CorruptPayload {
        path: path.clone(),
        message: e.to_string(),
    })?;
    Ok(s)
}

pub fn save_cohesion(
    report: &CohesionReport,
    repo_id: &str,
    cache: &CacheLayout,
) -> Result<PathBuf> {
    let path = cache.cohesion_path(repo_id, &report.tag);
    write_atomic(&path, &to_versioned_json(report)?)?;
    Ok(path)
}

pub fn load_cohesion(cache: &CacheLayout, repo_id: &str, tag: &str) -> Result<CohesionReport> {
    read_versioned(&cache.cohesion_path(repo_id, tag))?.ok_or_else(|| Error::SnapshotNotCached {
        repo_id: repo_id.to_owned(),
        tag: tag.to_owned(),
    })
}

pub fn save_manifest(m: &Manifest, cache: &CacheLayout) -> Result<PathBuf> {
    let path = cache.manifest_path(&m.repo_id);
    write_atomic(&path, &to_versioned_json(m)?)?;
    Ok(path)
}

pub fn load_manifest(cache: &CacheLayout, repo_id: &str) -> Result<Manifest> {
    read_versioned(&cache.manifest_path(repo_id))?
        .ok_or_else(|| Error::RepoNotCached(repo_id.to_owned()))
}
