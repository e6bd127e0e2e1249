//! Payloads shared by the command line and the HTTP service. Both write the
//! bytes produced here, so `view --format json` and the view endpoint agree
//! byte for byte.

use std::collections::BTreeMap;

use archdelta_core::diff::{component_diff, ComponentDiff};
use archdelta_core::metrics::{similarity_report, SimilarityReport};
use archdelta_core::repo::locator_repo_id;
use archdelta_core::store::{self, export_view, to_versioned_json, CacheLayout, ExportFormat};
use archdelta_core::views::{self, ViewGraph, ViewKind};
use archdelta_core::{EntityKind, RelationKind, ReleaseTag, Snapshot};
use serde::Serialize;

#[derive(Debug, thiserror::Error)]
pub enum AppError {
    #[error(transparent)]
    Core(#[from] archdelta_core::Error),
    #[error("{0}")]
    Usage(String),
}

pub type AppResult<T> = std::result::Result<T, AppError>;

pub const EXIT_OK: i32 = 0;
pub const EXIT_ENV: i32 = 1;
pub const EXIT_MISSING_CACHE: i32 = 2;
pub const EXIT_USAGE: i32 = 64;

impl AppError {
    pub fn exit_code(&self) -> i32 {
        use archdelta_core::Error as E;
        match self {
            AppError::Usage(_) | AppError::Core(E::InvalidArgument(_)) => EXIT_USAGE,
            AppError::Core(E::SnapshotNotCached { .. } | E::RepoNotCached(_)) => EXIT_MISSING_CACHE,
            AppError::Core(_) => EXIT_ENV,
        }
    }

    pub fn is_missing_cache(&self) -> bool {
        self.exit_code() == EXIT_MISSING_CACHE
    }
}

/// Accepts a cached repository id as is; anything else is treated as a
/// locator and mapped to the id `analyze` would give it.
pub fn resolve_repo(cache: &CacheLayout, repo: &str) -> String {
    if cache.manifest_path(repo).is_file() {
        repo.to_owned()
    } else {
        locator_repo_id(repo)
    }
}

pub fn load_view(
    cache: &CacheLayout,
    repo_id: &str,
    tag: &str,
    kind: ViewKind,
    path: &str,
) -> AppResult<ViewGraph> {
    let s = store::load_snapshot(cache, repo_id, tag)?;
    Ok(views::view(&s, kind, path)?)
}

pub fn view_json(
    cache: &CacheLayout,
    repo_id: &str,
    tag: &str,
    kind: ViewKind,
    path: &str,
) -> AppResult<Vec<u8>> {
    Ok(export_view(
        &load_view(cache, repo_id, tag, kind, path)?,
        ExportFormat::Json,
    )?)
}

#[derive(Debug, Clone, Serialize)]
pub struct DiffPayload {
    pub diff: ComponentDiff,
    pub similarity: SimilarityReport,
}

pub fn diff_payload(
    cache: &CacheLayout,
    repo_id: &str,
    base: &str,
    head: &str,
    kind: ViewKind,
    path: &str,
) -> AppResult<DiffPayload> {
    let b = store::load_snapshot(cache, repo_id, base)?;
    let h = store::load_snapshot(cache, repo_id, head)?;
    Ok(DiffPayload {
        diff: component_diff(&b, &h, kind, path)?,
        similarity: similarity_report(&b, &h, path)?,
    })
}

pub fn diff_json(
    cache: &CacheLayout,
    repo_id: &str,
    base: &str,
    head: &str,
    kind: ViewKind,
    path: &str,
) -> AppResult<Vec<u8>> {
    Ok(to_versioned_json(&diff_payload(
        cache, repo_id, base, head, kind, path,
    )?)?)
}

pub fn cohesion_json(cache: &CacheLayout, repo_id: &str, tag: &str) -> AppResult<Vec<u8>> {
    Ok(to_versioned_json(&store::load_cohesion(
        cache, repo_id, tag,
    )?)?)
}

#[derive(Debug, Clone, Serialize)]
pub struct TreeFile {
    pub name: String,
    pub path: String,
    pub kind: EntityKind,
}

#[derive(Debug, Clone, Serialize)]
pub struct TreeDirectory {
    pub name: String,
    pub path: String,
    pub directories: Vec<TreeDirectory>,
    pub files: Vec<TreeFile>,
}

#[derive(Debug, Clone, Serialize)]
struct TreePayload<'a> {
    repo_id: &'a str,
    tag: &'a str,
    root: TreeDirectory,
}

/// Nested directory listing of a snapshot.
pub fn directory_tree(s: &Snapshot) -> TreeDirectory {
    let mut children: BTreeMap<u32, Vec<u32>> = BTreeMap::new();
    for r in s.relations_of(RelationKind::Contains) {
        children.entry(r.src).or_default().push(r.dst);
    }
    fn build(s: &Snapshot, children: &BTreeMap<u32, Vec<u32>>, id: u32) -> TreeDirectory {
        let e = s.entity(id).expect("closed snapshot");
        let mut dir = TreeDirectory {
            name: e.name.clone(),
            path: e.path.clone(),
            directories: Vec::new(),
            files: Vec::new(),
        };
        for &c in children.get(&id).map(Vec::as_slice).unwrap_or_default() {
            let child = s.entity(c).expect("closed snapshot");
            if child.kind == EntityKind::Directory {
                dir.directories.push(build(s, children, c));
            } else {
                dir.files.push(TreeFile {
                    name: child.name.clone(),
                    path: child.path.clone(),
                    kind: child.kind,
                });
            }
        }
        dir.directories.sort_by(|a, b| a.path.cmp(&b.path));
        dir.files.sort_by(|a, b| a.path.cmp(&b.path));
        dir
    }
    let root = s
        .entities_of(EntityKind::Directory)
        .find(|e| e.path.is_empty())
        .map(|e| e.id);
    match root {
        Some(id) => build(s, &children, id),
        None => TreeDirectory {
            name: ".".into(),
            path: String::new(),
            directories: Vec::new(),
            files: Vec::new(),
        },
    }
}

pub fn tree_json(cache: &CacheLayout, repo_id: &str, tag: &str) -> AppResult<Vec<u8>> {
    let s = store::load_snapshot(cache, repo_id, tag)?;
    Ok(to_versioned_json(&TreePayload {
        repo_id,
        tag,
        root: directory_tree(&s),
    })?)
}

#[derive(Debug, Clone, Serialize)]
struct TagsPayload<'a> {
    repo_id: &'a str,
    tags: &'a [ReleaseTag],
}

pub fn tags_json(cache: &CacheLayout, repo_id: &str) -> AppResult<Vec<u8>> {
    let m = store::load_manifest(cache, repo_id)?;
    Ok(to_versioned_json(&TagsPayload {
        repo_id,
        tags: &m.tags,
    })?)
}
