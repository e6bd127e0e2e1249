//! Extraction of every (or every listed) release tag into the cache.

use archdelta_core::metrics::cohesion_report;
use archdelta_core::repo::{self, RepoHandle};
use archdelta_core::store::{self, CacheLayout, Manifest};
use archdelta_core::{build_snapshot, EntityKind, Error, ReleaseTag, Snapshot};
use rayon::prelude::*;
use serde::Serialize;

use crate::payload::{AppError, AppResult};

#[derive(Debug, Clone, Default)]
pub struct AnalyzeOptions {
    pub locator: String,
    /// `None` analyzes every tag.
    pub tags: Option<Vec<String>>,
    /// Worker threads; `None` uses one per CPU.
    pub jobs: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TagSummary {
    pub tag: String,
    pub files: usize,
    pub functions: usize,
    pub classes: usize,
    pub parse_failures: usize,
    pub cached: bool,
}

impl TagSummary {
    fn of(s: &Snapshot, cached: bool) -> Self {
        TagSummary {
            tag: s.tag.name.clone(),
            files: s.count(EntityKind::File),
            functions: s.count(EntityKind::FunctionDef),
            classes: s.count(EntityKind::ClassDef),
            parse_failures: s.parse_failures.len(),
            cached,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct AnalyzeOutcome {
    pub repo_id: String,
    pub summaries: Vec<TagSummary>,
}

fn select_tags(all: Vec<ReleaseTag>, wanted: &Option<Vec<String>>) -> AppResult<Vec<ReleaseTag>> {
    let Some(wanted) = wanted else {
        return Ok(all);
    };
    if let Some(missing) = wanted.iter().find(|w| !all.iter().any(|t| &t.name == *w)) {
        return Err(Error::UnknownTag(missing.clone()).into());
    }
    Ok(all
        .into_iter()
        .filter(|t| wanted.contains(&t.name))
        .collect())
}

fn is_cached(cache: &CacheLayout, manifest: &Manifest, repo_id: &str, tag: &ReleaseTag) -> bool {
    manifest
        .tag(&tag.name)
        .is_some_and(|known| known.commit_id == tag.commit_id)
        && store::has_snapshot(cache, repo_id, &tag.name)
        && cache.cohesion_path(repo_id, &tag.name).is_file()
}

fn analyze_tag(
    cache: &CacheLayout,
    handle: &RepoHandle,
    manifest: &Manifest,
    tag: &ReleaseTag,
) -> AppResult<TagSummary> {
    if is_cached(cache, manifest, &handle.repo_id, tag) {
        match store::load_snapshot(cache, &handle.repo_id, &tag.name) {
            Ok(s) => {
                log::info!("{}: cached, skipping extraction", tag.name);
                return Ok(TagSummary::of(&s, true));
            }
            Err(e) => log::warn!("{}: cached snapshot unusable ({e}), rebuilding", tag.name),
        }
    }
    let tree = repo::materialize_tree(handle, tag)?;
    let s = build_snapshot(&handle.repo_id, &tree, tag)?;
    for failure in &s.parse_failures {
        log::warn!("{}: {}: {}", tag.name, failure.path, failure.error);
    }
    store::save_snapshot(&s, cache)?;
    store::save_cohesion(&cohesion_report(&s), &handle.repo_id, cache)?;
    log::info!(
        "{}: extracted {} files, {} entities",
        tag.name,
        s.count(EntityKind::File),
        s.entities.len()
    );
    Ok(TagSummary::of(&s, false))
}

/// Opens the repository, extracts the selected tags that are not cached yet
/// and merges them into the manifest.
pub fn analyze(cache: &CacheLayout, opts: &AnalyzeOptions) -> AppResult<AnalyzeOutcome> {
    let handle = repo::open_repo(&opts.locator, cache.root())?;
    let tags = select_tags(repo::list_release_tags(&handle)?, &opts.tags)?;
    log::info!("{}: {} tag(s) to analyze", handle.repo_id, tags.len());
    let mut manifest = match store::load_manifest(cache, &handle.repo_id) {
        Ok(m) => m,
        Err(Error::RepoNotCached(_)) => Manifest::new(&handle.repo_id, &handle.locator),
        Err(e) => return Err(e.into()),
    };
    manifest.locator = handle.locator.clone();

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.jobs.unwrap_or(0))
        .build()
        .map_err(|e| AppError::Usage(format!("cannot start {:?} workers: {e}", opts.jobs)))?;
    let summaries: Vec<TagSummary> = pool.install(|| {
        tags.par_iter()
            .map(|t| analyze_tag(cache, &handle, &manifest, t))
            .collect::<AppResult<_>>()
    })?;

    manifest.merge_tags(tags);
    manifest.tool_version = store::TOOL_VERSION.to_owned();
    store::save_manifest(&manifest, cache)?;
    Ok(AnalyzeOutcome {
        repo_id: handle.repo_id,
        summaries,
    })
}
