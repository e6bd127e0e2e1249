//! Repository access: open a git repository, enumerate release tags and
//! materialize the committed file tree of any tag.
//!
//! All git access goes through the `git` executable with read-only plumbing
//! commands (`for-each-ref`, `ls-tree`, `cat-file`), so materializing a tag
//! never touches a working tree or HEAD.

use std::collections::{BTreeSet, HashMap};
use std::io::{BufRead, BufReader, Read, Write};
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::sync::{Arc, Mutex, OnceLock};

use chrono::{DateTime, TimeZone, Utc};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RepoHandle {
    pub locator: String,
    /// Git directory holding the object store.
    pub workdir: PathBuf,
    pub repo_id: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ReleaseTag {
    pub name: String,
    pub commit_id: String,
    pub timestamp: DateTime<Utc>,
}

impl ReleaseTag {
    /// Tag used for trees read straight from a directory or from memory.
    pub fn synthetic(name: impl Into<String>) -> Self {
        ReleaseTag {
            name: name.into(),
            commit_id: String::new(),
            timestamp: Utc.timestamp_opt(0, 0).unwrap(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EntryKind {
    Directory,
    File,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ContentHandle {
    /// Blob id inside the tree's git object store.
    Blob(String),
    /// Absolute path on disk.
    Disk(PathBuf),
    Inline(Arc<[u8]>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TreeEntry {
    pub path: String,
    pub kind: EntryKind,
    pub content: Option<ContentHandle>,
}

#[derive(Debug, Clone)]
pub struct FileTree {
    pub tag: ReleaseTag,
    /// Sorted by path; the root directory is the entry with the empty path.
    pub entries: Vec<TreeEntry>,
    git_dir: Option<PathBuf>,
}

impl FileTree {
    fn new(tag: ReleaseTag, mut entries: Vec<TreeEntry>, git_dir: Option<PathBuf>) -> Self {
        let mut dirs: BTreeSet<String> = BTreeSet::new();
        dirs.insert(String::new());
        for e in &entries {
            let mut p = e.path.as_str();
            while let Some(i) = p.rfind('/') {
                p = &p[..i];
                dirs.insert(p.to_string());
            }
        }
        let present: BTreeSet<String> = entries
            .iter()
            .filter(|e| e.kind == EntryKind::Directory)
            .map(|e| e.path.clone())
            .collect();
        for d in dirs.difference(&present) {
            entries.push(TreeEntry {
                path: d.clone(),
                kind: EntryKind::Directory,
                content: None,
            });
        }
        entries.sort_by(|a, b| a.path.cmp(&b.path));
        entries.dedup_by(|a, b| a.path == b.path);
        FileTree {
            tag,
            entries,
            git_dir,
        }
    }

    /// Builds a tree from in-memory `(path, content)` pairs.
    pub fn from_memory<P, C>(tag: ReleaseTag, files: impl IntoIterator<Item = (P, C)>) -> Self
    where
        P: Into<String>,
        C: AsRef<[u8]>,
    {
        let entries = files
            .into_iter()
            .map(|(p, c)| TreeEntry {
                path: normalize_rel(&p.into()),
                kind: EntryKind::File,
                content: Some(ContentHandle::Inline(Arc::from(c.as_ref()))),
            })
            .collect();
        FileTree::new(tag, entries, None)
    }

    /// Builds a tree from a directory on disk, skipping `.git`.
    pub fn from_directory(root: &Path, tag: ReleaseTag) -> Result<Self> {
        let mut entries = Vec::new();
        let walker = walkdir::WalkDir::new(root)
            .follow_links(false)
            .into_iter()
            .filter_entry(|e| e.file_name() != ".git");
        for item in walker {
            let item = item.map_err(|e| {
                let path = e
                    .path()
                    .map(Path::to_path_buf)
                    .unwrap_or_else(|| root.into());
                Error::io(path, e.into())
            })?;
            let rel = item
                .path()
                .strip_prefix(root)
                .expect("walkdir yields children of root");
            let rel = rel
                .components()
                .map(|c| c.as_os_str().to_string_lossy())
                .collect::<Vec<_>>()
                .join("/");
            if rel.is_empty() {
                continue;
            }
            let ft = item.file_type();
            if ft.is_dir() {
                entries.push(TreeEntry {
                    path: rel,
                    kind: EntryKind::Directory,
                    content: None,
                });
            } else if ft.is_file() {
                entries.push(TreeEntry {
                    path: rel,
                    kind: EntryKind::File,
                    content: Some(ContentHandle::Disk(item.path().to_path_buf())),
                });
            }
        }
        Ok(FileTree::new(tag, entries, None))
    }

    pub fn files(&self) -> impl Iterator<Item = &TreeEntry> {
        self.entries.iter().filter(|e| e.kind == EntryKind::File)
    }

    pub fn paths(&self) -> BTreeSet<&str> {
        self.entries.iter().map(|e| e.path.as_str()).collect()
    }

    /// Reads the content of every file entry accepted by `filter`, in path
    /// order. Git blobs are fetched through a single `cat-file --batch`.
    pub fn read_files(&self, filter: impl Fn(&str) -> bool) -> Result<Vec<(String, Vec<u8>)>> {
        let wanted: Vec<&TreeEntry> = self.files().filter(|e| filter(&e.path)).collect();
        let blob_ids: Vec<&str> = wanted
            .iter()
            .filter_map(|e| match &e.content {
                Some(ContentHandle::Blob(id)) => Some(id.as_str()),
                _ => None,
            })
            .collect();
        let mut blobs = if blob_ids.is_empty() {
            HashMap::new()
        } else {
            let git_dir = self.git_dir.as_deref().ok_or_else(|| {
                Error::InvalidArgument("tree has blob handles but no object store".into())
            })?;
            cat_blobs(git_dir, &blob_ids)?
        };
        let mut out = Vec::with_capacity(wanted.len());
        for e in wanted {
            let bytes = match &e.content {
                Some(ContentHandle::Blob(id)) => blobs.remove(id.as_str()).unwrap_or_default(),
                Some(ContentHandle::Disk(p)) => {
                    std::fs::read(p).map_err(|err| Error::io(p, err))?
                }
                Some(ContentHandle::Inline(b)) => b.to_vec(),
                None => Vec::new(),
            };
            out.push((e.path.clone(), bytes));
        }
        Ok(out)
    }
}

fn normalize_rel(p: &str) -> String {
    p.replace('\\', "/")
        .split('/')
        .filter(|s| !s.is_empty() && *s != ".")
        .collect::<Vec<_>>()
        .join("/")
}

/// Deterministic cache key for a locator: lowercase alphanumerics joined by
/// single dashes, with URL scheme and `.git` suffix dropped.
pub fn repo_id_for(locator: &str) -> String {
    let mut s = locator.trim();
    if let Some(i) = s.find("://") {
        s = &s[i + 3..];
    }
    if let Some(rest) = s.strip_prefix("git@") {
        s = rest;
    }
    let s = s.trim_end_matches('/');
    let s = s.strip_suffix(".git").unwrap_or(s);
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        if c.is_ascii_alphanumeric() || c == '.' || c == '_' {
            out.push(c.to_ascii_lowercase());
        } else if !out.ends_with('-') {
            out.push('-');
        }
    }
    let out = out.trim_matches(|c| c == '-' || c == '.').to_string();
    if out.is_empty() {
        "repo".to_string()
    } else {
        out
    }
}

/// The id [`open_repo`] will assign to `locator`, computed without touching
/// the network.
pub fn locator_repo_id(locator: &str) -> String {
    if looks_remote(locator) {
        return repo_id_for(locator);
    }
    match Path::new(locator).canonicalize() {
        Ok(p) => repo_id_for(&p.to_string_lossy()),
        Err(_) => repo_id_for(locator),
    }
}

pub fn looks_remote(locator: &str) -> bool {
    locator.contains("://") || (locator.contains('@') && locator.contains(':'))
}

fn git(dir: Option<&Path>, args: &[&str]) -> Result<Vec<u8>> {
    let mut cmd = Command::new("git");
    if let Some(d) = dir {
        cmd.arg("--git-dir").arg(d);
    }
    cmd.args(args).stdin(Stdio::null());
    let out = cmd.output().map_err(|e| Error::Git {
        command: args.first().copied().unwrap_or("").to_string(),
        message: e.to_string(),
    })?;
    if !out.status.success() {
        return Err(Error::Git {
            command: args.join(" "),
            message: String::from_utf8_lossy(&out.stderr).trim().to_string(),
        });
    }
    Ok(out.stdout)
}

fn single_flight(repo_id: &str) -> Arc<Mutex<()>> {
    static LOCKS: OnceLock<Mutex<HashMap<String, Arc<Mutex<()>>>>> = OnceLock::new();
    let mut map = LOCKS
        .get_or_init(Default::default)
        .lock()
        .unwrap_or_else(|e| e.into_inner());
    map.entry(repo_id.to_string()).or_default().clone()
}

/// Opens a repository. Local paths are read in place; remote locators are
/// cloned (bare) into `<cache_root>/<repo_id>/git`, or fetched when that
/// clone already exists.
pub fn open_repo(locator: &str, cache_root: &Path) -> Result<RepoHandle> {
    if looks_remote(locator) {
        let repo_id = repo_id_for(locator);
        let lock = single_flight(&repo_id);
        let _guard = lock.lock().unwrap_or_else(|e| e.into_inner());
        let git_dir = cache_root.join(&repo_id).join("git");
        if git_dir.join("HEAD").exists() {
            git(
                Some(&git_dir),
                &[
                    "fetch",
                    "--prune",
                    "--tags",
                    "--force",
                    "origin",
                    "+refs/heads/*:refs/heads/*",
                ],
            )?;
        } else {
            std::fs::create_dir_all(git_dir.parent().unwrap())
                .map_err(|e| Error::io(&git_dir, e))?;
            let dst = git_dir.to_string_lossy().to_string();
            git(None, &["clone", "--bare", "--quiet", locator, &dst])?;
        }
        return Ok(RepoHandle {
            locator: locator.to_string(),
            workdir: git_dir,
            repo_id,
        });
    }

    let path = Path::new(locator);
    let canonical = path
        .canonicalize()
        .map_err(|_| Error::NotARepository(locator.to_string()))?;
    let mut cmd = Command::new("git");
    cmd.arg("-C")
        .arg(&canonical)
        .args(["rev-parse", "--absolute-git-dir"])
        .stdin(Stdio::null());
    let out = cmd.output().map_err(|e| Error::Git {
        command: "rev-parse".into(),
        message: e.to_string(),
    })?;
    if !out.status.success() {
        return Err(Error::NotARepository(locator.to_string()));
    }
    let git_dir = PathBuf::from(String::from_utf8_lossy(&out.stdout).trim());
    let canonical = canonical.to_string_lossy().to_string();
    Ok(RepoHandle {
        repo_id: repo_id_for(&canonical),
        locator: canonical,
        workdir: git_dir,
    })
}

/// Tags sorted by tagged-commit timestamp, then by name. Tags that do not
/// peel to a commit are skipped.
pub fn list_release_tags(repo: &RepoHandle) -> Result<Vec<ReleaseTag>> {
    let fmt = "%(refname:strip=2)%00%(objecttype)%00%(objectname)%00%(committerdate:unix)\
               %00%(*objecttype)%00%(*objectname)%00%(*committerdate:unix)";
    let raw = git(
        Some(&repo.workdir),
        &["for-each-ref", &format!("--format={fmt}"), "refs/tags"],
    )?;
    let text = String::from_utf8_lossy(&raw);
    let mut tags = Vec::new();
    for line in text.lines().filter(|l| !l.is_empty()) {
        let f: Vec<&str> = line.split('\0').collect();
        if f.len() < 7 {
            continue;
        }
        let (commit, secs) = if f[1] == "commit" {
            (f[2].to_string(), f[3].to_string())
        } else if f[4] == "commit" {
            (f[5].to_string(), f[6].to_string())
        } else {
            // nested annotated tags and the like
            match peel_to_commit(&repo.workdir, f[0]) {
                Some(pair) => pair,
                None => continue,
            }
        };
        let Ok(secs) = secs.trim().parse::<i64>() else {
            continue;
        };
        let Some(timestamp) = Utc.timestamp_opt(secs, 0).single() else {
            continue;
        };
        tags.push(ReleaseTag {
            name: f[0].to_string(),
            commit_id: commit,
            timestamp,
        });
    }
    tags.sort_by(|a, b| {
        a.timestamp
            .cmp(&b.timestamp)
            .then_with(|| a.name.cmp(&b.name))
    });
    Ok(tags)
}

fn peel_to_commit(git_dir: &Path, tag: &str) -> Option<(String, String)> {
    let spec = format!("refs/tags/{tag}^{{commit}}");
    let id = git(Some(git_dir), &["rev-parse", "--verify", "--quiet", &spec]).ok()?;
    let id = String::from_utf8_lossy(&id).trim().to_string();
    let secs = git(Some(git_dir), &["show", "-s", "--format=%ct", &id]).ok()?;
    Some((id, String::from_utf8_lossy(&secs).trim().to_string()))
}

pub fn find_tag(repo: &RepoHandle, name: &str) -> Result<ReleaseTag> {
    list_release_tags(repo)?
        .into_iter()
        .find(|t| t.name == name)
        .ok_or_else(|| Error::UnknownTag(name.to_string()))
}

/// Lists the committed tree of `tag` without checking anything out.
pub fn materialize_tree(repo: &RepoHandle, tag: &ReleaseTag) -> Result<FileTree> {
    let known = list_release_tags(repo)?;
    let tag = known
        .into_iter()
        .find(|t| t.name == tag.name)
        .ok_or_else(|| Error::UnknownTag(tag.name.clone()))?;
    let raw = git(
        Some(&repo.workdir),
        &["ls-tree", "-r", "-t", "-z", "--full-tree", &tag.commit_id],
    )?;
    let mut entries = Vec::new();
    for rec in raw.split(|&b| b == 0).filter(|r| !r.is_empty()) {
        let rec = String::from_utf8_lossy(rec);
        let Some((meta, path)) = rec.split_once('\t') else {
            continue;
        };
        let mut parts = meta.split(' ');
        let (_mode, kind, oid) = match (parts.next(), parts.next(), parts.next()) {
            (Some(m), Some(k), Some(o)) => (m, k, o),
            _ => continue,
        };
        match kind {
            "tree" => entries.push(TreeEntry {
                path: path.to_string(),
                kind: EntryKind::Directory,
                content: None,
            }),
            "blob" => entries.push(TreeEntry {
                path: path.to_string(),
                kind: EntryKind::File,
                content: Some(ContentHandle::Blob(oid.to_string())),
            }),
            // submodules
            _ => {}
        }
    }
    Ok(FileTree::new(tag, entries, Some(repo.workdir.clone())))
}

fn cat_blobs(git_dir: &Path, ids: &[&str]) -> Result<HashMap<String, Vec<u8>>> {
    let mut child = Command::new("git")
        .arg("--git-dir")
        .arg(git_dir)
        .args(["cat-file", "--batch"])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .map_err(|e| Error::Git {
            command: "cat-file".into(),
            message: e.to_string(),
        })?;
    let mut stdin = child.stdin.take().expect("piped stdin");
    let request: String = ids.iter().map(|id| format!("{id}\n")).collect();
    let writer = std::thread::spawn(move || {
        let res = stdin.write_all(request.as_bytes());
        drop(stdin);
        res
    });
    let mut reader = BufReader::new(child.stdout.take().expect("piped stdout"));
    let mut out = HashMap::with_capacity(ids.len());
    let mut header = String::new();
    for id in ids {
        header.clear();
        reader
            .read_line(&mut header)
            .map_err(|e| Error::io(git_dir, e))?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(Error::Git {
                command: "cat-file".into(),
                message: format!("unexpected response for {id}: {}", header.trim()),
            });
        }
        let size: usize = fields[2].parse().map_err(|_| Error::Git {
            command: "cat-file".into(),
            message: format!("bad size in '{}'", header.trim()),
        })?;
        let mut buf = vec![0; size + 1];
        reader
            .read_exact(&mut buf)
            .map_err(|e| Error::io(git_dir, e))?;
        buf.pop();
        out.insert((*id).to_string(), buf);
    }
    let _ = writer.join();
    let _ = child.wait();
    Ok(out)
}
