//! Added and removed components between two releases, for one view and scope.
//!
//! Components are matched by [`match_key`] alone, so a rename shows up as one
//! removal plus one addition. External stubs never take part.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Entity, EntityKind, Snapshot};
use crate::views::{self, normalize_scope, ViewGraph, ViewKind, ViewNode};

/// Identity of an entity across releases.
pub fn match_key(e: &Entity) -> &str {
    key_of(e.kind, &e.path, &e.qualified_name)
}

fn key_of<'a>(kind: EntityKind, path: &'a str, qualified_name: &'a str) -> &'a str {
    match kind {
        EntityKind::Directory | EntityKind::File | EntityKind::Unknown => path,
        EntityKind::FunctionDef
        | EntityKind::ClassDef
        | EntityKind::CallSite
        | EntityKind::Module => qualified_name,
    }
}

fn node_key(n: &ViewNode) -> &str {
    key_of(n.kind, &n.path, &n.qualified_name)
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct DiffItem {
    pub kind: EntityKind,
    pub key: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComponentDiff {
    pub base: String,
    pub head: String,
    pub view: ViewKind,
    pub scope: String,
    /// Sorted by `(kind, key)`.
    pub added: Vec<DiffItem>,
    pub removed: Vec<DiffItem>,
}

impl ComponentDiff {
    pub fn is_empty(&self) -> bool {
        self.added.is_empty() && self.removed.is_empty()
    }

    pub fn added_of(&self, kind: EntityKind) -> impl Iterator<Item = &DiffItem> {
        self.added.iter().filter(move |i| i.kind == kind)
    }

    pub fn removed_of(&self, kind: EntityKind) -> impl Iterator<Item = &DiffItem> {
        self.removed.iter().filter(move |i| i.kind == kind)
    }
}

fn items(g: Option<&ViewGraph>) -> BTreeSet<DiffItem> {
    g.map(|g| {
        g.internal_nodes()
            .map(|n| DiffItem {
                kind: n.kind,
                key: node_key(n).to_owned(),
            })
            .collect()
    })
    .unwrap_or_default()
}

/// A scope present in only one snapshot diffs against an empty view.
pub fn component_diff(
    base: &Snapshot,
    head: &Snapshot,
    view: ViewKind,
    scope: &str,
) -> Result<ComponentDiff> {
    if base.repo_id != head.repo_id {
        return Err(Error::InvalidArgument(format!(
            "snapshots belong to different repositories ('{}' and '{}')",
            base.repo_id, head.repo_id
        )));
    }
    let scope = normalize_scope(scope);
    let (in_base, in_head) = (base.has_directory(&scope), head.has_directory(&scope));
    if !in_base && !in_head {
        return Err(Error::UnknownScope(scope));
    }
    let graph = |s: &Snapshot, present: bool| -> Result<Option<ViewGraph>> {
        if present {
            views::view(s, view, &scope).map(Some)
        } else {
            Ok(None)
        }
    };
    let before = items(graph(base, in_base)?.as_ref());
    let after = items(graph(head, in_head)?.as_ref());
    Ok(ComponentDiff {
        base: base.tag.name.clone(),
        head: head.tag.name.clone(),
        view,
        added: after.difference(&before).cloned().collect(),
        removed: before.difference(&after).cloned().collect(),
        scope,
    })
}
