//! Directory, call, collaboration and integrated views of a snapshot,
//! each restricted to one directory subtree.
//!
//! Edges that leave the scope are kept by adding the out-of-scope endpoint
//! as an external stub node rather than dropping the edge.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Entity, EntityId, EntityKind, RelationKind, Snapshot};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViewKind {
    Directory,
    Call,
    Collaboration,
    Integrated,
}

impl ViewKind {
    pub const ALL: [ViewKind; 4] = [
        ViewKind::Directory,
        ViewKind::Call,
        ViewKind::Collaboration,
        ViewKind::Integrated,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ViewKind::Directory => "directory",
            ViewKind::Call => "call",
            ViewKind::Collaboration => "collaboration",
            ViewKind::Integrated => "integrated",
        }
    }

    /// Component kinds shown in the legend of this view.
    pub fn legend(self) -> &'static [EntityKind] {
        use EntityKind as K;
        match self {
            ViewKind::Directory => &[K::Directory, K::File, K::Unknown],
            ViewKind::Call => &[K::File, K::FunctionDef, K::CallSite],
            ViewKind::Collaboration => &[K::File, K::ClassDef, K::Module],
            ViewKind::Integrated => &[K::File, K::FunctionDef, K::CallSite, K::ClassDef, K::Module],
        }
    }
}

impl fmt::Display for ViewKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ViewKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ViewKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown view kind '{s}'")))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ViewNode {
    pub id: EntityId,
    pub kind: EntityKind,
    pub label: String,
    pub qualified_name: String,
    pub path: String,
    pub is_external: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ViewEdge {
    pub src: EntityId,
    pub dst: EntityId,
    pub kind: RelationKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ViewGraph {
    pub view: ViewKind,
    pub scope: String,
    pub nodes: Vec<ViewNode>,
    pub edges: Vec<ViewEdge>,
    pub legend: Vec<EntityKind>,
}

impl ViewGraph {
    pub fn node(&self, id: EntityId) -> Option<&ViewNode> {
        self.nodes
            .binary_search_by_key(&id, |n| n.id)
            .ok()
            .map(|i| &self.nodes[i])
    }

    pub fn internal_nodes(&self) -> impl Iterator<Item = &ViewNode> {
        self.nodes.iter().filter(|n| !n.is_external)
    }
}

/// Canonical form of a scope path: no leading `./` or `/`, no trailing `/`;
/// the repository root is the empty string.
pub fn normalize_scope(scope: &str) -> String {
    scope
        .replace('\\', "/")
        .split('/')
        .filter(|s| !s.is_empty() && *s != ".")
        .collect::<Vec<_>>()
        .join("/")
}

pub fn is_under(path: &str, scope: &str) -> bool {
    scope.is_empty()
        || path == scope
        || (path.len() > scope.len()
            && path.starts_with(scope)
            && path.as_bytes()[scope.len()] == b'/')
}

/// Normalizes `scope` and checks it names a directory of `s`.
pub fn check_scope(s: &Snapshot, scope: &str) -> Result<String> {
    let scope = normalize_scope(scope);
    if s.has_directory(&scope) {
        Ok(scope)
    } else {
        Err(Error::UnknownScope(scope))
    }
}

pub fn view(s: &Snapshot, kind: ViewKind, scope: &str) -> Result<ViewGraph> {
    match kind {
        ViewKind::Directory => directory_view(s, scope),
        ViewKind::Call => call_view(s, scope),
        ViewKind::Collaboration => collaboration_view(s, scope),
        ViewKind::Integrated => integrated_view(s, scope),
    }
}

struct Acc<'a> {
    snapshot: &'a Snapshot,
    scope: String,
    nodes: BTreeMap<EntityId, ViewNode>,
    edges: BTreeSet<ViewEdge>,
}

impl<'a> Acc<'a> {
    fn new(snapshot: &'a Snapshot, scope: String) -> Self {
        Acc {
            snapshot,
            scope,
            nodes: BTreeMap::new(),
            edges: BTreeSet::new(),
        }
    }

    fn add(&mut self, e: &Entity, is_external: bool) {
        self.nodes.entry(e.id).or_insert_with(|| ViewNode {
            id: e.id,
            kind: e.kind,
            label: e.name.clone(),
            qualified_name: e.qualified_name.clone(),
            path: e.path.clone(),
            is_external,
        });
    }

    fn has(&self, id: EntityId) -> bool {
        self.nodes.contains_key(&id)
    }

    fn edge(&mut self, src: EntityId, dst: EntityId, kind: RelationKind) {
        self.edges.insert(ViewEdge { src, dst, kind });
    }

    /// Adds `dst` as an external stub when it is not already a node.
    fn edge_or_stub(&mut self, src: EntityId, dst: EntityId, kind: RelationKind) {
        if !self.has(dst) {
            if let Some(e) = self.snapshot.entity(dst) {
                self.add(e, true);
            }
        }
        self.edge(src, dst, kind);
    }

    fn finish(self, view: ViewKind) -> ViewGraph {
        ViewGraph {
            view,
            scope: self.scope,
            nodes: self.nodes.into_values().collect(),
            edges: self.edges.into_iter().collect(),
            legend: view.legend().to_vec(),
        }
    }
}

pub fn directory_view(s: &Snapshot, scope: &str) -> Result<ViewGraph> {
    let scope = check_scope(s, scope)?;
    let mut acc = Acc::new(s, scope);
    for e in &s.entities {
        if matches!(
            e.kind,
            EntityKind::Directory | EntityKind::File | EntityKind::Unknown
        ) && is_under(&e.path, &acc.scope)
        {
            acc.add(e, false);
        }
    }
    for r in s.relations_of(RelationKind::Contains) {
        if acc.has(r.src) && acc.has(r.dst) {
            acc.edge(r.src, r.dst, r.kind);
        }
    }
    Ok(acc.finish(ViewKind::Directory))
}

fn file_ids(s: &Snapshot) -> HashMap<&str, EntityId> {
    s.entities_of(EntityKind::File)
        .map(|e| (e.path.as_str(), e.id))
        .collect()
}

fn add_call_layer(acc: &mut Acc<'_>) {
    let s = acc.snapshot;
    for e in &s.entities {
        if matches!(
            e.kind,
            EntityKind::File | EntityKind::FunctionDef | EntityKind::CallSite
        ) && is_under(&e.path, &acc.scope)
        {
            acc.add(e, false);
        }
    }
    let files = file_ids(s);
    for r in &s.relations {
        match r.kind {
            RelationKind::Defines if acc.has(r.dst) => {
                let Some(dst) = s.entity(r.dst) else { continue };
                // stubs added for resolves_to are not defined here
                if dst.kind != EntityKind::FunctionDef || !is_under(&dst.path, &acc.scope) {
                    continue;
                }
                // methods: the class is not part of this layer, so the
                // definition is attributed to the file
                let src = if acc.has(r.src)
                    && s.entity(r.src).map(|e| e.kind) == Some(EntityKind::File)
                {
                    r.src
                } else {
                    match files.get(dst.path.as_str()) {
                        Some(&f) => f,
                        None => continue,
                    }
                };
                acc.edge(src, r.dst, RelationKind::Defines);
            }
            RelationKind::Calls if acc.has(r.src) && acc.has(r.dst) => {
                acc.edge(r.src, r.dst, r.kind);
            }
            RelationKind::ResolvesTo if acc.has(r.src) => acc.edge_or_stub(r.src, r.dst, r.kind),
            _ => {}
        }
    }
}

fn add_collaboration_layer(acc: &mut Acc<'_>) {
    let s = acc.snapshot;
    for e in &s.entities {
        if matches!(e.kind, EntityKind::File | EntityKind::ClassDef)
            && is_under(&e.path, &acc.scope)
        {
            acc.add(e, false);
        }
    }
    // modules live in the scope of the files importing them
    let imports: Vec<_> = s
        .relations_of(RelationKind::Imports)
        .filter(|r| acc.has(r.src))
        .copied()
        .collect();
    for r in &imports {
        if let Some(m) = s.entity(r.dst) {
            acc.add(m, false);
        }
        acc.edge(r.src, r.dst, r.kind);
    }
    for r in &s.relations {
        match r.kind {
            RelationKind::Defines if acc.has(r.src) && acc.has(r.dst) => {
                let kinds = (
                    s.entity(r.src).map(|e| e.kind),
                    s.entity(r.dst).map(|e| e.kind),
                );
                if kinds == (Some(EntityKind::File), Some(EntityKind::ClassDef)) {
                    acc.edge(r.src, r.dst, r.kind);
                }
            }
            RelationKind::Inherits | RelationKind::Aggregates if acc.has(r.src) => {
                acc.edge_or_stub(r.src, r.dst, r.kind)
            }
            _ => {}
        }
    }
}

pub fn call_view(s: &Snapshot, scope: &str) -> Result<ViewGraph> {
    let scope = check_scope(s, scope)?;
    let mut acc = Acc::new(s, scope);
    add_call_layer(&mut acc);
    Ok(acc.finish(ViewKind::Call))
}

pub fn collaboration_view(s: &Snapshot, scope: &str) -> Result<ViewGraph> {
    let scope = check_scope(s, scope)?;
    let mut acc = Acc::new(s, scope);
    add_collaboration_layer(&mut acc);
    Ok(acc.finish(ViewKind::Collaboration))
}

/// Union of the call and collaboration views.
pub fn integrated_view(s: &Snapshot, scope: &str) -> Result<ViewGraph> {
    let call = call_view(s, scope)?;
    let collab = collaboration_view(s, scope)?;
    let mut nodes: BTreeMap<EntityId, ViewNode> = BTreeMap::new();
    for n in call.nodes.into_iter().chain(collab.nodes) {
        nodes
            .entry(n.id)
            .and_modify(|existing| existing.is_external &= n.is_external)
            .or_insert(n);
    }
    let edges: BTreeSet<ViewEdge> = call.edges.into_iter().chain(collab.edges).collect();
    Ok(ViewGraph {
        view: ViewKind::Integrated,
        scope: call.scope,
        nodes: nodes.into_values().collect(),
        edges: edges.into_iter().collect(),
        legend: ViewKind::Integrated.legend().to_vec(),
    })
}
