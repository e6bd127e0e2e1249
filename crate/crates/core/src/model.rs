//! Extracted architecture model of a single release.
//!
//! A [`Snapshot`] is a flat entity table plus a relation table. Entities are
//! directories, files, definitions, call sites and internal modules; every
//! relation is typed and must respect the endpoint table in
//! [`RelationKind::admits`].

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::repo::ReleaseTag;

pub type EntityId = u32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntityKind {
    Directory,
    File,
    FunctionDef,
    CallSite,
    ClassDef,
    Module,
    /// Files that are not Python sources.
    Unknown,
}

impl EntityKind {
    pub const ALL: [EntityKind; 7] = [
        EntityKind::Directory,
        EntityKind::File,
        EntityKind::FunctionDef,
        EntityKind::CallSite,
        EntityKind::ClassDef,
        EntityKind::Module,
        EntityKind::Unknown,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            EntityKind::Directory => "directory",
            EntityKind::File => "file",
            EntityKind::FunctionDef => "function_def",
            EntityKind::CallSite => "call_site",
            EntityKind::ClassDef => "class_def",
            EntityKind::Module => "module",
            EntityKind::Unknown => "unknown",
        }
    }

    /// Human-readable component name shown on node inspection.
    pub fn display_name(self) -> &'static str {
        match self {
            EntityKind::Directory => "directory",
            EntityKind::File => "file",
            EntityKind::FunctionDef => "function definition",
            EntityKind::CallSite => "function call",
            EntityKind::ClassDef => "class definition",
            EntityKind::Module => "module",
            EntityKind::Unknown => "other file",
        }
    }

    /// File-like kinds: anything that occupies a path in the file tree.
    pub fn is_file_like(self) -> bool {
        matches!(self, EntityKind::File | EntityKind::Unknown)
    }
}

impl fmt::Display for EntityKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Span {
    pub start: u32,
    pub end: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Entity {
    pub id: EntityId,
    pub kind: EntityKind,
    pub name: String,
    /// Identity key used for matching across releases; see [`crate::diff::match_key`].
    pub qualified_name: String,
    /// Repo-relative file path; empty for modules.
    pub path: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub span: Option<Span>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RelationKind {
    Contains,
    Defines,
    Calls,
    ResolvesTo,
    Inherits,
    Aggregates,
    Imports,
}

impl RelationKind {
    pub const ALL: [RelationKind; 7] = [
        RelationKind::Contains,
        RelationKind::Defines,
        RelationKind::Calls,
        RelationKind::ResolvesTo,
        RelationKind::Inherits,
        RelationKind::Aggregates,
        RelationKind::Imports,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            RelationKind::Contains => "contains",
            RelationKind::Defines => "defines",
            RelationKind::Calls => "calls",
            RelationKind::ResolvesTo => "resolves_to",
            RelationKind::Inherits => "inherits",
            RelationKind::Aggregates => "aggregates",
            RelationKind::Imports => "imports",
        }
    }

    /// Endpoint kinds allowed for this relation.
    pub fn admits(self, src: EntityKind, dst: EntityKind) -> bool {
        use EntityKind as K;
        match self {
            RelationKind::Contains => {
                src == K::Directory && matches!(dst, K::Directory | K::File | K::Unknown)
            }
            RelationKind::Defines => matches!(
                (src, dst),
                (K::File, K::FunctionDef) | (K::File, K::ClassDef) | (K::ClassDef, K::FunctionDef)
            ),
            RelationKind::Calls => matches!(src, K::FunctionDef | K::File) && dst == K::CallSite,
            RelationKind::ResolvesTo => src == K::CallSite && dst == K::FunctionDef,
            RelationKind::Inherits => src == K::ClassDef && matches!(dst, K::ClassDef | K::Module),
            RelationKind::Aggregates => src == K::ClassDef && dst == K::ClassDef,
            RelationKind::Imports => src == K::File && dst == K::Module,
        }
    }
}

impl fmt::Display for RelationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RelationKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        RelationKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown relation kind '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Relation {
    pub src: EntityId,
    pub dst: EntityId,
    pub kind: RelationKind,
}

/// Receiver-level facts for one method, the input to LCOM4.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MethodFacts {
    pub method: EntityId,
    pub accessed_attributes: BTreeSet<String>,
    pub called_sibling_methods: BTreeSet<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParseFailure {
    pub path: String,
    pub error: String,
}

/// Non-fatal observations made while building a snapshot (dropped bases,
/// redefinitions and so on).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Note {
    pub path: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub repo_id: String,
    pub tag: ReleaseTag,
    pub entities: Vec<Entity>,
    pub relations: Vec<Relation>,
    pub method_facts: Vec<MethodFacts>,
    pub parse_failures: Vec<ParseFailure>,
    #[serde(default)]
    pub notes: Vec<Note>,
}

impl Snapshot {
    pub fn entity(&self, id: EntityId) -> Option<&Entity> {
        // ids are dense and sorted once the snapshot is built
        match self.entities.get(id as usize) {
            Some(e) if e.id == id => Some(e),
            _ => self.entities.iter().find(|e| e.id == id),
        }
    }

    pub fn entities_of(&self, kind: EntityKind) -> impl Iterator<Item = &Entity> {
        self.entities.iter().filter(move |e| e.kind == kind)
    }

    pub fn relations_of(&self, kind: RelationKind) -> impl Iterator<Item = &Relation> {
        self.relations.iter().filter(move |r| r.kind == kind)
    }

    pub fn count(&self, kind: EntityKind) -> usize {
        self.entities_of(kind).count()
    }

    /// Whether `path` names a directory entity.
    pub fn has_directory(&self, path: &str) -> bool {
        self.entities
            .iter()
            .any(|e| e.kind == EntityKind::Directory && e.path == path)
    }

    /// Methods directly defined by `class`, with their facts.
    pub fn class_methods(&self, class: EntityId) -> Vec<(&Entity, Option<&MethodFacts>)> {
        let facts: HashMap<EntityId, &MethodFacts> =
            self.method_facts.iter().map(|f| (f.method, f)).collect();
        self.relations
            .iter()
            .filter(|r| r.kind == RelationKind::Defines && r.src == class)
            .filter_map(|r| self.entity(r.dst))
            .filter(|e| e.kind == EntityKind::FunctionDef)
            .map(|e| (e, facts.get(&e.id).copied()))
            .collect()
    }

    /// Checks referential closure, relation endpoint kinds, self-loops and
    /// identity uniqueness.
    pub fn validate(&self) -> Result<()> {
        let mut by_id = BTreeMap::new();
        for e in &self.entities {
            if by_id.insert(e.id, e.kind).is_some() {
                return Err(Error::InvalidSnapshot(format!(
                    "duplicate entity id {}",
                    e.id
                )));
            }
            if e.kind != EntityKind::Module && e.kind != EntityKind::Directory && e.path.is_empty()
            {
                return Err(Error::InvalidSnapshot(format!(
                    "entity {} ({}) has no path",
                    e.id, e.kind
                )));
            }
        }
        let mut identities = BTreeSet::new();
        for e in &self.entities {
            if !identities.insert((e.kind, e.qualified_name.as_str())) {
                return Err(Error::InvalidSnapshot(format!(
                    "duplicate identity {} '{}'",
                    e.kind, e.qualified_name
                )));
            }
        }
        for r in &self.relations {
            let (Some(&src), Some(&dst)) = (by_id.get(&r.src), by_id.get(&r.dst)) else {
                return Err(Error::InvalidSnapshot(format!(
                    "relation {} {}->{} has a dangling endpoint",
                    r.kind, r.src, r.dst
                )));
            };
            if r.src == r.dst {
                return Err(Error::InvalidSnapshot(format!(
                    "self-loop on entity {}",
                    r.src
                )));
            }
            if !r.kind.admits(src, dst) {
                return Err(Error::InvalidSnapshot(format!(
                    "relation {} not allowed from {} to {}",
                    r.kind, src, dst
                )));
            }
        }
        for f in &self.method_facts {
            let owned = self.relations.iter().any(|r| {
                r.kind == RelationKind::Defines
                    && r.dst == f.method
                    && by_id.get(&r.src) == Some(&EntityKind::ClassDef)
            });
            if !owned {
                return Err(Error::InvalidSnapshot(format!(
                    "method facts for {} not owned by a class",
                    f.method
                )));
            }
        }
        Ok(())
    }
}

/// Key formatting shared by the extractor and the diff engine.
pub mod keys {
    /// `path::Outer.inner`
    pub fn definition(path: &str, dotted: &str) -> String {
        format!("{path}::{dotted}")
    }

    /// `scope::callee#ordinal`, where `scope` is the key of the enclosing
    /// definition or the file path at module level.
    pub fn call_site(scope: &str, callee: &str, ordinal: u32) -> String {
        format!("{scope}::{callee}#{ordinal}")
    }
}
