//! Architecture-to-architecture (A2A) similarity.
//!
//! An architecture is a set of components, each carrying a set of entities.
//! `mto` counts the component and entity additions/removals needed to turn
//! one architecture into the other, `aco` counts the operations needed to
//! build an architecture from nothing, and
//!
//! ```text
//! a2a(Ai, Aj) = (1 - mto(Ai, Aj) / (aco(Ai) + aco(Aj))) * 100
//! ```
//!
//! Only the architectural (directory) variant has entities; the functional,
//! class and module variants compare component sets alone.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{EntityKind, RelationKind, Snapshot};
use crate::views::{is_under, normalize_scope};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    /// Directories as components, directly contained files as entities.
    Architectural,
    Functional,
    Class,
    Module,
}

impl Variant {
    pub const ALL: [Variant; 4] = [
        Variant::Architectural,
        Variant::Functional,
        Variant::Class,
        Variant::Module,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Architectural => "architectural",
            Variant::Functional => "functional",
            Variant::Class => "class",
            Variant::Module => "module",
        }
    }

    pub fn has_entities(self) -> bool {
        self == Variant::Architectural
    }

    /// Entity kind whose identities make up the components of this variant.
    pub fn component_kind(self) -> EntityKind {
        match self {
            Variant::Architectural => EntityKind::Directory,
            Variant::Functional => EntityKind::FunctionDef,
            Variant::Class => EntityKind::ClassDef,
            Variant::Module => EntityKind::Module,
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArchitectureAbstraction {
    pub variant: Variant,
    pub components: BTreeMap<String, BTreeSet<String>>,
}

impl ArchitectureAbstraction {
    /// The architecture with no components.
    pub fn empty(variant: Variant) -> Self {
        ArchitectureAbstraction {
            variant,
            components: BTreeMap::new(),
        }
    }

    pub fn from_components<I, K>(variant: Variant, components: I) -> Self
    where
        I: IntoIterator<Item = K>,
        K: Into<String>,
    {
        ArchitectureAbstraction {
            variant,
            components: components
                .into_iter()
                .map(|k| (k.into(), BTreeSet::new()))
                .collect(),
        }
    }

    fn entity_count(&self) -> u64 {
        if self.variant.has_entities() {
            self.components.values().map(|e| e.len() as u64).sum()
        } else {
            0
        }
    }

    /// Operations needed to construct this architecture from scratch.
    pub fn aco(&self) -> u64 {
        self.components.len() as u64 + self.entity_count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimilarityBreakdown {
    #[serde(rename = "addC")]
    pub add_c: u64,
    #[serde(rename = "remC")]
    pub rem_c: u64,
    #[serde(rename = "addE")]
    pub add_e: u64,
    #[serde(rename = "remE")]
    pub rem_e: u64,
    pub mto: u64,
    pub aco_i: u64,
    pub aco_j: u64,
    /// Percentage in `[0, 100]`.
    pub score: f64,
}

pub fn a2a(
    ai: &ArchitectureAbstraction,
    aj: &ArchitectureAbstraction,
) -> Result<SimilarityBreakdown> {
    if ai.variant != aj.variant {
        return Err(Error::VariantMismatch(
            ai.variant.as_str(),
            aj.variant.as_str(),
        ));
    }
    let mut b = SimilarityBreakdown {
        add_c: 0,
        rem_c: 0,
        add_e: 0,
        rem_e: 0,
        mto: 0,
        aco_i: ai.aco(),
        aco_j: aj.aco(),
        score: 100.0,
    };
    let entities = ai.variant.has_entities();
    for (key, ents) in &aj.components {
        match ai.components.get(key) {
            None => {
                b.add_c += 1;
                if entities {
                    b.add_e += ents.len() as u64;
                }
            }
            Some(before) if entities => b.add_e += ents.difference(before).count() as u64,
            Some(_) => {}
        }
    }
    for (key, ents) in &ai.components {
        match aj.components.get(key) {
            None => {
                b.rem_c += 1;
                if entities {
                    b.rem_e += ents.len() as u64;
                }
            }
            Some(after) if entities => b.rem_e += ents.difference(after).count() as u64,
            Some(_) => {}
        }
    }
    b.mto = b.add_c + b.rem_c + b.add_e + b.rem_e;
    let total = b.aco_i + b.aco_j;
    if total > 0 {
        b.score = (1.0 - b.mto as f64 / total as f64) * 100.0;
    }
    Ok(b)
}

/// Builds the abstraction of `variant` for the subtree at `scope`.
pub fn abstract_architecture(
    s: &Snapshot,
    scope: &str,
    variant: Variant,
) -> Result<ArchitectureAbstraction> {
    let scope = crate::views::check_scope(s, scope)?;
    Ok(abstract_checked(s, &scope, variant))
}

fn abstract_checked(s: &Snapshot, scope: &str, variant: Variant) -> ArchitectureAbstraction {
    match variant {
        Variant::Architectural => {
            let mut components: BTreeMap<String, BTreeSet<String>> = s
                .entities_of(EntityKind::Directory)
                .filter(|d| is_under(&d.path, scope))
                .map(|d| (d.path.clone(), BTreeSet::new()))
                .collect();
            for r in s.relations_of(RelationKind::Contains) {
                let (Some(dir), Some(child)) = (s.entity(r.src), s.entity(r.dst)) else {
                    continue;
                };
                if child.kind.is_file_like() {
                    if let Some(files) = components.get_mut(&dir.path) {
                        files.insert(child.path.clone());
                    }
                }
            }
            ArchitectureAbstraction {
                variant,
                components,
            }
        }
        Variant::Functional | Variant::Class => ArchitectureAbstraction::from_components(
            variant,
            s.entities_of(variant.component_kind())
                .filter(|e| is_under(&e.path, scope))
                .map(|e| e.qualified_name.clone()),
        ),
        Variant::Module => {
            let modules: BTreeSet<String> = s
                .relations_of(RelationKind::Imports)
                .filter(|r| s.entity(r.src).is_some_and(|f| is_under(&f.path, scope)))
                .filter_map(|r| s.entity(r.dst))
                .map(|m| m.qualified_name.clone())
                .collect();
            ArchitectureAbstraction::from_components(variant, modules)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarityReport {
    pub base: String,
    pub head: String,
    pub scope: String,
    pub architectural: SimilarityBreakdown,
    pub functional: SimilarityBreakdown,
    pub class: SimilarityBreakdown,
    pub module: SimilarityBreakdown,
}

impl SimilarityReport {
    pub fn get(&self, variant: Variant) -> &SimilarityBreakdown {
        match variant {
            Variant::Architectural => &self.architectural,
            Variant::Functional => &self.functional,
            Variant::Class => &self.class,
            Variant::Module => &self.module,
        }
    }
}

/// All four similarity scores between two releases for one scope. A scope
/// that exists on only one side is the empty architecture on the other.
pub fn similarity_report(
    base: &Snapshot,
    head: &Snapshot,
    scope: &str,
) -> Result<SimilarityReport> {
    let scope = normalize_scope(scope);
    let (in_base, in_head) = (base.has_directory(&scope), head.has_directory(&scope));
    if !in_base && !in_head {
        return Err(Error::UnknownScope(scope));
    }
    let abstraction = |s: &Snapshot, present: bool, v: Variant| {
        if present {
            abstract_checked(s, &scope, v)
        } else {
            ArchitectureAbstraction::empty(v)
        }
    };
    let score = |v: Variant| {
        a2a(
            &abstraction(base, in_base, v),
            &abstraction(head, in_head, v),
        )
    };
    Ok(SimilarityReport {
        base: base.tag.name.clone(),
        head: head.tag.name.clone(),
        architectural: score(Variant::Architectural)?,
        functional: score(Variant::Functional)?,
        class: score(Variant::Class)?,
        module: score(Variant::Module)?,
        scope,
    })
}
