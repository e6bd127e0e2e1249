//! Architecture recovery for Python projects across release tags.
//!
//! The pipeline is: [`repo`] materializes the file tree of a tag,
//! [`extract`] turns it into a [`Snapshot`], [`views`] projects snapshots
//! into directory/call/collaboration/integrated graphs, and [`metrics`] and
//! [`diff`] compare two releases. [`store`] persists everything as JSON.

pub mod diff;
pub mod error;
pub mod extract;
pub mod metrics;
pub mod model;
pub mod repo;
pub mod store;
pub mod views;

pub use diff::{component_diff, match_key, ComponentDiff, DiffItem};
pub use error::{Error, Result};
pub use extract::build_snapshot;
pub use metrics::{
    a2a, abstract_architecture, cohesion_report, lcom4, similarity_report, ArchitectureAbstraction,
    CohesionEntry, CohesionReport, SimilarityBreakdown, SimilarityReport, Variant,
};
pub use model::{Entity, EntityId, EntityKind, MethodFacts, Relation, RelationKind, Snapshot};
pub use repo::{FileTree, ReleaseTag, RepoHandle};
pub use store::{CacheLayout, ExportFormat, Manifest, SCHEMA_VERSION};
pub use views::{view, ViewEdge, ViewGraph, ViewKind, ViewNode};
