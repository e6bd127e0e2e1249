//! Release-pair similarity (A2A family) and per-class cohesion (LCOM4).

pub mod a2a;
pub mod cohesion;

pub use a2a::{
    a2a, abstract_architecture, similarity_report, ArchitectureAbstraction, SimilarityBreakdown,
    SimilarityReport, Variant,
};
pub use cohesion::{
    class_lcom4, cohesion_report, lcom4, CohesionEntry, CohesionReport, MethodShape,
};
