//! JSON and Graphviz DOT renderings of a view graph.

use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::EntityKind;
use crate::views::{ViewEdge, ViewGraph, ViewKind, ViewNode};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportFormat {
    Json,
    Dot,
}

impl FromStr for ExportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(ExportFormat::Json),
            "dot" => Ok(ExportFormat::Dot),
            other => Err(Error::InvalidArgument(format!(
                "unknown export format '{other}'"
            ))),
        }
    }
}

/// Fill color of each component kind; shared by DOT output and the UI.
pub fn color(kind: EntityKind) -> &'static str {
    match kind {
        EntityKind::Directory => "#FFD700",
        EntityKind::File => "#4682B4",
        EntityKind::FunctionDef => "#008000",
        EntityKind::CallSite => "#FFA500",
        EntityKind::ClassDef => "#800080",
        EntityKind::Module => "#008080",
        EntityKind::Unknown => "#808080",
    }
}

fn shape(kind: EntityKind) -> &'static str {
    match kind {
        EntityKind::Directory => "folder",
        EntityKind::File | EntityKind::Unknown => "note",
        EntityKind::FunctionDef => "ellipse",
        EntityKind::CallSite => "diamond",
        EntityKind::ClassDef => "box",
        EntityKind::Module => "hexagon",
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LegendEntry {
    pub kind: EntityKind,
    pub label: String,
    pub color: String,
}

pub fn legend_entries(view: ViewKind) -> Vec<LegendEntry> {
    view.legend()
        .iter()
        .map(|&kind| LegendEntry {
            kind,
            label: kind.display_name().to_owned(),
            color: color(kind).to_owned(),
        })
        .collect()
}

#[derive(Serialize)]
struct ViewPayload<'a> {
    view: ViewKind,
    scope: &'a str,
    nodes: &'a [ViewNode],
    edges: &'a [ViewEdge],
    legend: Vec<LegendEntry>,
}

pub fn export_view(g: &ViewGraph, format: ExportFormat) -> Result<Vec<u8>> {
    match format {
        ExportFormat::Json => super::to_versioned_json(&ViewPayload {
            view: g.view,
            scope: &g.scope,
            nodes: &g.nodes,
            edges: &g.edges,
            legend: legend_entries(g.view),
        }),
        ExportFormat::Dot => Ok(to_dot(g).into_bytes()),
    }
}

fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' | '\r' => out.push(' '),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

fn to_dot(g: &ViewGraph) -> String {
    let mut out = String::new();
    let title = if g.scope.is_empty() {
        "."
    } else {
        g.scope.as_str()
    };
    let _ = writeln!(out, "digraph {} {{", quote(g.view.as_str()));
    let _ = writeln!(
        out,
        "  label={};",
        quote(&format!("{} view: {}", g.view, title))
    );
    let _ = writeln!(out, "  node [style=filled, fontname=\"Helvetica\"];");
    for n in &g.nodes {
        let style = if n.is_external {
            "filled,dashed"
        } else {
            "filled"
        };
        let _ = writeln!(
            out,
            "  n{} [label={}, shape={}, fillcolor={}, style={}, tooltip={}];",
            n.id,
            quote(&n.label),
            shape(n.kind),
            quote(color(n.kind)),
            quote(style),
            quote(&format!("{}: {}", n.kind.display_name(), n.qualified_name)),
        );
    }
    for e in &g.edges {
        let _ = writeln!(
            out,
            "  n{} -> n{} [label={}];",
            e.src,
            e.dst,
            quote(e.kind.as_str())
        );
    }
    out.push_str("}\n");
    out
}
