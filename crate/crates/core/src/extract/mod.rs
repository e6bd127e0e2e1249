//! Snapshot construction: tree entities, per-file facts, resolved relations.

pub mod python;
pub mod resolve;

use std::collections::{BTreeSet, HashMap};

use rayon::prelude::*;

use crate::error::Result;
use crate::model::{
    keys, Entity, EntityId, EntityKind, MethodFacts, Note, ParseFailure, Relation, RelationKind,
    Snapshot, Span,
};
use crate::repo::{EntryKind, FileTree, ReleaseTag};

pub use python::{extract_file_facts, FileFacts};
pub use resolve::{resolve_references, Resolution};

pub fn is_subject_file(path: &str) -> bool {
    path.ends_with(".py")
}

fn parent_dir(path: &str) -> &str {
    path.rfind('/').map_or("", |i| &path[..i])
}

fn base_name(path: &str) -> &str {
    path.rfind('/').map_or(path, |i| &path[i + 1..])
}

/// Builds the snapshot of one release. Only I/O errors are fatal; files that
/// fail to parse are kept as file entities and listed in `parse_failures`.
pub fn build_snapshot(repo_id: &str, tree: &FileTree, tag: &ReleaseTag) -> Result<Snapshot> {
    let sources = tree.read_files(is_subject_file)?;
    let facts: Vec<FileFacts> = sources
        .par_iter()
        .map(|(path, bytes)| extract_file_facts(path, &String::from_utf8_lossy(bytes)))
        .collect();
    Ok(assemble(repo_id, tree, tag, facts))
}

fn assemble(repo_id: &str, tree: &FileTree, tag: &ReleaseTag, facts: Vec<FileFacts>) -> Snapshot {
    let resolution = resolve_references(&facts);
    let mut b = Builder::default();

    let mut path_ids: HashMap<&str, EntityId> = HashMap::new();
    for entry in &tree.entries {
        let (kind, name) = match entry.kind {
            EntryKind::Directory if entry.path.is_empty() => (EntityKind::Directory, "."),
            EntryKind::Directory => (EntityKind::Directory, base_name(&entry.path)),
            EntryKind::File if is_subject_file(&entry.path) => {
                (EntityKind::File, base_name(&entry.path))
            }
            EntryKind::File => (EntityKind::Unknown, base_name(&entry.path)),
        };
        let id = b.entity(kind, name, entry.path.clone(), entry.path.clone(), None);
        path_ids.insert(&entry.path, id);
    }
    for entry in tree.entries.iter().filter(|e| !e.path.is_empty()) {
        let parent = path_ids[parent_dir(&entry.path)];
        b.relate(
            parent,
            path_ids[entry.path.as_str()],
            RelationKind::Contains,
        );
    }

    let mut parse_failures = Vec::new();
    let mut notes = Vec::new();
    let mut def_ids: Vec<Vec<EntityId>> = Vec::with_capacity(facts.len());
    let mut call_ids: Vec<Vec<EntityId>> = Vec::with_capacity(facts.len());
    let mut method_facts = Vec::new();

    for f in &facts {
        let file_id = path_ids[f.path.as_str()];
        if let Some(err) = &f.parse_error {
            parse_failures.push(ParseFailure {
                path: f.path.clone(),
                error: err.clone(),
            });
        }
        notes.extend(f.notes.iter().map(|m| Note {
            path: f.path.clone(),
            message: m.clone(),
        }));

        let mut ids = Vec::with_capacity(f.definitions.len());
        for d in &f.definitions {
            let kind = match d.kind {
                python::DefKind::Function => EntityKind::FunctionDef,
                python::DefKind::Class => EntityKind::ClassDef,
            };
            let id = b.entity(
                kind,
                &d.name,
                keys::definition(&f.path, &d.dotted),
                f.path.clone(),
                Some(d.span),
            );
            ids.push(id);
        }
        for (i, d) in f.definitions.iter().enumerate() {
            // classes define their methods; everything else hangs off the file
            let definer = match d.parent {
                Some(p) if f.is_method(i) => ids[p],
                _ => file_id,
            };
            b.relate(definer, ids[i], RelationKind::Defines);
            if f.is_method(i) {
                method_facts.push(MethodFacts {
                    method: ids[i],
                    accessed_attributes: d.accessed_attributes.clone(),
                    called_sibling_methods: d.called_sibling_methods.clone(),
                });
            }
        }

        let mut cids = Vec::with_capacity(f.calls.len());
        for c in &f.calls {
            let scope_key = match c.scope {
                Some(s) => keys::definition(&f.path, &f.definitions[s].dotted),
                None => f.path.clone(),
            };
            let id = b.entity(
                EntityKind::CallSite,
                &c.callee,
                keys::call_site(&scope_key, &c.callee, c.ordinal),
                f.path.clone(),
                Some(Span {
                    start: c.line,
                    end: c.line,
                }),
            );
            let caller = c.caller.map_or(file_id, |k| ids[k]);
            b.relate(caller, id, RelationKind::Calls);
            cids.push(id);
        }
        def_ids.push(ids);
        call_ids.push(cids);
    }

    let mut module_ids: HashMap<&str, EntityId> = HashMap::new();
    for m in &resolution.modules {
        let name = m.rsplit('.').next().unwrap_or(m);
        let id = b.entity(EntityKind::Module, name, m.clone(), String::new(), None);
        module_ids.insert(m, id);
    }

    for (&(fi, ci), &(tf, td)) in &resolution.calls {
        b.relate(call_ids[fi][ci], def_ids[tf][td], RelationKind::ResolvesTo);
    }
    for (src, target) in &resolution.inherits {
        let src_id = def_ids[src.0][src.1];
        let dst = match target {
            resolve::BaseTarget::Class((f, d)) => def_ids[*f][*d],
            resolve::BaseTarget::Module(m) => module_ids[m.as_str()],
        };
        b.relate(src_id, dst, RelationKind::Inherits);
    }
    for &((sf, sd), (tf, td)) in &resolution.aggregates {
        b.relate(def_ids[sf][sd], def_ids[tf][td], RelationKind::Aggregates);
    }
    for (fi, m) in &resolution.imports {
        b.relate(
            path_ids[facts[*fi].path.as_str()],
            module_ids[m.as_str()],
            RelationKind::Imports,
        );
    }
    notes.extend(resolution.notes.iter().map(|(fi, m)| Note {
        path: facts[*fi].path.clone(),
        message: m.clone(),
    }));

    let mut relations: Vec<Relation> = b.relations.into_iter().collect();
    relations.sort();
    method_facts.sort_by_key(|m| m.method);

    Snapshot {
        repo_id: repo_id.to_string(),
        tag: tag.clone(),
        entities: b.entities,
        relations,
        method_facts,
        parse_failures,
        notes,
    }
}

#[derive(Default)]
struct Builder {
    entities: Vec<Entity>,
    relations: BTreeSet<Relation>,
}

impl Builder {
    fn entity(
        &mut self,
        kind: EntityKind,
        name: &str,
        qualified_name: String,
        path: String,
        span: Option<Span>,
    ) -> EntityId {
        let id = self.entities.len() as EntityId;
        self.entities.push(Entity {
            id,
            kind,
            name: name.to_string(),
            qualified_name,
            path,
            span,
        });
        id
    }

    fn relate(&mut self, src: EntityId, dst: EntityId, kind: RelationKind) {
        if src != dst {
            self.relations.insert(Relation { src, dst, kind });
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn snapshot(files: &[(&str, &str)]) -> Snapshot {
        let tree = FileTree::from_memory(ReleaseTag::synthetic("t"), files.iter().copied());
        build_snapshot("test", &tree, &tree.tag.clone()).unwrap()
    }

    #[test]
    fn tree_entities_and_contains_edges() {
        let s = snapshot(&[("a.py", ""), ("pkg/b.py", ""), ("README.md", "hi")]);
        s.validate().unwrap();
        assert_eq!(s.count(EntityKind::Directory), 2);
        assert_eq!(s.count(EntityKind::File), 2);
        assert_eq!(s.count(EntityKind::Unknown), 1);
        assert_eq!(s.relations_of(RelationKind::Contains).count(), 4);
    }

    #[test]
    fn no_subject_files() {
        let s = snapshot(&[("docs/index.md", "x")]);
        assert!(s
            .entities
            .iter()
            .all(|e| matches!(e.kind, EntityKind::Directory | EntityKind::Unknown)));
    }

    #[test]
    fn broken_file_still_counts() {
        let s = snapshot(&[("bad.py", "def (:\n"), ("ok.py", "def f(): pass\n")]);
        assert_eq!(s.count(EntityKind::File), 2);
        assert_eq!(s.parse_failures.len(), 1);
        assert_eq!(s.parse_failures[0].path, "bad.py");
        assert_eq!(s.count(EntityKind::FunctionDef), 1);
    }

    #[test]
    fn nested_functions_hang_off_the_file_and_methods_off_the_class() {
        let s = snapshot(&[(
            "a.py",
            "def f():\n    def g(): pass\nclass C:\n    def m(self): pass\n",
        )]);
        s.validate().unwrap();
        let by_key = |k: &str| {
            s.entities
                .iter()
                .find(|e| e.qualified_name == k)
                .unwrap()
                .id
        };
        let file = by_key("a.py");
        let defines: BTreeSet<_> = s
            .relations_of(RelationKind::Defines)
            .map(|r| (r.src, r.dst))
            .collect();
        assert!(defines.contains(&(file, by_key("a.py::f"))));
        assert!(defines.contains(&(file, by_key("a.py::f.g"))));
        assert!(defines.contains(&(by_key("a.py::C"), by_key("a.py::C.m"))));
        assert_eq!(s.method_facts.len(), 1);
    }

    #[test]
    fn call_site_keys_use_scope_and_ordinal() {
        let s = snapshot(&[("a.py", "def f():\n    log(1)\n    log(2)\n")]);
        let sites: Vec<_> = s
            .entities_of(EntityKind::CallSite)
            .map(|e| e.qualified_name.as_str())
            .collect();
        assert_eq!(sites, vec!["a.py::f::log#1", "a.py::f::log#2"]);
    }

    #[test]
    fn class_body_calls_are_attributed_to_the_file() {
        let s = snapshot(&[("a.py", "class C:\n    x = make()\n")]);
        s.validate().unwrap();
        let site = s.entities_of(EntityKind::CallSite).next().unwrap();
        assert_eq!(site.qualified_name, "a.py::C::make#1");
        let caller = s
            .relations_of(RelationKind::Calls)
            .find(|r| r.dst == site.id)
            .unwrap()
            .src;
        assert_eq!(s.entity(caller).unwrap().kind, EntityKind::File);
    }
}
