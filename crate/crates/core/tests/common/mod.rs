//! Shared fixtures and independent oracles for the integration tests.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::{Path, PathBuf};
use std::process::Command;

use archdelta_core::metrics::{ArchitectureAbstraction, Variant};
use archdelta_core::repo::{FileTree, ReleaseTag};
use archdelta_core::{build_snapshot, EntityKind, RelationKind, Snapshot};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn corpus_small_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/corpus-small")
}

pub fn corpus_small() -> Snapshot {
    let tag = ReleaseTag::synthetic("fixture");
    let tree = FileTree::from_directory(&corpus_small_dir(), tag.clone()).unwrap();
    build_snapshot("corpus-small", &tree, &tag).unwrap()
}

pub fn snapshot_of(tag: &str, files: &[(String, String)]) -> Snapshot {
    let t = ReleaseTag::synthetic(tag);
    let tree = FileTree::from_memory(
        t.clone(),
        files.iter().map(|(p, c)| (p.clone(), c.as_bytes())),
    );
    build_snapshot("generated", &tree, &t).unwrap()
}

// ------------------------------------------------------- corpus-small ----

pub const CORPUS_COUNTS: &[(EntityKind, usize)] = &[
    (EntityKind::Directory, 3),
    (EntityKind::File, 5),
    (EntityKind::FunctionDef, 7),
    (EntityKind::CallSite, 9),
    (EntityKind::ClassDef, 3),
    (EntityKind::Module, 2),
];

pub const CORPUS_EDGES: &[(RelationKind, &[(&str, &str)])] = &[
    (
        RelationKind::ResolvesTo,
        &[
            (
                "app/models.py::Account.deposit::self.describe#1",
                "app/models.py::Base.describe",
            ),
            (
                "app/models.py::Account.deposit::log#1",
                "lib/helpers.py::log",
            ),
            (
                "app/service.py::Ledger.record::log#1",
                "lib/helpers.py::log",
            ),
            (
                "app/service.py::Ledger.record::normalize#1",
                "lib/helpers.py::normalize",
            ),
        ],
    ),
    (
        RelationKind::Inherits,
        &[("app/models.py::Account", "app/models.py::Base")],
    ),
    (
        RelationKind::Aggregates,
        &[("app/service.py::Ledger", "app/models.py::Account")],
    ),
    (
        RelationKind::Imports,
        &[
            ("app/models.py", "lib.helpers"),
            ("app/service.py", "app.models"),
            ("app/service.py", "lib.helpers"),
            ("main.py", "lib.helpers"),
        ],
    ),
];

/// `(src, dst)` qualified names of every relation of `kind`.
pub fn labelled_edges(s: &Snapshot, kind: RelationKind) -> BTreeSet<(String, String)> {
    s.relations_of(kind)
        .map(|r| {
            (
                s.entity(r.src).unwrap().qualified_name.clone(),
                s.entity(r.dst).unwrap().qualified_name.clone(),
            )
        })
        .collect()
}

/// Differences between `s` and the corpus-small inventory; empty when exact.
pub fn corpus_mismatches(s: &Snapshot) -> Vec<String> {
    let mut out = Vec::new();
    for &(kind, n) in CORPUS_COUNTS {
        if s.count(kind) != n {
            out.push(format!("{kind}: {} != {n}", s.count(kind)));
        }
    }
    for &(kind, edges) in CORPUS_EDGES {
        let expected: BTreeSet<(String, String)> = edges
            .iter()
            .map(|(a, b)| (a.to_string(), b.to_string()))
            .collect();
        let got = labelled_edges(s, kind);
        if got != expected {
            out.push(format!("{}: {got:?} != {expected:?}", kind.as_str()));
        }
    }
    out
}

/// Definitions and call counts as seen by Python's own `ast` module.
pub struct PythonReference {
    pub definitions: BTreeSet<(String, String)>,
    pub calls: BTreeMap<String, u64>,
}

const AST_DUMPER: &str = r#"
import ast, os, sys, json
root = sys.argv[1]
defs, calls = [], {}
for dirpath, dirnames, filenames in os.walk(root):
    dirnames.sort()
    for name in sorted(filenames):
        if not name.endswith(".py"):
            continue
        full = os.path.join(dirpath, name)
        rel = os.path.relpath(full, root).replace(os.sep, "/")
        tree = ast.parse(open(full, encoding="utf-8").read())
        def walk(node, prefix):
            for child in ast.iter_child_nodes(node):
                if isinstance(child, (ast.FunctionDef, ast.AsyncFunctionDef, ast.ClassDef)):
                    dotted = prefix + [child.name]
                    kind = "class_def" if isinstance(child, ast.ClassDef) else "function_def"
                    defs.append([kind, rel + "::" + ".".join(dotted)])
                    walk(child, dotted)
                else:
                    walk(child, prefix)
        walk(tree, [])
        calls[rel] = sum(isinstance(n, ast.Call) for n in ast.walk(tree))
print(json.dumps({"defs": sorted(defs), "calls": calls}))
"#;

/// `None` when python3 is not available.
pub fn python_reference(root: &Path) -> Option<PythonReference> {
    let out = Command::new("python3")
        .arg("-c")
        .arg(AST_DUMPER)
        .arg(root)
        .output()
        .ok()?;
    if !out.status.success() {
        return None;
    }
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).ok()?;
    let definitions = v["defs"]
        .as_array()?
        .iter()
        .map(|d| {
            (
                d[0].as_str().unwrap().to_string(),
                d[1].as_str().unwrap().to_string(),
            )
        })
        .collect();
    let calls = v["calls"]
        .as_object()?
        .iter()
        .map(|(k, n)| (k.clone(), n.as_u64().unwrap()))
        .collect();
    Some(PythonReference { definitions, calls })
}

pub fn reference_mismatches(s: &Snapshot, r: &PythonReference) -> Vec<String> {
    let mut out = Vec::new();
    let got: BTreeSet<(String, String)> = s
        .entities
        .iter()
        .filter(|e| matches!(e.kind, EntityKind::FunctionDef | EntityKind::ClassDef))
        .map(|e| (e.kind.as_str().to_string(), e.qualified_name.clone()))
        .collect();
    if got != r.definitions {
        out.push(format!("definitions: {got:?} != {:?}", r.definitions));
    }
    for (file, &n) in &r.calls {
        let ours = s
            .entities_of(EntityKind::CallSite)
            .filter(|e| &e.path == file)
            .count() as u64;
        if ours != n {
            out.push(format!("call sites in {file}: {ours} != {n}"));
        }
    }
    out
}

// ---------------------------------------------------------------- git ----

pub fn git(dir: &Path, args: &[&str]) -> String {
    git_at(dir, args, 1_600_000_000)
}

fn git_at(dir: &Path, args: &[&str], epoch: i64) -> String {
    let date = format!("@{epoch} +0000");
    let out = Command::new("git")
        .arg("-C")
        .arg(dir)
        .args(args)
        .env("GIT_AUTHOR_NAME", "fixture")
        .env("GIT_AUTHOR_EMAIL", "fixture@example.invalid")
        .env("GIT_COMMITTER_NAME", "fixture")
        .env("GIT_COMMITTER_EMAIL", "fixture@example.invalid")
        .env("GIT_AUTHOR_DATE", &date)
        .env("GIT_COMMITTER_DATE", &date)
        .env("GIT_CONFIG_NOSYSTEM", "1")
        .env("HOME", dir)
        .output()
        .expect("git runs");
    assert!(
        out.status.success(),
        "git {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8_lossy(&out.stdout).into_owned()
}

/// One release of a scripted repository.
pub struct Release<'a> {
    pub tag: &'a str,
    pub write: &'a [(&'a str, &'a str)],
    pub remove: &'a [&'a str],
    pub annotated: bool,
}

/// Creates a git repository with one commit and tag per release, one hour
/// apart.
pub fn scripted_repo(dir: &Path, releases: &[Release<'_>]) {
    git(dir, &["init", "--quiet", "-b", "main"]);
    for (i, r) in releases.iter().enumerate() {
        let epoch = 1_600_000_000 + 3600 * i as i64;
        for (path, content) in r.write {
            let p = dir.join(path);
            std::fs::create_dir_all(p.parent().unwrap()).unwrap();
            std::fs::write(p, content).unwrap();
        }
        for path in r.remove {
            std::fs::remove_file(dir.join(path)).unwrap();
        }
        git_at(dir, &["add", "-A"], epoch);
        git_at(
            dir,
            &["commit", "--quiet", "--allow-empty", "-m", r.tag],
            epoch,
        );
        if r.annotated {
            git_at(dir, &["tag", "-a", r.tag, "-m", r.tag], epoch);
        } else {
            git_at(dir, &["tag", r.tag], epoch);
        }
    }
}

/// Paths in a tag according to `git archive | tar -t`, directories without
/// their trailing slash.
pub fn archive_listing(dir: &Path, tag: &str) -> BTreeSet<String> {
    let archive = Command::new("git")
        .arg("-C")
        .arg(dir)
        .args(["archive", "--format=tar", tag])
        .output()
        .unwrap();
    assert!(archive.status.success());
    let mut tar = Command::new("tar")
        .args(["-tf", "-"])
        .stdin(std::process::Stdio::piped())
        .stdout(std::process::Stdio::piped())
        .spawn()
        .unwrap();
    use std::io::Write;
    tar.stdin
        .take()
        .unwrap()
        .write_all(&archive.stdout)
        .unwrap();
    let out = tar.wait_with_output().unwrap();
    String::from_utf8_lossy(&out.stdout)
        .lines()
        .map(|l| l.trim_end_matches('/').to_string())
        .filter(|l| !l.is_empty())
        .collect()
}

/// The two-release fixture used for diff and similarity checks. Between v1
/// and v2 it adds one directory, two files and one function, and removes one
/// file.
pub const DIFF_V1: &[(&str, &str)] = &[
    ("a.py", "def f():\n    return 1\n"),
    ("pkg/b.py", "def g():\n    return 2\n"),
    ("pkg/old.py", "VALUE = 3\n"),
];
pub const DIFF_V2_WRITE: &[(&str, &str)] = &[
    ("newdir/c.py", "def k():\n    return 4\n"),
    ("pkg/d.py", "VALUE = 5\n"),
];
pub const DIFF_V2_REMOVE: &[&str] = &["pkg/old.py"];

pub fn diff_fixture(dir: &Path) {
    scripted_repo(
        dir,
        &[
            Release {
                tag: "v1",
                write: DIFF_V1,
                remove: &[],
                annotated: true,
            },
            Release {
                tag: "v2",
                write: DIFF_V2_WRITE,
                remove: DIFF_V2_REMOVE,
                annotated: false,
            },
        ],
    );
}

// ------------------------------------------------------------ oracles ----

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OracleBreakdown {
    pub add_c: u64,
    pub rem_c: u64,
    pub add_e: u64,
    pub rem_e: u64,
    pub mto: u64,
    pub aco_i: u64,
    pub aco_j: u64,
}

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord)]
enum Token {
    Component(String),
    Entity(String, String),
}

fn tokens(a: &ArchitectureAbstraction) -> BTreeSet<Token> {
    let mut out = BTreeSet::new();
    for (c, ents) in &a.components {
        out.insert(Token::Component(c.clone()));
        if a.variant == Variant::Architectural {
            for e in ents {
                out.insert(Token::Entity(c.clone(), e.clone()));
            }
        }
    }
    out
}

/// Brute force over construction tokens: building an architecture takes one
/// operation per component and per (component, entity) pair; transforming
/// one into the other takes one per token present on exactly one side.
pub fn a2a_oracle(
    ai: &ArchitectureAbstraction,
    aj: &ArchitectureAbstraction,
) -> (OracleBreakdown, f64) {
    let ti = tokens(ai);
    let tj = tokens(aj);
    let count = |from: &BTreeSet<Token>, to: &BTreeSet<Token>, component: bool| {
        from.iter()
            .filter(|t| !to.contains(t))
            .filter(|t| matches!(t, Token::Component(_)) == component)
            .count() as u64
    };
    let b = OracleBreakdown {
        add_c: count(&tj, &ti, true),
        rem_c: count(&ti, &tj, true),
        add_e: count(&tj, &ti, false),
        rem_e: count(&ti, &tj, false),
        mto: ti.symmetric_difference(&tj).count() as u64,
        aco_i: ti.len() as u64,
        aco_j: tj.len() as u64,
    };
    let total = b.aco_i + b.aco_j;
    let score = if total == 0 {
        100.0
    } else {
        100.0 * (total - b.mto) as f64 / total as f64
    };
    (b, score)
}

/// Connected components of the method graph by union-find.
pub fn lcom4_oracle(methods: &[(String, BTreeSet<String>, BTreeSet<String>)]) -> usize {
    let n = methods.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while p[r] != r {
            r = p[r];
        }
        let mut c = x;
        while p[c] != r {
            let next = p[c];
            p[c] = r;
            c = next;
        }
        r
    }
    let union = |p: &mut Vec<usize>, a: usize, b: usize| {
        let (ra, rb) = (find(p, a), find(p, b));
        if ra != rb {
            p[ra] = rb;
        }
    };
    for i in 0..n {
        for j in (i + 1)..n {
            let (ni, ai, ci) = &methods[i];
            let (nj, aj, cj) = &methods[j];
            if !ai.is_disjoint(aj) || ci.contains(nj) || cj.contains(ni) {
                union(&mut parent, i, j);
            }
        }
    }
    (0..n).filter(|&i| find(&mut parent, i) == i).count()
}

/// Node and edge statement counts of a DOT document, parsed by an
/// independent DOT grammar implementation.
pub fn dot_counts(dot: &str) -> (usize, usize) {
    use graphviz_rust::dot_structures::{Graph, Stmt};
    let g = graphviz_rust::parse(dot).unwrap_or_else(|e| panic!("dot rejected: {e}\n{dot}"));
    let stmts = match g {
        Graph::DiGraph { stmts, .. } => stmts,
        Graph::Graph { .. } => panic!("expected a digraph"),
    };
    let nodes = stmts.iter().filter(|s| matches!(s, Stmt::Node(_))).count();
    let edges = stmts.iter().filter(|s| matches!(s, Stmt::Edge(_))).count();
    (nodes, edges)
}

// ---------------------------------------------------------- generators ----

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random abstraction with up to 10 components of up to 20 entities each,
/// drawn from small name pools so pairs overlap.
pub fn random_abstraction(r: &mut impl Rng, variant: Variant) -> ArchitectureAbstraction {
    let mut components = BTreeMap::new();
    for _ in 0..r.gen_range(0..=10) {
        let key = format!("c{}", r.gen_range(0..14));
        let ents: BTreeSet<String> = if variant == Variant::Architectural {
            (0..r.gen_range(0..=20))
                .map(|_| format!("e{}", r.gen_range(0..30)))
                .collect()
        } else {
            BTreeSet::new()
        };
        components.insert(key, ents);
    }
    ArchitectureAbstraction {
        variant,
        components,
    }
}

pub type MethodSpec = (String, BTreeSet<String>, BTreeSet<String>);

/// Random class body: up to 12 methods with random attribute sets and
/// sibling calls (sometimes to names that are not methods of the class).
pub fn random_methods(r: &mut impl Rng) -> Vec<MethodSpec> {
    let n = r.gen_range(0..=12);
    let attr_pool = r.gen_range(1..=10);
    let density = r.gen_range(0.0..0.4);
    (0..n)
        .map(|i| {
            let attrs = (0..attr_pool)
                .filter(|_| r.gen_bool(density / 2.0))
                .map(|a| format!("a{a}"))
                .collect();
            let calls = (0..n + 2)
                .filter(|&j| j != i && r.gen_bool(density / 3.0))
                .map(|j| format!("m{j}"))
                .collect();
            (format!("m{i}"), attrs, calls)
        })
        .collect()
}

/// Python source for a class whose methods have exactly the given facts.
pub fn class_source(name: &str, methods: &[MethodSpec]) -> String {
    let mut src = format!("class {name}:\n");
    if methods.is_empty() {
        src.push_str("    pass\n");
    }
    for (m, attrs, calls) in methods {
        src.push_str(&format!("    def {m}(self):\n"));
        for a in attrs {
            src.push_str(&format!("        print(self.{a})\n"));
        }
        for c in calls {
            src.push_str(&format!("        self.{c}()\n"));
        }
        src.push_str("        return None\n");
    }
    src
}

const DIRS: &[&str] = &["", "pkg", "pkg/sub", "app", "app/core", "lib", "docs"];

/// Random multi-file Python project: functions, classes with inheritance and
/// aggregation, cross-file imports and calls, the odd non-Python file and the
/// odd file that fails to parse.
pub fn random_project(seed: u64) -> Vec<(String, String)> {
    let mut r = rng(seed);
    let n_files = r.gen_range(1..=8);
    let mut files: Vec<(String, String)> = Vec::new();
    let mut modules: Vec<(String, Vec<String>, Vec<String>)> = Vec::new(); // (dotted, funcs, classes)
    for i in 0..n_files {
        let dir = DIRS[r.gen_range(0..DIRS.len())];
        let path = if dir.is_empty() {
            format!("m{i}.py")
        } else {
            format!("{dir}/m{i}.py")
        };
        let dotted = path.trim_end_matches(".py").replace('/', ".");
        let mut src = String::new();
        let mut callable: Vec<String> = vec!["print".into(), "len".into()];
        let mut classes_in_scope: Vec<String> = Vec::new();

        if !modules.is_empty() {
            for _ in 0..r.gen_range(0..=2) {
                let (m, funcs, classes) = modules.choose(&mut r).unwrap().clone();
                if r.gen_bool(0.5) {
                    src.push_str(&format!("import {m}\n"));
                    if let Some(f) = funcs.choose(&mut r) {
                        callable.push(format!("{m}.{f}"));
                    }
                } else if let Some(f) = funcs.choose(&mut r) {
                    src.push_str(&format!("from {m} import {f}\n"));
                    callable.push(f.clone());
                    if let Some(c) = classes.choose(&mut r) {
                        src.push_str(&format!("from {m} import {c}\n"));
                        classes_in_scope.push(c.clone());
                    }
                }
            }
        }

        let mut funcs = Vec::new();
        for j in 0..r.gen_range(0..=3) {
            let name = format!("f{i}_{j}");
            src.push_str(&format!("\ndef {name}(x=None):\n"));
            for _ in 0..r.gen_range(0..=3) {
                let callee = callable.choose(&mut r).unwrap();
                src.push_str(&format!("    {callee}(x)\n"));
            }
            if r.gen_bool(0.2) {
                src.push_str(&format!(
                    "    def inner_{j}():\n        return x\n    inner_{j}()\n"
                ));
            }
            src.push_str("    return x\n");
            callable.push(name.clone());
            funcs.push(name);
        }

        let mut classes = Vec::new();
        for k in 0..r.gen_range(0..=2) {
            let name = format!("C{i}_{k}");
            let base = if r.gen_bool(0.4) {
                classes_in_scope.choose(&mut r).cloned()
            } else {
                None
            };
            match &base {
                Some(b) => src.push_str(&format!("\nclass {name}({b}):\n")),
                None => src.push_str(&format!("\nclass {name}:\n")),
            }
            let methods = random_methods(&mut r);
            let methods = &methods[..methods.len().min(4)];
            if methods.is_empty() {
                src.push_str("    pass\n");
            }
            for (m, attrs, calls) in methods {
                src.push_str(&format!("    def {m}(self):\n"));
                for a in attrs {
                    src.push_str(&format!("        self.{a} = 1\n"));
                }
                for c in calls {
                    src.push_str(&format!("        self.{c}()\n"));
                }
                if let Some(other) = classes_in_scope.choose(&mut r) {
                    if r.gen_bool(0.3) {
                        src.push_str(&format!("        self.part = {other}()\n"));
                    }
                }
                if let Some(f) = callable.choose(&mut r) {
                    src.push_str(&format!("        {f}(self)\n"));
                }
            }
            classes_in_scope.push(name.clone());
            classes.push(name);
        }
        for _ in 0..r.gen_range(0..=2) {
            let callee = callable.choose(&mut r).unwrap();
            src.push_str(&format!("\n{callee}(0)\n"));
        }
        if r.gen_bool(0.05) {
            src.push_str("\ndef broken(:\n");
        }
        files.push((path, src));
        modules.push((dotted, funcs, classes));
    }
    if r.gen_bool(0.3) {
        let dir = DIRS[r.gen_range(0..DIRS.len())];
        let path = if dir.is_empty() {
            "README.txt".to_string()
        } else {
            format!("{dir}/README.txt")
        };
        files.push((path, "notes\n".into()));
    }
    let mut seen = HashMap::new();
    files.retain(|(p, _)| seen.insert(p.clone(), ()).is_none());
    files
}

/// Directories of a snapshot, root first.
pub fn directories(s: &Snapshot) -> Vec<String> {
    let mut dirs: Vec<String> = s
        .entities_of(archdelta_core::EntityKind::Directory)
        .map(|e| e.path.clone())
        .collect();
    dirs.sort();
    dirs
}
