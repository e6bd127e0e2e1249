//! Cross-file reference resolution.
//!
//! Call sites resolve lexically: enclosing function scopes, then (for
//! receiver-qualified calls) the enclosing class and its internal bases,
//! then module scope, then names bound by project-internal imports. Any
//! other attribute chain stays unresolved. No type inference is attempted.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use super::python::{CalleeRef, DefKind, FileFacts};

/// `(file index, definition index)` into the fact set.
pub type DefRef = (usize, usize);

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum BaseTarget {
    Class(DefRef),
    Module(String),
}

#[derive(Debug, Default, Clone)]
pub struct Resolution {
    /// `(file, call index) -> target function`
    pub calls: BTreeMap<(usize, usize), DefRef>,
    pub inherits: BTreeSet<(DefRef, BaseTarget)>,
    pub aggregates: BTreeSet<(DefRef, DefRef)>,
    /// `(file, canonical module name)`
    pub imports: BTreeSet<(usize, String)>,
    pub modules: BTreeSet<String>,
    /// `(file, message)`
    pub notes: Vec<(usize, String)>,
}

/// Maps importable dotted names to the project files that define them.
#[derive(Debug, Default)]
pub struct ModuleIndex {
    /// any accepted dotted name -> canonical dotted name
    aliases: HashMap<String, String>,
    /// canonical dotted name -> file index
    files: HashMap<String, usize>,
}

impl ModuleIndex {
    pub fn new<'a>(paths: impl IntoIterator<Item = &'a str>) -> Self {
        let mut index = ModuleIndex::default();
        let paths: Vec<&str> = paths.into_iter().collect();
        for (i, path) in paths.iter().enumerate() {
            if let Some(dotted) = dotted_name(path) {
                index.aliases.insert(dotted.clone(), dotted.clone());
                index.files.insert(dotted, i);
            }
        }
        // src-layout packages are importable without the `src.` prefix
        for path in &paths {
            if let (Some(rest), Some(dotted)) = (path.strip_prefix("src/"), dotted_name(path)) {
                if let Some(short) = dotted_name(rest) {
                    index.aliases.entry(short).or_insert(dotted);
                }
            }
        }
        index
    }

    /// Canonical name of the project module `dotted`, trying the name as
    /// absolute first and then relative to the importer's directory.
    pub fn resolve(&self, importer: &str, dotted: &str) -> Option<&str> {
        if dotted.is_empty() {
            return None;
        }
        if let Some(c) = self.aliases.get(dotted) {
            return Some(c);
        }
        let dir: Vec<&str> = importer.split('/').collect();
        let dir = &dir[..dir.len().saturating_sub(1)];
        if dir.is_empty() {
            return None;
        }
        let sibling = format!("{}.{}", dir.join("."), dotted);
        self.aliases.get(&sibling).map(String::as_str)
    }

    pub fn file_of(&self, canonical: &str) -> Option<usize> {
        self.files.get(canonical).copied()
    }
}

/// `a/b/c.py` -> `a.b.c`, `a/b/__init__.py` -> `a.b`.
pub fn dotted_name(path: &str) -> Option<String> {
    let stem = path.strip_suffix(".py")?;
    let mut parts: Vec<&str> = stem.split('/').collect();
    if parts.last() == Some(&"__init__") {
        parts.pop();
    }
    if parts.is_empty() || parts.iter().any(|p| p.is_empty()) {
        return None;
    }
    Some(parts.join("."))
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Binding {
    Def(DefRef),
    /// Bound to a project module.
    Module(String),
    /// `from <module> import <name>` where `<name>` is not itself a module.
    Member(String, String),
    /// `import a.b` without alias: the bound head starts an absolute path.
    Absolute,
    External,
}

fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c == '_' || c.is_alphabetic())
        && chars.all(|c| c == '_' || c.is_alphanumeric())
}

struct Resolver<'a> {
    files: &'a [FileFacts],
    modules: ModuleIndex,
    /// per file: import index -> binding
    import_bindings: Vec<Vec<Binding>>,
}

impl<'a> Resolver<'a> {
    fn new(files: &'a [FileFacts]) -> Self {
        let modules = ModuleIndex::new(files.iter().map(|f| f.path.as_str()));
        let mut r = Resolver {
            files,
            modules,
            import_bindings: Vec::new(),
        };
        r.import_bindings = files
            .iter()
            .map(|f| {
                f.imports
                    .iter()
                    .map(|i| r.bind_import(&f.path, i))
                    .collect()
            })
            .collect();
        r
    }

    fn bind_import(&self, path: &str, imp: &super::python::ImportFact) -> Binding {
        match &imp.name {
            None => {
                let head = imp.module.split('.').next().unwrap_or_default();
                if imp.bound == head {
                    if imp.module.contains('.') {
                        Binding::Absolute
                    } else {
                        self.module_binding(path, &imp.module)
                    }
                } else {
                    self.module_binding(path, &imp.module)
                }
            }
            Some(name) if name == "*" => Binding::External,
            Some(name) => {
                let sub = format!("{}.{}", imp.module, name);
                if let Some(c) = self.modules.resolve(path, &sub) {
                    Binding::Module(c.to_string())
                } else if let Some(c) = self.modules.resolve(path, &imp.module) {
                    Binding::Member(c.to_string(), name.clone())
                } else {
                    Binding::External
                }
            }
        }
    }

    fn module_binding(&self, path: &str, dotted: &str) -> Binding {
        match self.modules.resolve(path, dotted) {
            Some(c) => Binding::Module(c.to_string()),
            None => Binding::External,
        }
    }

    /// Project module targeted by an import statement, if any.
    fn import_target(&self, path: &str, imp: &super::python::ImportFact) -> Option<String> {
        match &imp.name {
            None => {
                // longest importable prefix of `import a.b.c`
                let parts: Vec<&str> = imp.module.split('.').collect();
                (1..=parts.len())
                    .rev()
                    .find_map(|k| self.modules.resolve(path, &parts[..k].join(".")))
                    .map(str::to_string)
            }
            Some(name) => {
                let sub = format!("{}.{}", imp.module, name);
                self.modules
                    .resolve(path, &sub)
                    .or_else(|| self.modules.resolve(path, &imp.module))
                    .map(str::to_string)
            }
        }
    }

    /// Last binding of `name` made directly in `scope` of `file`.
    fn binding_in(&self, file: usize, scope: Option<usize>, name: &str) -> Option<Binding> {
        let facts = &self.files[file];
        let def = facts
            .children(scope)
            .filter(|(_, d)| d.name == name)
            .map(|(i, d)| (d.span.start, Binding::Def((file, i))))
            .last();
        let imp = facts
            .imports
            .iter()
            .enumerate()
            .filter(|(_, i)| i.scope == scope && i.bound == name)
            .map(|(k, i)| (i.line, self.import_bindings[file][k].clone()))
            .next_back();
        match (def, imp) {
            (Some(d), Some(i)) => Some(if i.0 > d.0 { i.1 } else { d.1 }),
            (d, i) => d.or(i).map(|(_, b)| b),
        }
    }

    /// Lexical lookup of `name` as seen from `scope`. Class bodies are only
    /// visible to code directly inside them.
    fn lookup(&self, file: usize, scope: Option<usize>, name: &str) -> Option<Binding> {
        let facts = &self.files[file];
        let mut current = scope;
        let mut first = true;
        while let Some(s) = current {
            let def = &facts.definitions[s];
            if def.kind == DefKind::Function || first {
                if let Some(b) = self.binding_in(file, Some(s), name) {
                    return Some(b);
                }
            }
            first = false;
            current = def.parent;
        }
        self.binding_in(file, None, name)
    }

    /// Top-level definition `name` of the module file, following re-exports
    /// through module-level imports.
    fn member(&self, module: &str, name: &str, depth: u8) -> Option<Binding> {
        let file = self.modules.file_of(module)?;
        match self.binding_in(file, None, name)? {
            Binding::Member(m, n) if depth > 0 => self.member(&m, &n, depth - 1),
            other => Some(other),
        }
    }

    fn settle(&self, binding: Binding) -> Option<Binding> {
        match binding {
            Binding::Member(m, n) => match self.member(&m, &n, 4) {
                Some(b @ Binding::Def(_)) => Some(b),
                _ => Some(Binding::Member(m, n)),
            },
            other => Some(other),
        }
    }

    fn resolve_function(&self, file: usize, scope: Option<usize>, name: &str) -> Option<DefRef> {
        match self.settle(self.lookup(file, scope, name)?)? {
            Binding::Def(d) if self.files[d.0].definitions[d.1].kind == DefKind::Function => {
                Some(d)
            }
            _ => None,
        }
    }

    /// Resolves a class-valued expression text (`B`, `mod.B`, `pkg.mod.B`).
    fn resolve_class_expr(
        &self,
        file: usize,
        scope: Option<usize>,
        text: &str,
    ) -> Option<BaseTarget> {
        let parts: Vec<&str> = text.split('.').collect();
        if !parts.iter().all(|p| is_identifier(p)) {
            return None;
        }
        let binding = self.settle(self.lookup(file, scope, parts[0])?)?;
        if parts.len() == 1 {
            return match binding {
                Binding::Def(d) if self.files[d.0].definitions[d.1].kind == DefKind::Class => {
                    Some(BaseTarget::Class(d))
                }
                Binding::Member(m, _) | Binding::Module(m) => Some(BaseTarget::Module(m)),
                _ => None,
            };
        }
        let path = &self.files[file].path;
        let absolute: Vec<String> = match binding {
            Binding::Module(m) => m
                .split('.')
                .chain(parts[1..].iter().copied())
                .map(str::to_string)
                .collect(),
            Binding::Absolute => parts.iter().map(|s| s.to_string()).collect(),
            _ => return None,
        };
        // longest module prefix, then at most one class segment
        for k in (1..absolute.len()).rev() {
            let Some(module) = self.modules.resolve(path, &absolute[..k].join(".")) else {
                continue;
            };
            let module = module.to_string();
            if k + 1 == absolute.len() {
                if let Some(Binding::Def(d)) = self.member(&module, &absolute[k], 4) {
                    if self.files[d.0].definitions[d.1].kind == DefKind::Class {
                        return Some(BaseTarget::Class(d));
                    }
                }
            }
            return Some(BaseTarget::Module(module));
        }
        None
    }

    fn method_in_hierarchy(
        &self,
        class: DefRef,
        method: &str,
        inherits: &BTreeSet<(DefRef, BaseTarget)>,
    ) -> Option<DefRef> {
        let mut queue = VecDeque::from([class]);
        let mut seen = BTreeSet::from([class]);
        while let Some(c) = queue.pop_front() {
            let found = self.files[c.0]
                .children(Some(c.1))
                .filter(|(_, d)| d.kind == DefKind::Function && d.name == method)
                .map(|(i, _)| (c.0, i))
                .last();
            if found.is_some() {
                return found;
            }
            for (_, target) in inherits.iter().filter(|(s, _)| *s == c) {
                if let BaseTarget::Class(b) = target {
                    if seen.insert(*b) {
                        queue.push_back(*b);
                    }
                }
            }
        }
        None
    }
}

/// Resolves calls, bases, aggregation and imports across all files of one
/// snapshot. Unresolvable references are dropped (bases with a note).
pub fn resolve_references(files: &[FileFacts]) -> Resolution {
    let r = Resolver::new(files);
    let mut out = Resolution::default();

    for (fi, facts) in files.iter().enumerate() {
        for imp in &facts.imports {
            if let Some(m) = r.import_target(&facts.path, imp) {
                out.modules.insert(m.clone());
                out.imports.insert((fi, m));
            }
        }
    }

    for (fi, facts) in files.iter().enumerate() {
        for (ci, class) in facts.classes() {
            for base in &class.bases {
                match r.resolve_class_expr(fi, class.parent, base) {
                    Some(BaseTarget::Class(t)) if t == (fi, ci) => {}
                    Some(target) => {
                        if let BaseTarget::Module(m) = &target {
                            out.modules.insert(m.clone());
                        }
                        out.inherits.insert(((fi, ci), target));
                    }
                    None if base == "object" => {}
                    None => out.notes.push((
                        fi,
                        format!(
                            "base '{}' of class '{}' is not a project class; dropped",
                            base, class.dotted
                        ),
                    )),
                }
            }
            for candidate in &class.aggregation_candidates {
                if let Some(BaseTarget::Class(t)) =
                    r.resolve_class_expr(fi, class.parent, candidate)
                {
                    if t != (fi, ci) {
                        out.aggregates.insert(((fi, ci), t));
                    }
                }
            }
        }
    }

    for (fi, facts) in files.iter().enumerate() {
        for (k, call) in facts.calls.iter().enumerate() {
            let target = match &call.target {
                CalleeRef::Name(name) => r.resolve_function(fi, call.scope, name),
                CalleeRef::Receiver { class, method } => {
                    r.method_in_hierarchy((fi, *class), method, &out.inherits)
                }
                CalleeRef::Opaque => None,
            };
            if let Some(t) = target {
                out.calls.insert((fi, k), t);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::super::python::extract_file_facts;
    use super::*;

    fn facts(files: &[(&str, &str)]) -> Vec<FileFacts> {
        files
            .iter()
            .map(|(p, s)| extract_file_facts(p, s))
            .collect()
    }

    fn resolved_calls(files: &[FileFacts], res: &Resolution) -> Vec<(String, String)> {
        res.calls
            .iter()
            .map(|(&(f, c), &(tf, td))| {
                (
                    files[f].calls[c].callee.clone(),
                    format!("{}::{}", files[tf].path, files[tf].definitions[td].dotted),
                )
            })
            .collect()
    }

    #[test]
    fn module_names() {
        assert_eq!(dotted_name("a/b/c.py").as_deref(), Some("a.b.c"));
        assert_eq!(dotted_name("a/__init__.py").as_deref(), Some("a"));
        assert_eq!(dotted_name("__init__.py"), None);
        assert_eq!(dotted_name("README.md"), None);
    }

    #[test]
    fn same_file_call_resolves() {
        let files = facts(&[("m.py", "def f(): g()\ndef g(): pass\n")]);
        let res = resolve_references(&files);
        assert_eq!(
            resolved_calls(&files, &res),
            vec![("g".into(), "m.py::g".into())]
        );
    }

    #[test]
    fn undefined_name_stays_unresolved() {
        let files = facts(&[("m.py", "def f(): mystery()\n")]);
        assert!(resolve_references(&files).calls.is_empty());
    }

    #[test]
    fn enclosing_function_scope_wins_over_module_scope() {
        let src = "def h(): pass\ndef f():\n    def h(): pass\n    h()\n";
        let files = facts(&[("m.py", src)]);
        let res = resolve_references(&files);
        assert_eq!(
            resolved_calls(&files, &res),
            vec![("h".into(), "m.py::f.h".into())]
        );
    }

    #[test]
    fn methods_do_not_see_class_scope_for_bare_names() {
        let src = "def m(): pass\nclass C:\n    def m(self): pass\n    def n(self):\n        m()\n";
        let files = facts(&[("m.py", src)]);
        let res = resolve_references(&files);
        assert_eq!(
            resolved_calls(&files, &res),
            vec![("m".into(), "m.py::m".into())]
        );
    }

    #[test]
    fn receiver_calls_walk_internal_bases() {
        let files = facts(&[
            ("base.py", "class B:\n    def helper(self): pass\n"),
            (
                "c.py",
                "from base import B\nclass C(B):\n    def run(self):\n        self.helper()\n        self.missing()\n",
            ),
        ]);
        let res = resolve_references(&files);
        assert_eq!(
            resolved_calls(&files, &res),
            vec![("self.helper".into(), "base.py::B.helper".into())]
        );
        assert_eq!(
            res.inherits.iter().cloned().collect::<Vec<_>>(),
            vec![((1, 0), BaseTarget::Class((0, 0)))]
        );
    }

    #[test]
    fn imported_function_resolves_and_attribute_chains_do_not() {
        let files = facts(&[
            ("utils.py", "def helper(): pass\n"),
            (
                "main.py",
                "import utils\nfrom utils import helper as h\nh()\nutils.helper()\n",
            ),
        ]);
        let res = resolve_references(&files);
        assert_eq!(
            resolved_calls(&files, &res),
            vec![("h".into(), "utils.py::helper".into())]
        );
        assert_eq!(res.modules, BTreeSet::from(["utils".to_string()]));
        assert_eq!(res.imports, BTreeSet::from([(1, "utils".to_string())]));
    }

    #[test]
    fn standard_library_imports_create_no_modules() {
        let files = facts(&[(
            "main.py",
            "import os\nfrom collections import OrderedDict\n",
        )]);
        let res = resolve_references(&files);
        assert!(res.modules.is_empty() && res.imports.is_empty());
    }

    #[test]
    fn from_package_import_submodule_targets_the_submodule() {
        let files = facts(&[
            ("lib/__init__.py", ""),
            ("lib/helpers.py", "def log(m): pass\n"),
            ("main.py", "from lib import helpers\n"),
        ]);
        let res = resolve_references(&files);
        assert_eq!(res.modules, BTreeSet::from(["lib.helpers".to_string()]));
    }

    #[test]
    fn relative_and_reexported_imports() {
        let files = facts(&[
            ("pkg/__init__.py", "from .impl import Thing\n"),
            ("pkg/impl.py", "class Thing:\n    pass\n"),
            (
                "app.py",
                "from pkg import Thing\nclass Sub(Thing):\n    pass\n",
            ),
        ]);
        let res = resolve_references(&files);
        assert!(res.inherits.contains(&((2, 0), BaseTarget::Class((1, 0)))));
    }

    #[test]
    fn base_traced_to_import_without_class_becomes_module() {
        let files = facts(&[
            ("shim.py", "Base = object\n"),
            ("app.py", "import shim\nfrom shim import Base\nclass A(Base): pass\nclass B(shim.Other): pass\n"),
        ]);
        let res = resolve_references(&files);
        let targets: Vec<_> = res.inherits.iter().map(|(_, t)| t.clone()).collect();
        assert_eq!(
            targets,
            vec![
                BaseTarget::Module("shim".into()),
                BaseTarget::Module("shim".into())
            ]
        );
    }

    #[test]
    fn external_bases_are_dropped_with_a_note() {
        let files = facts(&[(
            "app.py",
            "from PyQt5.QtWidgets import QWidget\nclass W(QWidget): pass\n",
        )]);
        let res = resolve_references(&files);
        assert!(res.inherits.is_empty());
        assert_eq!(res.notes.len(), 1);
    }

    #[test]
    fn aggregation_requires_internal_class_instantiation() {
        let src = "class Part: pass\nclass Whole:\n    spare = Part()\n    def __init__(self):\n        self.part = Part()\n        self.items = list()\n        self.me = Whole()\n";
        let files = facts(&[("w.py", src)]);
        let res = resolve_references(&files);
        assert_eq!(
            res.aggregates.iter().cloned().collect::<Vec<_>>(),
            vec![((0, 1), (0, 0))]
        );
    }

    #[test]
    fn sibling_directory_imports_resolve() {
        let files = facts(&[
            ("tools/util.py", "def go(): pass\n"),
            ("tools/run.py", "from util import go\ngo()\n"),
        ]);
        let res = resolve_references(&files);
        assert_eq!(res.modules, BTreeSet::from(["tools.util".to_string()]));
        assert_eq!(resolved_calls(&files, &res).len(), 1);
    }
}
