//! Per-file fact extraction from Python source.
//!
//! The output is purely syntactic: definitions with their lexical nesting,
//! call expressions with their callee text, import bindings, inheritance
//! bases and receiver-level attribute facts. Nothing here looks at other
//! files; cross-file resolution happens in [`super::resolve`].

use std::collections::{BTreeSet, HashMap};

use rustpython_ast::text_size::TextRange;
use rustpython_ast::{self as ast, Expr, Visitor};
use rustpython_parser::Parse;

use crate::model::Span;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DefKind {
    Function,
    Class,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Definition {
    pub kind: DefKind,
    pub name: String,
    /// Qualified name within the file, e.g. `Outer.method`.
    pub dotted: String,
    /// Index of the lexically enclosing definition.
    pub parent: Option<usize>,
    pub span: Span,
    /// Base-class expressions as text (classes only).
    pub bases: Vec<String>,
    /// Receiver parameter name (methods only).
    pub receiver: Option<String>,
    pub accessed_attributes: BTreeSet<String>,
    pub called_sibling_methods: BTreeSet<String>,
    /// Callee texts of instantiations assigned to receiver attributes or
    /// class-level attributes (classes only).
    pub aggregation_candidates: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CalleeRef {
    /// Bare name, resolved lexically.
    Name(String),
    /// `receiver.method(...)` inside a method of `class`.
    Receiver { class: usize, method: String },
    /// Any other callee shape; never resolved.
    Opaque,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CallFact {
    /// Innermost enclosing definition (function or class); `None` at module level.
    pub scope: Option<usize>,
    /// Innermost enclosing function; `None` means the file is the caller.
    pub caller: Option<usize>,
    pub callee: String,
    /// 1-based count of `callee` within `scope`, in source order.
    pub ordinal: u32,
    pub line: u32,
    pub target: CalleeRef,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImportFact {
    /// Absolute dotted module name; relative imports are anchored at the
    /// importing file's package. Empty when a relative import climbs above
    /// the repository root.
    pub module: String,
    /// Imported member for `from m import name`; `None` for `import m`.
    pub name: Option<String>,
    /// Local name bound by the statement.
    pub bound: String,
    /// Scope the binding lives in (`None` = module level).
    pub scope: Option<usize>,
    pub line: u32,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FileFacts {
    pub path: String,
    pub definitions: Vec<Definition>,
    pub calls: Vec<CallFact>,
    pub imports: Vec<ImportFact>,
    pub parse_error: Option<String>,
    pub notes: Vec<String>,
}

impl FileFacts {
    pub fn functions(&self) -> impl Iterator<Item = (usize, &Definition)> {
        self.definitions
            .iter()
            .enumerate()
            .filter(|(_, d)| d.kind == DefKind::Function)
    }

    pub fn classes(&self) -> impl Iterator<Item = (usize, &Definition)> {
        self.definitions
            .iter()
            .enumerate()
            .filter(|(_, d)| d.kind == DefKind::Class)
    }

    /// Definitions whose lexical parent is `scope`.
    pub fn children(&self, scope: Option<usize>) -> impl Iterator<Item = (usize, &Definition)> {
        self.definitions
            .iter()
            .enumerate()
            .filter(move |(_, d)| d.parent == scope)
    }

    /// Whether `def` is a method, i.e. directly defined in a class body.
    pub fn is_method(&self, def: usize) -> bool {
        self.definitions[def].kind == DefKind::Function
            && self.definitions[def]
                .parent
                .is_some_and(|p| self.definitions[p].kind == DefKind::Class)
    }
}

/// Parses one file and collects its facts. A syntax error yields facts with
/// `parse_error` set and nothing else.
pub fn extract_file_facts(path: &str, source: &str) -> FileFacts {
    let source = source.strip_prefix('\u{feff}').unwrap_or(source);
    let suite = match ast::Suite::parse(source, path) {
        Ok(suite) => suite,
        Err(err) => {
            return FileFacts {
                path: path.to_string(),
                parse_error: Some(err.to_string()),
                ..FileFacts::default()
            }
        }
    };
    let mut collector = Collector::new(path, source);
    for stmt in suite {
        collector.visit_stmt(stmt);
    }
    collector.finish()
}

/// Package (dotted directory) that a file's relative imports are anchored at.
fn package_of(path: &str) -> Vec<String> {
    let mut parts: Vec<String> = path.split('/').map(str::to_string).collect();
    parts.pop();
    parts
}

pub(crate) fn absolute_module(path: &str, level: usize, module: Option<&str>) -> String {
    if level == 0 {
        return module.unwrap_or_default().to_string();
    }
    let mut base = package_of(path);
    for _ in 1..level {
        if base.pop().is_none() {
            return String::new();
        }
    }
    if let Some(m) = module {
        base.extend(m.split('.').map(str::to_string));
    }
    base.join(".")
}

/// Text of a callee or base expression: dotted for name/attribute chains,
/// with `()` and `[]` marking call and subscript links.
pub fn render_expr(expr: &Expr) -> String {
    match expr {
        Expr::Name(n) => n.id.to_string(),
        Expr::Attribute(a) => format!("{}.{}", render_expr(&a.value), a.attr),
        Expr::Call(c) => format!("{}()", render_expr(&c.func)),
        Expr::Subscript(s) => format!("{}[]", render_expr(&s.value)),
        _ => "<expr>".to_string(),
    }
}

#[derive(Clone)]
struct ReceiverCtx {
    class: usize,
    method: usize,
    name: String,
}

struct Collector<'a> {
    path: &'a str,
    line_starts: Vec<u32>,
    defs: Vec<Definition>,
    calls: Vec<CallFact>,
    imports: Vec<ImportFact>,
    stack: Vec<usize>,
    receiver: Option<ReceiverCtx>,
    notes: Vec<String>,
}

impl<'a> Collector<'a> {
    fn new(path: &'a str, source: &str) -> Self {
        let mut line_starts = vec![0u32];
        line_starts.extend(
            source
                .bytes()
                .enumerate()
                .filter(|(_, b)| *b == b'\n')
                .map(|(i, _)| i as u32 + 1),
        );
        Collector {
            path,
            line_starts,
            defs: Vec::new(),
            calls: Vec::new(),
            imports: Vec::new(),
            stack: Vec::new(),
            receiver: None,
            notes: Vec::new(),
        }
    }

    fn line(&self, offset: u32) -> u32 {
        match self.line_starts.binary_search(&offset) {
            Ok(i) => i as u32 + 1,
            Err(i) => i as u32,
        }
    }

    fn span(&self, range: TextRange) -> Span {
        let end = u32::from(range.end())
            .saturating_sub(1)
            .max(range.start().into());
        Span {
            start: self.line(range.start().into()),
            end: self.line(end),
        }
    }

    fn scope(&self) -> Option<usize> {
        self.stack.last().copied()
    }

    fn enclosing_function(&self) -> Option<usize> {
        self.stack
            .iter()
            .rev()
            .copied()
            .find(|&i| self.defs[i].kind == DefKind::Function)
    }

    fn current_class_body(&self) -> Option<usize> {
        self.scope()
            .filter(|&i| self.defs[i].kind == DefKind::Class)
    }

    fn push_def(&mut self, kind: DefKind, name: &str, range: TextRange) -> usize {
        let parent = self.scope();
        let dotted = match parent {
            Some(p) => format!("{}.{}", self.defs[p].dotted, name),
            None => name.to_string(),
        };
        self.defs.push(Definition {
            kind,
            name: name.to_string(),
            dotted,
            parent,
            span: self.span(range),
            bases: Vec::new(),
            receiver: None,
            accessed_attributes: BTreeSet::new(),
            called_sibling_methods: BTreeSet::new(),
            aggregation_candidates: Vec::new(),
        });
        self.defs.len() - 1
    }

    #[allow(clippy::too_many_arguments)]
    fn function(
        &mut self,
        name: &str,
        range: TextRange,
        args: ast::Arguments,
        body: Vec<ast::Stmt>,
        decorators: Vec<Expr>,
        returns: Option<Box<Expr>>,
    ) {
        let is_static = decorators.iter().any(|d| render_expr(d) == "staticmethod");
        // decorators, defaults and annotations evaluate in the enclosing scope
        for d in decorators {
            self.visit_expr(d);
        }
        let receiver_name = args
            .posonlyargs
            .first()
            .or_else(|| args.args.first())
            .map(|a| a.def.arg.to_string());
        self.visit_arguments(args);
        if let Some(r) = returns {
            self.visit_expr(*r);
        }

        let method_of = self.current_class_body();
        let idx = self.push_def(DefKind::Function, name, range);
        let saved = self.receiver.clone();
        if let Some(class) = method_of {
            let receiver = if is_static { None } else { receiver_name };
            self.defs[idx].receiver = receiver.clone();
            self.receiver = receiver.map(|name| ReceiverCtx {
                class,
                method: idx,
                name,
            });
        }
        self.stack.push(idx);
        for stmt in body {
            self.visit_stmt(stmt);
        }
        self.stack.pop();
        self.receiver = saved;
    }

    fn note_aggregation(&mut self, targets: &[&Expr], value: &Expr) {
        let Expr::Call(call) = value else {
            return;
        };
        let callee = render_expr(&call.func);
        if let Some(class) = self.current_class_body() {
            if targets.iter().any(|t| matches!(t, Expr::Name(_))) {
                self.defs[class].aggregation_candidates.push(callee.clone());
            }
        }
        if let Some(ctx) = &self.receiver {
            let on_receiver = targets.iter().any(|t| match t {
                Expr::Attribute(a) => {
                    matches!(&*a.value, Expr::Name(n) if n.id.as_str() == ctx.name)
                }
                _ => false,
            });
            if on_receiver {
                let class = ctx.class;
                self.defs[class].aggregation_candidates.push(callee);
            }
        }
    }

    fn finish(self) -> FileFacts {
        let Collector {
            path,
            defs,
            calls,
            imports,
            mut notes,
            ..
        } = self;

        // Redefinitions: the last definition of a qualified name wins, and
        // everything nested in a losing definition goes with it.
        let mut last: HashMap<&str, usize> = HashMap::new();
        for (i, d) in defs.iter().enumerate() {
            if let Some(prev) = last.insert(d.dotted.as_str(), i) {
                notes.push(format!(
                    "'{}' redefined at line {} (previous at line {}); keeping the last definition",
                    d.dotted, d.span.start, defs[prev].span.start
                ));
            }
        }
        let mut alive = vec![false; defs.len()];
        for i in 0..defs.len() {
            let winner = last[defs[i].dotted.as_str()] == i;
            let parent_alive = defs[i].parent.is_none_or(|p| alive[p]);
            alive[i] = winner && parent_alive;
        }
        let mut remap = vec![None; defs.len()];
        let mut kept = Vec::new();
        for (i, d) in defs.into_iter().enumerate() {
            if alive[i] {
                remap[i] = Some(kept.len());
                kept.push(d);
            }
        }
        for d in &mut kept {
            d.parent = d.parent.and_then(|p| remap[p]);
        }
        let scope_alive = |s: Option<usize>| s.is_none_or(|s| alive[s]);

        let mut ordinals: HashMap<(Option<usize>, String), u32> = HashMap::new();
        let mut kept_calls = Vec::new();
        for mut c in calls {
            if !scope_alive(c.scope) || !scope_alive(c.caller) {
                continue;
            }
            if let CalleeRef::Receiver { class, .. } = &c.target {
                if !alive[*class] {
                    continue;
                }
            }
            c.scope = c.scope.and_then(|s| remap[s]);
            c.caller = c.caller.and_then(|s| remap[s]);
            if let CalleeRef::Receiver { class, .. } = &mut c.target {
                *class = remap[*class].expect("checked alive");
            }
            let n = ordinals.entry((c.scope, c.callee.clone())).or_insert(0);
            *n += 1;
            c.ordinal = *n;
            kept_calls.push(c);
        }
        let kept_imports = imports
            .into_iter()
            .filter(|i| scope_alive(i.scope))
            .map(|mut i| {
                i.scope = i.scope.and_then(|s| remap[s]);
                i
            })
            .collect();

        FileFacts {
            path: path.to_string(),
            definitions: kept,
            calls: kept_calls,
            imports: kept_imports,
            parse_error: None,
            notes,
        }
    }
}

impl Visitor for Collector<'_> {
    fn visit_stmt_function_def(&mut self, node: ast::StmtFunctionDef) {
        self.function(
            &node.name,
            node.range,
            *node.args,
            node.body,
            node.decorator_list,
            node.returns,
        );
    }

    fn visit_stmt_async_function_def(&mut self, node: ast::StmtAsyncFunctionDef) {
        self.function(
            &node.name,
            node.range,
            *node.args,
            node.body,
            node.decorator_list,
            node.returns,
        );
    }

    fn visit_stmt_class_def(&mut self, node: ast::StmtClassDef) {
        let bases: Vec<String> = node.bases.iter().map(render_expr).collect();
        for d in node.decorator_list {
            self.visit_expr(d);
        }
        for b in node.bases {
            self.visit_expr(b);
        }
        for k in node.keywords {
            self.visit_keyword(k);
        }
        let idx = self.push_def(DefKind::Class, &node.name, node.range);
        self.defs[idx].bases = bases;
        let saved = self.receiver.take();
        self.stack.push(idx);
        for stmt in node.body {
            self.visit_stmt(stmt);
        }
        self.stack.pop();
        self.receiver = saved;
    }

    fn visit_stmt_assign(&mut self, node: ast::StmtAssign) {
        let targets: Vec<&Expr> = node.targets.iter().collect();
        self.note_aggregation(&targets, &node.value);
        self.generic_visit_stmt_assign(node);
    }

    fn visit_stmt_ann_assign(&mut self, node: ast::StmtAnnAssign) {
        if let Some(value) = &node.value {
            self.note_aggregation(&[&*node.target], value);
        }
        self.generic_visit_stmt_ann_assign(node);
    }

    fn visit_stmt_import(&mut self, node: ast::StmtImport) {
        let line = self.line(node.range.start().into());
        for alias in node.names {
            let module = alias.name.to_string();
            let bound = match &alias.asname {
                Some(a) => a.to_string(),
                None => module.split('.').next().unwrap_or_default().to_string(),
            };
            self.imports.push(ImportFact {
                module,
                name: None,
                bound,
                scope: self.scope(),
                line,
            });
        }
    }

    fn visit_stmt_import_from(&mut self, node: ast::StmtImportFrom) {
        let line = self.line(node.range.start().into());
        let level = node.level.map_or(0, |l| l.to_usize());
        let module = absolute_module(self.path, level, node.module.as_deref());
        for alias in node.names {
            let name = alias.name.to_string();
            let bound = alias.asname.as_deref().unwrap_or(&name).to_string();
            self.imports.push(ImportFact {
                module: module.clone(),
                name: Some(name),
                bound,
                scope: self.scope(),
                line,
            });
        }
    }

    fn visit_expr_call(&mut self, node: ast::ExprCall) {
        let callee = render_expr(&node.func);
        let line = self.line(node.range.start().into());
        let mut receiver_call = false;
        let target = match &*node.func {
            Expr::Name(n) => CalleeRef::Name(n.id.to_string()),
            Expr::Attribute(a) => match (&*a.value, &self.receiver) {
                (Expr::Name(n), Some(ctx)) if n.id.as_str() == ctx.name => {
                    receiver_call = true;
                    let (class, method) = (ctx.class, ctx.method);
                    self.defs[method]
                        .called_sibling_methods
                        .insert(a.attr.to_string());
                    CalleeRef::Receiver {
                        class,
                        method: a.attr.to_string(),
                    }
                }
                _ => CalleeRef::Opaque,
            },
            _ => CalleeRef::Opaque,
        };
        self.calls.push(CallFact {
            scope: self.scope(),
            caller: self.enclosing_function(),
            callee,
            ordinal: 0,
            line,
            target,
        });
        // `self.m` in callee position is a sibling call, not an attribute access
        if !receiver_call {
            self.visit_expr(*node.func);
        }
        for a in node.args {
            self.visit_expr(a);
        }
        for k in node.keywords {
            self.visit_keyword(k);
        }
    }

    // The generated visitor leaves the product-node walks below empty.

    fn visit_arguments(&mut self, node: ast::Arguments) {
        let with_defaults = node
            .posonlyargs
            .into_iter()
            .chain(node.args)
            .chain(node.kwonlyargs);
        for a in with_defaults {
            self.visit_arg(a.def);
            if let Some(d) = a.default {
                self.visit_expr(*d);
            }
        }
        for a in node.vararg.into_iter().chain(node.kwarg) {
            self.visit_arg(*a);
        }
    }

    fn visit_arg(&mut self, node: ast::Arg) {
        if let Some(a) = node.annotation {
            self.visit_expr(*a);
        }
    }

    fn visit_keyword(&mut self, node: ast::Keyword) {
        self.visit_expr(node.value);
    }

    fn visit_comprehension(&mut self, node: ast::Comprehension) {
        self.visit_expr(node.target);
        self.visit_expr(node.iter);
        for cond in node.ifs {
            self.visit_expr(cond);
        }
    }

    fn visit_withitem(&mut self, node: ast::WithItem) {
        self.visit_expr(node.context_expr);
        if let Some(v) = node.optional_vars {
            self.visit_expr(*v);
        }
    }

    fn visit_match_case(&mut self, node: ast::MatchCase) {
        if let Some(g) = node.guard {
            self.visit_expr(*g);
        }
        for stmt in node.body {
            self.visit_stmt(stmt);
        }
    }

    fn visit_expr_attribute(&mut self, node: ast::ExprAttribute) {
        if let (Expr::Name(n), Some(ctx)) = (&*node.value, &self.receiver) {
            if n.id.as_str() == ctx.name {
                let method = ctx.method;
                self.defs[method]
                    .accessed_attributes
                    .insert(node.attr.to_string());
            }
        }
        self.generic_visit_expr_attribute(node);
    }
}
