//! Deterministic inputs for the benchmarks under `benches/`.

use std::collections::{BTreeMap, BTreeSet};

use archdelta_core::{ArchitectureAbstraction, Variant};

/// `components` components of `per_component` entities each; `shift` moves
/// entities between neighbouring components so two calls with different
/// shifts overlap only partially.
pub fn abstraction(
    components: usize,
    per_component: usize,
    shift: usize,
) -> ArchitectureAbstraction {
    let mut map: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    for c in 0..components {
        let entities = (0..per_component)
            .map(|e| {
                let owner = if e < shift { (c + 1) % components } else { c };
                format!("pkg{owner}/file{e}.py")
            })
            .collect();
        map.insert(format!("pkg{c}"), entities);
    }
    ArchitectureAbstraction {
        variant: Variant::Architectural,
        components: map,
    }
}

/// Method attribute and call sets for one class of `n` methods. Every
/// fourth method starts a new cluster.
pub fn methods(n: usize) -> Vec<(String, BTreeSet<String>, BTreeSet<String>)> {
    (0..n)
        .map(|i| {
            let cluster = i / 4;
            let attributes = [format!("a{cluster}"), format!("b{i}")]
                .into_iter()
                .collect();
            let calls = if i % 4 == 3 {
                [format!("m{}", i - 1)].into_iter().collect()
            } else {
                BTreeSet::new()
            };
            (format!("m{i}"), attributes, calls)
        })
        .collect()
}

/// Python sources for a project of `dirs` packages with `files` modules
/// each.
pub fn project(dirs: usize, files: usize) -> Vec<(String, String)> {
    let mut out = Vec::new();
    for d in 0..dirs {
        out.push((format!("pkg{d}/__init__.py"), String::new()));
        for f in 0..files {
            let other = (d + 1) % dirs;
            let body = format!(
                "from pkg{other} import mod{f}\n\
                 import os\n\n\
                 class Base{f}:\n    def describe(self):\n        return self.name\n\n\
                 class Thing{f}(Base{f}):\n\
                 \x20   def __init__(self):\n        self.name = 'x'\n        self.items = []\n\n\
                 \x20   def add(self, x):\n        self.items.append(x)\n        return helper{f}(x)\n\n\
                 \x20   def show(self):\n        return self.describe() + os.sep\n\n\
                 def helper{f}(x):\n    return mod{f}.helper{f}(x) if x else 0\n"
            );
            out.push((format!("pkg{d}/mod{f}.py"), body));
        }
    }
    out.push(("README.txt".into(), "bench\n".into()));
    out
}
