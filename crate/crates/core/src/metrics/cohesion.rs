//! LCOM4 cohesion per class.
//!
//! The class's own methods form an undirected graph: two methods are joined
//! when they touch a common attribute through the receiver, or when either
//! calls the other through the receiver. LCOM4 is the number of connected
//! components; inherited methods do not take part.

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::model::{EntityId, EntityKind, Snapshot};

#[derive(Debug, Clone, Copy)]
pub struct MethodShape<'a> {
    pub name: &'a str,
    pub attributes: &'a BTreeSet<String>,
    pub calls: &'a BTreeSet<String>,
}

pub fn lcom4(methods: &[MethodShape<'_>]) -> usize {
    let n = methods.len();
    let mut adjacency: Vec<Vec<usize>> = vec![Vec::new(); n];
    let by_name: HashMap<&str, usize> = methods
        .iter()
        .enumerate()
        .map(|(i, m)| (m.name, i))
        .collect();
    let mut by_attribute: HashMap<&str, Vec<usize>> = HashMap::new();
    for (i, m) in methods.iter().enumerate() {
        for a in m.attributes {
            by_attribute.entry(a.as_str()).or_default().push(i);
        }
        for c in m.calls {
            if let Some(&j) = by_name.get(c.as_str()) {
                if i != j {
                    adjacency[i].push(j);
                    adjacency[j].push(i);
                }
            }
        }
    }
    for users in by_attribute.values() {
        // a star around the first user connects them all
        for &j in &users[1..] {
            adjacency[users[0]].push(j);
            adjacency[j].push(users[0]);
        }
    }

    let mut seen = vec![false; n];
    let mut components = 0;
    let mut stack = Vec::new();
    for start in 0..n {
        if seen[start] {
            continue;
        }
        components += 1;
        seen[start] = true;
        stack.push(start);
        while let Some(v) = stack.pop() {
            for &w in &adjacency[v] {
                if !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
    }
    components
}

/// LCOM4 of one class of the snapshot, with its method count.
pub fn class_lcom4(s: &Snapshot, class: EntityId) -> (usize, usize) {
    let empty = BTreeSet::new();
    let methods = s.class_methods(class);
    let shapes: Vec<MethodShape<'_>> = methods
        .iter()
        .map(|(e, f)| MethodShape {
            name: &e.name,
            attributes: f.map_or(&empty, |f| &f.accessed_attributes),
            calls: f.map_or(&empty, |f| &f.called_sibling_methods),
        })
        .collect();
    (lcom4(&shapes), shapes.len())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CohesionEntry {
    pub class: String,
    pub lcom4: usize,
    pub methods: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CohesionReport {
    pub tag: String,
    pub entries: Vec<CohesionEntry>,
}

/// One entry per class, ordered by qualified name.
pub fn cohesion_report(s: &Snapshot) -> CohesionReport {
    let mut entries: Vec<CohesionEntry> = s
        .entities_of(EntityKind::ClassDef)
        .map(|c| {
            let (lcom4, methods) = class_lcom4(s, c.id);
            CohesionEntry {
                class: c.qualified_name.clone(),
                lcom4,
                methods,
            }
        })
        .collect();
    entries.sort_by(|a, b| a.class.cmp(&b.class));
    CohesionReport {
        tag: s.tag.name.clone(),
        entries,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(items: &[&str]) -> BTreeSet<String> {
        items.iter().map(|s| s.to_string()).collect()
    }

    fn shapes<'a>(
        specs: &'a [(&'a str, BTreeSet<String>, BTreeSet<String>)],
    ) -> Vec<MethodShape<'a>> {
        specs
            .iter()
            .map(|(n, a, c)| MethodShape {
                name: n,
                attributes: a,
                calls: c,
            })
            .collect()
    }

    #[test]
    fn no_methods() {
        assert_eq!(lcom4(&[]), 0);
    }

    #[test]
    fn single_method() {
        let specs = [("m", set(&[]), set(&[]))];
        assert_eq!(lcom4(&shapes(&specs)), 1);
    }

    #[test]
    fn shared_attribute_and_isolated_method() {
        let specs = [
            ("m1", set(&["x"]), set(&[])),
            ("m2", set(&["x", "y"]), set(&[])),
            ("m3", set(&["z"]), set(&[])),
        ];
        assert_eq!(lcom4(&shapes(&specs)), 2);
    }

    #[test]
    fn call_then_shared_attribute_connects_all() {
        let specs = [
            ("m1", set(&[]), set(&["m2"])),
            ("m2", set(&["a"]), set(&[])),
            ("m3", set(&["a"]), set(&[])),
        ];
        assert_eq!(lcom4(&shapes(&specs)), 1);
    }

    #[test]
    fn disjoint_attributes_give_one_component_each() {
        let specs: Vec<_> = (0..5)
            .map(|i| {
                (
                    ["a", "b", "c", "d", "e"][i],
                    set(&[["p", "q", "r", "s", "t"][i]]),
                    set(&[]),
                )
            })
            .collect();
        assert_eq!(lcom4(&shapes(&specs)), 5);
    }

    #[test]
    fn calls_to_unknown_methods_do_not_connect() {
        let specs = [
            ("m1", set(&[]), set(&["inherited"])),
            ("m2", set(&[]), set(&[])),
        ];
        assert_eq!(lcom4(&shapes(&specs)), 2);
    }
}
