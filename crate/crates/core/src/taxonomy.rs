//! Named taxonomies: finite DAGs of atom names where an edge `(child, parent)`
//! means `child ≤ parent`.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::types::is_ident_char;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TaxonomyError {
    #[error("unknown atom `{0}`")]
    UnknownAtom(String),
    #[error("invalid atom name `{0}` (expected [A-Za-z0-9_]+, not `omega`)")]
    InvalidName(String),
    #[error("edge `{child}` <= `{parent}` references undeclared node `{missing}`")]
    DanglingEdge { child: String, parent: String, missing: String },
    #[error("taxonomy contains a cycle: {}", .0.join(" <= "))]
    Cycle(Vec<String>),
}

/// A partial order of atoms. Immutable; edits return a new revision.
#[derive(Clone)]
pub struct Taxonomy {
    name: String,
    nodes: BTreeSet<String>,
    edges: BTreeSet<(String, String)>,
    parents: BTreeMap<String, Vec<String>>,
    closure: OnceLock<HashMap<String, BTreeSet<String>>>,
}

impl PartialEq for Taxonomy {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name && self.nodes == other.nodes && self.edges == other.edges
    }
}

impl Eq for Taxonomy {}

impl fmt::Debug for Taxonomy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Taxonomy")
            .field("name", &self.name)
            .field("nodes", &self.nodes)
            .field("edges", &self.edges)
            .finish()
    }
}

impl Default for Taxonomy {
    fn default() -> Self {
        Taxonomy::empty("")
    }
}

pub fn valid_atom_name(name: &str) -> bool {
    !name.is_empty() && name != "omega" && name.chars().all(is_ident_char)
}

impl Taxonomy {
    pub fn empty(name: impl Into<String>) -> Self {
        Taxonomy {
            name: name.into(),
            nodes: BTreeSet::new(),
            edges: BTreeSet::new(),
            parents: BTreeMap::new(),
            closure: OnceLock::new(),
        }
    }

    pub fn new<N, E>(name: impl Into<String>, nodes: N, edges: E) -> Result<Self, TaxonomyError>
    where
        N: IntoIterator<Item = String>,
        E: IntoIterator<Item = (String, String)>,
    {
        let nodes: BTreeSet<String> = nodes.into_iter().collect();
        if let Some(bad) = nodes.iter().find(|n| !valid_atom_name(n)) {
            return Err(TaxonomyError::InvalidName(bad.clone()));
        }
        let edges: BTreeSet<(String, String)> = edges.into_iter().collect();
        let mut parents: BTreeMap<String, Vec<String>> = BTreeMap::new();
        for (child, parent) in &edges {
            for end in [child, parent] {
                if !nodes.contains(end) {
                    return Err(TaxonomyError::DanglingEdge {
                        child: child.clone(),
                        parent: parent.clone(),
                        missing: end.clone(),
                    });
                }
            }
            parents.entry(child.clone()).or_default().push(parent.clone());
        }
        let tax = Taxonomy { name: name.into(), nodes, edges, parents, closure: OnceLock::new() };
        if let Some(cycle) = tax.find_cycle() {
            return Err(TaxonomyError::Cycle(cycle));
        }
        Ok(tax)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn nodes(&self) -> &BTreeSet<String> {
        &self.nodes
    }

    pub fn edges(&self) -> &BTreeSet<(String, String)> {
        &self.edges
    }

    pub fn contains(&self, atom: &str) -> bool {
        self.nodes.contains(atom)
    }

    /// Union of nodes and edges, validated acyclic. The merged name is the
    /// sorted set of `+`-separated part names.
    pub fn merge(parts: &[Taxonomy]) -> Result<Taxonomy, TaxonomyError> {
        let names: BTreeSet<&str> = parts.iter().flat_map(|p| p.name.split('+')).filter(|n| !n.is_empty()).collect();
        let name = names.into_iter().collect::<Vec<_>>().join("+");
        Taxonomy::new(
            name,
            parts.iter().flat_map(|p| p.nodes.iter().cloned()),
            parts.iter().flat_map(|p| p.edges.iter().cloned()),
        )
    }

    /// Reflexive-transitive upward closure of `atom`.
    pub fn supertype_closure(&self, atom: &str) -> Result<&BTreeSet<String>, TaxonomyError> {
        self.closures().get(atom).ok_or_else(|| TaxonomyError::UnknownAtom(atom.to_string()))
    }

    /// `a ≤ b`. Atoms outside the taxonomy are related only to themselves.
    pub fn leq(&self, a: &str, b: &str) -> bool {
        a == b || self.closures().get(a).is_some_and(|c| c.contains(b))
    }

    fn closures(&self) -> &HashMap<String, BTreeSet<String>> {
        self.closure.get_or_init(|| {
            let mut memo: HashMap<String, BTreeSet<String>> = HashMap::with_capacity(self.nodes.len());
            for n in &self.nodes {
                self.fill_closure(n, &mut memo);
            }
            memo
        })
    }

    fn fill_closure(&self, node: &str, memo: &mut HashMap<String, BTreeSet<String>>) {
        if memo.contains_key(node) {
            return;
        }
        let mut up = BTreeSet::from([node.to_string()]);
        for p in self.parents.get(node).into_iter().flatten() {
            self.fill_closure(p, memo);
            up.extend(memo[p.as_str()].iter().cloned());
        }
        memo.insert(node.to_string(), up);
    }

    fn find_cycle(&self) -> Option<Vec<String>> {
        #[derive(Clone, Copy, PartialEq)]
        enum Mark {
            Open,
            Done,
        }
        fn visit<'a>(
            tax: &'a Taxonomy,
            node: &'a str,
            marks: &mut HashMap<&'a str, Mark>,
            stack: &mut Vec<&'a str>,
        ) -> Option<Vec<String>> {
            match marks.get(node) {
                Some(Mark::Done) => return None,
                Some(Mark::Open) => {
                    let start = stack.iter().position(|n| *n == node).unwrap_or(0);
                    let mut cycle: Vec<String> = stack[start..].iter().map(|s| s.to_string()).collect();
                    cycle.push(node.to_string());
                    return Some(cycle);
                }
                None => {}
            }
            marks.insert(node, Mark::Open);
            stack.push(node);
            for p in tax.parents.get(node).into_iter().flatten() {
                if let Some(c) = visit(tax, p, marks, stack) {
                    return Some(c);
                }
            }
            stack.pop();
            marks.insert(node, Mark::Done);
            None
        }
        let mut marks = HashMap::new();
        let mut stack = Vec::new();
        self.nodes.iter().find_map(|n| visit(self, n, &mut marks, &mut stack))
    }

    pub fn with_node(&self, node: impl Into<String>) -> Result<Taxonomy, TaxonomyError> {
        let mut nodes = self.nodes.clone();
        nodes.insert(node.into());
        Taxonomy::new(self.name.clone(), nodes, self.edges.iter().cloned())
    }

    pub fn with_edge(&self, child: impl Into<String>, parent: impl Into<String>) -> Result<Taxonomy, TaxonomyError> {
        let mut edges = self.edges.clone();
        edges.insert((child.into(), parent.into()));
        Taxonomy::new(self.name.clone(), self.nodes.iter().cloned(), edges)
    }

    /// Removes `node`, splicing its children onto its parents so the order
    /// among the remaining nodes is preserved.
    pub fn without_node(&self, node: &str) -> Result<Taxonomy, TaxonomyError> {
        if !self.contains(node) {
            return Err(TaxonomyError::UnknownAtom(node.to_string()));
        }
        let children: Vec<&String> = self.edges.iter().filter(|(_, p)| p == node).map(|(c, _)| c).collect();
        let parents: Vec<&String> = self.edges.iter().filter(|(c, _)| c == node).map(|(_, p)| p).collect();
        let mut edges: BTreeSet<(String, String)> =
            self.edges.iter().filter(|(c, p)| c != node && p != node).cloned().collect();
        for c in &children {
            for p in &parents {
                edges.insert(((*c).clone(), (*p).clone()));
            }
        }
        Taxonomy::new(self.name.clone(), self.nodes.iter().filter(|n| *n != node).cloned(), edges)
    }
}

/// On-disk form: `{"name", "nodes": [...], "edges": [[child, parent], ...]}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaxonomyDoc {
    pub name: String,
    #[serde(default)]
    pub nodes: Vec<String>,
    #[serde(default)]
    pub edges: Vec<[String; 2]>,
}

impl TryFrom<TaxonomyDoc> for Taxonomy {
    type Error = TaxonomyError;

    fn try_from(doc: TaxonomyDoc) -> Result<Self, Self::Error> {
        Taxonomy::new(doc.name, doc.nodes, doc.edges.into_iter().map(|[c, p]| (c, p)))
    }
}

impl From<&Taxonomy> for TaxonomyDoc {
    fn from(t: &Taxonomy) -> Self {
        TaxonomyDoc {
            name: t.name.clone(),
            nodes: t.nodes.iter().cloned().collect(),
            edges: t.edges.iter().map(|(c, p)| [c.clone(), p.clone()]).collect(),
        }
    }
}

impl Serialize for Taxonomy {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        TaxonomyDoc::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for Taxonomy {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let doc = TaxonomyDoc::deserialize(d)?;
        Taxonomy::try_from(doc).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(name: &str, edges: &[(&str, &str)]) -> Taxonomy {
        let nodes: BTreeSet<String> = edges.iter().flat_map(|(c, p)| [c.to_string(), p.to_string()]).collect();
        Taxonomy::new(name, nodes, edges.iter().map(|(c, p)| (c.to_string(), p.to_string()))).unwrap()
    }

    fn set(items: &[&str]) -> BTreeSet<String> {
        items.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn merge_unions_edges() {
        let m = Taxonomy::merge(&[t("a", &[("screw", "fastener")]), t("b", &[("bolt", "fastener")])]).unwrap();
        assert_eq!(m.nodes(), &set(&["bolt", "fastener", "screw"]));
        assert_eq!(m.edges().len(), 2);
        assert!(m.leq("screw", "fastener"));
        assert!(m.leq("bolt", "fastener"));
        assert_eq!(m.name(), "a+b");
    }

    #[test]
    fn merge_of_nothing_is_empty() {
        let m = Taxonomy::merge(&[]).unwrap();
        assert!(m.nodes().is_empty());
        assert!(m.edges().is_empty());
    }

    #[test]
    fn merge_detects_two_cycle() {
        let err = Taxonomy::merge(&[t("x", &[("a", "b")]), t("y", &[("b", "a")])]).unwrap_err();
        match err {
            TaxonomyError::Cycle(c) => {
                assert_eq!(c.first(), c.last());
                assert_eq!(c.len(), 3);
            }
            other => panic!("expected cycle, got {other:?}"),
        }
    }

    #[test]
    fn merge_is_idempotent() {
        let a = t("a", &[("screw", "fastener")]);
        let b = t("b", &[("bolt", "fastener")]);
        let m = Taxonomy::merge(&[a.clone(), b]).unwrap();
        let again = Taxonomy::merge(&[m.clone(), a]).unwrap();
        assert_eq!(again, m);
    }

    #[test]
    fn closure_chain_root_and_diamond() {
        let chain = t("c", &[("servomotor", "motor"), ("motor", "actuator")]);
        assert_eq!(chain.supertype_closure("servomotor").unwrap(), &set(&["servomotor", "motor", "actuator"]));
        assert_eq!(chain.supertype_closure("actuator").unwrap(), &set(&["actuator"]));

        let diamond = t("d", &[("a", "b"), ("a", "c"), ("b", "d"), ("c", "d")]);
        assert_eq!(diamond.supertype_closure("a").unwrap(), &set(&["a", "b", "c", "d"]));
        assert_eq!(diamond.supertype_closure("zz").unwrap_err(), TaxonomyError::UnknownAtom("zz".into()));
    }

    #[test]
    fn dangling_edges_and_bad_names_rejected() {
        let err = Taxonomy::new("x", set(&["a"]), [("a".to_string(), "b".to_string())]).unwrap_err();
        assert!(matches!(err, TaxonomyError::DanglingEdge { missing, .. } if missing == "b"));
        assert!(matches!(Taxonomy::new("x", set(&["omega"]), []), Err(TaxonomyError::InvalidName(_))));
        assert!(matches!(Taxonomy::new("x", set(&["a-b"]), []), Err(TaxonomyError::InvalidName(_))));
    }

    #[test]
    fn without_node_splices_order() {
        let chain = t("c", &[("servomotor", "motor"), ("motor", "actuator")]);
        let cut = chain.without_node("motor").unwrap();
        assert!(!cut.contains("motor"));
        assert!(cut.leq("servomotor", "actuator"));
    }

    #[test]
    fn json_document_round_trip() {
        let json = r#"{"name":"t","nodes":["a","b"],"edges":[["a","b"]]}"#;
        let tax: Taxonomy = serde_json::from_str(json).unwrap();
        assert!(tax.leq("a", "b"));
        assert_eq!(serde_json::to_string(&tax).unwrap(), json);
    }
}
