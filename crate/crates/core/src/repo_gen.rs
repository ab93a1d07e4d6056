//! Repository construction.
//!
//! Every provided connection point of a component yields one static
//! combinator whose arguments are the required sets of the component's other
//! connection points and whose result is the provided set intersected with
//! the component's inherent atoms. A request's aggregates then expand each
//! static entry into dynamic entries whose property atoms carry the running
//! sum of a metadata counter through the term.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::component::{Catalog, ComponentSpec};
use crate::types::{Atom, AtomSet, CombinatorType};

pub const DEFAULT_EXPANSION_CAP: u64 = 1_000_000;

/// How a combinator maps back onto the catalog.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Binding {
    pub component: String,
    /// Provided connection point realised by the combinator's result.
    pub provided: String,
    /// Required connection point for each argument slot.
    pub slots: Vec<String>,
    /// Static combinator id this entry was expanded from (itself if static).
    pub origin: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Repository {
    entries: BTreeMap<String, CombinatorType>,
    bindings: BTreeMap<String, Binding>,
}

impl Repository {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, id: impl Into<String>, ty: CombinatorType, binding: Option<Binding>) {
        let id = id.into();
        if let Some(b) = binding {
            self.bindings.insert(id.clone(), b);
        }
        self.entries.insert(id, ty);
    }

    pub fn get(&self, id: &str) -> Option<&CombinatorType> {
        self.entries.get(id)
    }

    pub fn binding(&self, id: &str) -> Option<&Binding> {
        self.bindings.get(id)
    }

    /// Entries in combinator-id order.
    pub fn iter(&self) -> impl Iterator<Item = (&String, &CombinatorType)> {
        self.entries.iter()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Static id for `id`; identity for ids without a binding.
    pub fn origin_of<'a>(&'a self, id: &'a str) -> &'a str {
        self.bindings.get(id).map_or(id, |b| b.origin.as_str())
    }

    /// One `id : type` line per combinator.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for (id, ty) in &self.entries {
            let _ = writeln!(out, "{id} : {ty}");
        }
        out
    }
}

/// One static entry per provided connection point of `component`.
pub fn static_types(component: &ComponentSpec) -> Vec<(String, CombinatorType, Binding)> {
    component
        .connection_points
        .iter()
        .filter_map(|p| p.provided.as_ref().map(|prov| (p, prov)))
        .map(|(p, prov)| {
            let others: Vec<_> = component
                .connection_points
                .iter()
                .filter(|cp| cp.id != p.id)
                .filter_map(|cp| cp.required.as_ref().map(|r| (cp.id.clone(), r.clone())))
                .collect();
            let id = format!("{}.{}", component.id, p.id);
            let ty =
                CombinatorType::new(others.iter().map(|(_, r)| r.clone()).collect(), prov.union(&component.inherent));
            let binding = Binding {
                component: component.id.clone(),
                provided: p.id.clone(),
                slots: others.into_iter().map(|(id, _)| id).collect(),
                origin: id.clone(),
            };
            (id, ty, binding)
        })
        .collect()
}

pub fn static_repository(catalog: &Catalog) -> Repository {
    let mut repo = Repository::new();
    for c in catalog.components() {
        for (id, ty, b) in static_types(c) {
            repo.insert(id, ty, Some(b));
        }
    }
    repo
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AggregateOp {
    Eq,
    Le,
}

/// A discrete metadata sum constraint enforced inside the type system.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Aggregate {
    pub key: String,
    pub op: AggregateOp,
    pub target: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FilterOp {
    Le,
    Ge,
    Eq,
}

/// Post-hoc constraint on a BOM total (e.g. a cost budget).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Filter {
    pub key: String,
    pub op: FilterOp,
    pub value: u64,
}

impl Filter {
    pub fn accepts(&self, total: u64) -> bool {
        match self.op {
            FilterOp::Le => total <= self.value,
            FilterOp::Ge => total >= self.value,
            FilterOp::Eq => total == self.value,
        }
    }
}

fn default_max_size() -> usize {
    16
}

fn default_max_results() -> usize {
    256
}

/// A synthesis request as submitted by the CLI or the service.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Request {
    pub goal: AtomSet,
    #[serde(default)]
    pub aggregates: Vec<Aggregate>,
    #[serde(default = "default_max_size")]
    pub max_size: usize,
    #[serde(default = "default_max_results")]
    pub max_results: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub filters: Vec<Filter>,
}

impl Request {
    pub fn new(goal: AtomSet) -> Self {
        Request {
            goal,
            aggregates: Vec::new(),
            max_size: default_max_size(),
            max_results: default_max_results(),
            filters: Vec::new(),
        }
    }

    pub fn with_aggregate(mut self, key: impl Into<String>, op: AggregateOp, target: u64) -> Self {
        self.aggregates.push(Aggregate { key: key.into(), op, target });
        self
    }

    pub fn bounded(mut self, max_size: usize, max_results: usize) -> Self {
        self.max_size = max_size;
        self.max_results = max_results;
        self
    }

    /// Checks the request against the catalog's taxonomy.
    pub fn validate(&self, catalog: &Catalog) -> Result<(), RequestError> {
        if let Some(a) = self.goal.unknown_atoms(catalog.taxonomy()).next() {
            return Err(RequestError::UnknownAtom(a.name.clone()));
        }
        if self.max_size == 0 {
            return Err(RequestError::ZeroBound);
        }
        let mut keys = BTreeSet::new();
        for agg in &self.aggregates {
            if !crate::taxonomy::valid_atom_name(&agg.key) {
                return Err(RequestError::InvalidKey(agg.key.clone()));
            }
            if !keys.insert(agg.key.as_str()) {
                return Err(RequestError::DuplicateAggregate(agg.key.clone()));
            }
        }
        Ok(())
    }

    /// Aggregates sorted by key.
    fn sorted_aggregates(&self) -> Vec<&Aggregate> {
        let mut aggs: Vec<&Aggregate> = self.aggregates.iter().collect();
        aggs.sort_by(|a, b| a.key.cmp(&b.key));
        aggs
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RequestError {
    #[error("unknown atom `{0}` in goal")]
    UnknownAtom(String),
    #[error("max_size must be at least 1")]
    ZeroBound,
    #[error("aggregate key `{0}` appears more than once")]
    DuplicateAggregate(String),
    #[error("invalid aggregate key `{0}`")]
    InvalidKey(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RepoGenError {
    #[error("dynamic expansion would create {size} entries, above the cap of {cap}")]
    ExpansionTooLarge { size: u128, cap: u64 },
    #[error("combinator `{0}` has no catalog binding")]
    MissingBinding(String),
}

/// Solver start symbols for `request`. `le` aggregates contribute one
/// alternative per admissible value; the family is the cartesian product
/// over all `le` aggregates in key order.
pub fn translate_request(request: &Request) -> Vec<AtomSet> {
    let mut targets = vec![request.goal.clone()];
    for agg in request.sorted_aggregates() {
        targets = match agg.op {
            AggregateOp::Eq => targets.into_iter().map(|t| t.with(Atom::property(&agg.key, agg.target))).collect(),
            AggregateOp::Le => targets
                .into_iter()
                .flat_map(|t| (0..=agg.target).map(move |v| t.clone().with(Atom::property(&agg.key, v))))
                .collect(),
        };
    }
    targets
}

fn binomial(n: u128, k: u128) -> u128 {
    let k = k.min(n.saturating_sub(k));
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.saturating_mul(n - i) / (i + 1);
    }
    acc
}

/// Number of dynamic entries [`dynamic_expand`] would create.
pub fn expansion_size(static_repo: &Repository, request: &Request, catalog: &Catalog) -> u128 {
    if request.aggregates.is_empty() {
        return static_repo.len() as u128;
    }
    static_repo
        .iter()
        .map(|(id, ty)| {
            let local = |key: &str| local_value(static_repo, catalog, id, key);
            request
                .aggregates
                .iter()
                .map(|agg| {
                    let l = local(&agg.key);
                    if l > agg.target {
                        0
                    } else {
                        // tuples in {0..}^k with sum <= target - local
                        let slack = (agg.target - l) as u128;
                        let k = ty.arity() as u128;
                        binomial(slack + k, k)
                    }
                })
                .fold(1u128, u128::saturating_mul)
        })
        .fold(0u128, u128::saturating_add)
}

fn local_value(repo: &Repository, catalog: &Catalog, id: &str, key: &str) -> u64 {
    repo.binding(id).and_then(|b| catalog.component(&b.component)).map_or(0, |c| c.meta(key))
}

pub fn dynamic_expand(
    static_repo: &Repository,
    request: &Request,
    catalog: &Catalog,
) -> Result<Repository, RepoGenError> {
    dynamic_expand_capped(static_repo, request, catalog, DEFAULT_EXPANSION_CAP)
}

pub fn dynamic_expand_capped(
    static_repo: &Repository,
    request: &Request,
    catalog: &Catalog,
    cap: u64,
) -> Result<Repository, RepoGenError> {
    if request.aggregates.is_empty() {
        return Ok(static_repo.clone());
    }
    let size = expansion_size(static_repo, request, catalog);
    if size > cap as u128 {
        return Err(RepoGenError::ExpansionTooLarge { size, cap });
    }
    let aggs = request.sorted_aggregates();
    let mut out = Repository::new();
    for (id, ty) in static_repo.iter() {
        let binding = static_repo.binding(id).ok_or_else(|| RepoGenError::MissingBinding(id.clone()))?;
        // per aggregate: (key, local, admissible argument value tuples)
        let per_agg: Vec<(&str, u64, Vec<Vec<u64>>)> = aggs
            .iter()
            .map(|agg| {
                let local = local_value(static_repo, catalog, id, &agg.key);
                let tuples =
                    if local > agg.target { Vec::new() } else { bounded_tuples(ty.arity(), agg.target - local) };
                (agg.key.as_str(), local, tuples)
            })
            .collect();
        let lens: Vec<usize> = per_agg.iter().map(|(_, _, t)| t.len()).collect();
        for choice in index_product(&lens) {
            let mut args = ty.args.clone();
            let mut result = ty.result.clone();
            let mut tag = String::new();
            for ((key, local, tuples), c) in per_agg.iter().zip(choice) {
                let values = &tuples[c];
                for (arg, &v) in args.iter_mut().zip(values) {
                    arg.insert(Atom::property(*key, v));
                }
                result.insert(Atom::property(*key, values.iter().sum::<u64>() + local));
                if !values.is_empty() {
                    let vs: Vec<String> = values.iter().map(u64::to_string).collect();
                    let _ = write!(tag, "#{key}={}", vs.join("/"));
                }
            }
            out.insert(
                format!("{id}{tag}"),
                CombinatorType::new(args, result),
                Some(Binding { origin: id.clone(), ..binding.clone() }),
            );
        }
    }
    Ok(out)
}

/// Every index vector `v` with `v[i] < lens[i]`, last position fastest.
fn index_product(lens: &[usize]) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::with_capacity(lens.len())];
    for &len in lens {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                (0..len).map(move |i| {
                    let mut v = prefix.clone();
                    v.push(i);
                    v
                })
            })
            .collect();
    }
    out
}

/// All `k`-tuples of non-negative integers with sum `<= budget`, in
/// lexicographic order.
fn bounded_tuples(k: usize, budget: u64) -> Vec<Vec<u64>> {
    fn go(k: usize, budget: u64, prefix: &mut Vec<u64>, out: &mut Vec<Vec<u64>>) {
        if prefix.len() == k {
            out.push(prefix.clone());
            return;
        }
        for v in 0..=budget {
            prefix.push(v);
            go(k, budget - v, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    go(k, budget, &mut Vec::with_capacity(k), &mut out);
    out
}
