//! Randomised end-to-end checks of the solver against the brute-force
//! oracle, plus the value-level invariants every solution must satisfy.

use std::collections::BTreeSet;

use nalgebra::{Rotation3, Vector3};
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::component::{Catalog, ComponentSpec, ConnectionPoint, Frame, JointKind};
use crate::inhabitation::{build_grammar, count, enumerate, max_term_size, Count};
use crate::interpretation::{bom, interpret};
use crate::oracle::{inhabitants, OracleError};
use crate::repo_gen::{dynamic_expand, static_repository, translate_request, AggregateOp, Request};
use crate::taxonomy::Taxonomy;
use crate::types::{typecheck, Atom, AtomSet, Term};

/// A generated catalog with a request against it.
#[derive(Debug, Clone)]
pub struct Case {
    pub seed: u64,
    pub catalog: Catalog,
    pub request: Request,
}

/// Metadata key used by generated aggregates.
pub const AGGREGATE_KEY: &str = "k";

fn random_frame(rng: &mut ChaCha8Rng) -> Frame {
    let axis = Vector3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
    let axis = if axis.norm() < 1e-3 { Vector3::z() } else { axis };
    let r = Rotation3::from_axis_angle(&nalgebra::Unit::new_normalize(axis), rng.random_range(-3.1..3.1));
    let m = r.matrix();
    Frame {
        origin: [0, 1, 2].map(|_| f64::from(rng.random_range(-50i32..=50))),
        rotation: [0, 1, 2].map(|i| [m[(i, 0)], m[(i, 1)], m[(i, 2)]]),
    }
}

fn random_set(rng: &mut ChaCha8Rng, atoms: &[String], max: usize) -> AtomSet {
    let n = rng.random_range(1..=max.min(atoms.len()));
    atoms.choose_multiple(rng, n).map(|a| Atom::plain(a.as_str())).collect()
}

/// Up to 10 taxonomy nodes in a random DAG, up to 6 components with up to
/// 2 connection points each, and a goal with an optional aggregate.
pub fn random_case(seed: u64, max_size: usize) -> Case {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(1..=10);
    let atoms: Vec<String> = (0..n).map(|i| format!("t{i}")).collect();
    let mut edges = Vec::new();
    // edges only point to lower indices, so the graph is acyclic
    for child in 1..n {
        for parent in 0..child {
            if rng.random_bool(0.2) {
                edges.push((atoms[child].clone(), atoms[parent].clone()));
            }
        }
    }
    let taxonomy = Taxonomy::new("random", atoms.clone(), edges).expect("generated taxonomy is a DAG");

    let mut components = Vec::new();
    for c in 0..rng.random_range(1..=6) {
        let mut points = Vec::new();
        for p in 0..rng.random_range(1..=2) {
            let (required, provided) = match rng.random_range(0..4) {
                0 => (Some(random_set(&mut rng, &atoms, 2)), None),
                1 => (Some(random_set(&mut rng, &atoms, 2)), Some(random_set(&mut rng, &atoms, 2))),
                _ => (None, Some(random_set(&mut rng, &atoms, 2))),
            };
            points.push(ConnectionPoint {
                id: format!("p{p}"),
                joint: if rng.random_bool(0.3) { JointKind::Revolute } else { JointKind::Rigid },
                frame: random_frame(&mut rng),
                required,
                provided,
            });
        }
        let inherent = if rng.random_bool(0.3) { random_set(&mut rng, &atoms, 1) } else { AtomSet::omega() };
        components.push(ComponentSpec {
            id: format!("c{c}"),
            inherent,
            metadata: [
                (AGGREGATE_KEY.to_string(), rng.random_range(0..=2)),
                ("cost".into(), rng.random_range(0..=100)),
            ]
            .into_iter()
            .collect(),
            geometry_ref: None,
            connection_points: points,
        });
    }
    let catalog = Catalog::new(vec![taxonomy], components).expect("generated catalog is consistent");

    let goal: AtomSet = std::iter::once(Atom::plain(atoms.choose(&mut rng).expect("non-empty").as_str())).collect();
    let mut request = Request::new(goal).bounded(max_size, usize::MAX);
    match rng.random_range(0..4) {
        0 => {}
        1 | 2 => request = request.with_aggregate(AGGREGATE_KEY, AggregateOp::Eq, rng.random_range(0..=3)),
        _ => request = request.with_aggregate(AGGREGATE_KEY, AggregateOp::Le, rng.random_range(0..=3)),
    }
    Case { seed, catalog, request }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Violation {
    #[error("seed {seed}: solver and oracle differ (solver only {solver_only:?}, oracle only {oracle_only:?})")]
    OracleMismatch { seed: u64, solver_only: Vec<String>, oracle_only: Vec<String> },
    #[error("seed {seed}: solver output is not in enumeration order or has duplicates")]
    Order { seed: u64 },
    #[error("seed {seed}: `{term}` fails typechecking: {message}")]
    IllTyped { seed: u64, term: String, message: String },
    #[error("seed {seed}: `{term}` is not below any target")]
    OffTarget { seed: u64, term: String },
    #[error("seed {seed}: `{term}` totals {key}={actual}, aggregate demands {op:?} {target}")]
    Aggregate { seed: u64, term: String, key: String, op: AggregateOp, target: u64, actual: u64 },
    #[error("seed {seed}: count {count} but {enumerated} terms enumerated")]
    Count { seed: u64, count: Count, enumerated: usize },
    #[error("seed {seed}: {message}")]
    Pipeline { seed: u64, message: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CaseReport {
    pub terms: Vec<Term>,
    pub count: Count,
    pub repository_size: usize,
}

/// Solves `case` with the grammar solver and the oracle and checks every
/// invariant on the result.
pub fn check_case(case: &Case, oracle_limit: usize) -> Result<CaseReport, Violation> {
    let seed = case.seed;
    let catalog = &case.catalog;
    let request = &case.request;
    let taxonomy = catalog.taxonomy();
    let pipeline = |e: &dyn std::fmt::Display| Violation::Pipeline { seed, message: e.to_string() };

    let repo = dynamic_expand(&static_repository(catalog), request, catalog).map_err(|e| pipeline(&e))?;
    let targets = translate_request(request);
    let grammar = build_grammar(&repo, taxonomy, &targets);
    let total = count(&grammar);
    let terms = enumerate(&grammar, request.max_size, request.max_results);

    let mut sorted = terms.clone();
    sorted.sort();
    sorted.dedup();
    if sorted != terms {
        return Err(Violation::Order { seed });
    }

    let oracle = inhabitants(&repo, taxonomy, &targets, request.max_size, oracle_limit)
        .map_err(|e: OracleError| pipeline(&e))?;
    if oracle != terms {
        let a: BTreeSet<String> = terms.iter().map(Term::to_string).collect();
        let b: BTreeSet<String> = oracle.iter().map(Term::to_string).collect();
        return Err(Violation::OracleMismatch {
            seed,
            solver_only: a.difference(&b).cloned().collect(),
            oracle_only: b.difference(&a).cloned().collect(),
        });
    }

    for t in &terms {
        let ty = typecheck(&repo, taxonomy, t).map_err(|e| Violation::IllTyped {
            seed,
            term: t.to_string(),
            message: e.to_string(),
        })?;
        if !targets.iter().any(|target| ty.leq(target, taxonomy)) {
            return Err(Violation::OffTarget { seed, term: t.to_string() });
        }
        let program = interpret(t, &repo, catalog).map_err(|e| pipeline(&e))?;
        let b = bom(&program, catalog).map_err(|e| pipeline(&e))?;
        for agg in &request.aggregates {
            let actual = b.total(&agg.key);
            let ok = match agg.op {
                AggregateOp::Eq => actual == agg.target,
                AggregateOp::Le => actual <= agg.target,
            };
            if !ok {
                return Err(Violation::Aggregate {
                    seed,
                    term: t.to_string(),
                    key: agg.key.clone(),
                    op: agg.op,
                    target: agg.target,
                    actual,
                });
            }
        }
    }

    if let Count::Finite(n) = total {
        let fits = max_term_size(&grammar).is_none_or(|m| m <= request.max_size);
        // `le` families can reach one term from several starts; counts sum
        // per start while enumeration is distinct, so compare only for one start
        let single_start = grammar.start().len() == 1;
        if fits && single_start && n <= request.max_results as u64 && n != terms.len() as u64 {
            return Err(Violation::Count { seed, count: total, enumerated: terms.len() });
        }
    }

    Ok(CaseReport { terms, count: total, repository_size: repo.len() })
}

/// A catalog with one two-point segment component and a nullary tip, plus
/// the chain term with `nodes` nodes. Frames are random proper rotations.
pub fn chain_case(seed: u64, nodes: usize) -> (Catalog, Term) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let atoms = ["link".to_string()];
    let taxonomy = Taxonomy::new("chain", atoms, []).expect("single node");
    let link = || Some(AtomSet::of(["link"]));
    let segment = ComponentSpec {
        id: "seg".into(),
        inherent: AtomSet::omega(),
        metadata: Default::default(),
        geometry_ref: None,
        connection_points: vec![
            ConnectionPoint {
                id: "in".into(),
                joint: JointKind::Rigid,
                frame: random_frame(&mut rng),
                required: None,
                provided: link(),
            },
            ConnectionPoint {
                id: "out".into(),
                joint: JointKind::Revolute,
                frame: random_frame(&mut rng),
                required: link(),
                provided: None,
            },
        ],
    };
    let tip = ComponentSpec {
        id: "tip".into(),
        inherent: AtomSet::omega(),
        metadata: Default::default(),
        geometry_ref: None,
        connection_points: vec![ConnectionPoint {
            id: "in".into(),
            joint: JointKind::Rigid,
            frame: random_frame(&mut rng),
            required: None,
            provided: link(),
        }],
    };
    let catalog = Catalog::new(vec![taxonomy], [segment, tip]).expect("chain catalog is consistent");
    let mut term = Term::leaf("tip.in");
    for _ in 1..nodes {
        term = Term::apply("seg.in", vec![term]);
    }
    (catalog, term)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generated_cases_are_deterministic_and_valid() {
        let a = random_case(7, 5);
        let b = random_case(7, 5);
        assert_eq!(a.catalog, b.catalog);
        assert_eq!(a.request, b.request);
        for c in a.catalog.components() {
            for p in &c.connection_points {
                p.frame.check().unwrap();
            }
        }
        a.request.validate(&a.catalog).unwrap();
    }

    #[test]
    fn a_few_cases_pass() {
        for seed in 0..20 {
            check_case(&random_case(seed, 5), 1_000_000).unwrap();
        }
    }

    #[test]
    fn chain_has_requested_size() {
        let (catalog, term) = chain_case(1, 50);
        assert_eq!(term.size(), 50);
        let repo = static_repository(&catalog);
        typecheck(&repo, catalog.taxonomy(), &term).unwrap();
    }
}
