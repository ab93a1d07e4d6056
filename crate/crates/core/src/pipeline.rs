//! Request to results: translate, expand, build grammar, count, enumerate,
//! then interpret and filter each term.

use std::ops::ControlFlow;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::component::{to_canonical_json, Catalog};
use crate::inhabitation::{build_grammar, count, for_each_term, Count, TreeGrammar};
use crate::interpretation::{bom, interpret, AssemblyProgram, Bom, InterpretError, ProgramError};
use crate::repo_gen::{
    dynamic_expand_capped, expansion_size, static_repository, translate_request, RepoGenError, Repository, Request,
    RequestError,
};
use crate::types::Term;

/// Default ceiling on dynamic repository entries.
pub const DEFAULT_EXPANSION_CAP: u64 = 1_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SolveError {
    #[error(transparent)]
    Request(#[from] RequestError),
    #[error(transparent)]
    Expansion(#[from] RepoGenError),
    #[error(transparent)]
    Interpret(#[from] InterpretError),
    #[error(transparent)]
    Program(#[from] ProgramError),
}

/// One solution. `term` uses static combinator ids.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResultRow {
    pub term: Term,
    /// The term with component ids only, e.g. `base(cube(cap))`.
    pub display: String,
    pub size: usize,
    pub bom: Bom,
}

/// The deterministic output of a solve; serialised as `results.json`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResultsDocument {
    pub request: Request,
    pub count: Count,
    /// More accepted terms exist within `max_size` than were returned.
    pub truncated: bool,
    pub results: Vec<ResultRow>,
}

impl ResultsDocument {
    pub fn to_json(&self) -> String {
        to_canonical_json(self)
    }
}

#[derive(Debug, Clone)]
pub struct SolveOutcome {
    pub document: ResultsDocument,
    pub repository: Repository,
    pub grammar: TreeGrammar,
    pub elapsed: Duration,
}

/// Validates `request` and reports the dynamic repository size, without
/// expanding it.
pub fn check_request(catalog: &Catalog, request: &Request, cap: u64) -> Result<u128, SolveError> {
    request.validate(catalog)?;
    let size = expansion_size(&static_repository(catalog), request, catalog);
    if size > u128::from(cap) {
        return Err(RepoGenError::ExpansionTooLarge { size, cap }.into());
    }
    Ok(size)
}

pub fn solve(catalog: &Catalog, request: &Request) -> Result<SolveOutcome, SolveError> {
    solve_with(catalog, request, DEFAULT_EXPANSION_CAP, |_| {})
}

/// Runs the full pipeline, handing each accepted row to `on_row` as soon as
/// it is produced.
pub fn solve_with(
    catalog: &Catalog,
    request: &Request,
    cap: u64,
    mut on_row: impl FnMut(&ResultRow),
) -> Result<SolveOutcome, SolveError> {
    let started = Instant::now();
    request.validate(catalog)?;
    let static_repo = static_repository(catalog);
    let repo = dynamic_expand_capped(&static_repo, request, catalog, cap)?;
    let targets = translate_request(request);
    let grammar = build_grammar(&repo, catalog.taxonomy(), &targets);
    let total = count(&grammar);

    let mut rows = Vec::new();
    let mut truncated = false;
    let mut failure = None;
    if request.max_results > 0 {
        for_each_term(&grammar, request.max_size, |term| {
            let row = match make_row(&term, &repo, catalog) {
                Ok(row) => row,
                Err(e) => {
                    failure = Some(e);
                    return ControlFlow::Break(());
                }
            };
            if !request.filters.iter().all(|f| f.accepts(row.bom.total(&f.key))) {
                return ControlFlow::Continue(());
            }
            if rows.len() == request.max_results {
                truncated = true;
                return ControlFlow::Break(());
            }
            on_row(&row);
            rows.push(row);
            ControlFlow::Continue(())
        });
    }
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(SolveOutcome {
        document: ResultsDocument { request: request.clone(), count: total, truncated, results: rows },
        repository: repo,
        grammar,
        elapsed: started.elapsed(),
    })
}

fn make_row(term: &Term, repo: &Repository, catalog: &Catalog) -> Result<ResultRow, SolveError> {
    let program = interpret(term, repo, catalog)?;
    let bom = bom(&program, catalog)?;
    Ok(ResultRow {
        term: term.map_ids(&|id| repo.origin_of(id).to_string()),
        display: term.map_ids(&|id| repo.binding(id).map_or(id, |b| b.component.as_str()).to_string()).to_string(),
        size: term.size(),
        bom,
    })
}

/// The assembly program of a stored row.
pub fn program_for(row: &ResultRow, catalog: &Catalog) -> Result<AssemblyProgram, InterpretError> {
    interpret(&row.term, &static_repository(catalog), catalog)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::component::load_catalog;
    use crate::repo_gen::{AggregateOp, Filter, FilterOp};
    use crate::types::AtomSet;

    fn tower() -> Catalog {
        load_catalog(&[concat!(env!("CARGO_MANIFEST_DIR"), "/../../fixtures/tower")]).unwrap()
    }

    fn goal() -> AtomSet {
        AtomSet::of(["tower"])
    }

    #[test]
    fn cubes3_single_result() {
        let req = Request::new(goal()).with_aggregate("cubes", AggregateOp::Eq, 3).bounded(10, 256);
        let out = solve(&tower(), &req).unwrap();
        let doc = &out.document;
        assert_eq!(doc.count, Count::Finite(1));
        assert!(!doc.truncated);
        assert_eq!(doc.results.len(), 1);
        let row = &doc.results[0];
        assert_eq!(row.display, "base(cube(cube(cube(cap))))");
        assert_eq!(row.term.to_string(), "base.ground(cube.bottom(cube.bottom(cube.bottom(cap.bottom))))");
        assert_eq!(row.bom.total("cubes"), 3);
        assert_eq!(row.bom.lines["cube"], 3);
        assert_eq!(out.grammar.nonterminals().len(), 5);
    }

    #[test]
    fn unconstrained_is_infinite_and_bounded() {
        let out = solve(&tower(), &Request::new(goal()).bounded(3, 256)).unwrap();
        assert_eq!(out.document.count, Count::Infinite);
        let shown: Vec<&str> = out.document.results.iter().map(|r| r.display.as_str()).collect();
        assert_eq!(shown, ["base(cap)", "base(cube(cap))"]);
        assert!(!out.document.truncated);
        let one = solve(&tower(), &Request::new(goal()).bounded(3, 1)).unwrap();
        assert!(one.document.truncated);
    }

    #[test]
    fn filters_apply_to_bom_totals() {
        let mut req = Request::new(goal()).bounded(6, 256);
        req.filters.push(Filter { key: "cost".into(), op: FilterOp::Le, value: 820 });
        let out = solve(&tower(), &req).unwrap();
        let costs: Vec<u64> = out.document.results.iter().map(|r| r.bom.total("cost")).collect();
        assert_eq!(costs, [580, 700, 820]);
    }

    #[test]
    fn expansion_cap_is_checked_before_expanding() {
        let req = Request::new(goal()).with_aggregate("cubes", AggregateOp::Eq, 3);
        assert!(matches!(
            check_request(&tower(), &req, 2),
            Err(SolveError::Expansion(RepoGenError::ExpansionTooLarge { cap: 2, .. }))
        ));
        assert!(check_request(&tower(), &req, 100).is_ok());
    }

    #[test]
    fn unknown_goal_atom_is_rejected() {
        let err = solve(&tower(), &Request::new(AtomSet::of(["spaceship"]))).unwrap_err();
        assert!(err.to_string().contains("spaceship"), "{err}");
    }
}
