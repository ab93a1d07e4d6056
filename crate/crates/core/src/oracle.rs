//! Brute-force reference inhabitant generator.
//!
//! Builds every well-typed term bottom-up by size, with its own subtype
//! check walking the taxonomy edges directly, and keeps the terms whose type
//! is below some target. Exponential; meant for small repositories and for
//! cross-checking [`crate::inhabitation`].

use std::collections::{BTreeSet, VecDeque};

use crate::repo_gen::Repository;
use crate::taxonomy::Taxonomy;
use crate::types::{Atom, AtomSet, Term};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum OracleError {
    #[error("more than {limit} well-typed terms of size <= {size}")]
    TooMany { size: usize, limit: usize },
}

/// Ceiling on the number of intermediate terms kept in memory.
pub const DEFAULT_TERM_LIMIT: usize = 2_000_000;

struct Naive<'t> {
    taxonomy: &'t Taxonomy,
}

impl Naive<'_> {
    fn atom_leq(&self, a: &Atom, b: &Atom) -> bool {
        if a.prop.is_some() || b.prop.is_some() {
            return a == b;
        }
        let mut seen = BTreeSet::new();
        let mut queue = VecDeque::from([a.name.as_str()]);
        while let Some(n) = queue.pop_front() {
            if n == b.name {
                return true;
            }
            if !seen.insert(n) {
                continue;
            }
            for (child, parent) in self.taxonomy.edges() {
                if child == n {
                    queue.push_back(parent);
                }
            }
        }
        false
    }

    fn leq(&self, lhs: &AtomSet, rhs: &AtomSet) -> bool {
        rhs.iter().all(|b| lhs.iter().any(|a| self.atom_leq(a, b)))
    }
}

/// All distinct terms of size `<= max_size` whose type is a subtype of at
/// least one target, sorted in enumeration order.
pub fn inhabitants(
    repo: &Repository,
    taxonomy: &Taxonomy,
    targets: &[AtomSet],
    max_size: usize,
    limit: usize,
) -> Result<Vec<Term>, OracleError> {
    let naive = Naive { taxonomy };
    let entries: Vec<_> = repo.iter().collect();
    // by_size[s]: (term, result type) for every well-typed term of size s
    let mut by_size: Vec<Vec<(Term, &AtomSet)>> = vec![Vec::new(); max_size + 1];
    let mut total = 0usize;
    for s in 1..=max_size {
        let mut level = Vec::new();
        for (id, ty) in &entries {
            if ty.args.len() + 1 > s {
                continue;
            }
            for sizes in compositions(s - 1, ty.args.len()) {
                let mut picks: Vec<Vec<&Term>> = Vec::with_capacity(sizes.len());
                for (arg, &sz) in ty.args.iter().zip(&sizes) {
                    picks.push(by_size[sz].iter().filter(|(_, t)| naive.leq(t, arg)).map(|(t, _)| t).collect());
                }
                for combo in product(&picks) {
                    level.push((Term::apply(id.as_str(), combo.into_iter().cloned().collect()), &ty.result));
                    total += 1;
                    if total > limit {
                        return Err(OracleError::TooMany { size: s, limit });
                    }
                }
            }
        }
        by_size[s] = level;
    }
    let mut out: Vec<Term> = by_size
        .into_iter()
        .flatten()
        .filter(|(_, ty)| targets.iter().any(|t| naive.leq(ty, t)))
        .map(|(t, _)| t)
        .collect();
    out.sort();
    out.dedup();
    Ok(out)
}

/// Ordered `k`-tuples of positive integers summing to `n`.
fn compositions(n: usize, k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return if n == 0 { vec![Vec::new()] } else { Vec::new() };
    }
    let mut out = Vec::new();
    for first in 1..=n.saturating_sub(k - 1) {
        for mut rest in compositions(n - first, k - 1) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

fn product<'a, T>(lists: &[Vec<&'a T>]) -> Vec<Vec<&'a T>> {
    let mut out: Vec<Vec<&T>> = vec![Vec::new()];
    for list in lists {
        out = out
            .iter()
            .flat_map(|prefix| {
                list.iter().map(move |x| {
                    let mut p = prefix.clone();
                    p.push(*x);
                    p
                })
            })
            .collect();
    }
    out
}
