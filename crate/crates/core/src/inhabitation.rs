//! Inhabitation `Γ ⊢ ? : τ` via tree grammars.
//!
//! Nonterminals are atom sets taken verbatim from the targets and from
//! argument positions in the repository; a rule `T → c(σ₁, …, σₖ)` exists
//! whenever `c : σ₁ → … → σₖ → ρ` with `ρ ≤ T`. The grammar is finite because
//! nonterminals come from a finite pool. After pruning, every remaining
//! nonterminal derives at least one finite term.
//!
//! Enumeration is ordered by term size, then lexicographically by the
//! pre-order sequence of combinator ids. Terms are generated lazily in that
//! order using per-size count tables, so producing the first `n` results
//! never materialises the rest of a size level (except when merging several
//! start symbols).

use std::collections::HashMap;
use std::fmt::{self, Write as _};
use std::ops::ControlFlow;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::repo_gen::Repository;
use crate::taxonomy::Taxonomy;
use crate::types::{Atom, AtomSet, Term};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rule {
    pub combinator: String,
    /// Indices into the grammar's nonterminals.
    pub args: Vec<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TreeGrammar {
    nonterminals: Vec<AtomSet>,
    rules: Vec<Vec<Rule>>,
    start: Vec<usize>,
}

impl TreeGrammar {
    pub fn nonterminals(&self) -> &[AtomSet] {
        &self.nonterminals
    }

    pub fn rules(&self, nt: usize) -> &[Rule] {
        &self.rules[nt]
    }

    pub fn start(&self) -> &[usize] {
        &self.start
    }

    pub fn rule_count(&self) -> usize {
        self.rules.iter().map(Vec::len).sum()
    }

    pub fn index_of(&self, set: &AtomSet) -> Option<usize> {
        self.nonterminals.iter().position(|n| n == set)
    }

    pub fn is_empty(&self) -> bool {
        self.rule_count() == 0
    }

    /// One rule per line: `{lhs} -> c({arg}, …)`.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for (nt, rules) in self.rules.iter().enumerate() {
            for r in rules {
                let args: Vec<String> = r.args.iter().map(|a| format!("{{{}}}", self.nonterminals[*a])).collect();
                if args.is_empty() {
                    let _ = writeln!(out, "{{{}}} -> {}", self.nonterminals[nt], r.combinator);
                } else {
                    let _ = writeln!(out, "{{{}}} -> {}({})", self.nonterminals[nt], r.combinator, args.join(", "));
                }
            }
        }
        out
    }
}

/// Builds and prunes the grammar for `targets`, which act as alternative
/// start symbols.
pub fn build_grammar(repo: &Repository, taxonomy: &Taxonomy, targets: &[AtomSet]) -> TreeGrammar {
    let entries: Vec<_> = repo.iter().collect();
    // Candidate entries for a target that carries property atoms must carry
    // all of them in their result.
    let mut by_prop: HashMap<&Atom, Vec<usize>> = HashMap::new();
    for (i, (_, ty)) in entries.iter().enumerate() {
        for a in ty.result.iter().filter(|a| a.is_property()) {
            by_prop.entry(a).or_default().push(i);
        }
    }
    let all: Vec<usize> = (0..entries.len()).collect();

    let mut nts: Vec<AtomSet> = Vec::new();
    let mut index: HashMap<AtomSet, usize> = HashMap::new();
    let mut intern = |set: &AtomSet, nts: &mut Vec<AtomSet>| -> usize {
        if let Some(&i) = index.get(set) {
            return i;
        }
        nts.push(set.clone());
        index.insert(set.clone(), nts.len() - 1);
        nts.len() - 1
    };

    let mut start = Vec::new();
    for t in targets {
        let i = intern(t, &mut nts);
        if !start.contains(&i) {
            start.push(i);
        }
    }

    let mut rules: Vec<Vec<Rule>> = Vec::new();
    let mut next = 0;
    while next < nts.len() {
        let target = nts[next].clone();
        let props: Vec<&Atom> = target.iter().filter(|a| a.is_property()).collect();
        let candidates: &[usize] = if props.is_empty() {
            &all
        } else {
            props.iter().map(|p| by_prop.get(p).map_or(&[][..], Vec::as_slice)).min_by_key(|l| l.len()).unwrap_or(&[])
        };
        let mut found = Vec::new();
        for &e in candidates {
            let (id, ty) = entries[e];
            if ty.result.leq(&target, taxonomy) {
                let args = ty.args.iter().map(|a| intern(a, &mut nts)).collect();
                found.push(Rule { combinator: id.clone(), args });
            }
        }
        rules.push(found);
        next += 1;
    }
    prune(nts, rules, start)
}

fn prune(nts: Vec<AtomSet>, rules: Vec<Vec<Rule>>, start: Vec<usize>) -> TreeGrammar {
    let n = nts.len();
    let mut productive = vec![false; n];
    loop {
        let mut changed = false;
        for nt in 0..n {
            if !productive[nt] && rules[nt].iter().any(|r| r.args.iter().all(|&a| productive[a])) {
                productive[nt] = true;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    let kept: Vec<Vec<&Rule>> =
        rules.iter().map(|rs| rs.iter().filter(|r| r.args.iter().all(|&a| productive[a])).collect()).collect();

    // keep start symbols plus everything reachable through kept rules
    let mut remap: Vec<Option<usize>> = vec![None; n];
    let mut order = Vec::new();
    let mut stack: Vec<usize> = start.iter().rev().copied().collect();
    for &s in &start {
        if remap[s].is_none() {
            remap[s] = Some(order.len());
            order.push(s);
        }
    }
    while let Some(nt) = stack.pop() {
        for r in &kept[nt] {
            for &a in &r.args {
                if remap[a].is_none() {
                    remap[a] = Some(order.len());
                    order.push(a);
                    stack.push(a);
                }
            }
        }
    }
    TreeGrammar {
        nonterminals: order.iter().map(|&o| nts[o].clone()).collect(),
        rules: order
            .iter()
            .map(|&o| {
                kept[o]
                    .iter()
                    .map(|r| Rule {
                        combinator: r.combinator.clone(),
                        args: r.args.iter().map(|&a| remap[a].expect("reachable")).collect(),
                    })
                    .collect()
            })
            .collect(),
        start: start.iter().map(|&s| remap[s].expect("start kept")).collect(),
    }
}

/// Number of terms a grammar derives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum Count {
    Finite(u64),
    /// The exact count exceeds the value (saturated at `u64::MAX`).
    AtLeast(u64),
    Infinite,
}

impl fmt::Display for Count {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Count::Finite(n) => write!(f, "{n}"),
            Count::AtLeast(n) => write!(f, "at least {n}"),
            Count::Infinite => f.write_str("infinite"),
        }
    }
}

fn has_cycle(g: &TreeGrammar) -> bool {
    // 0 = unvisited, 1 = on stack, 2 = done
    fn visit(g: &TreeGrammar, nt: usize, mark: &mut [u8]) -> bool {
        match mark[nt] {
            1 => return true,
            2 => return false,
            _ => {}
        }
        mark[nt] = 1;
        for r in &g.rules[nt] {
            for &a in &r.args {
                if visit(g, a, mark) {
                    return true;
                }
            }
        }
        mark[nt] = 2;
        false
    }
    let mut mark = vec![0u8; g.nonterminals.len()];
    g.start.iter().any(|&s| visit(g, s, &mut mark))
}

/// Counts the terms of a pruned grammar, summed over distinct start symbols.
pub fn count(g: &TreeGrammar) -> Count {
    if has_cycle(g) {
        return Count::Infinite;
    }
    fn go(g: &TreeGrammar, nt: usize, memo: &mut [Option<(u64, bool)>]) -> (u64, bool) {
        if let Some(v) = memo[nt] {
            return v;
        }
        let mut total = 0u64;
        let mut overflow = false;
        for r in &g.rules[nt] {
            let mut prod = 1u64;
            for &a in &r.args {
                let (c, o) = go(g, a, memo);
                overflow |= o;
                prod = prod.checked_mul(c).unwrap_or_else(|| {
                    overflow = true;
                    u64::MAX
                });
            }
            total = total.checked_add(prod).unwrap_or_else(|| {
                overflow = true;
                u64::MAX
            });
        }
        memo[nt] = Some((total, overflow));
        (total, overflow)
    }
    let mut memo = vec![None; g.nonterminals.len()];
    let mut total = 0u64;
    let mut overflow = false;
    for &s in &g.start {
        let (c, o) = go(g, s, &mut memo);
        overflow |= o;
        total = total.checked_add(c).unwrap_or_else(|| {
            overflow = true;
            u64::MAX
        });
    }
    if overflow {
        Count::AtLeast(u64::MAX)
    } else {
        Count::Finite(total)
    }
}

/// Size of the largest derivable term, `None` when the language is infinite
/// or empty.
pub fn max_term_size(g: &TreeGrammar) -> Option<usize> {
    if has_cycle(g) {
        return None;
    }
    fn go(g: &TreeGrammar, nt: usize, memo: &mut [Option<Option<usize>>]) -> Option<usize> {
        if let Some(v) = memo[nt] {
            return v;
        }
        let best = g.rules[nt]
            .iter()
            .filter_map(|r| r.args.iter().try_fold(1usize, |acc, &a| go(g, a, memo).map(|m| acc.saturating_add(m))))
            .max();
        memo[nt] = Some(best);
        best
    }
    let mut memo = vec![None; g.nonterminals.len()];
    g.start.iter().filter_map(|&s| go(g, s, &mut memo)).max()
}

/// Set of term sizes `0..len` as a bitset.
#[derive(Debug, Clone, PartialEq, Eq)]
struct SizeSet {
    words: Vec<u64>,
}

impl SizeSet {
    fn empty(len: usize) -> Self {
        SizeSet { words: vec![0; len.div_ceil(64)] }
    }

    fn single(len: usize, s: usize) -> Self {
        let mut set = SizeSet::empty(len);
        set.insert(s);
        set
    }

    fn insert(&mut self, i: usize) {
        self.words[i / 64] |= 1 << (i % 64);
    }

    fn contains(&self, i: usize) -> bool {
        self.words.get(i / 64).is_some_and(|w| w & (1 << (i % 64)) != 0)
    }

    fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    fn intersects(&self, other: &SizeSet) -> bool {
        self.words.iter().zip(&other.words).any(|(a, b)| a & b != 0)
    }

    /// Whether `self.shift_down(k)` meets `other`, without allocating.
    fn meets_shifted(&self, k: usize, other: &SizeSet) -> bool {
        let (q, r) = (k / 64, k % 64);
        let word = |i: usize| self.words.get(i).copied().unwrap_or(0);
        other.words.iter().enumerate().any(|(i, &o)| {
            let w = if r == 0 { word(i + q) } else { (word(i + q) >> r) | (word(i + q + 1) << (64 - r)) };
            w & o != 0
        })
    }

    /// `{t : t + k ∈ self}`
    fn shift_down(&self, k: usize) -> SizeSet {
        let (q, r) = (k / 64, k % 64);
        let n = self.words.len();
        let word = |i: usize| self.words.get(i).copied().unwrap_or(0);
        let words = (0..n)
            .map(|i| {
                let lo = word(i + q) >> r;
                if r == 0 {
                    lo
                } else {
                    lo | (word(i + q + 1) << (64 - r))
                }
            })
            .collect();
        SizeSet { words }
    }

    fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(i, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    return None;
                }
                let b = w.trailing_zeros() as usize;
                w &= w - 1;
                Some(i * 64 + b)
            })
        })
    }
}

/// Per-size term counts, saturating, with their non-zero supports.
struct Tables {
    len: usize,
    /// `[nt][size]`
    cnt: Vec<Vec<u64>>,
    /// Sizes with `cnt > 0`, per nonterminal.
    cnt_support: Vec<SizeSet>,
    /// `[nt][rule][j]`: totals `t` for which `args[j..]` can have size `t`.
    suffix_support: Vec<Vec<Vec<SizeSet>>>,
}

impl Tables {
    fn new(g: &TreeGrammar, max_size: usize) -> Tables {
        let len = max_size + 1;
        let n = g.nonterminals.len();
        let mut cnt = vec![vec![0u64; len]; n];
        // [nt][rule][j][t]: ways for args[j..] to have total size t
        let mut suffix: Vec<Vec<Vec<Vec<u64>>>> =
            g.rules.iter().map(|rs| rs.iter().map(|r| vec![vec![0u64; len]; r.args.len() + 1]).collect()).collect();
        for s in 1..len {
            let t = s - 1;
            for nt in 0..n {
                let mut total = 0u64;
                for (ri, r) in g.rules[nt].iter().enumerate() {
                    let table = &mut suffix[nt][ri];
                    let k = r.args.len();
                    table[k][t] = u64::from(t == 0);
                    for j in (0..k).rev() {
                        let a = r.args[j];
                        let mut ways = 0u64;
                        for sz in 1..=t {
                            ways = ways.saturating_add(cnt[a][sz].saturating_mul(table[j + 1][t - sz]));
                        }
                        table[j][t] = ways;
                    }
                    total = total.saturating_add(table[0][t]);
                }
                cnt[nt][s] = total;
            }
        }
        let support = |row: &[u64]| {
            let mut set = SizeSet::empty(len);
            for (i, _) in row.iter().enumerate().filter(|(_, &c)| c > 0) {
                set.insert(i);
            }
            set
        };
        Tables {
            len,
            cnt_support: cnt.iter().map(|row| support(row)).collect(),
            suffix_support: suffix
                .iter()
                .map(|rs| rs.iter().map(|js| js.iter().map(|row| support(row)).collect()).collect())
                .collect(),
            cnt,
        }
    }
}

/// Pre-order `(nonterminal, rule)` choices of a partially built term.
type Path = Vec<(usize, usize)>;
type Next<'a> = dyn FnMut(&mut Path, usize) -> ControlFlow<()> + 'a;

struct Generator<'g> {
    g: &'g TreeGrammar,
    tables: Tables,
}

impl Generator<'_> {
    /// Extends `path` with each term of `nt` whose size is in `allowed`, in
    /// pre-order lexicographic order, calling `next` with the term's size.
    /// Every size that is tried is known to complete, so the search never
    /// backtracks out of a dead end.
    fn terms(&self, nt: usize, allowed: &SizeSet, path: &mut Path, next: &mut Next<'_>) -> ControlFlow<()> {
        let rem = allowed.shift_down(1);
        for ri in 0..self.g.rules[nt].len() {
            if !rem.intersects(&self.tables.suffix_support[nt][ri][0]) {
                continue;
            }
            let mark = path.len();
            path.push((nt, ri));
            let flow = self.args(nt, ri, 0, &rem, 1, path, next);
            path.truncate(mark);
            flow?;
        }
        ControlFlow::Continue(())
    }

    #[allow(clippy::too_many_arguments)]
    fn args(
        &self,
        nt: usize,
        ri: usize,
        j: usize,
        rem: &SizeSet,
        size: usize,
        path: &mut Path,
        next: &mut Next<'_>,
    ) -> ControlFlow<()> {
        let rule = &self.g.rules[nt][ri];
        if j == rule.args.len() {
            return if rem.contains(0) { next(path, size) } else { ControlFlow::Continue(()) };
        }
        let a = rule.args[j];
        let rest = &self.tables.suffix_support[nt][ri][j + 1];
        let mut sizes = SizeSet::empty(self.tables.len);
        for sz in self.tables.cnt_support[a].iter() {
            if rem.meets_shifted(sz, rest) {
                sizes.insert(sz);
            }
        }
        if sizes.is_empty() {
            return ControlFlow::Continue(());
        }
        self.terms(a, &sizes, path, &mut |path, sz| {
            self.args(nt, ri, j + 1, &rem.shift_down(sz), size + sz, path, next)
        })
    }

    /// Streams the terms of `nt` with exactly `size` nodes.
    fn level(&self, nt: usize, size: usize, f: &mut dyn FnMut(Term) -> ControlFlow<()>) -> ControlFlow<()> {
        let allowed = SizeSet::single(self.tables.len, size);
        let mut path = Path::new();
        self.terms(nt, &allowed, &mut path, &mut |path, _| {
            let mut pos = 0;
            f(self.build(path, &mut pos))
        })
    }

    fn build(&self, path: &[(usize, usize)], pos: &mut usize) -> Term {
        let (nt, ri) = path[*pos];
        *pos += 1;
        let rule = &self.g.rules[nt][ri];
        let args = (0..rule.args.len()).map(|_| self.build(path, pos)).collect();
        Term::apply(rule.combinator.clone(), args)
    }
}

/// Streams distinct terms with at most `max_size` nodes in enumeration
/// order until `f` breaks.
pub fn for_each_term(g: &TreeGrammar, max_size: usize, mut f: impl FnMut(Term) -> ControlFlow<()>) {
    if max_size == 0 || g.start.is_empty() {
        return;
    }
    let mut starts = g.start.clone();
    starts.sort_unstable();
    starts.dedup();
    let gen = Generator { g, tables: Tables::new(g, max_size) };
    for s in 1..=max_size {
        let flow = if let [only] = starts[..] {
            gen.level(only, s, &mut f)
        } else {
            let per_start: Vec<Vec<Term>> = starts
                .par_iter()
                .map(|&st| {
                    let mut level = Vec::new();
                    let _ = gen.level(st, s, &mut |t| {
                        level.push(t);
                        ControlFlow::Continue(())
                    });
                    level
                })
                .collect();
            let mut level: Vec<Term> = per_start.into_iter().flatten().collect();
            level.sort();
            level.dedup();
            level.into_iter().try_for_each(&mut f)
        };
        if flow.is_break() {
            return;
        }
    }
}

/// The first `max_results` terms of size at most `max_size`.
pub fn enumerate(g: &TreeGrammar, max_size: usize, max_results: usize) -> Vec<Term> {
    let mut out = Vec::new();
    if max_results == 0 {
        return out;
    }
    for_each_term(g, max_size, |t| {
        out.push(t);
        if out.len() >= max_results {
            ControlFlow::Break(())
        } else {
            ControlFlow::Continue(())
        }
    });
    out
}

/// Number of distinct terms per size `1..=max_size` for one start symbol.
pub fn counts_by_size(g: &TreeGrammar, start: usize, max_size: usize) -> Vec<u64> {
    let tables = Tables::new(g, max_size);
    tables.cnt[start][1..].to_vec()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::{parse_atom_set, parse_type};

    fn repo(entries: &[(&str, &str)]) -> Repository {
        let mut r = Repository::new();
        for (id, ty) in entries {
            r.insert(*id, parse_type(ty).unwrap().into_combinator_type(), None);
        }
        r
    }

    fn tax(nodes: &[&str]) -> Taxonomy {
        Taxonomy::new("t", nodes.iter().map(|s| s.to_string()), []).unwrap()
    }

    fn set(text: &str) -> AtomSet {
        parse_atom_set(text).unwrap()
    }

    fn tower_repo() -> Repository {
        repo(&[
            ("base", "stackable -> tower & base"),
            ("cube", "stackable -> stackable & cube & wood"),
            ("cap", "stackable & cap"),
        ])
    }

    fn tower_tax() -> Taxonomy {
        tax(&["tower", "base", "stackable", "cube", "wood", "cap"])
    }

    fn shown(terms: &[Term]) -> Vec<String> {
        terms.iter().map(Term::to_string).collect()
    }

    #[test]
    fn tower_grammar_rules() {
        let g = build_grammar(&tower_repo(), &tower_tax(), &[set("tower")]);
        assert_eq!(g.dump(), "{tower} -> base({stackable})\n{stackable} -> cap\n{stackable} -> cube({stackable})\n");
        assert_eq!(count(&g), Count::Infinite);
        assert_eq!(max_term_size(&g), None);
    }

    #[test]
    fn empty_repository_gives_unproductive_start() {
        let g = build_grammar(&Repository::new(), &tower_tax(), &[set("tower")]);
        assert!(g.is_empty());
        assert_eq!(g.start().len(), 1);
        assert_eq!(count(&g), Count::Finite(0));
        assert!(enumerate(&g, 10, 10).is_empty());
    }

    #[test]
    fn enumerate_tower_small_bounds() {
        let g = build_grammar(&tower_repo(), &tower_tax(), &[set("tower")]);
        assert_eq!(shown(&enumerate(&g, 3, 100)), ["base(cap)", "base(cube(cap))"]);
        assert!(enumerate(&g, 1, 100).is_empty());
        assert_eq!(enumerate(&g, 10, 1).len(), 1);
    }

    #[test]
    fn pruning_removes_unproductive_rules() {
        let r = repo(&[("a", "x -> goal"), ("b", "y -> goal"), ("c", "y"), ("d", "x -> x")]);
        let g = build_grammar(&r, &tax(&["x", "y", "goal"]), &[set("goal")]);
        assert_eq!(g.dump(), "{goal} -> b({y})\n{y} -> c\n");
        assert_eq!(count(&g), Count::Finite(1));
    }

    #[test]
    fn enumeration_is_lexicographic_within_size() {
        // pair(l, r) where both sides have two nullary choices
        let r = repo(&[("pair", "l -> r -> goal"), ("l1", "l"), ("l0", "l"), ("r1", "r"), ("r0", "r")]);
        let g = build_grammar(&r, &tax(&["l", "r", "goal"]), &[set("goal")]);
        assert_eq!(count(&g), Count::Finite(4));
        assert_eq!(shown(&enumerate(&g, 5, 10)), ["pair(l0, r0)", "pair(l0, r1)", "pair(l1, r0)", "pair(l1, r1)"]);
    }

    #[test]
    fn lexicographic_order_crosses_argument_sizes() {
        // f(a(z), b) and f(b2, ...) style mix: first argument of different sizes
        let r = repo(&[("f", "x -> x -> goal"), ("a", "x -> x"), ("z", "x")]);
        let g = build_grammar(&r, &tax(&["x", "goal"]), &[set("goal")]);
        let terms = enumerate(&g, 5, 100);
        // size 3, then size 4, then size 5; within size 4: f(a(z), z) < f(z, a(z))
        assert_eq!(
            shown(&terms),
            ["f(z, z)", "f(a(z), z)", "f(z, a(z))", "f(a(a(z)), z)", "f(a(z), a(z))", "f(z, a(a(z)))",]
        );
        let mut sorted = terms.clone();
        sorted.sort();
        assert_eq!(sorted, terms);
    }

    #[test]
    fn multiple_starts_merge_in_order_and_dedup() {
        let r = repo(&[("p", "a & b"), ("q", "a"), ("r", "b")]);
        let g = build_grammar(&r, &tax(&["a", "b"]), &[set("b"), set("a")]);
        // p inhabits both starts; counts sum per start, enumeration is distinct
        assert_eq!(count(&g), Count::Finite(4));
        assert_eq!(shown(&enumerate(&g, 3, 10)), ["p", "q", "r"]);
    }

    #[test]
    fn count_saturates() {
        // 64 binary choices chained: 2^64 terms
        let mut entries: Vec<(String, String)> = Vec::new();
        for i in 0..64 {
            entries.push((format!("a{i}"), format!("s{} -> s{i}", i + 1)));
            entries.push((format!("b{i}"), format!("s{} -> s{i}", i + 1)));
        }
        entries.push(("end".into(), "s64".into()));
        let refs: Vec<(&str, &str)> = entries.iter().map(|(a, b)| (a.as_str(), b.as_str())).collect();
        let names: Vec<String> = (0..=64).map(|i| format!("s{i}")).collect();
        let t = Taxonomy::new("t", names, []).unwrap();
        let g = build_grammar(&repo(&refs), &t, &[set("s0")]);
        assert_eq!(count(&g), Count::AtLeast(u64::MAX));
        assert_eq!(max_term_size(&g), Some(65));
    }

    #[test]
    fn size_set_shifts_across_words() {
        let mut s = SizeSet::empty(200);
        for i in [0, 63, 64, 130, 199] {
            s.insert(i);
        }
        assert_eq!(s.iter().collect::<Vec<_>>(), [0, 63, 64, 130, 199]);
        assert_eq!(s.shift_down(1).iter().collect::<Vec<_>>(), [62, 63, 129, 198]);
        assert_eq!(s.shift_down(66).iter().collect::<Vec<_>>(), [64, 133]);
        assert_eq!(s.shift_down(64).iter().collect::<Vec<_>>(), [0, 66, 135]);
        assert!(s.shift_down(200).is_empty());
        let mut other = SizeSet::empty(200);
        other.insert(133);
        assert!(s.meets_shifted(66, &other));
        assert!(!s.meets_shifted(65, &other));
    }

    #[test]
    fn counts_by_size_match_enumeration() {
        let g = build_grammar(&tower_repo(), &tower_tax(), &[set("tower")]);
        assert_eq!(counts_by_size(&g, g.start()[0], 5), vec![0, 1, 1, 1, 1]);
    }

    #[test]
    fn subtype_matching_uses_taxonomy() {
        let t = Taxonomy::new(
            "t",
            ["servomotor", "motor", "arm"].map(String::from),
            [("servomotor".to_string(), "motor".to_string())],
        )
        .unwrap();
        let r = repo(&[("arm", "motor -> arm"), ("servo", "servomotor")]);
        let g = build_grammar(&r, &t, &[set("arm")]);
        assert_eq!(shown(&enumerate(&g, 4, 10)), ["arm(servo)"]);
    }
}
