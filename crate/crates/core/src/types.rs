//! Atoms, intersection types, combinator (arrow) types and terms.
//!
//! The type language is finite combinatory logic over atom intersections: a
//! combinator type is a curried arrow `σ₁ -> σ₂ -> … -> ρ` where every `σᵢ`
//! and `ρ` is an [`AtomSet`]. The empty set is the universal type `omega`.
//!
//! Text grammar:
//!
//! ```text
//! type    := set ("->" set)*
//! set     := "omega" | atom ("&" atom)*
//! atom    := ident | ident "@" ident "=" uint | "@" ident "=" uint
//! ```
//!
//! `@key=value` on its own denotes a pure property atom (its name is the key).

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::repo_gen::Repository;
use crate::taxonomy::Taxonomy;

/// Property annotation carried by dynamic atoms.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Property {
    pub key: String,
    pub value: u64,
}

/// A semantic identifier, optionally annotated with an integer property.
///
/// Plain atoms are related by the taxonomy order; property atoms are only
/// ever related to themselves.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Atom {
    pub name: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub prop: Option<Property>,
}

impl Atom {
    pub fn plain(name: impl Into<String>) -> Self {
        Atom { name: name.into(), prop: None }
    }

    /// A pure property atom `@key=value`.
    pub fn property(key: impl Into<String>, value: u64) -> Self {
        let key = key.into();
        Atom { name: key.clone(), prop: Some(Property { key, value }) }
    }

    pub fn annotated(name: impl Into<String>, key: impl Into<String>, value: u64) -> Self {
        Atom { name: name.into(), prop: Some(Property { key: key.into(), value }) }
    }

    pub fn is_property(&self) -> bool {
        self.prop.is_some()
    }

    /// `self ≤ other` under `taxonomy`. Unknown plain atoms are only related
    /// to themselves.
    pub fn leq(&self, other: &Atom, taxonomy: &Taxonomy) -> bool {
        match (&self.prop, &other.prop) {
            (None, None) => taxonomy.leq(&self.name, &other.name),
            (Some(_), Some(_)) => self == other,
            _ => false,
        }
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.prop {
            None => f.write_str(&self.name),
            Some(p) if p.key == self.name => write!(f, "@{}={}", p.key, p.value),
            Some(p) => write!(f, "{}@{}={}", self.name, p.key, p.value),
        }
    }
}

// Accept both `"cube"` and `{"name": "cube"}` in documents.
impl<'de> Deserialize<'de> for Atom {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct Full {
            name: String,
            #[serde(default)]
            prop: Option<Property>,
        }
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Short(String),
            Full(Full),
        }
        let atom = match Repr::deserialize(d)? {
            Repr::Short(name) => Atom::plain(name),
            Repr::Full(Full { name, prop }) => Atom { name, prop },
        };
        if atom.name.is_empty() {
            return Err(serde::de::Error::custom("atom name must be non-empty"));
        }
        Ok(atom)
    }
}

/// An intersection of atoms. The empty set is `omega`.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AtomSet(BTreeSet<Atom>);

impl AtomSet {
    pub fn omega() -> Self {
        AtomSet(BTreeSet::new())
    }

    /// Convenience constructor from plain atom names.
    pub fn of<I, S>(names: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        names.into_iter().map(|n| Atom::plain(n)).collect()
    }

    pub fn is_omega(&self) -> bool {
        self.0.is_empty()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Atom> {
        self.0.iter()
    }

    pub fn contains(&self, atom: &Atom) -> bool {
        self.0.contains(atom)
    }

    pub fn insert(&mut self, atom: Atom) -> bool {
        self.0.insert(atom)
    }

    pub fn with(mut self, atom: Atom) -> Self {
        self.0.insert(atom);
        self
    }

    pub fn union(&self, other: &AtomSet) -> AtomSet {
        AtomSet(self.0.union(&other.0).cloned().collect())
    }

    pub fn is_superset(&self, other: &AtomSet) -> bool {
        self.0.is_superset(&other.0)
    }

    /// Drops every property atom.
    pub fn erase(&self) -> AtomSet {
        self.0.iter().filter(|a| !a.is_property()).cloned().collect()
    }

    pub fn properties(&self) -> impl Iterator<Item = &Property> {
        self.0.iter().filter_map(|a| a.prop.as_ref())
    }

    /// Plain atoms not declared in `taxonomy`.
    pub fn unknown_atoms<'a>(&'a self, taxonomy: &'a Taxonomy) -> impl Iterator<Item = &'a Atom> {
        self.0.iter().filter(move |a| !a.is_property() && !taxonomy.contains(&a.name))
    }

    /// Infallible subtype check; see [`is_subtype`] for the checked variant.
    pub fn leq(&self, other: &AtomSet, taxonomy: &Taxonomy) -> bool {
        other.0.iter().all(|b| self.0.iter().any(|a| a.leq(b, taxonomy)))
    }
}

impl FromIterator<Atom> for AtomSet {
    fn from_iter<I: IntoIterator<Item = Atom>>(iter: I) -> Self {
        AtomSet(iter.into_iter().collect())
    }
}

impl<'a> IntoIterator for &'a AtomSet {
    type Item = &'a Atom;
    type IntoIter = std::collections::btree_set::Iter<'a, Atom>;

    fn into_iter(self) -> Self::IntoIter {
        self.0.iter()
    }
}

impl fmt::Display for AtomSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("omega");
        }
        for (i, atom) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(" & ")?;
            }
            write!(f, "{atom}")?;
        }
        Ok(())
    }
}

/// Curried arrow type `args[0] -> args[1] -> … -> result`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CombinatorType {
    pub args: Vec<AtomSet>,
    pub result: AtomSet,
}

impl CombinatorType {
    pub fn new(args: Vec<AtomSet>, result: AtomSet) -> Self {
        CombinatorType { args, result }
    }

    pub fn nullary(result: AtomSet) -> Self {
        CombinatorType { args: Vec::new(), result }
    }

    pub fn arity(&self) -> usize {
        self.args.len()
    }

    pub fn erase(&self) -> CombinatorType {
        CombinatorType { args: self.args.iter().map(AtomSet::erase).collect(), result: self.result.erase() }
    }
}

impl fmt::Display for CombinatorType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for arg in &self.args {
            write!(f, "{arg} -> ")?;
        }
        write!(f, "{}", self.result)
    }
}

/// Result of parsing the type grammar.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TypeExpr {
    Set(AtomSet),
    Arrow(CombinatorType),
}

impl TypeExpr {
    /// Views a bare set as a nullary combinator type.
    pub fn into_combinator_type(self) -> CombinatorType {
        match self {
            TypeExpr::Set(s) => CombinatorType::nullary(s),
            TypeExpr::Arrow(t) => t,
        }
    }
}

impl fmt::Display for TypeExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TypeExpr::Set(s) => s.fmt(f),
            TypeExpr::Arrow(t) => t.fmt(f),
        }
    }
}

/// A combinator applied to argument terms.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Term {
    pub combinator: String,
    #[serde(default)]
    pub args: Vec<Term>,
}

impl Term {
    pub fn leaf(combinator: impl Into<String>) -> Self {
        Term { combinator: combinator.into(), args: Vec::new() }
    }

    pub fn apply(combinator: impl Into<String>, args: Vec<Term>) -> Self {
        Term { combinator: combinator.into(), args }
    }

    /// Number of combinator nodes.
    pub fn size(&self) -> usize {
        1 + self.args.iter().map(Term::size).sum::<usize>()
    }

    /// Combinator ids in depth-first pre-order.
    pub fn preorder(&self) -> Vec<&str> {
        let mut out = Vec::with_capacity(self.size());
        self.collect_preorder(&mut out);
        out
    }

    fn collect_preorder<'a>(&'a self, out: &mut Vec<&'a str>) {
        out.push(&self.combinator);
        for a in &self.args {
            a.collect_preorder(out);
        }
    }

    // Only differs between terms with equal pre-order ids when some
    // combinator is used at two arities (ill-typed input).
    fn arities(&self) -> Vec<usize> {
        let mut out = vec![self.args.len()];
        for a in &self.args {
            out.extend(a.arities());
        }
        out
    }

    /// Rewrites every combinator id through `f`.
    pub fn map_ids(&self, f: &impl Fn(&str) -> String) -> Term {
        Term { combinator: f(&self.combinator), args: self.args.iter().map(|a| a.map_ids(f)).collect() }
    }

    pub fn parse(text: &str) -> Result<Term, ParseError> {
        let mut p = Parser::new(text);
        let t = p.term()?;
        p.skip_ws();
        if !p.at_end() {
            return Err(p.error("trailing input after term"));
        }
        Ok(t)
    }
}

/// Size first, then lexicographic by pre-order combinator ids.
impl Ord for Term {
    fn cmp(&self, other: &Self) -> Ordering {
        self.size()
            .cmp(&other.size())
            .then_with(|| self.preorder().cmp(&other.preorder()))
            .then_with(|| self.arities().cmp(&other.arities()))
    }
}

impl PartialOrd for Term {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.combinator)?;
        if !self.args.is_empty() {
            f.write_str("(")?;
            for (i, a) in self.args.iter().enumerate() {
                if i > 0 {
                    f.write_str(", ")?;
                }
                write!(f, "{a}")?;
            }
            f.write_str(")")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("syntax error at {pos}: {message}")]
pub struct ParseError {
    pub pos: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TypeError {
    #[error("unknown atom `{0}`")]
    UnknownAtom(String),
    #[error("unknown combinator `{combinator}` at {}", fmt_path(.path))]
    UnknownCombinator { path: Vec<usize>, combinator: String },
    #[error("combinator `{combinator}` at {} expects {expected} argument(s), got {found}", fmt_path(.path))]
    ArityMismatch { path: Vec<usize>, combinator: String, expected: usize, found: usize },
    #[error("argument at {} has type `{actual}`, expected a subtype of `{expected}`", fmt_path(.path))]
    ArgumentTypeMismatch { path: Vec<usize>, expected: AtomSet, actual: AtomSet },
}

fn fmt_path(path: &[usize]) -> String {
    let parts: Vec<String> = path.iter().map(usize::to_string).collect();
    format!("[{}]", parts.join(", "))
}

/// Checked subtyping: every atom of `rhs` must be covered by some atom of
/// `lhs`. Fails if a plain atom is not declared in the taxonomy.
pub fn is_subtype(taxonomy: &Taxonomy, lhs: &AtomSet, rhs: &AtomSet) -> Result<bool, TypeError> {
    if let Some(a) = lhs.unknown_atoms(taxonomy).chain(rhs.unknown_atoms(taxonomy)).next() {
        return Err(TypeError::UnknownAtom(a.name.clone()));
    }
    Ok(lhs.leq(rhs, taxonomy))
}

/// Type of `term` in `repo`: the result set of its root combinator, provided
/// every argument's type is a subtype of the declared argument type.
pub fn typecheck(repo: &Repository, taxonomy: &Taxonomy, term: &Term) -> Result<AtomSet, TypeError> {
    let mut path = Vec::new();
    check_at(repo, taxonomy, term, &mut path)
}

fn check_at(repo: &Repository, taxonomy: &Taxonomy, term: &Term, path: &mut Vec<usize>) -> Result<AtomSet, TypeError> {
    let ty = repo
        .get(&term.combinator)
        .ok_or_else(|| TypeError::UnknownCombinator { path: path.clone(), combinator: term.combinator.clone() })?;
    if ty.arity() != term.args.len() {
        return Err(TypeError::ArityMismatch {
            path: path.clone(),
            combinator: term.combinator.clone(),
            expected: ty.arity(),
            found: term.args.len(),
        });
    }
    for (i, (arg, expected)) in term.args.iter().zip(&ty.args).enumerate() {
        path.push(i);
        let actual = check_at(repo, taxonomy, arg, path)?;
        if !actual.leq(expected, taxonomy) {
            return Err(TypeError::ArgumentTypeMismatch { path: path.clone(), expected: expected.clone(), actual });
        }
        path.pop();
    }
    Ok(ty.result.clone())
}

pub fn parse_type(text: &str) -> Result<TypeExpr, ParseError> {
    let mut p = Parser::new(text);
    let mut sets = vec![p.atom_set()?];
    loop {
        p.skip_ws();
        if p.eat("->") {
            sets.push(p.atom_set()?);
        } else {
            break;
        }
    }
    p.skip_ws();
    if !p.at_end() {
        return Err(p.error("expected `->`, `&` or end of input"));
    }
    let result = sets.pop().expect("at least one set");
    Ok(if sets.is_empty() { TypeExpr::Set(result) } else { TypeExpr::Arrow(CombinatorType::new(sets, result)) })
}

pub fn parse_atom_set(text: &str) -> Result<AtomSet, ParseError> {
    match parse_type(text)? {
        TypeExpr::Set(s) => Ok(s),
        TypeExpr::Arrow(_) => {
            Err(ParseError { pos: 0, message: "expected an intersection of atoms, found an arrow type".into() })
        }
    }
}

pub(crate) fn is_ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_'
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Parser<'a> {
    fn new(src: &'a str) -> Self {
        Parser { src, pos: 0 }
    }

    fn rest(&self) -> &'a str {
        &self.src[self.pos..]
    }

    fn at_end(&self) -> bool {
        self.pos >= self.src.len()
    }

    fn peek(&self) -> Option<char> {
        self.rest().chars().next()
    }

    fn skip_ws(&mut self) {
        while let Some(c) = self.peek() {
            if !c.is_whitespace() {
                break;
            }
            self.pos += c.len_utf8();
        }
    }

    fn eat(&mut self, tok: &str) -> bool {
        if self.rest().starts_with(tok) {
            self.pos += tok.len();
            true
        } else {
            false
        }
    }

    fn error(&self, message: impl Into<String>) -> ParseError {
        ParseError { pos: self.pos, message: message.into() }
    }

    fn take_while(&mut self, pred: impl Fn(char) -> bool) -> &'a str {
        let start = self.pos;
        while let Some(c) = self.peek() {
            if !pred(c) {
                break;
            }
            self.pos += c.len_utf8();
        }
        &self.src[start..self.pos]
    }

    fn ident(&mut self) -> Result<&'a str, ParseError> {
        self.skip_ws();
        let id = self.take_while(is_ident_char);
        if id.is_empty() {
            Err(self.error("expected identifier"))
        } else {
            Ok(id)
        }
    }

    fn property(&mut self) -> Result<(String, u64), ParseError> {
        let key = self.ident()?.to_string();
        if !self.eat("=") {
            return Err(self.error("expected `=` after property key"));
        }
        let start = self.pos;
        let digits = self.take_while(|c| c.is_ascii_digit());
        let value = digits
            .parse::<u64>()
            .map_err(|_| ParseError { pos: start, message: "expected unsigned integer property value".into() })?;
        Ok((key, value))
    }

    fn atom(&mut self) -> Result<Atom, ParseError> {
        self.skip_ws();
        if self.eat("@") {
            let (key, value) = self.property()?;
            return Ok(Atom::property(key, value));
        }
        let name = self.ident()?.to_string();
        if self.eat("@") {
            let (key, value) = self.property()?;
            Ok(Atom::annotated(name, key, value))
        } else {
            Ok(Atom::plain(name))
        }
    }

    fn atom_set(&mut self) -> Result<AtomSet, ParseError> {
        self.skip_ws();
        if self.rest().starts_with("omega") && !self.rest()[5..].starts_with(is_ident_char) {
            self.pos += 5;
            return Ok(AtomSet::omega());
        }
        let mut set = AtomSet::omega();
        set.insert(self.atom()?);
        loop {
            self.skip_ws();
            if self.eat("&") {
                set.insert(self.atom()?);
            } else {
                return Ok(set);
            }
        }
    }

    fn term(&mut self) -> Result<Term, ParseError> {
        self.skip_ws();
        let id = self.take_while(|c| is_ident_char(c) || matches!(c, '.' | '-' | '#' | '=' | '/'));
        if id.is_empty() {
            return Err(self.error("expected combinator identifier"));
        }
        let mut term = Term::leaf(id);
        self.skip_ws();
        if self.eat("(") {
            loop {
                term.args.push(self.term()?);
                self.skip_ws();
                if self.eat(",") {
                    continue;
                }
                if self.eat(")") {
                    break;
                }
                return Err(self.error("expected `,` or `)`"));
            }
        }
        Ok(term)
    }
}
