//! Ground-atom state language.
//!
//! A network state is a set of ground atoms such as `(on 'cox 'antares)`.
//! Deductive rules are ground Horn-style implications with conjunctive heads;
//! [`close`] forward-chains a state to its least fixpoint and adds the
//! tautology `(always-true)`.
//!
//! Text forms:
//!
//! * atom: `(pred 'arg 'arg)`; quotes on arguments are optional on input
//! * complement: `(NOT (pred ...))` or `!(pred ...)`
//! * rule: `(a) & (b) -> (c) & !(d)`, one per line, `#` starts a comment

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Predicate of the tautology carried by every closed state.
pub const ALWAYS_TRUE: &str = "always-true";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{line}:{column}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl ParseError {
    pub fn new(column: usize, message: impl Into<String>) -> Self {
        ParseError {
            line: 1,
            column,
            message: message.into(),
        }
    }

    /// Re-anchor an error produced for a single line of a larger file.
    pub fn at_line(mut self, line: usize) -> Self {
        self.line = line;
        self
    }
}

/// A ground atom, possibly complemented.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Atom {
    predicate: String,
    args: Vec<String>,
    negated: bool,
}

fn valid_symbol(s: &str) -> bool {
    !s.is_empty()
        && !s
            .chars()
            .any(|c| c.is_whitespace() || c == '(' || c == ')' || c == '\'' || c == '!')
}

impl Atom {
    /// Panics if `predicate` or an argument is not a plain symbol; use
    /// [`Atom::try_new`] for untrusted input.
    pub fn new<P, I, A>(predicate: P, args: I) -> Self
    where
        P: Into<String>,
        I: IntoIterator<Item = A>,
        A: Into<String>,
    {
        Self::try_new(predicate, args).expect("invalid atom symbol")
    }

    pub fn try_new<P, I, A>(predicate: P, args: I) -> Result<Self, ParseError>
    where
        P: Into<String>,
        I: IntoIterator<Item = A>,
        A: Into<String>,
    {
        let predicate = predicate.into();
        if !valid_symbol(&predicate) {
            return Err(ParseError::new(1, format!("invalid predicate `{predicate}`")));
        }
        let args: Vec<String> = args.into_iter().map(Into::into).collect();
        if let Some(bad) = args.iter().find(|a| !valid_symbol(a)) {
            return Err(ParseError::new(1, format!("invalid argument `{bad}`")));
        }
        if predicate == "NOT" || predicate == "AND" || predicate == "OR" {
            return Err(ParseError::new(1, format!("`{predicate}` is a connective")));
        }
        Ok(Atom {
            predicate,
            args,
            negated: false,
        })
    }

    /// Zero-argument atom, e.g. `(weekend)`.
    pub fn prop(predicate: impl Into<String>) -> Self {
        Self::new(predicate, std::iter::empty::<String>())
    }

    pub fn always_true() -> Self {
        Self::prop(ALWAYS_TRUE)
    }

    pub fn predicate(&self) -> &str {
        &self.predicate
    }

    pub fn args(&self) -> &[String] {
        &self.args
    }

    pub fn is_negated(&self) -> bool {
        self.negated
    }

    pub fn is_always_true(&self) -> bool {
        !self.negated && self.args.is_empty() && self.predicate == ALWAYS_TRUE
    }

    pub fn complement(&self) -> Atom {
        Atom {
            negated: !self.negated,
            ..self.clone()
        }
    }

    /// The uncomplemented form of this atom.
    pub fn positive(&self) -> Atom {
        Atom {
            negated: false,
            ..self.clone()
        }
    }

    pub fn is_complement_of(&self, other: &Atom) -> bool {
        self.negated != other.negated && self.predicate == other.predicate && self.args == other.args
    }

    /// Render with the `!` complement prefix used by rule files.
    pub fn to_rule_syntax(&self) -> String {
        if self.negated {
            format!("!{}", self.positive())
        } else {
            self.to_string()
        }
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.negated {
            write!(f, "(NOT ")?;
        }
        write!(f, "({}", self.predicate)?;
        for a in &self.args {
            write!(f, " '{a}")?;
        }
        write!(f, ")")?;
        if self.negated {
            write!(f, ")")?;
        }
        Ok(())
    }
}

impl FromStr for Atom {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let atoms = parse_atoms(s)?;
        match atoms.as_slice() {
            [a] => Ok(a.clone()),
            [] => Err(ParseError::new(1, "expected an atom")),
            _ => Err(ParseError::new(1, "expected a single atom")),
        }
    }
}

// ---------------------------------------------------------------------------
// s-expressions

#[derive(Debug, Clone)]
enum Sexp {
    Sym(String, usize),
    List(Vec<Sexp>, usize),
    Bang(Box<Sexp>, usize),
}

impl Sexp {
    fn column(&self) -> usize {
        match self {
            Sexp::Sym(_, c) | Sexp::List(_, c) | Sexp::Bang(_, c) => *c,
        }
    }
}

fn parse_sexps(input: &str) -> Result<Vec<Sexp>, ParseError> {
    let chars: Vec<char> = input.chars().collect();
    let mut pos = 0;
    let mut out = Vec::new();
    loop {
        skip_ws(&chars, &mut pos);
        if pos >= chars.len() {
            return Ok(out);
        }
        out.push(parse_one(&chars, &mut pos)?);
    }
}

fn skip_ws(chars: &[char], pos: &mut usize) {
    while *pos < chars.len() && chars[*pos].is_whitespace() {
        *pos += 1;
    }
}

fn parse_one(chars: &[char], pos: &mut usize) -> Result<Sexp, ParseError> {
    skip_ws(chars, pos);
    let start = *pos + 1;
    match chars.get(*pos) {
        None => Err(ParseError::new(start, "unexpected end of input")),
        Some(')') => Err(ParseError::new(start, "unbalanced `)`")),
        Some('!') => {
            *pos += 1;
            let inner = parse_one(chars, pos)?;
            Ok(Sexp::Bang(Box::new(inner), start))
        }
        Some('(') => {
            *pos += 1;
            let mut items = Vec::new();
            loop {
                skip_ws(chars, pos);
                match chars.get(*pos) {
                    None => return Err(ParseError::new(start, "unclosed `(`")),
                    Some(')') => {
                        *pos += 1;
                        return Ok(Sexp::List(items, start));
                    }
                    _ => items.push(parse_one(chars, pos)?),
                }
            }
        }
        Some(_) => {
            if chars[*pos] == '\'' {
                *pos += 1;
            }
            let s = *pos;
            while *pos < chars.len()
                && !chars[*pos].is_whitespace()
                && chars[*pos] != '('
                && chars[*pos] != ')'
            {
                *pos += 1;
            }
            let sym: String = chars[s..*pos].iter().collect();
            if sym.is_empty() {
                return Err(ParseError::new(start, "empty symbol"));
            }
            Ok(Sexp::Sym(sym, start))
        }
    }
}

fn atom_from_sexp(sx: &Sexp) -> Result<Atom, ParseError> {
    match sx {
        Sexp::Bang(inner, _) => Ok(atom_from_sexp(inner)?.complement()),
        Sexp::Sym(s, c) => Err(ParseError::new(*c, format!("expected `(`, found `{s}`"))),
        Sexp::List(items, c) => {
            let (head, rest) = items
                .split_first()
                .ok_or_else(|| ParseError::new(*c, "empty atom `()`"))?;
            let pred = match head {
                Sexp::Sym(s, _) => s.as_str(),
                other => {
                    return Err(ParseError::new(other.column(), "expected a predicate symbol"))
                }
            };
            if pred == "NOT" {
                return match rest {
                    [inner] => Ok(atom_from_sexp(inner)?.complement()),
                    _ => Err(ParseError::new(*c, "NOT takes exactly one atom")),
                };
            }
            let mut args = Vec::with_capacity(rest.len());
            for a in rest {
                match a {
                    Sexp::Sym(s, _) => args.push(s.clone()),
                    other => {
                        return Err(ParseError::new(
                            other.column(),
                            "atom arguments must be symbols",
                        ))
                    }
                }
            }
            Atom::try_new(pred, args).map_err(|e| ParseError::new(*c, e.message))
        }
    }
}

/// Parse a whitespace-separated sequence of atoms, e.g. `(weekend) !(weekday)`.
pub fn parse_atoms(input: &str) -> Result<Vec<Atom>, ParseError> {
    parse_sexps(input)?.iter().map(atom_from_sexp).collect()
}

// ---------------------------------------------------------------------------
// vocabulary

/// Declared predicates (with arity) and constant symbols.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Vocabulary {
    predicates: BTreeMap<String, usize>,
    constants: BTreeSet<String>,
}

impl Vocabulary {
    pub fn new() -> Self {
        let mut v = Vocabulary::default();
        v.add_predicate(ALWAYS_TRUE, 0);
        v
    }

    pub fn add_predicate(&mut self, name: impl Into<String>, arity: usize) -> &mut Self {
        self.predicates.insert(name.into(), arity);
        self
    }

    pub fn add_constant(&mut self, name: impl Into<String>) -> &mut Self {
        self.constants.insert(name.into());
        self
    }

    pub fn predicates(&self) -> impl Iterator<Item = (&str, usize)> {
        self.predicates.iter().map(|(k, v)| (k.as_str(), *v))
    }

    pub fn constants(&self) -> impl Iterator<Item = &str> {
        self.constants.iter().map(String::as_str)
    }

    pub fn check(&self, atom: &Atom) -> Result<(), String> {
        match self.predicates.get(atom.predicate()) {
            None => Err(format!("unknown predicate `{}`", atom.predicate())),
            Some(&n) if n != atom.args().len() => Err(format!(
                "predicate `{}` takes {n} argument(s), got {}",
                atom.predicate(),
                atom.args().len()
            )),
            Some(_) => match atom.args().iter().find(|a| !self.constants.contains(*a)) {
                Some(a) => Err(format!("unknown constant `{a}`")),
                None => Ok(()),
            },
        }
    }
}

// ---------------------------------------------------------------------------
// rules

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RuleError {
    EmptyBody,
    EmptyHead,
    HeadOverlapsBody(Atom),
}

impl fmt::Display for RuleError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RuleError::EmptyBody => write!(f, "rule body is empty"),
            RuleError::EmptyHead => write!(f, "rule head is empty"),
            RuleError::HeadOverlapsBody(a) => write!(f, "{a} appears in both body and head"),
        }
    }
}

impl std::error::Error for RuleError {}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Rule {
    body: BTreeSet<Atom>,
    head: BTreeSet<Atom>,
}

impl Rule {
    pub fn new(
        body: impl IntoIterator<Item = Atom>,
        head: impl IntoIterator<Item = Atom>,
    ) -> Result<Self, RuleError> {
        let body: BTreeSet<Atom> = body.into_iter().collect();
        let head: BTreeSet<Atom> = head.into_iter().collect();
        if body.is_empty() {
            return Err(RuleError::EmptyBody);
        }
        if head.is_empty() {
            return Err(RuleError::EmptyHead);
        }
        if let Some(a) = head.intersection(&body).next() {
            return Err(RuleError::HeadOverlapsBody(a.clone()));
        }
        Ok(Rule { body, head })
    }

    pub fn body(&self) -> &BTreeSet<Atom> {
        &self.body
    }

    pub fn head(&self) -> &BTreeSet<Atom> {
        &self.head
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |s: &BTreeSet<Atom>| {
            s.iter()
                .map(Atom::to_rule_syntax)
                .collect::<Vec<_>>()
                .join(" & ")
        };
        write!(f, "{} -> {}", join(&self.body), join(&self.head))
    }
}

/// An ordered list of rules. Order never affects [`close`]'s result.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RuleSet {
    rules: Vec<Rule>,
}

impl RuleSet {
    pub fn new(rules: Vec<Rule>) -> Self {
        RuleSet { rules }
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    pub fn push(&mut self, rule: Rule) {
        self.rules.push(rule);
    }

    /// Parse the line-oriented rule format.
    pub fn parse(text: &str) -> Result<Self, ParseError> {
        let mut rules = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let lineno = i + 1;
            let (lhs, rhs) = line
                .split_once("->")
                .ok_or_else(|| ParseError::new(1, "missing `->`").at_line(lineno))?;
            let side = |s: &str| -> Result<Vec<Atom>, ParseError> {
                let mut out = Vec::new();
                for part in s.split('&') {
                    out.extend(parse_atoms(part)?);
                }
                Ok(out)
            };
            let body = side(lhs).map_err(|e| e.at_line(lineno))?;
            let head = side(rhs).map_err(|e| e.at_line(lineno))?;
            let rule = Rule::new(body, head)
                .map_err(|e| ParseError::new(1, e.to_string()).at_line(lineno))?;
            rules.push(rule);
        }
        Ok(RuleSet { rules })
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for r in &self.rules {
            s.push_str(&r.to_string());
            s.push('\n');
        }
        s
    }
}

// ---------------------------------------------------------------------------
// states

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct StateDescription {
    atoms: BTreeSet<Atom>,
    closed: bool,
}

impl StateDescription {
    /// An unclosed description.
    pub fn new(atoms: impl IntoIterator<Item = Atom>) -> Self {
        StateDescription {
            atoms: atoms.into_iter().collect(),
            closed: false,
        }
    }

    pub fn atoms(&self) -> &BTreeSet<Atom> {
        &self.atoms
    }

    pub fn is_closed(&self) -> bool {
        self.closed
    }

    /// Membership test. Meaningful as entailment only on closed states.
    pub fn holds(&self, atom: &Atom) -> bool {
        debug_assert!(self.closed, "holds() queried on an unclosed state");
        self.atoms.contains(atom)
    }

    /// First complementary pair, if any.
    pub fn conflict(&self) -> Option<(Atom, Atom)> {
        self.atoms
            .iter()
            .filter(|a| !a.is_negated())
            .find(|a| self.atoms.contains(&a.complement()))
            .map(|a| (a.clone(), a.complement()))
    }
}

/// Free-standing form of [`StateDescription::holds`].
pub fn holds(state: &StateDescription, prop: &Atom) -> bool {
    state.holds(prop)
}

/// One forward-chaining step, recorded for inconsistency reports.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Derivation {
    pub rule: usize,
    pub atom: Atom,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("inconsistent state: derived both {} and {}", .pair.0, .pair.1)]
pub struct InconsistencyError {
    pub pair: (Atom, Atom),
    /// Derivations performed before the conflict, in order.
    pub trace: Vec<Derivation>,
}

/// Least fixpoint of `state` under `rules`, plus `(always-true)`.
pub fn close(
    state: &StateDescription,
    rules: &RuleSet,
) -> Result<StateDescription, InconsistencyError> {
    if let Some(pair) = state.conflict() {
        return Err(InconsistencyError {
            pair,
            trace: Vec::new(),
        });
    }
    let mut atoms = state.atoms.clone();
    atoms.insert(Atom::always_true());
    let mut trace = Vec::new();
    let mut changed = true;
    while changed {
        changed = false;
        for (i, rule) in rules.rules.iter().enumerate() {
            if !rule.body.is_subset(&atoms) {
                continue;
            }
            for h in &rule.head {
                if atoms.insert(h.clone()) {
                    changed = true;
                    trace.push(Derivation {
                        rule: i,
                        atom: h.clone(),
                    });
                    let c = h.complement();
                    if atoms.contains(&c) {
                        let pair = if h.is_negated() {
                            (c, h.clone())
                        } else {
                            (h.clone(), c)
                        };
                        return Err(InconsistencyError { pair, trace });
                    }
                }
            }
        }
    }
    Ok(StateDescription {
        atoms,
        closed: true,
    })
}

// ---------------------------------------------------------------------------
// queries

/// A connective formula over atoms, evaluated against closed states.
///
/// Disjunctions exist only here; they are never stored in a state.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Query {
    Atom(Atom),
    And(Vec<Query>),
    Or(Vec<Query>),
}

impl Query {
    pub fn eval(&self, state: &StateDescription) -> bool {
        match self {
            Query::Atom(a) => state.holds(a),
            Query::And(qs) => qs.iter().all(|q| q.eval(state)),
            Query::Or(qs) => qs.iter().any(|q| q.eval(state)),
        }
    }
}

fn query_from_sexp(sx: &Sexp) -> Result<Query, ParseError> {
    if let Sexp::List(items, _) = sx {
        if let Some(Sexp::Sym(head, _)) = items.first() {
            let sub = || -> Result<Vec<Query>, ParseError> {
                items[1..].iter().map(query_from_sexp).collect()
            };
            match head.as_str() {
                "AND" => return Ok(Query::And(sub()?)),
                "OR" => return Ok(Query::Or(sub()?)),
                _ => {}
            }
        }
    }
    atom_from_sexp(sx).map(Query::Atom)
}

impl FromStr for Query {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let sx = parse_sexps(s)?;
        match sx.as_slice() {
            [one] => query_from_sexp(one),
            _ => Err(ParseError::new(1, "expected a single formula")),
        }
    }
}

impl fmt::Display for Query {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let list = |f: &mut fmt::Formatter<'_>, op: &str, qs: &[Query]| {
            write!(f, "({op}")?;
            for q in qs {
                write!(f, " {q}")?;
            }
            write!(f, ")")
        };
        match self {
            Query::Atom(a) => write!(f, "{a}"),
            Query::And(qs) => list(f, "AND", qs),
            Query::Or(qs) => list(f, "OR", qs),
        }
    }
}
