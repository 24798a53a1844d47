//! Reference classes and sample statements.
//!
//! A record of closed snapshots is summarized, for one query, into
//! `(s% (class target) (s r))` statements: `s` snapshots satisfy every
//! property of the class, `r` of those also satisfy the target.
//!
//! Classes are conjunctions over the *positive* atoms entailed by the
//! announced properties. Two enumeration regimes are available, see
//! [`ClassEnumeration`].

use std::cmp::Ordering;
use std::collections::{BTreeSet, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::prop::{self, parse_atoms, Atom, InconsistencyError, ParseError, RuleSet, StateDescription};

/// Largest number of distinct candidate properties a query may carry.
pub const MAX_UNIVERSE: usize = 128;

/// A conjunction of properties, normalized by rule closure.
///
/// Equality and ordering look only at the closed property set, so two
/// syntactically different labels with the same closure are the same class.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReferenceClass {
    label: BTreeSet<Atom>,
    properties: BTreeSet<Atom>,
}

impl ReferenceClass {
    pub fn new(
        label: impl IntoIterator<Item = Atom>,
        rules: &RuleSet,
    ) -> Result<Self, InconsistencyError> {
        let label: BTreeSet<Atom> = label.into_iter().filter(|a| !a.is_always_true()).collect();
        let closed = prop::close(&StateDescription::new(label.iter().cloned()), rules)?;
        Ok(ReferenceClass {
            label,
            properties: closed.atoms().clone(),
        })
    }

    /// The general class `(always-true)`.
    pub fn always_true() -> Self {
        ReferenceClass {
            label: BTreeSet::new(),
            properties: [Atom::always_true()].into_iter().collect(),
        }
    }

    /// Defining conjunction, without `(always-true)`.
    pub fn label(&self) -> &BTreeSet<Atom> {
        &self.label
    }

    /// Rule-closed properties, including `(always-true)`.
    pub fn properties(&self) -> &BTreeSet<Atom> {
        &self.properties
    }

    pub fn is_always_true(&self) -> bool {
        self.label.is_empty()
    }

    pub fn satisfied_by(&self, state: &StateDescription) -> bool {
        self.label.iter().all(|a| state.holds(a))
    }
}

impl PartialEq for ReferenceClass {
    fn eq(&self, other: &Self) -> bool {
        self.properties == other.properties
    }
}

impl Eq for ReferenceClass {}

impl PartialOrd for ReferenceClass {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for ReferenceClass {
    fn cmp(&self, other: &Self) -> Ordering {
        self.properties
            .len()
            .cmp(&other.properties.len())
            .then_with(|| self.properties.cmp(&other.properties))
    }
}

impl std::hash::Hash for ReferenceClass {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.properties.hash(state);
    }
}

impl fmt::Display for ReferenceClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.label.len() {
            0 => write!(f, "{}", Atom::always_true()),
            1 => write!(f, "{}", self.label.iter().next().unwrap()),
            _ => {
                write!(f, "(AND")?;
                for a in &self.label {
                    write!(f, " {a}")?;
                }
                write!(f, ")")
            }
        }
    }
}

/// Strict specificity: `a`'s closed properties strictly contain `b`'s.
pub fn more_specific(a: &ReferenceClass, b: &ReferenceClass) -> bool {
    a.properties.len() > b.properties.len() && a.properties.is_superset(&b.properties)
}

/// Number of positive class properties that are also given.
///
/// `given` is the closed announcement and should contain `(always-true)`.
/// Complement atoms such as `(NOT (weekday))` are bookkeeping for
/// exclusivity and are not counted as shared properties.
pub fn common_count(class: &ReferenceClass, given: &BTreeSet<Atom>) -> usize {
    class
        .properties
        .iter()
        .filter(|a| !a.is_negated() && given.contains(*a))
        .count()
}

/// `(s% (class target) (s r))`
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SampleStatement {
    pub class: ReferenceClass,
    pub target: Atom,
    pub s: u32,
    pub r: u32,
}

impl SampleStatement {
    /// Panics unless `1 <= s` and `r <= s`.
    pub fn new(class: ReferenceClass, target: Atom, s: u32, r: u32) -> Self {
        assert!(s >= 1 && r <= s, "sample counts must satisfy 0 <= r <= s, s >= 1");
        SampleStatement { class, target, s, r }
    }

    /// Maximum-likelihood estimate `r / s`.
    pub fn frequency(&self) -> f64 {
        f64::from(self.r) / f64::from(self.s)
    }

    /// Parse `(s% (class target) (s r))`, normalizing the class under `rules`.
    pub fn parse(text: &str, rules: &RuleSet) -> Result<Self, ParseError> {
        let t = text.trim();
        let body = t
            .strip_prefix("(s%")
            .and_then(|b| b.strip_suffix(')'))
            .ok_or_else(|| perr("expected `(s% ...)`"))?
            .trim();
        // body: ((class) target) (s r)
        let split = matching_paren(body).ok_or_else(|| perr("unbalanced statement"))?;
        let (pair, counts) = body.split_at(split + 1);
        let inner = pair
            .strip_prefix('(')
            .and_then(|p| p.strip_suffix(')'))
            .ok_or_else(|| perr("expected `(class target)`"))?
            .trim();
        let class_end = matching_paren(inner).ok_or_else(|| perr("unbalanced class"))?;
        let (class_text, target_text) = inner.split_at(class_end + 1);
        let class_text = class_text.trim();
        let label = match class_text.strip_prefix("(AND") {
            Some(rest) => parse_atoms(rest.strip_suffix(')').ok_or_else(|| perr("bad AND"))?)?,
            None => parse_atoms(class_text)?,
        };
        let target: Atom = target_text.trim().parse()?;
        let nums: Vec<u32> = counts
            .trim()
            .trim_start_matches('(')
            .trim_end_matches(')')
            .split_whitespace()
            .map(|n| n.parse::<u32>().map_err(|_| perr("counts must be integers")))
            .collect::<Result<_, _>>()?;
        let [s, r] = nums[..] else {
            return Err(perr("expected `(s r)`"));
        };
        if s == 0 || r > s {
            return Err(perr("counts must satisfy 0 <= r <= s, s >= 1"));
        }
        let class = ReferenceClass::new(label, rules).map_err(|e| perr(&e.to_string()))?;
        Ok(SampleStatement { class, target, s, r })
    }
}

fn perr(msg: &str) -> ParseError {
    ParseError {
        line: 1,
        column: 1,
        message: msg.to_string(),
    }
}

fn matching_paren(s: &str) -> Option<usize> {
    let mut depth = 0i32;
    for (i, c) in s.char_indices() {
        match c {
            '(' => depth += 1,
            ')' => {
                depth -= 1;
                if depth == 0 {
                    return Some(i);
                }
            }
            _ => {}
        }
    }
    None
}

impl fmt::Display for SampleStatement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "(s% ({} {}) ({} {}))",
            self.class, self.target, self.s, self.r
        )
    }
}

/// Which conjunctions become reference classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ClassEnumeration {
    /// For each distinct set of matching snapshots, the most specific
    /// conjunction with that extension (intersections of per-snapshot
    /// satisfied property sets), plus `(always-true)`.
    #[default]
    Closed,
    /// Every instantiated conjunction, generated general-to-specific.
    /// Requires a class cap, since the count is exponential in the
    /// number of announced properties.
    AllSubsets,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SummaryError {
    #[error("target {0} is among the announced properties")]
    TargetAnnounced(Atom),
    #[error("announced properties are inconsistent: {0}")]
    Inconsistent(#[from] InconsistencyError),
    #[error("{0} candidate properties exceed the limit of {MAX_UNIVERSE}")]
    TooManyProperties(usize),
    #[error("all-subsets enumeration needs a class cap")]
    Uncapped,
}

/// Summarization settings for one record.
#[derive(Debug, Clone)]
pub struct Summarizer {
    pub rules: RuleSet,
    pub enumeration: ClassEnumeration,
    /// Keep at most this many classes (the general class always survives).
    pub max_classes: Option<usize>,
}

impl Summarizer {
    pub fn new(rules: RuleSet) -> Self {
        Summarizer {
            rules,
            enumeration: ClassEnumeration::Closed,
            max_classes: None,
        }
    }

    /// Closure of the announced properties: the `given` set of a query.
    pub fn given(&self, announced: &BTreeSet<Atom>) -> Result<BTreeSet<Atom>, InconsistencyError> {
        Ok(prop::close(&StateDescription::new(announced.iter().cloned()), &self.rules)?
            .atoms()
            .clone())
    }

    pub fn summarize(
        &self,
        record: &[StateDescription],
        announced: &BTreeSet<Atom>,
        target: &Atom,
    ) -> Result<Vec<SampleStatement>, SummaryError> {
        if announced.contains(target) {
            return Err(SummaryError::TargetAnnounced(target.clone()));
        }
        if record.is_empty() {
            return Ok(Vec::new());
        }
        let given = self.given(announced)?;
        let universe: Vec<&Atom> = given
            .iter()
            .filter(|a| {
                !a.is_negated() && !a.is_always_true() && a.positive() != target.positive()
            })
            .collect();
        if universe.len() > MAX_UNIVERSE {
            return Err(SummaryError::TooManyProperties(universe.len()));
        }

        let masks: Vec<(u128, bool)> = record
            .iter()
            .map(|snap| {
                let m = universe
                    .iter()
                    .enumerate()
                    .filter(|(_, a)| snap.holds(a))
                    .fold(0u128, |m, (i, _)| m | (1u128 << i));
                (m, snap.holds(target))
            })
            .collect();

        let classes = match self.enumeration {
            ClassEnumeration::Closed => closed_classes(&masks),
            ClassEnumeration::AllSubsets => {
                let cap = self.max_classes.ok_or(SummaryError::Uncapped)?;
                all_subsets(&masks, universe.len(), cap)
            }
        };

        let mut counted: Vec<(u128, u32, u32)> = classes
            .into_iter()
            .map(|c| {
                let (s, r) = masks.iter().fold((0u32, 0u32), |(s, r), &(m, t)| {
                    if m & c == c {
                        (s + 1, r + u32::from(t))
                    } else {
                        (s, r)
                    }
                });
                (c, s, r)
            })
            .filter(|&(_, s, _)| s > 0)
            .collect();

        if let Some(cap) = self.max_classes {
            if counted.len() > cap {
                // general class first, then larger samples, then more specific
                counted.sort_by(|a, b| {
                    (b.0 == 0)
                        .cmp(&(a.0 == 0))
                        .then(b.1.cmp(&a.1))
                        .then(b.0.count_ones().cmp(&a.0.count_ones()))
                        .then(a.0.cmp(&b.0))
                });
                counted.truncate(cap.max(1));
            }
        }

        let mut out = Vec::with_capacity(counted.len());
        for (c, s, r) in counted {
            let label = (0..universe.len())
                .filter(|i| c & (1u128 << i) != 0)
                .map(|i| universe[i].clone());
            let class = ReferenceClass::new(label, &self.rules)?;
            out.push(SampleStatement::new(class, target.clone(), s, r));
        }
        out.sort_by(|a, b| {
            a.class
                .label
                .len()
                .cmp(&b.class.label.len())
                .then_with(|| a.class.label.cmp(&b.class.label))
        });
        out.dedup_by(|a, b| a.class == b.class);
        Ok(out)
    }
}

/// Summarize with the default (closed-class, uncapped) regime.
pub fn summarize(
    record: &[StateDescription],
    announced: &BTreeSet<Atom>,
    target: &Atom,
    rules: &RuleSet,
) -> Result<Vec<SampleStatement>, SummaryError> {
    Summarizer::new(rules.clone()).summarize(record, announced, target)
}

fn closed_classes(masks: &[(u128, bool)]) -> Vec<u128> {
    let mut seen: HashSet<u128> = HashSet::new();
    let mut list: Vec<u128> = Vec::new();
    let distinct: BTreeSet<u128> = masks.iter().map(|&(m, _)| m).collect();
    for m in distinct {
        let mut fresh = Vec::with_capacity(list.len() + 1);
        fresh.push(m);
        fresh.extend(list.iter().map(|&c| c & m));
        for x in fresh {
            if seen.insert(x) {
                list.push(x);
            }
        }
    }
    if seen.insert(0) {
        list.push(0);
    }
    list
}

fn all_subsets(masks: &[(u128, bool)], width: usize, cap: usize) -> Vec<u128> {
    let instantiated = |c: u128| masks.iter().any(|&(m, _)| m & c == c);
    let mut out = vec![0u128];
    let mut frontier = vec![0u128];
    while !frontier.is_empty() && out.len() < cap {
        let mut next = Vec::new();
        for &c in &frontier {
            let start = if c == 0 { 0 } else { 128 - c.leading_zeros() as usize };
            for j in start..width {
                let d = c | (1u128 << j);
                if instantiated(d) {
                    next.push(d);
                }
            }
        }
        next.sort_unstable();
        for &d in &next {
            if out.len() >= cap {
                break;
            }
            out.push(d);
        }
        frontier = next;
    }
    out
}
