//! Frequency intervals: construction from samples, set-theoretic combination,
//! and interval selection by specificity.
//!
//! # Confidence intervals
//!
//! [`IntervalRule::Narrowest`] (the default) inverts the family of smallest
//! binomial acceptance regions: for each true frequency `p`, outcomes are
//! admitted in order of decreasing probability until their mass reaches the
//! confidence level `c`. The interval for `(s, r)` is the hull of every `p`
//! whose acceptance region admits `r`. Coverage is at least `c` for every
//! `p`, the interval always contains `r / s`, and it grows with `c`.
//!
//! [`IntervalRule::Wilson`] is the Wilson score interval. It is closed-form
//! and narrower, but its coverage can fall far below `c` for small samples.
//!
//! # Combination and selection
//!
//! Two sample intervals about the same target from classes with disjoint
//! properties combine through the XP product class via
//! `g(p, q) = pq / (1 - p - q + 2pq)` applied endpoint-wise. Intervals
//! *disagree* when neither nests in the other; a more specific class defeats
//! a disagreeing less specific one.

use std::borrow::Cow;
use std::cmp::Ordering;
use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::sync::{Mutex, OnceLock};

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};
use statrs::function::factorial::ln_binomial;
use thiserror::Error;

use crate::prop::Atom;
use crate::refclass::{self, ReferenceClass, SampleStatement};

/// Comparison tolerance for interval endpoints.
pub const TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IntervalError {
    #[error("g is singular at p = {p}, q = {q}")]
    Singular { p: f64, q: f64 },
    #[error("no candidate intervals")]
    NoCandidates,
    #[error("every candidate interval is eliminated by a disagreeing interval")]
    NoConsideredInterval,
    #[error("candidates concern different targets")]
    TargetMismatch,
}

/// A closed sub-interval of `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        debug_assert!(
            (0.0..=1.0).contains(&lo) && (0.0..=1.0).contains(&hi) && lo <= hi + TOLERANCE,
            "invalid interval [{lo}, {hi}]"
        );
        Interval { lo, hi }
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    /// `self` lies within `other`.
    pub fn within(&self, other: &Interval) -> bool {
        self.lo >= other.lo - TOLERANCE && self.hi <= other.hi + TOLERANCE
    }

    pub fn nests_with(&self, other: &Interval) -> bool {
        self.within(other) || other.within(self)
    }

    pub fn disagrees(&self, other: &Interval) -> bool {
        !self.nests_with(other)
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo - TOLERANCE <= x && x <= self.hi + TOLERANCE
    }

    pub fn hull(&self, other: &Interval) -> Interval {
        Interval::new(self.lo.min(other.lo), self.hi.max(other.hi))
    }
}

/// Render a probability the way the statement notation does: `.2`, `.0968`.
pub fn format_prob(x: f64) -> String {
    let s = format!("{x:.4}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    match s {
        "" | "0" | "-0" => "0".to_string(),
        _ => s.strip_prefix('0').unwrap_or(s).to_string(),
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({} {})", format_prob(self.lo), format_prob(self.hi))
    }
}

// ---------------------------------------------------------------------------
// confidence intervals

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IntervalRule {
    #[default]
    Narrowest,
    Wilson,
}

impl IntervalRule {
    pub fn name(self) -> &'static str {
        match self {
            IntervalRule::Narrowest => "narrowest",
            IntervalRule::Wilson => "wilson",
        }
    }

    /// Interval for `r` successes out of `s` at confidence `c`.
    ///
    /// Panics if `s == 0` or `r > s`. Levels outside `(0, 1)` are clamped:
    /// `c <= 0` gives the degenerate limit of the rule, `c >= 1` gives `[0, 1]`.
    pub fn bounds(self, s: u32, r: u32, c: f64) -> Interval {
        assert!(s >= 1 && r <= s, "invalid sample ({s}, {r})");
        if c >= 1.0 {
            return Interval::new(0.0, 1.0);
        }
        let key = (self, s, r, c.to_bits());
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        if let Some(iv) = cache.lock().unwrap().get(&key) {
            return *iv;
        }
        let iv = match self {
            IntervalRule::Narrowest => narrowest(s, r, c.max(0.0)),
            IntervalRule::Wilson => wilson(s, r, c.max(0.0)),
        };
        cache.lock().unwrap().insert(key, iv);
        iv
    }
}

impl std::str::FromStr for IntervalRule {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "narrowest" => Ok(IntervalRule::Narrowest),
            "wilson" => Ok(IntervalRule::Wilson),
            _ => Err(format!("unknown interval rule `{s}`")),
        }
    }
}

type CacheKey = (IntervalRule, u32, u32, u64);
static CACHE: OnceLock<Mutex<HashMap<CacheKey, Interval>>> = OnceLock::new();

/// Confidence interval under the default rule.
pub fn confidence_interval(s: u32, r: u32, c: f64) -> Interval {
    IntervalRule::default().bounds(s, r, c)
}

fn wilson(s: u32, r: u32, c: f64) -> Interval {
    let n = f64::from(s);
    let phat = f64::from(r) / n;
    if c <= 0.0 {
        return Interval::new(phat, phat);
    }
    let z = Normal::standard().inverse_cdf(0.5 + 0.5 * c);
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let centre = phat + z2 / (2.0 * n);
    let margin = z * (phat * (1.0 - phat) / n + z2 / (4.0 * n * n)).sqrt();
    let lo = ((centre - margin) / denom).clamp(0.0, phat);
    let hi = ((centre + margin) / denom).clamp(phat, 1.0);
    Interval::new(lo, hi)
}

fn narrowest(s: u32, r: u32, c: f64) -> Interval {
    let lo = narrowest_lower(s, r, c);
    let hi = 1.0 - narrowest_lower(s, s - r, c);
    Interval::new(lo.min(hi), hi)
}

struct Binomial {
    n: u32,
    ln_choose: Vec<f64>,
}

impl Binomial {
    fn new(n: u32) -> Self {
        Binomial {
            n,
            ln_choose: (0..=n).map(|k| ln_binomial(n as u64, k as u64)).collect(),
        }
    }

    fn pmf(&self, k: u32, p: f64) -> f64 {
        if p <= 0.0 {
            return if k == 0 { 1.0 } else { 0.0 };
        }
        if p >= 1.0 {
            return if k == self.n { 1.0 } else { 0.0 };
        }
        let (k_f, n_f) = (f64::from(k), f64::from(self.n));
        (self.ln_choose[k as usize] + k_f * p.ln() + (n_f - k_f) * (-p).ln_1p()).exp()
    }

    /// Probability mass of outcomes strictly more likely than `r`.
    fn mass_above(&self, r: u32, p: f64) -> f64 {
        let pr = self.pmf(r, p);
        (0..=self.n)
            .filter(|&k| k != r)
            .map(|k| self.pmf(k, p))
            .filter(|&pk| pk > pr)
            .sum()
    }

    /// Frequency at which outcomes `k` and `r` are equally likely.
    fn crossing(&self, k: u32, r: u32) -> f64 {
        let diff = f64::from(r) - f64::from(k);
        let odds = ((self.ln_choose[k as usize] - self.ln_choose[r as usize]) / diff).exp();
        odds / (1.0 + odds)
    }
}

/// Infimum of the frequencies whose acceptance region admits `r`.
///
/// Between consecutive crossing points the outcomes more likely than `r`
/// form a fixed block of consecutive counts, whose total probability is
/// unimodal in `p`. Within a segment the accepted frequencies therefore
/// sit at its ends: either the segment starts accepted, or acceptance is
/// monotone across it and bisection finds the boundary.
fn narrowest_lower(s: u32, r: u32, c: f64) -> f64 {
    if r == 0 {
        return 0.0;
    }
    let bin = Binomial::new(s);
    let mle = f64::from(r) / f64::from(s);
    let mut cuts: Vec<f64> = (0..=s)
        .filter(|&k| k != r)
        .map(|k| bin.crossing(k, r))
        .filter(|&t| t > 0.0 && t < mle)
        .collect();
    cuts.push(0.0);
    cuts.push(mle);
    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    cuts.dedup();

    let accepts = |p: f64| bin.mass_above(r, p) < c;
    for w in cuts.windows(2) {
        let (a, b) = (w[0], w[1]);
        let inset = (b - a) * 1e-9;
        if inset <= 0.0 {
            continue;
        }
        if accepts(a + inset) {
            return a;
        }
        if !accepts(b - inset) {
            continue;
        }
        let (mut lo, mut hi) = (a + inset, b - inset);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if accepts(mid) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        return hi;
    }
    mle
}

// ---------------------------------------------------------------------------
// classes and frequency statements

/// The class a frequency interval is about.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum ClassExpr {
    /// A sampled reference class.
    Sample(ReferenceClass),
    /// Pairs drawn from two classes that agree on the target.
    Xp(ReferenceClass, ReferenceClass),
    /// Plain product of two classes. Represented, not used by any calculus.
    Cross(ReferenceClass, ReferenceClass),
}

impl ClassExpr {
    /// Properties used for specificity; `None` for the plain product.
    fn properties(&self) -> Option<Cow<'_, BTreeSet<Atom>>> {
        match self {
            ClassExpr::Sample(c) => Some(Cow::Borrowed(c.properties())),
            ClassExpr::Xp(a, b) => Some(Cow::Owned(
                a.properties().union(b.properties()).cloned().collect(),
            )),
            ClassExpr::Cross(..) => None,
        }
    }

    /// An XP class is more specific than whatever the union of its
    /// components' properties is more specific than.
    pub fn more_specific(&self, other: &ClassExpr) -> bool {
        if let (ClassExpr::Sample(a), ClassExpr::Sample(b)) = (self, other) {
            return refclass::more_specific(a, b);
        }
        match (self.properties(), other.properties()) {
            (Some(a), Some(b)) => a.len() > b.len() && a.is_superset(&b),
            _ => false,
        }
    }

    pub fn is_always_true(&self) -> bool {
        matches!(self, ClassExpr::Sample(c) if c.is_always_true())
    }

    fn render(&self, target: &Atom) -> String {
        match self {
            ClassExpr::Sample(c) => format!("{c} {target}"),
            ClassExpr::Xp(a, b) => format!("(XP {a} {b}) (X {target} {target})"),
            ClassExpr::Cross(a, b) => format!("(X {a} {b}) (X {target} {target})"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    Sample,
    Combined,
}

/// `(% (class target) (lo hi))`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyInterval {
    pub class: ClassExpr,
    pub target: Atom,
    pub interval: Interval,
    /// Level the interval was built at; `None` for stated intervals.
    pub confidence: Option<f64>,
    pub provenance: Provenance,
}

impl FrequencyInterval {
    /// Confidence interval for a sample statement.
    pub fn from_sample(st: &SampleStatement, confidence: f64, rule: IntervalRule) -> Self {
        FrequencyInterval {
            class: ClassExpr::Sample(st.class.clone()),
            target: st.target.clone(),
            interval: rule.bounds(st.s, st.r, confidence),
            confidence: Some(confidence),
            provenance: Provenance::Sample,
        }
    }

    /// A stated interval for a class, e.g. from a worked example.
    pub fn stated(class: ReferenceClass, target: Atom, lo: f64, hi: f64) -> Self {
        FrequencyInterval {
            class: ClassExpr::Sample(class),
            target,
            interval: Interval::new(lo, hi),
            confidence: None,
            provenance: Provenance::Sample,
        }
    }

    pub fn lo(&self) -> f64 {
        self.interval.lo
    }

    pub fn hi(&self) -> f64 {
        self.interval.hi
    }
}

impl fmt::Display for FrequencyInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(% ({}) {})", self.class.render(&self.target), self.interval)
    }
}

// ---------------------------------------------------------------------------
// combination

/// `g(p, q) = pq / (1 - p - q + 2pq)`.
pub fn g(p: f64, q: f64) -> Result<f64, IntervalError> {
    let denom = 1.0 - p - q + 2.0 * p * q;
    if denom.abs() <= TOLERANCE {
        return Err(IntervalError::Singular { p, q });
    }
    Ok((p * q / denom).clamp(0.0, 1.0))
}

/// `g` extended to its singular points `{0, 1}` with the value 0.
pub fn g_total(p: f64, q: f64) -> f64 {
    g(p, q).unwrap_or_else(|_| {
        log::warn!("g({p}, {q}) is singular; using 0");
        0.0
    })
}

/// Endpoint-wise `g` over the XP product of the two classes.
pub fn combine_xp(
    a: &FrequencyInterval,
    b: &FrequencyInterval,
) -> Result<FrequencyInterval, IntervalError> {
    if a.target != b.target {
        return Err(IntervalError::TargetMismatch);
    }
    let (ca, cb) = match (&a.class, &b.class) {
        (ClassExpr::Sample(x), ClassExpr::Sample(y)) => (x.clone(), y.clone()),
        _ => return Err(IntervalError::NoCandidates),
    };
    let lo = g_total(a.lo(), b.lo());
    let hi = g_total(a.hi(), b.hi());
    Ok(FrequencyInterval {
        class: ClassExpr::Xp(ca, cb),
        target: a.target.clone(),
        interval: Interval::new(lo.min(hi), hi.max(lo)),
        confidence: match (a.confidence, b.confidence) {
            (Some(x), Some(y)) => Some(x.min(y)),
            (x, y) => x.or(y),
        },
        provenance: Provenance::Combined,
    })
}

/// Two classes whose properties overlap only in `(always-true)`, neither
/// of them the general class itself.
pub fn combinable(a: &ReferenceClass, b: &ReferenceClass) -> bool {
    !a.is_always_true()
        && !b.is_always_true()
        && a
            .properties()
            .intersection(b.properties())
            .all(Atom::is_always_true)
}

/// Sample intervals plus one level of pairwise XP combinations.
pub fn candidates(
    samples: &[SampleStatement],
    confidence: f64,
    rule: IntervalRule,
) -> Vec<FrequencyInterval> {
    let base: Vec<FrequencyInterval> = samples
        .iter()
        .map(|st| FrequencyInterval::from_sample(st, confidence, rule))
        .collect();
    let mut out = base.clone();
    for (i, a) in base.iter().enumerate() {
        for b in &base[i + 1..] {
            let (ClassExpr::Sample(ca), ClassExpr::Sample(cb)) = (&a.class, &b.class) else {
                continue;
            };
            if combinable(ca, cb) {
                if let Ok(x) = combine_xp(a, b) {
                    out.push(x);
                }
            }
        }
    }
    out
}

// ---------------------------------------------------------------------------
// selection

fn check_targets(c: &[FrequencyInterval]) -> Result<(), IntervalError> {
    let first = c.first().ok_or(IntervalError::NoCandidates)?;
    if c.iter().any(|x| x.target != first.target) {
        return Err(IntervalError::TargetMismatch);
    }
    Ok(())
}

fn narrowest_first(a: &FrequencyInterval, b: &FrequencyInterval) -> Ordering {
    let (wa, wb) = (a.interval.width(), b.interval.width());
    if (wa - wb).abs() > TOLERANCE {
        return wa.partial_cmp(&wb).unwrap();
    }
    if (a.lo() - b.lo()).abs() > TOLERANCE {
        return b.lo().partial_cmp(&a.lo()).unwrap();
    }
    a.to_string().cmp(&b.to_string())
}

/// Candidates that are more specific than every candidate they disagree with.
pub fn considered(candidates: &[FrequencyInterval]) -> Vec<usize> {
    (0..candidates.len())
        .filter(|&i| {
            candidates.iter().all(|other| {
                !candidates[i].interval.disagrees(&other.interval)
                    || candidates[i].class.more_specific(&other.class)
            })
        })
        .collect()
}

/// Candidates not defeated by a disagreeing, more specific candidate.
pub fn undefeated(candidates: &[FrequencyInterval]) -> Vec<usize> {
    (0..candidates.len())
        .filter(|&i| {
            !candidates.iter().any(|other| {
                candidates[i].interval.disagrees(&other.interval)
                    && other.class.more_specific(&candidates[i].class)
            })
        })
        .collect()
}

/// The narrowest considered interval.
///
/// Ties on width go to the larger lower bound, then to the lexicographically
/// smallest rendering.
pub fn kyburg_select(candidates: &[FrequencyInterval]) -> Result<&FrequencyInterval, IntervalError> {
    check_targets(candidates)?;
    considered(candidates)
        .into_iter()
        .map(|i| &candidates[i])
        .min_by(|a, b| narrowest_first(a, b))
        .ok_or(IntervalError::NoConsideredInterval)
}

/// Specificity defeat as in [`kyburg_select`]; among the surviving
/// intervals, those containing another survivor are dropped, and the
/// convex hull of what remains is returned.
pub fn loui_select(candidates: &[FrequencyInterval]) -> Result<Interval, IntervalError> {
    check_targets(candidates)?;
    let alive = undefeated(candidates);
    let minimal: Vec<&FrequencyInterval> = alive
        .iter()
        .map(|&i| &candidates[i])
        .filter(|x| {
            !alive.iter().any(|&j| {
                let y = &candidates[j].interval;
                y.within(&x.interval) && !x.interval.within(y)
            })
        })
        .collect();
    minimal
        .iter()
        .map(|x| x.interval)
        .reduce(|a, b| a.hull(&b))
        .ok_or(IntervalError::NoConsideredInterval)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prop::{parse_atoms, RuleSet};

    fn rules() -> RuleSet {
        RuleSet::parse("(weekend) -> !(weekday)\n(weekday) -> !(weekend)").unwrap()
    }

    fn class(s: &str) -> ReferenceClass {
        ReferenceClass::new(parse_atoms(s).unwrap(), &rules()).unwrap()
    }

    fn jackson() -> Atom {
        "(logged-on jackson)".parse().unwrap()
    }

    fn fi(c: &str, lo: f64, hi: f64) -> FrequencyInterval {
        FrequencyInterval::stated(class(c), jackson(), lo, hi)
    }

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-9
    }

    #[test]
    fn g_examples() {
        assert!(close(g(0.2, 0.3).unwrap(), 3.0 / 31.0));
        assert_eq!(g(0.0, 0.7).unwrap(), 0.0);
        for q in [0.1, 0.5, 1.0] {
            assert!(close(g(1.0, q).unwrap(), 1.0));
        }
        assert!(close(g(0.5, 0.5).unwrap(), 0.5));
        assert!(matches!(g(0.0, 1.0), Err(IntervalError::Singular { .. })));
        assert_eq!(g_total(1.0, 0.0), 0.0);
    }

    #[test]
    fn xp_examples() {
        let x = combine_xp(&fi("(weekend)", 0.2, 0.4), &fi("(in-use castor)", 0.3, 0.5)).unwrap();
        assert!(close(x.lo(), 3.0 / 31.0) && close(x.hi(), 0.4));
        assert_eq!(x.provenance, Provenance::Combined);
        assert_eq!(
            x.to_string(),
            "(% ((XP (weekend) (in-use 'castor)) (X (logged-on 'jackson) (logged-on 'jackson))) (.0968 .4))"
        );
        let v = combine_xp(&fi("(weekend)", 0.0, 1.0), &fi("(in-use castor)", 0.3, 0.5)).unwrap();
        assert!(close(v.lo(), 0.0) && close(v.hi(), 1.0));
        let h = combine_xp(&fi("(weekend)", 0.5, 0.5), &fi("(in-use castor)", 0.5, 0.5)).unwrap();
        assert!(close(h.lo(), 0.5) && close(h.hi(), 0.5));
    }

    #[test]
    fn kyburg_worked_triple() {
        let a = fi("(weekend)", 0.2, 0.4);
        let b = fi("(in-use castor)", 0.3, 0.5);
        let x = combine_xp(&a, &b).unwrap();
        let cands = vec![a, b, x.clone()];
        assert_eq!(considered(&cands), vec![2]);
        assert_eq!(kyburg_select(&cands).unwrap(), &x);
    }

    #[test]
    fn kyburg_nested_and_single() {
        let wide = fi("(weekend)", 0.1, 0.9);
        let narrow = fi("(in-use castor)", 0.3, 0.5);
        let cands = vec![wide.clone(), narrow.clone()];
        assert_eq!(kyburg_select(&cands).unwrap(), &narrow);
        assert_eq!(kyburg_select(std::slice::from_ref(&wide)).unwrap(), &wide);
        assert_eq!(loui_select(&cands).unwrap(), narrow.interval);
    }

    #[test]
    fn kyburg_fails_on_mutual_disagreement() {
        let cands = vec![fi("(weekend)", 0.06, 0.63), fi("(in-use castor)", 0.08, 0.73)];
        assert_eq!(kyburg_select(&cands), Err(IntervalError::NoConsideredInterval));
        let h = loui_select(&cands).unwrap();
        assert!(close(h.lo, 0.06) && close(h.hi, 0.73));
    }

    #[test]
    fn more_specific_class_defeats() {
        let general = fi("(in-use castor)", 0.6, 0.9);
        let specific = fi("(in-use castor) (logged-on marsh)", 0.1, 0.3);
        let cands = vec![general, specific.clone()];
        assert_eq!(kyburg_select(&cands).unwrap(), &specific);
        assert_eq!(loui_select(&cands).unwrap(), specific.interval);
    }

    #[test]
    fn selection_errors() {
        assert_eq!(kyburg_select(&[]), Err(IntervalError::NoCandidates));
        let other = FrequencyInterval::stated(class("(weekend)"), "(x)".parse().unwrap(), 0.1, 0.2);
        assert_eq!(
            loui_select(&[fi("(weekend)", 0.1, 0.2), other]),
            Err(IntervalError::TargetMismatch)
        );
    }

    #[test]
    fn narrowest_contains_mle_and_grows_with_level() {
        for s in 1..=30u32 {
            for r in 0..=s {
                let mle = f64::from(r) / f64::from(s);
                let mut prev: Option<Interval> = None;
                for c in [0.5, 0.7, 0.8, 0.9, 0.95] {
                    let iv = confidence_interval(s, r, c);
                    assert!(iv.contains(mle), "({s},{r},{c}) {iv:?}");
                    if let Some(p) = prev {
                        assert!(p.within(&iv), "({s},{r}) not monotone at {c}");
                    }
                    prev = Some(iv);
                }
            }
        }
    }

    #[test]
    fn twenty_four_levels_nest_strictly() {
        let wide = confidence_interval(20, 4, 0.9);
        let narrow = confidence_interval(20, 4, 0.7);
        assert!(narrow.within(&wide));
        assert!(wide.lo < narrow.lo && wide.hi > narrow.hi);
    }

    #[test]
    fn degenerate_levels() {
        // with almost no confidence required, only the modal region remains
        let iv = confidence_interval(4, 0, 1e-9);
        assert_eq!(iv.lo, 0.0);
        assert!((iv.hi - 0.2).abs() < 1e-6);
        let w = IntervalRule::Wilson.bounds(4, 0, 1e-9);
        assert!(w.hi < 1e-6);
        assert_eq!(confidence_interval(4, 1, 1.0), Interval::new(0.0, 1.0));
    }

    #[test]
    fn wilson_reference_value() {
        let w = IntervalRule::Wilson.bounds(3, 1, 0.9);
        assert!((w.lo - 0.0782657).abs() < 1e-6, "{w:?}");
        assert!((w.hi - 0.7464661).abs() < 1e-6, "{w:?}");
    }

    #[test]
    fn probability_formatting() {
        assert_eq!(format_prob(0.2), ".2");
        assert_eq!(format_prob(3.0 / 31.0), ".0968");
        assert_eq!(format_prob(1.0), "1");
        assert_eq!(format_prob(0.0), "0");
        assert_eq!(Interval::new(0.06, 0.63).to_string(), "(.06 .63)");
    }

    #[test]
    fn candidates_add_one_level_of_xp() {
        let st = |c: &str, s, r| SampleStatement::new(class(c), jackson(), s, r);
        let samples = vec![
            st("", 20, 4),
            st("(weekend)", 3, 1),
            st("(in-use castor)", 5, 2),
            st("(weekend) (in-use castor)", 2, 1),
        ];
        let c = candidates(&samples, 0.9, IntervalRule::Narrowest);
        assert_eq!(c.len(), 5);
        assert_eq!(c[4].provenance, Provenance::Combined);
        assert!(matches!(&c[4].class, ClassExpr::Xp(a, b) if a == &class("(weekend)") && b == &class("(in-use castor)")));
    }
}
