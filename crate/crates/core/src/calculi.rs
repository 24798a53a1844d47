//! Belief calculi.
//!
//! Every method maps the same [`EvidenceBundle`] (sample statements for one
//! query) to a [`Belief`]. Point methods: naive average, maximal average,
//! similarity. Interval methods: naive and maximal Dempster combination,
//! Kyburg, and Loui.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::intervals::{self, FrequencyInterval, Interval, IntervalError, IntervalRule, TOLERANCE};
use crate::prop::Atom;
use crate::refclass::{common_count, more_specific, SampleStatement};

/// Default confidence level for interval construction.
pub const DEFAULT_CONFIDENCE: f64 = 0.9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CalculusError {
    #[error("evidence bundle has no samples")]
    NoSamples,
    #[error("no sampled class shares a property with the given set")]
    ZeroWeight,
    #[error("total conflict between mass functions")]
    TotalConflict,
    #[error("no general-class sample to fall back on")]
    NoGeneralClass,
    #[error(transparent)]
    Interval(#[from] IntervalError),
}

/// Degree of belief: a point or a closed interval within `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Belief {
    Point { value: f64 },
    Interval { lo: f64, hi: f64 },
}

impl Belief {
    pub fn point(value: f64) -> Self {
        debug_assert!((0.0..=1.0).contains(&value), "belief {value} outside [0, 1]");
        Belief::Point { value }
    }

    pub fn interval(iv: Interval) -> Self {
        Belief::Interval { lo: iv.lo, hi: iv.hi }
    }

    pub fn lo(&self) -> f64 {
        match *self {
            Belief::Point { value } => value,
            Belief::Interval { lo, .. } => lo,
        }
    }

    pub fn hi(&self) -> f64 {
        match *self {
            Belief::Point { value } => value,
            Belief::Interval { hi, .. } => hi,
        }
    }

    /// The point itself, or the midpoint of an interval.
    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lo() + self.hi())
    }

    pub fn is_interval(&self) -> bool {
        matches!(self, Belief::Interval { .. })
    }
}

impl fmt::Display for Belief {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Belief::Point { value } => write!(f, "{}", intervals::format_prob(value)),
            Belief::Interval { lo, hi } => write!(f, "{}", Interval::new(lo, hi)),
        }
    }
}

/// Mass on `{target}`, `{not target}`, and the whole frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MassFunction {
    pub yes: f64,
    pub no: f64,
    pub theta: f64,
}

impl MassFunction {
    pub const VACUOUS: MassFunction = MassFunction {
        yes: 0.0,
        no: 0.0,
        theta: 1.0,
    };

    pub fn belief(&self) -> f64 {
        self.yes
    }

    pub fn plausibility(&self) -> f64 {
        self.yes + self.theta
    }

    /// `[belief, plausibility]`
    pub fn to_interval(&self) -> Interval {
        let lo = self.yes.clamp(0.0, 1.0);
        Interval::new(lo, self.plausibility().clamp(lo, 1.0))
    }
}

/// `[lo, hi]` becomes masses `lo`, `1 - hi`, `hi - lo`.
pub fn interval_to_mass(iv: Interval) -> MassFunction {
    MassFunction {
        yes: iv.lo,
        no: 1.0 - iv.hi,
        theta: iv.hi - iv.lo,
    }
}

/// Dempster's rule on the binary frame.
pub fn dempster_combine(a: &MassFunction, b: &MassFunction) -> Result<MassFunction, CalculusError> {
    let conflict = a.yes * b.no + a.no * b.yes;
    let norm = 1.0 - conflict;
    if norm <= TOLERANCE {
        return Err(CalculusError::TotalConflict);
    }
    Ok(MassFunction {
        yes: (a.yes * b.yes + a.yes * b.theta + a.theta * b.yes) / norm,
        no: (a.no * b.no + a.no * b.theta + a.theta * b.no) / norm,
        theta: a.theta * b.theta / norm,
    })
}

/// Input shared by every calculus for one query.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvidenceBundle {
    pub samples: Vec<SampleStatement>,
    /// Closed announced properties, including `(always-true)`.
    pub given: BTreeSet<Atom>,
    pub target: Atom,
    /// Level for the Kyburg and Loui intervals.
    pub confidence: f64,
    /// Level for the intervals fed to Dempster combination.
    pub dempster_confidence: f64,
    pub rule: IntervalRule,
}

impl EvidenceBundle {
    pub fn new(samples: Vec<SampleStatement>, given: BTreeSet<Atom>, target: Atom) -> Self {
        EvidenceBundle {
            samples,
            given,
            target,
            confidence: DEFAULT_CONFIDENCE,
            dempster_confidence: DEFAULT_CONFIDENCE,
            rule: IntervalRule::default(),
        }
    }

    pub fn with_confidence(mut self, c: f64) -> Self {
        self.confidence = c;
        self
    }

    fn nonempty(&self) -> Result<&[SampleStatement], CalculusError> {
        if self.samples.is_empty() {
            Err(CalculusError::NoSamples)
        } else {
            Ok(&self.samples)
        }
    }
}

/// Samples whose class has no strictly more specific sampled class.
pub fn maximal_samples(samples: &[SampleStatement]) -> Vec<&SampleStatement> {
    samples
        .iter()
        .filter(|s| !samples.iter().any(|o| more_specific(&o.class, &s.class)))
        .collect()
}

fn mean_frequency<'a>(it: impl Iterator<Item = &'a SampleStatement>) -> f64 {
    let (sum, n) = it.fold((0.0, 0usize), |(s, n), st| (s + st.frequency(), n + 1));
    sum / n as f64
}

pub fn naive_average(e: &EvidenceBundle) -> Result<Belief, CalculusError> {
    Ok(Belief::point(mean_frequency(e.nonempty()?.iter())))
}

pub fn maximal_average(e: &EvidenceBundle) -> Result<Belief, CalculusError> {
    Ok(Belief::point(mean_frequency(
        maximal_samples(e.nonempty()?).into_iter(),
    )))
}

/// `sum(w_i r_i) / sum(w_i s_i)` with `w_i` the common-property count.
pub fn similarity(e: &EvidenceBundle) -> Result<Belief, CalculusError> {
    let (num, den) = e.nonempty()?.iter().fold((0u64, 0u64), |(n, d), st| {
        let w = common_count(&st.class, &e.given) as u64;
        (n + w * u64::from(st.r), d + w * u64::from(st.s))
    });
    if den == 0 {
        return Err(CalculusError::ZeroWeight);
    }
    Ok(Belief::point(num as f64 / den as f64))
}

fn dempster_over<'a>(
    samples: impl Iterator<Item = &'a SampleStatement>,
    e: &EvidenceBundle,
) -> Result<Belief, CalculusError> {
    let mut sources: Vec<&SampleStatement> = samples.collect();
    sources.sort_by(|a, b| a.class.cmp(&b.class));
    let mut acc = MassFunction::VACUOUS;
    for st in sources {
        let iv = e.rule.bounds(st.s, st.r, e.dempster_confidence);
        acc = dempster_combine(&acc, &interval_to_mass(iv))?;
    }
    Ok(Belief::interval(acc.to_interval()))
}

pub fn naive_dempster(e: &EvidenceBundle) -> Result<Belief, CalculusError> {
    dempster_over(e.nonempty()?.iter(), e)
}

pub fn maximal_dempster(e: &EvidenceBundle) -> Result<Belief, CalculusError> {
    dempster_over(maximal_samples(e.nonempty()?).into_iter(), e)
}

/// Kyburg selection over sample intervals and their XP combinations.
///
/// When every candidate is eliminated, the general class's interval is used.
pub fn kyburg_belief(e: &EvidenceBundle) -> Result<Belief, CalculusError> {
    let cands = intervals::candidates(e.nonempty()?, e.confidence, e.rule);
    match intervals::kyburg_select(&cands) {
        Ok(fi) => Ok(Belief::interval(fi.interval)),
        Err(IntervalError::NoConsideredInterval) => general_interval(&cands),
        Err(err) => Err(err.into()),
    }
}

fn general_interval(cands: &[FrequencyInterval]) -> Result<Belief, CalculusError> {
    cands
        .iter()
        .find(|c| c.class.is_always_true())
        .map(|c| Belief::interval(c.interval))
        .ok_or(CalculusError::NoGeneralClass)
}

pub fn loui_belief(e: &EvidenceBundle) -> Result<Belief, CalculusError> {
    let cands = intervals::candidates(e.nonempty()?, e.confidence, e.rule);
    Ok(Belief::interval(intervals::loui_select(&cands)?))
}

/// Confidence level falling linearly from `c_hi` at pot `l_min` to `c_lo`
/// at pot `l_max`; clamped outside that range. With `l_min == l_max` the
/// level is the midpoint of the two.
pub fn adaptive_confidence(pot: f64, c_lo: f64, c_hi: f64, l_min: f64, l_max: f64) -> f64 {
    if l_max <= l_min {
        return 0.5 * (c_lo + c_hi);
    }
    let t = ((pot - l_min) / (l_max - l_min)).clamp(0.0, 1.0);
    c_hi + (c_lo - c_hi) * t
}

// ---------------------------------------------------------------------------
// registry

/// Lottery information some methods condition on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QueryContext {
    pub pot: f64,
    /// Smallest and largest pot in the scenario.
    pub pot_range: (f64, f64),
}

/// A registered calculus, addressable by name.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Method {
    NaiveAverage,
    MaximalAverage,
    Similarity,
    NaiveDempster,
    MaximalDempster,
    /// Kyburg at the bundle's level, or at a fixed level when given.
    Kyburg { level: Option<f64> },
    /// Kyburg with the level interpolated from the pot size.
    KyburgAdaptive { lo: f64, hi: f64 },
    Loui,
}

impl Method {
    /// The registered methods, in display order.
    pub const ALL: [Method; 8] = [
        Method::NaiveAverage,
        Method::MaximalAverage,
        Method::Similarity,
        Method::NaiveDempster,
        Method::MaximalDempster,
        Method::Kyburg { level: None },
        Method::KyburgAdaptive { lo: 0.7, hi: 0.9 },
        Method::Loui,
    ];

    pub fn is_interval(&self) -> bool {
        !matches!(
            self,
            Method::NaiveAverage | Method::MaximalAverage | Method::Similarity
        )
    }

    pub fn evaluate(&self, e: &EvidenceBundle, ctx: &QueryContext) -> Result<Belief, CalculusError> {
        match *self {
            Method::NaiveAverage => naive_average(e),
            Method::MaximalAverage => maximal_average(e),
            Method::Similarity => similarity(e),
            Method::NaiveDempster => naive_dempster(e),
            Method::MaximalDempster => maximal_dempster(e),
            Method::Kyburg { level: None } => kyburg_belief(e),
            Method::Kyburg { level: Some(c) } => kyburg_belief(&e.clone().with_confidence(c)),
            Method::KyburgAdaptive { lo, hi } => {
                let c = adaptive_confidence(ctx.pot, lo, hi, ctx.pot_range.0, ctx.pot_range.1);
                kyburg_belief(&e.clone().with_confidence(c))
            }
            Method::Loui => loui_belief(e),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let p = intervals::format_prob;
        match *self {
            Method::NaiveAverage => write!(f, "naive-average"),
            Method::MaximalAverage => write!(f, "maximal-average"),
            Method::Similarity => write!(f, "similarity"),
            Method::NaiveDempster => write!(f, "naive-dempster"),
            Method::MaximalDempster => write!(f, "maximal-dempster"),
            Method::Kyburg { level: None } => write!(f, "kyburg"),
            Method::Kyburg { level: Some(c) } => write!(f, "kyburg({})", p(c)),
            Method::KyburgAdaptive { lo, hi } if lo == 0.7 && hi == 0.9 => {
                write!(f, "kyburg-adaptive")
            }
            Method::KyburgAdaptive { lo, hi } => write!(f, "kyburg({},{})", p(lo), p(hi)),
            Method::Loui => write!(f, "loui"),
        }
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let name = s.trim();
        let fixed = match name {
            "naive-average" => Some(Method::NaiveAverage),
            "maximal-average" => Some(Method::MaximalAverage),
            "similarity" => Some(Method::Similarity),
            "naive-dempster" => Some(Method::NaiveDempster),
            "maximal-dempster" => Some(Method::MaximalDempster),
            "kyburg" => Some(Method::Kyburg { level: None }),
            "kyburg-adaptive" => Some(Method::KyburgAdaptive { lo: 0.7, hi: 0.9 }),
            "loui" => Some(Method::Loui),
            _ => None,
        };
        if let Some(m) = fixed {
            return Ok(m);
        }
        let args = name
            .strip_prefix("kyburg(")
            .and_then(|r| r.strip_suffix(')'))
            .ok_or_else(|| format!("unknown method `{name}`"))?;
        let levels: Vec<f64> = args
            .split(',')
            .map(|x| x.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|_| format!("bad confidence level in `{name}`"))?;
        let ok = |c: f64| c > 0.0 && c < 1.0;
        match levels[..] {
            [c] if ok(c) => Ok(Method::Kyburg { level: Some(c) }),
            [lo, hi] if ok(lo) && ok(hi) && lo < hi => Ok(Method::KyburgAdaptive { lo, hi }),
            _ => Err(format!("bad confidence level in `{name}`")),
        }
    }
}

impl TryFrom<String> for Method {
    type Error = String;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<Method> for String {
    fn from(m: Method) -> String {
        m.to_string()
    }
}
