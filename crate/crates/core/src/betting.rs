//! The betting game: offers, choices, settlement, ledgers, and the
//! report metrics.

use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Neg, Sub};
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::calculi::Belief;

/// Indifference band for point beliefs.
pub const EPSILON: f64 = 1e-12;

const MICROS: i64 = 1_000_000;

/// A signed amount of stake in exact micro-units.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Stake(i64);

impl Stake {
    pub const ZERO: Stake = Stake(0);

    pub fn from_micros(m: i64) -> Self {
        Stake(m)
    }

    /// Rounds to the nearest micro-unit.
    pub fn from_f64(x: f64) -> Self {
        Stake((x * MICROS as f64).round() as i64)
    }

    pub fn units(n: i64) -> Self {
        Stake(n * MICROS)
    }

    pub fn micros(self) -> i64 {
        self.0
    }

    pub fn to_f64(self) -> f64 {
        self.0 as f64 / MICROS as f64
    }

    pub fn is_positive(self) -> bool {
        self.0 > 0
    }
}

impl Add for Stake {
    type Output = Stake;
    fn add(self, o: Stake) -> Stake {
        Stake(self.0 + o.0)
    }
}

impl AddAssign for Stake {
    fn add_assign(&mut self, o: Stake) {
        self.0 += o.0;
    }
}

impl Sub for Stake {
    type Output = Stake;
    fn sub(self, o: Stake) -> Stake {
        Stake(self.0 - o.0)
    }
}

impl Neg for Stake {
    type Output = Stake;
    fn neg(self) -> Stake {
        Stake(-self.0)
    }
}

impl Sum for Stake {
    fn sum<I: Iterator<Item = Stake>>(iter: I) -> Stake {
        iter.fold(Stake::ZERO, Add::add)
    }
}

/// Decimal rendering without trailing zeros: `9`, `-41.5`, `0.25`.
impl fmt::Display for Stake {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = if self.0 < 0 { "-" } else { "" };
        let abs = self.0.unsigned_abs();
        let (int, frac) = (abs / MICROS as u64, abs % MICROS as u64);
        if frac == 0 {
            return write!(f, "{sign}{int}");
        }
        let digits = format!("{frac:06}");
        write!(f, "{sign}{int}.{}", digits.trim_end_matches('0'))
    }
}

impl FromStr for Stake {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        let (neg, body) = match t.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, t),
        };
        let (int, frac) = body.split_once('.').unwrap_or((body, ""));
        let bad = || format!("bad stake `{s}`");
        if (int.is_empty() && frac.is_empty()) || frac.len() > 6 {
            return Err(bad());
        }
        if !int.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) {
            return Err(bad());
        }
        let int: i64 = if int.is_empty() { 0 } else { int.parse().map_err(|_| bad())? };
        let frac: i64 = format!("{frac:0<6}").parse().map_err(|_| bad())?;
        let m = int.checked_mul(MICROS).and_then(|x| x.checked_add(frac)).ok_or_else(bad)?;
        Ok(Stake(if neg { -m } else { m }))
    }
}

impl Serialize for Stake {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(self.to_f64())
    }
}

impl<'de> Deserialize<'de> for Stake {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        f64::deserialize(d).map(Stake::from_f64)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BettingError {
    #[error("pot must be positive, got {0}")]
    Pot(f64),
    #[error("payoff ratio must lie strictly between 0 and 1, got {0}")]
    Ratio(f64),
}

/// Pot `L` at payoff ratio `rho`; the ante is `rho * L`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LotteryOffer {
    pub pot: Stake,
    pub ratio: f64,
}

impl LotteryOffer {
    pub fn new(pot: f64, ratio: f64) -> Result<Self, BettingError> {
        if !(pot.is_finite() && pot > 0.0) {
            return Err(BettingError::Pot(pot));
        }
        if !(ratio > 0.0 && ratio < 1.0) {
            return Err(BettingError::Ratio(ratio));
        }
        Ok(LotteryOffer {
            pot: Stake::from_f64(pot),
            ratio,
        })
    }

    pub fn ante(&self) -> Stake {
        Stake::from_f64(self.ratio * self.pot.to_f64())
    }

    /// What the winning side collects.
    pub fn perfect_gain(&self, target_held: bool) -> Stake {
        if target_held {
            self.pot - self.ante()
        } else {
            self.ante()
        }
    }
}

/// The three options on each offer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Choice {
    /// Offer the pot, collect the ante if the target fails.
    OfferPot,
    /// Place the ante, collect the pot if the target holds.
    Ante,
    Abstain,
}

impl fmt::Display for Choice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Choice::OfferPot => "offer-pot",
            Choice::Ante => "ante",
            Choice::Abstain => "abstain",
        })
    }
}

impl FromStr for Choice {
    type Err = String;

    /// Accepts the kebab-case names or the option numbers 1, 2, 3.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "offer-pot" | "1" => Ok(Choice::OfferPot),
            "ante" | "2" => Ok(Choice::Ante),
            "abstain" | "3" => Ok(Choice::Abstain),
            other => Err(format!("unknown choice `{other}`")),
        }
    }
}

/// Single-shot rational choice.
pub fn decide(b: &Belief, offer: &LotteryOffer) -> Choice {
    let rho = offer.ratio;
    match *b {
        Belief::Point { value } if value > rho + EPSILON => Choice::Ante,
        Belief::Point { value } if value < rho - EPSILON => Choice::OfferPot,
        Belief::Point { .. } => Choice::Abstain,
        Belief::Interval { lo, .. } if lo > rho => Choice::Ante,
        Belief::Interval { hi, .. } if hi < rho => Choice::OfferPot,
        Belief::Interval { .. } => Choice::Abstain,
    }
}

/// Choice when abstaining is not allowed. Intervals act at their midpoint;
/// ties go to `Ante`.
pub fn decide_forced(b: &Belief, offer: &LotteryOffer) -> Choice {
    if b.midpoint() >= offer.ratio - EPSILON {
        Choice::Ante
    } else {
        Choice::OfferPot
    }
}

/// Signed change in stake from playing `choice`.
pub fn settle(choice: Choice, offer: &LotteryOffer, target_held: bool) -> Stake {
    let ante = offer.ante();
    let rest = offer.pot - ante;
    match (choice, target_held) {
        (Choice::Ante, true) => rest,
        (Choice::Ante, false) => -ante,
        (Choice::OfferPot, true) => -rest,
        (Choice::OfferPot, false) => ante,
        (Choice::Abstain, _) => Stake::ZERO,
    }
}

/// Expected value of `Ante` at belief `b`: `L (b - rho)`.
pub fn expected_ante_value(b: f64, offer: &LotteryOffer) -> f64 {
    offer.pot.to_f64() * (b - offer.ratio)
}

/// Running totals for one subject.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ledger {
    pub gains: Stake,
    pub losses: Stake,
    pub abstentions: u32,
    pub bets: u32,
    pub wins: u32,
}

impl Ledger {
    /// Settles and records one choice, returning the delta.
    pub fn record(&mut self, choice: Choice, offer: &LotteryOffer, target_held: bool) -> Stake {
        let delta = settle(choice, offer, target_held);
        if choice == Choice::Abstain {
            self.abstentions += 1;
            return delta;
        }
        self.bets += 1;
        if delta.is_positive() {
            self.gains += delta;
            self.wins += 1;
        } else {
            self.losses += -delta;
        }
        delta
    }

    pub fn net(&self) -> Stake {
        self.gains - self.losses
    }

    /// `gains / (gains + losses)`, undefined before any money moves.
    pub fn yield_rate(&self) -> Option<f64> {
        let total = self.gains + self.losses;
        (total.micros() > 0).then(|| self.gains.micros() as f64 / total.micros() as f64)
    }

    pub fn gain_loss_ratio(&self) -> Option<f64> {
        (self.losses.micros() > 0).then(|| self.gains.micros() as f64 / self.losses.micros() as f64)
    }

    /// Fraction of bets won; undefined with no bets.
    pub fn correctness(&self) -> Option<f64> {
        (self.bets > 0).then(|| f64::from(self.wins) / f64::from(self.bets))
    }

    pub fn merge(&mut self, other: &Ledger) {
        self.gains += other.gains;
        self.losses += other.losses;
        self.abstentions += other.abstentions;
        self.bets += other.bets;
        self.wins += other.wins;
    }
}

/// One report line. Undefined ratios are `None`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub subject: String,
    pub data: String,
    pub net: Stake,
    pub pct_max: Option<f64>,
    pub pct_rel: Option<f64>,
    pub gains: Stake,
    pub losses: Stake,
    pub gain_loss: Option<f64>,
    #[serde(rename = "yield")]
    pub yield_rate: Option<f64>,
    pub abstentions: u32,
}

pub const REPORT_HEADER: &str = "subject\tdata\tnet\t%max\t%rel\tgains\tlosses\tg/l\tyield\t#absts";

/// Builds a row. `perfect` is the sum of the winning side's gain over the
/// queries; `best_net` the highest net among compared subjects.
pub fn metrics(
    subject: impl Into<String>,
    data: impl Into<String>,
    ledger: &Ledger,
    perfect: Stake,
    best_net: Stake,
) -> ReportRow {
    let net = ledger.net();
    let pct = |den: Stake| (den.micros() != 0).then(|| 100.0 * net.micros() as f64 / den.micros() as f64);
    ReportRow {
        subject: subject.into(),
        data: data.into(),
        net,
        pct_max: if perfect.is_positive() { pct(perfect) } else { None },
        pct_rel: pct(best_net),
        gains: ledger.gains,
        losses: ledger.losses,
        gain_loss: ledger.gain_loss_ratio(),
        yield_rate: ledger.yield_rate(),
        abstentions: ledger.abstentions,
    }
}

/// Recomputes `%rel` for every row against the best net among them.
pub fn normalize_rel(rows: &mut [ReportRow]) {
    let Some(best) = rows.iter().map(|r| r.net).max() else {
        return;
    };
    for r in rows {
        r.pct_rel = (best.micros() != 0).then(|| 100.0 * r.net.micros() as f64 / best.micros() as f64);
    }
}

fn opt(x: Option<f64>, f: impl Fn(f64) -> String) -> String {
    x.map(f).unwrap_or_else(|| "-".to_string())
}

fn pct(x: f64) -> String {
    let r = x.round();
    if r == 0.0 { "0".into() } else { format!("{r:.0}") }
}

fn ratio2(x: f64) -> String {
    let s = format!("{x:.2}");
    match s.strip_prefix("0.") {
        Some(rest) => format!(".{rest}"),
        None => s,
    }
}

impl ReportRow {
    pub fn to_tsv(&self) -> String {
        [
            self.subject.clone(),
            self.data.clone(),
            self.net.to_string(),
            opt(self.pct_max, pct),
            opt(self.pct_rel, pct),
            self.gains.to_string(),
            self.losses.to_string(),
            opt(self.gain_loss, ratio2),
            opt(self.yield_rate, ratio2),
            self.abstentions.to_string(),
        ]
        .join("\t")
    }

    /// Parses a line written by [`to_tsv`](Self::to_tsv). Percentages and
    /// ratios come back at their printed precision.
    pub fn from_tsv(line: &str) -> Result<Self, String> {
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 10 {
            return Err(format!("expected 10 columns, found {}", cols.len()));
        }
        let num = |s: &str| -> Result<Option<f64>, String> {
            if s == "-" {
                return Ok(None);
            }
            s.parse::<f64>().map(Some).map_err(|_| format!("bad number `{s}`"))
        };
        Ok(ReportRow {
            subject: cols[0].to_string(),
            data: cols[1].to_string(),
            net: cols[2].parse()?,
            pct_max: num(cols[3])?,
            pct_rel: num(cols[4])?,
            gains: cols[5].parse()?,
            losses: cols[6].parse()?,
            gain_loss: num(cols[7])?,
            yield_rate: num(cols[8])?,
            abstentions: cols[9].parse().map_err(|_| format!("bad count `{}`", cols[9]))?,
        })
    }
}

/// Renders a header line plus one line per row.
pub fn rows_to_tsv(rows: &[ReportRow]) -> String {
    let mut out = String::from(REPORT_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&r.to_tsv());
        out.push('\n');
    }
    out
}

/// A `(net, yield)` point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub net: f64,
    #[serde(rename = "yield")]
    pub yield_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Frontier {
    /// Points no other point beats in both coordinates, by increasing net.
    pub undominated: Vec<Point>,
    /// Vertices of the upper-right convex hull, by increasing net.
    pub hull: Vec<Point>,
}

fn dominates(a: &Point, b: &Point) -> bool {
    a.net >= b.net && a.yield_rate >= b.yield_rate && (a.net > b.net || a.yield_rate > b.yield_rate)
}

pub fn pareto_frontier(points: &[Point]) -> Frontier {
    let mut undominated: Vec<Point> = points
        .iter()
        .filter(|p| !points.iter().any(|q| dominates(q, p)))
        .copied()
        .collect();
    undominated.sort_by(|a, b| a.net.total_cmp(&b.net).then(b.yield_rate.total_cmp(&a.yield_rate)));
    undominated.dedup();

    // Undominated points run down-right; keep the concave chain.
    let mut hull: Vec<Point> = Vec::new();
    for p in &undominated {
        while hull.len() >= 2 {
            let (a, b) = (hull[hull.len() - 2], hull[hull.len() - 1]);
            let cross = (b.net - a.net) * (p.yield_rate - a.yield_rate)
                - (b.yield_rate - a.yield_rate) * (p.net - a.net);
            if cross >= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(*p);
    }
    Frontier { undominated, hull }
}
