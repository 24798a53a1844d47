//! Experiment orchestration: query streams, the repeated betting game,
//! report tables, and the standard sweeps.
//!
//! Every query draws its snapshot, target, announcement, pot, and (for the
//! sweep scheme) ratio from its own generator seeded by `(seed, index)`, so
//! a trace does not depend on thread count or on which methods run.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use rand::seq::{IteratorRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::betting::{
    self, decide, decide_forced, metrics, Choice, Frontier, Ledger, LotteryOffer, Point, ReportRow, Stake,
};
use crate::calculi::{Belief, EvidenceBundle, Method, QueryContext, DEFAULT_CONFIDENCE};
use crate::data::{self, Corpus};
use crate::intervals::{format_prob, IntervalRule};
use crate::prop::{self, Atom, RuleSet, StateDescription};
use crate::refclass::{ClassEnumeration, Summarizer};

/// Ratios are kept this far inside `(0, 1)`.
pub const ODDS_MARGIN: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("{0} must be at least 1")]
    Zero(&'static str),
    #[error("no methods configured")]
    NoMethods,
    #[error("{0} must lie strictly between 0 and 1, got {1}")]
    Level(&'static str, f64),
    #[error("pot {0} is not positive")]
    Pot(f64),
    #[error("odds method {0} is not among the configured methods")]
    OddsMethod(Method),
    #[error("{0}")]
    Other(String),
}

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Data(#[from] data::DataError),
    #[error("snapshot {index} is inconsistent under the rules: {source}")]
    Inconsistent {
        index: usize,
        source: prop::InconsistencyError,
    },
    #[error("no target atoms available")]
    NoTargets,
}

/// How the payoff ratio of each offer is set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OddsScheme {
    Fixed(f64),
    /// The named method's belief (midpoint for intervals).
    PerMethod(Method),
    /// Mean of all methods' beliefs, intervals at their midpoints.
    AverageOfBeliefs,
    /// Uniform draw from a grid of ratios.
    RandomSweep(Vec<f64>),
}

impl OddsScheme {
    pub fn default_grid() -> Vec<f64> {
        (1..=9).map(|i| f64::from(i) / 10.0).collect()
    }
}

impl Default for OddsScheme {
    fn default() -> Self {
        OddsScheme::RandomSweep(OddsScheme::default_grid())
    }
}

impl fmt::Display for OddsScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OddsScheme::Fixed(r) => write!(f, "fixed({})", format_prob(*r)),
            OddsScheme::PerMethod(m) => write!(f, "per-method({m})"),
            OddsScheme::AverageOfBeliefs => write!(f, "average"),
            OddsScheme::RandomSweep(g) => {
                let g: Vec<String> = g.iter().map(|x| format_prob(*x)).collect();
                write!(f, "sweep({})", g.join(","))
            }
        }
    }
}

impl FromStr for OddsScheme {
    type Err = String;

    /// `fixed(.1)`, `per-method(naive-average)`, `average`, `sweep`, or
    /// `sweep(.1,.5,.9)`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        match s {
            "average" | "average-of-beliefs" => return Ok(OddsScheme::AverageOfBeliefs),
            "sweep" | "random-sweep" => return Ok(OddsScheme::default()),
            _ => {}
        }
        let (head, arg) = s
            .split_once('(')
            .and_then(|(h, rest)| rest.strip_suffix(')').map(|a| (h, a)))
            .ok_or_else(|| format!("unknown odds scheme `{s}`"))?;
        let ratio = |x: &str| -> Result<f64, String> {
            let r: f64 = x.trim().parse().map_err(|_| format!("bad ratio `{x}`"))?;
            if r > 0.0 && r < 1.0 {
                Ok(r)
            } else {
                Err(format!("ratio {r} outside (0, 1)"))
            }
        };
        match head {
            "fixed" => Ok(OddsScheme::Fixed(ratio(arg)?)),
            "per-method" => Ok(OddsScheme::PerMethod(arg.parse()?)),
            "sweep" | "random-sweep" => Ok(OddsScheme::RandomSweep(
                arg.split(',').map(ratio).collect::<Result<_, _>>()?,
            )),
            _ => Err(format!("unknown odds scheme `{s}`")),
        }
    }
}

/// Missing fields take their defaults when deserialized.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScenarioConfig {
    pub name: String,
    pub seed: u64,
    /// Snapshots given to the programs.
    pub data_points: usize,
    /// Snapshots held back from the query pool. At least `data_points`;
    /// runs with equal reserve and seed share their query stream, and the
    /// data of the smaller run is a prefix of the larger run's.
    pub data_reserve: Option<usize>,
    pub announced_count: usize,
    pub pots: Vec<f64>,
    pub odds: OddsScheme,
    pub confidence: f64,
    pub dempster_confidence: f64,
    pub rule: IntervalRule,
    pub repetitions: usize,
    pub methods: Vec<Method>,
    pub enumeration: ClassEnumeration,
    pub max_classes: Option<usize>,
    /// Candidate targets; empty means every `logged-on` atom seen in the corpus.
    pub targets: Vec<Atom>,
    /// Bet on every offer; intervals choose a side by midpoint.
    pub forced: bool,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            name: "default".into(),
            seed: 0,
            data_points: 60,
            data_reserve: None,
            announced_count: 3,
            pots: vec![10.0],
            odds: OddsScheme::default(),
            confidence: DEFAULT_CONFIDENCE,
            dempster_confidence: DEFAULT_CONFIDENCE,
            rule: IntervalRule::default(),
            repetitions: 100,
            methods: Method::ALL.to_vec(),
            enumeration: ClassEnumeration::Closed,
            max_classes: Some(32),
            targets: Vec::new(),
            forced: false,
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let level = |name, c: f64| {
            if c > 0.0 && c < 1.0 {
                Ok(())
            } else {
                Err(ConfigError::Level(name, c))
            }
        };
        if self.data_points == 0 {
            return Err(ConfigError::Zero("data_points"));
        }
        if self.announced_count == 0 {
            return Err(ConfigError::Zero("announced_count"));
        }
        if self.repetitions == 0 {
            return Err(ConfigError::Zero("repetitions"));
        }
        if self.pots.is_empty() {
            return Err(ConfigError::Zero("pots"));
        }
        if let Some(p) = self.pots.iter().find(|p| !(p.is_finite() && **p > 0.0)) {
            return Err(ConfigError::Pot(*p));
        }
        if self.methods.is_empty() {
            return Err(ConfigError::NoMethods);
        }
        if let Some(0) = self.max_classes {
            return Err(ConfigError::Zero("max_classes"));
        }
        if self.enumeration == ClassEnumeration::AllSubsets && self.max_classes.is_none() {
            return Err(ConfigError::Other("all-subsets enumeration needs max_classes".into()));
        }
        if self.data_reserve.is_some_and(|r| r < self.data_points) {
            return Err(ConfigError::Other("data_reserve is smaller than data_points".into()));
        }
        level("confidence", self.confidence)?;
        level("dempster_confidence", self.dempster_confidence)?;
        match &self.odds {
            OddsScheme::Fixed(r) => level("ratio", *r)?,
            OddsScheme::RandomSweep(g) => {
                if g.is_empty() {
                    return Err(ConfigError::Zero("odds grid"));
                }
                for r in g {
                    level("ratio", *r)?;
                }
            }
            OddsScheme::PerMethod(m) if !self.methods.contains(m) => {
                return Err(ConfigError::OddsMethod(*m))
            }
            _ => {}
        }
        Ok(())
    }

    fn pot_range(&self) -> (f64, f64) {
        let lo = self.pots.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = self.pots.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        (lo, hi)
    }
}

/// One query as every subject sees it, plus the outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryInstance {
    /// Index of the test snapshot in the corpus.
    pub snapshot: usize,
    pub announced: Vec<Atom>,
    pub target: Atom,
    pub offer: LotteryOffer,
    pub truth: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodOutcome {
    pub method: Method,
    pub belief: Option<Belief>,
    pub choice: Choice,
    pub delta: Stake,
    /// Why the method could not produce a belief; the choice is then `Abstain`.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryTrace {
    pub index: usize,
    pub query: QueryInstance,
    pub samples: usize,
    pub outcomes: Vec<MethodOutcome>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub config: ScenarioConfig,
    /// Sorted by net, best first; `%rel` against the best net.
    pub rows: Vec<ReportRow>,
    pub ledgers: BTreeMap<String, Ledger>,
    pub perfect: Stake,
    pub frontier: Frontier,
    /// First query count after which the ranking by net never changes.
    pub stable_after: Option<usize>,
    /// Whether maximal Dempster abstained at least as often as naive
    /// Dempster; `None` unless both ran.
    pub dempster_abstention_order: Option<bool>,
    pub traces: Vec<QueryTrace>,
}

impl RunReport {
    pub fn ledger(&self, m: Method) -> &Ledger {
        &self.ledgers[&m.to_string()]
    }

    pub fn row(&self, subject: &str) -> Option<&ReportRow> {
        self.rows.iter().find(|r| r.subject == subject)
    }

    pub fn to_tsv(&self) -> String {
        betting::rows_to_tsv(&self.rows)
    }

    pub fn queries(&self) -> Vec<QueryInstance> {
        self.traces.iter().map(|t| t.query.clone()).collect()
    }
}

/// The payoff ratio for one offer.
///
/// `beliefs` pairs each method with its belief, `None` when it failed.
/// Belief-based schemes fall back to the average, then to `.5`, when the
/// beliefs they need are missing. The result lies in
/// `[ODDS_MARGIN, 1 - ODDS_MARGIN]`.
pub fn set_odds(scheme: &OddsScheme, beliefs: &[(Method, Option<Belief>)], rng: &mut impl Rng) -> f64 {
    let average = || {
        let mids: Vec<f64> = beliefs.iter().filter_map(|(_, b)| b.map(|b| b.midpoint())).collect();
        if mids.is_empty() {
            0.5
        } else {
            mids.iter().sum::<f64>() / mids.len() as f64
        }
    };
    let rho = match scheme {
        OddsScheme::Fixed(r) => *r,
        OddsScheme::PerMethod(m) => beliefs
            .iter()
            .find(|(x, _)| x == m)
            .and_then(|(_, b)| b.map(|b| b.midpoint()))
            .unwrap_or_else(average),
        OddsScheme::AverageOfBeliefs => average(),
        OddsScheme::RandomSweep(grid) => *grid.choose(rng).expect("validated grid"),
    };
    rho.clamp(ODDS_MARGIN, 1.0 - ODDS_MARGIN)
}

fn query_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64 + 1);
    rng
}

/// Closed states of a corpus.
pub fn close_corpus(corpus: &Corpus, rules: &RuleSet) -> Result<Vec<StateDescription>, HarnessError> {
    corpus
        .records
        .par_iter()
        .enumerate()
        .map(|(index, r)| r.state(rules).map_err(|source| HarnessError::Inconsistent { index, source }))
        .collect()
}

fn default_targets(states: &[StateDescription]) -> Vec<Atom> {
    let set: BTreeSet<Atom> = states
        .iter()
        .flat_map(|s| s.atoms().iter())
        .filter(|a| a.predicate() == "logged-on" && !a.is_negated())
        .cloned()
        .collect();
    set.into_iter().collect()
}

/// Properties of `state` that may be announced when asking about `target`.
fn announceable(state: &StateDescription, target: &Atom, rules: &RuleSet) -> Vec<Atom> {
    state
        .atoms()
        .iter()
        .filter(|a| !a.is_negated() && !a.is_always_true() && a.positive() != target.positive())
        .filter(|a| {
            prop::close(&StateDescription::new([(*a).clone()]), rules)
                .map(|c| !c.atoms().contains(target) && !c.atoms().contains(&target.complement()))
                .unwrap_or(false)
        })
        .cloned()
        .collect()
}

struct Prepared {
    states: Vec<StateDescription>,
    data: Vec<usize>,
    test: Vec<usize>,
    targets: Vec<Atom>,
}

fn prepare(cfg: &ScenarioConfig, corpus: &Corpus, rules: &RuleSet) -> Result<Prepared, HarnessError> {
    cfg.validate()?;
    let states = close_corpus(corpus, rules)?;
    let reserve = cfg.data_reserve.unwrap_or(cfg.data_points);
    let split = data::split(corpus.len(), reserve, cfg.seed)?;
    let targets = if cfg.targets.is_empty() {
        default_targets(&states)
    } else {
        cfg.targets.clone()
    };
    if targets.is_empty() {
        return Err(HarnessError::NoTargets);
    }
    Ok(Prepared {
        states,
        data: split.data[..cfg.data_points].to_vec(),
        test: split.test,
        targets,
    })
}

fn run_query(
    cfg: &ScenarioConfig,
    p: &Prepared,
    data_states: &[StateDescription],
    summarizer: &Summarizer,
    index: usize,
) -> QueryTrace {
    let mut rng = query_rng(cfg.seed, index);
    let snapshot = *p.test.choose(&mut rng).expect("nonempty test pool");
    let state = &p.states[snapshot];
    let target = p.targets.choose(&mut rng).expect("nonempty targets").clone();
    let pool = announceable(state, &target, &summarizer.rules);
    let mut announced: Vec<Atom> = pool
        .into_iter()
        .choose_multiple(&mut rng, cfg.announced_count);
    announced.sort();
    let pot = *cfg.pots.choose(&mut rng).expect("validated pots");
    let truth = state.holds(&target);

    let announced_set: BTreeSet<Atom> = announced.iter().cloned().collect();
    let bundle = summarizer
        .summarize(data_states, &announced_set, &target)
        .map_err(|e| e.to_string())
        .and_then(|samples| {
            let given = summarizer.given(&announced_set).map_err(|e| e.to_string())?;
            Ok(EvidenceBundle {
                samples,
                given,
                target: target.clone(),
                confidence: cfg.confidence,
                dempster_confidence: cfg.dempster_confidence,
                rule: cfg.rule,
            })
        });
    let ctx = QueryContext {
        pot,
        pot_range: cfg.pot_range(),
    };
    let results: Vec<(Method, Result<Belief, String>)> = cfg
        .methods
        .iter()
        .map(|m| {
            let b = match &bundle {
                Ok(e) => m.evaluate(e, &ctx).map_err(|err| err.to_string()),
                Err(msg) => Err(msg.clone()),
            };
            (*m, b)
        })
        .collect();
    let beliefs: Vec<(Method, Option<Belief>)> =
        results.iter().map(|(m, b)| (*m, b.as_ref().ok().copied())).collect();
    let ratio = set_odds(&cfg.odds, &beliefs, &mut rng);
    let offer = LotteryOffer::new(pot, ratio).expect("validated pot and clamped ratio");

    let outcomes = results
        .into_iter()
        .map(|(method, b)| {
            let (belief, choice, error) = match b {
                Ok(b) => {
                    let c = if cfg.forced { decide_forced(&b, &offer) } else { decide(&b, &offer) };
                    (Some(b), c, None)
                }
                Err(e) => (None, Choice::Abstain, Some(e)),
            };
            MethodOutcome {
                method,
                belief,
                choice,
                delta: betting::settle(choice, &offer, truth),
                error,
            }
        })
        .collect();
    QueryTrace {
        index,
        query: QueryInstance {
            snapshot,
            announced,
            target,
            offer,
            truth,
        },
        samples: bundle.as_ref().map_or(0, |b| b.samples.len()),
        outcomes,
    }
}

/// Runs every configured method over `cfg.repetitions` queries.
pub fn run_scenario(cfg: &ScenarioConfig, corpus: &Corpus, rules: &RuleSet) -> Result<RunReport, HarnessError> {
    let p = prepare(cfg, corpus, rules)?;
    let data_states: Vec<StateDescription> = p.data.iter().map(|&i| p.states[i].clone()).collect();
    let summarizer = Summarizer {
        rules: rules.clone(),
        enumeration: cfg.enumeration,
        max_classes: cfg.max_classes,
    };
    let traces: Vec<QueryTrace> = (0..cfg.repetitions)
        .into_par_iter()
        .map(|i| run_query(cfg, &p, &data_states, &summarizer, i))
        .collect();
    Ok(tabulate(cfg.clone(), traces))
}

/// Sequential reduction of traces into ledgers, rows, and markers.
pub fn tabulate(config: ScenarioConfig, traces: Vec<QueryTrace>) -> RunReport {
    let names: Vec<String> = config.methods.iter().map(Method::to_string).collect();
    let mut ledgers: BTreeMap<String, Ledger> = names.iter().map(|n| (n.clone(), Ledger::default())).collect();
    let mut perfect = Stake::ZERO;
    let mut ranking_changes = 0usize;
    let mut last_ranking: Vec<&str> = Vec::new();
    for (k, t) in traces.iter().enumerate() {
        perfect += t.query.offer.perfect_gain(t.query.truth);
        for o in &t.outcomes {
            let l = ledgers.get_mut(&o.method.to_string()).expect("configured method");
            l.record(o.choice, &t.query.offer, t.query.truth);
        }
        let mut ranking: Vec<&str> = names.iter().map(String::as_str).collect();
        ranking.sort_by(|a, b| ledgers[*b].net().cmp(&ledgers[*a].net()).then(a.cmp(b)));
        if ranking != last_ranking {
            ranking_changes = k + 1;
            last_ranking = ranking;
        }
    }
    let stable_after = (!traces.is_empty()).then_some(ranking_changes);
    let data = config.data_points.to_string();
    let mut rows: Vec<ReportRow> = names
        .iter()
        .map(|n| metrics(n.clone(), data.clone(), &ledgers[n], perfect, Stake::ZERO))
        .collect();
    sort_rows(&mut rows);
    betting::normalize_rel(&mut rows);
    let frontier = betting::pareto_frontier(&frontier_points(&rows));
    let abst = |m: Method| ledgers.get(&m.to_string()).map(|l| l.abstentions);
    let dempster_abstention_order = match (abst(Method::MaximalDempster), abst(Method::NaiveDempster)) {
        (Some(max), Some(naive)) => Some(max >= naive),
        _ => None,
    };
    RunReport {
        config,
        rows,
        ledgers,
        perfect,
        frontier,
        stable_after,
        dempster_abstention_order,
        traces,
    }
}

/// Best net first; ties by subject name.
pub fn sort_rows(rows: &mut [ReportRow]) {
    rows.sort_by(|a, b| b.net.cmp(&a.net).then_with(|| a.subject.cmp(&b.subject)));
}

/// `(net, yield)` of the rows whose yield is defined.
pub fn frontier_points(rows: &[ReportRow]) -> Vec<Point> {
    rows.iter()
        .filter_map(|r| {
            r.yield_rate.map(|y| Point {
                net: r.net.to_f64(),
                yield_rate: y,
            })
        })
        .collect()
}

// ---------------------------------------------------------------------------
// sweeps

/// Kyburg at .7, at .9, and adaptive between them, on one query stream.
pub fn confidence_sweep(cfg: &ScenarioConfig, corpus: &Corpus, rules: &RuleSet) -> Result<RunReport, HarnessError> {
    let cfg = ScenarioConfig {
        methods: vec![
            Method::Kyburg { level: Some(0.7) },
            Method::Kyburg { level: Some(0.9) },
            Method::KyburgAdaptive { lo: 0.7, hi: 0.9 },
        ],
        odds: match &cfg.odds {
            OddsScheme::PerMethod(_) => OddsScheme::AverageOfBeliefs,
            o => o.clone(),
        },
        ..cfg.clone()
    };
    run_scenario(&cfg, corpus, rules)
}

/// One run per announced count, with `%rel` of each method as a
/// percentage of its `%rel` at the first count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnouncedSweep {
    pub counts: Vec<usize>,
    /// Per method, one entry per count; `None` when undefined.
    pub relative: BTreeMap<String, Vec<Option<f64>>>,
    pub runs: Vec<RunReport>,
}

impl AnnouncedSweep {
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("method");
        for c in &self.counts {
            out.push_str(&format!("\t{c} properties"));
        }
        out.push('\n');
        for (m, vals) in &self.relative {
            out.push_str(m);
            for v in vals {
                out.push('\t');
                out.push_str(&v.map_or("-".to_string(), |x| format!("{:.0}", x)));
            }
            out.push('\n');
        }
        out
    }
}

pub fn announced_sweep(
    cfg: &ScenarioConfig,
    counts: &[usize],
    corpus: &Corpus,
    rules: &RuleSet,
) -> Result<AnnouncedSweep, HarnessError> {
    let runs: Vec<RunReport> = counts
        .iter()
        .map(|&k| {
            run_scenario(
                &ScenarioConfig {
                    announced_count: k,
                    ..cfg.clone()
                },
                corpus,
                rules,
            )
        })
        .collect::<Result<_, _>>()?;
    let mut relative = BTreeMap::new();
    for m in &cfg.methods {
        let name = m.to_string();
        let rel: Vec<Option<f64>> = runs.iter().map(|r| r.row(&name).and_then(|x| x.pct_rel)).collect();
        let base = rel.first().copied().flatten();
        let vals = rel
            .iter()
            .map(|x| match (x, base) {
                (Some(x), Some(b)) if b != 0.0 => Some(100.0 * x / b),
                _ => None,
            })
            .collect();
        relative.insert(name, vals);
    }
    Ok(AnnouncedSweep {
        counts: counts.to_vec(),
        relative,
        runs,
    })
}

/// Runs at each data size on a shared query stream. The smaller runs see a
/// prefix of the largest run's data.
pub fn data_size_sweep(
    cfg: &ScenarioConfig,
    sizes: &[usize],
    corpus: &Corpus,
    rules: &RuleSet,
) -> Result<Vec<RunReport>, HarnessError> {
    let reserve = sizes.iter().copied().max().unwrap_or(cfg.data_points).max(cfg.data_reserve.unwrap_or(0));
    sizes
        .iter()
        .map(|&n| {
            run_scenario(
                &ScenarioConfig {
                    data_points: n,
                    data_reserve: Some(reserve),
                    ..cfg.clone()
                },
                corpus,
                rules,
            )
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodCalibration {
    pub method: String,
    pub bets: u32,
    pub wins: u32,
    pub rate: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationReport {
    pub per_method: Vec<MethodCalibration>,
    pub pooled_bets: u32,
    pub pooled_wins: u32,
    pub pooled_rate: f64,
    /// Binomial standard error of the pooled rate under `p = .5`.
    pub standard_error: f64,
    /// `(pooled_rate - .5) / standard_error`
    pub z: f64,
    pub run: RunReport,
}

/// Forced-mode run reporting how often each method guessed right.
pub fn calibration_run(cfg: &ScenarioConfig, corpus: &Corpus, rules: &RuleSet) -> Result<CalibrationReport, HarnessError> {
    let run = run_scenario(
        &ScenarioConfig {
            forced: true,
            ..cfg.clone()
        },
        corpus,
        rules,
    )?;
    let per_method: Vec<MethodCalibration> = cfg
        .methods
        .iter()
        .map(|m| {
            let l = run.ledger(*m);
            MethodCalibration {
                method: m.to_string(),
                bets: l.bets,
                wins: l.wins,
                rate: l.correctness(),
            }
        })
        .collect();
    let pooled_bets: u32 = per_method.iter().map(|m| m.bets).sum();
    let pooled_wins: u32 = per_method.iter().map(|m| m.wins).sum();
    let n = f64::from(pooled_bets.max(1));
    let pooled_rate = f64::from(pooled_wins) / n;
    let standard_error = (0.25 / n).sqrt();
    Ok(CalibrationReport {
        per_method,
        pooled_bets,
        pooled_wins,
        pooled_rate,
        standard_error,
        z: (pooled_rate - 0.5) / standard_error,
        run,
    })
}
