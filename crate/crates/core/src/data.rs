//! Snapshot corpora, the synthetic network-usage generator, and run
//! persistence.
//!
//! A corpus file is line oriented:
//!
//! ```text
//! # evtestbed corpus v1
//! # source: synthetic
//! 1987-03-02T13:45:10	(day) (on 'cox 'antares) (weekday)
//! ```
//!
//! Atoms are stored raw; rules are applied when a record is turned into a
//! state with [`SnapshotRecord::state`].

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use chrono::{Datelike, Duration, NaiveDateTime, Timelike, Weekday};
use rand::distributions::{Distribution, WeightedIndex};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::prop::{self, Atom, InconsistencyError, ParseError, Rule, RuleSet, StateDescription, Vocabulary};

pub const CORPUS_HEADER: &str = "# evtestbed corpus v1";
const TIME_FORMAT: &str = "%Y-%m-%dT%H:%M:%S";

#[derive(Debug, Error)]
pub enum DataError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{path}:{source}")]
    Parse { path: PathBuf, source: ParseError },
    #[error("corpus has {have} records; {need} data points need at least one more")]
    TooSmall { have: usize, need: usize },
}

impl DataError {
    pub fn is_io(&self) -> bool {
        matches!(self, DataError::Io { .. })
    }
}

pub fn read_file(path: &Path) -> Result<String, DataError> {
    fs::read_to_string(path).map_err(|source| DataError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn write_file(path: &Path, text: &str) -> Result<(), DataError> {
    fs::write(path, text).map_err(|source| DataError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn parse_at(path: &Path) -> impl Fn(ParseError) -> DataError + '_ {
    move |source| DataError::Parse {
        path: path.to_path_buf(),
        source,
    }
}

// ---------------------------------------------------------------------------
// records

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    #[default]
    Synthetic,
    Imported,
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Source::Synthetic => "synthetic",
            Source::Imported => "imported",
        })
    }
}

impl FromStr for Source {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "synthetic" => Ok(Source::Synthetic),
            "imported" => Ok(Source::Imported),
            _ => Err(format!("unknown source `{s}`")),
        }
    }
}

/// One observation of the network.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SnapshotRecord {
    pub timestamp: NaiveDateTime,
    /// Atoms as observed, before closure.
    pub atoms: Vec<Atom>,
    pub source: Source,
}

impl SnapshotRecord {
    pub fn state(&self, rules: &RuleSet) -> Result<StateDescription, InconsistencyError> {
        prop::close(&StateDescription::new(self.atoms.iter().cloned()), rules)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Corpus {
    pub source: Source,
    pub records: Vec<SnapshotRecord>,
}

/// Splits a line into top-level atom texts with their byte offsets.
fn atom_chunks(s: &str) -> Result<Vec<(usize, &str)>, ParseError> {
    let mut out = Vec::new();
    let mut depth = 0usize;
    let mut start = None;
    for (i, ch) in s.char_indices() {
        match ch {
            '!' if depth == 0 && start.is_none() => start = Some(i),
            '(' => {
                if depth == 0 && start.is_none() {
                    start = Some(i);
                }
                depth += 1;
            }
            ')' => {
                if depth == 0 {
                    return Err(ParseError::new(i + 1, "unbalanced `)`"));
                }
                depth -= 1;
                if depth == 0 {
                    let b = start.take().unwrap_or(i);
                    out.push((b, &s[b..=i]));
                }
            }
            c if c.is_whitespace() => {}
            c if depth == 0 && start.is_none() => {
                return Err(ParseError::new(i + 1, format!("unexpected `{c}` outside an atom")));
            }
            _ => {}
        }
    }
    if depth != 0 || start.is_some() {
        return Err(ParseError::new(s.len() + 1, "unterminated atom"));
    }
    Ok(out)
}

impl Corpus {
    /// Parses corpus text, checking every atom against `vocab`.
    pub fn parse(text: &str, vocab: &Vocabulary) -> Result<Self, ParseError> {
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, h)) if h.trim_end() == CORPUS_HEADER => {}
            Some((_, h)) if h.starts_with("# evtestbed corpus") => {
                return Err(ParseError::new(1, format!("unsupported corpus version `{h}`")))
            }
            _ => return Err(ParseError::new(1, format!("missing header `{CORPUS_HEADER}`"))),
        }
        let mut corpus = Corpus::default();
        for (i, line) in lines {
            let lineno = i + 1;
            let at = |e: ParseError| e.at_line(lineno);
            if let Some(rest) = line.strip_prefix("# source:") {
                corpus.source = rest.trim().parse().map_err(|m: String| at(ParseError::new(1, m)))?;
                continue;
            }
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let (ts, body) = line
                .split_once('\t')
                .ok_or_else(|| at(ParseError::new(1, "expected `timestamp<TAB>atoms`")))?;
            let timestamp = NaiveDateTime::parse_from_str(ts, TIME_FORMAT)
                .map_err(|e| at(ParseError::new(1, format!("bad timestamp `{ts}`: {e}"))))?;
            let offset = ts.len() + 1;
            let mut atoms = Vec::new();
            for (pos, chunk) in atom_chunks(body).map_err(|e| at(shift(e, offset)))? {
                let col = offset + pos + 1;
                let atom: Atom = chunk.parse().map_err(|e: ParseError| at(shift(e, col - 1)))?;
                vocab.check(&atom).map_err(|m| at(ParseError::new(col, m)))?;
                atoms.push(atom);
            }
            corpus.records.push(SnapshotRecord {
                timestamp,
                atoms,
                source: corpus.source,
            });
        }
        for r in &mut corpus.records {
            r.source = corpus.source;
        }
        Ok(corpus)
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("{CORPUS_HEADER}\n# source: {}\n", self.source);
        for r in &self.records {
            out.push_str(&r.timestamp.format(TIME_FORMAT).to_string());
            out.push('\t');
            let atoms: Vec<String> = r.atoms.iter().map(Atom::to_string).collect();
            out.push_str(&atoms.join(" "));
            out.push('\n');
        }
        out
    }

    pub fn load(path: &Path, vocab: &Vocabulary) -> Result<Self, DataError> {
        Corpus::parse(&read_file(path)?, vocab).map_err(parse_at(path))
    }

    pub fn store(&self, path: &Path) -> Result<(), DataError> {
        write_file(path, &self.to_text())
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

fn shift(mut e: ParseError, by: usize) -> ParseError {
    e.column += by;
    e
}

/// Indices of the records given to the programs as data and of the records
/// queries may be drawn from. The two never overlap. `data` is in draw
/// order, so a prefix is itself a random subset.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub data: Vec<usize>,
    pub test: Vec<usize>,
}

pub fn split(records: usize, data_points: usize, seed: u64) -> Result<Split, DataError> {
    if data_points == 0 || records <= data_points {
        return Err(DataError::TooSmall {
            have: records,
            need: data_points,
        });
    }
    let mut idx: Vec<usize> = (0..records).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let data = idx[..data_points].to_vec();
    let mut test = idx[data_points..].to_vec();
    test.sort_unstable();
    Ok(Split { data, test })
}

// ---------------------------------------------------------------------------
// line-delimited JSON

pub fn write_jsonl<T: Serialize>(mut w: impl Write, items: &[T]) -> io::Result<()> {
    for it in items {
        serde_json::to_writer(&mut w, it)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_jsonl<T: DeserializeOwned>(text: &str) -> Result<Vec<T>, ParseError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| ParseError::new(e.column(), e.to_string()).at_line(i + 1))
        })
        .collect()
}

// ---------------------------------------------------------------------------
// generator

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserModel {
    pub name: String,
    /// Probability of being logged on at a weekday daytime snapshot.
    pub rate: f64,
    /// Rate multiplier on weekend days.
    pub weekend: f64,
    /// Rate multiplier during night hours.
    pub night: f64,
}

/// A nightly backup that keeps the host busy for hours. Its owner is
/// logged on only while starting it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackupModel {
    pub owner: String,
    pub host: String,
    /// Probability that a given day has a backup.
    pub rate: f64,
    pub start_hour: u32,
    pub hours: u32,
    /// Owner's logon probability during the first hour of a backup.
    pub owner_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorModel {
    pub seed: u64,
    pub start: NaiveDateTime,
    pub span_days: u32,
    pub weekend_days: Vec<Weekday>,
    /// Night is `night_hours.0 <= hour < night_hours.1`.
    pub night_hours: (u32, u32),
    pub users: Vec<UserModel>,
    /// Machines with their relative assignment weights.
    pub machines: Vec<(String, f64)>,
    /// Symmetric: keys are stored with the names in sorted order. A logon
    /// probability is multiplied by `1 + w` for each partner already on.
    pub affinity: BTreeMap<(String, String), f64>,
    pub backup: Option<BackupModel>,
    pub uucp_rate: f64,
}

fn pair(a: &str, b: &str) -> (String, String) {
    if a <= b {
        (a.to_string(), b.to_string())
    } else {
        (b.to_string(), a.to_string())
    }
}

impl Default for GeneratorModel {
    /// Synthetic defaults. No parameter here was measured on a real network.
    fn default() -> Self {
        let u = |name: &str, rate, weekend, night| UserModel {
            name: name.into(),
            rate,
            weekend,
            night,
        };
        let affinity = [
            ("marsh", "jackson", 1.2),
            ("cox", "jackson", 0.6),
            ("marsh", "cox", 0.5),
            ("lata", "hollis", 0.8),
            ("parr", "ng", 0.4),
        ]
        .into_iter()
        .map(|(a, b, w)| (pair(a, b), w))
        .collect();
        GeneratorModel {
            seed: 1,
            start: NaiveDateTime::parse_from_str("1987-03-02T00:00:00", TIME_FORMAT).unwrap(),
            span_days: 70,
            weekend_days: vec![Weekday::Sun],
            night_hours: (0, 7),
            users: vec![
                u("marsh", 0.40, 0.5, 0.3),
                u("cox", 0.45, 0.6, 0.2),
                u("jackson", 0.30, 0.4, 0.3),
                u("cheng", 0.20, 0.3, 0.1),
                u("lata", 0.35, 0.2, 0.4),
                u("hollis", 0.25, 0.5, 0.2),
                u("ng", 0.30, 0.1, 0.1),
                u("parr", 0.15, 1.5, 0.6),
            ],
            machines: vec![
                ("castor".into(), 3.0),
                ("antares".into(), 2.0),
                ("lesath".into(), 2.0),
                ("pollux".into(), 1.0),
                ("vega".into(), 1.0),
                ("rigel".into(), 1.0),
            ],
            affinity,
            backup: Some(BackupModel {
                owner: "cheng".into(),
                host: "castor".into(),
                rate: 0.85,
                start_hour: 1,
                hours: 9,
                owner_rate: 0.9,
            }),
            uucp_rate: 0.15,
        }
    }
}

/// Predicates the generator emits or the default rules derive.
pub const NULLARY_PREDICATES: [&str; 10] = [
    "weekend",
    "weekday",
    "night",
    "day",
    "backup-somewhere",
    "uucp-active",
    "few-network-users",
    "some-network-users",
    "many-network-users",
    "very-many-network-users",
];

fn quantity(n: usize) -> &'static str {
    match n {
        0..=1 => "few-network-users",
        2..=3 => "some-network-users",
        4..=5 => "many-network-users",
        _ => "very-many-network-users",
    }
}

fn weekday_name(d: Weekday) -> &'static str {
    match d {
        Weekday::Mon => "mon",
        Weekday::Tue => "tue",
        Weekday::Wed => "wed",
        Weekday::Thu => "thu",
        Weekday::Fri => "fri",
        Weekday::Sat => "sat",
        Weekday::Sun => "sun",
    }
}

impl GeneratorModel {
    pub fn user(&self, name: &str) -> Option<&UserModel> {
        self.users.iter().find(|u| u.name == name)
    }

    pub fn affinity_of(&self, a: &str, b: &str) -> f64 {
        self.affinity.get(&pair(a, b)).copied().unwrap_or(0.0)
    }

    pub fn vocabulary(&self) -> Vocabulary {
        let mut v = Vocabulary::new();
        for p in NULLARY_PREDICATES {
            v.add_predicate(p, 0);
        }
        v.add_predicate("logged-on", 1).add_predicate("in-use", 1).add_predicate("on", 2);
        for u in &self.users {
            v.add_constant(u.name.clone());
        }
        for (m, _) in &self.machines {
            v.add_constant(m.clone());
        }
        v
    }

    /// Day-type exclusions, quantity ordering, and what `on` and a backup
    /// imply about logons and machines.
    pub fn rules(&self) -> RuleSet {
        let mut rs = RuleSet::default();
        let mut add = |body: Vec<Atom>, head: Vec<Atom>| rs.push(Rule::new(body, head).expect("valid rule"));
        for (x, y) in [("weekend", "weekday"), ("night", "day")] {
            add(vec![Atom::prop(x)], vec![Atom::prop(y).complement()]);
            add(vec![Atom::prop(y)], vec![Atom::prop(x).complement()]);
        }
        let q = ["few-network-users", "some-network-users", "many-network-users"];
        for (i, x) in q.iter().enumerate() {
            let others = q.iter().enumerate().filter(|&(j, _)| j != i);
            add(vec![Atom::prop(*x)], others.map(|(_, o)| Atom::prop(*o).complement()).collect());
        }
        add(vec![Atom::prop("very-many-network-users")], vec![Atom::prop("many-network-users")]);
        if let Some(b) = &self.backup {
            add(vec![Atom::prop("backup-somewhere")], vec![Atom::new("in-use", [b.host.as_str()])]);
        }
        for u in &self.users {
            for (m, _) in &self.machines {
                add(
                    vec![Atom::new("on", [u.name.as_str(), m.as_str()])],
                    vec![Atom::new("logged-on", [u.name.as_str()]), Atom::new("in-use", [m.as_str()])],
                );
            }
        }
        rs
    }

    /// Rule file text for [`rules`](Self::rules).
    pub fn rules_text(&self) -> String {
        format!(
            "# Default rules for the synthetic network model.\n\
             # Reconstructed for the generator; the original rule base is not available.\n{}",
            self.rules().to_text()
        )
    }

    pub fn validate(&self) -> Result<(), String> {
        let unit = |name: &str, x: f64| {
            if (0.0..=1.0).contains(&x) {
                Ok(())
            } else {
                Err(format!("{name} = {x} is outside [0, 1]"))
            }
        };
        let nonneg = |name: &str, x: f64| {
            if x >= 0.0 && x.is_finite() {
                Ok(())
            } else {
                Err(format!("{name} = {x} must be a nonnegative number"))
            }
        };
        if self.users.is_empty() || self.machines.is_empty() {
            return Err("model needs at least one user and one machine".into());
        }
        if self.span_days == 0 {
            return Err("span_days must be positive".into());
        }
        if self.night_hours.0 > self.night_hours.1 || self.night_hours.1 > 24 {
            return Err("night_hours must be `a-b` with a <= b <= 24".into());
        }
        let mut names = BTreeSet::new();
        for u in &self.users {
            if !names.insert(u.name.as_str()) {
                return Err(format!("user `{}` declared twice", u.name));
            }
            unit(&format!("rate.{}", u.name), u.rate)?;
            nonneg(&format!("weekend.{}", u.name), u.weekend)?;
            nonneg(&format!("night.{}", u.name), u.night)?;
        }
        for (m, w) in &self.machines {
            if names.contains(m.as_str()) {
                return Err(format!("`{m}` is both a user and a machine"));
            }
            nonneg(&format!("weight of {m}"), *w)?;
        }
        if self.machines.iter().all(|(_, w)| *w == 0.0) {
            return Err("machine weights are all zero".into());
        }
        for ((a, b), w) in &self.affinity {
            if self.user(a).is_none() || self.user(b).is_none() || a == b {
                return Err(format!("affinity between unknown or identical users `{a}`, `{b}`"));
            }
            if !(*w >= -1.0 && w.is_finite()) {
                return Err(format!("affinity.{a}.{b} = {w} must be at least -1"));
            }
        }
        if let Some(b) = &self.backup {
            unit("backup.rate", b.rate)?;
            unit("backup.owner_rate", b.owner_rate)?;
            if self.user(&b.owner).is_none() {
                return Err(format!("backup owner `{}` is not a user", b.owner));
            }
            if !self.machines.iter().any(|(m, _)| *m == b.host) {
                return Err(format!("backup host `{}` is not a machine", b.host));
            }
            if b.start_hour >= 24 || b.hours == 0 || b.hours > 24 {
                return Err("backup window must start before hour 24 and last 1 to 24 hours".into());
            }
        }
        unit("uucp.rate", self.uucp_rate)
    }

    fn backup_active(&self, days: &[bool], offset_secs: i64) -> (bool, bool) {
        let Some(b) = &self.backup else {
            return (false, false);
        };
        let hour_index = offset_secs / 3600;
        let start = i64::from(b.start_hour);
        let h = i64::from(b.hours);
        // A backup started on day d covers hours [24d + start, 24d + start + hours).
        let mut active = false;
        let mut first_hour = false;
        for d in [hour_index.div_euclid(24), hour_index.div_euclid(24) - 1] {
            if d < 0 || d as usize >= days.len() || !days[d as usize] {
                continue;
            }
            let from = 24 * d + start;
            if hour_index >= from && hour_index < from + h {
                active = true;
                first_hour |= hour_index == from;
            }
        }
        (active, first_hour)
    }

    /// Draws `n` snapshots at uniformly random times in the model's window.
    pub fn generate(&self, n: usize) -> Corpus {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let days: Vec<bool> = {
            let mut day_rng = ChaCha8Rng::seed_from_u64(self.seed ^ 0x5eed_bac0);
            let rate = self.backup.as_ref().map_or(0.0, |b| b.rate);
            (0..self.span_days).map(|_| day_rng.gen_bool(rate)).collect()
        };
        let weights = WeightedIndex::new(self.machines.iter().map(|(_, w)| *w)).expect("validated weights");
        let span = i64::from(self.span_days) * 86_400;
        let mut records = Vec::with_capacity(n);
        for _ in 0..n {
            let offset = rng.gen_range(0..span);
            let timestamp = self.start + Duration::seconds(offset);
            let weekend = self.weekend_days.contains(&timestamp.weekday());
            let hour = timestamp.hour();
            let night = hour >= self.night_hours.0 && hour < self.night_hours.1;
            let (backup, backup_start) = self.backup_active(&days, offset);
            let uucp = rng.gen_bool(self.uucp_rate);

            let mut atoms = BTreeSet::new();
            atoms.insert(Atom::prop(if weekend { "weekend" } else { "weekday" }));
            atoms.insert(Atom::prop(if night { "night" } else { "day" }));
            if backup {
                atoms.insert(Atom::prop("backup-somewhere"));
            }
            if uucp {
                atoms.insert(Atom::prop("uucp-active"));
            }
            let mut on: Vec<&str> = Vec::new();
            for u in &self.users {
                let mut p = u.rate;
                if weekend {
                    p *= u.weekend;
                }
                if night {
                    p *= u.night;
                }
                if backup_start && self.backup.as_ref().is_some_and(|b| b.owner == u.name) {
                    p = p.max(self.backup.as_ref().unwrap().owner_rate);
                }
                for v in &on {
                    p *= 1.0 + self.affinity_of(&u.name, v);
                }
                if rng.gen_bool(p.clamp(0.0, 1.0)) {
                    let m = &self.machines[weights.sample(&mut rng)].0;
                    atoms.insert(Atom::new("on", [u.name.as_str(), m.as_str()]));
                    on.push(&u.name);
                }
            }
            atoms.insert(Atom::prop(quantity(on.len())));
            records.push(SnapshotRecord {
                timestamp,
                atoms: atoms.into_iter().collect(),
                source: Source::Synthetic,
            });
        }
        Corpus {
            source: Source::Synthetic,
            records,
        }
    }

    // -- key=value model files

    pub fn to_text(&self) -> String {
        let mut s = String::from("# evtestbed generator model (synthetic parameters)\n");
        let mut kv = |k: &str, v: String| s.push_str(&format!("{k} = {v}\n"));
        kv("seed", self.seed.to_string());
        kv("start", self.start.format(TIME_FORMAT).to_string());
        kv("span_days", self.span_days.to_string());
        kv(
            "weekend_days",
            self.weekend_days.iter().map(|d| weekday_name(*d)).collect::<Vec<_>>().join(" "),
        );
        kv("night_hours", format!("{}-{}", self.night_hours.0, self.night_hours.1));
        kv(
            "users",
            self.users.iter().map(|u| u.name.as_str()).collect::<Vec<_>>().join(" "),
        );
        kv(
            "machines",
            self.machines.iter().map(|(m, w)| format!("{m}:{w}")).collect::<Vec<_>>().join(" "),
        );
        for u in &self.users {
            kv(&format!("rate.{}", u.name), u.rate.to_string());
            kv(&format!("weekend.{}", u.name), u.weekend.to_string());
            kv(&format!("night.{}", u.name), u.night.to_string());
        }
        for ((a, b), w) in &self.affinity {
            kv(&format!("affinity.{a}.{b}"), w.to_string());
        }
        if let Some(b) = &self.backup {
            kv("backup.owner", b.owner.clone());
            kv("backup.host", b.host.clone());
            kv("backup.rate", b.rate.to_string());
            kv("backup.start_hour", b.start_hour.to_string());
            kv("backup.hours", b.hours.to_string());
            kv("backup.owner_rate", b.owner_rate.to_string());
        }
        kv("uucp.rate", self.uucp_rate.to_string());
        s
    }

    /// Parses a model file. Keys missing from the file keep the
    /// [`Default`] value; per-user multipliers default to 1.
    pub fn parse(text: &str) -> Result<Self, ParseError> {
        let mut entries: Vec<(usize, String, String)> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| ParseError::new(1, "expected `key = value`").at_line(i + 1))?;
            entries.push((i + 1, k.trim().to_string(), v.trim().to_string()));
        }
        let mut m = GeneratorModel::default();
        let find = |key: &str| entries.iter().find(|(_, k, _)| k == key);
        fn num<T: FromStr>(line: usize, key: &str, v: &str) -> Result<T, ParseError> {
            v.parse()
                .map_err(|_| ParseError::new(1, format!("bad value `{v}` for `{key}`")).at_line(line))
        }
        if let Some((l, _, v)) = find("users") {
            m.users = v
                .split_whitespace()
                .map(|n| UserModel {
                    name: n.into(),
                    rate: 0.0,
                    weekend: 1.0,
                    night: 1.0,
                })
                .collect();
            if m.users.is_empty() {
                return Err(ParseError::new(1, "no users").at_line(*l));
            }
            m.affinity.clear();
            if let Some(b) = &mut m.backup {
                if !m.users.iter().any(|u| u.name == b.owner) {
                    m.backup = None;
                }
            }
        }
        for (line, k, v) in &entries {
            let (line, k, v) = (*line, k.as_str(), v.as_str());
            let err = |msg: String| ParseError::new(1, msg).at_line(line);
            match k {
                "users" => {}
                "seed" => m.seed = num(line, k, v)?,
                "start" => {
                    m.start = NaiveDateTime::parse_from_str(v, TIME_FORMAT)
                        .map_err(|e| err(format!("bad start `{v}`: {e}")))?
                }
                "span_days" => m.span_days = num(line, k, v)?,
                "weekend_days" => {
                    m.weekend_days = v
                        .split_whitespace()
                        .map(|d| d.parse::<Weekday>().map_err(|_| err(format!("bad weekday `{d}`"))))
                        .collect::<Result<_, _>>()?
                }
                "night_hours" => {
                    let (a, b) = v.split_once('-').ok_or_else(|| err(format!("bad night_hours `{v}`")))?;
                    m.night_hours = (num(line, k, a.trim())?, num(line, k, b.trim())?);
                }
                "machines" => {
                    m.machines = v
                        .split_whitespace()
                        .map(|t| match t.split_once(':') {
                            Some((name, w)) => Ok((name.to_string(), num(line, k, w)?)),
                            None => Ok((t.to_string(), 1.0)),
                        })
                        .collect::<Result<_, ParseError>>()?
                }
                "uucp.rate" => m.uucp_rate = num(line, k, v)?,
                _ => {
                    let mut parts = k.split('.');
                    match (parts.next(), parts.next(), parts.next(), parts.next()) {
                        (Some(f @ ("rate" | "weekend" | "night")), Some(name), None, None) => {
                            let x: f64 = num(line, k, v)?;
                            let u = m
                                .users
                                .iter_mut()
                                .find(|u| u.name == name)
                                .ok_or_else(|| err(format!("unknown user `{name}`")))?;
                            match f {
                                "rate" => u.rate = x,
                                "weekend" => u.weekend = x,
                                _ => u.night = x,
                            }
                        }
                        (Some("affinity"), Some(a), Some(b), None) => {
                            let x: f64 = num(line, k, v)?;
                            let key = pair(a, b);
                            if let Some(old) = m.affinity.get(&key) {
                                if *old != x {
                                    return Err(err(format!("asymmetric affinity between `{a}` and `{b}`")));
                                }
                            }
                            m.affinity.insert(key, x);
                        }
                        (Some("backup"), Some(field), None, None) => {
                            let b = m.backup.get_or_insert_with(|| BackupModel {
                                owner: String::new(),
                                host: String::new(),
                                rate: 0.0,
                                start_hour: 0,
                                hours: 1,
                                owner_rate: 0.0,
                            });
                            match field {
                                "owner" => b.owner = v.into(),
                                "host" => b.host = v.into(),
                                "rate" => b.rate = num(line, k, v)?,
                                "start_hour" => b.start_hour = num(line, k, v)?,
                                "hours" => b.hours = num(line, k, v)?,
                                "owner_rate" => b.owner_rate = num(line, k, v)?,
                                _ => return Err(err(format!("unknown key `{k}`"))),
                            }
                        }
                        _ => return Err(err(format!("unknown key `{k}`"))),
                    }
                }
            }
        }
        m.validate().map_err(|msg| ParseError::new(1, msg))?;
        Ok(m)
    }

    pub fn load(path: &Path) -> Result<Self, DataError> {
        GeneratorModel::parse(&read_file(path)?).map_err(parse_at(path))
    }
}
