use std::collections::BTreeSet;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use evtestbed::betting::{self, pareto_frontier, ReportRow, REPORT_HEADER};
use evtestbed::calculi::{EvidenceBundle, Method, QueryContext};
use evtestbed::data::{self, Corpus, GeneratorModel};
use evtestbed::harness::{self, OddsScheme, RunReport, ScenarioConfig};
use evtestbed::prop::{parse_atoms, Atom, RuleSet};
use evtestbed::refclass::{ClassEnumeration, Summarizer};
use evtestbed::session::{Scenario, SessionStore};

use crate::error::CliError;
use crate::{CompareArgs, Enumeration, GenArgs, Inputs, RunArgs, ScenarioArgs, ServeArgs, SummarizeArgs, Sweep};

impl From<Enumeration> for ClassEnumeration {
    fn from(e: Enumeration) -> Self {
        match e {
            Enumeration::Closed => ClassEnumeration::Closed,
            Enumeration::AllSubsets => ClassEnumeration::AllSubsets,
        }
    }
}

fn model(inputs: &Inputs) -> Result<GeneratorModel, CliError> {
    match &inputs.model {
        Some(p) => Ok(GeneratorModel::load(p)?),
        None => Ok(GeneratorModel::default()),
    }
}

fn rules(inputs: &Inputs, m: &GeneratorModel) -> Result<RuleSet, CliError> {
    match &inputs.rules {
        Some(p) => {
            let text = data::read_file(p)?;
            RuleSet::parse(&text).map_err(|e| CliError::config(format!("{}:{e}", p.display())))
        }
        None => Ok(m.rules()),
    }
}

fn load(corpus: &Path, inputs: &Inputs) -> Result<(Corpus, RuleSet), CliError> {
    let m = model(inputs)?;
    let rules = rules(inputs, &m)?;
    Ok((Corpus::load(corpus, &m.vocabulary())?, rules))
}

fn emit(out: Option<&PathBuf>, text: &str) -> Result<(), CliError> {
    match out {
        Some(p) => Ok(data::write_file(p, text)?),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| CliError::io(format!("stdout: {e}"))),
    }
}

fn atoms(text: &str, what: &str) -> Result<Vec<Atom>, CliError> {
    parse_atoms(text).map_err(|e| CliError::config(format!("{what}: {e}")))
}

/// Splits on commas outside parentheses, so `kyburg(.7,.9)` stays whole.
fn split_methods(text: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let (mut depth, mut start) = (0i32, 0);
    for (i, ch) in text.char_indices() {
        match ch {
            '(' => depth += 1,
            ')' => depth -= 1,
            ',' if depth == 0 => {
                out.push(text[start..i].trim());
                start = i + 1;
            }
            _ => {}
        }
    }
    out.push(text[start..].trim());
    out.into_iter().filter(|s| !s.is_empty()).collect()
}

fn scenario_config(a: &ScenarioArgs, seed: u64) -> Result<ScenarioConfig, CliError> {
    let mut c = match &a.config {
        Some(p) => {
            let text = data::read_file(p)?;
            serde_json::from_str(&text).map_err(|e| CliError::config(format!("{}: {e}", p.display())))?
        }
        None => ScenarioConfig::default(),
    };
    c.seed = seed;
    if let Some(v) = &a.name {
        c.name = v.clone();
    }
    if let Some(v) = a.data_points {
        c.data_points = v;
    }
    if a.data_reserve.is_some() {
        c.data_reserve = a.data_reserve;
    }
    if let Some(v) = a.announced {
        c.announced_count = v;
    }
    if let Some(v) = &a.pots {
        c.pots = v.clone();
    }
    if let Some(v) = &a.odds {
        c.odds = v.parse::<OddsScheme>().map_err(CliError::config)?;
    }
    if let Some(v) = a.confidence {
        c.confidence = v;
    }
    if let Some(v) = a.dempster_confidence {
        c.dempster_confidence = v;
    }
    if let Some(v) = &a.rule {
        c.rule = v.parse().map_err(CliError::config)?;
    }
    if let Some(v) = a.repetitions {
        c.repetitions = v;
    }
    if let Some(v) = &a.methods {
        c.methods = split_methods(v)
            .into_iter()
            .map(|m| m.parse::<Method>().map_err(CliError::config))
            .collect::<Result<_, _>>()?;
    }
    if let Some(v) = a.enumeration {
        c.enumeration = v.into();
    }
    if let Some(v) = a.max_classes {
        c.max_classes = (v > 0).then_some(v);
    }
    if let Some(v) = &a.targets {
        c.targets = atoms(v, "targets")?;
    }
    if a.forced {
        c.forced = true;
    }
    c.validate()?;
    Ok(c)
}

// ---------------------------------------------------------------------------

pub fn gen(a: GenArgs) -> Result<(), CliError> {
    let mut m = model(&a.inputs)?;
    if let Some(s) = a.seed {
        m.seed = s;
    }
    m.validate().map_err(CliError::config)?;
    if a.count == 0 {
        return Err(CliError::config("count must be at least 1"));
    }
    let corpus = m.generate(a.count);
    if let Some(p) = &a.rules_out {
        data::write_file(p, &m.rules_text())?;
    }
    if let Some(p) = &a.model_out {
        data::write_file(p, &m.to_text())?;
    }
    match &a.out {
        Some(p) => corpus.store(p)?,
        None => emit(None, &corpus.to_text())?,
    }
    eprintln!("wrote {} snapshots", corpus.len());
    Ok(())
}

pub fn summarize(a: SummarizeArgs) -> Result<(), CliError> {
    let (corpus, rules) = load(&a.corpus, &a.inputs)?;
    let states = harness::close_corpus(&corpus, &rules)?;
    let split = data::split(states.len(), a.data_points, a.seed)?;
    let record: Vec<_> = split.data.iter().map(|&i| states[i].clone()).collect();
    let announced: BTreeSet<Atom> = atoms(&a.announced, "announced")?.into_iter().collect();
    let target: Atom = a
        .target
        .parse()
        .map_err(|e| CliError::config(format!("target: {e}")))?;
    let summarizer = Summarizer {
        rules,
        enumeration: a.enumeration.into(),
        max_classes: a.max_classes,
    };
    let samples = summarizer
        .summarize(&record, &announced, &target)
        .map_err(CliError::config)?;
    let mut out = String::new();
    for s in &samples {
        out.push_str(&format!("{s}\n"));
    }
    if a.beliefs {
        let given = summarizer.given(&announced).map_err(CliError::config)?;
        let e = EvidenceBundle::new(samples, given, target).with_confidence(a.confidence);
        let ctx = QueryContext {
            pot: 10.0,
            pot_range: (10.0, 10.0),
        };
        out.push('\n');
        for m in Method::ALL {
            match m.evaluate(&e, &ctx) {
                Ok(b) => out.push_str(&format!("{m}\t{b}\n")),
                Err(err) => out.push_str(&format!("{m}\t- ({err})\n")),
            }
        }
    }
    emit(None, &out)
}

fn write_trace(path: Option<&PathBuf>, report: &RunReport) -> Result<(), CliError> {
    let Some(p) = path else { return Ok(()) };
    let mut buf = Vec::new();
    data::write_jsonl(&mut buf, &report.traces).map_err(CliError::io)?;
    let text = String::from_utf8(buf).expect("json is utf-8");
    Ok(data::write_file(p, &text)?)
}

fn describe(report: &RunReport) {
    let on_frontier: Vec<&str> = report
        .rows
        .iter()
        .filter(|r| {
            report
                .frontier
                .undominated
                .iter()
                .any(|p| Some(p.yield_rate) == r.yield_rate && p.net == r.net.to_f64())
        })
        .map(|r| r.subject.as_str())
        .collect();
    eprintln!("{}: {} queries, perfect net {}", report.config.name, report.traces.len(), report.perfect);
    eprintln!("frontier: {}", on_frontier.join(", "));
    if let Some(n) = report.stable_after {
        eprintln!("ranking by net fixed after query {n}");
    }
    if let Some(ok) = report.dempster_abstention_order {
        eprintln!(
            "maximal-dempster abstained at least as often as naive-dempster: {}",
            if ok { "yes" } else { "no" }
        );
    }
}

pub fn run(a: RunArgs) -> Result<(), CliError> {
    let cfg = scenario_config(&a.scenario, a.seed)?;
    let (corpus, rules) = load(&a.corpus, &a.inputs)?;
    match a.sweep {
        None => {
            let report = harness::run_scenario(&cfg, &corpus, &rules)?;
            describe(&report);
            write_trace(a.trace.as_ref(), &report)?;
            emit(a.out.as_ref(), &report.to_tsv())
        }
        Some(Sweep::Confidence) => {
            let report = harness::confidence_sweep(&cfg, &corpus, &rules)?;
            describe(&report);
            write_trace(a.trace.as_ref(), &report)?;
            emit(a.out.as_ref(), &report.to_tsv())
        }
        Some(Sweep::Calibration) => {
            let c = harness::calibration_run(&cfg, &corpus, &rules)?;
            write_trace(a.trace.as_ref(), &c.run)?;
            let mut out = String::from("method\tbets\twins\tcorrect\n");
            let rate = |r: Option<f64>| r.map_or("-".into(), |x| format!("{x:.4}"));
            for m in &c.per_method {
                out.push_str(&format!("{}\t{}\t{}\t{}\n", m.method, m.bets, m.wins, rate(m.rate)));
            }
            out.push_str(&format!(
                "pooled\t{}\t{}\t{:.4}\n",
                c.pooled_bets, c.pooled_wins, c.pooled_rate
            ));
            eprintln!("pooled correctness {:.4}, standard error {:.4}, z {:.2}", c.pooled_rate, c.standard_error, c.z);
            emit(a.out.as_ref(), &out)
        }
        Some(Sweep::Announced) => {
            if a.counts.is_empty() || a.counts.contains(&0) {
                return Err(CliError::config("counts must be positive"));
            }
            let s = harness::announced_sweep(&cfg, &a.counts, &corpus, &rules)?;
            emit(a.out.as_ref(), &s.to_tsv())
        }
        Some(Sweep::DataSize) => {
            if a.sizes.is_empty() || a.sizes.contains(&0) {
                return Err(CliError::config("sizes must be positive"));
            }
            let runs = harness::data_size_sweep(&cfg, &a.sizes, &corpus, &rules)?;
            let rows: Vec<ReportRow> = runs.iter().flat_map(|r| r.rows.clone()).collect();
            emit(a.out.as_ref(), &betting::rows_to_tsv(&rows))
        }
    }
}

fn read_report(path: &Path) -> Result<Vec<ReportRow>, CliError> {
    let text = data::read_file(path)?;
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h == REPORT_HEADER => {}
        _ => return Err(CliError::config(format!("{}: not a report file", path.display()))),
    }
    lines
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| ReportRow::from_tsv(l).map_err(|e| CliError::config(format!("{}:{}: {e}", path.display(), i + 1))))
        .collect()
}

pub fn compare(a: CompareArgs) -> Result<(), CliError> {
    let many = a.reports.len() > 1;
    let mut rows = Vec::new();
    for p in &a.reports {
        let stem = p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        for mut r in read_report(p)? {
            if many {
                r.subject = format!("{stem}/{}", r.subject);
            }
            rows.push(r);
        }
    }
    let frontier = pareto_frontier(&harness::frontier_points(&rows));
    let at = |pts: &[betting::Point], r: &ReportRow| {
        pts.iter().any(|p| Some(p.yield_rate) == r.yield_rate && p.net == r.net.to_f64())
    };
    let mut out = format!("{REPORT_HEADER}\tfrontier\n");
    for r in &rows {
        let mark = if at(&frontier.hull, r) {
            "hull"
        } else if at(&frontier.undominated, r) {
            "pareto"
        } else {
            "-"
        };
        out.push_str(&format!("{}\t{mark}\n", r.to_tsv()));
    }
    emit(a.out.as_ref(), &out)
}

pub fn serve(a: ServeArgs) -> Result<(), CliError> {
    let mut sa = a.scenario.clone();
    sa.repetitions = sa.repetitions.or(Some(a.queries));
    let cfg = scenario_config(&sa, a.seed)?;
    let (corpus, rules) = load(&a.corpus, &a.inputs)?;
    let report = harness::run_scenario(&cfg, &corpus, &rules)?;
    let scenario = Scenario::new(cfg.name.clone(), report);
    let store = match &a.sessions {
        Some(dir) => SessionStore::open([scenario], dir).map_err(CliError::io)?,
        None => SessionStore::new([scenario]),
    };
    let rt = tokio::runtime::Runtime::new().map_err(CliError::io)?;
    eprintln!("serving scenario `{}` ({} queries) on http://{}", cfg.name, cfg.repetitions, a.addr);
    rt.block_on(evtestbed_server::serve(a.addr, Arc::new(store), a.static_dir.clone()))
        .map_err(|e| CliError::io(format!("{}: {e}", a.addr)))
}
