//! Acceptance suite. Runs every criterion, prints one line each, and exits
//! nonzero if any failed. Tolerances are pinned below.

mod common;

use std::collections::BTreeSet;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use common::*;
use evtestbed::betting::{Choice, Ledger, LotteryOffer};
use evtestbed::calculi::{self, dempster_combine, interval_to_mass, Belief, EvidenceBundle, MassFunction, Method};
use evtestbed::data::{self, Corpus, GeneratorModel};
use evtestbed::harness::{self, OddsScheme, ScenarioConfig};
use evtestbed::intervals::{self, combine_xp, confidence_interval, FrequencyInterval, Interval};
use evtestbed::prop::{close, Atom, RuleSet, StateDescription};
use evtestbed::refclass::{ClassEnumeration, ReferenceClass, Summarizer};
use proptest::prelude::*;
use proptest::strategy::ValueTree;
use proptest::test_runner::{Config, RngAlgorithm, TestRng, TestRunner};
use rand::seq::IteratorRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Worked-example goldens.
const EXACT: f64 = 1e-9;
/// Dempster golden, given to five places.
const DEMPSTER_TOL: f64 = 1e-5;
/// Standard errors allowed for the statistical criteria.
const SIGMAS: f64 = 3.0;
/// Monte Carlo choices per correctness level.
const MC_CHOICES: usize = 100_000;
const CALIBRATION_QUERIES: usize = 1000;
const STREAM_QUERIES: usize = 200;
const SEED: u64 = 1;
/// Grid resolution for the narrowest-interval oracle.
const ORACLE_GRID: u32 = 10_000;
/// Coverage slack for the oracle check.
const COVERAGE_SLACK: f64 = 0.01;
/// Dempster associativity.
const ALGEBRA_TOL: f64 = 1e-9;
const PROPTEST_CASES: u32 = 512;

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn near(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

fn point(b: Result<Belief, calculi::CalculusError>) -> Result<f64, String> {
    match b.map_err(|e| e.to_string())? {
        Belief::Point { value } => Ok(value),
        other => Err(format!("expected a point, got {other}")),
    }
}

fn bundle() -> EvidenceBundle {
    let (samples, given) = worked_bundle();
    EvidenceBundle::new(samples, given, jackson())
}

fn stated(rules: &RuleSet, class: &str, lo: f64, hi: f64) -> FrequencyInterval {
    let c = ReferenceClass::new(evtestbed::prop::parse_atoms(class).unwrap(), rules).unwrap();
    FrequencyInterval::stated(c, jackson(), lo, hi)
}

fn shipped() -> (GeneratorModel, Corpus, RuleSet) {
    let root = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data");
    let model = GeneratorModel::load(&root.join("default.model")).expect("shipped model");
    let rules = RuleSet::parse(&std::fs::read_to_string(root.join("default.rules")).expect("shipped rules"))
        .expect("rules parse");
    let corpus = Corpus::load(&root.join("network.corpus"), &model.vocabulary()).expect("shipped corpus");
    (model, corpus, rules)
}

fn stream_config(name: &str) -> ScenarioConfig {
    ScenarioConfig {
        name: name.into(),
        seed: SEED,
        repetitions: STREAM_QUERIES,
        ..ScenarioConfig::default()
    }
}

// ---------------------------------------------------------------------------
// worked examples

fn c1_naive_average() -> Outcome {
    let got = point(calculi::naive_average(&bundle()))?;
    let want = (1.0 / 3.0 + 1.0 / 4.0 + 2.0 / 2.0 + 4.0 / 20.0) / 4.0;
    check(near(got, want, EXACT), format!("{got:.10} vs {want:.10}"))
}

fn c2_maximal_average() -> Outcome {
    let got = point(calculi::maximal_average(&bundle()))?;
    let want = (1.0 / 3.0 + 1.0 / 4.0 + 2.0 / 2.0) / 3.0;
    check(near(got, want, EXACT), format!("{got:.10} vs {want:.10}"))
}

fn c3_similarity() -> Outcome {
    let got = point(calculi::similarity(&bundle()))?;
    let want = 15.0 / 44.0;
    check(near(got, want, EXACT), format!("{got:.10} vs 15/44"))
}

fn c4_interval_mass() -> Outcome {
    let m = interval_to_mass(Interval::new(0.06, 0.63));
    let ok = near(m.yes, 0.06, EXACT) && near(m.no, 0.37, EXACT) && near(m.theta, 0.57, EXACT);
    check(ok, format!("({:.6}, {:.6}, {:.6})", m.yes, m.no, m.theta))
}

fn c5_loui_hull() -> Outcome {
    let rules = worked_rules();
    let cands = vec![
        stated(&rules, "(weekend)", 0.06, 0.63),
        stated(&rules, "(in-use 'castor) (logged-on 'marsh)", 0.08, 0.73),
    ];
    let iv = intervals::loui_select(&cands).map_err(|e| e.to_string())?;
    check(near(iv.lo, 0.06, EXACT) && near(iv.hi, 0.73, EXACT), format!("{iv}"))
}

fn c6_kyburg_triple() -> Outcome {
    let rules = worked_rules();
    let a = stated(&rules, "(weekend)", 0.2, 0.4);
    let b = stated(&rules, "(in-use 'castor)", 0.3, 0.5);
    let x = combine_xp(&a, &b).map_err(|e| e.to_string())?;
    let cands = vec![a, b, x];
    let got = intervals::kyburg_select(&cands).map_err(|e| e.to_string())?;
    // g(.2, .3) = .06 / .62 and g(.4, .5) = .2 / .5, by hand
    let ok = got.provenance == intervals::Provenance::Combined
        && near(got.lo(), 3.0 / 31.0, EXACT)
        && near(got.hi(), 2.0 / 5.0, EXACT);
    check(ok, format!("{got}"))
}

fn c7_dempster() -> Outcome {
    let a = interval_to_mass(Interval::new(0.06, 0.63));
    let b = interval_to_mass(Interval::new(0.08, 0.73));
    let m = dempster_combine(&a, &b).map_err(|e| e.to_string())?;
    let ok = near(m.yes, 0.09369, DEMPSTER_TOL) && near(m.no, 0.51802, DEMPSTER_TOL) && near(m.theta, 0.38828, DEMPSTER_TOL);
    check(ok, format!("({:.5}, {:.5}, {:.5})", m.yes, m.no, m.theta))
}

// ---------------------------------------------------------------------------
// statistical

/// Bets at ratio .5 on random pots, right with probability `p`. The oracle
/// is the closed form for independent plays: mean net `sum(l)(p - .5)` with
/// variance `sum(l^2) p (1 - p)`, and yield `p` with the delta-method error.
fn c8_betting_identities() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut lines = Vec::new();
    let mut ok = true;
    for p in [0.5, 0.6, 0.8] {
        let mut ledger = Ledger::default();
        let (mut sum_l, mut sum_l2) = (0.0, 0.0);
        for _ in 0..MC_CHOICES {
            let pot = f64::from(rng.gen_range(1u32..=20));
            let offer = LotteryOffer::new(pot, 0.5).unwrap();
            let right = rng.gen_bool(p);
            // Ante wins exactly when the target holds.
            ledger.record(Choice::Ante, &offer, right);
            sum_l += pot;
            sum_l2 += pot * pot;
        }
        let net = ledger.net().to_f64();
        let net_want = sum_l * (p - 0.5);
        let net_se = (sum_l2 * p * (1.0 - p)).sqrt();
        let y = ledger.yield_rate().unwrap_or(f64::NAN);
        let y_se = net_se / sum_l;
        let pass = (net - net_want).abs() <= SIGMAS * net_se && (y - p).abs() <= SIGMAS * y_se;
        ok &= pass;
        lines.push(format!(
            "p={p}: net {net:.1} vs {net_want:.1} (se {net_se:.1}), yield {y:.4} (se {y_se:.4})"
        ));
    }
    check(ok, lines.join("; "))
}

fn c9_calibration() -> Outcome {
    let (_, corpus, rules) = shipped();
    let cfg = ScenarioConfig {
        name: "calibration".into(),
        seed: SEED,
        repetitions: CALIBRATION_QUERIES,
        odds: OddsScheme::AverageOfBeliefs,
        ..ScenarioConfig::default()
    };
    let r = harness::calibration_run(&cfg, &corpus, &rules).map_err(|e| e.to_string())?;
    let detail = format!(
        "pooled {}/{} = {:.4}, se {:.4}, z {:.2}",
        r.pooled_wins, r.pooled_bets, r.pooled_rate, r.standard_error, r.z
    );
    check(r.pooled_bets as usize >= CALIBRATION_QUERIES && r.z.abs() <= SIGMAS, detail)
}

fn c10_confidence_monotone() -> Outcome {
    let (_, corpus, rules) = shipped();
    let r = harness::confidence_sweep(&stream_config("confidence"), &corpus, &rules).map_err(|e| e.to_string())?;
    let lo = r.ledger(Method::Kyburg { level: Some(0.7) });
    let hi = r.ledger(Method::Kyburg { level: Some(0.9) });
    let fmt_y = |l: &Ledger| l.yield_rate().map_or("-".into(), |y| format!("{y:.3}"));
    let detail = format!(
        "abstain .9={} .7={}; net .9={} .7={}; yield .9={} .7={}; net or yield direction {}",
        hi.abstentions,
        lo.abstentions,
        hi.net(),
        lo.net(),
        fmt_y(hi),
        fmt_y(lo),
        if hi.net() <= lo.net() || hi.yield_rate() >= lo.yield_rate() { "holds" } else { "reversed" }
    );
    check(hi.abstentions >= lo.abstentions, detail)
}

fn c11_data_size() -> Outcome {
    let (model, corpus, rules) = shipped();
    let cfg = stream_config("data-size");
    let runs = harness::data_size_sweep(&cfg, &[20, 60], &corpus, &rules).map_err(|e| e.to_string())?;
    let (small, large) = (&runs[0], &runs[1]);
    let same_stream = small.queries() == large.queries();
    let mut ok = same_stream;
    let mut parts = Vec::new();
    for m in Method::ALL.iter().filter(|m| m.is_interval()) {
        let (a, b) = (small.ledger(*m).abstentions, large.ledger(*m).abstentions);
        ok &= a >= b;
        parts.push(format!("{m} {a}/{b}"));
    }
    let again = harness::data_size_sweep(&cfg, &[20, 60], &corpus, &rules).map_err(|e| e.to_string())?;
    let deterministic = again == runs;
    let regenerated = model.generate(corpus.len()) == corpus;
    ok &= deterministic && regenerated;
    check(
        ok,
        format!(
            "abstentions 20/60: {}; shared stream {same_stream}, rerun identical {deterministic}, corpus regenerates {regenerated}",
            parts.join(", ")
        ),
    )
}

// ---------------------------------------------------------------------------
// oracles

fn c12_oracles() -> Outcome {
    let (model, corpus, rules) = shipped();
    let states: Vec<StateDescription> = corpus.records.iter().map(|r| r.state(&rules).unwrap()).collect();
    let split = data::split(states.len(), 60, SEED).map_err(|e| e.to_string())?;
    let data_states: Vec<StateDescription> = split.data.iter().map(|&i| states[i].clone()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut statements = 0usize;
    for (enumeration, cap) in [(ClassEnumeration::Closed, None), (ClassEnumeration::AllSubsets, Some(64))] {
        let summarizer = Summarizer {
            rules: rules.clone(),
            enumeration,
            max_classes: cap,
        };
        for k in 0..100 {
            let st = &states[split.test[k % split.test.len()]];
            let user = &model.users[rng.gen_range(0..model.users.len())].name;
            let target = Atom::new("logged-on", [user.as_str()]);
            let announced: BTreeSet<Atom> = st
                .atoms()
                .iter()
                .filter(|a| !a.is_negated() && !a.is_always_true() && !a.args().contains(user))
                .cloned()
                .choose_multiple(&mut rng, 1 + k % 8)
                .into_iter()
                .collect();
            let samples = summarizer
                .summarize(&data_states, &announced, &target)
                .map_err(|e| e.to_string())?;
            for sample in samples {
                let got = recount(&data_states, &sample.class, &target);
                if got != (sample.s, sample.r) {
                    return Err(format!("{sample}: recount gives {got:?}"));
                }
                statements += 1;
            }
        }
    }
    let step = 1.0 / f64::from(ORACLE_GRID);
    let mut worst = 0.0f64;
    for c in [0.7, 0.9] {
        for s in 1..=12u32 {
            for r in 0..=s {
                let iv = confidence_interval(s, r, c);
                let (lo, hi) = narrowest_oracle(s, r, c, ORACLE_GRID);
                let lo_ok = iv.lo <= lo + EXACT && iv.lo >= lo - step - EXACT;
                let hi_ok = iv.hi >= hi - EXACT && iv.hi <= hi + step + EXACT;
                if !(lo_ok && hi_ok) {
                    return Err(format!("({s}, {r}, {c}): {iv} vs grid ({lo}, {hi})"));
                }
            }
            let (gap, p) = worst_coverage(s, c, 1000, |r| {
                let iv = confidence_interval(s, r, c);
                (iv.lo, iv.hi)
            });
            if gap < -COVERAGE_SLACK {
                return Err(format!("s={s}, c={c}: coverage short by {gap:.4} at p={p}"));
            }
            worst = worst.min(gap);
        }
    }
    Ok(format!(
        "{statements} statements recounted; 182 intervals match the grid; worst coverage gap {worst:.4}"
    ))
}

// ---------------------------------------------------------------------------
// algebra

fn runner(seed: u8) -> TestRunner {
    TestRunner::new_with_rng(
        Config {
            cases: PROPTEST_CASES,
            failure_persistence: None,
            ..Config::default()
        },
        TestRng::from_seed(RngAlgorithm::ChaCha, &[seed; 32]),
    )
}

fn mass() -> impl Strategy<Value = MassFunction> {
    unit_interval().prop_map(|(lo, hi)| interval_to_mass(Interval::new(lo, hi)))
}

fn masses_close(a: &MassFunction, b: &MassFunction) -> bool {
    near(a.yes, b.yes, ALGEBRA_TOL) && near(a.no, b.no, ALGEBRA_TOL) && near(a.theta, b.theta, ALGEBRA_TOL)
}

fn c13_algebra() -> Outcome {
    let closure = (
        rule_set().prop_flat_map(|r| (Just(r.clone()), Just(r).prop_shuffle())),
        prop::collection::vec(prop_atom(), 0..6),
    );
    runner(13)
        .run(&closure, |((raw, shuffled), atoms)| {
            let state = StateDescription::new(atoms);
            let rules = build_rules(&raw);
            let once = close(&state, &rules).ok();
            if let Some(c) = &once {
                prop_assert_eq!(&close(c, &rules).unwrap(), c);
            }
            prop_assert_eq!(once, close(&state, &build_rules(&shuffled)).ok());
            Ok(())
        })
        .map_err(|e| format!("closure: {e}"))?;

    // Triples whose pairwise conflicts leave a nondegenerate normalizer.
    let conflict = |a: &MassFunction, b: &MassFunction| a.yes * b.no + a.no * b.yes;
    let mut skipped = 0usize;
    let mut mc = runner(14);
    for _ in 0..PROPTEST_CASES {
        let tree = (mass(), mass(), mass()).new_tree(&mut mc).map_err(|e| e.to_string())?;
        let (a, b, c) = tree.current();
        let e = |x| format!("{x}");
        if !masses_close(&dempster_combine(&a, &MassFunction::VACUOUS).map_err(e)?, &a) {
            return Err(format!("vacuous identity fails for {a:?}"));
        }
        if 1.0 - conflict(&a, &b) <= 1e-3 || 1.0 - conflict(&b, &c) <= 1e-3 {
            skipped += 1;
            continue;
        }
        let ab = dempster_combine(&a, &b).map_err(|x| x.to_string())?;
        let ba = dempster_combine(&b, &a).map_err(|x| x.to_string())?;
        if !masses_close(&ab, &ba) {
            return Err(format!("commutativity fails for {a:?}, {b:?}"));
        }
        let bc = dempster_combine(&b, &c).map_err(|x| x.to_string())?;
        if 1.0 - conflict(&ab, &c) <= 1e-3 || 1.0 - conflict(&a, &bc) <= 1e-3 {
            skipped += 1;
            continue;
        }
        let left = dempster_combine(&ab, &c).map_err(|x| x.to_string())?;
        let right = dempster_combine(&a, &bc).map_err(|x| x.to_string())?;
        if !masses_close(&left, &right) {
            return Err(format!("associativity fails: {left:?} vs {right:?}"));
        }
    }
    check(
        skipped * 10 < PROPTEST_CASES as usize,
        format!("{PROPTEST_CASES} closure cases, {PROPTEST_CASES} mass triples ({skipped} near total conflict skipped)"),
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 13] = [
        ("naive average golden", c1_naive_average),
        ("maximal average golden", c2_maximal_average),
        ("similarity golden", c3_similarity),
        ("interval to mass golden", c4_interval_mass),
        ("loui hull golden", c5_loui_hull),
        ("kyburg combined golden", c6_kyburg_triple),
        ("dempster combination golden", c7_dempster),
        ("betting identities", c8_betting_identities),
        ("forced-mode calibration", c9_calibration),
        ("confidence monotonicity", c10_confidence_monotone),
        ("data-size effect", c11_data_size),
        ("oracle recount", c12_oracles),
        ("closure and dempster algebra", c13_algebra),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = f();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(d) => println!("PASS {:>2} {name}: {d} [{secs:.1}s]", i + 1),
            Err(d) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {d} [{secs:.1}s]", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
