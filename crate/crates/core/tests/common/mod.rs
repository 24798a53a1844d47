//! Test-side oracles. Nothing here calls into the interval or summary code
//! it checks.

#![allow(dead_code)]

use std::collections::BTreeSet;

use evtestbed::prop::{parse_atoms, Atom, RuleSet, StateDescription};
use evtestbed::refclass::{ReferenceClass, SampleStatement};
use proptest::prelude::*;

/// Binomial pmf by direct products, in f64.
pub fn pmf(s: u32, k: u32, p: f64) -> f64 {
    let mut choose = 1.0f64;
    for i in 0..k {
        choose = choose * f64::from(s - i) / f64::from(i + 1);
    }
    choose * p.powi(k as i32) * (1.0 - p).powi((s - k) as i32)
}

/// Whether `r` is in the level-`c` acceptance set at `p`: outcomes are
/// added in decreasing probability until their mass reaches `c`, and `r`
/// is accepted when the outcomes strictly more likely than it hold less
/// than `c`.
pub fn accepted(s: u32, r: u32, p: f64, c: f64) -> bool {
    let pr = pmf(s, r, p);
    let above: f64 = (0..=s)
        .map(|k| pmf(s, k, p))
        .filter(|&q| q > pr * (1.0 + 1e-12))
        .sum();
    above < c
}

/// Hull of the grid points whose acceptance set contains `r`.
pub fn narrowest_oracle(s: u32, r: u32, c: f64, steps: u32) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..=steps {
        let p = f64::from(i) / f64::from(steps);
        if accepted(s, r, p, c) {
            lo = lo.min(p);
            hi = hi.max(p);
        }
    }
    (lo, hi)
}

/// Smallest coverage minus `c` over a grid of `p`, for an interval rule.
pub fn worst_coverage(s: u32, c: f64, steps: u32, interval: impl Fn(u32) -> (f64, f64)) -> (f64, f64) {
    let ivs: Vec<(f64, f64)> = (0..=s).map(&interval).collect();
    let mut worst = (f64::INFINITY, 0.0);
    for i in 0..=steps {
        let p = f64::from(i) / f64::from(steps);
        let cov: f64 = (0..=s)
            .filter(|&r| ivs[r as usize].0 <= p + 1e-12 && p <= ivs[r as usize].1 + 1e-12)
            .map(|r| pmf(s, r, p))
            .sum();
        if cov - c < worst.0 {
            worst = (cov - c, p);
        }
    }
    worst
}

/// `(s, r)` for a class by scanning every data state.
pub fn recount(states: &[StateDescription], class: &ReferenceClass, target: &Atom) -> (u32, u32) {
    let members: Vec<&StateDescription> = states
        .iter()
        .filter(|st| class.properties().iter().all(|a| st.atoms().contains(a)))
        .collect();
    let r = members.iter().filter(|st| st.atoms().contains(target)).count();
    (members.len() as u32, r as u32)
}

pub fn worked_rules() -> RuleSet {
    RuleSet::parse(
        "(weekend) -> !(weekday)\n\
         (weekday) -> !(weekend)\n\
         (on 'cox 'antares) -> (logged-on 'cox) & (in-use 'antares)",
    )
    .unwrap()
}

pub fn jackson() -> Atom {
    "(logged-on 'jackson)".parse().unwrap()
}

/// The four sample statements of the weekend example, with the closed
/// announcement they were summarized for.
pub fn worked_bundle() -> (Vec<SampleStatement>, BTreeSet<Atom>) {
    let rules = worked_rules();
    let st = |c: &str, s, r| {
        SampleStatement::new(
            ReferenceClass::new(parse_atoms(c).unwrap(), &rules).unwrap(),
            jackson(),
            s,
            r,
        )
    };
    let samples = vec![
        st("(logged-on 'cox) (logged-on 'marsh)", 4, 1),
        st("(weekend)", 3, 1),
        st("(in-use 'castor) (logged-on 'marsh)", 2, 2),
        st("", 20, 4),
    ];
    let announced = parse_atoms("(weekend) (in-use 'castor) (logged-on 'marsh) (on 'cox 'antares)").unwrap();
    let given = evtestbed::prop::close(&StateDescription::new(announced), &rules)
        .unwrap()
        .atoms()
        .clone();
    (samples, given)
}

// -- strategies

pub fn prop_atom() -> impl Strategy<Value = Atom> {
    (0u8..8, any::<bool>()).prop_map(|(i, neg)| {
        let a = Atom::prop(format!("p{i}"));
        if neg {
            a.complement()
        } else {
            a
        }
    })
}

pub fn rule_set() -> impl Strategy<Value = Vec<(Vec<Atom>, Vec<Atom>)>> {
    prop::collection::vec(
        (prop::collection::vec(prop_atom(), 1..3), prop::collection::vec(prop_atom(), 1..3)),
        0..8,
    )
}

pub fn build_rules(raw: &[(Vec<Atom>, Vec<Atom>)]) -> RuleSet {
    let mut rs = RuleSet::default();
    for (b, h) in raw {
        if let Ok(r) = evtestbed::prop::Rule::new(b.clone(), h.clone()) {
            rs.push(r);
        }
    }
    rs
}

/// Intervals `[lo, hi]` inside the unit interval.
pub fn unit_interval() -> impl Strategy<Value = (f64, f64)> {
    (0.0f64..=1.0, 0.0f64..=1.0).prop_map(|(a, b)| if a <= b { (a, b) } else { (b, a) })
}

/// Class over `q0..q4` selected by the low five bits, with no rules.
pub fn class_of(bits: u8) -> ReferenceClass {
    let label = (0..5).filter(|i| bits & (1 << i) != 0).map(|i| Atom::prop(format!("q{i}")));
    ReferenceClass::new(label, &RuleSet::default()).unwrap()
}

pub fn target() -> Atom {
    Atom::prop("t")
}

/// `(class bits, s, r)` with `1 <= s <= 30`.
pub fn raw_sample() -> impl Strategy<Value = (u8, u32, u32)> {
    (0u8..32, 1u32..=30).prop_flat_map(|(b, s)| (Just(b), Just(s), 0..=s))
}

pub fn sample_of((bits, s, r): (u8, u32, u32)) -> SampleStatement {
    SampleStatement::new(class_of(bits), target(), s, r)
}

/// Samples with distinct classes, the general class always among them.
pub fn sample_list(max: usize) -> impl Strategy<Value = Vec<SampleStatement>> {
    (prop::collection::vec(raw_sample(), 0..max), 1u32..=30)
        .prop_flat_map(|(v, s)| (Just(v), Just(s), 0..=s))
        .prop_map(|(v, s, r)| {
            let mut seen = BTreeSet::new();
            let mut out = vec![sample_of((0, s, r))];
            seen.insert(0u8);
            for raw in v {
                if seen.insert(raw.0) {
                    out.push(sample_of(raw));
                }
            }
            out
        })
}
