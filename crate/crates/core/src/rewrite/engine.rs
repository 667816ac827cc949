//! Profile transitions and the terminating reduction driver.
//!
//! To control a target profile `I` with lowest layer `l−1`, the system is
//! differentiated by the word of `I − e_{l−1}` and the energy estimate is
//! applied; the extra lowest-layer derivative is supplied either by the
//! estimate itself or by one more letter on the data side. Every `u`-term of
//! the expanded data, optionally prefixed by one letter of a layer in
//! `l−1..r`, is normalized to ascending layer order. A leading horizontal
//! letter is absorbed by the energy norm. The resulting profile `J` must
//! satisfy one of the transition cases below.

use super::expand::{f_terms, fi_terms, Family, SymbolicTerm, Target, TermKind};
use super::word::{normalize, AbstractLetters, DerivativeWord, LayerProfile, Letter};
use super::RewriteError;
use crate::q::Q;
use num::One;
use serde::Serialize;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

/// Rule tag recorded in traces.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Rule {
    Family(Family),
    T2,
    CommutatorShift,
    /// Pure top-layer profile: one top-layer derivative is removed by the
    /// energy estimate iteration.
    Descend,
}

impl Rule {
    pub fn name(&self) -> &'static str {
        match self {
            Rule::Family(f) => f.rule_name(),
            Rule::T2 => "T2",
            Rule::CommutatorShift => "L4-shift",
            Rule::Descend => "descend",
        }
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Which transition condition a successor meets.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Case {
    /// Fewer derivatives on `u` in total.
    TotalDecrease,
    /// `J_{l−1} < I_{l−1}`.
    LowestDecrease,
    /// `J_{l−1} = I_{l−1}` and some `β > l−1` has `J_β < I_β`, `J_{β+1} > I_{β+1}`.
    AdjacentShift { beta: usize },
    /// `J_{l−1} = I_{l−1}`, the first differing layer loses mass and `W` drops,
    /// without an adjacent `(β, β+1)` witness. Arises from two commutators in
    /// consecutive higher layers, which needs step at least 5.
    MultiLayerShift,
}

impl Case {
    pub fn name(&self) -> String {
        match self {
            Case::TotalDecrease => "total-decrease".into(),
            Case::LowestDecrease => "case-i".into(),
            Case::AdjacentShift { beta } => format!("case-ii(beta={beta})"),
            Case::MultiLayerShift => "multi-layer-shift".into(),
        }
    }
}

/// Classifies `J` against `I` with lowest working layer `lowest`.
pub fn classify_profiles(input: &LayerProfile, lowest: usize, j: &LayerProfile) -> Option<Case> {
    if j.total() < input.total() {
        return Some(Case::TotalDecrease);
    }
    if j.total() > input.total() {
        return None;
    }
    let (jl, il) = (j.get(lowest), input.get(lowest));
    if jl < il {
        return Some(Case::LowestDecrease);
    }
    if jl > il {
        return None;
    }
    let r = input.step;
    if let Some(beta) = (lowest + 1..r).find(|&b| j.get(b) < input.get(b) && j.get(b + 1) > input.get(b + 1)) {
        return Some(Case::AdjacentShift { beta });
    }
    let first = (lowest..=r).find(|&k| j.get(k) != input.get(k));
    match first {
        Some(k) if j.get(k) < input.get(k) && j.measure() < input.measure() => Some(Case::MultiLayerShift),
        _ => None,
    }
}

/// Profile of a term's `u`-word and the case it satisfies against `input`.
pub fn classify_successor(input: &LayerProfile, term: &SymbolicTerm) -> Result<(LayerProfile, Case), RewriteError> {
    let lowest = input.lowest_layer().unwrap_or(input.step);
    let j = term.word.profile(input.step, input.start);
    match classify_profiles(input, lowest, &j) {
        Some(c) => Ok((j, c)),
        None => Err(RewriteError::ClassificationFailure {
            input: input.clone(),
            output: j,
            term: term.to_string(),
            rule: term.family.map_or("none", |f| f.rule_name()).to_string(),
        }),
    }
}

/// One normalized successor term.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Successor {
    pub rule: Rule,
    pub term: SymbolicTerm,
    pub profile: LayerProfile,
    pub case: Case,
}

/// True when only the lowest and the top layer are populated.
pub fn is_t2_shape(p: &LayerProfile) -> bool {
    match p.lowest_layer() {
        Some(low) if low < p.step => (low + 1..p.step).all(|k| p.get(k) == 0),
        _ => false,
    }
}

/// Normalized `u`-terms for the target `input`, each tagged with the family
/// that produced it or with the commutator-shift rule for remainders.
fn raw_successors(input: &LayerProfile, lowest: usize) -> Vec<(Rule, DerivativeWord)> {
    let r = input.step;
    let system = input.add(lowest, -1);
    let layers = system.letters_innermost_first();
    let alg = AbstractLetters { step: r };
    let mut terms = f_terms(&system, lowest);
    terms.extend(fi_terms(&system, lowest));
    let prefixes: Vec<Option<Letter>> =
        std::iter::once(None).chain((lowest..=r).map(|k| Some(Letter::Named { layer: k, index: 0 }))).collect();
    let mut out = Vec::new();
    for t in terms.iter().filter(|t| t.target == Target::U) {
        let word = t.to_word(&layers);
        for p in &prefixes {
            let mut letters = Vec::with_capacity(word.len() + 1);
            letters.extend(p.iter().copied());
            letters.extend_from_slice(&word.letters);
            for (w, principal) in normalize(&alg, &letters) {
                let absorbed: Vec<Letter> = w.into_iter().skip_while(|l| l.layer() == 1).collect();
                let rule = if principal { Rule::Family(t.family) } else { Rule::CommutatorShift };
                out.push((rule, DerivativeWord::new(absorbed)));
            }
        }
    }
    out
}

fn successor_term(rule: Rule, word: DerivativeWord) -> SymbolicTerm {
    let (kind, family) = match rule {
        Rule::Family(f) => (if matches!(f, Family::Q1 | Family::Q2) { TermKind::FiTerm } else { TermKind::FTerm }, Some(f)),
        _ => (TermKind::CommutatorRemainder, None),
    };
    SymbolicTerm { coefficient: Q::one(), word, target: Target::U, kind, family }
}

/// All successors of a target profile whose lowest layer is below the top.
pub fn t1_successors(input: &LayerProfile) -> Result<Vec<Successor>, RewriteError> {
    let lowest = match input.lowest_layer() {
        Some(l) if l < input.step => l,
        _ => return Ok(Vec::new()),
    };
    raw_successors(input, lowest)
        .into_iter()
        .map(|(rule, word)| {
            let term = successor_term(rule, word);
            let (profile, case) = classify_successor(input, &term)?;
            Ok(Successor { rule, term, profile, case })
        })
        .collect()
}

/// Certificate for one T2 step.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct T2Outcome {
    pub input: LayerProfile,
    pub successors: Vec<LayerProfile>,
    /// Every successor has `J_{l−1} ≤ I_{l−1} − 1` and `J_k ≥ I_k` elsewhere.
    pub lowest_drops: bool,
    pub others_kept: bool,
    pub measure_drops: bool,
}

/// One T2 step on a profile populated only in the lowest and top layers.
pub fn t2_step(profile: &LayerProfile) -> Result<T2Outcome, RewriteError> {
    if profile.is_zero() || profile.lowest_layer() == Some(profile.step) {
        return Ok(T2Outcome {
            input: profile.clone(),
            successors: Vec::new(),
            lowest_drops: true,
            others_kept: true,
            measure_drops: true,
        });
    }
    if !is_t2_shape(profile) {
        return Err(RewriteError::NotT2Shape(profile.clone()));
    }
    let lowest = profile.lowest_layer().expect("non-zero");
    let mut set = BTreeSet::new();
    let (mut lowest_drops, mut others_kept, mut measure_drops) = (true, true, true);
    for (rule, word) in raw_successors(profile, lowest) {
        let j = word.profile(profile.step, profile.start);
        let low_ok = j.get(lowest) < profile.get(lowest);
        let kept = (lowest + 1..=profile.step).all(|k| j.get(k) >= profile.get(k));
        if !low_ok {
            let term = successor_term(rule, word);
            return Err(RewriteError::ClassificationFailure {
                input: profile.clone(),
                output: j,
                term: term.to_string(),
                rule: "T2".into(),
            });
        }
        lowest_drops &= low_ok;
        others_kept &= kept;
        measure_drops &= j.measure() < profile.measure();
        set.insert(j);
    }
    Ok(T2Outcome { input: profile.clone(), successors: set.into_iter().collect(), lowest_drops, others_kept, measure_drops })
}

/// One recorded transition.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TraceStep {
    pub rule: String,
    pub in_profile: Vec<usize>,
    pub out_profiles: Vec<Vec<usize>>,
    #[serde(rename = "W_in")]
    pub w_in: usize,
    #[serde(rename = "W_out")]
    pub w_out: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ReductionTrace {
    pub step: usize,
    pub initial: Vec<usize>,
    pub steps: Vec<TraceStep>,
    /// Longest chain of transitions from the initial profile to the base case.
    pub depth: usize,
    /// Distinct profiles visited, including the base.
    pub profiles_visited: usize,
}

impl ReductionTrace {
    pub fn measure_strictly_decreases(&self) -> bool {
        self.steps.iter().all(|s| s.w_out < s.w_in)
    }
}

/// Successor profiles of `p` grouped by rule.
fn transitions(p: &LayerProfile) -> Result<BTreeMap<Rule, BTreeSet<LayerProfile>>, RewriteError> {
    let mut by_rule: BTreeMap<Rule, BTreeSet<LayerProfile>> = BTreeMap::new();
    if p.is_zero() {
        return Ok(by_rule);
    }
    if p.lowest_layer() == Some(p.step) {
        by_rule.entry(Rule::Descend).or_default().insert(p.add(p.step, -1));
        return Ok(by_rule);
    }
    if is_t2_shape(p) {
        let out = t2_step(p)?;
        let lowest = p.lowest_layer().expect("non-zero");
        for (rule, word) in raw_successors(p, lowest) {
            let rule = if rule == Rule::CommutatorShift { rule } else { Rule::T2 };
            by_rule.entry(rule).or_default().insert(word.profile(p.step, p.start));
        }
        debug_assert!(out.lowest_drops);
        return Ok(by_rule);
    }
    for s in t1_successors(p)? {
        by_rule.entry(s.rule).or_default().insert(s.profile);
    }
    Ok(by_rule)
}

/// Iterates the transitions until every profile reaches zero.
pub fn reduce_to_base(initial: &LayerProfile) -> Result<ReductionTrace, RewriteError> {
    let mut pending: BTreeMap<(usize, LayerProfile), ()> = BTreeMap::new();
    let mut seen: BTreeSet<LayerProfile> = BTreeSet::new();
    let mut edges: BTreeMap<LayerProfile, Vec<LayerProfile>> = BTreeMap::new();
    let mut steps = Vec::new();
    pending.insert((initial.measure(), initial.clone()), ());
    seen.insert(initial.clone());
    // Highest measure first: all successors of a profile have smaller measure.
    while let Some(((w_in, p), ())) = pending.pop_last() {
        let by_rule = transitions(&p)?;
        let mut succ = Vec::new();
        for (rule, outs) in by_rule {
            let w_out = outs.iter().map(LayerProfile::measure).max().unwrap_or(0);
            if outs.iter().any(|o| o.measure() >= w_in) {
                let bad = outs.iter().find(|o| o.measure() >= w_in).expect("present").clone();
                return Err(RewriteError::MeasureIncrease { input: p, output: bad, rule: rule.name().into() });
            }
            steps.push(TraceStep {
                rule: rule.name().into(),
                in_profile: p.counts.clone(),
                out_profiles: outs.iter().map(|o| o.counts.clone()).collect(),
                w_in,
                w_out,
            });
            for o in outs {
                if seen.insert(o.clone()) {
                    pending.insert((o.measure(), o.clone()), ());
                }
                succ.push(o);
            }
        }
        edges.insert(p, succ);
    }
    // Longest path, evaluated in increasing measure so successors come first.
    let mut order: Vec<&LayerProfile> = seen.iter().collect();
    order.sort_by_key(|p| p.measure());
    let mut depth: BTreeMap<&LayerProfile, usize> = BTreeMap::new();
    for p in order {
        let d = edges.get(p).map_or(0, |s| s.iter().map(|q| depth[q] + 1).max().unwrap_or(0));
        depth.insert(p, d);
    }
    let d = depth[initial];
    if d > initial.measure() {
        return Err(RewriteError::DepthExceeded { depth: d, bound: initial.measure() });
    }
    Ok(ReductionTrace { step: initial.step, initial: initial.counts.clone(), steps, depth: d, profiles_visited: seen.len() })
}

/// Aggregate of an exhaustive run.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct SweepReport {
    pub steps: Vec<usize>,
    pub max_total: usize,
    pub profiles: usize,
    pub halted: usize,
    pub classification_failures: usize,
    pub measure_violations: usize,
    pub max_depth: usize,
    /// Successor terms seen per case name.
    pub cases: BTreeMap<String, usize>,
    pub failures: Vec<String>,
}

impl SweepReport {
    pub fn pass(&self) -> bool {
        self.halted == self.profiles && self.classification_failures == 0 && self.measure_violations == 0
    }
}

/// Runs [`reduce_to_base`] on every profile with total at most `max_total`.
pub fn sweep(steps: &[usize], max_total: usize) -> SweepReport {
    let mut rep = SweepReport { steps: steps.to_vec(), max_total, ..Default::default() };
    for &r in steps {
        if r < 2 {
            continue;
        }
        for p in LayerProfile::enumerate(r, 2, max_total) {
            rep.profiles += 1;
            match reduce_to_base(&p) {
                Ok(t) => {
                    rep.halted += 1;
                    if !t.measure_strictly_decreases() {
                        rep.measure_violations += 1;
                    }
                    rep.max_depth = rep.max_depth.max(t.depth);
                }
                Err(e) => {
                    match e {
                        RewriteError::ClassificationFailure { .. } => rep.classification_failures += 1,
                        _ => rep.measure_violations += 1,
                    }
                    rep.failures.push(format!("step {r} {p}: {e}"));
                }
            }
            if let Ok(succ) = t1_successors(&p) {
                for s in succ {
                    *rep.cases.entry(s.case.name()).or_default() += 1;
                }
            }
        }
    }
    rep
}

#[cfg(test)]
mod tests {
    use super::*;

    fn prof(r: usize, c: &[usize]) -> LayerProfile {
        LayerProfile::new(r, c.to_vec()).unwrap()
    }

    #[test]
    fn zero_profile_has_empty_trace() {
        let t = reduce_to_base(&prof(3, &[0, 0])).unwrap();
        assert!(t.steps.is_empty());
        assert_eq!(t.depth, 0);
    }

    #[test]
    fn step_two_descends() {
        let t = reduce_to_base(&prof(2, &[4])).unwrap();
        assert_eq!(t.depth, 4);
        assert!(t.steps.iter().all(|s| s.rule == "descend"));
    }

    #[test]
    fn classify_basic_cases() {
        let i = prof(4, &[2, 1, 0]);
        assert_eq!(classify_profiles(&i, 2, &prof(4, &[1, 2, 0])), Some(Case::LowestDecrease));
        assert_eq!(classify_profiles(&i, 2, &prof(4, &[2, 0, 1])), Some(Case::AdjacentShift { beta: 3 }));
        assert_eq!(classify_profiles(&i, 2, &prof(4, &[1, 1, 0])), Some(Case::TotalDecrease));
        assert_eq!(classify_profiles(&i, 2, &prof(4, &[2, 1, 0])), None);
        assert_eq!(classify_profiles(&i, 2, &prof(4, &[3, 0, 0])), None);
    }

    #[test]
    fn t2_shape() {
        assert!(is_t2_shape(&prof(4, &[1, 0, 3])));
        assert!(!is_t2_shape(&prof(4, &[1, 1, 3])));
        assert!(matches!(t2_step(&prof(4, &[1, 1, 0])), Err(RewriteError::NotT2Shape(_))));
    }
}
