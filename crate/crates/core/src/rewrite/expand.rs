//! Closed-form expansion of the data terms produced when the system is
//! differentiated by a word `D = L_n ⋯ L_1` (letters innermost first).
//!
//! Applying one letter at a time, with `V_t = L_t V_{t−1}`, the system
//! `Σ_i X_i(A X_j V_t + f_{i,t}) = f_t` holds with
//!
//! ```text
//! f_{i,t} = A [L_t, X_j] V_{t−1} + L_t f_{i,t−1}
//! f_t     = L_t f_{t−1} + [X_i, L_t](A X_j V_{t−1} + f_{i,t−1})
//! ```
//!
//! (sums over `i, j, β` implied). Unrolling gives the term families below.

use super::word::{DerivativeWord, LayerProfile, Letter};
use crate::q::Q;
use num::One;
use serde::Serialize;
use std::fmt;

/// Position-level description of one factor in a closed-form term.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Slot {
    /// `L_t`.
    Diff(usize),
    /// `[X_i, L_t]`, `i` shared with the outer divergence.
    HiComm(usize),
    /// `[L_t, X_j]`, `j` paired with the coefficient.
    LoComm(usize),
    /// `X_j`.
    HorJ,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Target {
    U,
    Fi,
    F,
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Target::U => "u",
            Target::Fi => "f_i",
            Target::F => "f",
        })
    }
}

/// Term families. `P*` and `Q*` carry a coefficient factor and act on `u`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Family {
    /// Word on `f`.
    DataF,
    /// Word on `f_i` inside the `f_i` expansion.
    DataFi,
    /// `[X_i, L_t]` followed by a word on `f_i`, inside the `f` expansion.
    FiData,
    /// `[X_i, L_t] A X_j V`, `L_t` in the lowest layer.
    P1,
    /// `[X_i, L_t] A X_j V`, `L_t` higher.
    P2,
    /// `[X_i, L_t] ⋯ A [L_t', X_j] V`, both letters lowest.
    P3,
    /// Outer letter lowest, inner letter higher.
    P4,
    /// Both letters in the same higher layer.
    P5,
    /// Letters in different higher layers.
    P6,
    /// `A [L_t, X_j] V`, `L_t` higher.
    Q1,
    /// `A [L_t, X_j] V`, `L_t` lowest.
    Q2,
}

impl Family {
    pub fn rule_name(&self) -> &'static str {
        match self {
            Family::DataF => "data-f",
            Family::DataFi => "data-fi",
            Family::FiData => "data-fi-commutator",
            Family::P1 => "T1-P1",
            Family::P2 => "T1-P2",
            Family::P3 => "T1-P3",
            Family::P4 => "T1-P4",
            Family::P5 => "T1-P5",
            Family::P6 => "T1-P6",
            Family::Q1 => "T1-Q1",
            Family::Q2 => "T1-Q2",
        }
    }

    pub fn acts_on_u(&self) -> bool {
        !matches!(self, Family::DataF | Family::DataFi | Family::FiData)
    }
}

/// A closed-form term: factors outermost first, applied to `target`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct StructuralTerm {
    pub slots: Vec<Slot>,
    pub target: Target,
    pub family: Family,
}

impl StructuralTerm {
    /// True when a commutator slot involves a top-layer letter.
    pub fn annihilated(&self, layers: &[usize], step: usize) -> bool {
        self.slots.iter().any(|s| match s {
            Slot::HiComm(t) | Slot::LoComm(t) => layers[t - 1] + 1 > step,
            _ => false,
        })
    }

    /// Abstract letters: commutator slots become anonymous letters one layer up,
    /// `X_j` becomes a layer-1 anonymous letter.
    pub fn to_word(&self, layers: &[usize]) -> DerivativeWord {
        DerivativeWord::new(
            self.slots
                .iter()
                .map(|s| match *s {
                    Slot::Diff(t) => Letter::Named { layer: layers[t - 1], index: t },
                    Slot::HiComm(t) | Slot::LoComm(t) => Letter::Anonymous { layer: layers[t - 1] + 1 },
                    Slot::HorJ => Letter::Anonymous { layer: 1 },
                })
                .collect(),
        )
    }

    pub fn has_coefficient(&self) -> bool {
        self.target == Target::U
    }
}

fn diffs(from: usize, down_to: usize) -> impl Iterator<Item = Slot> {
    (down_to..=from).rev().map(Slot::Diff)
}

/// `f_i` terms for letters `layers` (innermost first), before annihilation.
pub fn fi_terms_raw(layers: &[usize], lowest: usize) -> Vec<StructuralTerm> {
    let n = layers.len();
    let mut out = vec![StructuralTerm { slots: diffs(n, 1).collect(), target: Target::Fi, family: Family::DataFi }];
    for t in 1..=n {
        let mut slots: Vec<Slot> = diffs(n, t + 1).collect();
        slots.push(Slot::LoComm(t));
        slots.extend(diffs(t - 1, 1));
        let family = if layers[t - 1] == lowest { Family::Q2 } else { Family::Q1 };
        out.push(StructuralTerm { slots, target: Target::U, family });
    }
    out
}

/// `f` terms for letters `layers` (innermost first), before annihilation.
pub fn f_terms_raw(layers: &[usize], lowest: usize) -> Vec<StructuralTerm> {
    let n = layers.len();
    let mut out = vec![StructuralTerm { slots: diffs(n, 1).collect(), target: Target::F, family: Family::DataF }];
    for t in 1..=n {
        let outer: Vec<Slot> = diffs(n, t + 1).chain(std::iter::once(Slot::HiComm(t))).collect();
        let lt = layers[t - 1];

        let mut w = outer.clone();
        w.push(Slot::HorJ);
        w.extend(diffs(t - 1, 1));
        let family = if lt == lowest { Family::P1 } else { Family::P2 };
        out.push(StructuralTerm { slots: w, target: Target::U, family });

        let mut d = outer.clone();
        d.extend(diffs(t - 1, 1));
        out.push(StructuralTerm { slots: d, target: Target::Fi, family: Family::FiData });

        for tp in 1..t {
            let mut s = outer.clone();
            s.extend(diffs(t - 1, tp + 1));
            s.push(Slot::LoComm(tp));
            s.extend(diffs(tp - 1, 1));
            let lp = layers[tp - 1];
            let family = match (lt == lowest, lp == lowest) {
                (true, true) => Family::P3,
                (true, false) => Family::P4,
                _ if lt == lp => Family::P5,
                _ => Family::P6,
            };
            out.push(StructuralTerm { slots: s, target: Target::U, family });
        }
    }
    out
}

fn surviving(terms: Vec<StructuralTerm>, layers: &[usize], step: usize) -> Vec<StructuralTerm> {
    terms.into_iter().filter(|t| !t.annihilated(layers, step)).collect()
}

/// `f_i` terms of the word with profile `profile`, top-layer commutators removed.
pub fn fi_terms(profile: &LayerProfile, lowest: usize) -> Vec<StructuralTerm> {
    let layers = profile.letters_innermost_first();
    surviving(fi_terms_raw(&layers, lowest), &layers, profile.step)
}

/// `f` terms of the word with profile `profile`, top-layer commutators removed.
pub fn f_terms(profile: &LayerProfile, lowest: usize) -> Vec<StructuralTerm> {
    let layers = profile.letters_innermost_first();
    surviving(f_terms_raw(&layers, lowest), &layers, profile.step)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum TermKind {
    /// Differentiated unknown `V(k)` with the lowest differentiated layer `k`.
    V(usize),
    FTerm,
    FiTerm,
    CommutatorRemainder,
}

/// A term with its abstract word.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SymbolicTerm {
    #[serde(serialize_with = "ser_q")]
    pub coefficient: Q,
    pub word: DerivativeWord,
    pub target: Target,
    pub kind: TermKind,
    pub family: Option<Family>,
}

fn ser_q<S: serde::Serializer>(q: &Q, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&crate::q::fmt_q(q))
}

impl fmt::Display for SymbolicTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let a = if self.target == Target::U { "A " } else { "" };
        write!(f, "{a}{} {}", self.word, self.target)
    }
}

fn symbolic(terms: Vec<StructuralTerm>, layers: &[usize], kind: TermKind) -> Vec<SymbolicTerm> {
    terms
        .into_iter()
        .map(|t| SymbolicTerm {
            coefficient: Q::one(),
            word: t.to_word(layers),
            target: t.target,
            kind,
            family: Some(t.family),
        })
        .collect()
}

/// Expansion of `f_i` after differentiating by the word of `profile`; `l−1`
/// is the lowest layer of the working range.
pub fn expand_fi(l: usize, profile: &LayerProfile) -> Vec<SymbolicTerm> {
    let layers = profile.letters_innermost_first();
    symbolic(fi_terms(profile, l - 1), &layers, TermKind::FiTerm)
}

/// Expansion of `f` after differentiating by the word of `profile`.
pub fn expand_f(l: usize, profile: &LayerProfile) -> Vec<SymbolicTerm> {
    let layers = profile.letters_innermost_first();
    symbolic(f_terms(profile, l - 1), &layers, TermKind::FTerm)
}

/// The differentiated unknown `V(k) = X^{I_k} ⋯ X^{I_r} u`.
pub fn v_term(profile: &LayerProfile) -> SymbolicTerm {
    let layers = profile.letters_innermost_first();
    let n = layers.len();
    let word = DerivativeWord::new((1..=n).rev().map(|t| Letter::Named { layer: layers[t - 1], index: t }).collect());
    SymbolicTerm {
        coefficient: Q::one(),
        word,
        target: Target::U,
        kind: TermKind::V(profile.lowest_layer().unwrap_or(profile.step)),
        family: None,
    }
}
