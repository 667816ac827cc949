//! Derivative words, layer profiles and the commutation primitives shared by
//! the abstract engine and the exact soundness oracle.

use super::RewriteError;
use crate::algebra::{AlgebraElement, AlgebraSpec, BasisLabel};
use serde::{Deserialize, Serialize};
use std::fmt;

/// One derivative letter. `Anonymous` stands for a collapsed commutator whose
/// exact coefficients are not tracked.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Letter {
    Named { layer: usize, index: usize },
    Anonymous { layer: usize },
}

impl Letter {
    pub fn layer(&self) -> usize {
        match *self {
            Letter::Named { layer, .. } | Letter::Anonymous { layer } => layer,
        }
    }

    pub fn is_anonymous(&self) -> bool {
        matches!(self, Letter::Anonymous { .. })
    }
}

impl fmt::Display for Letter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Letter::Named { layer, index } => write!(f, "X[{layer},{index}]"),
            Letter::Anonymous { layer } => write!(f, "X[{layer},*]"),
        }
    }
}

/// Letters listed outermost first: `letters[0]` is applied last.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DerivativeWord {
    pub letters: Vec<Letter>,
}

impl DerivativeWord {
    pub fn new(letters: Vec<Letter>) -> Self {
        DerivativeWord { letters }
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    /// Largest letter layer, 0 for the empty word.
    pub fn max_layer(&self) -> usize {
        self.letters.iter().map(Letter::layer).max().unwrap_or(0)
    }

    /// True when some letter lies beyond the top layer and kills the term.
    pub fn annihilated(&self, step: usize) -> bool {
        self.max_layer() > step
    }

    /// Counts per layer `start..=step`; horizontal letters below `start` are
    /// absorbed by the energy estimate and not counted.
    pub fn profile(&self, step: usize, start: usize) -> LayerProfile {
        let mut counts = vec![0; step + 1 - start];
        for l in &self.letters {
            let k = l.layer();
            if k >= start && k <= step {
                counts[k - start] += 1;
            }
        }
        LayerProfile { step, start, counts }
    }
}

impl fmt::Display for DerivativeWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.letters.is_empty() {
            return write!(f, "1");
        }
        let parts: Vec<String> = self.letters.iter().map(Letter::to_string).collect();
        write!(f, "{}", parts.join(" "))
    }
}

/// Derivative counts `h_k` for layers `start..=step`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct LayerProfile {
    pub step: usize,
    pub start: usize,
    pub counts: Vec<usize>,
}

impl LayerProfile {
    /// Working range starting at layer 2.
    pub fn new(step: usize, counts: Vec<usize>) -> Result<Self, RewriteError> {
        LayerProfile::with_start(step, 2, counts)
    }

    pub fn with_start(step: usize, start: usize, counts: Vec<usize>) -> Result<Self, RewriteError> {
        if start < 1 || start > step || counts.len() != step + 1 - start {
            return Err(RewriteError::InvalidProfile(format!(
                "step {step} from layer {start} needs {} counts, got {}",
                (step + 1).saturating_sub(start),
                counts.len()
            )));
        }
        Ok(LayerProfile { step, start, counts })
    }

    pub fn zero(step: usize, start: usize) -> Self {
        LayerProfile { step, start, counts: vec![0; step + 1 - start] }
    }

    /// `h_k`, zero outside the working range.
    pub fn get(&self, k: usize) -> usize {
        if k < self.start || k > self.step {
            0
        } else {
            self.counts[k - self.start]
        }
    }

    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }

    /// `W = Σ_k (r+1−k) h_k`.
    pub fn measure(&self) -> usize {
        (self.start..=self.step).map(|k| (self.step + 1 - k) * self.get(k)).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.counts.iter().all(|&c| c == 0)
    }

    /// Lowest populated layer.
    pub fn lowest_layer(&self) -> Option<usize> {
        (self.start..=self.step).find(|&k| self.get(k) > 0)
    }

    pub fn add(&self, k: usize, delta: isize) -> Self {
        let mut out = self.clone();
        let c = &mut out.counts[k - self.start];
        *c = (*c as isize + delta) as usize;
        out
    }

    /// Layers of the differentiation letters, innermost first: top-layer
    /// letters act on `u` first, the lowest layer is applied last.
    pub fn letters_innermost_first(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.total());
        for k in (self.start..=self.step).rev() {
            out.extend(std::iter::repeat_n(k, self.get(k)));
        }
        out
    }

    /// All profiles on `start..=step` with total at most `max_total`.
    pub fn enumerate(step: usize, start: usize, max_total: usize) -> Vec<LayerProfile> {
        fn rec(slots: usize, budget: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
            if cur.len() == slots {
                out.push(cur.clone());
                return;
            }
            for c in 0..=budget {
                cur.push(c);
                rec(slots, budget - c, cur, out);
                cur.pop();
            }
        }
        let mut all = Vec::new();
        rec(step + 1 - start, max_total, &mut Vec::new(), &mut all);
        all.into_iter().map(|counts| LayerProfile { step, start, counts }).collect()
    }
}

impl fmt::Display for LayerProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.counts.iter().map(usize::to_string).collect();
        write!(f, "({})", parts.join(","))
    }
}

/// Commutation data for a letter alphabet.
pub trait LetterAlgebra {
    type Letter: Clone;
    fn layer(&self, l: &Self::Letter) -> usize;
    /// `[a, b]`, possibly a vanishing letter.
    fn bracket(&self, a: &Self::Letter, b: &Self::Letter) -> Self::Letter;
    fn vanishes(&self, l: &Self::Letter) -> bool;
}

/// Layer bookkeeping only: `[X^a, X^b]` is an anonymous letter of layer `a+b`.
#[derive(Clone, Copy, Debug)]
pub struct AbstractLetters {
    pub step: usize,
}

impl LetterAlgebra for AbstractLetters {
    type Letter = Letter;
    fn layer(&self, l: &Letter) -> usize {
        l.layer()
    }
    fn bracket(&self, a: &Letter, b: &Letter) -> Letter {
        Letter::Anonymous { layer: a.layer() + b.layer() }
    }
    fn vanishes(&self, l: &Letter) -> bool {
        l.layer() > self.step
    }
}

/// A homogeneous algebra element used as a letter.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExactLetter {
    pub layer: usize,
    pub element: AlgebraElement,
}

impl ExactLetter {
    pub fn basis(spec: &AlgebraSpec, label: BasisLabel) -> Self {
        ExactLetter { layer: label.layer, element: spec.basis_element(label) }
    }
}

/// Structure constants of a concrete algebra.
#[derive(Clone, Copy, Debug)]
pub struct ExactLetters<'a> {
    pub spec: &'a AlgebraSpec,
}

impl LetterAlgebra for ExactLetters<'_> {
    type Letter = ExactLetter;
    fn layer(&self, l: &ExactLetter) -> usize {
        l.layer
    }
    fn bracket(&self, a: &ExactLetter, b: &ExactLetter) -> ExactLetter {
        ExactLetter { layer: a.layer + b.layer, element: self.spec.bracket(&a.element, &b.element) }
    }
    fn vanishes(&self, l: &ExactLetter) -> bool {
        l.layer > self.spec.r || l.element.is_zero()
    }
}

/// Result of moving one letter to the right past a block.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Shifted<L> {
    pub principal: Vec<L>,
    /// One entry per letter passed, including vanishing ones.
    pub remainders: Vec<Vec<L>>,
}

/// Moves `word[at]` (layer `l`) right past the maximal run of layer `l−1`
/// letters that follows it: `Y A_1..A_k = A_1..A_k Y + Σ_s A_1..A_s [Y,A_{s+1}] A_{s+2}..A_k`.
pub fn shift_right<A: LetterAlgebra>(alg: &A, word: &[A::Letter], at: usize) -> Shifted<A::Letter> {
    let l = alg.layer(&word[at]);
    let k = word[at + 1..].iter().take_while(|x| l >= 2 && alg.layer(x) == l - 1).count();
    let mut principal = Vec::with_capacity(word.len());
    principal.extend_from_slice(&word[..at]);
    principal.extend_from_slice(&word[at + 1..at + 1 + k]);
    principal.push(word[at].clone());
    principal.extend_from_slice(&word[at + 1 + k..]);
    let remainders = (0..k)
        .map(|s| {
            let mut r = Vec::with_capacity(word.len() - 1);
            r.extend_from_slice(&word[..at]);
            r.extend_from_slice(&word[at + 1..at + 1 + s]);
            r.push(alg.bracket(&word[at], &word[at + 1 + s]));
            r.extend_from_slice(&word[at + 2 + s..]);
            r
        })
        .collect();
    Shifted { principal, remainders }
}

/// Sorts a word to ascending layer order (lowest layer outermost) using
/// `AB = BA + [A,B]` at the leftmost inversion. Returns `(word, principal)`
/// pairs whose sum equals the input as operators; vanishing words are dropped.
pub fn normalize<A: LetterAlgebra>(alg: &A, word: &[A::Letter]) -> Vec<(Vec<A::Letter>, bool)> {
    let mut out = Vec::new();
    let mut stack = vec![(word.to_vec(), true)];
    while let Some((w, principal)) = stack.pop() {
        if w.iter().any(|l| alg.vanishes(l)) {
            continue;
        }
        match (0..w.len().saturating_sub(1)).find(|&p| alg.layer(&w[p]) > alg.layer(&w[p + 1])) {
            None => out.push((w, principal)),
            Some(p) => {
                let mut rem = Vec::with_capacity(w.len() - 1);
                rem.extend_from_slice(&w[..p]);
                rem.push(alg.bracket(&w[p], &w[p + 1]));
                rem.extend_from_slice(&w[p + 2..]);
                let mut swapped = w;
                swapped.swap(p, p + 1);
                // Remainders are pushed first so the principal chain is finished
                // before them; output order is therefore deterministic.
                stack.push((rem, false));
                stack.push((swapped, principal));
            }
        }
    }
    out
}

/// Output of [`shift_commutator`] on an abstract word.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ShiftOutcome {
    pub principal: DerivativeWord,
    pub remainders: Vec<DerivativeWord>,
    /// Number of letters the anonymous letter moved past.
    pub passed: usize,
}

impl ShiftOutcome {
    /// Remainders that survive the layer cap.
    pub fn surviving(&self, step: usize) -> Vec<&DerivativeWord> {
        self.remainders.iter().filter(|w| !w.annihilated(step)).collect()
    }
}

/// Moves the anonymous letter at `at` right past the following block of
/// letters one layer below it.
pub fn shift_commutator(word: &DerivativeWord, at: usize, step: usize) -> Result<ShiftOutcome, RewriteError> {
    match word.letters.get(at) {
        Some(l) if l.is_anonymous() => {}
        _ => return Err(RewriteError::NoShiftableLetter { word: word.to_string(), at }),
    }
    let s = shift_right(&AbstractLetters { step }, &word.letters, at);
    Ok(ShiftOutcome {
        passed: s.remainders.len(),
        principal: DerivativeWord::new(s.principal),
        remainders: s.remainders.into_iter().map(DerivativeWord::new).collect(),
    })
}

/// [`shift_commutator`] on the leftmost anonymous letter.
pub fn shift_leftmost(word: &DerivativeWord, step: usize) -> Result<ShiftOutcome, RewriteError> {
    let at = word
        .letters
        .iter()
        .position(Letter::is_anonymous)
        .ok_or_else(|| RewriteError::NoShiftableLetter { word: word.to_string(), at: 0 })?;
    shift_commutator(word, at, step)
}
