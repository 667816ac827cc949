//! Exact soundness oracle: every rewrite is an operator identity, so both
//! sides must agree when applied to a polynomial through the group's fields.

use super::expand::{f_terms_raw, fi_terms_raw, Slot, StructuralTerm, Target};
use super::word::{normalize, shift_right, ExactLetter, ExactLetters};
use crate::algebra::{AlgebraElement, AlgebraSpec, BasisLabel};
use crate::fields::{FieldSet, SystemCoefficients};
use crate::poly::{Monomial, Polynomial};
use crate::q::{qi, Q};
use num::Zero;
use rand::Rng;
use serde::Serialize;

/// Applies the word (outermost first) to `u`.
pub fn apply_word(fields: &FieldSet, word: &[ExactLetter], u: &Polynomial) -> Polynomial {
    word.iter().rev().fold(u.clone(), |acc, l| if acc.is_zero() { acc } else { fields.apply_element(&l.element, &acc) })
}

/// Differentiation data shared by the expansion checks. `fi[i][α]`.
#[derive(Clone, Debug)]
pub struct SystemData {
    pub a: SystemCoefficients,
    pub fi: Vec<Vec<Polynomial>>,
    pub f: Vec<Polynomial>,
}

/// A rewrite instance to verify.
#[derive(Clone, Debug)]
pub enum IdentityCase {
    /// Move `word[at]` right past the following block one layer below it.
    Shift { word: Vec<ExactLetter>, at: usize },
    /// Sort a word by layer.
    Normalize { word: Vec<ExactLetter> },
    /// Closed-form `f` expansion against the one-letter-at-a-time recursion.
    ExpandF { letters: Vec<ExactLetter>, data: SystemData },
    /// Closed-form `f_i` expansion against the recursion.
    ExpandFi { letters: Vec<ExactLetter>, data: SystemData },
    /// With `f` defined by the strong form, the differentiated function solves
    /// the system with the closed-form data.
    DifferentiatedSystem { letters: Vec<ExactLetter>, a: SystemCoefficients, fi: Vec<Vec<Polynomial>> },
}

impl IdentityCase {
    pub fn rule(&self) -> &'static str {
        match self {
            IdentityCase::Shift { .. } => "L4-shift",
            IdentityCase::Normalize { .. } => "normalize",
            IdentityCase::ExpandF { .. } => "expand-f",
            IdentityCase::ExpandFi { .. } => "expand-fi",
            IdentityCase::DifferentiatedSystem { .. } => "differentiated-system",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct IdentityReport {
    pub rule: String,
    /// Terms on the rewritten side.
    pub terms: usize,
    pub pass: bool,
}

fn horizontal(spec: &AlgebraSpec, i: usize) -> ExactLetter {
    ExactLetter::basis(spec, BasisLabel::new(1, i + 1))
}

/// Letters of one structural term for fixed indices `i, j` (0-based).
fn resolve(spec: &AlgebraSpec, letters: &[ExactLetter], term: &StructuralTerm, i: usize, j: usize) -> Vec<ExactLetter> {
    let alg = ExactLetters { spec };
    use super::word::LetterAlgebra;
    term.slots
        .iter()
        .map(|s| match *s {
            Slot::Diff(t) => letters[t - 1].clone(),
            Slot::HiComm(t) => alg.bracket(&horizontal(spec, i), &letters[t - 1]),
            Slot::LoComm(t) => alg.bracket(&letters[t - 1], &horizontal(spec, j)),
            Slot::HorJ => horizontal(spec, j),
        })
        .collect()
}

/// Value of one term for component `alpha`; `free_i` fixes the divergence
/// index for `f_i` expansions, otherwise it is summed.
fn eval_term(
    fields: &FieldSet,
    letters: &[ExactLetter],
    term: &StructuralTerm,
    data: &SystemData,
    u: &[Polynomial],
    free_i: Option<usize>,
    alpha: usize,
) -> Polynomial {
    let spec = fields.spec();
    let m = spec.m;
    let irange: Vec<usize> = free_i.map_or_else(|| (0..m).collect(), |i| vec![i]);
    let mut out = Polynomial::zero();
    match term.target {
        Target::F => out = apply_word(fields, &resolve(spec, letters, term, 0, 0), &data.f[alpha]),
        Target::Fi => {
            for &i in &irange {
                let w = resolve(spec, letters, term, i, 0);
                out = out.add_ref(&apply_word(fields, &w, &data.fi[i][alpha]));
            }
        }
        Target::U => {
            for &i in &irange {
                for j in 0..m {
                    let w = resolve(spec, letters, term, i, j);
                    for (beta, ub) in u.iter().enumerate() {
                        let c = data.a.get(alpha, beta, i, j);
                        if !c.is_zero() {
                            out.add_scaled(&apply_word(fields, &w, ub), c);
                        }
                    }
                }
            }
        }
    }
    out
}

/// `(V_n, f_{i,n}, f_n)` by applying one letter at a time (innermost first).
pub fn recursion(
    fields: &FieldSet,
    letters: &[ExactLetter],
    data: &SystemData,
    u: &[Polynomial],
) -> (Vec<Polynomial>, Vec<Vec<Polynomial>>, Vec<Polynomial>) {
    let spec = fields.spec();
    let alg = ExactLetters { spec };
    use super::word::LetterAlgebra;
    let (n, m) = (u.len(), spec.m);
    let mut v = u.to_vec();
    let mut fi = data.fi.clone();
    let mut f = data.f.clone();
    for l in letters {
        let lo: Vec<AlgebraElement> = (0..m).map(|j| alg.bracket(l, &horizontal(spec, j)).element).collect();
        let hi: Vec<AlgebraElement> = (0..m).map(|i| alg.bracket(&horizontal(spec, i), l).element).collect();
        let xv: Vec<Vec<Polynomial>> = (0..m).map(|j| v.iter().map(|vb| fields.horizontal(j + 1).apply(vb)).collect()).collect();
        let lov: Vec<Vec<Polynomial>> = lo.iter().map(|e| v.iter().map(|vb| fields.apply_element(e, vb)).collect()).collect();
        let mut new_fi = vec![vec![Polynomial::zero(); n]; m];
        let mut new_f = vec![Polynomial::zero(); n];
        for al in 0..n {
            new_f[al] = fields.apply_element(&l.element, &f[al]);
            for i in 0..m {
                let mut fi_t = fields.apply_element(&l.element, &fi[i][al]);
                let mut inner = fi[i][al].clone();
                for j in 0..m {
                    for be in 0..n {
                        let c = data.a.get(al, be, i, j);
                        if !c.is_zero() {
                            fi_t.add_scaled(&lov[j][be], c);
                            inner.add_scaled(&xv[j][be], c);
                        }
                    }
                }
                new_fi[i][al] = fi_t;
                new_f[al] = new_f[al].add_ref(&fields.apply_element(&hi[i], &inner));
            }
        }
        v = v.iter().map(|vb| fields.apply_element(&l.element, vb)).collect();
        fi = new_fi;
        f = new_f;
    }
    (v, fi, f)
}

fn layers_of(letters: &[ExactLetter]) -> Vec<usize> {
    letters.iter().map(|l| l.layer).collect()
}

/// Closed-form `f_{i,n}[i][α]`.
pub fn closed_form_fi(fields: &FieldSet, letters: &[ExactLetter], data: &SystemData, u: &[Polynomial]) -> Vec<Vec<Polynomial>> {
    let layers = layers_of(letters);
    let lowest = layers.iter().copied().min().unwrap_or(1);
    let terms = fi_terms_raw(&layers, lowest);
    (0..fields.spec().m)
        .map(|i| {
            (0..u.len())
                .map(|al| terms.iter().fold(Polynomial::zero(), |acc, t| acc.add_ref(&eval_term(fields, letters, t, data, u, Some(i), al))))
                .collect()
        })
        .collect()
}

/// Closed-form `f_n[α]`.
pub fn closed_form_f(fields: &FieldSet, letters: &[ExactLetter], data: &SystemData, u: &[Polynomial]) -> Vec<Polynomial> {
    let layers = layers_of(letters);
    let lowest = layers.iter().copied().min().unwrap_or(1);
    let terms = f_terms_raw(&layers, lowest);
    (0..u.len())
        .map(|al| terms.iter().fold(Polynomial::zero(), |acc, t| acc.add_ref(&eval_term(fields, letters, t, data, u, None, al))))
        .collect()
}

/// `Σ_i X_i(A X_j u + f_i)` per component.
fn divergence_form(fields: &FieldSet, a: &SystemCoefficients, u: &[Polynomial], fi: &[Vec<Polynomial>]) -> Vec<Polynomial> {
    let zero = vec![Polynomial::zero(); u.len()];
    crate::fields::system_residual(fields, a, u, fi, &zero)
}

/// Checks one rewrite exactly on the vector-valued test function `u`.
pub fn verify_rewrite_identity(fields: &FieldSet, case: &IdentityCase, u: &[Polynomial]) -> IdentityReport {
    let spec = fields.spec();
    let alg = ExactLetters { spec };
    let (terms, pass) = match case {
        IdentityCase::Shift { word, at } => {
            let s = shift_right(&alg, word, *at);
            let pass = u.iter().all(|ub| {
                let lhs = apply_word(fields, word, ub);
                let rhs = s
                    .remainders
                    .iter()
                    .fold(apply_word(fields, &s.principal, ub), |acc, w| acc.add_ref(&apply_word(fields, w, ub)));
                lhs == rhs
            });
            (1 + s.remainders.len(), pass)
        }
        IdentityCase::Normalize { word } => {
            let out = normalize(&alg, word);
            let pass = u.iter().all(|ub| {
                let rhs = out.iter().fold(Polynomial::zero(), |acc, (w, _)| acc.add_ref(&apply_word(fields, w, ub)));
                apply_word(fields, word, ub) == rhs
            });
            (out.len(), pass)
        }
        IdentityCase::ExpandF { letters, data } => {
            let (_, _, f) = recursion(fields, letters, data, u);
            let layers = layers_of(letters);
            (f_terms_raw(&layers, layers.iter().copied().min().unwrap_or(1)).len(), closed_form_f(fields, letters, data, u) == f)
        }
        IdentityCase::ExpandFi { letters, data } => {
            let (_, fi, _) = recursion(fields, letters, data, u);
            let layers = layers_of(letters);
            (fi_terms_raw(&layers, layers.iter().copied().min().unwrap_or(1)).len(), closed_form_fi(fields, letters, data, u) == fi)
        }
        IdentityCase::DifferentiatedSystem { letters, a, fi } => {
            let f = divergence_form(fields, a, u, fi);
            let data = SystemData { a: a.clone(), fi: fi.clone(), f };
            let v: Vec<Polynomial> = u.iter().map(|ub| apply_word(fields, &letters.iter().rev().cloned().collect::<Vec<_>>(), ub)).collect();
            let fi_n = closed_form_fi(fields, letters, &data, u);
            let f_n = closed_form_f(fields, letters, &data, u);
            let lhs = divergence_form(fields, a, &v, &fi_n);
            (fi_n.len() * u.len() + f_n.len(), lhs == f_n)
        }
    };
    IdentityReport { rule: case.rule().into(), terms, pass }
}

/// Random polynomial with small integer coefficients and total degree at most `degree`.
pub fn random_polynomial<R: Rng>(dim: usize, degree: u32, terms: usize, rng: &mut R) -> Polynomial {
    let mut p = Polynomial::zero();
    for _ in 0..terms {
        let mut exps = vec![0u32; dim];
        let d = rng.gen_range(0..=degree);
        for _ in 0..d {
            exps[rng.gen_range(0..dim)] += 1;
        }
        let c: i64 = rng.gen_range(-4..=4);
        if c != 0 {
            p.add_term(Monomial::from_exponents(&exps), qi(c));
        }
    }
    p
}

fn random_letter<R: Rng>(spec: &AlgebraSpec, layer: usize, rng: &mut R) -> ExactLetter {
    let range = spec.layer_range(layer);
    let mut e = AlgebraElement::zero(spec.dim());
    // Anonymous-style letters: a random combination within the layer.
    for k in range.clone() {
        if rng.gen_bool(0.6) || k + 1 == range.end {
            e.coeffs[k] += qi(rng.gen_range(-2..=2));
        }
    }
    if e.is_zero() {
        e.coeffs[range.start] = Q::from_integer(1.into());
    }
    ExactLetter { layer, element: e }
}

fn random_coefficients<R: Rng>(n: usize, m: usize, rng: &mut R) -> SystemCoefficients {
    let a = (0..n * n * m * m).map(|_| qi(rng.gen_range(-2..=2))).collect();
    SystemCoefficients { n, m, a, lambda: 0.0 }
}

/// Draws one verification case on `fields`, with its vector test function.
pub fn random_identity_case<R: Rng>(fields: &FieldSet, rng: &mut R) -> (IdentityCase, Vec<Polynomial>) {
    let spec = fields.spec();
    let (dim, r, m) = (spec.dim(), spec.r, spec.m);
    let ncomp = rng.gen_range(1..=2);
    let u: Vec<Polynomial> = (0..ncomp).map(|_| random_polynomial(dim, 4, 5, rng)).collect();
    let upper = r.max(2);
    let profile_letters = |rng: &mut R| -> Vec<ExactLetter> {
        let n = rng.gen_range(1..=3);
        let mut layers: Vec<usize> = (0..n).map(|_| rng.gen_range(2.min(r)..=upper.min(r))).collect();
        layers.sort_unstable_by(|a, b| b.cmp(a));
        layers.into_iter().map(|k| random_letter(spec, k, rng)).collect()
    };
    let data = |rng: &mut R| -> SystemData {
        SystemData {
            a: random_coefficients(ncomp, m, rng),
            fi: (0..m).map(|_| (0..ncomp).map(|_| random_polynomial(dim, 3, 3, rng)).collect()).collect(),
            f: (0..ncomp).map(|_| random_polynomial(dim, 3, 3, rng)).collect(),
        }
    };
    let case = match rng.gen_range(0..5) {
        0 => {
            let l = rng.gen_range(2.min(r)..=r);
            let mut word = Vec::new();
            for _ in 0..rng.gen_range(0..=1) {
                word.push(random_letter(spec, rng.gen_range(1..=r), rng));
            }
            let at = word.len();
            word.push(random_letter(spec, l, rng));
            for _ in 0..rng.gen_range(0..=2) {
                word.push(random_letter(spec, l.saturating_sub(1).max(1), rng));
            }
            IdentityCase::Shift { word, at }
        }
        1 => {
            let n = rng.gen_range(1..=4);
            IdentityCase::Normalize { word: (0..n).map(|_| random_letter(spec, rng.gen_range(1..=r), rng)).collect() }
        }
        2 => IdentityCase::ExpandF { letters: profile_letters(rng), data: data(rng) },
        3 => IdentityCase::ExpandFi { letters: profile_letters(rng), data: data(rng) },
        _ => {
            let d = data(rng);
            IdentityCase::DifferentiatedSystem { letters: profile_letters(rng), a: d.a, fi: d.fi }
        }
    };
    (case, u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::heisenberg;

    #[test]
    fn heisenberg_single_pass() {
        let spec = heisenberg();
        let fields = FieldSet::new(&spec);
        let word = vec![ExactLetter::basis(&spec, BasisLabel::new(2, 1)), ExactLetter::basis(&spec, BasisLabel::new(1, 1))];
        let u = Polynomial::var(0).mul_ref(&Polynomial::var(1));
        let rep = verify_rewrite_identity(&fields, &IdentityCase::Shift { word, at: 0 }, &[u]);
        assert!(rep.pass);
        assert_eq!(rep.terms, 2);
    }
}
