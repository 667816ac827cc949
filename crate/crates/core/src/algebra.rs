//! Stratified nilpotent Lie algebras with exact rational structure constants.
//!
//! Basis elements are labelled `(k, i)`: layer `k` in `1..=r`, index `i` in
//! `1..=m_k`. Internally every element is a dense coefficient vector over the
//! flat basis, ordered by layer and then by index.

use crate::q::{fmt_q, qi, Q};
use num::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashMap};
use std::fmt;

/// Default ceiling on the total basis size.
pub const DEFAULT_BASIS_CAP: usize = 512;

/// Basis label `(k, i)`: layer first, then 1-based index inside the layer.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct BasisLabel {
    pub layer: usize,
    pub index: usize,
}

impl BasisLabel {
    pub const fn new(layer: usize, index: usize) -> Self {
        BasisLabel { layer, index }
    }
}

impl fmt::Display for BasisLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.layer, self.index)
    }
}

/// How a spec was produced.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpecKind {
    Free,
    Table,
}

/// A single broken invariant.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum Violation {
    /// `[a,[b,c]] + [b,[c,a]] + [c,[a,b]] != 0`.
    Jacobi { a: BasisLabel, b: BasisLabel, c: BasisLabel },
    /// `[a,b]` has support outside layer `k + l`, or is nonzero beyond the step.
    Grading { a: BasisLabel, b: BasisLabel },
    /// `[V^1, V^j]` spans only `rank` of the `expected` dimensions of `V^{j+1}`.
    Stratification { layer: usize, rank: usize, expected: usize },
    /// `[a,b] != -[b,a]` (including `[a,a] != 0`).
    Antisymmetry { a: BasisLabel, b: BasisLabel },
    /// A table entry names a label outside the basis.
    UnknownLabel { label: BasisLabel },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Jacobi { a, b, c } => write!(f, "JacobiViolation on {a} {b} {c}"),
            Violation::Grading { a, b } => write!(f, "GradingViolation on [{a},{b}]"),
            Violation::Stratification { layer, rank, expected } => write!(
                f,
                "StratificationViolation: [V^1,V^{layer}] has rank {rank}, expected {expected}"
            ),
            Violation::Antisymmetry { a, b } => write!(f, "AntisymmetryViolation on [{a},{b}]"),
            Violation::UnknownLabel { label } => write!(f, "unknown basis label {label}"),
        }
    }
}

#[derive(Clone, Debug, thiserror::Error, PartialEq)]
pub enum AlgebraError {
    #[error("invalid structure constants: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<Violation>),
    #[error("basis size exceeds cap {cap}")]
    BasisCap { cap: usize },
    #[error("bad layer dimensions: {0}")]
    BadDims(String),
    #[error("bad group specification: {0}")]
    BadSpec(String),
}

impl AlgebraError {
    pub fn violations(&self) -> &[Violation] {
        match self {
            AlgebraError::Invalid(v) => v,
            _ => &[],
        }
    }
}

/// Sparse linear combination of basis elements by flat index.
pub type Combination = Vec<(usize, Q)>;

/// A validated stratified Lie algebra.
#[derive(Clone, Debug)]
pub struct AlgebraSpec {
    pub kind: SpecKind,
    pub m: usize,
    pub r: usize,
    pub layer_dims: Vec<usize>,
    offsets: Vec<usize>,
    labels: Vec<BasisLabel>,
    /// `table[a * dim + b]` is `[e_a, e_b]`.
    table: Vec<Combination>,
}

/// Element of the algebra as a dense coefficient vector.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct AlgebraElement {
    pub coeffs: Vec<Q>,
}

impl AlgebraElement {
    pub fn zero(dim: usize) -> Self {
        AlgebraElement { coeffs: vec![Q::zero(); dim] }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(Zero::is_zero)
    }

    pub fn add(&self, other: &Self) -> Self {
        AlgebraElement {
            coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn scale(&self, c: &Q) -> Self {
        AlgebraElement { coeffs: self.coeffs.iter().map(|a| a * c).collect() }
    }

    pub fn neg(&self) -> Self {
        AlgebraElement { coeffs: self.coeffs.iter().map(|a| -a).collect() }
    }

    /// Nonzero entries as `(flat index, coefficient)`.
    pub fn support(&self) -> impl Iterator<Item = (usize, &Q)> {
        self.coeffs.iter().enumerate().filter(|(_, c)| !c.is_zero())
    }
}

impl AlgebraSpec {
    pub fn dim(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[BasisLabel] {
        &self.labels
    }

    pub fn label(&self, flat: usize) -> BasisLabel {
        self.labels[flat]
    }

    pub fn layer_of(&self, flat: usize) -> usize {
        self.labels[flat].layer
    }

    /// Flat index of `(k, i)`, if the label exists.
    pub fn flat(&self, label: BasisLabel) -> Option<usize> {
        if label.layer == 0 || label.layer > self.r {
            return None;
        }
        if label.index == 0 || label.index > self.layer_dims[label.layer - 1] {
            return None;
        }
        Some(self.offsets[label.layer - 1] + label.index - 1)
    }

    /// Flat index range of layer `k`.
    pub fn layer_range(&self, k: usize) -> std::ops::Range<usize> {
        self.offsets[k - 1]..self.offsets[k - 1] + self.layer_dims[k - 1]
    }

    /// `[e_a, e_b]` on flat indices.
    pub fn bracket_basis(&self, a: usize, b: usize) -> &Combination {
        &self.table[a * self.dim() + b]
    }

    pub fn basis_element(&self, label: BasisLabel) -> AlgebraElement {
        let mut e = AlgebraElement::zero(self.dim());
        let k = self.flat(label).expect("label outside the basis");
        e.coeffs[k] = Q::one();
        e
    }

    pub fn basis_element_flat(&self, flat: usize) -> AlgebraElement {
        let mut e = AlgebraElement::zero(self.dim());
        e.coeffs[flat] = Q::one();
        e
    }

    /// Bilinear extension of the structure constants.
    pub fn bracket(&self, a: &AlgebraElement, b: &AlgebraElement) -> AlgebraElement {
        let mut out = AlgebraElement::zero(self.dim());
        for (i, ca) in a.support() {
            for (j, cb) in b.support() {
                let c = self.bracket_basis(i, j);
                if c.is_empty() {
                    continue;
                }
                let w = ca * cb;
                for (k, ck) in c {
                    out.coeffs[k.to_owned()] += &w * ck;
                }
            }
        }
        out
    }

    /// Layer of a homogeneous element, `None` for zero or mixed elements.
    pub fn homogeneous_layer(&self, x: &AlgebraElement) -> Option<usize> {
        let mut layer = None;
        for (i, _) in x.support() {
            let l = self.layer_of(i);
            match layer {
                None => layer = Some(l),
                Some(prev) if prev != l => return None,
                _ => {}
            }
        }
        layer
    }

    /// `Q = Σ k·m_k`.
    pub fn homogeneous_dimension(&self) -> usize {
        self.layer_dims.iter().enumerate().map(|(k, m)| (k + 1) * m).sum()
    }

    fn skeleton(kind: SpecKind, layer_dims: Vec<usize>) -> Result<Self, AlgebraError> {
        if layer_dims.is_empty() || layer_dims.contains(&0) {
            return Err(AlgebraError::BadDims(format!("{layer_dims:?}")));
        }
        let mut offsets = Vec::with_capacity(layer_dims.len());
        let mut labels = Vec::new();
        let mut acc = 0;
        for (k, &mk) in layer_dims.iter().enumerate() {
            offsets.push(acc);
            acc += mk;
            labels.extend((1..=mk).map(|i| BasisLabel::new(k + 1, i)));
        }
        let dim = labels.len();
        Ok(AlgebraSpec {
            kind,
            m: layer_dims[0],
            r: layer_dims.len(),
            layer_dims,
            offsets,
            labels,
            table: vec![Vec::new(); dim * dim],
        })
    }

    /// Every antisymmetry, grading and Jacobi violation of the stored table.
    pub fn invariant_violations(&self) -> Vec<Violation> {
        let dim = self.dim();
        let mut out = Vec::new();
        for a in 0..dim {
            for b in a..dim {
                let ab = self.bracket_basis(a, b);
                let ba = self.bracket_basis(b, a);
                let mut sum: BTreeMap<usize, Q> = BTreeMap::new();
                for (k, c) in ab.iter().chain(ba.iter()) {
                    *sum.entry(*k).or_insert_with(Q::zero) += c;
                }
                if sum.values().any(|c| !c.is_zero()) {
                    out.push(Violation::Antisymmetry { a: self.labels[a], b: self.labels[b] });
                }
                let target = self.layer_of(a) + self.layer_of(b);
                if ab.iter().any(|(k, c)| !c.is_zero() && self.layer_of(*k) != target) {
                    out.push(Violation::Grading { a: self.labels[a], b: self.labels[b] });
                }
            }
        }
        if !out.is_empty() {
            return out;
        }
        for a in 0..dim {
            for b in a + 1..dim {
                for c in b + 1..dim {
                    if self.layer_of(a) + self.layer_of(b) + self.layer_of(c) > self.r {
                        continue;
                    }
                    let (ea, eb, ec) =
                        (self.basis_element_flat(a), self.basis_element_flat(b), self.basis_element_flat(c));
                    let j = self
                        .bracket(&ea, &self.bracket(&eb, &ec))
                        .add(&self.bracket(&eb, &self.bracket(&ec, &ea)))
                        .add(&self.bracket(&ec, &self.bracket(&ea, &eb)));
                    if !j.is_zero() {
                        out.push(Violation::Jacobi { a: self.labels[a], b: self.labels[b], c: self.labels[c] });
                    }
                }
            }
        }
        out
    }
}

/// Per-layer outcome of the stratification check.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LayerRank {
    /// `j` in `[V^1, V^j]`.
    pub layer: usize,
    pub rank: usize,
    pub expected: usize,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct StratificationReport {
    pub layers: Vec<LayerRank>,
    /// Brackets with the top layer vanish.
    pub top_layer_central: bool,
    pub pass: bool,
}

/// Rank of a set of rational vectors by exact elimination.
pub fn rank(rows: &[Vec<Q>]) -> usize {
    let mut m: Vec<Vec<Q>> = rows.iter().filter(|r| r.iter().any(|x| !x.is_zero())).cloned().collect();
    let cols = m.first().map_or(0, Vec::len);
    let mut rank = 0;
    for col in 0..cols {
        let Some(p) = (rank..m.len()).find(|&i| !m[i][col].is_zero()) else {
            continue;
        };
        m.swap(rank, p);
        let pivot = m[rank][col].clone();
        for i in 0..m.len() {
            if i != rank && !m[i][col].is_zero() {
                let f = &m[i][col] / &pivot;
                for c in col..cols {
                    let v = &f * &m[rank][c];
                    m[i][c] -= v;
                }
            }
        }
        rank += 1;
    }
    rank
}

/// Rank of `span{[V^1, V^j]}` against `m_{j+1}` for every `1 ≤ j < r`.
pub fn verify_stratification(spec: &AlgebraSpec) -> StratificationReport {
    let mut layers = Vec::new();
    for j in 1..spec.r {
        let target = spec.layer_range(j + 1);
        let mut rows = Vec::new();
        for a in spec.layer_range(1) {
            for b in spec.layer_range(j) {
                let mut row = vec![Q::zero(); target.len()];
                for (k, c) in spec.bracket_basis(a, b) {
                    if target.contains(k) {
                        row[k - target.start] += c;
                    }
                }
                rows.push(row);
            }
        }
        let rk = rank(&rows);
        let expected = spec.layer_dims[j];
        layers.push(LayerRank { layer: j, rank: rk, expected, pass: rk == expected });
    }
    let top = spec.layer_range(spec.r);
    let top_layer_central = top
        .clone()
        .all(|a| (0..spec.dim()).all(|b| spec.bracket_basis(a, b).iter().all(|(_, c)| c.is_zero())));
    let pass = top_layer_central && layers.iter().all(|l| l.pass);
    StratificationReport { layers, top_layer_central, pass }
}

// ---------------------------------------------------------------------------
// Free nilpotent algebras from the Lyndon (Hall) basis.

type WordPoly = BTreeMap<Vec<u8>, Q>;

/// Lyndon words over `0..m` of length `1..=n`, lexicographic, stopping early
/// once more than `cap` words have been produced.
fn lyndon_words(m: usize, n: usize, cap: usize) -> Option<Vec<Vec<u8>>> {
    let mut out = Vec::new();
    let mut w: Vec<i32> = vec![-1];
    while let Some(last) = w.last_mut() {
        *last += 1;
        out.push(w.iter().map(|&x| x as u8).collect::<Vec<u8>>());
        if out.len() > cap {
            return None;
        }
        let len = w.len();
        while w.len() < n {
            let x = w[w.len() - len];
            w.push(x);
        }
        while w.last().is_some_and(|&x| x as usize == m - 1) {
            w.pop();
        }
    }
    Some(out)
}

fn is_lyndon(w: &[u8]) -> bool {
    !w.is_empty() && (1..w.len()).all(|i| w < &w[i..])
}

/// Standard factorisation `w = u v` with `v` the longest proper Lyndon suffix.
fn standard_split(w: &[u8]) -> usize {
    (1..w.len()).find(|&i| is_lyndon(&w[i..])).expect("Lyndon word of length ≥ 2")
}

fn poly_mul(a: &WordPoly, b: &WordPoly) -> WordPoly {
    let mut out = WordPoly::new();
    for (wa, ca) in a {
        for (wb, cb) in b {
            let mut w = wa.clone();
            w.extend_from_slice(wb);
            *out.entry(w).or_insert_with(Q::zero) += ca * cb;
        }
    }
    out.retain(|_, c| !c.is_zero());
    out
}

fn poly_commutator(a: &WordPoly, b: &WordPoly) -> WordPoly {
    let mut out = poly_mul(a, b);
    for (w, c) in poly_mul(b, a) {
        *out.entry(w).or_insert_with(Q::zero) -= c;
    }
    out.retain(|_, c| !c.is_zero());
    out
}

/// Free nilpotent Lie algebra on `m` generators of step `r`, with the default cap.
pub fn build_free_nilpotent(m: usize, r: usize) -> Result<AlgebraSpec, AlgebraError> {
    build_free_nilpotent_capped(m, r, DEFAULT_BASIS_CAP)
}

pub fn build_free_nilpotent_capped(m: usize, r: usize, cap: usize) -> Result<AlgebraSpec, AlgebraError> {
    if m == 0 || r == 0 {
        return Err(AlgebraError::BadDims(format!("m={m}, r={r}")));
    }
    if m > u8::MAX as usize {
        return Err(AlgebraError::BasisCap { cap });
    }
    let mut words = lyndon_words(m, r, cap).ok_or(AlgebraError::BasisCap { cap })?;
    words.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    let mut layer_dims = vec![0usize; r];
    for w in &words {
        layer_dims[w.len() - 1] += 1;
    }
    if layer_dims.contains(&0) {
        // m = 1: only the generator survives, the algebra is abelian of step 1.
        layer_dims.retain(|&d| d > 0);
    }
    let mut spec = AlgebraSpec::skeleton(SpecKind::Free, layer_dims)?;
    let index: HashMap<Vec<u8>, usize> = words.iter().cloned().enumerate().map(|(i, w)| (w, i)).collect();

    // Associative expansion of each standard bracketing.
    let mut expansion: Vec<WordPoly> = Vec::with_capacity(words.len());
    for w in &words {
        let p = if w.len() == 1 {
            WordPoly::from([(w.clone(), Q::one())])
        } else {
            let s = standard_split(w);
            poly_commutator(&expansion[index[&w[..s]]], &expansion[index[&w[s..]]])
        };
        expansion.push(p);
    }

    let dim = words.len();
    for a in 0..dim {
        for b in a + 1..dim {
            if words[a].len() + words[b].len() > spec.r {
                continue;
            }
            let mut rest = poly_commutator(&expansion[a], &expansion[b]);
            let mut comb = Vec::new();
            // Triangularity: the least word of a Lie polynomial is the least
            // Lyndon word in its basis expansion.
            while let Some((w, c)) = rest.iter().next().map(|(w, c)| (w.clone(), c.clone())) {
                let k = *index.get(&w).expect("least word of a Lie polynomial is Lyndon");
                for (u, cu) in &expansion[k] {
                    *rest.entry(u.clone()).or_insert_with(Q::zero) -= &c * cu;
                }
                rest.retain(|_, x| !x.is_zero());
                comb.push((k, c));
            }
            comb.sort_by_key(|(k, _)| *k);
            let neg = comb.iter().map(|(k, c)| (*k, -c)).collect();
            spec.table[a * dim + b] = comb;
            spec.table[b * dim + a] = neg;
        }
    }
    Ok(spec)
}

/// One user-supplied bracket `[a, b] = Σ c·out`.
#[derive(Clone, Debug, PartialEq)]
pub struct TableEntry {
    pub a: BasisLabel,
    pub b: BasisLabel,
    pub out: Vec<(BasisLabel, Q)>,
}

/// Validates a user bracket table. Unlisted pairs are zero; listing only one
/// of `[a,b]`, `[b,a]` is enough, the other is filled in by antisymmetry.
pub fn build_from_table(layer_dims: &[usize], table: &[TableEntry]) -> Result<AlgebraSpec, AlgebraError> {
    let mut spec = AlgebraSpec::skeleton(SpecKind::Table, layer_dims.to_vec())?;
    let dim = spec.dim();
    let mut violations = Vec::new();
    let mut given: BTreeMap<(usize, usize), BTreeMap<usize, Q>> = BTreeMap::new();
    for e in table {
        let (Some(a), Some(b)) = (spec.flat(e.a), spec.flat(e.b)) else {
            for l in [e.a, e.b] {
                if spec.flat(l).is_none() {
                    violations.push(Violation::UnknownLabel { label: l });
                }
            }
            continue;
        };
        let entry = given.entry((a, b)).or_default();
        for (l, c) in &e.out {
            match spec.flat(*l) {
                Some(k) => *entry.entry(k).or_insert_with(Q::zero) += c,
                None if l.layer > spec.r && e.a.layer + e.b.layer > spec.r => {
                    // Beyond the step: must be zero, reported as a grading failure.
                    if !c.is_zero() {
                        violations.push(Violation::Grading { a: e.a, b: e.b });
                    }
                }
                None => violations.push(Violation::UnknownLabel { label: *l }),
            }
        }
    }
    if !violations.is_empty() {
        return Err(AlgebraError::Invalid(violations));
    }
    let comb = |m: &BTreeMap<usize, Q>| -> Combination {
        m.iter().filter(|(_, c)| !c.is_zero()).map(|(k, c)| (*k, c.clone())).collect()
    };
    for (&(a, b), out) in &given {
        let c = comb(out);
        if a == b {
            if !c.is_empty() {
                violations.push(Violation::Antisymmetry { a: spec.labels[a], b: spec.labels[b] });
            }
            continue;
        }
        if let Some(rev) = given.get(&(b, a)) {
            let sum: BTreeMap<usize, Q> = c
                .iter()
                .chain(comb(rev).iter())
                .fold(BTreeMap::new(), |mut acc, (k, x)| {
                    *acc.entry(*k).or_insert_with(Q::zero) += x;
                    acc
                });
            if sum.values().any(|x| !x.is_zero()) && a < b {
                violations.push(Violation::Antisymmetry { a: spec.labels[a], b: spec.labels[b] });
            }
        }
        spec.table[b * dim + a] = c.iter().map(|(k, x)| (*k, -x)).collect();
        spec.table[a * dim + b] = c;
    }
    if !violations.is_empty() {
        return Err(AlgebraError::Invalid(violations));
    }
    let inv = spec.invariant_violations();
    if !inv.is_empty() {
        return Err(AlgebraError::Invalid(inv));
    }
    let strat = verify_stratification(&spec);
    if !strat.pass {
        let v = strat
            .layers
            .iter()
            .filter(|l| !l.pass)
            .map(|l| Violation::Stratification { layer: l.layer, rank: l.rank, expected: l.expected })
            .collect();
        return Err(AlgebraError::Invalid(v));
    }
    Ok(spec)
}

/// Heisenberg algebra: `[X_(1,1), X_(1,2)] = X_(2,1)`.
pub fn heisenberg() -> AlgebraSpec {
    build_from_table(&[2, 1], &[TableEntry {
        a: BasisLabel::new(1, 1),
        b: BasisLabel::new(1, 2),
        out: vec![(BasisLabel::new(2, 1), Q::one())],
    }])
    .expect("Heisenberg table is valid")
}

/// Engel algebra, layers `[2,1,1]`: `[X_(1,1), X_(1,2)] = X_(2,1)`,
/// `[X_(1,1), X_(2,1)] = X_(3,1)`, `[X_(1,2), X_(2,1)] = 0`.
pub fn engel() -> AlgebraSpec {
    build_from_table(&engel_dims(), &engel_table()).expect("Engel table is valid")
}

pub fn engel_dims() -> Vec<usize> {
    vec![2, 1, 1]
}

pub fn engel_table() -> Vec<TableEntry> {
    vec![
        TableEntry {
            a: BasisLabel::new(1, 1),
            b: BasisLabel::new(1, 2),
            out: vec![(BasisLabel::new(2, 1), Q::one())],
        },
        TableEntry {
            a: BasisLabel::new(1, 1),
            b: BasisLabel::new(2, 1),
            out: vec![(BasisLabel::new(3, 1), Q::one())],
        },
    ]
}

/// Resolves `heisenberg`, `engel` or `free:m,r`.
pub fn builtin(name: &str) -> Result<AlgebraSpec, AlgebraError> {
    let name = name.trim();
    match name {
        "heisenberg" => Ok(heisenberg()),
        "engel" => Ok(engel()),
        _ => {
            let rest = name
                .strip_prefix("free:")
                .ok_or_else(|| AlgebraError::BadSpec(format!("unknown builtin group `{name}`")))?;
            let (m, r) = rest
                .split_once(',')
                .ok_or_else(|| AlgebraError::BadSpec(format!("expected free:m,r, got `{name}`")))?;
            let m = m.trim().parse().map_err(|_| AlgebraError::BadSpec(format!("bad m in `{name}`")))?;
            let r = r.trim().parse().map_err(|_| AlgebraError::BadSpec(format!("bad r in `{name}`")))?;
            build_free_nilpotent(m, r)
        }
    }
}

// ---------------------------------------------------------------------------
// Group-spec JSON model.

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutJson {
    pub basis: [usize; 2],
    pub num: i64,
    pub den: i64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BracketJson {
    pub a: [usize; 2],
    pub b: [usize; 2],
    pub out: Vec<OutJson>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpecJson {
    pub kind: SpecKind,
    pub m: usize,
    pub r: usize,
    pub layer_dims: Vec<usize>,
    #[serde(default)]
    pub brackets: Vec<BracketJson>,
}

impl AlgebraSpec {
    /// JSON model listing every nonzero `[a,b]` with `a < b`.
    pub fn to_json_model(&self) -> SpecJson {
        let mut brackets = Vec::new();
        for a in 0..self.dim() {
            for b in a + 1..self.dim() {
                let c = self.bracket_basis(a, b);
                if c.is_empty() {
                    continue;
                }
                let la = self.labels[a];
                let lb = self.labels[b];
                brackets.push(BracketJson {
                    a: [la.layer, la.index],
                    b: [lb.layer, lb.index],
                    out: c
                        .iter()
                        .map(|(k, x)| {
                            let l = self.labels[*k];
                            OutJson {
                                basis: [l.layer, l.index],
                                num: x.numer().to_i64().expect("structure constant fits in i64"),
                                den: x.denom().to_i64().expect("structure constant fits in i64"),
                            }
                        })
                        .collect(),
                });
            }
        }
        SpecJson { kind: self.kind, m: self.m, r: self.r, layer_dims: self.layer_dims.clone(), brackets }
    }

    /// Rebuilds a spec from its JSON model. `free` specs are regenerated and
    /// their dimensions compared; `table` specs are validated.
    pub fn from_json_model(model: &SpecJson) -> Result<AlgebraSpec, AlgebraError> {
        if model.layer_dims.len() != model.r || model.layer_dims.first() != Some(&model.m) {
            return Err(AlgebraError::BadSpec(format!(
                "m={} r={} inconsistent with layer_dims {:?}",
                model.m, model.r, model.layer_dims
            )));
        }
        match model.kind {
            SpecKind::Free => {
                let spec = build_free_nilpotent(model.m, model.r)?;
                if spec.layer_dims != model.layer_dims {
                    return Err(AlgebraError::BadSpec(format!(
                        "free({},{}) has layer_dims {:?}, file says {:?}",
                        model.m, model.r, spec.layer_dims, model.layer_dims
                    )));
                }
                Ok(spec)
            }
            SpecKind::Table => {
                let mut entries = Vec::new();
                for br in &model.brackets {
                    let mut out = Vec::new();
                    for o in &br.out {
                        if o.den == 0 {
                            return Err(AlgebraError::BadSpec("zero denominator".into()));
                        }
                        out.push((BasisLabel::new(o.basis[0], o.basis[1]), crate::q::qr(o.num, o.den)));
                    }
                    entries.push(TableEntry {
                        a: BasisLabel::new(br.a[0], br.a[1]),
                        b: BasisLabel::new(br.b[0], br.b[1]),
                        out,
                    });
                }
                build_from_table(&model.layer_dims, &entries)
            }
        }
    }

    /// Human-readable bracket table, one line per nonzero `[a,b]` with `a < b`.
    pub fn describe_brackets(&self) -> Vec<String> {
        let mut lines = Vec::new();
        for a in 0..self.dim() {
            for b in a + 1..self.dim() {
                let c = self.bracket_basis(a, b);
                if c.is_empty() {
                    continue;
                }
                let rhs: Vec<String> = c
                    .iter()
                    .map(|(k, x)| {
                        let s = if x.is_one() {
                            String::new()
                        } else if x.is_negative() && (-x).is_one() {
                            "-".into()
                        } else {
                            format!("{}*", fmt_q(x))
                        };
                        format!("{s}X{}", self.labels[*k])
                    })
                    .collect();
                lines.push(format!("[X{},X{}] = {}", self.labels[a], self.labels[b], rhs.join(" + ")));
            }
        }
        lines
    }
}

/// Convenience: the integer `n` as an element coefficient.
pub fn coeff(n: i64) -> Q {
    qi(n)
}
