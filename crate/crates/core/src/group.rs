//! The group law in exponential coordinates of the first kind.
//!
//! The product is `log(exp X · exp Y)`, given by Dynkin's series truncated at
//! the step. The series is expanded once per algebra into polynomials in the
//! coordinates of both factors ([`GroupLaw`]), which then serve exact rational
//! evaluation, double-precision evaluation and symbolic differentiation.

use crate::algebra::{AlgebraSpec, BasisLabel};
use crate::par;
use crate::poly::{CompiledPoly, Polynomial};
use crate::q::{factorial, qi, to_f64, Ring, Q};
use num::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::collections::HashMap;

/// Group element by its exponential coordinates, in flat basis order.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Point<S = Q> {
    pub coords: Vec<S>,
}

impl<S: Ring> Point<S> {
    pub fn new(coords: Vec<S>) -> Self {
        Point { coords }
    }

    pub fn identity(dim: usize) -> Self {
        Point { coords: vec![S::ring_zero(); dim] }
    }

    pub fn is_identity(&self) -> bool {
        self.coords.iter().all(Ring::is_ring_zero)
    }
}

impl Point<Q> {
    pub fn to_f64(&self) -> Point<f64> {
        Point { coords: self.coords.iter().map(to_f64).collect() }
    }
}

// ---------------------------------------------------------------------------
// Dynkin coefficients.

/// Words over `{0 = X, 1 = Y}` with their Dynkin coefficient, for all degrees
/// up to `r`. Words whose right-nested bracket vanishes identically (ending in
/// a repeated letter) are dropped.
pub fn dynkin_words(r: usize) -> Vec<(Vec<u8>, Q)> {
    let mut out = Vec::new();
    for len in 1..=r {
        for bits in 0..(1u32 << len) {
            let w: Vec<u8> = (0..len).map(|i| ((bits >> (len - 1 - i)) & 1) as u8).collect();
            if len >= 2 && w[len - 1] == w[len - 2] {
                continue;
            }
            let c = dynkin_coefficient(&w);
            if !c.is_zero() {
                out.push((w, c));
            }
        }
    }
    out
}

/// `Σ over segmentations of w into blocks X^p Y^q (p+q>0) of (−1)^{n−1}/n · 1/(|w| Π p! q!)`.
fn dynkin_coefficient(w: &[u8]) -> Q {
    // dp over prefixes: map from block count to accumulated Π 1/(p!q!).
    let len = w.len();
    let mut dp: Vec<HashMap<usize, Q>> = vec![HashMap::new(); len + 1];
    dp[0].insert(0, Q::one());
    for start in 0..len {
        if dp[start].is_empty() {
            continue;
        }
        let current = dp[start].clone();
        // A block is X^p Y^q: some X's then some Y's.
        let mut p = 0;
        while start + p < len && w[start + p] == 0 {
            p += 1;
        }
        for pp in 0..=p {
            let mut q = 0;
            // If we stop the X-run early, the block has no Y's.
            let qmax = if pp == p {
                let mut qq = 0;
                while start + pp + qq < len && w[start + pp + qq] == 1 {
                    qq += 1;
                }
                qq
            } else {
                0
            };
            loop {
                if pp + q > 0 {
                    let end = start + pp + q;
                    let weight = Q::new(1.into(), ((factorial(pp) * factorial(q)) as i64).into());
                    for (n, v) in &current {
                        *dp[end].entry(n + 1).or_insert_with(Q::zero) += v * &weight;
                    }
                }
                if q == qmax {
                    break;
                }
                q += 1;
            }
        }
    }
    let mut total = Q::zero();
    for (n, v) in &dp[len] {
        let sign = if n % 2 == 1 { qi(1) } else { qi(-1) };
        total += sign * v / qi(*n as i64);
    }
    total / qi(len as i64)
}

/// Generic bracket of coefficient vectors through the structure constants.
pub fn bracket_vec<S: Ring>(spec: &AlgebraSpec, a: &[S], b: &[S]) -> Vec<S> {
    let dim = spec.dim();
    let mut out = vec![S::ring_zero(); dim];
    for i in 0..dim {
        if a[i].is_ring_zero() {
            continue;
        }
        for j in 0..dim {
            if b[j].is_ring_zero() || spec.layer_of(i) + spec.layer_of(j) > spec.r {
                continue;
            }
            let c = spec.bracket_basis(i, j);
            if c.is_empty() {
                continue;
            }
            let ab = a[i].clone() * b[j].clone();
            for (k, ck) in c {
                out[*k] = out[*k].clone() + ab.scale(ck);
            }
        }
    }
    out
}

/// Truncated BCH `log(exp x · exp y)` over any coefficient ring.
pub fn bch_generic<S: Ring>(spec: &AlgebraSpec, x: &[S], y: &[S]) -> Vec<S> {
    let words = dynkin_words(spec.r);
    let mut memo: HashMap<Vec<u8>, Vec<S>> = HashMap::new();
    let mut out = vec![S::ring_zero(); spec.dim()];
    for (w, c) in &words {
        let v = nested(spec, w, x, y, &mut memo);
        for (o, vi) in out.iter_mut().zip(v) {
            if !vi.is_ring_zero() {
                *o = o.clone() + vi.scale(c);
            }
        }
    }
    out
}

fn nested<S: Ring>(
    spec: &AlgebraSpec,
    w: &[u8],
    x: &[S],
    y: &[S],
    memo: &mut HashMap<Vec<u8>, Vec<S>>,
) -> Vec<S> {
    if let Some(v) = memo.get(w) {
        return v.clone();
    }
    let letter = |l: u8| if l == 0 { x } else { y };
    let v = if w.len() == 1 {
        letter(w[0]).to_vec()
    } else {
        let tail = nested(spec, &w[1..], x, y, memo);
        bracket_vec(spec, letter(w[0]), &tail)
    };
    memo.insert(w.to_vec(), v.clone());
    v
}

// ---------------------------------------------------------------------------
// Compiled group law.

/// Group law of one spec as polynomials in `(p_0..p_{n-1}, q_0..q_{n-1})`.
#[derive(Clone, Debug)]
pub struct GroupLaw {
    spec: AlgebraSpec,
    symbolic: Vec<Polynomial>,
    compiled: Vec<CompiledPoly>,
}

impl GroupLaw {
    pub fn new(spec: &AlgebraSpec) -> Self {
        let n = spec.dim();
        let p: Vec<Polynomial> = (0..n).map(Polynomial::var).collect();
        let q: Vec<Polynomial> = (0..n).map(|i| Polynomial::var(n + i)).collect();
        let symbolic = bch_generic(spec, &p, &q);
        let compiled = symbolic.iter().map(Polynomial::compile).collect();
        GroupLaw { spec: spec.clone(), symbolic, compiled }
    }

    pub fn spec(&self) -> &AlgebraSpec {
        &self.spec
    }

    pub fn dim(&self) -> usize {
        self.spec.dim()
    }

    /// Coordinate `c` of `p·q` as a polynomial in `p` (vars `0..n`) and `q` (vars `n..2n`).
    pub fn symbolic(&self) -> &[Polynomial] {
        &self.symbolic
    }

    pub fn product(&self, p: &Point<Q>, q: &Point<Q>) -> Point<Q> {
        let x: Vec<Q> = p.coords.iter().chain(&q.coords).cloned().collect();
        Point { coords: self.symbolic.iter().map(|poly| poly.eval_q(&x)).collect() }
    }

    pub fn product_f64(&self, p: &[f64], q: &[f64]) -> Vec<f64> {
        let mut x = Vec::with_capacity(2 * p.len());
        x.extend_from_slice(p);
        x.extend_from_slice(q);
        self.compiled.iter().map(|c| c.eval(&x)).collect()
    }

    /// `p · exp(s X_label)` in doubles.
    pub fn flow_f64(&self, p: &[f64], label: BasisLabel, s: f64) -> Vec<f64> {
        let mut q = vec![0.0; self.dim()];
        q[self.spec.flat(label).expect("label in basis")] = s;
        self.product_f64(p, &q)
    }

    /// Polynomial map `p ↦ p · exp(s X_label)`, as polynomials in `p` (vars
    /// `0..n`) and `s` (var `n`).
    pub fn flow_map(&self, label: BasisLabel) -> FlowMap {
        let n = self.dim();
        let k = self.spec.flat(label).expect("label in basis");
        let mut subs: Vec<Polynomial> = (0..n).map(Polynomial::var).collect();
        subs.extend((0..n).map(|i| if i == k { Polynomial::var(n) } else { Polynomial::zero() }));
        let polys: Vec<Polynomial> = self.symbolic.iter().map(|p| p.substitute(&subs)).collect();
        FlowMap { n, compiled: polys.iter().map(Polynomial::compile).collect() }
    }
}

/// Right translation along one basis direction, compiled to doubles.
#[derive(Clone, Debug)]
pub struct FlowMap {
    n: usize,
    compiled: Vec<CompiledPoly>,
}

impl FlowMap {
    /// Writes `p · exp(s Z)` into `out`; `scratch` must have length `n + 1`.
    pub fn apply(&self, p: &[f64], s: f64, scratch: &mut [f64], out: &mut [f64]) {
        scratch[..self.n].copy_from_slice(p);
        scratch[self.n] = s;
        for (o, c) in out.iter_mut().zip(&self.compiled) {
            *o = c.eval(scratch);
        }
    }
}

/// Product of two points.
pub fn bch_product(law: &GroupLaw, p: &Point<Q>, q: &Point<Q>) -> Point<Q> {
    law.product(p, q)
}

/// `exp(−X)` inverts `exp(X)`: coordinate-wise negation.
pub fn inverse<S: Ring>(p: &Point<S>) -> Point<S> {
    Point { coords: p.coords.iter().map(|c| -c.clone()).collect() }
}

/// `δ_s`: layer-`k` coordinates scaled by `s^k`.
pub fn dilate(spec: &AlgebraSpec, s: &Q, p: &Point<Q>) -> Point<Q> {
    Point {
        coords: p
            .coords
            .iter()
            .enumerate()
            .map(|(i, c)| c * num::pow(s.clone(), spec.layer_of(i)))
            .collect(),
    }
}

pub fn dilate_f64(spec: &AlgebraSpec, s: f64, p: &[f64]) -> Vec<f64> {
    p.iter().enumerate().map(|(i, c)| c * s.powi(spec.layer_of(i) as i32)).collect()
}

/// Exact `|P|^{2 r!} = Σ_k (Σ_i p_{i,k}^2)^{r!/k}`.
pub fn gauge_norm_pow(spec: &AlgebraSpec, p: &Point<Q>) -> Q {
    let rf = factorial(spec.r) as usize;
    let mut total = Q::zero();
    for k in 1..=spec.r {
        let s: Q = spec.layer_range(k).map(|i| &p.coords[i] * &p.coords[i]).sum();
        total += num::pow(s, rf / k);
    }
    total
}

/// Gauge norm in doubles, computed layer-wise to avoid overflow of the
/// `2 r!`-th powers.
pub fn gauge_norm_f64(spec: &AlgebraSpec, p: &[f64]) -> f64 {
    let rf = factorial(spec.r) as f64;
    let mut t = [0.0f64; 16];
    let mut tmax: f64 = 0.0;
    for k in 1..=spec.r {
        let s: f64 = spec.layer_range(k).map(|i| p[i] * p[i]).sum();
        t[k - 1] = s.powf(1.0 / (2.0 * k as f64));
        tmax = tmax.max(t[k - 1]);
    }
    if tmax == 0.0 {
        return 0.0;
    }
    let e = 2.0 * rf;
    let sum: f64 = t[..spec.r].iter().map(|x| (x / tmax).powf(e)).sum();
    tmax * sum.powf(1.0 / e)
}

pub fn gauge_norm(spec: &AlgebraSpec, p: &Point<Q>) -> f64 {
    gauge_norm_f64(spec, &p.to_f64().coords)
}

/// `d(p, q) = |q⁻¹ p|`; not symmetric in general.
pub fn gauge_distance(law: &GroupLaw, p: &Point<Q>, q: &Point<Q>) -> f64 {
    gauge_norm(law.spec(), &law.product(&inverse(q), p))
}

pub fn gauge_distance_f64(law: &GroupLaw, p: &[f64], q: &[f64]) -> f64 {
    let qi: Vec<f64> = q.iter().map(|x| -x).collect();
    gauge_norm_f64(law.spec(), &law.product_f64(&qi, p))
}

/// Monte-Carlo ball volume with a 95% normal-approximation interval.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BallVolume {
    pub radius: f64,
    pub samples: u64,
    pub hits: u64,
    pub box_volume: f64,
    pub estimate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

/// Samples per independently seeded shard.
pub const SHARD: u64 = 1 << 16;

fn mix(seed: u64, radius: f64) -> u64 {
    // SplitMix64 finaliser over the seed and the radius bits, so balls of
    // different radii draw independent samples.
    let mut z = seed ^ radius.to_bits().rotate_left(17) ^ 0x9E37_79B9_7F4A_7C15;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Estimates the Lebesgue volume of `{x : |x| < R}` by uniform sampling of
/// the box `|p_{i,k}| ≤ R^k`, which contains the ball. Shard `j` uses ChaCha
/// stream `j`, so the result is independent of the worker count.
pub fn ball_volume_estimate(spec: &AlgebraSpec, radius: f64, samples: u64, seed: u64) -> BallVolume {
    assert!(radius > 0.0 && samples > 0);
    let n = spec.dim();
    let half: Vec<f64> = (0..n).map(|i| radius.powi(spec.layer_of(i) as i32)).collect();
    let box_volume: f64 = half.iter().map(|h| 2.0 * h).product();
    let shards = samples.div_ceil(SHARD);
    let base = mix(seed, radius);
    let counts = par::map_indexed(shards as usize, |j| {
        let mut rng = ChaCha8Rng::seed_from_u64(base);
        rng.set_stream(j as u64);
        let todo = SHARD.min(samples - j as u64 * SHARD);
        let mut x = vec![0.0; n];
        let mut hits = 0u64;
        for _ in 0..todo {
            for (xi, h) in x.iter_mut().zip(&half) {
                *xi = rng.gen_range(-1.0..=1.0) * h;
            }
            if gauge_norm_f64(spec, &x) < radius {
                hits += 1;
            }
        }
        hits
    });
    let hits: u64 = counts.iter().sum();
    let f = hits as f64 / samples as f64;
    let estimate = box_volume * f;
    let half_width = 1.96 * box_volume * (f * (1.0 - f) / samples as f64).sqrt();
    BallVolume {
        radius,
        samples,
        hits,
        box_volume,
        estimate,
        ci_low: estimate - half_width,
        ci_high: estimate + half_width,
    }
}

/// Random rational point with numerators in `-9..=9` and denominators in `1..=6`.
pub fn random_rational_point<R: Rng>(dim: usize, rng: &mut R) -> Point<Q> {
    Point { coords: (0..dim).map(|_| crate::q::qr(rng.gen_range(-9..=9), rng.gen_range(1..=6))).collect() }
}

/// Largest observed `d(p,q) / (d(p,w) + d(w,q))` over random triples in the
/// box `|p_{i,k}| ≤ 1`; an empirical lower bound for the quasi-triangle constant.
pub fn quasi_triangle_constant(law: &GroupLaw, samples: usize, seed: u64) -> f64 {
    let n = law.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: f64 = 0.0;
    let draw = |rng: &mut ChaCha8Rng| -> Vec<f64> { (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect() };
    for _ in 0..samples {
        let (p, q, w) = (draw(&mut rng), draw(&mut rng), draw(&mut rng));
        let lhs = gauge_distance_f64(law, &p, &q);
        let rhs = gauge_distance_f64(law, &p, &w) + gauge_distance_f64(law, &w, &q);
        if rhs > 0.0 {
            best = best.max(lhs / rhs);
        }
    }
    best
}
