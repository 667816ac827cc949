//! Sparse multivariate polynomials with exact rational coefficients.

use crate::q::{fmt_q, to_f64, Ring, Q};
use num::{One, Signed, Zero};
use std::collections::BTreeMap;
use std::ops::{Add, Mul, Neg, Sub};

/// Sorted `(variable, exponent)` pairs with positive exponents.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Monomial(pub Vec<(u16, u16)>);

impl Monomial {
    pub fn one() -> Self {
        Monomial(Vec::new())
    }

    pub fn var(v: usize) -> Self {
        Monomial(vec![(v as u16, 1)])
    }

    /// Builds a monomial from a dense exponent vector.
    pub fn from_exponents(exps: &[u32]) -> Self {
        Monomial(
            exps.iter()
                .enumerate()
                .filter(|(_, &e)| e > 0)
                .map(|(v, &e)| (v as u16, e as u16))
                .collect(),
        )
    }

    pub fn exponent(&self, v: usize) -> u32 {
        self.0.iter().find(|(x, _)| *x as usize == v).map_or(0, |(_, e)| *e as u32)
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().map(|(_, e)| *e as u32).sum()
    }

    /// Degree with variable `v` counted `weights[v]` times.
    pub fn weighted_degree(&self, weights: &[u32]) -> u32 {
        self.0.iter().map(|(v, e)| weights[*v as usize] * *e as u32).sum()
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        let (a, b) = (&self.0, &other.0);
        let mut out = Vec::with_capacity(a.len() + b.len());
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            match a[i].0.cmp(&b[j].0) {
                std::cmp::Ordering::Less => {
                    out.push(a[i]);
                    i += 1;
                }
                std::cmp::Ordering::Greater => {
                    out.push(b[j]);
                    j += 1;
                }
                std::cmp::Ordering::Equal => {
                    out.push((a[i].0, a[i].1 + b[j].1));
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&a[i..]);
        out.extend_from_slice(&b[j..]);
        Monomial(out)
    }

    pub fn max_var(&self) -> Option<usize> {
        self.0.last().map(|(v, _)| *v as usize)
    }
}

/// Polynomial as a map from monomial to nonzero coefficient.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Polynomial {
    terms: BTreeMap<Monomial, Q>,
}

impl Polynomial {
    pub fn zero() -> Self {
        Polynomial::default()
    }

    pub fn constant(c: Q) -> Self {
        let mut p = Polynomial::zero();
        p.add_term(Monomial::one(), c);
        p
    }

    pub fn one() -> Self {
        Polynomial::constant(Q::one())
    }

    pub fn var(v: usize) -> Self {
        Polynomial::monomial(Monomial::var(v), Q::one())
    }

    pub fn monomial(m: Monomial, c: Q) -> Self {
        let mut p = Polynomial::zero();
        p.add_term(m, c);
        p
    }

    pub fn from_terms(terms: impl IntoIterator<Item = (Monomial, Q)>) -> Self {
        let mut p = Polynomial::zero();
        for (m, c) in terms {
            p.add_term(m, c);
        }
        p
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Q)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add_term(&mut self, m: Monomial, c: Q) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(m) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                *e.get_mut() += c;
                if e.get().is_zero() {
                    e.remove();
                }
            }
        }
    }

    pub fn add_scaled(&mut self, other: &Polynomial, c: &Q) {
        if c.is_zero() {
            return;
        }
        for (m, x) in &other.terms {
            self.add_term(m.clone(), x * c);
        }
    }

    pub fn add_ref(&self, other: &Polynomial) -> Polynomial {
        let mut out = self.clone();
        out.add_scaled(other, &Q::one());
        out
    }

    pub fn sub_ref(&self, other: &Polynomial) -> Polynomial {
        let mut out = self.clone();
        out.add_scaled(other, &-Q::one());
        out
    }

    pub fn mul_ref(&self, other: &Polynomial) -> Polynomial {
        let mut out = Polynomial::zero();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                out.add_term(ma.mul(mb), ca * cb);
            }
        }
        out
    }

    pub fn scaled(&self, c: &Q) -> Polynomial {
        if c.is_zero() {
            return Polynomial::zero();
        }
        Polynomial { terms: self.terms.iter().map(|(m, x)| (m.clone(), x * c)).collect() }
    }

    pub fn pow(&self, n: u32) -> Polynomial {
        let mut out = Polynomial::one();
        for _ in 0..n {
            out = out.mul_ref(self);
        }
        out
    }

    /// Partial derivative in variable `v`.
    pub fn derivative(&self, v: usize) -> Polynomial {
        let mut out = Polynomial::zero();
        for (m, c) in &self.terms {
            let e = m.exponent(v);
            if e == 0 {
                continue;
            }
            let mm = Monomial(
                m.0.iter()
                    .filter_map(|&(x, k)| {
                        if x as usize == v {
                            (k > 1).then_some((x, k - 1))
                        } else {
                            Some((x, k))
                        }
                    })
                    .collect(),
            );
            out.add_term(mm, c * Q::from_integer(e.into()));
        }
        out
    }

    /// Drops every monomial containing a variable `>= n` (sets them to zero).
    pub fn truncate_vars(&self, n: usize) -> Polynomial {
        Polynomial {
            terms: self
                .terms
                .iter()
                .filter(|(m, _)| m.max_var().is_none_or(|v| v < n))
                .map(|(m, c)| (m.clone(), c.clone()))
                .collect(),
        }
    }

    /// Coefficient of `t^1` where `t` is variable `v`, as a polynomial in the rest.
    pub fn linear_coefficient(&self, v: usize) -> Polynomial {
        let mut out = Polynomial::zero();
        for (m, c) in &self.terms {
            if m.exponent(v) == 1 {
                out.add_term(Monomial(m.0.iter().copied().filter(|(x, _)| *x as usize != v).collect()), c.clone());
            }
        }
        out
    }

    /// Substitutes each variable `v` by `subs[v]`.
    pub fn substitute(&self, subs: &[Polynomial]) -> Polynomial {
        let mut out = Polynomial::zero();
        for (m, c) in &self.terms {
            let mut t = Polynomial::constant(c.clone());
            for &(v, e) in &m.0 {
                t = t.mul_ref(&subs[v as usize].pow(e as u32));
            }
            out = out.add_ref(&t);
        }
        out
    }

    pub fn eval_q(&self, x: &[Q]) -> Q {
        let mut acc = Q::zero();
        for (m, c) in &self.terms {
            let mut t = c.clone();
            for &(v, e) in &m.0 {
                t *= num::pow(x[v as usize].clone(), e as usize);
            }
            acc += t;
        }
        acc
    }

    pub fn eval_f64(&self, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(m, c)| m.0.iter().fold(to_f64(c), |t, &(v, e)| t * x[v as usize].powi(e as i32)))
            .sum()
    }

    pub fn degree(&self) -> u32 {
        self.terms.keys().map(Monomial::degree).max().unwrap_or(0)
    }

    /// `Some(d)` when every term has weighted degree `d`; zero is homogeneous of any degree.
    pub fn weighted_homogeneous_degree(&self, weights: &[u32]) -> Option<Option<u32>> {
        let mut d = None;
        for m in self.terms.keys() {
            let w = m.weighted_degree(weights);
            match d {
                None => d = Some(w),
                Some(x) if x != w => return None,
                _ => {}
            }
        }
        Some(d)
    }

    pub fn compile(&self) -> CompiledPoly {
        CompiledPoly {
            terms: self
                .terms
                .iter()
                .map(|(m, c)| (to_f64(c), m.0.iter().map(|&(v, e)| (v as usize, e as i32)).collect()))
                .collect(),
        }
    }

    /// Renders with the given variable names, e.g. `1/2*x*y^2 - z`.
    pub fn display_with(&self, names: &[String]) -> String {
        if self.terms.is_empty() {
            return "0".into();
        }
        let mut s = String::new();
        for (i, (m, c)) in self.terms.iter().enumerate() {
            let neg = c.is_negative();
            let a = c.abs();
            if i == 0 {
                if neg {
                    s.push('-');
                }
            } else {
                s.push_str(if neg { " - " } else { " + " });
            }
            let vars: Vec<String> = m
                .0
                .iter()
                .map(|&(v, e)| {
                    let n = &names[v as usize];
                    if e == 1 {
                        n.clone()
                    } else {
                        format!("{n}^{e}")
                    }
                })
                .collect();
            if vars.is_empty() {
                s.push_str(&fmt_q(&a));
            } else if a.is_one() {
                s.push_str(&vars.join("*"));
            } else {
                s.push_str(&format!("{}*{}", fmt_q(&a), vars.join("*")));
            }
        }
        s
    }
}

impl Add for Polynomial {
    type Output = Polynomial;
    fn add(mut self, rhs: Polynomial) -> Polynomial {
        self.add_scaled(&rhs, &Q::one());
        self
    }
}

impl Sub for Polynomial {
    type Output = Polynomial;
    fn sub(mut self, rhs: Polynomial) -> Polynomial {
        self.add_scaled(&rhs, &-Q::one());
        self
    }
}

impl Mul for Polynomial {
    type Output = Polynomial;
    fn mul(self, rhs: Polynomial) -> Polynomial {
        self.mul_ref(&rhs)
    }
}

impl Neg for Polynomial {
    type Output = Polynomial;
    fn neg(self) -> Polynomial {
        self.scaled(&-Q::one())
    }
}

impl Ring for Polynomial {
    fn ring_zero() -> Self {
        Polynomial::zero()
    }
    fn from_q(c: &Q) -> Self {
        Polynomial::constant(c.clone())
    }
    fn is_ring_zero(&self) -> bool {
        self.terms.is_empty()
    }
    fn scale(&self, c: &Q) -> Self {
        self.scaled(c)
    }
}

/// Polynomial lowered to doubles for fast repeated evaluation.
#[derive(Clone, Debug, Default)]
pub struct CompiledPoly {
    terms: Vec<(f64, Vec<(usize, i32)>)>,
}

impl CompiledPoly {
    pub fn eval(&self, x: &[f64]) -> f64 {
        let mut acc = 0.0;
        for (c, vars) in &self.terms {
            let mut t = *c;
            for &(v, e) in vars {
                t *= if e == 1 { x[v] } else { x[v].powi(e) };
            }
            acc += t;
        }
        acc
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::q::{qi, qr};

    #[test]
    fn arithmetic_and_derivative() {
        let x = Polynomial::var(0);
        let y = Polynomial::var(1);
        let p = x.mul_ref(&x).mul_ref(&y).add_ref(&y.scaled(&qi(3)));
        assert_eq!(p.derivative(0), x.mul_ref(&y).scaled(&qi(2)));
        assert_eq!(p.derivative(1), x.mul_ref(&x).add_ref(&Polynomial::constant(qi(3))));
        assert_eq!(p.eval_q(&[qi(2), qr(1, 2)]), qi(2) + qr(3, 2));
        assert!((p.eval_f64(&[2.0, 0.5]) - 3.5).abs() < 1e-15);
        assert!((p.compile().eval(&[2.0, 0.5]) - 3.5).abs() < 1e-15);
        assert!(p.sub_ref(&p).is_zero());
    }

    #[test]
    fn substitution_and_linear_coefficient() {
        let x = Polynomial::var(0);
        let t = Polynomial::var(1);
        let p = x.mul_ref(&t).add_ref(&t.mul_ref(&t));
        assert_eq!(p.linear_coefficient(1), x);
        let q = p.substitute(&[Polynomial::constant(qi(2)), Polynomial::var(0)]);
        assert_eq!(q, Polynomial::var(0).scaled(&qi(2)).add_ref(&Polynomial::var(0).pow(2)));
    }

    #[test]
    fn display() {
        let names = vec!["x".to_string(), "y".to_string()];
        let p = Polynomial::var(0).scaled(&qr(-1, 2)).add_ref(&Polynomial::var(1).pow(2));
        assert_eq!(p.display_with(&names), "-1/2*x + y^2");
    }
}
