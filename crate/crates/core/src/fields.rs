//! Left-invariant vector fields as first-order operators with polynomial
//! coefficients, and the strong-form residual of the constant-coefficient
//! system `Σ_i X_i(A^{αβ}_{ij} X_j u^β + f_i^α) = f^α`.

use crate::algebra::{AlgebraElement, AlgebraSpec, BasisLabel};
use crate::group::GroupLaw;
use crate::poly::Polynomial;
use crate::q::{to_f64, Q};
use num::{One, Zero};
use serde::Serialize;

/// Polynomial test function in the exponential coordinates.
pub type PolyFunction = Polynomial;

/// `X = Σ_c a_c(p) ∂_{p_c}` over the flat coordinates.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VectorFieldOperator {
    pub coeffs: Vec<Polynomial>,
}

impl VectorFieldOperator {
    pub fn zero(dim: usize) -> Self {
        VectorFieldOperator { coeffs: vec![Polynomial::zero(); dim] }
    }

    pub fn apply(&self, u: &Polynomial) -> Polynomial {
        let mut out = Polynomial::zero();
        for (c, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            let d = u.derivative(c);
            if !d.is_zero() {
                out = out.add_ref(&a.mul_ref(&d));
            }
        }
        out
    }

    pub fn add_scaled(&mut self, other: &VectorFieldOperator, c: &Q) {
        for (a, b) in self.coeffs.iter_mut().zip(&other.coeffs) {
            a.add_scaled(b, c);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(Polynomial::is_zero)
    }
}

/// Applies `X` to `u`.
pub fn apply(x: &VectorFieldOperator, u: &Polynomial) -> Polynomial {
    x.apply(u)
}

/// Coordinate names `p[k,i]` in flat order.
pub fn coordinate_names(spec: &AlgebraSpec) -> Vec<String> {
    spec.labels().iter().map(|l| format!("p[{},{}]", l.layer, l.index)).collect()
}

/// Field of `(k, i)`: differentiate `p · exp(t X_{k,i})` in `t` at `t = 0`.
pub fn left_invariant_field(law: &GroupLaw, label: BasisLabel) -> VectorFieldOperator {
    let n = law.dim();
    let k = law.spec().flat(label).expect("label in basis");
    VectorFieldOperator {
        coeffs: law.symbolic().iter().map(|c| c.linear_coefficient(n + k).truncate_vars(n)).collect(),
    }
}

/// All basis fields of one group, built once.
#[derive(Clone, Debug)]
pub struct FieldSet {
    law: GroupLaw,
    basis: Vec<VectorFieldOperator>,
}

impl FieldSet {
    pub fn new(spec: &AlgebraSpec) -> Self {
        FieldSet::from_law(GroupLaw::new(spec))
    }

    pub fn from_law(law: GroupLaw) -> Self {
        let basis = law.spec().labels().iter().map(|&l| left_invariant_field(&law, l)).collect();
        FieldSet { law, basis }
    }

    pub fn spec(&self) -> &AlgebraSpec {
        self.law.spec()
    }

    pub fn law(&self) -> &GroupLaw {
        &self.law
    }

    pub fn field(&self, label: BasisLabel) -> &VectorFieldOperator {
        &self.basis[self.spec().flat(label).expect("label in basis")]
    }

    pub fn field_flat(&self, flat: usize) -> &VectorFieldOperator {
        &self.basis[flat]
    }

    /// Horizontal field `X_i`, `i` in `1..=m`.
    pub fn horizontal(&self, i: usize) -> &VectorFieldOperator {
        &self.basis[i - 1]
    }

    /// Field of an arbitrary algebra element.
    pub fn field_of(&self, x: &AlgebraElement) -> VectorFieldOperator {
        let mut out = VectorFieldOperator::zero(self.spec().dim());
        for (k, c) in x.support() {
            out.add_scaled(&self.basis[k], c);
        }
        out
    }

    /// Applies the field of `x` to `u` without materialising the combination.
    pub fn apply_element(&self, x: &AlgebraElement, u: &Polynomial) -> Polynomial {
        let mut out = Polynomial::zero();
        for (k, c) in x.support() {
            out.add_scaled(&self.basis[k].apply(u), c);
        }
        out
    }

    /// `Σ_{i,j,β} A^{αβ}_{ij} X_i X_j u^β + Σ_i X_i f_i^α − f^α` for every α.
    pub fn system_residual(
        &self,
        a: &SystemCoefficients,
        u: &[Polynomial],
        fi: &[Vec<Polynomial>],
        f: &[Polynomial],
    ) -> Vec<Polynomial> {
        system_residual(self, a, u, fi, f)
    }
}

/// Outcome of comparing `[X_a, X_b]` with the structure constants.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PairCheck {
    pub a: BasisLabel,
    pub b: BasisLabel,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CommutatorReport {
    pub pairs: Vec<PairCheck>,
    pub pass: bool,
}

/// Checks `X_a X_b − X_b X_a = X_{[a,b]}` on every coordinate function, for
/// every unordered basis pair `a < b`. First-order operators agree once they
/// agree on coordinates.
pub fn commutator_check(fields: &FieldSet) -> CommutatorReport {
    let spec = fields.spec();
    let n = spec.dim();
    let coords: Vec<Polynomial> = (0..n).map(Polynomial::var).collect();
    let mut pairs = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            let xa = fields.field_flat(a);
            let xb = fields.field_flat(b);
            let mut bracket = VectorFieldOperator::zero(n);
            for (k, c) in spec.bracket_basis(a, b) {
                bracket.add_scaled(fields.field_flat(*k), c);
            }
            let pass = coords.iter().all(|u| {
                let lhs = xa.apply(&xb.apply(u)).sub_ref(&xb.apply(&xa.apply(u)));
                lhs == bracket.apply(u)
            });
            pairs.push(PairCheck { a: spec.label(a), b: spec.label(b), pass });
        }
    }
    let pass = pairs.iter().all(|p| p.pass);
    CommutatorReport { pairs, pass }
}

/// `{Xu}_{i,j} = X_i u^j`, an `m × N` matrix.
pub fn horizontal_jacobian(fields: &FieldSet, u: &[Polynomial]) -> Vec<Vec<Polynomial>> {
    (1..=fields.spec().m).map(|i| u.iter().map(|uj| fields.horizontal(i).apply(uj)).collect()).collect()
}

/// Constant coefficients `A^{αβ}_{ij}` and the coercivity constant.
#[derive(Clone, Debug, PartialEq)]
pub struct SystemCoefficients {
    /// Number of components `N`.
    pub n: usize,
    /// Number of horizontal directions `m`.
    pub m: usize,
    /// Row-major over `(α, β, i, j)`, all 0-based.
    pub a: Vec<Q>,
    pub lambda: f64,
}

/// Coercivity tolerance on the minimum eigenvalue.
pub const COERCIVITY_TOL: f64 = 1e-10;

impl SystemCoefficients {
    /// `A^{αβ}_{ij} = δ^{αβ} δ_{ij}`, coercive with `λ = 1`.
    pub fn identity(n: usize, m: usize) -> Self {
        let mut a = vec![Q::zero(); n * n * m * m];
        for al in 0..n {
            for i in 0..m {
                a[((al * n + al) * m + i) * m + i] = Q::one();
            }
        }
        SystemCoefficients { n, m, a, lambda: 1.0 }
    }

    /// Wraps explicit coefficients; `lambda` is set from the minimum eigenvalue
    /// of the symmetric part (possibly non-positive, see [`Self::is_coercive`]).
    pub fn new(n: usize, m: usize, a: Vec<Q>) -> Self {
        assert_eq!(a.len(), n * n * m * m);
        let mut s = SystemCoefficients { n, m, a, lambda: 0.0 };
        s.lambda = s.min_eigenvalue();
        s
    }

    pub fn get(&self, alpha: usize, beta: usize, i: usize, j: usize) -> &Q {
        &self.a[((alpha * self.n + beta) * self.m + i) * self.m + j]
    }

    pub fn get_f64(&self, alpha: usize, beta: usize, i: usize, j: usize) -> f64 {
        to_f64(self.get(alpha, beta, i, j))
    }

    /// Quadratic form matrix on `ξ^α_i`, indexed `(α m + i, β m + j)`.
    pub fn form_matrix(&self) -> nalgebra::DMatrix<f64> {
        let d = self.n * self.m;
        nalgebra::DMatrix::from_fn(d, d, |r, c| {
            let (al, i) = (r / self.m, r % self.m);
            let (be, j) = (c / self.m, c % self.m);
            self.get_f64(al, be, i, j)
        })
    }

    /// Minimum eigenvalue of the symmetric part of the form matrix.
    pub fn min_eigenvalue(&self) -> f64 {
        let m = self.form_matrix();
        let sym = (&m + m.transpose()) * 0.5;
        sym.symmetric_eigen().eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// `Σ A ξ ξ ≥ λ |ξ|²` with the stored `λ > 0`, up to [`COERCIVITY_TOL`].
    pub fn is_coercive(&self) -> bool {
        self.lambda > 0.0 && self.min_eigenvalue() >= self.lambda - COERCIVITY_TOL
    }

    /// `A^{αβ}_{ij} = A^{βα}_{ji}`, i.e. the form matrix is symmetric.
    pub fn is_symmetric(&self) -> bool {
        (0..self.n).all(|al| {
            (0..self.n).all(|be| {
                (0..self.m).all(|i| (0..self.m).all(|j| self.get(al, be, i, j) == self.get(be, al, j, i)))
            })
        })
    }
}

/// Strong-form residual per component α:
/// `Σ_i X_i(Σ_{β,j} A^{αβ}_{ij} X_j u^β + f_i^α) − f^α`, with `fi[i][α]`.
pub fn system_residual(
    fields: &FieldSet,
    a: &SystemCoefficients,
    u: &[Polynomial],
    fi: &[Vec<Polynomial>],
    f: &[Polynomial],
) -> Vec<Polynomial> {
    let (n, m) = (a.n, a.m);
    let xu: Vec<Vec<Polynomial>> = (0..m).map(|j| u.iter().map(|ub| fields.horizontal(j + 1).apply(ub)).collect()).collect();
    (0..n)
        .map(|al| {
            let mut total = Polynomial::zero();
            for i in 0..m {
                let mut inner = fi.get(i).map_or_else(Polynomial::zero, |v| v[al].clone());
                for be in 0..n {
                    for j in 0..m {
                        inner.add_scaled(&xu[j][be], a.get(al, be, i, j));
                    }
                }
                total = total.add_ref(&fields.horizontal(i + 1).apply(&inner));
            }
            total.sub_ref(&f[al])
        })
        .collect()
}

/// Renders `X` as `a_1 ∂p[1,1] + ...`.
pub fn display_field(spec: &AlgebraSpec, x: &VectorFieldOperator) -> String {
    let names = coordinate_names(spec);
    let parts: Vec<String> = x
        .coeffs
        .iter()
        .enumerate()
        .filter(|(_, a)| !a.is_zero())
        .map(|(c, a)| {
            let s = a.display_with(&names);
            if s == "1" {
                format!("d/d{}", names[c])
            } else if a.len() > 1 {
                format!("({s}) d/d{}", names[c])
            } else {
                format!("{s} d/d{}", names[c])
            }
        })
        .collect();
    if parts.is_empty() {
        "0".into()
    } else {
        parts.join(" + ")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{build_free_nilpotent, heisenberg};
    use crate::q::{qi, qr};

    #[test]
    fn heisenberg_fields_have_half_coefficients() {
        let fs = FieldSet::new(&heisenberg());
        let x1 = fs.field(BasisLabel::new(1, 1));
        assert_eq!(x1.coeffs[0], Polynomial::one());
        assert!(x1.coeffs[1].is_zero());
        assert_eq!(x1.coeffs[2], Polynomial::var(1).scaled(&qr(-1, 2)));
        let x2 = fs.field(BasisLabel::new(1, 2));
        assert_eq!(x2.coeffs[2], Polynomial::var(0).scaled(&qr(1, 2)));
        let z = fs.field(BasisLabel::new(2, 1));
        assert_eq!(z.coeffs, vec![Polynomial::zero(), Polynomial::zero(), Polynomial::one()]);
    }

    #[test]
    fn abelian_fields_are_partials() {
        let fs = FieldSet::new(&build_free_nilpotent(3, 1).unwrap());
        for i in 0..3 {
            let x = fs.field_flat(i);
            for c in 0..3 {
                assert_eq!(x.coeffs[c], if c == i { Polynomial::one() } else { Polynomial::zero() });
            }
        }
    }

    #[test]
    fn apply_basics() {
        let fs = FieldSet::new(&heisenberg());
        let x1 = fs.field(BasisLabel::new(1, 1));
        assert!(x1.apply(&Polynomial::constant(qi(7))).is_zero());
        assert_eq!(x1.apply(&Polynomial::var(0)), Polynomial::one());
    }

    #[test]
    fn residual_of_constant_source() {
        let fs = FieldSet::new(&heisenberg());
        let a = SystemCoefficients::identity(1, 2);
        let r = system_residual(&fs, &a, &[Polynomial::zero()], &[], &[Polynomial::one()]);
        assert_eq!(r, vec![Polynomial::constant(qi(-1))]);
    }

    #[test]
    fn coercivity() {
        assert!(SystemCoefficients::identity(2, 2).is_coercive());
        let mut a = SystemCoefficients::identity(1, 2);
        a.a[3] = qi(-1);
        a.lambda = a.min_eigenvalue();
        assert!(!a.is_coercive());
    }

    #[test]
    fn display_heisenberg_x1() {
        let fs = FieldSet::new(&heisenberg());
        assert_eq!(display_field(fs.spec(), fs.field(BasisLabel::new(1, 1))), "d/dp[1,1] + -1/2*p[1,2] d/dp[2,1]");
    }
}
