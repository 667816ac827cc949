//! Discrete weak form of `Σ_i X_i(A^{αβ}_{ij} X_j u^β + f_i^α) = f^α` with
//! Dirichlet data on the box.
//!
//! Integrating the strong form against `φ` with `X_i^* = −X_i` gives
//! `∫ (A X_j u + f_i) X_i φ + ∫ f φ = 0`. With centered differences `D_i` and
//! nodal quadrature this reads `K u = −vol·f − Σ_i D_iᵀ(vol·f_i)` where
//! `K = Σ_{ij} D_iᵀ W A_{ij} D_j`. Quadrature rows are nodes whose stencils
//! stay at least one reach away from the faces; unknowns are nodes all of
//! whose quadrature rows are in that set. Every other node takes its Dirichlet
//! value.

use super::grid::GridField;
use super::ops::HorizontalOps;
use super::NumericsError;
use crate::fields::SystemCoefficients;
use crate::par;
use serde::Serialize;
use std::sync::Arc;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SolveOptions {
    /// Relative residual at which the iteration stops.
    pub tol: f64,
    /// Bound on the recomputed true relative residual.
    pub residual_bound: f64,
    pub max_iter: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions { tol: 1e-11, residual_bound: 1e-10, max_iter: 20_000 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SolveReport {
    pub method: String,
    pub iterations: usize,
    pub unknowns: usize,
    /// `‖b − K u‖ / ‖b‖` recomputed after the iteration.
    pub relative_residual: f64,
}

/// The restricted operator `K` on unknown nodes.
pub struct WeakForm {
    pub ops: HorizontalOps,
    pub ncomp: usize,
    pub a: Vec<f64>,
    /// Quadrature weight per node (`vol` on quadrature rows, else 0).
    pub weight: Vec<f64>,
    pub unknown: Vec<bool>,
}

impl WeakForm {
    pub fn new(ops: HorizontalOps, a: &SystemCoefficients) -> Self {
        let grid = ops.grid.clone();
        let n = grid.nodes();
        let reach = ops.reach.max(1);
        let vol = grid.vol();
        let weight: Vec<f64> =
            (0..n).map(|k| if ops.valid(k) && grid.boundary_distance(k) >= reach { vol } else { 0.0 }).collect();
        let unknown = par::map_indexed(n, |k| {
            grid.boundary_distance(k) >= 2 * reach && ops.dt.iter().all(|t| t.row(k).all(|(r, _)| weight[r] > 0.0))
        });
        let av = a.a.iter().map(crate::q::to_f64).collect();
        WeakForm { ops, ncomp: a.n, a: av, weight, unknown }
    }

    fn coeff(&self, al: usize, be: usize, i: usize, j: usize) -> f64 {
        let m = self.ops.m();
        self.a[((al * self.ncomp + be) * m + i) * m + j]
    }

    pub fn nodes(&self) -> usize {
        self.ops.grid.nodes()
    }

    /// `out = K x` on full-length component-major vectors, without masking.
    pub fn apply_full(&self, x: &[f64], out: &mut [f64]) {
        let (n, m, nc) = (self.nodes(), self.ops.m(), self.ncomp);
        let mut dx = vec![vec![0.0; n]; m * nc];
        for j in 0..m {
            for be in 0..nc {
                self.ops.d[j].apply(&x[be * n..(be + 1) * n], &mut dx[j * nc + be]);
            }
        }
        let mut g = vec![0.0; n];
        let mut tmp = vec![0.0; n];
        for al in 0..nc {
            let o = &mut out[al * n..(al + 1) * n];
            o.iter_mut().for_each(|v| *v = 0.0);
            for i in 0..m {
                let terms: Vec<(f64, &Vec<f64>)> = (0..m)
                    .flat_map(|j| (0..nc).map(move |be| (j, be)))
                    .map(|(j, be)| (self.coeff(al, be, i, j), &dx[j * nc + be]))
                    .filter(|(c, _)| *c != 0.0)
                    .collect();
                if terms.is_empty() {
                    continue;
                }
                par::for_each_mut(&mut g, |k, gk| {
                    *gk = self.weight[k] * terms.iter().map(|(c, d)| c * d[k]).sum::<f64>();
                });
                self.ops.dt[i].matvec(&g, &mut tmp);
                o.iter_mut().zip(&tmp).for_each(|(a, b)| *a += b);
            }
        }
    }

    /// `K` restricted to unknowns: inputs and outputs vanish elsewhere.
    pub fn apply(&self, x: &[f64], out: &mut [f64]) {
        self.apply_full(x, out);
        self.mask(out);
    }

    fn mask(&self, v: &mut [f64]) {
        let n = self.nodes();
        par::for_each_mut(v, |k, x| {
            if !self.unknown[k % n] {
                *x = 0.0;
            }
        });
    }

    /// Diagonal of `K`, 1 on non-unknowns.
    pub fn diagonal(&self) -> Vec<f64> {
        let (n, m, nc) = (self.nodes(), self.ops.m(), self.ncomp);
        let mut diag = vec![1.0; n * nc];
        for al in 0..nc {
            par::for_each_mut(&mut diag[al * n..(al + 1) * n], |k, d| {
                if !self.unknown[k] {
                    return;
                }
                let mut s = 0.0;
                for i in 0..m {
                    for j in 0..m {
                        let c = self.coeff(al, al, i, j);
                        if c == 0.0 {
                            continue;
                        }
                        // Σ_r w_r D_i[r,k] D_j[r,k] via the columns of D_i and D_j.
                        let col_i: Vec<(usize, f64)> = self.ops.dt[i].row(k).collect();
                        for (r, vj) in self.ops.dt[j].row(k) {
                            if let Some(&(_, vi)) = col_i.iter().find(|e| e.0 == r) {
                                s += c * self.weight[r] * vi * vj;
                            }
                        }
                    }
                }
                *d = if s > 0.0 { s } else { 1.0 };
            });
        }
        diag
    }
}

fn norm(v: &[f64]) -> f64 {
    par::dot(v, v).sqrt()
}

fn axpy(y: &mut [f64], a: f64, x: &[f64]) {
    par::for_each_mut(y, |k, v| *v += a * x[k]);
}

/// Jacobi-preconditioned conjugate gradients.
fn pcg(op: &WeakForm, b: &[f64], diag: &[f64], opts: &SolveOptions) -> Result<(Vec<f64>, usize), NumericsError> {
    let len = b.len();
    let bn = norm(b);
    let mut x = vec![0.0; len];
    if bn == 0.0 {
        return Ok((x, 0));
    }
    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(diag).map(|(a, d)| a / d).collect();
    let mut p = z.clone();
    let mut rz = par::dot(&r, &z);
    let mut q = vec![0.0; len];
    for it in 1..=opts.max_iter {
        op.apply(&p, &mut q);
        let pq = par::dot(&p, &q);
        if !(pq > 0.0) {
            return Err(NumericsError::SolverDiverged {
                iterations: it,
                reason: format!("non-positive curvature {pq:e}; input is not coercive"),
            });
        }
        let alpha = rz / pq;
        axpy(&mut x, alpha, &p);
        axpy(&mut r, -alpha, &q);
        if norm(&r) <= opts.tol * bn {
            return Ok((x, it));
        }
        par::for_each_mut(&mut z, |k, v| *v = r[k] / diag[k]);
        let rz_new = par::dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        par::for_each_mut(&mut p, |k, v| *v = z[k] + beta * *v);
    }
    Err(NumericsError::SolverDiverged { iterations: opts.max_iter, reason: "iteration limit".into() })
}

/// Jacobi-preconditioned BiCGSTAB for non-symmetric coefficients.
fn bicgstab(op: &WeakForm, b: &[f64], diag: &[f64], opts: &SolveOptions) -> Result<(Vec<f64>, usize), NumericsError> {
    let len = b.len();
    let bn = norm(b);
    let mut x = vec![0.0; len];
    if bn == 0.0 {
        return Ok((x, 0));
    }
    let precond = |v: &[f64]| -> Vec<f64> { v.iter().zip(diag).map(|(a, d)| a / d).collect() };
    let mut r = b.to_vec();
    let r0 = r.clone();
    let (mut rho, mut alpha, mut omega) = (1.0, 1.0, 1.0);
    let mut v = vec![0.0; len];
    let mut p = vec![0.0; len];
    let mut s = vec![0.0; len];
    let mut t = vec![0.0; len];
    for it in 1..=opts.max_iter {
        let rho_new = par::dot(&r0, &r);
        if rho_new == 0.0 || !rho_new.is_finite() {
            return Err(NumericsError::SolverDiverged { iterations: it, reason: "breakdown".into() });
        }
        let beta = (rho_new / rho) * (alpha / omega);
        rho = rho_new;
        par::for_each_mut(&mut p, |k, pk| *pk = r[k] + beta * (*pk - omega * v[k]));
        let ph = precond(&p);
        op.apply(&ph, &mut v);
        alpha = rho / par::dot(&r0, &v);
        par::for_each_mut(&mut s, |k, sk| *sk = r[k] - alpha * v[k]);
        if norm(&s) <= opts.tol * bn {
            axpy(&mut x, alpha, &ph);
            return Ok((x, it));
        }
        let sh = precond(&s);
        op.apply(&sh, &mut t);
        let tt = par::dot(&t, &t);
        omega = if tt > 0.0 { par::dot(&t, &s) / tt } else { 0.0 };
        axpy(&mut x, alpha, &ph);
        axpy(&mut x, omega, &sh);
        par::for_each_mut(&mut r, |k, rk| *rk = s[k] - omega * t[k]);
        if norm(&r) <= opts.tol * bn {
            return Ok((x, it));
        }
        if omega == 0.0 || !omega.is_finite() {
            return Err(NumericsError::SolverDiverged { iterations: it, reason: "stagnation".into() });
        }
    }
    Err(NumericsError::SolverDiverged { iterations: opts.max_iter, reason: "iteration limit".into() })
}

/// Solves the discrete weak form with Dirichlet data `g` off the unknowns.
/// `fi[i]` carries `f_i` with `ncomp` components.
pub fn assemble_and_solve(
    a: &SystemCoefficients,
    g: &GridField,
    f: &GridField,
    fi: &[GridField],
    opts: &SolveOptions,
) -> Result<(GridField, SolveReport), NumericsError> {
    let grid = g.grid.clone();
    let ops = HorizontalOps::new(grid.clone());
    solve_with(WeakForm::new(ops, a), a, g, f, fi, opts)
}

pub fn solve_with(
    form: WeakForm,
    a: &SystemCoefficients,
    g: &GridField,
    f: &GridField,
    fi: &[GridField],
    opts: &SolveOptions,
) -> Result<(GridField, SolveReport), NumericsError> {
    let grid = g.grid.clone();
    let (n, nc) = (grid.nodes(), a.n);
    if g.ncomp != nc || f.ncomp != nc || fi.iter().any(|x| x.ncomp != nc) || (!fi.is_empty() && fi.len() != a.m) {
        return Err(NumericsError::Shape("component counts disagree with the coefficients".into()));
    }
    if !(g.is_finite() && f.is_finite() && fi.iter().all(GridField::is_finite)) {
        return Err(NumericsError::NonFinite);
    }
    if a.min_eigenvalue() <= 0.0 {
        return Err(NumericsError::SolverDiverged { iterations: 0, reason: "coefficients are not coercive".into() });
    }
    let vol = grid.vol();
    // Dirichlet lift: g off the unknowns, 0 on them.
    let mut lift = g.values.clone();
    for al in 0..nc {
        for k in 0..n {
            if form.unknown[k] {
                lift[al * n + k] = 0.0;
            }
        }
    }
    let mut b = vec![0.0; n * nc];
    form.apply_full(&lift, &mut b);
    let mut tmp = vec![0.0; n];
    for al in 0..nc {
        let fa = f.component(al);
        for k in 0..n {
            b[al * n + k] = -b[al * n + k] - vol * fa[k];
        }
        for (i, fii) in fi.iter().enumerate() {
            let w: Vec<f64> = fii.component(al).iter().zip(&form.weight).map(|(v, wt)| v * wt).collect();
            form.ops.dt[i].matvec(&w, &mut tmp);
            for k in 0..n {
                b[al * n + k] -= tmp[k];
            }
        }
    }
    form.mask(&mut b);
    let diag = form.diagonal();
    let symmetric = a.is_symmetric();
    let (x, iterations) = if symmetric { pcg(&form, &b, &diag, opts)? } else { bicgstab(&form, &b, &diag, opts)? };
    let mut kx = vec![0.0; n * nc];
    form.apply(&x, &mut kx);
    let bn = norm(&b);
    let res: Vec<f64> = b.iter().zip(&kx).map(|(p, q)| p - q).collect();
    let relative_residual = if bn > 0.0 { norm(&res) / bn } else { norm(&res) };
    if relative_residual > opts.residual_bound {
        return Err(NumericsError::IllConditioned { residual: relative_residual });
    }
    let values: Vec<f64> = lift.iter().zip(&x).map(|(l, v)| l + v).collect();
    let unknowns = form.unknown.iter().filter(|u| **u).count() * nc;
    let report = SolveReport { method: if symmetric { "pcg-jacobi".into() } else { "bicgstab-jacobi".into() }, iterations, unknowns, relative_residual };
    Ok((GridField { grid: Arc::clone(&grid), ncomp: nc, values }, report))
}
