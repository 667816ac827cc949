//! Interior energy inequality and fractional seminorm checks.

use super::grid::GridField;
use super::ops::HorizontalOps;
use super::NumericsError;
use crate::algebra::BasisLabel;
use crate::par;
use serde::Serialize;

/// Parameters of `|ω|²_{Z,α} = sup_{|s|<ε₀} ∫ |s|^{−2α} |ω(p e^{sZ}) − ω(p)|² dp`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SeminormParams {
    pub direction: BasisLabel,
    pub alpha: f64,
    pub epsilon0: f64,
    /// Log-spaced offsets per sign in `[ε₀/16, ε₀]`.
    pub samples: usize,
}

impl SeminormParams {
    /// Defaults: `ε₀ = 4h` along the direction's axis, 16 offsets.
    pub fn for_field(u: &GridField, direction: BasisLabel, alpha: f64) -> Self {
        let axis = u.grid.spec().flat(direction).expect("label in basis");
        SeminormParams { direction, alpha, epsilon0: 4.0 * u.grid.h[axis], samples: 16 }
    }

    pub fn offsets(&self) -> Vec<f64> {
        let k = self.samples.max(1);
        let lo = self.epsilon0 / 16.0;
        let mut out = Vec::with_capacity(2 * k);
        for t in 0..k {
            let s = if k == 1 { self.epsilon0 } else { lo * (self.epsilon0 / lo).powf(t as f64 / (k - 1) as f64) };
            out.push(s);
            out.push(-s);
        }
        out
    }
}

/// Seminorm with zero extension outside the box (the support is compact).
pub fn peetre_seminorm(u: &GridField, params: &SeminormParams) -> f64 {
    assert!(params.alpha > 0.0 && params.alpha <= 1.0, "order must lie in (0, 1]");
    assert!(params.epsilon0 > 0.0);
    let grid = &u.grid;
    let flow = grid.law().flow_map(params.direction);
    let dim = grid.dim();
    let vol = grid.vol();
    let mut best = 0.0f64;
    for s in params.offsets() {
        let integral = par::sum_indexed(grid.nodes(), |k| {
            let p = grid.point(k);
            let mut scratch = vec![0.0; dim + 1];
            let mut q = vec![0.0; dim];
            flow.apply(&p, s, &mut scratch, &mut q);
            (0..u.ncomp)
                .map(|c| {
                    let shifted = u.interpolate(&q, c).unwrap_or(0.0);
                    (shifted - u.component(c)[k]).powi(2)
                })
                .sum::<f64>()
        });
        best = best.max(vol * integral * s.abs().powf(-2.0 * params.alpha));
    }
    best.sqrt()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HormanderReport {
    pub direction: BasisLabel,
    /// `|ω|_{X_{k,i}, 1/k}`.
    pub lhs: f64,
    /// `Σ_j |ω|_{X_j, 1} + ‖ω‖_{L²}`.
    pub rhs: f64,
    pub ratio: f64,
}

/// Ratio of the layer-`k` seminorm of order `1/k` to the horizontal side,
/// all seminorms taken with the same `ε₀`.
pub fn hormander_ratio(u: &GridField, direction: BasisLabel, epsilon0: f64) -> HormanderReport {
    let k = direction.layer;
    let lhs = peetre_seminorm(u, &SeminormParams { direction, alpha: 1.0 / k as f64, epsilon0, samples: 16 });
    let m = u.grid.spec().m;
    let horiz: f64 = (1..=m)
        .map(|j| peetre_seminorm(u, &SeminormParams { direction: BasisLabel::new(1, j), alpha: 1.0, epsilon0, samples: 16 }))
        .sum();
    let rhs = horiz + u.l2_sq().sqrt();
    let ratio = if rhs > 0.0 { lhs / rhs } else { 0.0 };
    HormanderReport { direction, lhs, rhs, ratio }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CaccioppoliReport {
    pub center: Vec<f64>,
    pub radius: f64,
    /// `∫_B |Xu|²`.
    pub lhs: f64,
    /// `r⁻² ∫_{2B} |u|²`.
    pub u_term: f64,
    /// `∫_{2B} |f|² + Σ_i |f_i|²`.
    pub data_term: f64,
    pub constant: f64,
    pub ball_nodes: usize,
}

/// Empirical constant `∫_B |Xu|² / (r⁻² ∫_{2B} |u|² + ∫_{2B} |f|² + Σ|f_i|²)`.
pub fn caccioppoli_check(
    u: &GridField,
    f: Option<&GridField>,
    fi: &[GridField],
    center: &[f64],
    radius: f64,
) -> Result<CaccioppoliReport, NumericsError> {
    let ops = HorizontalOps::new(u.grid.clone());
    caccioppoli_with(&ops, u, f, fi, center, radius)
}

pub fn caccioppoli_with(
    ops: &HorizontalOps,
    u: &GridField,
    f: Option<&GridField>,
    fi: &[GridField],
    center: &[f64],
    radius: f64,
) -> Result<CaccioppoliReport, NumericsError> {
    let grid = &u.grid;
    let inner = grid.ball_nodes(center, radius);
    let outer = grid.ball_nodes(center, 2.0 * radius);
    if inner.iter().any(|&k| !ops.valid(k)) {
        return Err(NumericsError::MarginTooSmall { needed: ops.reach });
    }
    // 2B must not touch the faces, otherwise it is clipped by the box.
    if outer.iter().any(|&k| grid.boundary_distance(k) == 0) {
        return Err(NumericsError::MarginTooSmall { needed: 1 });
    }
    let grad = ops.gradient(u);
    let lhs: f64 = grad.iter().map(|g| g.l2_sq_over(&inner)).sum();
    let u_term = u.l2_sq_over(&outer) / (radius * radius);
    let data_term = f.map_or(0.0, |f| f.l2_sq_over(&outer)) + fi.iter().map(|g| g.l2_sq_over(&outer)).sum::<f64>();
    let denom = u_term + data_term;
    let constant = if denom > 0.0 { lhs / denom } else { 0.0 };
    Ok(CaccioppoliReport { center: center.to_vec(), radius, lhs, u_term, data_term, constant, ball_nodes: inner.len() })
}
