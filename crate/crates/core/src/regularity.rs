//! Ball-based estimates on discrete solutions: excess and its decay, the
//! constant-coefficient sup bound, mixed-layer derivative bounds and blow-up
//! rescaling.

use crate::algebra::{AlgebraSpec, BasisLabel};
use crate::group::{dilate_f64, GroupLaw};
use crate::numerics::grid::{Grid, GridField};
use crate::numerics::ops::{sobolev_norm_with, valid_after, FlowOperator, HorizontalOps, Region};
use crate::numerics::NumericsError;
use crate::par;
use crate::poly::Polynomial;
use crate::q::Q;
use serde::Serialize;
use std::sync::Arc;
use thiserror::Error;

#[derive(Clone, Debug, PartialEq, Error)]
pub enum RegularityError {
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error("ZeroExcess: excess {excess:e} on the ball is numerically zero")]
    ZeroExcess { excess: f64 },
    #[error("ball of radius {radius} contains no lattice node")]
    EmptyBall { radius: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

/// `x₁ + x₂/2 + x₁x₂ + p_{2,1}/2`, annihilated by `Σ X_i²` on every group
/// with at least two generators.
pub fn harmonic_preset(spec: &AlgebraSpec) -> Polynomial {
    assert!(spec.m >= 2, "preset needs two horizontal directions");
    let half = Q::new(1.into(), 2.into());
    let (x1, x2) = (Polynomial::var(0), Polynomial::var(1));
    let mut u = x1.add_ref(&x2.scaled(&half)).add_ref(&x1.mul_ref(&x2));
    if let Some(c) = spec.flat(BasisLabel::new(2, 1)) {
        u.add_scaled(&Polynomial::var(c), &half);
    }
    u
}

/// Balls at the identity must fit in the box: `R^k ≤ half_k` on every axis.
fn check_ball_in_box(grid: &Grid, center: &[f64], radius: f64) -> Result<(), RegularityError> {
    if center.iter().all(|c| *c == 0.0) {
        let spec = grid.spec();
        for a in 0..grid.dim() {
            if radius.powi(spec.layer_of(a) as i32) > grid.half[a] * (1.0 + 1e-12) {
                return Err(NumericsError::MarginTooSmall { needed: 1 }.into());
            }
        }
    }
    Ok(())
}

fn ball(grid: &Grid, center: &[f64], radius: f64) -> Result<Vec<usize>, RegularityError> {
    check_ball_in_box(grid, center, radius)?;
    let nodes = grid.ball_nodes(center, radius);
    if nodes.is_empty() {
        return Err(RegularityError::EmptyBall { radius });
    }
    Ok(nodes)
}

/// Equal-weight mean per component over the listed nodes.
fn mean_over(u: &GridField, nodes: &[usize]) -> Vec<f64> {
    (0..u.ncomp)
        .map(|c| {
            let comp = u.component(c);
            par::sum_indexed(nodes.len(), |k| comp[nodes[k]]) / nodes.len() as f64
        })
        .collect()
}

fn oscillation_sum(u: &GridField, nodes: &[usize], mean: &[f64]) -> f64 {
    par::sum_indexed(nodes.len(), |k| (0..u.ncomp).map(|c| (u.component(c)[nodes[k]] - mean[c]).powi(2)).sum::<f64>())
}

/// Mean over the gauge ball of `|u − u_{p₀,R}|²`.
pub fn excess(u: &GridField, center: &[f64], radius: f64) -> Result<f64, RegularityError> {
    let nodes = ball(&u.grid, center, radius)?;
    let mean = mean_over(u, &nodes);
    Ok(oscillation_sum(u, &nodes, &mean) / nodes.len() as f64)
}

/// Least-squares slope of `log y` against `log x`.
pub fn fit_exponent(x: &[f64], y: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = x.iter().zip(y).filter(|(a, b)| **a > 0.0 && **b > 0.0).map(|(a, b)| (a.ln(), b.ln())).collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let (mx, my) = (pts.iter().map(|p| p.0).sum::<f64>() / n, pts.iter().map(|p| p.1).sum::<f64>() / n);
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    Some(pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>() / sxx)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExcessReport {
    pub center: Vec<f64>,
    pub radii: Vec<f64>,
    /// `U(p₀, r)` per radius.
    pub excess: Vec<f64>,
    /// `∫_{B_r} |u − u_r|²` per radius.
    pub integral: Vec<f64>,
    /// `u_{p₀,r}` per radius and component.
    pub means: Vec<Vec<f64>>,
    pub ball_nodes: Vec<usize>,
    /// Slope of `log ∫_{B_r}|u − u_r|²` in `log r`.
    pub fitted_exponent: Option<f64>,
    /// Slope of `log U` in `log r`.
    pub mean_exponent: Option<f64>,
}

pub fn excess_profile(u: &GridField, center: &[f64], radii: &[f64]) -> Result<ExcessReport, RegularityError> {
    let vol = u.grid.vol();
    let (mut ex, mut integral, mut means, mut counts) = (vec![], vec![], vec![], vec![]);
    for &r in radii {
        let nodes = ball(&u.grid, center, r)?;
        let mean = mean_over(u, &nodes);
        let s = oscillation_sum(u, &nodes, &mean);
        ex.push(s / nodes.len() as f64);
        integral.push(vol * s);
        means.push(mean);
        counts.push(nodes.len());
    }
    let fitted_exponent = fit_exponent(radii, &integral);
    let mean_exponent = fit_exponent(radii, &ex);
    Ok(ExcessReport { center: center.to_vec(), radii: radii.to_vec(), excess: ex, integral, means, ball_nodes: counts, fitted_exponent, mean_exponent })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DecayReport {
    pub tau: f64,
    pub radius: f64,
    pub homogeneous_dimension: usize,
    /// `U(τR) / U(R)`.
    pub excess_ratio: f64,
    /// `∫_{B_{τR}} / ∫_{B_R}` of the oscillation.
    pub integral_ratio: f64,
    /// `integral_ratio / τ^{Q+2}`.
    pub normalized_integral: f64,
    /// `excess_ratio / τ²`.
    pub normalized_excess: f64,
    pub profile: ExcessReport,
    pub fitted_exponent: Option<f64>,
    /// Half the mean-form exponent, reported only when the excess decays.
    pub holder_exponent: Option<f64>,
}

/// Excess decay between `R` and `τR`, with a fit over `radii`.
pub fn excess_decay_check(u: &GridField, center: &[f64], tau: f64, radius: f64, radii: &[f64]) -> Result<DecayReport, RegularityError> {
    if !(tau > 0.0 && tau < 1.0) {
        return Err(RegularityError::InvalidParameter(format!("tau = {tau} must lie in (0, 1)")));
    }
    let pair = excess_profile(u, center, &[tau * radius, radius])?;
    let profile = excess_profile(u, center, radii)?;
    let q = u.grid.spec().homogeneous_dimension();
    let ratio = |a: f64, b: f64| if b > 0.0 { a / b } else { 0.0 };
    let excess_ratio = ratio(pair.excess[0], pair.excess[1]);
    let integral_ratio = ratio(pair.integral[0], pair.integral[1]);
    let decays = pair.excess[1] > 0.0 && excess_ratio < 1.0;
    Ok(DecayReport {
        tau,
        radius,
        homogeneous_dimension: q,
        excess_ratio,
        integral_ratio,
        normalized_integral: integral_ratio / tau.powi(q as i32 + 2),
        normalized_excess: excess_ratio / (tau * tau),
        fitted_exponent: profile.fitted_exponent,
        holder_exponent: if decays { profile.mean_exponent.map(|e| e / 2.0) } else { None },
        profile,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SupReport {
    pub center: Vec<f64>,
    pub radius: f64,
    /// `sup_{B_R} (|u|² + R²|Xu|² + R⁴ Σ|X_iX_j u|²)`.
    pub lhs: f64,
    /// Mean of `|u|²` over `B_{2R}`.
    pub rhs: f64,
    pub ratio: f64,
}

pub fn sup_estimate_check(u: &GridField, center: &[f64], radius: f64) -> Result<SupReport, RegularityError> {
    let ops = HorizontalOps::new(u.grid.clone());
    sup_estimate_with(&ops, u, center, radius)
}

pub fn sup_estimate_with(ops: &HorizontalOps, u: &GridField, center: &[f64], radius: f64) -> Result<SupReport, RegularityError> {
    let inner = ball(&u.grid, center, radius)?;
    let outer = ball(&u.grid, center, 2.0 * radius)?;
    let valid = valid_after(ops, 2);
    if inner.iter().any(|&k| !valid[k]) {
        return Err(NumericsError::MarginTooSmall { needed: 2 * ops.reach }.into());
    }
    let first = ops.gradient(u);
    let second: Vec<GridField> = first.iter().flat_map(|g| ops.gradient(g)).collect();
    let (r2, r4) = (radius * radius, radius.powi(4));
    let lhs = par::reduce_indexed(
        inner.len(),
        0.0f64,
        |k| {
            let node = inner[k];
            u.norm_sq_at(node)
                + r2 * first.iter().map(|g| g.norm_sq_at(node)).sum::<f64>()
                + r4 * second.iter().map(|g| g.norm_sq_at(node)).sum::<f64>()
        },
        f64::max,
    );
    let rhs = par::sum_indexed(outer.len(), |k| u.norm_sq_at(outer[k])) / outer.len() as f64;
    let ratio = if rhs > 0.0 { lhs / rhs } else { 0.0 };
    Ok(SupReport { center: center.to_vec(), radius, lhs, rhs, ratio })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EstimateReport {
    pub word: Vec<BasisLabel>,
    pub radius: f64,
    /// `‖X^{word} u‖_{S^{1,2}(B)}`.
    pub lhs: f64,
    /// `‖u‖_{S^{1,2}(2B)} + ‖f‖_{L²(2B)} + Σ_i ‖f_i‖_{L²(2B)}`.
    pub rhs: f64,
    pub constant: f64,
}

/// Bound of a mixed-layer derivative `X^{word} u` (applied right to left)
/// on `B` by first-order data on `2B`.
pub fn higher_order_estimate_check(
    u: &GridField,
    f: Option<&GridField>,
    fi: &[GridField],
    word: &[BasisLabel],
    center: &[f64],
    radius: f64,
) -> Result<EstimateReport, RegularityError> {
    let grid = u.grid.clone();
    let ops = HorizontalOps::new(grid.clone());
    let inner = ball(&grid, center, radius)?;
    let outer = ball(&grid, center, 2.0 * radius)?;
    let mut w = u.clone();
    let mut valid = vec![true; grid.nodes()];
    for &label in word.iter().rev() {
        let axis = grid.spec().flat(label).ok_or_else(|| RegularityError::InvalidParameter(format!("{label} is not a basis label")))?;
        let op = FlowOperator::centered(&grid, label, grid.h[axis]);
        let prev = valid;
        valid = par::map_indexed(grid.nodes(), |r| op.valid[r] && op.matrix.row(r).all(|(c, _)| prev[c]));
        w = op.apply_field(&w);
    }
    // One more horizontal layer for the S^{1,2} norm.
    let once = par::map_indexed(grid.nodes(), |r| ops.valid(r) && ops.d.iter().all(|op| op.matrix.row(r).all(|(c, _)| valid[c])));
    if inner.iter().any(|&k| !once[k]) {
        return Err(NumericsError::MarginTooSmall { needed: (word.len() + 1) * ops.reach.max(1) }.into());
    }
    let lhs = sobolev_norm_with(&ops, &w, 1, &Region::Nodes(inner))?;
    let rhs = sobolev_norm_with(&ops, u, 1, &Region::Nodes(outer.clone()))?
        + f.map_or(0.0, |f| f.l2_sq_over(&outer).sqrt())
        + fi.iter().map(|g| g.l2_sq_over(&outer).sqrt()).sum::<f64>();
    let constant = if rhs > 0.0 { lhs / rhs } else { 0.0 };
    Ok(EstimateReport { word: word.to_vec(), radius, lhs, rhs, constant })
}

/// One element of a blow-up sequence.
#[derive(Clone, Debug)]
pub struct BlowupSequence {
    pub center: Vec<f64>,
    pub scale: f64,
    /// `U(p₀, R)^{1/2}`.
    pub epsilon: f64,
    pub mean: Vec<f64>,
    /// `υ(q) = ε⁻¹[u(p₀ δ_R q) − u_{p₀,R}]` on the source lattice pulled back
    /// by `δ_{1/R}`; nodes whose image leaves the source box hold 0.
    pub field: GridField,
    /// Mean of `|υ|²` over the unit gauge ball.
    pub normalization: f64,
}

pub fn blowup_rescale(u: &GridField, center: &[f64], radius: f64) -> Result<BlowupSequence, RegularityError> {
    if radius <= 0.0 {
        return Err(RegularityError::InvalidParameter(format!("radius {radius} must be positive")));
    }
    let nodes = ball(&u.grid, center, radius)?;
    let mean = mean_over(u, &nodes);
    let ex = oscillation_sum(u, &nodes, &mean) / nodes.len() as f64;
    let scale2 = mean.iter().map(|m| m * m).sum::<f64>().max(1.0);
    if ex <= 1e-20 * scale2 {
        return Err(RegularityError::ZeroExcess { excess: ex });
    }
    let epsilon = ex.sqrt();
    let law: Arc<GroupLaw> = u.grid.law_arc();
    let target = Arc::new(u.grid.dilated(1.0 / radius));
    let spec = law.spec();
    let at_identity = center.iter().all(|c| *c == 0.0);
    let nn = target.nodes();
    let mut values = vec![0.0; u.ncomp * nn];
    let per_node = par::map_indexed(nn, |k| {
        let q = dilate_f64(spec, radius, &target.point(k));
        let p = if at_identity { q } else { law.product_f64(center, &q) };
        (0..u.ncomp).map(|c| u.interpolate(&p, c).map_or(0.0, |v| (v - mean[c]) / epsilon)).collect::<Vec<f64>>()
    });
    for (k, vals) in per_node.into_iter().enumerate() {
        for (c, v) in vals.into_iter().enumerate() {
            values[c * nn + k] = v;
        }
    }
    let field = GridField::from_values(target.clone(), u.ncomp, values)?;
    let unit = target.ball_nodes(&vec![0.0; target.dim()], 1.0);
    let normalization = par::sum_indexed(unit.len(), |k| field.norm_sq_at(unit[k])) / unit.len().max(1) as f64;
    Ok(BlowupSequence { center: center.to_vec(), scale: radius, epsilon, mean, field, normalization })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::heisenberg;
    use crate::fields::{FieldSet, SystemCoefficients};

    fn grid(n: usize) -> Arc<Grid> {
        Arc::new(Grid::new(Arc::new(GroupLaw::new(&heisenberg())), n, 1.0))
    }

    #[test]
    fn preset_is_harmonic() {
        for spec in [heisenberg(), crate::algebra::engel(), crate::algebra::build_free_nilpotent(3, 2).unwrap()] {
            let fields = FieldSet::new(&spec);
            let a = SystemCoefficients::identity(1, spec.m);
            let u = harmonic_preset(&spec);
            let r = fields.system_residual(&a, &[u], &[], &[Polynomial::zero()]);
            assert!(r[0].is_zero());
        }
    }

    #[test]
    fn constant_has_zero_excess() {
        let u = GridField::from_fn(grid(8), |_| 2.5);
        assert_eq!(excess(&u, &[0.0; 3], 1.0).unwrap(), 0.0);
        assert!(matches!(blowup_rescale(&u, &[0.0; 3], 1.0), Err(RegularityError::ZeroExcess { .. })));
    }

    #[test]
    fn fit_recovers_power() {
        let x = [0.25, 0.5, 1.0];
        let y: Vec<f64> = x.iter().map(|r: &f64| 3.0 * r.powi(6)).collect();
        assert!((fit_exponent(&x, &y).unwrap() - 6.0).abs() < 1e-12);
    }

    #[test]
    fn ball_outside_box_is_rejected() {
        let u = GridField::from_fn(grid(8), |p| p[0]);
        assert!(excess(&u, &[0.0; 3], 1.5).is_err());
    }
}
