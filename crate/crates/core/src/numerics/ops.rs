//! Flow-based difference operators and horizontal Sobolev norms.

use super::grid::{Grid, GridField};
use super::sparse::Csr;
use super::NumericsError;
use crate::algebra::BasisLabel;
use crate::par;
use std::sync::Arc;

/// Sparse difference operator along one left-invariant direction.
#[derive(Clone, Debug)]
pub struct FlowOperator {
    pub label: BasisLabel,
    pub s: f64,
    pub matrix: Csr,
    /// Rows whose flow images stay in the box.
    pub valid: Vec<bool>,
    /// Largest lattice distance between a row node and a column node.
    pub reach: usize,
}

fn reach_of(grid: &Grid, m: &Csr) -> usize {
    let per_row = par::map_indexed(m.nrows, |r| {
        m.row(r)
            .map(|(c, _)| (0..grid.dim()).map(|a| grid.index(r, a).abs_diff(grid.index(c, a))).max().unwrap_or(0))
            .max()
            .unwrap_or(0)
    });
    per_row.into_iter().max().unwrap_or(0)
}

fn build(grid: &Grid, label: BasisLabel, s: f64, row: impl Fn(&[f64], &[f64], usize) -> Option<Vec<(usize, f64)>> + Sync + Send) -> FlowOperator {
    let flow = grid.law().flow_map(label);
    let dim = grid.dim();
    let rows = par::map_indexed(grid.nodes(), |k| {
        let p = grid.point(k);
        let mut scratch = vec![0.0; dim + 1];
        let mut plus = vec![0.0; dim];
        let mut minus = vec![0.0; dim];
        flow.apply(&p, s, &mut scratch, &mut plus);
        flow.apply(&p, -s, &mut scratch, &mut minus);
        row(&plus, &minus, k)
    });
    let valid: Vec<bool> = rows.iter().map(Option::is_some).collect();
    let matrix = Csr::from_rows(grid.nodes(), rows.into_iter().map(Option::unwrap_or_default).collect());
    let reach = reach_of(grid, &matrix);
    FlowOperator { label, s, matrix, valid, reach }
}

impl FlowOperator {
    /// `(u(p e^{sZ}) − u(p e^{−sZ})) / 2s`.
    pub fn centered(grid: &Grid, label: BasisLabel, s: f64) -> Self {
        build(grid, label, s, |plus, minus, _| {
            let (mut a, mut b) = (Vec::new(), Vec::new());
            if !grid.stencil(plus, &mut a) || !grid.stencil(minus, &mut b) {
                return None;
            }
            let inv = 0.5 / s;
            Some(a.into_iter().map(|(c, w)| (c, w * inv)).chain(b.into_iter().map(|(c, w)| (c, -w * inv))).collect())
        })
    }

    /// `(u(p e^{sZ}) − u(p)) / |s|^α`.
    pub fn forward(grid: &Grid, label: BasisLabel, s: f64, alpha: f64) -> Self {
        build(grid, label, s, |plus, _, k| {
            let mut a = Vec::new();
            if !grid.stencil(plus, &mut a) {
                return None;
            }
            let inv = s.abs().powf(-alpha);
            let mut row: Vec<(usize, f64)> = a.into_iter().map(|(c, w)| (c, w * inv)).collect();
            row.push((k, -inv));
            Some(row)
        })
    }

    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.matrix.matvec(x, y);
    }

    /// Applies to every component.
    pub fn apply_field(&self, u: &GridField) -> GridField {
        let mut out = GridField::zeros(u.grid.clone(), u.ncomp);
        for c in 0..u.ncomp {
            let (src, dst) = (u.component(c).to_vec(), out.component_mut(c));
            self.apply(&src, dst);
        }
        out
    }
}

/// Centered horizontal differences `D_i ≈ X_i` with step equal to the
/// spacing of the `i`-th horizontal axis.
#[derive(Clone, Debug)]
pub struct HorizontalOps {
    pub grid: Arc<Grid>,
    pub d: Vec<FlowOperator>,
    pub dt: Vec<Csr>,
    pub reach: usize,
}

impl HorizontalOps {
    pub fn new(grid: Arc<Grid>) -> Self {
        let m = grid.spec().m;
        let d: Vec<FlowOperator> =
            (0..m).map(|i| FlowOperator::centered(&grid, BasisLabel::new(1, i + 1), grid.h[i])).collect();
        let dt = d.iter().map(|op| op.matrix.transpose()).collect();
        let reach = d.iter().map(|op| op.reach).max().unwrap_or(0);
        HorizontalOps { grid, d, dt, reach }
    }

    pub fn m(&self) -> usize {
        self.d.len()
    }

    /// Rows valid for every direction.
    pub fn valid(&self, node: usize) -> bool {
        self.d.iter().all(|op| op.valid[node])
    }

    /// `D_i u` for every `i`.
    pub fn gradient(&self, u: &GridField) -> Vec<GridField> {
        self.d.iter().map(|op| op.apply_field(u)).collect()
    }
}

/// Output of [`flow_difference`].
#[derive(Clone, Debug)]
pub struct FlowDifference {
    pub field: GridField,
    pub valid: Vec<bool>,
}

/// Fractional quotient `(u(p e^{sZ}) − u(p)) / |s|^α` at every node.
pub fn flow_difference(u: &GridField, label: BasisLabel, s: f64, alpha: f64) -> Result<FlowDifference, NumericsError> {
    let op = FlowOperator::forward(&u.grid, label, s, alpha);
    if s == 0.0 || !op.valid[u.grid.center_node()] {
        return Err(NumericsError::StepTooLarge { s });
    }
    Ok(FlowDifference { field: op.apply_field(u), valid: op.valid })
}

/// Integration region for norms.
#[derive(Clone, Debug, PartialEq)]
pub enum Region {
    /// Every node where the required derivatives are defined.
    Interior,
    Ball { center: Vec<f64>, radius: f64 },
    Nodes(Vec<usize>),
}

impl Region {
    pub fn nodes(&self, grid: &Grid) -> Vec<usize> {
        match self {
            Region::Interior => (0..grid.nodes()).collect(),
            Region::Ball { center, radius } => grid.ball_nodes(center, *radius),
            Region::Nodes(v) => v.clone(),
        }
    }
}

/// Nodes where `k` successive applications of every `D_i` only read defined values.
pub fn valid_after(ops: &HorizontalOps, k: usize) -> Vec<bool> {
    let n = ops.grid.nodes();
    let mut valid = vec![true; n];
    for _ in 0..k {
        let prev = valid.clone();
        valid = par::map_indexed(n, |r| {
            ops.valid(r) && ops.d.iter().all(|op| op.matrix.row(r).all(|(c, _)| prev[c]))
        });
    }
    valid
}

/// `(Σ_{l ≤ k} Σ_{i_1..i_l} ‖X_{i_1}⋯X_{i_l} u‖²_{L²(region)})^{1/2}` with
/// centered differences.
pub fn sobolev_norm(u: &GridField, k: usize, region: &Region) -> Result<f64, NumericsError> {
    let ops = HorizontalOps::new(u.grid.clone());
    sobolev_norm_with(&ops, u, k, region)
}

pub fn sobolev_norm_with(ops: &HorizontalOps, u: &GridField, k: usize, region: &Region) -> Result<f64, NumericsError> {
    let valid = valid_after(ops, k);
    let nodes: Vec<usize> = match region {
        Region::Interior => (0..u.nodes()).filter(|&i| valid[i]).collect(),
        r => r.nodes(&u.grid),
    };
    if nodes.iter().any(|&i| !valid[i]) || (k > 0 && nodes.is_empty()) {
        return Err(NumericsError::MarginTooSmall { needed: k * ops.reach.max(1) });
    }
    let mut level = vec![u.clone()];
    let mut total = u.l2_sq_over(&nodes);
    for _ in 0..k {
        let next: Vec<GridField> = level.iter().flat_map(|w| ops.gradient(w)).collect();
        total += next.iter().map(|w| w.l2_sq_over(&nodes)).sum::<f64>();
        level = next;
    }
    Ok(total.sqrt())
}
