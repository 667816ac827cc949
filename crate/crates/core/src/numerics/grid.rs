//! Uniform lattice on a coordinate box and node-valued fields.

use super::NumericsError;
use crate::algebra::AlgebraSpec;
use crate::group::{dilate_f64, gauge_norm_f64, GroupLaw};
use crate::par;
use crate::poly::Polynomial;
use std::sync::Arc;

/// Fractional indices this close to an integer are treated as lattice hits,
/// so flows landing on nodes reproduce nodal values exactly.
const SNAP: f64 = 1e-9;

/// `n` cells per axis on `[-half_c, half_c]`, so `n + 1` nodes per axis.
#[derive(Clone, Debug)]
pub struct Grid {
    law: Arc<GroupLaw>,
    pub n: usize,
    pub half: Vec<f64>,
    pub h: Vec<f64>,
    nodes: usize,
    strides: Vec<usize>,
}

impl Grid {
    /// Half-width `scale^k` on every layer-`k` axis.
    pub fn new(law: Arc<GroupLaw>, n: usize, scale: f64) -> Self {
        let spec = law.spec();
        let half: Vec<f64> = (0..spec.dim()).map(|c| scale.powi(spec.layer_of(c) as i32)).collect();
        Grid::with_half(law, n, half)
    }

    pub fn with_half(law: Arc<GroupLaw>, n: usize, half: Vec<f64>) -> Self {
        assert!(n >= 2, "need at least two cells per axis");
        let dim = law.dim();
        assert_eq!(half.len(), dim);
        let h = half.iter().map(|l| 2.0 * l / n as f64).collect();
        let mut strides = vec![1usize; dim];
        for c in (0..dim.saturating_sub(1)).rev() {
            strides[c] = strides[c + 1] * (n + 1);
        }
        Grid { law, n, half, h, nodes: (n + 1).pow(dim as u32), strides }
    }

    /// Same lattice pushed forward by the dilation `δ_s`.
    pub fn dilated(&self, s: f64) -> Grid {
        let half = dilate_f64(self.spec(), s, &self.half).iter().map(|x| x.abs()).collect();
        Grid::with_half(self.law.clone(), self.n, half)
    }

    pub fn law(&self) -> &GroupLaw {
        &self.law
    }

    pub fn law_arc(&self) -> Arc<GroupLaw> {
        self.law.clone()
    }

    pub fn spec(&self) -> &AlgebraSpec {
        self.law.spec()
    }

    pub fn dim(&self) -> usize {
        self.half.len()
    }

    pub fn nodes(&self) -> usize {
        self.nodes
    }

    /// Cell volume, the quadrature weight of one node.
    pub fn vol(&self) -> f64 {
        self.h.iter().product()
    }

    pub fn index(&self, node: usize, axis: usize) -> usize {
        (node / self.strides[axis]) % (self.n + 1)
    }

    pub fn node_of(&self, idx: &[usize]) -> usize {
        idx.iter().zip(&self.strides).map(|(i, s)| i * s).sum()
    }

    pub fn coord(&self, node: usize, axis: usize) -> f64 {
        -self.half[axis] + self.index(node, axis) as f64 * self.h[axis]
    }

    pub fn point_into(&self, node: usize, out: &mut [f64]) {
        for (a, o) in out.iter_mut().enumerate() {
            *o = self.coord(node, a);
        }
    }

    pub fn point(&self, node: usize) -> Vec<f64> {
        (0..self.dim()).map(|a| self.coord(node, a)).collect()
    }

    /// Lattice steps to the nearest box face.
    pub fn boundary_distance(&self, node: usize) -> usize {
        (0..self.dim()).map(|a| self.index(node, a).min(self.n - self.index(node, a))).min().unwrap_or(0)
    }

    /// Node closest to the identity.
    pub fn center_node(&self) -> usize {
        self.node_of(&vec![self.n / 2; self.dim()])
    }

    /// Multilinear interpolation weights at `x`, or `false` outside the box.
    pub fn stencil(&self, x: &[f64], out: &mut Vec<(usize, f64)>) -> bool {
        out.clear();
        out.push((0, 1.0));
        for (a, &xa) in x.iter().enumerate() {
            let t = (xa + self.half[a]) / self.h[a];
            let r = t.round();
            let (i0, w1) = if (t - r).abs() < SNAP {
                (r, 0.0)
            } else {
                (t.floor(), t - t.floor())
            };
            if i0 < 0.0 || i0 > self.n as f64 || (w1 > 0.0 && i0 + 1.0 > self.n as f64) {
                return false;
            }
            let base = i0 as usize * self.strides[a];
            if w1 == 0.0 {
                for e in out.iter_mut() {
                    e.0 += base;
                }
            } else {
                let len = out.len();
                for k in 0..len {
                    let (node, w) = out[k];
                    out[k] = (node + base, w * (1.0 - w1));
                    out.push((node + base + self.strides[a], w * w1));
                }
            }
        }
        true
    }

    /// `f` sampled at every node.
    pub fn sample<F: Fn(&[f64]) -> f64 + Sync + Send>(&self, f: F) -> Vec<f64> {
        par::map_indexed(self.nodes, |k| f(&self.point(k)))
    }

    /// Nodes in the closed gauge ball `{p : |c⁻¹ p| ≤ radius}`.
    pub fn ball_nodes(&self, center: &[f64], radius: f64) -> Vec<usize> {
        let inv: Vec<f64> = center.iter().map(|x| -x).collect();
        let at_identity = center.iter().all(|x| *x == 0.0);
        let spec = self.spec();
        let inside = par::map_indexed(self.nodes, |k| {
            let p = self.point(k);
            let d = if at_identity { gauge_norm_f64(spec, &p) } else { gauge_norm_f64(spec, &self.law.product_f64(&inv, &p)) };
            d <= radius
        });
        (0..self.nodes).filter(|&k| inside[k]).collect()
    }
}

/// `ncomp` values per node, stored component-major.
#[derive(Clone, Debug)]
pub struct GridField {
    pub grid: Arc<Grid>,
    pub ncomp: usize,
    pub values: Vec<f64>,
}

impl GridField {
    pub fn zeros(grid: Arc<Grid>, ncomp: usize) -> Self {
        let values = vec![0.0; ncomp * grid.nodes()];
        GridField { grid, ncomp, values }
    }

    pub fn from_values(grid: Arc<Grid>, ncomp: usize, values: Vec<f64>) -> Result<Self, NumericsError> {
        if values.len() != ncomp * grid.nodes() {
            return Err(NumericsError::Shape(format!("{} values for {} nodes x {ncomp}", values.len(), grid.nodes())));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(NumericsError::NonFinite);
        }
        Ok(GridField { grid, ncomp, values })
    }

    /// One component per polynomial, evaluated at the nodes.
    pub fn from_polys(grid: Arc<Grid>, polys: &[Polynomial]) -> Self {
        let mut values = Vec::with_capacity(polys.len() * grid.nodes());
        for p in polys {
            let c = p.compile();
            values.extend(grid.sample(|x| c.eval(x)));
        }
        GridField { grid, ncomp: polys.len(), values }
    }

    pub fn from_fn<F: Fn(&[f64]) -> f64 + Sync + Send>(grid: Arc<Grid>, f: F) -> Self {
        let values = grid.sample(f);
        GridField { grid, ncomp: 1, values }
    }

    pub fn nodes(&self) -> usize {
        self.grid.nodes()
    }

    pub fn component(&self, c: usize) -> &[f64] {
        let n = self.nodes();
        &self.values[c * n..(c + 1) * n]
    }

    pub fn component_mut(&mut self, c: usize) -> &mut [f64] {
        let n = self.nodes();
        &mut self.values[c * n..(c + 1) * n]
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn scaled(&self, lambda: f64) -> Self {
        GridField { grid: self.grid.clone(), ncomp: self.ncomp, values: self.values.iter().map(|v| v * lambda).collect() }
    }

    pub fn plus_constant(&self, c: f64) -> Self {
        GridField { grid: self.grid.clone(), ncomp: self.ncomp, values: self.values.iter().map(|v| v + c).collect() }
    }

    /// Same nodal values carried by the dilated lattice, i.e. `u ∘ δ_{1/s}`.
    pub fn dilated(&self, s: f64) -> Self {
        GridField { grid: Arc::new(self.grid.dilated(s)), ncomp: self.ncomp, values: self.values.clone() }
    }

    /// Interpolated value of component `c` at `x`, `None` outside the box.
    pub fn interpolate(&self, x: &[f64], c: usize) -> Option<f64> {
        let mut st = Vec::new();
        if !self.grid.stencil(x, &mut st) {
            return None;
        }
        let comp = self.component(c);
        Some(st.iter().map(|(k, w)| w * comp[*k]).sum())
    }

    /// `Σ_c |u_c|²` at a node.
    pub fn norm_sq_at(&self, node: usize) -> f64 {
        (0..self.ncomp).map(|c| self.component(c)[node].powi(2)).sum()
    }

    /// `∫ |u|²` over the listed nodes with nodal quadrature.
    pub fn l2_sq_over(&self, nodes: &[usize]) -> f64 {
        self.grid.vol() * par::sum_indexed(nodes.len(), |k| self.norm_sq_at(nodes[k]))
    }

    /// `∫ |u|²` over the whole lattice.
    pub fn l2_sq(&self) -> f64 {
        self.grid.vol() * par::sum_indexed(self.nodes(), |k| self.norm_sq_at(k))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::heisenberg;

    fn grid(n: usize) -> Arc<Grid> {
        Arc::new(Grid::new(Arc::new(GroupLaw::new(&heisenberg())), n, 1.0))
    }

    #[test]
    fn layout_and_coordinates() {
        let g = grid(4);
        assert_eq!(g.nodes(), 125);
        let c = g.center_node();
        assert_eq!(g.point(c), vec![0.0, 0.0, 0.0]);
        assert_eq!(g.boundary_distance(c), 2);
        assert_eq!(g.vol(), 0.125);
    }

    #[test]
    fn interpolation_is_exact_on_multilinear() {
        let g = grid(4);
        let u = GridField::from_fn(g, |p| 1.0 + 2.0 * p[0] - p[1] + 0.5 * p[0] * p[2]);
        let x = [0.3, -0.2, 0.77];
        let v = u.interpolate(&x, 0).unwrap();
        assert!((v - (1.0 + 0.6 + 0.2 + 0.5 * 0.3 * 0.77)).abs() < 1e-12);
        assert!(u.interpolate(&[1.2, 0.0, 0.0], 0).is_none());
        assert_eq!(u.interpolate(&[-1.0, 1.0, 1.0], 0), Some(u.component(0)[g_last(&u)]));
    }

    fn g_last(u: &GridField) -> usize {
        let g = &u.grid;
        g.node_of(&[0, g.n, g.n])
    }

    #[test]
    fn ball_at_origin() {
        let g = grid(8);
        let b = g.ball_nodes(&[0.0; 3], 0.5);
        assert!(b.contains(&g.center_node()));
        assert!(b.iter().all(|&k| gauge_norm_f64(g.spec(), &g.point(k)) <= 0.5));
    }
}
