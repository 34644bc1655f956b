use serde::Serialize;

use super::domain::Domain2D;
use crate::error::{Error, Result};

/// Uniform grid over the cross-section. Only nodes strictly inside the domain
/// carry unknowns; the Dirichlet condition is imposed by leaving boundary and
/// exterior nodes out.
#[derive(Clone, Debug, Serialize)]
pub struct Grid2D {
    pub step: f64,
    pub nx: usize,
    pub ny: usize,
    /// Centered-frame coordinates of lattice node (0, 0).
    pub origin: [f64; 2],
    /// Twist axis position in the centered frame.
    pub axis: [f64; 2],
    #[serde(skip)]
    index: Vec<Option<usize>>,
    #[serde(skip)]
    nodes: Vec<(usize, usize)>,
}

impl Grid2D {
    pub fn new(domain: &Domain2D, step: f64) -> Result<Self> {
        domain.validate()?;
        if !(step > 0.0 && step.is_finite()) {
            return Err(Error::Geometry(format!("grid spacing must be positive (got {step})")));
        }
        let feature = domain.feature_size();
        if feature / step < 10.0 {
            return Err(Error::Geometry(format!(
                "spacing {step} leaves fewer than 10 nodes across the smallest feature ({feature})"
            )));
        }
        let [hx, hy] = domain.half_extents();
        let (origin, nx, ny) = if domain.edge_aligned() {
            let mx = (2.0 * hx / step).round() as usize;
            let my = (2.0 * hy / step).round() as usize;
            ([-hx, -hy], mx + 1, my + 1)
        } else {
            let mx = (hx / step).ceil() as usize;
            let my = (hy / step).ceil() as usize;
            ([-(mx as f64) * step, -(my as f64) * step], 2 * mx + 1, 2 * my + 1)
        };
        let mut index = vec![None; nx * ny];
        let mut nodes = Vec::new();
        for j in 0..ny {
            for i in 0..nx {
                let (x, y) = (origin[0] + i as f64 * step, origin[1] + j as f64 * step);
                if domain.contains(x, y) {
                    index[j * nx + i] = Some(nodes.len());
                    nodes.push((i, j));
                }
            }
        }
        if nodes.is_empty() {
            return Err(Error::Geometry("grid has no interior nodes".into()));
        }
        Ok(Self {
            step,
            nx,
            ny,
            origin,
            axis: domain.axis_offset,
            index,
            nodes,
        })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Quadrature weight attached to every interior node.
    pub fn weight(&self) -> f64 {
        self.step * self.step
    }

    pub fn coords(&self, node: usize) -> [f64; 2] {
        let (i, j) = self.nodes[node];
        [
            self.origin[0] + i as f64 * self.step,
            self.origin[1] + j as f64 * self.step,
        ]
    }

    fn neighbor(&self, node: usize, di: isize, dj: isize) -> Option<usize> {
        let (i, j) = self.nodes[node];
        let (ii, jj) = (i as isize + di, j as isize + dj);
        if ii < 0 || jj < 0 || ii >= self.nx as isize || jj >= self.ny as isize {
            return None;
        }
        self.index[jj as usize * self.nx + ii as usize]
    }

    /// Interior neighbours in the order (−x, +x, −y, +y).
    pub(crate) fn neighbors(&self, node: usize) -> [Option<usize>; 4] {
        [
            self.neighbor(node, -1, 0),
            self.neighbor(node, 1, 0),
            self.neighbor(node, 0, -1),
            self.neighbor(node, 0, 1),
        ]
    }

    /// Five-point Dirichlet Laplacian `−Δ_h u`.
    pub fn apply_laplacian(&self, u: &[f64], out: &mut [f64]) {
        let inv_h2 = 1.0 / (self.step * self.step);
        for (node, o) in out.iter_mut().enumerate() {
            let s: f64 = self.neighbors(node).iter().flatten().map(|&m| u[m]).sum();
            *o = (4.0 * u[node] - s) * inv_h2;
        }
    }

    /// Centered-difference `∂_φ u = x̃₁∂₂u − x̃₂∂₁u` about the twist axis, with
    /// `u` extended by zero outside the domain. The resulting matrix is exactly
    /// antisymmetric.
    pub fn apply_angular_derivative(&self, u: &[f64], out: &mut [f64]) {
        let inv_2h = 0.5 / self.step;
        for (node, o) in out.iter_mut().enumerate() {
            let [x, y] = self.coords(node);
            let (xt, yt) = (x - self.axis[0], y - self.axis[1]);
            let [w, e, s, n] = self.neighbors(node);
            let val = |m: Option<usize>| m.map_or(0.0, |m| u[m]);
            let d1 = (val(e) - val(w)) * inv_2h;
            let d2 = (val(n) - val(s)) * inv_2h;
            *o = xt * d2 - yt * d1;
        }
    }

    /// Second angular derivative
    /// `∂_φ²u = x̃₁²∂₂²u − 2x̃₁x̃₂∂₁∂₂u + x̃₂²∂₁²u − x̃₁∂₁u − x̃₂∂₂u` from
    /// nine-point centered stencils. Composing the first-order operator with
    /// itself would zero-extend `∂_φu`, which does not vanish on the boundary,
    /// and lose an order of accuracy in `⟨u, ∂_φ²v⟩`.
    pub fn apply_angular_second(&self, u: &[f64], out: &mut [f64]) {
        let h = self.step;
        for (node, o) in out.iter_mut().enumerate() {
            let [x, y] = self.coords(node);
            let (xt, yt) = (x - self.axis[0], y - self.axis[1]);
            let val = |di, dj| self.neighbor(node, di, dj).map_or(0.0, |m| u[m]);
            let c = u[node];
            let (e, w, n, s) = (val(1, 0), val(-1, 0), val(0, 1), val(0, -1));
            let ux = (e - w) / (2.0 * h);
            let uy = (n - s) / (2.0 * h);
            let uxx = (e - 2.0 * c + w) / (h * h);
            let uyy = (n - 2.0 * c + s) / (h * h);
            let uxy = (val(1, 1) - val(-1, 1) - val(1, -1) + val(-1, -1)) / (4.0 * h * h);
            *o = xt * xt * uyy - 2.0 * xt * yt * uxy + yt * yt * uxx - xt * ux - yt * uy;
        }
    }

    /// Grid inner product with the `h²` node weight.
    pub fn dot(&self, u: &[f64], v: &[f64]) -> f64 {
        self.weight() * u.iter().zip(v).map(|(a, b)| a * b).sum::<f64>()
    }

    /// Largest index distance between coupled nodes.
    pub(crate) fn bandwidth(&self) -> usize {
        (0..self.len())
            .flat_map(|n| self.neighbors(n).into_iter().flatten().map(move |m| n.abs_diff(m)))
            .max()
            .unwrap_or(0)
    }
}

/// Values sampled on the interior nodes of a grid.
#[derive(Clone, Debug)]
pub struct GridFunction {
    pub grid: std::sync::Arc<Grid2D>,
    pub values: Vec<f64>,
}

impl GridFunction {
    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn norm_sq(&self) -> f64 {
        self.grid.dot(&self.values, &self.values)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_square_grid_excludes_boundary() {
        let d = Domain2D::rectangle(1.0, 1.0).unwrap();
        let g = Grid2D::new(&d, 1.0 / 16.0).unwrap();
        assert_eq!(g.len(), 15 * 15);
        let c = g.coords(0);
        assert!((c[0] + 0.5 - 1.0 / 16.0).abs() < 1e-14);
    }

    #[test]
    fn coarse_spacing_is_a_geometry_error() {
        let d = Domain2D::disc(1.0).unwrap();
        assert!(matches!(Grid2D::new(&d, 0.5), Err(Error::Geometry(_))));
    }

    #[test]
    fn angular_derivative_matrix_is_antisymmetric() {
        let d = Domain2D::disc(1.0).unwrap().with_axis_offset([0.1, -0.2]);
        let g = Grid2D::new(&d, 0.1).unwrap();
        let n = g.len();
        let mut col = vec![0.0; n];
        let mut e = vec![0.0; n];
        let mut dense = vec![0.0; n * n];
        for j in 0..n {
            e.iter_mut().for_each(|v| *v = 0.0);
            e[j] = 1.0;
            g.apply_angular_derivative(&e, &mut col);
            for i in 0..n {
                dense[i * n + j] = col[i];
            }
        }
        for i in 0..n {
            for j in 0..n {
                assert!((dense[i * n + j] + dense[j * n + i]).abs() < 1e-12);
            }
        }
    }
}
