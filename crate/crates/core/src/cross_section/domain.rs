use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Shape of the waveguide cross-section, in length units.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Shape {
    Rectangle { width: f64, height: f64 },
    Disc { radius: f64 },
    Polygon { vertices: Vec<[f64; 2]> },
}

/// Bounded cross-section placed with its centroid at the origin of the
/// working frame. The twist axis (about which `∂_φ = x₁∂₂ − x₂∂₁` rotates)
/// sits at `axis_offset` in that frame.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Domain2D {
    pub shape: Shape,
    #[serde(default)]
    pub axis_offset: [f64; 2],
}

impl Domain2D {
    pub fn rectangle(width: f64, height: f64) -> Result<Self> {
        let d = Self {
            shape: Shape::Rectangle { width, height },
            axis_offset: [0.0, 0.0],
        };
        d.validate()?;
        Ok(d)
    }

    pub fn disc(radius: f64) -> Result<Self> {
        let d = Self {
            shape: Shape::Disc { radius },
            axis_offset: [0.0, 0.0],
        };
        d.validate()?;
        Ok(d)
    }

    pub fn polygon(vertices: Vec<[f64; 2]>) -> Result<Self> {
        let d = Self {
            shape: Shape::Polygon { vertices },
            axis_offset: [0.0, 0.0],
        };
        d.validate()?;
        Ok(d)
    }

    pub fn with_axis_offset(mut self, offset: [f64; 2]) -> Self {
        self.axis_offset = offset;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !self.axis_offset.iter().all(|v| v.is_finite()) {
            return Err(Error::Geometry("axis offset must be finite".into()));
        }
        match &self.shape {
            Shape::Rectangle { width, height } => {
                if !(*width > 0.0 && *height > 0.0 && width.is_finite() && height.is_finite()) {
                    return Err(Error::Geometry(format!(
                        "rectangle sides must be positive and finite (got {width} x {height})"
                    )));
                }
            }
            Shape::Disc { radius } => {
                if !(*radius > 0.0 && radius.is_finite()) {
                    return Err(Error::Geometry(format!(
                        "disc radius must be positive and finite (got {radius})"
                    )));
                }
            }
            Shape::Polygon { vertices } => {
                if vertices.len() < 3 {
                    return Err(Error::Geometry("polygon needs at least 3 vertices".into()));
                }
                if vertices.iter().flatten().any(|v| !v.is_finite()) {
                    return Err(Error::Geometry("polygon vertices must be finite".into()));
                }
                if signed_area(vertices).abs() <= f64::EPSILON {
                    return Err(Error::Geometry("polygon has zero area".into()));
                }
                if let Some((a, b)) = first_self_intersection(vertices) {
                    return Err(Error::Geometry(format!(
                        "polygon is not simple: edges {a} and {b} intersect"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Half-extents of the centered bounding box.
    pub fn half_extents(&self) -> [f64; 2] {
        match &self.shape {
            Shape::Rectangle { width, height } => [0.5 * width, 0.5 * height],
            Shape::Disc { radius } => [*radius, *radius],
            Shape::Polygon { .. } => {
                let v = self.centered_vertices();
                let mx = v.iter().map(|p| p[0].abs()).fold(0.0, f64::max);
                let my = v.iter().map(|p| p[1].abs()).fold(0.0, f64::max);
                [mx, my]
            }
        }
    }

    /// Smallest length the grid must resolve.
    pub fn feature_size(&self) -> f64 {
        match &self.shape {
            Shape::Rectangle { width, height } => width.min(*height),
            Shape::Disc { radius } => 2.0 * radius,
            Shape::Polygon { vertices } => {
                let (mut x0, mut x1, mut y0, mut y1) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
                for p in vertices {
                    x0 = x0.min(p[0]);
                    x1 = x1.max(p[0]);
                    y0 = y0.min(p[1]);
                    y1 = y1.max(p[1]);
                }
                (x1 - x0).min(y1 - y0)
            }
        }
    }

    /// Polygon vertices translated so the area centroid is at the origin.
    pub fn centered_vertices(&self) -> Vec<[f64; 2]> {
        match &self.shape {
            Shape::Polygon { vertices } => {
                let c = polygon_centroid(vertices);
                vertices.iter().map(|p| [p[0] - c[0], p[1] - c[1]]).collect()
            }
            _ => Vec::new(),
        }
    }

    /// Strict interior test in the centered frame.
    pub fn contains(&self, x: f64, y: f64) -> bool {
        match &self.shape {
            Shape::Rectangle { width, height } => {
                let tol = 1e-12 * width.max(*height);
                x.abs() < 0.5 * width - tol && y.abs() < 0.5 * height - tol
            }
            Shape::Disc { radius } => x * x + y * y < radius * radius * (1.0 - 1e-12),
            Shape::Polygon { .. } => {
                let v = self.centered_vertices();
                let scale = self.feature_size();
                point_in_polygon(&v, x, y) && distance_to_boundary(&v, x, y) > 1e-12 * scale
            }
        }
    }

    /// Whether grid lines should be aligned with the boundary (rectangles) or
    /// pass through the centroid.
    pub(crate) fn edge_aligned(&self) -> bool {
        matches!(self.shape, Shape::Rectangle { .. })
    }
}

fn signed_area(v: &[[f64; 2]]) -> f64 {
    let n = v.len();
    (0..n)
        .map(|i| {
            let (p, q) = (v[i], v[(i + 1) % n]);
            p[0] * q[1] - q[0] * p[1]
        })
        .sum::<f64>()
        * 0.5
}

fn polygon_centroid(v: &[[f64; 2]]) -> [f64; 2] {
    let n = v.len();
    let a = signed_area(v);
    let (mut cx, mut cy) = (0.0, 0.0);
    for i in 0..n {
        let (p, q) = (v[i], v[(i + 1) % n]);
        let cross = p[0] * q[1] - q[0] * p[1];
        cx += (p[0] + q[0]) * cross;
        cy += (p[1] + q[1]) * cross;
    }
    [cx / (6.0 * a), cy / (6.0 * a)]
}

fn orient(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
}

fn on_segment(a: [f64; 2], b: [f64; 2], p: [f64; 2]) -> bool {
    p[0] >= a[0].min(b[0]) && p[0] <= a[0].max(b[0]) && p[1] >= a[1].min(b[1]) && p[1] <= a[1].max(b[1])
}

fn segments_intersect(a: [f64; 2], b: [f64; 2], c: [f64; 2], d: [f64; 2]) -> bool {
    let (o1, o2, o3, o4) = (orient(a, b, c), orient(a, b, d), orient(c, d, a), orient(c, d, b));
    if ((o1 > 0.0 && o2 < 0.0) || (o1 < 0.0 && o2 > 0.0)) && ((o3 > 0.0 && o4 < 0.0) || (o3 < 0.0 && o4 > 0.0)) {
        return true;
    }
    (o1 == 0.0 && on_segment(a, b, c))
        || (o2 == 0.0 && on_segment(a, b, d))
        || (o3 == 0.0 && on_segment(c, d, a))
        || (o4 == 0.0 && on_segment(c, d, b))
}

fn first_self_intersection(v: &[[f64; 2]]) -> Option<(usize, usize)> {
    let n = v.len();
    for i in 0..n {
        for j in (i + 1)..n {
            // adjacent edges share a vertex
            if j == i + 1 || (i == 0 && j == n - 1) {
                continue;
            }
            if segments_intersect(v[i], v[(i + 1) % n], v[j], v[(j + 1) % n]) {
                return Some((i, j));
            }
        }
    }
    None
}

fn point_in_polygon(v: &[[f64; 2]], x: f64, y: f64) -> bool {
    let n = v.len();
    let mut inside = false;
    let mut j = n - 1;
    for i in 0..n {
        let (pi, pj) = (v[i], v[j]);
        if (pi[1] > y) != (pj[1] > y) {
            let xc = pj[0] + (y - pj[1]) * (pi[0] - pj[0]) / (pi[1] - pj[1]);
            if x < xc {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

fn distance_to_boundary(v: &[[f64; 2]], x: f64, y: f64) -> f64 {
    let n = v.len();
    (0..n)
        .map(|i| {
            let (a, b) = (v[i], v[(i + 1) % n]);
            let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
            let len2 = dx * dx + dy * dy;
            let t = (((x - a[0]) * dx + (y - a[1]) * dy) / len2).clamp(0.0, 1.0);
            let (px, py) = (a[0] + t * dx - x, a[1] + t * dy - y);
            (px * px + py * py).sqrt()
        })
        .fold(f64::MAX, f64::min)
}
