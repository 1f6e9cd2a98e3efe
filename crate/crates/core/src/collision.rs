//! Matrix-form even-odd collision detection.
//!
//! For a ring `(x_1, y_1) .. (x_n, y_n)` the kernel stores, per edge
//! `i -> i+1` (cyclic), the row of `P [Y, -X]` and the offset
//! `-(P Y) o X + (P X) o Y`, so that
//!
//! ```text
//! F_i(a, b) = (y_i - y_{i+1}) a + (x_{i+1} - x_i) b + x_i (y_{i+1} - y_i) - y_i (x_{i+1} - x_i)
//! ```
//!
//! A rightward ray from `(a, b)` crosses edge `i` iff `q_i = 1` (the edge
//! straddles `b` strictly) and `F_i(a, b) * (P Y)_i < 0`. An odd number of
//! crossings means the point is inside the free polygon; outside is a
//! collision.

use serde::{Deserialize, Serialize};

use crate::deformation::predict_polygon;
use crate::error::{Error, Result};
use crate::geometry::{Point2, RadarPolygon};

/// Upward shift applied to the query ordinate before the even-odd count, so
/// rays through a vertex are resolved deterministically.
pub const HORIZONTAL_NUDGE: f64 = 1e-9;

/// Classification of query points lying exactly on an edge.
pub const BOUNDARY_IS_INSIDE: bool = true;

const BATCH_BLOCK: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Containment {
    Inside,
    Outside,
}

impl Containment {
    pub fn is_inside(self) -> bool {
        self == Containment::Inside
    }

    /// Outside the free polygon means a potential collision.
    pub fn is_collision(self) -> bool {
        self == Containment::Outside
    }

    fn from_bool(inside: bool) -> Self {
        if inside {
            Containment::Inside
        } else {
            Containment::Outside
        }
    }
}

impl std::fmt::Display for Containment {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Containment::Inside => "inside",
            Containment::Outside => "outside",
        })
    }
}

/// Precomputed edge coefficients for one polygon.
#[derive(Debug, Clone, PartialEq)]
pub struct CollisionKernel {
    xs: Vec<f64>,
    ys: Vec<f64>,
    /// First column of `P [Y, -X]`, i.e. `(P Y)_i = y_i - y_{i+1}`.
    coeff_a: Vec<f64>,
    /// Second column, `-(P X)_i = x_{i+1} - x_i`.
    coeff_b: Vec<f64>,
    offset: Vec<f64>,
}

impl CollisionKernel {
    pub fn from_ring(ring: &[Point2]) -> Result<Self> {
        let n = ring.len();
        if n < 3 {
            return Err(Error::DegeneratePolygon(n));
        }
        let xs: Vec<f64> = ring.iter().map(|p| p.x).collect();
        let ys: Vec<f64> = ring.iter().map(|p| p.y).collect();
        let mut coeff_a = Vec::with_capacity(n);
        let mut coeff_b = Vec::with_capacity(n);
        let mut offset = Vec::with_capacity(n);
        for i in 0..n {
            let j = (i + 1) % n;
            let py = ys[i] - ys[j];
            let px = xs[i] - xs[j];
            coeff_a.push(py);
            coeff_b.push(-px);
            offset.push(-py * xs[i] + px * ys[i]);
        }
        Ok(Self {
            xs,
            ys,
            coeff_a,
            coeff_b,
            offset,
        })
    }

    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }

    /// Row `i` of the `n x 2` coefficient matrix.
    pub fn row_coefficients(&self, i: usize) -> [f64; 2] {
        [self.coeff_a[i], self.coeff_b[i]]
    }

    pub fn offset(&self, i: usize) -> f64 {
        self.offset[i]
    }

    /// `(P Y)_i`.
    pub fn py(&self, i: usize) -> f64 {
        self.coeff_a[i]
    }

    /// `F_i(a, b)`.
    #[inline]
    pub fn edge_value(&self, i: usize, a: f64, b: f64) -> f64 {
        self.coeff_a[i] * a + self.coeff_b[i] * b + self.offset[i]
    }

    /// The full vector `F(a, b)`.
    pub fn evaluate(&self, a: f64, b: f64) -> Vec<f64> {
        (0..self.len()).map(|i| self.edge_value(i, a, b)).collect()
    }

    /// `q_i` for ordinate `b`: the edge strictly straddles the horizontal line.
    #[inline]
    pub fn straddles(&self, i: usize, b: f64) -> bool {
        let j = (i + 1) % self.len();
        let (lo, hi) = minmax(self.ys[i], self.ys[j]);
        lo < b && b < hi
    }

    #[inline]
    fn crosses(&self, i: usize, a: f64, nudged_b: f64) -> bool {
        self.straddles(i, nudged_b) && self.edge_value(i, a, nudged_b) * self.coeff_a[i] < 0.0
    }

    #[inline]
    fn touches(&self, i: usize, a: f64, b: f64) -> bool {
        let j = (i + 1) % self.len();
        let (ylo, yhi) = minmax(self.ys[i], self.ys[j]);
        let (xlo, xhi) = minmax(self.xs[i], self.xs[j]);
        ylo <= b && b <= yhi && xlo <= a && a <= xhi && self.edge_value(i, a, b) == 0.0
    }

    /// Edges relevant to every query on the horizontal line `y = b`.
    pub fn row(&self, b: f64) -> KernelRow<'_> {
        let nudged = b + HORIZONTAL_NUDGE;
        let n = self.len();
        let mut crossing = Vec::new();
        let mut touching = Vec::new();
        for i in 0..n {
            let j = (i + 1) % n;
            if self.straddles(i, nudged) {
                crossing.push(i);
            }
            let (ylo, yhi) = minmax(self.ys[i], self.ys[j]);
            if BOUNDARY_IS_INSIDE && ylo <= b && b <= yhi {
                touching.push(i);
            }
        }
        KernelRow {
            kernel: self,
            b,
            nudged,
            crossing,
            touching,
        }
    }
}

#[inline]
fn minmax(u: f64, v: f64) -> (f64, f64) {
    if u <= v {
        (u, v)
    } else {
        (v, u)
    }
}

/// Kernel restricted to the edges that can matter on one horizontal line.
/// Gives bit-identical answers to [`point_in_polygon`] for queries on that line.
#[derive(Debug)]
pub struct KernelRow<'k> {
    kernel: &'k CollisionKernel,
    b: f64,
    nudged: f64,
    crossing: Vec<usize>,
    touching: Vec<usize>,
}

impl KernelRow<'_> {
    pub fn is_empty(&self) -> bool {
        self.crossing.is_empty() && self.touching.is_empty()
    }

    pub fn contains(&self, a: f64) -> bool {
        if BOUNDARY_IS_INSIDE
            && self
                .touching
                .iter()
                .any(|&i| self.kernel.touches(i, a, self.b))
        {
            return true;
        }
        let k = self.kernel;
        let count = self
            .crossing
            .iter()
            .filter(|&&i| k.edge_value(i, a, self.nudged) * k.coeff_a[i] < 0.0)
            .count();
        count % 2 == 1
    }
}

pub fn build_kernel(poly: &RadarPolygon) -> Result<CollisionKernel> {
    CollisionKernel::from_ring(&poly.ring())
}

/// Even-odd test via `F(a, b) o (P Y) o Q`: odd count of negative entries
/// means inside.
pub fn point_in_polygon(kernel: &CollisionKernel, a: f64, b: f64) -> Containment {
    let nudged = b + HORIZONTAL_NUDGE;
    let mut negatives = 0usize;
    for i in 0..kernel.len() {
        if BOUNDARY_IS_INSIDE && kernel.touches(i, a, b) {
            return Containment::Inside;
        }
        if kernel.crosses(i, a, nudged) {
            negatives += 1;
        }
    }
    Containment::from_bool(negatives % 2 == 1)
}

/// A `2 x m` query matrix: row 0 holds abscissas, row 1 ordinates.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct QueryMatrix {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
}

impl QueryMatrix {
    pub fn from_points(points: &[Point2]) -> Self {
        Self {
            a: points.iter().map(|p| p.x).collect(),
            b: points.iter().map(|p| p.y).collect(),
        }
    }

    pub fn columns(&self) -> usize {
        self.a.len()
    }

    pub fn column(&self, j: usize) -> Point2 {
        Point2::new(self.a[j], self.b[j])
    }
}

/// Column-wise even-odd test of `F(A) = P [Y, -X] A - (P Y) o X + (P X) o Y`.
///
/// `F(A)` is materialized block by block (`n x 256`) and each column is then
/// reduced with the same counting rule as [`point_in_polygon`].
pub fn batch_collision(kernel: &CollisionKernel, queries: &QueryMatrix) -> Vec<Containment> {
    let n = kernel.len();
    let m = queries.columns();
    let mut out = Vec::with_capacity(m);
    let mut f_raw = vec![0.0; n * BATCH_BLOCK];
    let mut f_nudged = vec![0.0; n * BATCH_BLOCK];
    let mut start = 0;
    while start < m {
        let end = (start + BATCH_BLOCK).min(m);
        let width = end - start;
        for i in 0..n {
            let row = i * BATCH_BLOCK;
            for c in 0..width {
                let (a, b) = (queries.a[start + c], queries.b[start + c]);
                f_raw[row + c] = kernel.edge_value(i, a, b);
                f_nudged[row + c] = kernel.edge_value(i, a, b + HORIZONTAL_NUDGE);
            }
        }
        for c in 0..width {
            let (a, b) = (queries.a[start + c], queries.b[start + c]);
            let nudged = b + HORIZONTAL_NUDGE;
            let mut negatives = 0usize;
            let mut on_boundary = false;
            for i in 0..n {
                let j = (i + 1) % n;
                if BOUNDARY_IS_INSIDE && f_raw[i * BATCH_BLOCK + c] == 0.0 {
                    let (ylo, yhi) = minmax(kernel.ys[i], kernel.ys[j]);
                    let (xlo, xhi) = minmax(kernel.xs[i], kernel.xs[j]);
                    if ylo <= b && b <= yhi && xlo <= a && a <= xhi {
                        on_boundary = true;
                        break;
                    }
                }
                if kernel.straddles(i, nudged)
                    && f_nudged[i * BATCH_BLOCK + c] * kernel.coeff_a[i] < 0.0
                {
                    negatives += 1;
                }
            }
            out.push(Containment::from_bool(on_boundary || negatives % 2 == 1));
        }
        start = end;
    }
    out
}

/// Collision check against the polygon predicted `dt` seconds ahead.
///
/// Vertex velocities are scaled by `dt` before being added to the current
/// coordinates, consistent with the per-vertex displacement model.
pub fn predictive_collision(
    poly: &RadarPolygon,
    dt: f64,
    queries: &QueryMatrix,
) -> Result<Vec<Containment>> {
    let predicted = predict_polygon(poly, dt)?;
    let kernel = build_kernel(&predicted)?;
    Ok(batch_collision(&kernel, queries))
}
