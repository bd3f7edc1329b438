//! Rectangular lattices, nodal functions and discrete calculus.
//!
//! Functions live on nodes; gradients and energy densities live on cells
//! (bilinear/trilinear element style). Points are carried as `[f64; 3]` with
//! unused trailing coordinates set to zero in two dimensions.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math;
use crate::sum::KahanSum;

/// A point in the lattice's ambient space; trailing coordinates are zero in 2D.
pub type Point = [f64; 3];

/// Subsample points per axis used for partial-cell quadrature.
pub const SUBSAMPLES_PER_AXIS: usize = 4;

/// Default number of sphere quadrature nodes in two dimensions.
pub const DEFAULT_ANGULAR_2D: usize = 256;
/// Default number of sphere quadrature nodes in three dimensions.
pub const DEFAULT_ANGULAR_3D: usize = 1024;

/// Default angular resolution for `dim`.
pub fn default_angular(dim: usize) -> usize {
    if dim == 2 {
        DEFAULT_ANGULAR_2D
    } else {
        DEFAULT_ANGULAR_3D
    }
}

/// Pads a coordinate slice to a [`Point`].
pub fn point(coords: &[f64]) -> Point {
    let mut p = [0.0; 3];
    for (dst, src) in p.iter_mut().zip(coords) {
        *dst = *src;
    }
    p
}

pub(crate) fn dist2(a: &Point, b: &Point, dim: usize) -> f64 {
    (0..dim).map(|i| (a[i] - b[i]) * (a[i] - b[i])).sum()
}

pub(crate) fn dist(a: &Point, b: &Point, dim: usize) -> f64 {
    math::sqrt(dist2(a, b, dim))
}

/// Rectangular lattice in two or three dimensions.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GridDomain {
    dim: usize,
    origin: [f64; 3],
    extent: [f64; 3],
    nodes: [usize; 3],
    spacing: [f64; 3],
}

impl GridDomain {
    /// Builds a lattice with `nodes[i]` equispaced nodes on
    /// `[origin[i], origin[i] + extent[i]]`.
    pub fn new(origin: &[f64], extent: &[f64], nodes: &[usize]) -> Result<Self> {
        let dim = origin.len();
        if dim != 2 && dim != 3 {
            return Err(Error::UnsupportedDimension(dim));
        }
        if extent.len() != dim {
            return Err(Error::DimensionMismatch { expected: dim, got: extent.len() });
        }
        if nodes.len() != dim {
            return Err(Error::DimensionMismatch { expected: dim, got: nodes.len() });
        }
        let mut g = GridDomain { dim, origin: [0.0; 3], extent: [0.0; 3], nodes: [1; 3], spacing: [0.0; 3] };
        for axis in 0..dim {
            if !origin[axis].is_finite() {
                return Err(Error::InvalidParameter(alloc::format!("origin along axis {axis} is not finite")));
            }
            if !(extent[axis] > 0.0) || !extent[axis].is_finite() {
                return Err(Error::NonPositiveExtent { axis, value: extent[axis] });
            }
            if nodes[axis] < 3 {
                return Err(Error::TooFewNodes { axis, nodes: nodes[axis] });
            }
            g.origin[axis] = origin[axis];
            g.extent[axis] = extent[axis];
            g.nodes[axis] = nodes[axis];
            g.spacing[axis] = extent[axis] / (nodes[axis] - 1) as f64;
        }
        Ok(g)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn origin(&self) -> &[f64] {
        &self.origin[..self.dim]
    }

    pub fn extent(&self) -> &[f64] {
        &self.extent[..self.dim]
    }

    pub fn nodes_per_axis(&self) -> &[usize] {
        &self.nodes[..self.dim]
    }

    pub fn spacing(&self) -> &[f64] {
        &self.spacing[..self.dim]
    }

    pub fn max_spacing(&self) -> f64 {
        self.spacing().iter().cloned().fold(0.0, f64::max)
    }

    pub fn min_spacing(&self) -> f64 {
        self.spacing().iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn diameter(&self) -> f64 {
        math::sqrt(self.extent().iter().map(|e| e * e).sum())
    }

    pub fn node_count(&self) -> usize {
        self.nodes.iter().product()
    }

    /// Row-major strides: axis 0 varies slowest.
    pub fn strides(&self) -> [usize; 3] {
        [self.nodes[1] * self.nodes[2], self.nodes[2], 1]
    }

    #[inline]
    pub fn node_index(&self, m: [usize; 3]) -> usize {
        (m[0] * self.nodes[1] + m[1]) * self.nodes[2] + m[2]
    }

    #[inline]
    pub fn node_multi_index(&self, flat: usize) -> [usize; 3] {
        let m2 = flat % self.nodes[2];
        let rest = flat / self.nodes[2];
        [rest / self.nodes[1], rest % self.nodes[1], m2]
    }

    /// Coordinate of node `m`, computed from the index (no accumulation).
    #[inline]
    pub fn node_point(&self, m: [usize; 3]) -> Point {
        let mut p = [0.0; 3];
        for axis in 0..self.dim {
            p[axis] = self.origin[axis] + m[axis] as f64 * self.spacing[axis];
        }
        p
    }

    #[inline]
    pub fn node_position(&self, flat: usize) -> Point {
        self.node_point(self.node_multi_index(flat))
    }

    pub fn is_boundary_node(&self, m: [usize; 3]) -> bool {
        (0..self.dim).any(|axis| m[axis] == 0 || m[axis] + 1 == self.nodes[axis])
    }

    /// Cells per axis; unused axes report one cell so loops stay generic.
    pub fn cells_per_axis(&self) -> [usize; 3] {
        let mut c = [1; 3];
        for axis in 0..self.dim {
            c[axis] = self.nodes[axis] - 1;
        }
        c
    }

    pub fn cell_count(&self) -> usize {
        self.cells_per_axis().iter().product()
    }

    #[inline]
    pub fn cell_index(&self, m: [usize; 3]) -> usize {
        let c = self.cells_per_axis();
        (m[0] * c[1] + m[1]) * c[2] + m[2]
    }

    #[inline]
    pub fn cell_multi_index(&self, flat: usize) -> [usize; 3] {
        let c = self.cells_per_axis();
        let m2 = flat % c[2];
        let rest = flat / c[2];
        [rest / c[1], rest % c[1], m2]
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing().iter().product()
    }

    pub fn corner_count(&self) -> usize {
        1 << self.dim
    }

    /// Node index of corner `corner` (bit `i` set means +1 along axis `i`).
    #[inline]
    pub fn cell_corner(&self, cell: [usize; 3], corner: usize) -> usize {
        let mut m = cell;
        for (axis, mi) in m.iter_mut().enumerate().take(self.dim) {
            *mi += (corner >> axis) & 1;
        }
        self.node_index(m)
    }

    pub fn cell_center(&self, cell: [usize; 3]) -> Point {
        let mut p = self.node_point(cell);
        for axis in 0..self.dim {
            p[axis] += 0.5 * self.spacing[axis];
        }
        p
    }

    /// Point at local coordinates `t ∈ [0,1]^dim` of a cell.
    pub fn cell_local_point(&self, cell: [usize; 3], t: &[f64; 3]) -> Point {
        let mut p = self.node_point(cell);
        for axis in 0..self.dim {
            p[axis] += t[axis] * self.spacing[axis];
        }
        p
    }

    fn tolerance(&self, axis: usize) -> f64 {
        1e-12 * self.extent[axis].max(1.0)
    }

    pub fn contains_point(&self, p: &Point) -> bool {
        (0..self.dim).all(|axis| {
            let tol = self.tolerance(axis);
            p[axis] >= self.origin[axis] - tol && p[axis] <= self.origin[axis] + self.extent[axis] + tol
        })
    }

    /// Whether the closed ball lies inside the (closed) domain.
    pub fn contains_ball(&self, ball: &Ball) -> bool {
        ball.dim == self.dim
            && (0..self.dim).all(|axis| {
                let tol = self.tolerance(axis);
                ball.center[axis] - ball.radius >= self.origin[axis] - tol
                    && ball.center[axis] + ball.radius <= self.origin[axis] + self.extent[axis] + tol
            })
    }

    pub fn check_ball(&self, ball: &Ball) -> Result<()> {
        if ball.dim != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: ball.dim });
        }
        if self.contains_ball(ball) {
            Ok(())
        } else {
            Err(Error::BallOutsideDomain { center: ball.center, radius: ball.radius })
        }
    }

    /// Cell containing `p` and the local coordinates of `p` in it.
    pub fn locate(&self, p: &Point) -> Option<([usize; 3], [f64; 3])> {
        if !self.contains_point(p) {
            return None;
        }
        let mut cell = [0usize; 3];
        let mut t = [0.0; 3];
        for axis in 0..self.dim {
            let s = (p[axis] - self.origin[axis]) / self.spacing[axis];
            let max_cell = (self.nodes[axis] - 2) as f64;
            let k = math::floor(s).clamp(0.0, max_cell);
            cell[axis] = k as usize;
            t[axis] = (s - k).clamp(0.0, 1.0);
        }
        Some((cell, t))
    }

    /// Inclusive range of cell indices along `axis` whose closure meets `[lo, hi]`.
    pub(crate) fn cell_range(&self, axis: usize, lo: f64, hi: f64) -> (usize, usize) {
        let h = self.spacing[axis];
        let max_cell = self.nodes[axis] as isize - 2;
        let a = math::floor((lo - self.origin[axis]) / h) as isize - 1;
        let b = math::floor((hi - self.origin[axis]) / h) as isize + 1;
        (a.clamp(0, max_cell) as usize, b.clamp(0, max_cell) as usize)
    }

    /// Inclusive range of node indices along `axis` within `[lo, hi]` (padded by one).
    pub(crate) fn node_range(&self, axis: usize, lo: f64, hi: f64) -> (usize, usize) {
        let h = self.spacing[axis];
        let max_node = self.nodes[axis] as isize - 1;
        let a = math::floor((lo - self.origin[axis]) / h) as isize - 1;
        let b = math::ceil((hi - self.origin[axis]) / h) as isize + 1;
        (a.clamp(0, max_node) as usize, b.clamp(0, max_node) as usize)
    }

    /// Visits every node whose coordinates fall in the box around `ball`, in
    /// lexicographic (row-major) order.
    pub(crate) fn for_each_node_near(&self, ball: &Ball, mut f: impl FnMut([usize; 3], usize, Point)) {
        let mut lo = [0usize; 3];
        let mut hi = [0usize; 3];
        for axis in 0..self.dim {
            let (a, b) = self.node_range(axis, ball.center[axis] - ball.radius, ball.center[axis] + ball.radius);
            lo[axis] = a;
            hi[axis] = b;
        }
        for i in lo[0]..=hi[0] {
            for j in lo[1]..=hi[1] {
                for k in lo[2]..=hi[2] {
                    let m = [i, j, k];
                    let flat = self.node_index(m);
                    f(m, flat, self.node_point(m));
                }
            }
        }
    }

    /// Visits every cell whose box meets the bounding box of `ball`.
    pub(crate) fn for_each_cell_near(&self, ball: &Ball, mut f: impl FnMut([usize; 3], usize)) {
        let mut lo = [0usize; 3];
        let mut hi = [0usize; 3];
        for axis in 0..self.dim {
            let (a, b) = self.cell_range(axis, ball.center[axis] - ball.radius, ball.center[axis] + ball.radius);
            lo[axis] = a;
            hi[axis] = b;
        }
        for i in lo[0]..=hi[0] {
            for j in lo[1]..=hi[1] {
                for k in lo[2]..=hi[2] {
                    let m = [i, j, k];
                    f(m, self.cell_index(m));
                }
            }
        }
    }

    /// Local coordinates of the `SUBSAMPLES_PER_AXIS^dim` subsample points of a cell.
    pub fn subsample_offsets(&self) -> Vec<[f64; 3]> {
        let per = SUBSAMPLES_PER_AXIS;
        let total = per.pow(self.dim as u32);
        let mut out = Vec::with_capacity(total);
        for s in 0..total {
            let mut t = [0.0; 3];
            let mut rest = s;
            for ti in t.iter_mut().take(self.dim) {
                *ti = ((rest % per) as f64 + 0.5) / per as f64;
                rest /= per;
            }
            out.push(t);
        }
        out
    }
}

/// Closed ball `B(center, radius)`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Ball {
    dim: usize,
    center: Point,
    radius: f64,
}

impl Ball {
    pub fn new(center: &[f64], radius: f64) -> Result<Self> {
        let dim = center.len();
        if dim != 2 && dim != 3 {
            return Err(Error::UnsupportedDimension(dim));
        }
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::InvalidParameter(alloc::format!("ball radius must be positive, got {radius}")));
        }
        if center.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidParameter("ball center must be finite".into()));
        }
        Ok(Ball { dim, center: point(center), radius })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn center(&self) -> &[f64] {
        &self.center[..self.dim]
    }

    pub fn center_point(&self) -> Point {
        self.center
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// Same center, new radius.
    pub fn with_radius(&self, radius: f64) -> Result<Self> {
        Ball::new(self.center(), radius)
    }

    /// Membership in the open ball.
    #[inline]
    pub fn contains_open(&self, p: &Point) -> bool {
        dist2(p, &self.center, self.dim) < self.radius * self.radius
    }

    /// Membership in the closed ball.
    #[inline]
    pub fn contains_closed(&self, p: &Point) -> bool {
        dist2(p, &self.center, self.dim) <= self.radius * self.radius
    }

    /// Volume `ω_n r^n` of the continuum ball.
    pub fn volume(&self) -> f64 {
        unit_ball_volume(self.dim) * math::powf(self.radius, self.dim as f64)
    }
}

/// `ω_n = |B(0,1)|` for `n ∈ {2, 3}`.
pub fn unit_ball_volume(dim: usize) -> f64 {
    match dim {
        2 => core::f64::consts::PI,
        3 => 4.0 * core::f64::consts::PI / 3.0,
        _ => f64::NAN,
    }
}

/// Real values on the nodes of a [`GridDomain`], row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    domain: GridDomain,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(domain: GridDomain, values: Vec<f64>) -> Result<Self> {
        if values.len() != domain.node_count() {
            return Err(Error::LengthMismatch { expected: domain.node_count(), got: values.len() });
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(GridFunction { domain, values })
    }

    pub fn zeros(domain: GridDomain) -> Self {
        Self::constant(domain, 0.0)
    }

    pub fn constant(domain: GridDomain, value: f64) -> Self {
        GridFunction { domain, values: vec![value; domain.node_count()] }
    }

    /// Samples `f` at every node; `f` receives the `dim` node coordinates.
    pub fn sample(domain: GridDomain, f: impl Fn(&[f64]) -> f64) -> Result<Self> {
        let dim = domain.dim();
        let mut values = Vec::with_capacity(domain.node_count());
        for flat in 0..domain.node_count() {
            let p = domain.node_position(flat);
            let v = f(&p[..dim]);
            if !v.is_finite() {
                return Err(Error::NonFinite { index: flat });
            }
            values.push(v);
        }
        Ok(GridFunction { domain, values })
    }

    pub fn domain(&self) -> &GridDomain {
        &self.domain
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    #[inline]
    pub fn at(&self, m: [usize; 3]) -> f64 {
        self.values[self.domain.node_index(m)]
    }

    /// Pointwise map; fails if `f` produces a non-finite value.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        GridFunction::new(self.domain, self.values.iter().map(|&v| f(v)).collect())
    }

    /// `u⁺ = max(u, 0)`.
    pub fn positive_part(&self) -> Self {
        GridFunction { domain: self.domain, values: self.values.iter().map(|&v| v.max(0.0)).collect() }
    }

    /// `u⁻ = max(-u, 0)`.
    pub fn negative_part(&self) -> Self {
        GridFunction { domain: self.domain, values: self.values.iter().map(|&v| (-v).max(0.0)).collect() }
    }

    /// Nodewise combination of two functions on the same domain.
    pub fn zip_with(&self, other: &GridFunction, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        if self.domain != other.domain {
            return Err(Error::DomainMismatch);
        }
        GridFunction::new(self.domain, self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect())
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Multilinear interpolation inside a cell at local coordinates `t`.
    #[inline]
    pub fn interpolate_local(&self, cell: [usize; 3], t: &[f64; 3]) -> f64 {
        let d = &self.domain;
        let mut acc = 0.0;
        for corner in 0..d.corner_count() {
            let mut w = 1.0;
            for (axis, ti) in t.iter().enumerate().take(d.dim()) {
                w *= if (corner >> axis) & 1 == 1 { *ti } else { 1.0 - *ti };
            }
            acc += w * self.values[d.cell_corner(cell, corner)];
        }
        acc
    }

    /// Multilinear interpolation at an arbitrary point of the domain.
    pub fn interpolate(&self, coords: &[f64]) -> Result<f64> {
        if coords.len() != self.domain.dim() {
            return Err(Error::DimensionMismatch { expected: self.domain.dim(), got: coords.len() });
        }
        self.interpolate_point(&point(coords))
    }

    pub fn interpolate_point(&self, p: &Point) -> Result<f64> {
        let (cell, t) = self.domain.locate(p).ok_or(Error::PointOutsideDomain(*p))?;
        Ok(self.interpolate_local(cell, &t))
    }

    /// Average of the corner values of a cell.
    #[inline]
    pub fn cell_mean(&self, cell: [usize; 3]) -> f64 {
        let d = &self.domain;
        let n = d.corner_count();
        let mut acc = 0.0;
        for corner in 0..n {
            acc += self.values[d.cell_corner(cell, corner)];
        }
        acc / n as f64
    }
}

/// One scalar per cell.
#[derive(Debug, Clone, PartialEq)]
pub struct CellField {
    pub domain: GridDomain,
    pub values: Vec<f64>,
}

impl CellField {
    pub fn from_fn(domain: GridDomain, f: impl Fn([usize; 3]) -> f64) -> Self {
        let values = (0..domain.cell_count()).map(|c| f(domain.cell_multi_index(c))).collect();
        CellField { domain, values }
    }
}

/// One vector (padded to three components) per cell.
#[derive(Debug, Clone, PartialEq)]
pub struct CellVectorField {
    pub domain: GridDomain,
    pub values: Vec<[f64; 3]>,
}

impl CellVectorField {
    pub fn magnitude_squared(&self) -> CellField {
        let dim = self.domain.dim();
        CellField {
            domain: self.domain,
            values: self.values.iter().map(|g| g[..dim].iter().map(|c| c * c).sum()).collect(),
        }
    }
}

/// Cell gradient of `u` at the cell center of one cell: each component is the
/// average of the forward differences along that axis over the cell's edges.
#[inline]
pub fn cell_gradient(u: &GridFunction, cell: [usize; 3]) -> [f64; 3] {
    let d = u.domain();
    let dim = d.dim();
    let edges = (1 << (dim - 1)) as f64;
    let mut g = [0.0; 3];
    for (axis, ga) in g.iter_mut().enumerate().take(dim) {
        let bit = 1 << axis;
        let mut acc = 0.0;
        for corner in 0..d.corner_count() {
            if corner & bit == 0 {
                acc += u.values[d.cell_corner(cell, corner | bit)] - u.values[d.cell_corner(cell, corner)];
            }
        }
        *ga = acc / (edges * d.spacing[axis]);
    }
    g
}

/// Cell-centered gradient field (standard multilinear element gradient at the
/// cell center; exact for affine functions).
pub fn gradient(u: &GridFunction) -> CellVectorField {
    let d = *u.domain();
    let values = (0..d.cell_count()).map(|c| cell_gradient(u, d.cell_multi_index(c))).collect();
    CellVectorField { domain: d, values }
}

/// Edge-averaged Dirichlet density `⟨∇u, ∇v⟩` of one cell: for every axis, the
/// mean over the cell's edges along that axis of the product of difference
/// quotients.
#[inline]
pub fn cell_dirichlet_inner(u: &GridFunction, v: &GridFunction, cell: [usize; 3]) -> f64 {
    let d = u.domain();
    let dim = d.dim();
    let edges = (1 << (dim - 1)) as f64;
    let mut total = 0.0;
    for axis in 0..dim {
        let bit = 1 << axis;
        let h2 = d.spacing[axis] * d.spacing[axis];
        let mut acc = 0.0;
        for corner in 0..d.corner_count() {
            if corner & bit == 0 {
                let a = d.cell_corner(cell, corner);
                let b = d.cell_corner(cell, corner | bit);
                acc += (u.values[b] - u.values[a]) * (v.values[b] - v.values[a]);
            }
        }
        total += acc / (edges * h2);
    }
    total
}

/// Cellwise Dirichlet density `|∇u|²` built from squared edge differences.
///
/// It agrees with `|gradient(u)|²` on affine functions, is positive definite
/// modulo constants, and its Euler-Lagrange operator is the 5/7-point Laplacian.
pub fn dirichlet_density(u: &GridFunction) -> CellField {
    let d = *u.domain();
    CellField::from_fn(d, |cell| cell_dirichlet_inner(u, u, cell))
}

/// Precomputed partial-cell weights of a ball.
#[derive(Debug, Clone)]
pub struct BallQuadrature {
    domain: GridDomain,
    ball: Ball,
    /// `(cell index, fraction of the cell inside the ball)`
    cells: Vec<(usize, f64)>,
}

impl BallQuadrature {
    pub fn new(domain: &GridDomain, ball: &Ball) -> Result<Self> {
        domain.check_ball(ball)?;
        let dim = domain.dim();
        let offsets = domain.subsample_offsets();
        let total = offsets.len() as f64;
        let r2 = ball.radius * ball.radius;
        let c = ball.center;
        let mut cells = Vec::new();
        domain.for_each_cell_near(ball, |m, flat| {
            let lo = domain.node_point(m);
            let mut near = 0.0;
            let mut far = 0.0;
            for axis in 0..dim {
                let a = lo[axis];
                let b = a + domain.spacing[axis];
                let dn = if c[axis] < a {
                    a - c[axis]
                } else if c[axis] > b {
                    c[axis] - b
                } else {
                    0.0
                };
                let df = (c[axis] - a).abs().max((c[axis] - b).abs());
                near += dn * dn;
                far += df * df;
            }
            if near >= r2 {
                return;
            }
            if far <= r2 {
                cells.push((flat, 1.0));
                return;
            }
            let inside = offsets.iter().filter(|t| ball.contains_closed(&domain.cell_local_point(m, t))).count();
            if inside > 0 {
                cells.push((flat, inside as f64 / total));
            }
        });
        Ok(BallQuadrature { domain: *domain, ball: *ball, cells })
    }

    pub fn ball(&self) -> &Ball {
        &self.ball
    }

    pub fn domain(&self) -> &GridDomain {
        &self.domain
    }

    /// Cells meeting the ball with their inside fraction.
    pub fn cells(&self) -> &[(usize, f64)] {
        &self.cells
    }

    /// `Σ f(cell) · vol · fraction`.
    pub fn integrate(&self, mut f: impl FnMut(usize) -> f64) -> f64 {
        let vol = self.domain.cell_volume();
        let mut acc = KahanSum::new();
        for &(cell, w) in &self.cells {
            acc.add(f(cell) * w * vol);
        }
        acc.value()
    }

    /// Discrete volume of the ball.
    pub fn volume(&self) -> f64 {
        self.integrate(|_| 1.0)
    }
}

/// `∫_B f` for a cell-valued field, with partial cells weighted by
/// subsampling.
pub fn integrate_ball(f: &CellField, ball: &Ball) -> Result<f64> {
    let q = BallQuadrature::new(&f.domain, ball)?;
    Ok(q.integrate(|c| f.values[c]))
}

/// Quadrature nodes on the sphere `∂B`: uniform angles in 2D, a Fibonacci
/// lattice in 3D.
pub fn sphere_points(ball: &Ball, n_angular: usize) -> Vec<Point> {
    let c = ball.center;
    let r = ball.radius;
    let mut pts = Vec::with_capacity(n_angular);
    if ball.dim == 2 {
        for k in 0..n_angular {
            let theta = 2.0 * core::f64::consts::PI * k as f64 / n_angular as f64;
            pts.push([c[0] + r * math::cos(theta), c[1] + r * math::sin(theta), 0.0]);
        }
    } else {
        let golden = core::f64::consts::PI * (3.0 - math::sqrt(5.0));
        for k in 0..n_angular {
            let z = 1.0 - (2 * k + 1) as f64 / n_angular as f64;
            let rho = math::sqrt((1.0 - z * z).max(0.0));
            let phi = golden * k as f64;
            pts.push([c[0] + r * rho * math::cos(phi), c[1] + r * rho * math::sin(phi), c[2] + r * z]);
        }
    }
    pts
}

/// Mean of `f(u_interp)` over sphere quadrature nodes.
pub fn sphere_average_with(u: &GridFunction, ball: &Ball, n_angular: usize, f: impl Fn(f64) -> f64) -> Result<f64> {
    if n_angular < 16 {
        return Err(Error::InvalidParameter(alloc::format!("n_angular must be at least 16, got {n_angular}")));
    }
    u.domain().check_ball(ball)?;
    let mut acc = KahanSum::new();
    for p in sphere_points(ball, n_angular) {
        acc.add(f(u.interpolate_point(&p)?));
    }
    Ok(acc.value() / n_angular as f64)
}

/// `⨍_{∂B} u` by multilinear interpolation at `n_angular` sphere nodes.
pub fn sphere_average(u: &GridFunction, ball: &Ball, n_angular: usize) -> Result<f64> {
    sphere_average_with(u, ball, n_angular, |v| v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use core::f64::consts::PI;

    fn square(n: usize) -> GridDomain {
        GridDomain::new(&[-1.0, -1.0], &[2.0, 2.0], &[n, n]).unwrap()
    }

    #[test]
    fn make_grid_spacing() {
        let g = GridDomain::new(&[0.0, 0.0], &[1.0, 1.0], &[5, 5]).unwrap();
        assert_eq!(g.spacing(), &[0.25, 0.25]);
        let g = GridDomain::new(&[-1.0, -1.0], &[2.0, 2.0], &[3, 3]).unwrap();
        assert_eq!(&g.node_point([1, 1, 0])[..2], &[0.0, 0.0]);
    }

    #[test]
    fn make_grid_errors() {
        assert!(matches!(
            GridDomain::new(&[0.0, 0.0], &[1.0, -1.0], &[5, 5]),
            Err(Error::NonPositiveExtent { axis: 1, .. })
        ));
        assert!(matches!(
            GridDomain::new(&[0.0, 0.0], &[1.0, 1.0], &[5, 2]),
            Err(Error::TooFewNodes { axis: 1, nodes: 2 })
        ));
        assert!(matches!(GridDomain::new(&[0.0, 0.0], &[1.0], &[5, 5]), Err(Error::DimensionMismatch { .. })));
        assert!(matches!(GridDomain::new(&[0.0], &[1.0], &[5]), Err(Error::UnsupportedDimension(1))));
    }

    #[test]
    fn node_coordinates_are_exact() {
        let g = GridDomain::new(&[0.1, -0.3], &[0.7, 1.9], &[97, 131]).unwrap();
        for k in 0..97 {
            let p = g.node_point([k, 5, 0]);
            assert_eq!(p[0], 0.1 + k as f64 * (0.7 / 96.0));
        }
        for flat in [0, 17, 4000, g.node_count() - 1] {
            assert_eq!(g.node_index(g.node_multi_index(flat)), flat);
        }
    }

    #[test]
    fn sample_matches_nodes() {
        let g = square(9);
        let u = GridFunction::sample(g, |x| x[1]).unwrap();
        for flat in 0..g.node_count() {
            assert_eq!(u.values()[flat], g.node_position(flat)[1]);
        }
        let z = GridFunction::sample(g, |_| 0.0).unwrap();
        assert!(z.values().iter().all(|&v| v == 0.0));
        let p = GridFunction::sample(g, |x| x[1].max(0.0)).unwrap();
        for flat in 0..g.node_count() {
            let y = g.node_position(flat)[1];
            assert_eq!(p.values()[flat], if y > 0.0 { y } else { 0.0 });
        }
        assert!(matches!(GridFunction::sample(g, |_| f64::NAN), Err(Error::NonFinite { .. })));
    }

    #[test]
    fn gradient_exact_on_affine() {
        let g = GridDomain::new(&[-1.0, -0.5], &[2.0, 1.5], &[11, 7]).unwrap();
        let u = GridFunction::sample(g, |x| 3.0 * x[0] - 2.0 * x[1] + 0.7).unwrap();
        for v in gradient(&u).values {
            assert_abs_diff_eq!(v[0], 3.0, epsilon = 1e-12);
            assert_abs_diff_eq!(v[1], -2.0, epsilon = 1e-12);
        }
        let c = GridFunction::constant(g, 4.2);
        assert!(gradient(&c).values.iter().all(|v| v[0] == 0.0 && v[1] == 0.0));
    }

    #[test]
    fn gradient_of_half_plane_kink() {
        // nodes at x2 = k/8 - 1, so the kink is on a grid line
        let g = square(17);
        let u = GridFunction::sample(g, |x| x[1].max(0.0)).unwrap();
        let grad = gradient(&u);
        for c in 0..g.cell_count() {
            let center = g.cell_center(g.cell_multi_index(c));
            let v = grad.values[c];
            if center[1] > 0.0 {
                assert_abs_diff_eq!(v[1], 1.0, epsilon = 1e-12);
            } else {
                assert_abs_diff_eq!(v[1], 0.0, epsilon = 1e-12);
            }
            assert_abs_diff_eq!(v[0], 0.0, epsilon = 1e-12);
        }
        // off-grid kink: one crossing layer with intermediate slope
        let g = GridDomain::new(&[-1.0, -1.0], &[2.0, 2.0], &[16, 16]).unwrap();
        let u = GridFunction::sample(g, |x| x[1].max(0.0)).unwrap();
        let grad = gradient(&u);
        let h = g.spacing()[1];
        let mut layer = 0;
        for c in 0..g.cell_count() {
            let center = g.cell_center(g.cell_multi_index(c));
            let v = grad.values[c][1];
            if center[1] > 0.5 * h {
                assert_abs_diff_eq!(v, 1.0, epsilon = 1e-12);
            } else if center[1] < -0.5 * h {
                assert_abs_diff_eq!(v, 0.0, epsilon = 1e-12);
            } else {
                assert!(v > 0.0 && v < 1.0);
                layer += 1;
            }
        }
        assert_eq!(layer, 15);
    }

    #[test]
    fn ball_area_first_order() {
        let mut errors = Vec::new();
        for n in [33, 65, 129] {
            let g = square(n);
            let h = g.max_spacing();
            let ones = CellField::from_fn(g, |_| 1.0);
            let r = 0.7;
            let area = integrate_ball(&ones, &Ball::new(&[0.05, -0.1], r).unwrap()).unwrap();
            let rel = (area - PI * r * r).abs() / (PI * r * r);
            assert!(rel <= 2.0 * h / r, "n={n} rel={rel}");
            errors.push(rel);
        }
        assert!(errors[2] <= errors[0]);
    }

    #[test]
    fn ball_half_area_and_zero() {
        let g = square(65);
        let h = g.max_spacing();
        let r = 0.8;
        let ball = Ball::new(&[0.0, 0.0], r).unwrap();
        let upper = CellField::from_fn(g, |m| if g.cell_center(m)[1] > 0.0 { 1.0 } else { 0.0 });
        let half = integrate_ball(&upper, &ball).unwrap();
        assert!((half - PI * r * r / 2.0).abs() / (PI * r * r / 2.0) <= 3.0 * h / r);
        let zero = CellField::from_fn(g, |_| 0.0);
        assert_eq!(integrate_ball(&zero, &ball).unwrap(), 0.0);
    }

    #[test]
    fn ball_containment_enforced() {
        let g = square(17);
        let ones = CellField::from_fn(g, |_| 1.0);
        let ball = Ball::new(&[0.5, 0.0], 0.6).unwrap();
        assert!(matches!(integrate_ball(&ones, &ball), Err(Error::BallOutsideDomain { .. })));
        // touching the boundary is allowed
        assert!(integrate_ball(&ones, &Ball::new(&[0.0, 0.0], 1.0).unwrap()).is_ok());
    }

    #[test]
    fn sphere_average_examples() {
        let g = square(129);
        let ball = Ball::new(&[0.0, 0.0], 0.5).unwrap();
        let c = GridFunction::constant(g, 2.5);
        assert_abs_diff_eq!(sphere_average(&c, &ball, 64).unwrap(), 2.5, epsilon = 1e-13);
        let lin = GridFunction::sample(g, |x| x[1]).unwrap();
        let on_axis = Ball::new(&[0.3, 0.0], 0.4).unwrap();
        assert_abs_diff_eq!(sphere_average(&lin, &on_axis, 64).unwrap(), 0.0, epsilon = 1e-12);
        let kink = GridFunction::sample(g, |x| x[1].max(0.0)).unwrap();
        let avg = sphere_average(&kink, &ball, 64).unwrap();
        assert!((avg - 0.5 / PI).abs() <= 0.02 * 0.5 / PI, "avg={avg}");
        assert!(sphere_average(&kink, &ball, 8).is_err());
        assert!(sphere_average(&kink, &Ball::new(&[0.9, 0.0], 0.5).unwrap(), 64).is_err());
    }

    #[test]
    fn sphere_points_3d_average_of_linear() {
        let g = GridDomain::new(&[-1.0; 3], &[2.0; 3], &[17, 17, 17]).unwrap();
        let u = GridFunction::sample(g, |x| x[0] + 2.0 * x[1] - x[2]).unwrap();
        let ball = Ball::new(&[0.1, 0.0, -0.1], 0.5).unwrap();
        let avg = sphere_average(&u, &ball, 1024).unwrap();
        assert_abs_diff_eq!(avg, 0.1 + 0.1, epsilon = 2e-3);
    }

    #[test]
    fn dirichlet_density_matches_gradient_on_affine() {
        let g = GridDomain::new(&[0.0; 3], &[1.0, 2.0, 1.5], &[5, 7, 6]).unwrap();
        let u = GridFunction::sample(g, |x| x[0] - 0.5 * x[1] + 2.0 * x[2]).unwrap();
        let d = dirichlet_density(&u);
        let m = gradient(&u).magnitude_squared();
        for (a, b) in d.values.iter().zip(&m.values) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn interpolation_exact_at_nodes() {
        let g = square(9);
        let u = GridFunction::sample(g, |x| x[0] * x[0] - x[1]).unwrap();
        for flat in 0..g.node_count() {
            let p = g.node_position(flat);
            assert_eq!(u.interpolate_point(&p).unwrap(), u.values()[flat]);
        }
        assert!(u.interpolate(&[1.5, 0.0]).is_err());
    }
}
