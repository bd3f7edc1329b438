//! Energy-minimizing (discrete harmonic) extension on balls, and the Poisson
//! integral on the disk as an analytic check.
//!
//! The discrete ball splits the lattice into unknowns (nodes strictly inside
//! the open ball) and fixed nodes (everything else). The extension solves the
//! 5/7-point Laplace equation with weights `1/h_i²` on the unknowns by
//! unpreconditioned conjugate gradients.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::lattice::{cell_dirichlet_inner, Ball, BallQuadrature, GridFunction};
use crate::math;
use crate::sum::KahanSum;

/// Conjugate-gradient iteration cap.
pub const MAX_CG_ITERATIONS: usize = 1_000_000;

/// Output of [`harmonic_extension`].
#[derive(Debug, Clone)]
pub struct ExtensionResult {
    /// Equals the input outside the open ball, discrete harmonic inside.
    pub extension: GridFunction,
    pub iterations: usize,
    /// Max-norm of the discrete Laplacian at the interior ball nodes.
    pub residual: f64,
    /// Flat indices of the unknown (interior-ball) nodes.
    pub interior: Vec<usize>,
}

struct BallSystem {
    unknowns: Vec<usize>,
    /// per unknown: (neighbor slot or MAX, neighbor node, weight)
    neighbors: Vec<[(usize, usize, f64); 6]>,
    degree: usize,
    diag: Vec<f64>,
}

impl BallSystem {
    fn new(u: &GridFunction, ball: &Ball) -> Self {
        let d = *u.domain();
        let dim = d.dim();
        let mut unknowns = Vec::new();
        let mut slot = vec![usize::MAX; d.node_count()];
        d.for_each_node_near(ball, |_, flat, p| {
            if ball.contains_open(&p) {
                slot[flat] = unknowns.len();
                unknowns.push(flat);
            }
        });
        let mut neighbors = Vec::with_capacity(unknowns.len());
        let mut diag = Vec::with_capacity(unknowns.len());
        for &node in &unknowns {
            let m = d.node_multi_index(node);
            let mut nb = [(usize::MAX, 0usize, 0.0); 6];
            let mut sum_w = 0.0;
            for axis in 0..dim {
                let w = 1.0 / (d.spacing()[axis] * d.spacing()[axis]);
                for (s, step) in [-1isize, 1].iter().enumerate() {
                    let mut mm = m;
                    mm[axis] = (mm[axis] as isize + step) as usize;
                    let flat = d.node_index(mm);
                    nb[2 * axis + s] = (slot[flat], flat, w);
                    sum_w += w;
                }
            }
            neighbors.push(nb);
            diag.push(sum_w);
        }
        BallSystem { unknowns, neighbors, degree: 2 * dim, diag }
    }

    /// `y = A x` with `A` the negative Laplacian restricted to unknowns.
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        for (i, nb) in self.neighbors.iter().enumerate() {
            let mut acc = self.diag[i] * x[i];
            for &(s, _, w) in &nb[..self.degree] {
                if s != usize::MAX {
                    acc -= w * x[s];
                }
            }
            y[i] = acc;
        }
    }

    fn ring_range(&self, values: &[f64]) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for nb in &self.neighbors {
            for &(s, node, _) in &nb[..self.degree] {
                if s == usize::MAX {
                    lo = lo.min(values[node]);
                    hi = hi.max(values[node]);
                }
            }
        }
        (lo, hi)
    }

    /// Contribution of fixed nodes to the right-hand side.
    fn rhs(&self, values: &[f64]) -> Vec<f64> {
        self.neighbors
            .iter()
            .map(|nb| {
                nb[..self.degree]
                    .iter()
                    .filter(|(s, _, _)| *s == usize::MAX)
                    .map(|&(_, node, w)| w * values[node])
                    .sum()
            })
            .collect()
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).collect::<KahanSum>().value()
}

fn max_abs(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// Discrete harmonic extension `u*` of `u` from the complement of the open
/// ball into the ball. CG starts from `u` itself, so already-harmonic data
/// converges without iterating.
pub fn harmonic_extension(u: &GridFunction, ball: &Ball, tol: f64) -> Result<ExtensionResult> {
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(alloc::format!("tolerance must be positive, got {tol}")));
    }
    u.domain().check_ball(ball)?;
    let sys = BallSystem::new(u, ball);
    let n = sys.unknowns.len();
    let values = u.values();
    let b = sys.rhs(values);
    let mut x: Vec<f64> = sys.unknowns.iter().map(|&node| values[node]).collect();
    let mut ax = vec![0.0; n];
    let mut r = vec![0.0; n];
    let mut p = vec![0.0; n];
    let mut q = vec![0.0; n];
    let mut iterations = 0;
    let mut last_restart = f64::INFINITY;

    let residual = loop {
        // true residual (restart point)
        sys.apply(&x, &mut ax);
        for i in 0..n {
            r[i] = b[i] - ax[i];
        }
        let res = max_abs(&r);
        if res <= tol {
            break res;
        }
        // a restart that gains less than 2x means round-off has taken over
        if res > 0.5 * last_restart {
            return Err(Error::NotConverged { cap: iterations, residual: res, tol });
        }
        last_restart = res;
        p.copy_from_slice(&r);
        let mut rr = dot(&r, &r);
        let restart_at = iterations + n.max(16) * 4;
        while iterations < restart_at {
            if iterations >= MAX_CG_ITERATIONS {
                return Err(Error::NotConverged { cap: MAX_CG_ITERATIONS, residual: max_abs(&r), tol });
            }
            sys.apply(&p, &mut q);
            let pq = dot(&p, &q);
            if !(pq > 0.0 && pq.is_finite()) {
                break;
            }
            let alpha = rr / pq;
            for i in 0..n {
                x[i] += alpha * p[i];
                r[i] -= alpha * q[i];
            }
            iterations += 1;
            if max_abs(&r) <= 0.5 * tol {
                break;
            }
            let rr_new = dot(&r, &r);
            if !(rr_new > 0.0) {
                break;
            }
            let beta = rr_new / rr;
            rr = rr_new;
            for i in 0..n {
                p[i] = r[i] + beta * p[i];
            }
        }
        if iterations >= MAX_CG_ITERATIONS {
            sys.apply(&x, &mut ax);
            let res = (0..n).map(|i| (b[i] - ax[i]).abs()).fold(0.0, f64::max);
            if res <= tol {
                break res;
            }
            return Err(Error::NotConverged { cap: MAX_CG_ITERATIONS, residual: res, tol });
        }
    };

    // The exact discrete solution obeys the maximum principle, so clamping the
    // iterate to the ring's range only moves it closer.
    let (lo, hi) = sys.ring_range(values);
    let mut out = values.to_vec();
    for (i, &node) in sys.unknowns.iter().enumerate() {
        out[node] = x[i].clamp(lo, hi);
    }
    Ok(ExtensionResult {
        extension: GridFunction::new(*u.domain(), out)?,
        iterations,
        residual,
        interior: sys.unknowns,
    })
}

/// Fixed nodes adjacent (in the 5/7-point stencil) to the interior of the ball.
pub fn boundary_ring(u: &GridFunction, ball: &Ball) -> Result<Vec<usize>> {
    u.domain().check_ball(ball)?;
    let sys = BallSystem::new(u, ball);
    let mut ring: Vec<usize> = sys
        .neighbors
        .iter()
        .flat_map(|nb| nb[..sys.degree].iter().filter(|(s, _, _)| *s == usize::MAX).map(|&(_, n, _)| n))
        .collect();
    ring.sort_unstable();
    ring.dedup();
    Ok(ring)
}

/// Poisson integral of `boundary(θ)` on the circle of radius `radius` centered
/// at the origin, evaluated at `point`, by the trapezoid rule with `n_quad` nodes.
pub fn poisson_disk_value(boundary: impl Fn(f64) -> f64, point: &[f64], radius: f64, n_quad: usize) -> Result<f64> {
    if point.len() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, got: point.len() });
    }
    if n_quad < 64 {
        return Err(Error::InvalidParameter(alloc::format!("n_quad must be at least 64, got {n_quad}")));
    }
    if !(radius > 0.0) {
        return Err(Error::InvalidParameter("radius must be positive".into()));
    }
    let z2 = point[0] * point[0] + point[1] * point[1];
    if z2 >= radius * radius {
        return Err(Error::InvalidParameter("point must lie strictly inside the disk".into()));
    }
    let dtheta = 2.0 * core::f64::consts::PI / n_quad as f64;
    let mut acc = KahanSum::new();
    for k in 0..n_quad {
        let theta = k as f64 * dtheta;
        let dx = point[0] - radius * math::cos(theta);
        let dy = point[1] - radius * math::sin(theta);
        acc.add(boundary(theta) / (dx * dx + dy * dy) * radius * dtheta);
    }
    Ok((radius * radius - z2) / (2.0 * core::f64::consts::PI * radius) * acc.value())
}

/// `| ∫_B |∇u*|² − ∫_B ⟨∇u, ∇u*⟩ |` with the lattice Dirichlet density.
pub fn orthogonality_defect(u: &GridFunction, ext: &ExtensionResult, ball: &Ball) -> Result<f64> {
    let star = &ext.extension;
    if u.domain() != star.domain() {
        return Err(Error::DomainMismatch);
    }
    let quad = BallQuadrature::new(u.domain(), ball)?;
    let d = *u.domain();
    let e_star = quad.integrate(|c| cell_dirichlet_inner(star, star, d.cell_multi_index(c)));
    let e_mixed = quad.integrate(|c| cell_dirichlet_inner(u, star, d.cell_multi_index(c)));
    Ok((e_star - e_mixed).abs())
}
