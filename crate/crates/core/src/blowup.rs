//! Rescalings `u^{(x,r)}(y) = u(x + r y)/r`, blow-up sequences on a fixed
//! reference window and their convergence reports.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::functional::{j_with, WeightField};
use crate::lattice::{cell_dirichlet_inner, point, Ball, BallQuadrature, GridDomain, GridFunction, Point};
use crate::math;

fn image(x: &Point, r: f64, y: &Point, dim: usize) -> Point {
    let mut p = [0.0; 3];
    for a in 0..dim {
        p[a] = x[a] + r * y[a];
    }
    p
}

fn resample(f: &GridFunction, x: &Point, r: f64, target: &GridDomain, scale: f64) -> Result<GridFunction> {
    let dim = target.dim();
    if f.domain().dim() != dim {
        return Err(Error::DimensionMismatch { expected: f.domain().dim(), got: dim });
    }
    let mut values = Vec::with_capacity(target.node_count());
    for flat in 0..target.node_count() {
        let p = image(x, r, &target.node_position(flat), dim);
        values.push(f.interpolate_point(&p)? * scale);
    }
    GridFunction::new(*target, values)
}

/// Nodal values `u(x + r·y)/r` on `target`.
pub fn rescale(u: &GridFunction, x: &[f64], r: f64, target: &GridDomain) -> Result<GridFunction> {
    if !(r > 0.0) {
        return Err(Error::InvalidParameter(alloc::format!("rescaling radius must be positive, got {r}")));
    }
    resample(u, &point(x), r, target, 1.0 / r)
}

/// Weights `q±(x + r·y)` on `target` (no amplitude scaling).
pub fn rescale_weights(w: &WeightField, x: &[f64], r: f64, target: &GridDomain) -> Result<WeightField> {
    if !(r > 0.0) {
        return Err(Error::InvalidParameter(alloc::format!("rescaling radius must be positive, got {r}")));
    }
    let x = point(x);
    let qp = resample(w.q_plus(), &x, r, target, 1.0)?;
    let qm = resample(w.q_minus(), &x, r, target, 1.0)?;
    WeightField::new(qp, qm, w.mode())
}

/// Rescalings of one function at decreasing radii, on a shared window `[−R, R]^n`.
#[derive(Debug, Clone, PartialEq)]
pub struct BlowupSequence {
    pub base_point: Vec<f64>,
    pub radii: Vec<f64>,
    pub members: Vec<GridFunction>,
    pub window: f64,
    pub res: usize,
}

impl BlowupSequence {
    pub fn reference_domain(&self) -> &GridDomain {
        self.members[0].domain()
    }
}

/// Reference grid `[−R, R]^dim` with `res` nodes per axis.
pub fn window_domain(dim: usize, window: f64, res: usize) -> Result<GridDomain> {
    let origin = alloc::vec![-window; dim];
    let extent = alloc::vec![2.0 * window; dim];
    let nodes = alloc::vec![res; dim];
    GridDomain::new(&origin, &extent, &nodes)
}

/// Rescales `u` about `x` at every radius onto the window grid.
pub fn build_sequence(
    u: &GridFunction,
    x: &[f64],
    radii: &[f64],
    window: f64,
    res: usize,
    zero_tol: f64,
) -> Result<BlowupSequence> {
    if radii.is_empty() {
        return Err(Error::InvalidParameter("no radii given".into()));
    }
    if radii.windows(2).any(|w| w[1] >= w[0]) || radii.iter().any(|r| !(*r > 0.0)) {
        return Err(Error::InvalidParameter("radii must be positive and strictly decreasing".into()));
    }
    if !(window > 0.0) {
        return Err(Error::InvalidParameter("window radius must be positive".into()));
    }
    let value = u.interpolate(x)?;
    if value.abs() > zero_tol {
        return Err(Error::CenterNotOnZeroSet { value, tol: zero_tol });
    }
    let target = window_domain(u.domain().dim(), window, res)?;
    let members = radii.iter().map(|&r| rescale(u, x, r, &target)).collect::<Result<Vec<_>>>()?;
    for (k, m) in members.iter().enumerate() {
        let v0 = m.interpolate(&alloc::vec![0.0; target.dim()])?;
        if v0.abs() > 10.0 * zero_tol / radii[k] && v0 != 0.0 {
            log::warn!("member {k}: |u_k(0)| = {v0:e} is large relative to the zero tolerance");
        }
    }
    Ok(BlowupSequence { base_point: x.to_vec(), radii: radii.to_vec(), members, window, res })
}

/// Distances of one member to the last.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ConvergenceRow {
    pub k: usize,
    pub radius: f64,
    /// `max |u_k − u_∞|` over nodes of `B(0, 0.9R)`.
    pub sup_distance: f64,
    /// `‖∇(u_k − u_∞)‖_{L²(B(0, 0.9R))}`.
    pub grad_l2_distance: f64,
    /// `|J(u_k) − J(u_∞)|` on `B(0, R/2)` with the frozen weights.
    pub energy_gap: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ConvergenceReport {
    pub rows: Vec<ConvergenceRow>,
}

impl ConvergenceReport {
    /// Whether sup distances strictly decrease along the rows before the last.
    pub fn sup_decreasing(&self) -> bool {
        let body = &self.rows[..self.rows.len().saturating_sub(1)];
        body.windows(2).all(|w| w[1].sup_distance < w[0].sup_distance)
    }
}

/// Compares every member with the finest one, used as the limit proxy.
pub fn convergence_report(seq: &BlowupSequence, w_frozen: &WeightField) -> Result<ConvergenceReport> {
    if seq.members.len() < 2 {
        return Err(Error::InvalidParameter("a convergence report needs at least two members".into()));
    }
    let d = *seq.reference_domain();
    if w_frozen.domain() != &d {
        return Err(Error::DomainMismatch);
    }
    let dim = d.dim();
    let origin = alloc::vec![0.0; dim];
    let big = Ball::new(&origin, 0.9 * seq.window)?;
    let half = Ball::new(&origin, 0.5 * seq.window)?;
    let q_big = BallQuadrature::new(&d, &big)?;
    let q_half = BallQuadrature::new(&d, &half)?;
    let last = seq.members.last().unwrap();
    let j_last = j_with(&q_half, last, w_frozen);
    let mut rows = Vec::with_capacity(seq.members.len());
    for (k, m) in seq.members.iter().enumerate() {
        let diff = m.zip_with(last, |a, b| a - b)?;
        let mut sup: f64 = 0.0;
        d.for_each_node_near(&big, |_, flat, p| {
            if big.contains_closed(&p) {
                sup = sup.max(diff.values()[flat].abs());
            }
        });
        let grad = q_big.integrate(|c| cell_dirichlet_inner(&diff, &diff, d.cell_multi_index(c)));
        let energy_gap = (j_with(&q_half, m, w_frozen) - j_last).abs();
        rows.push(ConvergenceRow {
            k,
            radius: seq.radii[k],
            sup_distance: sup,
            grad_l2_distance: math::sqrt(grad.max(0.0)),
            energy_gap,
        });
    }
    Ok(ConvergenceReport { rows })
}

/// `(J(u^{(x,r)}, w^{(x,r)}, B), r^{−n} J(u, w, x + rB))`, the first evaluated on `target`.
pub fn rescaling_energy_identity(
    u: &GridFunction,
    w: &WeightField,
    x: &[f64],
    r: f64,
    ball: &Ball,
    target: &GridDomain,
) -> Result<(f64, f64)> {
    let d = *u.domain();
    let dim = d.dim();
    let xp = point(x);
    let mut image_center = [0.0; 3];
    for a in 0..dim {
        image_center[a] = xp[a] + r * ball.center()[a];
    }
    let image_ball = Ball::new(&image_center[..dim], r * ball.radius())?;
    d.check_ball(&image_ball)?;
    target.check_ball(ball)?;
    let ur = rescale(u, x, r, target)?;
    let wr = rescale_weights(w, x, r, target)?;
    let lhs = crate::functional::functional_j(&ur, &wr, ball)?;
    let rhs = crate::functional::functional_j(u, w, &image_ball)? / math::powf(r, dim as f64);
    Ok((lhs, rhs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functional::Phase;

    fn dyadic(n_pow: u32) -> GridDomain {
        let n = (1usize << n_pow) + 1;
        GridDomain::new(&[-1.0, -1.0], &[2.0, 2.0], &[n, n]).unwrap()
    }

    #[test]
    fn cone_rescaling_is_invariant() {
        let g = dyadic(7);
        let lambda = 1.5;
        let u = GridFunction::sample(g, |x| lambda * x[1].max(0.0)).unwrap();
        let target = window_domain(2, 1.0, 33).unwrap();
        let expect = GridFunction::sample(target, |y| lambda * y[1].max(0.0)).unwrap();
        for r in [1.0, 0.5, 0.25, 0.125] {
            assert_eq!(rescale(&u, &[0.0, 0.0], r, &target).unwrap(), expect);
        }
    }

    #[test]
    fn affine_and_identity() {
        let g = dyadic(6);
        let u = GridFunction::sample(g, |x| 0.5 * x[0] - 2.0 * x[1]).unwrap();
        let target = window_domain(2, 0.5, 17).unwrap();
        for r in [0.9, 0.3] {
            let v = rescale(&u, &[0.0, 0.0], r, &target).unwrap();
            for i in 0..target.node_count() {
                let p = target.node_position(i);
                assert!((v.values()[i] - (0.5 * p[0] - 2.0 * p[1])).abs() < 1e-12);
            }
        }
        let same = rescale(&u, &[0.0, 0.0], 1.0, &g).unwrap();
        assert_eq!(same, u);
        assert!(rescale(&u, &[0.0, 0.0], 3.0, &target).is_err());
    }

    #[test]
    fn weight_rescaling() {
        let g = dyadic(6);
        let w = WeightField::new(
            GridFunction::sample(g, |x| 1.0 + x[0].abs()).unwrap(),
            GridFunction::zeros(g),
            Phase::OnePhase,
        )
        .unwrap();
        let target = window_domain(2, 1.0, 17).unwrap();
        let wr = rescale_weights(&w, &[0.0, 0.0], 0.5, &target).unwrap();
        for i in 0..target.node_count() {
            let p = target.node_position(i);
            assert!((wr.q_plus().values()[i] - (1.0 + p[0].abs() / 2.0)).abs() < 1e-12);
        }
        let c = WeightField::constant(g, 2.0, 0.0, Phase::OnePhase).unwrap();
        let cr = rescale_weights(&c, &[0.1, 0.0], 0.3, &target).unwrap();
        assert!(cr.q_plus().values().iter().all(|&q| q == 2.0));
    }

    #[test]
    fn sequence_and_report() {
        let g = dyadic(7);
        let c = 0.5;
        let u = GridFunction::sample(g, |x| x[1].max(0.0) + c * (x[0] * x[0] + x[1] * x[1])).unwrap();
        let radii = [0.5, 0.25, 0.125, 0.0625];
        let seq = build_sequence(&u, &[0.0, 0.0], &radii, 1.0, 33, 1e-12).unwrap();
        let w = WeightField::constant(*seq.reference_domain(), 1.0, 0.0, Phase::OnePhase).unwrap();
        let rep = convergence_report(&seq, &w).unwrap();
        assert!(rep.sup_decreasing());
        for row in &rep.rows {
            // c (r_k − r_last) |y|² is largest on the rim of B(0, 0.9R)
            let expect = c * (row.radius - 0.0625) * 0.81;
            assert!((row.sup_distance - expect).abs() <= 0.05 * expect + 1e-3, "{row:?}");
        }
        let off = build_sequence(&u, &[0.0, 0.5], &radii, 1.0, 33, 1e-6);
        assert!(matches!(off, Err(Error::CenterNotOnZeroSet { .. })));
        let cone = GridFunction::sample(g, |x| x[1].max(0.0)).unwrap();
        let seq = build_sequence(&cone, &[0.0, 0.0], &radii, 1.0, 33, 0.0).unwrap();
        let rep = convergence_report(&seq, &w).unwrap();
        assert!(rep.rows.iter().all(|r| r.sup_distance == 0.0 && r.grad_l2_distance == 0.0 && r.energy_gap == 0.0));
    }

    #[test]
    fn energy_identity() {
        let g = dyadic(7);
        let u = GridFunction::sample(g, |x| 2.0 * x[1].max(0.0)).unwrap();
        let w = WeightField::constant(g, 2.0, 0.0, Phase::OnePhase).unwrap();
        let target = window_domain(2, 1.0, 65).unwrap();
        let ball = Ball::new(&[0.0, 0.0], 0.8).unwrap();
        for r in [1.0, 0.5, 0.25] {
            let (lhs, rhs) = rescaling_energy_identity(&u, &w, &[0.0, 0.0], r, &ball, &target).unwrap();
            assert!((lhs - rhs).abs() / (rhs + 1.0) <= 0.05, "r={r}: {lhs} vs {rhs}");
        }
        let z = GridFunction::zeros(g);
        let wz = WeightField::constant(g, 0.0, 0.0, Phase::TwoPhase).unwrap();
        assert_eq!(rescaling_energy_identity(&z, &wz, &[0.0, 0.0], 0.5, &ball, &target).unwrap(), (0.0, 0.0));
    }
}
