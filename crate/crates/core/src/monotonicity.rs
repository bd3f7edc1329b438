//! Weighted phase energies `A±(r) = ∫_{B(x,r)} |∇u±|² |y−x|^{2−n}`, the
//! two-phase functional `Φ(r) = r⁻⁴ A₊(r) A₋(r)` and radial traces of `Φ`.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::functional::{AlmostMinParams, Sign};
use crate::lattice::{cell_dirichlet_inner, dist, point, Ball, BallQuadrature, GridFunction};
use crate::math;
use crate::sum::kahan_sum;

/// `Φ` along a geometric radius ladder.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MonotonicityTrace {
    pub center: Vec<f64>,
    pub radii: Vec<f64>,
    pub a_plus: Vec<f64>,
    pub a_minus: Vec<f64>,
    pub phi: Vec<f64>,
    pub delta_exponent: f64,
    /// `max_{s<r} (Φ(s) − Φ(r))₊ / r^δ` over the rungs.
    pub violation: f64,
}

impl MonotonicityTrace {
    pub fn len(&self) -> usize {
        self.radii.len()
    }

    pub fn is_empty(&self) -> bool {
        self.radii.is_empty()
    }

    /// Rows `(r, A₊, A₋, Φ)`.
    pub fn rows(&self) -> impl Iterator<Item = (f64, f64, f64, f64)> + '_ {
        (0..self.len()).map(move |k| (self.radii[k], self.a_plus[k], self.a_minus[k], self.phi[k]))
    }

    /// Largest decrease `A±(r_k) − A±(r_{k+1})` along the ladder (should be ≤ 0).
    pub fn worst_a_decrease(&self) -> f64 {
        let mut worst = f64::NEG_INFINITY;
        for a in [&self.a_plus, &self.a_minus] {
            for w in a.windows(2) {
                worst = worst.max(w[0] - w[1]);
            }
        }
        worst
    }
}

fn kernel(dim: usize, rho: f64, reg: f64) -> f64 {
    if dim == 2 {
        1.0
    } else {
        1.0 / rho.max(reg)
    }
}

/// `A±(r)` with the kernel evaluated at cell centers and clamped at `h/2`.
pub fn a_pm(u: &GridFunction, ball: &Ball, sign: Sign) -> Result<f64> {
    a_pm_regularized(u, ball, sign, 0.5 * u.domain().max_spacing())
}

/// `A±(r)` with kernel clamping radius `reg`.
pub fn a_pm_regularized(u: &GridFunction, ball: &Ball, sign: Sign, reg: f64) -> Result<f64> {
    if !(reg > 0.0) {
        return Err(Error::InvalidParameter(alloc::format!("regularization radius must be positive, got {reg}")));
    }
    let quad = BallQuadrature::new(u.domain(), ball)?;
    let part = u.map(|v| sign.part(v))?;
    Ok(a_with(&quad, &part, &ball.center_point(), reg))
}

fn a_with(quad: &BallQuadrature, part: &GridFunction, center: &[f64; 3], reg: f64) -> f64 {
    let d = *part.domain();
    let dim = d.dim();
    quad.integrate(|c| {
        let m = d.cell_multi_index(c);
        let density = cell_dirichlet_inner(part, part, m);
        if density == 0.0 {
            return 0.0;
        }
        density * kernel(dim, dist(&d.cell_center(m), center, dim), reg)
    })
}

/// `Φ(r) = r⁻⁴ A₊(r) A₋(r)`.
pub fn phi(u: &GridFunction, center: &[f64], r: f64) -> Result<f64> {
    let ball = Ball::new(center, r)?;
    let ap = a_pm(u, &ball, Sign::Plus)?;
    let am = a_pm(u, &ball, Sign::Minus)?;
    Ok(ap * am / (r * r * r * r))
}

/// Geometric ladder of `count` radii from `r_min` to `r_max`.
pub fn geometric_radii(r_min: f64, r_max: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return alloc::vec![r_min];
    }
    let ratio = math::powf(r_max / r_min, 1.0 / (count - 1) as f64);
    (0..count).map(|k| if k + 1 == count { r_max } else { r_min * math::powf(ratio, k as f64) }).collect()
}

/// Radial trace of `A±` and `Φ` about `center`.
pub fn trace(
    u: &GridFunction,
    center: &[f64],
    r_min: f64,
    r_max: f64,
    count: usize,
    delta: f64,
    amp: &AlmostMinParams,
) -> Result<MonotonicityTrace> {
    let d = *u.domain();
    let dim = d.dim();
    if !(r_min > 0.0 && r_min < r_max) {
        return Err(Error::InvalidParameter(alloc::format!("need 0 < r_min < r_max, got {r_min}, {r_max}")));
    }
    if count < 2 {
        return Err(Error::InvalidParameter("a trace needs at least two rungs".into()));
    }
    let h = d.max_spacing();
    if r_min < 4.0 * h {
        return Err(Error::InvalidParameter(alloc::format!("r_min = {r_min} is below 4h = {}", 4.0 * h)));
    }
    let bound = amp.alpha() / (4.0 * (dim as f64 + 1.0));
    if !(delta > 0.0 && delta < bound) {
        return Err(Error::InvalidParameter(alloc::format!("delta must lie in (0, {bound}), got {delta}")));
    }
    let outer = Ball::new(center, 2.0 * r_max)?;
    d.check_ball(&outer)?;
    let c = point(center);
    let plus = u.map(|v| v.max(0.0))?;
    let minus = u.map(|v| (-v).max(0.0))?;
    let reg = 0.5 * h;
    let radii = geometric_radii(r_min, r_max, count);
    let mut a_plus = Vec::with_capacity(count);
    let mut a_minus = Vec::with_capacity(count);
    let mut phis = Vec::with_capacity(count);
    for &r in &radii {
        let ball = Ball::new(center, r)?;
        let quad = BallQuadrature::new(&d, &ball)?;
        let ap = a_with(&quad, &plus, &c, reg);
        let am = a_with(&quad, &minus, &c, reg);
        a_plus.push(ap);
        a_minus.push(am);
        phis.push(ap * am / (r * r * r * r));
    }
    let mut violation: f64 = 0.0;
    for j in 0..count {
        for i in 0..j {
            let excess = (phis[i] - phis[j]).max(0.0);
            violation = violation.max(excess / math::powf(radii[j], delta));
        }
    }
    Ok(MonotonicityTrace {
        center: center.to_vec(),
        radii,
        a_plus,
        a_minus,
        phi: phis,
        delta_exponent: delta,
        violation,
    })
}

/// Mean of `Φ` over the smallest quarter of the rungs (at least one).
pub fn phi_limit_estimate(trace: &MonotonicityTrace) -> Result<f64> {
    let n = trace.len();
    if n < 4 {
        return Err(Error::InvalidParameter(alloc::format!("phi_limit_estimate needs at least 4 rungs, got {n}")));
    }
    let k = n.div_ceil(4);
    Ok(kahan_sum(trace.phi[..k].iter().copied()) / k as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::GridDomain;
    use core::f64::consts::PI;

    fn two_plane(g: GridDomain, lp: f64, lm: f64) -> GridFunction {
        GridFunction::sample(g, |x| if x[1] > 0.0 { lp * x[1] } else { lm * x[1] }).unwrap()
    }

    #[test]
    fn a_pm_examples_2d() {
        let g = GridDomain::new(&[-1.0, -1.0], &[2.0, 2.0], &[129, 129]).unwrap();
        let h = g.max_spacing();
        let ball = Ball::new(&[0.0, 0.0], 0.5).unwrap();
        assert_eq!(a_pm(&GridFunction::constant(g, -1.0), &ball, Sign::Plus).unwrap(), 0.0);
        let lp = 2f64.sqrt();
        let u = two_plane(g, lp, 1.0);
        let r = 0.5;
        let expect = lp * lp * PI * r * r / 2.0;
        assert!((a_pm(&u, &ball, Sign::Plus).unwrap() - expect).abs() <= 3.0 * h / r * expect);
    }

    #[test]
    fn phi_examples() {
        let g = GridDomain::new(&[-1.0, -1.0], &[2.0, 2.0], &[257, 257]).unwrap();
        let u = two_plane(g, 1.0, 1.0);
        for r in [0.1, 0.2, 0.4] {
            let p = phi(&u, &[0.0, 0.0], r).unwrap();
            assert!((p - PI * PI / 4.0).abs() <= 0.05 * PI * PI / 4.0, "r={r}: {p}");
        }
        let one = GridFunction::sample(g, |x| x[1].max(0.0)).unwrap();
        assert_eq!(phi(&one, &[0.0, 0.0], 0.3).unwrap(), 0.0);
        assert_eq!(phi(&GridFunction::zeros(g), &[0.0, 0.0], 0.3).unwrap(), 0.0);
    }

    #[test]
    fn trace_examples() {
        let g = GridDomain::new(&[-1.0, -1.0], &[2.0, 2.0], &[129, 129]).unwrap();
        let amp = AlmostMinParams::new(0.0, 1.0).unwrap();
        let u = two_plane(g, 2f64.sqrt(), 1.0);
        let t = trace(&u, &[0.0, 0.0], 0.1, 0.4, 8, 0.05, &amp).unwrap();
        assert_eq!(t.len(), 8);
        assert!(t.worst_a_decrease() <= 1e-12);
        let mean = t.phi.iter().sum::<f64>() / 8.0;
        assert!(t.phi.iter().all(|p| (p - mean).abs() <= 0.05 * mean));
        assert!(t.violation <= 0.05 * mean);
        let lim = phi_limit_estimate(&t).unwrap();
        assert!((lim - PI * PI / 2.0).abs() <= 0.05 * PI * PI / 2.0);
        let one = GridFunction::sample(g, |x| x[1].max(0.0)).unwrap();
        let t = trace(&one, &[0.0, 0.0], 0.1, 0.4, 5, 0.05, &amp).unwrap();
        assert!(t.phi.iter().all(|&p| p == 0.0) && t.violation == 0.0);
        assert!(trace(&u, &[0.0, 0.0], 0.01, 0.4, 5, 0.05, &amp).is_err());
        assert!(trace(&u, &[0.0, 0.0], 0.1, 0.4, 5, 0.2, &amp).is_err());
        assert!(trace(&u, &[0.0, 0.0], 0.1, 0.6, 5, 0.05, &amp).is_err());
    }

    #[test]
    fn limit_estimate_arithmetic() {
        let mk = |phi: Vec<f64>| MonotonicityTrace {
            center: alloc::vec![0.0, 0.0],
            radii: (0..phi.len()).map(|k| 0.1 * (k + 1) as f64).collect(),
            a_plus: alloc::vec![0.0; phi.len()],
            a_minus: alloc::vec![0.0; phi.len()],
            phi,
            delta_exponent: 0.01,
            violation: 0.0,
        };
        assert_eq!(phi_limit_estimate(&mk(alloc::vec![3.5; 8])).unwrap(), 3.5);
        let t = mk((0..8).map(|k| 2.0 + 0.1 * (k + 1) as f64).collect());
        assert!((phi_limit_estimate(&t).unwrap() - (2.0 + 0.15)).abs() < 1e-12);
        assert!(phi_limit_estimate(&mk(alloc::vec![1.0; 3])).is_err());
    }
}
