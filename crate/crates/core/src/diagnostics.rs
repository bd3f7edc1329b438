//! Regularity diagnostics on grid functions: normalized energies `ω`, sphere
//! averages `b` and `b⁺`, good-class membership, Lipschitz and log-Lipschitz
//! moduli, the three-case split and the nondegeneracy battery.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::functional::{energy_with, AlmostMinParams, Phase, WeightField};
use crate::lattice::{
    cell_gradient, default_angular, dist, point, sphere_points, Ball, BallQuadrature, GridDomain, GridFunction, Point,
};
use crate::math;
use crate::sum::KahanSum;

/// Parameters of the good class `𝒢(τ, C₀, C₁, r₀)`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GoodClassParams {
    pub tau: f64,
    pub c0: f64,
    pub c1: f64,
    pub r0: f64,
}

impl GoodClassParams {
    pub fn new(tau: f64, c0: f64, c1: f64, r0: f64) -> Result<Self> {
        let p = GoodClassParams { tau, c0, c1, r0 };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau > 0.0 && self.tau < 1e-2) {
            return Err(Error::InvalidParameter(alloc::format!("tau must lie in (0, 0.01), got {}", self.tau)));
        }
        if !(self.c0 >= 1.0) || !(self.c1 >= 3.0) || !(self.r0 > 0.0) {
            return Err(Error::InvalidParameter("good class needs C0 >= 1, C1 >= 3, r0 > 0".into()));
        }
        Ok(())
    }
}

/// Constants of the nondegeneracy checks.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct NondegParams {
    /// Lower bound for `q₊` on the ball.
    pub rho0: f64,
    /// Lipschitz bound, used for the default zero tolerance.
    pub lipschitz: f64,
    pub eta0: f64,
}

impl NondegParams {
    pub fn new(rho0: f64, lipschitz: f64, eta0: f64) -> Result<Self> {
        let p = NondegParams { rho0, lipschitz, eta0 };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rho0 > 0.0) || !(self.lipschitz >= 1.0) || !(self.eta0 > 0.0) {
            return Err(Error::InvalidParameter("nondegeneracy needs rho0 > 0, L >= 1, eta0 > 0".into()));
        }
        Ok(())
    }
}

/// Case labels of the Lipschitz argument.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum CaseLabel {
    /// `ω ≥ K₂` and `b ≥ γ r (1 + ω)`.
    Case1,
    /// `ω ≥ K₂` and `b < γ r (1 + ω)`.
    Case2,
    /// `ω < K₂`.
    Case3,
}

/// Region for [`gradient_bound`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Region {
    Ball(Ball),
    /// Axis-aligned box `[lo, hi]` (unused axes ignored).
    Box {
        lo: Point,
        hi: Point,
    },
}

/// `ω(x,r) = (⨍_B |∇u|²)^{1/2}`.
pub fn omega(u: &GridFunction, ball: &Ball) -> Result<f64> {
    let quad = BallQuadrature::new(u.domain(), ball)?;
    Ok(omega_with(&quad, u))
}

fn omega_with(quad: &BallQuadrature, u: &GridFunction) -> f64 {
    let vol = quad.volume();
    if vol <= 0.0 {
        return 0.0;
    }
    math::sqrt(energy_with(quad, u).max(0.0) / vol)
}

/// `(b, b⁺) = (⨍_{∂B} u, ⨍_{∂B} |u|)` from one set of sphere nodes.
pub fn b_pair(u: &GridFunction, ball: &Ball) -> Result<(f64, f64)> {
    b_pair_with(u, ball, default_angular(u.domain().dim()))
}

pub fn b_pair_with(u: &GridFunction, ball: &Ball, n_angular: usize) -> Result<(f64, f64)> {
    if n_angular < 16 {
        return Err(Error::InvalidParameter(alloc::format!("n_angular must be at least 16, got {n_angular}")));
    }
    u.domain().check_ball(ball)?;
    let mut b = KahanSum::new();
    let mut bp = KahanSum::new();
    for p in sphere_points(ball, n_angular) {
        let v = u.interpolate_point(&p)?;
        b.add(v);
        bp.add(v.abs());
    }
    let n = n_angular as f64;
    Ok((b.value() / n, bp.value() / n))
}

/// Good-class membership: `r⁻¹|b| ≥ C₀ τ⁻ⁿ (1 + r^α ω²)^{1/2}` and `b⁺ ≤ C₁|b|`.
pub fn good_class(u: &GridFunction, ball: &Ball, p: &GoodClassParams, amp: &AlmostMinParams) -> Result<bool> {
    p.validate()?;
    let r = ball.radius();
    u.domain().check_ball(&ball.with_radius(2.0 * r)?)?;
    if r > p.r0 {
        return Err(Error::InvalidParameter(alloc::format!("radius {r} exceeds r0 = {}", p.r0)));
    }
    let w = omega(u, ball)?;
    let (b, bp) = b_pair(u, ball)?;
    let n = u.domain().dim() as f64;
    let lhs = b.abs() / r;
    let rhs = p.c0 * math::powf(p.tau, -n) * math::sqrt(1.0 + math::powf(r, amp.alpha()) * w * w);
    Ok(lhs >= rhs && bp <= p.c1 * b.abs())
}

/// `n`-th point of the two-dimensional R2 low-discrepancy sequence.
fn r2(n: usize) -> (f64, f64) {
    // plastic number
    let g = 1.324_717_957_244_746;
    let a1 = 1.0 / g;
    let a2 = 1.0 / (g * g);
    let k = (n + 1) as f64;
    (math::fract(0.5 + a1 * k), math::fract(0.5 + a2 * k))
}

/// Empirical constant `C` of `|u(x) − u(y)| ≤ C |x−y| (1 + log(2r₀/|x−y|))` over
/// `samples` deterministic node pairs in `B(center, r₀)`.
pub fn log_lip_modulus(u: &GridFunction, center: &[f64], r0: f64, samples: usize) -> Result<f64> {
    let d = *u.domain();
    let ball = Ball::new(center, r0)?;
    d.check_ball(&ball.with_radius(2.0 * r0)?)?;
    let nodes = nodes_in(&d, &ball);
    if nodes.len() < 2 {
        return Err(Error::NoSamples("fewer than two nodes in the ball".into()));
    }
    let dim = d.dim();
    let mut best: f64 = 0.0;
    let n = nodes.len();
    for s in 0..samples {
        let (a, b) = r2(s);
        let i = ((a * n as f64) as usize).min(n - 1);
        let mut j = ((b * n as f64) as usize).min(n - 1);
        if i == j {
            j = (j + 1) % n;
        }
        let (pi, pj) = (d.node_position(nodes[i]), d.node_position(nodes[j]));
        let dxy = dist(&pi, &pj, dim);
        let du = (u.values()[nodes[i]] - u.values()[nodes[j]]).abs();
        let ratio = du / (dxy * (1.0 + math::ln(2.0 * r0 / dxy)));
        best = best.max(ratio);
    }
    Ok(best)
}

fn nodes_in(d: &GridDomain, ball: &Ball) -> Vec<usize> {
    let mut out = Vec::new();
    d.for_each_node_near(ball, |_, flat, p| {
        if ball.contains_closed(&p) {
            out.push(flat);
        }
    });
    out
}

fn cell_in_region(d: &GridDomain, cell: [usize; 3], region: &Region) -> bool {
    (0..d.corner_count()).all(|k| {
        let p = d.node_position(d.cell_corner(cell, k));
        match region {
            Region::Ball(b) => b.contains_closed(&p),
            Region::Box { lo, hi } => (0..d.dim()).all(|a| p[a] >= lo[a] - 1e-12 && p[a] <= hi[a] + 1e-12),
        }
    })
}

/// Largest cell-gradient magnitude over cells lying inside `region`.
pub fn gradient_bound(u: &GridFunction, region: &Region) -> Result<f64> {
    let d = *u.domain();
    let dim = d.dim();
    let bounding = match region {
        Region::Ball(b) => {
            d.check_ball(b)?;
            *b
        }
        Region::Box { lo, hi } => {
            for p in [lo, hi] {
                let mut q = *p;
                for v in q.iter_mut().skip(dim) {
                    *v = 0.0;
                }
                if !d.contains_point(&q) {
                    return Err(Error::PointOutsideDomain(q));
                }
            }
            let mut c = [0.0; 3];
            let mut r2 = 0.0;
            for a in 0..dim {
                c[a] = 0.5 * (lo[a] + hi[a]);
                let half = 0.5 * (hi[a] - lo[a]).abs();
                r2 += half * half;
            }
            Ball::new(&c[..dim], math::sqrt(r2).max(d.min_spacing()))?
        }
    };
    let mut best: f64 = 0.0;
    let mut any = false;
    d.for_each_cell_near(&bounding, |m, _| {
        if cell_in_region(&d, m, region) {
            any = true;
            let g = cell_gradient(u, m);
            let s: f64 = g[..dim].iter().map(|v| v * v).sum();
            best = best.max(math::sqrt(s));
        }
    });
    if !any {
        return Err(Error::NoSamples("no cell lies inside the region".into()));
    }
    Ok(best)
}

/// Output of [`classify_ball`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Classification {
    pub label: CaseLabel,
    pub omega: f64,
    pub b: f64,
    /// Two-phase only: whether `u` has a zero in `B(x, 2r/3)`.
    pub zero_in_two_thirds: Option<bool>,
}

/// Case split on `(ω, b)`; the two-phase variant tests `|b|` and also looks
/// for a zero in `B(x, 2r/3)`.
pub fn classify_ball(u: &GridFunction, ball: &Ball, k2: f64, gamma: f64, phase: Phase) -> Result<Classification> {
    let w = omega(u, ball)?;
    let (b, _) = b_pair(u, ball)?;
    let r = ball.radius();
    let test_b = match phase {
        Phase::OnePhase => b,
        Phase::TwoPhase => b.abs(),
    };
    let label = if w < k2 {
        CaseLabel::Case3
    } else if test_b >= gamma * r * (1.0 + w) {
        CaseLabel::Case1
    } else {
        CaseLabel::Case2
    };
    let zero_in_two_thirds = match phase {
        Phase::OnePhase => None,
        Phase::TwoPhase => {
            let inner = ball.with_radius(2.0 * r / 3.0)?;
            let zs = ZeroSet::within(u, 0.0, &inner);
            Some(zs.distance(u, &ball.center_point())? < 2.0 * r / 3.0)
        }
    };
    Ok(Classification { label, omega: w, b, zero_in_two_thirds })
}

/// Lattice zero set: nodes with `|u| ≤ tol` (minus those whose neighbors all
/// vanish too) and linearly interpolated sign changes along edges.
#[derive(Debug, Clone)]
pub struct ZeroSet {
    points: Vec<Point>,
    tol: f64,
    dim: usize,
}

impl ZeroSet {
    pub fn new(u: &GridFunction, tol: f64) -> Self {
        Self::build(u, tol, None)
    }

    /// Zero points inside `region` only.
    pub fn within(u: &GridFunction, tol: f64, region: &Ball) -> Self {
        Self::build(u, tol, Some(region))
    }

    fn build(u: &GridFunction, tol: f64, region: Option<&Ball>) -> Self {
        let d = *u.domain();
        let dim = d.dim();
        let n = d.nodes_per_axis();
        let strides = d.strides();
        let vals = u.values();
        let zero = |v: f64| v.abs() <= tol;
        let mut points = Vec::new();
        let keep = |p: &Point| region.is_none_or(|b| b.contains_closed(p));
        let mut visit = |m: [usize; 3], flat: usize, p: Point| {
            let v = vals[flat];
            if zero(v) {
                let mut interior = true;
                for axis in 0..dim {
                    for step in [-1isize, 1] {
                        let k = m[axis] as isize + step;
                        if k < 0 || k >= n[axis] as isize {
                            continue;
                        }
                        let nb = (flat as isize + step * strides[axis] as isize) as usize;
                        if !zero(vals[nb]) {
                            interior = false;
                        }
                    }
                }
                if !interior && keep(&p) {
                    points.push(p);
                }
                return;
            }
            for axis in 0..dim {
                if m[axis] + 1 >= n[axis] {
                    continue;
                }
                let w = vals[flat + strides[axis]];
                if zero(w) || (v > 0.0) == (w > 0.0) {
                    continue;
                }
                let t = v / (v - w);
                let mut q = p;
                q[axis] += t * d.spacing()[axis];
                if keep(&q) {
                    points.push(q);
                }
            }
        };
        match region {
            Some(b) => {
                let grown = Ball::new(&b.center()[..dim], b.radius() + d.max_spacing()).unwrap_or(*b);
                d.for_each_node_near(&grown, &mut visit);
            }
            None => {
                for flat in 0..d.node_count() {
                    let m = d.node_multi_index(flat);
                    visit(m, flat, d.node_point(m));
                }
            }
        }
        ZeroSet { points, tol, dim }
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    /// `δ(y)`: zero if the interpolated `|u(y)| ≤ tol`, otherwise the distance
    /// to the nearest zero point; `+∞` if the set is empty.
    pub fn distance(&self, u: &GridFunction, y: &Point) -> Result<f64> {
        let v = u.interpolate_point(y)?;
        if v.abs() <= self.tol {
            return Ok(0.0);
        }
        Ok(self.nearest(y))
    }

    fn nearest(&self, y: &Point) -> f64 {
        let mut best = f64::INFINITY;
        for p in &self.points {
            let mut s = 0.0;
            for a in 0..self.dim {
                let t = p[a] - y[a];
                s += t * t;
            }
            if s < best {
                best = s;
            }
        }
        math::sqrt(best)
    }
}

/// Result of [`zero_distance`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZeroDistance {
    /// `+∞` when the zero set is empty.
    pub distance: f64,
    pub zero_set_empty: bool,
}

/// Distance from `y` to the lattice zero set at tolerance `zero_tol`.
pub fn zero_distance(u: &GridFunction, y: &[f64], zero_tol: f64) -> Result<ZeroDistance> {
    let p = point(y);
    if !u.domain().contains_point(&p) {
        return Err(Error::PointOutsideDomain(p));
    }
    let zs = ZeroSet::new(u, zero_tol);
    let distance = zs.distance(u, &p)?;
    Ok(ZeroDistance { distance, zero_set_empty: zs.is_empty() })
}

/// `10 · h · L`: the finest zero a Lipschitz-`L` function's nodal values can certify.
pub fn default_zero_tol(domain: &GridDomain, lipschitz: f64) -> f64 {
    10.0 * domain.max_spacing() * lipschitz
}

/// Outcome of [`nondeg_vanish`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VanishCheck {
    pub hypothesis_met: bool,
    /// `max_{B(x,r/4)} u ≤ zero_tol`; only meaningful when the hypothesis holds.
    pub conclusion: bool,
    /// The implication: true when the hypothesis fails.
    pub holds: bool,
    pub sphere_mean_plus: f64,
}

/// If `⨍_{∂B} u⁺ ≤ r η₀`, checks `u ≤ zero_tol` on `B(x, r/4)`.
pub fn nondeg_vanish(
    u: &GridFunction,
    ball: &Ball,
    p: &NondegParams,
    w: &WeightField,
    zero_tol: f64,
) -> Result<VanishCheck> {
    p.validate()?;
    let d = *u.domain();
    d.check_ball(ball)?;
    if w.domain() != &d {
        return Err(Error::DomainMismatch);
    }
    let mut qmin = f64::INFINITY;
    d.for_each_node_near(ball, |_, flat, x| {
        if ball.contains_closed(&x) {
            qmin = qmin.min(w.q_plus().values()[flat]);
        }
    });
    if qmin < p.rho0 {
        return Err(Error::InvalidParameter(alloc::format!("q_plus drops to {qmin} < rho0 = {} on the ball", p.rho0)));
    }
    let mean = crate::lattice::sphere_average_with(u, ball, default_angular(d.dim()), |v| v.max(0.0))?;
    let r = ball.radius();
    let hypothesis_met = mean <= r * p.eta0;
    let inner = ball.with_radius(r / 4.0)?;
    let mut max_u = f64::NEG_INFINITY;
    d.for_each_node_near(&inner, |_, flat, x| {
        if inner.contains_closed(&x) {
            max_u = max_u.max(u.values()[flat]);
        }
    });
    if max_u == f64::NEG_INFINITY {
        max_u = u.interpolate_point(&ball.center_point())?;
    }
    let conclusion = max_u <= zero_tol;
    Ok(VanishCheck { hypothesis_met, conclusion, holds: !hypothesis_met || conclusion, sphere_mean_plus: mean })
}

/// `min u⁺(y)/δ(y)` over nodes `y ∈ B(x, r/2)` with `u(y) > 0` and
/// `δ(y) > 2h`, where `δ` is the distance to the exact sign-change set.
/// The center must lie within one cell diagonal of that set.
pub fn nondeg_linear_growth(u: &GridFunction, ball: &Ball) -> Result<f64> {
    let d = *u.domain();
    d.check_ball(ball)?;
    let h = d.max_spacing();
    let diag = h * math::sqrt(d.dim() as f64);
    let c = ball.center_point();
    let zs = ZeroSet::within(u, 0.0, &ball.with_radius(ball.radius() + diag)?);
    if zs.nearest(&c) > diag {
        return Err(Error::CenterNotOnZeroSet { value: u.interpolate_point(&c)?, tol: 0.0 });
    }
    let inner = ball.with_radius(ball.radius() / 2.0)?;
    let mut best = f64::INFINITY;
    let mut count = 0usize;
    d.for_each_node_near(&inner, |_, flat, y| {
        let v = u.values()[flat];
        if v > 0.0 && inner.contains_closed(&y) {
            let delta = zs.nearest(&y);
            if delta > 2.0 * h && delta.is_finite() {
                count += 1;
                best = best.min(v / delta);
            }
        }
    });
    if count == 0 {
        return Err(Error::NoSamples("no positive node with zero distance above 2h".into()));
    }
    Ok(best)
}

/// Volume fractions of `{|u| ≤ zero_tol}` and `{u ≤ zero_tol}` in the ball,
/// from cell subsample points.
pub fn nondeg_density(u: &GridFunction, ball: &Ball, zero_tol: f64) -> Result<(f64, f64)> {
    let d = *u.domain();
    d.check_ball(ball)?;
    let offsets = d.subsample_offsets();
    let (mut total, mut zero, mut nonpos) = (0usize, 0usize, 0usize);
    d.for_each_cell_near(ball, |m, _| {
        for t in &offsets {
            let p = d.cell_local_point(m, t);
            if ball.contains_closed(&p) {
                total += 1;
                let v = u.interpolate_local(m, t);
                if v.abs() <= zero_tol {
                    zero += 1;
                }
                if v <= zero_tol {
                    nonpos += 1;
                }
            }
        }
    });
    if total == 0 {
        return Err(Error::NoSamples("ball contains no subsample point".into()));
    }
    Ok((zero as f64 / total as f64, nonpos as f64 / total as f64))
}

fn ball_nonpositive(u: &GridFunction, ball: &Ball, zero_tol: f64, offsets: &[[f64; 3]]) -> bool {
    let d = u.domain();
    let mut ok = true;
    d.for_each_node_near(ball, |_, flat, p| {
        if ok && ball.contains_closed(&p) && u.values()[flat] > zero_tol {
            ok = false;
        }
    });
    if !ok {
        return false;
    }
    d.for_each_cell_near(ball, |m, _| {
        if !ok {
            return;
        }
        for t in offsets {
            let p = d.cell_local_point(m, t);
            if ball.contains_closed(&p) && u.interpolate_local(m, t) > zero_tol {
                ok = false;
                return;
            }
        }
    });
    ok
}

/// First node `y ∈ B(x, r/2)` (lexicographic order) with `u ≤ zero_tol` on
/// `B(y, η₃ r)`.
pub fn clean_ball_search(u: &GridFunction, ball: &Ball, eta3: f64, zero_tol: f64) -> Result<Option<Point>> {
    if !(eta3 > 0.0 && eta3 < 1.0 / 3.0) {
        return Err(Error::InvalidParameter(alloc::format!("eta3 must lie in (0, 1/3), got {eta3}")));
    }
    let d = *u.domain();
    d.check_ball(ball)?;
    let dim = d.dim();
    let inner = ball.with_radius(ball.radius() / 2.0)?;
    let rho = eta3 * ball.radius();
    let offsets = d.subsample_offsets();
    let mut found = None;
    d.for_each_node_near(&inner, |_, flat, y| {
        if found.is_some() || !inner.contains_closed(&y) || u.values()[flat] > zero_tol {
            return;
        }
        let Ok(small) = Ball::new(&y[..dim], rho) else { return };
        if d.contains_ball(&small) && ball_nonpositive(u, &small, zero_tol, &offsets) {
            found = Some(y);
        }
    });
    Ok(found)
}

/// `[ω(x, θᵏ r)]` for `k = 0..=depth`.
pub fn omega_decay_trace(u: &GridFunction, center: &[f64], r: f64, theta: f64, depth: usize) -> Result<Vec<f64>> {
    if !(theta > 0.0 && theta <= 0.5) {
        return Err(Error::InvalidParameter(alloc::format!("theta must lie in (0, 1/2], got {theta}")));
    }
    let ball = Ball::new(center, r)?;
    u.domain().check_ball(&ball)?;
    let mut out = Vec::with_capacity(depth + 1);
    let mut s = r;
    for _ in 0..=depth {
        out.push(omega(u, &ball.with_radius(s)?)?);
        s *= theta;
    }
    Ok(out)
}

/// Settings for [`diagnose`].
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DiagnoseSettings {
    pub good_class: GoodClassParams,
    pub almost_min: AlmostMinParams,
    pub nondeg: NondegParams,
    pub k2: f64,
    pub gamma: f64,
    pub eta3: f64,
    /// Defaults to `10 · h · L`.
    pub zero_tol: Option<f64>,
    pub log_lip_samples: usize,
}

/// Flat record of all diagnostics on one ball.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DiagnosticsReport {
    pub center: Vec<f64>,
    pub radius: f64,
    pub omega: f64,
    pub b: f64,
    pub b_plus: f64,
    /// `None` when `B(x, 2r)` leaves the domain or `r > r₀`.
    pub in_good_class: Option<bool>,
    pub case_label: CaseLabel,
    pub zero_in_two_thirds: Option<bool>,
    pub lipschitz_est: f64,
    pub log_lipschitz_est: Option<f64>,
    pub zero_tol: f64,
    pub nondeg_vanish_hypothesis_met: bool,
    pub nondeg_vanish_holds: bool,
    pub nondeg_linear_growth: Option<f64>,
    pub nondeg_zero_frac: f64,
    pub nondeg_nonpos_frac: f64,
    pub clean_ball_found: bool,
}

/// Runs the full battery on one ball.
pub fn diagnose(u: &GridFunction, w: &WeightField, ball: &Ball, s: &DiagnoseSettings) -> Result<DiagnosticsReport> {
    let d = *u.domain();
    d.check_ball(ball)?;
    let omega_v = omega(u, ball)?;
    let (b, b_plus) = b_pair(u, ball)?;
    let in_good_class = match good_class(u, ball, &s.good_class, &s.almost_min) {
        Ok(v) => Some(v),
        Err(Error::BallOutsideDomain { .. }) | Err(Error::InvalidParameter(_)) => None,
        Err(e) => return Err(e),
    };
    let cls = classify_ball(u, ball, s.k2, s.gamma, w.mode())?;
    let lipschitz_est = gradient_bound(u, &Region::Ball(*ball))?;
    let log_lipschitz_est = match log_lip_modulus(u, ball.center(), ball.radius() / 2.0, s.log_lip_samples) {
        Ok(v) => Some(v),
        Err(Error::BallOutsideDomain { .. }) | Err(Error::NoSamples(_)) => None,
        Err(e) => return Err(e),
    };
    let zero_tol = s.zero_tol.unwrap_or_else(|| default_zero_tol(&d, s.nondeg.lipschitz));
    let vanish = nondeg_vanish(u, ball, &s.nondeg, w, zero_tol)?;
    let growth = match nondeg_linear_growth(u, ball) {
        Ok(v) => Some(v),
        Err(Error::CenterNotOnZeroSet { .. }) | Err(Error::NoSamples(_)) => None,
        Err(e) => return Err(e),
    };
    let (zero_frac, nonpos_frac) = nondeg_density(u, ball, zero_tol)?;
    let clean = clean_ball_search(u, ball, s.eta3, zero_tol)?;
    Ok(DiagnosticsReport {
        center: ball.center().to_vec(),
        radius: ball.radius(),
        omega: omega_v,
        b,
        b_plus,
        in_good_class,
        case_label: cls.label,
        zero_in_two_thirds: cls.zero_in_two_thirds,
        lipschitz_est,
        log_lipschitz_est,
        zero_tol,
        nondeg_vanish_hypothesis_met: vanish.hypothesis_met,
        nondeg_vanish_holds: vanish.holds,
        nondeg_linear_growth: growth,
        nondeg_zero_frac: zero_frac,
        nondeg_nonpos_frac: nonpos_frac,
        clean_ball_found: clean.is_some(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::{FRAC_1_SQRT_2, PI};

    fn square(n: usize) -> GridDomain {
        GridDomain::new(&[-1.0, -1.0], &[2.0, 2.0], &[n, n]).unwrap()
    }

    fn ball(c: [f64; 2], r: f64) -> Ball {
        Ball::new(&c, r).unwrap()
    }

    #[test]
    fn omega_examples() {
        let g = square(129);
        let h = g.max_spacing();
        let b = ball([0.0, 0.0], 0.5);
        assert_eq!(omega(&GridFunction::constant(g, 3.0), &b).unwrap(), 0.0);
        let lin = GridFunction::sample(g, |x| x[1]).unwrap();
        assert!((omega(&lin, &b).unwrap() - 1.0).abs() < 1e-12);
        let kink = GridFunction::sample(g, |x| x[1].max(0.0)).unwrap();
        assert!((omega(&kink, &b).unwrap() - FRAC_1_SQRT_2).abs() <= 3.0 * h / 0.5);
    }

    #[test]
    fn b_pair_examples() {
        let g = square(129);
        let r = 0.5;
        let b = ball([0.0, 0.0], r);
        let (bb, bp) = b_pair(&GridFunction::sample(g, |x| x[1]).unwrap(), &b).unwrap();
        assert!(bb.abs() < 1e-12);
        assert!((bp - 2.0 * r / PI).abs() <= 0.02 * 2.0 * r / PI);
        let (bb, bp) = b_pair(&GridFunction::constant(g, 5.0), &b).unwrap();
        assert!((bb - 5.0).abs() < 1e-12 && (bp - 5.0).abs() < 1e-12);
        let (bb, bp) = b_pair(&GridFunction::sample(g, |x| x[1].max(0.0)).unwrap(), &b).unwrap();
        assert!((bb - r / PI).abs() <= 0.02 * r / PI);
        assert_eq!(bb, bp);
    }

    #[test]
    fn good_class_examples() {
        let g = square(65);
        let p = GoodClassParams::new(0.005, 1.0, 3.0, 1.0).unwrap();
        let amp = AlmostMinParams::new(1.0, 0.5).unwrap();
        let b = ball([0.0, 0.0], 0.2);
        assert!(!good_class(&GridFunction::zeros(g), &b, &p, &amp).unwrap());
        // C0 τ^{-2} = 40000, so M/r must exceed that
        assert!(good_class(&GridFunction::constant(g, 1e6), &b, &p, &amp).unwrap());
        let kink = GridFunction::sample(g, |x| x[1].max(0.0)).unwrap();
        assert!(!good_class(&kink, &b, &p, &amp).unwrap());
        assert!(good_class(&kink, &ball([0.0, 0.0], 0.6), &p, &amp).is_err());
        assert!(GoodClassParams::new(0.02, 1.0, 3.0, 1.0).is_err());
    }

    #[test]
    fn log_lip_examples() {
        let g = square(65);
        assert_eq!(log_lip_modulus(&GridFunction::constant(g, 2.0), &[0.0, 0.0], 0.4, 500).unwrap(), 0.0);
        let lin = GridFunction::sample(g, |x| x[1]).unwrap();
        let c = log_lip_modulus(&lin, &[0.0, 0.0], 0.4, 500).unwrap();
        assert!(c > 0.0 && c <= 1.0);
    }

    #[test]
    fn gradient_bound_examples() {
        let g = square(64);
        let u = GridFunction::sample(g, |x| 3.0 * x[0]).unwrap();
        let b = Region::Ball(ball([0.0, 0.0], 0.5));
        assert!((gradient_bound(&u, &b).unwrap() - 3.0).abs() < 1e-12);
        assert_eq!(gradient_bound(&GridFunction::zeros(g), &b).unwrap(), 0.0);
        let sq = 2f64.sqrt();
        let tp = GridFunction::sample(g, |x| if x[1] > 0.0 { sq * x[1] } else { x[1] }).unwrap();
        let away = Region::Box { lo: [-0.5, 0.1, 0.0], hi: [0.5, 0.5, 0.0] };
        assert!((gradient_bound(&tp, &away).unwrap() - sq).abs() < 1e-12);
        let all = Region::Box { lo: [-0.5, -0.5, 0.0], hi: [0.5, 0.5, 0.0] };
        let gb = gradient_bound(&tp, &all).unwrap();
        assert!(gb <= sq + 1.0 && gb >= sq - 1e-12);
    }

    #[test]
    fn classify_examples() {
        let g = square(65);
        let b = ball([0.0, 0.0], 0.4);
        let c = classify_ball(&GridFunction::zeros(g), &b, 1.0, 0.1, Phase::OnePhase).unwrap();
        assert_eq!(c.label, CaseLabel::Case3);
        let steep = GridFunction::sample(g, |x| 5.0 * x[1]).unwrap();
        let c = classify_ball(&steep, &b, 2.0, 0.1, Phase::TwoPhase).unwrap();
        assert_eq!(c.label, CaseLabel::Case2);
        assert_eq!(c.zero_in_two_thirds, Some(true));
        let lifted = GridFunction::sample(g, |x| 5.0 * x[1] + 100.0).unwrap();
        let c = classify_ball(&lifted, &b, 2.0, 0.1, Phase::OnePhase).unwrap();
        assert_eq!(c.label, CaseLabel::Case1);
        let c = classify_ball(&lifted, &b, 2.0, 0.1, Phase::TwoPhase).unwrap();
        assert_eq!(c.zero_in_two_thirds, Some(false));
    }

    #[test]
    fn zero_distance_examples() {
        let g = square(65);
        let h = g.max_spacing();
        let lin = GridFunction::sample(g, |x| x[1]).unwrap();
        let zd = zero_distance(&lin, &[0.1, 0.3], 0.0).unwrap();
        assert!((zd.distance - 0.3).abs() <= h);
        let one = zero_distance(&GridFunction::constant(g, 1.0), &[0.0, 0.0], 0.0).unwrap();
        assert!(one.distance.is_infinite() && one.zero_set_empty);
        let kink = GridFunction::sample(g, |x| x[1].max(0.0)).unwrap();
        for y in [[0.0, -0.5], [0.3, -0.01], [0.77, 0.0]] {
            assert_eq!(zero_distance(&kink, &y, 0.0).unwrap().distance, 0.0);
        }
        let up = zero_distance(&kink, &[0.2, 0.4], 0.0).unwrap();
        assert!((up.distance - 0.4).abs() <= h);
    }

    #[test]
    fn vanish_examples() {
        let g = square(65);
        let w = WeightField::constant(g, 1.0, 0.0, Phase::OnePhase).unwrap();
        let p = NondegParams::new(0.5, 1.0, 0.1).unwrap();
        let r = 0.4;
        let v = nondeg_vanish(&GridFunction::constant(g, -1.0), &ball([0.0, 0.0], r), &p, &w, 0.0).unwrap();
        assert!(v.hypothesis_met && v.conclusion && v.holds);
        let kink = GridFunction::sample(g, |x| x[1].max(0.0)).unwrap();
        let v = nondeg_vanish(&kink, &ball([0.0, -r], r), &p, &w, 0.0).unwrap();
        assert!(v.hypothesis_met && v.holds);
        let v = nondeg_vanish(&kink, &ball([0.0, 0.0], r), &p, &w, 0.0).unwrap();
        assert!(!v.hypothesis_met && v.holds);
        let low = WeightField::constant(g, 0.1, 0.0, Phase::OnePhase).unwrap();
        assert!(nondeg_vanish(&kink, &ball([0.0, 0.0], r), &p, &low, 0.0).is_err());
    }

    #[test]
    fn linear_growth_examples() {
        let r = 0.5;
        for n in [33usize, 65, 129] {
            let g = square(n);
            for lambda in [0.5, 1.0, 2.0] {
                let u = GridFunction::sample(g, |x| lambda * x[1].max(0.0)).unwrap();
                let v = nondeg_linear_growth(&u, &ball([0.0, 0.0], r)).unwrap();
                assert!((v - lambda).abs() <= 0.05 * lambda, "n={n} lambda={lambda} got {v}");
            }
        }
        let g = square(129);
        let quad = GridFunction::sample(g, |x| x[1].max(0.0).powi(2)).unwrap();
        let v = nondeg_linear_growth(&quad, &ball([0.0, 0.0], r)).unwrap();
        assert!(v < 0.1);
        let shifted = GridFunction::sample(g, |x| (x[1] - 0.3).max(0.0)).unwrap();
        assert!(matches!(nondeg_linear_growth(&shifted, &ball([0.0, 0.0], r)), Err(Error::CenterNotOnZeroSet { .. })));
    }

    #[test]
    fn density_examples() {
        let g = square(129);
        let h = g.max_spacing();
        let b = ball([0.0, 0.0], 0.5);
        let (z, np) = nondeg_density(&GridFunction::sample(g, |x| x[1]).unwrap(), &b, 0.0).unwrap();
        assert!((np - 0.5).abs() <= 2.0 * h / 0.5);
        assert!(z <= 2.0 * h / 0.5);
        assert_eq!(nondeg_density(&GridFunction::zeros(g), &b, 0.0).unwrap(), (1.0, 1.0));
        assert_eq!(nondeg_density(&GridFunction::constant(g, 1.0), &b, 0.0).unwrap(), (0.0, 0.0));
    }

    #[test]
    fn clean_ball_examples() {
        let g = square(65);
        let b = ball([0.0, 0.0], 0.4);
        let lin = GridFunction::sample(g, |x| x[1]).unwrap();
        let y = clean_ball_search(&lin, &b, 0.125, 0.0).unwrap().unwrap();
        assert!(y[1] <= -0.125 * 0.4 + 1e-12);
        assert_eq!(clean_ball_search(&GridFunction::constant(g, 1.0), &b, 0.1, 0.0).unwrap(), None);
        assert!(clean_ball_search(&lin, &b, 0.4, 0.0).is_err());
    }

    #[test]
    fn omega_trace_examples() {
        let g = square(129);
        let lin = GridFunction::sample(g, |x| x[1]).unwrap();
        let t = omega_decay_trace(&lin, &[0.0, 0.0], 0.8, 0.5, 4).unwrap();
        assert_eq!(t.len(), 5);
        assert!(t.iter().all(|w| (w - 1.0).abs() < 1e-12));
        let z = omega_decay_trace(&GridFunction::zeros(g), &[0.0, 0.0], 0.8, 0.5, 3).unwrap();
        assert!(z.iter().all(|&w| w == 0.0));
    }
}
