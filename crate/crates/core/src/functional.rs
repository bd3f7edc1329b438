//! The free-boundary functional on balls, competitor families and
//! almost-minimality defects.
//!
//! `J_{x,r}(v) = ∫_B |∇v|² + q₊² χ{v>0} + q₋² χ{v<0}`, where the measure
//! terms use per-cell positivity fractions of the interpolated function.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::lattice::{cell_dirichlet_inner, cell_gradient, Ball, BallQuadrature, GridDomain, GridFunction, Point};
use crate::math;

/// One- or two-phase problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum Phase {
    OnePhase,
    TwoPhase,
}

/// Which phase a quantity refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    #[inline]
    pub fn factor(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }

    /// `u⁺` or `u⁻` of a value.
    #[inline]
    pub fn part(self, v: f64) -> f64 {
        (self.factor() * v).max(0.0)
    }
}

/// Weights `(q₊, q₋)` sampled on the lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightField {
    q_plus: GridFunction,
    q_minus: GridFunction,
    mode: Phase,
}

impl WeightField {
    pub fn new(q_plus: GridFunction, q_minus: GridFunction, mode: Phase) -> Result<Self> {
        if q_plus.domain() != q_minus.domain() {
            return Err(Error::DomainMismatch);
        }
        if q_plus.values().iter().chain(q_minus.values()).any(|&q| q < 0.0) {
            return Err(Error::InvalidParameter("weights must be nonnegative".into()));
        }
        if mode == Phase::OnePhase && q_minus.values().iter().any(|&q| q != 0.0) {
            return Err(Error::InvalidParameter("one-phase weights require q_minus = 0".into()));
        }
        Ok(WeightField { q_plus, q_minus, mode })
    }

    /// Constant weights on `domain`; in one-phase mode `q_minus` is forced to 0.
    pub fn constant(domain: GridDomain, q_plus: f64, q_minus: f64, mode: Phase) -> Result<Self> {
        let qm = if mode == Phase::OnePhase { 0.0 } else { q_minus };
        Self::new(GridFunction::constant(domain, q_plus), GridFunction::constant(domain, qm), mode)
    }

    pub fn one_phase(q_plus: GridFunction) -> Result<Self> {
        let zero = GridFunction::zeros(*q_plus.domain());
        Self::new(q_plus, zero, Phase::OnePhase)
    }

    pub fn q_plus(&self) -> &GridFunction {
        &self.q_plus
    }

    pub fn q_minus(&self) -> &GridFunction {
        &self.q_minus
    }

    pub fn mode(&self) -> Phase {
        self.mode
    }

    pub fn domain(&self) -> &GridDomain {
        self.q_plus.domain()
    }

    pub fn weight(&self, sign: Sign) -> &GridFunction {
        match sign {
            Sign::Plus => &self.q_plus,
            Sign::Minus => &self.q_minus,
        }
    }

    /// Constant weights equal to the interpolated values at `at`.
    pub fn frozen_at(&self, at: &[f64]) -> Result<Self> {
        let qp = self.q_plus.interpolate(at)?;
        let qm = self.q_minus.interpolate(at)?;
        Self::constant(*self.domain(), qp, qm, self.mode)
    }

    fn check(&self, u: &GridFunction) -> Result<()> {
        if u.domain() != self.domain() {
            Err(Error::DomainMismatch)
        } else {
            Ok(())
        }
    }
}

/// Gauge parameters: almost minimality with `h(r) = κ r^α`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AlmostMinParams {
    kappa: f64,
    alpha: f64,
}

impl AlmostMinParams {
    pub fn new(kappa: f64, alpha: f64) -> Result<Self> {
        if !(kappa >= 0.0) || !kappa.is_finite() {
            return Err(Error::InvalidParameter(alloc::format!("kappa must be >= 0, got {kappa}")));
        }
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::InvalidParameter(alloc::format!("alpha must lie in (0, 1], got {alpha}")));
        }
        Ok(AlmostMinParams { kappa, alpha })
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// `β = α / (n + 2 + α)`.
    pub fn beta(&self, dim: usize) -> f64 {
        self.alpha / (dim as f64 + 2.0 + self.alpha)
    }

    /// `h(r) = κ r^α`.
    pub fn gauge(&self, r: f64) -> f64 {
        self.kappa * math::powf(r, self.alpha)
    }
}

/// `∫_B |∇u|²` with the edge-averaged lattice density.
pub fn energy(u: &GridFunction, ball: &Ball) -> Result<f64> {
    let quad = BallQuadrature::new(u.domain(), ball)?;
    Ok(energy_with(&quad, u))
}

pub(crate) fn energy_with(quad: &BallQuadrature, u: &GridFunction) -> f64 {
    let d = *u.domain();
    quad.integrate(|c| cell_dirichlet_inner(u, u, d.cell_multi_index(c)))
}

/// Fraction of a cell's subsample points where the interpolated `u` has sign `sign`.
pub fn sign_fraction(u: &GridFunction, cell: [usize; 3], sign: Sign, offsets: &[[f64; 3]]) -> f64 {
    let d = u.domain();
    let corners = d.corner_count();
    let mut all_pos = true;
    let mut all_nonpos = true;
    for corner in 0..corners {
        let v = sign.factor() * u.values()[d.cell_corner(cell, corner)];
        if v > 0.0 {
            all_nonpos = false;
        } else {
            all_pos = false;
        }
    }
    if all_pos {
        return 1.0;
    }
    if all_nonpos {
        return 0.0;
    }
    let hits = offsets.iter().filter(|t| sign.factor() * u.interpolate_local(cell, t) > 0.0).count();
    hits as f64 / offsets.len() as f64
}

/// `∫_B q±² χ{±u > 0}` with subsampled positivity fractions and weights at cell centers.
pub fn measure_term(u: &GridFunction, w: &WeightField, ball: &Ball, sign: Sign) -> Result<f64> {
    w.check(u)?;
    let quad = BallQuadrature::new(u.domain(), ball)?;
    Ok(measure_with(&quad, u, w, sign))
}

pub(crate) fn measure_with(quad: &BallQuadrature, u: &GridFunction, w: &WeightField, sign: Sign) -> f64 {
    if sign == Sign::Minus && w.mode == Phase::OnePhase {
        return 0.0;
    }
    let d = *u.domain();
    let offsets = d.subsample_offsets();
    let q = w.weight(sign);
    quad.integrate(|c| {
        let m = d.cell_multi_index(c);
        let qc = q.cell_mean(m);
        if qc == 0.0 {
            return 0.0;
        }
        qc * qc * sign_fraction(u, m, sign, &offsets)
    })
}

/// `J_{x,r}(u)`; in one-phase mode only the `q₊` term contributes.
pub fn functional_j(u: &GridFunction, w: &WeightField, ball: &Ball) -> Result<f64> {
    w.check(u)?;
    let quad = BallQuadrature::new(u.domain(), ball)?;
    Ok(j_with(&quad, u, w))
}

pub(crate) fn j_with(quad: &BallQuadrature, u: &GridFunction, w: &WeightField) -> f64 {
    energy_with(quad, u) + measure_with(quad, u, w, Sign::Plus) + measure_with(quad, u, w, Sign::Minus)
}

/// Scaling competitor `v = u + λ φ u` on `{±u > 0}`, `v = u` elsewhere.
pub fn competitor_scale(
    u: &GridFunction,
    ball: &Ball,
    lambda: f64,
    phi: &GridFunction,
    sign: Sign,
) -> Result<GridFunction> {
    if u.domain() != phi.domain() {
        return Err(Error::DomainMismatch);
    }
    let d = *u.domain();
    d.check_ball(ball)?;
    let mut out = u.values().to_vec();
    for (index, (&p, v)) in phi.values().iter().zip(out.iter_mut()).enumerate() {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidParameter(alloc::format!("cutoff value {p} at node {index} outside [0, 1]")));
        }
        if p != 0.0 && !ball.contains_open(&d.node_position(index)) {
            return Err(Error::InvalidParameter(alloc::format!("cutoff support leaves the ball at node {index}")));
        }
        let scaled = (lambda * p).abs();
        if scaled >= 1.0 {
            return Err(Error::InadmissibleScaling { index, value: scaled });
        }
        if sign.factor() * *v > 0.0 {
            *v += lambda * p * *v;
        }
    }
    GridFunction::new(d, out)
}

fn green(dim: usize, r: f64, rho: f64) -> f64 {
    if dim == 2 {
        math::ln(r / rho) / (2.0 * core::f64::consts::PI)
    } else {
        // c_3 = 1 / (n (n-2) ω_n) at n = 3
        let c3 = 1.0 / (3.0 * crate::lattice::unit_ball_volume(3));
        c3 * (1.0 / rho - 1.0 / r)
    }
}

/// Truncated Green-function cutoff `φ_{r,s}`: zero outside `B(x,r)`, the
/// Green function of the ball between radii `s` and `r`, constant inside
/// `B(x,s)`. In 2D the logarithmic kernel `(1/2π) log(r/|y−x|)` is used.
pub fn competitor_green_cutoff(domain: &GridDomain, ball: &Ball, s: f64) -> Result<GridFunction> {
    let r = ball.radius();
    if !(s > 0.0 && s < r) {
        return Err(Error::InvalidParameter(alloc::format!("need 0 < s < r, got s = {s}, r = {r}")));
    }
    let c = ball.center_point();
    let dim = domain.dim();
    GridFunction::sample(*domain, |x| {
        let rho = crate::lattice::dist(&crate::lattice::point(x), &c, dim);
        if rho >= r {
            0.0
        } else {
            green(dim, r, rho.max(s))
        }
    })
}

/// Green cutoff rescaled to peak value 1.
pub fn normalized_green_cutoff(domain: &GridDomain, ball: &Ball, s: f64) -> Result<GridFunction> {
    let peak = green(domain.dim(), ball.radius(), s);
    competitor_green_cutoff(domain, ball, s)?.map(|v| v / peak)
}

/// Radial cutoff: 1 on `B(x,t)`, `(r − |y−x|)/(r − t)` on the annulus, 0 outside.
pub fn competitor_radial_cutoff(domain: &GridDomain, ball: &Ball, t: f64) -> Result<GridFunction> {
    let r = ball.radius();
    if !(t >= 0.0 && t < r) {
        return Err(Error::InvalidParameter(alloc::format!("need 0 <= t < r, got t = {t}, r = {r}")));
    }
    let c = ball.center_point();
    let dim = domain.dim();
    GridFunction::sample(*domain, |x| {
        let rho = crate::lattice::dist(&crate::lattice::point(x), &c, dim);
        if rho >= r {
            0.0
        } else if rho <= t {
            1.0
        } else {
            (r - rho) / (r - t)
        }
    })
}

/// `J(u) − (1 + κ r^α) J(v)`; almost minimizers give values `≤ 0` up to
/// discretization slack for every competitor `v`.
pub fn defect(
    u: &GridFunction,
    v: &GridFunction,
    w: &WeightField,
    params: &AlmostMinParams,
    ball: &Ball,
) -> Result<f64> {
    if u.domain() != v.domain() {
        return Err(Error::DomainMismatch);
    }
    w.check(u)?;
    let d = *u.domain();
    d.check_ball(ball)?;
    for (index, (a, b)) in u.values().iter().zip(v.values()).enumerate() {
        if a != b && !ball.contains_open(&d.node_position(index)) {
            return Err(Error::CompetitorOutsideBall { index });
        }
    }
    let quad = BallQuadrature::new(&d, ball)?;
    let jv = j_with(&quad, v, w);
    Ok((j_with(&quad, u, w) - jv) - params.gauge(ball.radius()) * jv)
}

/// Discretization slack `10 h (J + 1)` for defect checks.
pub fn defect_slack(h: f64, j_value: f64) -> f64 {
    10.0 * h * (j_value + 1.0)
}

/// Coefficients of the scaling expansion for the lattice energy:
/// `∫_B |∇v±|² = ∫_B |∇u±|² + 2λ·linear + λ²·quadratic` where
/// `linear = ⟨∇u±, ∇(φu±)⟩` and `quadratic = |∇(φu±)|²` (integrated).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingBrackets {
    pub base: f64,
    pub linear: f64,
    pub quadratic: f64,
}

/// Brackets of the scaling competitor, computed from the lattice bilinear form.
pub fn scaling_brackets(u: &GridFunction, phi: &GridFunction, ball: &Ball, sign: Sign) -> Result<ScalingBrackets> {
    if u.domain() != phi.domain() {
        return Err(Error::DomainMismatch);
    }
    let d = *u.domain();
    let quad = BallQuadrature::new(&d, ball)?;
    let part = u.map(|v| sign.part(v))?;
    let product = part.zip_with(phi, |a, b| a * b)?;
    let base = quad.integrate(|c| cell_dirichlet_inner(&part, &part, d.cell_multi_index(c)));
    let linear = quad.integrate(|c| cell_dirichlet_inner(&part, &product, d.cell_multi_index(c)));
    let quadratic = quad.integrate(|c| cell_dirichlet_inner(&product, &product, d.cell_multi_index(c)));
    Ok(ScalingBrackets { base, linear, quadratic })
}

/// `∫_B φ|∇u±|² + u±⟨∇u±, ∇φ⟩` from cell-center values and cell gradients
/// (the continuum form of [`ScalingBrackets::linear`]).
pub fn linear_bracket_pointwise(u: &GridFunction, phi: &GridFunction, ball: &Ball, sign: Sign) -> Result<f64> {
    if u.domain() != phi.domain() {
        return Err(Error::DomainMismatch);
    }
    let d = *u.domain();
    let quad = BallQuadrature::new(&d, ball)?;
    let part = u.map(|v| sign.part(v))?;
    let dim = d.dim();
    Ok(quad.integrate(|c| {
        let m = d.cell_multi_index(c);
        let gu = cell_gradient(&part, m);
        let gp = cell_gradient(phi, m);
        let pu: f64 = (0..dim).map(|i| gu[i] * gu[i]).sum();
        let cross: f64 = (0..dim).map(|i| gu[i] * gp[i]).sum();
        phi.cell_mean(m) * pu + part.cell_mean(m) * cross
    }))
}

/// Smooth bump `amplitude · (1 − |y−c|²/ρ²)³₊`, supported in `B(c, ρ)`.
pub fn bump(domain: &GridDomain, center: &Point, radius: f64, amplitude: f64) -> Result<GridFunction> {
    let dim = domain.dim();
    GridFunction::sample(*domain, |x| {
        let t = crate::lattice::dist2(&crate::lattice::point(x), center, dim) / (radius * radius);
        if t >= 1.0 {
            0.0
        } else {
            let s = 1.0 - t;
            amplitude * s * s * s
        }
    })
}

/// Nodes where two functions differ.
pub fn differing_nodes(u: &GridFunction, v: &GridFunction) -> Vec<usize> {
    u.values().iter().zip(v.values()).enumerate().filter(|(_, (a, b))| a != b).map(|(i, _)| i).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::PI;

    fn square(n: usize) -> GridDomain {
        GridDomain::new(&[-1.0, -1.0], &[2.0, 2.0], &[n, n]).unwrap()
    }

    fn unit_ball() -> Ball {
        Ball::new(&[0.0, 0.0], 1.0).unwrap()
    }

    #[test]
    fn energy_examples() {
        let g = square(129);
        let h = g.max_spacing();
        assert_eq!(energy(&GridFunction::constant(g, 2.0), &unit_ball()).unwrap(), 0.0);
        let lin = GridFunction::sample(g, |x| x[1]).unwrap();
        let e = energy(&lin, &unit_ball()).unwrap();
        assert!((e - PI).abs() <= 2.0 * h * PI);
        let kink = GridFunction::sample(g, |x| x[1].max(0.0)).unwrap();
        let e = energy(&kink, &unit_ball()).unwrap();
        assert!((e - PI / 2.0).abs() <= 3.0 * h * PI / 2.0);
    }

    #[test]
    fn measure_examples() {
        let g = square(129);
        let h = g.max_spacing();
        let w = WeightField::constant(g, 1.0, 1.0, Phase::TwoPhase).unwrap();
        let neg = GridFunction::constant(g, -1.0);
        assert_eq!(measure_term(&neg, &w, &unit_ball(), Sign::Plus).unwrap(), 0.0);
        let pos = GridFunction::constant(g, 1.0);
        let full = measure_term(&pos, &w, &unit_ball(), Sign::Plus).unwrap();
        assert!((full - PI).abs() <= 2.0 * h * PI);
        let lin = GridFunction::sample(g, |x| x[1]).unwrap();
        let half = measure_term(&lin, &w, &unit_ball(), Sign::Plus).unwrap();
        assert!((half - PI / 2.0).abs() <= 3.0 * h * PI / 2.0);
    }

    #[test]
    fn j_examples() {
        let g = square(129);
        let h = g.max_spacing();
        let zero = GridFunction::zeros(g);
        let w2 = WeightField::constant(g, 1.0, 1.0, Phase::TwoPhase).unwrap();
        assert_eq!(functional_j(&zero, &w2, &unit_ball()).unwrap(), 0.0);
        let kink = GridFunction::sample(g, |x| x[1].max(0.0)).unwrap();
        let w1 = WeightField::constant(g, 1.0, 0.0, Phase::OnePhase).unwrap();
        let j = functional_j(&kink, &w1, &unit_ball()).unwrap();
        assert!((j - PI).abs() <= 3.0 * h * PI);
        let lin = GridFunction::sample(g, |x| x[1]).unwrap();
        let j = functional_j(&lin, &w2, &unit_ball()).unwrap();
        assert!((j - 2.0 * PI).abs() <= 3.0 * h * 2.0 * PI);
    }

    #[test]
    fn j_is_sum_of_terms() {
        let g = square(65);
        let u = GridFunction::sample(g, |x| x[0] * x[1] - 0.1 + 0.3 * x[0]).unwrap();
        let w = WeightField::new(
            GridFunction::sample(g, |x| 1.0 + 0.2 * x[0]).unwrap(),
            GridFunction::sample(g, |x| 0.5 + 0.1 * x[1] * x[1]).unwrap(),
            Phase::TwoPhase,
        )
        .unwrap();
        let ball = Ball::new(&[0.1, 0.0], 0.7).unwrap();
        let total = functional_j(&u, &w, &ball).unwrap();
        let parts = energy(&u, &ball).unwrap()
            + measure_term(&u, &w, &ball, Sign::Plus).unwrap()
            + measure_term(&u, &w, &ball, Sign::Minus).unwrap();
        assert_eq!(total, parts);
    }

    #[test]
    fn weight_field_validation() {
        let g = square(9);
        assert!(WeightField::new(GridFunction::constant(g, -1.0), GridFunction::zeros(g), Phase::TwoPhase).is_err());
        assert!(
            WeightField::new(GridFunction::constant(g, 1.0), GridFunction::constant(g, 1.0), Phase::OnePhase).is_err()
        );
        let other = GridDomain::new(&[0.0, 0.0], &[1.0, 1.0], &[9, 9]).unwrap();
        assert!(WeightField::new(GridFunction::constant(g, 1.0), GridFunction::zeros(other), Phase::TwoPhase).is_err());
    }

    #[test]
    fn params_validation_and_beta() {
        let p = AlmostMinParams::new(2.0, 0.5).unwrap();
        assert_eq!(p.beta(2), 0.5 / 4.5);
        assert_eq!(p.beta(3), 0.5 / 5.5);
        assert!((p.gauge(0.25) - 1.0).abs() < 1e-15);
        assert!(AlmostMinParams::new(-1.0, 0.5).is_err());
        assert!(AlmostMinParams::new(1.0, 0.0).is_err());
        assert!(AlmostMinParams::new(1.0, 1.5).is_err());
    }

    #[test]
    fn competitor_scale_examples() {
        let g = square(33);
        let ball = Ball::new(&[0.0, 0.0], 0.5).unwrap();
        let u = GridFunction::sample(g, |x| x[1] + 0.3 * x[0]).unwrap();
        let phi = competitor_radial_cutoff(&g, &ball, 0.2).unwrap();
        let same = competitor_scale(&u, &ball, 0.0, &phi, Sign::Plus).unwrap();
        assert_eq!(same, u);
        let v = competitor_scale(&u, &ball, -0.5, &phi, Sign::Plus).unwrap();
        for i in 0..g.node_count() {
            let p = g.node_position(i);
            let expect = if u.values()[i] > 0.0 {
                u.values()[i] + (-0.5 * phi.values()[i]) * u.values()[i]
            } else {
                u.values()[i]
            };
            assert_eq!(v.values()[i], expect);
            assert_eq!(v.values()[i] > 0.0, u.values()[i] > 0.0);
            assert_eq!(v.values()[i] < 0.0, u.values()[i] < 0.0);
            if !ball.contains_open(&p) {
                assert_eq!(v.values()[i], u.values()[i]);
            }
        }
        assert!(matches!(competitor_scale(&u, &ball, 1.0, &phi, Sign::Plus), Err(Error::InadmissibleScaling { .. })));
    }

    #[test]
    fn green_cutoff_examples() {
        let g = GridDomain::new(&[-1.0; 3], &[2.0; 3], &[21, 21, 21]).unwrap();
        let ball = Ball::new(&[0.0, 0.0, 0.0], 0.8).unwrap();
        let s = 0.3;
        let phi = competitor_green_cutoff(&g, &ball, s).unwrap();
        let c3 = 1.0 / (3.0 * 4.0 * PI / 3.0);
        for i in 0..g.node_count() {
            let p = g.node_position(i);
            let rho = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
            if rho >= 0.8 {
                assert_eq!(phi.values()[i], 0.0);
            }
        }
        // node at distance exactly s: (0.3, 0, 0)
        let idx = g.node_index([13, 10, 10]);
        assert!((phi.values()[idx] - c3 * (1.0 / s - 1.0 / 0.8)).abs() < 1e-12);
        // monotone along a ray
        let mut last = f64::INFINITY;
        for k in 10..21 {
            let v = phi.values()[g.node_index([k, 10, 10])];
            assert!(v <= last);
            last = v;
        }
        assert!(competitor_green_cutoff(&g, &ball, 0.8).is_err());
        let n = normalized_green_cutoff(&g, &ball, s).unwrap();
        assert!((n.max_abs() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn defect_examples() {
        let g = square(65);
        let ball = Ball::new(&[0.0, 0.0], 0.5).unwrap();
        let w = WeightField::constant(g, 1.0, 0.0, Phase::OnePhase).unwrap();
        let params = AlmostMinParams::new(1.0, 0.5).unwrap();
        let u = GridFunction::sample(g, |x| x[1].max(0.0)).unwrap();
        let j = functional_j(&u, &w, &ball).unwrap();
        let d = defect(&u, &u, &w, &params, &ball).unwrap();
        assert_eq!(d, j - (1.0 + params.gauge(0.5)) * j);
        let zero = GridFunction::zeros(g);
        let v = bump(&g, &[0.0, 0.0, 0.0], 0.3, 0.2).unwrap();
        assert!(defect(&zero, &v, &w, &params, &ball).unwrap() < 0.0);
        let outside = bump(&g, &[0.0, 0.0, 0.0], 0.8, 0.2).unwrap();
        assert!(matches!(defect(&zero, &outside, &w, &params, &ball), Err(Error::CompetitorOutsideBall { .. })));
    }

    #[test]
    fn scaling_expansion_is_exact_quadratic() {
        let g = square(65);
        let ball = Ball::new(&[0.05, 0.0], 0.5).unwrap();
        let u = GridFunction::sample(g, |x| x[1] + 0.4 * x[0] * x[0] - 0.05).unwrap();
        for phi in
            [competitor_radial_cutoff(&g, &ball, 0.25).unwrap(), normalized_green_cutoff(&g, &ball, 0.1).unwrap()]
        {
            for sign in [Sign::Plus, Sign::Minus] {
                let br = scaling_brackets(&u, &phi, &ball, sign).unwrap();
                let lambda = 0.3;
                let quad = BallQuadrature::new(&g, &ball).unwrap();
                let e = |lam: f64| {
                    let v = competitor_scale(&u, &ball, lam, &phi, sign).unwrap();
                    energy_with(&quad, &v.map(|x| sign.part(x)).unwrap())
                };
                let odd = (e(lambda) - e(-lambda)) / (2.0 * lambda);
                assert!((odd - 2.0 * br.linear).abs() <= 1e-10 * (1.0 + br.base));
                let even = (e(lambda) + e(-lambda)) / 2.0 - br.base;
                assert!((even - lambda * lambda * br.quadratic).abs() <= 1e-10 * (1.0 + br.base));
                let pointwise = linear_bracket_pointwise(&u, &phi, &ball, sign).unwrap();
                assert!((pointwise - br.linear).abs() <= 0.1 * (1.0 + br.linear.abs()));
            }
        }
    }
}
