//! Discrete minimizers of `J` with Dirichlet data by smoothed-Heaviside
//! continuation.
//!
//! For each smoothing width `ε` the solver minimizes
//! `J_ε(u) = Σ_cells vol·(|∇u|² + q₊² H_ε(u_c) + q₋² H_ε(−u_c))` over the
//! interior nodes, where `u_c` is the cell-center value. The Dirichlet part
//! uses the edge-averaged density, so its Hessian is exactly twice the
//! weighted lattice Laplacian; that Laplacian, inverted by sine transforms,
//! preconditions a projected gradient iteration with Armijo backtracking.
//!
//! Two-phase problems use `H_ε(t) = ½(1 + tanh(t/ε))`. One-phase problems
//! (`nonneg`) use `H_ε(t) = tanh(t/ε)` for `t ≥ 0`, which vanishes on the
//! zero phase, together with the projection `u ← max(u, 0)`.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::functional::{defect, AlmostMinParams, WeightField};
use crate::lattice::{Ball, GridDomain, GridFunction};
use crate::math;
use crate::poisson::{harmonic_fill, DirichletLaplacian};
use crate::sum::KahanSum;

/// Armijo sufficient-decrease constant.
const ARMIJO_C1: f64 = 1e-4;
/// Maximum step halvings per line search.
const MAX_HALVINGS: usize = 40;
/// Curvature condition `|φ'(t)| ≤ c₂ |φ'(0)|` ending the line search early.
const WOLFE_C2: f64 = 0.1;
/// Function/derivative probes before falling back to halving.
const LINE_SEARCH_PROBES: usize = 8;

/// Step-size rule for the outer iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum StepRule {
    /// Constant multiple of the preconditioned direction.
    Fixed(f64),
    /// Armijo backtracking from a unit step.
    Backtracking,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SolveConfig {
    pub epsilons: Vec<f64>,
    /// Iteration cap per stage.
    pub max_outer: usize,
    pub grad_tol: f64,
    pub step_rule: StepRule,
}

/// Default schedule fractions of the domain diameter.
pub const DEFAULT_EPSILON_FRACTIONS: [f64; 5] = [0.2, 0.1, 0.05, 0.02, 0.01];

impl SolveConfig {
    /// `[0.2, 0.1, 0.05, 0.02, 0.01] × diameter`, truncated at the grid spacing.
    pub fn for_domain(domain: &GridDomain) -> Self {
        let diam = domain.diameter();
        let h = domain.max_spacing();
        let mut epsilons: Vec<f64> = DEFAULT_EPSILON_FRACTIONS.iter().map(|f| f * diam).filter(|&e| e >= h).collect();
        if epsilons.is_empty() {
            epsilons.push(h);
        }
        SolveConfig { epsilons, max_outer: 400, grad_tol: 1e-5, step_rule: StepRule::Backtracking }
    }

    /// Geometric schedule from `start` down to `final_factor · h`, halving each stage.
    pub fn mesh_scaled(domain: &GridDomain, start: f64, final_factor: f64) -> Self {
        let target = final_factor * domain.max_spacing();
        let mut epsilons = Vec::new();
        let mut e = start.max(target);
        while e > target * (1.0 + 1e-12) {
            epsilons.push(e);
            e *= 0.5;
        }
        epsilons.push(target);
        SolveConfig { epsilons, max_outer: 400, grad_tol: 1e-5, step_rule: StepRule::Backtracking }
    }

    pub fn validate(&self, domain: &GridDomain) -> Result<()> {
        if self.epsilons.is_empty() {
            return Err(Error::InvalidParameter("epsilon schedule is empty".into()));
        }
        if self.epsilons.iter().any(|e| !(*e > 0.0) || !e.is_finite()) {
            return Err(Error::InvalidParameter("epsilons must be positive and finite".into()));
        }
        if self.epsilons.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::InvalidParameter("epsilons must be strictly decreasing".into()));
        }
        let last = *self.epsilons.last().unwrap();
        let h = domain.max_spacing();
        if last < h * (1.0 - 1e-12) {
            return Err(Error::InvalidParameter(alloc::format!("last epsilon {last} is below the grid spacing {h}")));
        }
        if self.max_outer == 0 {
            return Err(Error::InvalidParameter("max_outer must be positive".into()));
        }
        if !(self.grad_tol > 0.0) {
            return Err(Error::InvalidParameter("grad_tol must be positive".into()));
        }
        if let StepRule::Fixed(s) = self.step_rule {
            if !(s > 0.0 && s.is_finite()) {
                return Err(Error::InvalidParameter("fixed step must be positive".into()));
            }
        }
        Ok(())
    }
}

/// One ε-stage: the smoothed functional and gradient norm after each accepted step
/// (entry 0 is the starting state).
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct StageLog {
    pub epsilon: f64,
    pub j_history: Vec<f64>,
    pub grad_history: Vec<f64>,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    pub u: GridFunction,
    pub stages: Vec<StageLog>,
    pub grad_norm_final: f64,
    pub stage_count: usize,
}

impl SolveResult {
    /// Final `J_ε` of every stage.
    pub fn j_history(&self) -> Vec<f64> {
        self.stages.iter().filter_map(|s| s.j_history.last().copied()).collect()
    }

    /// Rows `(stage, epsilon, iter, J_eps, grad_norm)`.
    pub fn convergence_rows(&self) -> Vec<(usize, f64, usize, f64, f64)> {
        let mut rows = Vec::new();
        for (s, stage) in self.stages.iter().enumerate() {
            for (i, (j, g)) in stage.j_history.iter().zip(&stage.grad_history).enumerate() {
                rows.push((s, stage.epsilon, i, *j, *g));
            }
        }
        rows
    }
}

#[derive(Clone, Copy)]
enum Smoothing {
    OnePhase,
    TwoPhase,
}

impl Smoothing {
    #[inline]
    fn h(self, t: f64, eps: f64) -> f64 {
        match self {
            Smoothing::OnePhase => {
                if t > 0.0 {
                    math::tanh(t / eps)
                } else {
                    0.0
                }
            }
            Smoothing::TwoPhase => 0.5 * (1.0 + math::tanh(t / eps)),
        }
    }

    /// Derivative; the one-phase variant returns the right derivative at 0.
    #[inline]
    fn dh(self, t: f64, eps: f64) -> f64 {
        match self {
            Smoothing::OnePhase => {
                if t >= 0.0 {
                    let th = math::tanh(t / eps);
                    (1.0 - th * th) / eps
                } else {
                    0.0
                }
            }
            Smoothing::TwoPhase => {
                let th = math::tanh(t / eps);
                0.5 * (1.0 - th * th) / eps
            }
        }
    }
}

struct Problem {
    domain: GridDomain,
    smoothing: Smoothing,
    nonneg: bool,
    vol: f64,
    /// q₊² vol and q₋² vol per cell.
    qp2: Vec<f64>,
    qm2: Vec<f64>,
    corners: Vec<usize>,
    /// (node, axis neighbor, weight) for every lattice edge.
    edges: Vec<(usize, usize, f64)>,
    interior: Vec<usize>,
    boundary: Vec<usize>,
    precond: DirichletLaplacian,
}

impl Problem {
    fn new(domain: GridDomain, w: &WeightField, nonneg: bool) -> Self {
        let dim = domain.dim();
        let vol = domain.cell_volume();
        let cells = domain.cell_count();
        let mut qp2 = Vec::with_capacity(cells);
        let mut qm2 = Vec::with_capacity(cells);
        for c in 0..cells {
            let m = domain.cell_multi_index(c);
            let qp = w.q_plus().cell_mean(m);
            let qm = w.q_minus().cell_mean(m);
            qp2.push(qp * qp * vol);
            qm2.push(if nonneg { 0.0 } else { qm * qm * vol });
        }
        let corners: Vec<usize> = (0..domain.corner_count()).map(|k| domain.cell_corner([0, 0, 0], k)).collect();
        let n = domain.nodes_per_axis();
        let strides = domain.strides();
        let mut weights = [0.0; 3];
        for axis in 0..dim {
            let h = domain.spacing()[axis];
            weights[axis] = vol / (h * h);
        }
        let mut edges = Vec::new();
        for flat in 0..domain.node_count() {
            let m = domain.node_multi_index(flat);
            for axis in 0..dim {
                if m[axis] + 1 >= n[axis] {
                    continue;
                }
                let mut share = 1.0;
                for other in 0..dim {
                    if other != axis && (m[other] == 0 || m[other] + 1 == n[other]) {
                        share *= 0.5;
                    }
                }
                edges.push((flat, flat + strides[axis], weights[axis] * share));
            }
        }
        let (boundary, interior): (Vec<usize>, Vec<usize>) =
            (0..domain.node_count()).partition(|&f| domain.is_boundary_node(domain.node_multi_index(f)));
        let precond = DirichletLaplacian::new(&domain, [2.0 * weights[0], 2.0 * weights[1], 2.0 * weights[2]]);
        let smoothing = if nonneg { Smoothing::OnePhase } else { Smoothing::TwoPhase };
        Problem { domain, smoothing, nonneg, vol, qp2, qm2, corners, edges, interior, boundary, precond }
    }

    #[inline]
    fn cell_center_value(&self, u: &[f64], base: usize) -> f64 {
        let mut s = 0.0;
        for &c in &self.corners {
            s += u[base + c];
        }
        s / self.corners.len() as f64
    }

    fn cell_base(&self, c: usize) -> usize {
        let m = self.domain.cell_multi_index(c);
        self.domain.node_index(m)
    }

    fn value(&self, u: &[f64], eps: f64) -> f64 {
        let mut acc = KahanSum::new();
        for &(a, b, w) in &self.edges {
            let d = u[b] - u[a];
            acc.add(w * d * d);
        }
        let cells = self.cell_bases();
        for (c, &base) in cells.iter().enumerate() {
            let uc = self.cell_center_value(u, base);
            let mut t = 0.0;
            if self.qp2[c] != 0.0 {
                t += self.qp2[c] * self.smoothing.h(uc, eps);
            }
            if self.qm2[c] != 0.0 {
                t += self.qm2[c] * self.smoothing.h(-uc, eps);
            }
            acc.add(t);
        }
        acc.value()
    }

    /// `J_ε(v) − J_ε(u)` summed term by term, accurate far below the round-off of `J_ε`.
    fn difference(&self, u: &[f64], v: &[f64], eps: f64, bases: &[usize]) -> f64 {
        let mut acc = KahanSum::new();
        for &(a, b, w) in &self.edges {
            let du = u[b] - u[a];
            let dv = v[b] - v[a];
            acc.add(w * (dv - du) * (dv + du));
        }
        for (c, &base) in bases.iter().enumerate() {
            let uc = self.cell_center_value(u, base);
            let vc = self.cell_center_value(v, base);
            if uc == vc {
                continue;
            }
            let mut t = 0.0;
            if self.qp2[c] != 0.0 {
                t += self.qp2[c] * (self.smoothing.h(vc, eps) - self.smoothing.h(uc, eps));
            }
            if self.qm2[c] != 0.0 {
                t += self.qm2[c] * (self.smoothing.h(-vc, eps) - self.smoothing.h(-uc, eps));
            }
            acc.add(t);
        }
        acc.value()
    }

    fn cell_bases(&self) -> Vec<usize> {
        (0..self.domain.cell_count()).map(|c| self.cell_base(c)).collect()
    }

    /// Nodal gradient (zero on boundary nodes).
    fn gradient(&self, u: &[f64], eps: f64, bases: &[usize], g: &mut [f64]) {
        g.iter_mut().for_each(|v| *v = 0.0);
        for &(a, b, w) in &self.edges {
            let d = 2.0 * w * (u[b] - u[a]);
            g[b] += d;
            g[a] -= d;
        }
        let share = 1.0 / self.corners.len() as f64;
        for (c, &base) in bases.iter().enumerate() {
            let uc = self.cell_center_value(u, base);
            let mut t = 0.0;
            if self.qp2[c] != 0.0 {
                t += self.qp2[c] * self.smoothing.dh(uc, eps);
            }
            if self.qm2[c] != 0.0 {
                t -= self.qm2[c] * self.smoothing.dh(-uc, eps);
            }
            if t != 0.0 {
                t *= share;
                for &k in &self.corners {
                    g[base + k] += t;
                }
            }
        }
        for &b in &self.boundary {
            g[b] = 0.0;
        }
    }

    fn active(&self, u: &[f64], g: &[f64], node: usize) -> bool {
        self.nonneg && u[node] <= 0.0 && g[node] > 0.0
    }

    /// Projected-gradient max-norm per unit nodal volume.
    fn grad_norm(&self, u: &[f64], g: &[f64]) -> f64 {
        let mut m: f64 = 0.0;
        for &i in &self.interior {
            if !self.active(u, g, i) {
                m = m.max(g[i].abs());
            }
        }
        m / self.vol
    }

    /// Preconditioned steepest-descent direction into `z`, zero on the active set
    /// (recorded in `active`).
    fn direction(&self, u: &[f64], g: &[f64], z: &mut [f64], active: &mut [bool]) {
        for (i, a) in active.iter_mut().enumerate() {
            *a = self.active(u, g, i);
        }
        let mut rhs: Vec<f64> = self.interior.iter().map(|&i| if active[i] { 0.0 } else { -g[i] }).collect();
        self.precond.solve_in_place(&mut rhs);
        z.iter_mut().for_each(|v| *v = 0.0);
        for (k, &i) in self.interior.iter().enumerate() {
            if !active[i] {
                z[i] = rhs[k];
            }
        }
    }

    /// `J_ε` change and directional derivative at `u + t d` (projected); the
    /// trial point is left in `ws.trial`.
    fn probe(&self, u: &[f64], eps: f64, t: f64, ws: &mut Workspace) -> (f64, f64, f64) {
        self.step(u, &ws.d, t, &mut ws.trial);
        let change = self.difference(u, &ws.trial, eps, &ws.bases);
        self.gradient(&ws.trial, eps, &ws.bases, &mut ws.g_trial);
        let mut slope = 0.0;
        let mut predicted = 0.0;
        for i in 0..u.len() {
            if ws.trial[i] > 0.0 || !self.nonneg {
                slope += ws.g_trial[i] * ws.d[i];
            }
            predicted += ws.g[i] * (ws.trial[i] - u[i]);
        }
        (change, slope, predicted)
    }

    /// Line search along `ws.d`: bracketing with secant/quadratic refinement
    /// toward a small directional derivative, accepting only Armijo points.
    /// Leaves the accepted point in `ws.trial` and returns `(t, change)`.
    fn line_search(&self, u: &[f64], eps: f64, t0: f64, ws: &mut Workspace) -> Option<(f64, f64)> {
        let slope0: f64 = ws.g.iter().zip(&ws.d).map(|(a, b)| a * b).sum();
        if !(slope0 < 0.0) {
            return None;
        }
        let mut best: Option<(f64, f64)> = None;
        let mut lo = (0.0, 0.0, slope0);
        let mut hi: Option<f64> = None;
        let mut t = t0;
        for _ in 0..LINE_SEARCH_PROBES {
            let (change, slope, predicted) = self.probe(u, eps, t, ws);
            let armijo = change.is_finite() && predicted < 0.0 && change <= ARMIJO_C1 * predicted;
            if !armijo {
                hi = Some(t);
                let span = t - lo.0;
                let curv = change - lo.1 - lo.2 * span;
                let mut next = if curv.is_finite() && curv > 0.0 {
                    lo.0 - lo.2 * span * span / (2.0 * curv)
                } else {
                    lo.0 + 0.5 * span
                };
                next = next.clamp(lo.0 + 0.1 * span, lo.0 + 0.5 * span);
                t = next;
                continue;
            }
            if best.is_none_or(|(_, c)| change < c) {
                best = Some((t, change));
            }
            if slope.abs() <= WOLFE_C2 * slope0.abs() {
                break;
            }
            if slope < 0.0 {
                let prev = lo;
                lo = (t, change, slope);
                t = match hi {
                    Some(h) => 0.5 * (t + h),
                    None => {
                        let sec = if slope > prev.2 { t - slope * (t - prev.0) / (slope - prev.2) } else { 4.0 * t };
                        sec.clamp(1.5 * t, 4.0 * t)
                    }
                };
            } else {
                hi = Some(t);
                let span = t - lo.0;
                let sec = lo.0 - lo.2 * span / (slope - lo.2);
                t = sec.clamp(lo.0 + 0.1 * span, t - 0.1 * span);
            }
        }
        match best {
            Some((tb, cb)) => {
                self.step(u, &ws.d, tb, &mut ws.trial);
                Some((tb, cb))
            }
            None => {
                let mut t = t;
                for _ in 0..MAX_HALVINGS {
                    let (change, _, predicted) = self.probe(u, eps, t, ws);
                    if change.is_finite() && predicted < 0.0 && change <= ARMIJO_C1 * predicted {
                        return Some((t, change));
                    }
                    t *= 0.5;
                }
                None
            }
        }
    }

    fn step(&self, u: &[f64], d: &[f64], t: f64, out: &mut [f64]) {
        for ((o, a), b) in out.iter_mut().zip(u).zip(d) {
            let v = a + t * b;
            *o = if self.nonneg { v.max(0.0) } else { v };
        }
    }
}

/// Minimizes `J` with Dirichlet data `boundary` on the boundary nodes.
///
/// With [`StepRule::Backtracking`] the search directions are preconditioned
/// Polak–Ribière conjugate gradients, restarted whenever the set of nodes
/// held at zero changes; [`StepRule::Fixed`] takes plain preconditioned
/// gradient steps.
pub fn minimize(
    domain: &GridDomain,
    w: &WeightField,
    boundary: &dyn Fn(&[f64]) -> f64,
    cfg: &SolveConfig,
    nonneg: bool,
) -> Result<SolveResult> {
    if w.domain() != domain {
        return Err(Error::DomainMismatch);
    }
    cfg.validate(domain)?;
    let mut u = vec![0.0; domain.node_count()];
    for (flat, v) in u.iter_mut().enumerate() {
        if domain.is_boundary_node(domain.node_multi_index(flat)) {
            let b = boundary(&domain.node_position(flat)[..domain.dim()]);
            if !b.is_finite() {
                return Err(Error::NonFinite { index: flat });
            }
            if nonneg && b < 0.0 {
                return Err(Error::InvalidParameter(alloc::format!(
                    "negative boundary value {b} at node {flat} in one-phase mode"
                )));
            }
            *v = b;
        }
    }
    harmonic_fill(domain, &mut u);
    if nonneg {
        u.iter_mut().for_each(|v| *v = v.max(0.0));
    }
    let problem = Problem::new(*domain, w, nonneg);
    let mut ws = Workspace::new(&problem);
    let mut stages = Vec::with_capacity(cfg.epsilons.len());
    let mut grad_norm = f64::INFINITY;
    for (s, &eps) in cfg.epsilons.iter().enumerate() {
        let mut j = problem.value(&u, eps);
        problem.gradient(&u, eps, &ws.bases, &mut ws.g);
        grad_norm = problem.grad_norm(&u, &ws.g);
        let start = j;
        let mut log = StageLog { epsilon: eps, j_history: vec![j], grad_history: vec![grad_norm], converged: false };
        let mut cg = CgState::default();
        for _ in 0..cfg.max_outer {
            if grad_norm <= cfg.grad_tol {
                break;
            }
            let change = match cfg.step_rule {
                StepRule::Fixed(t) => {
                    problem.direction(&u, &ws.g, &mut ws.z, &mut ws.active);
                    ws.d.copy_from_slice(&ws.z);
                    problem.step(&u, &ws.d, t, &mut ws.trial);
                    Some(problem.difference(&u, &ws.trial, eps, &ws.bases))
                }
                StepRule::Backtracking => {
                    let t0 = cg.next_direction(&problem, &u, &mut ws);
                    let found = problem.line_search(&u, eps, t0, &mut ws);
                    if let Some((t, _)) = found {
                        cg.accepted(t, &ws);
                    }
                    found.map(|(_, c)| c)
                }
            };
            let Some(change) = change else { break };
            if !change.is_finite() {
                return Err(Error::Divergence { stage: s, start, end: change });
            }
            core::mem::swap(&mut u, &mut ws.trial);
            j = problem.value(&u, eps);
            problem.gradient(&u, eps, &ws.bases, &mut ws.g);
            grad_norm = problem.grad_norm(&u, &ws.g);
            log.j_history.push(j);
            log.grad_history.push(grad_norm);
        }
        log.converged = grad_norm <= cfg.grad_tol;
        log::debug!("stage {s} eps {eps:.4e}: {} steps, J_eps {j:.10e}, grad {grad_norm:.3e}", log.j_history.len() - 1);
        if j > start + 1e-12 * start.abs() {
            return Err(Error::Divergence { stage: s, start, end: j });
        }
        stages.push(log);
    }
    let stage_count = stages.len();
    Ok(SolveResult { u: GridFunction::new(*domain, u)?, stages, grad_norm_final: grad_norm, stage_count })
}

struct Workspace {
    bases: Vec<usize>,
    g: Vec<f64>,
    g_trial: Vec<f64>,
    z: Vec<f64>,
    d: Vec<f64>,
    trial: Vec<f64>,
    active: Vec<bool>,
}

impl Workspace {
    fn new(problem: &Problem) -> Self {
        let n = problem.domain.node_count();
        Workspace {
            bases: problem.cell_bases(),
            g: vec![0.0; n],
            g_trial: vec![0.0; n],
            z: vec![0.0; n],
            d: vec![0.0; n],
            trial: vec![0.0; n],
            active: vec![false; n],
        }
    }
}

/// Polak–Ribière bookkeeping between accepted steps.
#[derive(Default)]
struct CgState {
    /// `−g̃` and `z·(−g̃)` of the previous iteration.
    residual: Vec<f64>,
    zr: f64,
    active: Vec<bool>,
    last_step: f64,
    last_slope: f64,
    valid: bool,
}

impl CgState {
    /// Fills `ws.d` and returns the initial trial step.
    fn next_direction(&mut self, problem: &Problem, u: &[f64], ws: &mut Workspace) -> f64 {
        problem.direction(u, &ws.g, &mut ws.z, &mut ws.active);
        let mut beta = 0.0;
        let mut zr = 0.0;
        let mut zdr = 0.0;
        for &i in &problem.interior {
            if !ws.active[i] {
                let r = -ws.g[i];
                zr += ws.z[i] * r;
                if self.valid {
                    zdr += ws.z[i] * (r - self.residual[i]);
                }
            }
        }
        if self.valid && self.active == ws.active && self.zr > 0.0 {
            beta = (zdr / self.zr).max(0.0);
        }
        for i in 0..ws.d.len() {
            ws.d[i] = if ws.active[i] { 0.0 } else { ws.z[i] + beta * ws.d[i] };
        }
        let mut slope: f64 = ws.g.iter().zip(&ws.d).map(|(a, b)| a * b).sum();
        if slope >= 0.0 {
            beta = 0.0;
            ws.d.copy_from_slice(&ws.z);
            slope = -zr;
        }
        self.residual.clear();
        self.residual.extend(ws.g.iter().map(|v| -v));
        self.zr = zr;
        self.active.clone_from(&ws.active);
        let t0 = if beta == 0.0 || !self.valid || self.last_slope >= 0.0 {
            1.0
        } else {
            (self.last_step * self.last_slope / slope).clamp(1e-2, 10.0)
        };
        self.last_slope = slope;
        t0
    }

    fn accepted(&mut self, step: f64, _ws: &Workspace) {
        self.last_step = step;
        self.valid = true;
    }
}

/// A computed minimizer for variable weights, paired with weights frozen at a
/// ball center and the gauge used to test it as an almost minimizer.
#[derive(Debug, Clone)]
pub struct AlmostMinimizer {
    pub u: GridFunction,
    pub weights: WeightField,
    pub params: AlmostMinParams,
    pub ball: Ball,
}

impl AlmostMinimizer {
    /// Defect of a competitor against the frozen weights.
    pub fn defect(&self, v: &GridFunction) -> Result<f64> {
        defect(&self.u, v, &self.weights, &self.params, &self.ball)
    }
}

/// Tags `base.u` for defect tests against `w_frozen`.
pub fn make_almost_minimizer(
    base: &SolveResult,
    w_frozen: WeightField,
    params: AlmostMinParams,
    ball: Ball,
) -> AlmostMinimizer {
    AlmostMinimizer { u: base.u.clone(), weights: w_frozen, params, ball }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functional::Phase;

    fn square(n: usize) -> GridDomain {
        GridDomain::new(&[-1.0, -1.0], &[2.0, 2.0], &[n, n]).unwrap()
    }

    #[test]
    fn config_validation() {
        let g = square(33);
        let mut cfg = SolveConfig::for_domain(&g);
        assert!(cfg.validate(&g).is_ok());
        cfg.epsilons = vec![0.1, 0.2];
        assert!(cfg.validate(&g).is_err());
        cfg.epsilons = vec![0.1, 0.01];
        assert!(cfg.validate(&g).is_err());
        let m = SolveConfig::mesh_scaled(&g, 0.4, 1.5);
        assert!(m.validate(&g).is_ok());
        assert_eq!(*m.epsilons.last().unwrap(), 1.5 * g.max_spacing());
    }

    #[test]
    fn harmonic_case_is_exact() {
        let g = square(33);
        let w = WeightField::constant(g, 0.0, 0.0, Phase::TwoPhase).unwrap();
        let mut cfg = SolveConfig::for_domain(&g);
        cfg.grad_tol = 1e-10;
        let res = minimize(&g, &w, &|x| x[1], &cfg, false).unwrap();
        for (i, v) in res.u.values().iter().enumerate() {
            assert!((v - g.node_position(i)[1]).abs() <= 1e-6);
        }
    }

    #[test]
    fn stages_are_monotone() {
        let g = square(33);
        let w = WeightField::constant(g, 1.0, 0.0, Phase::OnePhase).unwrap();
        let cfg = SolveConfig::mesh_scaled(&g, 0.4, 1.5);
        let res = minimize(&g, &w, &|x| x[1].max(0.0), &cfg, true).unwrap();
        for s in &res.stages {
            for win in s.j_history.windows(2) {
                assert!(win[1] <= win[0] * (1.0 + 1e-12) + 1e-300);
            }
        }
        assert!(res.u.values().iter().all(|&v| v >= 0.0));
        assert_eq!(res.stage_count, cfg.epsilons.len());
    }

    #[test]
    fn rejects_bad_boundary() {
        let g = square(9);
        let w = WeightField::constant(g, 1.0, 0.0, Phase::OnePhase).unwrap();
        let cfg = SolveConfig::for_domain(&g);
        assert!(minimize(&g, &w, &|_| f64::NAN, &cfg, false).is_err());
        assert!(minimize(&g, &w, &|x| x[1], &cfg, true).is_err());
    }
}
