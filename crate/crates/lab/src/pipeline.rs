//! The five experiment pipelines.

use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use freebound::blowup::{build_sequence, convergence_report, BlowupSequence, ConvergenceReport};
use freebound::diagnostics::{b_pair, diagnose, gradient_bound, DiagnosticsReport, Region, ZeroSet};
use freebound::functional::{
    bump, competitor_radial_cutoff, competitor_scale, defect, defect_slack, functional_j, normalized_green_cutoff,
    Phase, Sign, WeightField,
};
use freebound::harmonic::{boundary_ring, harmonic_extension};
use freebound::lattice::{Ball, GridDomain, GridFunction};
use freebound::monotonicity::{phi_limit_estimate, trace, MonotonicityTrace};
use freebound::solver::{minimize, SolveResult};

use crate::config::{Kind, Prepared};
use crate::error::{LabError, Result};
use crate::{fbgf, output};

/// Residual tolerance for harmonic-extension competitors.
pub const EXTENSION_TOL: f64 = 1e-9;

pub fn solve(p: &Prepared) -> Result<SolveResult> {
    let nonneg = p.weights.mode() == Phase::OnePhase;
    let boundary = |x: &[f64]| p.boundary.eval(x);
    Ok(minimize(&p.domain, &p.weights, &boundary, &p.solve, nonneg)?)
}

fn nearest_zero(u: &GridFunction, ball: &Ball) -> Option<Vec<f64>> {
    let dim = u.domain().dim();
    let c = ball.center_point();
    let zs = ZeroSet::within(u, 0.0, ball);
    let mut best: Option<(f64, [f64; 3])> = None;
    for q in zs.points() {
        let d2: f64 = (0..dim).map(|a| (q[a] - c[a]) * (q[a] - c[a])).sum();
        if best.is_none_or(|(b, _)| d2 < b) {
            best = Some((d2, *q));
        }
    }
    best.map(|(_, q)| q[..dim].to_vec())
}

/// Target balls, with snapping targets moved onto the zero set of `u`.
pub fn resolve_targets(p: &Prepared, u: &GridFunction) -> Result<Vec<Ball>> {
    let mut out = Vec::with_capacity(p.targets.len());
    for (spec, ball) in p.config.targets.iter().zip(&p.targets) {
        if !spec.snap {
            out.push(*ball);
            continue;
        }
        let center = nearest_zero(u, ball)
            .ok_or_else(|| LabError::Config(format!("no zero of the solution inside target {:?}", spec.center)))?;
        let snapped = Ball::new(&center, ball.radius())?;
        u.domain().check_ball(&snapped)?;
        out.push(snapped);
    }
    Ok(out)
}

fn inner_half(d: &GridDomain) -> Region {
    let mut lo = [0.0; 3];
    let mut hi = [0.0; 3];
    for a in 0..d.dim() {
        let mid = d.origin()[a] + 0.5 * d.extent()[a];
        lo[a] = mid - 0.25 * d.extent()[a];
        hi[a] = mid + 0.25 * d.extent()[a];
    }
    Region::Box { lo, hi }
}

fn in_region(region: &Region, p: &[f64; 3], dim: usize) -> bool {
    match region {
        Region::Ball(b) => b.contains_closed(p),
        Region::Box { lo, hi } => (0..dim).all(|a| lo[a] <= p[a] && p[a] <= hi[a]),
    }
}

/// `max |u − exact|` and `max |exact|` over nodes of the inner half-domain.
pub fn sup_error(u: &GridFunction, exact: &dyn Fn(&[f64]) -> f64) -> (f64, f64) {
    let d = *u.domain();
    let dim = d.dim();
    let region = inner_half(&d);
    let mut err: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for (i, &v) in u.values().iter().enumerate() {
        let x = d.node_position(i);
        if in_region(&region, &x, dim) {
            let e = exact(&x[..dim]);
            err = err.max((v - e).abs());
            scale = scale.max(e.abs());
        }
    }
    (err, scale)
}

/// Gradient bound on the inner half-domain.
pub fn inner_gradient_bound(u: &GridFunction) -> Result<f64> {
    Ok(gradient_bound(u, &inner_half(u.domain()))?)
}

/// Weights frozen at the ball center.
pub fn frozen(w: &WeightField, ball: &Ball) -> Result<WeightField> {
    Ok(w.frozen_at(ball.center())?)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub bound: f64,
    pub passed: bool,
}

impl Check {
    fn at_most(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Check { name: name.into(), value, bound, passed: value <= bound }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub name: String,
    pub passed: bool,
    pub checks: Vec<Check>,
    pub diagnostics: Vec<DiagnosticsReport>,
    /// Steps that could not run for this configuration, with the reason.
    pub skipped: Vec<String>,
}

impl VerifyReport {
    pub fn failed(&self) -> usize {
        self.checks.iter().filter(|c| !c.passed).count()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DefectRecord {
    pub competitor: String,
    pub defect: f64,
    pub slack: f64,
}

/// Defect of every standard competitor on `ball`: harmonic extensions at the
/// given radius fractions, scaling competitors with both cutoffs, signs and
/// `λ = ±r^{α/2}`, and `bumps` random bump perturbations. Also returns the
/// worst maximum-principle excursion of the extensions.
pub fn defect_suite(
    u: &GridFunction,
    w: &WeightField,
    p: &Prepared,
    ball: &Ball,
    fractions: &[f64],
    bumps: usize,
    seed: u64,
) -> Result<(Vec<DefectRecord>, f64)> {
    let d = *u.domain();
    let h = d.max_spacing();
    let r = ball.radius();
    let wf = frozen(w, ball)?;
    let mut out = Vec::new();
    let mut excursion: f64 = 0.0;
    let mut record = |name: String, v: &GridFunction, on: &Ball| -> Result<()> {
        let j = functional_j(u, &wf, on)?;
        out.push(DefectRecord {
            competitor: name,
            defect: defect(u, v, &wf, &p.gauge, on)?,
            slack: defect_slack(h, j),
        });
        Ok(())
    };
    for &f in fractions {
        let sub = ball.with_radius(f * r)?;
        let ext = harmonic_extension(u, &sub, EXTENSION_TOL)?;
        let ring = boundary_ring(u, &sub)?;
        let lo = ring.iter().map(|&i| u.values()[i]).fold(f64::INFINITY, f64::min);
        let hi = ring.iter().map(|&i| u.values()[i]).fold(f64::NEG_INFINITY, f64::max);
        for &i in &ext.interior {
            let v = ext.extension.values()[i];
            excursion = excursion.max(lo - v).max(v - hi);
        }
        record(format!("extension_{f}"), &ext.extension, &sub)?;
    }
    let lambda = r.powf(p.gauge.alpha() / 2.0);
    let cutoffs = [
        ("green", normalized_green_cutoff(&d, ball, 0.5 * r)?),
        ("radial", competitor_radial_cutoff(&d, ball, 0.5 * r)?),
    ];
    for (cname, phi) in &cutoffs {
        for sign in [Sign::Plus, Sign::Minus] {
            for l in [lambda, -lambda] {
                let v = competitor_scale(u, ball, l, phi, sign)?;
                let sname = if sign == Sign::Plus { "plus" } else { "minus" };
                record(format!("scale_{cname}_{sname}_{l:+}"), &v, ball)?;
            }
        }
    }
    let lip = gradient_bound(u, &Region::Ball(*ball))?.max(1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let c = ball.center_point();
    let dim = d.dim();
    for k in 0..bumps {
        let mut off = [0.0; 3];
        loop {
            for o in off.iter_mut().take(dim) {
                *o = rng.gen_range(-0.5..0.5) * r;
            }
            if off[..dim].iter().map(|o| o * o).sum::<f64>() <= 0.25 * r * r {
                break;
            }
        }
        let dist = off[..dim].iter().map(|o| o * o).sum::<f64>().sqrt();
        let mut bc = c;
        for a in 0..dim {
            bc[a] += off[a];
        }
        let max_rad = r - dist - 2.0 * h;
        let rad = rng.gen_range(0.25..1.0) * max_rad;
        let amp = rng.gen_range(0.01..0.1) * lip * rad * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        let b = bump(&d, &bc, rad, amp)?;
        let v = u.zip_with(&b, |a, b| a + b)?;
        record(format!("bump_{k}"), &v, ball)?;
    }
    Ok((out, excursion))
}

/// Files written by one run.
#[derive(Debug, Clone, Default)]
pub struct Artifacts {
    pub dir: PathBuf,
    pub files: Vec<PathBuf>,
    pub report: Option<VerifyReport>,
}

impl Artifacts {
    /// [`LabError::ChecksFailed`] if a verify report has failing checks.
    pub fn status(&self) -> Result<()> {
        match &self.report {
            Some(r) if r.failed() > 0 => Err(LabError::ChecksFailed { failed: r.failed(), total: r.checks.len() }),
            _ => Ok(()),
        }
    }

    fn add(&mut self, name: &str) -> PathBuf {
        let p = self.dir.join(name);
        self.files.push(p.clone());
        p
    }
}

/// Blow-up sequence at the ball center and its convergence report, with
/// the weights frozen there.
pub fn blowup_for(p: &Prepared, u: &GridFunction, ball: &Ball) -> Result<(BlowupSequence, ConvergenceReport)> {
    let spec = p.config.blowup.as_ref().expect("checked by prepare");
    let h = p.domain.max_spacing();
    let zero_tol = spec.zero_tol.unwrap_or(10.0 * h);
    let seq = build_sequence(u, ball.center(), &spec.radii, spec.window, spec.res, zero_tol)?;
    let wf = frozen(&p.weights, ball)?;
    let qp = wf.q_plus().values()[0];
    let qm = wf.q_minus().values()[0];
    let wr = WeightField::constant(*seq.reference_domain(), qp, qm, wf.mode())?;
    let rep = convergence_report(&seq, &wr)?;
    Ok((seq, rep))
}

#[derive(Serialize)]
struct Manifest<'a> {
    base_point: &'a [f64],
    radii: &'a [f64],
    #[serde(rename = "R")]
    window: f64,
    res: usize,
    members: Vec<String>,
}

#[derive(Serialize)]
struct SolveSummary {
    name: String,
    stage_count: usize,
    epsilons: Vec<f64>,
    j_eps_final: Vec<f64>,
    grad_norm_final: f64,
    converged: Vec<bool>,
}

#[derive(Serialize)]
struct TraceSummary {
    center: Vec<f64>,
    violation: f64,
    worst_a_decrease: f64,
    phi_limit_estimate: Option<f64>,
}

fn trace_for(p: &Prepared, u: &GridFunction, ball: &Ball) -> Result<MonotonicityTrace> {
    let t = p.config.monotonicity.as_ref().expect("checked by caller");
    Ok(trace(u, ball.center(), t.r_min, t.r_max, t.count, t.delta, &p.gauge)?)
}

/// Runs `kind` on a prepared configuration, writing artifacts into `dir`.
/// Failed verify checks are not an error here; see [`Artifacts::status`].
pub fn run(p: &Prepared, kind: Kind, dir: &Path) -> Result<Artifacts> {
    fs::create_dir_all(dir).map_err(|e| LabError::io(dir, e))?;
    let mut art = Artifacts { dir: dir.to_path_buf(), ..Default::default() };
    log::info!("{}: solving on {:?} nodes", p.config.name, p.domain.nodes_per_axis());
    let res = solve(p)?;
    let u = &res.u;
    fbgf::write(&art.add("solution.fbgf"), u)?;
    output::write_convergence(&art.add("convergence.csv"), &res)?;
    output::write_json(
        &art.add("solve.json"),
        &SolveSummary {
            name: p.config.name.clone(),
            stage_count: res.stage_count,
            epsilons: res.stages.iter().map(|s| s.epsilon).collect(),
            j_eps_final: res.j_history(),
            grad_norm_final: res.grad_norm_final,
            converged: res.stages.iter().map(|s| s.converged).collect(),
        },
    )?;
    let targets = resolve_targets(p, u)?;
    match kind {
        Kind::Minimize => {}
        Kind::Diagnose => {
            let s = p.config.diagnose.settings(p.gauge);
            let reports =
                targets.iter().map(|b| diagnose(u, &p.weights, b, &s)).collect::<freebound::Result<Vec<_>>>()?;
            output::write_json(&art.add("diagnostics.json"), &reports)?;
        }
        Kind::Monotonicity => {
            let mut summary = Vec::new();
            for (k, b) in targets.iter().enumerate() {
                let t = trace_for(p, u, b)?;
                output::write_trace(&art.add(&format!("trace_{k}.csv")), &t)?;
                summary.push(TraceSummary {
                    center: t.center.clone(),
                    violation: t.violation,
                    worst_a_decrease: t.worst_a_decrease(),
                    phi_limit_estimate: phi_limit_estimate(&t).ok(),
                });
            }
            output::write_json(&art.add("monotonicity.json"), &summary)?;
        }
        Kind::Blowup => {
            for (k, b) in targets.iter().enumerate() {
                let (seq, rep) = blowup_for(p, u, b)?;
                let sub = format!("blowup_{k}");
                let sub_dir = dir.join(&sub);
                fs::create_dir_all(&sub_dir).map_err(|e| LabError::io(&sub_dir, e))?;
                let mut members = Vec::new();
                for (j, m) in seq.members.iter().enumerate() {
                    let name = format!("member_{j}.fbgf");
                    fbgf::write(&art.add(&format!("{sub}/{name}")), m)?;
                    members.push(name);
                }
                let manifest = Manifest {
                    base_point: &seq.base_point,
                    radii: &seq.radii,
                    window: seq.window,
                    res: seq.res,
                    members,
                };
                output::write_json(&art.add(&format!("{sub}/manifest.json")), &manifest)?;
                output::write_json(&art.add(&format!("{sub}/convergence.json")), &rep)?;
            }
        }
        Kind::Verify => {
            let report = verify(p, &res, &targets)?;
            output::write_json(&art.add("verify.json"), &report)?;
            art.report = Some(report);
        }
    }
    Ok(art)
}

/// The full battery of invariant checks on a computed solution.
pub fn verify(p: &Prepared, res: &SolveResult, targets: &[Ball]) -> Result<VerifyReport> {
    let u = &res.u;
    let v = &p.config.verify;
    let mut checks = Vec::new();
    let mut skipped = Vec::new();
    let mut diagnostics = Vec::new();

    let mut worst_rise: f64 = 0.0;
    for s in &res.stages {
        for pair in s.j_history.windows(2) {
            worst_rise = worst_rise.max(pair[1] - pair[0]);
        }
    }
    checks.push(Check::at_most("solver.stage_energy_rise", worst_rise, 0.0));

    if let Some(exact) = &v.exact {
        let f = exact.compile(p.domain.dim())?;
        let (err, scale) = sup_error(u, &|x| f.eval(x));
        let rel = if scale > 0.0 { err / scale } else { err };
        checks.push(Check::at_most("exact.relative_sup_error", rel, v.sup_tol));
    }
    let lip = inner_gradient_bound(u)?;
    checks.push(Check {
        name: "gradient_bound.inner_half".into(),
        value: lip,
        bound: f64::INFINITY,
        passed: lip.is_finite(),
    });

    let settings = p.config.diagnose.settings(p.gauge);
    for (k, ball) in targets.iter().enumerate() {
        let tag = format!("target_{k}");
        let (b, bp) = b_pair(u, ball)?;
        checks.push(Check::at_most(format!("{tag}.abs_b_minus_b_plus"), b.abs() - bp, 1e-12));

        let (records, excursion) =
            defect_suite(u, &p.weights, p, ball, &v.extension_fractions, v.bumps, v.seed + k as u64)?;
        checks.push(Check::at_most(format!("{tag}.extension_max_principle_excursion"), excursion, 0.0));
        for r in records {
            checks.push(Check::at_most(format!("{tag}.defect.{}", r.competitor), r.defect, r.slack));
        }

        if p.config.monotonicity.is_some() {
            match trace_for(p, u, ball) {
                Ok(t) => {
                    let scale = t.a_plus.iter().chain(&t.a_minus).fold(0.0f64, |m, a| m.max(*a));
                    checks.push(Check::at_most(format!("{tag}.a_pm_decrease"), t.worst_a_decrease(), 1e-12 * scale));
                    if p.weights.mode() == Phase::OnePhase || u.values().iter().all(|&x| x >= 0.0) {
                        let m = t.phi.iter().fold(0.0f64, |m, x| m.max(x.abs()));
                        checks.push(Check::at_most(format!("{tag}.phi_one_phase"), m, 0.0));
                    }
                    if let Some(expected) = v.phi_limit {
                        let est = phi_limit_estimate(&t)?;
                        checks.push(Check::at_most(
                            format!("{tag}.phi_limit_relative_error"),
                            (est - expected).abs() / expected,
                            v.phi_tol,
                        ));
                        let mean = t.phi.iter().sum::<f64>() / t.len() as f64;
                        let dev = t.phi.iter().fold(0.0f64, |m, x| m.max((x - mean).abs())) / mean;
                        checks.push(Check::at_most(format!("{tag}.phi_relative_deviation"), dev, v.phi_tol));
                    }
                }
                Err(e) => skipped.push(format!("{tag}.trace: {e}")),
            }
        }

        if p.config.blowup.is_some() {
            let (_, rep) = blowup_for(p, u, ball)?;
            let mut rise: f64 = 0.0;
            for w in rep.rows.windows(2) {
                rise = rise.max(w[1].sup_distance - w[0].sup_distance);
            }
            checks.push(Check::at_most(format!("{tag}.blowup_sup_distance_rise"), rise, 0.0));
        }

        match diagnose(u, &p.weights, ball, &settings) {
            Ok(d) => diagnostics.push(d),
            Err(e @ freebound::Error::InvalidParameter(_)) => skipped.push(format!("{tag}.diagnose: {e}")),
            Err(e) => return Err(e.into()),
        }
    }
    let passed = checks.iter().all(|c| c.passed);
    Ok(VerifyReport { name: p.config.name.clone(), passed, checks, diagnostics, skipped })
}

/// Bytes of every artifact, keyed by path relative to the run directory.
pub fn snapshot(art: &Artifacts) -> Result<Vec<(PathBuf, Vec<u8>)>> {
    art.files
        .iter()
        .map(|f| {
            let bytes = fs::read(f).map_err(|e| LabError::io(f, e))?;
            Ok((f.strip_prefix(&art.dir).unwrap_or(f).to_path_buf(), bytes))
        })
        .collect()
}
