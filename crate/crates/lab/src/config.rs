//! Experiment configuration: one JSON document per experiment.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use freebound::diagnostics::{DiagnoseSettings, GoodClassParams, NondegParams};
use freebound::functional::{AlmostMinParams, Phase, WeightField};
use freebound::lattice::{Ball, GridDomain, GridFunction};
use freebound::solver::{SolveConfig, StepRule};

use crate::error::{LabError, Result};
use crate::expr::Expr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    Minimize,
    Diagnose,
    Monotonicity,
    Blowup,
    Verify,
}

impl Kind {
    pub fn name(self) -> &'static str {
        match self {
            Kind::Minimize => "minimize",
            Kind::Diagnose => "diagnose",
            Kind::Monotonicity => "monotonicity",
            Kind::Blowup => "blowup",
            Kind::Verify => "verify",
        }
    }
}

/// A scalar field over the grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldSpec {
    Constant(f64),
    /// `base + coeff · |x − center|^power`.
    Radial {
        center: Vec<f64>,
        base: f64,
        coeff: f64,
        power: f64,
    },
    Expr(String),
}

impl FieldSpec {
    pub fn compile(&self, dim: usize) -> Result<Field> {
        Ok(match self {
            FieldSpec::Constant(v) => Field::Constant(*v),
            FieldSpec::Radial { center, base, coeff, power } => {
                if center.len() != dim {
                    return Err(LabError::Config(format!(
                        "radial center has {} coordinates, grid has {dim}",
                        center.len()
                    )));
                }
                Field::Radial { center: center.clone(), base: *base, coeff: *coeff, power: *power }
            }
            FieldSpec::Expr(src) => Field::Expr(Expr::parse(src, dim)?),
        })
    }
}

#[derive(Debug, Clone)]
pub enum Field {
    Constant(f64),
    Radial { center: Vec<f64>, base: f64, coeff: f64, power: f64 },
    Expr(Expr),
}

impl Field {
    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            Field::Constant(v) => *v,
            Field::Radial { center, base, coeff, power } => {
                let r2: f64 = x.iter().zip(center).map(|(a, c)| (a - c) * (a - c)).sum();
                base + coeff * r2.sqrt().powf(*power)
            }
            Field::Expr(e) => e.eval(x),
        }
    }

    pub fn sample(&self, g: GridDomain) -> Result<GridFunction> {
        Ok(GridFunction::sample(g, |x| self.eval(x))?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub origin: Vec<f64>,
    pub extent: Vec<f64>,
    pub nodes: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightSpec {
    pub mode: Phase,
    pub q_plus: FieldSpec,
    #[serde(default = "zero_field")]
    pub q_minus: FieldSpec,
}

fn zero_field() -> FieldSpec {
    FieldSpec::Constant(0.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Schedule {
    /// Fractions of the domain diameter, truncated at `h`.
    DiameterFractions,
    /// Halving from `start` down to `final_factor · h`.
    MeshScaled {
        start: f64,
        final_factor: f64,
    },
    Explicit(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverSpec {
    pub schedule: Schedule,
    #[serde(default = "default_max_outer")]
    pub max_outer: usize,
    #[serde(default = "default_grad_tol")]
    pub grad_tol: f64,
    /// `null` selects backtracking.
    #[serde(default)]
    pub fixed_step: Option<f64>,
}

fn default_max_outer() -> usize {
    400
}

fn default_grad_tol() -> f64 {
    1e-5
}

impl Default for SolverSpec {
    fn default() -> Self {
        SolverSpec {
            schedule: Schedule::MeshScaled { start: 0.4, final_factor: 2.0 },
            max_outer: default_max_outer(),
            grad_tol: default_grad_tol(),
            fixed_step: None,
        }
    }
}

impl SolverSpec {
    pub fn build(&self, g: &GridDomain) -> Result<SolveConfig> {
        let mut cfg = match &self.schedule {
            Schedule::DiameterFractions => SolveConfig::for_domain(g),
            Schedule::MeshScaled { start, final_factor } => {
                if !(*start > 0.0 && *final_factor >= 1.0) {
                    return Err(LabError::Config("mesh_scaled needs start > 0 and final_factor >= 1".into()));
                }
                SolveConfig::mesh_scaled(g, *start, *final_factor)
            }
            Schedule::Explicit(eps) => SolveConfig { epsilons: eps.clone(), ..SolveConfig::for_domain(g) },
        };
        cfg.max_outer = self.max_outer;
        cfg.grad_tol = self.grad_tol;
        cfg.step_rule = match self.fixed_step {
            Some(s) => StepRule::Fixed(s),
            None => StepRule::Backtracking,
        };
        cfg.validate(g)?;
        Ok(cfg)
    }
}

/// A ball of interest. With `snap` the center moves to the nearest point of
/// the computed zero set first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Target {
    pub center: Vec<f64>,
    pub radius: f64,
    #[serde(default)]
    pub snap: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaugeSpec {
    pub kappa: f64,
    pub alpha: f64,
}

impl Default for GaugeSpec {
    fn default() -> Self {
        GaugeSpec { kappa: 0.0, alpha: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceSpec {
    pub r_min: f64,
    pub r_max: f64,
    pub count: usize,
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlowupSpec {
    pub radii: Vec<f64>,
    pub window: f64,
    pub res: usize,
    /// Zero tolerance for the base point; defaults to `10 h`.
    #[serde(default)]
    pub zero_tol: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DiagnoseSpec {
    pub good_class: GoodClassParams,
    pub nondeg: NondegParams,
    pub k2: f64,
    pub gamma: f64,
    pub eta3: f64,
    pub zero_tol: Option<f64>,
    pub log_lip_samples: usize,
}

impl Default for DiagnoseSpec {
    fn default() -> Self {
        DiagnoseSpec {
            good_class: GoodClassParams { tau: 0.005, c0: 1.0, c1: 3.0, r0: 0.5 },
            nondeg: NondegParams { rho0: 0.5, lipschitz: 1.0, eta0: 0.1 },
            k2: 1.0,
            gamma: 0.1,
            eta3: 0.1,
            zero_tol: None,
            log_lip_samples: 256,
        }
    }
}

/// Oracles and tolerances for the verify pipeline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VerifySpec {
    /// Known solution, compared on the inner half of the domain.
    pub exact: Option<FieldSpec>,
    /// Relative sup-norm tolerance against `exact`.
    pub sup_tol: f64,
    /// Expected limit of the two-phase functional at the targets.
    pub phi_limit: Option<f64>,
    pub phi_tol: f64,
    /// Random bump competitors per target.
    pub bumps: usize,
    pub seed: u64,
    /// Radii fractions for harmonic-extension competitors.
    pub extension_fractions: Vec<f64>,
}

impl Default for VerifySpec {
    fn default() -> Self {
        VerifySpec {
            exact: None,
            sup_tol: 0.05,
            phi_limit: None,
            phi_tol: 0.05,
            bumps: 20,
            seed: 0,
            extension_fractions: vec![1.0, 0.75, 0.5],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub name: String,
    pub kind: Kind,
    pub grid: GridSpec,
    pub weights: WeightSpec,
    pub boundary: FieldSpec,
    #[serde(default)]
    pub solver: SolverSpec,
    #[serde(default)]
    pub targets: Vec<Target>,
    #[serde(default)]
    pub almost_min: GaugeSpec,
    #[serde(default)]
    pub diagnose: DiagnoseSpec,
    #[serde(default)]
    pub monotonicity: Option<TraceSpec>,
    #[serde(default)]
    pub blowup: Option<BlowupSpec>,
    #[serde(default)]
    pub verify: VerifySpec,
    /// Output directory; `FBLAB_OUT` or `--out` take precedence.
    #[serde(default)]
    pub output: Option<PathBuf>,
}

/// A validated configuration with its fields compiled.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub config: ExperimentConfig,
    pub domain: GridDomain,
    pub weights: WeightField,
    pub boundary: Field,
    pub solve: SolveConfig,
    pub gauge: AlmostMinParams,
    pub targets: Vec<Ball>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| LabError::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Parses expressions, builds the grid, weights and solver schedule.
    pub fn prepare(&self) -> Result<Prepared> {
        let g = &self.grid;
        let domain = GridDomain::new(&g.origin, &g.extent, &g.nodes)?;
        let dim = domain.dim();
        let qp = self.weights.q_plus.compile(dim)?.sample(domain)?;
        let qm = self.weights.q_minus.compile(dim)?.sample(domain)?;
        let weights = WeightField::new(qp, qm, self.weights.mode)?;
        let boundary = self.boundary.compile(dim)?;
        let solve = self.solver.build(&domain)?;
        let gauge = AlmostMinParams::new(self.almost_min.kappa, self.almost_min.alpha)?;
        let targets = self
            .targets
            .iter()
            .map(|t| {
                let b = Ball::new(&t.center, t.radius)?;
                domain.check_ball(&b)?;
                Ok(b)
            })
            .collect::<Result<Vec<_>>>()?;
        self.diagnose.good_class.validate()?;
        self.diagnose.nondeg.validate()?;
        if let Some(exact) = &self.verify.exact {
            exact.compile(dim)?;
        }
        if matches!(self.kind, Kind::Monotonicity) && self.monotonicity.is_none() {
            return Err(LabError::Config("monotonicity runs need a \"monotonicity\" section".into()));
        }
        if matches!(self.kind, Kind::Blowup) && self.blowup.is_none() {
            return Err(LabError::Config("blowup runs need a \"blowup\" section".into()));
        }
        Ok(Prepared { config: self.clone(), domain, weights, boundary, solve, gauge, targets })
    }
}

impl DiagnoseSpec {
    pub fn settings(&self, gauge: AlmostMinParams) -> DiagnoseSettings {
        DiagnoseSettings {
            good_class: self.good_class,
            almost_min: gauge,
            nondeg: self.nondeg,
            k2: self.k2,
            gamma: self.gamma,
            eta3: self.eta3,
            zero_tol: self.zero_tol,
            log_lip_samples: self.log_lip_samples,
        }
    }
}
