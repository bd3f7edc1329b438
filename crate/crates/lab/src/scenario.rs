//! Built-in experiments with known answers.

use freebound::functional::Phase;

use crate::config::*;
use crate::error::{LabError, Result};

pub const NAMES: [&str; 5] = ["plane-one-phase", "two-plane-acf", "harmonic-only", "holder-weights", "blowup-cone"];

fn square(n: usize) -> GridSpec {
    GridSpec { origin: vec![-1.0, -1.0], extent: vec![2.0, 2.0], nodes: vec![n, n] }
}

fn expr(s: &str) -> FieldSpec {
    FieldSpec::Expr(s.to_string())
}

fn base(name: &str, kind: Kind, nodes: usize, weights: WeightSpec, boundary: FieldSpec) -> ExperimentConfig {
    ExperimentConfig {
        name: name.to_string(),
        kind,
        grid: square(nodes),
        weights,
        boundary,
        solver: SolverSpec::default(),
        targets: Vec::new(),
        almost_min: GaugeSpec::default(),
        diagnose: DiagnoseSpec::default(),
        monotonicity: None,
        blowup: None,
        verify: VerifySpec::default(),
        output: None,
    }
}

fn ladder() -> Option<TraceSpec> {
    Some(TraceSpec { r_min: 0.1, r_max: 0.4, count: 8, delta: 0.05 })
}

/// Looks up a built-in scenario.
pub fn scenario(name: &str) -> Result<ExperimentConfig> {
    let cfg = match name {
        "plane-one-phase" => {
            let plane = expr("max(y, 0)");
            let mut c = base(
                name,
                Kind::Verify,
                129,
                WeightSpec {
                    mode: Phase::OnePhase,
                    q_plus: FieldSpec::Constant(1.0),
                    q_minus: FieldSpec::Constant(0.0),
                },
                plane.clone(),
            );
            c.targets = vec![Target { center: vec![0.0, 0.0], radius: 0.25, snap: true }];
            c.monotonicity = ladder();
            c.verify.exact = Some(plane);
            c
        }
        "two-plane-acf" => {
            // λ₊² − λ₋² = q₊² − q₋² with λ₊ = q₊ = √2, λ₋ = q₋ = 1
            let profile = expr("pow(2, 0.5) * max(y, 0) + min(y, 0)");
            let mut c = base(
                name,
                Kind::Verify,
                257,
                WeightSpec { mode: Phase::TwoPhase, q_plus: expr("pow(2, 0.5)"), q_minus: FieldSpec::Constant(1.0) },
                profile.clone(),
            );
            c.targets = vec![Target { center: vec![0.0, 0.0], radius: 0.4, snap: true }];
            c.monotonicity = ladder();
            c.verify.exact = Some(profile);
            c.verify.phi_limit = Some(std::f64::consts::PI * std::f64::consts::PI / 2.0);
            c
        }
        "harmonic-only" => {
            let h = expr("x*x - y*y + 0.5*x");
            let mut c = base(
                name,
                Kind::Verify,
                65,
                WeightSpec {
                    mode: Phase::TwoPhase,
                    q_plus: FieldSpec::Constant(0.0),
                    q_minus: FieldSpec::Constant(0.0),
                },
                h.clone(),
            );
            c.targets = vec![Target { center: vec![0.1, 0.2], radius: 0.3, snap: false }];
            c.verify.exact = Some(h);
            c
        }
        "holder-weights" => {
            let c0 = 0.3;
            // q₊² varies by at most 2 q_max c₀ r^{1/2} over a ball of radius r
            let q_max = 1.0 + c0 * 2f64.sqrt().sqrt();
            let mut c = base(
                name,
                Kind::Verify,
                129,
                WeightSpec {
                    mode: Phase::OnePhase,
                    q_plus: FieldSpec::Radial { center: vec![0.0, 0.0], base: 1.0, coeff: c0, power: 0.5 },
                    q_minus: FieldSpec::Constant(0.0),
                },
                expr("max(y, 0)"),
            );
            c.targets = vec![Target { center: vec![0.0, 0.0], radius: 0.25, snap: true }];
            c.almost_min = GaugeSpec { kappa: 4.0 * c0 * q_max, alpha: 0.5 };
            c
        }
        "blowup-cone" => {
            let cone = expr("1.5 * max(y, 0)");
            let mut c = base(
                name,
                Kind::Blowup,
                129,
                WeightSpec {
                    mode: Phase::OnePhase,
                    q_plus: FieldSpec::Constant(1.5),
                    q_minus: FieldSpec::Constant(0.0),
                },
                cone.clone(),
            );
            c.targets = vec![Target { center: vec![0.0, 0.0], radius: 0.25, snap: false }];
            c.blowup = Some(BlowupSpec { radii: vec![0.5, 0.25, 0.125, 0.0625], window: 1.0, res: 33, zero_tol: None });
            c.verify.exact = Some(cone);
            c
        }
        _ => {
            return Err(LabError::Config(format!("unknown scenario '{name}'; available: {}", NAMES.join(", "))));
        }
    };
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registry_round_trips_and_prepares() {
        for name in NAMES {
            let c = scenario(name).unwrap();
            assert_eq!(ExperimentConfig::from_json(&c.to_json()).unwrap(), c);
            c.prepare().unwrap();
        }
        match scenario("nope") {
            Err(LabError::Config(msg)) => assert!(NAMES.iter().all(|n| msg.contains(n))),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn two_plane_balance() {
        let c = scenario("two-plane-acf").unwrap().prepare().unwrap();
        let qp = c.weights.q_plus().values()[0];
        let qm = c.weights.q_minus().values()[0];
        let lp = c.boundary.eval(&[0.0, 1.0]);
        let lm = -c.boundary.eval(&[0.0, -1.0]);
        assert!((lp - 2f64.sqrt()).abs() < 1e-15 && lm == 1.0);
        assert!((lp * lp - lm * lm - (qp * qp - qm * qm)).abs() < 1e-12);
    }
}
