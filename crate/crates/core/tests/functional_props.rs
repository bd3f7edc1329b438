use freebound::functional::{
    bump, competitor_radial_cutoff, competitor_scale, defect, energy, functional_j, linear_bracket_pointwise,
    measure_term, scaling_brackets, AlmostMinParams, Phase, Sign, WeightField,
};
use freebound::lattice::{point, Ball, GridDomain, GridFunction};
use proptest::prelude::*;

fn square(n: usize) -> GridDomain {
    GridDomain::new(&[-1.0, -1.0], &[2.0, 2.0], &[n, n]).unwrap()
}

fn wavy(g: GridDomain, a: f64, b: f64, c: f64) -> GridFunction {
    GridFunction::sample(g, |x| a * x[1] + b * (2.0 * x[0]).sin() * x[1] + c * (x[0] * x[0] - 0.2)).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn j_is_additive(a in -2.0f64..2.0, b in -1.0f64..1.0, c in -1.0f64..1.0, qp in 0.0f64..3.0, qm in 0.0f64..3.0) {
        let g = square(25);
        let u = wavy(g, a, b, c);
        let w = WeightField::constant(g, qp, qm, Phase::TwoPhase).unwrap();
        let ball = Ball::new(&[0.05, -0.1], 0.7).unwrap();
        let sum = energy(&u, &ball).unwrap()
            + measure_term(&u, &w, &ball, Sign::Plus).unwrap()
            + measure_term(&u, &w, &ball, Sign::Minus).unwrap();
        prop_assert_eq!(functional_j(&u, &w, &ball).unwrap(), sum);
    }

    #[test]
    fn measure_monotone_in_weight(a in -2.0f64..2.0, c in -1.0f64..1.0, base in 0.0f64..2.0, bumpy in 0.0f64..1.0) {
        let g = square(25);
        let u = wavy(g, a, 0.3, c);
        let q = GridFunction::sample(g, |x| base + 0.5 * x[0].abs()).unwrap();
        let q2 = GridFunction::sample(g, |x| base + 0.5 * x[0].abs() + bumpy * (1.0 + x[1]).max(0.0)).unwrap();
        let w = WeightField::new(q.clone(), q.clone(), Phase::TwoPhase).unwrap();
        let w2 = WeightField::new(q2.clone(), q2, Phase::TwoPhase).unwrap();
        let ball = Ball::new(&[0.0, 0.0], 0.8).unwrap();
        for s in [Sign::Plus, Sign::Minus] {
            prop_assert!(measure_term(&u, &w, &ball, s).unwrap() <= measure_term(&u, &w2, &ball, s).unwrap());
        }
    }

    #[test]
    fn self_defect_is_gauge(kappa in 0.0f64..5.0, alpha in 0.05f64..1.0, r in 0.1f64..0.9, a in -2.0f64..2.0) {
        let g = square(21);
        let u = wavy(g, a, 0.2, 0.1);
        let w = WeightField::constant(g, 1.0, 0.5, Phase::TwoPhase).unwrap();
        let p = AlmostMinParams::new(kappa, alpha).unwrap();
        let ball = Ball::new(&[0.0, 0.0], r).unwrap();
        let j = functional_j(&u, &w, &ball).unwrap();
        prop_assert_eq!(defect(&u, &u, &w, &p, &ball).unwrap(), -(p.gauge(r) * j));
    }

    #[test]
    fn scaling_expansion_matches_competitor(lambda in -0.4f64..0.4, a in 0.2f64..2.0) {
        let g = square(41);
        let u = wavy(g, a, 0.4, 0.15);
        let ball = Ball::new(&[0.0, 0.0], 0.6).unwrap();
        let phi = competitor_radial_cutoff(&g, &ball, 0.5).unwrap();
        for s in [Sign::Plus, Sign::Minus] {
            let br = scaling_brackets(&u, &phi, &ball, s).unwrap();
            let v = competitor_scale(&u, &ball, lambda, &phi, s).unwrap();
            let part = v.map(|x| s.part(x)).unwrap();
            let ev = energy(&part, &ball).unwrap();
            let pred = br.base + 2.0 * lambda * br.linear + lambda * lambda * br.quadratic;
            prop_assert!((ev - pred).abs() <= 1e-10 * (1.0 + ev.abs()));
        }
    }
}

#[test]
fn linear_bracket_two_ways() {
    // the lattice bilinear form and the pointwise product rule agree up to O(h)
    let mut errs = Vec::new();
    for n in [65usize, 129] {
        let g = square(n);
        let u = wavy(g, 1.0, 0.4, 0.15);
        let ball = Ball::new(&[0.0, 0.0], 0.6).unwrap();
        let phi = bump(&g, &point(&[0.0, 0.0]), 0.5, 1.0).unwrap();
        let br = scaling_brackets(&u, &phi, &ball, Sign::Plus).unwrap();
        let pw = linear_bracket_pointwise(&u, &phi, &ball, Sign::Plus).unwrap();
        errs.push((br.linear - pw).abs() / br.linear.abs());
    }
    assert!(errs[0] < 0.02 && errs[1] < 0.01, "{errs:?}");
    assert!(errs[1] < errs[0]);
}
