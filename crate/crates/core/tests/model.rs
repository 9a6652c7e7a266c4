use episim_core::model::{self, ControlSpec, ModelParams, RecoverySpec, State, TransformedState};
use proptest::prelude::*;

fn sublinear(m1: f64, m2: f64) -> ModelParams {
    ModelParams {
        m1,
        m2,
        ..ModelParams::model2(1.0)
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

proptest! {
    #[test]
    fn transform_round_trip(
        m1 in 0.5f64..0.99, m2 in 0.5f64..0.99,
        x1 in 1e-3f64..1e5, x2 in 1e-3f64..1e5,
    ) {
        let p = sublinear(m1, m2);
        let u = model::to_transformed(State::new(x1, x2), &p).unwrap();
        let back = model::from_transformed(u, &p).unwrap();
        prop_assert!(rel(back.x1, x1) < 1e-10);
        prop_assert!(rel(back.x2, x2) < 1e-10);
    }

    // u_k' = (1 - m_k) x_k^(-m_k) x_k'
    #[test]
    fn transformed_field_obeys_chain_rule(
        m1 in 0.5f64..0.95, m2 in 0.5f64..0.95,
        x1 in 1e-1f64..1e4, x2 in 1e-1f64..1e4,
    ) {
        let p = sublinear(m1, m2);
        let s = State::new(x1, x2);
        let d = model::rhs(&p, s).unwrap();
        let u = model::to_transformed(s, &p).unwrap();
        let du = model::transformed_rhs(&p, u).unwrap();
        let e1 = (1.0 - m1) * x1.powf(-m1) * d.d1;
        let e2 = (1.0 - m2) * x2.powf(-m2) * d.d2;
        prop_assert!((du.d1 - e1).abs() <= 1e-8 * e1.abs().max(1e-12), "{} vs {}", du.d1, e1);
        prop_assert!((du.d2 - e2).abs() <= 1e-8 * e2.abs().max(1e-12), "{} vs {}", du.d2, e2);
    }

    #[test]
    fn rate_increases_in_both_counts(
        m1 in 0.5f64..2.0, m2 in 0.5f64..2.0,
        x1 in 1e-2f64..1e4, x2 in 1e-2f64..1e4, f in 1.001f64..3.0,
    ) {
        let p = ModelParams { m1, m2, ..ModelParams::model1() };
        let r = model::rate_of_spread(&p, State::new(x1, x2));
        prop_assert!(r > 0.0);
        prop_assert!(model::rate_of_spread(&p, State::new(x1 * f, x2)) > r);
        prop_assert!(model::rate_of_spread(&p, State::new(x1, x2 * f)) > r);
    }

    #[test]
    fn admissibility_is_exactly_the_parameter_box(
        beta in -1.0f64..1.0, gamma in -1.0f64..1.0,
        m1 in 0.0f64..1.5, m2 in 0.0f64..1.5,
    ) {
        let p = ModelParams { beta, gamma, m1, m2, ..ModelParams::model1() };
        let expected = beta > 0.0 && gamma >= 0.0 && m1 >= 0.5 && m2 >= 0.5;
        prop_assert_eq!(model::validate_params(&p).is_admissible(), expected);
    }
}

#[test]
fn saturating_control_and_power_recovery_shapes() {
    let s = ControlSpec::Saturating { p: 0.4, v: 1.0 };
    let r = RecoverySpec::PowerLaw { q: 1.2 };
    assert_eq!(s.eval(0.0), 0.0);
    assert_eq!(r.eval(0.0), 0.0);
    let grid: Vec<f64> = (1..=400).map(|i| 0.05 * i as f64 * i as f64).collect();
    for w in grid.windows(2) {
        assert!(s.eval(w[1]) > s.eval(w[0]));
        assert!(s.eval(w[1]) < 1.0);
        assert!(r.eval(w[1]) > r.eval(w[0]));
    }
    assert_eq!(RecoverySpec::Linear.eval(3.5), 3.5);
    assert_eq!(ControlSpec::Constant { u: 10.0 }.eval(0.0), 10.0);
}

#[test]
fn boundary_exponent_is_admissible_and_transformable() {
    let p = sublinear(0.5, 0.5);
    assert!(model::validate_params(&p).is_admissible());
    let u = TransformedState { u1: 3.0, u2: 2.0 };
    let x = model::from_transformed(u, &p).unwrap();
    assert_eq!((x.x1, x.x2), (9.0, 4.0));
    assert!(model::transformed_rhs(&p, u).is_ok());
    assert!(model::transformed_rhs(&sublinear(0.49, 0.7), u).is_err());
}
