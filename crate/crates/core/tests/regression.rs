use episim_core::regression::{self, predict_poly};
use proptest::prelude::*;

#[test]
fn recovers_an_exact_quadratic() {
    let data: Vec<(f64, f64)> = (0..21)
        .map(|i| {
            let x = -3.0 + 0.3 * i as f64;
            (x, 2.0 + 3.0 * x - x * x)
        })
        .collect();
    let m = regression::fit_poly(&data, 2).unwrap();
    for (c, e) in m.coefficients.iter().zip([2.0, 3.0, -1.0]) {
        assert!((c - e).abs() < 1e-9, "{:?}", m.coefficients);
    }
}

fn noisy() -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((-3.0f64..3.0, -10.0f64..10.0), 8..40)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    // The residual is orthogonal to every column of the design matrix.
    #[test]
    fn residuals_are_orthogonal_to_the_design(data in noisy(), degree in 0usize..4) {
        let m = regression::fit_poly(&data, degree);
        prop_assume!(m.is_ok());
        let m = m.unwrap();
        for j in 0..=degree {
            let dot: f64 = data
                .iter()
                .map(|&(x, y)| (y - m.predict(x)) * x.powi(j as i32))
                .sum();
            let scale: f64 = data.iter().map(|&(x, y)| (y * x.powi(j as i32)).abs()).sum();
            prop_assert!(dot.abs() <= 1e-8 * scale.max(1.0), "degree {degree} column {j}: {dot}");
        }
    }

    #[test]
    fn rss_never_grows_with_degree(data in noisy()) {
        let rss: Vec<f64> = (0..4)
            .filter_map(|d| regression::fit_poly(&data, d).ok())
            .map(|m| m.rss)
            .collect();
        for w in rss.windows(2) {
            prop_assert!(w[1] <= w[0] * (1.0 + 1e-10) + 1e-10);
        }
    }

    #[test]
    fn row_order_does_not_matter(data in noisy(), shift in 1usize..7) {
        let m = regression::fit_poly(&data, 2);
        prop_assume!(m.is_ok());
        let mut rotated = data.clone();
        rotated.rotate_left(shift % data.len());
        rotated.reverse();
        let a = m.unwrap();
        let b = regression::fit_poly(&rotated, 2).unwrap();
        for x in [-2.0, 0.0, 1.5] {
            let (pa, pb) = (predict_poly(&a.coefficients, x), predict_poly(&b.coefficients, x));
            prop_assert!((pa - pb).abs() <= 1e-8 * pa.abs().max(1.0));
        }
    }
}
