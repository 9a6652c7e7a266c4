//! Polynomial least squares, solved with a Householder QR factorization of
//! the Vandermonde matrix.

use alloc::vec;
use alloc::vec::Vec;

use thiserror::Error;

use crate::math::sqrt;

#[derive(Clone, Debug, Error, PartialEq)]
pub enum RegressionError {
    #[error("degree {degree} needs more than {degree} distinct x values, got {distinct}")]
    RankDeficient { degree: usize, distinct: usize },
    #[error("data contains non-finite values")]
    NonFinite,
}

/// `y = c[0] + c[1] x + ... + c[d] x^d`.
#[derive(Clone, Debug, PartialEq)]
pub struct PolyModel {
    pub coefficients: Vec<f64>,
    /// Residual sum of squares on the fitted data.
    pub rss: f64,
}

impl PolyModel {
    pub fn degree(&self) -> usize {
        self.coefficients.len().saturating_sub(1)
    }

    /// Horner evaluation.
    pub fn predict(&self, x: f64) -> f64 {
        predict_poly(&self.coefficients, x)
    }
}

pub fn predict_poly(coefficients: &[f64], x: f64) -> f64 {
    coefficients.iter().rev().fold(0.0, |acc, c| acc * x + c)
}

fn distinct_x(data: &[(f64, f64)]) -> usize {
    let mut xs: Vec<f64> = data.iter().map(|p| p.0).collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    xs.len()
}

/// Least-squares polynomial of the given degree through `(x, y)` pairs.
pub fn fit_poly(data: &[(f64, f64)], degree: usize) -> Result<PolyModel, RegressionError> {
    if data.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
        return Err(RegressionError::NonFinite);
    }
    let distinct = distinct_x(data);
    if distinct <= degree {
        return Err(RegressionError::RankDeficient { degree, distinct });
    }
    let n = data.len();
    let m = degree + 1;
    // column-major Vandermonde
    let mut a = vec![0.0; n * m];
    for (i, &(x, _)) in data.iter().enumerate() {
        let mut p = 1.0;
        for j in 0..m {
            a[j * n + i] = p;
            p *= x;
        }
    }
    let mut b: Vec<f64> = data.iter().map(|p| p.1).collect();

    for j in 0..m {
        let col = &mut a[j * n..(j + 1) * n];
        let norm = sqrt(col[j..].iter().map(|v| v * v).sum());
        if norm == 0.0 {
            return Err(RegressionError::RankDeficient { degree, distinct });
        }
        let alpha = if col[j] > 0.0 { -norm } else { norm };
        // v = x - alpha e_j, stored in place
        col[j] -= alpha;
        let vnorm2: f64 = col[j..].iter().map(|v| v * v).sum();
        let v: Vec<f64> = col[j..].to_vec();
        col[j] = alpha;
        col[j + 1..].iter_mut().for_each(|c| *c = 0.0);
        for k in j + 1..m {
            let ck = &mut a[k * n..(k + 1) * n];
            let dot: f64 = v.iter().zip(&ck[j..]).map(|(p, q)| p * q).sum();
            let f = 2.0 * dot / vnorm2;
            for (c, vi) in ck[j..].iter_mut().zip(&v) {
                *c -= f * vi;
            }
        }
        let dot: f64 = v.iter().zip(&b[j..]).map(|(p, q)| p * q).sum();
        let f = 2.0 * dot / vnorm2;
        for (c, vi) in b[j..].iter_mut().zip(&v) {
            *c -= f * vi;
        }
    }

    let mut coefficients = vec![0.0; m];
    for j in (0..m).rev() {
        let mut s = b[j];
        for k in j + 1..m {
            s -= a[k * n + j] * coefficients[k];
        }
        coefficients[j] = s / a[j * n + j];
    }
    let rss = data
        .iter()
        .map(|&(x, y)| {
            let r = y - predict_poly(&coefficients, x);
            r * r
        })
        .sum();
    Ok(PolyModel { coefficients, rss })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_line() {
        let m = fit_poly(&[(0.0, 0.0), (1.0, 1.0), (2.0, 2.0)], 1).unwrap();
        assert!(m.coefficients[0].abs() < 1e-14);
        assert!((m.coefficients[1] - 1.0).abs() < 1e-14);
        assert!(m.rss < 1e-28);
    }

    #[test]
    fn exact_parabola_through_three_points() {
        let m = fit_poly(&[(0.0, 1.0), (1.0, 2.0), (2.0, 5.0)], 2).unwrap();
        for (c, e) in m.coefficients.iter().zip([1.0, 0.0, 1.0]) {
            assert!((c - e).abs() < 1e-13, "{:?}", m.coefficients);
        }
        assert!((m.predict(3.0) - 10.0).abs() < 1e-12);
    }

    #[test]
    fn horner_examples() {
        assert_eq!(predict_poly(&[1.0, 0.0, 1.0], 3.0), 10.0);
        assert_eq!(predict_poly(&[4.5], -100.0), 4.5);
        assert_eq!(predict_poly(&[0.0, 1.0], 7.25), 7.25);
    }

    #[test]
    fn rank_deficiency() {
        let data = [(1.0, 2.0), (1.0, 3.0), (2.0, 1.0)];
        assert_eq!(
            fit_poly(&data, 2).unwrap_err(),
            RegressionError::RankDeficient {
                degree: 2,
                distinct: 2
            }
        );
        assert!(fit_poly(&data, 1).is_ok());
        assert!(fit_poly(&[], 0).is_err());
    }

    #[test]
    fn degree_zero_is_the_mean() {
        let m = fit_poly(&[(0.0, 1.0), (5.0, 2.0), (9.0, 6.0)], 0).unwrap();
        assert!((m.coefficients[0] - 3.0).abs() < 1e-14);
    }
}
