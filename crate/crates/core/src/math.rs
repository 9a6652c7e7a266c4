/// `base^exp` for population-like quantities: non-positive bases count as an
/// empty compartment and give 0 for positive exponents instead of NaN.
#[inline]
pub(crate) fn pow_nonneg(base: f64, exp: f64) -> f64 {
    if base <= 0.0 {
        if exp == 0.0 {
            1.0
        } else {
            0.0
        }
    } else if exp == 1.0 {
        base
    } else {
        libm::pow(base, exp)
    }
}

#[inline]
pub(crate) fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

#[inline]
pub(crate) fn tanh(x: f64) -> f64 {
    libm::tanh(x)
}

#[inline]
pub(crate) fn pow(base: f64, exp: f64) -> f64 {
    libm::pow(base, exp)
}

#[inline]
pub(crate) fn round(x: f64) -> f64 {
    libm::round(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_base_gives_zero() {
        assert_eq!(pow_nonneg(0.0, 0.7), 0.0);
        assert_eq!(pow_nonneg(-1e-12, 0.8), 0.0);
        assert_eq!(pow_nonneg(0.0, 0.0), 1.0);
        assert!((pow_nonneg(32.0, 0.2) - 2.0).abs() < 1e-15);
    }
}
