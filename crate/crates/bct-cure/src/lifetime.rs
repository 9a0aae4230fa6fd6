//! Two-parameter Weibull lifetime distribution in the `(gamma1, gamma2)`
//! parameterization:
//!
//! ```text
//! F(y) = 1 - exp{-(gamma2 * y)^(1/gamma1)}
//! f(y) = 1/(gamma1 * y) * (gamma2 * y)^(1/gamma1) * {1 - F(y)}
//! ```
//!
//! so `1/gamma1` is the usual Weibull shape and `1/gamma2` the scale.

use crate::error::{Error, Result};
use statrs::function::gamma::ln_gamma;

/// Parameters `(gamma1, gamma2)` of the Weibull lifetime distribution.
///
/// Both components are strictly positive; `gamma2` has units 1/time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeibullParams {
    gamma1: f64,
    gamma2: f64,
}

impl WeibullParams {
    pub fn new(gamma1: f64, gamma2: f64) -> Result<Self> {
        if !(gamma1.is_finite() && gamma1 > 0.0) {
            return Err(Error::Domain(format!("gamma1 must be positive, got {gamma1}")));
        }
        if !(gamma2.is_finite() && gamma2 > 0.0) {
            return Err(Error::Domain(format!("gamma2 must be positive, got {gamma2}")));
        }
        Ok(Self { gamma1, gamma2 })
    }

    pub fn gamma1(&self) -> f64 {
        self.gamma1
    }

    pub fn gamma2(&self) -> f64 {
        self.gamma2
    }

    /// Distribution mean `Gamma(1 + gamma1) / gamma2`.
    pub fn mean(&self) -> f64 {
        ln_gamma(1.0 + self.gamma1).exp() / self.gamma2
    }

    /// Distribution variance `[Gamma(1 + 2 gamma1) - Gamma(1 + gamma1)^2] / gamma2^2`.
    pub fn variance(&self) -> f64 {
        let g1 = ln_gamma(1.0 + self.gamma1).exp();
        let g2 = ln_gamma(1.0 + 2.0 * self.gamma1).exp();
        (g2 - g1 * g1) / (self.gamma2 * self.gamma2)
    }
}

/// `(gamma2 * y)^(1/gamma1)` for `y > 0`, the Weibull cumulative hazard.
#[inline]
pub(crate) fn cumulative_hazard(y: f64, params: &WeibullParams) -> f64 {
    ((params.gamma2 * y).ln() / params.gamma1).exp()
}

/// Survival `1 - F(y)`, exact at both tails.
pub fn weibull_survival(y: f64, params: &WeibullParams) -> Result<f64> {
    if !(y >= 0.0) {
        return Err(Error::Domain(format!("survival requires y >= 0, got {y}")));
    }
    if y == 0.0 {
        return Ok(1.0);
    }
    Ok((-cumulative_hazard(y, params)).exp())
}

/// Distribution function `F(y) = 1 - exp{-(gamma2 y)^(1/gamma1)}`.
pub fn weibull_cdf(y: f64, params: &WeibullParams) -> Result<f64> {
    if !(y >= 0.0) {
        return Err(Error::Domain(format!("cdf requires y >= 0, got {y}")));
    }
    if y == 0.0 {
        return Ok(0.0);
    }
    Ok(-(-cumulative_hazard(y, params)).exp_m1())
}

/// Density `f(y) = 1/(gamma1 y) (gamma2 y)^(1/gamma1) {1 - F(y)}` for `y > 0`.
pub fn weibull_pdf(y: f64, params: &WeibullParams) -> Result<f64> {
    if !(y > 0.0) {
        return Err(Error::Domain(format!("pdf requires y > 0, got {y}")));
    }
    let z = cumulative_hazard(y, params);
    Ok(z * (-z).exp() / (params.gamma1 * y))
}

/// Quantile `F^{-1}(u) = (1/gamma2) * (-log(1-u))^gamma1` for `u` in `[0, 1)`.
pub fn weibull_quantile(u: f64, params: &WeibullParams) -> Result<f64> {
    if !(0.0..1.0).contains(&u) {
        return Err(Error::Domain(format!(
            "quantile requires u in [0,1), got {u}"
        )));
    }
    if u == 0.0 {
        return Ok(0.0);
    }
    let neg_log_sf = -(-u).ln_1p(); // -log(1-u)
    Ok((params.gamma1 * neg_log_sf.ln()).exp() / params.gamma2)
}

/// Coefficient-of-variation squared as a function of `gamma1` alone:
/// `Gamma(1 + 2 g1) / Gamma(1 + g1)^2 - 1`. Monotone increasing in `gamma1`.
fn cv_squared(gamma1: f64) -> f64 {
    (ln_gamma(1.0 + 2.0 * gamma1) - 2.0 * ln_gamma(1.0 + gamma1)).exp() - 1.0
}

/// Solve `(gamma1, gamma2)` so the distribution mean and variance match the
/// sample moments.
///
/// The squared coefficient of variation depends on `gamma1` only, so a
/// bisection on `gamma1` over `[1e-6, 50]` (tolerance 1e-10) reduces the
/// problem to one dimension; `gamma2` then follows from the mean equation.
pub fn weibull_moment_match(sample_mean: f64, sample_var: f64) -> Result<WeibullParams> {
    if !(sample_mean.is_finite() && sample_mean > 0.0) {
        return Err(Error::Domain(format!(
            "moment match requires mean > 0, got {sample_mean}"
        )));
    }
    if !(sample_var.is_finite() && sample_var > 0.0) {
        return Err(Error::Domain(format!(
            "moment match requires variance > 0, got {sample_var}"
        )));
    }
    let target = sample_var / (sample_mean * sample_mean);

    let (mut lo, mut hi) = (1e-6, 50.0);
    let f_lo = cv_squared(lo) - target;
    let f_hi = cv_squared(hi) - target;
    if f_lo > 0.0 || f_hi < 0.0 {
        return Err(Error::NoConvergence(format!(
            "CV^2 target {target:.6e} outside the bracket [{:.3e}, {:.3e}]",
            cv_squared(lo),
            cv_squared(hi)
        )));
    }
    while hi - lo > 1e-10 {
        let mid = 0.5 * (lo + hi);
        if cv_squared(mid) - target <= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let gamma1 = 0.5 * (lo + hi);
    let gamma2 = ln_gamma(1.0 + gamma1).exp() / sample_mean;
    WeibullParams::new(gamma1, gamma2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn table_params() -> WeibullParams {
        WeibullParams::new(0.316, 0.179).unwrap()
    }

    #[test]
    fn rejects_invalid_params() {
        assert!(WeibullParams::new(0.0, 1.0).is_err());
        assert!(WeibullParams::new(1.0, -1.0).is_err());
        assert!(WeibullParams::new(f64::NAN, 1.0).is_err());
    }

    #[test]
    fn cdf_examples() {
        let p = table_params();
        assert_eq!(weibull_cdf(0.0, &p).unwrap(), 0.0);
        // (gamma2 * y) = 1 makes the value 1 - 1/e regardless of gamma1.
        assert_relative_eq!(
            weibull_cdf(1.0 / 0.179, &p).unwrap(),
            1.0 - (-1.0f64).exp(),
            epsilon = 1e-14
        );
        // Direct arithmetic oracle: 1 - exp{-(0.895)^(1/0.316)}.
        assert_relative_eq!(
            weibull_cdf(5.0, &p).unwrap(),
            0.5053718884727174,
            epsilon = 1e-14
        );
        assert!(weibull_cdf(-1.0, &p).is_err());
    }

    #[test]
    fn pdf_examples() {
        let p = table_params();
        // Direct arithmetic oracle: (0.179/0.316) * exp(-1).
        assert_relative_eq!(
            weibull_pdf(1.0 / 0.179, &p).unwrap(),
            0.20838740496736764,
            epsilon = 1e-14
        );
        // gamma1 = 1 reduces to the exponential density c * exp(-c y).
        let expo = WeibullParams::new(1.0, 0.7).unwrap();
        for &y in &[0.1, 1.0, 3.5] {
            assert_relative_eq!(
                weibull_pdf(y, &expo).unwrap(),
                0.7 * (-0.7 * y).exp(),
                epsilon = 1e-14
            );
        }
        assert!(weibull_pdf(0.0, &p).is_err());
    }

    #[test]
    fn pdf_integrates_to_one() {
        // Midpoint quadrature on the quantile scale: integral of f over
        // (0, inf) equals integral of 1 du over (0,1).
        let p = table_params();
        let n = 20_000;
        let mut total = 0.0;
        let mut prev_t = 0.0;
        for i in 1..=n {
            let u = i as f64 / (n as f64 + 1.0);
            let t = weibull_quantile(u, &p).unwrap();
            let mid = 0.5 * (prev_t + t);
            if mid > 0.0 {
                total += weibull_pdf(mid, &p).unwrap() * (t - prev_t);
            }
            prev_t = t;
        }
        // Tail beyond the last node has mass ~1/(n+1).
        assert!((total - 1.0).abs() < 2e-3, "integral was {total}");
    }

    #[test]
    fn quantile_examples() {
        let p = table_params();
        assert_eq!(weibull_quantile(0.0, &p).unwrap(), 0.0);
        assert_relative_eq!(
            weibull_quantile(1.0 - (-1.0f64).exp(), &p).unwrap(),
            1.0 / 0.179,
            epsilon = 1e-12
        );
        // Arithmetic oracle: (1/0.179) * (log 2)^0.316.
        assert_relative_eq!(
            weibull_quantile(0.5, &p).unwrap(),
            4.975626987149938,
            epsilon = 1e-14
        );
        assert!(weibull_quantile(1.0, &p).is_err());
        assert!(weibull_quantile(-0.1, &p).is_err());
    }

    #[test]
    fn quantile_is_inverse_of_cdf() {
        let p = table_params();
        for i in 1..=99 {
            let u = i as f64 / 100.0;
            let y = weibull_quantile(u, &p).unwrap();
            assert!((weibull_cdf(y, &p).unwrap() - u).abs() < 1e-10);
        }
    }

    #[test]
    fn cdf_tail_and_monotonicity() {
        let p = table_params();
        assert!(weibull_cdf(1e10 / 0.179, &p).unwrap() > 1.0 - 1e-9);
        let mut prev = 0.0;
        for i in 0..200 {
            let y = 1e-3 * (1.1f64).powi(i);
            let v = weibull_cdf(y, &p).unwrap();
            assert!(v >= prev);
            prev = v;
        }
    }

    #[test]
    fn central_difference_of_cdf_matches_pdf() {
        // dF/dy by central differences. Difference whichever of F and S
        // carries full relative precision at the point (F below the median,
        // S above); differencing the other side cancels below f64
        // resolution at the tails. Deep in the upper tail both sides
        // underflow; skip those points.
        let p = table_params();
        let lo: f64 = 1e-3 / 0.179;
        let hi: f64 = 10.0 / 0.179;
        for i in 0..=60 {
            let y = lo * (hi / lo).powf(i as f64 / 60.0);
            let h = y * 1e-6;
            let pdf = weibull_pdf(y, &p).unwrap();
            if pdf < 1e-250 {
                continue;
            }
            let deriv = if weibull_cdf(y, &p).unwrap() < 0.5 {
                (weibull_cdf(y + h, &p).unwrap() - weibull_cdf(y - h, &p).unwrap()) / (2.0 * h)
            } else {
                (weibull_survival(y - h, &p).unwrap() - weibull_survival(y + h, &p).unwrap())
                    / (2.0 * h)
            };
            assert_relative_eq!(deriv, pdf, max_relative = 1e-6);
        }
    }

    #[test]
    fn moment_match_exponential_case() {
        // CV = 1 means gamma1 = 1 (exponential) and gamma2 = rate.
        let c = 2.5;
        let p = weibull_moment_match(1.0 / c, 1.0 / (c * c)).unwrap();
        assert_relative_eq!(p.gamma1(), 1.0, epsilon = 1e-8);
        assert_relative_eq!(p.gamma2(), c, epsilon = 1e-8);
    }

    #[test]
    fn moment_match_round_trips() {
        for &g1 in &[0.1, 0.316, 1.0, 2.0] {
            for &g2 in &[0.1, 0.179, 1.0] {
                let p = WeibullParams::new(g1, g2).unwrap();
                let fitted = weibull_moment_match(p.mean(), p.variance()).unwrap();
                assert_relative_eq!(fitted.gamma1(), g1, max_relative = 1e-6);
                assert_relative_eq!(fitted.gamma2(), g2, max_relative = 1e-6);
            }
        }
    }

    #[test]
    fn moment_match_small_cv_limit() {
        let p = weibull_moment_match(1.0, 1e-4).unwrap(); // CV = 0.01
        assert!(p.gamma1() < 0.05, "gamma1 = {}", p.gamma1());
    }

    #[test]
    fn moment_match_rejects_unreachable_cv() {
        assert!(weibull_moment_match(1.0, 0.0).is_err());
        // CV far above the gamma1 = 50 bound.
        assert!(weibull_moment_match(1.0, 1e60).is_err());
    }

    proptest! {
        #[test]
        fn quantile_cdf_identity(u in 0.001f64..0.999, g1 in 0.05f64..4.0, g2 in 0.05f64..4.0) {
            let p = WeibullParams::new(g1, g2).unwrap();
            let y = weibull_quantile(u, &p).unwrap();
            let back = weibull_cdf(y, &p).unwrap();
            prop_assert!((back - u).abs() < 1e-10);
        }

        #[test]
        fn survival_complements_cdf(y in 1e-6f64..1e3, g1 in 0.05f64..4.0, g2 in 0.05f64..4.0) {
            let p = WeibullParams::new(g1, g2).unwrap();
            let f = weibull_cdf(y, &p).unwrap();
            let s = weibull_survival(y, &p).unwrap();
            prop_assert!((f + s - 1.0).abs() < 1e-12);
        }
    }
}
