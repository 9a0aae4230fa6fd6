//! The BCT cure rate model: Box-Cox transform, covariate link, population
//! survival and density, cure rate, and the censored-data log-likelihood.
//!
//! All interior computations run in log space; values are exponentiated only
//! at the API boundary. The `alpha = 0` (promotion-time) formulas are used
//! whenever `alpha < ALPHA_ZERO_THRESHOLD`; continuity of the power form as
//! `alpha -> 0` makes the switch seamless.

use crate::error::{Error, Result};
use crate::lifetime::{cumulative_hazard, WeibullParams};
use crate::numeric::sigmoid_parts;

/// Below this, `alpha` is treated as exactly zero.
pub const ALPHA_ZERO_THRESHOLD: f64 = 1e-12;

/// Full model parameter state `theta = (beta, gamma, alpha)`.
///
/// `beta[0]` is the intercept; the model prepends an implicit 1 to every
/// covariate vector. The flat view used by the optimizer is ordered
/// `(beta_0, ..., beta_{p-1}, gamma1, gamma2, alpha)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterVector {
    pub beta: Vec<f64>,
    pub gamma: WeibullParams,
    pub alpha: f64,
}

impl ParameterVector {
    pub fn new(beta: Vec<f64>, gamma: WeibullParams, alpha: f64) -> Result<Self> {
        if beta.is_empty() {
            return Err(Error::Domain("beta must contain the intercept".into()));
        }
        if beta.iter().any(|b| !b.is_finite()) {
            return Err(Error::Domain("beta entries must be finite".into()));
        }
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::Domain(format!("alpha must lie in [0,1], got {alpha}")));
        }
        Ok(Self { beta, gamma, alpha })
    }

    /// Dimension `p + q + 1` of the flat view (`q = 2` Weibull parameters).
    pub fn dim(&self) -> usize {
        self.beta.len() + 3
    }

    pub fn to_flat(&self) -> Vec<f64> {
        let mut flat = self.beta.clone();
        flat.push(self.gamma.gamma1());
        flat.push(self.gamma.gamma2());
        flat.push(self.alpha);
        flat
    }

    /// Rebuild from a flat vector of dimension `p + 3`.
    pub fn from_flat(flat: &[f64]) -> Result<Self> {
        if flat.len() < 4 {
            return Err(Error::Domain(format!(
                "flat parameter vector needs at least 4 entries, got {}",
                flat.len()
            )));
        }
        let p = flat.len() - 3;
        let gamma = WeibullParams::new(flat[p], flat[p + 1])?;
        Self::new(flat[..p].to_vec(), gamma, flat[p + 2])
    }
}

/// One right-censored survival record. `event` is true when the event time
/// was observed and false when the observation is right-censored at `y`.
/// `x` holds the covariates without the intercept column.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub y: f64,
    pub event: bool,
    pub x: Vec<f64>,
}

/// A nonempty collection of observations with a homogeneous covariate layout.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    records: Vec<Observation>,
    covariate_names: Vec<String>,
}

impl Dataset {
    pub fn new(records: Vec<Observation>, covariate_names: Vec<String>) -> Result<Self> {
        if records.is_empty() {
            return Err(Error::Data("dataset must be nonempty".into()));
        }
        let dim = covariate_names.len();
        for (i, rec) in records.iter().enumerate() {
            if !(rec.y.is_finite() && rec.y >= 0.0) {
                return Err(Error::Data(format!(
                    "record {i}: y must be finite and >= 0, got {}",
                    rec.y
                )));
            }
            if rec.x.len() != dim {
                return Err(Error::Data(format!(
                    "record {i}: expected {dim} covariates, got {}",
                    rec.x.len()
                )));
            }
            if rec.x.iter().any(|v| !v.is_finite()) {
                return Err(Error::Data(format!("record {i}: covariates must be finite")));
            }
        }
        Ok(Self {
            records,
            covariate_names,
        })
    }

    pub fn records(&self) -> &[Observation] {
        &self.records
    }

    pub fn covariate_names(&self) -> &[String] {
        &self.covariate_names
    }

    pub fn covariate_dim(&self) -> usize {
        self.covariate_names.len()
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        false // nonempty by construction
    }

    /// Fraction of right-censored records.
    pub fn censoring_fraction(&self) -> f64 {
        self.records.iter().filter(|r| !r.event).count() as f64 / self.len() as f64
    }

    /// Subset of records satisfying `keep`; errors if the subset is empty.
    pub fn filter(&self, keep: impl Fn(&Observation) -> bool) -> Result<Dataset> {
        let records: Vec<Observation> = self.records.iter().filter(|r| keep(r)).cloned().collect();
        if records.is_empty() {
            return Err(Error::DegenerateData("filter selected no records".into()));
        }
        Dataset::new(records, self.covariate_names.clone())
    }

    /// Sorted distinct values of the single covariate column.
    pub fn distinct_covariate_values(&self) -> Result<Vec<f64>> {
        if self.covariate_dim() != 1 {
            return Err(Error::Data(format!(
                "expected a single covariate column, found {}",
                self.covariate_dim()
            )));
        }
        let mut values: Vec<f64> = self.records.iter().map(|r| r.x[0]).collect();
        values.sort_by(|a, b| a.partial_cmp(b).unwrap());
        values.dedup();
        Ok(values)
    }
}

/// Report labels for the flat parameter layout with `p` regression
/// coefficients: `beta0..beta{p-1}, gamma1, gamma2, alpha`.
pub fn parameter_names(p: usize) -> Vec<String> {
    let mut names: Vec<String> = (0..p).map(|i| format!("beta{i}")).collect();
    names.extend(["gamma1".into(), "gamma2".into(), "alpha".into()]);
    names
}

/// Box-Cox transform `G(z, alpha) = (z^alpha - 1)/alpha`, with `log z` as the
/// `alpha = 0` limit.
pub fn box_cox(z: f64, alpha: f64) -> Result<f64> {
    if !(z > 0.0) {
        return Err(Error::Domain(format!("box_cox requires z > 0, got {z}")));
    }
    if alpha.abs() < ALPHA_ZERO_THRESHOLD {
        Ok(z.ln())
    } else {
        Ok((alpha * z.ln()).exp_m1() / alpha)
    }
}

/// Covariate link `phi(alpha, x) = exp(eta) / (1 + alpha exp(eta))` for
/// `0 < alpha <= 1` and `exp(eta)` at `alpha = 0`, where `eta = x'beta`.
///
/// For positive `alpha` the product `alpha * phi` equals
/// `sigmoid(eta + log alpha)`, which is what the survival formulas consume;
/// computing through the sigmoid keeps `eta = +-500` exact.
pub fn covariate_link(alpha: f64, eta: f64) -> f64 {
    if alpha < ALPHA_ZERO_THRESHOLD {
        eta.exp()
    } else {
        let (s, _, _) = sigmoid_parts(eta + alpha.ln());
        s / alpha
    }
}

/// Linear predictor `beta0 + sum_j beta_{j+1} x_j` (intercept synthesized).
#[inline]
pub fn linear_predictor(beta: &[f64], x: &[f64]) -> f64 {
    debug_assert_eq!(beta.len(), x.len() + 1);
    let mut eta = beta[0];
    for (b, v) in beta[1..].iter().zip(x) {
        eta += b * v;
    }
    eta
}

/// Log population survival together with `log(1 - alpha phi F)`, the quantity
/// shared with the density. `z` is the Weibull cumulative hazard at `y`, so
/// `F = 1 - exp(-z)`.
///
/// The base is assembled as `(1 - s) + s e^{-z}` with `s = alpha phi`, a sum
/// of positives that cannot cancel; `1 - s F > 0` always holds because
/// `s = sigmoid(eta + log alpha) < 1`.
#[inline]
fn ln_survival_parts(z: f64, eta: f64, alpha: f64) -> (f64, f64) {
    if alpha < ALPHA_ZERO_THRESHOLD {
        let cdf = -(-z).exp_m1();
        (-eta.exp() * cdf, 0.0)
    } else {
        let (s, one_minus_s, _) = sigmoid_parts(eta + alpha.ln());
        let base = one_minus_s + s * (-z).exp();
        let ln_base = base.ln();
        (ln_base / alpha, ln_base)
    }
}

/// Population survival `S_p(y | x)`:
/// `{1 - alpha phi F(y)}^(1/alpha)` for `0 < alpha <= 1`, `exp{-phi F(y)}`
/// at `alpha = 0`.
pub fn population_survival(y: f64, x: &[f64], theta: &ParameterVector) -> Result<f64> {
    if !(y >= 0.0) {
        return Err(Error::Domain(format!(
            "population_survival requires y >= 0, got {y}"
        )));
    }
    let eta = linear_predictor(&theta.beta, x);
    let z = if y == 0.0 {
        0.0
    } else {
        cumulative_hazard(y, &theta.gamma)
    };
    let (ln_sp, _) = ln_survival_parts(z, eta, theta.alpha);
    Ok(ln_sp.exp())
}

/// Population density `f_p(y | x) = -dS_p/dy`:
/// `S_p phi f(y) {1 - alpha phi F(y)}^{-1}` for `0 < alpha <= 1`,
/// `S_p phi f(y)` at `alpha = 0`.
pub fn population_density(y: f64, x: &[f64], theta: &ParameterVector) -> Result<f64> {
    if !(y > 0.0) {
        return Err(Error::Domain(format!(
            "population_density requires y > 0, got {y}"
        )));
    }
    let eta = linear_predictor(&theta.beta, x);
    Ok(ln_density(y.ln(), eta, theta).exp())
}

/// Log of `f_p(y | x)` for `y > 0`; `-inf` when the density underflows.
#[inline]
fn ln_density(ln_y: f64, eta: f64, theta: &ParameterVector) -> f64 {
    let g1 = theta.gamma.gamma1();
    let q = (theta.gamma.gamma2().ln() + ln_y) / g1;
    let z = q.exp();
    let ln_f = q - z - g1.ln() - ln_y; // log Weibull density
    let (ln_sp, ln_base) = ln_survival_parts(z, eta, theta.alpha);
    let ln_phi = if theta.alpha < ALPHA_ZERO_THRESHOLD {
        eta
    } else {
        let (_, _, log1pe) = sigmoid_parts(eta + theta.alpha.ln());
        eta - log1pe
    };
    ln_sp + ln_phi + ln_f - ln_base
}

/// Cure rate `p_0(x) = lim_{y->inf} S_p(y | x)`:
/// `{1 - alpha phi}^(1/alpha)` for `0 < alpha <= 1`, `exp{-phi}` at `alpha = 0`.
pub fn cure_rate(x: &[f64], theta: &ParameterVector) -> f64 {
    let eta = linear_predictor(&theta.beta, x);
    cure_rate_from_eta(eta, theta.alpha)
}

/// Cure rate as a function of the linear predictor alone.
pub fn cure_rate_from_eta(eta: f64, alpha: f64) -> f64 {
    if alpha < ALPHA_ZERO_THRESHOLD {
        (-eta.exp()).exp()
    } else {
        let (_, _, log1pe) = sigmoid_parts(eta + alpha.ln());
        (-log1pe / alpha).exp()
    }
}

/// Inverse of [`cure_rate_from_eta`] in `eta`: the linear predictor that
/// yields cure rate `p0` at the given `alpha`.
///
/// `eta = log{(p0^{-alpha} - 1)/alpha}` for `alpha > 0`, `log{-log p0}` at
/// `alpha = 0`.
pub fn cure_rate_to_eta(p0: f64, alpha: f64) -> Result<f64> {
    if !(p0 > 0.0 && p0 < 1.0) {
        return Err(Error::Domain(format!(
            "cure rate must lie strictly inside (0,1), got {p0}"
        )));
    }
    if alpha < ALPHA_ZERO_THRESHOLD {
        Ok((-p0.ln()).ln())
    } else {
        // expm1 keeps precision when alpha log(p0) is small.
        Ok(((-alpha * p0.ln()).exp_m1() / alpha).ln())
    }
}

/// Censored-data log-likelihood evaluator with per-observation caches.
///
/// `eval_flat` is the hot path used by the optimizer: it takes the flat
/// parameter view `(beta..., gamma1, gamma2, alpha)` and returns the
/// log-likelihood, with `-inf` as the underflow sentinel (never a panic) and
/// NaN only when the input itself contains NaN.
pub struct LogLikelihood<'a> {
    data: &'a Dataset,
    ln_y: Vec<f64>,
}

impl<'a> LogLikelihood<'a> {
    pub fn new(data: &'a Dataset) -> Self {
        let ln_y = data.records().iter().map(|r| r.y.ln()).collect();
        Self { data, ln_y }
    }

    /// Dimension of the flat parameter vector this evaluator expects.
    pub fn dim(&self) -> usize {
        self.data.covariate_dim() + 4
    }

    pub fn eval(&self, theta: &ParameterVector) -> f64 {
        self.eval_flat(&theta.to_flat())
    }

    pub fn eval_flat(&self, flat: &[f64]) -> f64 {
        assert_eq!(flat.len(), self.dim(), "parameter dimension mismatch");
        if flat.iter().any(|v| v.is_nan()) {
            return f64::NAN;
        }
        let p = flat.len() - 3;
        let beta = &flat[..p];
        let (g1, g2, alpha) = (flat[p], flat[p + 1], flat[p + 2]);

        let inv_g1 = 1.0 / g1;
        let ln_g1 = g1.ln();
        let ln_g2 = g2.ln();
        let zero_alpha = alpha < ALPHA_ZERO_THRESHOLD;
        let ln_alpha = if zero_alpha { 0.0 } else { alpha.ln() };

        let mut total = 0.0;
        for (i, rec) in self.data.records().iter().enumerate() {
            let eta = linear_predictor(beta, &rec.x);
            let ln_y = self.ln_y[i];
            let q = (ln_g2 + ln_y) * inv_g1;
            let z = q.exp();

            let term = if zero_alpha {
                let phi = eta.exp();
                let cdf = -(-z).exp_m1();
                let ln_sp = -phi * cdf;
                if rec.event {
                    if rec.y == 0.0 {
                        return f64::NEG_INFINITY;
                    }
                    ln_sp + eta + (q - z - ln_g1 - ln_y)
                } else {
                    ln_sp
                }
            } else {
                let (s, one_minus_s, log1pe) = sigmoid_parts(eta + ln_alpha);
                let base = one_minus_s + s * (-z).exp();
                let ln_base = base.ln();
                if rec.event {
                    if rec.y == 0.0 {
                        return f64::NEG_INFINITY;
                    }
                    let ln_phi = eta - log1pe;
                    (1.0 / alpha - 1.0) * ln_base + ln_phi + (q - z - ln_g1 - ln_y)
                } else {
                    ln_base / alpha
                }
            };
            total += term;
        }
        if total.is_nan() {
            // Conflicting infinities from extreme parameter corners count as
            // underflow, not as an evaluation failure.
            return f64::NEG_INFINITY;
        }
        total
    }
}

/// Log-likelihood `l(theta) = sum_i [delta_i log f_p + (1 - delta_i) log S_p]`.
///
/// Underflow yields the `-inf` sentinel; NaN anywhere in `theta` is an
/// evaluation failure.
pub fn log_likelihood(theta: &ParameterVector, data: &Dataset) -> Result<f64> {
    let value = LogLikelihood::new(data).eval(theta);
    if value.is_nan() {
        return Err(Error::EvaluationFailure(
            "log-likelihood evaluated to NaN".into(),
        ));
    }
    Ok(value)
}
