//! True-parameter construction and censored-data generation for the binary-
//! and continuous-covariate scenarios.
//!
//! Randomness contract: every subject consumes a fixed number of uniform
//! draws in a documented order — binary: `(u_cure, u_censor, u_event)`,
//! continuous: `(u_x, u_cure, u_censor, u_event)` — with group 1 (`x = 1`)
//! generated before group 2 in the binary case. Generators are therefore a
//! pure function of `(scenario, seed)`.

use crate::error::{Error, Result};
use crate::lifetime::{weibull_quantile, WeibullParams};
use crate::model::{
    covariate_link, cure_rate_from_eta, cure_rate_to_eta, Dataset, Observation,
    ALPHA_ZERO_THRESHOLD,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Interpretation of the censoring constants `c` in a scenario.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CensoringInput {
    /// `c` is the rate of the exponential censoring distribution.
    #[default]
    Rate,
    /// `c` is a target overall censoring proportion; the exponential rate is
    /// calibrated to hit it.
    Proportion,
}

/// Binary-covariate scenario: group 1 (`x = 1`, size `n1`, cure `p01`,
/// censoring constant `c1`) and group 2 (`x = 0`, size `n2`, cure `p00`,
/// censoring constant `c2`).
#[derive(Debug, Clone, PartialEq)]
pub struct BinaryScenario {
    pub n1: usize,
    pub n2: usize,
    pub p01: f64,
    pub p00: f64,
    pub alpha: f64,
    pub gamma: WeibullParams,
    pub c1: f64,
    pub c2: f64,
    pub censoring: CensoringInput,
}

impl BinaryScenario {
    pub fn validate(&self) -> Result<()> {
        if self.n1 == 0 || self.n2 == 0 {
            return Err(Error::Config("group sizes n1, n2 must be at least 1".into()));
        }
        for (name, p) in [("p01", self.p01), ("p00", self.p00)] {
            if !(p > 0.0 && p < 1.0) {
                return Err(Error::Config(format!(
                    "{name} must lie strictly inside (0,1), got {p}"
                )));
            }
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::Config(format!(
                "alpha must lie in [0,1], got {}",
                self.alpha
            )));
        }
        for (name, c) in [("c1", self.c1), ("c2", self.c2)] {
            if !(c > 0.0) {
                return Err(Error::Config(format!("{name} must be positive, got {c}")));
            }
            if self.censoring == CensoringInput::Proportion && c >= 1.0 {
                return Err(Error::Config(format!(
                    "{name}: a censoring proportion must be below 1, got {c}"
                )));
            }
        }
        Ok(())
    }

    /// True regression coefficients implied by the cure proportions.
    pub fn true_beta(&self) -> Result<(f64, f64)> {
        true_params_binary(self.p01, self.p00, self.alpha)
    }

    pub fn n(&self) -> usize {
        self.n1 + self.n2
    }
}

/// Continuous-covariate scenario: `x ~ Uniform(x_min, x_max)` with cure
/// proportion `p_high` at `x_min` and `p_low` at `x_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct ContinuousScenario {
    pub n: usize,
    pub p_high: f64,
    pub p_low: f64,
    pub x_min: f64,
    pub x_max: f64,
    pub alpha: f64,
    pub gamma: WeibullParams,
    pub c: f64,
    pub censoring: CensoringInput,
}

impl ContinuousScenario {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::Config("sample size n must be at least 1".into()));
        }
        if !(self.x_min < self.x_max) {
            return Err(Error::Config(format!(
                "x_min must be below x_max, got [{}, {}]",
                self.x_min, self.x_max
            )));
        }
        if !(self.p_low > 0.0 && self.p_low < self.p_high && self.p_high < 1.0) {
            return Err(Error::Config(format!(
                "cure proportions must satisfy 0 < p_low < p_high < 1, got ({}, {})",
                self.p_low, self.p_high
            )));
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::Config(format!(
                "alpha must lie in [0,1], got {}",
                self.alpha
            )));
        }
        if !(self.c > 0.0) {
            return Err(Error::Config(format!("c must be positive, got {}", self.c)));
        }
        if self.censoring == CensoringInput::Proportion && self.c >= 1.0 {
            return Err(Error::Config(format!(
                "c: a censoring proportion must be below 1, got {}",
                self.c
            )));
        }
        Ok(())
    }

    pub fn true_beta(&self) -> Result<(f64, f64)> {
        true_params_continuous(self.p_high, self.p_low, self.x_min, self.x_max, self.alpha)
    }
}

/// True `(beta0, beta1)` for the binary scenario: `beta0` reproduces `p00`
/// at `x = 0` and `beta0 + beta1` reproduces `p01` at `x = 1`.
pub fn true_params_binary(p01: f64, p00: f64, alpha: f64) -> Result<(f64, f64)> {
    let beta0 = cure_rate_to_eta(p00, alpha)?;
    let beta1 = cure_rate_to_eta(p01, alpha)? - beta0;
    Ok((beta0, beta1))
}

/// True `(beta0, beta1)` for the continuous scenario: the linear predictor
/// interpolates the cure proportions `p_high` at `x_min` and `p_low` at
/// `x_max`.
pub fn true_params_continuous(
    p_high: f64,
    p_low: f64,
    x_min: f64,
    x_max: f64,
    alpha: f64,
) -> Result<(f64, f64)> {
    if !(x_min < x_max) {
        return Err(Error::Domain(format!(
            "x_min must be below x_max, got [{x_min}, {x_max}]"
        )));
    }
    let eta_low = cure_rate_to_eta(p_low, alpha)?; // at x_max
    let eta_high = cure_rate_to_eta(p_high, alpha)?; // at x_min
    let beta1 = (eta_low - eta_high) / (x_max - x_min);
    let beta0 = eta_low - beta1 * x_max;
    Ok((beta0, beta1))
}

/// Invert the susceptible survival `{S_p(t) - p0} / (1 - p0) = u*` for `t`:
///
/// ```text
/// t = F^{-1}[ (1 - {p0 + (1-p0) u*}^alpha) / (alpha phi) ]   0 < alpha <= 1
/// t = F^{-1}[ -log{p0 + (1-p0) u*} / phi ]                   alpha = 0
/// ```
///
/// The `F^{-1}` argument is clamped into `[0, 1)` within a slack of 1e-12;
/// anything further out signals inconsistent `(p0, phi, alpha)`.
pub fn susceptible_time(
    u_star: f64,
    p0: f64,
    phi: f64,
    alpha: f64,
    gamma: &WeibullParams,
) -> Result<f64> {
    if !(u_star > 0.0 && u_star < 1.0) {
        return Err(Error::Domain(format!(
            "u_star must lie strictly inside (0,1), got {u_star}"
        )));
    }
    if !(p0 > 0.0 && p0 < 1.0) {
        return Err(Error::Domain(format!(
            "p0 must lie strictly inside (0,1), got {p0}"
        )));
    }
    if !(phi > 0.0) {
        return Err(Error::Domain(format!("phi must be positive, got {phi}")));
    }
    let mixed = p0 + (1.0 - p0) * u_star;
    let arg = if alpha < ALPHA_ZERO_THRESHOLD {
        -mixed.ln() / phi
    } else {
        -(alpha * mixed.ln()).exp_m1() / (alpha * phi)
    };
    const SLACK: f64 = 1e-12;
    let arg = if arg < 0.0 {
        if arg < -SLACK {
            return Err(Error::Domain(format!(
                "inverse-CDF argument {arg} below 0: inconsistent (p0, phi, alpha)"
            )));
        }
        0.0
    } else if arg >= 1.0 {
        if arg > 1.0 + SLACK {
            return Err(Error::Domain(format!(
                "inverse-CDF argument {arg} above 1: inconsistent (p0, phi, alpha)"
            )));
        }
        1.0f64.next_down()
    } else {
        arg
    };
    weibull_quantile(arg, gamma)
}

/// Per-subject generation record kept alongside the observed data; exposes
/// the latent susceptible lifetime for generator-validity diagnostics.
#[derive(Debug, Clone)]
pub struct LatentSubject {
    pub x: f64,
    pub cured: bool,
    /// Raw susceptible event time before censoring (None for cured subjects).
    pub event_time: Option<f64>,
    pub censor_time: f64,
}

fn draw_uniform<R: Rng>(rng: &mut R) -> f64 {
    rng.random::<f64>()
}

/// Inverse-transform exponential draw with the given rate.
fn exponential_from_uniform(u: f64, rate: f64) -> f64 {
    -(-u).ln_1p() / rate
}

struct GroupLaw {
    phi: f64,
    p0: f64,
    rate: f64,
}

impl GroupLaw {
    fn build(
        eta: f64,
        alpha: f64,
        gamma: &WeibullParams,
        c: f64,
        censoring: CensoringInput,
    ) -> Result<Self> {
        let phi = covariate_link(alpha, eta);
        let p0 = cure_rate_from_eta(eta, alpha);
        let rate = match censoring {
            CensoringInput::Rate => c,
            CensoringInput::Proportion => {
                calibrate_censoring_rate(c, p0, phi, alpha, gamma)?
            }
        };
        Ok(Self { phi, p0, rate })
    }

    fn draw_subject<R: Rng>(
        &self,
        rng: &mut R,
        alpha: f64,
        gamma: &WeibullParams,
        x: f64,
    ) -> Result<(Observation, LatentSubject)> {
        let u_cure = draw_uniform(rng);
        let u_censor = draw_uniform(rng);
        let u_event = draw_uniform(rng);
        let censor_time = exponential_from_uniform(u_censor, self.rate);
        if u_cure <= self.p0 {
            Ok((
                Observation {
                    y: censor_time,
                    event: false,
                    x: vec![x],
                },
                LatentSubject {
                    x,
                    cured: true,
                    event_time: None,
                    censor_time,
                },
            ))
        } else {
            let u_star = u_event.max(f64::MIN_POSITIVE);
            let t = susceptible_time(u_star, self.p0, self.phi, alpha, gamma)?;
            let event = t <= censor_time;
            Ok((
                Observation {
                    y: t.min(censor_time),
                    event,
                    x: vec![x],
                },
                LatentSubject {
                    x,
                    cured: false,
                    event_time: Some(t),
                    censor_time,
                },
            ))
        }
    }
}

/// Generate a binary-covariate dataset along with the latent generation
/// record, from an arbitrary RNG (used by the Monte-Carlo harness to inject
/// per-replication streams).
pub fn generate_binary_with<R: Rng>(
    scenario: &BinaryScenario,
    rng: &mut R,
) -> Result<(Dataset, Vec<LatentSubject>)> {
    scenario.validate()?;
    let (beta0, beta1) = scenario.true_beta()?;
    let mut records = Vec::with_capacity(scenario.n());
    let mut latent = Vec::with_capacity(scenario.n());
    for (x, n, c) in [(1.0, scenario.n1, scenario.c1), (0.0, scenario.n2, scenario.c2)] {
        let law = GroupLaw::build(
            beta0 + beta1 * x,
            scenario.alpha,
            &scenario.gamma,
            c,
            scenario.censoring,
        )?;
        for _ in 0..n {
            let (obs, lat) = law.draw_subject(rng, scenario.alpha, &scenario.gamma, x)?;
            records.push(obs);
            latent.push(lat);
        }
    }
    let data = Dataset::new(records, vec!["x1".into()])?;
    Ok((data, latent))
}

/// Generate a binary-covariate dataset from a seed (ChaCha8, stream 0).
pub fn generate_binary(scenario: &BinaryScenario, seed: u64) -> Result<Dataset> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    generate_binary_with(scenario, &mut rng).map(|(data, _)| data)
}

/// Continuous-covariate counterpart of [`generate_binary_with`].
pub fn generate_continuous_with<R: Rng>(
    scenario: &ContinuousScenario,
    rng: &mut R,
) -> Result<(Dataset, Vec<LatentSubject>)> {
    scenario.validate()?;
    let (beta0, beta1) = scenario.true_beta()?;
    let rate = match scenario.censoring {
        CensoringInput::Rate => scenario.c,
        CensoringInput::Proportion => calibrate_censoring_rate_continuous(scenario)?,
    };
    let mut records = Vec::with_capacity(scenario.n);
    let mut latent = Vec::with_capacity(scenario.n);
    for _ in 0..scenario.n {
        let u_x = draw_uniform(rng);
        let x = scenario.x_min + (scenario.x_max - scenario.x_min) * u_x;
        let eta = beta0 + beta1 * x;
        let law = GroupLaw {
            phi: covariate_link(scenario.alpha, eta),
            p0: cure_rate_from_eta(eta, scenario.alpha),
            rate,
        };
        let (obs, lat) = law.draw_subject(rng, scenario.alpha, &scenario.gamma, x)?;
        records.push(obs);
        latent.push(lat);
    }
    let data = Dataset::new(records, vec!["x1".into()])?;
    Ok((data, latent))
}

/// Generate a continuous-covariate dataset from a seed (ChaCha8, stream 0).
pub fn generate_continuous(scenario: &ContinuousScenario, seed: u64) -> Result<Dataset> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    generate_continuous_with(scenario, &mut rng).map(|(data, _)| data)
}

/// Laplace transform `E[exp(-rate * T)]` of the susceptible lifetime, by
/// midpoint quadrature on the probability scale (where `T = t(u)` with
/// `u = S_s(t)` uniform).
fn susceptible_laplace(rate: f64, p0: f64, phi: f64, alpha: f64, gamma: &WeibullParams) -> f64 {
    const NODES: usize = 2048;
    let mut total = 0.0;
    for i in 0..NODES {
        let u = (i as f64 + 0.5) / NODES as f64;
        if let Ok(t) = susceptible_time(u, p0, phi, alpha, gamma) {
            total += (-rate * t).exp();
        }
    }
    total / NODES as f64
}

/// Censoring proportion of a group as a function of the exponential rate.
fn censoring_proportion(rate: f64, p0: f64, phi: f64, alpha: f64, gamma: &WeibullParams) -> f64 {
    p0 + (1.0 - p0) * (1.0 - susceptible_laplace(rate, p0, phi, alpha, gamma))
}

/// Solve for the exponential censoring rate that yields the target overall
/// censoring proportion in a group with cure rate `p0`.
///
/// Cured subjects are always censored, so the target must exceed `p0`.
pub fn calibrate_censoring_rate(
    target: f64,
    p0: f64,
    phi: f64,
    alpha: f64,
    gamma: &WeibullParams,
) -> Result<f64> {
    if !(target > p0 && target < 1.0) {
        return Err(Error::Config(format!(
            "target censoring proportion {target} must lie in (p0, 1) with p0 = {p0:.4}"
        )));
    }
    let prop = |rate: f64| censoring_proportion(rate, p0, phi, alpha, gamma);
    let mut hi = 1.0;
    let mut tries = 0;
    while prop(hi) < target {
        hi *= 10.0;
        tries += 1;
        if tries > 12 {
            return Err(Error::NoConvergence(
                "censoring-rate calibration could not bracket the target".into(),
            ));
        }
    }
    let mut lo = hi / 1e12;
    while prop(lo) > target {
        lo /= 10.0;
        if lo < 1e-300 {
            return Err(Error::NoConvergence(
                "censoring-rate calibration could not bracket the target".into(),
            ));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if prop(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-12 * hi {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Rate calibration for the continuous scenario: the censoring proportion is
/// averaged over `x ~ Uniform(x_min, x_max)` by midpoint quadrature.
fn calibrate_censoring_rate_continuous(scenario: &ContinuousScenario) -> Result<f64> {
    const X_NODES: usize = 128;
    let (beta0, beta1) = scenario.true_beta()?;
    let laws: Vec<(f64, f64)> = (0..X_NODES)
        .map(|i| {
            let u = (i as f64 + 0.5) / X_NODES as f64;
            let x = scenario.x_min + (scenario.x_max - scenario.x_min) * u;
            let eta = beta0 + beta1 * x;
            (
                cure_rate_from_eta(eta, scenario.alpha),
                covariate_link(scenario.alpha, eta),
            )
        })
        .collect();
    let mean_p0 = laws.iter().map(|(p0, _)| p0).sum::<f64>() / X_NODES as f64;
    if !(scenario.c > mean_p0) {
        return Err(Error::Config(format!(
            "target censoring proportion {} must exceed the mean cure rate {mean_p0:.4}",
            scenario.c
        )));
    }
    let prop = |rate: f64| {
        laws.iter()
            .map(|&(p0, phi)| censoring_proportion(rate, p0, phi, scenario.alpha, &scenario.gamma))
            .sum::<f64>()
            / X_NODES as f64
    };
    let (mut lo, mut hi) = (1e-12, 1.0);
    let mut tries = 0;
    while prop(hi) < scenario.c {
        hi *= 10.0;
        tries += 1;
        if tries > 12 {
            return Err(Error::NoConvergence(
                "censoring-rate calibration could not bracket the target".into(),
            ));
        }
    }
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if prop(mid) < scenario.c {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-10 * hi {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}
