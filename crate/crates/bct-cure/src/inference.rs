//! Real-data workflow: Kaplan-Meier estimation, initial-value construction,
//! SQH fitting, bootstrap standard errors, group cure rates, randomized
//! quantile residuals and a Kolmogorov-Smirnov normality test.

use crate::error::{Error, Result};
use crate::lifetime::{weibull_moment_match, WeibullParams};
use crate::model::{cure_rate, cure_rate_to_eta, Dataset, LogLikelihood, ParameterVector};
use crate::numeric::{kolmogorov_sf, normal_cdf, normal_quantile};
use crate::sqh::{sqh_maximize, AdmissibleBox, SqhConfig, SqhResult};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::io::Write;

/// Kaplan-Meier product-limit estimate: a right-continuous nonincreasing
/// step function with jumps at distinct uncensored times.
#[derive(Debug, Clone)]
pub struct KmCurve {
    times: Vec<f64>,
    survival: Vec<f64>,
    at_risk: Vec<usize>,
    events: Vec<usize>,
}

impl KmCurve {
    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn survival(&self) -> &[f64] {
        &self.survival
    }

    pub fn at_risk(&self) -> &[usize] {
        &self.at_risk
    }

    pub fn events(&self) -> &[usize] {
        &self.events
    }

    /// Step-function value at `t` (1 before the first event time).
    pub fn survival_at(&self, t: f64) -> f64 {
        let mut value = 1.0;
        for (time, s) in self.times.iter().zip(&self.survival) {
            if *time <= t {
                value = *s;
            } else {
                break;
            }
        }
        value
    }

    /// Value at the largest event time: the plateau the curve ends on.
    pub fn final_value(&self) -> f64 {
        self.survival.last().copied().unwrap_or(1.0)
    }

    /// Two-column `time,survival` table for external plotting.
    pub fn write_delimited<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "time,survival")?;
        writeln!(w, "0,1")?;
        for (t, s) in self.times.iter().zip(&self.survival) {
            writeln!(w, "{t},{s}")?;
        }
        Ok(())
    }
}

/// Product-limit estimator over the (already group-filtered) dataset.
/// Censored-only data yields the constant curve 1.
pub fn kaplan_meier(data: &Dataset) -> KmCurve {
    let records = data.records();
    let mut order: Vec<usize> = (0..records.len()).collect();
    order.sort_by(|&a, &b| records[a].y.partial_cmp(&records[b].y).unwrap());

    let mut curve = KmCurve {
        times: Vec::new(),
        survival: Vec::new(),
        at_risk: Vec::new(),
        events: Vec::new(),
    };
    let mut survival = 1.0;
    let mut at_risk = records.len();
    let mut i = 0;
    while i < order.len() {
        let t = records[order[i]].y;
        let mut deaths = 0;
        let mut leaving = 0;
        while i < order.len() && records[order[i]].y == t {
            if records[order[i]].event {
                deaths += 1;
            }
            leaving += 1;
            i += 1;
        }
        if deaths > 0 {
            survival *= (at_risk - deaths) as f64 / at_risk as f64;
            curve.times.push(t);
            curve.survival.push(survival);
            curve.at_risk.push(at_risk);
            curve.events.push(deaths);
        }
        at_risk -= leaving;
    }
    curve
}

/// 21 equispaced candidate values for the BCT index on `[0, 1]`.
pub fn default_alpha_grid() -> Vec<f64> {
    (0..=20).map(|i| i as f64 / 20.0).collect()
}

/// Initial-value construction result: the chosen starting point plus the
/// diagnostics of any degenerate paths taken along the way.
#[derive(Debug, Clone)]
pub struct InitialValues {
    pub theta: ParameterVector,
    pub log_likelihood: f64,
    /// Kaplan-Meier cure estimates for the (low, high) extreme groups,
    /// after clamping.
    pub km_cure: (f64, f64),
    /// Whether each cure estimate was clamped into [0.01, 0.99].
    pub clamped: (bool, bool),
    /// True when the Weibull moment match failed (for example, zero sample
    /// variance) and the exponential fallback was used for gamma.
    pub gamma_fallback: bool,
}

const CURE_CLAMP: (f64, f64) = (0.01, 0.99);

fn clamped_cure(curve: &KmCurve) -> (f64, bool) {
    let raw = curve.final_value();
    if raw < CURE_CLAMP.0 {
        (CURE_CLAMP.0, true)
    } else if raw > CURE_CLAMP.1 {
        (CURE_CLAMP.1, true)
    } else {
        (raw, false)
    }
}

/// Moment-matched Weibull start for `gamma`, with an exponential fallback
/// when the sample moments cannot be matched.
fn gamma_start(data: &Dataset) -> (WeibullParams, bool) {
    let n = data.len() as f64;
    let mean = data.records().iter().map(|r| r.y).sum::<f64>() / n;
    let var = if data.len() > 1 {
        data.records()
            .iter()
            .map(|r| {
                let d = r.y - mean;
                d * d
            })
            .sum::<f64>()
            / (n - 1.0)
    } else {
        0.0
    };
    if mean > 0.0 && var > 0.0 {
        if let Ok(params) = weibull_moment_match(mean, var) {
            return (params, false);
        }
    }
    let rate = if mean > 0.0 { 1.0 / mean } else { 1.0 };
    (WeibullParams::new(1.0, rate).expect("positive rate"), true)
}

/// Constants of the per-candidate gamma refinement. These are toy-scale SQH
/// settings: the two-dimensional subproblem has O(1) curvature, unlike the
/// full likelihood.
fn gamma_profile_config() -> SqhConfig {
    SqhConfig {
        epsilon0: 1.0,
        lambda: 10.0,
        zeta: 0.5,
        rho: 1e-3,
        kappa: 1e-8,
        max_iter: 60,
        ..SqhConfig::default()
    }
}

/// Initial values from two explicit extreme groups.
///
/// `low` and `high` pair each group's records with the covariate value the
/// cure-rate equations are solved at. For each grid `alpha` the two
/// cure-rate equations are inverted for `(beta0, beta1)`; `gamma` starts at
/// the moment match of the observed times and is then refined per candidate
/// by a small SQH run over `(gamma1, gamma2)` alone (warm-started along the
/// grid). The candidate maximizing the log-likelihood wins.
///
/// The refinement matters: the likelihood ranking across `alpha` candidates
/// that share one fixed `gamma` is dominated by the `gamma` misfit, and the
/// selected `alpha` is then not even consistent at large `n`.
pub fn initial_values_grouped(
    full: &Dataset,
    low: (&Dataset, f64),
    high: (&Dataset, f64),
    alpha_grid: &[f64],
) -> Result<InitialValues> {
    if alpha_grid.is_empty() {
        return Err(Error::Config("alpha grid must be nonempty".into()));
    }
    if full.covariate_dim() != 1 {
        return Err(Error::Data(format!(
            "initial values require a single covariate, found {}",
            full.covariate_dim()
        )));
    }
    let (cure_low, clamped_low) = clamped_cure(&kaplan_meier(low.0));
    let (cure_high, clamped_high) = clamped_cure(&kaplan_meier(high.0));
    let (gamma0, gamma_fallback) = gamma_start(full);

    let evaluator = LogLikelihood::new(full);
    let profile_config = gamma_profile_config();
    let gamma_bounds = AdmissibleBox::new(
        vec![crate::sqh::POSITIVE_FLOOR; 2],
        vec![f64::INFINITY; 2],
    )?;

    let mut warm = [gamma0.gamma1(), gamma0.gamma2()];
    let mut best: Option<(f64, ParameterVector)> = None;
    for &alpha in alpha_grid {
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::Config(format!(
                "alpha grid values must lie in [0,1], got {alpha}"
            )));
        }
        let eta_low = cure_rate_to_eta(cure_low, alpha)?;
        let eta_high = cure_rate_to_eta(cure_high, alpha)?;
        let span = high.1 - low.1;
        let (beta0, beta1) = if span.abs() < 1e-12 {
            (0.5 * (eta_low + eta_high), 0.0)
        } else {
            let slope = (eta_high - eta_low) / span;
            (eta_low - slope * low.1, slope)
        };
        let objective =
            |g: &[f64]| evaluator.eval_flat(&[beta0, beta1, g[0], g[1], alpha]);
        let (gamma, value) =
            match sqh_maximize(objective, &warm, &gamma_bounds, &profile_config) {
                Ok(fit) if fit.objective.is_finite() => {
                    warm = [fit.theta[0], fit.theta[1]];
                    (WeibullParams::new(fit.theta[0], fit.theta[1])?, fit.objective)
                }
                // A stalled or degenerate refinement falls back to the
                // moment-matched start for this candidate.
                _ => (gamma0, objective(&[gamma0.gamma1(), gamma0.gamma2()])),
            };
        let theta = ParameterVector::new(vec![beta0, beta1], gamma, alpha)?;
        if best.as_ref().map_or(true, |(v, _)| value > *v) {
            best = Some((value, theta));
        }
    }
    let (value, theta) = best.expect("grid is nonempty");
    Ok(InitialValues {
        theta,
        log_likelihood: value,
        km_cure: (cure_low, cure_high),
        clamped: (clamped_low, clamped_high),
        gamma_fallback,
    })
}

/// Initial values with extreme groups selected by exact covariate value
/// (binary data: `(0, 1)`; melanoma-style nodule categories: `(1, 4)`).
pub fn initial_values(
    data: &Dataset,
    extreme_groups: (f64, f64),
    alpha_grid: &[f64],
) -> Result<InitialValues> {
    let (low_x, high_x) = extreme_groups;
    let low = data
        .filter(|r| r.x[0] == low_x)
        .map_err(|_| Error::DegenerateData(format!("no records with covariate value {low_x}")))?;
    let high = data
        .filter(|r| r.x[0] == high_x)
        .map_err(|_| Error::DegenerateData(format!("no records with covariate value {high_x}")))?;
    initial_values_grouped(data, (&low, low_x), (&high, high_x), alpha_grid)
}

/// Run the SQH maximizer on the dataset's log-likelihood from the given
/// starting point.
pub fn fit_from_initial(
    data: &Dataset,
    start: &ParameterVector,
    config: &SqhConfig,
) -> Result<SqhResult> {
    let evaluator = LogLikelihood::new(data);
    let bounds = AdmissibleBox::for_bct(start.beta.len());
    let start_flat = start.to_flat();
    sqh_maximize(|flat| evaluator.eval_flat(flat), &start_flat, &bounds, config)
}

/// Full single-dataset fit: KM-based initial values followed by SQH.
pub struct FitOutcome {
    pub init: InitialValues,
    pub result: SqhResult,
    pub theta: ParameterVector,
}

pub fn fit_dataset(
    data: &Dataset,
    extreme_groups: (f64, f64),
    alpha_grid: &[f64],
    config: &SqhConfig,
) -> Result<FitOutcome> {
    let init = initial_values(data, extreme_groups, alpha_grid)?;
    let result = fit_from_initial(data, &init.theta, config)?;
    let theta = ParameterVector::from_flat(&result.theta)?;
    Ok(FitOutcome {
        init,
        result,
        theta,
    })
}

/// Bootstrap standard errors and the bookkeeping of failed resamples.
#[derive(Debug, Clone)]
pub struct BootstrapSummary {
    pub parameter_names: Vec<String>,
    pub standard_errors: Vec<f64>,
    pub resamples_requested: usize,
    pub resamples_used: usize,
    pub resamples_failed: usize,
}

impl BootstrapSummary {
    pub fn write_key_value<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "resamples_requested = {}", self.resamples_requested)?;
        writeln!(w, "resamples_used = {}", self.resamples_used)?;
        writeln!(w, "resamples_failed = {}", self.resamples_failed)?;
        for (name, se) in self.parameter_names.iter().zip(&self.standard_errors) {
            writeln!(w, "se.{name} = {se}")?;
        }
        Ok(())
    }

    pub fn write_delimited<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "parameter,standard_error")?;
        for (name, se) in self.parameter_names.iter().zip(&self.standard_errors) {
            writeln!(w, "{name},{se}")?;
        }
        Ok(())
    }
}

/// Nonparametric case-resampling bootstrap.
///
/// Rows are first put in a canonical order (sorted by `(y, event, x)`), so
/// the result does not depend on how the input file happened to be ordered;
/// resample `b` then draws indices with replacement from the ChaCha8 stream
/// `b` of `seed`. Each resample is refit from freshly computed initial
/// values; resamples that fail to converge are counted and excluded.
pub fn bootstrap_se(
    data: &Dataset,
    resamples: usize,
    config: &SqhConfig,
    alpha_grid: &[f64],
    seed: u64,
    workers: usize,
) -> Result<BootstrapSummary> {
    if resamples < 2 {
        return Err(Error::Config(format!(
            "bootstrap needs at least 2 resamples, got {resamples}"
        )));
    }
    let mut canonical = data.records().to_vec();
    canonical.sort_by(|a, b| {
        (a.y, !a.event, &a.x)
            .partial_cmp(&(b.y, !b.event, &b.x))
            .unwrap()
    });
    let canonical = Dataset::new(canonical, data.covariate_names().to_vec())?;
    let values = canonical.distinct_covariate_values()?;
    let extreme = (values[0], *values.last().unwrap());
    let n = canonical.len();

    let estimates: Vec<Option<Vec<f64>>> = crate::mc::install_pool(workers, || {
        (0..resamples)
            .into_par_iter()
            .map(|b| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(b as u64);
                let records: Vec<_> = (0..n)
                    .map(|_| canonical.records()[rng.random_range(0..n)].clone())
                    .collect();
                let resample = Dataset::new(records, canonical.covariate_names().to_vec()).ok()?;
                let fit = fit_dataset(&resample, extreme, alpha_grid, config).ok()?;
                if !fit.result.converged || !fit.result.objective.is_finite() {
                    return None;
                }
                Some(fit.result.theta)
            })
            .collect()
    });

    let used: Vec<&Vec<f64>> = estimates.iter().flatten().collect();
    let failed = resamples - used.len();
    if used.len() < 2 || 2 * failed > resamples {
        return Err(Error::NoConvergence(format!(
            "{failed} of {resamples} bootstrap resamples failed"
        )));
    }
    let dim = used[0].len();
    let m = used.len() as f64;
    let mut standard_errors = Vec::with_capacity(dim);
    for k in 0..dim {
        let mean = used.iter().map(|est| est[k]).sum::<f64>() / m;
        let var = used
            .iter()
            .map(|est| {
                let d = est[k] - mean;
                d * d
            })
            .sum::<f64>()
            / (m - 1.0);
        standard_errors.push(var.sqrt());
    }
    Ok(BootstrapSummary {
        parameter_names: crate::model::parameter_names(dim - 3),
        standard_errors,
        resamples_requested: resamples,
        resamples_used: used.len(),
        resamples_failed: failed,
    })
}

/// Normalized randomized quantile residuals.
///
/// Per set: `u_i = 1 - S_p(y_i | x_i)` for events, `u_i` uniform on
/// `(1 - S_p, 1)` for censored records (the standard right-censoring
/// randomization); `r_i = Phi^{-1}(u_i)` with `u` clamped into
/// `(1e-15, 1 - 1e-15)`. Each set is sorted and the element-wise median of
/// the sorted sets is returned. Set `s` consumes one uniform per
/// observation from ChaCha8 stream `s` of `seed`, censored or not.
pub fn quantile_residuals(
    data: &Dataset,
    theta: &ParameterVector,
    n_sets: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    if n_sets == 0 {
        return Err(Error::Config("n_sets must be at least 1".into()));
    }
    let n = data.len();
    let mut sets: Vec<Vec<f64>> = Vec::with_capacity(n_sets);
    for s in 0..n_sets {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(s as u64);
        let mut set = Vec::with_capacity(n);
        for rec in data.records() {
            let sp = crate::model::population_survival(rec.y, &rec.x, theta)?;
            let draw: f64 = rng.random();
            let u = if rec.event {
                1.0 - sp
            } else {
                (1.0 - sp) + sp * draw
            };
            let u = u.clamp(1e-15, 1.0 - 1e-15);
            set.push(normal_quantile(u));
        }
        set.sort_by(|a, b| a.partial_cmp(b).unwrap());
        sets.push(set);
    }
    let mut medians = Vec::with_capacity(n);
    let mut column = vec![0.0; n_sets];
    for i in 0..n {
        for (s, set) in sets.iter().enumerate() {
            column[s] = set[i];
        }
        column.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mid = n_sets / 2;
        let median = if n_sets % 2 == 1 {
            column[mid]
        } else {
            0.5 * (column[mid - 1] + column[mid])
        };
        medians.push(median);
    }
    Ok(medians)
}

/// One-sample Kolmogorov-Smirnov test of the residuals against the standard
/// normal, with the p-value from the asymptotic Kolmogorov distribution at
/// the `sqrt(n)` scaling.
pub fn ks_normality(residuals: &[f64]) -> Result<(f64, f64)> {
    if residuals.len() < 5 {
        return Err(Error::DegenerateData(format!(
            "KS test needs at least 5 residuals, got {}",
            residuals.len()
        )));
    }
    let mut sorted = residuals.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sorted.len() as f64;
    let mut statistic: f64 = 0.0;
    for (i, x) in sorted.iter().enumerate() {
        let cdf = normal_cdf(*x);
        let upper = (i as f64 + 1.0) / n - cdf;
        let lower = cdf - i as f64 / n;
        statistic = statistic.max(upper).max(lower);
    }
    let p_value = kolmogorov_sf(n.sqrt() * statistic);
    Ok((statistic, p_value))
}

/// Cure rate per covariate group value.
pub fn group_cure_rates(theta: &ParameterVector, group_values: &[Vec<f64>]) -> Vec<f64> {
    group_values.iter().map(|x| cure_rate(x, theta)).collect()
}

/// Fit summary for reporting: point estimates, optional bootstrap standard
/// errors, per-group cure rates, optional residual diagnostics, and any
/// degenerate-path warnings raised along the way.
#[derive(Debug, Clone)]
pub struct FitReport {
    pub parameter_names: Vec<String>,
    pub theta: ParameterVector,
    pub log_likelihood: f64,
    pub converged: bool,
    pub iterations: usize,
    pub final_tau: f64,
    pub wall_time: f64,
    /// `(x value, cure rate)` per reported group.
    pub cure_rates: Vec<(f64, f64)>,
    pub standard_errors: Option<Vec<f64>>,
    /// `(KS statistic, p-value)` of the quantile residuals, when computed.
    pub residual_ks: Option<(f64, f64)>,
    pub warnings: Vec<String>,
}

impl FitReport {
    pub fn new(outcome: &FitOutcome, cure_group_values: &[f64]) -> Self {
        let mut warnings = Vec::new();
        if outcome.init.clamped.0 || outcome.init.clamped.1 {
            warnings.push(
                "Kaplan-Meier cure estimate clamped into [0.01, 0.99] for initial values".into(),
            );
        }
        if outcome.init.gamma_fallback {
            warnings.push("Weibull moment match failed; exponential start used for gamma".into());
        }
        let alpha = outcome.theta.alpha;
        if alpha <= 1e-6 || alpha >= 1.0 - 1e-6 {
            warnings.push(format!(
                "alpha estimate {alpha:.6} sits on the boundary of [0,1]; standard errors are \
                 not boundary-adjusted"
            ));
        }
        let cure_rates = cure_group_values
            .iter()
            .map(|&x| (x, cure_rate(&[x], &outcome.theta)))
            .collect();
        let final_tau = outcome
            .result
            .trace
            .entries
            .last()
            .map(|e| e.tau)
            .unwrap_or(f64::NAN);
        FitReport {
            parameter_names: crate::model::parameter_names(outcome.theta.beta.len()),
            theta: outcome.theta.clone(),
            log_likelihood: outcome.result.objective,
            converged: outcome.result.converged,
            iterations: outcome.result.iterations,
            final_tau,
            wall_time: outcome.result.wall_time,
            cure_rates,
            standard_errors: None,
            residual_ks: None,
            warnings,
        }
    }

    pub fn write_key_value<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "converged = {}", self.converged)?;
        writeln!(w, "iterations = {}", self.iterations)?;
        writeln!(w, "final_tau = {}", self.final_tau)?;
        writeln!(w, "log_likelihood = {}", self.log_likelihood)?;
        writeln!(w, "wall_time_s = {:.3}", self.wall_time)?;
        for (name, value) in self.parameter_names.iter().zip(self.theta.to_flat()) {
            writeln!(w, "{name} = {value}")?;
        }
        if let Some(se) = &self.standard_errors {
            for (name, value) in self.parameter_names.iter().zip(se) {
                writeln!(w, "se.{name} = {value}")?;
            }
        }
        for (x, rate) in &self.cure_rates {
            writeln!(w, "cure_rate.x={x} = {rate}")?;
        }
        if let Some((d, p)) = self.residual_ks {
            writeln!(w, "residual_ks_statistic = {d}")?;
            writeln!(w, "residual_ks_p_value = {p}")?;
        }
        for warning in &self.warnings {
            writeln!(w, "warning = {warning}")?;
        }
        Ok(())
    }

    pub fn write_delimited<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "name,value")?;
        writeln!(w, "converged,{}", self.converged)?;
        writeln!(w, "iterations,{}", self.iterations)?;
        writeln!(w, "log_likelihood,{}", self.log_likelihood)?;
        for (name, value) in self.parameter_names.iter().zip(self.theta.to_flat()) {
            writeln!(w, "{name},{value}")?;
        }
        if let Some(se) = &self.standard_errors {
            for (name, value) in self.parameter_names.iter().zip(se) {
                writeln!(w, "se.{name},{value}")?;
            }
        }
        for (x, rate) in &self.cure_rates {
            writeln!(w, "cure_rate.x={x},{rate}")?;
        }
        Ok(())
    }
}
