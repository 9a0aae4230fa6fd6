//! Monte-Carlo bias/RMSE study harness.
//!
//! Replication `m` draws its dataset from ChaCha8 stream `m` of the master
//! seed, so `(seed, scenario, M)` fully determines the report (except wall
//! time) regardless of how many workers run the replications.

use crate::error::{Error, Result};
use crate::inference::{fit_from_initial, initial_values, initial_values_grouped, InitialValues};
use crate::model::{
    cure_rate_from_eta, parameter_names, population_survival, Dataset, ParameterVector,
};
use crate::simulation::{
    generate_binary_with, generate_continuous_with, BinaryScenario, ContinuousScenario,
};
use crate::sqh::{SqhConfig, POSITIVE_FLOOR};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::io::Write;
use std::time::Instant;

/// Run `f` on a dedicated rayon pool of `workers` threads (0 = the global
/// default pool).
pub(crate) fn install_pool<R: Send>(workers: usize, f: impl FnOnce() -> R + Send) -> R {
    if workers == 0 {
        f()
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .expect("failed to build worker pool")
            .install(f)
    }
}

/// Data-generating scenario of a study.
#[derive(Debug, Clone, PartialEq)]
pub enum Scenario {
    Binary(BinaryScenario),
    Continuous(ContinuousScenario),
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        match self {
            Scenario::Binary(s) => s.validate(),
            Scenario::Continuous(s) => s.validate(),
        }
    }

    /// The parameter vector the data are generated from.
    pub fn true_theta(&self) -> Result<ParameterVector> {
        match self {
            Scenario::Binary(s) => {
                let (b0, b1) = s.true_beta()?;
                ParameterVector::new(vec![b0, b1], s.gamma, s.alpha)
            }
            Scenario::Continuous(s) => {
                let (b0, b1) = s.true_beta()?;
                ParameterVector::new(vec![b0, b1], s.gamma, s.alpha)
            }
        }
    }

    pub fn n(&self) -> usize {
        match self {
            Scenario::Binary(s) => s.n(),
            Scenario::Continuous(s) => s.n,
        }
    }
}

/// How each replication's fit is started.
#[derive(Debug, Clone, PartialEq)]
pub enum InitStrategy {
    /// The Kaplan-Meier-based procedure: KM cure estimates for the two
    /// extreme covariate groups, inverted for beta on an alpha grid, gamma
    /// by moment matching. For continuous covariates the groups are the
    /// below/above-median halves represented by their mean covariate value.
    KaplanMeier { alpha_grid: Vec<f64> },
    /// Start from the truth perturbed coordinate-wise by
    /// `Uniform(-spread, spread)` (clipped to the admissible box); a
    /// harness-debugging mode.
    PerturbedTruth { spread: f64 },
    /// No fitting: the estimate is the true parameter vector. Exercises the
    /// harness plumbing end to end.
    Oracle,
}

/// A population-survival evaluation point `S_p(y | x)` to track.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpTarget {
    pub y: f64,
    pub x: f64,
}

/// Bias/RMSE summary of one tracked quantity.
#[derive(Debug, Clone)]
pub struct QuantityStats {
    pub name: String,
    pub true_value: f64,
    pub mean_estimate: f64,
    /// Mean-error bias `|mean(estimate) - true|`.
    pub bias: f64,
    /// Mean absolute error; reported alongside since the tables' "absolute
    /// bias" admits either reading.
    pub mae: f64,
    pub rmse: f64,
}

fn summarize(name: &str, true_value: f64, estimates: &[f64]) -> QuantityStats {
    // Aggregate centered deviations: in oracle mode every deviation is
    // exactly zero, and the bias/RMSE come out exactly zero too.
    let m = estimates.len() as f64;
    let mean_dev = estimates.iter().map(|e| e - true_value).sum::<f64>() / m;
    let mae = estimates.iter().map(|e| (e - true_value).abs()).sum::<f64>() / m;
    let rmse = (estimates
        .iter()
        .map(|e| {
            let d = e - true_value;
            d * d
        })
        .sum::<f64>()
        / m)
        .sqrt();
    QuantityStats {
        name: name.to_string(),
        true_value,
        mean_estimate: true_value + mean_dev,
        bias: mean_dev.abs(),
        mae,
        rmse,
    }
}

/// Monte-Carlo study report: per-parameter and per-derived-quantity bias
/// and RMSE, replication bookkeeping, and total wall time.
#[derive(Debug, Clone)]
pub struct McReport {
    pub label: String,
    pub parameters: Vec<QuantityStats>,
    pub derived: Vec<QuantityStats>,
    pub replications_requested: usize,
    pub replications_completed: usize,
    pub replications_diverged: usize,
    pub wall_time: f64,
    pub seed: u64,
}

impl McReport {
    /// Aligned human-readable table mirroring the simulation-study layout.
    pub fn write_table<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "study: {}", self.label)?;
        writeln!(
            w,
            "replications: {} requested, {} completed, {} diverged",
            self.replications_requested, self.replications_completed, self.replications_diverged
        )?;
        writeln!(w, "seed: {}", self.seed)?;
        writeln!(w, "wall_time_s: {:.3}", self.wall_time)?;
        writeln!(
            w,
            "{:<14} {:>10} {:>10} {:>10} {:>10} {:>10}",
            "quantity", "true", "mean", "bias", "mae", "rmse"
        )?;
        for q in self.parameters.iter().chain(&self.derived) {
            writeln!(
                w,
                "{:<14} {:>10.4} {:>10.4} {:>10.4} {:>10.4} {:>10.4}",
                q.name, q.true_value, q.mean_estimate, q.bias, q.mae, q.rmse
            )?;
        }
        Ok(())
    }

    /// Machine-readable long format: one row per (quantity, metric).
    pub fn write_delimited<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "quantity,metric,value")?;
        writeln!(w, "_run,requested,{}", self.replications_requested)?;
        writeln!(w, "_run,completed,{}", self.replications_completed)?;
        writeln!(w, "_run,diverged,{}", self.replications_diverged)?;
        writeln!(w, "_run,seed,{}", self.seed)?;
        for q in self.parameters.iter().chain(&self.derived) {
            writeln!(w, "{},true,{}", q.name, q.true_value)?;
            writeln!(w, "{},mean,{}", q.name, q.mean_estimate)?;
            writeln!(w, "{},bias,{}", q.name, q.bias)?;
            writeln!(w, "{},mae,{}", q.name, q.mae)?;
            writeln!(w, "{},rmse,{}", q.name, q.rmse)?;
        }
        Ok(())
    }
}

fn perturbed_start<R: Rng>(truth: &ParameterVector, spread: f64, rng: &mut R) -> ParameterVector {
    let flat = truth.to_flat();
    let dim = flat.len();
    let mut out = Vec::with_capacity(dim);
    for (i, v) in flat.iter().enumerate() {
        let draw: f64 = rng.random();
        let jitter = (2.0 * draw - 1.0) * spread;
        let value = v + jitter;
        let value = if i == dim - 3 || i == dim - 2 {
            value.max(POSITIVE_FLOOR)
        } else if i == dim - 1 {
            value.clamp(0.0, 1.0)
        } else {
            value
        };
        out.push(value);
    }
    ParameterVector::from_flat(&out).expect("perturbed start stays admissible")
}

/// Median-split initial values for continuous-covariate data: records at or
/// below the median covariate value form the low group represented by its
/// mean x, and symmetrically above.
fn continuous_initial_values(data: &Dataset, alpha_grid: &[f64]) -> Result<InitialValues> {
    let mut xs: Vec<f64> = data.records().iter().map(|r| r.x[0]).collect();
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let median = xs[xs.len() / 2];
    let low = data
        .filter(|r| r.x[0] <= median)
        .map_err(|_| Error::DegenerateData("empty low covariate half".into()))?;
    let high = data
        .filter(|r| r.x[0] > median)
        .map_err(|_| Error::DegenerateData("empty high covariate half".into()))?;
    let mean_x = |d: &Dataset| d.records().iter().map(|r| r.x[0]).sum::<f64>() / d.len() as f64;
    let (low_x, high_x) = (mean_x(&low), mean_x(&high));
    initial_values_grouped(data, (&low, low_x), (&high, high_x), alpha_grid)
}

/// One replication's estimate, or None when it diverged (stalled fit,
/// non-finite objective, iteration-cap stop, or degenerate initial values).
fn run_replication(
    scenario: &Scenario,
    init: &InitStrategy,
    config: &SqhConfig,
    seed: u64,
    index: u64,
) -> Option<ParameterVector> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    let data = match scenario {
        Scenario::Binary(s) => generate_binary_with(s, &mut rng).ok()?.0,
        Scenario::Continuous(s) => generate_continuous_with(s, &mut rng).ok()?.0,
    };
    let start = match init {
        InitStrategy::Oracle => return scenario.true_theta().ok(),
        InitStrategy::KaplanMeier { alpha_grid } => match scenario {
            Scenario::Binary(_) => initial_values(&data, (0.0, 1.0), alpha_grid).ok()?.theta,
            Scenario::Continuous(_) => continuous_initial_values(&data, alpha_grid).ok()?.theta,
        },
        InitStrategy::PerturbedTruth { spread } => {
            let truth = scenario.true_theta().ok()?;
            perturbed_start(&truth, *spread, &mut rng)
        }
    };
    let result = fit_from_initial(&data, &start, config).ok()?;
    if !result.converged || !result.objective.is_finite() {
        return None;
    }
    ParameterVector::from_flat(&result.theta).ok()
}

/// Run the full Monte-Carlo study.
///
/// Diverged replications are counted and excluded from the bias/RMSE
/// aggregation. Derived quantities are the group cure rates (binary
/// scenarios only, where they are shared across subjects) and
/// `S_p(y | x)` at each requested target.
pub fn monte_carlo_study(
    scenario: &Scenario,
    replications: usize,
    config: &SqhConfig,
    init: &InitStrategy,
    sp_targets: &[SpTarget],
    seed: u64,
    workers: usize,
) -> Result<McReport> {
    if replications == 0 {
        return Err(Error::Config("replications must be at least 1".into()));
    }
    scenario.validate()?;
    config.validate()?;
    let truth = scenario.true_theta()?;
    let start = Instant::now();

    let estimates: Vec<Option<ParameterVector>> = install_pool(workers, || {
        (0..replications)
            .into_par_iter()
            .map(|m| run_replication(scenario, init, config, seed, m as u64))
            .collect()
    });

    let completed: Vec<&ParameterVector> = estimates.iter().flatten().collect();
    if completed.is_empty() {
        return Err(Error::AllReplicationsFailed(replications));
    }
    let diverged = replications - completed.len();

    let names = parameter_names(truth.beta.len());
    let truth_flat = truth.to_flat();
    let mut parameters = Vec::with_capacity(names.len());
    for (k, name) in names.iter().enumerate() {
        let column: Vec<f64> = completed.iter().map(|t| t.to_flat()[k]).collect();
        parameters.push(summarize(name, truth_flat[k], &column));
    }

    let mut derived = Vec::new();
    if let Scenario::Binary(_) = scenario {
        // The true value is the same functional of the true theta that the
        // estimates go through; it reproduces the scenario's (p01, p00) to
        // within an ulp and keeps oracle mode exactly zero.
        for (label, x) in [("p0[x=1]", 1.0), ("p0[x=0]", 0.0)] {
            let functional =
                |t: &ParameterVector| cure_rate_from_eta(t.beta[0] + t.beta[1] * x, t.alpha);
            let column: Vec<f64> = completed.iter().map(|t| functional(t)).collect();
            derived.push(summarize(label, functional(&truth), &column));
        }
    }
    for target in sp_targets {
        let xv = [target.x];
        let true_sp = population_survival(target.y, &xv, &truth)?;
        let column: Vec<f64> = completed
            .iter()
            .map(|t| population_survival(target.y, &xv, t).unwrap_or(f64::NAN))
            .collect();
        derived.push(summarize(
            &format!("Sp[y={},x={}]", target.y, target.x),
            true_sp,
            &column,
        ));
    }

    let label = match scenario {
        Scenario::Binary(s) => format!(
            "binary n=({},{}) p=({},{}) alpha={}",
            s.n1, s.n2, s.p01, s.p00, s.alpha
        ),
        Scenario::Continuous(s) => format!(
            "continuous n={} p=({},{}) x=[{},{}] alpha={}",
            s.n, s.p_high, s.p_low, s.x_min, s.x_max, s.alpha
        ),
    };
    Ok(McReport {
        label,
        parameters,
        derived,
        replications_requested: replications,
        replications_completed: completed.len(),
        replications_diverged: diverged,
        wall_time: start.elapsed().as_secs_f64(),
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lifetime::WeibullParams;
    use crate::simulation::CensoringInput;

    fn reference_scenario(n1: usize, n2: usize) -> Scenario {
        Scenario::Binary(BinaryScenario {
            n1,
            n2,
            p01: 0.40,
            p00: 0.20,
            alpha: 0.5,
            gamma: WeibullParams::new(0.316, 0.179).unwrap(),
            c1: 0.15,
            c2: 0.10,
            censoring: CensoringInput::Rate,
        })
    }

    #[test]
    fn oracle_mode_reports_exact_zero_error() {
        let report = monte_carlo_study(
            &reference_scenario(30, 20),
            5,
            &SqhConfig::default(),
            &InitStrategy::Oracle,
            &[SpTarget { y: 2.0, x: 0.0 }],
            9,
            0,
        )
        .unwrap();
        assert_eq!(report.replications_completed, 5);
        assert_eq!(report.replications_diverged, 0);
        for q in report.parameters.iter().chain(&report.derived) {
            assert_eq!(q.bias, 0.0, "{}", q.name);
            assert_eq!(q.mae, 0.0, "{}", q.name);
            assert_eq!(q.rmse, 0.0, "{}", q.name);
        }
    }

    #[test]
    fn single_replication_bias_equals_rmse() {
        let report = monte_carlo_study(
            &reference_scenario(60, 40),
            1,
            &SqhConfig::default(),
            &InitStrategy::KaplanMeier {
                alpha_grid: vec![0.25, 0.5, 0.75],
            },
            &[],
            21,
            0,
        )
        .unwrap();
        for q in &report.parameters {
            assert!((q.bias - q.rmse).abs() < 1e-12, "{}", q.name);
            assert!((q.bias - q.mae).abs() < 1e-12, "{}", q.name);
        }
    }

    #[test]
    fn rmse_dominates_mean_error_bias() {
        let report = monte_carlo_study(
            &reference_scenario(60, 40),
            8,
            &SqhConfig::default(),
            &InitStrategy::KaplanMeier {
                alpha_grid: vec![0.25, 0.5, 0.75],
            },
            &[SpTarget { y: 2.0, x: 1.0 }],
            33,
            0,
        )
        .unwrap();
        assert_eq!(
            report.replications_completed + report.replications_diverged,
            report.replications_requested
        );
        for q in report.parameters.iter().chain(&report.derived) {
            assert!(q.rmse >= q.bias - 1e-12, "{}: {} < {}", q.name, q.rmse, q.bias);
        }
    }

    #[test]
    fn study_is_deterministic_and_worker_independent() {
        let run = |workers| {
            monte_carlo_study(
                &reference_scenario(50, 30),
                6,
                &SqhConfig::default(),
                &InitStrategy::KaplanMeier {
                    alpha_grid: vec![0.3, 0.5, 0.7],
                },
                &[SpTarget { y: 2.0, x: 0.0 }],
                5,
                workers,
            )
            .unwrap()
        };
        let a = run(1);
        let b = run(2);
        let c = run(1);
        for ((qa, qb), qc) in a
            .parameters
            .iter()
            .zip(&b.parameters)
            .zip(&c.parameters)
        {
            assert_eq!(qa.mean_estimate.to_bits(), qb.mean_estimate.to_bits());
            assert_eq!(qa.rmse.to_bits(), qb.rmse.to_bits());
            assert_eq!(qa.mean_estimate.to_bits(), qc.mean_estimate.to_bits());
        }
        assert_eq!(a.replications_diverged, b.replications_diverged);
    }

    #[test]
    fn perturbed_truth_mode_runs() {
        let report = monte_carlo_study(
            &reference_scenario(60, 40),
            3,
            &SqhConfig::default(),
            &InitStrategy::PerturbedTruth { spread: 0.05 },
            &[],
            2,
            0,
        )
        .unwrap();
        assert!(report.replications_completed >= 1);
        // Estimates stay near the truth when started there.
        let alpha = &report.parameters[4];
        assert_eq!(alpha.name, "alpha");
        assert!(alpha.rmse < 0.25, "alpha rmse {}", alpha.rmse);
    }

    #[test]
    fn report_formats_render() {
        let report = monte_carlo_study(
            &reference_scenario(30, 20),
            2,
            &SqhConfig::default(),
            &InitStrategy::Oracle,
            &[],
            1,
            0,
        )
        .unwrap();
        let mut table = Vec::new();
        report.write_table(&mut table).unwrap();
        let text = String::from_utf8(table).unwrap();
        assert!(text.contains("quantity"));
        assert!(text.contains("alpha"));
        let mut long = Vec::new();
        report.write_delimited(&mut long).unwrap();
        let text = String::from_utf8(long).unwrap();
        assert!(text.lines().count() > 25);
        assert!(text.starts_with("quantity,metric,value"));
    }

    #[test]
    fn continuous_scenario_study_runs() {
        let scenario = Scenario::Continuous(ContinuousScenario {
            n: 120,
            p_high: 0.65,
            p_low: 0.05,
            x_min: 0.1,
            x_max: 20.0,
            alpha: 0.5,
            gamma: WeibullParams::new(0.316, 0.179).unwrap(),
            c: 0.15,
            censoring: CensoringInput::Rate,
        });
        let report = monte_carlo_study(
            &scenario,
            3,
            &SqhConfig::default(),
            &InitStrategy::KaplanMeier {
                alpha_grid: vec![0.25, 0.5, 0.75],
            },
            &[SpTarget { y: 2.0, x: 10.0 }],
            14,
            0,
        )
        .unwrap();
        assert!(report.replications_completed >= 1);
        // No shared cure-rate derived quantities for continuous covariates.
        assert_eq!(report.derived.len(), 1);
    }
}
