//! Run configuration: flat key-value text with one section per block,
//! parsed as TOML. Unknown keys are rejected. Every omitted tuning constant
//! defaults to the reference settings (`epsilon = lambda = rho = 1000`,
//! `zeta = 0.5`, `kappa = 0.001`, `max_iter = 1000`).

use crate::error::{Error, Result};
use crate::lifetime::WeibullParams;
use crate::mc::{InitStrategy, Scenario, SpTarget};
use crate::simulation::{BinaryScenario, CensoringInput, ContinuousScenario};
use crate::sqh::{InnerSearchConfig, SqhConfig, UpdateScheme};
use serde::Deserialize;
use std::path::Path;

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub binary: Option<BinaryBlock>,
    pub continuous: Option<ContinuousBlock>,
    pub sqh: Option<SqhBlock>,
    pub init: Option<InitBlock>,
    pub mc: Option<McBlock>,
    pub bootstrap: Option<BootstrapBlock>,
    pub residuals: Option<ResidualsBlock>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BinaryBlock {
    pub n1: usize,
    pub n2: usize,
    pub p01: f64,
    pub p00: f64,
    pub alpha: f64,
    pub gamma1: f64,
    pub gamma2: f64,
    pub c1: f64,
    pub c2: f64,
    /// `"rate"` (default) or `"proportion"`.
    pub censoring: Option<String>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContinuousBlock {
    pub n: usize,
    pub p_high: f64,
    pub p_low: f64,
    pub x_min: f64,
    pub x_max: f64,
    pub alpha: f64,
    pub gamma1: f64,
    pub gamma2: f64,
    pub c: f64,
    pub censoring: Option<String>,
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct SqhBlock {
    pub epsilon0: Option<f64>,
    pub lambda: Option<f64>,
    pub zeta: Option<f64>,
    pub rho: Option<f64>,
    pub kappa: Option<f64>,
    pub max_iter: Option<usize>,
    pub window: Option<f64>,
    pub inner_tol: Option<f64>,
    pub max_step_ups: Option<usize>,
    /// `"jacobi"` (default) or `"gauss-seidel"`.
    pub update: Option<String>,
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct InitBlock {
    /// `"kaplan-meier"` (default), `"perturbed-truth"`, or `"oracle"`.
    pub strategy: Option<String>,
    pub alpha_grid_points: Option<usize>,
    pub perturb_spread: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McBlock {
    pub replications: usize,
    /// `(y, x)` pairs at which S_p estimation error is tracked.
    pub sp_targets: Option<Vec<[f64; 2]>>,
    pub sweep_zeta: Option<Vec<f64>>,
    pub sweep_lambda: Option<Vec<f64>>,
    pub sweep_rho: Option<Vec<f64>>,
    pub sweep_epsilon0: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BootstrapBlock {
    pub resamples: usize,
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct ResidualsBlock {
    pub sets: Option<usize>,
}

fn censoring_input(raw: &Option<String>) -> Result<CensoringInput> {
    match raw.as_deref() {
        None | Some("rate") => Ok(CensoringInput::Rate),
        Some("proportion") => Ok(CensoringInput::Proportion),
        Some(other) => Err(Error::Config(format!(
            "censoring must be 'rate' or 'proportion', got '{other}'"
        ))),
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    /// The scenario block, requiring exactly one of `[binary]` /
    /// `[continuous]`.
    pub fn scenario(&self) -> Result<Scenario> {
        match (&self.binary, &self.continuous) {
            (Some(b), None) => {
                let scenario = BinaryScenario {
                    n1: b.n1,
                    n2: b.n2,
                    p01: b.p01,
                    p00: b.p00,
                    alpha: b.alpha,
                    gamma: WeibullParams::new(b.gamma1, b.gamma2)
                        .map_err(|e| Error::Config(e.to_string()))?,
                    c1: b.c1,
                    c2: b.c2,
                    censoring: censoring_input(&b.censoring)?,
                };
                scenario.validate()?;
                Ok(Scenario::Binary(scenario))
            }
            (None, Some(c)) => {
                let scenario = ContinuousScenario {
                    n: c.n,
                    p_high: c.p_high,
                    p_low: c.p_low,
                    x_min: c.x_min,
                    x_max: c.x_max,
                    alpha: c.alpha,
                    gamma: WeibullParams::new(c.gamma1, c.gamma2)
                        .map_err(|e| Error::Config(e.to_string()))?,
                    c: c.c,
                    censoring: censoring_input(&c.censoring)?,
                };
                scenario.validate()?;
                Ok(Scenario::Continuous(scenario))
            }
            (Some(_), Some(_)) => Err(Error::Config(
                "configure exactly one of [binary] and [continuous], not both".into(),
            )),
            (None, None) => Err(Error::Config(
                "missing scenario: add a [binary] or [continuous] section".into(),
            )),
        }
    }

    pub fn sqh(&self) -> Result<SqhConfig> {
        let block = self.sqh.clone().unwrap_or_default();
        let defaults = SqhConfig::default();
        let update = match block.update.as_deref() {
            None | Some("jacobi") => UpdateScheme::Jacobi,
            Some("gauss-seidel") => UpdateScheme::GaussSeidel,
            Some(other) => {
                return Err(Error::Config(format!(
                    "update must be 'jacobi' or 'gauss-seidel', got '{other}'"
                )))
            }
        };
        let config = SqhConfig {
            epsilon0: block.epsilon0.unwrap_or(defaults.epsilon0),
            lambda: block.lambda.unwrap_or(defaults.lambda),
            zeta: block.zeta.unwrap_or(defaults.zeta),
            rho: block.rho.unwrap_or(defaults.rho),
            kappa: block.kappa.unwrap_or(defaults.kappa),
            max_iter: block.max_iter.unwrap_or(defaults.max_iter),
            inner: InnerSearchConfig {
                window: block.window.unwrap_or(defaults.inner.window),
                tol: block.inner_tol.unwrap_or(defaults.inner.tol),
                max_step_ups: block.max_step_ups.unwrap_or(defaults.inner.max_step_ups),
                update,
            },
        };
        config.validate()?;
        Ok(config)
    }

    pub fn alpha_grid(&self) -> Result<Vec<f64>> {
        let points = self
            .init
            .as_ref()
            .and_then(|b| b.alpha_grid_points)
            .unwrap_or(21);
        if points < 1 {
            return Err(Error::Config("init.alpha_grid_points must be >= 1".into()));
        }
        if points == 1 {
            return Ok(vec![0.5]);
        }
        Ok((0..points)
            .map(|i| i as f64 / (points - 1) as f64)
            .collect())
    }

    pub fn init_strategy(&self) -> Result<InitStrategy> {
        let block = self.init.clone().unwrap_or_default();
        match block.strategy.as_deref() {
            None | Some("kaplan-meier") => Ok(InitStrategy::KaplanMeier {
                alpha_grid: self.alpha_grid()?,
            }),
            Some("perturbed-truth") => Ok(InitStrategy::PerturbedTruth {
                spread: block.perturb_spread.unwrap_or(0.1),
            }),
            Some("oracle") => Ok(InitStrategy::Oracle),
            Some(other) => Err(Error::Config(format!(
                "init.strategy must be 'kaplan-meier', 'perturbed-truth' or 'oracle', got \
                 '{other}'"
            ))),
        }
    }

    pub fn sp_targets(&self) -> Vec<SpTarget> {
        self.mc
            .as_ref()
            .and_then(|m| m.sp_targets.as_ref())
            .map(|targets| {
                targets
                    .iter()
                    .map(|[y, x]| SpTarget { y: *y, x: *x })
                    .collect()
            })
            .unwrap_or_default()
    }

    /// Sensitivity sweep as `(parameter, value)` points, one tuning constant
    /// varied at a time from the base `[sqh]` block.
    pub fn sweep_points(&self) -> Vec<(String, f64)> {
        let mut points = Vec::new();
        if let Some(mc) = &self.mc {
            for (name, list) in [
                ("zeta", &mc.sweep_zeta),
                ("lambda", &mc.sweep_lambda),
                ("rho", &mc.sweep_rho),
                ("epsilon0", &mc.sweep_epsilon0),
            ] {
                if let Some(values) = list {
                    for &v in values {
                        points.push((name.to_string(), v));
                    }
                }
            }
        }
        points
    }
}

/// Apply one sweep point to a base SQH config.
pub fn apply_sweep(base: &SqhConfig, parameter: &str, value: f64) -> Result<SqhConfig> {
    let mut config = base.clone();
    match parameter {
        "zeta" => config.zeta = value,
        "lambda" => config.lambda = value,
        "rho" => config.rho = value,
        "epsilon0" => config.epsilon0 = value,
        other => {
            return Err(Error::Config(format!(
                "unknown sweep parameter '{other}'"
            )))
        }
    }
    config.validate()?;
    Ok(config)
}

#[cfg(test)]
mod tests {
    use super::*;

    const FULL: &str = r#"
seed = 42
workers = 2

[binary]
n1 = 120
n2 = 80
p01 = 0.40
p00 = 0.20
alpha = 0.5
gamma1 = 0.316
gamma2 = 0.179
c1 = 0.15
c2 = 0.10

[sqh]
zeta = 0.9

[mc]
replications = 100
sp_targets = [[2.0, 0.0], [2.0, 1.0]]
sweep_zeta = [0.1, 0.5, 0.9]

[bootstrap]
resamples = 50
"#;

    #[test]
    fn parses_full_config() {
        let config = RunConfig::parse(FULL).unwrap();
        assert_eq!(config.seed, Some(42));
        let scenario = config.scenario().unwrap();
        assert!(matches!(scenario, Scenario::Binary(_)));
        let sqh = config.sqh().unwrap();
        assert_eq!(sqh.zeta, 0.9);
        // Omitted constants keep the reference defaults.
        assert_eq!(sqh.epsilon0, 1000.0);
        assert_eq!(sqh.lambda, 1000.0);
        assert_eq!(sqh.rho, 1000.0);
        assert_eq!(sqh.kappa, 0.001);
        assert_eq!(sqh.max_iter, 1000);
        assert_eq!(config.sp_targets().len(), 2);
        assert_eq!(config.sweep_points().len(), 3);
        assert_eq!(config.alpha_grid().unwrap().len(), 21);
    }

    #[test]
    fn rejects_unknown_keys_naming_the_field() {
        let err = RunConfig::parse("seeed = 4\n").unwrap_err();
        assert!(matches!(&err, Error::Config(msg) if msg.contains("seeed")));
        let err = RunConfig::parse("[binary]\nn1 = 1\nn2 = 1\np01 = 0.4\np00 = 0.2\nalpha = 0.5\ngamma1 = 1.0\ngamma2 = 1.0\nc1 = 0.1\nc2 = 0.1\nbogus = 3\n")
            .unwrap_err();
        assert!(matches!(&err, Error::Config(msg) if msg.contains("bogus")));
    }

    #[test]
    fn rejects_invalid_scenario_values_naming_the_field() {
        let text = "[binary]\nn1 = 10\nn2 = 10\np01 = 1.2\np00 = 0.2\nalpha = 0.5\ngamma1 = 0.3\ngamma2 = 0.2\nc1 = 0.1\nc2 = 0.1\n";
        let config = RunConfig::parse(text).unwrap();
        let err = config.scenario().unwrap_err();
        assert!(matches!(&err, Error::Config(msg) if msg.contains("p01")));
    }

    #[test]
    fn requires_exactly_one_scenario() {
        let config = RunConfig::parse("seed = 1\n").unwrap();
        assert!(config.scenario().is_err());
    }

    #[test]
    fn alpha_grid_spacing() {
        let config = RunConfig::parse("[init]\nalpha_grid_points = 5\n").unwrap();
        assert_eq!(config.alpha_grid().unwrap(), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
    }

    #[test]
    fn init_strategies_parse() {
        let config = RunConfig::parse("[init]\nstrategy = \"perturbed-truth\"\n").unwrap();
        assert!(matches!(
            config.init_strategy().unwrap(),
            InitStrategy::PerturbedTruth { spread } if spread == 0.1
        ));
        let config = RunConfig::parse("[init]\nstrategy = \"oracle\"\n").unwrap();
        assert!(matches!(config.init_strategy().unwrap(), InitStrategy::Oracle));
        let config = RunConfig::parse("[init]\nstrategy = \"nope\"\n").unwrap();
        assert!(config.init_strategy().is_err());
    }

    #[test]
    fn sweep_application() {
        let base = SqhConfig::default();
        let swept = apply_sweep(&base, "zeta", 0.1).unwrap();
        assert_eq!(swept.zeta, 0.1);
        assert_eq!(swept.lambda, base.lambda);
        assert!(apply_sweep(&base, "zeta", 1.5).is_err());
        assert!(apply_sweep(&base, "nonsense", 1.0).is_err());
    }
}
