//! Command implementations behind the `bct-cure` binary: simulate, fit,
//! mc-study, bootstrap, residuals, km. Every command is a pure function of
//! (input files, config, seed) up to wall-time fields in the reports.

use crate::config::{apply_sweep, RunConfig};
use crate::error::{Error, Result};
use crate::inference::{
    bootstrap_se, fit_dataset, kaplan_meier, ks_normality, quantile_residuals, BootstrapSummary,
    FitReport,
};
use crate::io::{read_dataset_csv, read_theta, write_dataset_csv, write_theta};
use crate::mc::{monte_carlo_study, McReport, Scenario};
use crate::model::{Dataset, ParameterVector};
use crate::numeric::normal_quantile;
use crate::simulation::{generate_binary, generate_continuous};
use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

/// Resolved invocation context: parsed config plus the command-line
/// overrides for seed, output directory and worker count.
pub struct CliContext {
    pub config: RunConfig,
    pub seed: u64,
    pub out_dir: PathBuf,
    pub workers: usize,
}

impl CliContext {
    pub fn new(
        config: RunConfig,
        seed_flag: Option<u64>,
        out_dir: PathBuf,
        workers_flag: Option<usize>,
    ) -> Self {
        let seed = seed_flag.or(config.seed).unwrap_or(0);
        let workers = workers_flag.or(config.workers).unwrap_or(0);
        CliContext {
            config,
            seed,
            out_dir,
            workers,
        }
    }

    fn out_path(&self, name: &str) -> Result<PathBuf> {
        std::fs::create_dir_all(&self.out_dir).map_err(|e| Error::io(&self.out_dir, e))?;
        Ok(self.out_dir.join(name))
    }
}

fn write_file(path: &Path, render: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut writer = BufWriter::new(file);
    render(&mut writer).map_err(|e| Error::io(path, e))?;
    writer.flush().map_err(|e| Error::io(path, e))
}

/// Generate a dataset from the configured scenario and write `dataset.csv`.
/// Returns the file path and a printable summary.
pub fn cmd_simulate(ctx: &CliContext) -> Result<(PathBuf, String)> {
    let scenario = ctx.config.scenario()?;
    let data = match &scenario {
        Scenario::Binary(s) => generate_binary(s, ctx.seed)?,
        Scenario::Continuous(s) => generate_continuous(s, ctx.seed)?,
    };
    let path = ctx.out_path("dataset.csv")?;
    write_dataset_csv(&path, &data)?;

    let mut summary = String::new();
    let _ = writeln!(summary, "wrote {} records to {}", data.len(), path.display());
    let _ = writeln!(
        summary,
        "censored: {:.1}%",
        100.0 * data.censoring_fraction()
    );
    if let Scenario::Binary(_) = scenario {
        let n1 = data.records().iter().filter(|r| r.x[0] == 1.0).count();
        let _ = writeln!(summary, "group sizes: x=1 {} | x=0 {}", n1, data.len() - n1);
    }
    Ok((path, summary))
}

/// Covariate values cure rates are reported at: every distinct value when
/// there are at most ten, otherwise the quartiles of the covariate.
fn cure_group_values(data: &Dataset) -> Result<Vec<f64>> {
    let distinct = data.distinct_covariate_values()?;
    if distinct.len() <= 10 {
        return Ok(distinct);
    }
    let mut xs: Vec<f64> = data.records().iter().map(|r| r.x[0]).collect();
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let quantile = |q: f64| xs[((xs.len() - 1) as f64 * q).round() as usize];
    Ok(vec![
        quantile(0.0),
        quantile(0.25),
        quantile(0.5),
        quantile(0.75),
        quantile(1.0),
    ])
}

/// Fit the BCT model to a dataset file: KM-based initial values, SQH
/// maximization, cure rates per group. Writes `fit_report.txt`,
/// `fit_report.csv`, `theta.txt` and `trace.csv`.
pub fn cmd_fit(ctx: &CliContext, data_file: &Path) -> Result<FitReport> {
    let data = read_dataset_csv(data_file)?;
    if data.covariate_dim() != 1 {
        return Err(Error::Data(format!(
            "fit supports a single covariate column, found {}",
            data.covariate_dim()
        )));
    }
    let values = data.distinct_covariate_values()?;
    let extreme = (values[0], *values.last().unwrap());
    let grid = ctx.config.alpha_grid()?;
    let sqh = ctx.config.sqh()?;
    let outcome = fit_dataset(&data, extreme, &grid, &sqh)?;

    let mut report = FitReport::new(&outcome, &cure_group_values(&data)?);
    let residual_sets = ctx
        .config
        .residuals
        .as_ref()
        .and_then(|r| r.sets)
        .unwrap_or(5);
    let residuals = quantile_residuals(&data, &outcome.theta, residual_sets, ctx.seed)?;
    if residuals.len() >= 5 {
        report.residual_ks = Some(ks_normality(&residuals)?);
    }

    write_file(&ctx.out_path("fit_report.txt")?, |w| {
        report.write_key_value(w)
    })?;
    write_file(&ctx.out_path("fit_report.csv")?, |w| {
        report.write_delimited(w)
    })?;
    write_theta(&ctx.out_path("theta.txt")?, &outcome.theta)?;
    write_file(&ctx.out_path("trace.csv")?, |w| {
        outcome.result.trace.write_delimited(w)
    })?;
    Ok(report)
}

fn sweep_file_label(parameter: &str, value: f64) -> String {
    format!("{parameter}_{value}").replace('.', "p")
}

/// Run the configured Monte-Carlo study: one report for the base SQH
/// settings plus one per sensitivity sweep point. Writes
/// `mc_<label>.txt` / `mc_<label>.csv` per report.
pub fn cmd_mc_study(ctx: &CliContext) -> Result<Vec<(String, McReport)>> {
    let scenario = ctx.config.scenario()?;
    let mc = ctx
        .config
        .mc
        .as_ref()
        .ok_or_else(|| Error::Config("mc-study needs an [mc] section".into()))?;
    let base = ctx.config.sqh()?;
    let init = ctx.config.init_strategy()?;
    let targets = ctx.config.sp_targets();

    let mut runs: Vec<(String, crate::sqh::SqhConfig)> = vec![("base".into(), base.clone())];
    for (parameter, value) in ctx.config.sweep_points() {
        runs.push((
            sweep_file_label(&parameter, value),
            apply_sweep(&base, &parameter, value)?,
        ));
    }

    let mut reports = Vec::with_capacity(runs.len());
    for (label, config) in runs {
        let report = monte_carlo_study(
            &scenario,
            mc.replications,
            &config,
            &init,
            &targets,
            ctx.seed,
            ctx.workers,
        )?;
        write_file(&ctx.out_path(&format!("mc_{label}.txt"))?, |w| {
            report.write_table(w)
        })?;
        write_file(&ctx.out_path(&format!("mc_{label}.csv"))?, |w| {
            report.write_delimited(w)
        })?;
        reports.push((label, report));
    }
    Ok(reports)
}

/// Bootstrap standard errors for a dataset file. Writes
/// `bootstrap_se.txt` / `bootstrap_se.csv`.
pub fn cmd_bootstrap(ctx: &CliContext, data_file: &Path) -> Result<BootstrapSummary> {
    let data = read_dataset_csv(data_file)?;
    let block = ctx
        .config
        .bootstrap
        .as_ref()
        .ok_or_else(|| Error::Config("bootstrap needs a [bootstrap] section".into()))?;
    let summary = bootstrap_se(
        &data,
        block.resamples,
        &ctx.config.sqh()?,
        &ctx.config.alpha_grid()?,
        ctx.seed,
        ctx.workers,
    )?;
    write_file(&ctx.out_path("bootstrap_se.txt")?, |w| {
        summary.write_key_value(w)
    })?;
    write_file(&ctx.out_path("bootstrap_se.csv")?, |w| {
        summary.write_delimited(w)
    })?;
    Ok(summary)
}

/// Quantile residuals of a dataset under a fitted parameter file; writes QQ
/// coordinates (`qq.csv`) and the KS normality test (`ks.txt`).
pub fn cmd_residuals(
    ctx: &CliContext,
    data_file: &Path,
    theta_file: &Path,
) -> Result<(f64, f64)> {
    let data = read_dataset_csv(data_file)?;
    let theta: ParameterVector = read_theta(theta_file)?;
    if data.covariate_dim() + 1 != theta.beta.len() {
        return Err(Error::Data(format!(
            "theta has {} regression coefficients but the data has {} covariates",
            theta.beta.len(),
            data.covariate_dim()
        )));
    }
    let sets = ctx
        .config
        .residuals
        .as_ref()
        .and_then(|r| r.sets)
        .unwrap_or(5);
    let residuals = quantile_residuals(&data, &theta, sets, ctx.seed)?;
    let ks = ks_normality(&residuals)?;

    let n = residuals.len();
    write_file(&ctx.out_path("qq.csv")?, |w| {
        writeln!(w, "theoretical,sample")?;
        for (i, r) in residuals.iter().enumerate() {
            let q = normal_quantile((i as f64 + 0.5) / n as f64);
            writeln!(w, "{q},{r}")?;
        }
        Ok(())
    })?;
    write_file(&ctx.out_path("ks.txt")?, |w| {
        writeln!(w, "ks_statistic = {}", ks.0)?;
        writeln!(w, "ks_p_value = {}", ks.1)
    })?;
    Ok(ks)
}

/// Kaplan-Meier curves per covariate group (up to ten distinct values,
/// otherwise pooled), written as two-column delimited files.
pub fn cmd_km(ctx: &CliContext, data_file: &Path) -> Result<Vec<PathBuf>> {
    let data = read_dataset_csv(data_file)?;
    let mut written = Vec::new();
    let groups: Vec<Option<f64>> = if data.covariate_dim() == 1 {
        let distinct = data.distinct_covariate_values()?;
        if distinct.len() <= 10 {
            distinct.into_iter().map(Some).collect()
        } else {
            vec![None]
        }
    } else {
        vec![None]
    };
    for group in groups {
        let (curve, name) = match group {
            Some(x) => (kaplan_meier(&data.filter(|r| r.x[0] == x)?), format!("km_x={x}.csv")),
            None => (kaplan_meier(&data), "km_all.csv".to_string()),
        };
        let path = ctx.out_path(&name)?;
        write_file(&path, |w| curve.write_delimited(w))?;
        written.push(path);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::RunConfig;

    fn ctx(text: &str, dir: &Path) -> CliContext {
        CliContext::new(RunConfig::parse(text).unwrap(), None, dir.to_path_buf(), None)
    }

    const SIM: &str = r#"
seed = 42
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
"#;

    #[test]
    fn simulate_writes_round_trippable_csv() {
        let dir = tempfile::tempdir().unwrap();
        let context = ctx(SIM, dir.path());
        let (path, summary) = cmd_simulate(&context).unwrap();
        assert!(summary.contains("200 records"));
        let data = read_dataset_csv(&path).unwrap();
        assert_eq!(data.len(), 200);
        // Same config and seed give byte-identical output.
        let bytes_a = std::fs::read(&path).unwrap();
        cmd_simulate(&context).unwrap();
        let bytes_b = std::fs::read(&path).unwrap();
        assert_eq!(bytes_a, bytes_b);
    }

    #[test]
    fn simulate_rejects_invalid_scenario() {
        let dir = tempfile::tempdir().unwrap();
        let bad = SIM.replace("p01 = 0.40", "p01 = 1.2");
        let context = ctx(&bad, dir.path());
        let err = cmd_simulate(&context).unwrap_err();
        assert!(matches!(&err, Error::Config(msg) if msg.contains("p01")));
    }

    #[test]
    fn fit_writes_reports_and_theta_feeds_residuals() {
        let dir = tempfile::tempdir().unwrap();
        let context = ctx(SIM, dir.path());
        let (data_path, _) = cmd_simulate(&context).unwrap();
        let report = cmd_fit(&context, &data_path).unwrap();
        assert!(report.converged);
        assert!(dir.path().join("fit_report.txt").exists());
        assert!(dir.path().join("trace.csv").exists());
        let theta_path = dir.path().join("theta.txt");
        assert!(theta_path.exists());
        let (_, p) = cmd_residuals(&context, &data_path, &theta_path).unwrap();
        assert!(p > 0.0);
        assert!(dir.path().join("qq.csv").exists());
    }

    #[test]
    fn km_writes_group_curves() {
        let dir = tempfile::tempdir().unwrap();
        let context = ctx(SIM, dir.path());
        let (data_path, _) = cmd_simulate(&context).unwrap();
        let files = cmd_km(&context, &data_path).unwrap();
        assert_eq!(files.len(), 2);
        let text = std::fs::read_to_string(&files[0]).unwrap();
        assert!(text.starts_with("time,survival\n0,1\n"));
    }

    #[test]
    fn residuals_requires_matching_dimensions() {
        let dir = tempfile::tempdir().unwrap();
        let context = ctx(SIM, dir.path());
        let (data_path, _) = cmd_simulate(&context).unwrap();
        let theta_path = dir.path().join("theta.txt");
        std::fs::write(
            &theta_path,
            "beta0 = 0.9\nbeta1 = -0.7\nbeta2 = 0.1\ngamma1 = 0.3\ngamma2 = 0.2\nalpha = 0.5\n",
        )
        .unwrap();
        assert!(cmd_residuals(&context, &data_path, &theta_path).is_err());
    }
}
