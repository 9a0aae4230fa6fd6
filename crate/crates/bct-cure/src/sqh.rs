//! Generic gradient-free sequential quadratic Hamiltonian (SQH) maximizer
//! over a box-constrained parameter space.
//!
//! Each outer iteration maximizes the augmented objective
//! `l(theta) - epsilon ||theta - theta_k||^2` coordinate by coordinate
//! (Jacobi style: every one-dimensional search is anchored at `theta_k`),
//! then applies the sufficient-increase test `l(theta) - l(theta_k) >= rho tau`
//! with `tau = ||theta - theta_k||^2`. On rejection the penalty is stepped up
//! (`epsilon *= lambda`) and the candidates recomputed; on acceptance it is
//! stepped down (`epsilon *= zeta`). The loop stops when `tau < kappa` or the
//! iteration cap is reached.
//!
//! Note that `kappa` is compared against the SQUARED step norm `tau`, not the
//! norm itself; `kappa = 0.001` therefore stops at step length ~0.032.
//!
//! The one-dimensional searches use golden-section on the window
//! `[theta_i - w, theta_i + w]` intersected with the box, with
//! `w = window / sqrt(1 + epsilon)` so the search localizes as the penalty
//! grows. The search result is compared against the window endpoints and
//! against staying at `theta_i`, so a candidate coordinate is never worse
//! than the current point.

use crate::error::{Error, Result};
use crate::numeric::squared_distance;
use std::io::Write;
use std::time::Instant;

/// Coordinate lower bound used for strictly positive parameters when a box
/// is built for the BCT model (the open constraint `gamma > 0` closed for
/// search).
pub const POSITIVE_FLOOR: f64 = 1e-10;

/// Per-coordinate bound intervals; entries may be infinite.
#[derive(Debug, Clone, PartialEq)]
pub struct AdmissibleBox {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl AdmissibleBox {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::Domain(format!(
                "box bound lengths differ: {} vs {}",
                lower.len(),
                upper.len()
            )));
        }
        for (i, (lo, hi)) in lower.iter().zip(&upper).enumerate() {
            if lo.is_nan() || hi.is_nan() || !(lo < hi) {
                return Err(Error::Domain(format!(
                    "coordinate {i}: lower bound {lo} must be below upper bound {hi}"
                )));
            }
        }
        Ok(Self { lower, upper })
    }

    pub fn unbounded(dim: usize) -> Self {
        Self {
            lower: vec![f64::NEG_INFINITY; dim],
            upper: vec![f64::INFINITY; dim],
        }
    }

    /// Admissible set for the BCT model with `n_beta` regression coefficients:
    /// `beta` free, `gamma` in `[POSITIVE_FLOOR, inf)`, `alpha` in `[0, 1]`.
    pub fn for_bct(n_beta: usize) -> Self {
        let mut lower = vec![f64::NEG_INFINITY; n_beta];
        let mut upper = vec![f64::INFINITY; n_beta];
        lower.extend_from_slice(&[POSITIVE_FLOOR, POSITIVE_FLOOR, 0.0]);
        upper.extend_from_slice(&[f64::INFINITY, f64::INFINITY, 1.0]);
        Self { lower, upper }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn contains(&self, theta: &[f64]) -> bool {
        theta.len() == self.dim()
            && theta
                .iter()
                .enumerate()
                .all(|(i, v)| *v >= self.lower[i] && *v <= self.upper[i])
    }
}

/// How the coordinate searches of one outer iteration are anchored.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum UpdateScheme {
    /// All coordinates are maximized holding the others at `theta_k`.
    #[default]
    Jacobi,
    /// Coordinates are maximized sequentially, each seeing the ones already
    /// updated this iteration. The penalty stays anchored at `theta_k`.
    GaussSeidel,
}

/// Tuning of the one-dimensional coordinate searches.
#[derive(Debug, Clone, PartialEq)]
pub struct InnerSearchConfig {
    /// Base window half-width `w0`; the actual half-width is
    /// `w0 / sqrt(1 + epsilon)`.
    pub window: f64,
    /// Golden-section interval tolerance.
    pub tol: f64,
    /// Consecutive penalty step-ups allowed before declaring a stall.
    pub max_step_ups: usize,
    pub update: UpdateScheme,
}

impl Default for InnerSearchConfig {
    fn default() -> Self {
        Self {
            window: 10.0,
            tol: 1e-8,
            max_step_ups: 100,
            update: UpdateScheme::Jacobi,
        }
    }
}

/// SQH tuning constants. The defaults are the reference settings
/// `epsilon = lambda = rho = 1000`, `zeta = 0.5`, `kappa = 0.001`,
/// `max_iter = 1000`.
#[derive(Debug, Clone, PartialEq)]
pub struct SqhConfig {
    /// Initial penalty weight `epsilon > 0`.
    pub epsilon0: f64,
    /// Step-up factor `lambda > 1` applied on insufficient increase.
    pub lambda: f64,
    /// Step-down factor `zeta` in `(0, 1)` applied on acceptance.
    pub zeta: f64,
    /// Sufficient-increase constant `rho > 0`.
    pub rho: f64,
    /// Stopping tolerance on the squared step norm `tau`.
    pub kappa: f64,
    /// Cap on accepted iterations.
    pub max_iter: usize,
    pub inner: InnerSearchConfig,
}

impl Default for SqhConfig {
    fn default() -> Self {
        Self {
            epsilon0: 1000.0,
            lambda: 1000.0,
            zeta: 0.5,
            rho: 1000.0,
            kappa: 0.001,
            max_iter: 1000,
            inner: InnerSearchConfig::default(),
        }
    }
}

impl SqhConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon0 > 0.0) {
            return Err(Error::Config(format!(
                "sqh.epsilon0 must be positive, got {}",
                self.epsilon0
            )));
        }
        if !(self.lambda > 1.0) {
            return Err(Error::Config(format!(
                "sqh.lambda must exceed 1, got {}",
                self.lambda
            )));
        }
        if !(self.zeta > 0.0 && self.zeta < 1.0) {
            return Err(Error::Config(format!(
                "sqh.zeta must lie in (0,1), got {}",
                self.zeta
            )));
        }
        if !(self.rho > 0.0) {
            return Err(Error::Config(format!(
                "sqh.rho must be positive, got {}",
                self.rho
            )));
        }
        if !(self.kappa > 0.0) {
            return Err(Error::Config(format!(
                "sqh.kappa must be positive, got {}",
                self.kappa
            )));
        }
        if self.max_iter == 0 {
            return Err(Error::Config("sqh.max_iter must be at least 1".into()));
        }
        if !(self.inner.window > 0.0) || !(self.inner.tol > 0.0) {
            return Err(Error::Config(
                "sqh inner window and tolerance must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// One accepted SQH iteration.
#[derive(Debug, Clone)]
pub struct TraceEntry {
    /// Accepted-iteration index, starting at 1.
    pub iteration: usize,
    /// Parameter snapshot after the step.
    pub theta: Vec<f64>,
    /// Objective value `l(theta)` after the step.
    pub objective: f64,
    /// Penalty at which the accepted candidates were computed (before the
    /// step-down).
    pub epsilon: f64,
    /// Squared step norm `||theta_{k+1} - theta_k||^2`.
    pub tau: f64,
    /// Penalty step-ups it took to find an acceptable candidate.
    pub step_ups: usize,
}

/// Audit trail of all accepted iterations.
#[derive(Debug, Clone, Default)]
pub struct SqhTrace {
    pub entries: Vec<TraceEntry>,
}

impl SqhTrace {
    /// Write the trace as a delimited table with columns
    /// `iteration, objective, epsilon, tau, step_ups`.
    pub fn write_delimited<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "iteration,objective,epsilon,tau,step_ups")?;
        for e in &self.entries {
            writeln!(
                w,
                "{},{},{},{},{}",
                e.iteration, e.objective, e.epsilon, e.tau, e.step_ups
            )?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SqhResult {
    pub theta: Vec<f64>,
    pub objective: f64,
    /// Number of accepted iterations.
    pub iterations: usize,
    /// True when the run stopped because `tau < kappa` (as opposed to the
    /// iteration cap).
    pub converged: bool,
    pub trace: SqhTrace,
    pub wall_time: f64,
}

/// Augmented objective `l(theta) - epsilon ||theta - anchor||^2`.
pub fn augmented_objective<F: Fn(&[f64]) -> f64>(
    theta: &[f64],
    anchor: &[f64],
    epsilon: f64,
    objective: F,
) -> f64 {
    objective(theta) - epsilon * squared_distance(theta, anchor)
}

/// Golden-section maximization of `g` on `[a, b]`; returns the best point
/// evaluated. NaN values of `g` are treated as `-inf`.
fn golden_max<G: Fn(f64) -> f64>(g: &G, a: f64, b: f64, tol: f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_9; // (sqrt(5) - 1) / 2
    let eval = |v: f64| {
        let f = g(v);
        if f.is_nan() {
            f64::NEG_INFINITY
        } else {
            f
        }
    };
    let (mut a, mut b) = (a, b);
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = eval(x1);
    let mut f2 = eval(x2);
    let (mut best_x, mut best_f) = if f1 >= f2 { (x1, f1) } else { (x2, f2) };
    while b - a > tol {
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = eval(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = eval(x1);
        }
        let (x, f) = if f1 >= f2 { (x1, f1) } else { (x2, f2) };
        if f > best_f {
            best_x = x;
            best_f = f;
        }
    }
    (best_x, best_f)
}

/// Simultaneous coordinate-wise maximization of the augmented objective
/// anchored at `theta_k`.
///
/// Coordinate `i` maximizes `v -> l(theta_k with i -> v) - epsilon (v - theta_k_i)^2`
/// over the window `[theta_k_i - w, theta_k_i + w]` intersected with the box,
/// then takes the best of the search result, the window endpoints, and
/// `theta_k_i` itself, so no coordinate comes back worse than staying put.
pub fn coordinate_candidates<F: Fn(&[f64]) -> f64>(
    theta_k: &[f64],
    epsilon: f64,
    bounds: &AdmissibleBox,
    inner: &InnerSearchConfig,
    objective: F,
) -> Result<Vec<f64>> {
    if !bounds.contains(theta_k) {
        return Err(Error::Domain(
            "current iterate lies outside the admissible box".into(),
        ));
    }
    let value_k = objective(theta_k);
    if value_k.is_nan() {
        return Err(Error::EvaluationFailure(
            "objective is NaN at the current iterate".into(),
        ));
    }
    let w = inner.window / (1.0 + epsilon).sqrt();
    let mut working = theta_k.to_vec();
    let mut candidate = theta_k.to_vec();

    for i in 0..theta_k.len() {
        let center = theta_k[i];
        let lo = (center - w).max(bounds.lower[i]);
        let hi = (center + w).min(bounds.upper[i]);
        let g = |v: f64| {
            let mut point = working.clone();
            point[i] = v;
            let d = v - center;
            objective(&point) - epsilon * d * d
        };
        // Staying put scores l(working at center) minus the fixed penalty of
        // already-updated coordinates; under Jacobi that is exactly value_k.
        let mut best_v = center;
        let mut best_f = match inner.update {
            UpdateScheme::Jacobi => value_k,
            UpdateScheme::GaussSeidel => g(center),
        };
        if hi > lo {
            let (v, f) = golden_max(&g, lo, hi, inner.tol);
            for (cv, cf) in [(v, f), (lo, g(lo)), (hi, g(hi))] {
                let cf = if cf.is_nan() { f64::NEG_INFINITY } else { cf };
                if cf > best_f {
                    best_v = cv;
                    best_f = cf;
                }
            }
        }
        candidate[i] = best_v;
        if inner.update == UpdateScheme::GaussSeidel {
            working[i] = best_v;
        }
    }
    Ok(candidate)
}

/// Run the SQH accept/reject loop from `theta0`.
///
/// Errors with [`Error::Stall`] if an outer iteration exhausts
/// `inner.max_step_ups` consecutive penalty step-ups without acceptance, and
/// with [`Error::EvaluationFailure`] if the objective is not finite at
/// `theta0`.
pub fn sqh_maximize<F: Fn(&[f64]) -> f64>(
    objective: F,
    theta0: &[f64],
    bounds: &AdmissibleBox,
    config: &SqhConfig,
) -> Result<SqhResult> {
    config.validate()?;
    if theta0.len() != bounds.dim() {
        return Err(Error::Domain(format!(
            "theta0 has dimension {}, box has {}",
            theta0.len(),
            bounds.dim()
        )));
    }
    if !bounds.contains(theta0) {
        return Err(Error::Domain(
            "initial point lies outside the admissible box".into(),
        ));
    }
    let start = Instant::now();
    let mut value = objective(theta0);
    if !value.is_finite() {
        return Err(Error::EvaluationFailure(format!(
            "objective must be finite at the initial point, got {value}"
        )));
    }

    let mut theta = theta0.to_vec();
    let mut epsilon = config.epsilon0;
    let mut trace = SqhTrace::default();
    let mut converged = false;
    let mut k = 0;

    while k < config.max_iter {
        let mut step_ups = 0;
        let (candidate, cand_value, tau, accepted_epsilon) = loop {
            let candidate =
                coordinate_candidates(&theta, epsilon, bounds, &config.inner, &objective)?;
            let tau = squared_distance(&candidate, &theta);
            let cand_value = objective(&candidate);
            let cand_value = if cand_value.is_nan() {
                f64::NEG_INFINITY
            } else {
                cand_value
            };
            if cand_value - value >= config.rho * tau {
                break (candidate, cand_value, tau, epsilon);
            }
            epsilon *= config.lambda;
            step_ups += 1;
            if step_ups > config.inner.max_step_ups || !epsilon.is_finite() {
                return Err(Error::Stall {
                    iteration: k + 1,
                    step_ups,
                    epsilon,
                });
            }
        };
        epsilon = accepted_epsilon * config.zeta;
        theta = candidate;
        value = cand_value;
        k += 1;
        trace.entries.push(TraceEntry {
            iteration: k,
            theta: theta.clone(),
            objective: value,
            epsilon: accepted_epsilon,
            tau,
            step_ups,
        });
        if tau < config.kappa {
            converged = true;
            break;
        }
    }

    Ok(SqhResult {
        theta,
        objective: value,
        iterations: k,
        converged,
        trace,
        wall_time: start.elapsed().as_secs_f64(),
    })
}
