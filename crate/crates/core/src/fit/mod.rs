//! Curve-parameter estimation from observed points.
//!
//! Two optimizers minimize the same weighted residual sum of squares
//! `sum_i w_i * (E(size_i) - accuracy_i)^2`: Levenberg-Marquardt
//! ([`fit_nls`]) and Adam ([`fit_gd`]). Both run from a deterministic
//! heuristic initialization plus seeded multiplicative-noise restarts, keep
//! parameters inside per-kind box bounds, and return the best restart by
//! final weighted RSS.
//!
//! Weighting is either uniform or proportional to training-set size, so
//! points measured on more data — whose accuracies carry less sampling
//! noise — dominate the loss.

mod adam;
mod init;
mod lm;

pub use init::initialize;

use crate::curves::{
    combine_ensemble, eval_raw, grad_raw, CurveModel, EnsembleWeights, ModelError, ModelKind,
};
use crate::dataio::CurvePoint;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// RSS floor when converting component residuals into ensemble weights.
pub const ENSEMBLE_RSS_FLOOR: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum FitError {
    #[error("no points provided")]
    EmptyPoints,
    #[error("{kind} needs at least {needed} points with distinct sizes, got {got}")]
    InsufficientPoints {
        kind: ModelKind,
        needed: usize,
        got: usize,
    },
    #[error("invalid fit configuration: {0}")]
    Config(String),
    #[error("all restarts failed: {}", summarize_failures(.0))]
    AllRestartsFailed(Vec<RestartFailure>),
    #[error("all ensemble components failed: {}", .0.join("; "))]
    EnsembleAllFailed(Vec<String>),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Why one restart of the optimizer produced no usable result.
#[derive(Debug, Clone, PartialEq)]
pub struct RestartFailure {
    pub restart: usize,
    pub reason: String,
}

fn summarize_failures(failures: &[RestartFailure]) -> String {
    failures
        .iter()
        .map(|f| format!("restart {}: {}", f.restart, f.reason))
        .collect::<Vec<_>>()
        .join("; ")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptimizerKind {
    /// Nonlinear least squares via Levenberg-Marquardt.
    Nls,
    /// Gradient descent via Adam.
    Gd,
}

impl std::str::FromStr for OptimizerKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "nls" => Ok(OptimizerKind::Nls),
            "gd" => Ok(OptimizerKind::Gd),
            other => Err(format!("unknown optimizer '{other}' (expected nls or gd)")),
        }
    }
}

impl std::fmt::Display for OptimizerKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            OptimizerKind::Nls => "nls",
            OptimizerKind::Gd => "gd",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Weighting {
    Unweighted,
    SizeProportional,
}

impl std::str::FromStr for Weighting {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "none" | "unweighted" => Ok(Weighting::Unweighted),
            "size" | "size-proportional" => Ok(Weighting::SizeProportional),
            other => Err(format!(
                "unknown weighting '{other}' (expected none or size)"
            )),
        }
    }
}

impl std::fmt::Display for Weighting {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Weighting::Unweighted => "unweighted",
            Weighting::SizeProportional => "size-proportional",
        })
    }
}

/// How component fits are blended into ensemble weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EnsembleWeighting {
    /// Weights proportional to 1 / max(train_rss, floor); favors the
    /// better-fitting family.
    InverseRss,
    /// Equal weight to every component that fitted successfully.
    Uniform,
}

impl std::str::FromStr for EnsembleWeighting {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "inverse-rss" | "inverse_rss" => Ok(EnsembleWeighting::InverseRss),
            "uniform" => Ok(EnsembleWeighting::Uniform),
            other => Err(format!(
                "unknown ensemble weighting '{other}' (expected inverse-rss or uniform)"
            )),
        }
    }
}

/// Box constraints, one `(lower, upper)` pair per parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamBounds(Vec<(f64, f64)>);

/// Stand-in for an open bound endpoint: strictly positive but effectively
/// unconstraining.
const OPEN_LOWER: f64 = 1e-9;

impl ParamBounds {
    pub fn new(bounds: Vec<(f64, f64)>) -> Result<Self, FitError> {
        for (i, (lo, hi)) in bounds.iter().enumerate() {
            if !lo.is_finite() || !hi.is_finite() || lo >= hi {
                return Err(FitError::Config(format!(
                    "bound {i}: lower {lo} must be below upper {hi}"
                )));
            }
        }
        Ok(Self(bounds))
    }

    /// Default box per kind. Pow4's base stays positive (`b > 0`,
    /// `c >= 1e-6`) so evaluation never leaves its domain on sizes >= 1.
    pub fn default_for(kind: ModelKind) -> Self {
        match kind {
            ModelKind::Exp => Self(vec![(0.0, 2.0), (-1.0, 1.0)]),
            ModelKind::Inverse => Self(vec![(-0.5, 1.0), (0.0, 10.0), (-5.0, 0.0)]),
            ModelKind::Pow4 => Self(vec![
                (0.0, 1.5),
                (OPEN_LOWER, 10.0),
                (1e-6, 10.0),
                (OPEN_LOWER, 5.0),
            ]),
            ModelKind::Ensemble => {
                let mut all = Self::default_for(ModelKind::Exp).0;
                all.extend(Self::default_for(ModelKind::Inverse).0);
                all.extend(Self::default_for(ModelKind::Pow4).0);
                all.extend([(0.0, 1.0); 3]);
                Self(all)
            }
        }
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[(f64, f64)] {
        &self.0
    }

    pub fn project(&self, params: &mut [f64]) {
        for (p, (lo, hi)) in params.iter_mut().zip(&self.0) {
            *p = p.clamp(*lo, *hi);
        }
    }

    pub fn contains(&self, params: &[f64]) -> bool {
        params
            .iter()
            .zip(&self.0)
            .all(|(p, (lo, hi))| *p >= *lo && *p <= *hi)
    }
}

/// Optimizer choice, weighting mode, and stopping/restart controls.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    pub optimizer: OptimizerKind,
    pub weighting: Weighting,
    /// Optimizer steps per restart. Zero evaluates the initialization only.
    pub max_iterations: usize,
    /// Adam step size; ignored by NLS.
    pub learning_rate: f64,
    /// Stop when the relative residual change of a step falls below this.
    pub convergence_tol: f64,
    pub restarts: usize,
    pub rng_seed: u64,
    pub ensemble_weighting: EnsembleWeighting,
    /// Overrides the per-kind default box when present.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub param_bounds: Option<ParamBounds>,
}

impl FitConfig {
    /// Nonlinear least squares defaults: 500 iterations.
    pub fn nls() -> Self {
        Self {
            optimizer: OptimizerKind::Nls,
            weighting: Weighting::Unweighted,
            max_iterations: 500,
            learning_rate: 1e-5,
            convergence_tol: 1e-10,
            restarts: 5,
            rng_seed: 0,
            ensemble_weighting: EnsembleWeighting::InverseRss,
            param_bounds: None,
        }
    }

    /// Gradient descent defaults: Adam, learning rate 1e-5, 200 epochs.
    pub fn gd() -> Self {
        Self {
            optimizer: OptimizerKind::Gd,
            max_iterations: 200,
            ..Self::nls()
        }
    }

    pub fn with_weighting(mut self, weighting: Weighting) -> Self {
        self.weighting = weighting;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.rng_seed = seed;
        self
    }

    pub fn with_restarts(mut self, restarts: usize) -> Self {
        self.restarts = restarts;
        self
    }

    pub fn with_max_iterations(mut self, max_iterations: usize) -> Self {
        self.max_iterations = max_iterations;
        self
    }

    pub fn with_learning_rate(mut self, learning_rate: f64) -> Self {
        self.learning_rate = learning_rate;
        self
    }

    pub fn with_ensemble_weighting(mut self, mode: EnsembleWeighting) -> Self {
        self.ensemble_weighting = mode;
        self
    }

    pub fn with_bounds(mut self, bounds: ParamBounds) -> Self {
        self.param_bounds = Some(bounds);
        self
    }

    fn validate(&self) -> Result<(), FitError> {
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(FitError::Config(format!(
                "learning_rate {} must be positive",
                self.learning_rate
            )));
        }
        if !(self.convergence_tol.is_finite() && self.convergence_tol > 0.0) {
            return Err(FitError::Config(format!(
                "convergence_tol {} must be positive",
                self.convergence_tol
            )));
        }
        if self.restarts == 0 {
            return Err(FitError::Config("restarts must be >= 1".into()));
        }
        Ok(())
    }

    fn bounds_for(&self, kind: ModelKind) -> Result<ParamBounds, FitError> {
        match &self.param_bounds {
            Some(b) if b.len() != kind.arity() => Err(FitError::Config(format!(
                "param_bounds has {} entries but {kind} has {} parameters",
                b.len(),
                kind.arity()
            ))),
            Some(b) => Ok(b.clone()),
            None => Ok(ParamBounds::default_for(kind)),
        }
    }
}

/// One nonnegative weight per training point, normalized to sum to the
/// point count.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector(Vec<f64>);

impl WeightVector {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

/// Unweighted mode yields all ones; size-proportional mode yields
/// `size_i / mean(size)`, which sums to the point count by construction.
pub fn compute_weights(points: &[CurvePoint], mode: Weighting) -> Result<WeightVector, FitError> {
    if points.is_empty() {
        return Err(FitError::EmptyPoints);
    }
    let weights = match mode {
        Weighting::Unweighted => vec![1.0; points.len()],
        Weighting::SizeProportional => {
            let mean =
                points.iter().map(|p| p.count as f64).sum::<f64>() / points.len() as f64;
            points.iter().map(|p| p.count as f64 / mean).collect()
        }
    };
    Ok(WeightVector(weights))
}

/// Converged parameters and diagnostics for one fit.
#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub model: CurveModel,
    /// Weighted residual sum of squares on the training points.
    pub train_rss: f64,
    pub converged: bool,
    pub iterations_used: usize,
    /// Which restart produced the winning parameters (0 for ensembles).
    pub restart_index: usize,
    /// Per-family results, in (exp, inverse, pow4) order; ensembles only.
    pub component_results: Option<Vec<ComponentFit>>,
}

/// Outcome of one ensemble component: its blend weight plus either the
/// component fit or the reason every restart failed.
#[derive(Debug, Clone, PartialEq)]
pub struct ComponentFit {
    pub kind: ModelKind,
    pub weight: f64,
    pub outcome: Result<FitResult, String>,
}

/// The least-squares problem shared by both optimizers.
pub(crate) struct FitProblem<'a> {
    kind: ModelKind,
    sizes: Vec<u64>,
    targets: Vec<f64>,
    weights: &'a [f64],
    bounds: &'a ParamBounds,
}

impl<'a> FitProblem<'a> {
    fn new(
        kind: ModelKind,
        points: &[CurvePoint],
        weights: &'a WeightVector,
        bounds: &'a ParamBounds,
    ) -> Self {
        Self {
            kind,
            sizes: points.iter().map(|p| p.count).collect(),
            targets: points.iter().map(|p| p.accuracy).collect(),
            weights: weights.as_slice(),
            bounds,
        }
    }

    pub(crate) fn bounds(&self) -> &ParamBounds {
        self.bounds
    }

    pub(crate) fn rss(&self, params: &[f64]) -> Result<f64, ModelError> {
        let mut acc = 0.0;
        for ((&size, &target), &w) in self.sizes.iter().zip(&self.targets).zip(self.weights) {
            let r = eval_raw(self.kind, params, size)? - target;
            acc += w * r * r;
        }
        Ok(acc)
    }

    /// Sqrt-weighted residual vector and Jacobian (row-major, m x p).
    pub(crate) fn residuals_jacobian(
        &self,
        params: &[f64],
    ) -> Result<(Vec<f64>, Vec<Vec<f64>>), ModelError> {
        let mut residuals = Vec::with_capacity(self.sizes.len());
        let mut jacobian = Vec::with_capacity(self.sizes.len());
        for ((&size, &target), &w) in self.sizes.iter().zip(&self.targets).zip(self.weights) {
            let sw = w.sqrt();
            residuals.push(sw * (eval_raw(self.kind, params, size)? - target));
            let row = grad_raw(self.kind, params, size)?
                .into_iter()
                .map(|g| sw * g)
                .collect();
            jacobian.push(row);
        }
        Ok((residuals, jacobian))
    }

    /// Gradient of the weighted RSS with respect to the parameters.
    pub(crate) fn loss_gradient(&self, params: &[f64]) -> Result<Vec<f64>, ModelError> {
        let mut grad = vec![0.0; params.len()];
        for ((&size, &target), &w) in self.sizes.iter().zip(&self.targets).zip(self.weights) {
            let r = eval_raw(self.kind, params, size)? - target;
            for (gj, dj) in grad.iter_mut().zip(grad_raw(self.kind, params, size)?) {
                *gj += 2.0 * w * r * dj;
            }
        }
        Ok(grad)
    }
}

/// Raw optimizer output for one restart.
#[derive(Debug, Clone)]
pub(crate) struct OptimOutcome {
    pub params: Vec<f64>,
    pub rss: f64,
    pub converged: bool,
    pub iterations: usize,
    pub accepted_steps: usize,
}

/// Fit a family with the configured optimizer. Ensembles fit the three base
/// families independently and blend them per `config.ensemble_weighting`.
pub fn fit(kind: ModelKind, points: &[CurvePoint], config: &FitConfig) -> Result<FitResult, FitError> {
    fit_with(kind, points, config, config.optimizer)
}

/// Fit by Levenberg-Marquardt regardless of `config.optimizer`.
pub fn fit_nls(
    kind: ModelKind,
    points: &[CurvePoint],
    config: &FitConfig,
) -> Result<FitResult, FitError> {
    fit_with(kind, points, config, OptimizerKind::Nls)
}

/// Fit by Adam regardless of `config.optimizer`.
pub fn fit_gd(
    kind: ModelKind,
    points: &[CurvePoint],
    config: &FitConfig,
) -> Result<FitResult, FitError> {
    fit_with(kind, points, config, OptimizerKind::Gd)
}

fn fit_with(
    kind: ModelKind,
    points: &[CurvePoint],
    config: &FitConfig,
    optimizer: OptimizerKind,
) -> Result<FitResult, FitError> {
    config.validate()?;
    if kind == ModelKind::Ensemble {
        fit_ensemble(points, config, optimizer)
    } else {
        fit_base(kind, points, config, optimizer)
    }
}

fn distinct_sizes(points: &[CurvePoint]) -> usize {
    let mut sizes: Vec<u64> = points.iter().map(|p| p.count).collect();
    sizes.sort_unstable();
    sizes.dedup();
    sizes.len()
}

fn fit_base(
    kind: ModelKind,
    points: &[CurvePoint],
    config: &FitConfig,
    optimizer: OptimizerKind,
) -> Result<FitResult, FitError> {
    if points.is_empty() {
        return Err(FitError::EmptyPoints);
    }
    let got = distinct_sizes(points);
    if got < kind.arity() {
        return Err(FitError::InsufficientPoints {
            kind,
            needed: kind.arity(),
            got,
        });
    }
    let weights = compute_weights(points, config.weighting)?;
    let bounds = config.bounds_for(kind)?;
    let problem = FitProblem::new(kind, points, &weights, &bounds);

    let mut best: Option<(usize, OptimOutcome)> = None;
    let mut failures = Vec::new();
    for restart in 0..config.restarts {
        let start = init::initialize_bounded(kind, points, restart, config.rng_seed, &bounds)?;
        let outcome = match optimizer {
            OptimizerKind::Nls => {
                lm::run_lm(&problem, start, config.max_iterations, config.convergence_tol)
            }
            OptimizerKind::Gd => adam::run_adam(
                &problem,
                start,
                config.max_iterations,
                config.learning_rate,
                config.convergence_tol,
            ),
        };
        match outcome {
            Ok(o)
                if optimizer == OptimizerKind::Nls
                    && config.max_iterations > 0
                    && o.accepted_steps == 0 =>
            {
                failures.push(RestartFailure {
                    restart,
                    reason: format!(
                        "diverged: every step rejected from iteration 0 (rss {:.3e})",
                        o.rss
                    ),
                });
            }
            Ok(o) => {
                let better = match &best {
                    None => true,
                    // Deterministic reduction: lower RSS wins, ties go to
                    // the earlier restart.
                    Some((_, b)) => o.rss < b.rss,
                };
                if better {
                    best = Some((restart, o));
                }
            }
            Err(reason) => failures.push(RestartFailure { restart, reason }),
        }
    }

    match best {
        Some((restart_index, o)) => Ok(FitResult {
            model: CurveModel::new(kind, o.params)?,
            train_rss: o.rss,
            converged: o.converged,
            iterations_used: o.iterations,
            restart_index,
            component_results: None,
        }),
        None => Err(FitError::AllRestartsFailed(failures)),
    }
}

/// Inert stand-in for a component whose fit failed; its weight is zero and
/// evaluation skips zero-weight components.
fn placeholder_model(kind: ModelKind) -> CurveModel {
    CurveModel::new(kind, vec![0.0; kind.arity()]).expect("zeros are valid params")
}

fn fit_ensemble(
    points: &[CurvePoint],
    config: &FitConfig,
    optimizer: OptimizerKind,
) -> Result<FitResult, FitError> {
    let outcomes: Vec<Result<FitResult, String>> = ModelKind::BASE_KINDS
        .iter()
        .map(|&kind| fit_base(kind, points, config, optimizer).map_err(|e| e.to_string()))
        .collect();

    if outcomes.iter().all(|o| o.is_err()) {
        return Err(FitError::EnsembleAllFailed(
            ModelKind::BASE_KINDS
                .iter()
                .zip(&outcomes)
                .map(|(k, o)| format!("{k}: {}", o.as_ref().unwrap_err()))
                .collect(),
        ));
    }

    let raw: Vec<f64> = match config.ensemble_weighting {
        EnsembleWeighting::InverseRss => outcomes
            .iter()
            .map(|o| match o {
                Ok(r) => 1.0 / r.train_rss.max(ENSEMBLE_RSS_FLOOR),
                Err(_) => 0.0,
            })
            .collect(),
        EnsembleWeighting::Uniform => outcomes
            .iter()
            .map(|o| if o.is_ok() { 1.0 } else { 0.0 })
            .collect(),
    };
    let total: f64 = raw.iter().sum();
    let normalized: Vec<f64> = raw.iter().map(|w| w / total).collect();
    let weights = EnsembleWeights::new(normalized[0], normalized[1], normalized[2])?;

    let component_model = |i: usize| -> CurveModel {
        match &outcomes[i] {
            Ok(r) => r.model.clone(),
            Err(_) => placeholder_model(ModelKind::BASE_KINDS[i]),
        }
    };
    let model = combine_ensemble(
        &component_model(0),
        &component_model(1),
        &component_model(2),
        weights,
    )?;

    let weight_vec = compute_weights(points, config.weighting)?;
    let bounds = ParamBounds::default_for(ModelKind::Ensemble);
    let problem = FitProblem::new(ModelKind::Ensemble, points, &weight_vec, &bounds);
    let train_rss = problem.rss(model.params())?;

    let component_results = ModelKind::BASE_KINDS
        .iter()
        .zip(&outcomes)
        .zip(&normalized)
        .map(|((&kind, outcome), &weight)| ComponentFit {
            kind,
            weight,
            outcome: outcome.clone(),
        })
        .collect::<Vec<_>>();

    Ok(FitResult {
        model,
        train_rss,
        converged: outcomes
            .iter()
            .flatten()
            .all(|r| r.converged),
        iterations_used: outcomes
            .iter()
            .flatten()
            .map(|r| r.iterations_used)
            .sum(),
        restart_index: 0,
        component_results: Some(component_results),
    })
}
