//! Parametric learning-curve families.
//!
//! A learning curve maps a training-set size `N` to an expected accuracy.
//! Four families are supported:
//!
//! | kind     | formula                 | params       |
//! |----------|-------------------------|--------------|
//! | exp      | `a * N^b`               | a, b         |
//! | inverse  | `(1 - a) - b * N^c`     | a, b, c      |
//! | pow4     | `a - (b*N + c)^(-d)`    | a, b, c, d   |
//! | ensemble | convex combination of the three | 9 component params + 3 weights |
//!
//! Accuracies are fractions on the `[0, 1]` scale; sizes are absolute
//! example counts. Evaluation returns the raw formula value — clamping to
//! `[0, 1]` happens only when results are reported (see `analysis`).

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Tolerance on the ensemble weight simplex constraint (sum = 1).
pub const WEIGHT_SUM_TOL: f64 = 1e-12;

/// Curve-family tag. Parameter-vector arity is fixed per kind.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Exp,
    Inverse,
    Pow4,
    Ensemble,
}

impl ModelKind {
    /// Length of the parameter vector for this kind.
    pub fn arity(self) -> usize {
        match self {
            ModelKind::Exp => 2,
            ModelKind::Inverse => 3,
            ModelKind::Pow4 => 4,
            // 2 + 3 + 4 component parameters plus 3 combination weights.
            ModelKind::Ensemble => 12,
        }
    }

    /// Parameter names in vector order.
    pub fn param_names(self) -> &'static [&'static str] {
        match self {
            ModelKind::Exp => &["a", "b"],
            ModelKind::Inverse => &["a", "b", "c"],
            ModelKind::Pow4 => &["a", "b", "c", "d"],
            ModelKind::Ensemble => &[
                "exp.a", "exp.b", "inv.a", "inv.b", "inv.c", "pow4.a", "pow4.b", "pow4.c",
                "pow4.d", "w_exp", "w_inv", "w_pow4",
            ],
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Exp => "exp",
            ModelKind::Inverse => "inverse",
            ModelKind::Pow4 => "pow4",
            ModelKind::Ensemble => "ensemble",
        }
    }

    /// The three base (non-ensemble) kinds in ensemble component order.
    pub const BASE_KINDS: [ModelKind; 3] = [ModelKind::Exp, ModelKind::Inverse, ModelKind::Pow4];
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for ModelKind {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "exp" => Ok(ModelKind::Exp),
            "inverse" | "inv" => Ok(ModelKind::Inverse),
            "pow4" => Ok(ModelKind::Pow4),
            "ensemble" => Ok(ModelKind::Ensemble),
            other => Err(ModelError::UnknownKind(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum ModelError {
    #[error("{kind} expects {expected} parameters, got {got}")]
    Arity {
        kind: ModelKind,
        expected: usize,
        got: usize,
    },
    #[error("parameter {name} = {value} is not finite")]
    NonFinite { name: &'static str, value: f64 },
    #[error(
        "ensemble weights ({w_exp}, {w_inv}, {w_pow4}) must be nonnegative and sum to 1 \
         within {WEIGHT_SUM_TOL:e}"
    )]
    InvalidWeights { w_exp: f64, w_inv: f64, w_pow4: f64 },
    #[error(
        "pow4 evaluation undefined at size {size}: base b*N + c = {base} <= 0 with \
         non-integer d = {d} (b = {b}, c = {c})"
    )]
    EvalDomain {
        size: u64,
        base: f64,
        b: f64,
        c: f64,
        d: f64,
    },
    #[error("expected a {expected} component, got {got}")]
    ComponentKind { expected: ModelKind, got: ModelKind },
    #[error("unknown model kind '{0}' (expected exp, inverse, pow4 or ensemble)")]
    UnknownKind(String),
    #[error("size must be >= 1")]
    ZeroSize,
}

/// Nonnegative combination weights for the ensemble, summing to 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnsembleWeights {
    pub w_exp: f64,
    pub w_inv: f64,
    pub w_pow4: f64,
}

impl EnsembleWeights {
    pub fn new(w_exp: f64, w_inv: f64, w_pow4: f64) -> Result<Self, ModelError> {
        let w = Self {
            w_exp,
            w_inv,
            w_pow4,
        };
        w.validate()?;
        Ok(w)
    }

    pub fn uniform() -> Self {
        Self {
            w_exp: 1.0 / 3.0,
            w_inv: 1.0 / 3.0,
            w_pow4: 1.0 / 3.0,
        }
    }

    fn validate(&self) -> Result<(), ModelError> {
        let ws = [self.w_exp, self.w_inv, self.w_pow4];
        let ok = ws.iter().all(|w| w.is_finite() && (0.0..=1.0).contains(w))
            && ((self.w_exp + self.w_inv + self.w_pow4) - 1.0).abs() <= WEIGHT_SUM_TOL;
        if ok {
            Ok(())
        } else {
            Err(ModelError::InvalidWeights {
                w_exp: self.w_exp,
                w_inv: self.w_inv,
                w_pow4: self.w_pow4,
            })
        }
    }

    fn as_array(&self) -> [f64; 3] {
        [self.w_exp, self.w_inv, self.w_pow4]
    }
}

/// A model-family tag plus its fitted parameter vector.
///
/// Immutable after construction; construction validates arity, finiteness
/// and (for ensembles) the weight simplex.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawModel", into = "RawModel")]
pub struct CurveModel {
    kind: ModelKind,
    params: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawModel {
    kind: ModelKind,
    params: Vec<f64>,
}

impl TryFrom<RawModel> for CurveModel {
    type Error = ModelError;

    fn try_from(raw: RawModel) -> Result<Self, Self::Error> {
        CurveModel::new(raw.kind, raw.params)
    }
}

impl From<CurveModel> for RawModel {
    fn from(m: CurveModel) -> Self {
        RawModel {
            kind: m.kind,
            params: m.params,
        }
    }
}

/// Limiting accuracy as the training size grows without bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Asymptote {
    Finite(f64),
    Divergent,
}

impl Asymptote {
    pub fn finite(self) -> Option<f64> {
        match self {
            Asymptote::Finite(v) => Some(v),
            Asymptote::Divergent => None,
        }
    }
}

impl std::fmt::Display for Asymptote {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Asymptote::Finite(v) => write!(f, "{v}"),
            Asymptote::Divergent => f.write_str("divergent"),
        }
    }
}

impl CurveModel {
    pub fn new(kind: ModelKind, params: Vec<f64>) -> Result<Self, ModelError> {
        if params.len() != kind.arity() {
            return Err(ModelError::Arity {
                kind,
                expected: kind.arity(),
                got: params.len(),
            });
        }
        for (name, value) in kind.param_names().iter().zip(&params) {
            if !value.is_finite() {
                return Err(ModelError::NonFinite {
                    name,
                    value: *value,
                });
            }
        }
        if kind == ModelKind::Ensemble {
            EnsembleWeights {
                w_exp: params[9],
                w_inv: params[10],
                w_pow4: params[11],
            }
            .validate()?;
        }
        Ok(Self { kind, params })
    }

    pub fn exp(a: f64, b: f64) -> Result<Self, ModelError> {
        Self::new(ModelKind::Exp, vec![a, b])
    }

    pub fn inverse(a: f64, b: f64, c: f64) -> Result<Self, ModelError> {
        Self::new(ModelKind::Inverse, vec![a, b, c])
    }

    pub fn pow4(a: f64, b: f64, c: f64, d: f64) -> Result<Self, ModelError> {
        Self::new(ModelKind::Pow4, vec![a, b, c, d])
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    /// Component models and weights of an ensemble, in (exp, inverse, pow4)
    /// order. `None` for base kinds.
    pub fn ensemble_parts(&self) -> Option<(CurveModel, CurveModel, CurveModel, EnsembleWeights)> {
        if self.kind != ModelKind::Ensemble {
            return None;
        }
        let p = &self.params;
        Some((
            CurveModel {
                kind: ModelKind::Exp,
                params: p[0..2].to_vec(),
            },
            CurveModel {
                kind: ModelKind::Inverse,
                params: p[2..5].to_vec(),
            },
            CurveModel {
                kind: ModelKind::Pow4,
                params: p[5..9].to_vec(),
            },
            EnsembleWeights {
                w_exp: p[9],
                w_inv: p[10],
                w_pow4: p[11],
            },
        ))
    }

    /// Predicted accuracy at an absolute training-set size.
    ///
    /// Returns the raw formula value; it is not clamped to `[0, 1]`.
    pub fn evaluate(&self, size: u64) -> Result<f64, ModelError> {
        if size == 0 {
            return Err(ModelError::ZeroSize);
        }
        eval_raw(self.kind, &self.params, size)
    }

    /// Analytic partial derivatives of the predicted accuracy with respect
    /// to each parameter, in parameter order.
    pub fn param_gradient(&self, size: u64) -> Result<Vec<f64>, ModelError> {
        if size == 0 {
            return Err(ModelError::ZeroSize);
        }
        grad_raw(self.kind, &self.params, size)
    }

    /// Limit of `evaluate` as the size grows without bound, when it exists.
    pub fn asymptote(&self) -> Asymptote {
        asymptote_raw(self.kind, &self.params)
    }
}

/// Combine independently fitted base models into an ensemble whose
/// prediction is the weighted sum of the component predictions.
pub fn combine_ensemble(
    exp: &CurveModel,
    inverse: &CurveModel,
    pow4: &CurveModel,
    weights: EnsembleWeights,
) -> Result<CurveModel, ModelError> {
    for (model, expected) in [
        (exp, ModelKind::Exp),
        (inverse, ModelKind::Inverse),
        (pow4, ModelKind::Pow4),
    ] {
        if model.kind != expected {
            return Err(ModelError::ComponentKind {
                expected,
                got: model.kind,
            });
        }
    }
    weights.validate()?;
    let mut params = Vec::with_capacity(12);
    params.extend_from_slice(&exp.params);
    params.extend_from_slice(&inverse.params);
    params.extend_from_slice(&pow4.params);
    params.extend_from_slice(&weights.as_array());
    CurveModel::new(ModelKind::Ensemble, params)
}

/// Evaluate a family formula from a raw parameter slice.
///
/// The slice must have the kind's arity; callers inside the crate (the
/// fitters) guarantee this.
pub(crate) fn eval_raw(kind: ModelKind, p: &[f64], size: u64) -> Result<f64, ModelError> {
    let n = size as f64;
    match kind {
        ModelKind::Exp => Ok(p[0] * n.powf(p[1])),
        ModelKind::Inverse => Ok((1.0 - p[0]) - p[1] * n.powf(p[2])),
        ModelKind::Pow4 => {
            let (a, b, c, d) = (p[0], p[1], p[2], p[3]);
            let base = b * n + c;
            if base <= 0.0 && d.fract() != 0.0 {
                return Err(ModelError::EvalDomain {
                    size,
                    base,
                    b,
                    c,
                    d,
                });
            }
            Ok(a - base.powf(-d))
        }
        ModelKind::Ensemble => {
            // Zero-weight components are skipped so that an ensemble whose
            // failed component was zeroed out stays evaluable.
            let mut acc = 0.0;
            for (k, (lo, w)) in [
                (ModelKind::Exp, (0, p[9])),
                (ModelKind::Inverse, (2, p[10])),
                (ModelKind::Pow4, (5, p[11])),
            ] {
                if w != 0.0 {
                    acc += w * eval_raw(k, &p[lo..lo + k.arity()], size)?;
                }
            }
            Ok(acc)
        }
    }
}

pub(crate) fn grad_raw(kind: ModelKind, p: &[f64], size: u64) -> Result<Vec<f64>, ModelError> {
    let n = size as f64;
    let ln_n = n.ln();
    match kind {
        ModelKind::Exp => {
            let n_b = n.powf(p[1]);
            Ok(vec![n_b, p[0] * n_b * ln_n])
        }
        ModelKind::Inverse => {
            let n_c = n.powf(p[2]);
            Ok(vec![-1.0, -n_c, -p[1] * n_c * ln_n])
        }
        ModelKind::Pow4 => {
            let (b, c, d) = (p[1], p[2], p[3]);
            let base = b * n + c;
            if base <= 0.0 && d.fract() != 0.0 {
                return Err(ModelError::EvalDomain {
                    size,
                    base,
                    b,
                    c,
                    d,
                });
            }
            let pow_d1 = base.powf(-d - 1.0);
            // d/dd of -(base^-d) = base^-d * ln(base); base <= 0 only reaches
            // here with integer d, where the derivative in d is not defined —
            // ln of the absolute value keeps the value finite and the fitter
            // bounds keep base positive anyway.
            let pow_d = base.powf(-d);
            Ok(vec![
                1.0,
                d * n * pow_d1,
                d * pow_d1,
                base.abs().ln() * pow_d,
            ])
        }
        ModelKind::Ensemble => {
            let mut grad = Vec::with_capacity(12);
            let mut component_values = [0.0; 3];
            for (i, (k, lo)) in [
                (ModelKind::Exp, 0),
                (ModelKind::Inverse, 2),
                (ModelKind::Pow4, 5),
            ]
            .into_iter()
            .enumerate()
            {
                let sub = &p[lo..lo + k.arity()];
                let w = p[9 + i];
                for g in grad_raw(k, sub, size)? {
                    grad.push(w * g);
                }
                component_values[i] = eval_raw(k, sub, size)?;
            }
            grad.extend_from_slice(&component_values);
            Ok(grad)
        }
    }
}

fn asymptote_raw(kind: ModelKind, p: &[f64]) -> Asymptote {
    match kind {
        ModelKind::Exp => {
            let (a, b) = (p[0], p[1]);
            if b > 0.0 {
                if a == 0.0 {
                    Asymptote::Finite(0.0)
                } else {
                    Asymptote::Divergent
                }
            } else if b == 0.0 {
                Asymptote::Finite(a)
            } else {
                Asymptote::Finite(0.0)
            }
        }
        ModelKind::Inverse => {
            let (a, b, c) = (p[0], p[1], p[2]);
            if c < 0.0 || b == 0.0 {
                Asymptote::Finite(1.0 - a)
            } else if c == 0.0 {
                Asymptote::Finite((1.0 - a) - b)
            } else {
                Asymptote::Divergent
            }
        }
        ModelKind::Pow4 => {
            let (a, b, c, d) = (p[0], p[1], p[2], p[3]);
            if b > 0.0 {
                if d > 0.0 {
                    Asymptote::Finite(a)
                } else if d == 0.0 {
                    Asymptote::Finite(a - 1.0)
                } else {
                    Asymptote::Divergent
                }
            } else if b == 0.0 {
                // Constant in N; the limit is the value where defined.
                if c > 0.0 || (d.fract() == 0.0 && c != 0.0) {
                    Asymptote::Finite(a - c.powf(-d))
                } else {
                    Asymptote::Divergent
                }
            } else if d > 0.0 && d.fract() == 0.0 {
                // base -> -inf; an integer d > 0 still sends base^-d to 0.
                Asymptote::Finite(a)
            } else {
                Asymptote::Divergent
            }
        }
        ModelKind::Ensemble => {
            let mut acc = 0.0;
            for (k, (lo, w)) in [
                (ModelKind::Exp, (0, p[9])),
                (ModelKind::Inverse, (2, p[10])),
                (ModelKind::Pow4, (5, p[11])),
            ] {
                if w == 0.0 {
                    continue;
                }
                match asymptote_raw(k, &p[lo..lo + k.arity()]) {
                    Asymptote::Finite(v) => acc += w * v,
                    Asymptote::Divergent => return Asymptote::Divergent,
                }
            }
            Asymptote::Finite(acc)
        }
    }
}
