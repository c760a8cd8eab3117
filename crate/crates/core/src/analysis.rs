//! Decisions from fitted curves: extrapolated predictions, held-out MAE,
//! saturation detection, and required-size queries.
//!
//! Saturation follows a per-step reading of the improvement threshold: on a
//! uniform fraction grid (1% of the data by default), the curve saturates at
//! the first grid point whose predicted gain over the previous point drops
//! below `alpha` accuracy percentage points.

use crate::curves::{Asymptote, CurveModel, ModelError};
use crate::dataio::{expected_count, CurvePoint};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("grid needs at least {needed} points, got {got}")]
    GridTooShort { needed: usize, got: usize },
    #[error("saturation requires a uniformly spaced grid: {0}")]
    NonUniformGrid(String),
    #[error("grid fraction {0} outside (0, 1] or not increasing")]
    BadGrid(f64),
    #[error("alpha {0} must be positive")]
    BadAlpha(f64),
    #[error("no test points provided")]
    EmptyTestSet,
    #[error("evaluation failed at fraction {fraction} (count {count}): {source}")]
    Evaluation {
        fraction: f64,
        count: u64,
        source: ModelError,
    },
}

/// A grid of size fractions over a benchmark's full training-set size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SizeGrid {
    total_size: u64,
    fractions: Vec<f64>,
}

impl SizeGrid {
    pub fn new(total_size: u64, fractions: Vec<f64>) -> Result<Self, AnalysisError> {
        if total_size == 0 {
            return Err(AnalysisError::BadGrid(0.0));
        }
        let mut prev = 0.0;
        for &f in &fractions {
            if !f.is_finite() || f <= prev || f > 1.0 {
                return Err(AnalysisError::BadGrid(f));
            }
            prev = f;
        }
        Ok(Self {
            total_size,
            fractions,
        })
    }

    /// 1% to 100% at 1% intervals — the default saturation-scan grid.
    pub fn uniform_percent(total_size: u64) -> Self {
        Self {
            total_size,
            fractions: (1..=100).map(|i| i as f64 / 100.0).collect(),
        }
    }

    /// Uniform grid from `step` to 1.0 in steps of `step` (e.g. 0.05).
    pub fn uniform_with_step(total_size: u64, step_percent: u32) -> Result<Self, AnalysisError> {
        if step_percent == 0 || step_percent > 100 || 100 % step_percent != 0 {
            return Err(AnalysisError::BadGrid(step_percent as f64 / 100.0));
        }
        Self::new(
            total_size,
            (1..=100 / step_percent)
                .map(|i| (i * step_percent) as f64 / 100.0)
                .collect(),
        )
    }

    pub fn total_size(&self) -> u64 {
        self.total_size
    }

    pub fn fractions(&self) -> &[f64] {
        &self.fractions
    }

    pub fn count_at(&self, index: usize) -> u64 {
        expected_count(self.fractions[index], self.total_size)
    }

    pub fn len(&self) -> usize {
        self.fractions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fractions.is_empty()
    }

    fn check_uniform(&self) -> Result<(), AnalysisError> {
        if self.fractions.len() < 2 {
            return Err(AnalysisError::GridTooShort {
                needed: 2,
                got: self.fractions.len(),
            });
        }
        let steps: Vec<f64> = self.fractions.windows(2).map(|w| w[1] - w[0]).collect();
        let mean = steps.iter().sum::<f64>() / steps.len() as f64;
        for (i, s) in steps.iter().enumerate() {
            if (s - mean).abs() > 1e-9 {
                return Err(AnalysisError::NonUniformGrid(format!(
                    "step {i} is {s}, expected {mean}"
                )));
            }
        }
        Ok(())
    }
}

/// One row of an extrapolated curve: the prediction is clamped to `[0, 1]`
/// for reporting and flagged when the raw formula value fell outside.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePrediction {
    pub fraction: f64,
    pub count: u64,
    pub accuracy: f64,
    pub clamped: bool,
}

/// Predict the curve at every grid point.
pub fn predict_curve(
    model: &CurveModel,
    grid: &SizeGrid,
) -> Result<Vec<CurvePrediction>, AnalysisError> {
    grid.fractions
        .iter()
        .enumerate()
        .map(|(i, &fraction)| {
            let count = grid.count_at(i);
            let raw = model
                .evaluate(count)
                .map_err(|source| AnalysisError::Evaluation {
                    fraction,
                    count,
                    source,
                })?;
            Ok(CurvePrediction {
                fraction,
                count,
                accuracy: raw.clamp(0.0, 1.0),
                clamped: !(0.0..=1.0).contains(&raw),
            })
        })
        .collect()
}

/// Per-point absolute errors of a model against held-out measurements.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub mae: f64,
    pub per_point: Vec<PointError>,
    pub model: CurveModel,
    pub train_fractions: Vec<f64>,
    pub test_fractions: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointError {
    pub fraction: f64,
    pub count: u64,
    pub observed: f64,
    pub predicted: f64,
    pub abs_error: f64,
}

impl EvaluationReport {
    pub fn with_train_fractions(mut self, train_fractions: Vec<f64>) -> Self {
        self.train_fractions = train_fractions;
        self
    }
}

/// Mean absolute error between model predictions and observed accuracies,
/// on the fractional scale.
pub fn mae(model: &CurveModel, test_points: &[CurvePoint]) -> Result<EvaluationReport, AnalysisError> {
    if test_points.is_empty() {
        return Err(AnalysisError::EmptyTestSet);
    }
    let mut per_point = Vec::with_capacity(test_points.len());
    for p in test_points {
        let predicted = model
            .evaluate(p.count)
            .map_err(|source| AnalysisError::Evaluation {
                fraction: p.fraction,
                count: p.count,
                source,
            })?;
        per_point.push(PointError {
            fraction: p.fraction,
            count: p.count,
            observed: p.accuracy,
            predicted,
            abs_error: (predicted - p.accuracy).abs(),
        });
    }
    let mae = per_point.iter().map(|e| e.abs_error).sum::<f64>() / per_point.len() as f64;
    Ok(EvaluationReport {
        mae,
        per_point,
        model: model.clone(),
        train_fractions: Vec::new(),
        test_fractions: test_points.iter().map(|p| p.fraction).collect(),
    })
}

/// Where the predicted learning curve stops improving meaningfully.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SaturationReport {
    pub saturation_fraction: f64,
    pub saturation_count: u64,
    /// Clamped to `[0, 1]` for reporting.
    pub predicted_accuracy_at_saturation: f64,
    /// False when no grid point's per-step gain dropped below alpha; the
    /// report then carries the last grid point.
    pub saturated: bool,
    /// The per-step improvement threshold, in accuracy percentage points.
    pub alpha: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_accuracy: Option<f64>,
    /// |predicted - reference| in percentage points.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub l1_distance: Option<f64>,
}

/// Scan a uniform grid for the first point whose predicted improvement over
/// the previous point falls below `alpha` percentage points (strictly).
pub fn find_saturation(
    model: &CurveModel,
    grid: &SizeGrid,
    alpha: f64,
) -> Result<SaturationReport, AnalysisError> {
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(AnalysisError::BadAlpha(alpha));
    }
    grid.check_uniform()?;
    let predictions = predict_curve(model, grid)?;

    let mut found: Option<usize> = None;
    for k in 1..predictions.len() {
        let gain = predictions[k].accuracy - predictions[k - 1].accuracy;
        if gain < alpha / 100.0 {
            found = Some(k);
            break;
        }
    }
    let (index, saturated) = match found {
        Some(k) => (k, true),
        None => (predictions.len() - 1, false),
    };
    let at = &predictions[index];
    Ok(SaturationReport {
        saturation_fraction: at.fraction,
        saturation_count: at.count,
        predicted_accuracy_at_saturation: at.accuracy,
        saturated,
        alpha,
        reference_accuracy: None,
        l1_distance: None,
    })
}

/// Fill in the reference accuracy (e.g. the recorded full-data performance)
/// and the L1 distance to it, in percentage points.
pub fn l1_at_reference(mut saturation: SaturationReport, reference_accuracy: f64) -> SaturationReport {
    saturation.reference_accuracy = Some(reference_accuracy);
    saturation.l1_distance =
        Some((saturation.predicted_accuracy_at_saturation - reference_accuracy).abs() * 100.0);
    saturation
}

/// Smallest grid size predicted to reach a target accuracy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum RequiredSize {
    Reached {
        fraction: f64,
        count: u64,
        predicted_accuracy: f64,
    },
    Unreachable {
        /// The model's limiting accuracy, when finite.
        asymptote: Option<f64>,
    },
}

/// Find the smallest grid point whose raw prediction meets the target.
pub fn required_size(
    model: &CurveModel,
    target_accuracy: f64,
    grid: &SizeGrid,
) -> Result<RequiredSize, AnalysisError> {
    for (i, &fraction) in grid.fractions.iter().enumerate() {
        let count = grid.count_at(i);
        let predicted = model
            .evaluate(count)
            .map_err(|source| AnalysisError::Evaluation {
                fraction,
                count,
                source,
            })?;
        if predicted >= target_accuracy {
            return Ok(RequiredSize::Reached {
                fraction,
                count,
                predicted_accuracy: predicted.clamp(0.0, 1.0),
            });
        }
    }
    Ok(RequiredSize::Unreachable {
        asymptote: match model.asymptote() {
            Asymptote::Finite(v) => Some(v),
            Asymptote::Divergent => None,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curves::CurveModel;
    use approx::assert_relative_eq;

    fn inverse_sqrt_model() -> CurveModel {
        CurveModel::inverse(0.1, 0.5, -0.5).unwrap()
    }

    #[test]
    fn predict_constant_model() {
        let model = CurveModel::inverse(0.1, 0.0, -0.5).unwrap();
        let grid = SizeGrid::uniform_percent(10_000);
        let rows = predict_curve(&model, &grid).unwrap();
        assert_eq!(rows.len(), 100);
        assert!(rows.iter().all(|r| r.accuracy == 0.9 && !r.clamped));
    }

    #[test]
    fn predict_formula_value_and_counts() {
        let model = CurveModel::exp(0.7, 0.05).unwrap();
        let grid = SizeGrid::new(10_000, vec![0.1]).unwrap();
        let rows = predict_curve(&model, &grid).unwrap();
        assert_eq!(rows[0].count, 1000);
        assert_relative_eq!(rows[0].accuracy, 0.988776281235928, max_relative = 1e-12);
    }

    #[test]
    fn predict_clamps_and_flags() {
        // 1.0 * 4^0.05 = 1.0718... > 1.
        let model = CurveModel::exp(1.0, 0.05).unwrap();
        let grid = SizeGrid::new(100, vec![0.04, 0.5]).unwrap();
        let rows = predict_curve(&model, &grid).unwrap();
        assert_eq!(rows[0].accuracy, 1.0);
        assert!(rows[0].clamped);
        // Clamp flags appear iff the raw value left [0, 1].
        for row in &rows {
            let raw = model.evaluate(row.count).unwrap();
            assert_eq!(row.clamped, !(0.0..=1.0).contains(&raw));
        }
    }

    #[test]
    fn mae_hand_arithmetic() {
        // Model hits 0.8 at N=100 and 0.9 at N=10000 exactly:
        // b = ln(0.9/0.8)/ln(100), a = 0.8 / 100^b.
        let b = (0.9f64 / 0.8).ln() / 100f64.ln();
        let a = 0.8 / 100f64.powf(b);
        let model = CurveModel::exp(a, b).unwrap();
        let pts = vec![
            CurvePoint::new(0.01, 100, 0.82),
            CurvePoint::new(1.0, 10_000, 0.88),
        ];
        let report = mae(&model, &pts).unwrap();
        assert_relative_eq!(report.mae, 0.02, max_relative = 1e-10);
    }

    #[test]
    fn mae_on_own_generator_points_is_zero() {
        let model = inverse_sqrt_model();
        let pts: Vec<CurvePoint> = (1..=10)
            .map(|i| {
                let count = i * 1000;
                CurvePoint::new(count as f64 / 10_000.0, count, model.evaluate(count).unwrap())
            })
            .collect();
        let report = mae(&model, &pts).unwrap();
        assert!(report.mae < 1e-9);
    }

    #[test]
    fn mae_empty_test_set_is_error() {
        assert!(matches!(
            mae(&inverse_sqrt_model(), &[]),
            Err(AnalysisError::EmptyTestSet)
        ));
    }

    #[test]
    fn mae_is_permutation_invariant() {
        let model = inverse_sqrt_model();
        let mut pts: Vec<CurvePoint> = (1..=8)
            .map(|i| CurvePoint::new(i as f64 / 10.0, i * 1000, 0.8 + 0.01 * i as f64))
            .collect();
        let forward = mae(&model, &pts).unwrap().mae;
        pts.reverse();
        let backward = mae(&model, &pts).unwrap().mae;
        assert_relative_eq!(forward, backward, max_relative = 1e-15);
    }

    #[test]
    fn saturation_closed_form_walk() {
        // E(N) = 0.9 - 0.5/sqrt(N) over 1%..100% of 10000: the first
        // consecutive gain below 0.002 happens stepping 500 -> 600.
        let report = find_saturation(
            &inverse_sqrt_model(),
            &SizeGrid::uniform_percent(10_000),
            0.2,
        )
        .unwrap();
        assert!(report.saturated);
        assert_eq!(report.saturation_count, 600);
        assert_relative_eq!(report.saturation_fraction, 0.06, max_relative = 1e-12);
        let expected = 0.9 - 0.5 / 600f64.sqrt();
        assert_relative_eq!(
            report.predicted_accuracy_at_saturation,
            expected,
            epsilon = 1e-12
        );
        assert!((report.predicted_accuracy_at_saturation - 0.8796).abs() < 1e-4);

        // Minimality: every earlier consecutive pair improves by >= alpha/100.
        let grid = SizeGrid::uniform_percent(10_000);
        let rows = predict_curve(&inverse_sqrt_model(), &grid).unwrap();
        let k = rows
            .iter()
            .position(|r| r.count == report.saturation_count)
            .unwrap();
        for i in 1..k {
            assert!(rows[i].accuracy - rows[i - 1].accuracy >= 0.002);
        }
    }

    #[test]
    fn saturation_constant_model_hits_second_point() {
        let model = CurveModel::inverse(0.1, 0.0, -0.5).unwrap();
        let grid = SizeGrid::uniform_percent(10_000);
        let report = find_saturation(&model, &grid, 0.5).unwrap();
        assert!(report.saturated);
        assert_eq!(report.saturation_fraction, grid.fractions()[1]);
    }

    #[test]
    fn saturation_boundary_is_strict() {
        // A curve gaining exactly alpha/100 per 1% step never saturates.
        // All quantities are powers of two so the comparison is exact:
        // total 12800 puts the k-th percent at count 128k, the model
        // (1-a) - b*N with a = 1, b = -2^-14 predicts k/128 there, and
        // alpha = 0.78125 makes alpha/100 the per-step gain 2^-7 exactly.
        // (Models are not bounds-checked; only fit results are.)
        let model = CurveModel::inverse(1.0, -(2f64.powi(-14)), 1.0).unwrap();
        let grid = SizeGrid::uniform_percent(12_800);
        let report = find_saturation(&model, &grid, 0.78125).unwrap();
        assert!(!report.saturated);
        assert_eq!(report.saturation_fraction, 1.0);
    }

    #[test]
    fn saturation_rejects_bad_grids() {
        let model = inverse_sqrt_model();
        let short = SizeGrid::new(10_000, vec![0.5]).unwrap();
        assert!(matches!(
            find_saturation(&model, &short, 0.2),
            Err(AnalysisError::GridTooShort { .. })
        ));
        let skewed = SizeGrid::new(10_000, vec![0.1, 0.2, 0.5]).unwrap();
        assert!(matches!(
            find_saturation(&model, &skewed, 0.2),
            Err(AnalysisError::NonUniformGrid(_))
        ));
        assert!(matches!(
            find_saturation(&model, &SizeGrid::uniform_percent(10_000), 0.0),
            Err(AnalysisError::BadAlpha(_))
        ));
    }

    #[test]
    fn smaller_alpha_never_saturates_earlier() {
        let model = inverse_sqrt_model();
        let grid = SizeGrid::uniform_percent(10_000);
        let large = find_saturation(&model, &grid, 0.3).unwrap();
        let small = find_saturation(&model, &grid, 0.1).unwrap();
        assert!(small.saturation_count >= large.saturation_count);
    }

    #[test]
    fn required_size_closed_form() {
        let model = inverse_sqrt_model();
        let grid = SizeGrid::uniform_percent(10_000);
        // E(400) = 0.875 exactly; >= is satisfied there first.
        match required_size(&model, 0.875, &grid).unwrap() {
            RequiredSize::Reached { count, .. } => assert_eq!(count, 400),
            other => panic!("unexpected: {other:?}"),
        }
    }

    #[test]
    fn required_size_above_asymptote_is_unreachable() {
        let model = inverse_sqrt_model();
        let grid = SizeGrid::uniform_percent(10_000);
        match required_size(&model, 0.95, &grid).unwrap() {
            RequiredSize::Unreachable { asymptote } => {
                assert_relative_eq!(asymptote.unwrap(), 0.9, max_relative = 1e-12)
            }
            other => panic!("unexpected: {other:?}"),
        }
    }

    #[test]
    fn required_size_target_zero_is_first_point() {
        let model = inverse_sqrt_model();
        let grid = SizeGrid::uniform_percent(10_000);
        match required_size(&model, 0.0, &grid).unwrap() {
            RequiredSize::Reached { fraction, .. } => assert_eq!(fraction, 0.01),
            other => panic!("unexpected: {other:?}"),
        }
    }

    #[test]
    fn required_size_is_monotone_in_target() {
        let model = inverse_sqrt_model();
        let grid = SizeGrid::uniform_percent(10_000);
        let mut last_count = 0u64;
        for target in [0.0, 0.5, 0.8, 0.85, 0.875, 0.89] {
            if let RequiredSize::Reached { count, .. } =
                required_size(&model, target, &grid).unwrap()
            {
                assert!(count >= last_count, "target {target}");
                last_count = count;
            }
        }
    }

    #[test]
    fn l1_reference_in_percentage_points() {
        let report = find_saturation(
            &inverse_sqrt_model(),
            &SizeGrid::uniform_percent(10_000),
            0.2,
        )
        .unwrap();
        let report = l1_at_reference(report, 0.90);
        let expected = (0.9 - (0.9 - 0.5 / 600f64.sqrt())) * 100.0;
        assert_relative_eq!(report.l1_distance.unwrap(), expected, epsilon = 1e-10);
        assert!((report.l1_distance.unwrap() - 2.04).abs() < 1e-2);

        // Equal prediction and reference gives zero distance.
        let zero = l1_at_reference(report.clone(), report.predicted_accuracy_at_saturation);
        assert_eq!(zero.l1_distance, Some(0.0));
    }

    #[test]
    fn report_shape_matches_published_row() {
        // Shape-only check mirroring a benchmark summary row
        // (alpha = 0.2, size 36%, L1 2.44 against the 100% accuracy).
        let report = SaturationReport {
            saturation_fraction: 0.36,
            saturation_count: 6300,
            predicted_accuracy_at_saturation: 0.8456,
            saturated: true,
            alpha: 0.2,
            reference_accuracy: Some(0.87),
            l1_distance: Some(2.44),
        };
        let json = serde_json::to_string(&report).unwrap();
        for key in [
            "saturation_fraction",
            "saturation_count",
            "predicted_accuracy_at_saturation",
            "reference_accuracy",
            "l1_distance",
        ] {
            assert!(json.contains(key), "missing {key} in {json}");
        }
        let back: SaturationReport = serde_json::from_str(&json).unwrap();
        assert_eq!(back, report);
    }
}
