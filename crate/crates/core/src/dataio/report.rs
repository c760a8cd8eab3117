//! The fit report: a single JSON document capturing the fitted model, its
//! provenance (config echo, schedule, dataset) and any analysis outputs.
//!
//! Serialization uses struct field order throughout, so identical inputs
//! produce byte-identical documents.

use super::{DataError, SplitSchedule};
use crate::analysis::{EvaluationReport, SaturationReport};
use crate::curves::{CurveModel, ModelKind};
use crate::fit::{EnsembleWeighting, FitConfig, FitResult, OptimizerKind, Weighting};
use serde::{Deserialize, Serialize};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportDataset {
    pub name: String,
    pub total_size: u64,
}

/// Echo of the settings the fit ran under.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportConfig {
    pub model: ModelKind,
    pub optimizer: OptimizerKind,
    pub weighting: Weighting,
    pub ensemble_weighting: EnsembleWeighting,
    pub max_iterations: usize,
    pub learning_rate: f64,
    pub convergence_tol: f64,
    pub restarts: usize,
    pub rng_seed: u64,
    pub train_max_fraction: f64,
}

impl ReportConfig {
    pub fn new(model: ModelKind, config: &FitConfig, train_max_fraction: f64) -> Self {
        Self {
            model,
            optimizer: config.optimizer,
            weighting: config.weighting,
            ensemble_weighting: config.ensemble_weighting,
            max_iterations: config.max_iterations,
            learning_rate: config.learning_rate,
            convergence_tol: config.convergence_tol,
            restarts: config.restarts,
            rng_seed: config.rng_seed,
            train_max_fraction,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportComponent {
    pub kind: ModelKind,
    pub weight: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub params: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub train_rss: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub converged: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub format_version: u32,
    pub tool_version: String,
    pub dataset: ReportDataset,
    pub config: ReportConfig,
    pub schedule: SplitSchedule,
    pub model: CurveModel,
    pub train_rss: f64,
    pub converged: bool,
    pub iterations_used: usize,
    pub restart_index: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub components: Option<Vec<ReportComponent>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub evaluation: Option<EvaluationReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub saturation: Option<SaturationReport>,
}

impl FitReport {
    pub fn from_fit(
        dataset: ReportDataset,
        config: ReportConfig,
        schedule: SplitSchedule,
        result: &FitResult,
    ) -> Self {
        let components = result.component_results.as_ref().map(|comps| {
            comps
                .iter()
                .map(|c| match &c.outcome {
                    Ok(fit) => ReportComponent {
                        kind: c.kind,
                        weight: c.weight,
                        params: Some(fit.model.params().to_vec()),
                        train_rss: Some(fit.train_rss),
                        converged: Some(fit.converged),
                        error: None,
                    },
                    Err(reason) => ReportComponent {
                        kind: c.kind,
                        weight: c.weight,
                        params: None,
                        train_rss: None,
                        converged: None,
                        error: Some(reason.clone()),
                    },
                })
                .collect()
        });
        Self {
            format_version: FORMAT_VERSION,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            dataset,
            config,
            schedule,
            model: result.model.clone(),
            train_rss: result.train_rss,
            converged: result.converged,
            iterations_used: result.iterations_used,
            restart_index: result.restart_index,
            components,
            evaluation: None,
            saturation: None,
        }
    }

    pub fn with_evaluation(mut self, evaluation: EvaluationReport) -> Self {
        self.evaluation = Some(evaluation);
        self
    }

    pub fn with_saturation(mut self, saturation: SaturationReport) -> Self {
        self.saturation = Some(saturation);
        self
    }
}

/// Render the report as pretty-printed JSON with a trailing newline.
pub fn write_fit_report(report: &FitReport) -> String {
    let mut doc = serde_json::to_string_pretty(report).expect("report serializes");
    doc.push('\n');
    doc
}

pub fn read_fit_report(text: &str) -> Result<FitReport, DataError> {
    serde_json::from_str(text).map_err(|e| DataError::Report(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curves::ModelKind;
    use crate::dataio::default_schedule;
    use crate::fit::{fit, FitConfig};

    fn sample_report() -> FitReport {
        let truth = CurveModel::inverse(0.1, 0.5, -0.5).unwrap();
        let points: Vec<crate::dataio::CurvePoint> = (1..=10)
            .map(|i| {
                let count = i * 100;
                crate::dataio::CurvePoint::new(
                    count as f64 / 10_000.0,
                    count,
                    truth.evaluate(count).unwrap(),
                )
            })
            .collect();
        let config = FitConfig::nls();
        let result = fit(ModelKind::Ensemble, &points, &config).unwrap();
        FitReport::from_fit(
            ReportDataset {
                name: "sample".into(),
                total_size: 10_000,
            },
            ReportConfig::new(ModelKind::Ensemble, &config, 0.10),
            default_schedule(),
            &result,
        )
    }

    #[test]
    fn identical_inputs_give_byte_identical_documents() {
        let a = write_fit_report(&sample_report());
        let b = write_fit_report(&sample_report());
        assert_eq!(a, b);
    }

    #[test]
    fn ensemble_report_lists_three_component_blocks() {
        let report = sample_report();
        assert_eq!(report.components.as_ref().unwrap().len(), 3);
    }

    #[test]
    fn params_round_trip_exactly_through_parse() {
        let report = sample_report();
        let doc = write_fit_report(&report);
        let back = read_fit_report(&doc).unwrap();
        // Bit-exact round-trip of every parameter.
        assert_eq!(back.model.params(), report.model.params());
        assert_eq!(back, report);
    }

    #[test]
    fn version_fields_present() {
        let doc = write_fit_report(&sample_report());
        assert!(doc.contains("\"format_version\": 1"));
        assert!(doc.contains("tool_version"));
    }
}
