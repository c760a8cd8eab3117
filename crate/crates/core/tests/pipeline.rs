//! Closed-loop integration: probe or synthetic generation, fitting, then
//! analysis must recover the generating curve within the fitting module's
//! tolerances.

use samplesize::analysis::{find_saturation, mae, SizeGrid};
use samplesize::curves::{CurveModel, ModelKind};
use samplesize::dataio::{default_schedule, run_probe, Role, DEFAULT_PROBE_SEEDS};
use samplesize::fit::{fit, fit_nls, FitConfig};
use samplesize::synth::{generate, SynthSpec};

const TOTAL: u64 = 25_000;

#[test]
fn probe_fed_fit_recovers_the_generating_curve() {
    // The probe plays an external trainer whose accuracy happens to follow
    // a known inverse power law exactly.
    let truth = CurveModel::inverse(0.1, 0.5, -0.5).unwrap();
    let probe = move |fraction: f64, _seed: u64| {
        let count = ((fraction * TOTAL as f64).round() as u64).max(1);
        truth.evaluate(count).map_err(|e| e.to_string())
    };
    let dataset = run_probe(
        &probe,
        &default_schedule(),
        &DEFAULT_PROBE_SEEDS,
        TOTAL,
        "probe-inverse",
    )
    .unwrap();
    assert_eq!(dataset.points().len(), 28);
    assert!(dataset.points().iter().all(|p| p.n_runs == 3));

    let train = dataset.train_prefix(0.10);
    assert_eq!(train.len(), 10);
    let result = fit_nls(ModelKind::Inverse, &train, &FitConfig::nls()).unwrap();

    let truth = CurveModel::inverse(0.1, 0.5, -0.5).unwrap();
    let test_points = dataset.with_role(Role::Test);
    let report = mae(&result.model, &test_points).unwrap();
    assert!(report.mae < 1e-6, "test-region MAE {}", report.mae);

    // Saturation scan on the fitted curve agrees with the closed form on
    // the generating curve.
    let grid = SizeGrid::uniform_percent(TOTAL);
    let fitted = find_saturation(&result.model, &grid, 0.2).unwrap();
    let exact = find_saturation(&truth, &grid, 0.2).unwrap();
    assert_eq!(fitted.saturation_count, exact.saturation_count);
}

#[test]
fn noiseless_loop_closes_for_every_family_and_the_ensemble() {
    // Each generator stays inside [0, 1] over the whole schedule, so the
    // generated points carry no clamping distortion.
    let generators = [
        CurveModel::exp(0.5, 0.05).unwrap(),
        CurveModel::inverse(0.1, 0.5, -0.5).unwrap(),
        CurveModel::pow4(0.9, 0.05, 1.0, 1.0).unwrap(),
    ];
    for truth in &generators {
        let spec = SynthSpec::noiseless(truth.clone(), TOTAL);
        let dataset = generate(&spec).unwrap();
        let train = dataset.train_prefix(0.10);
        let test_points = dataset.with_role(Role::Test);

        let same_family = fit_nls(truth.kind(), &train, &FitConfig::nls()).unwrap();
        let report = mae(&same_family.model, &test_points).unwrap();
        assert!(
            report.mae < 1e-5,
            "{} same-family test MAE {}",
            truth.kind(),
            report.mae
        );

        let ensemble = fit(ModelKind::Ensemble, &train, &FitConfig::nls()).unwrap();
        let report = mae(&ensemble.model, &test_points).unwrap();
        assert!(
            report.mae < 1e-5,
            "{} ensemble test MAE {}",
            truth.kind(),
            report.mae
        );
    }
}
