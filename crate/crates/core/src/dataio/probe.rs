//! External measurement probe: attach any trainer as a callback.
//!
//! A probe maps `(size fraction, seed)` to a measured accuracy. Running it
//! over a schedule averages the per-seed accuracies into one point per
//! fraction, mirroring the multi-initialization averaging used when curve
//! points come from real training runs.

use super::{expected_count, CurveDataset, CurvePoint, DataError, DatasetMeta, SplitSchedule};

/// Three initialization runs per size, matching the benchmark protocol.
pub const DEFAULT_PROBE_SEEDS: [u64; 3] = [0, 1, 2];

/// Maps a size fraction and a training seed to an accuracy in `[0, 1]`.
pub trait Probe {
    fn measure(&self, fraction: f64, seed: u64) -> Result<f64, String>;
}

impl<F> Probe for F
where
    F: Fn(f64, u64) -> Result<f64, String>,
{
    fn measure(&self, fraction: f64, seed: u64) -> Result<f64, String> {
        self(fraction, seed)
    }
}

/// Measure every scheduled fraction with every seed and average.
///
/// Accuracies are reduced in seed-sorted order, so the result does not
/// depend on the order seeds were supplied (or evaluated) in.
pub fn run_probe(
    probe: &dyn Probe,
    schedule: &SplitSchedule,
    seeds: &[u64],
    total_size: u64,
    name: &str,
) -> Result<CurveDataset, DataError> {
    if seeds.is_empty() {
        return Err(DataError::Dataset("probe needs at least one seed".into()));
    }
    let mut points = Vec::new();
    for (fraction, role) in schedule.all_fractions() {
        let mut measured: Vec<(u64, f64)> = Vec::with_capacity(seeds.len());
        for &seed in seeds {
            let accuracy = probe
                .measure(fraction, seed)
                .map_err(|reason| DataError::Probe {
                    fraction,
                    seed,
                    reason,
                })?;
            if !accuracy.is_finite() || !(0.0..=1.0).contains(&accuracy) {
                return Err(DataError::Probe {
                    fraction,
                    seed,
                    reason: format!("returned accuracy {accuracy} outside [0, 1]"),
                });
            }
            measured.push((seed, accuracy));
        }
        measured.sort_by_key(|(seed, _)| *seed);
        let mean = measured.iter().map(|(_, a)| a).sum::<f64>() / measured.len() as f64;
        points.push(CurvePoint {
            fraction,
            count: expected_count(fraction, total_size),
            accuracy: mean,
            n_runs: seeds.len() as u32,
            role,
        });
    }
    CurveDataset::new(name, total_size, points, DatasetMeta::default())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataio::default_schedule;

    #[test]
    fn constant_probe_yields_constant_points() {
        let probe = |_f: f64, _s: u64| Ok(0.9);
        let ds = run_probe(&probe, &default_schedule(), &DEFAULT_PROBE_SEEDS, 25_000, "p").unwrap();
        assert_eq!(ds.points().len(), 28);
        assert!(ds.points().iter().all(|p| p.accuracy == 0.9 && p.n_runs == 3));
    }

    #[test]
    fn seed_dependent_probe_is_averaged() {
        let probe = |_f: f64, seed: u64| Ok(0.8 + seed as f64 * 0.1);
        let schedule = SplitSchedule::new(vec![0.1], vec![], vec![]).unwrap();
        let ds = run_probe(&probe, &schedule, &[0, 1, 2], 1000, "p").unwrap();
        assert!((ds.points()[0].accuracy - 0.9).abs() < 1e-15);
    }

    #[test]
    fn seed_order_does_not_change_output() {
        let probe = |f: f64, seed: u64| Ok((0.5 + f * 0.3 + seed as f64 * 0.01).min(1.0));
        let a = run_probe(&probe, &default_schedule(), &[0, 1, 2], 25_000, "p").unwrap();
        let b = run_probe(&probe, &default_schedule(), &[2, 0, 1], 25_000, "p").unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn failing_probe_identifies_the_pair() {
        let probe = |f: f64, seed: u64| {
            if seed == 1 && f > 0.5 {
                Err("trainer crashed".to_string())
            } else {
                Ok(0.7)
            }
        };
        let err = run_probe(&probe, &default_schedule(), &[0, 1], 25_000, "p").unwrap_err();
        match err {
            DataError::Probe { seed: 1, fraction, .. } => assert!(fraction > 0.5),
            other => panic!("unexpected: {other}"),
        }
    }

    #[test]
    fn out_of_range_probe_accuracy_is_rejected() {
        let probe = |_f: f64, _s: u64| Ok(1.2);
        assert!(run_probe(&probe, &default_schedule(), &[0], 25_000, "p").is_err());
    }
}
