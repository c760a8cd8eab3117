//! Seeded synthetic learning-curve datasets and brute-force fit oracles.
//!
//! Generation draws one Gaussian perturbation per scheduled point, in
//! schedule order (train, test, gap), from a ChaCha stream seeded by the
//! spec — identical specs produce identical datasets. With `size_decay` the
//! noise standard deviation shrinks as `sigma0 / sqrt(count)`, modeling the
//! smaller sampling variance of accuracies measured on more data.

use crate::curves::{CurveModel, ModelError, ModelKind};
use crate::dataio::{expected_count, CurveDataset, CurvePoint, DataError, DatasetMeta, Role, SplitSchedule};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("sigma0 {0} must be finite and >= 0")]
    BadSigma(f64),
    #[error("generator evaluation failed at count {count}: {source}")]
    Generator { count: u64, source: ModelError },
    #[error("grid oracle supports only 2-parameter kinds, got {0}")]
    OracleArity(ModelKind),
    #[error("oracle grid of {0} cells exceeds the 1e8 limit")]
    OracleTooLarge(u64),
    #[error(transparent)]
    Data(#[from] DataError),
}

/// Noise model applied on top of the generator curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Noise {
    None,
    Gaussian { sigma0: f64, size_decay: bool },
}

/// Everything needed to produce one synthetic dataset deterministically.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub generator: CurveModel,
    pub total_size: u64,
    pub schedule: SplitSchedule,
    pub noise: Noise,
    pub rng_seed: u64,
}

impl SynthSpec {
    pub fn noiseless(generator: CurveModel, total_size: u64) -> Self {
        Self {
            generator,
            total_size,
            schedule: SplitSchedule::default(),
            noise: Noise::None,
            rng_seed: 0,
        }
    }

    fn sigma_at(&self, count: u64) -> Result<f64, SynthError> {
        match self.noise {
            Noise::None => Ok(0.0),
            Noise::Gaussian { sigma0, size_decay } => {
                if !(sigma0.is_finite() && sigma0 >= 0.0) {
                    return Err(SynthError::BadSigma(sigma0));
                }
                Ok(if size_decay {
                    sigma0 / (count as f64).sqrt()
                } else {
                    sigma0
                })
            }
        }
    }
}

/// Generate `accuracy_i = clamp(E(count_i) + eps_i)` over the schedule.
pub fn generate(spec: &SynthSpec) -> Result<CurveDataset, SynthError> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.rng_seed);
    let mut points = Vec::new();
    let groups = [
        (Role::Train, &spec.schedule.train_fractions),
        (Role::Test, &spec.schedule.test_fractions),
        (Role::Gap, &spec.schedule.gap_fractions),
    ];
    for (role, fractions) in groups {
        for &fraction in fractions.iter() {
            let count = expected_count(fraction, spec.total_size);
            let clean = spec
                .generator
                .evaluate(count)
                .map_err(|source| SynthError::Generator { count, source })?;
            let sigma = spec.sigma_at(count)?;
            let draw: f64 = StandardNormal.sample(&mut rng);
            let accuracy = (clean + sigma * draw).clamp(0.0, 1.0);
            points.push(CurvePoint {
                fraction,
                count,
                accuracy,
                n_runs: 1,
                role,
            });
        }
    }
    Ok(CurveDataset::new(
        format!("synthetic-{}", spec.generator.kind()),
        spec.total_size,
        points,
        DatasetMeta {
            num_classes: None,
            source: Some(format!("generated, seed {}", spec.rng_seed)),
        },
    )?)
}

/// Exhaustive minimum of the unweighted RSS over a dense parameter grid.
///
/// Only tractable for the 2-parameter exponential family; serves as an
/// optimality oracle for the Levenberg-Marquardt fitter. Scan order is
/// row-major over (a, b), so ties resolve deterministically to the first
/// minimum encountered.
pub fn grid_oracle_fit(
    kind: ModelKind,
    points: &[CurvePoint],
    bounds: [(f64, f64); 2],
    resolution: (usize, usize),
) -> Result<(Vec<f64>, f64), SynthError> {
    if kind != ModelKind::Exp {
        return Err(SynthError::OracleArity(kind));
    }
    let cells = resolution.0 as u64 * resolution.1 as u64;
    if cells > 100_000_000 {
        return Err(SynthError::OracleTooLarge(cells));
    }
    let grid_value = |(lo, hi): (f64, f64), steps: usize, i: usize| {
        if steps <= 1 {
            lo
        } else {
            lo + (hi - lo) * i as f64 / (steps - 1) as f64
        }
    };
    let mut best_params = vec![bounds[0].0, bounds[1].0];
    let mut best_rss = f64::INFINITY;
    for ai in 0..resolution.0 {
        let a = grid_value(bounds[0], resolution.0, ai);
        for bi in 0..resolution.1 {
            let b = grid_value(bounds[1], resolution.1, bi);
            let mut rss = 0.0;
            for p in points {
                let r = a * (p.count as f64).powf(b) - p.accuracy;
                rss += r * r;
            }
            if rss < best_rss {
                best_rss = rss;
                best_params = vec![a, b];
            }
        }
    }
    Ok((best_params, best_rss))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataio::default_schedule;

    #[test]
    fn noiseless_generation_matches_generator_exactly() {
        let spec = SynthSpec::noiseless(CurveModel::inverse(0.1, 0.5, -0.5).unwrap(), 25_000);
        let ds = generate(&spec).unwrap();
        assert_eq!(ds.points().len(), 28);
        for p in ds.points() {
            assert_eq!(p.accuracy, spec.generator.evaluate(p.count).unwrap());
        }
    }

    #[test]
    fn same_seed_same_dataset() {
        let spec = SynthSpec {
            generator: CurveModel::exp(0.55, 0.06).unwrap(),
            total_size: 25_000,
            schedule: default_schedule(),
            noise: Noise::Gaussian {
                sigma0: 0.02,
                size_decay: false,
            },
            rng_seed: 42,
        };
        assert_eq!(generate(&spec).unwrap(), generate(&spec).unwrap());
        let other = SynthSpec {
            rng_seed: 43,
            ..spec.clone()
        };
        assert_ne!(generate(&spec).unwrap(), generate(&other).unwrap());
    }

    #[test]
    fn size_decay_scales_noise_with_sqrt_count() {
        // Monte Carlo over 1000 seeds: the sample standard deviation at
        // count 10000 is ~1/10 of that at count 100 (sqrt(10000/100) = 10).
        let generator = CurveModel::inverse(0.5, 0.0, -0.5).unwrap(); // constant 0.5
        let schedule = SplitSchedule::new(vec![0.01], vec![], vec![1.0]).unwrap();
        let mut small = Vec::new();
        let mut large = Vec::new();
        for seed in 0..1000 {
            let spec = SynthSpec {
                generator: generator.clone(),
                total_size: 10_000,
                schedule: schedule.clone(),
                noise: Noise::Gaussian {
                    sigma0: 0.1,
                    size_decay: true,
                },
                rng_seed: seed,
            };
            let ds = generate(&spec).unwrap();
            small.push(ds.points()[0].accuracy); // count 100
            large.push(ds.points()[1].accuracy); // count 10000
        }
        let sd = |xs: &[f64]| {
            let mean = xs.iter().sum::<f64>() / xs.len() as f64;
            (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
        };
        let ratio = sd(&small) / sd(&large);
        assert!((ratio - 10.0).abs() / 10.0 < 0.2, "ratio {ratio}");
    }

    #[test]
    fn generator_domain_failure_is_reported() {
        let spec = SynthSpec::noiseless(CurveModel::pow4(0.9, 1e-9, -1.0, 0.5).unwrap(), 1000);
        assert!(matches!(
            generate(&spec),
            Err(SynthError::Generator { .. })
        ));
    }

    #[test]
    fn oracle_finds_true_cell_on_noiseless_data() {
        let truth = CurveModel::exp(0.5, 0.1).unwrap();
        let pts: Vec<CurvePoint> = (1..=10)
            .map(|i| {
                let c = i * 100;
                CurvePoint::new(c as f64 / 10_000.0, c, truth.evaluate(c).unwrap())
            })
            .collect();
        // Grid contains (0.5, 0.1) exactly: a in 0..1 step 0.01, b in 0..0.2 step 0.002.
        let (params, rss) =
            grid_oracle_fit(ModelKind::Exp, &pts, [(0.0, 1.0), (0.0, 0.2)], (101, 101)).unwrap();
        assert!((params[0] - 0.5).abs() < 1e-9);
        assert!((params[1] - 0.1).abs() < 1e-9);
        assert!(rss >= 0.0);
        assert!(rss < 1e-20);
    }

    #[test]
    fn oracle_rejects_wrong_kind_and_huge_grids() {
        let pts = vec![CurvePoint::new(0.01, 100, 0.6)];
        assert!(matches!(
            grid_oracle_fit(ModelKind::Pow4, &pts, [(0.0, 1.0), (0.0, 1.0)], (10, 10)),
            Err(SynthError::OracleArity(_))
        ));
        assert!(matches!(
            grid_oracle_fit(
                ModelKind::Exp,
                &pts,
                [(0.0, 1.0), (0.0, 1.0)],
                (20_000, 20_000)
            ),
            Err(SynthError::OracleTooLarge(_))
        ));
    }
}
