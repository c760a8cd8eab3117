//! Measurement ingestion, split schedules, reports and the probe interface.
//!
//! Datasets are lists of [`CurvePoint`]s — (training-size, accuracy)
//! measurements — tagged with the role each size plays in curve modeling:
//! `train` sizes feed the fitter, `test` sizes are held out for evaluation,
//! and `gap` sizes are neither. The default [`SplitSchedule`] uses the 1–10%
//! train grid, the 55–100% test grid and the 15–50% gap in between.

mod format;
mod probe;
mod report;

pub use format::{parse_points, write_points, PointFormat};
pub use probe::{run_probe, Probe, DEFAULT_PROBE_SEEDS};
pub use report::{
    read_fit_report, write_fit_report, FitReport, ReportComponent, ReportConfig, ReportDataset,
};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("line {line}: {reason}")]
    Malformed { line: u64, reason: String },
    #[error("line {line}: accuracy {value} is outside [0, 1]")]
    AccuracyRange { line: u64, value: f64 },
    #[error("point {index}: {reason}")]
    InvalidPoint { index: usize, reason: String },
    #[error("duplicate count {count} within role {role}")]
    DuplicateCount { count: u64, role: Role },
    #[error(
        "total size unknown: pass one explicitly or include a '# total=' directive / \
         a row carrying both fraction and count"
    )]
    MissingTotal,
    #[error(
        "line {line}: fraction {fraction} and count {count} disagree with total {total} \
         (expected count {expected})"
    )]
    FractionCountConflict {
        line: u64,
        fraction: f64,
        count: u64,
        total: u64,
        expected: u64,
    },
    #[error("bad header: {0}")]
    BadHeader(String),
    #[error("invalid schedule: {0}")]
    Schedule(String),
    #[error("invalid dataset: {0}")]
    Dataset(String),
    #[error("probe failed at fraction {fraction}, seed {seed}: {reason}")]
    Probe {
        fraction: f64,
        seed: u64,
        reason: String,
    },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("line {line}: invalid json: {reason}")]
    Json { line: u64, reason: String },
    #[error("invalid fit report: {0}")]
    Report(String),
}

/// Which part of the pipeline a measured size belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Train,
    Test,
    Gap,
}

impl Role {
    pub fn name(self) -> &'static str {
        match self {
            Role::Train => "train",
            Role::Test => "test",
            Role::Gap => "gap",
        }
    }
}

impl std::fmt::Display for Role {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Role {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "train" => Ok(Role::Train),
            "test" => Ok(Role::Test),
            "gap" => Ok(Role::Gap),
            other => Err(format!("unknown role '{other}' (expected train, test or gap)")),
        }
    }
}

/// One measurement: a training size (fraction of the full set and absolute
/// count) paired with the observed accuracy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub fraction: f64,
    pub count: u64,
    pub accuracy: f64,
    /// How many training seeds were averaged into `accuracy`.
    #[serde(default = "default_n_runs")]
    pub n_runs: u32,
    #[serde(default = "default_role")]
    pub role: Role,
}

fn default_n_runs() -> u32 {
    1
}

fn default_role() -> Role {
    Role::Train
}

impl CurvePoint {
    pub fn new(fraction: f64, count: u64, accuracy: f64) -> Self {
        Self {
            fraction,
            count,
            accuracy,
            n_runs: 1,
            role: Role::Train,
        }
    }

    pub fn with_role(mut self, role: Role) -> Self {
        self.role = role;
        self
    }

    pub fn with_n_runs(mut self, n_runs: u32) -> Self {
        self.n_runs = n_runs;
        self
    }

    fn validate(&self) -> Result<(), String> {
        if !self.fraction.is_finite() || self.fraction <= 0.0 || self.fraction > 1.0 {
            return Err(format!("fraction {} outside (0, 1]", self.fraction));
        }
        if self.count == 0 {
            return Err("count must be >= 1".into());
        }
        if !self.accuracy.is_finite() || !(0.0..=1.0).contains(&self.accuracy) {
            return Err(format!("accuracy {} outside [0, 1]", self.accuracy));
        }
        if self.n_runs == 0 {
            return Err("n_runs must be >= 1".into());
        }
        Ok(())
    }
}

/// Dataset-level details carried alongside the points.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DatasetMeta {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub num_classes: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<String>,
}

/// A named collection of curve points over one benchmark, sorted by count.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveDataset {
    name: String,
    total_size: u64,
    points: Vec<CurvePoint>,
    metadata: DatasetMeta,
}

impl CurveDataset {
    /// Validates, sorts by (count, role) and checks fraction/count
    /// consistency against the declared total (tolerated slack: one count,
    /// absorbing rounding at either end).
    pub fn new(
        name: impl Into<String>,
        total_size: u64,
        mut points: Vec<CurvePoint>,
        metadata: DatasetMeta,
    ) -> Result<Self, DataError> {
        let name = name.into();
        if name.contains('\n') || name.contains('\r') {
            return Err(DataError::Dataset("name must be a single line".into()));
        }
        if total_size == 0 {
            return Err(DataError::Dataset("total_size must be >= 1".into()));
        }
        for (index, p) in points.iter().enumerate() {
            p.validate()
                .map_err(|reason| DataError::InvalidPoint { index, reason })?;
            let expected = expected_count(p.fraction, total_size);
            if p.count.abs_diff(expected) > 1 {
                return Err(DataError::InvalidPoint {
                    index,
                    reason: format!(
                        "count {} inconsistent with fraction {} of total {} (expected {})",
                        p.count, p.fraction, total_size, expected
                    ),
                });
            }
        }
        points.sort_by_key(|p| (p.count, p.role));
        for pair in points.windows(2) {
            if pair[0].count == pair[1].count && pair[0].role == pair[1].role {
                return Err(DataError::DuplicateCount {
                    count: pair[0].count,
                    role: pair[0].role,
                });
            }
        }
        Ok(Self {
            name,
            total_size,
            points,
            metadata,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn total_size(&self) -> u64 {
        self.total_size
    }

    pub fn points(&self) -> &[CurvePoint] {
        &self.points
    }

    pub fn metadata(&self) -> &DatasetMeta {
        &self.metadata
    }

    pub fn set_name(&mut self, name: impl Into<String>) {
        self.name = name.into();
    }

    pub fn with_role(&self, role: Role) -> Vec<CurvePoint> {
        self.points
            .iter()
            .filter(|p| p.role == role)
            .cloned()
            .collect()
    }

    /// Train-role points at fractions up to `max_fraction` — the low-resource
    /// prefix the curve is fitted on.
    pub fn train_prefix(&self, max_fraction: f64) -> Vec<CurvePoint> {
        self.points
            .iter()
            .filter(|p| p.role == Role::Train && p.fraction <= max_fraction + 1e-12)
            .cloned()
            .collect()
    }
}

/// Round a fraction of the total to a count, half-up, floored at 1.
pub fn expected_count(fraction: f64, total_size: u64) -> u64 {
    ((fraction * total_size as f64).round() as u64).max(1)
}

/// The grids of size fractions used for fitting, testing and the untouched
/// gap in between.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitSchedule {
    pub train_fractions: Vec<f64>,
    pub test_fractions: Vec<f64>,
    pub gap_fractions: Vec<f64>,
}

impl SplitSchedule {
    pub fn new(
        train_fractions: Vec<f64>,
        test_fractions: Vec<f64>,
        gap_fractions: Vec<f64>,
    ) -> Result<Self, DataError> {
        let s = Self {
            train_fractions,
            test_fractions,
            gap_fractions,
        };
        s.validate()?;
        Ok(s)
    }

    fn validate(&self) -> Result<(), DataError> {
        for (label, list) in [
            ("train", &self.train_fractions),
            ("test", &self.test_fractions),
            ("gap", &self.gap_fractions),
        ] {
            for f in list {
                if !f.is_finite() || *f <= 0.0 || *f > 1.0 {
                    return Err(DataError::Schedule(format!(
                        "{label} fraction {f} outside (0, 1]"
                    )));
                }
            }
            if list.windows(2).any(|w| w[0] >= w[1]) {
                return Err(DataError::Schedule(format!(
                    "{label} fractions must be strictly increasing"
                )));
            }
        }
        let mut all = self.all_fractions();
        all.sort_by(|a, b| a.0.total_cmp(&b.0));
        if all.windows(2).any(|w| (w[0].0 - w[1].0).abs() < 1e-12) {
            return Err(DataError::Schedule(
                "train/test/gap fraction lists must be disjoint".into(),
            ));
        }
        if let (Some(train_max), Some(test_min)) =
            (self.train_fractions.last(), self.test_fractions.first())
        {
            if train_max >= test_min {
                return Err(DataError::Schedule(format!(
                    "train max {train_max} must be below test min {test_min}"
                )));
            }
        }
        Ok(())
    }

    /// Every scheduled fraction with its role, sorted by fraction.
    pub fn all_fractions(&self) -> Vec<(f64, Role)> {
        let mut all: Vec<(f64, Role)> = self
            .train_fractions
            .iter()
            .map(|&f| (f, Role::Train))
            .chain(self.test_fractions.iter().map(|&f| (f, Role::Test)))
            .chain(self.gap_fractions.iter().map(|&f| (f, Role::Gap)))
            .collect();
        all.sort_by(|a, b| a.0.total_cmp(&b.0));
        all
    }
}

impl Default for SplitSchedule {
    fn default() -> Self {
        default_schedule()
    }
}

/// The benchmark split grids: train 1%–10% at 1% intervals, test 55%–100%
/// at 5% intervals, gap 15%–50% at 5% intervals.
pub fn default_schedule() -> SplitSchedule {
    SplitSchedule {
        train_fractions: (1..=10).map(|i| i as f64 / 100.0).collect(),
        test_fractions: (11..=20).map(|i| (i * 5) as f64 / 100.0).collect(),
        gap_fractions: (3..=10).map(|i| (i * 5) as f64 / 100.0).collect(),
    }
}
