//! CSV and JSONL serialization of curve datasets.
//!
//! CSV carries the columns `fraction,count,accuracy,n_runs,role` (header
//! required; `fraction` or `count` mandatory, the rest optional). Lines
//! starting with `#` are comments; `# key=value` comments are directives
//! carrying dataset-level fields (`name`, `total`, `classes`, `source`).
//!
//! JSONL carries a leading dataset-header object followed by one point
//! object per line.

use super::{CurveDataset, CurvePoint, DataError, DatasetMeta, Role};
use serde::{Deserialize, Serialize};
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PointFormat {
    Csv,
    Jsonl,
}

impl FromStr for PointFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(PointFormat::Csv),
            "jsonl" => Ok(PointFormat::Jsonl),
            other => Err(format!("unknown format '{other}' (expected csv or jsonl)")),
        }
    }
}

/// Parse a measurement stream. `name` and `total_size` override whatever the
/// stream itself declares; a total is required from one of the two sources
/// unless some row carries both a fraction and a count to infer it from.
pub fn parse_points(
    text: &str,
    format: PointFormat,
    name: Option<&str>,
    total_size: Option<u64>,
) -> Result<CurveDataset, DataError> {
    match format {
        PointFormat::Csv => parse_csv(text, name, total_size),
        PointFormat::Jsonl => parse_jsonl(text, name, total_size),
    }
}

/// Serialize a dataset. `parse_points` of the result reproduces the dataset
/// exactly, including name, total and metadata.
pub fn write_points(dataset: &CurveDataset, format: PointFormat) -> String {
    match format {
        PointFormat::Csv => write_csv(dataset),
        PointFormat::Jsonl => write_jsonl(dataset),
    }
}

struct RawRow {
    line: u64,
    fraction: Option<f64>,
    count: Option<u64>,
    accuracy: f64,
    n_runs: u32,
    role: Role,
}

fn parse_csv(
    text: &str,
    name_override: Option<&str>,
    total_override: Option<u64>,
) -> Result<CurveDataset, DataError> {
    let mut directives = DatasetMeta::default();
    let mut directive_name: Option<String> = None;
    let mut directive_total: Option<u64> = None;
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx as u64 + 1;
        let Some(rest) = line.trim_start().strip_prefix('#') else {
            continue;
        };
        let Some((key, value)) = rest.split_once('=') else {
            continue; // plain comment
        };
        let (key, value) = (key.trim(), value.trim());
        match key {
            "name" => directive_name = Some(value.to_string()),
            "total" => {
                directive_total =
                    Some(value.parse::<u64>().map_err(|e| DataError::Malformed {
                        line: line_no,
                        reason: format!("bad total directive '{value}': {e}"),
                    })?)
            }
            "classes" => {
                directives.num_classes =
                    Some(value.parse::<u32>().map_err(|e| DataError::Malformed {
                        line: line_no,
                        reason: format!("bad classes directive '{value}': {e}"),
                    })?)
            }
            "source" => directives.source = Some(value.to_string()),
            _ => {} // unknown directives are plain comments
        }
    }

    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());

    let headers = reader.headers()?.clone();
    let col = |name: &str| headers.iter().position(|h| h.eq_ignore_ascii_case(name));
    let fraction_col = col("fraction");
    let count_col = col("count");
    let accuracy_col = col("accuracy");
    let n_runs_col = col("n_runs");
    let role_col = col("role");

    if fraction_col.is_none() && count_col.is_none() {
        return Err(DataError::BadHeader(format!(
            "need a 'fraction' or 'count' column, got '{}'",
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let Some(accuracy_col) = accuracy_col else {
        return Err(DataError::BadHeader(format!(
            "need an 'accuracy' column, got '{}'",
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    };

    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let field = |idx: Option<usize>| -> Option<&str> {
            idx.and_then(|i| record.get(i)).filter(|s| !s.is_empty())
        };

        let fraction = field(fraction_col)
            .map(|s| {
                s.parse::<f64>().map_err(|e| DataError::Malformed {
                    line,
                    reason: format!("bad fraction '{s}': {e}"),
                })
            })
            .transpose()?;
        let count = field(count_col)
            .map(|s| {
                s.parse::<u64>().map_err(|e| DataError::Malformed {
                    line,
                    reason: format!("bad count '{s}': {e}"),
                })
            })
            .transpose()?;
        if fraction.is_none() && count.is_none() {
            return Err(DataError::Malformed {
                line,
                reason: "row carries neither fraction nor count".into(),
            });
        }
        let accuracy_str = field(Some(accuracy_col)).ok_or_else(|| DataError::Malformed {
            line,
            reason: "missing accuracy".into(),
        })?;
        let accuracy = accuracy_str
            .parse::<f64>()
            .map_err(|e| DataError::Malformed {
                line,
                reason: format!("bad accuracy '{accuracy_str}': {e}"),
            })?;
        if !accuracy.is_finite() || !(0.0..=1.0).contains(&accuracy) {
            return Err(DataError::AccuracyRange {
                line,
                value: accuracy,
            });
        }
        let n_runs = field(n_runs_col)
            .map(|s| {
                s.parse::<u32>().map_err(|e| DataError::Malformed {
                    line,
                    reason: format!("bad n_runs '{s}': {e}"),
                })
            })
            .transpose()?
            .unwrap_or(1);
        let role = field(role_col)
            .map(|s| {
                s.parse::<Role>()
                    .map_err(|reason| DataError::Malformed { line, reason })
            })
            .transpose()?
            .unwrap_or(Role::Train);

        rows.push(RawRow {
            line,
            fraction,
            count,
            accuracy,
            n_runs,
            role,
        });
    }

    let name = name_override
        .map(str::to_string)
        .or(directive_name)
        .unwrap_or_else(|| "dataset".to_string());
    let total = resolve_total(total_override.or(directive_total), &rows)?;
    materialize(name, total, directives, rows)
}

/// Total resolution order: explicit argument, stream directive/header, then
/// inference from the first row carrying both a fraction and a count.
fn resolve_total(declared: Option<u64>, rows: &[RawRow]) -> Result<u64, DataError> {
    if let Some(t) = declared {
        return Ok(t);
    }
    for row in rows {
        if let (Some(f), Some(c)) = (row.fraction, row.count) {
            if f > 0.0 {
                return Ok((c as f64 / f).round() as u64);
            }
        }
    }
    Err(DataError::MissingTotal)
}

fn materialize(
    name: String,
    total: u64,
    metadata: DatasetMeta,
    rows: Vec<RawRow>,
) -> Result<CurveDataset, DataError> {
    let mut points = Vec::with_capacity(rows.len());
    for row in rows {
        let (fraction, count) = match (row.fraction, row.count) {
            (Some(f), Some(c)) => {
                let expected = super::expected_count(f, total);
                if c.abs_diff(expected) > 1 {
                    return Err(DataError::FractionCountConflict {
                        line: row.line,
                        fraction: f,
                        count: c,
                        total,
                        expected,
                    });
                }
                (f, c)
            }
            (Some(f), None) => (f, super::expected_count(f, total)),
            (None, Some(c)) => (c as f64 / total as f64, c),
            (None, None) => unreachable!("rejected during row parsing"),
        };
        points.push(CurvePoint {
            fraction,
            count,
            accuracy: row.accuracy,
            n_runs: row.n_runs,
            role: row.role,
        });
    }
    CurveDataset::new(name, total, points, metadata)
}

fn write_csv(dataset: &CurveDataset) -> String {
    let mut out = String::new();
    out.push_str(&format!("# name={}\n", dataset.name()));
    out.push_str(&format!("# total={}\n", dataset.total_size()));
    if let Some(classes) = dataset.metadata().num_classes {
        out.push_str(&format!("# classes={classes}\n"));
    }
    if let Some(source) = &dataset.metadata().source {
        out.push_str(&format!("# source={source}\n"));
    }
    out.push_str("fraction,count,accuracy,n_runs,role\n");
    for p in dataset.points() {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            p.fraction, p.count, p.accuracy, p.n_runs, p.role
        ));
    }
    out
}

#[derive(Debug, Serialize, Deserialize)]
struct JsonlHeader {
    name: String,
    total_size: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    num_classes: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    source: Option<String>,
}

fn parse_jsonl(
    text: &str,
    name_override: Option<&str>,
    total_override: Option<u64>,
) -> Result<CurveDataset, DataError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i as u64 + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty());

    let (header_line, header_text) = lines.next().ok_or(DataError::Json {
        line: 1,
        reason: "empty stream (expected a dataset-header object)".into(),
    })?;
    let header: JsonlHeader =
        serde_json::from_str(header_text).map_err(|e| DataError::Json {
            line: header_line,
            reason: format!("bad dataset header: {e}"),
        })?;

    let mut points = Vec::new();
    for (line, l) in lines {
        let point: CurvePoint = serde_json::from_str(l).map_err(|e| DataError::Json {
            line,
            reason: e.to_string(),
        })?;
        points.push(point);
    }

    let name = name_override.map(str::to_string).unwrap_or(header.name);
    let total = total_override.unwrap_or(header.total_size);
    CurveDataset::new(
        name,
        total,
        points,
        DatasetMeta {
            num_classes: header.num_classes,
            source: header.source,
        },
    )
}

fn write_jsonl(dataset: &CurveDataset) -> String {
    let header = JsonlHeader {
        name: dataset.name().to_string(),
        total_size: dataset.total_size(),
        num_classes: dataset.metadata().num_classes,
        source: dataset.metadata().source.clone(),
    };
    let mut out = serde_json::to_string(&header).expect("header serializes");
    out.push('\n');
    for p in dataset.points() {
        out.push_str(&serde_json::to_string(p).expect("point serializes"));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_counts_derived_from_declared_total() {
        let text = "fraction,accuracy\n0.01,0.62\n0.02,0.68\n";
        let ds = parse_points(text, PointFormat::Csv, None, Some(25_000)).unwrap();
        assert_eq!(ds.points().len(), 2);
        assert_eq!(ds.points()[0].count, 250);
        assert_eq!(ds.points()[1].count, 500);
    }

    #[test]
    fn csv_rejects_out_of_range_accuracy() {
        let text = "fraction,accuracy\n0.5,1.2\n";
        let err = parse_points(text, PointFormat::Csv, None, Some(1000)).unwrap_err();
        assert!(matches!(err, DataError::AccuracyRange { line: 2, .. }));
    }

    #[test]
    fn csv_reports_line_numbers_on_malformed_rows() {
        let text = "fraction,accuracy\n0.01,0.62\nnot-a-number,0.3\n";
        let err = parse_points(text, PointFormat::Csv, None, Some(1000)).unwrap_err();
        assert!(matches!(err, DataError::Malformed { line: 3, .. }), "{err}");
    }

    #[test]
    fn csv_requires_total_when_only_fractions() {
        let text = "fraction,accuracy\n0.01,0.62\n";
        assert!(matches!(
            parse_points(text, PointFormat::Csv, None, None),
            Err(DataError::MissingTotal)
        ));
    }

    #[test]
    fn csv_infers_total_from_mixed_row() {
        let text = "fraction,count,accuracy\n0.01,250,0.62\n0.02,,0.68\n";
        let ds = parse_points(text, PointFormat::Csv, None, None).unwrap();
        assert_eq!(ds.total_size(), 25_000);
        assert_eq!(ds.points()[1].count, 500);
    }

    #[test]
    fn csv_conflicting_fraction_and_count_is_hard_error() {
        let text = "fraction,count,accuracy\n0.01,900,0.62\n";
        let err = parse_points(text, PointFormat::Csv, None, Some(25_000)).unwrap_err();
        assert!(matches!(err, DataError::FractionCountConflict { .. }));
    }

    #[test]
    fn csv_round_trip_is_identity() {
        let text = "# name=imdb\n# total=25000\n# classes=2\nfraction,accuracy,role,n_runs\n\
                    0.01,0.62,train,3\n0.55,0.88,test,3\n";
        let ds = parse_points(text, PointFormat::Csv, None, None).unwrap();
        let written = write_points(&ds, PointFormat::Csv);
        let back = parse_points(&written, PointFormat::Csv, None, None).unwrap();
        assert_eq!(ds, back);
        assert_eq!(ds.metadata().num_classes, Some(2));
    }

    #[test]
    fn jsonl_round_trip_is_identity() {
        let ds = CurveDataset::new(
            "sst2",
            67_000,
            vec![
                CurvePoint::new(0.01, 670, 0.61).with_n_runs(3),
                CurvePoint::new(0.55, 36_850, 0.83).with_role(Role::Test),
            ],
            DatasetMeta {
                num_classes: Some(2),
                source: Some("synthetic".into()),
            },
        )
        .unwrap();
        let written = write_points(&ds, PointFormat::Jsonl);
        let back = parse_points(&written, PointFormat::Jsonl, None, None).unwrap();
        assert_eq!(ds, back);
    }

    #[test]
    fn jsonl_reports_line_of_bad_point() {
        let text = "{\"name\":\"d\",\"total_size\":1000}\n{\"fraction\":0.5}\n";
        let err = parse_points(text, PointFormat::Jsonl, None, None).unwrap_err();
        assert!(matches!(err, DataError::Json { line: 2, .. }));
    }
}
