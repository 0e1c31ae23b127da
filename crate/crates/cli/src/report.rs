use std::path::Path;

use pmlsh::pmtree::{AuditReport, TreeStats};
use pmlsh::projection::QueryParams;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetInfo {
    pub name: String,
    pub n: usize,
    pub d: usize,
    /// Points in the index (fewer than `n` when queries are excluded).
    pub indexed: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BuildInfo {
    pub build_ms: f64,
    /// Whether the tree came from a snapshot instead of being built.
    pub loaded: bool,
    pub family_seed: u64,
    pub stats: TreeStats,
    pub audit: Option<AuditReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruthInfo {
    pub kind: String,
    pub k: usize,
    /// `computed`, `reused` or `recomputed: <reason>`.
    pub status: String,
    pub oracle_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GammaInfo {
    pub gamma: f64,
    pub prob: f64,
    pub sample_size: usize,
    pub pairs: usize,
    pub coverage: f64,
    pub calibrate_ms: f64,
}

/// One query (NN) or one whole search (CP).
///
/// For ball-cover runs `recall` is 1 on success and 0 otherwise, and
/// `ratio` is the returned distance over the query radius.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryRow {
    pub query: usize,
    /// Mean over the timed repeats; the warm-up pass is not included.
    pub time_ms: f64,
    pub recall: f64,
    /// `None` when undefined or infinite.
    pub ratio: Option<f64>,
    pub returned: usize,
    pub verified: Option<usize>,
    pub rounds: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub rows: usize,
    pub mean_time_ms: f64,
    pub mean_recall: f64,
    /// Mean over the rows with a finite ratio.
    pub mean_ratio: Option<f64>,
    pub rows_without_ratio: usize,
    pub total_verified: usize,
    pub mean_verified: Option<f64>,
    pub mean_rounds: Option<f64>,
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, count) = values.fold((0.0, 0usize), |(s, c), v| (s + v, c + 1));
    (count > 0).then(|| sum / count as f64)
}

impl Aggregate {
    pub fn from_rows(rows: &[QueryRow]) -> Self {
        Self {
            rows: rows.len(),
            mean_time_ms: mean(rows.iter().map(|r| r.time_ms)).unwrap_or(0.0),
            mean_recall: mean(rows.iter().map(|r| r.recall)).unwrap_or(0.0),
            mean_ratio: mean(rows.iter().filter_map(|r| r.ratio)),
            rows_without_ratio: rows.iter().filter(|r| r.ratio.is_none()).count(),
            total_verified: rows.iter().filter_map(|r| r.verified).sum(),
            mean_verified: mean(rows.iter().filter_map(|r| r.verified.map(|v| v as f64))),
            mean_rounds: mean(rows.iter().filter_map(|r| r.rounds.map(|v| v as f64))),
        }
    }
}

/// Results for one point of the `(c, k)` grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridRun {
    pub c: f64,
    pub k: usize,
    pub params: QueryParams,
    pub r_min: Option<f64>,
    pub rows: Vec<QueryRow>,
    pub aggregate: Aggregate,
}

impl GridRun {
    pub fn new(
        c: f64,
        k: usize,
        params: QueryParams,
        r_min: Option<f64>,
        rows: Vec<QueryRow>,
    ) -> Self {
        let aggregate = Aggregate::from_rows(&rows);
        Self {
            c,
            k,
            params,
            r_min,
            rows,
            aggregate,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub command: String,
    pub config: RunConfig,
    pub dataset: DatasetInfo,
    pub build: Option<BuildInfo>,
    pub ground_truth: Option<GroundTruthInfo>,
    pub gamma: Option<GammaInfo>,
    pub snapshot: Option<String>,
    pub runs: Vec<GridRun>,
}

impl RunReport {
    pub fn new(command: &str, config: &RunConfig, dataset: DatasetInfo) -> Self {
        Self {
            command: command.into(),
            config: config.clone(),
            dataset,
            build: None,
            ground_truth: None,
            gamma: None,
            snapshot: None,
            runs: Vec::new(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }

    /// Checks that every stored aggregate matches its rows exactly.
    pub fn check_aggregates(&self) -> CliResult<()> {
        for run in &self.runs {
            if Aggregate::from_rows(&run.rows) != run.aggregate {
                return Err(CliError::Invariant(format!(
                    "aggregate for c={}, k={} does not match its rows",
                    run.c, run.k
                )));
            }
        }
        Ok(())
    }

    /// All per-query rows, one CSV line each, keyed by grid point.
    pub fn write_csv(&self, path: &Path) -> CliResult<()> {
        #[derive(Serialize)]
        struct Line {
            c: f64,
            k: usize,
            query: usize,
            time_ms: f64,
            recall: f64,
            ratio: Option<f64>,
            returned: usize,
            verified: Option<usize>,
            rounds: Option<usize>,
        }
        let io = |e: csv::Error| CliError::Io(format!("{}: {e}", path.display()));
        let mut w = csv::Writer::from_path(path).map_err(io)?;
        for run in &self.runs {
            for row in &run.rows {
                w.serialize(Line {
                    c: run.c,
                    k: run.k,
                    query: row.query,
                    time_ms: row.time_ms,
                    recall: row.recall,
                    ratio: row.ratio,
                    returned: row.returned,
                    verified: row.verified,
                    rounds: row.rounds,
                })
                .map_err(io)?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// The report as JSON with every timing field (`*_ms`) removed, for
/// comparing runs.
pub fn without_timings(report: &RunReport) -> serde_json::Value {
    fn strip(v: &mut serde_json::Value) {
        match v {
            serde_json::Value::Object(map) => {
                map.retain(|k, _| !k.ends_with("_ms"));
                map.values_mut().for_each(strip);
            }
            serde_json::Value::Array(items) => items.iter_mut().for_each(strip),
            _ => {}
        }
    }
    let mut v = serde_json::to_value(report).expect("reports serialize");
    strip(&mut v);
    v
}
