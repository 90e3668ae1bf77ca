//! CSV schemas: trajectories, training metrics and temperature sweeps.

use std::fs::File;
use std::path::Path;

use serde::{de::DeserializeOwned, Deserialize, Serialize};

use crate::error::{Error, Result};

pub const TRAJECTORY_COLUMNS: [&str; 10] = [
    "t",
    "w_max",
    "entropy",
    "population",
    "backflow",
    "power_ab",
    "eta",
    "kappa",
    "gate",
    "reward",
];
pub const METRICS_COLUMNS: [&str; 5] = [
    "update",
    "critic_loss",
    "actor_loss",
    "mean_episode_reward",
    "wall_ms",
];
pub const SWEEP_COLUMNS: [&str; 4] = ["T", "t", "kappa", "w_max"];

/// The state at time `t` and the control held over the interval ending at
/// `t` (for `t = 0`, the first control applied).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRow {
    pub t: f64,
    pub w_max: f64,
    pub entropy: f64,
    pub population: f64,
    pub backflow: f64,
    pub power_ab: f64,
    pub eta: f64,
    pub kappa: f64,
    pub gate: f64,
    pub reward: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub update: usize,
    pub critic_loss: f64,
    pub actor_loss: f64,
    pub mean_episode_reward: f64,
    pub wall_ms: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    #[serde(rename = "T")]
    pub temperature: f64,
    pub t: f64,
    pub kappa: f64,
    pub w_max: f64,
}

trait Finite {
    fn values(&self) -> Vec<f64>;
}

impl Finite for TrajectoryRow {
    fn values(&self) -> Vec<f64> {
        vec![
            self.t,
            self.w_max,
            self.entropy,
            self.population,
            self.backflow,
            self.power_ab,
            self.eta,
            self.kappa,
            self.gate,
            self.reward,
        ]
    }
}

impl Finite for MetricsRecord {
    fn values(&self) -> Vec<f64> {
        vec![self.critic_loss, self.actor_loss, self.mean_episode_reward]
    }
}

impl Finite for SweepRow {
    fn values(&self) -> Vec<f64> {
        vec![self.temperature, self.t, self.kappa, self.w_max]
    }
}

/// Which schema a CSV header matches.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Schema {
    Trajectory,
    Metrics,
    Sweep,
}

impl Schema {
    pub fn columns(self) -> &'static [&'static str] {
        match self {
            Schema::Trajectory => &TRAJECTORY_COLUMNS,
            Schema::Metrics => &METRICS_COLUMNS,
            Schema::Sweep => &SWEEP_COLUMNS,
        }
    }

    pub fn detect(header: &[String]) -> Option<Self> {
        [Schema::Trajectory, Schema::Metrics, Schema::Sweep]
            .into_iter()
            .find(|s| {
                s.columns()
                    .iter()
                    .copied()
                    .eq(header.iter().map(String::as_str))
            })
    }
}

/// Reads the header line of a CSV file.
pub fn read_header(path: &Path) -> Result<Vec<String>> {
    let mut reader = csv::Reader::from_path(path).map_err(|source| csv_err(path, source))?;
    let header = reader.headers().map_err(|source| csv_err(path, source))?;
    Ok(header.iter().map(str::to_owned).collect())
}

fn csv_err(path: &Path, source: csv::Error) -> Error {
    Error::Csv {
        path: path.to_path_buf(),
        source,
    }
}

/// Opens a writer that has already emitted the schema's header, so files
/// with no data rows still carry it.
fn open_writer(path: &Path, schema: Schema) -> Result<csv::Writer<File>> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut writer = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(file);
    writer
        .write_record(schema.columns())
        .map_err(|source| csv_err(path, source))?;
    Ok(writer)
}

fn write_rows<T: Serialize>(path: &Path, schema: Schema, rows: &[T]) -> Result<()> {
    let mut writer = open_writer(path, schema)?;
    for row in rows {
        writer
            .serialize(row)
            .map_err(|source| csv_err(path, source))?;
    }
    writer.flush().map_err(|e| Error::io(path, e))
}

fn read_rows<T: DeserializeOwned + Finite>(path: &Path, schema: Schema) -> Result<Vec<T>> {
    let header = read_header(path)?;
    if Schema::detect(&header) != Some(schema) {
        return Err(Error::schema(
            path,
            format!(
                "expected columns {:?}, found {:?}",
                schema.columns(),
                header
            ),
        ));
    }
    let mut reader = csv::Reader::from_path(path).map_err(|source| csv_err(path, source))?;
    let mut rows = Vec::new();
    for (line, record) in reader.deserialize::<T>().enumerate() {
        let row = record.map_err(|source| csv_err(path, source))?;
        if row.values().iter().any(|v| !v.is_finite()) {
            return Err(Error::schema(
                path,
                format!("non-finite value in data row {}", line + 1),
            ));
        }
        rows.push(row);
    }
    Ok(rows)
}

pub fn write_trajectory(path: &Path, rows: &[TrajectoryRow]) -> Result<()> {
    write_rows(path, Schema::Trajectory, rows)
}

/// Reads and validates a trajectory: finite values, strictly increasing `t`.
pub fn read_trajectory(path: &Path) -> Result<Vec<TrajectoryRow>> {
    let rows: Vec<TrajectoryRow> = read_rows(path, Schema::Trajectory)?;
    if let Some(k) = rows.windows(2).position(|w| w[1].t <= w[0].t) {
        return Err(Error::schema(
            path,
            format!("t not strictly increasing at data row {}", k + 2),
        ));
    }
    Ok(rows)
}

pub fn write_metrics(path: &Path, rows: &[MetricsRecord]) -> Result<()> {
    write_rows(path, Schema::Metrics, rows)
}

pub fn read_metrics(path: &Path) -> Result<Vec<MetricsRecord>> {
    let rows: Vec<MetricsRecord> = read_rows(path, Schema::Metrics)?;
    if let Some(k) = rows.windows(2).position(|w| w[1].update <= w[0].update) {
        return Err(Error::schema(
            path,
            format!("update not increasing at data row {}", k + 2),
        ));
    }
    Ok(rows)
}

pub fn write_sweep(path: &Path, rows: &[SweepRow]) -> Result<()> {
    write_rows(path, Schema::Sweep, rows)
}

pub fn read_sweep(path: &Path) -> Result<Vec<SweepRow>> {
    read_rows(path, Schema::Sweep)
}

/// Appends metric rows to an open CSV as training progresses.
pub struct MetricsWriter {
    writer: csv::Writer<File>,
    path: std::path::PathBuf,
}

impl MetricsWriter {
    pub fn create(path: &Path) -> Result<Self> {
        Ok(Self {
            writer: open_writer(path, Schema::Metrics)?,
            path: path.to_path_buf(),
        })
    }

    pub fn push(&mut self, row: &MetricsRecord) -> Result<()> {
        self.writer
            .serialize(row)
            .map_err(|source| csv_err(&self.path, source))
    }

    pub fn flush(&mut self) -> Result<()> {
        self.writer.flush().map_err(|e| Error::io(&self.path, e))
    }
}

impl Drop for MetricsWriter {
    fn drop(&mut self) {
        let _ = self.writer.flush();
    }
}
