//! On-disk formats: line-delimited trace files, dataset files, CSV feature
//! matrices with their manifest-version sidecar, and model files.
//!
//! Every reader reports schema violations with the offending line number;
//! every writer emits bytes that are a pure function of its inputs, so
//! same-seed runs produce identical files.

use std::collections::HashMap;
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::features::{ExtractedMatrix, FeatureRow};
use crate::judger::{EnsembleModel, MODEL_FORMAT_VERSION};
use crate::trace::{Architecture, Problem, RunManifest, SampleTrace, Trajectory};
use crate::Scalar;

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Schema {
        path: String,
        line: usize,
        message: String,
    },
    #[error("unsupported model format version {found} (this build reads {expected})")]
    ModelFormat { expected: u32, found: u32 },
}

fn io_error(path: &Path, source: std::io::Error) -> StoreError {
    StoreError::Io {
        path: path.display().to_string(),
        source,
    }
}

fn schema_error(path: &Path, line: usize, message: impl Into<String>) -> StoreError {
    StoreError::Schema {
        path: path.display().to_string(),
        line,
        message: message.into(),
    }
}

/// Run identifier: start-of-run timestamp (milliseconds, logical zero for
/// scripted runs) joined with the first eight hex digits of the SHA-256 of
/// the seed's decimal form.
pub fn make_run_id(timestamp_ms: i64, seed: u64) -> String {
    let digest = Sha256::digest(seed.to_string().as_bytes());
    format!(
        "{timestamp_ms}-{:02x}{:02x}{:02x}{:02x}",
        digest[0], digest[1], digest[2], digest[3]
    )
}

// ---------------------------------------------------------------------------
// Trace files
// ---------------------------------------------------------------------------

/// A trajectory line of a trace file: the trajectory plus the sample key it
/// belongs to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub run_id: String,
    pub problem_id: String,
    #[serde(flatten)]
    pub trajectory: Trajectory,
}

/// A sample-summary line: the per-sample outcome without its trajectories.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleSummary {
    pub run_id: String,
    pub problem_id: String,
    pub architecture: Architecture,
    pub rounds: u32,
    pub final_text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub extracted_answer: Option<String>,
    pub is_finally_correct: bool,
    pub started_at: i64,
    pub finished_at: i64,
}

impl SampleSummary {
    pub fn of(trace: &SampleTrace) -> SampleSummary {
        SampleSummary {
            run_id: trace.run_id.clone(),
            problem_id: trace.problem_id.clone(),
            architecture: trace.architecture,
            rounds: trace.rounds,
            final_text: trace.final_text.clone(),
            extracted_answer: trace.extracted_answer.clone(),
            is_finally_correct: trace.is_finally_correct,
            started_at: trace.started_at,
            finished_at: trace.finished_at,
        }
    }

    fn into_trace(self, trajectories: Vec<Trajectory>) -> SampleTrace {
        SampleTrace {
            run_id: self.run_id,
            problem_id: self.problem_id,
            architecture: self.architecture,
            rounds: self.rounds,
            trajectories,
            final_text: self.final_text,
            extracted_answer: self.extracted_answer,
            is_finally_correct: self.is_finally_correct,
            started_at: self.started_at,
            finished_at: self.finished_at,
        }
    }
}

/// One line of a trace file, tagged by `kind`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TraceRecord {
    Manifest(RunManifest),
    Trajectory(TrajectoryRecord),
    SampleSummary(SampleSummary),
}

/// A parsed trace file: the manifest plus every reassembled sample.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceFile {
    pub manifest: RunManifest,
    pub traces: Vec<SampleTrace>,
}

/// Writes the manifest line followed by, per sample, its trajectory lines and
/// its summary line.
pub fn write_trace_file(
    path: &Path,
    manifest: &RunManifest,
    traces: &[SampleTrace],
) -> Result<(), StoreError> {
    let file = fs::File::create(path).map_err(|e| io_error(path, e))?;
    let mut out = BufWriter::new(file);
    let mut emit = |record: &TraceRecord| -> Result<(), StoreError> {
        let line = serde_json::to_string(record).expect("trace records always serialize");
        writeln!(out, "{line}").map_err(|e| io_error(path, e))
    };
    emit(&TraceRecord::Manifest(manifest.clone()))?;
    for trace in traces {
        for trajectory in &trace.trajectories {
            emit(&TraceRecord::Trajectory(TrajectoryRecord {
                run_id: trace.run_id.clone(),
                problem_id: trace.problem_id.clone(),
                trajectory: trajectory.clone(),
            }))?;
        }
        emit(&TraceRecord::SampleSummary(SampleSummary::of(trace)))?;
    }
    out.flush().map_err(|e| io_error(path, e))
}

/// Reads a trace file back into whole samples, in summary order. Trajectory
/// lines may appear anywhere after the manifest as long as every one belongs
/// to some summarized sample.
pub fn read_trace_file(path: &Path) -> Result<TraceFile, StoreError> {
    let file = fs::File::open(path).map_err(|e| io_error(path, e))?;
    let reader = BufReader::new(file);

    let mut manifest: Option<RunManifest> = None;
    let mut pending: HashMap<(String, String), (usize, Vec<Trajectory>)> = HashMap::new();
    let mut summaries: Vec<SampleSummary> = Vec::new();

    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| io_error(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let record: TraceRecord =
            serde_json::from_str(&line).map_err(|e| schema_error(path, line_no, e.to_string()))?;
        match record {
            TraceRecord::Manifest(m) => {
                if manifest.is_some() {
                    return Err(schema_error(path, line_no, "second manifest record"));
                }
                if line_no != 1 {
                    return Err(schema_error(
                        path,
                        line_no,
                        "manifest must be the first line",
                    ));
                }
                manifest = Some(m);
            }
            TraceRecord::Trajectory(t) => {
                if manifest.is_none() {
                    return Err(schema_error(path, line_no, "record precedes the manifest"));
                }
                pending
                    .entry((t.run_id, t.problem_id))
                    .or_insert_with(|| (line_no, Vec::new()))
                    .1
                    .push(t.trajectory);
            }
            TraceRecord::SampleSummary(s) => {
                if manifest.is_none() {
                    return Err(schema_error(path, line_no, "record precedes the manifest"));
                }
                if !pending.contains_key(&(s.run_id.clone(), s.problem_id.clone())) {
                    return Err(schema_error(
                        path,
                        line_no,
                        format!(
                            "sample_summary {}/{} has no trajectory records",
                            s.run_id, s.problem_id
                        ),
                    ));
                }
                summaries.push(s);
            }
        }
    }

    let manifest = manifest.ok_or_else(|| schema_error(path, 1, "missing manifest record"))?;
    let mut traces = Vec::with_capacity(summaries.len());
    for summary in summaries {
        let key = (summary.run_id.clone(), summary.problem_id.clone());
        let (_, trajectories) = pending.remove(&key).expect("checked during the scan");
        traces.push(summary.into_trace(trajectories));
    }
    if let Some((line_no, _)) = pending.values().next() {
        return Err(schema_error(
            path,
            *line_no,
            "trajectory records without a sample_summary",
        ));
    }
    Ok(TraceFile { manifest, traces })
}

// ---------------------------------------------------------------------------
// Dataset files
// ---------------------------------------------------------------------------

/// Reads a line-delimited dataset, enforcing non-empty unique problem ids.
pub fn read_dataset(path: &Path) -> Result<Vec<Problem>, StoreError> {
    let file = fs::File::open(path).map_err(|e| io_error(path, e))?;
    let reader = BufReader::new(file);
    let mut problems = Vec::new();
    let mut seen: HashMap<String, usize> = HashMap::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| io_error(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let problem: Problem =
            serde_json::from_str(&line).map_err(|e| schema_error(path, line_no, e.to_string()))?;
        if problem.id.is_empty() {
            return Err(schema_error(path, line_no, "problem id must be non-empty"));
        }
        if let Some(first) = seen.insert(problem.id.clone(), line_no) {
            return Err(schema_error(
                path,
                line_no,
                format!(
                    "duplicate problem id {:?} (first seen on line {first})",
                    problem.id
                ),
            ));
        }
        problems.push(problem);
    }
    if problems.is_empty() {
        return Err(schema_error(path, 1, "dataset contains no problems"));
    }
    Ok(problems)
}

pub fn write_dataset(path: &Path, problems: &[Problem]) -> Result<(), StoreError> {
    let file = fs::File::create(path).map_err(|e| io_error(path, e))?;
    let mut out = BufWriter::new(file);
    for problem in problems {
        let line = serde_json::to_string(problem).expect("problems always serialize");
        writeln!(out, "{line}").map_err(|e| io_error(path, e))?;
    }
    out.flush().map_err(|e| io_error(path, e))
}

// ---------------------------------------------------------------------------
// Feature matrices (CSV + sidecar stamp)
// ---------------------------------------------------------------------------

/// The sidecar stamp written next to every matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixStamp {
    pub manifest_version: String,
    pub group: String,
}

/// A matrix read back from disk.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixFile {
    pub stamp: MatrixStamp,
    /// Feature names only (the trailing sample_key/label columns stripped).
    pub header: Vec<String>,
    pub rows: Vec<FeatureRow>,
}

/// Sidecar path: the matrix path with `.manifest.json` appended.
pub fn matrix_stamp_path(matrix_path: &Path) -> PathBuf {
    let mut name = matrix_path.as_os_str().to_os_string();
    name.push(".manifest.json");
    PathBuf::from(name)
}

/// Writes the matrix as CSV — header of feature names plus final `sample_key`
/// and `label` columns — and its manifest-version stamp alongside.
pub fn write_matrix(path: &Path, matrix: &ExtractedMatrix) -> Result<(), StoreError> {
    let file = fs::File::create(path).map_err(|e| io_error(path, e))?;
    let mut writer = csv::Writer::from_writer(BufWriter::new(file));
    let mut record: Vec<String> = matrix.header.clone();
    record.push("sample_key".to_string());
    record.push("label".to_string());
    writer
        .write_record(&record)
        .map_err(|e| csv_io_error(path, e))?;
    for row in &matrix.rows {
        record.clear();
        record.extend(row.values.iter().map(|v| v.to_string()));
        record.push(format!("{}/{}", row.run_id, row.problem_id));
        record.push(if row.label { "1" } else { "0" }.to_string());
        writer
            .write_record(&record)
            .map_err(|e| csv_io_error(path, e))?;
    }
    writer.flush().map_err(|e| io_error(path, e))?;

    let stamp = MatrixStamp {
        manifest_version: matrix.manifest_version.clone(),
        group: matrix.group.name().to_string(),
    };
    save_json(&matrix_stamp_path(path), &stamp)
}

fn csv_io_error(path: &Path, e: csv::Error) -> StoreError {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => io_error(path, io),
        other => schema_error(path, 0, format!("{other:?}")),
    }
}

/// Reads a matrix and its sidecar stamp back.
pub fn read_matrix(path: &Path) -> Result<MatrixFile, StoreError> {
    let stamp: MatrixStamp = load_json(&matrix_stamp_path(path))?;
    let file = fs::File::open(path).map_err(|e| io_error(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .from_reader(BufReader::new(file));

    let mut records = reader.records();
    let header = match records.next() {
        Some(Ok(r)) => r,
        Some(Err(e)) => return Err(csv_io_error(path, e)),
        None => return Err(schema_error(path, 1, "matrix file is empty")),
    };
    let columns: Vec<String> = header.iter().map(str::to_string).collect();
    if columns.len() < 2 || columns[columns.len() - 2..] != ["sample_key", "label"] {
        return Err(schema_error(
            path,
            1,
            "header must end with sample_key and label columns",
        ));
    }
    let names: Vec<String> = columns[..columns.len() - 2].to_vec();

    let mut rows = Vec::new();
    for (i, record) in records.enumerate() {
        let line_no = i + 2;
        let record = record.map_err(|e| csv_io_error(path, e))?;
        if record.len() != columns.len() {
            return Err(schema_error(
                path,
                line_no,
                format!("expected {} fields, got {}", columns.len(), record.len()),
            ));
        }
        let mut values = Vec::with_capacity(names.len());
        for field in record.iter().take(names.len()) {
            let v: Scalar = field
                .parse()
                .map_err(|_| schema_error(path, line_no, format!("bad number {field:?}")))?;
            values.push(v);
        }
        let key = record.get(names.len()).expect("length checked");
        let (run_id, problem_id) = key.split_once('/').ok_or_else(|| {
            schema_error(
                path,
                line_no,
                format!("sample_key {key:?} is not run_id/problem_id"),
            )
        })?;
        let label = match record.get(names.len() + 1).expect("length checked") {
            "0" => false,
            "1" => true,
            other => {
                return Err(schema_error(path, line_no, format!("bad label {other:?}")));
            }
        };
        rows.push(FeatureRow {
            run_id: run_id.to_string(),
            problem_id: problem_id.to_string(),
            values,
            label,
        });
    }
    Ok(MatrixFile {
        stamp,
        header: names,
        rows,
    })
}

// ---------------------------------------------------------------------------
// JSON documents (models, reports)
// ---------------------------------------------------------------------------

pub fn save_json<T: Serialize>(path: &Path, value: &T) -> Result<(), StoreError> {
    let mut body = serde_json::to_string_pretty(value).expect("documents always serialize");
    body.push('\n');
    fs::write(path, body).map_err(|e| io_error(path, e))
}

pub fn load_json<T: DeserializeOwned>(path: &Path) -> Result<T, StoreError> {
    let body = fs::read_to_string(path).map_err(|e| io_error(path, e))?;
    serde_json::from_str(&body).map_err(|e| schema_error(path, e.line(), e.to_string()))
}

pub fn save_model(path: &Path, model: &EnsembleModel) -> Result<(), StoreError> {
    save_json(path, model)
}

/// Loads a model and rejects files written by an incompatible format version.
pub fn load_model(path: &Path) -> Result<EnsembleModel, StoreError> {
    let model: EnsembleModel = load_json(path)?;
    if model.format_version != MODEL_FORMAT_VERSION {
        return Err(StoreError::ModelFormat {
            expected: MODEL_FORMAT_VERSION,
            found: model.format_version,
        });
    }
    Ok(model)
}
