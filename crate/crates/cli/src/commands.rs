//! Subcommand implementations. Each returns the process exit code on the
//! success path (0 full, 2 partial) and `CliError` for configuration and
//! input errors (exit 1).

use std::collections::{HashMap, HashSet};
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use rayon::prelude::*;
use serde::Serialize;

use masentropy::analysis;
use masentropy::features::manifest::FeatureManifest;
use masentropy::features::{self, FeatureGroup};
use masentropy::gateway::{Gateway, HttpGateway, HttpGatewayConfig, MockGateway, MockScript};
use masentropy::judger;
use masentropy::store;
use masentropy::topology::{self, Clock, LogicalClock, WallClock};
use masentropy::trace::{validate_trace, RunManifest, SampleTrace};
use masentropy::Scalar;

use crate::config::{self, Backend, ConfigFile};
use crate::report;
use crate::{FeaturesArgs, JudgeArgs, ReportArgs, ReportKind, RunArgs, TrainArgs, ValidateArgs};

/// Environment variable holding the bearer token for live endpoints; the only
/// setting not carried by the config file or flags.
const API_KEY_VAR: &str = "MASENTROPY_API_KEY";

#[derive(Debug)]
pub enum CliError {
    Fatal(String),
}

fn fatal(message: impl Into<String>) -> CliError {
    CliError::Fatal(message.into())
}

impl From<store::StoreError> for CliError {
    fn from(e: store::StoreError) -> CliError {
        fatal(e.to_string())
    }
}

impl From<judger::JudgerError> for CliError {
    fn from(e: judger::JudgerError) -> CliError {
        fatal(e.to_string())
    }
}

impl From<analysis::AnalysisError> for CliError {
    fn from(e: analysis::AnalysisError) -> CliError {
        fatal(e.to_string())
    }
}

fn create_dir(path: &Path) -> Result<(), CliError> {
    fs::create_dir_all(path).map_err(|e| fatal(format!("{}: {e}", path.display())))
}

// ---------------------------------------------------------------------------
// run
// ---------------------------------------------------------------------------

pub fn cmd_run(args: RunArgs) -> Result<ExitCode, CliError> {
    let file = match &args.config {
        Some(path) => ConfigFile::load(path)?,
        None => ConfigFile::default(),
    };
    let cfg = config::resolve(file, &args)?;

    let problems = store::read_dataset(&cfg.dataset)?;
    let spec = topology::prompts::default_spec(cfg.architecture);
    let feature_manifest =
        FeatureManifest::generate(cfg.rounds).map_err(|e| fatal(e.to_string()))?;

    let gateway: Box<dyn Gateway> = match &cfg.backend {
        Backend::Mock(path) => {
            let body =
                fs::read_to_string(path).map_err(|e| fatal(format!("{}: {e}", path.display())))?;
            let script = MockScript::from_json_str(&body)
                .map_err(|e| fatal(format!("{}: {e}", path.display())))?;
            let descriptor = format!("mock:{}", path.display());
            Box::new(
                MockGateway::with_descriptor(script, descriptor)
                    .map_err(|e| fatal(format!("{}: {e}", path.display())))?,
            )
        }
        Backend::Endpoint { url, model } => {
            let mut http = HttpGatewayConfig::new(url.clone(), model.clone());
            http.api_key = std::env::var(API_KEY_VAR).ok();
            http.max_in_flight = cfg.parallelism;
            Box::new(HttpGateway::new(http).map_err(|e| fatal(e.to_string()))?)
        }
    };

    // Scripted runs keep every timestamp logical so that rerunning the same
    // config and seed reproduces the artifacts byte for byte; only live
    // endpoints consult the wall clock.
    let deterministic = matches!(cfg.backend, Backend::Mock(_));
    let started_at = if deterministic { 0 } else { WallClock.now_ms() };
    let run_id = store::make_run_id(started_at, cfg.seed);

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.parallelism)
        .build()
        .map_err(|e| fatal(format!("worker pool: {e}")))?;
    let results: Vec<Result<SampleTrace, (String, String)>> = pool.install(|| {
        problems
            .par_iter()
            .map(|problem| {
                // Per-sample clocks make trace timing independent of how
                // samples interleave across workers.
                let sample = |clock: &dyn Clock| {
                    topology::run_sample(
                        &run_id,
                        problem,
                        &spec,
                        cfg.rounds,
                        gateway.as_ref(),
                        &cfg.params,
                        clock,
                    )
                };
                let outcome = if deterministic {
                    sample(&LogicalClock::new())
                } else {
                    sample(&WallClock)
                };
                outcome.map_err(|failure| (problem.id.clone(), failure.error.to_string()))
            })
            .collect()
    });

    let mut traces = Vec::new();
    let mut failures = Vec::new();
    for result in results {
        match result {
            Ok(trace) => traces.push(trace),
            Err(failure) => failures.push(failure),
        }
    }

    let finished_at = if deterministic {
        // Serial-equivalent elapsed time: the sum of per-sample durations.
        traces.iter().map(|t| t.finished_at - t.started_at).sum()
    } else {
        WallClock.now_ms()
    };
    let manifest = RunManifest {
        run_id: run_id.clone(),
        model_endpoint: gateway.descriptor(),
        temperature: cfg.params.temperature,
        top_p: cfg.params.top_p,
        max_tokens: cfg.params.max_tokens,
        architecture: cfg.architecture,
        rounds: cfg.rounds,
        dataset_path: cfg.dataset.display().to_string(),
        feature_manifest_version: feature_manifest.version.clone(),
        started_at,
        finished_at,
        wall_clock_ms: (finished_at - started_at).max(0) as u64,
    };

    let run_dir = cfg.out_dir.join(&run_id);
    create_dir(&run_dir)?;
    let trace_path = run_dir.join("trace.jsonl");
    store::write_trace_file(&trace_path, &manifest, &traces)?;

    println!("{}", trace_path.display());
    println!(
        "run {run_id}: {} of {} samples traced",
        traces.len(),
        problems.len()
    );
    if failures.is_empty() {
        Ok(ExitCode::SUCCESS)
    } else {
        for (problem_id, error) in &failures {
            eprintln!("problem {problem_id}: {error}");
        }
        Ok(ExitCode::from(2))
    }
}

// ---------------------------------------------------------------------------
// features
// ---------------------------------------------------------------------------

pub fn cmd_features(args: FeaturesArgs) -> Result<ExitCode, CliError> {
    let group = FeatureGroup::parse(&args.group).ok_or_else(|| {
        fatal(format!(
            "unknown feature group {:?} (expected mas, base-h or base-full)",
            args.group
        ))
    })?;

    let traced = store::read_trace_file(&args.traces)?;
    let base = match &args.base_traces {
        Some(path) => store::read_trace_file(path)?.traces,
        None if group.needs_base() => {
            return Err(fatal(format!(
                "group {} needs --base-traces (a single-agent R=1 run over the same dataset)",
                group.name()
            )));
        }
        None => Vec::new(),
    };

    let manifest =
        FeatureManifest::generate(traced.manifest.rounds).map_err(|e| fatal(e.to_string()))?;
    if manifest.version != traced.manifest.feature_manifest_version {
        return Err(fatal(format!(
            "trace file was produced under feature manifest {} but rounds={} regenerates {}",
            traced.manifest.feature_manifest_version, traced.manifest.rounds, manifest.version
        )));
    }

    let matrix = features::extract_run(&manifest, group, &traced.traces, &base)
        .map_err(|e| fatal(e.to_string()))?;
    store::write_matrix(&args.out, &matrix)?;

    println!("{}", args.out.display());
    println!(
        "{} rows x {} features ({}, manifest {})",
        matrix.rows.len(),
        matrix.header.len(),
        group.name(),
        matrix.manifest_version
    );
    if matrix.skipped.is_empty() {
        Ok(ExitCode::SUCCESS)
    } else {
        for line in &matrix.skipped {
            eprintln!("skipped {line}");
        }
        Ok(ExitCode::from(2))
    }
}

// ---------------------------------------------------------------------------
// train
// ---------------------------------------------------------------------------

pub fn cmd_train(args: TrainArgs) -> Result<ExitCode, CliError> {
    let matrix = store::read_matrix(&args.matrix)?;
    let x: Vec<Vec<Scalar>> = matrix.rows.iter().map(|r| r.values.clone()).collect();
    let y: Vec<bool> = matrix.rows.iter().map(|r| r.label).collect();

    let report = judger::cross_validate(&x, &y, args.folds, args.seed)?;
    let model = judger::train_ensemble(
        &x,
        &y,
        &matrix.stamp.group,
        &matrix.stamp.manifest_version,
        args.seed,
    )?;

    create_dir(&args.out)?;
    let model_path = args.out.join("model.json");
    let report_path = args.out.join("cv_report.json");
    store::save_model(&model_path, &model)?;
    store::save_json(&report_path, &report)?;

    println!("{}", model_path.display());
    println!(
        "cv accuracy {:.6} ± {:.6} over {} folds (seed {})",
        report.mean_accuracy, report.std_accuracy, report.folds, report.seed
    );
    Ok(ExitCode::SUCCESS)
}

// ---------------------------------------------------------------------------
// judge
// ---------------------------------------------------------------------------

/// One pass@k decision: the chosen candidate index, where it came from, and
/// every candidate's predicted probability in matrix order.
#[derive(Debug, Serialize)]
struct SelectionRecord {
    problem_id: String,
    selected: usize,
    run_id: String,
    probabilities: Vec<Scalar>,
}

pub fn cmd_judge(args: JudgeArgs) -> Result<ExitCode, CliError> {
    let model = store::load_model(&args.model)?;

    let mut matrices = Vec::with_capacity(args.matrices.len());
    for path in &args.matrices {
        let matrix = store::read_matrix(path)?;
        if matrix.stamp.manifest_version != model.manifest_version
            || matrix.stamp.group != model.group
        {
            return Err(fatal(format!(
                "{}: matrix is {}/{} but the model was trained on {}/{}",
                path.display(),
                matrix.stamp.group,
                matrix.stamp.manifest_version,
                model.group,
                model.manifest_version
            )));
        }
        matrices.push(matrix);
    }

    // Candidates pair up by problem id; the first matrix fixes the output
    // order and within each matrix the first row per problem wins.
    let mut order = Vec::new();
    let mut maps: Vec<HashMap<&str, &features::FeatureRow>> = Vec::new();
    for (i, matrix) in matrices.iter().enumerate() {
        let mut map = HashMap::new();
        for row in &matrix.rows {
            if map.insert(row.problem_id.as_str(), row).is_none() && i == 0 {
                order.push(row.problem_id.as_str());
            }
        }
        maps.push(map);
    }

    let mut selections = Vec::new();
    for problem_id in order {
        let candidates: Option<Vec<features::FeatureRow>> = maps
            .iter()
            .map(|m| m.get(problem_id).map(|&r| r.clone()))
            .collect();
        let Some(candidates) = candidates else {
            continue;
        };
        let (selected, probabilities) = judger::pass_at_k_select(&model, &candidates)?;
        selections.push(SelectionRecord {
            problem_id: problem_id.to_string(),
            selected,
            run_id: candidates[selected].run_id.clone(),
            probabilities,
        });
    }
    if selections.is_empty() {
        return Err(fatal("no problem id is shared by every matrix".to_string()));
    }

    let file =
        fs::File::create(&args.out).map_err(|e| fatal(format!("{}: {e}", args.out.display())))?;
    let mut out = std::io::BufWriter::new(file);
    for record in &selections {
        let line = serde_json::to_string(record).expect("selection records always serialize");
        writeln!(out, "{line}").map_err(|e| fatal(format!("{}: {e}", args.out.display())))?;
    }
    out.flush()
        .map_err(|e| fatal(format!("{}: {e}", args.out.display())))?;

    println!("{}", args.out.display());
    println!(
        "{} selections over {} candidate sets",
        selections.len(),
        matrices.len()
    );
    Ok(ExitCode::SUCCESS)
}

// ---------------------------------------------------------------------------
// report
// ---------------------------------------------------------------------------

pub fn cmd_report(args: ReportArgs) -> Result<ExitCode, CliError> {
    match args.kind {
        ReportKind::Calibration => report_calibration(&args),
        ReportKind::Causal => report_causal(&args, false),
        ReportKind::Quadrants => report_causal(&args, true),
    }
}

fn report_calibration(args: &ReportArgs) -> Result<ExitCode, CliError> {
    let Some(matrix_path) = &args.matrix else {
        return Err(fatal("calibration needs --matrix".to_string()));
    };
    let matrix = store::read_matrix(matrix_path)?;
    let column = matrix
        .header
        .iter()
        .position(|name| name == "sample_mean_entropy")
        .ok_or_else(|| {
            fatal(format!(
                "{}: matrix has no sample_mean_entropy column",
                matrix_path.display()
            ))
        })?;

    let mut confidences = Vec::with_capacity(matrix.rows.len());
    let mut correct = Vec::with_capacity(matrix.rows.len());
    for row in &matrix.rows {
        confidences.push(analysis::entropy_to_confidence(row.values[column])?);
        correct.push(row.label);
    }
    let (ece, bins) = analysis::ece(&confidences, &correct, args.bins)?;

    write_text(&args.out, &report::render_calibration(ece, &bins))?;
    report::calibration_csv(&csv_sibling(&args.out), &bins)?;
    println!("{}", args.out.display());
    println!(
        "ece {ece:.6} over {} samples in {} bins",
        matrix.rows.len(),
        args.bins
    );
    Ok(ExitCode::SUCCESS)
}

fn report_causal(args: &ReportArgs, quadrants: bool) -> Result<ExitCode, CliError> {
    let (Some(traces_path), Some(base_path)) = (&args.traces, &args.base_traces) else {
        return Err(fatal(
            "causal and quadrant reports need --traces and --base-traces".to_string(),
        ));
    };
    let mas = store::read_trace_file(traces_path)?;
    let sas = store::read_trace_file(base_path)?;
    let inputs = analysis::causal_from_traces(&mas.traces, &sas.traces)?;
    let summary = analysis::causal_decompose(&inputs)?;

    if quadrants {
        let counts = analysis::quadrant_counts(&summary.records);
        write_text(&args.out, &report::render_quadrants(&summary, &counts))?;
        report::quadrants_csv(&csv_sibling(&args.out), &summary.records)?;
    } else {
        write_text(&args.out, &report::render_causal(&summary))?;
        report::causal_csv(&csv_sibling(&args.out), &summary.records)?;
    }
    println!("{}", args.out.display());
    println!("{} paired samples", summary.records.len());
    Ok(ExitCode::SUCCESS)
}

fn csv_sibling(out: &Path) -> PathBuf {
    out.with_extension("csv")
}

fn write_text(path: &Path, body: &str) -> Result<(), CliError> {
    fs::write(path, body).map_err(|e| fatal(format!("{}: {e}", path.display())))
}

// ---------------------------------------------------------------------------
// validate
// ---------------------------------------------------------------------------

pub fn cmd_validate(args: ValidateArgs) -> Result<ExitCode, CliError> {
    let traced = store::read_trace_file(&args.traces)?;
    let manifest = &traced.manifest;

    let mut violations = Vec::new();
    let mut seen = HashSet::new();
    for trace in &traced.traces {
        let key = format!("{}/{}", trace.run_id, trace.problem_id);
        for violation in validate_trace(trace) {
            violations.push(format!("{key}: {violation}"));
        }
        if trace.run_id != manifest.run_id {
            violations.push(format!("{key}: run_id differs from the manifest"));
        }
        if trace.architecture != manifest.architecture {
            violations.push(format!("{key}: architecture differs from the manifest"));
        }
        if trace.rounds != manifest.rounds {
            violations.push(format!("{key}: rounds differ from the manifest"));
        }
        if !seen.insert(key.clone()) {
            violations.push(format!("{key}: duplicate sample"));
        }
    }

    if violations.is_empty() {
        println!(
            "{}: {} samples, no violations",
            args.traces.display(),
            traced.traces.len()
        );
        Ok(ExitCode::SUCCESS)
    } else {
        for violation in &violations {
            println!("{violation}");
        }
        println!("{} violations", violations.len());
        Ok(ExitCode::FAILURE)
    }
}
