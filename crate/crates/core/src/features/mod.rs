//! Hierarchical feature extraction over sample traces.
//!
//! [`FeatureManifest`] fixes the column set for a round count; [`extract`]
//! evaluates one trace (plus, for the base-aware groups, the single-agent
//! base trace of the same problem) into a [`FeatureRow`]; [`extract_run`]
//! pairs whole runs by problem id. Every value is a finite `Scalar`; ratios
//! with near-zero denominators are zero-filled rather than propagating
//! non-finite values into training.

pub mod manifest;

pub use manifest::{FeatureGroup, FeatureManifest, Generator, Level, ManifestEntry};

use std::collections::HashMap;

use thiserror::Error;

use crate::stats::{self, StatSummary};
use crate::trace::{Architecture, SampleTrace, TaskKind, Trajectory};
use crate::verifier;
use crate::Scalar;

/// Denominators smaller than this in magnitude zero-fill the quotient.
const SAFE_DIV_EPS: Scalar = 1e-12;

#[derive(Debug, Error)]
pub enum FeatureError {
    #[error("round count {0} is outside the supported range 1..=5")]
    UnsupportedRounds(u32),
    #[error(
        "trace {run_id}/{problem_id} has {actual} rounds but the manifest \
         was generated for {expected}"
    )]
    ManifestMismatch {
        run_id: String,
        problem_id: String,
        expected: u32,
        actual: u32,
    },
    #[error("group {group} needs a base trace but none covers problem {problem_id}")]
    MissingBaseTrace {
        group: &'static str,
        problem_id: String,
    },
    #[error("base trace for problem {problem_id} is unusable: {reason}")]
    InvalidBaseTrace { problem_id: String, reason: String },
}

/// One extracted sample: identifier columns ride alongside the value vector
/// instead of inside it.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRow {
    pub run_id: String,
    pub problem_id: String,
    pub values: Vec<Scalar>,
    pub label: bool,
}

/// A whole run extracted into a design matrix, plus skip reports for samples
/// that could not be paired with a usable base trace.
#[derive(Debug, Clone)]
pub struct ExtractedMatrix {
    pub manifest_version: String,
    pub group: FeatureGroup,
    pub header: Vec<String>,
    pub rows: Vec<FeatureRow>,
    pub skipped: Vec<String>,
}

fn safe_div(num: Scalar, denom: Scalar) -> Scalar {
    if denom.abs() < SAFE_DIV_EPS {
        0.0
    } else {
        num / denom
    }
}

/// Answer-span token entropies of a trace: the first final-round trajectory
/// whose text equals the decided final text, narrowed to the tokens that
/// overlap its last boxed group. Matches the tie-break the deciders use.
fn answer_entropies(trace: &SampleTrace) -> Vec<Scalar> {
    if trace.final_text.is_empty() {
        return Vec::new();
    }
    let Some(traj) = trace
        .trajectories
        .iter()
        .find(|t| t.round == trace.rounds && t.text == trace.final_text)
    else {
        return Vec::new();
    };
    // Only the byte span matters here, so the task kind is immaterial.
    let Some(extracted) = verifier::extract_boxed(&traj.text, &traj.tokens, TaskKind::Freeform)
    else {
        return Vec::new();
    };
    match extracted.answer_token_span {
        Some((first, last)) => traj.tokens[first..=last]
            .iter()
            .map(|t| t.entropy)
            .collect(),
        None => Vec::new(),
    }
}

fn format_ok(trace: &SampleTrace) -> bool {
    !trace.final_text.is_empty()
        && verifier::extract_boxed(&trace.final_text, &[], TaskKind::Freeform).is_some()
}

/// Precomputed per-trace aggregates every generator reads from.
struct TraceView<'a> {
    trace: &'a SampleTrace,
    /// Trajectories of round r at index r−1, in execution order.
    by_round: Vec<Vec<&'a Trajectory>>,
    /// Σ of per-agent total entropies per round.
    round_totals: Vec<Scalar>,
    round_token_counts: Vec<usize>,
    all_entropies: Vec<Scalar>,
    answer_entropies: Vec<Scalar>,
    format_ok: bool,
}

impl<'a> TraceView<'a> {
    fn new(trace: &'a SampleTrace) -> TraceView<'a> {
        let rounds = trace.rounds.max(1) as usize;
        let mut by_round: Vec<Vec<&Trajectory>> = vec![Vec::new(); rounds];
        for t in &trace.trajectories {
            let idx = (t.round.clamp(1, trace.rounds.max(1)) - 1) as usize;
            by_round[idx].push(t);
        }
        for group in &mut by_round {
            group.sort_by_key(|t| t.agent_index);
        }
        let round_totals = by_round
            .iter()
            .map(|g| g.iter().map(|t| t.total_entropy()).sum())
            .collect();
        let round_token_counts = by_round
            .iter()
            .map(|g| g.iter().map(|t| t.tokens.len()).sum())
            .collect();
        let all_entropies = trace
            .trajectories
            .iter()
            .flat_map(|t| t.tokens.iter().map(|tok| tok.entropy))
            .collect();
        TraceView {
            trace,
            by_round,
            round_totals,
            round_token_counts,
            all_entropies,
            answer_entropies: answer_entropies(trace),
            format_ok: format_ok(trace),
        }
    }

    fn round(&self, round: u32) -> &[&'a Trajectory] {
        self.by_round
            .get((round - 1) as usize)
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    /// One per-agent statistic over each trajectory of a round.
    fn agent_values(&self, round: u32, stat: &str) -> Vec<Scalar> {
        self.round(round)
            .iter()
            .map(|t| pick_stat(&stats::describe(&t.token_entropies()), stat))
            .collect()
    }

    fn round_total(&self, round: u32) -> Scalar {
        self.round_totals
            .get((round - 1) as usize)
            .copied()
            .unwrap_or(0.0)
    }

    fn round_token_count(&self, round: u32) -> Scalar {
        self.round_token_counts
            .get((round - 1) as usize)
            .copied()
            .unwrap_or(0) as Scalar
    }
}

/// Base-trace aggregates for the base-aware feature levels.
struct BaseView {
    entropies: Vec<Scalar>,
    answer_entropies: Vec<Scalar>,
    format_ok: bool,
    is_finally_correct: bool,
    extracted_answer: Option<String>,
}

impl BaseView {
    fn new(base: &SampleTrace) -> BaseView {
        BaseView {
            entropies: base
                .trajectories
                .iter()
                .flat_map(|t| t.tokens.iter().map(|tok| tok.entropy))
                .collect(),
            answer_entropies: answer_entropies(base),
            format_ok: format_ok(base),
            is_finally_correct: base.is_finally_correct,
            extracted_answer: base.extracted_answer.clone(),
        }
    }
}

fn pick_stat(s: &StatSummary<Scalar>, stat: &str) -> Scalar {
    match stat {
        "total" => s.total,
        "mean" => s.mean,
        "max" => s.max,
        "min" => s.min,
        "std" => s.std,
        "variance" => s.variance,
        "median" => s.median,
        "q1" => s.q1,
        "q3" => s.q3,
        other => unreachable!("unknown statistic {other}"),
    }
}

/// Shape metrics zero-fill on an empty summary instead of erroring: a trace
/// with no tokens has no shape, and 0 is the neutral training value.
fn shape_or_zero(s: &StatSummary<Scalar>) -> crate::stats::ShapeMetrics<Scalar> {
    stats::shape(s).unwrap_or(crate::stats::ShapeMetrics {
        range: 0.0,
        iqr: 0.0,
        bowley_skewness: 0.0,
        cv: 0.0,
        tail_weight: 0.0,
        stability_index: 0.0,
    })
}

fn ols_slope(series: &[Scalar]) -> Scalar {
    let n = series.len();
    if n < 2 {
        return 0.0;
    }
    let xs: Vec<Scalar> = (1..=n).map(|r| r as Scalar).collect();
    let x_mean = xs.iter().sum::<Scalar>() / n as Scalar;
    let y_mean = series.iter().sum::<Scalar>() / n as Scalar;
    let mut cov = 0.0;
    let mut var = 0.0;
    for (x, y) in xs.iter().zip(series) {
        cov += (x - x_mean) * (y - y_mean);
        var += (x - x_mean) * (x - x_mean);
    }
    safe_div(cov, var)
}

fn evaluate(entry: &ManifestEntry, view: &TraceView, base: Option<&BaseView>) -> Scalar {
    match &entry.generator {
        Generator::AgentStat { round, agg, stat } => {
            let values = view.agent_values(*round, stat);
            let summary = stats::describe(&values);
            pick_stat(&summary, agg)
        }
        Generator::InterAgentDivergence { round, kind } => {
            let totals = view.agent_values(*round, "total");
            let summary = stats::describe(&totals);
            match kind.as_str() {
                "variance" => summary.variance,
                _ => safe_div(summary.std, summary.mean.abs()),
            }
        }
        Generator::AgentTokenCount { round, agg } => {
            let counts: Vec<Scalar> = view
                .round(*round)
                .iter()
                .map(|t| t.tokens.len() as Scalar)
                .collect();
            pick_stat(&stats::describe(&counts), agg)
        }
        Generator::RoundStat { round, stat } => match stat.as_str() {
            "total" => view.round_total(*round),
            "token_count" => view.round_token_count(*round),
            "mean_entropy_per_token" => {
                safe_div(view.round_total(*round), view.round_token_count(*round))
            }
            s => pick_stat(&stats::describe(&view.agent_values(*round, "total")), s),
        },
        Generator::AdjacentRoundChange { round } => {
            view.round_total(*round + 1) - view.round_total(*round)
        }
        Generator::CrossRound { kind } => {
            let totals = &view.round_totals;
            let first = *totals.first().unwrap_or(&0.0);
            let last = *totals.last().unwrap_or(&0.0);
            match kind.as_str() {
                "first_to_last_change" => last - first,
                "first_to_last_ratio" => safe_div(last, first),
                "slope" => ols_slope(totals),
                "volatility" => stats::describe(totals).std,
                "max_total" => stats::describe(totals).max,
                "min_total" => stats::describe(totals).min,
                "mean_total" => stats::describe(totals).mean,
                _ => {
                    let counts = &view.round_token_counts;
                    (*counts.last().unwrap_or(&0) as Scalar)
                        - (*counts.first().unwrap_or(&0) as Scalar)
                }
            }
        }
        Generator::Sample { kind } => {
            let summary = stats::describe(&view.all_entropies);
            let answers = stats::describe(&view.answer_entropies);
            match kind.as_str() {
                "total_entropy" => summary.total,
                "mean_entropy" => summary.mean,
                "max_entropy" => summary.max,
                "min_entropy" => summary.min,
                "std_entropy" => summary.std,
                "variance_entropy" => summary.variance,
                "median_entropy" => summary.median,
                "q1_entropy" => summary.q1,
                "q3_entropy" => summary.q3,
                "entropy_range" => shape_or_zero(&summary).range,
                "entropy_iqr" => shape_or_zero(&summary).iqr,
                "entropy_bowley_skewness" => shape_or_zero(&summary).bowley_skewness,
                "entropy_cv" => shape_or_zero(&summary).cv,
                "entropy_tail_weight" => shape_or_zero(&summary).tail_weight,
                "entropy_stability_index" => {
                    if summary.count == 0 {
                        0.0
                    } else {
                        shape_or_zero(&summary).stability_index
                    }
                }
                "avg_entropy_per_token" => safe_div(summary.total, summary.count as Scalar),
                "answer_token_count" => answers.count as Scalar,
                "total_answer_token_entropy" => answers.total,
                "mean_answer_token_entropy" => answers.mean,
                "max_answer_token_entropy" => answers.max,
                "min_answer_token_entropy" => answers.min,
                "std_answer_token_entropy" => answers.std,
                "answer_format_ok" => {
                    if view.format_ok {
                        1.0
                    } else {
                        0.0
                    }
                }
                "first_round_entropy_fraction" => safe_div(view.round_total(1), summary.total),
                "last_round_entropy_fraction" => {
                    safe_div(view.round_total(view.trace.rounds), summary.total)
                }
                _ => {
                    let peak = stats::describe(&view.round_totals).max;
                    safe_div(peak, summary.total)
                }
            }
        }
        Generator::System { kind } => match kind.as_str() {
            "architecture" => view.trace.architecture.code() as Scalar,
            "num_agents" => {
                let names: std::collections::HashSet<&str> = view
                    .trace
                    .trajectories
                    .iter()
                    .map(|t| t.agent_name.as_str())
                    .collect();
                names.len() as Scalar
            }
            "num_rounds" => view.trace.rounds as Scalar,
            "llm_call_count" => view.trace.trajectories.len() as Scalar,
            "total_entropy" => view.all_entropies.iter().sum(),
            "avg_entropy_per_inference" => safe_div(
                view.all_entropies.iter().sum(),
                view.trace.trajectories.len() as Scalar,
            ),
            _ => view.all_entropies.len() as Scalar,
        },
        Generator::Base { kind } => {
            let Some(b) = base else { return 0.0 };
            let summary = stats::describe(&b.entropies);
            let answers = stats::describe(&b.answer_entropies);
            let mas = stats::describe(&view.all_entropies);
            let mas_answers = stats::describe(&view.answer_entropies);
            match kind.as_str() {
                "total" => summary.total,
                "token_count" => summary.count as Scalar,
                "avg_per_token" => safe_div(summary.total, summary.count as Scalar),
                "max" => summary.max,
                "min" => summary.min,
                "std" => summary.std,
                "median" => summary.median,
                "q1" => summary.q1,
                "q3" => summary.q3,
                "ratio_vs_base" => safe_div(mas.total, summary.total),
                "reduction_vs_base" => summary.total - mas.total,
                "answer_change" => mas_answers.mean - answers.mean,
                "answer_ratio" => safe_div(mas_answers.mean, answers.mean),
                "answer_change_direction" => {
                    let change = mas_answers.mean - answers.mean;
                    if change > 0.0 {
                        1.0
                    } else if change < 0.0 {
                        -1.0
                    } else {
                        0.0
                    }
                }
                "answer_token_count" => answers.count as Scalar,
                "answer_mean_entropy" => answers.mean,
                _ => answers.min,
            }
        }
        Generator::Computational { kind } => {
            let calls = view.trace.trajectories.len() as Scalar;
            let duration: Scalar = view
                .trace
                .trajectories
                .iter()
                .map(|t| t.duration_ms as Scalar)
                .sum();
            let tokens = view.all_entropies.len() as Scalar;
            match kind.as_str() {
                "total_duration_ms" => duration,
                "mean_duration_ms_per_call" => safe_div(duration, calls),
                "total_token_count" => tokens,
                _ => safe_div(tokens, calls),
            }
        }
        Generator::RoundComputational { round, kind } => match kind.as_str() {
            "duration_ms" => view
                .round(*round)
                .iter()
                .map(|t| t.duration_ms as Scalar)
                .sum(),
            _ => view.round(*round).len() as Scalar,
        },
        Generator::BaseCorrectness { kind } => {
            let Some(b) = base else { return 0.0 };
            match kind.as_str() {
                "base_model_is_finally_correct" | "base_model_accuracy" => {
                    if b.is_finally_correct {
                        1.0
                    } else {
                        0.0
                    }
                }
                "base_model_answer_format_ok" => {
                    if b.format_ok {
                        1.0
                    } else {
                        0.0
                    }
                }
                _ => match (&view.trace.extracted_answer, &b.extracted_answer) {
                    (Some(a), Some(c)) if a == c => 1.0,
                    _ => 0.0,
                },
            }
        }
        Generator::Identifier { .. } => {
            unreachable!("identifier columns are never evaluated")
        }
    }
}

fn check_base(trace: &SampleTrace, base: &SampleTrace) -> Result<(), FeatureError> {
    let fail = |reason: String| FeatureError::InvalidBaseTrace {
        problem_id: trace.problem_id.clone(),
        reason,
    };
    if base.problem_id != trace.problem_id {
        return Err(fail(format!("covers problem {} instead", base.problem_id)));
    }
    if base.architecture != Architecture::Single {
        return Err(fail(format!(
            "architecture {} is not single",
            base.architecture.name()
        )));
    }
    if base.rounds != 1 {
        return Err(fail(format!("has {} rounds instead of 1", base.rounds)));
    }
    Ok(())
}

/// Evaluates one trace into the feature vector of `group`. Base-aware groups
/// require the single-agent trace of the same problem.
pub fn extract(
    manifest: &FeatureManifest,
    group: FeatureGroup,
    trace: &SampleTrace,
    base: Option<&SampleTrace>,
) -> Result<FeatureRow, FeatureError> {
    if trace.rounds != manifest.rounds {
        return Err(FeatureError::ManifestMismatch {
            run_id: trace.run_id.clone(),
            problem_id: trace.problem_id.clone(),
            expected: manifest.rounds,
            actual: trace.rounds,
        });
    }
    let base_view = if group.needs_base() {
        let base = base.ok_or_else(|| FeatureError::MissingBaseTrace {
            group: group.name(),
            problem_id: trace.problem_id.clone(),
        })?;
        check_base(trace, base)?;
        Some(BaseView::new(base))
    } else {
        None
    };

    let view = TraceView::new(trace);
    let values = manifest
        .trainable(group)
        .into_iter()
        .map(|entry| evaluate(entry, &view, base_view.as_ref()))
        .collect();
    Ok(FeatureRow {
        run_id: trace.run_id.clone(),
        problem_id: trace.problem_id.clone(),
        values,
        label: trace.is_finally_correct,
    })
}

/// Extracts a whole run, pairing each trace with the first base trace of the
/// same problem. Traces without a usable base are skipped with a report line;
/// a rounds/manifest mismatch is a hard error since the matrix would be
/// ill-shaped.
pub fn extract_run(
    manifest: &FeatureManifest,
    group: FeatureGroup,
    traces: &[SampleTrace],
    base_traces: &[SampleTrace],
) -> Result<ExtractedMatrix, FeatureError> {
    let mut by_problem: HashMap<&str, &SampleTrace> = HashMap::new();
    for base in base_traces {
        by_problem.entry(base.problem_id.as_str()).or_insert(base);
    }

    let mut rows = Vec::with_capacity(traces.len());
    let mut skipped = Vec::new();
    for trace in traces {
        let base = by_problem.get(trace.problem_id.as_str()).copied();
        match extract(manifest, group, trace, base) {
            Ok(row) => rows.push(row),
            Err(err @ FeatureError::ManifestMismatch { .. }) => return Err(err),
            Err(err) => skipped.push(format!("{}/{}: {err}", trace.run_id, trace.problem_id)),
        }
    }
    Ok(ExtractedMatrix {
        manifest_version: manifest.version.clone(),
        group,
        header: manifest.names(group),
        rows,
        skipped,
    })
}
