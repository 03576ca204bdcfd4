//! Canonical data model for problems, trajectories, traces and run manifests,
//! shared by every other module.
//!
//! All types are immutable value objects once constructed; entropy is stored
//! in nats, timestamps as UTC milliseconds since the epoch.

use serde::{Deserialize, Serialize};

use crate::Scalar;

/// Task families the verifier knows how to grade.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskKind {
    Math,
    MultipleChoice,
    Freeform,
}

impl TaskKind {
    pub fn name(self) -> &'static str {
        match self {
            TaskKind::Math => "math",
            TaskKind::MultipleChoice => "multiple_choice",
            TaskKind::Freeform => "freeform",
        }
    }
}

/// One dataset problem: the question and its verifiable ground-truth answer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Problem {
    pub id: String,
    pub question: String,
    #[serde(rename = "answer")]
    pub gold_answer: String,
    pub task_kind: TaskKind,
    /// Pre-graded verdict for externally executed tasks (e.g. code); when
    /// present it overrides string grading.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub external_verdict: Option<bool>,
}

/// The five coordination architectures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Architecture {
    Single,
    Sequential,
    Centralized,
    Debate,
    Hybrid,
}

impl Architecture {
    pub const ALL: [Architecture; 5] = [
        Architecture::Single,
        Architecture::Sequential,
        Architecture::Centralized,
        Architecture::Debate,
        Architecture::Hybrid,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Architecture::Single => "single",
            Architecture::Sequential => "sequential",
            Architecture::Centralized => "centralized",
            Architecture::Debate => "debate",
            Architecture::Hybrid => "hybrid",
        }
    }

    pub fn parse(s: &str) -> Option<Architecture> {
        Architecture::ALL.into_iter().find(|a| a.name() == s)
    }

    /// Integer code used as the trainable architecture feature
    /// (alphabetical: centralized 0 … single 4).
    pub fn code(self) -> u8 {
        match self {
            Architecture::Centralized => 0,
            Architecture::Debate => 1,
            Architecture::Hybrid => 2,
            Architecture::Sequential => 3,
            Architecture::Single => 4,
        }
    }

    /// Total LLM calls issued for `rounds` rounds.
    pub fn llm_calls(self, rounds: u32) -> u32 {
        self.calls_per_round() * rounds
    }

    /// LLM calls per round (workers plus orchestrator where present).
    pub fn calls_per_round(self) -> u32 {
        match self {
            Architecture::Single => 1,
            Architecture::Debate => 3,
            Architecture::Sequential | Architecture::Centralized | Architecture::Hybrid => 4,
        }
    }
}

/// One emitted token with the entropy of the decoding distribution that
/// produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TokenRecord {
    pub token_text: String,
    /// Shannon entropy in nats; a truncated lower bound for network backends.
    pub entropy: Scalar,
    /// Top-k (token, logprob) pairs as returned by the server, where known.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub top_logprobs: Option<Vec<(String, Scalar)>>,
    /// The k the entropy was truncated at, where applicable.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truncation_k: Option<u32>,
}

/// The full token sequence one agent emitted in one round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub agent_name: String,
    /// 0-based execution index within the round.
    pub agent_index: u32,
    /// 1-based round number.
    pub round: u32,
    pub tokens: Vec<TokenRecord>,
    pub text: String,
    pub duration_ms: u64,
    pub prompt_chars: u64,
}

impl Trajectory {
    /// Per-token entropies, in emission order.
    pub fn token_entropies(&self) -> Vec<Scalar> {
        self.tokens.iter().map(|t| t.entropy).collect()
    }

    /// Total trajectory entropy H = Σ_t H_t.
    pub fn total_entropy(&self) -> Scalar {
        self.tokens.iter().map(|t| t.entropy).sum()
    }
}

/// One problem run through one architecture: every trajectory plus the decided
/// final answer and its correctness label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleTrace {
    pub run_id: String,
    pub problem_id: String,
    pub architecture: Architecture,
    pub rounds: u32,
    pub trajectories: Vec<Trajectory>,
    pub final_text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub extracted_answer: Option<String>,
    pub is_finally_correct: bool,
    pub started_at: i64,
    pub finished_at: i64,
}

/// Run-level settings recorded once per trace file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub run_id: String,
    pub model_endpoint: String,
    pub temperature: Scalar,
    pub top_p: Scalar,
    pub max_tokens: u32,
    pub architecture: Architecture,
    pub rounds: u32,
    pub dataset_path: String,
    pub feature_manifest_version: String,
    pub started_at: i64,
    pub finished_at: i64,
    pub wall_clock_ms: u64,
}

/// Checks every type invariant over one trace; returns human-readable
/// violations (empty means well-formed). Violations are data, not errors.
pub fn validate_trace(trace: &SampleTrace) -> Vec<String> {
    let mut violations = Vec::new();
    if trace.run_id.is_empty() {
        violations.push("run_id: must be non-empty".to_string());
    }
    if trace.problem_id.is_empty() {
        violations.push("problem_id: must be non-empty".to_string());
    }
    if trace.rounds < 1 {
        violations.push("rounds: must be ≥ 1".to_string());
    }
    if trace.started_at > trace.finished_at {
        violations.push("started_at: exceeds finished_at".to_string());
    }

    let expected = trace.architecture.llm_calls(trace.rounds);
    if trace.trajectories.len() != expected as usize {
        violations.push(format!(
            "trajectories: trajectory count mismatch (expected {expected} for {} R={}, got {})",
            trace.architecture.name(),
            trace.rounds,
            trace.trajectories.len()
        ));
    }

    let mut prev_key: Option<(u32, u32)> = None;
    for (i, t) in trace.trajectories.iter().enumerate() {
        if t.round < 1 || t.round > trace.rounds {
            violations.push(format!(
                "trajectories[{i}].round: round ∈ [1, R] violated (round {}, R {})",
                t.round, trace.rounds
            ));
        }
        let concat: String = t.tokens.iter().map(|tok| tok.token_text.as_str()).collect();
        if concat != t.text {
            violations.push(format!(
                "trajectories[{i}].text: text equals token concatenation violated"
            ));
        }
        for (k, tok) in t.tokens.iter().enumerate() {
            // NaN must fail this check, hence not a plain `< 0.0`.
            if tok.entropy < 0.0 || tok.entropy.is_nan() {
                violations.push(format!(
                    "trajectories[{i}].tokens[{k}].entropy: entropy ≥ 0 violated (got {})",
                    tok.entropy
                ));
            }
            if let Some(lps) = &tok.top_logprobs {
                if lps.iter().any(|(_, lp)| *lp > 0.0) {
                    violations.push(format!(
                        "trajectories[{i}].tokens[{k}].top_logprobs: logprob ≤ 0 violated"
                    ));
                }
                if lps.windows(2).any(|w| w[0].1 <= w[1].1) {
                    violations.push(format!(
                        "trajectories[{i}].tokens[{k}].top_logprobs: strictly descending order violated"
                    ));
                }
            }
        }
        let key = (t.round, t.agent_index);
        if let Some(prev) = prev_key {
            if key <= prev {
                violations.push(format!(
                    "trajectories[{i}]: ordering by (round, execution index) violated"
                ));
            }
        }
        prev_key = Some(key);
    }
    violations
}
