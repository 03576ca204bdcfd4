//! Coordination engine: runs one problem through an architecture for R
//! rounds, building each agent's context from the architecture's history
//! mapping and recording every trajectory.
//!
//! Context rules per architecture (all orderings ascending by
//! (round, execution index); rounds are 1-based, indices 0-based):
//!
//! * single — the agent sees all of its own prior rounds.
//! * sequential — agent 0 at round r sees every agent's rounds < r; agent
//!   j > 0 sees only agent j−1's round-r output.
//! * centralized — workers see the orchestrator's round-(r−1) output; the
//!   orchestrator sees all workers' round-r outputs.
//! * debate — agent j sees all agents from rounds < r plus agents 0..j from
//!   the current round.
//! * hybrid — worker i sees the orchestrator and all workers from round r−1
//!   plus workers 0..i from round r; the orchestrator sees all workers'
//!   round-r outputs.

pub mod prompts;

use std::sync::atomic::{AtomicI64, Ordering};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gateway::{Gateway, GatewayError, GenerationRequest};
use crate::trace::{Architecture, Problem, SampleTrace, Trajectory};
use crate::verifier;
use crate::Scalar;

/// Referenced trajectories are cut to this many trailing characters when a
/// rendered prompt overruns the spec's character budget.
pub const TRUNCATED_ENTRY_CHARS: usize = 4_000;

const DEFAULT_PROMPT_CHAR_BUDGET: usize = 60_000;

#[derive(Debug, Error)]
pub enum TopologyError {
    #[error("invalid architecture spec: {0}")]
    InvalidSpec(String),
    #[error("history incomplete for agent {agent_index} round {round}: missing {missing}")]
    HistoryIncomplete {
        agent_index: u32,
        round: u32,
        missing: String,
    },
    #[error("unknown placeholder {{{placeholder}}} in prompt template")]
    PromptRenderError { placeholder: String },
    #[error(transparent)]
    GatewayFailure(#[from] GatewayError),
}

/// System/user prompt pair with `{question}`, `{context_block}` and
/// `{solutions_block}` placeholders.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptTemplate {
    pub system: String,
    pub user: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentSpec {
    pub name: String,
    pub prompts: PromptTemplate,
}

/// Orchestrator for the centralized/hybrid star: feedback template in rounds
/// r < R, aggregation template in round R.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrchestratorSpec {
    pub name: String,
    pub feedback: PromptTemplate,
    pub aggregation: PromptTemplate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecisionRule {
    LastRoundOutput,
    JudgerOutput,
    OrchestratorOutput,
    MajorityVote,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArchitectureSpec {
    pub kind: Architecture,
    pub agent_roster: Vec<AgentSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub orchestrator: Option<OrchestratorSpec>,
    pub decision_rule: DecisionRule,
    /// Rendered user prompts longer than this trigger per-entry context
    /// truncation (see [`TRUNCATED_ENTRY_CHARS`]).
    #[serde(default = "default_budget")]
    pub prompt_char_budget: usize,
}

fn default_budget() -> usize {
    DEFAULT_PROMPT_CHAR_BUDGET
}

impl ArchitectureSpec {
    pub fn from_json_str(s: &str) -> Result<ArchitectureSpec, TopologyError> {
        let spec: ArchitectureSpec =
            serde_json::from_str(s).map_err(|e| TopologyError::InvalidSpec(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    /// Number of LLM calls per round: roster plus orchestrator if present.
    pub fn calls_per_round(&self) -> usize {
        self.agent_roster.len() + usize::from(self.orchestrator.is_some())
    }

    pub fn validate(&self) -> Result<(), TopologyError> {
        let fail = |msg: String| Err(TopologyError::InvalidSpec(msg));
        let roster = self.agent_roster.len();
        match self.kind {
            Architecture::Single => {
                if roster != 1 {
                    return fail(format!("single requires roster size 1, got {roster}"));
                }
                if self.orchestrator.is_some() {
                    return fail("single takes no orchestrator".into());
                }
                if self.decision_rule != DecisionRule::LastRoundOutput {
                    return fail("single requires decision_rule last_round_output".into());
                }
            }
            Architecture::Sequential => {
                if roster != 4 {
                    return fail(format!("sequential requires roster size 4, got {roster}"));
                }
                if self.orchestrator.is_some() {
                    return fail("sequential takes no orchestrator".into());
                }
                if self.decision_rule != DecisionRule::JudgerOutput {
                    return fail("sequential requires decision_rule judger_output".into());
                }
            }
            Architecture::Centralized | Architecture::Hybrid => {
                if roster != 3 {
                    return fail(format!(
                        "{} requires 3 workers, got {roster}",
                        self.kind.name()
                    ));
                }
                if self.orchestrator.is_none() {
                    return fail(format!("{} requires an orchestrator", self.kind.name()));
                }
                if self.decision_rule != DecisionRule::OrchestratorOutput {
                    return fail(format!(
                        "{} requires decision_rule orchestrator_output",
                        self.kind.name()
                    ));
                }
            }
            Architecture::Debate => {
                if roster != 3 {
                    return fail(format!("debate requires roster size 3, got {roster}"));
                }
                if self.orchestrator.is_some() {
                    return fail("debate takes no orchestrator".into());
                }
                if self.decision_rule != DecisionRule::MajorityVote {
                    return fail("debate requires decision_rule majority_vote".into());
                }
            }
        }
        if self.prompt_char_budget == 0 {
            return fail("prompt_char_budget must be positive".into());
        }
        Ok(())
    }
}

/// Prior trajectories an agent is allowed to read, in context order.
#[derive(Debug, Clone, PartialEq)]
pub struct ContextBundle {
    pub entries: Vec<ContextEntry>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContextEntry {
    pub source_agent: String,
    pub source_round: u32,
    pub text: String,
}

impl ContextBundle {
    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Builds the context for execution slot `agent_index` (0-based; for
/// centralized/hybrid the orchestrator occupies the slot after the workers)
/// in `round` from the already-completed trajectories.
pub fn build_context(
    spec: &ArchitectureSpec,
    agent_index: u32,
    round: u32,
    history: &[Trajectory],
) -> Result<ContextBundle, TopologyError> {
    let workers = spec.agent_roster.len() as u32;
    let orchestrator_slot = workers; // only meaningful for centralized/hybrid
    let j = agent_index;
    let r = round;

    // Required history as (round, execution index) keys, already ascending.
    let mut wanted: Vec<(u32, u32)> = Vec::new();
    match spec.kind {
        Architecture::Single => {
            for prior in 1..r {
                wanted.push((prior, 0));
            }
        }
        Architecture::Sequential => {
            if j == 0 {
                for prior in 1..r {
                    for idx in 0..workers {
                        wanted.push((prior, idx));
                    }
                }
            } else {
                wanted.push((r, j - 1));
            }
        }
        Architecture::Centralized => {
            if j < workers {
                if r > 1 {
                    wanted.push((r - 1, orchestrator_slot));
                }
            } else {
                for idx in 0..workers {
                    wanted.push((r, idx));
                }
            }
        }
        Architecture::Debate => {
            for prior in 1..r {
                for idx in 0..workers {
                    wanted.push((prior, idx));
                }
            }
            for idx in 0..j {
                wanted.push((r, idx));
            }
        }
        Architecture::Hybrid => {
            if j < workers {
                if r > 1 {
                    for idx in 0..workers {
                        wanted.push((r - 1, idx));
                    }
                    wanted.push((r - 1, orchestrator_slot));
                }
                for idx in 0..j {
                    wanted.push((r, idx));
                }
            } else {
                for idx in 0..workers {
                    wanted.push((r, idx));
                }
            }
        }
    }

    let mut entries = Vec::with_capacity(wanted.len());
    for (want_round, want_idx) in wanted {
        let found = history
            .iter()
            .find(|t| t.round == want_round && t.agent_index == want_idx)
            .ok_or(TopologyError::HistoryIncomplete {
                agent_index: j,
                round: r,
                missing: format!("(round {want_round}, index {want_idx})"),
            })?;
        entries.push(ContextEntry {
            source_agent: found.agent_name.clone(),
            source_round: found.round,
            text: found.text.clone(),
        });
    }
    Ok(ContextBundle { entries })
}

/// Renders a template into (system, user) prompts. Context entries are
/// prefixed `[agent @ round r]` and joined by blank lines; when the rendered
/// user prompt would exceed `char_budget`, each entry's text is first cut to
/// its trailing [`TRUNCATED_ENTRY_CHARS`] characters.
pub fn render_prompt(
    template: &PromptTemplate,
    problem: &Problem,
    context: &ContextBundle,
    char_budget: usize,
) -> Result<(String, String), TopologyError> {
    let block = format_block(context, usize::MAX);
    let system = substitute(&template.system, &problem.question, &block)?;
    let user = substitute(&template.user, &problem.question, &block)?;
    if user.chars().count() <= char_budget {
        return Ok((system, user));
    }
    let block = format_block(context, TRUNCATED_ENTRY_CHARS);
    let user = substitute(&template.user, &problem.question, &block)?;
    Ok((system, user))
}

fn format_block(context: &ContextBundle, max_entry_chars: usize) -> String {
    context
        .entries
        .iter()
        .map(|e| {
            format!(
                "[{} @ round {}]\n{}",
                e.source_agent,
                e.source_round,
                tail_chars(&e.text, max_entry_chars)
            )
        })
        .collect::<Vec<_>>()
        .join("\n\n")
}

fn tail_chars(s: &str, n: usize) -> &str {
    let count = s.chars().count();
    if count <= n {
        return s;
    }
    match s.char_indices().nth(count - n) {
        Some((byte, _)) => &s[byte..],
        None => s,
    }
}

/// Replaces `{question}` / `{context_block}` / `{solutions_block}`. Any other
/// brace group shaped like a placeholder (lower-case identifier) is an
/// error; groups that are not identifiers (e.g. the literal `\boxed{}`) pass
/// through untouched. An empty context leaves no block behind: runs of blank
/// lines collapse and the result is trimmed.
fn substitute(template: &str, question: &str, block: &str) -> Result<String, TopologyError> {
    let mut out = String::with_capacity(template.len() + question.len() + block.len());
    let mut rest = template;
    while let Some(open) = rest.find('{') {
        out.push_str(&rest[..open]);
        let after = &rest[open + 1..];
        match after.find('}') {
            Some(close) => {
                let name = &after[..close];
                match name {
                    "question" => out.push_str(question),
                    "context_block" | "solutions_block" => out.push_str(block),
                    _ if !name.is_empty()
                        && name
                            .chars()
                            .all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_') =>
                    {
                        return Err(TopologyError::PromptRenderError {
                            placeholder: name.to_string(),
                        });
                    }
                    _ => {
                        out.push('{');
                        out.push_str(name);
                        out.push('}');
                    }
                }
                rest = &after[close + 1..];
            }
            None => {
                out.push('{');
                rest = after;
            }
        }
    }
    out.push_str(rest);
    Ok(collapse_blank_runs(out.trim()))
}

fn collapse_blank_runs(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let mut newlines = 0usize;
    for c in s.chars() {
        if c == '\n' {
            newlines += 1;
            if newlines <= 2 {
                out.push(c);
            }
        } else {
            newlines = 0;
            out.push(c);
        }
    }
    out
}

/// Time source for trace timestamps. The logical clock makes scripted runs
/// reproducible down to the byte: it starts at zero and moves only by the
/// durations the script declares.
pub trait Clock: Send + Sync {
    /// Milliseconds since the epoch (wall) or since sample start (logical).
    fn now_ms(&self) -> i64;
    fn advance(&self, elapsed_ms: u64);
}

pub struct WallClock;

impl Clock for WallClock {
    fn now_ms(&self) -> i64 {
        SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_millis() as i64)
            .unwrap_or(0)
    }

    fn advance(&self, _elapsed_ms: u64) {}
}

pub struct LogicalClock(AtomicI64);

impl LogicalClock {
    pub fn new() -> LogicalClock {
        LogicalClock(AtomicI64::new(0))
    }

    pub fn starting_at(ms: i64) -> LogicalClock {
        LogicalClock(AtomicI64::new(ms))
    }
}

impl Default for LogicalClock {
    fn default() -> Self {
        LogicalClock::new()
    }
}

impl Clock for LogicalClock {
    fn now_ms(&self) -> i64 {
        self.0.load(Ordering::SeqCst)
    }

    fn advance(&self, elapsed_ms: u64) {
        self.0.fetch_add(elapsed_ms as i64, Ordering::SeqCst);
    }
}

/// Decoding parameters forwarded to the gateway on every call.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplingParams {
    pub temperature: Scalar,
    pub top_p: Scalar,
    pub max_tokens: u32,
    pub logprob_k: u32,
}

impl Default for SamplingParams {
    fn default() -> Self {
        SamplingParams {
            temperature: 0.6,
            top_p: 0.95,
            max_tokens: 8192,
            logprob_k: 20,
        }
    }
}

/// A sample that died mid-run; the completed trajectories are kept so the
/// caller can still persist them.
#[derive(Debug)]
pub struct SampleFailure {
    pub error: TopologyError,
    pub partial: Vec<Trajectory>,
}

/// Runs one problem end to end and grades the outcome. Trajectories execute
/// in (round, slot) order; centralized workers' contexts are mutually
/// independent so they could run concurrently, but execution stays in roster
/// order for reproducibility.
pub fn run_sample(
    run_id: &str,
    problem: &Problem,
    spec: &ArchitectureSpec,
    rounds: u32,
    gateway: &dyn Gateway,
    params: &SamplingParams,
    clock: &dyn Clock,
) -> Result<SampleTrace, SampleFailure> {
    let fail = |error: TopologyError, partial: Vec<Trajectory>| SampleFailure { error, partial };
    if let Err(e) = spec.validate() {
        return Err(fail(e, Vec::new()));
    }
    if rounds < 1 {
        return Err(fail(
            TopologyError::InvalidSpec("rounds must be ≥ 1".into()),
            Vec::new(),
        ));
    }

    let started_at = clock.now_ms();
    let workers = spec.agent_roster.len() as u32;
    let mut trajectories: Vec<Trajectory> =
        Vec::with_capacity(spec.calls_per_round() * rounds as usize);

    for round in 1..=rounds {
        for slot in 0..spec.calls_per_round() as u32 {
            let (name, template) = if slot < workers {
                let agent = &spec.agent_roster[slot as usize];
                (agent.name.as_str(), &agent.prompts)
            } else {
                let orch = spec.orchestrator.as_ref().expect("validated");
                let template = if round < rounds {
                    &orch.feedback
                } else {
                    &orch.aggregation
                };
                (orch.name.as_str(), template)
            };

            let bundle = match build_context(spec, slot, round, &trajectories) {
                Ok(b) => b,
                Err(e) => return Err(fail(e, trajectories)),
            };
            let (system, user) =
                match render_prompt(template, problem, &bundle, spec.prompt_char_budget) {
                    Ok(p) => p,
                    Err(e) => return Err(fail(e, trajectories)),
                };
            let request = GenerationRequest {
                system_prompt: system.clone(),
                user_prompt: user.clone(),
                temperature: params.temperature,
                top_p: params.top_p,
                max_tokens: params.max_tokens,
                logprob_k: params.logprob_k,
            };
            let result = match gateway.generate(&request) {
                Ok(r) => r,
                Err(e) => return Err(fail(e.into(), trajectories)),
            };
            clock.advance(result.duration_ms);
            trajectories.push(Trajectory {
                agent_name: name.to_string(),
                agent_index: slot,
                round,
                tokens: result.tokens,
                text: result.text,
                duration_ms: result.duration_ms,
                prompt_chars: (system.chars().count() + user.chars().count()) as u64,
            });
        }
    }

    let (final_text, extracted) = decide(spec, rounds, &trajectories, problem.task_kind);
    let is_finally_correct = verifier::grade_problem(extracted.as_ref(), problem);
    Ok(SampleTrace {
        run_id: run_id.to_string(),
        problem_id: problem.id.clone(),
        architecture: spec.kind,
        rounds,
        trajectories,
        final_text,
        extracted_answer: extracted.map(|e| e.normalized),
        is_finally_correct,
        started_at,
        finished_at: clock.now_ms(),
    })
}

/// Applies the decision rule over the completed trajectories, yielding the
/// system's final text and extracted answer (if any).
fn decide(
    spec: &ArchitectureSpec,
    rounds: u32,
    trajectories: &[Trajectory],
    task_kind: crate::trace::TaskKind,
) -> (String, Option<verifier::ExtractedAnswer>) {
    let find = |round: u32, idx: u32| {
        trajectories
            .iter()
            .find(|t| t.round == round && t.agent_index == idx)
    };
    match spec.decision_rule {
        DecisionRule::LastRoundOutput | DecisionRule::JudgerOutput => {
            let idx = spec.agent_roster.len() as u32 - 1;
            match find(rounds, idx) {
                Some(t) => (
                    t.text.clone(),
                    verifier::extract_boxed(&t.text, &t.tokens, task_kind),
                ),
                None => (String::new(), None),
            }
        }
        DecisionRule::OrchestratorOutput => {
            let idx = spec.agent_roster.len() as u32;
            match find(rounds, idx) {
                Some(t) => (
                    t.text.clone(),
                    verifier::extract_boxed(&t.text, &t.tokens, task_kind),
                ),
                None => (String::new(), None),
            }
        }
        DecisionRule::MajorityVote => {
            let finalists: Vec<Option<&Trajectory>> = (0..spec.agent_roster.len() as u32)
                .map(|idx| find(rounds, idx))
                .collect();
            let extractions: Vec<Option<verifier::ExtractedAnswer>> = finalists
                .iter()
                .map(|t| t.and_then(|t| verifier::extract_boxed(&t.text, &t.tokens, task_kind)))
                .collect();
            let votes: Vec<Option<String>> = extractions
                .iter()
                .map(|e| e.as_ref().map(|e| e.normalized.clone()))
                .collect();
            match verifier::majority_vote(&votes) {
                Some(winner) => {
                    let winner_idx = votes
                        .iter()
                        .position(|v| v.as_deref() == Some(winner.as_str()))
                        .expect("winner came from votes");
                    let text = finalists[winner_idx]
                        .map(|t| t.text.clone())
                        .unwrap_or_default();
                    (text, extractions.into_iter().nth(winner_idx).flatten())
                }
                None => (String::new(), None),
            }
        }
    }
}
