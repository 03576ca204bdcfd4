//! Shipped prompt sets for the five architectures. Sequential and the
//! centralized family use the published role wording; single and debate use
//! minimal house prompts in the same register.

use super::{AgentSpec, ArchitectureSpec, DecisionRule, OrchestratorSpec, PromptTemplate};
use crate::trace::Architecture;

fn template(system: &str, user: &str) -> PromptTemplate {
    PromptTemplate {
        system: system.to_string(),
        user: user.to_string(),
    }
}

fn agent(name: &str, system: &str, user: &str) -> AgentSpec {
    AgentSpec {
        name: name.to_string(),
        prompts: template(system, user),
    }
}

/// Default spec for an architecture, roster and templates included.
pub fn default_spec(kind: Architecture) -> ArchitectureSpec {
    match kind {
        Architecture::Single => ArchitectureSpec {
            kind,
            agent_roster: vec![agent(
                "SingleSolver",
                "You are the SingleSolver agent. Solve the given question step by step \
                 and place the final answer in \\boxed{}. Your input may include your own \
                 outputs from previous rounds; review and refine them.",
                "Question: {question}\n\n{context_block}\n\nSolve the question step by \
                 step and place the final answer in \\boxed{}.",
            )],
            orchestrator: None,
            decision_rule: DecisionRule::LastRoundOutput,
            prompt_char_budget: super::DEFAULT_PROMPT_CHAR_BUDGET,
        },
        Architecture::Sequential => ArchitectureSpec {
            kind,
            agent_roster: vec![
                agent(
                    "Planner",
                    "You are the planner agent. Generate plans that are the general \
                     instructions only. Do not execute the plan, do not perform any \
                     calculations, and do not produce any answers or intermediate \
                     numerical results. Output a structured, numbered plans.",
                    "For the question: {question}\nPlease only generate plans that are \
                     guidances required for the subsequent reasoning for the \
                     problem-solving. Do not include any specific calculation or \
                     numerical results. Your input may include previous round outputs \
                     content. You can consider the given contents as the initial state \
                     of the problem-solving.\n\n{context_block}",
                ),
                agent(
                    "Solver",
                    "You are the solver agent. Solve strictly according to the provided \
                     plans. Execute each step precisely and produce the final result. \
                     Output the final result into \\boxed{}.",
                    "Question: {question}\n### Plans ###\n{context_block}\n### Plans ###\n\
                     Follow the plans to solve the question step by step and place the \
                     final answer in \\boxed{}.",
                ),
                agent(
                    "Critic",
                    "You are the critic agent. Review the solver's solution in detail, \
                     re-derive independently, and correct any mistakes. Keep the review \
                     terse.",
                    "Review the solution for: {question}\n### Solution ###\n\
                     {context_block}\n### Solution ###\nIf corrections are needed, output \
                     the mistaken steps and the analysis, otherwise output 'Correct'.",
                ),
                agent(
                    "Judger",
                    "You are the final judge. Audit only the final candidate and ensure \
                     it is correct.",
                    "Final check for: {question}\n### Solution ###\n{context_block}\n\
                     ### Solution ###\nIf correct, only output the final answer without \
                     words, labels, and steps, and wrapped in \\boxed{}.",
                ),
            ],
            orchestrator: None,
            decision_rule: DecisionRule::JudgerOutput,
            prompt_char_budget: super::DEFAULT_PROMPT_CHAR_BUDGET,
        },
        Architecture::Centralized | Architecture::Hybrid => ArchitectureSpec {
            kind,
            agent_roster: expert_roster(),
            orchestrator: Some(OrchestratorSpec {
                name: "OrchestratorAgent".to_string(),
                feedback: template(
                    "You are the Orchestrator Agent. Your task is to review the \
                     solutions provided by the first-layer agents in the current round. \
                     Analyze the provided solutions, identify any issues or areas for \
                     improvement, and provide constructive feedback. You may rewrite \
                     content, provide specific feedback, and offer improvement \
                     suggestions as needed. Your feedback will be used by the agents in \
                     the next round to improve their solutions.",
                    "Question: {question}\nHere are the solutions from the expert agents \
                     in the current round:\n=== Solutions ===\n{solutions_block}\n\
                     === Solutions ===\nReview these solutions and provide feedback for \
                     the next round. If corrections are needed, specify the issues and \
                     suggest improvements. If the solutions are satisfactory, acknowledge \
                     them and provide guidance for further refinement.",
                ),
                aggregation: template(
                    "You are the Orchestrator Agent. Your task is to aggregate the \
                     solutions provided by the first-layer agents and produce a final \
                     answer wrapped in \\boxed{}.",
                    "Question: {question}\nHere are the solutions from the expert \
                     agents:\n=== Solutions ===\n{solutions_block}\n=== Solutions ===\n\
                     Based on these inputs, provide the final answer wrapped in \
                     \\boxed{}.",
                ),
            }),
            decision_rule: DecisionRule::OrchestratorOutput,
            prompt_char_budget: super::DEFAULT_PROMPT_CHAR_BUDGET,
        },
        Architecture::Debate => ArchitectureSpec {
            kind,
            agent_roster: (1..=3).map(debater).collect(),
            orchestrator: None,
            decision_rule: DecisionRule::MajorityVote,
            prompt_char_budget: super::DEFAULT_PROMPT_CHAR_BUDGET,
        },
    }
}

/// The three domain experts shared by the centralized and hybrid stars. The
/// hybrid roster is identical; only the context each worker receives differs.
fn expert_roster() -> Vec<AgentSpec> {
    vec![
        agent(
            "MathAgent",
            "You are the MathAgent. Solve the given question with clear steps. Your \
             input may include feedback from the Orchestrator from the previous round.",
            "Question: {question}\nProvide a concise mathematical solution, showing key \
             steps.\n\n{context_block}",
        ),
        agent(
            "ScienceAgent",
            "You are the ScienceAgent. Analyze and solve the given question with \
             scientific reasoning. Your input may include feedback from the Orchestrator \
             from the previous round.",
            "Question: {question}\nExplain your scientific reasoning and provide a final \
             result.\n\n{context_block}",
        ),
        agent(
            "CodeAgent",
            "You are the CodeAgent. Provide a self-contained Python function that solves \
             the problem. Your input may include feedback from the Orchestrator from the \
             previous round.",
            "Question: {question}\nWrite a single self-contained Python function in a \
             markdown code block that solves the problem.\n\n{context_block}",
        ),
    ]
}

fn debater(i: u32) -> AgentSpec {
    agent(
        &format!("Agent{i}"),
        &format!(
            "You are Agent{i}, one of three debaters answering the same question. \
             Consider the other agents' answers given in your context, state where you \
             agree or disagree, and give your own final answer wrapped in \\boxed{{}}."
        ),
        "Question: {question}\n\n{context_block}\n\nGive your reasoning and your final \
         answer wrapped in \\boxed{}.",
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rosters_have_the_documented_shapes() {
        assert_eq!(default_spec(Architecture::Single).agent_roster.len(), 1);
        let seq = default_spec(Architecture::Sequential);
        let names: Vec<&str> = seq.agent_roster.iter().map(|a| a.name.as_str()).collect();
        assert_eq!(names, ["Planner", "Solver", "Critic", "Judger"]);
        let cen = default_spec(Architecture::Centralized);
        let names: Vec<&str> = cen.agent_roster.iter().map(|a| a.name.as_str()).collect();
        assert_eq!(names, ["MathAgent", "ScienceAgent", "CodeAgent"]);
        assert_eq!(cen.orchestrator.as_ref().unwrap().name, "OrchestratorAgent");
        assert_eq!(default_spec(Architecture::Debate).agent_roster.len(), 3);
        assert!(default_spec(Architecture::Hybrid).orchestrator.is_some());
    }

    #[test]
    fn published_wording_is_present() {
        let seq = default_spec(Architecture::Sequential);
        assert!(seq.agent_roster[0]
            .prompts
            .system
            .contains("Generate plans that are the general instructions only"));
        assert!(seq.agent_roster[3]
            .prompts
            .user
            .contains("only output the final answer without words, labels, and steps"));
        let cen = default_spec(Architecture::Centralized);
        assert!(cen.agent_roster[0]
            .prompts
            .system
            .contains("Solve the given question with clear steps"));
        let orch = cen.orchestrator.unwrap();
        assert!(orch.aggregation.user.contains("=== Solutions ==="));
        assert!(orch
            .aggregation
            .user
            .contains("provide the final answer wrapped in \\boxed{}"));
    }
}
