//! Deterministic scripted gateway: first matching rule wins, token entropy is
//! computed exactly from the rule's full probability vectors, and durations
//! are scripted so timing features reproduce byte-for-byte.

use std::sync::atomic::{AtomicU64, Ordering};

use serde::{Deserialize, Serialize};

use super::{FinishReason, Gateway, GatewayError, GenerationRequest, GenerationResult};
use crate::stats::token_entropy;
use crate::trace::TokenRecord;
use crate::Scalar;

/// A scripted emission: the emitted text plus the full next-token distribution
/// over the script vocabulary at that position.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MockToken {
    pub text: String,
    pub probs: Vec<Scalar>,
}

/// One match rule. Absent predicates match anything, so a rule with neither
/// predicate is a catch-all.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MockRule {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub match_system: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub match_user: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub duration_ms: Option<u64>,
    pub tokens: Vec<MockToken>,
}

impl MockRule {
    pub fn is_catch_all(&self) -> bool {
        self.match_system.is_none() && self.match_user.is_none()
    }

    fn matches(&self, request: &GenerationRequest) -> bool {
        self.match_system
            .as_deref()
            .is_none_or(|needle| request.system_prompt.contains(needle))
            && self
                .match_user
                .as_deref()
                .is_none_or(|needle| request.user_prompt.contains(needle))
    }
}

/// A full mock script: declared vocabulary plus ordered rules.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MockScript {
    /// Every probability vector has exactly this arity.
    pub vocabulary: Vec<String>,
    #[serde(default = "default_duration_ms")]
    pub default_duration_ms: u64,
    pub rules: Vec<MockRule>,
}

fn default_duration_ms() -> u64 {
    5
}

impl MockScript {
    pub fn from_json_str(s: &str) -> Result<MockScript, GatewayError> {
        serde_json::from_str(s).map_err(|e| GatewayError::InvalidScript(e.to_string()))
    }

    /// Lints the script; an empty list means fully valid. A missing catch-all
    /// is reported here but tolerated by the gateway (unmatched requests then
    /// fail per-sample), which is how partial-failure behaviour is exercised.
    pub fn validate(&self) -> Vec<String> {
        let mut violations = Vec::new();
        if self.vocabulary.is_empty() {
            violations.push("vocabulary: must be non-empty".to_string());
        }
        for (i, rule) in self.rules.iter().enumerate() {
            if rule.tokens.is_empty() {
                violations.push(format!("rules[{i}].tokens: must be non-empty"));
            }
            for (k, tok) in rule.tokens.iter().enumerate() {
                if tok.probs.len() != self.vocabulary.len() {
                    violations.push(format!(
                        "rules[{i}].tokens[{k}].probs: arity {} does not match vocabulary size {}",
                        tok.probs.len(),
                        self.vocabulary.len()
                    ));
                }
                if let Err(e) = token_entropy(&tok.probs) {
                    violations.push(format!("rules[{i}].tokens[{k}].probs: {e}"));
                }
            }
        }
        match self.rules.last() {
            None => violations.push("rules: must contain at least one rule".to_string()),
            Some(last) if !last.is_catch_all() => {
                violations.push("rules: last rule is not a catch-all".to_string())
            }
            _ => {}
        }
        violations
    }

    /// Hard validity check: probability vectors must be sound. The catch-all
    /// lint stays advisory.
    fn check_distributions(&self) -> Result<(), GatewayError> {
        let fatal: Vec<String> = self
            .validate()
            .into_iter()
            .filter(|v| !v.contains("catch-all"))
            .collect();
        if fatal.is_empty() {
            Ok(())
        } else {
            Err(GatewayError::InvalidScript(fatal.join("; ")))
        }
    }
}

/// Gateway over a [`MockScript`].
pub struct MockGateway {
    script: MockScript,
    descriptor: String,
    counter: AtomicU64,
}

impl MockGateway {
    pub fn new(script: MockScript) -> Result<MockGateway, GatewayError> {
        Self::with_descriptor(script, "mock:inline".to_string())
    }

    pub fn with_descriptor(
        script: MockScript,
        descriptor: String,
    ) -> Result<MockGateway, GatewayError> {
        script.check_distributions()?;
        Ok(MockGateway {
            script,
            descriptor,
            counter: AtomicU64::new(0),
        })
    }

    pub fn script(&self) -> &MockScript {
        &self.script
    }
}

impl Gateway for MockGateway {
    fn generate(&self, request: &GenerationRequest) -> Result<GenerationResult, GatewayError> {
        let seq = self.counter.fetch_add(1, Ordering::Relaxed);
        let rule = self
            .script
            .rules
            .iter()
            .find(|r| r.matches(request))
            .ok_or(GatewayError::NoRuleMatched {
                correlation_id: format!("mock-{seq:08}"),
            })?;
        let mut tokens = Vec::with_capacity(rule.tokens.len());
        let mut text = String::new();
        for tok in &rule.tokens {
            // Distributions were validated at construction.
            let entropy = token_entropy(&tok.probs).expect("validated distribution");
            text.push_str(&tok.text);
            tokens.push(TokenRecord {
                token_text: tok.text.clone(),
                entropy,
                top_logprobs: None,
                truncation_k: None,
            });
        }
        Ok(GenerationResult {
            text,
            tokens,
            duration_ms: rule.duration_ms.unwrap_or(self.script.default_duration_ms),
            finish_reason: FinishReason::Stop,
        })
    }

    fn descriptor(&self) -> String {
        self.descriptor.clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn request(system: &str, user: &str) -> GenerationRequest {
        GenerationRequest {
            system_prompt: system.to_string(),
            user_prompt: user.to_string(),
            temperature: 0.6,
            top_p: 0.95,
            max_tokens: 64,
            logprob_k: 20,
        }
    }

    fn script() -> MockScript {
        MockScript {
            vocabulary: vec!["a".into(), "b".into(), "c".into(), "d".into()],
            default_duration_ms: 5,
            rules: vec![
                MockRule {
                    match_system: None,
                    match_user: Some("Q1".into()),
                    duration_ms: Some(7),
                    tokens: vec![
                        MockToken {
                            text: "one ".into(),
                            probs: vec![1.0, 0.0, 0.0, 0.0],
                        },
                        MockToken {
                            text: "two".into(),
                            probs: vec![0.25, 0.25, 0.25, 0.25],
                        },
                    ],
                },
                MockRule {
                    match_system: None,
                    match_user: Some("Q".into()),
                    duration_ms: None,
                    tokens: vec![MockToken {
                        text: "broad".into(),
                        probs: vec![0.5, 0.5, 0.0, 0.0],
                    }],
                },
                MockRule {
                    match_system: None,
                    match_user: None,
                    duration_ms: Some(1),
                    tokens: vec![MockToken {
                        text: "fallback".into(),
                        probs: vec![1.0, 0.0, 0.0, 0.0],
                    }],
                },
            ],
        }
    }

    #[test]
    fn first_matching_rule_wins() {
        let gw = MockGateway::new(script()).unwrap();
        let r = gw.generate(&request("", "Question: Q1")).unwrap();
        assert_eq!(r.text, "one two");
        assert_eq!(r.duration_ms, 7);
        assert_eq!(r.tokens[0].entropy, 0.0);
        assert!((r.tokens[1].entropy - 4.0f64.ln()).abs() < 1e-15);

        // "Q2" skips the Q1 rule but hits the broader "Q" rule.
        let r = gw.generate(&request("", "Question: Q2")).unwrap();
        assert_eq!(r.text, "broad");
        assert_eq!(r.duration_ms, 5);
    }

    #[test]
    fn catch_all_matches_anything() {
        let gw = MockGateway::new(script()).unwrap();
        let r = gw.generate(&request("sys", "unrelated")).unwrap();
        assert_eq!(r.text, "fallback");
        assert_eq!(r.duration_ms, 1);
        assert_eq!(r.finish_reason, FinishReason::Stop);
    }

    #[test]
    fn mock_is_deterministic() {
        let gw = MockGateway::new(script()).unwrap();
        let a = gw.generate(&request("", "Q1")).unwrap();
        let b = gw.generate(&request("", "Q1")).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn missing_rule_without_catch_all_errors() {
        let mut s = script();
        s.rules.pop();
        assert_eq!(
            s.validate(),
            vec!["rules: last rule is not a catch-all".to_string()]
        );
        let gw = MockGateway::new(s).unwrap();
        assert!(matches!(
            gw.generate(&request("", "unmatched")),
            Err(GatewayError::NoRuleMatched { .. })
        ));
    }

    #[test]
    fn bad_distribution_rejected_at_construction() {
        let mut s = script();
        s.rules[0].tokens[0].probs = vec![0.5, 0.4, 0.0, 0.0];
        assert!(matches!(
            MockGateway::new(s),
            Err(GatewayError::InvalidScript(_))
        ));
    }

    #[test]
    fn script_round_trips_through_json() {
        let s = script();
        let json = serde_json::to_string(&s).unwrap();
        assert_eq!(MockScript::from_json_str(&json).unwrap(), s);
    }
}
