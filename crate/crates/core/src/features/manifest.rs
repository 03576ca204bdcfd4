//! Canonical feature enumeration. The published material fixes category
//! counts and representative names; the full per-name list is fixed here,
//! versioned, and generated from a grammar so the counts hold for any
//! R ∈ 1..=5:
//!
//! | level            | count at R |            at R=2 |
//! |------------------|------------|-------------------|
//! | agent_level      | 78R        | 156               |
//! | round_level      | 10R+7      | 27                |
//! | sample_level     | 26 + 3 id  | 29                |
//! | system_level     | 7 + 3 id   | 10                |
//! | base_entropy     | 17         | 17                |
//! | computational    | 4+2R + 3 id| 11                |
//! | base_correctness | 4          | 4                 |
//!
//! The nine identifier entries live inside the sample/system/computational
//! level counts but are never trainable, so the trainable totals come out to
//! 224 (mas_only), 241 (base_h) and 245 (base_full) at R=2, and mas_only
//! grows to 494 at R=5.

use serde::{Deserialize, Serialize};

use super::FeatureError;

/// Cross-agent aggregators applied over per-agent statistics.
pub const CROSS_AGENT_AGGS: [&str; 8] = [
    "max", "mean", "min", "std", "variance", "median", "q1", "q3",
];
/// Per-agent statistics over one trajectory's token entropies.
pub const PER_AGENT_STATS: [&str; 9] = [
    "total", "mean", "max", "min", "std", "variance", "median", "q1", "q3",
];
/// Cross-agent aggregators for per-agent token counts.
pub const TOKEN_COUNT_AGGS: [&str; 4] = ["max", "mean", "min", "std"];
/// Round-level statistics over per-agent total entropies (plus token terms).
pub const ROUND_STATS: [&str; 9] = [
    "total",
    "mean",
    "max",
    "min",
    "std",
    "variance",
    "median",
    "token_count",
    "mean_entropy_per_token",
];

/// Semantic level a feature belongs to. Levels partition the manifest;
/// trainability is the orthogonal `identifier` flag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Level {
    AgentLevel,
    RoundLevel,
    SampleLevel,
    SystemLevel,
    BaseEntropy,
    Computational,
    BaseCorrectness,
}

impl Level {
    pub const ALL: [Level; 7] = [
        Level::AgentLevel,
        Level::RoundLevel,
        Level::SampleLevel,
        Level::SystemLevel,
        Level::BaseEntropy,
        Level::Computational,
        Level::BaseCorrectness,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Level::AgentLevel => "agent_level",
            Level::RoundLevel => "round_level",
            Level::SampleLevel => "sample_level",
            Level::SystemLevel => "system_level",
            Level::BaseEntropy => "base_entropy",
            Level::Computational => "computational",
            Level::BaseCorrectness => "base_correctness",
        }
    }
}

/// Formula family behind one feature; the evaluator dispatches on this.
/// String parameters are drawn from the const lists above.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Generator {
    /// `agg` over agents of (`stat` over each agent's token entropies) in `round`.
    AgentStat {
        round: u32,
        agg: String,
        stat: String,
    },
    /// Variance or CV of per-agent total entropies within `round`.
    InterAgentDivergence { round: u32, kind: String },
    /// `agg` over agents of token counts within `round`.
    AgentTokenCount { round: u32, agg: String },
    /// One of [`ROUND_STATS`] over `round`'s per-agent total entropies.
    RoundStat { round: u32, stat: String },
    /// round_{r+1} total entropy minus round_{r} total entropy.
    AdjacentRoundChange { round: u32 },
    /// Cross-round dynamics over the per-round total-entropy sequence.
    CrossRound { kind: String },
    /// Sample-level aggregate; see the evaluator for each kind.
    Sample { kind: String },
    /// System-level aggregate.
    System { kind: String },
    /// Base-model entropy statistic or MAS-vs-base comparison.
    Base { kind: String },
    /// Timing/token computational metric over the whole sample.
    Computational { kind: String },
    /// Per-round timing/call-count computational metric.
    RoundComputational { round: u32, kind: String },
    /// Base-model correctness bit.
    BaseCorrectness { kind: String },
    /// Experimental identifier column; never evaluated into a vector.
    Identifier { kind: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub name: String,
    pub level: Level,
    /// Identifier columns are counted inside their level but excluded from
    /// every trainable group.
    pub identifier: bool,
    pub generator: Generator,
}

impl ManifestEntry {
    /// Group label: `identifier` for flagged entries, the level name otherwise.
    pub fn group_name(&self) -> &'static str {
        if self.identifier {
            "identifier"
        } else {
            self.level.name()
        }
    }
}

/// Trainable feature-group selections.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureGroup {
    MasOnly,
    BaseH,
    BaseFull,
}

impl FeatureGroup {
    pub fn name(self) -> &'static str {
        match self {
            FeatureGroup::MasOnly => "mas_only",
            FeatureGroup::BaseH => "base_h",
            FeatureGroup::BaseFull => "base_full",
        }
    }

    pub fn parse(s: &str) -> Option<FeatureGroup> {
        match s {
            "mas_only" | "mas" => Some(FeatureGroup::MasOnly),
            "base_h" | "base-h" => Some(FeatureGroup::BaseH),
            "base_full" | "base-full" => Some(FeatureGroup::BaseFull),
            _ => None,
        }
    }

    pub fn needs_base(self) -> bool {
        !matches!(self, FeatureGroup::MasOnly)
    }

    fn includes(self, entry: &ManifestEntry) -> bool {
        if entry.identifier {
            return false;
        }
        match entry.level {
            Level::BaseEntropy => self != FeatureGroup::MasOnly,
            Level::BaseCorrectness => self == FeatureGroup::BaseFull,
            _ => true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureManifest {
    pub version: String,
    /// Round count the generators were expanded for.
    pub rounds: u32,
    pub entries: Vec<ManifestEntry>,
}

impl FeatureManifest {
    /// Expands the grammar for `rounds` interaction rounds (1..=5).
    pub fn generate(rounds: u32) -> Result<FeatureManifest, FeatureError> {
        if !(1..=5).contains(&rounds) {
            return Err(FeatureError::UnsupportedRounds(rounds));
        }
        let mut e: Vec<ManifestEntry> = Vec::new();
        let push =
            |e: &mut Vec<ManifestEntry>, name: String, level: Level, generator: Generator| {
                e.push(ManifestEntry {
                    name,
                    level,
                    identifier: false,
                    generator,
                });
            };
        let push_id = |e: &mut Vec<ManifestEntry>, name: &str, level: Level| {
            e.push(ManifestEntry {
                name: name.to_string(),
                level,
                identifier: true,
                generator: Generator::Identifier {
                    kind: name.to_string(),
                },
            });
        };

        // agent_level: 72R grid + 2R divergence + 4R token aggregates = 78R
        for r in 1..=rounds {
            for agg in CROSS_AGENT_AGGS {
                for stat in PER_AGENT_STATS {
                    push(
                        &mut e,
                        format!("sample_round_{r}_{agg}_agent_{stat}_entropy"),
                        Level::AgentLevel,
                        Generator::AgentStat {
                            round: r,
                            agg: agg.into(),
                            stat: stat.into(),
                        },
                    );
                }
            }
        }
        for r in 1..=rounds {
            for kind in ["variance", "cv"] {
                push(
                    &mut e,
                    format!("round_{r}_inter_agent_divergence_{kind}"),
                    Level::AgentLevel,
                    Generator::InterAgentDivergence {
                        round: r,
                        kind: kind.into(),
                    },
                );
            }
        }
        for r in 1..=rounds {
            for agg in TOKEN_COUNT_AGGS {
                push(
                    &mut e,
                    format!("round_{r}_{agg}_agent_token_count"),
                    Level::AgentLevel,
                    Generator::AgentTokenCount {
                        round: r,
                        agg: agg.into(),
                    },
                );
            }
        }

        // round_level: 9R stats + (R−1) adjacent changes + 8 cross-round
        for r in 1..=rounds {
            for stat in ROUND_STATS {
                let name = match stat {
                    "total" => format!("round_{r}_total_entropy"),
                    "token_count" => format!("round_{r}_token_count"),
                    "mean_entropy_per_token" => format!("round_{r}_mean_entropy_per_token"),
                    s => format!("round_{r}_{s}_agent_entropy"),
                };
                push(
                    &mut e,
                    name,
                    Level::RoundLevel,
                    Generator::RoundStat {
                        round: r,
                        stat: stat.into(),
                    },
                );
            }
        }
        for r in 1..rounds {
            push(
                &mut e,
                format!("round_{r}_{}_change_entropy", r + 1),
                Level::RoundLevel,
                Generator::AdjacentRoundChange { round: r },
            );
        }
        for kind in [
            "first_to_last_change",
            "first_to_last_ratio",
            "slope",
            "volatility",
            "max_total",
            "min_total",
            "mean_total",
            "token_count_change_first_to_last",
        ] {
            let name = match kind {
                "first_to_last_change" => "round_first_to_last_change_entropy".to_string(),
                "first_to_last_ratio" => "round_first_to_last_ratio_entropy".to_string(),
                "slope" => "round_entropy_slope".to_string(),
                "volatility" => "round_entropy_volatility".to_string(),
                "max_total" => "round_max_total_entropy".to_string(),
                "min_total" => "round_min_total_entropy".to_string(),
                "mean_total" => "round_mean_total_entropy".to_string(),
                _ => "round_token_count_change_first_to_last".to_string(),
            };
            push(
                &mut e,
                name,
                Level::RoundLevel,
                Generator::CrossRound { kind: kind.into() },
            );
        }

        // sample_level: 26 trainable + 3 identifiers
        for kind in [
            "total_entropy",
            "mean_entropy",
            "max_entropy",
            "min_entropy",
            "std_entropy",
            "variance_entropy",
            "median_entropy",
            "q1_entropy",
            "q3_entropy",
            "entropy_range",
            "entropy_iqr",
            "entropy_bowley_skewness",
            "entropy_cv",
            "entropy_tail_weight",
            "entropy_stability_index",
            "avg_entropy_per_token",
            "answer_token_count",
            "total_answer_token_entropy",
            "mean_answer_token_entropy",
            "max_answer_token_entropy",
            "min_answer_token_entropy",
            "std_answer_token_entropy",
            "answer_format_ok",
            "first_round_entropy_fraction",
            "last_round_entropy_fraction",
            "peak_entropy_share",
        ] {
            let name = if kind == "answer_format_ok" {
                kind.to_string()
            } else {
                format!("sample_{kind}")
            };
            push(
                &mut e,
                name,
                Level::SampleLevel,
                Generator::Sample { kind: kind.into() },
            );
        }
        push_id(&mut e, "run_id", Level::SampleLevel);
        push_id(&mut e, "problem_id", Level::SampleLevel);
        push_id(&mut e, "task_kind", Level::SampleLevel);

        // system_level: 7 trainable + 3 identifiers
        for kind in [
            "architecture",
            "num_agents",
            "num_rounds",
            "llm_call_count",
            "total_entropy",
            "avg_entropy_per_inference",
            "total_token_count",
        ] {
            let name = if kind == "architecture" {
                kind.to_string()
            } else {
                format!("system_{kind}")
            };
            push(
                &mut e,
                name,
                Level::SystemLevel,
                Generator::System { kind: kind.into() },
            );
        }
        push_id(&mut e, "architecture_name", Level::SystemLevel);
        push_id(&mut e, "dataset_name", Level::SystemLevel);
        push_id(&mut e, "model_tag", Level::SystemLevel);

        // base_entropy: 17
        for (name, kind) in [
            ("base_sample_total_entropy", "total"),
            ("base_sample_token_count", "token_count"),
            ("base_sample_avg_entropy_per_token", "avg_per_token"),
            ("base_sample_max_entropy", "max"),
            ("base_sample_min_entropy", "min"),
            ("base_sample_std_entropy", "std"),
            ("base_sample_median_entropy", "median"),
            ("base_sample_q1_entropy", "q1"),
            ("base_sample_q3_entropy", "q3"),
            ("sample_entropy_ratio_vs_base_total", "ratio_vs_base"),
            ("sample_entropy_reduction_vs_base", "reduction_vs_base"),
            ("answer_token_entropy_change", "answer_change"),
            ("answer_token_entropy_ratio", "answer_ratio"),
            (
                "answer_token_entropy_change_direction",
                "answer_change_direction",
            ),
            ("base_model_answer_token_count", "answer_token_count"),
            (
                "base_model_mean_answer_token_entropy",
                "answer_mean_entropy",
            ),
            ("base_model_min_answer_token_entropy", "answer_min_entropy"),
        ] {
            push(
                &mut e,
                name.to_string(),
                Level::BaseEntropy,
                Generator::Base { kind: kind.into() },
            );
        }

        // computational: 4 + 2R trainable + 3 identifiers
        for kind in [
            "total_duration_ms",
            "mean_duration_ms_per_call",
            "total_token_count",
            "mean_token_count_per_call",
        ] {
            push(
                &mut e,
                format!("sample_{kind}"),
                Level::Computational,
                Generator::Computational { kind: kind.into() },
            );
        }
        for r in 1..=rounds {
            for kind in ["duration_ms", "llm_call_count"] {
                push(
                    &mut e,
                    format!("round_{r}_{kind}"),
                    Level::Computational,
                    Generator::RoundComputational {
                        round: r,
                        kind: kind.into(),
                    },
                );
            }
        }
        push_id(&mut e, "sampling_seed", Level::Computational);
        push_id(&mut e, "started_at", Level::Computational);
        push_id(&mut e, "finished_at", Level::Computational);

        // base_correctness: 4
        for kind in [
            "base_model_is_finally_correct",
            "base_model_accuracy",
            "base_model_answer_format_ok",
            "agreement_with_base",
        ] {
            push(
                &mut e,
                kind.to_string(),
                Level::BaseCorrectness,
                Generator::BaseCorrectness { kind: kind.into() },
            );
        }

        Ok(FeatureManifest {
            version: format!("v1-r{rounds}"),
            rounds,
            entries: e,
        })
    }

    /// Entries of a trainable group, in manifest order.
    pub fn trainable(&self, group: FeatureGroup) -> Vec<&ManifestEntry> {
        self.entries
            .iter()
            .filter(|entry| group.includes(entry))
            .collect()
    }

    /// Header names for a trainable group.
    pub fn names(&self, group: FeatureGroup) -> Vec<String> {
        self.trainable(group)
            .into_iter()
            .map(|e| e.name.clone())
            .collect()
    }

    pub fn dimension(&self, group: FeatureGroup) -> usize {
        self.trainable(group).len()
    }

    /// Entries per level (identifier columns count inside their level) plus
    /// the identifier tally itself.
    pub fn counts(&self) -> Vec<(&'static str, usize)> {
        let mut out: Vec<(&'static str, usize)> = Level::ALL
            .iter()
            .map(|level| {
                (
                    level.name(),
                    self.entries.iter().filter(|e| e.level == *level).count(),
                )
            })
            .collect();
        out.push((
            "identifier",
            self.entries.iter().filter(|e| e.identifier).count(),
        ));
        out
    }

    pub fn find(&self, name: &str) -> Option<&ManifestEntry> {
        self.entries.iter().find(|e| e.name == name)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn counts_match_published_numbers_at_r2() {
        let m = FeatureManifest::generate(2).unwrap();
        let counts: Vec<(&str, usize)> = m.counts();
        assert_eq!(
            counts,
            vec![
                ("agent_level", 156),
                ("round_level", 27),
                ("sample_level", 29),
                ("system_level", 10),
                ("base_entropy", 17),
                ("computational", 11),
                ("base_correctness", 4),
                ("identifier", 9),
            ]
        );
        assert_eq!(m.entries.len(), 254);
        assert_eq!(m.dimension(FeatureGroup::MasOnly), 224);
        assert_eq!(m.dimension(FeatureGroup::BaseH), 241);
        assert_eq!(m.dimension(FeatureGroup::BaseFull), 245);
        assert_eq!(m.version, "v1-r2");
    }

    #[test]
    fn mas_group_reaches_494_dimensions_at_r5() {
        let m = FeatureManifest::generate(5).unwrap();
        assert_eq!(m.dimension(FeatureGroup::MasOnly), 494);
    }

    #[test]
    fn names_are_unique_for_every_round_count() {
        for rounds in 1..=5 {
            let m = FeatureManifest::generate(rounds).unwrap();
            let names: HashSet<&str> = m.entries.iter().map(|e| e.name.as_str()).collect();
            assert_eq!(names.len(), m.entries.len(), "duplicate name at R={rounds}");
        }
    }

    #[test]
    fn representative_names_are_present() {
        let m = FeatureManifest::generate(2).unwrap();
        for name in [
            "sample_total_entropy",
            "sample_entropy_stability_index",
            "sample_entropy_cv",
            "sample_entropy_bowley_skewness",
            "sample_max_answer_token_entropy",
            "sample_answer_token_count",
            "round_1_total_entropy",
            "round_1_2_change_entropy",
            "sample_round_1_max_agent_total_entropy",
            "sample_round_1_max_agent_max_entropy",
            "sample_round_1_mean_agent_std_entropy",
            "sample_round_1_variance_agent_total_entropy",
            "base_sample_total_entropy",
            "base_sample_token_count",
            "sample_entropy_ratio_vs_base_total",
            "answer_token_entropy_change",
            "answer_token_entropy_change_direction",
            "base_model_min_answer_token_entropy",
            "base_model_is_finally_correct",
            "architecture",
            "answer_format_ok",
        ] {
            assert!(m.find(name).is_some(), "missing {name}");
        }
        let r5 = FeatureManifest::generate(5).unwrap();
        assert!(r5.find("sample_round_5_q3_agent_q3_entropy").is_some());
    }

    #[test]
    fn identifiers_never_enter_trainable_groups() {
        let m = FeatureManifest::generate(2).unwrap();
        for group in [
            FeatureGroup::MasOnly,
            FeatureGroup::BaseH,
            FeatureGroup::BaseFull,
        ] {
            assert!(m.trainable(group).iter().all(|e| !e.identifier));
        }
        for name in ["run_id", "architecture_name", "sampling_seed"] {
            let entry = m.find(name).unwrap();
            assert!(entry.identifier);
            assert_eq!(entry.group_name(), "identifier");
        }
        // ...while the architecture *code* is trainable.
        assert!(!m.find("architecture").unwrap().identifier);
    }

    #[test]
    fn group_nesting_follows_the_set_algebra() {
        let m = FeatureManifest::generate(2).unwrap();
        let mas: Vec<String> = m.names(FeatureGroup::MasOnly);
        let base_h: Vec<String> = m.names(FeatureGroup::BaseH);
        let base_full: Vec<String> = m.names(FeatureGroup::BaseFull);
        let mas_set: HashSet<&String> = mas.iter().collect();
        let base_h_set: HashSet<&String> = base_h.iter().collect();
        assert!(mas_set.iter().all(|n| base_h_set.contains(*n)));
        assert!(base_h.iter().all(|n| base_full.contains(n)));
        assert_eq!(base_h.len() - mas.len(), 17);
        assert_eq!(base_full.len() - base_h.len(), 4);
    }

    #[test]
    fn unsupported_round_counts_are_rejected() {
        assert!(matches!(
            FeatureManifest::generate(0),
            Err(FeatureError::UnsupportedRounds(0))
        ));
        assert!(matches!(
            FeatureManifest::generate(6),
            Err(FeatureError::UnsupportedRounds(6))
        ));
    }

    #[test]
    fn manifest_serde_round_trips() {
        let m = FeatureManifest::generate(2).unwrap();
        let json = serde_json::to_string(&m).unwrap();
        let back: FeatureManifest = serde_json::from_str(&json).unwrap();
        assert_eq!(back, m);
    }
}
