//! Calibration, the three-condition causal decomposition, and the shared
//! statistical tests. Everything here is a pure function over materialized
//! vectors; the test fixtures are frozen against an independent reference
//! implementation.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};
use thiserror::Error;

use crate::trace::{Architecture, SampleTrace};
use crate::Scalar;

pub use crate::stats::pearson;

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("entropy {0} is negative")]
    NegativeEntropy(Scalar),
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("input is empty")]
    EmptyInput,
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("no single-agent trace covers problem {problem_id}")]
    UnpairedSample { problem_id: String },
    #[error("need ≥ 6 nonzero differences, got {nonzero}")]
    TooFewNonzero { nonzero: usize },
    #[error("differences have zero variance")]
    ZeroVariance,
    #[error("both discordant counts are zero")]
    Degenerate,
}

/// Confidence from mean trajectory entropy: conf = 1/(1+H) ∈ (0, 1].
pub fn entropy_to_confidence(h: Scalar) -> Result<Scalar, AnalysisError> {
    if h < 0.0 {
        return Err(AnalysisError::NegativeEntropy(h));
    }
    Ok(1.0 / (1.0 + h))
}

/// One equal-width calibration bin over [lo, hi).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReliabilityBin {
    pub index: usize,
    pub lo: Scalar,
    pub hi: Scalar,
    pub count: usize,
    pub mean_confidence: Scalar,
    pub accuracy: Scalar,
}

/// Expected calibration error over `bins` equal-width bins (right-open, the
/// last closed at 1): Σ_b (n_b/N)·|acc(b) − conf(b)|.
pub fn ece(
    confidences: &[Scalar],
    correct: &[bool],
    bins: usize,
) -> Result<(Scalar, Vec<ReliabilityBin>), AnalysisError> {
    if confidences.len() != correct.len() {
        return Err(AnalysisError::LengthMismatch {
            left: confidences.len(),
            right: correct.len(),
        });
    }
    if confidences.is_empty() {
        return Err(AnalysisError::EmptyInput);
    }
    if bins == 0 {
        return Err(AnalysisError::InvalidInput("bin count must be ≥ 1".into()));
    }
    for &c in confidences {
        if !(0.0..=1.0).contains(&c) {
            return Err(AnalysisError::InvalidInput(format!(
                "confidence {c} outside [0, 1]"
            )));
        }
    }

    let mut count = vec![0usize; bins];
    let mut conf_sum = vec![0.0; bins];
    let mut hits = vec![0usize; bins];
    for (&c, &ok) in confidences.iter().zip(correct) {
        let b = ((c * bins as Scalar).floor() as usize).min(bins - 1);
        count[b] += 1;
        conf_sum[b] += c;
        hits[b] += ok as usize;
    }

    let n = confidences.len() as Scalar;
    let mut value = 0.0;
    let mut table = Vec::with_capacity(bins);
    for b in 0..bins {
        let (mean_confidence, accuracy) = if count[b] > 0 {
            (
                conf_sum[b] / count[b] as Scalar,
                hits[b] as Scalar / count[b] as Scalar,
            )
        } else {
            (0.0, 0.0)
        };
        value += count[b] as Scalar / n * (accuracy - mean_confidence).abs();
        table.push(ReliabilityBin {
            index: b,
            lo: b as Scalar / bins as Scalar,
            hi: (b + 1) as Scalar / bins as Scalar,
            count: count[b],
            mean_confidence,
            accuracy,
        });
    }
    Ok((value, table))
}

/// One sample across the three entropy conditions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CausalInput {
    pub sample_key: String,
    /// Mean per-token entropy of the single-agent run.
    pub h_sas: Scalar,
    /// Mean per-token entropy of the system's round 1.
    pub h_r1: Scalar,
    /// Mean per-token entropy of the system's round 2.
    pub h_r2: Scalar,
    pub sas_correct: bool,
    pub mas_correct: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CausalRecord {
    pub sample_key: String,
    pub h_sas: Scalar,
    pub h_r1: Scalar,
    pub h_r2: Scalar,
    pub role_effect: Scalar,
    pub interaction_effect: Scalar,
    pub total_effect: Scalar,
    /// mas_correct − sas_correct ∈ {−1, 0, +1}.
    pub delta_acc: i32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CausalSummary {
    pub records: Vec<CausalRecord>,
    pub mean_role_effect: Scalar,
    pub mean_interaction_effect: Scalar,
    pub mean_total_effect: Scalar,
    /// Fraction of samples whose interaction effect is strictly negative.
    pub frac_interaction_negative: Scalar,
}

/// Splits each sample's entropy change into the role-assignment effect
/// (H_R1 − H_SAS) and the interaction effect (H_R2 − H_R1); their sum is the
/// total effect by construction.
pub fn causal_decompose(inputs: &[CausalInput]) -> Result<CausalSummary, AnalysisError> {
    if inputs.is_empty() {
        return Err(AnalysisError::EmptyInput);
    }
    let records: Vec<CausalRecord> = inputs
        .iter()
        .map(|s| {
            let role_effect = s.h_r1 - s.h_sas;
            let interaction_effect = s.h_r2 - s.h_r1;
            CausalRecord {
                sample_key: s.sample_key.clone(),
                h_sas: s.h_sas,
                h_r1: s.h_r1,
                h_r2: s.h_r2,
                role_effect,
                interaction_effect,
                total_effect: role_effect + interaction_effect,
                delta_acc: s.mas_correct as i32 - s.sas_correct as i32,
            }
        })
        .collect();
    let n = records.len() as Scalar;
    let mean = |f: fn(&CausalRecord) -> Scalar| records.iter().map(f).sum::<Scalar>() / n;
    Ok(CausalSummary {
        mean_role_effect: mean(|r| r.role_effect),
        mean_interaction_effect: mean(|r| r.interaction_effect),
        mean_total_effect: mean(|r| r.total_effect),
        frac_interaction_negative: records
            .iter()
            .filter(|r| r.interaction_effect < 0.0)
            .count() as Scalar
            / n,
        records,
    })
}

fn mean_round_entropy(trace: &SampleTrace, round: u32) -> Scalar {
    let mut sum = 0.0;
    let mut count = 0usize;
    for t in trace.trajectories.iter().filter(|t| t.round == round) {
        for tok in &t.tokens {
            sum += tok.entropy;
            count += 1;
        }
    }
    if count == 0 {
        0.0
    } else {
        sum / count as Scalar
    }
}

fn mean_trace_entropy(trace: &SampleTrace) -> Scalar {
    let mut sum = 0.0;
    let mut count = 0usize;
    for t in &trace.trajectories {
        for tok in &t.tokens {
            sum += tok.entropy;
            count += 1;
        }
    }
    if count == 0 {
        0.0
    } else {
        sum / count as Scalar
    }
}

/// Builds the three-condition inputs by pairing each multi-round trace with
/// the single-agent trace of the same problem.
pub fn causal_from_traces(
    mas: &[SampleTrace],
    sas: &[SampleTrace],
) -> Result<Vec<CausalInput>, AnalysisError> {
    let mut by_problem = std::collections::HashMap::new();
    for s in sas {
        if s.architecture != Architecture::Single || s.rounds != 1 {
            return Err(AnalysisError::InvalidInput(format!(
                "baseline trace {}/{} is not a single-agent one-round run",
                s.run_id, s.problem_id
            )));
        }
        by_problem.entry(s.problem_id.as_str()).or_insert(s);
    }
    mas.iter()
        .map(|m| {
            if m.rounds < 2 {
                return Err(AnalysisError::InvalidInput(format!(
                    "trace {}/{} has {} round(s); the decomposition needs two",
                    m.run_id, m.problem_id, m.rounds
                )));
            }
            let base = by_problem.get(m.problem_id.as_str()).ok_or_else(|| {
                AnalysisError::UnpairedSample {
                    problem_id: m.problem_id.clone(),
                }
            })?;
            Ok(CausalInput {
                sample_key: format!("{}/{}", m.run_id, m.problem_id),
                h_sas: mean_trace_entropy(base),
                h_r1: mean_round_entropy(m, 1),
                h_r2: mean_round_entropy(m, 2),
                sas_correct: base.is_finally_correct,
                mas_correct: m.is_finally_correct,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Quadrant {
    GenuineImprovement,
    PossibleAnchoring,
    ProductiveExploration,
    Deterioration,
}

impl Quadrant {
    pub fn name(self) -> &'static str {
        match self {
            Quadrant::GenuineImprovement => "genuine_improvement",
            Quadrant::PossibleAnchoring => "possible_anchoring",
            Quadrant::ProductiveExploration => "productive_exploration",
            Quadrant::Deterioration => "deterioration",
        }
    }
}

/// Entropy-change × accuracy-change quadrants. ΔH = 0 is grouped with the
/// decreases, so every sample lands in exactly one cell.
pub fn quadrant_classify(delta_h: Scalar, delta_acc: i32) -> Quadrant {
    match (delta_h <= 0.0, delta_acc > 0) {
        (true, true) => Quadrant::GenuineImprovement,
        (true, false) => Quadrant::PossibleAnchoring,
        (false, true) => Quadrant::ProductiveExploration,
        (false, false) => Quadrant::Deterioration,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct QuadrantCounts {
    pub genuine_improvement: usize,
    pub possible_anchoring: usize,
    pub productive_exploration: usize,
    pub deterioration: usize,
}

impl QuadrantCounts {
    pub fn total(&self) -> usize {
        self.genuine_improvement
            + self.possible_anchoring
            + self.productive_exploration
            + self.deterioration
    }
}

/// Tabulates decomposition records by (total entropy change, Δacc) quadrant.
pub fn quadrant_counts(records: &[CausalRecord]) -> QuadrantCounts {
    let mut counts = QuadrantCounts::default();
    for r in records {
        match quadrant_classify(r.total_effect, r.delta_acc) {
            Quadrant::GenuineImprovement => counts.genuine_improvement += 1,
            Quadrant::PossibleAnchoring => counts.possible_anchoring += 1,
            Quadrant::ProductiveExploration => counts.productive_exploration += 1,
            Quadrant::Deterioration => counts.deterioration += 1,
        }
    }
    counts
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfidentlyWrongCounts {
    pub low_correct: usize,
    /// Low entropy and graded incorrect — the "confidently wrong" cell.
    pub low_incorrect: usize,
    pub high_correct: usize,
    pub high_incorrect: usize,
}

impl ConfidentlyWrongCounts {
    pub fn total(&self) -> usize {
        self.low_correct + self.low_incorrect + self.high_correct + self.high_incorrect
    }
}

/// Splits samples at the median entropy (low = entropy ≤ median) crossed with
/// correctness.
pub fn confidently_wrong_split(
    entropies: &[Scalar],
    correct: &[bool],
) -> Result<ConfidentlyWrongCounts, AnalysisError> {
    if entropies.len() != correct.len() {
        return Err(AnalysisError::LengthMismatch {
            left: entropies.len(),
            right: correct.len(),
        });
    }
    if entropies.is_empty() {
        return Err(AnalysisError::EmptyInput);
    }
    let mut sorted = entropies.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite entropies"));
    let median = crate::stats::quantile_sorted(&sorted, 0.5);
    let mut counts = ConfidentlyWrongCounts::default();
    for (&h, &ok) in entropies.iter().zip(correct) {
        match (h <= median, ok) {
            (true, true) => counts.low_correct += 1,
            (true, false) => counts.low_incorrect += 1,
            (false, true) => counts.high_correct += 1,
            (false, false) => counts.high_incorrect += 1,
        }
    }
    Ok(counts)
}

/// Wilcoxon signed-rank test (two-sided). Zero differences are dropped, tied
/// absolute values get average ranks, and the p-value comes from the normal
/// approximation with continuity correction and tie-adjusted variance.
/// Returns (W⁺, p).
pub fn wilcoxon_signed_rank(diffs: &[Scalar]) -> Result<(Scalar, Scalar), AnalysisError> {
    let nonzero: Vec<Scalar> = diffs.iter().copied().filter(|&d| d != 0.0).collect();
    let n = nonzero.len();
    if n < 6 {
        return Err(AnalysisError::TooFewNonzero { nonzero: n });
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        nonzero[a]
            .abs()
            .partial_cmp(&nonzero[b].abs())
            .expect("finite differences")
    });
    let mut ranks = vec![0.0; n];
    let mut tie_term = 0.0;
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && nonzero[order[j + 1]].abs() == nonzero[order[i]].abs() {
            j += 1;
        }
        // Average rank for the run [i, j]; ranks are 1-based.
        let avg = (i + j) as Scalar / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            ranks[idx] = avg;
        }
        let t = (j - i + 1) as Scalar;
        tie_term += t * t * t - t;
        i = j + 1;
    }

    let w_plus: Scalar = (0..n).filter(|&i| nonzero[i] > 0.0).map(|i| ranks[i]).sum();
    let nf = n as Scalar;
    let mean = nf * (nf + 1.0) / 4.0;
    let variance = nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0 - tie_term / 48.0;
    if variance <= 0.0 {
        return Err(AnalysisError::ZeroVariance);
    }
    let d = w_plus - mean;
    // Continuity correction pulls the statistic half a rank toward the mean;
    // it vanishes when the statistic sits exactly on the mean.
    let correction = if d > 0.0 {
        0.5
    } else if d < 0.0 {
        -0.5
    } else {
        0.0
    };
    let z = (d - correction) / variance.sqrt();
    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    let p = (2.0 * normal.sf(z.abs())).min(1.0);
    Ok((w_plus, p))
}

/// Paired Cohen's d: mean over sample (N−1) standard deviation of the
/// difference scores.
pub fn cohens_d(diffs: &[Scalar]) -> Result<Scalar, AnalysisError> {
    if diffs.len() < 2 {
        return Err(AnalysisError::EmptyInput);
    }
    let n = diffs.len() as Scalar;
    let mean = diffs.iter().sum::<Scalar>() / n;
    let ss = diffs
        .iter()
        .map(|d| (d - mean) * (d - mean))
        .sum::<Scalar>();
    let std = (ss / (n - 1.0)).sqrt();
    if std < 1e-12 {
        return Err(AnalysisError::ZeroVariance);
    }
    Ok(mean / std)
}

/// McNemar's test with continuity correction over the discordant counts:
/// χ² = (|b01 − b10| − 1)²/(b01 + b10), p from χ²(1). Returns (statistic, p).
pub fn mcnemar(b01: usize, b10: usize) -> Result<(Scalar, Scalar), AnalysisError> {
    if b01 + b10 == 0 {
        return Err(AnalysisError::Degenerate);
    }
    let diff = (b01 as Scalar - b10 as Scalar).abs();
    let statistic = (diff - 1.0).powi(2) / (b01 + b10) as Scalar;
    let chi2 = ChiSquared::new(1.0).expect("one degree of freedom");
    let p = if statistic == 0.0 {
        1.0
    } else {
        chi2.sf(statistic)
    };
    Ok((statistic, p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trace::{TokenRecord, Trajectory};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha20Rng;

    fn assert_close(a: Scalar, b: Scalar, tol: Scalar) {
        assert!((a - b).abs() <= tol, "{a} vs {b} (tol {tol})");
    }

    #[test]
    fn confidence_formula() {
        assert_eq!(entropy_to_confidence(0.0).unwrap(), 1.0);
        assert_eq!(entropy_to_confidence(1.0).unwrap(), 0.5);
        assert_eq!(entropy_to_confidence(3.0).unwrap(), 0.25);
        assert!(matches!(
            entropy_to_confidence(-0.1),
            Err(AnalysisError::NegativeEntropy(_))
        ));
    }

    #[test]
    fn ece_hand_cases() {
        // Perfect calibration.
        let (v, bins) = ece(&[1.0, 1.0, 1.0], &[true, true, true], 10).unwrap();
        assert_eq!(v, 0.0);
        assert_eq!(bins.iter().map(|b| b.count).sum::<usize>(), 3);

        // Single bin, half right at full confidence.
        let (v, _) = ece(&[1.0; 4], &[true, true, false, false], 10).unwrap();
        assert_close(v, 0.5, 1e-12);

        // Two occupied bins: 0.5·|0 − 0.05| + 0.5·|0.75 − 0.95|.
        let confidences = [0.05, 0.05, 0.05, 0.05, 0.95, 0.95, 0.95, 0.95];
        let correct = [false, false, false, false, true, true, true, false];
        let (v, bins) = ece(&confidences, &correct, 10).unwrap();
        assert_close(v, 0.125, 1e-12);
        assert_eq!(bins[0].count, 4);
        assert_eq!(bins[9].count, 4);
        assert_close(bins[9].accuracy, 0.75, 1e-12);
    }

    #[test]
    fn ece_input_guards() {
        assert!(matches!(
            ece(&[0.5], &[true, false], 10),
            Err(AnalysisError::LengthMismatch { .. })
        ));
        assert!(matches!(ece(&[], &[], 10), Err(AnalysisError::EmptyInput)));
        assert!(matches!(
            ece(&[0.5], &[true], 0),
            Err(AnalysisError::InvalidInput(_))
        ));
        assert!(matches!(
            ece(&[1.5], &[true], 10),
            Err(AnalysisError::InvalidInput(_))
        ));
    }

    #[test]
    fn ece_calibrated_generator_is_small() {
        let mut rng = ChaCha20Rng::seed_from_u64(4242);
        let mut confidences = Vec::with_capacity(10_000);
        let mut correct = Vec::with_capacity(10_000);
        for _ in 0..10_000 {
            let c: Scalar = rng.gen_range(0.0..=1.0);
            confidences.push(c);
            correct.push(rng.gen_bool(c));
        }
        let (v, bins) = ece(&confidences, &correct, 10).unwrap();
        assert!(v < 0.02, "calibrated ECE {v}");
        assert_eq!(bins.iter().map(|b| b.count).sum::<usize>(), 10_000);
    }

    #[test]
    fn causal_examples() {
        let make = |h_sas, h_r1, h_r2| CausalInput {
            sample_key: "k".into(),
            h_sas,
            h_r1,
            h_r2,
            sas_correct: false,
            mas_correct: true,
        };
        let summary = causal_decompose(&[make(1.0, 1.0, 1.0)]).unwrap();
        let r = &summary.records[0];
        assert_eq!(
            (r.role_effect, r.interaction_effect, r.total_effect),
            (0.0, 0.0, 0.0)
        );
        assert_eq!(r.delta_acc, 1);

        let summary = causal_decompose(&[make(2.0, 3.0, 1.5)]).unwrap();
        let r = &summary.records[0];
        assert_eq!(r.role_effect, 1.0);
        assert_eq!(r.interaction_effect, -1.5);
        assert_eq!(r.total_effect, -0.5);
        assert_eq!(summary.frac_interaction_negative, 1.0);
    }

    #[test]
    fn quadrant_rules() {
        assert_eq!(quadrant_classify(-0.5, 1), Quadrant::GenuineImprovement);
        assert_eq!(quadrant_classify(-0.5, 0), Quadrant::PossibleAnchoring);
        assert_eq!(quadrant_classify(0.5, 0), Quadrant::Deterioration);
        assert_eq!(quadrant_classify(0.5, 1), Quadrant::ProductiveExploration);
        // The ΔH = 0 boundary joins the decrease half.
        assert_eq!(quadrant_classify(0.0, 1), Quadrant::GenuineImprovement);
        assert_eq!(quadrant_classify(0.0, -1), Quadrant::PossibleAnchoring);
    }

    #[test]
    fn confidently_wrong_examples() {
        let counts =
            confidently_wrong_split(&[1.0, 2.0, 3.0, 4.0], &[true, true, false, false]).unwrap();
        assert_eq!(counts.low_incorrect, 0);
        assert_eq!(counts.low_correct, 2);
        assert_eq!(counts.high_incorrect, 2);
        assert_eq!(counts.total(), 4);

        let all_right = confidently_wrong_split(&[1.0, 2.0], &[true, true]).unwrap();
        assert_eq!(all_right.low_incorrect + all_right.high_incorrect, 0);

        let single = confidently_wrong_split(&[0.7], &[false]).unwrap();
        assert_eq!(single.low_incorrect, 1);
        assert_eq!(single.total(), 1);
    }

    #[test]
    fn wilcoxon_reference_values() {
        // Frozen against an independent implementation of the two-sided
        // normal approximation with continuity correction.
        let diffs = [1.5, 2.0, -0.5, 3.0, 2.5, 1.0, 0.5, 2.0, 1.5, -1.0];
        let (w, p) = wilcoxon_signed_rank(&diffs).unwrap();
        assert_eq!(w, 50.0);
        assert_close(p, 0.024557387036904348, 1e-9);

        let (w, p) = wilcoxon_signed_rank(&[1.0; 10]).unwrap();
        assert_eq!(w, 55.0);
        assert_close(p, 0.0019041950430043904, 1e-9);

        let antisymmetric = [1.0, -1.0, 1.0, -1.0, 1.0, -1.0, 1.0, -1.0, 1.0, -1.0];
        let (_, p) = wilcoxon_signed_rank(&antisymmetric).unwrap();
        assert_eq!(p, 1.0);

        assert!(matches!(
            wilcoxon_signed_rank(&[0.0; 8]),
            Err(AnalysisError::TooFewNonzero { nonzero: 0 })
        ));
    }

    #[test]
    fn cohens_d_reference_value() {
        let diffs = [2.0, 1.0, 3.0, 2.5, 0.5, 1.5, 2.0, 1.0];
        assert_close(cohens_d(&diffs).unwrap(), 2.00294594356168, 1e-12);
        assert!(matches!(
            cohens_d(&[1.0, 1.0, 1.0, 1.0]),
            Err(AnalysisError::ZeroVariance)
        ));
    }

    #[test]
    fn mcnemar_reference_values() {
        let (s, p) = mcnemar(5, 5).unwrap();
        assert_close(s, 0.1, 1e-12);
        assert_close(p, 0.7518296340458492, 1e-9);

        let (s, p) = mcnemar(15, 5).unwrap();
        assert_close(s, 4.05, 1e-12);
        assert_close(p, 0.04417134490844271, 1e-9);

        let (s, p) = mcnemar(1, 0).unwrap();
        assert_eq!(s, 0.0);
        assert_eq!(p, 1.0);

        assert!(matches!(mcnemar(0, 0), Err(AnalysisError::Degenerate)));
    }

    #[test]
    fn pearson_reference_value() {
        let x = [0.5, 1.2, 1.9, 2.6, 3.1, 4.4, 5.0, 6.2];
        let y = [1.1, 2.3, 2.0, 3.9, 3.8, 5.6, 5.2, 7.0];
        assert_close(pearson(&x, &y), 0.9752276950178413, 1e-12);
        assert_close(pearson(&x, &x), 1.0, 1e-12);
    }

    fn trace_with(
        problem: &str,
        architecture: Architecture,
        rounds: u32,
        entropies_by_round: &[&[Scalar]],
        correct: bool,
    ) -> SampleTrace {
        let trajectories = entropies_by_round
            .iter()
            .enumerate()
            .map(|(i, hs)| Trajectory {
                agent_name: "A".into(),
                agent_index: 0,
                round: i as u32 + 1,
                tokens: hs
                    .iter()
                    .map(|&h| TokenRecord {
                        token_text: "x".into(),
                        entropy: h,
                        top_logprobs: None,
                        truncation_k: None,
                    })
                    .collect(),
                text: "t".into(),
                duration_ms: 1,
                prompt_chars: 1,
            })
            .collect();
        SampleTrace {
            run_id: "r".into(),
            problem_id: problem.into(),
            architecture,
            rounds,
            trajectories,
            final_text: String::new(),
            extracted_answer: None,
            is_finally_correct: correct,
            started_at: 0,
            finished_at: 1,
        }
    }

    #[test]
    fn causal_pairing_from_traces() {
        let sas = trace_with("p1", Architecture::Single, 1, &[&[2.0, 4.0]], true);
        let mas = trace_with(
            "p1",
            Architecture::Debate,
            2,
            &[&[3.0, 5.0], &[1.0, 2.0]],
            false,
        );
        let inputs =
            causal_from_traces(std::slice::from_ref(&mas), std::slice::from_ref(&sas)).unwrap();
        assert_eq!(inputs.len(), 1);
        assert_eq!(inputs[0].h_sas, 3.0);
        assert_eq!(inputs[0].h_r1, 4.0);
        assert_eq!(inputs[0].h_r2, 1.5);
        assert!(inputs[0].sas_correct);
        assert!(!inputs[0].mas_correct);

        let orphan = trace_with("p2", Architecture::Debate, 2, &[&[1.0], &[1.0]], true);
        assert!(matches!(
            causal_from_traces(&[orphan], std::slice::from_ref(&sas)),
            Err(AnalysisError::UnpairedSample { .. })
        ));

        let bad_base = trace_with("p1", Architecture::Debate, 2, &[&[1.0], &[1.0]], true);
        assert!(matches!(
            causal_from_traces(&[mas], &[bad_base]),
            Err(AnalysisError::InvalidInput(_))
        ));
    }

    proptest! {
        #[test]
        fn decomposition_identity_is_exact(
            triples in proptest::collection::vec((0.0f64..10.0, 0.0f64..10.0, 0.0f64..10.0), 1..50)
        ) {
            let inputs: Vec<CausalInput> = triples
                .iter()
                .enumerate()
                .map(|(i, &(s, r1, r2))| CausalInput {
                    sample_key: format!("s{i}"),
                    h_sas: s,
                    h_r1: r1,
                    h_r2: r2,
                    sas_correct: false,
                    mas_correct: false,
                })
                .collect();
            let summary = causal_decompose(&inputs).unwrap();
            for r in &summary.records {
                prop_assert_eq!(r.total_effect, r.role_effect + r.interaction_effect);
            }
            let counts = quadrant_counts(&summary.records);
            prop_assert_eq!(counts.total(), summary.records.len());
        }

        #[test]
        fn wilcoxon_p_is_scale_invariant(
            diffs in proptest::collection::vec(-5.0f64..5.0, 8..40),
            scale in 0.1f64..50.0,
        ) {
            prop_assume!(diffs.iter().filter(|&&d| d != 0.0).count() >= 6);
            let scaled: Vec<Scalar> = diffs.iter().map(|d| d * scale).collect();
            let (w_a, p_a) = wilcoxon_signed_rank(&diffs).unwrap();
            let (w_b, p_b) = wilcoxon_signed_rank(&scaled).unwrap();
            prop_assert_eq!(w_a, w_b);
            prop_assert!((p_a - p_b).abs() < 1e-12);
        }

        #[test]
        fn ece_is_invariant_under_permutation(
            pairs in proptest::collection::vec((0.0f64..=1.0, any::<bool>()), 1..60),
            seed in any::<u64>(),
        ) {
            let confidences: Vec<Scalar> = pairs.iter().map(|p| p.0).collect();
            let correct: Vec<bool> = pairs.iter().map(|p| p.1).collect();
            let (v, _) = ece(&confidences, &correct, 10).unwrap();
            prop_assert!((0.0..=1.0).contains(&v));

            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            let mut order: Vec<usize> = (0..pairs.len()).collect();
            for i in (1..order.len()).rev() {
                let j = rng.gen_range(0..=i);
                order.swap(i, j);
            }
            let shuffled_c: Vec<Scalar> = order.iter().map(|&i| confidences[i]).collect();
            let shuffled_k: Vec<bool> = order.iter().map(|&i| correct[i]).collect();
            let (v2, _) = ece(&shuffled_c, &shuffled_k, 10).unwrap();
            prop_assert!((v - v2).abs() < 1e-12);
        }
    }
}
