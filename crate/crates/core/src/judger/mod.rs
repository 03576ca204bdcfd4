//! The Entropy Judger: feature standardization, a probability-averaged pair
//! of gradient-boosted forests with contrasting growth policies, stratified
//! cross-validation, exact tree attributions, importance metrics, and
//! label-free pass@k candidate selection.

pub mod gbdt;
mod shap;

pub use gbdt::{ClassWeighting, GbdtConfig, GbdtModel, GrowthPolicy, Tree, TreeNode};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::features::FeatureRow;
use crate::stats;
use crate::Scalar;

/// Bump when the serialized model layout changes shape.
pub const MODEL_FORMAT_VERSION: u32 = 1;

/// Features with training-fold std below this are emitted as constant zero.
const DEGENERATE_STD: Scalar = 1e-12;

#[derive(Debug, Error)]
pub enum JudgerError {
    #[error("matrix has no rows or no columns")]
    EmptyMatrix,
    #[error("labels contain a single class; nothing to separate")]
    DegenerateLabels,
    #[error("matrix contains a non-finite value")]
    NonFiniteInput,
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("stratified {folds}-fold split needs ≥ {folds} rows of each class, got {count}")]
    TooFewSamples { folds: usize, count: usize },
    #[error("fold count {0} is not usable; need at least 2")]
    InvalidFolds(usize),
    #[error("candidate list is empty")]
    EmptyCandidates,
}

/// Per-feature location/scale learned on a training fold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<Scalar>,
    pub std: Vec<Scalar>,
}

impl Standardizer {
    pub fn dimension(&self) -> usize {
        self.mean.len()
    }

    /// Transforms one row. Degenerate features and non-finite cells (the
    /// absent-value encoding) map to 0 — "imputed with zero" post-transform.
    pub fn apply_row(&self, row: &[Scalar]) -> Result<Vec<Scalar>, JudgerError> {
        if row.len() != self.mean.len() {
            return Err(JudgerError::DimensionMismatch {
                expected: self.mean.len(),
                actual: row.len(),
            });
        }
        Ok(row
            .iter()
            .enumerate()
            .map(|(j, &v)| {
                if !v.is_finite() || self.std[j] < DEGENERATE_STD {
                    0.0
                } else {
                    (v - self.mean[j]) / self.std[j]
                }
            })
            .collect())
    }
}

/// Learns per-feature mean and population std, skipping non-finite cells.
pub fn standardize_fit(x: &[Vec<Scalar>]) -> Result<Standardizer, JudgerError> {
    if x.is_empty() || x[0].is_empty() {
        return Err(JudgerError::EmptyMatrix);
    }
    let d = x[0].len();
    for row in x {
        if row.len() != d {
            return Err(JudgerError::DimensionMismatch {
                expected: d,
                actual: row.len(),
            });
        }
    }
    let mut mean = vec![0.0; d];
    let mut count = vec![0usize; d];
    for row in x {
        for (j, &v) in row.iter().enumerate() {
            if v.is_finite() {
                mean[j] += v;
                count[j] += 1;
            }
        }
    }
    for j in 0..d {
        mean[j] = if count[j] > 0 {
            mean[j] / count[j] as Scalar
        } else {
            0.0
        };
    }
    let mut var = vec![0.0; d];
    for row in x {
        for (j, &v) in row.iter().enumerate() {
            if v.is_finite() {
                let delta = v - mean[j];
                var[j] += delta * delta;
            }
        }
    }
    let std = var
        .iter()
        .zip(&count)
        .map(|(&ss, &c)| {
            if c > 0 {
                (ss / c as Scalar).sqrt()
            } else {
                0.0
            }
        })
        .collect();
    Ok(Standardizer { mean, std })
}

pub fn standardize_apply(
    s: &Standardizer,
    x: &[Vec<Scalar>],
) -> Result<Vec<Vec<Scalar>>, JudgerError> {
    x.iter().map(|row| s.apply_row(row)).collect()
}

/// The deployed judger: one standardizer feeding both forests.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleModel {
    pub format_version: u32,
    pub manifest_version: String,
    pub group: String,
    pub standardizer: Standardizer,
    pub model_a: GbdtModel,
    pub model_b: GbdtModel,
}

/// Trains the level-wise/leaf-wise pair on one (raw) matrix. The sub-models
/// share the standardized input and train concurrently; their subsampling
/// streams derive from `seed` and `seed + 1`.
pub fn train_ensemble(
    x: &[Vec<Scalar>],
    y: &[bool],
    group: &str,
    manifest_version: &str,
    seed: u64,
) -> Result<EnsembleModel, JudgerError> {
    let standardizer = standardize_fit(x)?;
    let xs = standardize_apply(&standardizer, x)?;
    let config_a = GbdtConfig::level_wise(seed);
    let config_b = GbdtConfig::leaf_wise(seed.wrapping_add(1));
    let (res_a, res_b) = std::thread::scope(|scope| {
        let handle = scope.spawn(|| gbdt::train_gbdt(&xs, y, &config_b));
        let a = gbdt::train_gbdt(&xs, y, &config_a);
        (a, handle.join().expect("training thread panicked"))
    });
    Ok(EnsembleModel {
        format_version: MODEL_FORMAT_VERSION,
        manifest_version: manifest_version.to_string(),
        group: group.to_string(),
        standardizer,
        model_a: res_a?,
        model_b: res_b?,
    })
}

/// Mean of the two sub-models' predicted probabilities for one raw row.
pub fn ensemble_predict(model: &EnsembleModel, x: &[Scalar]) -> Result<Scalar, JudgerError> {
    let xs = model.standardizer.apply_row(x)?;
    Ok(0.5 * (model.model_a.predict_proba(&xs) + model.model_b.predict_proba(&xs)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub folds: usize,
    pub seed: u64,
    pub fold_accuracies: Vec<Scalar>,
    pub mean_accuracy: Scalar,
    pub std_accuracy: Scalar,
}

/// Stratified fold ids: each class's rows are shuffled once, then dealt
/// round-robin, so fold class ratios match the population within one sample.
fn stratified_folds(y: &[bool], folds: usize, seed: u64) -> Result<Vec<usize>, JudgerError> {
    if folds < 2 {
        return Err(JudgerError::InvalidFolds(folds));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut assignment = vec![0usize; y.len()];
    for class in [false, true] {
        let mut idx: Vec<usize> = (0..y.len()).filter(|&i| y[i] == class).collect();
        if idx.len() < folds {
            return Err(JudgerError::TooFewSamples {
                folds,
                count: idx.len(),
            });
        }
        for i in (1..idx.len()).rev() {
            let j = rng.gen_range(0..=i);
            idx.swap(i, j);
        }
        for (pos, &row) in idx.iter().enumerate() {
            assignment[row] = pos % folds;
        }
    }
    Ok(assignment)
}

/// Stratified k-fold accuracy of the full ensemble at threshold 0.5, with the
/// standardizer refit on every training split.
pub fn cross_validate(
    x: &[Vec<Scalar>],
    y: &[bool],
    folds: usize,
    seed: u64,
) -> Result<CvReport, JudgerError> {
    if x.is_empty() {
        return Err(JudgerError::EmptyMatrix);
    }
    let assignment = stratified_folds(y, folds, seed)?;
    let mut fold_accuracies = Vec::with_capacity(folds);
    for fold in 0..folds {
        let train_rows: Vec<usize> = (0..y.len()).filter(|&i| assignment[i] != fold).collect();
        let test_rows: Vec<usize> = (0..y.len()).filter(|&i| assignment[i] == fold).collect();
        let train_x: Vec<Vec<Scalar>> = train_rows.iter().map(|&i| x[i].clone()).collect();
        let train_y: Vec<bool> = train_rows.iter().map(|&i| y[i]).collect();
        let fold_seed = seed.wrapping_add(1000 * fold as u64);
        let model = train_ensemble(&train_x, &train_y, "cv", "cv", fold_seed)?;
        let hits = test_rows
            .iter()
            .filter(|&&i| {
                let p = ensemble_predict(&model, &x[i]).expect("dimensions fixed above");
                (p >= 0.5) == y[i]
            })
            .count();
        fold_accuracies.push(hits as Scalar / test_rows.len() as Scalar);
    }
    let mean = fold_accuracies.iter().sum::<Scalar>() / folds as Scalar;
    let var = fold_accuracies
        .iter()
        .map(|a| (a - mean) * (a - mean))
        .sum::<Scalar>()
        / folds as Scalar;
    Ok(CvReport {
        folds,
        seed,
        fold_accuracies,
        mean_accuracy: mean,
        std_accuracy: var.sqrt(),
    })
}

/// Per-feature contributions for one standardized input under one sub-model.
#[derive(Debug, Clone, PartialEq)]
pub struct AttributionVector {
    pub contributions: Vec<Scalar>,
    pub base_value: Scalar,
}

/// Exact per-feature attributions of `model` for standardized input `x`.
/// `base_value + Σ contributions` reproduces the raw margin.
pub fn tree_attributions(
    model: &GbdtModel,
    x: &[Scalar],
) -> Result<AttributionVector, JudgerError> {
    if x.len() != model.n_features {
        return Err(JudgerError::DimensionMismatch {
            expected: model.n_features,
            actual: x.len(),
        });
    }
    let mut contributions = vec![0.0; model.n_features];
    let mut base_value = model.base_score;
    for tree in &model.trees {
        shap::accumulate_tree_shap(tree, x, &mut contributions);
        base_value += tree.expected_value();
    }
    Ok(AttributionVector {
        contributions,
        base_value,
    })
}

/// Per-feature (Ī_j, ρ_j): the min-max-normalized split gain averaged over
/// the two sub-models, and the mean Pearson correlation between a feature's
/// standardized values and its attributions.
pub fn importance_metrics(
    model: &EnsembleModel,
    x: &[Vec<Scalar>],
) -> Result<Vec<(Scalar, Scalar)>, JudgerError> {
    if x.is_empty() {
        return Err(JudgerError::EmptyMatrix);
    }
    let xs = standardize_apply(&model.standardizer, x)?;
    let d = model.standardizer.dimension();

    let minmax = |gains: &[Scalar]| -> Vec<Scalar> {
        let lo = gains.iter().copied().fold(Scalar::INFINITY, Scalar::min);
        let hi = gains
            .iter()
            .copied()
            .fold(Scalar::NEG_INFINITY, Scalar::max);
        if hi - lo < DEGENERATE_STD {
            return vec![0.0; gains.len()];
        }
        gains.iter().map(|g| (g - lo) / (hi - lo)).collect()
    };
    let norm_a = minmax(&model.model_a.feature_gain);
    let norm_b = minmax(&model.model_b.feature_gain);

    let mut result = Vec::with_capacity(d);
    let mut phi_a = vec![vec![0.0; xs.len()]; d];
    let mut phi_b = vec![vec![0.0; xs.len()]; d];
    for (i, row) in xs.iter().enumerate() {
        let a = tree_attributions(&model.model_a, row)?;
        let b = tree_attributions(&model.model_b, row)?;
        for j in 0..d {
            phi_a[j][i] = a.contributions[j];
            phi_b[j][i] = b.contributions[j];
        }
    }
    for j in 0..d {
        let column: Vec<Scalar> = xs.iter().map(|row| row[j]).collect();
        let rho_a = stats::pearson(&column, &phi_a[j]);
        let rho_b = stats::pearson(&column, &phi_b[j]);
        result.push((0.5 * (norm_a[j] + norm_b[j]), 0.5 * (rho_a + rho_b)));
    }
    Ok(result)
}

/// Label-free pass@k: predicts every candidate and returns the argmax index
/// (ties break to the lowest index) with all probabilities.
pub fn pass_at_k_select(
    model: &EnsembleModel,
    candidates: &[FeatureRow],
) -> Result<(usize, Vec<Scalar>), JudgerError> {
    if candidates.is_empty() {
        return Err(JudgerError::EmptyCandidates);
    }
    let probabilities: Vec<Scalar> = candidates
        .iter()
        .map(|row| ensemble_predict(model, &row.values))
        .collect::<Result<_, _>>()?;
    let mut best = 0usize;
    for (i, &p) in probabilities.iter().enumerate().skip(1) {
        if p > probabilities[best] {
            best = i;
        }
    }
    Ok((best, probabilities))
}

#[cfg(test)]
mod tests {
    use super::*;
    use gbdt::sigmoid;

    fn separable(n: usize, d: usize, seed: u64) -> (Vec<Vec<Scalar>>, Vec<bool>) {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let mut x = Vec::with_capacity(n);
        let mut y = Vec::with_capacity(n);
        for _ in 0..n {
            let mut row: Vec<Scalar> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let label = rng.gen_bool(0.5);
            let shift = if label { 1.0 } else { -1.0 };
            row[0] = shift + rng.gen_range(-0.4..0.4);
            row[1] = shift + rng.gen_range(-0.4..0.4);
            x.push(row);
            y.push(label);
        }
        (x, y)
    }

    /// A margin-only model: no trees, fixed base score.
    fn constant_model(margin: Scalar, d: usize) -> GbdtModel {
        GbdtModel {
            growth_policy: GrowthPolicy::LevelWise,
            trees: Vec::new(),
            learning_rate: 0.1,
            base_score: margin,
            feature_gain: vec![0.0; d],
            n_features: d,
            config: GbdtConfig::level_wise(0),
        }
    }

    fn identity_standardizer(d: usize) -> Standardizer {
        Standardizer {
            mean: vec![0.0; d],
            std: vec![1.0; d],
        }
    }

    fn wrap(a: GbdtModel, b: GbdtModel) -> EnsembleModel {
        let d = a.n_features;
        EnsembleModel {
            format_version: MODEL_FORMAT_VERSION,
            manifest_version: "v1-r2".to_string(),
            group: "mas_only".to_string(),
            standardizer: identity_standardizer(d),
            model_a: a,
            model_b: b,
        }
    }

    #[test]
    fn standardizer_hand_examples() {
        let s = standardize_fit(&[vec![2.0, 0.0], vec![2.0, 2.0], vec![2.0, 1.0]]).unwrap();
        let out = standardize_apply(&s, &[vec![2.0, 0.0], vec![2.0, 2.0]]).unwrap();
        // Constant column zero-fills; [0,2,1] has μ=1, population σ=√(2/3).
        assert_eq!(out[0][0], 0.0);
        assert_eq!(out[1][0], 0.0);
        let sigma = (2.0f64 / 3.0).sqrt();
        assert!((out[0][1] - (-1.0 / sigma)).abs() < 1e-12);
        assert!((out[1][1] - (1.0 / sigma)).abs() < 1e-12);

        let two = standardize_fit(&[vec![0.0], vec![2.0]]).unwrap();
        let out = standardize_apply(&two, &[vec![0.0], vec![2.0]]).unwrap();
        assert_eq!(out, vec![vec![-1.0], vec![1.0]]);
    }

    #[test]
    fn missing_cells_impute_to_zero() {
        let s = standardize_fit(&[vec![0.0], vec![2.0], vec![Scalar::NAN]]).unwrap();
        // The NaN cell is excluded from μ/σ and transforms to 0.
        assert_eq!(s.mean, vec![1.0]);
        let out = standardize_apply(&s, &[vec![Scalar::NAN]]).unwrap();
        assert_eq!(out[0][0], 0.0);
    }

    #[test]
    fn standardized_training_data_has_zero_mean_unit_std() {
        let (x, _) = separable(64, 5, 17);
        let s = standardize_fit(&x).unwrap();
        let xs = standardize_apply(&s, &x).unwrap();
        for j in 0..5 {
            let column: Vec<Scalar> = xs.iter().map(|r| r[j]).collect();
            let mean = column.iter().sum::<Scalar>() / column.len() as Scalar;
            let var = column
                .iter()
                .map(|v| (v - mean) * (v - mean))
                .sum::<Scalar>()
                / column.len() as Scalar;
            assert!(mean.abs() < 1e-9);
            assert!((var.sqrt() - 1.0).abs() < 1e-9);
        }
        // Idempotence: refitting on standardized data changes nothing.
        let s2 = standardize_fit(&xs).unwrap();
        let xss = standardize_apply(&s2, &xs).unwrap();
        for (a, b) in xs.iter().flatten().zip(xss.iter().flatten()) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn ensemble_prediction_averages_probabilities() {
        // Margin 0 on both sides → 0.5.
        let even = wrap(constant_model(0.0, 2), constant_model(0.0, 2));
        assert_eq!(ensemble_predict(&even, &[5.0, -3.0]).unwrap(), 0.5);

        // Sub-model probabilities 0.2 and 0.8 → 0.5.
        let p2 = (0.2f64 / 0.8).ln();
        let p8 = (0.8f64 / 0.2).ln();
        let mixed = wrap(constant_model(p2, 2), constant_model(p8, 2));
        assert!((ensemble_predict(&mixed, &[0.0, 0.0]).unwrap() - 0.5).abs() < 1e-12);
        assert!((sigmoid(p2) - 0.2).abs() < 1e-12);

        assert!(matches!(
            ensemble_predict(&even, &[1.0]),
            Err(JudgerError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn trained_ensemble_separates_and_stays_in_unit_interval() {
        let (x, y) = separable(240, 6, 5);
        let model = train_ensemble(&x[..200], &y[..200], "mas_only", "v1-r2", 33).unwrap();
        let mut hits = 0;
        for (row, &label) in x[200..].iter().zip(&y[200..]) {
            let p = ensemble_predict(&model, row).unwrap();
            assert!((0.0..=1.0).contains(&p));
            if (p >= 0.5) == label {
                hits += 1;
            }
        }
        assert!(hits >= 38, "held-out hits {hits}/40");
    }

    #[test]
    fn ensemble_training_is_byte_deterministic() {
        let (x, y) = separable(120, 5, 29);
        let a = train_ensemble(&x, &y, "mas_only", "v1-r2", 7).unwrap();
        let b = train_ensemble(&x, &y, "mas_only", "v1-r2", 7).unwrap();
        assert_eq!(
            serde_json::to_vec(&a).unwrap(),
            serde_json::to_vec(&b).unwrap()
        );
    }

    #[test]
    fn cross_validation_stratifies_and_is_seeded() {
        let y: Vec<bool> = (0..100).map(|i| i < 60).collect();
        let a = stratified_folds(&y, 5, 42).unwrap();
        let b = stratified_folds(&y, 5, 42).unwrap();
        assert_eq!(a, b);
        for fold in 0..5 {
            let rows: Vec<usize> = (0..100).filter(|&i| a[i] == fold).collect();
            assert_eq!(rows.len(), 20);
            let pos = rows.iter().filter(|&&i| y[i]).count();
            assert_eq!(pos, 12, "fold {fold} class balance");
        }
        assert_ne!(a, stratified_folds(&y, 5, 43).unwrap());
    }

    #[test]
    fn cross_validation_scores_a_separable_task() {
        let (x, y) = separable(300, 5, 13);
        let report = cross_validate(&x, &y, 5, 99).unwrap();
        assert_eq!(report.fold_accuracies.len(), 5);
        assert!(
            report.mean_accuracy >= 0.95,
            "mean {}",
            report.mean_accuracy
        );
        assert!(report.std_accuracy < 0.05, "std {}", report.std_accuracy);
    }

    #[test]
    fn cross_validation_input_guards() {
        let (x, y) = separable(30, 4, 1);
        assert!(matches!(
            cross_validate(&x, &y, 1, 0),
            Err(JudgerError::InvalidFolds(1))
        ));
        let mut tiny_y = y.clone();
        for label in tiny_y.iter_mut().skip(3) {
            *label = false;
        }
        // Fewer positive rows than folds.
        assert!(matches!(
            cross_validate(&x, &tiny_y, 5, 0),
            Err(JudgerError::TooFewSamples { .. })
        ));
    }

    #[test]
    fn attribution_zero_trees_and_local_accuracy() {
        let model = constant_model(1.25, 3);
        let a = tree_attributions(&model, &[0.0, 0.0, 0.0]).unwrap();
        assert_eq!(a.contributions, vec![0.0, 0.0, 0.0]);
        assert_eq!(a.base_value, 1.25);

        let (x, y) = separable(200, 6, 31);
        let ensemble = train_ensemble(&x, &y, "g", "v", 3).unwrap();
        let xs = standardize_apply(&ensemble.standardizer, &x).unwrap();
        for model in [&ensemble.model_a, &ensemble.model_b] {
            for row in xs.iter().take(100) {
                let attribution = tree_attributions(model, row).unwrap();
                let replayed =
                    attribution.base_value + attribution.contributions.iter().sum::<Scalar>();
                let margin = model.margin(row);
                assert!(
                    (replayed - margin).abs() < 1e-6,
                    "local accuracy: {replayed} vs {margin}"
                );
            }
        }
    }

    #[test]
    fn importance_ranks_the_informative_feature() {
        // Label depends only on the sign of x0: 1[x0 < 0].
        let mut rng = ChaCha20Rng::seed_from_u64(77);
        let x: Vec<Vec<Scalar>> = (0..300)
            .map(|_| (0..5).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect();
        let y: Vec<bool> = x.iter().map(|row| row[0] < 0.0).collect();
        let model = train_ensemble(&x, &y, "g", "v", 55).unwrap();
        let metrics = importance_metrics(&model, &x).unwrap();
        assert!((metrics[0].0 - 1.0).abs() < 1e-12, "Ī_0 = {}", metrics[0].0);
        assert!(metrics[0].1 < -0.5, "ρ_0 = {}", metrics[0].1);
        for j in 1..5 {
            assert!(metrics[j].0 < metrics[0].0);
        }
    }

    #[test]
    fn importance_min_max_floor_and_ceiling() {
        // Hand-set split gains: feature 0 dominates both models, feature 2 is
        // never used by either, so Ī lands exactly on the [0, 1] endpoints.
        let mut a = constant_model(0.0, 3);
        a.feature_gain = vec![5.0, 3.0, 0.0];
        let mut b = constant_model(0.0, 3);
        b.feature_gain = vec![7.0, 1.0, 0.0];
        let model = wrap(a, b);
        let metrics =
            importance_metrics(&model, &[vec![1.0, 2.0, 3.0], vec![0.0, 1.0, 2.0]]).unwrap();
        assert_eq!(metrics[0].0, 1.0);
        assert_eq!(metrics[2].0, 0.0);
        // No trees → all attributions constant zero → every ρ_j is 0.
        assert!(metrics.iter().all(|&(_, rho)| rho == 0.0));
    }

    #[test]
    fn pass_at_k_argmax_and_ties() {
        let row = |values: Vec<Scalar>| FeatureRow {
            run_id: "r".to_string(),
            problem_id: "p".to_string(),
            values,
            label: false,
        };
        let (x, y) = separable(200, 4, 3);
        let model = train_ensemble(&x, &y, "g", "v", 12).unwrap();

        let single = pass_at_k_select(&model, &[row(x[0].clone())]).unwrap();
        assert_eq!(single.0, 0);

        // Identical candidates tie; the lowest index wins.
        let (idx, probabilities) =
            pass_at_k_select(&model, &[row(x[0].clone()), row(x[0].clone())]).unwrap();
        assert_eq!(idx, 0);
        assert_eq!(probabilities[0], probabilities[1]);

        assert!(matches!(
            pass_at_k_select(&model, &[]),
            Err(JudgerError::EmptyCandidates)
        ));
    }

    #[test]
    fn argmax_is_invariant_under_shared_margin_transforms() {
        let (x, y) = separable(200, 4, 19);
        let model = train_ensemble(&x, &y, "g", "v", 23).unwrap();
        let rows: Vec<FeatureRow> = x[..6]
            .iter()
            .map(|v| FeatureRow {
                run_id: "r".to_string(),
                problem_id: "p".to_string(),
                values: v.clone(),
                label: false,
            })
            .collect();
        let (baseline, _) = pass_at_k_select(&model, &rows).unwrap();

        // Shift both margins by +2 and scale by ×3: sigmoid stays monotone in
        // the margin, so the winner cannot move.
        for (shift, scale) in [(2.0, 1.0), (0.0, 3.0), (-1.5, 0.25)] {
            let mut warped = model.clone();
            for m in [&mut warped.model_a, &mut warped.model_b] {
                m.base_score = m.base_score * scale + shift;
                for tree in &mut m.trees {
                    for node in &mut tree.nodes {
                        if node.is_leaf {
                            node.value *= scale;
                        }
                    }
                }
            }
            let (warped_choice, _) = pass_at_k_select(&warped, &rows).unwrap();
            assert_eq!(warped_choice, baseline, "shift {shift} scale {scale}");
        }
    }
}
