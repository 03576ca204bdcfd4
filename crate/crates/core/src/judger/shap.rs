//! Exact path-dependent tree attribution. For each tree the recursion tracks
//! every feature subset path from root to leaf, maintaining for each path
//! prefix the proportion of subsets that flow down it ("zero fraction", from
//! cover ratios) and whether the explained input follows it ("one fraction"),
//! so each leaf contributes its exact Shapley weight per feature. Summed over
//! trees plus the cover-weighted expectation, the result reproduces the raw
//! margin (local accuracy), which the tests assert to 1e−6.

use super::gbdt::Tree;
use crate::Scalar;

#[derive(Clone)]
struct PathElement {
    feature: isize,
    zero_fraction: Scalar,
    one_fraction: Scalar,
    pweight: Scalar,
}

/// Adds one tree's attributions for `x` into `phi`.
pub fn accumulate_tree_shap(tree: &Tree, x: &[Scalar], phi: &mut [Scalar]) {
    let path = Vec::with_capacity(16);
    recurse(tree, 0, x, phi, path, 1.0, 1.0, -1);
}

fn extend(path: &mut Vec<PathElement>, zero: Scalar, one: Scalar, feature: isize) {
    let l = path.len();
    path.push(PathElement {
        feature,
        zero_fraction: zero,
        one_fraction: one,
        pweight: if l == 0 { 1.0 } else { 0.0 },
    });
    for i in (0..l).rev() {
        path[i + 1].pweight += one * path[i].pweight * (i + 1) as Scalar / (l + 1) as Scalar;
        path[i].pweight = zero * path[i].pweight * (l - i) as Scalar / (l + 1) as Scalar;
    }
}

/// Removes element `i`, redistributing its weight over the shorter path.
fn unwind(path: &[PathElement], i: usize) -> Vec<PathElement> {
    let len = path.len();
    let last = len - 1;
    let one = path[i].one_fraction;
    let zero = path[i].zero_fraction;
    let mut out = path.to_vec();
    let mut n = out[last].pweight;
    if one != 0.0 {
        for j in (0..last).rev() {
            let t = out[j].pweight;
            out[j].pweight = n * len as Scalar / ((j + 1) as Scalar * one);
            n = t - out[j].pweight * zero * (last - j) as Scalar / len as Scalar;
        }
    } else {
        for j in (0..last).rev() {
            out[j].pweight = out[j].pweight * len as Scalar / (zero * (last - j) as Scalar);
        }
    }
    for j in i..last {
        out[j].feature = out[j + 1].feature;
        out[j].zero_fraction = out[j + 1].zero_fraction;
        out[j].one_fraction = out[j + 1].one_fraction;
    }
    out.truncate(last);
    out
}

fn unwound_weight_sum(path: &[PathElement], i: usize) -> Scalar {
    unwind(path, i).iter().map(|e| e.pweight).sum()
}

#[allow(clippy::too_many_arguments)]
fn recurse(
    tree: &Tree,
    node: usize,
    x: &[Scalar],
    phi: &mut [Scalar],
    mut path: Vec<PathElement>,
    zero: Scalar,
    one: Scalar,
    feature: isize,
) {
    extend(&mut path, zero, one, feature);
    let n = &tree.nodes[node];
    if n.is_leaf {
        for i in 1..path.len() {
            let w = unwound_weight_sum(&path, i);
            let e = &path[i];
            phi[e.feature as usize] += w * (e.one_fraction - e.zero_fraction) * n.value;
        }
        return;
    }

    let (hot, cold) = if x[n.feature] < n.threshold {
        (n.left, n.right)
    } else {
        (n.right, n.left)
    };
    let (mut incoming_zero, mut incoming_one) = (1.0, 1.0);
    if let Some(k) = path.iter().position(|e| e.feature == n.feature as isize) {
        incoming_zero = path[k].zero_fraction;
        incoming_one = path[k].one_fraction;
        path = unwind(&path, k);
    }
    let hot_ratio = tree.nodes[hot].cover / n.cover;
    let cold_ratio = tree.nodes[cold].cover / n.cover;
    recurse(
        tree,
        hot,
        x,
        phi,
        path.clone(),
        incoming_zero * hot_ratio,
        incoming_one,
        n.feature as isize,
    );
    recurse(
        tree,
        cold,
        x,
        phi,
        path,
        incoming_zero * cold_ratio,
        0.0,
        n.feature as isize,
    );
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::judger::gbdt::TreeNode;

    fn leaf(value: Scalar, cover: Scalar) -> TreeNode {
        TreeNode {
            feature: 0,
            threshold: 0.0,
            left: 0,
            right: 0,
            is_leaf: true,
            value,
            cover,
        }
    }

    fn split(
        feature: usize,
        threshold: Scalar,
        left: usize,
        right: usize,
        cover: Scalar,
    ) -> TreeNode {
        TreeNode {
            feature,
            threshold,
            left,
            right,
            is_leaf: false,
            value: 0.0,
            cover,
        }
    }

    #[test]
    fn stump_attribution_is_prediction_minus_expectation() {
        // Split on feature 1, covers 3 left / 1 right, leaf values 2 and 10.
        let tree = Tree {
            nodes: vec![split(1, 0.5, 1, 2, 4.0), leaf(2.0, 3.0), leaf(10.0, 1.0)],
        };
        let expected = (3.0 * 2.0 + 1.0 * 10.0) / 4.0;

        let mut phi = vec![0.0; 3];
        accumulate_tree_shap(&tree, &[0.0, 0.0, 0.0], &mut phi);
        assert!((phi[1] - (2.0 - expected)).abs() < 1e-12);
        assert_eq!(phi[0], 0.0);
        assert_eq!(phi[2], 0.0);

        let mut phi = vec![0.0; 3];
        accumulate_tree_shap(&tree, &[0.0, 0.9, 0.0], &mut phi);
        assert!((phi[1] - (10.0 - expected)).abs() < 1e-12);
    }

    #[test]
    fn two_feature_tree_splits_credit_between_features() {
        // f0 at the root (cover 4 → 2/2), f1 on the left branch (cover 2 → 1/1).
        let tree = Tree {
            nodes: vec![
                split(0, 0.0, 1, 2, 4.0),
                split(1, 0.0, 3, 4, 2.0),
                leaf(8.0, 2.0),
                leaf(0.0, 1.0),
                leaf(4.0, 1.0),
            ],
        };
        // x = [−1, −1] lands in the 0-valued leaf.
        let mut phi = vec![0.0; 2];
        accumulate_tree_shap(&tree, &[-1.0, -1.0], &mut phi);
        let expected_value = (2.0 * 8.0 + 1.0 * 0.0 + 1.0 * 4.0) / 4.0;
        let margin = 0.0;
        let local = expected_value + phi.iter().sum::<Scalar>();
        assert!((local - margin).abs() < 1e-9, "locality violated: {local}");
        // Hand-computed subset values: v(∅)=5, v({0})=2, v({1})=4, v({0,1})=0,
        // so φ0 = ½[(2−5)+(0−4)] = −3.5 and φ1 = ½[(4−5)+(0−2)] = −1.5.
        assert!((phi[0] - -3.5).abs() < 1e-9, "phi0 = {}", phi[0]);
        assert!((phi[1] - -1.5).abs() < 1e-9, "phi1 = {}", phi[1]);
    }

    #[test]
    fn repeated_feature_on_a_path_is_merged() {
        // The same feature twice: x < 0 then x < −1.
        let tree = Tree {
            nodes: vec![
                split(0, 0.0, 1, 2, 4.0),
                split(0, -1.0, 3, 4, 2.0),
                leaf(9.0, 2.0),
                leaf(1.0, 1.0),
                leaf(5.0, 1.0),
            ],
        };
        let expected_value = (2.0 * 9.0 + 1.0 + 5.0) / 4.0;
        for x in [[-2.0], [-0.5], [3.0]] {
            let mut phi = vec![0.0; 1];
            accumulate_tree_shap(&tree, &x, &mut phi);
            let margin = tree.predict(&x);
            // A single feature owns the entire gap from the expectation.
            assert!((expected_value + phi[0] - margin).abs() < 1e-9, "x = {x:?}");
        }
    }
}
