//! A single decision tree with axis-aligned threshold splits chosen by
//! information gain (base-2 entropy), grown depth-first.

use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum Node {
    Leaf {
        /// Class frequencies of the training samples that reached the leaf;
        /// always sums to 1.
        freqs: Vec<f64>,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Tree {
    nodes: Vec<Node>,
}

impl Tree {
    pub fn leaf_freqs(&self, x: &[f64]) -> &[f64] {
        let mut at = 0;
        loop {
            match &self.nodes[at] {
                Node::Leaf { freqs } => return freqs,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    at = if x[*feature] <= *threshold {
                        *left
                    } else {
                        *right
                    };
                }
            }
        }
    }
}

/// Base-2 entropy of a class-count vector.
pub fn entropy(counts: &[usize], total: usize) -> f64 {
    if total == 0 {
        return 0.0;
    }
    let n = total as f64;
    counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.log2()
        })
        .sum()
}

pub struct GrowParams {
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
    pub features_per_split: usize,
    pub n_features: usize,
    pub n_classes: usize,
}

/// Best split of a node: `(gain, feature, threshold)`.
///
/// Candidate thresholds are midpoints between consecutive distinct values of
/// each candidate feature. Ties in gain resolve to the lowest feature index,
/// then the lowest threshold, which the ascending scan yields for free.
pub fn best_split(
    xs: &[f64],
    ys: &[usize],
    sample_rows: &[usize],
    mut candidates: Vec<usize>,
    p: &GrowParams,
) -> Option<(f64, usize, f64)> {
    candidates.sort_unstable();
    let n = sample_rows.len();
    let mut parent_counts = vec![0usize; p.n_classes];
    for &r in sample_rows {
        parent_counts[ys[r]] += 1;
    }
    let parent_entropy = entropy(&parent_counts, n);

    let mut best: Option<(f64, usize, f64)> = None;
    let mut order: Vec<usize> = Vec::with_capacity(n);
    for feature in candidates {
        order.clear();
        order.extend_from_slice(sample_rows);
        order.sort_unstable_by(|&a, &b| {
            xs[a * p.n_features + feature]
                .partial_cmp(&xs[b * p.n_features + feature])
                .unwrap()
        });
        let mut left_counts = vec![0usize; p.n_classes];
        let mut right_counts = parent_counts.clone();
        for i in 1..n {
            let prev = order[i - 1];
            left_counts[ys[prev]] += 1;
            right_counts[ys[prev]] -= 1;
            let v_prev = xs[prev * p.n_features + feature];
            let v_here = xs[order[i] * p.n_features + feature];
            if v_here <= v_prev {
                continue;
            }
            // the midpoint of adjacent floats can round up to v_here, which
            // would leave the right branch empty; fall back to v_prev
            let mut threshold = (v_prev + v_here) / 2.0;
            if threshold >= v_here {
                threshold = v_prev;
            }
            let h_left = entropy(&left_counts, i);
            let h_right = entropy(&right_counts, n - i);
            let gain = parent_entropy
                - (i as f64 / n as f64) * h_left
                - ((n - i) as f64 / n as f64) * h_right;
            if gain > 0.0 && best.is_none_or(|(g, _, _)| gain > g) {
                best = Some((gain, feature, threshold));
            }
        }
    }
    best
}

/// Grows a tree on the given rows of the sample matrix.
pub fn grow<R: Rng>(
    xs: &[f64],
    ys: &[usize],
    rows: Vec<usize>,
    p: &GrowParams,
    rng: &mut R,
) -> Tree {
    let mut nodes = Vec::new();
    grow_node(xs, ys, rows, 0, p, rng, &mut nodes);
    Tree { nodes }
}

fn grow_node<R: Rng>(
    xs: &[f64],
    ys: &[usize],
    rows: Vec<usize>,
    depth: usize,
    p: &GrowParams,
    rng: &mut R,
    nodes: &mut Vec<Node>,
) -> usize {
    let make_leaf = |rows: &[usize], nodes: &mut Vec<Node>| {
        let mut counts = vec![0usize; p.n_classes];
        for &r in rows {
            counts[ys[r]] += 1;
        }
        let total = rows.len() as f64;
        let freqs = counts.iter().map(|&c| c as f64 / total).collect();
        nodes.push(Node::Leaf { freqs });
        nodes.len() - 1
    };

    let pure = rows.iter().all(|&r| ys[r] == ys[rows[0]]);
    let depth_capped = p.max_depth.is_some_and(|d| depth >= d);
    if pure || rows.len() < p.min_samples_split || depth_capped {
        return make_leaf(&rows, nodes);
    }

    let k = p.features_per_split.min(p.n_features).max(1);
    let candidates = sample(rng, p.n_features, k).into_vec();
    let Some((_, feature, threshold)) = best_split(xs, ys, &rows, candidates, p) else {
        return make_leaf(&rows, nodes);
    };

    let (left_rows, right_rows): (Vec<usize>, Vec<usize>) = rows
        .into_iter()
        .partition(|&r| xs[r * p.n_features + feature] <= threshold);
    if left_rows.is_empty() || right_rows.is_empty() {
        let rows = if left_rows.is_empty() {
            right_rows
        } else {
            left_rows
        };
        return make_leaf(&rows, nodes);
    }

    let slot = nodes.len();
    nodes.push(Node::Leaf { freqs: vec![] }); // placeholder, patched below
    let left = grow_node(xs, ys, left_rows, depth + 1, p, rng, nodes);
    let right = grow_node(xs, ys, right_rows, depth + 1, p, rng, nodes);
    nodes[slot] = Node::Split {
        feature,
        threshold,
        left,
        right,
    };
    slot
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn entropy_of_pure_and_balanced_nodes() {
        assert_abs_diff_eq!(entropy(&[10, 0], 10), 0.0);
        assert_abs_diff_eq!(entropy(&[5, 5], 10), 1.0);
        assert_abs_diff_eq!(entropy(&[0, 0], 0), 0.0);
    }

    #[test]
    fn chosen_split_beats_random_splits() {
        // Node with a clean separating feature 0 plus a noisy feature 1.
        let xs = vec![
            0.0, 0.9, //
            0.1, 0.1, //
            0.2, 0.8, //
            0.8, 0.2, //
            0.9, 0.9, //
            1.0, 0.1,
        ];
        let ys = vec![0, 0, 0, 1, 1, 1];
        let rows: Vec<usize> = (0..6).collect();
        let p = GrowParams {
            max_depth: None,
            min_samples_split: 2,
            features_per_split: 2,
            n_features: 2,
            n_classes: 2,
        };
        let (best_gain, feature, _) = best_split(&xs, &ys, &rows, vec![0, 1], &p).unwrap();
        assert_eq!(feature, 0);
        // Any single-feature split's gain cannot exceed the chosen one.
        for f in 0..2 {
            if let Some((g, _, _)) = best_split(&xs, &ys, &rows, vec![f], &p) {
                assert!(best_gain >= g);
            }
        }
        assert_abs_diff_eq!(best_gain, 1.0); // perfect split of a balanced node
    }

    #[test]
    fn grown_tree_separates_training_data() {
        let xs = vec![0.0, 0.1, 0.9, 1.0];
        let ys = vec![0, 0, 1, 1];
        let p = GrowParams {
            max_depth: None,
            min_samples_split: 2,
            features_per_split: 1,
            n_features: 1,
            n_classes: 2,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let tree = grow(&xs, &ys, vec![0, 1, 2, 3], &p, &mut rng);
        assert_eq!(tree.leaf_freqs(&[0.05]), &[1.0, 0.0]);
        assert_eq!(tree.leaf_freqs(&[0.95]), &[0.0, 1.0]);
    }

    #[test]
    fn depth_zero_forces_a_single_leaf() {
        let xs = vec![0.0, 1.0, 2.0, 3.0];
        let ys = vec![0, 0, 1, 1];
        let p = GrowParams {
            max_depth: Some(0),
            min_samples_split: 2,
            features_per_split: 1,
            n_features: 1,
            n_classes: 2,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let tree = grow(&xs, &ys, vec![0, 1, 2, 3], &p, &mut rng);
        assert_eq!(tree.leaf_freqs(&[0.0]), &[0.5, 0.5]);
    }
}
