//! Gain-ratio decision trees and bagged forests.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "lowercase")]
pub enum TreeNode {
    Leaf {
        positives: usize,
        total: usize,
    },
    /// `x[feature] <= threshold` goes left.
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

/// Nodes stored flat; index 0 is the root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub nodes: Vec<TreeNode>,
}

impl DecisionTree {
    fn leaf_of(&self, x: &[f64]) -> (usize, usize) {
        let mut at = 0;
        loop {
            match self.nodes[at] {
                TreeNode::Leaf { positives, total } => return (positives, total),
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => at = if x[feature] <= threshold { left } else { right },
            }
        }
    }

    /// Positive-class proportion of the reached leaf.
    pub fn score(&self, x: &[f64]) -> f64 {
        let (p, n) = self.leaf_of(x);
        if n == 0 {
            0.5
        } else {
            p as f64 / n as f64
        }
    }

    pub fn depth(&self) -> usize {
        fn go(t: &DecisionTree, at: usize) -> usize {
            match t.nodes[at] {
                TreeNode::Leaf { .. } => 1,
                TreeNode::Split { left, right, .. } => 1 + go(t, left).max(go(t, right)),
            }
        }
        go(self, 0)
    }

    pub fn leaf_count(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n, TreeNode::Leaf { .. }))
            .count()
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct TreeOptions {
    pub max_depth: Option<usize>,
    pub min_leaf: usize,
    /// `None`: every feature at every split.
    pub features_per_split: Option<usize>,
}

fn entropy(pos: usize, total: usize) -> f64 {
    if total == 0 || pos == 0 || pos == total {
        return 0.0;
    }
    let p = pos as f64 / total as f64;
    let q = 1.0 - p;
    -(p * p.log2() + q * q.log2())
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    feature: usize,
    threshold: f64,
    gain: f64,
    ratio: f64,
}

/// Best threshold on one feature by information gain; ties keep the lowest
/// threshold.
fn best_threshold(
    x: &[Vec<f64>],
    y: &[bool],
    rows: &[usize],
    feature: usize,
    min_leaf: usize,
    order: &mut Vec<(f64, bool)>,
) -> Option<Candidate> {
    order.clear();
    order.extend(rows.iter().map(|&r| (x[r][feature], y[r])));
    order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let n = order.len();
    if n < 2 || order[0].0 == order[n - 1].0 {
        return None;
    }
    let total_pos = order.iter().filter(|(_, l)| *l).count();
    let parent = entropy(total_pos, n);
    let mut best: Option<(f64, usize, f64)> = None;
    let mut left_pos = 0;
    for i in 0..n - 1 {
        if order[i].1 {
            left_pos += 1;
        }
        let left_n = i + 1;
        if order[i].0 == order[i + 1].0 || left_n < min_leaf || n - left_n < min_leaf {
            continue;
        }
        let right_n = n - left_n;
        let child = (left_n as f64 * entropy(left_pos, left_n)
            + right_n as f64 * entropy(total_pos - left_pos, right_n))
            / n as f64;
        let gain = (parent - child).max(0.0);
        if best.is_none_or(|(g, _, _)| gain > g + 1e-12) {
            let (a, b) = (order[i].0, order[i + 1].0);
            let mut mid = a + (b - a) / 2.0;
            if mid >= b || mid < a {
                mid = a;
            }
            best = Some((gain, left_n, mid));
        }
    }
    let (gain, left_n, threshold) = best?;
    let pl = left_n as f64 / n as f64;
    let split_info = -(pl * pl.log2() + (1.0 - pl) * (1.0 - pl).log2());
    Some(Candidate {
        feature,
        threshold,
        gain,
        ratio: if split_info > 0.0 { gain / split_info } else { 0.0 },
    })
}

/// Among features whose gain reaches the average, the highest gain ratio;
/// ties go to the lowest feature index.
fn choose(candidates: &[Candidate]) -> Option<Candidate> {
    if candidates.is_empty() {
        return None;
    }
    let avg = candidates.iter().map(|c| c.gain).sum::<f64>() / candidates.len() as f64;
    let mut best: Option<Candidate> = None;
    for c in candidates.iter().filter(|c| c.gain + 1e-12 >= avg) {
        let better = match best {
            None => true,
            Some(b) => c.ratio > b.ratio + 1e-12 || ((c.ratio - b.ratio).abs() <= 1e-12 && c.feature < b.feature),
        };
        if better {
            best = Some(*c);
        }
    }
    best
}

pub(crate) fn grow_tree(
    x: &[Vec<f64>],
    y: &[bool],
    rows: Vec<usize>,
    opts: TreeOptions,
    mut rng: Option<&mut ChaCha8Rng>,
) -> DecisionTree {
    let d = x.first().map_or(0, Vec::len);
    let mut nodes: Vec<TreeNode> = Vec::new();
    let mut order = Vec::with_capacity(rows.len());
    // (slot, rows, depth)
    let mut work = vec![(0usize, rows, 1usize)];
    nodes.push(TreeNode::Leaf {
        positives: 0,
        total: 0,
    });
    while let Some((slot, rows, depth)) = work.pop() {
        let positives = rows.iter().filter(|&&r| y[r]).count();
        let total = rows.len();
        let leaf = TreeNode::Leaf { positives, total };
        let pure = positives == 0 || positives == total;
        let depth_capped = opts.max_depth.is_some_and(|m| depth >= m);
        if pure || depth_capped || total < 2 * opts.min_leaf {
            nodes[slot] = leaf;
            continue;
        }
        let features: Vec<usize> = match (opts.features_per_split, rng.as_deref_mut()) {
            (Some(k), Some(r)) if k < d => {
                let mut f = sample(r, d, k).into_vec();
                f.sort_unstable();
                f
            }
            _ => (0..d).collect(),
        };
        let candidates: Vec<Candidate> = features
            .iter()
            .filter_map(|&f| best_threshold(x, y, &rows, f, opts.min_leaf, &mut order))
            .collect();
        let Some(split) = choose(&candidates) else {
            nodes[slot] = leaf;
            continue;
        };
        let (left_rows, right_rows): (Vec<usize>, Vec<usize>) =
            rows.iter().partition(|&&r| x[r][split.feature] <= split.threshold);
        let left = nodes.len();
        let right = left + 1;
        nodes.push(TreeNode::Leaf {
            positives: 0,
            total: 0,
        });
        nodes.push(TreeNode::Leaf {
            positives: 0,
            total: 0,
        });
        nodes[slot] = TreeNode::Split {
            feature: split.feature,
            threshold: split.threshold,
            left,
            right,
        };
        work.push((right, right_rows, depth + 1));
        work.push((left, left_rows, depth + 1));
    }
    DecisionTree { nodes }
}

/// Generator for tree `index` of a forest seeded with `seed`.
pub fn forest_rng(seed: u64, index: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed.wrapping_add(index as u64))
}

/// The bootstrap sample of `n` rows drawn first from `rng`.
pub fn bootstrap(rng: &mut ChaCha8Rng, n: usize) -> Vec<usize> {
    (0..n).map(|_| rng.gen_range(0..n)).collect()
}

/// Row indices used by tree `index` of a forest seeded with `seed`.
pub fn forest_bootstrap(seed: u64, index: usize, n: usize) -> Vec<usize> {
    bootstrap(&mut forest_rng(seed, index), n)
}

pub(crate) fn grow_forest(
    x: &[Vec<f64>],
    y: &[bool],
    n_trees: usize,
    seed: u64,
    opts: TreeOptions,
) -> Vec<DecisionTree> {
    (0..n_trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = forest_rng(seed, t);
            let rows = bootstrap(&mut rng, y.len());
            grow_tree(x, y, rows, opts, Some(&mut rng))
        })
        .collect()
}

/// Fraction of trees voting positive.
pub fn forest_score(trees: &[DecisionTree], x: &[f64]) -> f64 {
    let votes = trees.iter().filter(|t| t.score(x) >= 0.5).count();
    votes as f64 / trees.len() as f64
}
