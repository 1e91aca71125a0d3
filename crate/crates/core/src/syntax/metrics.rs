use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::tokenizer::{TokenKind, TokenStream};

use super::{NodeType, SyntaxNode, SyntaxTree};

const TYPES: usize = NodeType::ALL.len();

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntaxMetrics {
    pub max_nesting_depth: usize,
    pub avg_branching_factor: f64,
    pub function_count: usize,
    pub avg_params_per_function: f64,
    pub param_count_stddev: f64,
    pub max_ast_depth: usize,
    pub avg_leaf_depth: f64,
    /// Indexed by [`NodeType::index`]; 0 for types absent from the tree.
    pub avg_depth_per_node_type: Vec<f64>,
    /// Keyed by `Parent>Child`.
    pub bigram_frequencies: BTreeMap<String, f64>,
    pub keyword_frequencies: BTreeMap<String, f64>,
}

pub fn bigram_key(parent: NodeType, child: NodeType) -> String {
    format!("{}>{}", parent.name(), child.name())
}

impl SyntaxMetrics {
    pub fn bigram(&self, parent: NodeType, child: NodeType) -> f64 {
        self.bigram_frequencies
            .get(&bigram_key(parent, child))
            .copied()
            .unwrap_or(0.0)
    }

    pub fn avg_depth(&self, kind: NodeType) -> f64 {
        self.avg_depth_per_node_type[kind.index()]
    }
}

pub fn syntax_metrics(tree: &SyntaxTree, stream: &TokenStream) -> SyntaxMetrics {
    let mut depth_sum = [0usize; TYPES];
    let mut depth_n = [0usize; TYPES];
    let mut bigrams: BTreeMap<(NodeType, NodeType), usize> = BTreeMap::new();
    let mut edges = 0usize;
    let mut leaf_sum = 0usize;
    let mut leaves = 0usize;
    let mut max_depth = 0usize;
    let mut block_children = 0usize;
    let mut blocks = 0usize;
    let mut params: Vec<usize> = Vec::new();

    tree.root.walk(&mut |node, parent| {
        let k = node.kind.index();
        depth_sum[k] += node.depth;
        depth_n[k] += 1;
        max_depth = max_depth.max(node.depth);
        if node.is_leaf() {
            leaf_sum += node.depth;
            leaves += 1;
        }
        if let Some(p) = parent {
            *bigrams.entry((p.kind, node.kind)).or_insert(0) += 1;
            edges += 1;
        }
        match node.kind {
            NodeType::Block => {
                blocks += 1;
                block_children += node.children.len();
            }
            NodeType::Function => {
                let n = node
                    .children
                    .iter()
                    .find(|c| c.kind == NodeType::ParameterList)
                    .map_or(0, |pl| pl.children.len());
                params.push(n);
            }
            _ => {}
        }
    });

    let (avg_params, param_sd) = mean_and_population_stddev(&params);

    let mut keyword_counts: BTreeMap<&str, usize> = BTreeMap::new();
    let mut keyword_total = 0usize;
    for tok in &stream.tokens {
        if tok.kind == TokenKind::Keyword {
            *keyword_counts.entry(tok.text.as_str()).or_insert(0) += 1;
            keyword_total += 1;
        }
    }

    SyntaxMetrics {
        max_nesting_depth: max_nesting(&tree.root, false),
        avg_branching_factor: ratio(block_children, blocks),
        function_count: params.len(),
        avg_params_per_function: avg_params,
        param_count_stddev: param_sd,
        max_ast_depth: max_depth,
        avg_leaf_depth: ratio(leaf_sum, leaves),
        avg_depth_per_node_type: (0..TYPES).map(|k| ratio(depth_sum[k], depth_n[k])).collect(),
        bigram_frequencies: bigrams
            .into_iter()
            .map(|((p, c), n)| (bigram_key(p, c), n as f64 / edges as f64))
            .collect(),
        keyword_frequencies: keyword_counts
            .into_iter()
            .map(|(k, n)| (k.to_string(), n as f64 / keyword_total as f64))
            .collect(),
    }
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

fn mean_and_population_stddev(xs: &[usize]) -> (f64, f64) {
    if xs.is_empty() {
        return (0.0, 0.0);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<usize>() as f64 / n;
    let var = xs.iter().map(|&x| (x as f64 - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Control constructs on the deepest root-to-leaf path. An `if` that is the
/// direct body of an `else` continues its chain rather than nesting deeper.
fn max_nesting(node: &SyntaxNode, parent_is_else: bool) -> usize {
    let own = usize::from(node.kind.is_control() && !(parent_is_else && node.kind == NodeType::If));
    let below = node
        .children
        .iter()
        .map(|c| max_nesting(c, node.kind == NodeType::Else))
        .max()
        .unwrap_or(0);
    own + below
}
