//! CART decision tree with Gini impurity.

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::classifier::ScoreModel;
use crate::data::Label;
use crate::error::{Error, Result};

/// Gini impurity of a node holding `counts[c]` samples of each class.
pub fn gini(counts: &[usize]) -> f64 {
    let n: usize = counts.iter().sum();
    if n == 0 {
        return 0.0;
    }
    let n = n as f64;
    1.0 - counts.iter().map(|&c| (c as f64 / n).powi(2)).sum::<f64>()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TreeParams {
    /// `None` grows until purity or `min_samples_split`.
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
    /// Features examined per split; `None` means all.
    pub features_per_split: Option<usize>,
    /// Leaf probability `(trusted + 1) / (n + 2)` instead of the raw fraction.
    pub laplace: bool,
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams {
            max_depth: None,
            min_samples_split: 2,
            features_per_split: None,
            laplace: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "snake_case")]
pub enum Node {
    Leaf {
        /// Probability of the trusted class.
        prob: f64,
        samples: usize,
    },
    Split {
        feature: usize,
        /// Samples with `x[feature] <= threshold` go left.
        threshold: f64,
        left: usize,
        right: usize,
        samples: usize,
        /// Count-weighted Gini decrease, `n·G - n_l·G_l - n_r·G_r`.
        impurity_decrease: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub nodes: Vec<Node>,
    pub n_features: usize,
    pub depth: usize,
    pub params: TreeParams,
}

struct Best {
    feature: usize,
    threshold: f64,
    gain: f64,
}

struct Builder<'a> {
    rows: &'a [Vec<f64>],
    labels: &'a [Label],
    params: TreeParams,
    rng: ChaCha8Rng,
    nodes: Vec<Node>,
    depth: usize,
}

fn class_counts(labels: &[Label], idx: &[usize]) -> [usize; 2] {
    let mut c = [0usize; 2];
    for &i in idx {
        c[(labels[i] == Label::Trusted) as usize] += 1;
    }
    c
}

impl Builder<'_> {
    fn leaf(&mut self, counts: [usize; 2]) -> usize {
        let n = counts[0] + counts[1];
        let prob = if self.params.laplace {
            (counts[1] as f64 + 1.0) / (n as f64 + 2.0)
        } else {
            counts[1] as f64 / n as f64
        };
        self.nodes.push(Node::Leaf { prob, samples: n });
        self.nodes.len() - 1
    }

    fn candidate_features(&mut self) -> Vec<usize> {
        let k = self.rows[0].len();
        match self.params.features_per_split {
            Some(m) if m < k => {
                let mut f = index::sample(&mut self.rng, k, m).into_vec();
                f.sort_unstable();
                f
            }
            _ => (0..k).collect(),
        }
    }

    fn best_split(&mut self, idx: &[usize], counts: [usize; 2]) -> Option<Best> {
        let n = idx.len();
        let parent = n as f64 * gini(&counts);
        let mut best: Option<Best> = None;
        let mut pairs: Vec<(f64, usize)> = Vec::with_capacity(n);
        for f in self.candidate_features() {
            pairs.clear();
            pairs.extend(idx.iter().map(|&i| (self.rows[i][f], (self.labels[i] == Label::Trusted) as usize)));
            pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
            let mut left = [0usize; 2];
            for i in 0..n - 1 {
                left[pairs[i].1] += 1;
                let (lo, hi) = (pairs[i].0, pairs[i + 1].0);
                if lo >= hi {
                    continue;
                }
                let mut threshold = lo + (hi - lo) / 2.0;
                if threshold >= hi {
                    threshold = lo;
                }
                let right = [counts[0] - left[0], counts[1] - left[1]];
                let nl = (i + 1) as f64;
                let nr = (n - i - 1) as f64;
                let gain = parent - nl * gini(&left) - nr * gini(&right);
                let better = match &best {
                    None => true,
                    Some(b) => gain > b.gain + 1e-12 * b.gain.abs().max(1.0),
                };
                if better {
                    best = Some(Best {
                        feature: f,
                        threshold,
                        gain,
                    });
                }
            }
        }
        best
    }

    fn grow(&mut self, idx: Vec<usize>, depth: usize) -> usize {
        self.depth = self.depth.max(depth);
        let counts = class_counts(self.labels, &idx);
        let pure = counts[0] == 0 || counts[1] == 0;
        let depth_capped = self.params.max_depth.is_some_and(|d| depth >= d);
        if pure || depth_capped || idx.len() < self.params.min_samples_split.max(2) {
            return self.leaf(counts);
        }
        let Some(best) = self.best_split(&idx, counts) else {
            return self.leaf(counts);
        };
        let (l, r): (Vec<usize>, Vec<usize>) = idx
            .iter()
            .partition(|&&i| self.rows[i][best.feature] <= best.threshold);
        let slot = self.nodes.len();
        self.nodes.push(Node::Leaf { prob: 0.0, samples: 0 });
        let left = self.grow(l, depth + 1);
        let right = self.grow(r, depth + 1);
        self.nodes[slot] = Node::Split {
            feature: best.feature,
            threshold: best.threshold,
            left,
            right,
            samples: idx.len(),
            impurity_decrease: best.gain.max(0.0),
        };
        slot
    }
}

fn check_training_set(rows: &[Vec<f64>], labels: &[Label]) -> Result<usize> {
    if rows.is_empty() {
        return Err(Error::invalid("empty training set"));
    }
    if rows.len() != labels.len() {
        return Err(Error::Dimension {
            context: "labels",
            expected: rows.len(),
            actual: labels.len(),
        });
    }
    let k = rows[0].len();
    if let Some(bad) = rows.iter().find(|r| r.len() != k) {
        return Err(Error::Dimension {
            context: "training row",
            expected: k,
            actual: bad.len(),
        });
    }
    Ok(k)
}

/// Grows a tree on the samples at `indices` (repeats allowed, for
/// bootstrap samples).
pub(crate) fn fit_tree_on(
    rows: &[Vec<f64>],
    labels: &[Label],
    indices: Vec<usize>,
    params: TreeParams,
    seed: u64,
) -> Result<DecisionTree> {
    let k = check_training_set(rows, labels)?;
    if indices.is_empty() {
        return Err(Error::invalid("empty training set"));
    }
    let mut b = Builder {
        rows,
        labels,
        params,
        rng: ChaCha8Rng::seed_from_u64(seed),
        nodes: Vec::new(),
        depth: 0,
    };
    b.grow(indices, 0);
    Ok(DecisionTree {
        nodes: b.nodes,
        n_features: k,
        depth: b.depth,
        params,
    })
}

/// Greedy CART on all samples. Ties between splits go to the lowest feature
/// index, then the lowest threshold.
pub fn fit_tree(rows: &[Vec<f64>], labels: &[Label], params: TreeParams, seed: u64) -> Result<DecisionTree> {
    fit_tree_on(rows, labels, (0..rows.len()).collect(), params, seed)
}

impl DecisionTree {
    pub fn predict_proba(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.n_features {
            return Err(Error::Dimension {
                context: "tree input",
                expected: self.n_features,
                actual: x.len(),
            });
        }
        let mut at = 0;
        loop {
            match &self.nodes[at] {
                Node::Leaf { prob, .. } => return Ok(*prob),
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                    ..
                } => at = if x[*feature] <= *threshold { *left } else { *right },
            }
        }
    }

    pub fn predict(&self, x: &[f64]) -> Result<Label> {
        Ok(Label::from_target(self.predict_proba(x)?))
    }

    /// Count-weighted Gini decrease per feature (not normalized).
    pub fn raw_importance(&self) -> Vec<f64> {
        let mut imp = vec![0.0; self.n_features];
        for node in &self.nodes {
            if let Node::Split {
                feature,
                impurity_decrease,
                ..
            } = node
            {
                imp[*feature] += impurity_decrease;
            }
        }
        imp
    }

    pub fn leaf_count(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf { .. })).count()
    }
}

impl ScoreModel for DecisionTree {
    fn score(&self, z: &[f64]) -> Result<f64> {
        self.predict_proba(z)
    }
}
