use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tree::{fit_tree_on, DecisionTree, TreeParams};
use crate::classifier::ScoreModel;
use crate::data::Label;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForestParams {
    pub trees: usize,
    /// `None` means `ceil(sqrt(k))`.
    pub features_per_split: Option<usize>,
    pub bootstrap: bool,
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            trees: 100,
            features_per_split: None,
            bootstrap: true,
            max_depth: None,
            min_samples_split: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomForest {
    pub trees: Vec<DecisionTree>,
    pub features_per_split: usize,
    pub bootstrap: bool,
    pub seed: u64,
    pub n_features: usize,
}

/// Bagged CART ensemble. Per-tree seeds come from the master seed in tree
/// order, so trees can be grown in parallel without changing the result.
pub fn fit_forest(rows: &[Vec<f64>], labels: &[Label], params: ForestParams, seed: u64) -> Result<RandomForest> {
    if rows.is_empty() {
        return Err(Error::invalid("empty training set"));
    }
    if params.trees == 0 {
        return Err(Error::InvalidConfig(vec!["trees must be at least 1".into()]));
    }
    let k = rows[0].len();
    let m = params
        .features_per_split
        .unwrap_or_else(|| (k as f64).sqrt().ceil() as usize);
    if m == 0 || m > k {
        return Err(Error::InvalidConfig(vec![format!(
            "features_per_split must be in [1, {k}], got {m}"
        )]));
    }
    let mut master = ChaCha8Rng::seed_from_u64(seed);
    let seeds: Vec<u64> = (0..params.trees).map(|_| master.gen()).collect();
    let tree_params = TreeParams {
        max_depth: params.max_depth,
        min_samples_split: params.min_samples_split,
        features_per_split: Some(m),
        laplace: false,
    };
    let n = rows.len();
    let trees = seeds
        .par_iter()
        .map(|&s| {
            let indices = if params.bootstrap {
                let mut rng = ChaCha8Rng::seed_from_u64(s ^ 0xB007_5712_AB5E_ED00);
                (0..n).map(|_| rng.gen_range(0..n)).collect()
            } else {
                (0..n).collect()
            };
            fit_tree_on(rows, labels, indices, tree_params, s)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RandomForest {
        trees,
        features_per_split: m,
        bootstrap: params.bootstrap,
        seed,
        n_features: k,
    })
}

impl RandomForest {
    /// Fraction of trees voting trusted.
    pub fn predict_proba(&self, x: &[f64]) -> Result<f64> {
        if self.trees.is_empty() {
            return Err(Error::invalid("forest has no trees"));
        }
        let mut votes = 0usize;
        for t in &self.trees {
            if t.predict(x)? == Label::Trusted {
                votes += 1;
            }
        }
        Ok(votes as f64 / self.trees.len() as f64)
    }

    pub fn predict(&self, x: &[f64]) -> Result<Label> {
        Ok(Label::from_target(self.predict_proba(x)?))
    }
}

impl ScoreModel for RandomForest {
    fn score(&self, z: &[f64]) -> Result<f64> {
        self.predict_proba(z)
    }
}

/// Total Gini decrease per feature across all trees, normalized to sum to 1,
/// as `(feature index, importance)` sorted descending (ties by index).
pub fn feature_importance(forest: &RandomForest) -> Result<Vec<(usize, f64)>> {
    if forest.trees.is_empty() {
        return Err(Error::invalid("forest is not fitted"));
    }
    let mut total = vec![0.0; forest.n_features];
    for t in &forest.trees {
        for (acc, v) in total.iter_mut().zip(t.raw_importance()) {
            *acc += v;
        }
    }
    let sum: f64 = total.iter().sum();
    if sum > 0.0 {
        total.iter_mut().for_each(|v| *v /= sum);
    }
    let mut ranked: Vec<(usize, f64)> = total.into_iter().enumerate().collect();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    Ok(ranked)
}
