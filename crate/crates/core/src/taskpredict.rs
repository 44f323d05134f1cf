//! Regression forest predicting group task metrics from one-hot encoded
//! cluster configurations, with leave-one-group-out evaluation.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::behaviorsim::BehaviorProfile;
use crate::error::{Error, Result};
use crate::logmodel::TaskMetrics;
use crate::seeding::{derive_seed, substream_rng};

/// One-hot encoding of a group's representative cluster per modality.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupConfigEncoding {
    pub vector: Vec<f64>,
    pub k_speaking: usize,
    pub k_gaze: usize,
    pub k_location: usize,
}

fn mode_smallest(ids: impl Iterator<Item = usize>) -> usize {
    let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
    for id in ids {
        *counts.entry(id).or_insert(0) += 1;
    }
    // BTreeMap iterates in ascending id order, so ties resolve to the
    // smaller id
    let mut best = (usize::MAX, 0usize);
    for (&id, &n) in &counts {
        if n > best.1 {
            best = (id, n);
        }
    }
    best.0
}

/// Encode a group as the mode cluster id per modality (ties toward the
/// smaller id), one-hot over concatenated modality blocks.
pub fn encode_group_config(
    profiles: &[BehaviorProfile],
    k_speaking: usize,
    k_gaze: usize,
    k_location: usize,
) -> Result<GroupConfigEncoding> {
    if profiles.is_empty() {
        return Err(Error::InvalidInput("cannot encode an empty group".into()));
    }
    for p in profiles {
        if p.speaking_cluster >= k_speaking {
            return Err(Error::UnknownCluster(p.speaking_cluster));
        }
        if p.gaze_cluster >= k_gaze {
            return Err(Error::UnknownCluster(p.gaze_cluster));
        }
        if p.location_cluster >= k_location {
            return Err(Error::UnknownCluster(p.location_cluster));
        }
    }
    let rep_s = mode_smallest(profiles.iter().map(|p| p.speaking_cluster));
    let rep_g = mode_smallest(profiles.iter().map(|p| p.gaze_cluster));
    let rep_l = mode_smallest(profiles.iter().map(|p| p.location_cluster));
    let mut vector = vec![0.0; k_speaking + k_gaze + k_location];
    vector[rep_s] = 1.0;
    vector[k_speaking + rep_g] = 1.0;
    vector[k_speaking + k_gaze + rep_l] = 1.0;
    Ok(GroupConfigEncoding {
        vector,
        k_speaking,
        k_gaze,
        k_location,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForestConfig {
    pub n_trees: usize,
    pub min_leaf: usize,
    /// Features considered per split; defaults to ceil(sqrt(d)).
    pub max_features: Option<usize>,
    pub bootstrap: bool,
}

impl Default for ForestConfig {
    fn default() -> Self {
        ForestConfig {
            n_trees: 100,
            min_leaf: 2,
            max_features: None,
            bootstrap: true,
        }
    }
}

/// CART node in a flat arena; indices point into the owning tree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum TreeNode {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        value: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionTree {
    pub nodes: Vec<TreeNode>,
}

impl RegressionTree {
    pub fn predict(&self, x: &[f64]) -> f64 {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                TreeNode::Leaf { value } => return *value,
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    i = if x[*feature] <= *threshold { *left } else { *right };
                }
            }
        }
    }
}

/// Bagged CART regression forest; independent tree set per target column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionForest {
    /// trees[target][tree]
    pub trees: Vec<Vec<RegressionTree>>,
    pub target_names: Vec<String>,
    pub n_features: usize,
    pub config: ForestConfig,
}

struct TreeBuilder<'a> {
    x: &'a [Vec<f64>],
    y: &'a [f64],
    min_leaf: usize,
    max_features: usize,
    nodes: Vec<TreeNode>,
}

impl TreeBuilder<'_> {
    /// Best variance-reduction split over a random feature subset; `None`
    /// when no split leaves both children with >= min_leaf rows.
    fn best_split(
        &self,
        rows: &[usize],
        rng: &mut rand_chacha::ChaCha8Rng,
    ) -> Option<(usize, f64, f64)> {
        let d = self.x[0].len();
        let mut features: Vec<usize> = (0..d).collect();
        for i in 0..self.max_features.min(d) {
            let j = rng.gen_range(i..d);
            features.swap(i, j);
        }
        let mut best: Option<(usize, f64, f64)> = None;
        for &f in features.iter().take(self.max_features.min(d)) {
            let mut ordered: Vec<usize> = rows.to_vec();
            ordered.sort_by(|&a, &b| self.x[a][f].total_cmp(&self.x[b][f]));
            // prefix sums for O(1) SSE of each candidate partition
            let n = ordered.len();
            let mut sum = 0.0;
            let mut sum_sq = 0.0;
            let prefix: Vec<(f64, f64)> = ordered
                .iter()
                .map(|&i| {
                    sum += self.y[i];
                    sum_sq += self.y[i] * self.y[i];
                    (sum, sum_sq)
                })
                .collect();
            let (total, total_sq) = prefix[n - 1];
            for split in self.min_leaf..=(n - self.min_leaf) {
                if split == n {
                    break;
                }
                let lo = self.x[ordered[split - 1]][f];
                let hi = self.x[ordered[split]][f];
                if hi - lo < 1e-12 {
                    continue;
                }
                let (ls, lsq) = prefix[split - 1];
                let (rs, rsq) = (total - ls, total_sq - lsq);
                let sse = (lsq - ls * ls / split as f64)
                    + (rsq - rs * rs / (n - split) as f64);
                if best.map_or(true, |(_, _, b)| sse < b - 1e-15) {
                    best = Some((f, (lo + hi) / 2.0, sse));
                }
            }
        }
        best
    }

    fn build(&mut self, rows: Vec<usize>, rng: &mut rand_chacha::ChaCha8Rng) -> usize {
        let mean = rows.iter().map(|&i| self.y[i]).sum::<f64>() / rows.len() as f64;
        let pure = rows
            .iter()
            .all(|&i| (self.y[i] - mean).abs() < 1e-12);
        if pure || rows.len() < 2 * self.min_leaf {
            self.nodes.push(TreeNode::Leaf { value: mean });
            return self.nodes.len() - 1;
        }
        match self.best_split(&rows, rng) {
            None => {
                self.nodes.push(TreeNode::Leaf { value: mean });
                self.nodes.len() - 1
            }
            Some((feature, threshold, _)) => {
                let (left_rows, right_rows): (Vec<usize>, Vec<usize>) = rows
                    .into_iter()
                    .partition(|&i| self.x[i][feature] <= threshold);
                let placeholder = self.nodes.len();
                self.nodes.push(TreeNode::Leaf { value: mean });
                let left = self.build(left_rows, rng);
                let right = self.build(right_rows, rng);
                self.nodes[placeholder] = TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                };
                placeholder
            }
        }
    }
}

fn fit_tree(
    x: &[Vec<f64>],
    y: &[f64],
    config: &ForestConfig,
    max_features: usize,
    seed: u64,
) -> RegressionTree {
    let mut rng = substream_rng(seed, &[]);
    let n = x.len();
    let rows: Vec<usize> = if config.bootstrap {
        (0..n).map(|_| rng.gen_range(0..n)).collect()
    } else {
        (0..n).collect()
    };
    let mut builder = TreeBuilder {
        x,
        y,
        min_leaf: config.min_leaf,
        max_features,
        nodes: Vec::new(),
    };
    builder.build(rows, &mut rng);
    RegressionTree {
        nodes: builder.nodes,
    }
}

/// Fit a bagged CART forest per target column. `y[i]` holds the targets of
/// row `i` in [`TaskMetrics::METRIC_NAMES`] order (or any documented order
/// matching `target_names`).
pub fn fit_forest(
    x: &[GroupConfigEncoding],
    y: &[Vec<f64>],
    target_names: &[String],
    seed: u64,
    config: &ForestConfig,
) -> Result<RegressionForest> {
    if x.is_empty() || x.len() != y.len() {
        return Err(Error::InvalidInput(format!(
            "need matching non-empty X ({}) and Y ({})",
            x.len(),
            y.len()
        )));
    }
    if x.len() < 2 {
        return Err(Error::InvalidInput("need at least 2 training rows".into()));
    }
    let d = x[0].vector.len();
    let rows: Vec<Vec<f64>> = x.iter().map(|e| e.vector.clone()).collect();
    if rows.iter().any(|r| r.len() != d) {
        return Err(Error::InvalidInput("inconsistent encoding widths".into()));
    }
    let n_targets = target_names.len();
    if y.iter().any(|t| t.len() != n_targets) {
        return Err(Error::InvalidInput("target width mismatch".into()));
    }
    let max_features = config
        .max_features
        .unwrap_or_else(|| (d as f64).sqrt().ceil() as usize)
        .max(1);
    let mut trees = Vec::with_capacity(n_targets);
    for t in 0..n_targets {
        let targets: Vec<f64> = y.iter().map(|row| row[t]).collect();
        let per_target: Vec<RegressionTree> = (0..config.n_trees)
            .map(|i| {
                fit_tree(
                    &rows,
                    &targets,
                    config,
                    max_features,
                    derive_seed(seed, &[t as u64, i as u64]),
                )
            })
            .collect();
        trees.push(per_target);
    }
    Ok(RegressionForest {
        trees,
        target_names: target_names.to_vec(),
        n_features: d,
        config: *config,
    })
}

/// Raw per-target forest prediction: arithmetic mean of tree predictions.
pub fn predict_raw(forest: &RegressionForest, x: &[f64]) -> Result<Vec<f64>> {
    if x.len() != forest.n_features {
        return Err(Error::DimensionMismatch {
            expected: forest.n_features,
            actual: x.len(),
        });
    }
    Ok(forest
        .trees
        .iter()
        .map(|trees| trees.iter().map(|t| t.predict(x)).sum::<f64>() / trees.len() as f64)
        .collect())
}

/// Predict task metrics: counts rounded to non-negative integers, accuracy
/// clamped to [0, 100].
pub fn predict_task_metrics(
    forest: &RegressionForest,
    x: &GroupConfigEncoding,
) -> Result<TaskMetrics> {
    let raw = predict_raw(forest, &x.vector)?;
    if raw.len() != TaskMetrics::METRIC_NAMES.len() {
        return Err(Error::DimensionMismatch {
            expected: TaskMetrics::METRIC_NAMES.len(),
            actual: raw.len(),
        });
    }
    Ok(TaskMetrics::from_vec(&raw))
}

/// Pooled R² against a zero baseline on pre-standardized values: predicting
/// 0 (the training-fold mean after standardization) scores exactly 0.
pub fn pooled_r2(z_true: &[f64], z_pred: &[f64]) -> f64 {
    let sse: f64 = z_true
        .iter()
        .zip(z_pred)
        .map(|(t, p)| (t - p).powi(2))
        .sum();
    let sst: f64 = z_true.iter().map(|t| t * t).sum();
    if sst < 1e-24 {
        return if sse < 1e-24 { 1.0 } else { f64::NEG_INFINITY };
    }
    1.0 - sse / sst
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestEvaluation {
    /// Pooled MAE over standardized held-out targets.
    pub mae_standardized: f64,
    /// Pooled MAE over raw-scale held-out targets (heterogeneous units).
    pub mae_raw: f64,
    /// Pooled R² on standardized targets against the training-fold mean.
    pub r2: f64,
    /// Mean percent error per metric over folds.
    pub percent_error: BTreeMap<String, f64>,
    pub n_folds: usize,
}

/// Leave-one-group-out cross-validation of the forest.
pub fn evaluate_forest_loo(
    x: &[GroupConfigEncoding],
    y: &[Vec<f64>],
    target_names: &[String],
    seed: u64,
    config: &ForestConfig,
) -> Result<ForestEvaluation> {
    let n = x.len();
    if n < 3 {
        return Err(Error::InvalidInput(format!(
            "leave-one-group-out needs at least 3 groups, got {n}"
        )));
    }
    if y.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: y.len(),
        });
    }
    let n_targets = target_names.len();
    let mut z_true = Vec::new();
    let mut z_pred = Vec::new();
    let mut abs_raw = Vec::new();
    let mut pct_sums = vec![0.0; n_targets];
    for fold in 0..n {
        let train_x: Vec<GroupConfigEncoding> = x
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != fold)
            .map(|(_, e)| e.clone())
            .collect();
        let train_y: Vec<Vec<f64>> = y
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != fold)
            .map(|(_, t)| t.clone())
            .collect();
        let forest = fit_forest(
            &train_x,
            &train_y,
            target_names,
            derive_seed(seed, &[fold as u64]),
            config,
        )?;
        let pred = predict_raw(&forest, &x[fold].vector)?;
        for t in 0..n_targets {
            let col: Vec<f64> = train_y.iter().map(|r| r[t]).collect();
            let mean = crate::features::mean(&col);
            let std = crate::features::pop_std(&col).max(1e-12);
            z_true.push((y[fold][t] - mean) / std);
            z_pred.push((pred[t] - mean) / std);
            abs_raw.push((pred[t] - y[fold][t]).abs());
            pct_sums[t] += (pred[t] - y[fold][t]).abs() / y[fold][t].abs().max(1e-9) * 100.0;
        }
    }
    let mae_standardized = z_true
        .iter()
        .zip(&z_pred)
        .map(|(t, p)| (t - p).abs())
        .sum::<f64>()
        / z_true.len() as f64;
    let mae_raw = abs_raw.iter().sum::<f64>() / abs_raw.len() as f64;
    let percent_error = target_names
        .iter()
        .zip(&pct_sums)
        .map(|(name, sum)| (name.clone(), sum / n as f64))
        .collect();
    Ok(ForestEvaluation {
        mae_standardized,
        mae_raw,
        r2: pooled_r2(&z_true, &z_pred),
        percent_error,
        n_folds: n,
    })
}
