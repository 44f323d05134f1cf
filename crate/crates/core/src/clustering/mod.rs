//! Gaussian mixture clustering per modality: EM fitting, BIC-knee model
//! selection, and silhouette / Davies-Bouldin diagnostics.

mod gmm;
mod knee;
mod metrics;

pub use gmm::{assign_clusters, fit_gmm, log_likelihood, responsibilities, GmmConfig, GmmModel};
pub use knee::knee_point;
pub use metrics::{davies_bouldin, silhouette_score};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::seeding::derive_seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionRule {
    Knee,
    MinBicFallback,
}

/// Diagnostics for the model-selection sweep. `silhouette` and `dbi` are
/// aligned with `k_range`; entries are `None` where the metric is undefined
/// (k = 1, or degenerate hard assignments).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelSelectionReport {
    pub k_range: Vec<usize>,
    pub bic_curve: Vec<f64>,
    pub silhouette: Vec<Option<f64>>,
    pub dbi: Vec<Option<f64>>,
    pub chosen_k: usize,
    pub selection_rule: SelectionRule,
}

/// BIC = -2 logL + p ln(n) with p = k-1 + k d + k d(d+1)/2 (full covariance).
pub fn bic(model: &GmmModel, x: &FeatureMatrix) -> Result<f64> {
    let d = x.n_cols();
    if model.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: model.dim(),
            actual: d,
        });
    }
    let n = x.n_rows() as f64;
    let logl = log_likelihood(model, &x.rows)?;
    Ok(-2.0 * logl + bic_param_count(model.k, d) as f64 * n.ln())
}

/// Free-parameter count of a full-covariance mixture.
pub fn bic_param_count(k: usize, d: usize) -> usize {
    (k - 1) + k * d + k * d * (d + 1) / 2
}

/// Fit every k in `k_range`, pick the BIC-curve knee, and report diagnostics.
/// Silhouette and DBI are informational only; selection uses the BIC knee.
pub fn select_model(
    x: &FeatureMatrix,
    k_range: &[usize],
    seed: u64,
    config: &GmmConfig,
) -> Result<(GmmModel, ModelSelectionReport)> {
    if k_range.is_empty() {
        return Err(Error::InvalidInput("empty k range".into()));
    }
    let mut models = Vec::with_capacity(k_range.len());
    let mut bic_curve = Vec::with_capacity(k_range.len());
    let mut silhouette = Vec::with_capacity(k_range.len());
    let mut dbi = Vec::with_capacity(k_range.len());
    for (i, &k) in k_range.iter().enumerate() {
        let model = fit_gmm(x, k, derive_seed(seed, &[i as u64]), config)?;
        bic_curve.push(bic(&model, x)?);
        if k >= 2 {
            let labels = assign_clusters(&model, x)?;
            silhouette.push(silhouette_score(&x.rows, &labels).ok());
            dbi.push(davies_bouldin(&x.rows, &labels).ok());
        } else {
            silhouette.push(None);
            dbi.push(None);
        }
        models.push(model);
    }
    let (knee_idx, rule) = if bic_curve.len() >= 3 {
        knee_point(&bic_curve)?
    } else {
        (argmin_first(&bic_curve), SelectionRule::MinBicFallback)
    };
    let chosen_k = k_range[knee_idx];
    let report = ModelSelectionReport {
        k_range: k_range.to_vec(),
        bic_curve,
        silhouette,
        dbi,
        chosen_k,
        selection_rule: rule,
    };
    Ok((models.swap_remove(knee_idx), report))
}

pub(crate) fn argmin_first(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v < values[best] {
            best = i;
        }
    }
    best
}
