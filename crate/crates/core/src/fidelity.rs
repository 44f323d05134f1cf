//! Distribution-level real-vs-simulated comparison: histogram intersection
//! similarity, 1-D Wasserstein distance, autocorrelation profiles, and
//! per-feature fidelity reports.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureMatrix;

/// Default number of common bins for histogram similarity.
pub const DEFAULT_HIST_BINS: usize = 20;

/// Default maximum lag for autocorrelation profiles.
pub const DEFAULT_MAX_LAG: usize = 20;

/// Histogram intersection similarity over `n_bins` common bins spanning the
/// min..max of the union of both samples. Returns sum of min(p_i, q_i).
pub fn histogram_similarity(a: &[f64], b: &[f64], n_bins: usize) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::InvalidInput("histogram_similarity needs non-empty samples".into()));
    }
    if n_bins == 0 {
        return Err(Error::InvalidInput("n_bins must be positive".into()));
    }
    let lo = a.iter().chain(b).cloned().fold(f64::INFINITY, f64::min);
    let hi = a.iter().chain(b).cloned().fold(f64::NEG_INFINITY, f64::max);
    if !lo.is_finite() || !hi.is_finite() {
        return Err(Error::InvalidInput("non-finite sample".into()));
    }
    if hi - lo < 1e-12 {
        return Ok(1.0); // all mass at one point in both samples
    }
    let width = (hi - lo) / n_bins as f64;
    let bin_of = |v: f64| (((v - lo) / width) as usize).min(n_bins - 1);
    let mut p = vec![0.0; n_bins];
    let mut q = vec![0.0; n_bins];
    for &v in a {
        p[bin_of(v)] += 1.0 / a.len() as f64;
    }
    for &v in b {
        q[bin_of(v)] += 1.0 / b.len() as f64;
    }
    Ok(p.iter().zip(&q).map(|(x, y)| x.min(*y)).sum())
}

/// 1-D Wasserstein distance via the quantile-function integral.
pub fn wasserstein1(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::InvalidInput("wasserstein1 needs non-empty samples".into()));
    }
    let mut a: Vec<f64> = a.to_vec();
    let mut b: Vec<f64> = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (n, m) = (a.len(), b.len());
    if n == m {
        // sorted-sample formulation for equal sizes
        return Ok(a.iter().zip(&b).map(|(x, y)| (x - y).abs()).sum::<f64>() / n as f64);
    }
    // piecewise quantile integration over merged probability breakpoints
    let mut total = 0.0;
    let mut p = 0.0;
    let (mut ia, mut ib) = (0usize, 0usize);
    while ia < n && ib < m {
        let next_a = (ia + 1) as f64 / n as f64;
        let next_b = (ib + 1) as f64 / m as f64;
        let next = next_a.min(next_b);
        total += (next - p) * (a[ia] - b[ib]).abs();
        p = next;
        if (next_a - next).abs() < 1e-15 {
            ia += 1;
        }
        if (next_b - next).abs() < 1e-15 {
            ib += 1;
        }
    }
    Ok(total)
}

/// Sample autocorrelation and Durbin-Levinson partial autocorrelation up to
/// `max_lag`. Both vectors include lag 0 (value 1).
pub fn autocorrelation_profile(series: &[f64], max_lag: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = series.len();
    if n <= max_lag + 1 {
        return Err(Error::InvalidInput(format!(
            "series length {n} too short for max_lag {max_lag}"
        )));
    }
    let mu = series.iter().sum::<f64>() / n as f64;
    let var: f64 = series.iter().map(|x| (x - mu).powi(2)).sum();
    if var < 1e-24 {
        return Err(Error::InvalidInput("constant series has undefined autocorrelation".into()));
    }
    let mut acf = Vec::with_capacity(max_lag + 1);
    for k in 0..=max_lag {
        let num: f64 = (0..n - k)
            .map(|t| (series[t] - mu) * (series[t + k] - mu))
            .sum();
        acf.push(num / var);
    }
    // Durbin-Levinson recursion on the acf
    let mut pacf = vec![1.0];
    let mut phi_prev: Vec<f64> = Vec::new();
    let mut v = 1.0_f64;
    for k in 1..=max_lag {
        let num = acf[k]
            - phi_prev
                .iter()
                .enumerate()
                .map(|(j, &p)| p * acf[k - 1 - j])
                .sum::<f64>();
        let phi_kk = if v.abs() < 1e-24 { 0.0 } else { num / v };
        let mut phi = Vec::with_capacity(k);
        for j in 0..k - 1 {
            phi.push(phi_prev[j] - phi_kk * phi_prev[k - 2 - j]);
        }
        phi.push(phi_kk);
        v *= 1.0 - phi_kk * phi_kk;
        pacf.push(phi_kk);
        phi_prev = phi;
    }
    Ok((acf, pacf))
}

/// Pearson correlation; `None` when either vector has (near-)zero variance
/// or lengths differ.
pub fn pearson(a: &[f64], b: &[f64]) -> Option<f64> {
    if a.len() != b.len() || a.len() < 2 {
        return None;
    }
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let mut num = 0.0;
    let mut da = 0.0;
    let mut db = 0.0;
    for (x, y) in a.iter().zip(b) {
        num += (x - ma) * (y - mb);
        da += (x - ma).powi(2);
        db += (y - mb).powi(2);
    }
    if da < 1e-24 || db < 1e-24 {
        return None;
    }
    Some(num / (da * db).sqrt())
}

/// Per-feature distribution comparison metrics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureFidelity {
    pub feature: String,
    pub real_mean: f64,
    pub sim_mean: f64,
    pub histogram_similarity: f64,
    pub wasserstein_distance: f64,
    /// 1 / (1 + W1), a bounded similarity companion to the distance.
    pub wasserstein_similarity: f64,
    /// Rank-paired Pearson correlation; present only when sample sizes
    /// match and both columns are non-degenerate.
    pub pearson_correlation: Option<f64>,
}

/// Full fidelity report: per-feature metrics plus temporal-structure
/// similarities computed from binned event series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FidelityReport {
    pub features: Vec<FeatureFidelity>,
    /// Pearson correlation between mean real and simulated acf vectors.
    pub acf_similarity: Option<f64>,
    /// Pearson correlation between mean real and simulated pacf vectors.
    pub pacf_similarity: Option<f64>,
}

impl FidelityReport {
    pub fn to_csv_string(&self) -> String {
        let mut out = String::from(
            "feature,real_mean,sim_mean,histogram_similarity,wasserstein_distance,wasserstein_similarity,pearson_correlation\n",
        );
        for f in &self.features {
            let pearson = f
                .pearson_correlation
                .map_or(String::new(), |p| format!("{p}"));
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                f.feature,
                f.real_mean,
                f.sim_mean,
                f.histogram_similarity,
                f.wasserstein_distance,
                f.wasserstein_similarity,
                pearson
            ));
        }
        out
    }
}

fn mean_profile(series: &[Vec<f64>], max_lag: usize) -> Option<(Vec<f64>, Vec<f64>)> {
    let mut acf_sum = vec![0.0; max_lag + 1];
    let mut pacf_sum = vec![0.0; max_lag + 1];
    let mut count = 0.0;
    for s in series {
        if let Ok((acf, pacf)) = autocorrelation_profile(s, max_lag) {
            for (slot, v) in acf_sum.iter_mut().zip(&acf) {
                *slot += v;
            }
            for (slot, v) in pacf_sum.iter_mut().zip(&pacf) {
                *slot += v;
            }
            count += 1.0;
        }
    }
    if count == 0.0 {
        return None;
    }
    for v in acf_sum.iter_mut().chain(pacf_sum.iter_mut()) {
        *v /= count;
    }
    Some((acf_sum, pacf_sum))
}

/// Build a per-feature fidelity report between a real and a simulated
/// feature matrix, plus acf/pacf similarity from per-participant binned
/// event series.
pub fn fidelity_report(
    real: &FeatureMatrix,
    sim: &FeatureMatrix,
    real_series: &[Vec<f64>],
    sim_series: &[Vec<f64>],
) -> Result<FidelityReport> {
    if real.columns != sim.columns {
        return Err(Error::InvalidInput("feature column order mismatch".into()));
    }
    let mut features = Vec::with_capacity(real.columns.len());
    for (j, name) in real.columns.iter().enumerate() {
        let a = real.column(j);
        let b = sim.column(j);
        let w1 = wasserstein1(&a, &b)?;
        // rank pairing: correlate sorted columns when sizes match
        let pearson_corr = if a.len() == b.len() {
            let mut sa = a.clone();
            let mut sb = b.clone();
            sa.sort_by(f64::total_cmp);
            sb.sort_by(f64::total_cmp);
            pearson(&sa, &sb)
        } else {
            None
        };
        features.push(FeatureFidelity {
            feature: name.clone(),
            real_mean: a.iter().sum::<f64>() / a.len().max(1) as f64,
            sim_mean: b.iter().sum::<f64>() / b.len().max(1) as f64,
            histogram_similarity: histogram_similarity(&a, &b, DEFAULT_HIST_BINS)?,
            wasserstein_distance: w1,
            wasserstein_similarity: 1.0 / (1.0 + w1),
            pearson_correlation: pearson_corr,
        });
    }
    let (acf_similarity, pacf_similarity) = match (
        mean_profile(real_series, DEFAULT_MAX_LAG),
        mean_profile(sim_series, DEFAULT_MAX_LAG),
    ) {
        (Some((ra, rp)), Some((sa, sp))) => (pearson(&ra, &sa), pearson(&rp, &sp)),
        _ => (None, None),
    };
    Ok(FidelityReport {
        features,
        acf_similarity,
        pacf_similarity,
    })
}
