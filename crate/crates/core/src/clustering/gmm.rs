//! EM for full-covariance Gaussian mixtures.
//!
//! Initialization is k-means++ over seeded restarts; each restart runs EM to
//! tolerance and the best final log-likelihood wins. Covariances are kept
//! positive definite by flooring eigenvalues at `config.reg` after every
//! M-step. If the floored M-step ever fails to improve the log-likelihood,
//! the previous parameters are kept and the fit stops, so the recorded
//! per-iteration log-likelihood history is nondecreasing.

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::seeding::{derive_seed, substream_rng};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GmmConfig {
    pub tol: f64,
    pub max_iter: usize,
    pub n_init: usize,
    pub reg: f64,
}

impl Default for GmmConfig {
    fn default() -> Self {
        GmmConfig {
            tol: 1e-4,
            max_iter: 200,
            n_init: 5,
            // floor large enough to keep near-degenerate components from
            // dominating the likelihood on standardized features
            reg: 1e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GmmModel {
    pub k: usize,
    pub weights: Vec<f64>,
    pub means: Vec<Vec<f64>>,
    /// Row-major symmetric covariance matrices, one per component.
    pub covariances: Vec<Vec<Vec<f64>>>,
    pub converged: bool,
    pub final_log_likelihood: f64,
    /// Per-iteration total log-likelihood of the winning restart.
    pub loglik_history: Vec<f64>,
}

impl GmmModel {
    pub fn dim(&self) -> usize {
        self.means.first().map(|m| m.len()).unwrap_or(0)
    }

    fn cov_matrix(&self, comp: usize) -> DMatrix<f64> {
        let d = self.dim();
        DMatrix::from_fn(d, d, |i, j| self.covariances[comp][i][j])
    }
}

struct Params {
    weights: Vec<f64>,
    means: Vec<DVector<f64>>,
    covs: Vec<DMatrix<f64>>,
}

/// Per-component Cholesky factors cached for density evaluation.
struct Densities {
    chol: Vec<Cholesky<f64, nalgebra::Dyn>>,
    log_det: Vec<f64>,
}

fn prepare(params: &Params) -> Result<Densities> {
    let mut chol = Vec::with_capacity(params.covs.len());
    let mut log_det = Vec::with_capacity(params.covs.len());
    for cov in &params.covs {
        let c = Cholesky::new(cov.clone())
            .ok_or_else(|| Error::Clustering("covariance not positive definite".into()))?;
        let ld = 2.0 * c.l().diagonal().iter().map(|v| v.ln()).sum::<f64>();
        chol.push(c);
        log_det.push(ld);
    }
    Ok(Densities { chol, log_det })
}

/// ln N(x; mu_k, Sigma_k) + ln w_k
fn log_weighted_density(
    params: &Params,
    dens: &Densities,
    comp: usize,
    x: &DVector<f64>,
) -> f64 {
    let d = x.len() as f64;
    let diff = x - &params.means[comp];
    let solved = dens.chol[comp].solve(&diff);
    let maha = diff.dot(&solved);
    params.weights[comp].ln()
        - 0.5 * (d * (2.0 * std::f64::consts::PI).ln() + dens.log_det[comp] + maha)
}

fn log_sum_exp(values: &[f64]) -> f64 {
    let m = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + values.iter().map(|v| (v - m).exp()).sum::<f64>().ln()
}

fn to_vectors(rows: &[Vec<f64>]) -> Vec<DVector<f64>> {
    rows.iter().map(|r| DVector::from_column_slice(r)).collect()
}

/// E-step: responsibilities and total log-likelihood.
fn e_step(params: &Params, xs: &[DVector<f64>]) -> Result<(Vec<Vec<f64>>, f64)> {
    let dens = prepare(params)?;
    let k = params.weights.len();
    let mut resp = Vec::with_capacity(xs.len());
    let mut total = 0.0;
    for x in xs {
        let logs: Vec<f64> = (0..k)
            .map(|c| log_weighted_density(params, &dens, c, x))
            .collect();
        let lse = log_sum_exp(&logs);
        total += lse;
        resp.push(logs.iter().map(|l| (l - lse).exp()).collect());
    }
    Ok((resp, total))
}

fn m_step(resp: &[Vec<f64>], xs: &[DVector<f64>], k: usize, reg: f64) -> Params {
    let n = xs.len();
    let d = xs[0].len();
    let mut weights = vec![0.0; k];
    let mut means = vec![DVector::zeros(d); k];
    for (r, x) in resp.iter().zip(xs) {
        for c in 0..k {
            weights[c] += r[c];
            means[c] += x * r[c];
        }
    }
    let mut covs = Vec::with_capacity(k);
    for c in 0..k {
        let nk = weights[c].max(1e-300);
        means[c] /= nk;
        let mut cov = DMatrix::zeros(d, d);
        for (r, x) in resp.iter().zip(xs) {
            let diff = x - &means[c];
            cov += (&diff * diff.transpose()) * r[c];
        }
        cov /= nk;
        covs.push(floor_eigenvalues(cov, reg));
    }
    for w in weights.iter_mut() {
        *w /= n as f64;
    }
    Params {
        weights,
        means,
        covs,
    }
}

/// Clamp every eigenvalue of a symmetric matrix at `floor`.
pub(crate) fn floor_eigenvalues(cov: DMatrix<f64>, floor: f64) -> DMatrix<f64> {
    let sym = (&cov + cov.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let vals = eig.eigenvalues.map(|v| v.max(floor));
    let v = &eig.eigenvectors;
    let rebuilt = v * DMatrix::from_diagonal(&vals) * v.transpose();
    (&rebuilt + rebuilt.transpose()) * 0.5
}

/// k-means++ center selection.
fn kmeanspp_centers(xs: &[DVector<f64>], k: usize, rng: &mut impl Rng) -> Vec<DVector<f64>> {
    let mut centers = Vec::with_capacity(k);
    centers.push(xs[rng.gen_range(0..xs.len())].clone());
    let mut d2: Vec<f64> = xs
        .iter()
        .map(|x| (x - &centers[0]).norm_squared())
        .collect();
    while centers.len() < k {
        let total: f64 = d2.iter().sum();
        let idx = if total <= 0.0 {
            rng.gen_range(0..xs.len())
        } else {
            let mut target = rng.gen::<f64>() * total;
            let mut chosen = xs.len() - 1;
            for (i, &w) in d2.iter().enumerate() {
                target -= w;
                if target <= 0.0 {
                    chosen = i;
                    break;
                }
            }
            chosen
        };
        let c = xs[idx].clone();
        for (i, x) in xs.iter().enumerate() {
            d2[i] = d2[i].min((x - &c).norm_squared());
        }
        centers.push(c);
    }
    centers
}

fn init_params(xs: &[DVector<f64>], k: usize, reg: f64, rng: &mut impl Rng) -> Params {
    let centers = kmeanspp_centers(xs, k, rng);
    // hard-assign to nearest center, then one M-step
    let resp: Vec<Vec<f64>> = xs
        .iter()
        .map(|x| {
            let mut best = 0;
            let mut best_d = f64::INFINITY;
            for (c, center) in centers.iter().enumerate() {
                let d = (x - center).norm_squared();
                if d < best_d {
                    best_d = d;
                    best = c;
                }
            }
            (0..k).map(|c| if c == best { 1.0 } else { 0.0 }).collect()
        })
        .collect();
    let mut params = m_step(&resp, xs, k, reg);
    // guard empty components: reseat on a random point with unit covariance
    let d = xs[0].len();
    for c in 0..k {
        if params.weights[c] * (xs.len() as f64) < 1e-9 {
            params.means[c] = xs[rng.gen_range(0..xs.len())].clone();
            params.covs[c] = DMatrix::identity(d, d);
            params.weights[c] = 1.0 / xs.len() as f64;
        }
    }
    let total: f64 = params.weights.iter().sum();
    for w in params.weights.iter_mut() {
        *w /= total;
    }
    params
}

pub fn fit_gmm(x: &FeatureMatrix, k: usize, seed: u64, config: &GmmConfig) -> Result<GmmModel> {
    let n = x.n_rows();
    if k < 1 {
        return Err(Error::InvalidInput("k must be at least 1".into()));
    }
    if n < k {
        return Err(Error::Clustering(format!("{n} rows cannot support k={k}")));
    }
    for row in &x.rows {
        if row.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite feature value".into()));
        }
    }
    let xs = to_vectors(&x.rows);
    let mut best: Option<GmmModel> = None;
    for restart in 0..config.n_init {
        let mut rng = substream_rng(derive_seed(seed, &[restart as u64]), &[]);
        let model = run_em(&xs, k, config, &mut rng)?;
        let better = match &best {
            None => true,
            Some(b) => model.final_log_likelihood > b.final_log_likelihood,
        };
        if better {
            best = Some(model);
        }
    }
    Ok(best.expect("n_init >= 1"))
}

fn run_em(xs: &[DVector<f64>], k: usize, config: &GmmConfig, rng: &mut impl Rng) -> Result<GmmModel> {
    let mut params = init_params(xs, k, config.reg, rng);
    let (mut resp, mut logl) = e_step(&params, xs)?;
    let mut history = vec![logl];
    let mut converged = false;
    for _ in 0..config.max_iter {
        let new_params = m_step(&resp, xs, k, config.reg);
        let (new_resp, new_logl) = e_step(&new_params, xs)?;
        if new_logl < logl - 1e-12 {
            // floored M-step stopped improving; keep the previous parameters
            converged = true;
            break;
        }
        let improvement = new_logl - logl;
        params = new_params;
        resp = new_resp;
        logl = new_logl;
        history.push(logl);
        if improvement < config.tol {
            converged = true;
            break;
        }
    }
    Ok(GmmModel {
        k,
        weights: params.weights.clone(),
        means: params.means.iter().map(|m| m.as_slice().to_vec()).collect(),
        covariances: params
            .covs
            .iter()
            .map(|c| {
                (0..c.nrows())
                    .map(|i| (0..c.ncols()).map(|j| c[(i, j)]).collect())
                    .collect()
            })
            .collect(),
        converged,
        final_log_likelihood: logl,
        loglik_history: history,
    })
}

fn model_params(model: &GmmModel) -> Params {
    Params {
        weights: model.weights.clone(),
        means: model.means.iter().map(|m| DVector::from_column_slice(m)).collect(),
        covs: (0..model.k).map(|c| model.cov_matrix(c)).collect(),
    }
}

/// Total log-likelihood of `rows` under a fitted model.
pub fn log_likelihood(model: &GmmModel, rows: &[Vec<f64>]) -> Result<f64> {
    check_dims(model, rows)?;
    let params = model_params(model);
    let (_, logl) = e_step(&params, &to_vectors(rows))?;
    Ok(logl)
}

/// Posterior responsibility matrix (rows sum to 1).
pub fn responsibilities(model: &GmmModel, x: &FeatureMatrix) -> Result<Vec<Vec<f64>>> {
    check_dims(model, &x.rows)?;
    let params = model_params(model);
    let (resp, _) = e_step(&params, &to_vectors(&x.rows))?;
    Ok(resp)
}

/// Argmax posterior per row; ties break toward the smaller component index.
pub fn assign_clusters(model: &GmmModel, x: &FeatureMatrix) -> Result<Vec<usize>> {
    let resp = responsibilities(model, x)?;
    Ok(resp
        .iter()
        .map(|r| {
            let mut best = 0;
            for (c, &v) in r.iter().enumerate() {
                if v > r[best] {
                    best = c;
                }
            }
            best
        })
        .collect())
}

fn check_dims(model: &GmmModel, rows: &[Vec<f64>]) -> Result<()> {
    if let Some(row) = rows.first() {
        if row.len() != model.dim() {
            return Err(Error::DimensionMismatch {
                expected: model.dim(),
                actual: row.len(),
            });
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::{mean, pop_std};

    fn matrix(rows: Vec<Vec<f64>>) -> FeatureMatrix {
        let d = rows[0].len();
        let cols: Vec<&str> = (0..d).map(|_| "c").collect();
        let mut m = FeatureMatrix::new(&cols);
        for (i, r) in rows.into_iter().enumerate() {
            m.push_row(format!("r{i}"), r);
        }
        m
    }

    #[test]
    fn k1_is_sample_mean_and_covariance() {
        let rows = vec![vec![1.0, 2.0], vec![3.0, 4.0], vec![5.0, 9.0], vec![-1.0, 0.5]];
        let x = matrix(rows.clone());
        let model = fit_gmm(&x, 1, 0, &GmmConfig::default()).unwrap();
        let c0: Vec<f64> = rows.iter().map(|r| r[0]).collect();
        let c1: Vec<f64> = rows.iter().map(|r| r[1]).collect();
        assert!((model.means[0][0] - mean(&c0)).abs() < 1e-9);
        assert!((model.means[0][1] - mean(&c1)).abs() < 1e-9);
        assert!((model.covariances[0][0][0] - pop_std(&c0).powi(2)).abs() < 1e-6);
        assert_eq!(model.weights, vec![1.0]);
    }

    #[test]
    fn rows_fewer_than_k_rejected() {
        let x = matrix(vec![vec![0.0], vec![1.0]]);
        assert!(fit_gmm(&x, 3, 0, &GmmConfig::default()).is_err());
    }

    #[test]
    fn non_finite_input_rejected() {
        let x = matrix(vec![vec![0.0], vec![f64::NAN]]);
        assert!(fit_gmm(&x, 1, 0, &GmmConfig::default()).is_err());
    }

    #[test]
    fn loglik_history_nondecreasing() {
        let rows: Vec<Vec<f64>> = (0..60)
            .map(|i| vec![(i % 7) as f64, ((i * 3) % 5) as f64])
            .collect();
        let x = matrix(rows);
        let model = fit_gmm(&x, 3, 1, &GmmConfig::default()).unwrap();
        for w in model.loglik_history.windows(2) {
            assert!(w[1] >= w[0] - 1e-9, "history decreased: {:?}", model.loglik_history);
        }
    }

    #[test]
    fn responsibilities_row_stochastic() {
        let rows: Vec<Vec<f64>> = (0..30).map(|i| vec![i as f64 * 0.3, (i % 4) as f64]).collect();
        let x = matrix(rows);
        let model = fit_gmm(&x, 2, 0, &GmmConfig::default()).unwrap();
        for r in responsibilities(&model, &x).unwrap() {
            let s: f64 = r.iter().sum();
            assert!((s - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn covariance_eigenvalues_floored() {
        // coincident points force a singular scatter matrix
        let rows = vec![vec![1.0, 1.0]; 10];
        let x = matrix(rows);
        let model = fit_gmm(&x, 1, 0, &GmmConfig::default()).unwrap();
        let cov = DMatrix::from_fn(2, 2, |i, j| model.covariances[0][i][j]);
        let eig = SymmetricEigen::new(cov);
        for v in eig.eigenvalues.iter() {
            assert!(*v >= 1e-6 - 1e-12);
        }
    }

    #[test]
    fn point_at_component_mean_assigned_there() {
        let model = GmmModel {
            k: 2,
            weights: vec![0.5, 0.5],
            means: vec![vec![0.0], vec![10.0]],
            covariances: vec![vec![vec![1.0]], vec![vec![1.0]]],
            converged: true,
            final_log_likelihood: 0.0,
            loglik_history: vec![],
        };
        let x = matrix(vec![vec![10.0]]);
        assert_eq!(assign_clusters(&model, &x).unwrap(), vec![1]);
    }

    #[test]
    fn symmetric_midpoint_breaks_tie_to_component_zero() {
        let model = GmmModel {
            k: 2,
            weights: vec![0.5, 0.5],
            means: vec![vec![-1.0], vec![1.0]],
            covariances: vec![vec![vec![1.0]], vec![vec![1.0]]],
            converged: true,
            final_log_likelihood: 0.0,
            loglik_history: vec![],
        };
        let x = matrix(vec![vec![0.0]]);
        assert_eq!(assign_clusters(&model, &x).unwrap(), vec![0]);
    }

    #[test]
    fn labels_match_direct_density_oracle() {
        let model = GmmModel {
            k: 3,
            weights: vec![0.2, 0.5, 0.3],
            means: vec![vec![0.0, 0.0], vec![3.0, 1.0], vec![-2.0, 4.0]],
            covariances: vec![
                vec![vec![1.0, 0.2], vec![0.2, 2.0]],
                vec![vec![0.5, 0.0], vec![0.0, 0.5]],
                vec![vec![2.0, -0.3], vec![-0.3, 1.0]],
            ],
            converged: true,
            final_log_likelihood: 0.0,
            loglik_history: vec![],
        };
        let rows: Vec<Vec<f64>> = (0..25)
            .map(|i| vec![(i as f64 * 0.7) - 8.0, ((i * 13 % 17) as f64) * 0.5 - 3.0])
            .collect();
        let x = matrix(rows.clone());
        let labels = assign_clusters(&model, &x).unwrap();
        // oracle: full density formula with explicit 2x2 inverse
        for (row, &label) in rows.iter().zip(&labels) {
            let mut best = (0, f64::NEG_INFINITY);
            for c in 0..3 {
                let m = &model.means[c];
                let s = &model.covariances[c];
                let det = s[0][0] * s[1][1] - s[0][1] * s[1][0];
                let inv = [
                    [s[1][1] / det, -s[0][1] / det],
                    [-s[1][0] / det, s[0][0] / det],
                ];
                let dx = row[0] - m[0];
                let dy = row[1] - m[1];
                let maha =
                    dx * (inv[0][0] * dx + inv[0][1] * dy) + dy * (inv[1][0] * dx + inv[1][1] * dy);
                let logp = model.weights[c].ln()
                    - 0.5 * (2.0 * (2.0 * std::f64::consts::PI).ln() + det.ln() + maha);
                if logp > best.1 {
                    best = (c, logp);
                }
            }
            assert_eq!(label, best.0);
        }
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let model = GmmModel {
            k: 1,
            weights: vec![1.0],
            means: vec![vec![0.0, 0.0]],
            covariances: vec![vec![vec![1.0, 0.0], vec![0.0, 1.0]]],
            converged: true,
            final_log_likelihood: 0.0,
            loglik_history: vec![],
        };
        let x = matrix(vec![vec![0.0]]);
        assert!(assign_clusters(&model, &x).is_err());
    }
}
