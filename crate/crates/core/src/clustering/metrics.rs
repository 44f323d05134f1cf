//! Hard-assignment clustering diagnostics: silhouette score and
//! Davies-Bouldin index, both on Euclidean distances.

use crate::error::{Error, Result};

fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).powi(2))
        .sum::<f64>()
        .sqrt()
}

fn cluster_indices(labels: &[usize]) -> Vec<Vec<usize>> {
    let k = labels.iter().copied().max().map(|m| m + 1).unwrap_or(0);
    let mut groups = vec![Vec::new(); k];
    for (i, &l) in labels.iter().enumerate() {
        groups[l].push(i);
    }
    groups.retain(|g| !g.is_empty());
    groups
}

/// Mean silhouette over all points. Points in singleton clusters score 0.
pub fn silhouette_score(rows: &[Vec<f64>], labels: &[usize]) -> Result<f64> {
    if rows.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: rows.len(),
            actual: labels.len(),
        });
    }
    let groups = cluster_indices(labels);
    if groups.len() < 2 {
        return Err(Error::Clustering("silhouette needs at least 2 clusters".into()));
    }
    if groups.iter().all(|g| g.len() == 1) {
        return Err(Error::Clustering(
            "silhouette undefined for singleton-only clustering".into(),
        ));
    }
    let mut total = 0.0;
    for (gi, group) in groups.iter().enumerate() {
        for &i in group {
            if group.len() == 1 {
                continue; // singleton scores 0
            }
            let a = group
                .iter()
                .filter(|&&j| j != i)
                .map(|&j| euclid(&rows[i], &rows[j]))
                .sum::<f64>()
                / (group.len() - 1) as f64;
            let b = groups
                .iter()
                .enumerate()
                .filter(|(gj, _)| *gj != gi)
                .map(|(_, other)| {
                    other.iter().map(|&j| euclid(&rows[i], &rows[j])).sum::<f64>()
                        / other.len() as f64
                })
                .fold(f64::INFINITY, f64::min);
            total += (b - a) / a.max(b);
        }
    }
    Ok(total / rows.len() as f64)
}

/// Davies-Bouldin index with centroid Euclidean distances and mean
/// intra-cluster dispersion. Errors on coincident centroids.
pub fn davies_bouldin(rows: &[Vec<f64>], labels: &[usize]) -> Result<f64> {
    if rows.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: rows.len(),
            actual: labels.len(),
        });
    }
    let groups = cluster_indices(labels);
    if groups.len() < 2 {
        return Err(Error::Clustering("DBI needs at least 2 clusters".into()));
    }
    let d = rows[0].len();
    let centroids: Vec<Vec<f64>> = groups
        .iter()
        .map(|g| {
            let mut c = vec![0.0; d];
            for &i in g {
                for (j, v) in rows[i].iter().enumerate() {
                    c[j] += v;
                }
            }
            c.iter().map(|v| v / g.len() as f64).collect()
        })
        .collect();
    let dispersion: Vec<f64> = groups
        .iter()
        .zip(&centroids)
        .map(|(g, c)| g.iter().map(|&i| euclid(&rows[i], c)).sum::<f64>() / g.len() as f64)
        .collect();
    let k = groups.len();
    let mut total = 0.0;
    for i in 0..k {
        let mut worst = f64::NEG_INFINITY;
        for j in 0..k {
            if i == j {
                continue;
            }
            let m = euclid(&centroids[i], &centroids[j]);
            if m <= 0.0 {
                return Err(Error::Clustering("coincident cluster centroids".into()));
            }
            worst = worst.max((dispersion[i] + dispersion[j]) / m);
        }
        total += worst;
    }
    Ok(total / k as f64)
}
