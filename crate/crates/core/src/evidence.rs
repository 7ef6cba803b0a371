//! Evidence from the candidate's identity `pi(y) = q(y|t) pi(t) / (z(t) pi(t|y))`.

use alloc::vec::Vec;

use crate::model::{check_dim, GaussianPrior};
use crate::{math, Error, Result};

/// `log q(y|theta*) + log pi(theta*) - log z(theta*) - log pi(theta*|y)`.
pub fn log_evidence_chib(
    theta_star: &[f64],
    y_stats: &[f64],
    prior: &GaussianPrior,
    log_z_hat: f64,
    log_post_hat: f64,
) -> Result<f64> {
    check_dim(theta_star.len(), y_stats.len())?;
    let v =
        math::dot(y_stats, theta_star) + prior.log_density(theta_star)? - log_z_hat - log_post_hat;
    if !v.is_finite() {
        return Err(Error::NonFinite);
    }
    Ok(v)
}

/// Component-wise mean of row-major draws.
pub fn draw_mean(draws: &[f64], dim: usize) -> Vec<f64> {
    let n = draws.len() / dim;
    let mut m = alloc::vec![0.0; dim];
    for row in draws.chunks_exact(dim) {
        for (a, x) in m.iter_mut().zip(row) {
            *a += x;
        }
    }
    m.iter_mut().for_each(|a| *a /= n as f64);
    m
}

/// Indices of the `r` draws nearest `center` in Euclidean distance.
///
/// Ties keep the earlier draw. The result is ordered by distance.
pub fn closest_indices(draws: &[f64], dim: usize, center: &[f64], r: usize) -> Result<Vec<usize>> {
    check_dim(dim, center.len())?;
    let n = draws.len() / dim;
    if r == 0 || r > n {
        return Err(Error::NotEnoughDraws {
            requested: r,
            available: n,
        });
    }
    let mut keyed: Vec<(f64, usize)> = draws
        .chunks_exact(dim)
        .enumerate()
        .map(|(i, row)| {
            let d2: f64 = row.iter().zip(center).map(|(a, b)| (a - b) * (a - b)).sum();
            (d2, i)
        })
        .collect();
    keyed.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    Ok(keyed.into_iter().take(r).map(|(_, i)| i).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn inflating_z_lowers_evidence_by_its_log() {
        let prior = GaussianPrior::standard(1);
        let a = log_evidence_chib(&[0.3], &[4.0], &prior, 3.0, -1.0).unwrap();
        let b = log_evidence_chib(&[0.3], &[4.0], &prior, 3.0 + 2f64.ln(), -1.0).unwrap();
        assert!((a - b - 2f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn ties_keep_earliest() {
        let draws = vec![1.0, -1.0, 0.5, 1.0, 0.0];
        assert_eq!(
            closest_indices(&draws, 1, &[0.0], 3).unwrap(),
            vec![4, 2, 0]
        );
        assert!(closest_indices(&draws, 1, &[0.0], 6).is_err());
        assert_eq!(draw_mean(&[1.0, 2.0, 3.0, 4.0], 2), vec![2.0, 3.0]);
    }
}
