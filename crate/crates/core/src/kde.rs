//! Gaussian kernel density estimation for low-dimensional posterior samples.

use alloc::vec::Vec;

use crate::math::{self, LogSumExp, LN_2PI};
use crate::{Error, Result};

pub const MAX_KDE_DIM: usize = 3;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum KernelKind {
    /// Independent kernel per coordinate, Silverman bandwidth `h_d = sd_d (4 / ((d + 2) n))^(1 / (d + 4))`.
    #[default]
    Product,
    /// Kernel covariance proportional to the sample covariance, same scale factor.
    FullCovariance,
}

#[derive(Clone, Debug)]
pub struct Kde {
    dim: usize,
    /// Samples mapped through the inverse kernel factor, so each kernel is standard normal.
    whitened: Vec<f64>,
    /// Lower-triangular kernel factor `L` with `H = L L^T`.
    factor: Vec<f64>,
    log_norm: f64,
}

/// Silverman's rule-of-thumb scale factor.
pub fn silverman_factor(dim: usize, n: usize) -> f64 {
    math::powf(
        4.0 / ((dim as f64 + 2.0) * n as f64),
        1.0 / (dim as f64 + 4.0),
    )
}

impl Kde {
    /// `samples` is row-major with `dim` values per sample.
    pub fn new(samples: &[f64], dim: usize, kind: KernelKind) -> Result<Self> {
        if dim == 0 || dim > MAX_KDE_DIM {
            return Err(Error::InvalidConfig(
                "kernel density dimension must be 1 to 3".into(),
            ));
        }
        if !samples.len().is_multiple_of(dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: samples.len() % dim,
            });
        }
        let n = samples.len() / dim;
        if n < 2 {
            return Err(Error::TooFewSamples { needed: 2, got: n });
        }
        let mut mean = alloc::vec![0.0; dim];
        for row in samples.chunks_exact(dim) {
            for (m, x) in mean.iter_mut().zip(row) {
                *m += x / n as f64;
            }
        }
        let mut cov = alloc::vec![0.0; dim * dim];
        for row in samples.chunks_exact(dim) {
            for a in 0..dim {
                for b in 0..dim {
                    cov[a * dim + b] += (row[a] - mean[a]) * (row[b] - mean[b]) / (n - 1) as f64;
                }
            }
        }
        for d in 0..dim {
            let v = cov[d * dim + d];
            if !(v > 1e-300 * (1.0 + mean[d] * mean[d])) {
                return Err(Error::DegenerateSample(d));
            }
        }
        let c = silverman_factor(dim, n);
        let mut h = alloc::vec![0.0; dim * dim];
        match kind {
            KernelKind::Product => {
                for d in 0..dim {
                    h[d * dim + d] = c * c * cov[d * dim + d];
                }
            }
            KernelKind::FullCovariance => {
                for (hv, cv) in h.iter_mut().zip(&cov) {
                    *hv = c * c * cv;
                }
            }
        }
        let factor = cholesky(&h, dim).ok_or(Error::DegenerateSample(0))?;
        let log_det: f64 = (0..dim).map(|d| math::ln(factor[d * dim + d])).sum();
        let mut whitened = Vec::with_capacity(samples.len());
        for row in samples.chunks_exact(dim) {
            whitened.extend(forward_solve(&factor, dim, row));
        }
        Ok(Self {
            dim,
            whitened,
            factor,
            log_norm: -0.5 * dim as f64 * LN_2PI - log_det - math::ln(n as f64),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.whitened.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.whitened.is_empty()
    }

    pub fn log_density(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        let z = forward_solve(&self.factor, self.dim, x);
        let mut acc = LogSumExp::default();
        for row in self.whitened.chunks_exact(self.dim) {
            let q: f64 = row.iter().zip(&z).map(|(a, b)| (a - b) * (a - b)).sum();
            acc.add(-0.5 * q);
        }
        Ok(acc.value() + self.log_norm)
    }
}

/// Product-kernel estimate of `log p(point)` from `samples`.
pub fn kde_log_density<S: AsRef<[f64]>>(samples: &[S], point: &[f64]) -> Result<f64> {
    let dim = point.len();
    let mut flat = Vec::with_capacity(samples.len() * dim);
    for s in samples {
        let s = s.as_ref();
        if s.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: s.len(),
            });
        }
        flat.extend_from_slice(s);
    }
    Kde::new(&flat, dim, KernelKind::Product)?.log_density(point)
}

fn cholesky(a: &[f64], d: usize) -> Option<Vec<f64>> {
    let mut l = alloc::vec![0.0; d * d];
    for i in 0..d {
        for j in 0..=i {
            let mut s = a[i * d + j];
            for k in 0..j {
                s -= l[i * d + k] * l[j * d + k];
            }
            if i == j {
                if !(s > 0.0) {
                    return None;
                }
                l[i * d + i] = math::sqrt(s);
            } else {
                l[i * d + j] = s / l[j * d + j];
            }
        }
    }
    Some(l)
}

fn forward_solve(l: &[f64], d: usize, b: &[f64]) -> Vec<f64> {
    let mut x = alloc::vec![0.0; d];
    for i in 0..d {
        let mut s = b[i];
        for k in 0..i {
            s -= l[i * d + k] * x[k];
        }
        x[i] = s / l[i * d + i];
    }
    x
}
