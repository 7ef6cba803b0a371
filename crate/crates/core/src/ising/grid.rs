//! Exact posterior and evidence by trapezoidal integration over a parameter grid.

use alloc::vec::Vec;

use crate::math::{self, log_sum_exp};
use crate::model::{check_dim, GaussianPrior, LogPartition};
use crate::{Error, Result};

/// Boundary nodes may carry at most this fraction of the peak unnormalized density.
pub const COVERAGE_TOLERANCE: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Axis {
    pub lower: f64,
    pub upper: f64,
    pub step: f64,
}

impl Axis {
    pub fn new(lower: f64, upper: f64, step: f64) -> Result<Self> {
        if !(lower < upper) {
            return Err(Error::InvalidGrid("lower bound must be below upper bound"));
        }
        if !(step > 0.0) || step > upper - lower {
            return Err(Error::InvalidGrid(
                "step must be positive and fit in the range",
            ));
        }
        Ok(Self { lower, upper, step })
    }

    /// Axis with `nodes` equally spaced nodes including both ends.
    pub fn with_nodes(lower: f64, upper: f64, nodes: usize) -> Result<Self> {
        if nodes < 2 {
            return Err(Error::InvalidGrid("need at least two nodes"));
        }
        Self::new(lower, upper, (upper - lower) / (nodes - 1) as f64)
    }

    pub fn nodes(&self) -> usize {
        libm::round((self.upper - self.lower) / self.step) as usize + 1
    }

    #[inline]
    pub fn node(&self, i: usize) -> f64 {
        self.lower + i as f64 * self.step
    }

    fn log_weights(&self) -> Vec<f64> {
        let n = self.nodes();
        (0..n)
            .map(|i| {
                let w = if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
                math::ln(w * self.step)
            })
            .collect()
    }

    /// Same range, half the step.
    pub fn refined(&self) -> Self {
        Self {
            step: self.step / 2.0,
            ..*self
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GridSpec {
    pub axes: Vec<Axis>,
}

impl GridSpec {
    pub fn new(axes: Vec<Axis>) -> Result<Self> {
        if axes.is_empty() {
            return Err(Error::InvalidGrid("no axes"));
        }
        Ok(Self { axes })
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn len(&self) -> usize {
        self.axes.iter().map(Axis::nodes).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn refined(&self) -> Self {
        Self {
            axes: self.axes.iter().map(Axis::refined).collect(),
        }
    }

    /// Multi-index of flat node `k`; the last axis varies fastest.
    fn unravel(&self, mut k: usize, idx: &mut [usize]) {
        for (d, axis) in self.axes.iter().enumerate().rev() {
            let n = axis.nodes();
            idx[d] = k % n;
            k /= n;
        }
    }

    fn point(&self, idx: &[usize], out: &mut [f64]) {
        for ((o, a), &i) in out.iter_mut().zip(&self.axes).zip(idx) {
            *o = a.node(i);
        }
    }
}

/// Unnormalized log posterior `log q(y|theta) + log pi(theta) - log z(theta)` at every node.
#[derive(Clone, Debug)]
pub struct GridPosterior {
    grid: GridSpec,
    log_unnorm: Vec<f64>,
    log_weight: Vec<f64>,
    log_evidence: f64,
}

/// Exact log posterior density at `theta`, given the exact log evidence.
pub fn exact_log_posterior_density(
    theta: &[f64],
    y_stats: &[f64],
    prior: &GaussianPrior,
    oracle: &dyn LogPartition,
    log_evidence: f64,
) -> f64 {
    math::dot(y_stats, theta) + prior.log_density_unchecked(theta)
        - oracle.log_z(theta)
        - log_evidence
}

pub fn exact_posterior_grid(
    y_stats: &[f64],
    prior: &GaussianPrior,
    grid: &GridSpec,
    oracle: &dyn LogPartition,
) -> Result<GridPosterior> {
    let d = y_stats.len();
    check_dim(d, prior.dim())?;
    check_dim(d, grid.dim())?;
    check_dim(d, oracle.dim())?;
    let axis_w: Vec<Vec<f64>> = grid.axes.iter().map(Axis::log_weights).collect();
    let n = grid.len();
    let mut idx = alloc::vec![0usize; d];
    let mut theta = alloc::vec![0.0; d];
    let mut log_unnorm = Vec::with_capacity(n);
    let mut log_weight = Vec::with_capacity(n);
    let mut boundary_max = f64::NEG_INFINITY;
    for k in 0..n {
        grid.unravel(k, &mut idx);
        grid.point(&idx, &mut theta);
        let v =
            math::dot(y_stats, &theta) + prior.log_density_unchecked(&theta) - oracle.log_z(&theta);
        let on_boundary = idx
            .iter()
            .zip(&grid.axes)
            .any(|(&i, a)| i == 0 || i + 1 == a.nodes());
        if on_boundary {
            boundary_max = boundary_max.max(v);
        }
        log_unnorm.push(v);
        log_weight.push(idx.iter().zip(&axis_w).map(|(&i, w)| w[i]).sum());
    }
    let peak = log_unnorm.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let ratio = math::exp(boundary_max - peak);
    if ratio > COVERAGE_TOLERANCE {
        return Err(Error::GridCoverage {
            ratio,
            tolerance: COVERAGE_TOLERANCE,
        });
    }
    let terms: Vec<f64> = log_unnorm
        .iter()
        .zip(&log_weight)
        .map(|(u, w)| u + w)
        .collect();
    let log_evidence = log_sum_exp(&terms);
    Ok(GridPosterior {
        grid: grid.clone(),
        log_unnorm,
        log_weight,
        log_evidence,
    })
}

impl GridPosterior {
    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn log_evidence(&self) -> f64 {
        self.log_evidence
    }

    /// Normalized posterior density at each node.
    pub fn densities(&self) -> Vec<f64> {
        self.log_unnorm
            .iter()
            .map(|u| math::exp(u - self.log_evidence))
            .collect()
    }

    /// Trapezoidal integral of the normalized density; one by construction.
    pub fn total_mass(&self) -> f64 {
        self.log_unnorm
            .iter()
            .zip(&self.log_weight)
            .map(|(u, w)| math::exp(u + w - self.log_evidence))
            .sum()
    }

    fn expectation(&self, f: impl Fn(&[f64]) -> f64) -> f64 {
        let d = self.grid.dim();
        let mut idx = alloc::vec![0usize; d];
        let mut theta = alloc::vec![0.0; d];
        let mut acc = 0.0;
        for (k, (u, w)) in self.log_unnorm.iter().zip(&self.log_weight).enumerate() {
            self.grid.unravel(k, &mut idx);
            self.grid.point(&idx, &mut theta);
            acc += math::exp(u + w - self.log_evidence) * f(&theta);
        }
        acc
    }

    pub fn mean(&self) -> Vec<f64> {
        (0..self.grid.dim())
            .map(|k| self.expectation(|t| t[k]))
            .collect()
    }

    pub fn covariance(&self) -> Vec<Vec<f64>> {
        let m = self.mean();
        let d = m.len();
        (0..d)
            .map(|i| {
                (0..d)
                    .map(|j| self.expectation(|t| (t[i] - m[i]) * (t[j] - m[j])))
                    .collect()
            })
            .collect()
    }

    pub fn sd(&self) -> Vec<f64> {
        self.covariance()
            .iter()
            .enumerate()
            .map(|(i, row)| math::sqrt(row[i]))
            .collect()
    }

    /// Probability of `lower <= theta[k] < upper` under the marginal of component `k`.
    ///
    /// Uses a piecewise-linear marginal density between nodes.
    pub fn marginal_mass(&self, k: usize, lower: f64, upper: f64) -> f64 {
        let (nodes, dens) = self.marginal(k);
        let mut mass = 0.0;
        for i in 0..nodes.len() - 1 {
            let (a, b) = (nodes[i], nodes[i + 1]);
            let lo = a.max(lower);
            let hi = b.min(upper);
            if hi <= lo {
                continue;
            }
            let slope = (dens[i + 1] - dens[i]) / (b - a);
            let f = |x: f64| dens[i] + slope * (x - a);
            mass += 0.5 * (f(lo) + f(hi)) * (hi - lo);
        }
        mass
    }

    /// Node positions and normalized marginal density of component `k`.
    pub fn marginal(&self, k: usize) -> (Vec<f64>, Vec<f64>) {
        let axis = self.grid.axes[k];
        let n = axis.nodes();
        let mut dens = alloc::vec![0.0; n];
        let d = self.grid.dim();
        let mut idx = alloc::vec![0usize; d];
        for (j, (u, w)) in self.log_unnorm.iter().zip(&self.log_weight).enumerate() {
            self.grid.unravel(j, &mut idx);
            // Drop this axis' own weight; integrate the others.
            let own = axis.log_weights()[idx[k]];
            dens[idx[k]] += math::exp(u + w - own - self.log_evidence);
        }
        ((0..n).map(|i| axis.node(i)).collect(), dens)
    }
}

/// Mode of the exact log posterior and the marginal standard deviations from its curvature.
pub fn posterior_mode(
    y_stats: &[f64],
    prior: &GaussianPrior,
    oracle: &dyn LogPartition,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let d = y_stats.len();
    check_dim(d, prior.dim())?;
    check_dim(d, oracle.dim())?;
    let f = |t: &[f64]| math::dot(y_stats, t) + prior.log_density_unchecked(t) - oracle.log_z(t);
    let mut theta = prior.mean().to_vec();
    let mut value = f(&theta);
    let mut hess = alloc::vec![alloc::vec![0.0; d]; d];
    for _ in 0..200 {
        let (grad, h) = derivatives(&f, &theta);
        hess = h;
        let step = solve(&hess, &grad).ok_or(Error::InvalidGrid("singular curvature"))?;
        // Newton ascent: theta - H^-1 g with H negative definite.
        let mut scale = 1.0;
        let mut moved = false;
        for _ in 0..40 {
            let cand: Vec<f64> = theta
                .iter()
                .zip(&step)
                .map(|(t, s)| t - scale * s)
                .collect();
            let v = f(&cand);
            if v >= value - 1e-12 {
                let delta: f64 = cand.iter().zip(&theta).map(|(a, b)| (a - b).abs()).sum();
                theta = cand;
                value = v;
                moved = delta > 1e-10;
                break;
            }
            scale *= 0.5;
        }
        if !moved {
            break;
        }
    }
    let cov = invert(&hess).ok_or(Error::InvalidGrid("singular curvature"))?;
    let sd = (0..d)
        .map(|i| math::sqrt((-cov[i][i]).max(1e-12)))
        .collect();
    Ok((theta, sd))
}

fn derivatives(f: &impl Fn(&[f64]) -> f64, theta: &[f64]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let d = theta.len();
    let h = 1e-3;
    let mut x = theta.to_vec();
    let f0 = f(&x);
    let mut grad = alloc::vec![0.0; d];
    let mut hess = alloc::vec![alloc::vec![0.0; d]; d];
    for i in 0..d {
        x[i] = theta[i] + h;
        let fp = f(&x);
        x[i] = theta[i] - h;
        let fm = f(&x);
        x[i] = theta[i];
        grad[i] = (fp - fm) / (2.0 * h);
        hess[i][i] = (fp - 2.0 * f0 + fm) / (h * h);
        for j in 0..i {
            let mut g = |a: f64, b: f64| {
                x[i] = theta[i] + a;
                x[j] = theta[j] + b;
                let v = f(&x);
                x[i] = theta[i];
                x[j] = theta[j];
                v
            };
            let v = (g(h, h) - g(h, -h) - g(-h, h) + g(-h, -h)) / (4.0 * h * h);
            hess[i][j] = v;
            hess[j][i] = v;
        }
    }
    (grad, hess)
}

fn invert(a: &[Vec<f64>]) -> Option<Vec<Vec<f64>>> {
    let d = a.len();
    let mut cols = Vec::with_capacity(d);
    for j in 0..d {
        let mut e = alloc::vec![0.0; d];
        e[j] = 1.0;
        cols.push(solve(a, &e)?);
    }
    Some(
        (0..d)
            .map(|i| (0..d).map(|j| cols[j][i]).collect())
            .collect(),
    )
}

/// Gaussian elimination with partial pivoting; `d` is tiny here.
fn solve(a: &[Vec<f64>], b: &[f64]) -> Option<Vec<f64>> {
    let d = b.len();
    let mut m: Vec<Vec<f64>> = a
        .iter()
        .zip(b)
        .map(|(row, &bi)| {
            let mut r = row.clone();
            r.push(bi);
            r
        })
        .collect();
    for c in 0..d {
        let p = (c..d).max_by(|&i, &j| m[i][c].abs().total_cmp(&m[j][c].abs()))?;
        if m[p][c].abs() < 1e-300 {
            return None;
        }
        m.swap(c, p);
        for r in 0..d {
            if r != c {
                let f = m[r][c] / m[c][c];
                let pivot = m[c].clone();
                for (x, p) in m[r][c..=d].iter_mut().zip(&pivot[c..=d]) {
                    *x -= f * p;
                }
            }
        }
    }
    Some((0..d).map(|i| m[i][d] / m[i][i]).collect())
}

/// Grid spanning `mode +- span_sd * sd` in each dimension.
pub fn grid_around_mode(mode: &[f64], sd: &[f64], span_sd: f64, nodes: usize) -> Result<GridSpec> {
    let axes = mode
        .iter()
        .zip(sd)
        .map(|(&m, &s)| Axis::with_nodes(m - span_sd * s, m + span_sd * s, nodes))
        .collect::<Result<Vec<_>>>()?;
    GridSpec::new(axes)
}

/// Places a grid around the exact mode (`+-span_sd` curvature standard
/// deviations, `nodes` per dimension) and widens it until the boundary
/// carries negligible mass.
pub fn auto_posterior_grid(
    y_stats: &[f64],
    prior: &GaussianPrior,
    oracle: &dyn LogPartition,
    span_sd: f64,
    nodes: usize,
) -> Result<GridPosterior> {
    let (mode, sd) = posterior_mode(y_stats, prior, oracle)?;
    let mut span = span_sd;
    let mut last = Error::InvalidGrid("no attempt");
    for _ in 0..8 {
        let grid = grid_around_mode(&mode, &sd, span, nodes)?;
        match exact_posterior_grid(y_stats, prior, &grid, oracle) {
            Ok(post) => return Ok(post),
            Err(e @ Error::GridCoverage { .. }) => {
                last = e;
                span *= 1.5;
            }
            Err(e) => return Err(e),
        }
    }
    Err(last)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ising::exact::{BruteForce, StateCounts, TransferOracle};
    use crate::ModelSpec;
    use alloc::vec;

    /// Independent route: adaptive Simpson on `q pi / z` with the enumeration oracle.
    fn simpson_evidence(y: f64, prior: &GaussianPrior, oracle: &BruteForce, a: f64, b: f64) -> f64 {
        let f = |t: f64| (y * t + prior.log_density_unchecked(&[t]) - oracle.log_z(&[t])).exp();
        let n = 20_000;
        let h = (b - a) / n as f64;
        let mut s = f(a) + f(b);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            s += w * f(a + i as f64 * h);
        }
        s * h / 3.0
    }

    #[test]
    fn one_dim_evidence_matches_quadrature() {
        let spec = ModelSpec::ising_first_order(2, 2).unwrap();
        let prior = GaussianPrior::standard(1);
        let brute = BruteForce::new(&spec).unwrap();
        for y in [0.0, -4.0] {
            let grid = GridSpec::new(vec![Axis::new(-40.0, 40.0, 0.005).unwrap()]).unwrap();
            let post = exact_posterior_grid(&[y], &prior, &grid, &brute).unwrap();
            let reference = simpson_evidence(y, &prior, &brute, -40.0, 40.0).ln();
            assert!((post.log_evidence() - reference).abs() < 1e-6);
            assert!((post.total_mass() - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn narrow_grid_fails_coverage() {
        let spec = ModelSpec::ising_first_order(2, 2).unwrap();
        let prior = GaussianPrior::standard(1);
        let brute = BruteForce::new(&spec).unwrap();
        let grid = GridSpec::new(vec![Axis::new(-3.0, 3.0, 0.005).unwrap()]).unwrap();
        // s1 = 4 leaves a prior-like tail towards large theta.
        assert!(matches!(
            exact_posterior_grid(&[4.0], &prior, &grid, &brute),
            Err(Error::GridCoverage { .. })
        ));
    }

    #[test]
    fn refinement_is_stable() {
        let spec = ModelSpec::ising_first_order(2, 2).unwrap();
        let prior = GaussianPrior::standard(1);
        let brute = BruteForce::new(&spec).unwrap();
        let grid = GridSpec::new(vec![Axis::new(-6.0, 6.0, 0.005).unwrap()]).unwrap();
        let a = exact_posterior_grid(&[0.0], &prior, &grid, &brute).unwrap();
        let b = exact_posterior_grid(&[0.0], &prior, &grid.refined(), &brute).unwrap();
        assert!((a.log_evidence() - b.log_evidence()).abs() < 1e-6);
    }

    #[test]
    fn auto_grid_two_dimensional() {
        let spec = ModelSpec::ising_second_order(4, 4).unwrap();
        let prior = GaussianPrior::standard(2);
        let dos = StateCounts::new(&spec).unwrap();
        let y = [10.0, 4.0];
        let post = auto_posterior_grid(&y, &prior, &dos, 6.0, 200).unwrap();
        assert!((post.total_mass() - 1.0).abs() < 1e-8);
        let tr = TransferOracle::new(&spec).unwrap();
        let post_tr = exact_posterior_grid(&y, &prior, post.grid(), &tr).unwrap();
        assert!((post.log_evidence() - post_tr.log_evidence()).abs() < 1e-9);
        let finer = exact_posterior_grid(&y, &prior, &post.grid().refined(), &dos).unwrap();
        assert!((post.log_evidence() - finer.log_evidence()).abs() < 1e-6);
        // Marginals integrate to one.
        let (_, m) = post.marginal(1);
        assert!(m.iter().all(|v| *v >= 0.0));
        let axis = post.grid().axes[1];
        assert!((post.marginal_mass(1, axis.lower, axis.upper) - 1.0).abs() < 1e-6);
    }

    #[test]
    fn mode_matches_grid_peak() {
        let spec = ModelSpec::ising_first_order(4, 4).unwrap();
        let prior = GaussianPrior::standard(1);
        let tr = TransferOracle::new(&spec).unwrap();
        let (mode, sd) = posterior_mode(&[12.0], &prior, &tr).unwrap();
        let post = auto_posterior_grid(&[12.0], &prior, &tr, 6.0, 2001).unwrap();
        let (nodes, dens) = post.marginal(0);
        let peak = dens
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .unwrap()
            .0;
        assert!((nodes[peak] - mode[0]).abs() < 2.0 * post.grid().axes[0].step);
        assert!(sd[0] > 0.0 && (sd[0] - post.sd()[0]).abs() / post.sd()[0] < 0.3);
    }
}
