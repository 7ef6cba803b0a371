//! Rejection ABC model choice over nested Gibbs random field models.
//!
//! Every simulated realization is summarized by the union of the candidate
//! models' statistics. Nested models share a statistic prefix, so the union is
//! the statistic vector of the largest model and a draw from a smaller model
//! is simulated in the largest model with the extra parameters set to zero.

use alloc::vec::Vec;

use crate::model::{check_dim, GaussianPrior, ModelSpec};
use crate::sampler::Simulator;
use crate::{math, Error, RandomStream, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct AbcModel {
    pub spec: ModelSpec,
    pub prior: GaussianPrior,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AbcDraw {
    pub model: usize,
    pub theta: Vec<f64>,
    pub stats: Vec<f64>,
}

/// Simulated draws plus the per-coordinate standardization scale.
#[derive(Clone, Debug, PartialEq)]
pub struct ReferenceTable {
    pub draws: Vec<AbcDraw>,
    pub models: usize,
    pub scale: Vec<f64>,
}

/// Index of the model whose statistics cover every other model's, after checking nesting.
fn union_model(models: &[AbcModel]) -> Result<usize> {
    if models.is_empty() {
        return Err(Error::Empty);
    }
    let widest = (0..models.len())
        .max_by_key(|&k| models[k].spec.statistic_count())
        .expect("non-empty");
    for m in models {
        if !m.spec.is_nested_in(&models[widest].spec) {
            return Err(Error::InvalidModel(
                "ABC models must be nested on one domain",
            ));
        }
        check_dim(m.spec.statistic_count(), m.prior.dim())?;
    }
    Ok(widest)
}

/// Simulator and model list ready to produce reference-table draws.
#[derive(Clone, Debug)]
pub struct AbcSimulator {
    models: Vec<AbcModel>,
    stat_dim: usize,
    simulator: Simulator,
    aux_sweeps: usize,
}

impl AbcSimulator {
    pub fn new(models: Vec<AbcModel>, aux_sweeps: usize) -> Result<Self> {
        let widest = union_model(&models)?;
        if aux_sweeps == 0 {
            return Err(Error::InvalidConfig("aux_sweeps must be at least 1".into()));
        }
        let spec = models[widest].spec;
        Ok(Self {
            stat_dim: spec.statistic_count(),
            simulator: Simulator::for_spec(&spec)?,
            models,
            aux_sweeps,
        })
    }

    pub fn stat_dim(&self) -> usize {
        self.stat_dim
    }

    pub fn model_count(&self) -> usize {
        self.models.len()
    }

    /// Draw number `index`; depends only on `root` and `index`.
    pub fn draw(&mut self, root: &RandomStream, index: u64) -> Result<AbcDraw> {
        let mut rng = root.indexed("abc", index);
        let m = (rng.uniform() * self.models.len() as f64) as usize;
        let m = m.min(self.models.len() - 1);
        let theta = self.models[m].prior.sample(&mut rng).into_inner();
        let mut phi = theta.clone();
        phi.resize(self.stat_dim, 0.0);
        let stats = self.simulator.draw_one(&phi, self.aux_sweeps, &mut rng)?;
        Ok(AbcDraw {
            model: m,
            theta,
            stats,
        })
    }
}

impl ReferenceTable {
    /// Standardizes by the sample standard deviation of each statistic across draws.
    pub fn from_draws(draws: Vec<AbcDraw>, models: usize) -> Result<Self> {
        if draws.is_empty() {
            return Err(Error::Empty);
        }
        let dim = draws[0].stats.len();
        let mut scale = Vec::with_capacity(dim);
        for k in 0..dim {
            let xs: Vec<f64> = draws.iter().map(|d| d.stats[k]).collect();
            let sd = if xs.len() > 1 {
                math::sqrt(math::variance(&xs))
            } else {
                0.0
            };
            // A constant column carries no information; leave it unscaled.
            scale.push(if sd > 0.0 { sd } else { 1.0 });
        }
        Ok(Self {
            draws,
            models,
            scale,
        })
    }

    pub fn len(&self) -> usize {
        self.draws.len()
    }

    pub fn is_empty(&self) -> bool {
        self.draws.is_empty()
    }

    pub fn distances(&self, y_stats: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.scale.len(), y_stats.len())?;
        Ok(self
            .draws
            .iter()
            .map(|d| standardized_distance(y_stats, &d.stats, &self.scale))
            .collect())
    }
}

/// Sequential reference table of `n_draws` draws.
pub fn abc_reference_table(
    models: &[AbcModel],
    n_draws: usize,
    aux_sweeps: usize,
    rng: &RandomStream,
) -> Result<ReferenceTable> {
    if n_draws == 0 {
        return Err(Error::Empty);
    }
    let mut sim = AbcSimulator::new(models.to_vec(), aux_sweeps)?;
    let draws = (0..n_draws as u64)
        .map(|i| sim.draw(rng, i))
        .collect::<Result<Vec<_>>>()?;
    ReferenceTable::from_draws(draws, models.len())
}

/// Euclidean distance after dividing each coordinate by `scale`.
pub fn standardized_distance(a: &[f64], b: &[f64], scale: &[f64]) -> f64 {
    let s: f64 = a
        .iter()
        .zip(b)
        .zip(scale)
        .map(|((x, y), s)| {
            let d = (x - y) / s;
            d * d
        })
        .sum();
    math::sqrt(s)
}

/// The `ceil(quantile * n)`-th smallest distance.
pub fn select_tolerance(distances: &[f64], quantile: f64) -> Result<f64> {
    if distances.is_empty() {
        return Err(Error::Empty);
    }
    if !(quantile > 0.0 && quantile <= 1.0) {
        return Err(Error::InvalidConfig("quantile must lie in (0, 1]".into()));
    }
    let n = distances.len();
    // Guard against 0.005 * 500000 landing a hair above an integer.
    let k = (libm::ceil(quantile * n as f64 - 1e-9) as usize).clamp(1, n);
    let mut sorted = distances.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(sorted[k - 1])
}

/// Share of accepted draws (`distance <= epsilon`) per model.
pub fn posterior_model_prob(
    models: &[usize],
    distances: &[f64],
    epsilon: f64,
    model_count: usize,
) -> Result<Vec<f64>> {
    check_dim(models.len(), distances.len())?;
    let mut counts = alloc::vec![0usize; model_count];
    let mut total = 0usize;
    for (&m, &d) in models.iter().zip(distances) {
        if d <= epsilon {
            counts[m] += 1;
            total += 1;
        }
    }
    if total == 0 {
        return Err(Error::NoneAccepted(epsilon));
    }
    Ok(counts.iter().map(|&c| c as f64 / total as f64).collect())
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AbcResult {
    pub quantile: f64,
    pub epsilon: f64,
    pub accepted: usize,
    pub probs: Vec<f64>,
}

/// Model probabilities for observed statistics at a tolerance quantile.
pub fn abc_model_choice(
    table: &ReferenceTable,
    y_stats: &[f64],
    quantile: f64,
) -> Result<AbcResult> {
    let dist = table.distances(y_stats)?;
    let epsilon = select_tolerance(&dist, quantile)?;
    let models: Vec<usize> = table.draws.iter().map(|d| d.model).collect();
    let probs = posterior_model_prob(&models, &dist, epsilon, table.models)?;
    Ok(AbcResult {
        quantile,
        epsilon,
        accepted: dist.iter().filter(|&&d| d <= epsilon).count(),
        probs,
    })
}
