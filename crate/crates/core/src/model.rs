//! Exponential-family Gibbs random fields: `q(y | theta) = exp(theta . s(y))`.

use alloc::vec::Vec;
use core::ops::Deref;

use rand_distr::{Distribution, StandardNormal};

use crate::math::{self, normal_log_pdf};
use crate::{Error, RandomStream, Result};

/// Model parameters, one per sufficient statistic. Always finite.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(try_from = "Vec<f64>", into = "Vec<f64>"))]
pub struct ParamVector(Vec<f64>);

impl ParamVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.iter().all(|v| v.is_finite()) {
            Ok(Self(values))
        } else {
            Err(Error::NonFinite)
        }
    }

    pub fn zeros(dim: usize) -> Self {
        Self(alloc::vec![0.0; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    /// Euclidean distance.
    pub fn distance(&self, other: &[f64]) -> f64 {
        math::sqrt(
            self.0
                .iter()
                .zip(other)
                .map(|(a, b)| (a - b) * (a - b))
                .sum(),
        )
    }
}

impl Deref for ParamVector {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl TryFrom<Vec<f64>> for ParamVector {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<ParamVector> for Vec<f64> {
    fn from(p: ParamVector) -> Self {
        p.0
    }
}

/// Values of the sufficient statistics `s(y)` of one realization.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SuffStat(pub Vec<f64>);

impl SuffStat {
    pub fn dim(&self) -> usize {
        self.0.len()
    }

    /// The leading `dim` statistics; used when a nested model reads a richer statistic vector.
    pub fn truncated(&self, dim: usize) -> SuffStat {
        SuffStat(self.0[..dim].to_vec())
    }
}

impl Deref for SuffStat {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl From<Vec<f64>> for SuffStat {
    fn from(v: Vec<f64>) -> Self {
        Self(v)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum ModelFamily {
    IsingFirstOrder,
    IsingSecondOrder,
    ErgmEdges,
    ErgmEdgesTwoStars,
}

impl ModelFamily {
    pub fn statistic_count(self) -> usize {
        match self {
            Self::IsingFirstOrder | Self::ErgmEdges => 1,
            Self::IsingSecondOrder | Self::ErgmEdgesTwoStars => 2,
        }
    }

    pub fn is_lattice(self) -> bool {
        matches!(self, Self::IsingFirstOrder | Self::IsingSecondOrder)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Domain {
    Lattice { rows: usize, cols: usize },
    Graph { nodes: usize },
}

/// A Gibbs random field family on a fixed domain.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ModelSpec {
    family: ModelFamily,
    domain: Domain,
}

impl ModelSpec {
    pub fn new(family: ModelFamily, domain: Domain) -> Result<Self> {
        match (family.is_lattice(), domain) {
            (true, Domain::Lattice { rows, cols }) if rows > 0 && cols > 0 => {}
            (false, Domain::Graph { nodes }) if nodes >= 2 => {}
            (true, _) => {
                return Err(Error::InvalidModel(
                    "Ising family needs a non-empty lattice",
                ))
            }
            (false, _) => return Err(Error::InvalidModel("ERGM family needs at least two nodes")),
        }
        Ok(Self { family, domain })
    }

    pub fn ising_first_order(rows: usize, cols: usize) -> Result<Self> {
        Self::new(ModelFamily::IsingFirstOrder, Domain::Lattice { rows, cols })
    }

    pub fn ising_second_order(rows: usize, cols: usize) -> Result<Self> {
        Self::new(
            ModelFamily::IsingSecondOrder,
            Domain::Lattice { rows, cols },
        )
    }

    pub fn ergm_edges(nodes: usize) -> Result<Self> {
        Self::new(ModelFamily::ErgmEdges, Domain::Graph { nodes })
    }

    pub fn ergm_edges_two_stars(nodes: usize) -> Result<Self> {
        Self::new(ModelFamily::ErgmEdgesTwoStars, Domain::Graph { nodes })
    }

    pub fn family(&self) -> ModelFamily {
        self.family
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn statistic_count(&self) -> usize {
        self.family.statistic_count()
    }

    /// Number of binary variables: lattice sites or graph dyads.
    pub fn variables(&self) -> usize {
        match self.domain {
            Domain::Lattice { rows, cols } => rows * cols,
            Domain::Graph { nodes } => nodes * (nodes - 1) / 2,
        }
    }

    /// `log z(0)`: every configuration has weight one, so `z(0) = 2^variables`.
    pub fn log_z_zero(&self) -> f64 {
        self.variables() as f64 * core::f64::consts::LN_2
    }

    /// Same domain, with this model's statistics a prefix of `other`'s.
    pub fn is_nested_in(&self, other: &ModelSpec) -> bool {
        self.domain == other.domain
            && self.family.is_lattice() == other.family.is_lattice()
            && self.statistic_count() <= other.statistic_count()
    }

    /// The same domain with the two-statistic family.
    pub fn extended(&self) -> ModelSpec {
        let family = match self.family {
            ModelFamily::IsingFirstOrder | ModelFamily::IsingSecondOrder => {
                ModelFamily::IsingSecondOrder
            }
            ModelFamily::ErgmEdges | ModelFamily::ErgmEdgesTwoStars => {
                ModelFamily::ErgmEdgesTwoStars
            }
        };
        ModelSpec {
            family,
            domain: self.domain,
        }
    }

    /// The same domain with the one-statistic family.
    pub fn reduced(&self) -> ModelSpec {
        let family = match self.family {
            ModelFamily::IsingFirstOrder | ModelFamily::IsingSecondOrder => {
                ModelFamily::IsingFirstOrder
            }
            ModelFamily::ErgmEdges | ModelFamily::ErgmEdgesTwoStars => ModelFamily::ErgmEdges,
        };
        ModelSpec {
            family,
            domain: self.domain,
        }
    }
}

/// Independent Gaussian prior per parameter component.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GaussianPrior {
    mean: Vec<f64>,
    sd: Vec<f64>,
}

impl GaussianPrior {
    pub fn new(mean: Vec<f64>, sd: Vec<f64>) -> Result<Self> {
        if mean.len() != sd.len() {
            return Err(Error::DimensionMismatch {
                expected: mean.len(),
                got: sd.len(),
            });
        }
        if mean.is_empty() {
            return Err(Error::InvalidPrior("empty prior"));
        }
        if !mean.iter().all(|m| m.is_finite()) {
            return Err(Error::InvalidPrior("non-finite mean"));
        }
        if !sd.iter().all(|s| s.is_finite() && *s > 0.0) {
            return Err(Error::InvalidPrior("standard deviations must be positive"));
        }
        Ok(Self { mean, sd })
    }

    /// `N(mean, sd^2)` in every one of `dim` components.
    pub fn isotropic(dim: usize, mean: f64, sd: f64) -> Result<Self> {
        Self::new(alloc::vec![mean; dim], alloc::vec![sd; dim])
    }

    /// The default `N(0, 5^2)` per component.
    pub fn standard(dim: usize) -> Self {
        Self::isotropic(dim, 0.0, 5.0).expect("valid default prior")
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn sd(&self) -> &[f64] {
        &self.sd
    }

    /// Prior restricted to the leading `dim` components.
    pub fn marginal(&self, dim: usize) -> Result<Self> {
        if dim == 0 || dim > self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: dim,
            });
        }
        Self::new(self.mean[..dim].to_vec(), self.sd[..dim].to_vec())
    }

    /// Single component `k` as a one-dimensional prior.
    pub fn component(&self, k: usize) -> Result<Self> {
        Self::new(alloc::vec![self.mean[k]], alloc::vec![self.sd[k]])
    }

    #[inline]
    pub fn log_density_unchecked(&self, theta: &[f64]) -> f64 {
        theta
            .iter()
            .zip(self.mean.iter().zip(&self.sd))
            .map(|(&x, (&m, &s))| normal_log_pdf(x, m, s))
            .sum()
    }

    pub fn log_density(&self, theta: &[f64]) -> Result<f64> {
        check_dim(self.dim(), theta.len())?;
        Ok(self.log_density_unchecked(theta))
    }

    pub fn sample(&self, rng: &mut RandomStream) -> ParamVector {
        ParamVector(
            self.mean
                .iter()
                .zip(&self.sd)
                .map(|(m, s)| {
                    let z: f64 = StandardNormal.sample(rng);
                    m + s * z
                })
                .collect(),
        )
    }
}

/// Normalizing constant oracle, `theta -> log z(theta)`.
pub trait LogPartition {
    fn dim(&self) -> usize;
    fn log_z(&self, theta: &[f64]) -> f64;
}

#[inline]
pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}

/// `log q(y | theta) = theta . s(y)`.
pub fn log_q(stats: &[f64], theta: &[f64]) -> Result<f64> {
    check_dim(stats.len(), theta.len())?;
    Ok(math::dot(stats, theta))
}

/// `t * theta`; tempering the likelihood is scaling its natural parameter.
pub fn temper(theta: &ParamVector, t: f64) -> Result<ParamVector> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::Temperature(t));
    }
    Ok(ParamVector(theta.iter().map(|x| t * x).collect()))
}

pub fn log_prior_density(theta: &[f64], prior: &GaussianPrior) -> Result<f64> {
    prior.log_density(theta)
}

pub fn sample_prior(prior: &GaussianPrior, rng: &mut RandomStream) -> ParamVector {
    prior.sample(rng)
}
