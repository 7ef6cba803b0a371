//! Single-chain exchange algorithm and an exact-likelihood Metropolis-Hastings baseline.

use alloc::vec::Vec;

use rand_distr::{Distribution, StandardNormal};

use crate::diagnostics::Acceptance;
use crate::model::{check_dim, GaussianPrior, LogPartition, ModelSpec, ParamVector, SuffStat};
use crate::sampler::Simulator;
use crate::{math, Error, RandomStream, Result};

pub const DEFAULT_PROPOSAL_SCALE: f64 = 0.2;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum ProposalKind {
    /// Gaussian centred on the current value.
    #[default]
    RandomWalk,
    /// Gaussian centred on the midpoint of the current value and the next-colder chain's value.
    NeighborMean,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ProposalSpec {
    kind: ProposalKind,
    scale: Vec<f64>,
}

impl ProposalSpec {
    pub fn new(kind: ProposalKind, scale: Vec<f64>) -> Result<Self> {
        if scale.is_empty() || scale.iter().any(|s| !(*s > 0.0) || !s.is_finite()) {
            return Err(Error::InvalidConfig(
                "proposal scales must be positive".into(),
            ));
        }
        Ok(Self { kind, scale })
    }

    pub fn random_walk(scale: Vec<f64>) -> Result<Self> {
        Self::new(ProposalKind::RandomWalk, scale)
    }

    /// Random walk with the default scale in every dimension.
    pub fn default_for(dim: usize) -> Self {
        Self {
            kind: ProposalKind::RandomWalk,
            scale: alloc::vec![DEFAULT_PROPOSAL_SCALE; dim],
        }
    }

    pub fn kind(&self) -> ProposalKind {
        self.kind
    }

    pub fn scale(&self) -> &[f64] {
        &self.scale
    }

    pub fn dim(&self) -> usize {
        self.scale.len()
    }

    /// Draw from `N(center, diag(scale^2))`.
    pub fn draw(&self, center: &[f64], rng: &mut RandomStream) -> Vec<f64> {
        center
            .iter()
            .zip(&self.scale)
            .map(|(c, s)| {
                let z: f64 = StandardNormal.sample(rng);
                c + s * z
            })
            .collect()
    }

    pub fn log_density(&self, x: &[f64], center: &[f64]) -> f64 {
        x.iter()
            .zip(center)
            .zip(&self.scale)
            .map(|((x, c), s)| math::normal_log_pdf(*x, *c, *s))
            .sum()
    }
}

/// Log of the exchange acceptance ratio before truncation at zero.
pub fn exchange_log_ratio(
    stats_y: &[f64],
    theta_cur: &[f64],
    theta_prop: &[f64],
    stats_yprime: &[f64],
    prior: &GaussianPrior,
) -> Result<f64> {
    let d = stats_y.len();
    check_dim(d, theta_cur.len())?;
    check_dim(d, theta_prop.len())?;
    check_dim(d, stats_yprime.len())?;
    check_dim(d, prior.dim())?;
    let mut v = prior.log_density_unchecked(theta_prop) - prior.log_density_unchecked(theta_cur);
    for k in 0..d {
        v += (theta_prop[k] - theta_cur[k]) * (stats_y[k] - stats_yprime[k]);
    }
    Ok(v)
}

/// `log min(1, alpha)` for a symmetric proposal. No partition function is evaluated.
pub fn exchange_log_accept(
    stats_y: &[f64],
    theta_cur: &[f64],
    theta_prop: &[f64],
    stats_yprime: &[f64],
    prior: &GaussianPrior,
) -> Result<f64> {
    Ok(exchange_log_ratio(stats_y, theta_cur, theta_prop, stats_yprime, prior)?.min(0.0))
}

/// `u < exp(log_alpha)` with `u` uniform; consumes one uniform draw.
pub(crate) fn accept(log_alpha: f64, rng: &mut RandomStream) -> bool {
    let u = rng.uniform();
    log_alpha >= 0.0 || math::ln(u) < log_alpha
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExchangeState {
    pub theta: ParamVector,
    /// Most recent proposal.
    pub theta_aux: ParamVector,
    /// Statistics of the auxiliary draw made at `theta_aux`.
    pub aux_stats: SuffStat,
}

impl ExchangeState {
    pub fn new(theta: ParamVector) -> Self {
        let d = theta.dim();
        Self {
            theta_aux: theta.clone(),
            theta,
            aux_stats: SuffStat(alloc::vec![0.0; d]),
        }
    }
}

/// One exchange update per call, reusing a simulator across iterations.
#[derive(Clone, Debug)]
pub struct ExchangeSampler {
    y_stats: Vec<f64>,
    prior: GaussianPrior,
    proposal: ProposalSpec,
    aux_sweeps: usize,
    simulator: Simulator,
}

/// Per-iteration trace record.
#[derive(Clone, Copy, Debug)]
pub struct ExchangeRecord<'a> {
    pub iteration: usize,
    pub theta: &'a [f64],
    pub aux_stats: &'a [f64],
    pub accepted: bool,
}

#[derive(Clone, Debug)]
pub struct ExchangeRun {
    pub dim: usize,
    /// Row-major `theta` after every iteration.
    pub draws: Vec<f64>,
    pub acceptance: Acceptance,
}

impl ExchangeSampler {
    pub fn new(
        spec: &ModelSpec,
        y_stats: &[f64],
        prior: GaussianPrior,
        proposal: ProposalSpec,
        aux_sweeps: usize,
    ) -> Result<Self> {
        let d = spec.statistic_count();
        check_dim(d, y_stats.len())?;
        check_dim(d, prior.dim())?;
        check_dim(d, proposal.dim())?;
        if proposal.kind() != ProposalKind::RandomWalk {
            return Err(Error::InvalidConfig(
                "a single exchange chain needs a random-walk proposal".into(),
            ));
        }
        if aux_sweeps == 0 {
            return Err(Error::InvalidConfig("aux_sweeps must be at least 1".into()));
        }
        Ok(Self {
            y_stats: y_stats.to_vec(),
            prior,
            proposal,
            aux_sweeps,
            simulator: Simulator::for_spec(spec)?,
        })
    }

    /// Proposes, simulates at the proposal, and accepts or rolls back. Returns whether it moved.
    pub fn step(&mut self, state: &mut ExchangeState, rng: &mut RandomStream) -> Result<bool> {
        let prop = self.proposal.draw(&state.theta, rng);
        let aux = self.simulator.draw_one(&prop, self.aux_sweeps, rng)?;
        let log_alpha = exchange_log_accept(&self.y_stats, &state.theta, &prop, &aux, &self.prior)?;
        let moved = accept(log_alpha, rng);
        let prop = ParamVector::new(prop)?;
        if moved {
            state.theta = prop.clone();
        }
        state.theta_aux = prop;
        state.aux_stats = SuffStat(aux);
        Ok(moved)
    }

    pub fn run(
        &mut self,
        init: ParamVector,
        iterations: usize,
        rng: &mut RandomStream,
        mut observer: impl FnMut(&ExchangeRecord<'_>),
    ) -> Result<ExchangeRun> {
        let dim = init.dim();
        check_dim(self.y_stats.len(), dim)?;
        let mut state = ExchangeState::new(init);
        let mut draws = Vec::with_capacity(iterations * dim);
        let mut acceptance = Acceptance::default();
        for iteration in 0..iterations {
            let accepted = self.step(&mut state, rng)?;
            acceptance.record(accepted);
            draws.extend_from_slice(&state.theta);
            observer(&ExchangeRecord {
                iteration,
                theta: &state.theta,
                aux_stats: &state.aux_stats,
                accepted,
            });
        }
        Ok(ExchangeRun {
            dim,
            draws,
            acceptance,
        })
    }
}

/// One exchange update; builds a fresh simulator each call.
pub fn exchange_step(
    state: &ExchangeState,
    y_stats: &SuffStat,
    spec: &ModelSpec,
    prior: &GaussianPrior,
    prop: &ProposalSpec,
    aux_sweeps: usize,
    rng: &mut RandomStream,
) -> Result<ExchangeState> {
    let mut sampler = ExchangeSampler::new(spec, y_stats, prior.clone(), prop.clone(), aux_sweeps)?;
    let mut next = state.clone();
    sampler.step(&mut next, rng)?;
    Ok(next)
}

/// Metropolis-Hastings on the exact posterior, with `z` supplied by an oracle.
pub fn exact_mh_step(
    theta: &ParamVector,
    y_stats: &[f64],
    prior: &GaussianPrior,
    prop: &ProposalSpec,
    oracle: &dyn LogPartition,
    rng: &mut RandomStream,
) -> Result<(ParamVector, bool)> {
    let d = theta.dim();
    check_dim(d, y_stats.len())?;
    check_dim(d, prior.dim())?;
    check_dim(d, prop.dim())?;
    check_dim(d, oracle.dim())?;
    let cand = prop.draw(theta, rng);
    let log_alpha = prior.log_density_unchecked(&cand) - prior.log_density_unchecked(theta)
        + math::dot(y_stats, &cand)
        - math::dot(y_stats, theta)
        + oracle.log_z(theta)
        - oracle.log_z(&cand);
    if accept(log_alpha.min(0.0), rng) {
        Ok((ParamVector::new(cand)?, true))
    } else {
        Ok((theta.clone(), false))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ising::{exact_posterior_grid, Axis, BruteForce, GridSpec};
    use alloc::vec;
    use proptest::prelude::*;

    #[test]
    fn acceptance_examples() {
        let prior = GaussianPrior::standard(1);
        assert_eq!(
            exchange_log_accept(&[3.0], &[0.2], &[0.2], &[-1.0], &prior).unwrap(),
            0.0
        );
        let r = exchange_log_ratio(&[3.0], &[0.2], &[0.7], &[3.0], &prior).unwrap();
        let pr = prior.log_density_unchecked(&[0.7]) - prior.log_density_unchecked(&[0.2]);
        assert!((r - pr).abs() < 1e-15);
        // Very wide prior approximates the flat limit.
        let flat = GaussianPrior::isotropic(1, 0.0, 1e12).unwrap();
        let r = exchange_log_ratio(&[4.0], &[0.0], &[0.5], &[0.0], &flat).unwrap();
        assert!((r - 2.0).abs() < 1e-9);
        assert_eq!(
            exchange_log_accept(&[4.0], &[0.0], &[0.5], &[0.0], &flat).unwrap(),
            0.0
        );
    }

    #[test]
    fn rejects_bad_proposals() {
        assert!(ProposalSpec::random_walk(vec![0.0]).is_err());
        let spec = ModelSpec::ising_first_order(2, 2).unwrap();
        let p = ProposalSpec::new(ProposalKind::NeighborMean, vec![0.2]).unwrap();
        assert!(ExchangeSampler::new(&spec, &[0.0], GaussianPrior::standard(1), p, 5).is_err());
    }

    proptest! {
        #[test]
        fn reversed_move_has_reciprocal_ratio(
            y in -10.0f64..10.0, yp in -10.0f64..10.0, a in -3.0f64..3.0, b in -3.0f64..3.0,
        ) {
            let prior = GaussianPrior::standard(1);
            let fwd = exchange_log_ratio(&[y], &[a], &[b], &[yp], &prior).unwrap();
            let rev = exchange_log_ratio(&[y], &[b], &[a], &[yp], &prior).unwrap();
            prop_assert!((fwd + rev).abs() < 1e-9);
        }
    }

    #[test]
    fn runs_where_z_is_infeasible() {
        let spec = ModelSpec::ising_first_order(40, 40).unwrap();
        let mut s = ExchangeSampler::new(
            &spec,
            &[2000.0],
            GaussianPrior::standard(1),
            ProposalSpec::default_for(1),
            2,
        )
        .unwrap();
        let run = s
            .run(ParamVector::zeros(1), 20, &mut RandomStream::new(1), |_| {})
            .unwrap();
        assert_eq!(run.draws.len(), 20);
    }

    #[test]
    fn tiny_scale_moves_are_accepted() {
        let spec = ModelSpec::ising_first_order(2, 2).unwrap();
        let prop = ProposalSpec::random_walk(vec![1e-9]).unwrap();
        let mut s =
            ExchangeSampler::new(&spec, &[0.0], GaussianPrior::standard(1), prop, 10).unwrap();
        let run = s
            .run(
                ParamVector::new(vec![0.4]).unwrap(),
                200,
                &mut RandomStream::new(2),
                |_| {},
            )
            .unwrap();
        assert!(run.acceptance.rate() > 0.95);
    }

    #[test]
    fn exact_mh_matches_grid_on_2x2() {
        let spec = ModelSpec::ising_first_order(2, 2).unwrap();
        let prior = GaussianPrior::standard(1);
        let oracle = BruteForce::new(&spec).unwrap();
        let y = [4.0];
        let mut theta = ParamVector::new(vec![0.5]).unwrap();
        let prop = ProposalSpec::random_walk(vec![1.5]).unwrap();
        let mut rng = RandomStream::new(12);
        // Posterior has a prior-like right tail; bin it coarsely over a wide range.
        let (lo, hi, bins) = (-2.0, 14.0, 32usize);
        let mut counts = vec![0u64; bins];
        let n = 400_000;
        let mut outside = 0u64;
        for _ in 0..n {
            theta = exact_mh_step(&theta, &y, &prior, &prop, &oracle, &mut rng)
                .unwrap()
                .0;
            let b = ((theta[0] - lo) / (hi - lo) * bins as f64).floor();
            if b >= 0.0 && (b as usize) < bins {
                counts[b as usize] += 1;
            } else {
                outside += 1;
            }
        }
        let grid = GridSpec::new(vec![Axis::new(-30.0, 40.0, 0.005).unwrap()]).unwrap();
        let post = exact_posterior_grid(&y, &prior, &grid, &oracle).unwrap();
        let w = (hi - lo) / bins as f64;
        let mut tv = 0.0;
        let mut inside_mass = 0.0;
        for (k, &c) in counts.iter().enumerate() {
            let a = lo + k as f64 * w;
            let p = post.marginal_mass(0, a, a + w);
            inside_mass += p;
            tv += (c as f64 / n as f64 - p).abs();
        }
        tv += (outside as f64 / n as f64 - (1.0 - inside_mass)).abs();
        assert!(tv / 2.0 < 0.02, "tv {}", tv / 2.0);
    }
}
