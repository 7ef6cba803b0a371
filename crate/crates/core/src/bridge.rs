//! Bayes factors between nested models from one population run that tempers
//! only the extra parameter.

use alloc::vec::Vec;

use crate::diagnostics::{batch_means_se, Acceptance};
use crate::evidence::{closest_indices, draw_mean};
use crate::exchange::{ProposalKind, ProposalSpec};
use crate::kde::Kde;
use crate::model::{check_dim, GaussianPrior, ModelSpec};
use crate::population::{
    make_ladder, run_population, PopulationSampler, PopxConfig, PopxRecord, Tempering,
};
use crate::{math, Error, RandomStream, Result};

/// `theta1 s1(y) + t theta2 s2(y)`.
pub fn bridged_log_q(y_stats: &[f64], theta1: f64, theta2: f64, t: f64) -> Result<f64> {
    if y_stats.len() < 2 {
        return Err(Error::MissingStatistic);
    }
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::Temperature(t));
    }
    Ok(theta1 * y_stats[0] + t * theta2 * y_stats[1])
}

/// `(1 - t) log pi(theta1 | m1) + t log pi(theta1, theta2 | m2)`.
pub fn bridged_log_prior(
    theta1: f64,
    theta2: f64,
    t: f64,
    prior_m1: &GaussianPrior,
    prior_m2: &GaussianPrior,
) -> Result<f64> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::Temperature(t));
    }
    check_dim(1, prior_m1.dim())?;
    check_dim(2, prior_m2.dim())?;
    let cold = prior_m1.log_density_unchecked(&[theta1]);
    if t == 0.0 {
        return Ok(cold);
    }
    let full = prior_m2.log_density_unchecked(&[theta1, theta2]);
    Ok((1.0 - t) * cold + t * full)
}

/// `log BF_12` from one draw of each model and the estimated ratio `z2(theta_dagger) / z1(theta1_star)`.
#[allow(clippy::too_many_arguments)]
pub fn assemble_log_bf(
    y_stats: &[f64],
    theta1_star: &[f64],
    theta_dagger: &[f64],
    prior_m1: &GaussianPrior,
    prior_m2: &GaussianPrior,
    log_post_m1: f64,
    log_post_m2: f64,
    log_z_ratio: f64,
) -> Result<f64> {
    let d1 = theta1_star.len();
    check_dim(prior_m1.dim(), d1)?;
    check_dim(prior_m2.dim(), theta_dagger.len())?;
    check_dim(theta_dagger.len(), y_stats.len())?;
    let m1 = math::dot(&y_stats[..d1], theta1_star) + prior_m1.log_density_unchecked(theta1_star)
        - log_post_m1;
    let m2 = math::dot(y_stats, theta_dagger) + prior_m2.log_density_unchecked(theta_dagger)
        - log_post_m2;
    Ok(m1 - m2 + log_z_ratio)
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BayesFactorEstimate {
    pub log_bf_12: f64,
    /// Per-sweep `log BF_12` values that entered the average.
    pub selected: Vec<f64>,
    pub selected_sd: f64,
    /// Draws of `theta1` under the smaller model, one per recorded sweep.
    pub m1_draws: Vec<f64>,
    /// Draws of `theta` under the larger model, row-major.
    pub m2_draws: Vec<f64>,
    pub m1_dim: usize,
    pub m2_dim: usize,
    pub log_z_ratio: Vec<f64>,
    pub log_z_ratio_se: f64,
    pub acceptance_rates: Vec<f64>,
}

/// Nested-model Bayes factor from a single bridged population run.
///
/// Chain 0 targets `pi(theta1 | y, m1)` times an inert anchor on the extra
/// parameter; the last chain targets `pi(theta | y, m2)`.
#[allow(clippy::too_many_arguments)]
pub fn run_popx_bf(
    m1: &ModelSpec,
    m2: &ModelSpec,
    y_stats: &[f64],
    prior_m1: &GaussianPrior,
    prior_m2: &GaussianPrior,
    config: &PopxConfig,
    rng: &RandomStream,
    observer: impl FnMut(&PopxRecord<'_>),
) -> Result<BayesFactorEstimate> {
    if !m1.is_nested_in(m2) || m1.statistic_count() >= m2.statistic_count() {
        return Err(Error::InvalidModel(
            "first model must be nested in the second",
        ));
    }
    let d1 = m1.statistic_count();
    let d2 = m2.statistic_count();
    if y_stats.len() < d2 {
        return Err(Error::MissingStatistic);
    }
    let y_stats = &y_stats[..d2];
    check_dim(d1, prior_m1.dim())?;
    check_dim(d2, prior_m2.dim())?;
    config.validate(d2)?;
    let anchor = GaussianPrior::new(prior_m2.mean()[d1..].to_vec(), prior_m2.sd()[d1..].to_vec())?;
    let tempering = Tempering::Extra {
        base: prior_m1.clone(),
        anchor,
    };
    let ladder = make_ladder(config.chains - 1, config.exponent)?;
    let proposal = ProposalSpec::new(ProposalKind::NeighborMean, config.proposal_scale.clone())?;
    let mut sampler = PopulationSampler::new(
        m2,
        y_stats,
        prior_m2.clone(),
        tempering,
        ladder,
        proposal,
        config.aux,
        config.draws,
    )?;
    let run = run_population(&mut sampler, config, rng, observer)?;

    let m1_draws: Vec<f64> = run
        .cold_draws
        .chunks_exact(d2)
        .flat_map(|r| r[..d1].iter().copied())
        .collect();
    let kde1 = Kde::new(&m1_draws, d1, config.kernel)?;
    let kde2 = Kde::new(&run.hot_draws, d2, config.kernel)?;

    let n = run.log_z_ratio.len();
    let joint: Vec<f64> = (0..n)
        .flat_map(|i| {
            m1_draws[i * d1..(i + 1) * d1]
                .iter()
                .chain(&run.hot_draws[i * d2..(i + 1) * d2])
                .copied()
                .collect::<Vec<_>>()
        })
        .collect();
    let center = draw_mean(&joint, d1 + d2);
    let picked = closest_indices(&joint, d1 + d2, &center, config.closest)?;
    let mut selected = Vec::with_capacity(picked.len());
    for i in picked {
        let t1 = &m1_draws[i * d1..(i + 1) * d1];
        let t2 = &run.hot_draws[i * d2..(i + 1) * d2];
        selected.push(assemble_log_bf(
            y_stats,
            t1,
            t2,
            prior_m1,
            prior_m2,
            kde1.log_density(t1)?,
            kde2.log_density(t2)?,
            run.log_z_ratio[i],
        )?);
    }
    Ok(BayesFactorEstimate {
        log_bf_12: math::log_mean_exp(&selected),
        selected_sd: math::sqrt(math::variance(&selected)),
        selected,
        m1_draws,
        m2_draws: run.hot_draws,
        m1_dim: d1,
        m2_dim: d2,
        log_z_ratio_se: batch_means_se(&run.log_z_ratio, 20),
        log_z_ratio: run.log_z_ratio,
        acceptance_rates: run.acceptance.iter().map(Acceptance::rate).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exchange::exchange_log_ratio;
    use crate::ising::{BruteForce, NeighborhoodOrder};
    use crate::model::LogPartition;
    use crate::population::log_z_ratio_path;
    use alloc::vec;
    use proptest::prelude::*;

    #[test]
    fn log_q_examples() {
        let y = [12.0, 8.0];
        assert_eq!(bridged_log_q(&y, 0.1, -0.2, 0.0).unwrap(), 0.1 * 12.0);
        assert!((bridged_log_q(&y, 0.1, -0.2, 1.0).unwrap() - (1.2 - 1.6)).abs() < 1e-15);
        assert!((bridged_log_q(&y, 0.1, -0.2, 0.5).unwrap() - 0.4).abs() < 1e-15);
        assert!(matches!(
            bridged_log_q(&[3.0], 0.1, 0.1, 0.5),
            Err(Error::MissingStatistic)
        ));
    }

    #[test]
    fn log_prior_examples() {
        let p1 = GaussianPrior::standard(1);
        let p2 = GaussianPrior::standard(2);
        assert_eq!(
            bridged_log_prior(0.3, 17.0, 0.0, &p1, &p2).unwrap(),
            p1.log_density_unchecked(&[0.3])
        );
        assert_eq!(
            bridged_log_prior(0.3, 1.0, 1.0, &p1, &p2).unwrap(),
            p2.log_density_unchecked(&[0.3, 1.0])
        );
        let a = bridged_log_prior(0.0, 0.0, 0.2, &p1, &p2).unwrap();
        let b = bridged_log_prior(0.0, 0.0, 0.7, &p1, &p2).unwrap();
        // Prior mass at the origin differs by one normal density factor between the models.
        let slope = p2.log_density_unchecked(&[0.0, 0.0]) - p1.log_density_unchecked(&[0.0]);
        assert!((b - a - 0.5 * slope).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn cold_endpoint_matches_smaller_model(
            y1 in -20.0f64..20.0, y2 in -20.0f64..20.0, a1 in -20.0f64..20.0, a2 in -20.0f64..20.0,
            t1 in -2.0f64..2.0, p1 in -2.0f64..2.0, extra in -5.0f64..5.0,
        ) {
            // At t = 0 the extra parameter is held fixed by a theta1-only move.
            let m1 = GaussianPrior::standard(1);
            let m2 = GaussianPrior::standard(2);
            let bridged = (bridged_log_q(&[y1, y2], p1, extra, 0.0).unwrap() - bridged_log_q(&[y1, y2], t1, extra, 0.0).unwrap())
                - (bridged_log_q(&[a1, a2], p1, extra, 0.0).unwrap() - bridged_log_q(&[a1, a2], t1, extra, 0.0).unwrap())
                + bridged_log_prior(p1, extra, 0.0, &m1, &m2).unwrap()
                - bridged_log_prior(t1, extra, 0.0, &m1, &m2).unwrap();
            let plain = exchange_log_ratio(&[y1], &[t1], &[p1], &[a1], &m1).unwrap();
            prop_assert!((bridged - plain).abs() < 1e-9);
        }
    }

    /// Exact log-partition of the second-order 2x2 model with s2 over diagonals.
    fn exact_m2() -> BruteForce {
        BruteForce::new(&ModelSpec::ising_second_order(2, 2).unwrap()).unwrap()
    }

    #[test]
    fn exact_ratios_telescope_to_bridge_ends() {
        let oracle = exact_m2();
        let ladder = make_ladder(5, 5.0).unwrap();
        let thetas = [
            (0.2, 0.9),
            (0.1, -0.4),
            (0.5, 0.3),
            (-0.2, 0.8),
            (0.3, 0.1),
            (0.4, -0.3),
        ];
        let mut total = 0.0;
        for j in 0..5 {
            let (a, b) = thetas[j];
            let (c, d) = thetas[j + 1];
            total += oracle.log_z(&[c, ladder.t(j + 1) * d]) - oracle.log_z(&[a, ladder.t(j) * b]);
        }
        let m1 = BruteForce::new(&ModelSpec::ising_first_order(2, 2).unwrap()).unwrap();
        let want = oracle.log_z(&[0.4, -0.3]) - m1.log_z(&[0.2]);
        assert!(((total - want) / want).abs() < 1e-10);
        assert_eq!(NeighborhoodOrder::Second.statistic_count(), 2);
        // One exact importance draw per rung reproduces the same telescoping sum.
        let phis: Vec<Vec<f64>> = (0..6)
            .map(|j| vec![thetas[j].0, ladder.t(j) * thetas[j].1])
            .collect();
        let zero = [0.0, 0.0];
        let aux: Vec<&[f64]> = (0..6).map(|_| &zero[..]).collect();
        assert_eq!(log_z_ratio_path(&phis, &aux, false).unwrap(), 0.0);
    }

    #[test]
    fn rejects_non_nested_pairs() {
        let a = ModelSpec::ising_first_order(3, 3).unwrap();
        let b = ModelSpec::ergm_edges_two_stars(4).unwrap();
        let c = PopxConfig::lattice_defaults(2);
        let p1 = GaussianPrior::standard(1);
        let p2 = GaussianPrior::standard(2);
        assert!(run_popx_bf(
            &a,
            &b,
            &[1.0, 2.0],
            &p1,
            &p2,
            &c,
            &RandomStream::new(1),
            |_| {}
        )
        .is_err());
        assert!(run_popx_bf(&a, &a, &[1.0], &p1, &p1, &c, &RandomStream::new(1), |_| {}).is_err());
    }
}
