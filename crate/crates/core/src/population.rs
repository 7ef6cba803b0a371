//! Population exchange: a ladder of tempered exchange chains whose auxiliary
//! draws double as importance samples for the normalizing constant.

use alloc::vec::Vec;

use crate::diagnostics::{batch_means_se, Acceptance};
use crate::evidence::{closest_indices, draw_mean, log_evidence_chib};
use crate::exchange::{accept, ProposalKind, ProposalSpec};
use crate::kde::{Kde, KernelKind};
use crate::model::{check_dim, GaussianPrior, ModelSpec, ParamVector};
use crate::sampler::{AuxSchedule, Simulator};
use crate::{math, Error, RandomStream, Result};

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TemperatureLadder {
    exponent: f64,
    temps: Vec<f64>,
}

/// `t_i = (i / n)^p` for `i = 0..=n`.
pub fn make_ladder(n: usize, p: f64) -> Result<TemperatureLadder> {
    if n == 0 {
        return Err(Error::InvalidLadder("need at least two temperatures"));
    }
    if !(p > 0.0) || !p.is_finite() {
        return Err(Error::InvalidLadder("exponent must be positive"));
    }
    let mut temps: Vec<f64> = (0..=n)
        .map(|i| math::powf(i as f64 / n as f64, p))
        .collect();
    temps[0] = 0.0;
    temps[n] = 1.0;
    Ok(TemperatureLadder { exponent: p, temps })
}

impl TemperatureLadder {
    /// Index of the hottest (posterior) chain.
    pub fn n(&self) -> usize {
        self.temps.len() - 1
    }

    pub fn len(&self) -> usize {
        self.temps.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn exponent(&self) -> f64 {
        self.exponent
    }

    pub fn temps(&self) -> &[f64] {
        &self.temps
    }

    pub fn t(&self, j: usize) -> f64 {
        self.temps[j]
    }
}

/// How a temperature enters the simulation parameter and the prior.
#[derive(Clone, Debug, PartialEq)]
pub enum Tempering {
    /// Likelihood `f(y | t theta)` with the full prior at every temperature.
    Power,
    /// Only the trailing components are tempered: simulation at
    /// `(theta_base, t theta_extra)`, prior
    /// `(1 - t) [log base(theta_base) + log anchor(theta_extra)] + t log prior(theta)`.
    Extra {
        base: GaussianPrior,
        anchor: GaussianPrior,
    },
}

impl Tempering {
    pub fn sim_param(&self, theta: &[f64], t: f64, out: &mut Vec<f64>) {
        out.clear();
        match self {
            Self::Power => out.extend(theta.iter().map(|x| t * x)),
            Self::Extra { base, .. } => {
                let k = base.dim();
                out.extend_from_slice(&theta[..k]);
                out.extend(theta[k..].iter().map(|x| t * x));
            }
        }
    }

    pub fn log_prior(&self, prior: &GaussianPrior, theta: &[f64], t: f64) -> f64 {
        match self {
            Self::Power => prior.log_density_unchecked(theta),
            Self::Extra { base, anchor } => {
                let k = base.dim();
                let cold = base.log_density_unchecked(&theta[..k])
                    + anchor.log_density_unchecked(&theta[k..]);
                let full = prior.log_density_unchecked(theta);
                if t == 0.0 {
                    cold
                } else if t == 1.0 {
                    full
                } else {
                    (1.0 - t) * cold + t * full
                }
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ChainState {
    pub theta: ParamVector,
    /// `s` statistic vectors drawn at this chain's current simulation parameter, row-major.
    pub aux_stats: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PopulationState {
    pub chains: Vec<ChainState>,
    pub iteration: usize,
}

/// `theta'_j ~ N((theta_{j-1} + theta_j) / 2, scale^2)`; chain 0 uses a random walk.
pub fn propose_interacting(
    j: usize,
    pop: &PopulationState,
    proposal: &ProposalSpec,
    rng: &mut RandomStream,
) -> ParamVector {
    let center = proposal_center(j, pop, &pop.chains[j].theta, proposal.kind());
    ParamVector::new(proposal.draw(&center, rng)).expect("finite proposal")
}

fn proposal_center(j: usize, pop: &PopulationState, at: &[f64], kind: ProposalKind) -> Vec<f64> {
    if j == 0 || kind == ProposalKind::RandomWalk {
        at.to_vec()
    } else {
        pop.chains[j - 1]
            .theta
            .iter()
            .zip(at)
            .map(|(a, b)| 0.5 * (a + b))
            .collect()
    }
}

/// `sum_j log mean_k exp((phi_{j+1} - phi_j) . s_jk)`: the log of the estimated
/// ratio `z(phi_n) / z(phi_0)`, where `phi_j` is chain `j`'s simulation parameter
/// and `s_jk` its stored auxiliary statistics.
pub fn log_z_ratio_path(sim_params: &[Vec<f64>], aux: &[&[f64]], skip_first: bool) -> Result<f64> {
    if sim_params.len() != aux.len() || sim_params.is_empty() {
        return Err(Error::InvalidLadder("one auxiliary set per chain required"));
    }
    let dim = sim_params[0].len();
    let mut total = 0.0;
    for j in 0..sim_params.len() - 1 {
        let delta: Vec<f64> = sim_params[j + 1]
            .iter()
            .zip(&sim_params[j])
            .map(|(a, b)| a - b)
            .collect();
        let rows = aux[j];
        let start = usize::from(skip_first) * dim;
        if rows.len() < start + dim || !rows.len().is_multiple_of(dim) {
            return Err(Error::MissingAuxStats(j));
        }
        let mut acc = math::LogSumExp::default();
        let mut count = 0usize;
        for s in rows[start..].chunks_exact(dim) {
            acc.add(math::dot(&delta, s));
            count += 1;
        }
        total += acc.value() - math::ln(count as f64);
    }
    Ok(total)
}

pub const DEFAULT_ADAPT_TARGET: f64 = 0.3;
pub const DEFAULT_WALK_PROBABILITY: f64 = 0.5;

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PopxConfig {
    /// Number of chains, `n + 1`.
    pub chains: usize,
    pub exponent: f64,
    /// Recorded sweeps, after burn-in.
    pub iterations: usize,
    /// Burn-in sweeps as a fraction of `iterations`.
    pub burn_in_fraction: f64,
    pub aux: AuxSchedule,
    /// Auxiliary draws per chain and sweep (`s`).
    pub draws: usize,
    /// Posterior draws nearest the mean used in the evidence average (`r`).
    pub closest: usize,
    pub proposal_scale: Vec<f64>,
    /// Leave the draw used for acceptance out of the normalizing-constant average.
    pub exclude_accept_draw: bool,
    pub kernel: KernelKind,
    /// Tune each chain's proposal scale toward this random-walk acceptance rate during burn-in.
    pub adapt_target: Option<f64>,
    /// Probability that a chain update uses a random walk instead of the neighbour-mean proposal.
    pub walk_probability: f64,
}

impl PopxConfig {
    /// 5 chains, 20000 sweeps, 200 auxiliary sweeps, 200 importance draws.
    pub fn lattice_defaults(dim: usize) -> Self {
        Self {
            chains: 5,
            exponent: 5.0,
            iterations: 20_000,
            burn_in_fraction: 0.1,
            aux: AuxSchedule {
                sweeps: 200,
                thin: 1,
            },
            draws: 200,
            closest: 100,
            proposal_scale: alloc::vec![crate::exchange::DEFAULT_PROPOSAL_SCALE; dim],
            exclude_accept_draw: false,
            kernel: KernelKind::Product,
            adapt_target: Some(DEFAULT_ADAPT_TARGET),
            walk_probability: DEFAULT_WALK_PROBABILITY,
        }
    }

    /// 10 chains, 10000 sweeps, 1000 auxiliary sweeps, 200 importance draws.
    pub fn graph_defaults(dim: usize) -> Self {
        Self {
            chains: 10,
            iterations: 10_000,
            aux: AuxSchedule {
                sweeps: 1000,
                thin: 1,
            },
            ..Self::lattice_defaults(dim)
        }
    }

    pub fn burn_in(&self) -> usize {
        libm::ceil(self.burn_in_fraction * self.iterations as f64) as usize
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.into()));
        if self.chains < 2 {
            return bad("need at least two chains");
        }
        if self.iterations == 0 || self.draws == 0 || self.closest == 0 {
            return bad("iterations, draws and closest must be positive");
        }
        if self.exclude_accept_draw && self.draws < 2 {
            return bad("excluding the acceptance draw needs at least two draws");
        }
        if !(0.0..1.0).contains(&self.burn_in_fraction) {
            return bad("burn-in fraction must lie in [0, 1)");
        }
        if self.closest > self.iterations {
            return Err(Error::NotEnoughDraws {
                requested: self.closest,
                available: self.iterations,
            });
        }
        if !(0.0..=1.0).contains(&self.walk_probability) {
            return bad("walk probability must lie in [0, 1]");
        }
        if let Some(a) = self.adapt_target {
            if !(a > 0.0 && a < 1.0) {
                return bad("adaptation target must lie in (0, 1)");
            }
        }
        AuxSchedule::new(self.aux.sweeps, self.aux.thin)?;
        check_dim(dim, self.proposal_scale.len())?;
        ProposalSpec::new(ProposalKind::NeighborMean, self.proposal_scale.clone())?;
        Ok(())
    }
}

/// Sweeps a population over a fixed target.
#[derive(Clone, Debug)]
pub struct PopulationSampler {
    y_stats: Vec<f64>,
    prior: GaussianPrior,
    tempering: Tempering,
    ladder: TemperatureLadder,
    proposal: ProposalSpec,
    /// Per-chain proposals: `proposal` with its scale multiplied by `exp(log_mult[j])`.
    chain_proposals: Vec<ProposalSpec>,
    log_mult: Vec<f64>,
    walk_probability: f64,
    last_kinds: Vec<ProposalKind>,
    aux: AuxSchedule,
    draws: usize,
    simulator: Simulator,
    phi: Vec<f64>,
}

impl PopulationSampler {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        spec: &ModelSpec,
        y_stats: &[f64],
        prior: GaussianPrior,
        tempering: Tempering,
        ladder: TemperatureLadder,
        proposal: ProposalSpec,
        aux: AuxSchedule,
        draws: usize,
    ) -> Result<Self> {
        let d = spec.statistic_count();
        check_dim(d, y_stats.len())?;
        check_dim(d, prior.dim())?;
        check_dim(d, proposal.dim())?;
        if let Tempering::Extra { base, anchor } = &tempering {
            check_dim(d, base.dim() + anchor.dim())?;
            if base.dim() == 0 || anchor.dim() == 0 {
                return Err(Error::InvalidModel(
                    "bridge needs shared and extra parameters",
                ));
            }
        }
        if draws == 0 {
            return Err(Error::InvalidConfig(
                "need at least one auxiliary draw".into(),
            ));
        }
        let n = ladder.len();
        Ok(Self {
            y_stats: y_stats.to_vec(),
            prior,
            tempering,
            ladder,
            chain_proposals: alloc::vec![proposal.clone(); n],
            log_mult: alloc::vec![0.0; n],
            walk_probability: 0.0,
            last_kinds: alloc::vec![ProposalKind::RandomWalk; n],
            proposal,
            aux,
            draws,
            simulator: Simulator::for_spec(spec)?,
            phi: Vec::with_capacity(d),
        })
    }

    pub fn ladder(&self) -> &TemperatureLadder {
        &self.ladder
    }

    pub fn tempering(&self) -> &Tempering {
        &self.tempering
    }

    pub fn dim(&self) -> usize {
        self.y_stats.len()
    }

    /// Current proposal scale of chain `j`.
    pub fn chain_scale(&self, j: usize) -> &[f64] {
        self.chain_proposals[j].scale()
    }

    /// Chance that a chain above the coldest uses a random walk in a given sweep.
    pub fn set_walk_probability(&mut self, p: f64) -> Result<()> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidConfig(
                "walk probability must lie in [0, 1]".into(),
            ));
        }
        self.walk_probability = p;
        Ok(())
    }

    /// Proposal kind each chain used in the latest sweep.
    pub fn last_kinds(&self) -> &[ProposalKind] {
        &self.last_kinds
    }

    /// Robbins-Monro step on each chain's log scale multiplier, driven by random-walk moves only.
    pub fn adapt_scales(&mut self, accepted: &[bool], gain: f64, target: f64) -> Result<()> {
        check_dim(self.log_mult.len(), accepted.len())?;
        for (j, &a) in accepted.iter().enumerate() {
            if self.last_kinds[j] != ProposalKind::RandomWalk {
                continue;
            }
            let step = gain * (if a { 1.0 } else { 0.0 } - target);
            self.log_mult[j] = (self.log_mult[j] + step).clamp(-20.0, 20.0);
            let m = math::exp(self.log_mult[j]);
            let scale = self.proposal.scale().iter().map(|s| s * m).collect();
            self.chain_proposals[j] = ProposalSpec::new(self.proposal.kind(), scale)?;
        }
        Ok(())
    }

    /// Every chain starts at the prior mean, with auxiliary draws at its start.
    ///
    /// The neighbour-mean proposal only moves a chain that sits near its colder
    /// neighbour, so chains begin together rather than at independent prior draws.
    pub fn initialize(&mut self, rng: &mut RandomStream) -> Result<PopulationState> {
        let mut chains = Vec::with_capacity(self.ladder.len());
        for j in 0..self.ladder.len() {
            let mut r = rng.indexed("init", j as u64);
            let theta = ParamVector::new(self.prior.mean().to_vec())?;
            let mut aux = Vec::with_capacity(self.draws * self.dim());
            self.tempering
                .sim_param(&theta, self.ladder.t(j), &mut self.phi);
            self.simulator
                .draw_stats(&self.phi, self.aux, self.draws, &mut r, &mut aux)?;
            chains.push(ChainState {
                theta,
                aux_stats: aux,
            });
        }
        Ok(PopulationState {
            chains,
            iteration: 0,
        })
    }

    /// Log target density at temperature `t`, without the normalizing constant of the likelihood.
    fn log_tempered_prior(&self, theta: &[f64], t: f64) -> f64 {
        self.tempering.log_prior(&self.prior, theta, t)
    }

    /// One update of every chain, coldest first. Returns the acceptance flags.
    pub fn sweep(&mut self, pop: &mut PopulationState, rng: &RandomStream) -> Result<Vec<bool>> {
        let sweep_rng = rng.indexed("sweep", pop.iteration as u64);
        let d = self.dim();
        let mut flags = Vec::with_capacity(pop.chains.len());
        let mut phi_cur = Vec::with_capacity(d);
        for j in 0..pop.chains.len() {
            let t = self.ladder.t(j);
            let mut r = sweep_rng.indexed("chain", j as u64);
            let proposal = &self.chain_proposals[j];
            let kind =
                if j == 0 || (self.walk_probability > 0.0 && r.uniform() < self.walk_probability) {
                    ProposalKind::RandomWalk
                } else {
                    proposal.kind()
                };
            self.last_kinds[j] = kind;
            let cur = pop.chains[j].theta.clone();
            let fwd_center = proposal_center(j, pop, &cur, kind);
            let prop = proposal.draw(&fwd_center, &mut r);
            let rev_center = proposal_center(j, pop, &prop, kind);

            self.tempering.sim_param(&cur, t, &mut phi_cur);
            self.tempering.sim_param(&prop, t, &mut self.phi);
            let mut aux = Vec::with_capacity(self.draws * d);
            self.simulator
                .draw_stats(&self.phi, self.aux, 1, &mut r, &mut aux)?;

            let mut log_alpha =
                self.log_tempered_prior(&prop, t) - self.log_tempered_prior(&cur, t);
            for k in 0..d {
                log_alpha += (self.phi[k] - phi_cur[k]) * (self.y_stats[k] - aux[k]);
            }
            if kind == ProposalKind::NeighborMean {
                log_alpha += proposal.log_density(&cur, &rev_center)
                    - proposal.log_density(&prop, &fwd_center);
            }
            let moved = accept(log_alpha.min(0.0), &mut r);
            if moved {
                // Remaining draws continue the same auxiliary chain.
                self.simulator
                    .extend_stats(self.aux, self.draws - 1, &mut r, &mut aux);
                pop.chains[j] = ChainState {
                    theta: ParamVector::new(prop)?,
                    aux_stats: aux,
                };
            }
            flags.push(moved);
        }
        pop.iteration += 1;
        Ok(flags)
    }

    /// Log of the path estimate `z(phi_n) / z(phi_0)` at the current population.
    pub fn log_z_ratio(&self, pop: &PopulationState, skip_first: bool) -> Result<f64> {
        let phis: Vec<Vec<f64>> = pop
            .chains
            .iter()
            .enumerate()
            .map(|(j, c)| {
                let mut p = Vec::new();
                self.tempering.sim_param(&c.theta, self.ladder.t(j), &mut p);
                p
            })
            .collect();
        let aux: Vec<&[f64]> = pop.chains.iter().map(|c| c.aux_stats.as_slice()).collect();
        log_z_ratio_path(&phis, &aux, skip_first)
    }
}

/// `log z-hat(theta_n)`: the path estimate plus the closed-form `log z(0)`.
pub fn log_z_hat_path(
    pop: &PopulationState,
    ladder: &TemperatureLadder,
    spec: &ModelSpec,
    skip_first: bool,
) -> Result<f64> {
    if pop.chains.len() != ladder.len() {
        return Err(Error::InvalidLadder("population and ladder sizes differ"));
    }
    let phis: Vec<Vec<f64>> = pop
        .chains
        .iter()
        .enumerate()
        .map(|(j, c)| c.theta.iter().map(|x| ladder.t(j) * x).collect())
        .collect();
    let aux: Vec<&[f64]> = pop.chains.iter().map(|c| c.aux_stats.as_slice()).collect();
    Ok(log_z_ratio_path(&phis, &aux, skip_first)? + spec.log_z_zero())
}

/// Per-sweep record passed to run observers.
#[derive(Clone, Copy, Debug)]
pub struct PopxRecord<'a> {
    pub iteration: usize,
    pub burn_in: bool,
    pub chains: &'a [ChainState],
    pub accepted: &'a [bool],
    pub log_z_ratio: f64,
}

/// Recorded output of a population run.
#[derive(Clone, Debug)]
pub struct PopxRun {
    pub dim: usize,
    /// Coldest-chain parameters per recorded sweep, row-major.
    pub cold_draws: Vec<f64>,
    /// Posterior-chain parameters per recorded sweep, row-major.
    pub hot_draws: Vec<f64>,
    /// Path estimate of `log z(phi_n) - log z(phi_0)` per recorded sweep.
    pub log_z_ratio: Vec<f64>,
    pub acceptance: Vec<Acceptance>,
}

/// Runs burn-in plus `config.iterations` recorded sweeps.
pub fn run_population(
    sampler: &mut PopulationSampler,
    config: &PopxConfig,
    rng: &RandomStream,
    mut observer: impl FnMut(&PopxRecord<'_>),
) -> Result<PopxRun> {
    let d = sampler.dim();
    config.validate(d)?;
    sampler.set_walk_probability(config.walk_probability)?;
    let mut pop = sampler.initialize(&mut rng.substream("init"))?;
    let run_rng = rng.substream("run");
    let burn = config.burn_in();
    let mut out = PopxRun {
        dim: d,
        cold_draws: Vec::with_capacity(config.iterations * d),
        hot_draws: Vec::with_capacity(config.iterations * d),
        log_z_ratio: Vec::with_capacity(config.iterations),
        acceptance: alloc::vec![Acceptance::default(); pop.chains.len()],
    };
    let n = pop.chains.len() - 1;
    for i in 0..burn + config.iterations {
        let flags = sampler.sweep(&mut pop, &run_rng)?;
        let lz = sampler.log_z_ratio(&pop, config.exclude_accept_draw)?;
        let burning = i < burn;
        if let (true, Some(target)) = (burning, config.adapt_target) {
            sampler.adapt_scales(&flags, 1.0 / math::sqrt(i as f64 + 1.0), target)?;
        }
        if !burning {
            for (a, &f) in out.acceptance.iter_mut().zip(&flags) {
                a.record(f);
            }
            out.cold_draws.extend_from_slice(&pop.chains[0].theta);
            out.hot_draws.extend_from_slice(&pop.chains[n].theta);
            out.log_z_ratio.push(lz);
        }
        observer(&PopxRecord {
            iteration: i,
            burn_in: burning,
            chains: &pop.chains,
            accepted: &flags,
            log_z_ratio: lz,
        });
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ThetaEstimate {
    pub theta: Vec<f64>,
    pub log_z_hat: f64,
    pub log_post_hat: f64,
    pub log_evidence: f64,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EvidenceEstimate {
    pub log_evidence: f64,
    pub per_theta: Vec<ThetaEstimate>,
    /// Spread of the per-draw log-evidence values.
    pub per_theta_sd: f64,
    pub posterior_mean: Vec<f64>,
    pub posterior_sd: Vec<f64>,
    pub acceptance_rates: Vec<f64>,
    pub log_z_mean: f64,
    /// Batch-means standard error of the recorded `log z-hat` series.
    pub log_z_se: f64,
    /// Posterior draws, row-major.
    pub draws: Vec<f64>,
    pub dim: usize,
}

fn posterior_sd(draws: &[f64], dim: usize) -> Vec<f64> {
    (0..dim)
        .map(|k| {
            let xs: Vec<f64> = draws.iter().skip(k).step_by(dim).copied().collect();
            math::sqrt(math::variance(&xs))
        })
        .collect()
}

/// Candidate's-identity estimates at the `r` posterior draws nearest the mean, averaged on the natural scale.
pub fn evidence_from_draws(
    draws: &[f64],
    dim: usize,
    log_z_hat: &[f64],
    y_stats: &[f64],
    prior: &GaussianPrior,
    closest: usize,
    kernel: KernelKind,
) -> Result<(f64, Vec<ThetaEstimate>)> {
    check_dim(draws.len() / dim, log_z_hat.len())?;
    let kde = Kde::new(draws, dim, kernel)?;
    let mean = draw_mean(draws, dim);
    let picked = closest_indices(draws, dim, &mean, closest)?;
    let mut per = Vec::with_capacity(picked.len());
    for b in picked {
        let theta = &draws[b * dim..(b + 1) * dim];
        let log_post_hat = kde.log_density(theta)?;
        let le = log_evidence_chib(theta, y_stats, prior, log_z_hat[b], log_post_hat)?;
        per.push(ThetaEstimate {
            theta: theta.to_vec(),
            log_z_hat: log_z_hat[b],
            log_post_hat,
            log_evidence: le,
        });
    }
    let values: Vec<f64> = per.iter().map(|e| e.log_evidence).collect();
    Ok((math::log_mean_exp(&values), per))
}

/// Population exchange estimate of `log pi(y)` for one model.
pub fn run_popx_evidence(
    spec: &ModelSpec,
    y_stats: &[f64],
    prior: &GaussianPrior,
    config: &PopxConfig,
    rng: &RandomStream,
    observer: impl FnMut(&PopxRecord<'_>),
) -> Result<EvidenceEstimate> {
    let d = spec.statistic_count();
    config.validate(d)?;
    let ladder = make_ladder(config.chains - 1, config.exponent)?;
    let proposal = ProposalSpec::new(ProposalKind::NeighborMean, config.proposal_scale.clone())?;
    let mut sampler = PopulationSampler::new(
        spec,
        y_stats,
        prior.clone(),
        Tempering::Power,
        ladder,
        proposal,
        config.aux,
        config.draws,
    )?;
    let run = run_population(&mut sampler, config, rng, observer)?;
    let log_z0 = spec.log_z_zero();
    let log_z: Vec<f64> = run.log_z_ratio.iter().map(|r| r + log_z0).collect();
    let (log_evidence, per_theta) = evidence_from_draws(
        &run.hot_draws,
        d,
        &log_z,
        y_stats,
        prior,
        config.closest,
        config.kernel,
    )?;
    let values: Vec<f64> = per_theta.iter().map(|e| e.log_evidence).collect();
    Ok(EvidenceEstimate {
        log_evidence,
        per_theta_sd: math::sqrt(math::variance(&values)),
        per_theta,
        posterior_mean: draw_mean(&run.hot_draws, d),
        posterior_sd: posterior_sd(&run.hot_draws, d),
        acceptance_rates: run.acceptance.iter().map(Acceptance::rate).collect(),
        log_z_mean: math::mean(&log_z),
        log_z_se: batch_means_se(&log_z, 20),
        draws: run.hot_draws,
        dim: d,
    })
}
