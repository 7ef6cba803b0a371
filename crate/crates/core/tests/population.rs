use grf_evidence::exchange::{ProposalKind, ProposalSpec};
use grf_evidence::ising::{auto_posterior_grid, z_brute, BruteForce};
use grf_evidence::population::{
    log_z_hat_path, make_ladder, run_population, ChainState, PopulationSampler, PopulationState,
    PopxConfig, Tempering,
};
use grf_evidence::sampler::{AuxSchedule, Simulator};
use grf_evidence::{math, GaussianPrior, ModelSpec, ParamVector, RandomStream};

#[test]
fn posterior_chain_matches_grid_on_2x2() {
    let spec = ModelSpec::ising_first_order(2, 2).unwrap();
    let prior = GaussianPrior::standard(1);
    let y = [0.0];
    let grid =
        auto_posterior_grid(&y, &prior, &BruteForce::new(&spec).unwrap(), 8.0, 2000).unwrap();

    let mut config = PopxConfig::lattice_defaults(1);
    config.chains = 4;
    config.iterations = 400_000;
    config.aux = AuxSchedule { sweeps: 5, thin: 1 };
    config.draws = 1;
    let prop =
        ProposalSpec::new(ProposalKind::NeighborMean, config.proposal_scale.clone()).unwrap();
    let mut sampler = PopulationSampler::new(
        &spec,
        &y,
        prior,
        Tempering::Power,
        make_ladder(3, 5.0).unwrap(),
        prop,
        config.aux,
        config.draws,
    )
    .unwrap();
    let run = run_population(&mut sampler, &config, &RandomStream::new(21), |_| {}).unwrap();

    let (m, sd) = (grid.mean()[0], grid.sd()[0]);
    let bins = 40;
    let (lo, hi) = (m - 4.0 * sd, m + 4.0 * sd);
    let width = (hi - lo) / bins as f64;
    let mut counts = vec![0.0; bins + 2];
    for &x in &run.hot_draws {
        let k = if x < lo {
            0
        } else if x >= hi {
            bins + 1
        } else {
            1 + ((x - lo) / width) as usize
        };
        counts[k.min(bins + 1)] += 1.0 / run.hot_draws.len() as f64;
    }
    let mut tv = 0.0;
    for (k, c) in counts.iter().enumerate() {
        let p = match k {
            0 => grid.marginal_mass(0, f64::NEG_INFINITY, lo),
            k if k == bins + 1 => grid.marginal_mass(0, hi, f64::INFINITY),
            k => grid.marginal_mass(0, lo + (k - 1) as f64 * width, lo + k as f64 * width),
        };
        tv += 0.5 * (c - p).abs();
    }
    assert!(tv <= 0.03, "tv {tv}");
}

#[test]
fn fixed_path_estimate_is_unbiased() {
    let spec = ModelSpec::ising_first_order(2, 2).unwrap();
    let theta = 0.5;
    let ladder = make_ladder(10, 5.0).unwrap();
    let mut sim = Simulator::for_spec(&spec).unwrap();
    let root = RandomStream::new(4);
    let schedule = AuxSchedule { sweeps: 5, thin: 2 };
    let reps = 100;
    let mut zs = Vec::with_capacity(reps);
    for rep in 0..reps {
        let mut rng = root.indexed("rep", rep as u64);
        let chains = (0..ladder.len())
            .map(|j| {
                let mut aux = Vec::new();
                sim.draw_stats(&[ladder.t(j) * theta], schedule, 500, &mut rng, &mut aux)
                    .unwrap();
                ChainState {
                    theta: ParamVector::new(vec![theta]).unwrap(),
                    aux_stats: aux,
                }
            })
            .collect();
        let pop = PopulationState {
            chains,
            iteration: 0,
        };
        zs.push(log_z_hat_path(&pop, &ladder, &spec, false).unwrap().exp());
    }
    let truth = z_brute(&[theta], &spec).unwrap().exp();
    let mean = math::mean(&zs);
    assert!(((mean - truth) / truth).abs() < 0.05, "{mean} {truth}");
}
