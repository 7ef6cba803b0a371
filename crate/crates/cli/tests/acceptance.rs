//! End-to-end acceptance checks. Each test prints one `PASS`/`FAIL` line.
//!
//! Run with `cargo test -p grf-evidence-cli --test acceptance -- --nocapture`.
//! The full suite takes tens of minutes on a single core.

use std::io::Write;
use std::path::Path;
use std::sync::Mutex;
use std::time::Instant;

use grf_evidence::bridge::assemble_log_bf;
use grf_evidence::bridge::run_popx_bf;
use grf_evidence::diagnostics::batch_means_se;
use grf_evidence::ergm::{z_graph_brute, GraphPartition};
use grf_evidence::evidence::log_evidence_chib;
use grf_evidence::exchange::{ExchangeSampler, ProposalSpec};
use grf_evidence::ising::{
    auto_posterior_grid, posterior_mode, sample_approx, suff_stats, z_brute, z_transfer,
    BruteForce, GridPosterior, NeighborhoodOrder, StateCounts, TransferOracle,
};
use grf_evidence::population::{
    log_z_hat_path, make_ladder, run_popx_evidence, ChainState, PopulationState, PopxConfig,
};
use grf_evidence::sampler::{AuxSchedule, Simulator};
use grf_evidence::{math, GaussianPrior, LogPartition, ModelSpec, ParamVector, RandomStream};
use grf_evidence_cli::config::RunConfig;
use grf_evidence_cli::study::{self, Context};

/// Checks run one at a time; some carry wall-clock limits.
static SERIAL: Mutex<()> = Mutex::new(());

fn serial() -> std::sync::MutexGuard<'static, ()> {
    SERIAL.lock().unwrap_or_else(|e| e.into_inner())
}

fn report(n: u32, name: &str, pass: bool, detail: &str) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    let line = format!("criterion {n} ({name}): {verdict} {detail}\n");
    std::io::stderr().write_all(line.as_bytes()).unwrap();
}

fn rel_err(log_a: f64, log_b: f64) -> f64 {
    (log_a - log_b).exp_m1().abs()
}

fn wide_prior(dim: usize) -> GaussianPrior {
    GaussianPrior::isotropic(dim, 0.0, 5.0).unwrap()
}

fn lattice_stats(spec: &ModelSpec, theta: &[f64], seed: u64) -> Vec<f64> {
    let order = NeighborhoodOrder::of(spec).unwrap();
    // Simulate in the second-order model when two parameters are given.
    let sim_spec = match (theta.len(), spec.domain()) {
        (2, grf_evidence::Domain::Lattice { rows, cols }) => {
            ModelSpec::ising_second_order(rows, cols).unwrap()
        }
        _ => *spec,
    };
    let y = sample_approx(
        &ParamVector::new(theta.to_vec()).unwrap(),
        &sim_spec,
        1000,
        &mut RandomStream::new(seed),
    )
    .unwrap();
    suff_stats(&y, order).0
}

/// Probability mass of `[lower, upper)` under a one-dimensional grid posterior.
fn binned_tv(grid: &GridPosterior, draws: &[f64], bins: usize) -> f64 {
    let (m, sd) = (grid.mean()[0], grid.sd()[0]);
    let (lo, hi) = (m - 4.0 * sd, m + 4.0 * sd);
    let width = (hi - lo) / bins as f64;
    let mut counts = vec![0.0; bins + 2];
    for &x in draws {
        let k = if x < lo {
            0
        } else if x >= hi {
            bins + 1
        } else {
            (1 + ((x - lo) / width) as usize).min(bins)
        };
        counts[k] += 1.0 / draws.len() as f64;
    }
    counts
        .iter()
        .enumerate()
        .map(|(k, c)| {
            let p = match k {
                0 => grid.marginal_mass(0, f64::NEG_INFINITY, lo),
                k if k == bins + 1 => grid.marginal_mass(0, hi, f64::INFINITY),
                k => grid.marginal_mass(0, lo + (k - 1) as f64 * width, lo + k as f64 * width),
            };
            0.5 * (c - p).abs()
        })
        .sum()
}

#[test]
fn criterion_1_transfer_matches_enumeration() {
    let _serial = serial();
    let start = Instant::now();
    let grid = [-0.4, -0.1, 0.0, 0.1, 0.4];
    let mut worst = 0.0f64;
    for n in [2, 3, 4] {
        for spec in [
            ModelSpec::ising_first_order(n, n).unwrap(),
            ModelSpec::ising_second_order(n, n).unwrap(),
        ] {
            let thetas: Vec<Vec<f64>> = if spec.statistic_count() == 1 {
                grid.iter().map(|&a| vec![a]).collect()
            } else {
                grid.iter()
                    .flat_map(|&a| grid.iter().map(move |&b| vec![a, b]))
                    .collect()
            };
            for t in thetas {
                worst = worst.max(rel_err(
                    z_transfer(&t, &spec).unwrap(),
                    z_brute(&t, &spec).unwrap(),
                ));
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let pass = worst < 1e-10 && secs < 5.0;
    report(
        1,
        "oracle agreement",
        pass,
        &format!("max rel err {worst:.2e}, {secs:.2} s"),
    );
    assert!(pass);
}

#[test]
fn criterion_2_closed_forms_at_zero() {
    let _serial = serial();
    let mut exact_zero = true;
    let mut worst_ising = 0.0f64;
    for (r, c) in [(1, 3), (2, 2), (3, 3), (4, 4), (2, 5)] {
        for spec in [
            ModelSpec::ising_first_order(r, c).unwrap(),
            ModelSpec::ising_second_order(r, c).unwrap(),
        ] {
            let n = (r * c) as f64;
            exact_zero &= spec.log_z_zero() == n * std::f64::consts::LN_2;
            let zero = vec![0.0; spec.statistic_count()];
            worst_ising =
                worst_ising.max(rel_err(z_brute(&zero, &spec).unwrap(), spec.log_z_zero()));
            worst_ising = worst_ising.max(rel_err(
                z_transfer(&zero, &spec).unwrap(),
                spec.log_z_zero(),
            ));
        }
    }
    let mut worst_graph = 0.0f64;
    for n in 2..=6 {
        let spec = ModelSpec::ergm_edges(n).unwrap();
        let part = GraphPartition::new(&spec).unwrap();
        let dyads = (n * (n - 1) / 2) as f64;
        for t in [-2.0f64, -0.5, 0.0, 0.3, 1.5] {
            let closed = dyads * t.exp().ln_1p();
            worst_graph = worst_graph.max(rel_err(closed, z_graph_brute(&[t], &spec).unwrap()));
            worst_graph = worst_graph.max(rel_err(part.log_z(&[t]), closed));
        }
    }
    let pass = exact_zero && worst_ising < 1e-12 && worst_graph < 1e-12;
    report(
        2,
        "closed forms",
        pass,
        &format!("ising log z(0) exact: {exact_zero}, ising rel err {worst_ising:.1e}, edges rel err {worst_graph:.1e}"),
    );
    assert!(pass);
}

#[test]
fn criterion_3_exchange_posterior_on_2x2() {
    let _serial = serial();
    let spec = ModelSpec::ising_first_order(2, 2).unwrap();
    let prior = wide_prior(1);
    let y = lattice_stats(&spec, &[0.5], 3);
    let grid =
        auto_posterior_grid(&y, &prior, &BruteForce::new(&spec).unwrap(), 8.0, 4000).unwrap();

    let mut sampler = ExchangeSampler::new(
        &spec,
        &y,
        prior,
        ProposalSpec::random_walk(vec![0.2]).unwrap(),
        50,
    )
    .unwrap();
    let burn = 10_000;
    let run = sampler
        .run(
            ParamVector::zeros(1),
            1_000_000 + burn,
            &mut RandomStream::new(31),
            |_| {},
        )
        .unwrap();
    let draws = &run.draws[burn..];

    let mean = math::mean(draws);
    let sd = math::variance(draws).sqrt();
    let mean_se = batch_means_se(draws, 50);
    let sq: Vec<f64> = draws.iter().map(|x| (x - mean) * (x - mean)).collect();
    let sd_se = batch_means_se(&sq, 50) / (2.0 * sd);
    let (gm, gsd) = (grid.mean()[0], grid.sd()[0]);
    let tv = binned_tv(&grid, draws, 40);
    let pass = (mean - gm).abs() <= 3.0 * mean_se && (sd - gsd).abs() <= 3.0 * sd_se && tv <= 0.03;
    report(
        3,
        "exchange posterior",
        pass,
        &format!(
            "y {y:?}, mean {mean:.4} vs {gm:.4} (se {mean_se:.4}), sd {sd:.4} vs {gsd:.4} (se {sd_se:.4}), tv {tv:.4}, acceptance {:.2}",
            run.acceptance.rate()
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_4_fixed_path_is_unbiased() {
    let _serial = serial();
    let spec = ModelSpec::ising_first_order(2, 2).unwrap();
    let theta = 0.5;
    let ladder = make_ladder(10, 5.0).unwrap();
    let mut sim = Simulator::for_spec(&spec).unwrap();
    let root = RandomStream::new(40);
    let schedule = AuxSchedule {
        sweeps: 50,
        thin: 1,
    };
    let reps = 100;
    let zs: Vec<f64> = (0..reps)
        .map(|rep| {
            let mut rng = root.indexed("rep", rep);
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
            log_z_hat_path(&pop, &ladder, &spec, false).unwrap().exp()
        })
        .collect();
    let truth = z_brute(&[theta], &spec).unwrap().exp();
    let mean = math::mean(&zs);
    let se = (math::variance(&zs) / reps as f64).sqrt();
    let rel = (mean - truth) / truth;
    let pass = rel.abs() < 0.05;
    report(
        4,
        "path estimator",
        pass,
        &format!(
            "mean z-hat {mean:.4} vs z {truth:.4}, rel err {rel:+.4}, rel se {:.4}",
            se / truth
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_5_evidence_accuracy_on_6x6() {
    let _serial = serial();
    let spec = ModelSpec::ising_first_order(6, 6).unwrap();
    let prior = wide_prior(1);
    let oracle = TransferOracle::new(&spec).unwrap();
    let mut config = PopxConfig::lattice_defaults(1);
    config.chains = 11;
    config.iterations = 5000;
    config.draws = 200;
    config.closest = 100;
    let mut pass = true;
    let mut lines = Vec::new();
    for (k, theta) in [0.1, 0.3, 0.45].into_iter().enumerate() {
        let y = lattice_stats(&spec, &[theta], 500 + k as u64);
        let exact = auto_posterior_grid(&y, &prior, &oracle, 8.0, 2000)
            .unwrap()
            .log_evidence();
        let start = Instant::now();
        let errs: Vec<f64> = (0..10)
            .map(|seed| {
                let est =
                    run_popx_evidence(&spec, &y, &prior, &config, &RandomStream::new(seed), |_| {})
                        .unwrap();
                est.log_evidence - exact
            })
            .collect();
        let secs = start.elapsed().as_secs_f64();
        let ok = errs.iter().filter(|e| e.abs() < 0.1).count();
        pass &= ok >= 9 && secs <= 900.0;
        let shown: Vec<String> = errs.iter().map(|e| format!("{e:+.3}")).collect();
        lines.push(format!(
            "y {y:?}: {ok}/10 within 0.1 [{}], {secs:.0} s",
            shown.join(" ")
        ));
    }
    report(5, "evidence accuracy", pass, &lines.join("; "));
    assert!(pass);
}

fn study_context(toml: &str, out: &Path) -> Context {
    Context::new(
        RunConfig::from_toml(toml).unwrap(),
        None,
        out.to_path_buf(),
        1,
    )
    .unwrap()
}

#[test]
fn criterion_6_population_beats_abc() {
    let _serial = serial();
    let dir = tempfile::tempdir().unwrap();
    let ctx = study_context("seed = 6\n[model]\nrows = 6\ncols = 6\n", dir.path());
    study::simulate(&ctx).unwrap();
    let datasets = study::load_datasets(&ctx).unwrap();
    assert_eq!(datasets.len(), 20);
    let exact = study::exact(&ctx, &datasets).unwrap();
    let popx = study::popx(&ctx, &datasets).unwrap();
    let abc = study::abc(&ctx, &datasets).unwrap();

    let truth = |id: &str| exact.iter().find(|r| r.dataset == id).unwrap().p_m1;
    let popx_err = math::mean(
        &popx
            .iter()
            .map(|r| (r.p_m1 - truth(&r.dataset)).abs())
            .collect::<Vec<_>>(),
    );
    let abc_err = |q: f64| {
        let errs: Vec<f64> = abc
            .iter()
            .filter(|r| r.quantile == q)
            .map(|r| (r.p_m1 - truth(&r.dataset)).abs())
            .collect();
        assert_eq!(errs.len(), 20);
        math::mean(&errs)
    };
    let (fine, coarse) = (abc_err(0.001), abc_err(0.005));
    let pass = popx_err < fine && fine <= coarse;
    report(
        6,
        "model probabilities",
        pass,
        &format!(
            "mean abs error: population {popx_err:.4}, abc 0.1% {fine:.4}, abc 0.5% {coarse:.4}"
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_7_bridged_bf_matches_evidence_difference() {
    let _serial = serial();
    let (m1, m2) = (
        ModelSpec::ising_first_order(3, 3).unwrap(),
        ModelSpec::ising_second_order(3, 3).unwrap(),
    );
    let (p1, p2) = (wide_prior(1), wide_prior(2));
    let (c1, c2) = (
        PopxConfig::lattice_defaults(1),
        PopxConfig::lattice_defaults(2),
    );
    let (o1, o2) = (
        StateCounts::new(&m1).unwrap(),
        StateCounts::new(&m2).unwrap(),
    );
    let reps = 4;
    let mut pass = true;
    let mut lines = Vec::new();
    for (k, theta) in [
        [0.2, 0.1],
        [0.1, 0.0],
        [0.3, -0.1],
        [0.0, 0.2],
        [0.15, 0.15],
    ]
    .into_iter()
    .enumerate()
    {
        let y = lattice_stats(&m2, &theta, 700 + k as u64);
        let root = RandomStream::new(70).indexed("dataset", k as u64);
        let mut bf = Vec::new();
        let mut diff = Vec::new();
        for r in 0..reps {
            let rng = root.indexed("rep", r);
            bf.push(
                run_popx_bf(&m1, &m2, &y, &p1, &p2, &c2, &rng.substream("bf"), |_| {})
                    .unwrap()
                    .log_bf_12,
            );
            let e1 =
                run_popx_evidence(&m1, &y[..1], &p1, &c1, &rng.substream("m1"), |_| {}).unwrap();
            let e2 = run_popx_evidence(&m2, &y, &p2, &c2, &rng.substream("m2"), |_| {}).unwrap();
            diff.push(e1.log_evidence - e2.log_evidence);
        }
        let se = ((math::variance(&bf) + math::variance(&diff)) / reps as f64).sqrt();
        let gap = math::mean(&bf) - math::mean(&diff);
        let ok = gap.abs() <= 3.0 * se;
        pass &= ok;
        let exact = auto_posterior_grid(&y[..1], &p1, &o1, 8.0, 2000)
            .unwrap()
            .log_evidence()
            - auto_posterior_grid(&y, &p2, &o2, 8.0, 300)
                .unwrap()
                .log_evidence();
        lines.push(format!(
            "y {y:?}: bf {:.3} vs diff {:.3} (se {se:.3}, exact {exact:.3}) {}",
            math::mean(&bf),
            math::mean(&diff),
            if ok { "ok" } else { "off" }
        ));
    }
    report(7, "bridged Bayes factor", pass, &lines.join("; "));
    assert!(pass);
}

#[test]
fn criterion_8_gamaneg_bayes_factor() {
    let _serial = serial();
    let data = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/gamaneg.txt");
    let dir = tempfile::tempdir().unwrap();
    let toml = format!(
        "[model]\nkind = \"ergm\"\nnodes = 16\n[datasets]\nfiles = [{:?}]\n",
        data.to_str().unwrap()
    );
    let mut pass = true;
    let mut lines = Vec::new();
    for seed in 1..=5 {
        let ctx = Context::new(
            RunConfig::from_toml(&toml).unwrap(),
            Some(seed),
            dir.path().join(seed.to_string()),
            1,
        )
        .unwrap();
        let datasets = study::load_datasets(&ctx).unwrap();
        let rows = study::bayes_factor(&ctx, &datasets).unwrap();
        let row = &rows[0].0;
        let log10_bf = row.log_bf_12 / std::f64::consts::LN_10;
        let ok = row.bf_12 > 3.0
            && row.theta2_q25 <= 0.0
            && 0.0 <= row.theta2_q75
            && (0.6..=2.6).contains(&log10_bf);
        pass &= ok;
        lines.push(format!(
            "seed {seed}: BF {:.2} (log10 {log10_bf:.2}), theta2 IQR [{:.4}, {:.4}]",
            row.bf_12, row.theta2_q25, row.theta2_q75
        ));
    }
    report(8, "graph study", pass, &lines.join("; "));
    assert!(pass);
}

/// Composite Simpson integral of `exp(f)` over a box, returned on the log scale.
fn simpson_log_evidence(
    f: impl Fn(&[f64]) -> f64,
    lower: &[f64],
    upper: &[f64],
    intervals: usize,
) -> f64 {
    let d = lower.len();
    let h: Vec<f64> = (0..d)
        .map(|k| (upper[k] - lower[k]) / intervals as f64)
        .collect();
    let w = |i: usize| {
        if i == 0 || i == intervals {
            1.0
        } else if i % 2 == 1 {
            4.0
        } else {
            2.0
        }
    };
    let nodes = intervals + 1;
    let total = nodes.pow(d as u32);
    let mut terms = Vec::with_capacity(total);
    let mut theta = vec![0.0; d];
    for flat in 0..total {
        let mut rest = flat;
        let mut log_w = 0.0;
        for k in 0..d {
            let i = rest % nodes;
            rest /= nodes;
            theta[k] = lower[k] + i as f64 * h[k];
            log_w += (w(i) * h[k] / 3.0).ln();
        }
        terms.push(f(&theta) + log_w);
    }
    math::log_sum_exp(&terms)
}

fn quadrature_evidence(
    y: &[f64],
    prior: &GaussianPrior,
    oracle: &dyn LogPartition,
    intervals: usize,
) -> f64 {
    let (mode, sd) = posterior_mode(y, prior, oracle).unwrap();
    let lower: Vec<f64> = mode.iter().zip(&sd).map(|(m, s)| m - 15.0 * s).collect();
    let upper: Vec<f64> = mode.iter().zip(&sd).map(|(m, s)| m + 15.0 * s).collect();
    let f = |t: &[f64]| math::dot(y, t) + prior.log_density_unchecked(t) - oracle.log_z(t);
    simpson_log_evidence(f, &lower, &upper, intervals)
}

#[test]
fn criterion_9_identities_with_exact_inputs() {
    let _serial = serial();
    let (m1, m2) = (
        ModelSpec::ising_first_order(4, 4).unwrap(),
        ModelSpec::ising_second_order(4, 4).unwrap(),
    );
    let (p1, p2) = (wide_prior(1), wide_prior(2));
    let (o1, o2) = (
        StateCounts::new(&m1).unwrap(),
        StateCounts::new(&m2).unwrap(),
    );
    let y = lattice_stats(&m2, &[0.2, 0.1], 90);

    let grid1 = auto_posterior_grid(&y[..1], &p1, &o1, 8.0, 4000)
        .unwrap()
        .log_evidence();
    let grid2 = auto_posterior_grid(&y, &p2, &o2, 8.0, 400)
        .unwrap()
        .log_evidence();
    // Posterior densities normalized by an independent quadrature.
    let quad1 = quadrature_evidence(&y[..1], &p1, &o1, 20_000);
    let quad2 = quadrature_evidence(&y, &p2, &o2, 600);
    let log_post = |t: &[f64], ys: &[f64], p: &GaussianPrior, o: &dyn LogPartition, ev: f64| {
        math::dot(ys, t) + p.log_density_unchecked(t) - o.log_z(t) - ev
    };

    let (mode1, sd1) = posterior_mode(&y[..1], &p1, &o1).unwrap();
    let (mode2, sd2) = posterior_mode(&y, &p2, &o2).unwrap();
    let mut rng = RandomStream::new(9);
    let mut around = |m: &[f64], s: &[f64]| -> Vec<f64> {
        m.iter()
            .zip(s)
            .map(|(m, s)| m + (4.0 * rng.uniform() - 2.0) * s)
            .collect()
    };
    let mut worst_chib = 0.0f64;
    let mut worst_bf = 0.0f64;
    for _ in 0..20 {
        let t1 = around(&mode1, &sd1);
        let t2 = around(&mode2, &sd2);
        let chib = log_evidence_chib(
            &t1,
            &y[..1],
            &p1,
            o1.log_z(&t1),
            log_post(&t1, &y[..1], &p1, &o1, quad1),
        )
        .unwrap();
        worst_chib = worst_chib.max((chib - grid1).abs());
        let bf = assemble_log_bf(
            &y,
            &t1,
            &t2,
            &p1,
            &p2,
            log_post(&t1, &y[..1], &p1, &o1, quad1),
            log_post(&t2, &y, &p2, &o2, quad2),
            o2.log_z(&t2) - o1.log_z(&t1),
        )
        .unwrap();
        worst_bf = worst_bf.max((bf - (grid1 - grid2)).abs());
    }
    let pass = worst_chib < 1e-5 && worst_bf < 1e-4;
    report(
        9,
        "identities",
        pass,
        &format!("y {y:?}, max chib gap {worst_chib:.2e}, max bridged gap {worst_bf:.2e}"),
    );
    assert!(pass);
}
