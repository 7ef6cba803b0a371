//! Datasets and the estimation pipelines, one report row per dataset.

use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context as _, Result};
use grf_evidence::abc::{abc_model_choice, AbcModel, AbcSimulator, ReferenceTable};
use grf_evidence::bridge::{run_popx_bf, BayesFactorEstimate};
use grf_evidence::ergm::{graph_sample_approx, GraphPartition};
use grf_evidence::exchange::{ExchangeSampler, ProposalSpec};
use grf_evidence::ising::{auto_posterior_grid, sample_approx, StateCounts, TransferOracle};
use grf_evidence::population::{run_popx_evidence, EvidenceEstimate, PopxRecord};
use grf_evidence::{math, LogPartition, ModelSpec, ParamVector, RandomStream};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{ModelKind, RunConfig};
use crate::formats::{read_data, Data};

/// Everything a command needs besides its datasets.
#[derive(Clone, Debug)]
pub struct Context {
    pub config: RunConfig,
    pub seed: u64,
    pub hash: String,
    pub out: PathBuf,
    pub threads: usize,
}

impl Context {
    pub fn new(
        mut config: RunConfig,
        seed: Option<u64>,
        out: PathBuf,
        threads: usize,
    ) -> Result<Self> {
        if let Some(s) = seed {
            config.seed = Some(s);
        }
        let seed = config.seed()?;
        config.validate()?;
        Ok(Self {
            hash: config.hash(),
            config,
            seed,
            out,
            threads: threads.max(1),
        })
    }

    /// Stream for dataset `index` of `command`; independent of scheduling.
    pub fn stream(&self, command: &str, index: usize) -> RandomStream {
        RandomStream::new(self.seed)
            .substream(command)
            .indexed("dataset", index as u64)
    }

    fn par_map<T: Sync, R: Send>(
        &self,
        items: &[T],
        f: impl Fn(usize, &T) -> Result<R> + Sync,
    ) -> Result<Vec<R>> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(self.threads)
            .build()?;
        pool.install(|| items.par_iter().enumerate().map(|(i, x)| f(i, x)).collect())
    }

    fn path(&self, parts: &[&str]) -> Result<PathBuf> {
        let mut p = self.out.clone();
        for part in parts {
            p.push(part);
        }
        if let Some(dir) = p.parent() {
            std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        }
        Ok(p)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetRecord {
    pub id: String,
    /// 1 or 2 for simulated data, absent for supplied files.
    pub true_model: Option<u8>,
    pub theta: Option<Vec<f64>>,
    pub file: PathBuf,
    /// Statistics under the larger model.
    pub stats: Vec<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Manifest {
    pub seed: u64,
    pub config_hash: String,
    pub datasets: Vec<DatasetRecord>,
}

#[derive(Clone, Debug)]
pub struct Dataset {
    pub record: DatasetRecord,
    pub data: Data,
}

impl Dataset {
    pub fn stats(&self, spec: &ModelSpec) -> Result<Vec<f64>> {
        self.data.stats(spec)
    }
}

fn simulate_one(
    spec: &ModelSpec,
    theta: &[f64],
    sweeps: usize,
    rng: &mut RandomStream,
) -> Result<Data> {
    let theta = ParamVector::new(theta.to_vec())?;
    Ok(if spec.family().is_lattice() {
        Data::Lattice(sample_approx(&theta, spec, sweeps, rng)?)
    } else {
        Data::Graph(graph_sample_approx(&theta, spec, sweeps, rng)?)
    })
}

/// Simulates `per_model` datasets from each model and writes them with a manifest.
pub fn simulate(ctx: &Context) -> Result<Manifest> {
    let (m1, m2) = ctx.config.models()?;
    let d = &ctx.config.datasets;
    let mut jobs = Vec::new();
    for (k, spec, thetas) in [(1u8, m1, &d.m1_theta), (2u8, m2, &d.m2_theta)] {
        for i in 0..d.per_model {
            jobs.push((
                format!("m{k}-{i:02}"),
                k,
                spec,
                thetas[i % thetas.len()].clone(),
            ));
        }
    }
    let records = ctx.par_map(&jobs, |idx, (id, k, spec, theta)| {
        let mut rng = ctx.stream("simulate", idx);
        let data = simulate_one(spec, theta, d.sweeps, &mut rng)?;
        let file = PathBuf::from("datasets").join(format!("{id}.txt"));
        std::fs::write(
            ctx.path(&["datasets", &format!("{id}.txt")])?,
            data.to_text(),
        )?;
        Ok(DatasetRecord {
            id: id.clone(),
            true_model: Some(*k),
            theta: Some(theta.clone()),
            file,
            stats: data.stats(&m2)?,
        })
    })?;
    let manifest = Manifest {
        seed: ctx.seed,
        config_hash: ctx.hash.clone(),
        datasets: records,
    };
    write_json(&ctx.path(&["manifest.json"])?, &manifest)?;
    Ok(manifest)
}

/// Supplied files if configured, otherwise the simulated manifest under the output directory.
pub fn load_datasets(ctx: &Context) -> Result<Vec<Dataset>> {
    let (_, m2) = ctx.config.models()?;
    let files = &ctx.config.datasets.files;
    if !files.is_empty() {
        return files
            .iter()
            .map(|f| {
                let data = read_data(f)?;
                let id = f
                    .file_stem()
                    .and_then(|s| s.to_str())
                    .unwrap_or("data")
                    .to_string();
                Ok(Dataset {
                    record: DatasetRecord {
                        id,
                        true_model: None,
                        theta: None,
                        file: f.clone(),
                        stats: data.stats(&m2)?,
                    },
                    data,
                })
            })
            .collect();
    }
    let path = ctx.out.join("manifest.json");
    let text = std::fs::read_to_string(&path).with_context(|| {
        format!(
            "reading {} (run `simulate` first or set datasets.files)",
            path.display()
        )
    })?;
    let manifest: Manifest = serde_json::from_str(&text)?;
    manifest
        .datasets
        .into_iter()
        .map(|record| {
            let data = read_data(&ctx.out.join(&record.file))?;
            Ok(Dataset { record, data })
        })
        .collect()
}

/// `pi(m1 | y)` under equal model probabilities.
pub fn prob_m1(log_bf_12: f64) -> f64 {
    if log_bf_12 >= 0.0 {
        1.0 / (1.0 + math::exp(-log_bf_12))
    } else {
        let e = math::exp(log_bf_12);
        e / (1.0 + e)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExactRow {
    pub dataset: String,
    pub true_model: Option<u8>,
    pub log_evidence_m1: f64,
    pub log_evidence_m2: f64,
    pub log_bf_12: f64,
    pub p_m1: f64,
    pub seed: u64,
    pub config_hash: String,
    pub wall_seconds: f64,
}

/// Exact partition function for one model, chosen by size.
pub fn exact_oracle(spec: &ModelSpec) -> Result<Box<dyn LogPartition + Send + Sync>> {
    Ok(match spec.domain() {
        grf_evidence::Domain::Lattice { rows, cols } if rows * cols <= 64 => {
            Box::new(StateCounts::new(spec)?)
        }
        grf_evidence::Domain::Lattice { .. } => Box::new(TransferOracle::new(spec)?),
        grf_evidence::Domain::Graph { .. } => Box::new(
            GraphPartition::new(spec)
                .context("no exact partition function for this graph model")?,
        ),
    })
}

pub fn exact(ctx: &Context, datasets: &[Dataset]) -> Result<Vec<ExactRow>> {
    let (m1, m2) = ctx.config.models()?;
    let (p1, p2) = ctx.config.priors()?;
    let o1 = exact_oracle(&m1)?;
    let o2 = exact_oracle(&m2)?;
    let e = &ctx.config.exact;
    ctx.par_map(datasets, |_, ds| {
        let start = Instant::now();
        let l1 = auto_posterior_grid(&ds.stats(&m1)?, &p1, o1.as_ref(), e.span_sd, e.nodes)?
            .log_evidence();
        let l2 = auto_posterior_grid(&ds.stats(&m2)?, &p2, o2.as_ref(), e.span_sd, e.nodes)?
            .log_evidence();
        Ok(ExactRow {
            dataset: ds.record.id.clone(),
            true_model: ds.record.true_model,
            log_evidence_m1: l1,
            log_evidence_m2: l2,
            log_bf_12: l1 - l2,
            p_m1: prob_m1(l1 - l2),
            seed: ctx.seed,
            config_hash: ctx.hash.clone(),
            wall_seconds: start.elapsed().as_secs_f64(),
        })
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExchangeRow {
    pub dataset: String,
    pub true_model: Option<u8>,
    pub model: u8,
    pub theta1_mean: f64,
    pub theta1_sd: f64,
    pub theta2_mean: Option<f64>,
    pub theta2_sd: Option<f64>,
    pub acceptance_rate: f64,
    pub seed: u64,
    pub config_hash: String,
    pub wall_seconds: f64,
}

fn column_summary(draws: &[f64], dim: usize, k: usize) -> (f64, f64) {
    let xs: Vec<f64> = draws.iter().skip(k).step_by(dim).copied().collect();
    (math::mean(&xs), math::sqrt(math::variance(&xs)))
}

/// Opens a JSON-lines trace when traces are enabled.
fn trace_writer(ctx: &Context, name: &str) -> Result<Option<std::io::BufWriter<std::fs::File>>> {
    if !ctx.config.output.traces {
        return Ok(None);
    }
    let f = std::fs::File::create(ctx.path(&["traces", name])?)?;
    Ok(Some(std::io::BufWriter::new(f)))
}

pub fn exchange(ctx: &Context, datasets: &[Dataset]) -> Result<Vec<ExchangeRow>> {
    let (m1, m2) = ctx.config.models()?;
    let (p1, p2) = ctx.config.priors()?;
    let e = &ctx.config.exchange;
    let rows = ctx.par_map(datasets, |idx, ds| {
        let mut out = Vec::new();
        for (k, spec, prior) in [(1u8, &m1, &p1), (2u8, &m2, &p2)] {
            let start = Instant::now();
            let d = spec.statistic_count();
            let proposal = ProposalSpec::random_walk(vec![e.proposal_scale; d])?;
            let mut sampler = ExchangeSampler::new(spec, &ds.stats(spec)?, prior.clone(), proposal, e.aux_sweeps)?;
            let mut rng = ctx.stream("exchange", idx).substream(&format!("m{k}"));
            let mut trace = trace_writer(ctx, &format!("exchange_{}_m{k}.jsonl", ds.record.id))?;
            let mut io = Ok(());
            let init = ParamVector::new(prior.mean().to_vec())?;
            let run = sampler.run(init, e.iterations, &mut rng, |r| {
                if let (Some(w), true) = (trace.as_mut(), io.is_ok()) {
                    let line = serde_json::json!({"iteration": r.iteration, "theta": r.theta, "accepted": r.accepted});
                    io = writeln!(w, "{line}");
                }
            })?;
            io?;
            let burn = (e.burn_in_fraction * e.iterations as f64).ceil() as usize;
            let kept = &run.draws[burn.min(e.iterations.saturating_sub(2)) * d..];
            let (m, s) = column_summary(kept, d, 0);
            let second = (d > 1).then(|| column_summary(kept, d, 1));
            out.push(ExchangeRow {
                dataset: ds.record.id.clone(),
                true_model: ds.record.true_model,
                model: k,
                theta1_mean: m,
                theta1_sd: s,
                theta2_mean: second.map(|x| x.0),
                theta2_sd: second.map(|x| x.1),
                acceptance_rate: run.acceptance.rate(),
                seed: ctx.seed,
                config_hash: ctx.hash.clone(),
                wall_seconds: start.elapsed().as_secs_f64(),
            });
        }
        Ok(out)
    })?;
    Ok(rows.into_iter().flatten().collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PopxRow {
    pub dataset: String,
    pub true_model: Option<u8>,
    pub log_evidence_m1: f64,
    pub log_evidence_m2: f64,
    pub log_bf_12: f64,
    pub p_m1: f64,
    pub log_z_se_m1: f64,
    pub log_z_se_m2: f64,
    pub seed: u64,
    pub config_hash: String,
    pub wall_seconds: f64,
}

fn popx_trace_line(r: &PopxRecord<'_>) -> serde_json::Value {
    let thetas: Vec<&[f64]> = r.chains.iter().map(|c| c.theta.as_slice()).collect();
    serde_json::json!({
        "iteration": r.iteration,
        "burn_in": r.burn_in,
        "theta": thetas,
        "accepted": r.accepted,
        "log_z_ratio": r.log_z_ratio,
    })
}

#[derive(Serialize)]
struct PopxSummary<'a> {
    dataset: &'a str,
    seed: u64,
    config_hash: &'a str,
    m1: &'a EvidenceEstimate,
    m2: &'a EvidenceEstimate,
}

pub fn popx(ctx: &Context, datasets: &[Dataset]) -> Result<Vec<PopxRow>> {
    let (m1, m2) = ctx.config.models()?;
    let (p1, p2) = ctx.config.priors()?;
    ctx.par_map(datasets, |idx, ds| {
        let start = Instant::now();
        let mut est = Vec::new();
        for (k, spec, prior) in [(1u8, &m1, &p1), (2u8, &m2, &p2)] {
            let config = ctx.config.popx(spec.statistic_count());
            let rng = ctx.stream("popx-evidence", idx).substream(&format!("m{k}"));
            let mut trace =
                trace_writer(ctx, &format!("popx-evidence_{}_m{k}.jsonl", ds.record.id))?;
            let mut io = Ok(());
            let e = run_popx_evidence(spec, &ds.stats(spec)?, prior, &config, &rng, |r| {
                if let (Some(w), true) = (trace.as_mut(), io.is_ok()) {
                    io = writeln!(w, "{}", popx_trace_line(r));
                }
            })?;
            io?;
            est.push(e);
        }
        write_json(
            &ctx.path(&["popx-evidence", &format!("{}.json", ds.record.id)])?,
            &PopxSummary {
                dataset: &ds.record.id,
                seed: ctx.seed,
                config_hash: &ctx.hash,
                m1: &est[0],
                m2: &est[1],
            },
        )?;
        let lbf = est[0].log_evidence - est[1].log_evidence;
        Ok(PopxRow {
            dataset: ds.record.id.clone(),
            true_model: ds.record.true_model,
            log_evidence_m1: est[0].log_evidence,
            log_evidence_m2: est[1].log_evidence,
            log_bf_12: lbf,
            p_m1: prob_m1(lbf),
            log_z_se_m1: est[0].log_z_se,
            log_z_se_m2: est[1].log_z_se,
            seed: ctx.seed,
            config_hash: ctx.hash.clone(),
            wall_seconds: start.elapsed().as_secs_f64(),
        })
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BfRow {
    pub dataset: String,
    pub true_model: Option<u8>,
    pub log_bf_12: f64,
    pub bf_12: f64,
    pub p_m1: f64,
    pub selected_sd: f64,
    pub log_z_ratio_se: f64,
    pub theta2_median: f64,
    pub theta2_q25: f64,
    pub theta2_q75: f64,
    pub seed: u64,
    pub config_hash: String,
    pub wall_seconds: f64,
}

/// Linear-interpolated sample quantile.
pub fn quantile(xs: &[f64], q: f64) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let pos = q * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    v[lo] + (pos - lo as f64) * (v[hi] - v[lo])
}

pub fn bayes_factor(
    ctx: &Context,
    datasets: &[Dataset],
) -> Result<Vec<(BfRow, BayesFactorEstimate)>> {
    let (m1, m2) = ctx.config.models()?;
    let (p1, p2) = ctx.config.priors()?;
    let config = ctx.config.popx(2);
    ctx.par_map(datasets, |idx, ds| {
        let start = Instant::now();
        let rng = ctx.stream("popx-bf", idx);
        let mut trace = trace_writer(ctx, &format!("popx-bf_{}.jsonl", ds.record.id))?;
        let mut io = Ok(());
        let est = run_popx_bf(&m1, &m2, &ds.stats(&m2)?, &p1, &p2, &config, &rng, |r| {
            if let (Some(w), true) = (trace.as_mut(), io.is_ok()) {
                io = writeln!(w, "{}", popx_trace_line(r));
            }
        })?;
        io?;
        let theta2: Vec<f64> = est
            .m2_draws
            .iter()
            .skip(1)
            .step_by(est.m2_dim)
            .copied()
            .collect();
        let row = BfRow {
            dataset: ds.record.id.clone(),
            true_model: ds.record.true_model,
            log_bf_12: est.log_bf_12,
            bf_12: math::exp(est.log_bf_12),
            p_m1: prob_m1(est.log_bf_12),
            selected_sd: est.selected_sd,
            log_z_ratio_se: est.log_z_ratio_se,
            theta2_median: quantile(&theta2, 0.5),
            theta2_q25: quantile(&theta2, 0.25),
            theta2_q75: quantile(&theta2, 0.75),
            seed: ctx.seed,
            config_hash: ctx.hash.clone(),
            wall_seconds: start.elapsed().as_secs_f64(),
        };
        write_json(
            &ctx.path(&["popx-bf", &format!("{}.json", ds.record.id)])?,
            &(&row, &est),
        )?;
        Ok((row, est))
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AbcRow {
    pub dataset: String,
    pub true_model: Option<u8>,
    pub quantile: f64,
    pub epsilon: f64,
    pub accepted: usize,
    pub p_m1: f64,
    pub log_bf_12: f64,
    pub seed: u64,
    pub config_hash: String,
    /// Share of the reference-table time plus this dataset's selection time.
    pub wall_seconds: f64,
}

/// Reference table built in parallel; draw `i` depends only on the seed and `i`.
pub fn reference_table(ctx: &Context) -> Result<ReferenceTable> {
    let (m1, m2) = ctx.config.models()?;
    let (p1, p2) = ctx.config.priors()?;
    let models = vec![
        AbcModel {
            spec: m1,
            prior: p1,
        },
        AbcModel {
            spec: m2,
            prior: p2,
        },
    ];
    let a = &ctx.config.abc;
    let root = RandomStream::new(ctx.seed).substream("abc");
    let sim = AbcSimulator::new(models, a.aux_sweeps)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(ctx.threads)
        .build()?;
    let draws = pool.install(|| {
        (0..a.draws as u64)
            .into_par_iter()
            .map_init(|| sim.clone(), |s, i| s.draw(&root, i))
            .collect::<grf_evidence::Result<Vec<_>>>()
    })?;
    Ok(ReferenceTable::from_draws(draws, 2)?)
}

pub fn abc(ctx: &Context, datasets: &[Dataset]) -> Result<Vec<AbcRow>> {
    let (_, m2) = ctx.config.models()?;
    let start = Instant::now();
    let table = reference_table(ctx)?;
    let table_share = start.elapsed().as_secs_f64() / datasets.len().max(1) as f64;
    let rows = ctx.par_map(datasets, |_, ds| {
        let y = ds.stats(&m2)?;
        let mut out = Vec::new();
        for &q in &ctx.config.abc.quantiles {
            let t = Instant::now();
            let r = abc_model_choice(&table, &y, q)?;
            out.push(AbcRow {
                dataset: ds.record.id.clone(),
                true_model: ds.record.true_model,
                quantile: q,
                epsilon: r.epsilon,
                accepted: r.accepted,
                p_m1: r.probs[0],
                log_bf_12: r.probs[0].ln() - r.probs[1].ln(),
                seed: ctx.seed,
                config_hash: ctx.hash.clone(),
                wall_seconds: table_share + t.elapsed().as_secs_f64(),
            });
        }
        Ok(out)
    })?;
    Ok(rows.into_iter().flatten().collect())
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let f = std::fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
    let mut w = std::io::BufWriter::new(f);
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    Ok(())
}

/// Study-level model kind, used to pick figure outputs.
pub fn is_graph_study(ctx: &Context) -> bool {
    ctx.config.model.kind == ModelKind::Ergm
}

pub fn require_nonempty(datasets: &[Dataset]) -> Result<()> {
    if datasets.is_empty() {
        bail!("no datasets");
    }
    Ok(())
}
