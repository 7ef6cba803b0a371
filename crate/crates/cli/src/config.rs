//! Run configuration read from TOML.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use grf_evidence::kde::KernelKind;
use grf_evidence::population::{PopxConfig, DEFAULT_ADAPT_TARGET, DEFAULT_WALK_PROBABILITY};
use grf_evidence::sampler::AuxSchedule;
use grf_evidence::{GaussianPrior, ModelSpec};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    /// First- versus second-order Ising lattices.
    Ising,
    /// Edges versus edges plus two-stars.
    Ergm,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub kind: ModelKind,
    pub rows: usize,
    pub cols: usize,
    pub nodes: usize,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            kind: ModelKind::Ising,
            rows: 6,
            cols: 6,
            nodes: 16,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PriorConfig {
    pub mean: f64,
    pub sd: f64,
}

impl Default for PriorConfig {
    fn default() -> Self {
        Self { mean: 0.0, sd: 5.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatasetConfig {
    /// Datasets simulated from each model.
    pub per_model: usize,
    /// Parameters for the smaller model's datasets, cycled.
    pub m1_theta: Vec<Vec<f64>>,
    /// Parameters for the larger model's datasets, cycled.
    pub m2_theta: Vec<Vec<f64>>,
    /// Gibbs or dyad sweeps per simulated dataset.
    pub sweeps: usize,
    /// Existing data files; when set, nothing is simulated and true models are unknown.
    pub files: Vec<PathBuf>,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        Self {
            per_model: 10,
            m1_theta: vec![vec![0.1], vec![0.2], vec![0.3], vec![0.4]],
            m2_theta: vec![
                vec![0.1, 0.1],
                vec![0.2, 0.1],
                vec![0.1, 0.2],
                vec![0.2, 0.2],
            ],
            sweeps: 1000,
            files: Vec::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExactConfig {
    /// Grid nodes per dimension.
    pub nodes: usize,
    /// Half-width of the grid in curvature standard deviations around the mode.
    pub span_sd: f64,
}

impl Default for ExactConfig {
    fn default() -> Self {
        Self {
            nodes: 400,
            span_sd: 8.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExchangeConfig {
    pub iterations: usize,
    pub aux_sweeps: usize,
    pub proposal_scale: f64,
    pub burn_in_fraction: f64,
}

impl Default for ExchangeConfig {
    fn default() -> Self {
        Self {
            iterations: 20_000,
            aux_sweeps: 200,
            proposal_scale: grf_evidence::exchange::DEFAULT_PROPOSAL_SCALE,
            burn_in_fraction: 0.1,
        }
    }
}

/// Population settings; unset fields take the defaults of the model kind.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PopxSection {
    pub chains: Option<usize>,
    pub exponent: Option<f64>,
    pub iterations: Option<usize>,
    pub burn_in_fraction: Option<f64>,
    pub aux_sweeps: Option<usize>,
    pub thin: Option<usize>,
    pub draws: Option<usize>,
    pub closest: Option<usize>,
    pub proposal_scale: Option<f64>,
    pub exclude_accept_draw: Option<bool>,
    pub kernel: Option<KernelKind>,
    /// Target random-walk acceptance for burn-in tuning; 0 disables tuning.
    pub adapt_target: Option<f64>,
    pub walk_probability: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AbcConfig {
    pub draws: usize,
    pub aux_sweeps: usize,
    pub quantiles: Vec<f64>,
}

impl Default for AbcConfig {
    fn default() -> Self {
        Self {
            draws: 500_000,
            aux_sweeps: 200,
            quantiles: vec![0.005, 0.001],
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    /// Write per-iteration JSON-lines traces.
    pub traces: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: Option<u64>,
    pub model: ModelConfig,
    pub prior: PriorConfig,
    pub datasets: DatasetConfig,
    pub exact: ExactConfig,
    pub exchange: ExchangeConfig,
    pub popx: PopxSection,
    pub abc: AbcConfig,
    pub output: OutputConfig,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    /// Reads `path`; relative data file paths are resolved against its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let mut config =
            Self::from_toml(&text).with_context(|| format!("parsing {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        for f in &mut config.datasets.files {
            if f.is_relative() {
                *f = base.join(&*f);
            }
        }
        Ok(config)
    }

    pub fn seed(&self) -> Result<u64> {
        self.seed
            .context("a seed is required (config `seed` or --seed)")
    }

    /// The nested model pair `(m1, m2)`.
    pub fn models(&self) -> Result<(ModelSpec, ModelSpec)> {
        let m = &self.model;
        Ok(match m.kind {
            ModelKind::Ising => (
                ModelSpec::ising_first_order(m.rows, m.cols)?,
                ModelSpec::ising_second_order(m.rows, m.cols)?,
            ),
            ModelKind::Ergm => (
                ModelSpec::ergm_edges(m.nodes)?,
                ModelSpec::ergm_edges_two_stars(m.nodes)?,
            ),
        })
    }

    pub fn priors(&self) -> Result<(GaussianPrior, GaussianPrior)> {
        Ok((
            GaussianPrior::isotropic(1, self.prior.mean, self.prior.sd)?,
            GaussianPrior::isotropic(2, self.prior.mean, self.prior.sd)?,
        ))
    }

    /// Population settings for parameters of dimension `dim`.
    pub fn popx(&self, dim: usize) -> PopxConfig {
        let base = match self.model.kind {
            ModelKind::Ising => PopxConfig::lattice_defaults(dim),
            ModelKind::Ergm => PopxConfig::graph_defaults(dim),
        };
        let p = &self.popx;
        PopxConfig {
            chains: p.chains.unwrap_or(base.chains),
            exponent: p.exponent.unwrap_or(base.exponent),
            iterations: p.iterations.unwrap_or(base.iterations),
            burn_in_fraction: p.burn_in_fraction.unwrap_or(base.burn_in_fraction),
            aux: AuxSchedule {
                sweeps: p.aux_sweeps.unwrap_or(base.aux.sweeps),
                thin: p.thin.unwrap_or(base.aux.thin),
            },
            draws: p.draws.unwrap_or(base.draws),
            closest: p.closest.unwrap_or(base.closest),
            proposal_scale: p
                .proposal_scale
                .map(|s| vec![s; dim])
                .unwrap_or(base.proposal_scale),
            exclude_accept_draw: p.exclude_accept_draw.unwrap_or(base.exclude_accept_draw),
            kernel: p.kernel.unwrap_or(base.kernel),
            adapt_target: match p.adapt_target {
                Some(0.0) => None,
                Some(t) => Some(t),
                None => Some(DEFAULT_ADAPT_TARGET),
            },
            walk_probability: p.walk_probability.unwrap_or(DEFAULT_WALK_PROBABILITY),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.models()?;
        self.priors()?;
        self.popx(1).validate(1)?;
        self.popx(2).validate(2)?;
        let d = &self.datasets;
        if d.files.is_empty()
            && (d.per_model == 0 || d.sweeps == 0 || d.m1_theta.is_empty() || d.m2_theta.is_empty())
        {
            bail!("datasets: per_model, sweeps and parameter lists must be non-empty");
        }
        if d.m1_theta.iter().any(|t| t.len() != 1) || d.m2_theta.iter().any(|t| t.len() != 2) {
            bail!("datasets: m1_theta entries need one value, m2_theta entries two");
        }
        if self.exact.nodes < 3 || !(self.exact.span_sd > 0.0) {
            bail!("exact: need at least 3 nodes and a positive span");
        }
        let e = &self.exchange;
        if e.iterations == 0
            || e.aux_sweeps == 0
            || !(e.proposal_scale > 0.0)
            || !(0.0..1.0).contains(&e.burn_in_fraction)
        {
            bail!("exchange: counts and scale must be positive, burn-in fraction in [0, 1)");
        }
        let a = &self.abc;
        if a.draws == 0 || a.aux_sweeps == 0 {
            bail!("abc: draws and aux_sweeps must be positive");
        }
        if a.quantiles.is_empty() || a.quantiles.iter().any(|q| !(*q > 0.0 && *q < 1.0)) {
            bail!("abc: quantiles must lie in (0, 1)");
        }
        Ok(())
    }

    /// First 16 hex digits of the SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        let digest = Sha256::digest(json.as_bytes());
        hex::encode(digest)[..16].to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_stock_settings() {
        let c = RunConfig::from_toml("seed = 3").unwrap();
        c.validate().unwrap();
        let p = c.popx(1);
        assert_eq!(
            (p.chains, p.iterations, p.aux.sweeps, p.draws, p.closest),
            (5, 20_000, 200, 200, 100)
        );
        assert_eq!(c.abc.quantiles, vec![0.005, 0.001]);
        let g = RunConfig::from_toml("seed = 3\n[model]\nkind = \"ergm\"").unwrap();
        assert_eq!(g.popx(2).chains, 10);
        assert_eq!(g.popx(2).aux.sweeps, 1000);
    }

    #[test]
    fn overrides_and_errors() {
        let c = RunConfig::from_toml(
            "seed = 1\n[popx]\nchains = 11\nproposal_scale = 0.5\nadapt_target = 0",
        )
        .unwrap();
        let p = c.popx(2);
        assert_eq!(p.chains, 11);
        assert_eq!(p.proposal_scale, vec![0.5, 0.5]);
        assert_eq!(p.adapt_target, None);
        assert!(RunConfig::from_toml("[popx]\nchain = 3").is_err());
        assert!(RunConfig::from_toml("").unwrap().seed().is_err());
        let bad = RunConfig::from_toml("seed = 1\n[abc]\nquantiles = [1.5]").unwrap();
        assert!(bad.validate().is_err());
    }

    #[test]
    fn hash_tracks_content() {
        let a = RunConfig::from_toml("seed = 1").unwrap();
        let b = RunConfig::from_toml("seed = 2").unwrap();
        assert_eq!(a.hash(), RunConfig::from_toml("seed = 1").unwrap().hash());
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 16);
    }
}
