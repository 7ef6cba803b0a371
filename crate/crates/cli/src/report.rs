//! CSV report tables and plot-ready figure data.

use std::path::Path;

use anyhow::{Context as _, Result};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::study::{AbcRow, BfRow, ExactRow, PopxRow};

pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    let mut w =
        csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Rows of `path`, or `None` when the file does not exist.
pub fn read_csv<T: DeserializeOwned>(path: &Path) -> Result<Option<Vec<T>>> {
    if !path.exists() {
        return Ok(None);
    }
    let mut r =
        csv::Reader::from_path(path).with_context(|| format!("reading {}", path.display()))?;
    let rows = r.deserialize().collect::<Result<Vec<T>, _>>()?;
    Ok(Some(rows))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbPoint {
    pub dataset: String,
    pub true_model: Option<u8>,
    pub method: String,
    pub exact_p_m1: f64,
    pub estimated_p_m1: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BfPoint {
    pub dataset: String,
    pub true_model: Option<u8>,
    pub method: String,
    pub exact_log_bf_12: f64,
    pub estimated_log_bf_12: f64,
    /// True over estimated Bayes factor.
    pub bf_ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensitySample {
    pub panel: String,
    pub dataset: String,
    pub parameter: String,
    pub value: f64,
}

/// One method's `(dataset, log BF, p_m1)` estimates.
type Estimates = Vec<(String, f64, f64)>;

fn method_estimates(out: &Path) -> Result<Vec<(String, Estimates)>> {
    let mut methods = Vec::new();
    if let Some(rows) = read_csv::<PopxRow>(&out.join("popx-evidence.csv"))? {
        methods.push((
            "popx-evidence".to_string(),
            rows.into_iter()
                .map(|r| (r.dataset, r.log_bf_12, r.p_m1))
                .collect(),
        ));
    }
    if let Some(rows) = read_csv::<BfRow>(&out.join("popx-bf.csv"))? {
        methods.push((
            "popx-bf".to_string(),
            rows.into_iter()
                .map(|r| (r.dataset, r.log_bf_12, r.p_m1))
                .collect(),
        ));
    }
    if let Some(rows) = read_csv::<AbcRow>(&out.join("abc.csv"))? {
        let mut qs: Vec<f64> = rows.iter().map(|r| r.quantile).collect();
        qs.sort_by(f64::total_cmp);
        qs.dedup();
        for q in qs {
            methods.push((
                format!("abc-q{q}"),
                rows.iter()
                    .filter(|r| r.quantile == q)
                    .map(|r| (r.dataset.clone(), r.log_bf_12, r.p_m1))
                    .collect(),
            ));
        }
    }
    Ok(methods)
}

pub const FIGURES_README: &str = "\
# Figure data

All files are CSV with a header row. `dataset` matches the ids in
`../manifest.json`; `true_model` is 1 or 2 for simulated data and empty
otherwise.

fig1.csv: exact against estimated posterior model probability.
  method          popx-evidence, popx-bf, or abc-q<quantile>
  exact_p_m1      pi(m1 | y) from the exact grid evidences, equal model priors
  estimated_p_m1  the method's estimate
  Plot estimated_p_m1 against exact_p_m1, one panel per method.

fig2.csv: true over estimated Bayes factor.
  exact_log_bf_12, estimated_log_bf_12  natural-log Bayes factors of m1 to m2
  bf_ratio        exp(exact_log_bf_12 - estimated_log_bf_12)
  Plot bf_ratio per dataset on a log axis, one series per method.

fig4.csv: posterior samples for a graph dataset (written by popx-bf).
  panel a: theta1 (edges) under m1
  panel b: theta1 (edges) under m2
  panel c: theta2 (two-stars) under m2
  Plot a kernel density of value per panel and dataset.
";

/// Rebuilds `figures/fig1.csv`, `figures/fig2.csv` and the figure README from the report tables present.
pub fn refresh_figures(out: &Path) -> Result<()> {
    let dir = out.join("figures");
    std::fs::create_dir_all(&dir)?;
    std::fs::write(dir.join("README.md"), FIGURES_README)?;
    let Some(exact) = read_csv::<ExactRow>(&out.join("exact-evidence.csv"))? else {
        return Ok(());
    };
    let mut probs = Vec::new();
    let mut bfs = Vec::new();
    for (method, rows) in method_estimates(out)? {
        for (dataset, log_bf, p) in rows {
            let Some(e) = exact.iter().find(|e| e.dataset == dataset) else {
                continue;
            };
            probs.push(ProbPoint {
                dataset: dataset.clone(),
                true_model: e.true_model,
                method: method.clone(),
                exact_p_m1: e.p_m1,
                estimated_p_m1: p,
            });
            bfs.push(BfPoint {
                dataset,
                true_model: e.true_model,
                method: method.clone(),
                exact_log_bf_12: e.log_bf_12,
                estimated_log_bf_12: log_bf,
                bf_ratio: (e.log_bf_12 - log_bf).exp(),
            });
        }
    }
    write_csv(&dir.join("fig1.csv"), &probs)?;
    write_csv(&dir.join("fig2.csv"), &bfs)?;
    Ok(())
}
