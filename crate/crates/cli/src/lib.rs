//! Experiment runner for the `grf-evidence` estimators: configuration, data
//! files, the per-dataset pipelines and their report tables.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod formats;
pub mod report;
pub mod study;

use std::path::PathBuf;

use anyhow::Result;
use serde::Serialize;

use crate::report::{refresh_figures, write_csv, DensitySample};
use crate::study::{write_json, Context};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Simulate,
    ExactEvidence,
    Exchange,
    PopxEvidence,
    PopxBf,
    Abc,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::ExactEvidence => "exact-evidence",
            Command::Exchange => "exchange",
            Command::PopxEvidence => "popx-evidence",
            Command::PopxBf => "popx-bf",
            Command::Abc => "abc",
        }
    }
}

#[derive(Serialize)]
struct CommandSummary<'a, T> {
    command: &'a str,
    seed: u64,
    config_hash: &'a str,
    rows: &'a [T],
}

fn emit<T: Serialize>(ctx: &Context, command: Command, rows: &[T]) -> Result<PathBuf> {
    std::fs::create_dir_all(&ctx.out)?;
    let csv = ctx.out.join(format!("{}.csv", command.name()));
    write_csv(&csv, rows)?;
    write_json(
        &ctx.out.join(format!("{}.json", command.name())),
        &CommandSummary {
            command: command.name(),
            seed: ctx.seed,
            config_hash: &ctx.hash,
            rows,
        },
    )?;
    refresh_figures(&ctx.out)?;
    Ok(csv)
}

/// Runs one subcommand and returns the main output file.
pub fn run(ctx: &Context, command: Command) -> Result<PathBuf> {
    if command == Command::Simulate {
        study::simulate(ctx)?;
        return Ok(ctx.out.join("manifest.json"));
    }
    let datasets = study::load_datasets(ctx)?;
    study::require_nonempty(&datasets)?;
    match command {
        Command::Simulate => unreachable!(),
        Command::ExactEvidence => emit(ctx, command, &study::exact(ctx, &datasets)?),
        Command::Exchange => emit(ctx, command, &study::exchange(ctx, &datasets)?),
        Command::PopxEvidence => emit(ctx, command, &study::popx(ctx, &datasets)?),
        Command::Abc => emit(ctx, command, &study::abc(ctx, &datasets)?),
        Command::PopxBf => {
            let results = study::bayes_factor(ctx, &datasets)?;
            if study::is_graph_study(ctx) {
                let mut samples = Vec::new();
                for (row, est) in &results {
                    let push = |samples: &mut Vec<DensitySample>,
                                panel: &str,
                                parameter: &str,
                                xs: Vec<f64>| {
                        samples.extend(xs.into_iter().map(|value| DensitySample {
                            panel: panel.into(),
                            dataset: row.dataset.clone(),
                            parameter: parameter.into(),
                            value,
                        }))
                    };
                    let d2 = est.m2_dim;
                    push(&mut samples, "a", "theta1|m1", est.m1_draws.clone());
                    push(
                        &mut samples,
                        "b",
                        "theta1|m2",
                        est.m2_draws.iter().step_by(d2).copied().collect(),
                    );
                    push(
                        &mut samples,
                        "c",
                        "theta2|m2",
                        est.m2_draws.iter().skip(1).step_by(d2).copied().collect(),
                    );
                }
                write_csv(&ctx.out.join("figures").join("fig4.csv"), &samples)?;
            }
            let rows: Vec<_> = results.into_iter().map(|(r, _)| r).collect();
            emit(ctx, command, &rows)
        }
    }
}
