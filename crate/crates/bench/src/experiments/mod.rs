//! Experiment runners, one per [`ExperimentKind`].
//!
//! A runner turns a validated config into tables, scalar metrics and named
//! checks. [`run_experiment`] writes those under `<out>/<id>/`.

mod gradients;
mod noisy;
mod states;
mod theory;
mod training;

use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use heftva_core::ansatz::{AnsatzSpec, Family};
use serde::Serialize;
use serde_json::Value;

use crate::config::{ExperimentConfig, ExperimentKind};
use crate::error::{BenchError, BenchResult};
use crate::output::{Check, ExperimentDir, Format, ResultRecord, Table};

pub use training::{campaign, CampaignRun};

/// What a runner produces before anything touches the disk.
#[derive(Debug, Default)]
pub struct Outcome {
    pub tables: Vec<Table>,
    pub metrics: BTreeMap<String, Value>,
    pub checks: Vec<Check>,
}

impl Outcome {
    fn metric(&mut self, key: impl Into<String>, value: impl Serialize) {
        let v = serde_json::to_value(value).unwrap_or(Value::Null);
        self.metrics.insert(key.into(), v);
    }

    fn check(&mut self, name: &str, measured: f64, threshold: impl Into<String>, passed: bool) {
        self.checks.push(Check::new(name, measured, threshold, passed));
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    pub format: Format,
    /// Replaces the config's seed count when set.
    pub seeds: Option<usize>,
}

/// Run one experiment in memory.
pub fn execute(cfg: &ExperimentConfig) -> BenchResult<Outcome> {
    use ExperimentKind as K;
    match cfg.kind {
        K::Gradvar => gradients::gradvar(cfg),
        K::InitSweep => gradients::init_sweep(cfg),
        K::Vqe => training::vqe(cfg),
        K::Landscape => training::landscape(cfg),
        K::Fidelity => training::fidelity(cfg),
        K::ParamEfficiency => training::param_efficiency(cfg),
        K::StatsCompare => training::stats_compare(cfg),
        K::SizeScaling => training::size_scaling(cfg),
        K::OptimizerRobustness => training::optimizer_robustness(cfg),
        K::Noise => noisy::noise(cfg),
        K::Shots => noisy::shots(cfg),
        K::ShotNoise => noisy::shot_noise(cfg),
        K::Entanglement => states::entanglement(cfg),
        K::Purity => states::purity(cfg),
        K::Theory => theory::theory(cfg),
        K::Framepotential => theory::framepotential(cfg),
    }
}

/// Run one experiment and write its tables and `summary.json` under `<out_root>/<id>/`.
pub fn run_experiment(cfg: &ExperimentConfig, raw: &str, out_root: &Path, opts: RunOptions) -> BenchResult<ResultRecord> {
    let mut cfg = cfg.clone();
    if let Some(k) = opts.seeds {
        cfg.seeds = k;
    }
    cfg.validate()?;
    let clock = Instant::now();
    let outcome = execute(&cfg)?;
    let wall_time_s = clock.elapsed().as_secs_f64();
    let config_hash = cfg.config_hash();
    let dir = ExperimentDir::new(out_root, &cfg.id);
    let mut files = Vec::new();
    for t in &outcome.tables {
        files.push(dir.write_table(t, &config_hash, opts.format)?);
    }
    files.push("summary.json".into());
    let record = ResultRecord {
        experiment_id: cfg.id.clone(),
        kind: cfg.kind.name().into(),
        config_hash,
        input_hash: ExperimentConfig::input_hash(raw),
        toolkit_version: env!("CARGO_PKG_VERSION").into(),
        metrics: outcome.metrics,
        checks: outcome.checks,
        files,
        wall_time_s,
    };
    dir.write_record(&record)?;
    Ok(record)
}

/// Error out when `--assert` is on and any check failed.
pub fn enforce_checks(record: &ResultRecord) -> BenchResult<()> {
    let failed = record.failed_checks();
    if failed.is_empty() {
        return Ok(());
    }
    let names: Vec<String> =
        failed.iter().map(|c| format!("{} (measured {}, want {})", c.name, c.measured, c.threshold)).collect();
    Err(BenchError::Assertion(format!("{}: {}", record.experiment_id, names.join("; "))))
}

fn build_spec(cfg: &ExperimentConfig, family: Family, n: usize, l: usize) -> BenchResult<AnsatzSpec> {
    Ok(AnsatzSpec::build(family, n, l, cfg.ansatz.entangler)?)
}

fn half_cut(n: usize) -> Vec<usize> {
    (0..n / 2).collect()
}

fn mean(xs: &[f64]) -> f64 {
    heftva_core::numeric::mean(xs)
}

/// Standard error of the mean; zero for fewer than two values.
fn sem(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    (heftva_core::numeric::sample_variance(xs) / xs.len() as f64).sqrt()
}
