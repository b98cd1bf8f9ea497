//! Named suites: run a manifest's configs, emit plots, then score the criteria.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::config::ExperimentConfig;
use crate::criteria::{self, CriterionOutcome, Scale};
use crate::error::{BenchError, BenchResult};
use crate::experiments::{run_experiment, RunOptions};
use crate::output::{write_atomic, write_json};
use crate::plot::emit_plot_data;

pub const MANIFEST: &str = "manifest.toml";

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuiteEntry {
    pub description: String,
    pub criteria: Scale,
    /// Config paths relative to the configs directory.
    pub configs: Vec<String>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FigureEntry {
    pub title: String,
    pub configs: Vec<String>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub suites: BTreeMap<String, SuiteEntry>,
    #[serde(default)]
    pub figures: BTreeMap<String, FigureEntry>,
}

impl Manifest {
    pub fn load(configs_root: &Path) -> BenchResult<Self> {
        let path = configs_root.join(MANIFEST);
        let text = std::fs::read_to_string(&path).map_err(|e| BenchError::io(&path, e))?;
        toml::from_str(&text).map_err(|e| BenchError::Validation(format!("{}: {}", path.display(), e.message())))
    }

    pub fn suite(&self, name: &str) -> BenchResult<&SuiteEntry> {
        self.suites.get(name).ok_or_else(|| {
            let known: Vec<&str> = self.suites.keys().map(String::as_str).collect();
            BenchError::Validation(format!("suite: unknown suite {name:?} (known: {})", known.join(", ")))
        })
    }

    /// Figure ids that draw on `config`.
    pub fn figures_for(&self, config: &str) -> Vec<String> {
        self.figures.iter().filter(|(_, f)| f.configs.iter().any(|c| c == config)).map(|(k, _)| k.clone()).collect()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentStatus {
    pub config: String,
    pub id: Option<String>,
    pub kind: Option<String>,
    /// `ok`, `checks_failed` or `error`.
    pub status: String,
    pub failed_checks: Vec<String>,
    pub error: Option<String>,
    pub figures: Vec<String>,
    pub wall_time_s: Option<f64>,
}

/// Run every config of a suite into `out`, continuing past failures.
pub fn run_experiments(configs_root: &Path, suite: &str, out: &Path, opts: RunOptions) -> BenchResult<Vec<ExperimentStatus>> {
    let manifest = Manifest::load(configs_root)?;
    let entry = manifest.suite(suite)?;
    let mut statuses = Vec::new();
    for rel in &entry.configs {
        let figures = manifest.figures_for(rel);
        let res = ExperimentConfig::load(&configs_root.join(rel)).and_then(|(cfg, raw)| {
            let record = run_experiment(&cfg, &raw, out, opts)?;
            emit_plot_data(&out.join(&cfg.id))?.write(&out.join(&cfg.id))?;
            Ok(record)
        });
        statuses.push(match res {
            Ok(r) => {
                let failed: Vec<String> = r.failed_checks().iter().map(|c| c.name.clone()).collect();
                ExperimentStatus {
                    config: rel.clone(),
                    id: Some(r.experiment_id.clone()),
                    kind: Some(r.kind.clone()),
                    status: if failed.is_empty() { "ok" } else { "checks_failed" }.into(),
                    failed_checks: failed,
                    error: None,
                    figures,
                    wall_time_s: Some(r.wall_time_s),
                }
            }
            Err(e) => ExperimentStatus {
                config: rel.clone(),
                id: None,
                kind: None,
                status: "error".into(),
                failed_checks: Vec::new(),
                error: Some(e.to_string()),
                figures,
                wall_time_s: None,
            },
        });
    }
    Ok(statuses)
}

/// Every file under `dir` except the `summary.json` records (which carry wall time), sorted.
pub fn data_files(dir: &Path) -> BenchResult<Vec<PathBuf>> {
    fn walk(root: &Path, dir: &Path, out: &mut Vec<PathBuf>) -> BenchResult<()> {
        for entry in std::fs::read_dir(dir).map_err(|e| BenchError::io(dir, e))? {
            let path = entry.map_err(|e| BenchError::io(dir, e))?.path();
            if path.is_dir() {
                walk(root, &path, out)?;
            } else if path.file_name().is_some_and(|n| n != "summary.json") {
                out.push(path.strip_prefix(root).expect("under root").to_path_buf());
            }
        }
        Ok(())
    }
    let mut out = Vec::new();
    if dir.exists() {
        walk(dir, dir, &mut out)?;
    }
    out.sort();
    Ok(out)
}

/// One row of the headline comparison table.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SummaryRow {
    pub metric: String,
    pub heft: Option<f64>,
    pub hea: Option<f64>,
    pub reference: Option<f64>,
    pub source: String,
}

fn summary_rows(outcomes: &[CriterionOutcome]) -> Vec<SummaryRow> {
    let get = |id: u8, key: &str| -> Option<f64> {
        let o = outcomes.iter().find(|o| o.id == id)?;
        match o.metrics.get(key)? {
            Value::Number(n) => n.as_f64(),
            Value::Object(m) => m.get("p_two_sided").and_then(Value::as_f64),
            _ => None,
        }
    };
    let row = |metric: &str, heft, hea, reference, source: &str| SummaryRow {
        metric: metric.into(),
        heft,
        hea,
        reference,
        source: source.into(),
    };
    vec![
        row("Grad Var (largest N)", get(2, "heft_var_largest"), get(2, "hea_var_largest"), None, "C02"),
        row("Energy Conv (relative error)", get(6, "heft_mean_relative_error"), get(6, "hea_mean_relative_error"), None, "C06"),
        row("p-value (Welch, final energy)", get(6, "welch"), None, None, "C06"),
        row("Ground Fidelity", get(7, "heft_mean_fidelity"), get(7, "hea_mean_fidelity"), None, "C07"),
        row("Mean Purity (half cut)", get(7, "heft_mean_purity"), get(7, "hea_mean_purity"), get(7, "haar_purity"), "C07"),
    ]
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SuiteReport {
    pub suite: String,
    pub description: String,
    pub scale: Scale,
    pub toolkit_version: String,
    pub experiments: Vec<ExperimentStatus>,
    pub criteria: Vec<CriterionOutcome>,
    pub summary: Vec<SummaryRow>,
}

impl SuiteReport {
    pub fn criteria_passed(&self) -> usize {
        self.criteria.iter().filter(|c| c.passed).count()
    }

    pub fn to_markdown(&self) -> String {
        let fmt = |x: Option<f64>| x.map_or("-".to_string(), |v| format!("{v:.4e}"));
        let mut s = String::new();
        let _ = writeln!(s, "# Suite `{}`\n\n{}\n", self.suite, self.description);
        let _ = writeln!(s, "Criteria scale: {:?}. Passed {}/{}.\n", self.scale, self.criteria_passed(), self.criteria.len());
        let _ = writeln!(s, "## Criteria\n\n| id | criterion | result | measured | threshold | time (s) |\n|---|---|---|---|---|---|");
        for c in &self.criteria {
            let _ = writeln!(
                s,
                "| C{:02} | {} | {} | {} | {} | {:.1} |",
                c.id,
                c.name,
                if c.passed { "PASS" } else { "FAIL" },
                c.measured.replace('|', "/"),
                c.threshold.replace('|', "/"),
                c.runtime_s
            );
        }
        let _ = writeln!(s, "\n## Summary\n\n| metric | HEFT | HEA | reference | from |\n|---|---|---|---|---|");
        for r in &self.summary {
            let _ = writeln!(s, "| {} | {} | {} | {} | {} |", r.metric, fmt(r.heft), fmt(r.hea), fmt(r.reference), r.source);
        }
        let _ = writeln!(s, "\n## Experiments\n\n| config | id | status | detail |\n|---|---|---|---|");
        for e in &self.experiments {
            let detail = e.error.clone().unwrap_or_else(|| e.failed_checks.join(", "));
            let _ = writeln!(
                s,
                "| {} | {} | {} | {} |",
                e.config,
                e.id.as_deref().unwrap_or("-"),
                e.status,
                detail.replace('|', "/")
            );
        }
        s
    }

    pub fn write(&self, out: &Path) -> BenchResult<()> {
        write_json(&out.join("report.json"), self)?;
        write_atomic(&out.join("report.md"), self.to_markdown().as_bytes())
    }
}

/// Run a whole suite: experiments, plots, criteria, report.
pub fn run_suite(
    configs_root: &Path,
    suite: &str,
    out: &Path,
    opts: RunOptions,
    on_criterion: impl FnMut(&CriterionOutcome),
) -> BenchResult<SuiteReport> {
    let manifest = Manifest::load(configs_root)?;
    let entry = manifest.suite(suite)?.clone();
    let experiments = run_experiments(configs_root, suite, out, opts)?;
    let criteria = criteria::run_all(entry.criteria, configs_root, on_criterion);
    let report = SuiteReport {
        suite: suite.into(),
        description: entry.description,
        scale: entry.criteria,
        toolkit_version: env!("CARGO_PKG_VERSION").into(),
        summary: summary_rows(&criteria),
        experiments,
        criteria,
    };
    report.write(out)?;
    Ok(report)
}

/// Re-render `report.md` from an existing `report.json`.
pub fn rerender(out: &Path) -> BenchResult<SuiteReport> {
    let path = out.join("report.json");
    let text = std::fs::read_to_string(&path).map_err(|e| BenchError::io(&path, e))?;
    let report: SuiteReport =
        serde_json::from_str(&text).map_err(|e| BenchError::Validation(format!("{}: {e}", path.display())))?;
    write_atomic(&out.join("report.md"), report.to_markdown().as_bytes())?;
    Ok(report)
}
