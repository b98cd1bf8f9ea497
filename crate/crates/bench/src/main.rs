//! `heftva` command-line entry point.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use heftva_bench::criteria::{self, Scale};
use heftva_bench::experiments::{enforce_checks, run_experiment, RunOptions};
use heftva_bench::output::Format;
use heftva_bench::plot::emit_plot_data;
use heftva_bench::{suite, BenchError, BenchResult, ExperimentConfig};

#[derive(Parser)]
#[command(name = "heftva", version, about = "Variational-circuit trainability experiments")]
struct Cli {
    /// Worker threads for parallel seed loops (default: all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and validate config files without running them.
    Validate {
        #[arg(long, required = true, num_args = 1..)]
        config: Vec<PathBuf>,
    },
    /// Run one experiment.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        out: OutArgs,
        /// Override the config's seed count.
        #[arg(long)]
        seeds: Option<usize>,
        #[arg(long, value_enum, default_value_t = FormatArg::Csv)]
        format: FormatArg,
        /// Exit with code 4 when any embedded check fails.
        #[arg(long)]
        assert: bool,
    },
    /// Run a named suite from the manifest and write report.md / report.json.
    Suite {
        name: String,
        #[arg(long, default_value_os_t = default_configs())]
        configs: PathBuf,
        #[command(flatten)]
        out: OutArgs,
        #[arg(long, value_enum, default_value_t = FormatArg::Csv)]
        format: FormatArg,
        /// Exit with code 4 when any criterion fails.
        #[arg(long)]
        assert: bool,
    },
    /// Score the acceptance criteria alone.
    Criteria {
        #[arg(long, value_enum, default_value_t = ScaleArg::Smoke)]
        scale: ScaleArg,
        #[arg(long, default_value_os_t = default_configs())]
        configs: PathBuf,
        #[arg(long)]
        assert: bool,
    },
    /// Write plot.csv / plot.json / plot.svg for an experiment directory.
    Plot {
        /// Directory holding summary.json.
        dir: PathBuf,
    },
    /// Re-render report.md from report.json in the output directory.
    Report {
        #[command(flatten)]
        out: OutArgs,
    },
}

#[derive(Args)]
struct OutArgs {
    /// Output root.
    #[arg(long = "out", env = "HEFTVA_OUT", default_value = "out")]
    path: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum ScaleArg {
    Smoke,
    Full,
}

fn default_configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")
}

fn format(f: FormatArg) -> Format {
    match f {
        FormatArg::Csv => Format::Csv,
        FormatArg::Json => Format::Json,
    }
}

fn run(cli: Cli) -> BenchResult<()> {
    if let Some(w) = cli.workers {
        if w == 0 {
            return Err(BenchError::Validation("--workers: must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build_global()
            .map_err(|e| BenchError::Validation(format!("--workers: {e}")))?;
    }
    match cli.command {
        Command::Validate { config } => {
            for path in &config {
                let (cfg, _) = ExperimentConfig::load(path)?;
                cfg.validate().map_err(|e| match e {
                    BenchError::Validation(m) => BenchError::Validation(format!("{}: {m}", path.display())),
                    other => other,
                })?;
                println!("{}: ok ({} `{}`)", path.display(), cfg.kind, cfg.id);
            }
            Ok(())
        }
        Command::Run { config, out, seeds, format: f, assert } => {
            let (cfg, raw) = ExperimentConfig::load(&config)?;
            let record = run_experiment(&cfg, &raw, &out.path, RunOptions { format: format(f), seeds })?;
            let dir = out.path.join(&record.experiment_id);
            emit_plot_data(&dir)?.write(&dir)?;
            for c in &record.checks {
                println!("[{}] {}: {} ({})", if c.passed { "PASS" } else { "FAIL" }, c.name, c.measured, c.threshold);
            }
            println!("wrote {} in {:.2} s", dir.display(), record.wall_time_s);
            if assert {
                enforce_checks(&record)?;
            }
            Ok(())
        }
        Command::Suite { name, configs, out, format: f, assert } => {
            let opts = RunOptions { format: format(f), seeds: None };
            let report = suite::run_suite(&configs, &name, &out.path, opts, |o| println!("{}", o.line()))?;
            for e in report.experiments.iter().filter(|e| e.status != "ok") {
                eprintln!("experiment {}: {}", e.config, e.error.clone().unwrap_or_else(|| e.failed_checks.join(", ")));
            }
            println!("criteria passed {}/{}; report in {}", report.criteria_passed(), report.criteria.len(), out.path.display());
            if assert && report.criteria_passed() < report.criteria.len() {
                return Err(BenchError::Assertion(format!("suite {name}: criteria failed")));
            }
            Ok(())
        }
        Command::Criteria { scale, configs, assert } => {
            let scale = match scale {
                ScaleArg::Smoke => Scale::Smoke,
                ScaleArg::Full => Scale::Full,
            };
            let outcomes = criteria::run_all(scale, &configs, |o| println!("{}", o.line()));
            let failed: Vec<String> = outcomes.iter().filter(|o| !o.passed).map(|o| format!("C{:02}", o.id)).collect();
            if assert && !failed.is_empty() {
                return Err(BenchError::Assertion(format!("failed criteria: {}", failed.join(", "))));
            }
            Ok(())
        }
        Command::Plot { dir } => {
            let files = emit_plot_data(&dir)?.write(&dir)?;
            println!("wrote {}", files.join(", "));
            Ok(())
        }
        Command::Report { out } => {
            let report = suite::rerender(&out.path)?;
            println!("report.md rendered for suite {}", report.suite);
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
