use heftva_core::ansatz::{draw_parameters, execute_from_zero, AnsatzSpec, Family, InitSpec};
use heftva_core::pauli::{ground_space, GroundSpace, Hamiltonian};
use heftva_core::stats::{mann_whitney_u, welch_t_test};
use heftva_core::vqe::{
    fidelity_against, landscape_scan, minimize, minimize_seeds, parameter_efficiency_curve, GradSource, Grid, GridMode,
    OptimizerConfig, OptimizerKind, TrainingTrace,
};
use heftva_core::Error as CoreError;

use super::{build_spec, half_cut, mean, Outcome};
use crate::config::ExperimentConfig;
use crate::error::{BenchError, BenchResult};
use crate::output::{Cell, Table};

/// Largest size for which the exact ground space is computed.
const FIDELITY_MAX_QUBITS: usize = 14;

/// One training run of a seeded campaign.
#[derive(Debug, Clone)]
pub struct CampaignRun {
    pub family: Family,
    pub seed: u64,
    pub trace: TrainingTrace,
    pub e0: f64,
    pub relative_error: f64,
    pub fidelity: Option<f64>,
    /// Half-cut purity of the final state.
    pub purity: f64,
}

/// Train `spec` from every seed and score each run against the ground space.
pub fn campaign(
    h: &Hamiltonian,
    spec: &AnsatzSpec,
    init: &InitSpec,
    opt: &OptimizerConfig,
    source: &GradSource,
    seeds: &[u64],
    gs: &GroundSpace,
) -> BenchResult<Vec<CampaignRun>> {
    let traces = minimize_seeds(h, spec, init, opt, source, seeds)?;
    let cut = half_cut(spec.num_qubits());
    traces
        .into_iter()
        .zip(seeds)
        .map(|(trace, &seed)| {
            let state = execute_from_zero(spec, &trace.final_params)?;
            let fidelity = (spec.num_qubits() <= FIDELITY_MAX_QUBITS).then(|| fidelity_against(spec, &trace, gs)).transpose()?;
            let purity = state.reduced_density_matrix(&cut)?.purity();
            Ok(CampaignRun {
                family: spec.family,
                seed,
                relative_error: trace.relative_error(gs.energy),
                e0: gs.energy,
                fidelity,
                purity,
                trace,
            })
        })
        .collect()
}

fn exact_ground(h: &Hamiltonian) -> BenchResult<GroundSpace> {
    Ok(ground_space(h, 1e-10, 1e-8)?)
}

fn run_families(cfg: &ExperimentConfig, n: usize) -> BenchResult<(GroundSpace, Vec<Vec<CampaignRun>>)> {
    let h = cfg.hamiltonian()?.build(n)?;
    let gs = exact_ground(&h)?;
    let l = cfg.layers().resolve(n);
    let seeds = cfg.seed_list();
    let runs = cfg
        .ansatz
        .families
        .iter()
        .map(|&f| {
            let spec = build_spec(cfg, f, n, l)?;
            campaign(&h, &spec, &cfg.init.for_family(f, cfg.seed), &cfg.optimizer, &GradSource::Exact, &seeds, &gs)
        })
        .collect::<BenchResult<Vec<_>>>()?;
    Ok((gs, runs))
}

fn final_table(name: &str, runs: &[Vec<CampaignRun>]) -> Table {
    let mut t = Table::new(
        name,
        &["family", "seed", "num_params", "final_energy", "e0", "relative_error", "fidelity", "half_cut_purity", "steps", "stop_reason"],
    );
    for r in runs.iter().flatten() {
        t.push(vec![
            r.family.name().into(),
            r.seed.into(),
            r.trace.final_params.len().into(),
            r.trace.final_energy.into(),
            r.e0.into(),
            r.relative_error.into(),
            r.fidelity.into(),
            r.purity.into(),
            r.trace.steps.len().into(),
            serde_json::to_value(r.trace.stop_reason).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default().into(),
        ]);
    }
    t
}

fn summarize_families(out: &mut Outcome, runs: &[Vec<CampaignRun>]) {
    for group in runs {
        let Some(first) = group.first() else { continue };
        let name = first.family.name();
        let errs: Vec<f64> = group.iter().map(|r| r.relative_error).collect();
        out.metric(format!("{name}_mean_relative_error"), mean(&errs));
        out.metric(format!("{name}_best_relative_error"), errs.iter().copied().fold(f64::INFINITY, f64::min));
        out.metric(format!("{name}_mean_final_energy"), mean(&group.iter().map(|r| r.trace.final_energy).collect::<Vec<_>>()));
        let fids: Vec<f64> = group.iter().filter_map(|r| r.fidelity).collect();
        if !fids.is_empty() {
            out.metric(format!("{name}_mean_fidelity"), mean(&fids));
        }
        out.metric(format!("{name}_mean_half_cut_purity"), mean(&group.iter().map(|r| r.purity).collect::<Vec<_>>()));
    }
}

fn family_group(runs: &[Vec<CampaignRun>], f: Family) -> Option<&Vec<CampaignRun>> {
    runs.iter().find(|g| g.first().is_some_and(|r| r.family == f))
}

fn variational_check(out: &mut Outcome, runs: &[Vec<CampaignRun>], e0: f64) {
    let worst = runs.iter().flatten().map(|r| r.trace.min_energy() - e0).fold(f64::INFINITY, f64::min);
    out.check("variational_bound", worst, ">= -1e-9 (min energy minus E0)", worst >= -1e-9 * e0.abs().max(1.0));
}

pub(super) fn vqe(cfg: &ExperimentConfig) -> BenchResult<Outcome> {
    let n = cfg.n()?;
    let (gs, runs) = run_families(cfg, n)?;
    let mut out = Outcome::default();
    out.metric("e0", gs.energy);
    summarize_families(&mut out, &runs);
    variational_check(&mut out, &runs, gs.energy);
    if let (Some(heft), Some(hea)) = (family_group(&runs, Family::Heft), family_group(&runs, Family::Hea)) {
        let a: Vec<f64> = heft.iter().map(|r| r.trace.final_energy).collect();
        let b: Vec<f64> = hea.iter().map(|r| r.trace.final_energy).collect();
        out.check("heft_lower_mean_energy", mean(&a) - mean(&b), "< 0", mean(&a) < mean(&b));
        if a.len() >= 2 && b.len() >= 2 {
            let w = welch_t_test(&a, &b)?;
            out.metric("welch_t", w.t);
            out.metric("welch_p_two_sided", w.p_two_sided);
            out.metric("welch_ln_p_two_sided", w.ln_p_two_sided);
        }
    }
    let mut trace = Table::new("trace", &["family", "seed", "step", "energy", "grad_norm"]);
    for r in runs.iter().flatten() {
        for s in &r.trace.steps {
            trace.push(vec![r.family.name().into(), r.seed.into(), s.step.into(), s.energy.into(), s.grad_norm.into()]);
        }
    }
    out.tables.push(trace);
    out.tables.push(final_table("final", &runs));
    Ok(out)
}

pub(super) fn fidelity(cfg: &ExperimentConfig) -> BenchResult<Outcome> {
    let n = cfg.n()?;
    if n > FIDELITY_MAX_QUBITS {
        return Err(BenchError::Validation(format!("ansatz.n: fidelity needs n <= {FIDELITY_MAX_QUBITS}")));
    }
    let (gs, runs) = run_families(cfg, n)?;
    let mut out = Outcome::default();
    out.metric("e0", gs.energy);
    out.metric("ground_degeneracy", gs.states.len());
    summarize_families(&mut out, &runs);
    if let (Some(heft), Some(hea)) = (family_group(&runs, Family::Heft), family_group(&runs, Family::Hea)) {
        let fa = mean(&heft.iter().filter_map(|r| r.fidelity).collect::<Vec<_>>());
        let fb = mean(&hea.iter().filter_map(|r| r.fidelity).collect::<Vec<_>>());
        let ratio = fa / fb;
        out.metric("fidelity_ratio", ratio);
        out.check("fidelity_ratio", ratio, ">= 3", ratio >= 3.0);
    }
    out.tables.push(final_table("fidelity", &runs));
    Ok(out)
}

pub(super) fn stats_compare(cfg: &ExperimentConfig) -> BenchResult<Outcome> {
    let families = &cfg.ansatz.families;
    if !(families.contains(&Family::Heft) && families.contains(&Family::Hea)) {
        return Err(BenchError::Validation("ansatz.families: stats_compare needs both heft and hea".into()));
    }
    if cfg.seeds < 2 {
        return Err(BenchError::Validation("seeds: stats_compare needs at least 2 seeds".into()));
    }
    let n = cfg.n()?;
    let (gs, runs) = run_families(cfg, n)?;
    let heft = family_group(&runs, Family::Heft).expect("heft present");
    let hea = family_group(&runs, Family::Hea).expect("hea present");
    let a: Vec<f64> = heft.iter().map(|r| r.trace.final_energy).collect();
    let b: Vec<f64> = hea.iter().map(|r| r.trace.final_energy).collect();
    let w = welch_t_test(&a, &b)?;
    let mw = mann_whitney_u(&a, &b)?;
    let mut out = Outcome::default();
    out.metric("e0", gs.energy);
    summarize_families(&mut out, &runs);
    out.metric("welch", w);
    out.metric("mann_whitney", mw);
    out.check("welch_p_two_sided", w.p_two_sided, "< 1e-10", w.ln_p_two_sided < (1e-10f64).ln());
    let mut t = Table::new("stats", &["test", "statistic", "dof", "p_two_sided", "ln_p_two_sided", "p_one_sided", "method"]);
    t.push(vec![
        "welch".into(),
        w.t.into(),
        w.dof.into(),
        w.p_two_sided.into(),
        w.ln_p_two_sided.into(),
        w.p_less.into(),
        Cell::from("t_dist"),
    ]);
    t.push(vec![
        "mann_whitney".into(),
        mw.u.into(),
        Cell::Empty,
        mw.p_two_sided.into(),
        mw.p_two_sided.ln().into(),
        Cell::Empty,
        serde_json::to_value(mw.method).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default().into(),
    ]);
    out.tables.push(t);
    out.tables.push(final_table("final", &runs));
    Ok(out)
}

pub(super) fn size_scaling(cfg: &ExperimentConfig) -> BenchResult<Outcome> {
    let mut t = Table::new("size_scaling", &["family", "n", "l", "seed", "final_energy", "e0", "relative_error", "fidelity"]);
    let mut out = Outcome::default();
    let mut heft_better = true;
    for n in cfg.n_list()? {
        let (_, runs) = run_families(cfg, n)?;
        let l = cfg.layers().resolve(n);
        for r in runs.iter().flatten() {
            t.push(vec![
                r.family.name().into(),
                n.into(),
                l.into(),
                r.seed.into(),
                r.trace.final_energy.into(),
                r.e0.into(),
                r.relative_error.into(),
                r.fidelity.into(),
            ]);
        }
        let err = |f| family_group(&runs, f).map(|g| mean(&g.iter().map(|r| r.relative_error).collect::<Vec<_>>()));
        for f in &cfg.ansatz.families {
            if let Some(e) = err(*f) {
                out.metric(format!("{}_n{n}_mean_relative_error", f.name()), e);
            }
        }
        if let (Some(a), Some(b)) = (err(Family::Heft), err(Family::Hea)) {
            heft_better &= a <= b;
        }
    }
    out.check("heft_better_at_all_sizes", f64::from(u8::from(heft_better)), "1 (true)", heft_better);
    out.tables.push(t);
    Ok(out)
}

fn default_variants() -> Vec<OptimizerConfig> {
    vec![
        OptimizerConfig::with_kind(OptimizerKind::Adam),
        OptimizerConfig::with_kind(OptimizerKind::Sgd),
        OptimizerConfig { learning_rate: 0.01, ..OptimizerConfig::with_kind(OptimizerKind::Rmsprop) },
    ]
}

pub(super) fn optimizer_robustness(cfg: &ExperimentConfig) -> BenchResult<Outcome> {
    let n = cfg.n()?;
    let l = cfg.layers().resolve(n);
    let h = cfg.hamiltonian()?.build(n)?;
    let gs = exact_ground(&h)?;
    let variants = cfg.settings.optimizer_variants.clone().unwrap_or_else(default_variants);
    let mut t = Table::new(
        "optimizers",
        &["family", "optimizer", "learning_rate", "seed", "final_energy", "e0", "relative_error", "steps", "status"],
    );
    let mut out = Outcome::default();
    for &f in &cfg.ansatz.families {
        let spec = build_spec(cfg, f, n, l)?;
        for opt in &variants {
            let kind = serde_json::to_value(opt.kind).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default();
            let mut errs = Vec::new();
            for seed in cfg.seed_list() {
                let init = cfg.init.for_family(f, seed);
                let (energy, steps, status) = match minimize(&h, &spec, &init, opt, &GradSource::Exact) {
                    Ok(tr) => (tr.final_energy, tr.steps.len(), "ok"),
                    Err(CoreError::Divergence { step, .. }) => (f64::NAN, step, "diverged"),
                    Err(e) => return Err(e.into()),
                };
                let rel = (energy - gs.energy).abs() / gs.energy.abs();
                if rel.is_finite() {
                    errs.push(rel);
                }
                t.push(vec![
                    f.name().into(),
                    kind.clone().into(),
                    opt.learning_rate.into(),
                    seed.into(),
                    energy.into(),
                    gs.energy.into(),
                    rel.into(),
                    steps.into(),
                    status.into(),
                ]);
            }
            let key = format!("{}_{kind}_lr{}", f.name(), opt.learning_rate);
            let m = if errs.is_empty() { f64::NAN } else { mean(&errs) };
            out.metric(format!("{key}_mean_relative_error"), m);
            out.metric(format!("{key}_converged_runs"), errs.len());
            if f == Family::Heft {
                out.check(&format!("{key}_mean_relative_error"), m, "< 0.1 with no divergence", m < 0.1 && errs.len() == cfg.seeds);
            }
        }
    }
    out.metric("e0", gs.energy);
    out.tables.push(t);
    Ok(out)
}

pub(super) fn param_efficiency(cfg: &ExperimentConfig) -> BenchResult<Outcome> {
    let n = cfg.n()?;
    let h = cfg.hamiltonian()?.build(n)?;
    let l_list = cfg.ansatz.l_list.clone().expect("validated");
    let mut t = Table::new("param_efficiency", &["family", "l", "num_params", "best_relative_error", "mean_relative_error"]);
    let mut out = Outcome::default();
    for &f in &cfg.ansatz.families {
        let rows = parameter_efficiency_curve(
            &h,
            f,
            cfg.ansatz.entangler,
            &l_list,
            &cfg.init.for_family(f, cfg.seed),
            &cfg.optimizer,
            &cfg.seed_list(),
        )?;
        for r in &rows {
            t.push(vec![f.name().into(), r.l.into(), r.num_params.into(), r.best_relative_error.into(), r.mean_relative_error.into()]);
        }
        if let (Some(first), Some(last)) = (rows.first(), rows.last()) {
            out.metric(format!("{}_best_error_shallowest", f.name()), first.best_relative_error);
            out.metric(format!("{}_best_error_deepest", f.name()), last.best_relative_error);
            if f == Family::Heft {
                out.check(
                    "heft_depth_helps",
                    last.best_relative_error - first.best_relative_error,
                    "<= 0 (deepest best error minus shallowest)",
                    last.best_relative_error <= first.best_relative_error + 1e-12,
                );
            }
        }
    }
    out.tables.push(t);
    Ok(out)
}

pub(super) fn landscape(cfg: &ExperimentConfig) -> BenchResult<Outcome> {
    let n = cfg.n()?;
    let l = cfg.layers().resolve(n);
    let h = cfg.hamiltonian()?.build(n)?;
    let grid = cfg.settings.grid.unwrap_or(Grid {
        lo: -std::f64::consts::PI,
        hi: std::f64::consts::PI,
        resolution: 21,
        mode: GridMode::Relative,
    });
    let [i, j] = cfg.settings.axes.unwrap_or([0, 1]);
    let mut t = Table::new("landscape", &["family", "theta_i", "theta_j", "cost"]);
    let mut out = Outcome::default();
    let mut stds = Vec::new();
    for &f in &cfg.ansatz.families {
        let spec = build_spec(cfg, f, n, l)?;
        let params = draw_parameters(&spec, &cfg.init.for_family(f, cfg.seed))?;
        let scan = landscape_scan(&h, &spec, &params, i, j, &grid)?;
        for (a, row) in scan.axis_i.iter().zip(&scan.values) {
            for (b, c) in scan.axis_j.iter().zip(row) {
                t.push(vec![f.name().into(), (*a).into(), (*b).into(), (*c).into()]);
            }
        }
        let s = scan.std_dev();
        out.metric(format!("{}_std", f.name()), s);
        stds.push((f, s));
    }
    let find = |f| stds.iter().find(|(g, _)| *g == f).map(|p| p.1);
    if let (Some(a), Some(b)) = (find(Family::Heft), find(Family::Hea)) {
        out.check("heft_less_flat", a - b, "> 0 (heft std minus hea std)", a > b);
    }
    out.metric("axes", [i, j]);
    out.tables.push(t);
    Ok(out)
}
