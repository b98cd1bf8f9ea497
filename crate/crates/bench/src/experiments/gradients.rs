use heftva_core::ansatz::Family;
use heftva_core::gradient::{init_scale_sweep, variance_scan, LPolicy, VarianceRow, VarianceScanConfig};
use heftva_core::theory::{fit_scaling, ScalingModel};

use super::Outcome;
use crate::config::{ExperimentConfig, Layers};
use crate::error::BenchResult;
use crate::output::Table;

const VARIANCE_HEADER: [&str; 10] =
    ["family", "hamiltonian", "n", "l", "sigma", "kappa", "seeds", "j_policy", "grad_mean", "grad_var"];

fn push_row(t: &mut Table, r: &VarianceRow) {
    t.push(vec![
        r.family.name().into(),
        r.hamiltonian.clone().into(),
        r.n.into(),
        r.l.into(),
        r.sigma.into(),
        r.kappa.into(),
        r.seeds.into(),
        r.j_policy.name().into(),
        r.grad_mean.into(),
        r.grad_var.into(),
    ]);
}

fn l_policy(layers: &Layers) -> LPolicy {
    match layers {
        Layers::Count(l) => LPolicy::Fixed(*l),
        Layers::Named(_) => LPolicy::EqualN,
    }
}

pub(super) fn gradvar(cfg: &ExperimentConfig) -> BenchResult<Outcome> {
    let model = cfg.hamiltonian()?;
    let n_list = cfg.n_list()?;
    let j_policy = cfg.settings.j_policy.unwrap_or_default();
    let mut out = Outcome::default();
    let mut table = Table::new("gradvar", &VARIANCE_HEADER);
    let mut last_var = Vec::new();
    for &family in &cfg.ansatz.families {
        let scan = variance_scan(&VarianceScanConfig {
            model,
            family,
            entangler: cfg.ansatz.entangler,
            n_list: n_list.clone(),
            l_policy: l_policy(&cfg.layers()),
            init: cfg.init.for_family(family, cfg.seed),
            num_seeds: cfg.seeds,
            j_policy,
        })?;
        for r in &scan.rows {
            push_row(&mut table, r);
        }
        let vars = scan.variances();
        last_var.push((family, *vars.last().expect("non-empty scan")));
        if vars.len() >= 4 {
            let fit = fit_scaling(&scan.ns(), &vars)?;
            let name = family.name();
            out.metric(format!("{name}_exp_rate"), fit.exp_rate);
            out.metric(format!("{name}_exp_r2"), fit.exp_r2);
            out.metric(format!("{name}_poly_degree"), fit.poly_degree);
            out.metric(format!("{name}_poly_r2"), fit.poly_r2);
            out.metric(format!("{name}_winner"), fit.winner);
            match family {
                Family::Hea => out.check(
                    "hea_exponential_decay",
                    fit.exp_rate,
                    "rate > 0 with exponential R^2 > 0.9",
                    fit.exp_rate > 0.0 && fit.exp_r2 > 0.9,
                ),
                Family::Heft => out.check(
                    "heft_polynomial_decay",
                    fit.poly_degree,
                    "polynomial model preferred with degree <= 6",
                    fit.winner == ScalingModel::Polynomial && fit.poly_degree <= 6.0,
                ),
            }
        }
    }
    let find = |f: Family| last_var.iter().find(|(g, _)| *g == f).map(|p| p.1);
    if let (Some(heft), Some(hea)) = (find(Family::Heft), find(Family::Hea)) {
        let ratio = heft / hea;
        out.metric("variance_ratio_at_largest_n", ratio);
        out.check("variance_ratio_at_largest_n", ratio, ">= 1e3", ratio >= 1e3);
    }
    out.metric("n_list", &n_list);
    out.tables.push(table);
    Ok(out)
}

const DEFAULT_SIGMAS: [f64; 8] = [1e-3, 3e-3, 1e-2, 3e-2, 0.1, 0.3, 1.0, std::f64::consts::PI];

pub(super) fn init_sweep(cfg: &ExperimentConfig) -> BenchResult<Outcome> {
    let model = cfg.hamiltonian()?;
    let n = cfg.n()?;
    let l = cfg.layers().resolve(n);
    let j_policy = cfg.settings.j_policy.unwrap_or_default();
    let sigmas = cfg.settings.sigma_list.clone().unwrap_or_else(|| DEFAULT_SIGMAS.to_vec());
    let sweep = init_scale_sweep(&model, cfg.ansatz.entangler, n, l, &sigmas, cfg.seeds, j_policy, cfg.seed)?;
    let reference = variance_scan(&VarianceScanConfig {
        model,
        family: Family::Hea,
        entangler: cfg.ansatz.entangler,
        n_list: vec![n],
        l_policy: LPolicy::Fixed(l),
        init: cfg.init.for_family(Family::Hea, cfg.seed),
        num_seeds: cfg.seeds,
        j_policy,
    })?;
    let mut table = Table::new("init_sweep", &VARIANCE_HEADER);
    for r in sweep.scan.rows.iter().chain(&reference.rows) {
        push_row(&mut table, r);
    }
    let mut out = Outcome::default();
    let hea_var = reference.rows[0].grad_var;
    out.metric("sigma_star", sweep.sigma_star);
    out.metric("decreasing_fraction_after_peak", sweep.decreasing_fraction_after_peak);
    out.metric("log_slope_before_peak", sweep.log_slope_before_peak);
    out.metric("hea_uniform_var", hea_var);
    let last = sweep.scan.rows.last().expect("non-empty sweep");
    let ratio = last.grad_var / hea_var;
    out.metric("widest_sigma_over_hea", ratio);
    if last.sigma.unwrap_or(0.0) >= 1.0 {
        out.check("widest_sigma_matches_uniform", ratio, "within a factor 3 of the uniform variance", (1.0 / 3.0..=3.0).contains(&ratio));
    }
    out.tables.push(table);
    Ok(out)
}
