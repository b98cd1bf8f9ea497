use heftva_core::ansatz::{AnsatzSpec, Family};
use heftva_core::theory::{
    effective_dimension_scan, frame_potential_t2, verify_hamming_decay, verify_localization, Ensemble, FramePotentialReport,
};

use super::Outcome;
use crate::config::ExperimentConfig;
use crate::error::BenchResult;
use crate::output::Table;

pub(super) fn theory(cfg: &ExperimentConfig) -> BenchResult<Outcome> {
    let entangler = cfg.ansatz.entangler;
    let init = cfg.init.for_family(Family::Heft, cfg.seed);
    let seeds = cfg.seed_list();
    let mut t = Table::new(
        "localization",
        &[
            "n",
            "l",
            "seed",
            "kappa",
            "epsilon",
            "delta_theorem",
            "delta_sum",
            "triangle_bound",
            "op_norm_dev",
            "fidelity_to_zero",
            "fidelity_lower_bound",
            "localized",
            "norm_bound_holds",
            "fidelity_bound_holds",
        ],
    );
    let mut violations = 0usize;
    let mut total = 0usize;
    let mut localized = 0usize;
    let mut max_ratio = 0.0f64;
    for &[n, l] in cfg.settings.nl_pairs.as_deref().unwrap_or_default() {
        let spec = AnsatzSpec::build(Family::Heft, n, l, entangler)?;
        for r in verify_localization(&spec, &init, &seeds)? {
            total += 1;
            violations += usize::from(!r.bounds_hold());
            localized += usize::from(r.localized);
            if r.triangle_bound > 0.0 {
                max_ratio = max_ratio.max(r.op_norm_dev / r.triangle_bound);
            }
            t.push(vec![
                r.n.into(),
                r.l.into(),
                r.seed.into(),
                r.kappa.into(),
                r.epsilon.into(),
                r.delta_theorem.into(),
                r.delta_sum.into(),
                r.triangle_bound.into(),
                r.op_norm_dev.into(),
                r.fidelity_to_zero.into(),
                r.fidelity_lower_bound.into(),
                r.localized.into(),
                r.norm_bound_holds.into(),
                r.fidelity_bound_holds.into(),
            ]);
        }
    }
    let mut out = Outcome::default();
    out.metric("localization_reports", total);
    out.metric("localization_violations", violations);
    out.metric("localized_fraction", localized as f64 / total.max(1) as f64);
    out.metric("max_deviation_over_bound", max_ratio);
    out.check("localization_bounds_hold", violations as f64, "0 violations", violations == 0);
    out.tables.push(t);

    let hn = cfg.settings.hamming_n.unwrap_or(10);
    let hl = cfg.settings.hamming_l.unwrap_or(4);
    let w_check = cfg.settings.w_check.unwrap_or(5);
    let spec = AnsatzSpec::build(Family::Heft, hn, hl, entangler)?;
    let decay = verify_hamming_decay(&spec, &init, &seeds, w_check)?;
    let mut h = Table::new("hamming", &["n", "l", "w", "mean_mass"]);
    for (w, m) in decay.mean_mass.iter().enumerate() {
        h.push(vec![hn.into(), hl.into(), w.into(), (*m).into()]);
    }
    out.metric("hamming_fit_slope", decay.fit_slope);
    out.metric("hamming_slope_bound", decay.slope_bound);
    out.metric("hamming_strictly_decreasing", decay.strictly_decreasing);
    out.check(
        "hamming_mass_decreasing",
        decay.fit_slope,
        format!("strictly decreasing for w = 1..{w_check} with slope <= {}", decay.slope_bound),
        decay.strictly_decreasing && decay.fit_slope <= decay.slope_bound,
    );
    out.tables.push(h);

    let n_list = cfg.settings.deff_n_list.clone().unwrap_or_else(|| vec![4, 6, 8, 10]);
    let scan = effective_dimension_scan(&n_list, hl, entangler, &init, &seeds)?;
    let mut d = Table::new("deff", &["n", "l", "w_max", "d_eff"]);
    for r in &scan.rows {
        d.push(vec![r.n.into(), hl.into(), r.w_max.into(), r.d_eff.into()]);
    }
    out.metric("deff_log_log_slope", scan.log_log_slope);
    out.check("deff_polynomial_slope_finite", scan.log_log_slope, "finite", scan.log_log_slope.is_finite());
    out.tables.push(d);
    Ok(out)
}

pub(super) fn framepotential(cfg: &ExperimentConfig) -> BenchResult<Outcome> {
    let n = cfg.n()?;
    let l = cfg.layers().resolve(n);
    let pairs = cfg.settings.pairs.unwrap_or(10_000);
    let mut ensembles = Vec::new();
    for &f in &cfg.ansatz.families {
        let spec = AnsatzSpec::build(f, n, l, cfg.ansatz.entangler)?;
        ensembles.push((f.name().to_string(), Ensemble::Circuit { spec, init: cfg.init.for_family(f, cfg.seed) }));
    }
    ensembles.push(("haar".into(), Ensemble::Haar { num_qubits: n }));
    let mut t = Table::new("framepotential", &["ensemble", "label", "n", "l", "num_samples", "frame_potential_t2", "stderr", "haar_value"]);
    let mut out = Outcome::default();
    for (k, (name, ens)) in ensembles.iter().enumerate() {
        let r = frame_potential_t2(ens, pairs, heftva_core::rng::derive_seed(&[cfg.seed, k as u64]))?;
        t.push(vec![
            name.clone().into(),
            r.ensemble.clone().into(),
            r.n.into(),
            r.l.into(),
            r.num_samples.into(),
            r.frame_potential_t2.into(),
            r.stderr.into(),
            FramePotentialReport::HAAR_VALUE.into(),
        ]);
        out.metric(format!("{name}_frame_potential"), r.frame_potential_t2);
        out.metric(format!("{name}_stderr"), r.stderr);
        let fp = r.frame_potential_t2;
        match name.as_str() {
            "haar" => {
                let z = (fp - FramePotentialReport::HAAR_VALUE).abs() / r.stderr.max(f64::MIN_POSITIVE);
                out.check("haar_matches_two", z, "<= 5 standard errors from 2", z <= 5.0);
            }
            "heft" => out.check("heft_far_from_design", fp, ">= 20 (10x the Haar value)", fp >= 20.0),
            _ => out.check("hea_near_design", fp, "in [1, 4] (within 2x of the Haar value)", (1.0..=4.0).contains(&fp)),
        }
    }
    out.tables.push(t);
    Ok(out)
}
