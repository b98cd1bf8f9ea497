use heftva_core::ansatz::{draw_parameters, Family};
use heftva_core::gradient::{cost, parameter_shift_grad, ParamIndex};
use heftva_core::noise::{execute_density, mse_vs_shots, noisy_expectation, shot_parameter_shift, Backend, NoiseModel, ShotConfig};
use heftva_core::pauli::ground_state;
use heftva_core::rng::derive_seed;
use heftva_core::vqe::{minimize, GradSource};

use super::{build_spec, mean, sem, Outcome};
use crate::config::{ExperimentConfig, NoiseSection};
use crate::error::BenchResult;
use crate::output::Table;

fn model(nz: &NoiseSection) -> BenchResult<NoiseModel> {
    Ok(NoiseModel::new(nz.p, nz.placement)?)
}

fn placement_name(nz: &NoiseSection) -> String {
    serde_json::to_value(nz.placement).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default()
}

pub(super) fn noise(cfg: &ExperimentConfig) -> BenchResult<Outcome> {
    let n = cfg.n()?;
    let l = cfg.layers().resolve(n);
    let h = cfg.hamiltonian()?.build(n)?;
    let nz = cfg.noise()?;
    let noise = model(&nz)?;
    let placement = placement_name(&nz);
    let mut t = Table::new(
        "noise",
        &["family", "seed", "backend", "p", "placement", "trajectories", "estimate", "stderr", "reference", "abs_error"],
    );
    let mut out = Outcome::default();
    let row = |t: &mut Table, f: Family, seed: u64, backend: &str, traj: Option<usize>, value: f64, stderr: f64, reference: f64| {
        t.push(vec![
            f.name().into(),
            seed.into(),
            backend.into(),
            nz.p.into(),
            placement.clone().into(),
            traj.into(),
            value.into(),
            stderr.into(),
            reference.into(),
            (value - reference).abs().into(),
        ]);
    };
    for &f in &cfg.ansatz.families {
        let spec = build_spec(cfg, f, n, l)?;
        let params = draw_parameters(&spec, &cfg.init.for_family(f, cfg.seed))?;
        let exact = cost(&h, &spec, &params)?;
        let rho = execute_density(&spec, &params, &noise)?;
        let dm = rho.expectation(&h)?;
        let traj = noisy_expectation(
            &h,
            &spec,
            &params,
            &noise,
            Backend::Trajectories { count: nz.trajectories, seed: derive_seed(&[cfg.seed, 0x7a]) },
        )?;
        row(&mut t, f, cfg.seed, "exact", None, exact, 0.0, exact);
        row(&mut t, f, cfg.seed, "density_matrix", None, dm, 0.0, exact);
        row(&mut t, f, cfg.seed, "trajectories", Some(nz.trajectories), traj.value, traj.stderr, exact);
        let name = f.name();
        let z = (traj.value - dm).abs() / traj.stderr.max(f64::MIN_POSITIVE);
        out.metric(format!("{name}_trajectory_z"), z);
        out.metric(format!("{name}_noisy_purity"), rho.purity());
        out.metric(format!("{name}_noise_shift"), dm - exact);
        out.check(&format!("{name}_trajectories_match_density"), z, "<= 3 standard errors", z <= 3.0);
        if cfg.settings.trained {
            let (e0, _) = ground_state(&h, 1e-10)?;
            let source = GradSource::Noisy { noise, backend: Backend::DensityMatrix };
            let mut errs = Vec::new();
            for seed in cfg.seed_list() {
                let tr = minimize(&h, &spec, &cfg.init.for_family(f, seed), &cfg.optimizer, &source)?;
                row(&mut t, f, seed, "density_matrix_vqe", None, tr.final_energy, 0.0, e0);
                errs.push(tr.relative_error(e0));
            }
            out.metric(format!("{name}_noisy_vqe_mean_relative_error"), mean(&errs));
            if f == Family::Heft {
                out.check("heft_noisy_vqe_relative_error", mean(&errs), "< 0.2", mean(&errs) < 0.2);
            }
            out.metric("e0", e0);
        }
    }
    out.metric("insertions_per_circuit", heftva_core::noise::insertion_count(&build_spec(cfg, cfg.ansatz.families[0], n, l)?, &noise));
    out.tables.push(t);
    Ok(out)
}

pub(super) fn shots(cfg: &ExperimentConfig) -> BenchResult<Outcome> {
    let n = cfg.n()?;
    let l = cfg.layers().resolve(n);
    let h = cfg.hamiltonian()?.build(n)?;
    let sh = cfg.shots()?;
    let shots_list = sh.shots_list.clone().unwrap_or_else(|| vec![100, 1000, 10_000]);
    let mut mse = Table::new("shots", &["family", "shots", "repetitions", "mse", "predicted_mse", "mean_estimate", "exact"]);
    let mut grad = Table::new("shot_gradient", &["family", "shots", "repetitions", "param", "mean", "stderr", "exact"]);
    let mut out = Outcome::default();
    for &f in &cfg.ansatz.families {
        let name = f.name();
        let spec = build_spec(cfg, f, n, l)?;
        let init = cfg.init.for_family(f, cfg.seed);
        let rows = mse_vs_shots(&h, &spec, &init, &shots_list, sh.repetitions)?;
        for r in &rows {
            mse.push(vec![
                name.into(),
                r.shots.into(),
                r.repetitions.into(),
                r.mse.into(),
                r.predicted_mse.into(),
                r.mean_estimate.into(),
                r.exact.into(),
            ]);
        }
        let dev = mean(&rows.iter().map(|r| (r.mse / r.predicted_mse - 1.0).abs()).collect::<Vec<_>>());
        out.metric(format!("{name}_mse_law_deviation"), dev);
        out.check(&format!("{name}_mse_follows_inverse_shots"), dev, "<= 0.3 average relative deviation", dev <= 0.3);

        let params = draw_parameters(&spec, &init)?;
        let j = 0;
        let exact = parameter_shift_grad(&h, &spec, &params, ParamIndex::One(j))?.values[0];
        let samples = (0..sh.repetitions)
            .map(|r| {
                let c = ShotConfig::new(sh.shots, derive_seed(&[cfg.seed, 0x5a, r as u64]))?;
                Ok(shot_parameter_shift(&h, &spec, &params, j, &c)?.value)
            })
            .collect::<BenchResult<Vec<f64>>>()?;
        let (m, se) = (mean(&samples), sem(&samples));
        grad.push(vec![name.into(), sh.shots.into(), sh.repetitions.into(), j.into(), m.into(), se.into(), exact.into()]);
        let z = (m - exact).abs() / se.max(f64::MIN_POSITIVE);
        out.metric(format!("{name}_gradient_bias_z"), z);
        out.check(&format!("{name}_shot_gradient_unbiased"), z, "<= 3 standard errors", z <= 3.0);
    }
    out.tables.push(mse);
    out.tables.push(grad);
    Ok(out)
}

pub(super) fn shot_noise(cfg: &ExperimentConfig) -> BenchResult<Outcome> {
    let n = cfg.n()?;
    let l = cfg.layers().resolve(n);
    let h = cfg.hamiltonian()?.build(n)?;
    let nz = cfg.noise()?;
    let noise = model(&nz)?;
    let sh = cfg.shots()?;
    let (e0, _) = ground_state(&h, 1e-10)?;
    let mut t = Table::new(
        "shot_noise",
        &["family", "seed", "p", "shots", "final_energy", "e0", "relative_error", "steps"],
    );
    let mut out = Outcome::default();
    for &f in &cfg.ansatz.families {
        let spec = build_spec(cfg, f, n, l)?;
        let mut errs = Vec::new();
        for seed in cfg.seed_list() {
            let source = GradSource::NoisyShots { noise, shots: sh.shots, seed: derive_seed(&[seed, 0x51]) };
            let tr = minimize(&h, &spec, &cfg.init.for_family(f, seed), &cfg.optimizer, &source)?;
            let rel = tr.relative_error(e0);
            errs.push(rel);
            t.push(vec![
                f.name().into(),
                seed.into(),
                nz.p.into(),
                sh.shots.into(),
                tr.final_energy.into(),
                e0.into(),
                rel.into(),
                tr.steps.len().into(),
            ]);
        }
        out.metric(format!("{}_mean_relative_error", f.name()), mean(&errs));
        if f == Family::Heft {
            out.check("heft_shot_noise_relative_error", mean(&errs), "< 0.3", mean(&errs) < 0.3);
        }
    }
    out.metric("e0", e0);
    out.metric("placement", placement_name(&nz));
    out.tables.push(t);
    Ok(out)
}
