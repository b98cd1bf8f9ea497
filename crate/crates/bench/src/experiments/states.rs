use heftva_core::ansatz::{draw_parameters, execute_from_zero, Family};
use heftva_core::rng::{derive_seed, stream};
use heftva_core::statevector::{haar_average_purity, nats_to_bits, Statevector};
use heftva_core::vqe::{minimize, GradSource};

use super::{build_spec, half_cut, mean, sem, Outcome};
use crate::config::ExperimentConfig;
use crate::error::BenchResult;
use crate::output::Table;

/// Mean entanglement entropy (nats) of a Haar-random pure state on `d_a * d_b`
/// dimensions, `d_a <= d_b`.
pub fn page_entropy(d_a: u64, d_b: u64) -> f64 {
    let (d_a, d_b) = if d_a <= d_b { (d_a, d_b) } else { (d_b, d_a) };
    let harmonic: f64 = (d_b + 1..=d_a * d_b).map(|k| 1.0 / k as f64).sum();
    harmonic - (d_a - 1) as f64 / (2 * d_b) as f64
}

/// Final (trained) or initial state for one family and seed.
fn state_for(cfg: &ExperimentConfig, family: Family, n: usize, seed: u64) -> BenchResult<Statevector> {
    let l = cfg.layers().resolve(n);
    let spec = build_spec(cfg, family, n, l)?;
    let init = cfg.init.for_family(family, seed);
    let params = if cfg.settings.trained {
        let h = cfg.hamiltonian()?.build(n)?;
        minimize(&h, &spec, &init, &cfg.optimizer, &GradSource::Exact)?.final_params
    } else {
        draw_parameters(&spec, &init)?
    };
    Ok(execute_from_zero(&spec, &params)?)
}

fn haar_state(cfg: &ExperimentConfig, n: usize, seed: u64) -> BenchResult<Statevector> {
    Ok(Statevector::haar_random(n, &mut stream(derive_seed(&[cfg.seed, seed, 0x4a]), 0))?)
}

fn dims(n: usize) -> (u64, u64) {
    (1u64 << (n / 2), 1u64 << (n - n / 2))
}

pub(super) fn entanglement(cfg: &ExperimentConfig) -> BenchResult<Outcome> {
    let n = cfg.n()?;
    let cut = half_cut(n);
    let (da, db) = dims(n);
    let page = page_entropy(da, db);
    let label = if cfg.settings.trained { "trained" } else { "initial" };
    let mut t = Table::new(
        "entanglement",
        &["ensemble", "state", "seed", "n", "entropy_nats", "entropy_bits", "renyi2_nats", "page_entropy_nats"],
    );
    let mut out = Outcome::default();
    let mut means = Vec::new();
    let record = |t: &mut Table, ensemble: &str, state_label: &str, seeds: &[u64], states: Vec<Statevector>| -> BenchResult<f64> {
        let mut s_all = Vec::new();
        for (st, &seed) in states.iter().zip(seeds) {
            let s = st.entanglement_entropy(&cut)?;
            let r2 = st.renyi2_entropy(&cut)?;
            s_all.push(s);
            t.push(vec![
                ensemble.into(),
                state_label.into(),
                seed.into(),
                n.into(),
                s.into(),
                nats_to_bits(s).into(),
                r2.into(),
                page.into(),
            ]);
        }
        Ok(mean(&s_all))
    };
    let seeds = cfg.seed_list();
    for &f in &cfg.ansatz.families {
        let states = seeds.iter().map(|&s| state_for(cfg, f, n, s)).collect::<BenchResult<Vec<_>>>()?;
        let m = record(&mut t, f.name(), label, &seeds, states)?;
        out.metric(format!("{}_mean_entropy_nats", f.name()), m);
        means.push((f, m));
    }
    let haar = seeds.iter().map(|&s| haar_state(cfg, n, s)).collect::<BenchResult<Vec<_>>>()?;
    let hm = record(&mut t, "haar", "random", &seeds, haar)?;
    out.metric("haar_mean_entropy_nats", hm);
    out.metric("page_entropy_nats", page);
    let find = |f| means.iter().find(|(g, _)| *g == f).map(|p| p.1);
    if let (Some(a), Some(b)) = (find(Family::Heft), find(Family::Hea)) {
        out.check("heft_less_entangled", a - b, "< 0 (heft mean entropy minus hea)", a < b);
    }
    out.tables.push(t);
    Ok(out)
}

pub(super) fn purity(cfg: &ExperimentConfig) -> BenchResult<Outcome> {
    let n = cfg.n()?;
    let cut = half_cut(n);
    let (da, db) = dims(n);
    let limit = haar_average_purity(da, db);
    let mut t = Table::new("purity", &["ensemble", "seed", "n", "purity", "haar_limit"]);
    let mut out = Outcome::default();
    let seeds = cfg.seed_list();
    let add = |t: &mut Table, ensemble: &str, states: &[Statevector]| -> BenchResult<Vec<f64>> {
        let mut ps = Vec::new();
        for (st, &seed) in states.iter().zip(&seeds) {
            let p = st.reduced_density_matrix(&cut)?.purity();
            ps.push(p);
            t.push(vec![ensemble.into(), seed.into(), n.into(), p.into(), limit.into()]);
        }
        Ok(ps)
    };
    for &f in &cfg.ansatz.families {
        let states = seeds.iter().map(|&s| state_for(cfg, f, n, s)).collect::<BenchResult<Vec<_>>>()?;
        let ps = add(&mut t, f.name(), &states)?;
        out.metric(format!("{}_mean_purity", f.name()), mean(&ps));
    }
    let haar = seeds.iter().map(|&s| haar_state(cfg, n, s)).collect::<BenchResult<Vec<_>>>()?;
    let ps = add(&mut t, "haar", &haar)?;
    let (m, se) = (mean(&ps), sem(&ps));
    let rel = (m - limit).abs() / limit;
    out.metric("haar_mean_purity", m);
    out.metric("haar_mean_purity_stderr", se);
    out.metric("haar_limit", limit);
    out.check("haar_sample_matches_limit", rel, "<= 0.02 relative deviation", rel <= 0.02);
    out.tables.push(t);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn page_entropy_small_cases() {
        // One qubit in a random two-qubit state: 1/3 + 1/4 - 1/4.
        assert!((page_entropy(2, 2) - (1.0 / 3.0 + 1.0 / 4.0 - 0.25)).abs() < 1e-14);
        assert_eq!(page_entropy(1, 8), 0.0);
        assert_eq!(page_entropy(4, 2), page_entropy(2, 4));
    }
}
