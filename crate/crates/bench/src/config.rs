//! Experiment configuration files.
//!
//! One TOML document describes one experiment. Every table rejects unknown
//! keys, and parse errors carry the dotted path of the offending field.

use std::fmt;
use std::path::Path;

use heftva_core::ansatz::{CouplingPriors, Entangler, Family, InitSpec};
use heftva_core::gradient::JPolicy;
use heftva_core::noise::Placement;
use heftva_core::pauli::HamiltonianModel;
use heftva_core::vqe::{Grid, OptimizerConfig};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{BenchError, BenchResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Gradvar,
    InitSweep,
    Vqe,
    Landscape,
    Noise,
    Shots,
    ShotNoise,
    Entanglement,
    Purity,
    Fidelity,
    ParamEfficiency,
    Theory,
    Framepotential,
    StatsCompare,
    SizeScaling,
    OptimizerRobustness,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 16] = [
        ExperimentKind::Gradvar,
        ExperimentKind::InitSweep,
        ExperimentKind::Vqe,
        ExperimentKind::Landscape,
        ExperimentKind::Noise,
        ExperimentKind::Shots,
        ExperimentKind::ShotNoise,
        ExperimentKind::Entanglement,
        ExperimentKind::Purity,
        ExperimentKind::Fidelity,
        ExperimentKind::ParamEfficiency,
        ExperimentKind::Theory,
        ExperimentKind::Framepotential,
        ExperimentKind::StatsCompare,
        ExperimentKind::SizeScaling,
        ExperimentKind::OptimizerRobustness,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Gradvar => "gradvar",
            ExperimentKind::InitSweep => "init_sweep",
            ExperimentKind::Vqe => "vqe",
            ExperimentKind::Landscape => "landscape",
            ExperimentKind::Noise => "noise",
            ExperimentKind::Shots => "shots",
            ExperimentKind::ShotNoise => "shot_noise",
            ExperimentKind::Entanglement => "entanglement",
            ExperimentKind::Purity => "purity",
            ExperimentKind::Fidelity => "fidelity",
            ExperimentKind::ParamEfficiency => "param_efficiency",
            ExperimentKind::Theory => "theory",
            ExperimentKind::Framepotential => "framepotential",
            ExperimentKind::StatsCompare => "stats_compare",
            ExperimentKind::SizeScaling => "size_scaling",
            ExperimentKind::OptimizerRobustness => "optimizer_robustness",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == s)
    }

    fn needs_hamiltonian(self) -> bool {
        !matches!(
            self,
            ExperimentKind::Entanglement | ExperimentKind::Purity | ExperimentKind::Theory | ExperimentKind::Framepotential
        )
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Circuit depth: a fixed count, or `"n"` for one layer per qubit.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Layers {
    Count(usize),
    Named(String),
}

impl Layers {
    pub fn resolve(&self, n: usize) -> usize {
        match self {
            Layers::Count(l) => *l,
            Layers::Named(_) => n,
        }
    }

    fn validate(&self, path: &str) -> BenchResult<()> {
        match self {
            Layers::Count(0) => Err(invalid(path, "must be at least 1")),
            Layers::Named(s) if s != "n" => Err(invalid(path, &format!("expected an integer or \"n\", got {s:?}"))),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnsatzSection {
    #[serde(default = "both_families")]
    pub families: Vec<Family>,
    #[serde(default)]
    pub entangler: Entangler,
    pub n: Option<usize>,
    pub n_list: Option<Vec<usize>>,
    pub layers: Option<Layers>,
    pub l_list: Option<Vec<usize>>,
}

fn both_families() -> Vec<Family> {
    vec![Family::Heft, Family::Hea]
}

impl Default for AnsatzSection {
    fn default() -> Self {
        AnsatzSection { families: both_families(), entangler: Entangler::default(), n: None, n_list: None, layers: None, l_list: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitSection {
    #[serde(default = "one")]
    pub kappa: f64,
    #[serde(default = "one")]
    pub gamma: f64,
    #[serde(default)]
    pub priors: CouplingPriors,
}

fn one() -> f64 {
    1.0
}

impl Default for InitSection {
    fn default() -> Self {
        InitSection { kappa: 1.0, gamma: 1.0, priors: CouplingPriors::default() }
    }
}

impl InitSection {
    /// The initializer conventionally paired with `family`.
    pub fn for_family(&self, family: Family, seed: u64) -> InitSpec {
        let mut init = InitSpec::for_family(family, self.kappa, seed);
        if family == Family::Heft {
            init.gamma = self.gamma;
            init.priors = self.priors;
        }
        init
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSection {
    pub p: f64,
    #[serde(default)]
    pub placement: Placement,
    #[serde(default = "default_trajectories")]
    pub trajectories: usize,
}

fn default_trajectories() -> usize {
    10_000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShotsSection {
    #[serde(default = "default_shots")]
    pub shots: u64,
    pub shots_list: Option<Vec<u64>>,
    #[serde(default = "default_repetitions")]
    pub repetitions: usize,
}

fn default_shots() -> u64 {
    1000
}

fn default_repetitions() -> usize {
    500
}

/// Knobs specific to individual experiment kinds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct Settings {
    pub j_policy: Option<JPolicy>,
    pub sigma_list: Option<Vec<f64>>,
    pub axes: Option<[usize; 2]>,
    pub grid: Option<Grid>,
    /// Train before measuring state properties (entanglement, purity, noise).
    #[serde(default)]
    pub trained: bool,
    pub pairs: Option<usize>,
    /// `(n, l)` pairs for the localization check.
    pub nl_pairs: Option<Vec<[usize; 2]>>,
    pub hamming_n: Option<usize>,
    pub hamming_l: Option<usize>,
    pub w_check: Option<usize>,
    pub deff_n_list: Option<Vec<usize>>,
    pub optimizer_variants: Option<Vec<OptimizerConfig>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub id: String,
    pub kind: ExperimentKind,
    #[serde(default)]
    pub description: String,
    /// Base seed; per-row seeds derive from it.
    #[serde(default)]
    pub seed: u64,
    /// Number of seeds (ensemble size).
    #[serde(default = "default_seeds")]
    pub seeds: usize,
    pub hamiltonian: Option<HamiltonianModel>,
    #[serde(default)]
    pub ansatz: AnsatzSection,
    #[serde(default)]
    pub init: InitSection,
    #[serde(default)]
    pub optimizer: OptimizerConfig,
    pub noise: Option<NoiseSection>,
    pub shots: Option<ShotsSection>,
    #[serde(default)]
    pub settings: Settings,
}

fn default_seeds() -> usize {
    30
}

fn invalid(path: &str, msg: &str) -> BenchError {
    BenchError::Validation(format!("{path}: {msg}"))
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> BenchResult<Self> {
        let de = toml::Deserializer::parse(text).map_err(|e| BenchError::Validation(format!("toml syntax: {e}")))?;
        let cfg: ExperimentConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            BenchError::Validation(format!("{path}: {}", inner.message().trim()))
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> BenchResult<(Self, String)> {
        let text = std::fs::read_to_string(path).map_err(|e| BenchError::io(path, e))?;
        let cfg = Self::from_toml(&text).map_err(|e| match e {
            BenchError::Validation(m) => BenchError::Validation(format!("{}: {m}", path.display())),
            other => other,
        })?;
        Ok((cfg, text))
    }

    /// SHA-256 of the canonical JSON form of the parsed configuration.
    pub fn config_hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }

    /// Git-style content hash of the raw input text.
    pub fn input_hash(raw: &str) -> String {
        let mut h = Sha256::new();
        h.update(format!("blob {}\0", raw.len()).as_bytes());
        h.update(raw.as_bytes());
        hex::encode(h.finalize())
    }

    pub fn hamiltonian(&self) -> BenchResult<HamiltonianModel> {
        self.hamiltonian.ok_or_else(|| invalid("hamiltonian", &format!("required for kind `{}`", self.kind)))
    }

    pub fn n(&self) -> BenchResult<usize> {
        self.ansatz.n.ok_or_else(|| invalid("ansatz.n", &format!("required for kind `{}`", self.kind)))
    }

    pub fn n_list(&self) -> BenchResult<Vec<usize>> {
        self.ansatz.n_list.clone().ok_or_else(|| invalid("ansatz.n_list", &format!("required for kind `{}`", self.kind)))
    }

    pub fn layers(&self) -> Layers {
        self.ansatz.layers.clone().unwrap_or(Layers::Named("n".into()))
    }

    pub fn noise(&self) -> BenchResult<NoiseSection> {
        self.noise.ok_or_else(|| invalid("noise", &format!("required for kind `{}`", self.kind)))
    }

    pub fn shots(&self) -> BenchResult<ShotsSection> {
        self.shots.clone().ok_or_else(|| invalid("shots", &format!("required for kind `{}`", self.kind)))
    }

    pub fn seed_list(&self) -> Vec<u64> {
        (0..self.seeds as u64).map(|k| self.seed + k).collect()
    }

    pub fn validate(&self) -> BenchResult<()> {
        use ExperimentKind as K;
        if self.id.is_empty() || !self.id.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-') {
            return Err(invalid("id", "must be non-empty and use only [A-Za-z0-9_-]"));
        }
        if self.seeds == 0 {
            return Err(invalid("seeds", "must be at least 1"));
        }
        if self.kind.needs_hamiltonian() {
            self.hamiltonian()?;
        }
        if self.ansatz.families.is_empty() {
            return Err(invalid("ansatz.families", "must list at least one family"));
        }
        if let Some(l) = &self.ansatz.layers {
            l.validate("ansatz.layers")?;
        }
        let check_sizes = |path: &str, v: &[usize], lo: usize, hi: usize| -> BenchResult<()> {
            if v.is_empty() {
                return Err(invalid(path, "must not be empty"));
            }
            if let Some(bad) = v.iter().find(|&&n| n < lo || n > hi) {
                return Err(invalid(path, &format!("{bad} outside [{lo}, {hi}]")));
            }
            Ok(())
        };
        if let Some(n) = self.ansatz.n {
            check_sizes("ansatz.n", &[n], 2, heftva_core::MAX_QUBITS)?;
        }
        if let Some(v) = &self.ansatz.n_list {
            check_sizes("ansatz.n_list", v, 2, heftva_core::MAX_QUBITS)?;
        }
        if let Some(v) = &self.ansatz.l_list {
            check_sizes("ansatz.l_list", v, 1, 64)?;
        }
        if !(self.init.kappa > 0.0 && self.init.kappa.is_finite()) {
            return Err(invalid("init.kappa", "must be positive"));
        }
        if !(self.init.gamma > 0.0 && self.init.gamma.is_finite()) {
            return Err(invalid("init.gamma", "must be positive"));
        }
        self.optimizer.validate().map_err(|e| invalid("optimizer", &e.to_string()))?;
        if let Some(nz) = &self.noise {
            if !(0.0..1.0).contains(&nz.p) {
                return Err(invalid("noise.p", "must be in [0, 1)"));
            }
            if nz.trajectories == 0 {
                return Err(invalid("noise.trajectories", "must be at least 1"));
            }
        }
        if let Some(s) = &self.shots {
            if s.shots == 0 || s.shots_list.as_ref().is_some_and(|l| l.is_empty() || l.contains(&0)) {
                return Err(invalid("shots", "shot counts must be at least 1"));
            }
            if s.repetitions < 2 {
                return Err(invalid("shots.repetitions", "must be at least 2"));
            }
        }
        if let Some(v) = &self.settings.sigma_list {
            if v.is_empty() || v.iter().any(|s| !(*s > 0.0 && s.is_finite())) {
                return Err(invalid("settings.sigma_list", "values must be positive"));
            }
        }
        if let Some(variants) = &self.settings.optimizer_variants {
            for (i, o) in variants.iter().enumerate() {
                o.validate().map_err(|e| invalid(&format!("settings.optimizer_variants[{i}]"), &e.to_string()))?;
            }
        }
        match self.kind {
            K::Gradvar | K::SizeScaling => {
                self.n_list()?;
            }
            K::Vqe | K::Fidelity | K::StatsCompare | K::Landscape | K::Entanglement | K::Purity | K::InitSweep => {
                self.n()?;
            }
            K::Noise | K::ShotNoise => {
                self.n()?;
                self.noise()?;
                if self.kind == K::ShotNoise {
                    self.shots()?;
                }
            }
            K::Shots => {
                self.n()?;
                self.shots()?;
            }
            K::ParamEfficiency => {
                self.n()?;
                if self.ansatz.l_list.is_none() {
                    return Err(invalid("ansatz.l_list", "required for kind `param_efficiency`"));
                }
            }
            K::Theory => {
                if self.settings.nl_pairs.as_ref().is_none_or(|v| v.is_empty()) {
                    return Err(invalid("settings.nl_pairs", "required for kind `theory`"));
                }
                for (i, [n, l]) in self.settings.nl_pairs.iter().flatten().enumerate() {
                    if *n < 2 || *n > heftva_core::theory::MAX_DENSE_UNITARY_QUBITS || *l == 0 {
                        return Err(invalid(&format!("settings.nl_pairs[{i}]"), "need 2 <= n <= 8 and l >= 1"));
                    }
                }
            }
            K::Framepotential => {
                let n = self.n()?;
                if n > 6 {
                    return Err(invalid("ansatz.n", "frame potential supports n <= 6"));
                }
            }
            K::OptimizerRobustness => {
                self.n()?;
            }
        }
        if matches!(self.kind, K::Landscape) {
            if let Some([i, j]) = self.settings.axes {
                if i == j {
                    return Err(invalid("settings.axes", "axes must differ"));
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const VQE: &str = r#"
id = "vqe_tfim2"
kind = "vqe"
seeds = 2

[hamiltonian]
model = "tfim"

[ansatz]
families = ["heft"]
n = 2
layers = 2
"#;

    #[test]
    fn parses_minimal_config() {
        let cfg = ExperimentConfig::from_toml(VQE).unwrap();
        assert_eq!(cfg.kind, ExperimentKind::Vqe);
        assert_eq!(cfg.layers().resolve(2), 2);
        assert_eq!(cfg.optimizer.learning_rate, 0.05);
        assert_eq!(cfg.config_hash().len(), 64);
    }

    #[test]
    fn missing_hamiltonian_names_the_field() {
        let text = VQE.replace("[hamiltonian]\nmodel = \"tfim\"\n", "");
        let err = ExperimentConfig::from_toml(&text).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("hamiltonian"), "{err}");
    }

    #[test]
    fn unknown_keys_rejected_with_path() {
        let text = VQE.replace("n = 2", "n = 2\nqubits = 3");
        let err = ExperimentConfig::from_toml(&text).unwrap_err().to_string();
        assert!(err.contains("ansatz") && err.contains("qubits"), "{err}");
        let text = VQE.replace("model = \"tfim\"", "model = \"tfim\"\nfield = 2.0");
        assert!(ExperimentConfig::from_toml(&text).is_err());
    }

    #[test]
    fn bad_values_rejected() {
        assert!(ExperimentConfig::from_toml(&VQE.replace("layers = 2", "layers = \"deep\"")).is_err());
        assert!(ExperimentConfig::from_toml(&VQE.replace("layers = 2", "layers = 0")).is_err());
        assert!(ExperimentConfig::from_toml(&VQE.replace("n = 2", "n = 1")).is_err());
        assert!(ExperimentConfig::from_toml(&VQE.replace("vqe_tfim2", "../escape")).is_err());
        assert!(ExperimentConfig::from_toml(&VQE.replace("kind = \"vqe\"", "kind = \"nope\"")).is_err());
    }

    #[test]
    fn hash_tracks_content() {
        let a = ExperimentConfig::from_toml(VQE).unwrap();
        let b = ExperimentConfig::from_toml(&VQE.replace("seeds = 2", "seeds = 3")).unwrap();
        assert_ne!(a.config_hash(), b.config_hash());
        assert_eq!(a.config_hash(), ExperimentConfig::from_toml(VQE).unwrap().config_hash());
        assert_ne!(ExperimentConfig::input_hash("a"), ExperimentConfig::input_hash("b"));
    }

    #[test]
    fn kind_names_round_trip() {
        for k in ExperimentKind::ALL {
            assert_eq!(ExperimentKind::parse(k.name()), Some(k));
        }
    }
}
