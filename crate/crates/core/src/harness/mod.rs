//! Monte-Carlo experiment runners, configuration and seeded trial orchestration.
//!
//! Every trial draws from its own `ChaCha8Rng` seeded by [`trial_seed`], so
//! results do not depend on how trials are scheduled across threads.

mod experiments;
mod worlds;

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::flocking::FlockScenario;
use crate::threat::{AdversaryStrategy, ObservationMode};

pub use experiments::{
    run_connectivity_inflation, run_experiment, run_fram_demo, run_flock_scenario, run_rounds_vs_epsilon,
    run_table1, run_tau_studies, run_wmsr_scenarios, Table1Row,
};
pub use worlds::{circulant_world, CirculantSpec};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Table1,
    RoundsVsEps,
    TauStudy,
    Connectivity,
    Wmsr,
    Flock,
    FramDemo,
}

impl ExperimentKind {
    pub fn id(self) -> &'static str {
        match self {
            ExperimentKind::Table1 => "table1",
            ExperimentKind::RoundsVsEps => "rounds-vs-eps",
            ExperimentKind::TauStudy => "tau-study",
            ExperimentKind::Connectivity => "connectivity",
            ExperimentKind::Wmsr => "wmsr",
            ExperimentKind::Flock => "flock",
            ExperimentKind::FramDemo => "fram-demo",
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

/// Complete-graph rows: `l` legitimate, `l/2` hidden, `10·l` spoofed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Table1Config {
    pub epsilon: f64,
    pub hidden_per_legitimate: f64,
    pub spoofed_per_legitimate: usize,
    /// Initial success-curve length; doubled until both algorithms reach 1/2.
    pub r_max: usize,
    pub rows: Vec<Table1Row>,
}

impl Default for Table1Config {
    fn default() -> Self {
        Self {
            epsilon: 1.0 / 3.0,
            hidden_per_legitimate: 0.5,
            spoofed_per_legitimate: 10,
            r_max: 64,
            rows: vec![Table1Row { l: 10, trials: 1000 }, Table1Row { l: 100, trials: 100 }],
        }
    }
}

/// A named circulant neighborhood regime.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Regime {
    pub name: String,
    #[serde(flatten)]
    pub world: CirculantSpec,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EpsilonSweepConfig {
    pub epsilons: Vec<f64>,
    pub regimes: Vec<Regime>,
    pub trials: usize,
    /// Round cap per trial; the anytime cap when absent.
    pub cap: Option<usize>,
}

impl Default for EpsilonSweepConfig {
    fn default() -> Self {
        let regime = |name: &str, k| Regime {
            name: name.into(),
            world: CirculantSpec { legitimate: 24, offsets: k, detectable: 8, attach: None },
        };
        Self {
            epsilons: vec![0.1, 0.15, 0.2, 0.25, 0.3, 0.35, 0.4, 0.45],
            regimes: vec![regime("small", 2), regime("large", 6)],
            trials: 1000,
            cap: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TauConfig {
    pub legitimate: usize,
    /// Ring offsets `k`; the resulting minimum τ is `k + 1`.
    pub offsets: Vec<usize>,
    pub rounds_detectable: Vec<usize>,
    pub rounds_epsilon: f64,
    pub rounds_trials: usize,
    pub rounds_cap: Option<usize>,
    pub fixed_rounds: Vec<usize>,
    pub fixed_detectable: usize,
    pub fixed_epsilon: f64,
    pub fixed_trials: usize,
    pub geometric_sizes: Vec<usize>,
    pub geometric_boxes: Vec<f64>,
    pub geometric_trials: usize,
}

impl Default for TauConfig {
    fn default() -> Self {
        Self {
            legitimate: 20,
            offsets: vec![1, 2, 3, 4],
            rounds_detectable: vec![4, 12],
            rounds_epsilon: 0.1,
            rounds_trials: 1000,
            rounds_cap: None,
            fixed_rounds: vec![10, 15, 20],
            fixed_detectable: 8,
            fixed_epsilon: 0.2,
            fixed_trials: 1000,
            geometric_sizes: vec![5, 10, 20, 40],
            geometric_boxes: vec![2.0, 4.0],
            geometric_trials: 1000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ConnectivityConfig {
    pub legitimate: usize,
    pub spoofed: Vec<usize>,
    pub box_side: f64,
    pub trials: usize,
}

impl Default for ConnectivityConfig {
    fn default() -> Self {
        Self { legitimate: 20, spoofed: vec![0, 5, 10, 15, 20], box_side: 4.0, trials: 1000 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WmsrConfig {
    pub fixture: String,
    pub f: usize,
    pub steps: usize,
    pub noise_sigma: f64,
    pub drift_rate: f64,
    pub epsilon: f64,
    pub delta: f64,
    pub trials: usize,
}

impl Default for WmsrConfig {
    fn default() -> Self {
        Self {
            fixture: "fig3".into(),
            f: 1,
            steps: 200,
            noise_sigma: 0.5,
            drift_rate: 0.05,
            epsilon: 1.0 / 3.0,
            delta: 0.1,
            trials: 100,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FlockConfig {
    pub trials: usize,
    #[serde(flatten)]
    pub scenario: FlockScenario,
}

impl Default for FlockConfig {
    fn default() -> Self {
        Self { trials: 50, scenario: FlockScenario::default() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FramConfig {
    pub fixture: String,
    /// Noiseless channel when absent.
    pub epsilon: Option<f64>,
    pub delta: f64,
    pub max_rounds: usize,
}

impl Default for FramConfig {
    fn default() -> Self {
        Self { fixture: "estimation5".into(), epsilon: None, delta: 0.1, max_rounds: 256 }
    }
}

/// One declarative file per run. Top-level `trials` overrides every section.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Option<ExperimentKind>,
    pub seed: u64,
    pub trials: Option<usize>,
    /// Worker threads; all available cores when absent.
    pub threads: Option<usize>,
    pub out: PathBuf,
    pub observation: ObservationMode,
    pub strategy: AdversaryStrategy,
    pub table1: Table1Config,
    pub rounds_vs_eps: EpsilonSweepConfig,
    pub tau: TauConfig,
    pub connectivity: ConnectivityConfig,
    pub wmsr: WmsrConfig,
    pub flock: FlockConfig,
    pub fram: FramConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            experiment: None,
            seed: 1,
            trials: None,
            threads: None,
            out: PathBuf::from("results"),
            observation: ObservationMode::Bernoulli,
            strategy: AdversaryStrategy::default(),
            table1: Table1Config::default(),
            rounds_vs_eps: EpsilonSweepConfig::default(),
            tau: TauConfig::default(),
            connectivity: ConnectivityConfig::default(),
            wmsr: WmsrConfig::default(),
            flock: FlockConfig::default(),
            fram: FramConfig::default(),
        }
    }
}

fn config_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Config(msg.into()))
}

fn check_epsilon(name: &str, eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps < 0.5) {
        return config_err(format!("{name} must lie in (0, 0.5), got {eps}"));
    }
    Ok(())
}

fn check_delta(name: &str, delta: f64) -> Result<()> {
    if !(delta > 0.0 && delta < 1.0) {
        return config_err(format!("{name} must lie in (0, 1), got {delta}"));
    }
    Ok(())
}

fn check_positive(name: &str, v: usize) -> Result<()> {
    if v == 0 {
        return config_err(format!("{name} must be positive"));
    }
    Ok(())
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Section trial count unless the top-level override is set.
    pub fn trials_or(&self, section: usize) -> usize {
        self.trials.unwrap_or(section)
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(t) = self.trials {
            check_positive("trials", t)?;
        }
        if let Some(t) = self.threads {
            check_positive("threads", t)?;
        }
        if let ObservationMode::Beta { concentration } = self.observation {
            if !(concentration > 0.0 && concentration.is_finite()) {
                return config_err(format!("beta concentration must be positive, got {concentration}"));
            }
        }
        if !(self.strategy.attack_push_gain > 0.0 && self.strategy.attack_push_gain.is_finite()) {
            return config_err("attack_push_gain must be positive");
        }
        let t1 = &self.table1;
        check_epsilon("table1.epsilon", t1.epsilon)?;
        check_positive("table1.r_max", t1.r_max)?;
        if !(t1.hidden_per_legitimate >= 0.0 && t1.hidden_per_legitimate < 1.0) {
            return config_err("table1.hidden_per_legitimate must lie in [0, 1)");
        }
        for row in &t1.rows {
            check_positive("table1.rows.l", row.l)?;
            check_positive("table1.rows.trials", row.trials)?;
        }
        let ev = &self.rounds_vs_eps;
        for &e in &ev.epsilons {
            check_epsilon("rounds_vs_eps.epsilons", e)?;
        }
        for r in &ev.regimes {
            r.world.validate()?;
        }
        check_positive("rounds_vs_eps.trials", ev.trials)?;
        let tau = &self.tau;
        for &k in &tau.offsets {
            CirculantSpec { legitimate: tau.legitimate, offsets: k, detectable: 0, attach: None }.validate()?;
        }
        check_epsilon("tau.rounds_epsilon", tau.rounds_epsilon)?;
        check_epsilon("tau.fixed_epsilon", tau.fixed_epsilon)?;
        check_positive("tau.rounds_trials", tau.rounds_trials)?;
        check_positive("tau.fixed_trials", tau.fixed_trials)?;
        check_positive("tau.geometric_trials", tau.geometric_trials)?;
        for &r in &tau.fixed_rounds {
            check_positive("tau.fixed_rounds", r)?;
        }
        for &n in &tau.geometric_sizes {
            if n < 2 {
                return config_err("tau.geometric_sizes must be at least 2");
            }
        }
        for &b in &tau.geometric_boxes {
            if !(b > 0.0 && b.is_finite()) {
                return config_err("tau.geometric_boxes must be positive");
            }
        }
        let c = &self.connectivity;
        if c.legitimate < 2 {
            return config_err("connectivity.legitimate must be at least 2");
        }
        if !(c.box_side > 0.0 && c.box_side.is_finite()) {
            return config_err("connectivity.box_side must be positive");
        }
        check_positive("connectivity.trials", c.trials)?;
        let w = &self.wmsr;
        check_epsilon("wmsr.epsilon", w.epsilon)?;
        check_delta("wmsr.delta", w.delta)?;
        check_positive("wmsr.trials", w.trials)?;
        if !(w.noise_sigma > 0.0) || !(w.drift_rate >= 0.0) {
            return config_err("wmsr.noise_sigma must be positive and wmsr.drift_rate non-negative");
        }
        let fl = &self.flock;
        check_positive("flock.trials", fl.trials)?;
        check_epsilon("flock.epsilon", fl.scenario.epsilon)?;
        check_delta("flock.delta", fl.scenario.delta)?;
        if !(fl.scenario.t_s > 0.0 && fl.scenario.duration > 0.0) {
            return config_err("flock.t_s and flock.duration must be positive");
        }
        if fl.scenario.hacked >= fl.scenario.robots {
            return config_err("flock.hacked must be smaller than flock.robots");
        }
        fl.scenario
            .gains
            .validate(fl.scenario.t_s, crate::flocking::norm(fl.scenario.target_velocity))
            .map_err(|e| Error::Config(e.to_string()))?;
        if let Some(e) = self.fram.epsilon {
            check_epsilon("fram.epsilon", e)?;
        }
        check_delta("fram.delta", self.fram.delta)?;
        Ok(())
    }
}

/// Per-trial seed: the first 8 bytes (little-endian) of
/// `SHA-256(base_seed as u64 LE ‖ experiment id UTF-8 ‖ trial index as u64 LE)`.
pub fn trial_seed(base_seed: u64, experiment: &str, trial: u64) -> u64 {
    let mut h = Sha256::new();
    h.update(base_seed.to_le_bytes());
    h.update(experiment.as_bytes());
    h.update(trial.to_le_bytes());
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("8 bytes"))
}

pub fn trial_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Thread pool sized from the config.
pub fn pool(threads: Option<usize>) -> Result<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(t) = threads {
        b = b.num_threads(t);
    }
    b.build().map_err(|e| Error::Config(e.to_string()))
}

/// Runs `f(trial, seed)` for `0..trials`; output is in trial order.
pub fn run_trials<T, F>(pool: &rayon::ThreadPool, base_seed: u64, id: &str, trials: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize, u64) -> Result<T> + Sync,
{
    pool.install(|| {
        (0..trials)
            .into_par_iter()
            .map(|t| f(t, trial_seed(base_seed, id, t as u64)))
            .collect()
    })
}

/// One acceptance threshold.
#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Self { name: name.into(), passed, detail: detail.into() }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "[{tag}] {}: {}", self.name, self.detail)
    }
}

/// CSV files, human-readable summary lines and threshold checks of one run.
#[derive(Clone, Debug, Default)]
pub struct Report {
    pub files: Vec<(String, String)>,
    pub summary: Vec<String>,
    pub checks: Vec<Check>,
}

impl Report {
    pub fn file(&self, name: &str) -> Option<&str> {
        self.files.iter().find(|(n, _)| n == name).map(|(_, c)| c.as_str())
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn write_to(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        for (name, content) in &self.files {
            fs::write(dir.join(name), content)?;
        }
        Ok(())
    }

    pub(crate) fn add_csv<S: Serialize>(&mut self, name: &str, rows: &[S]) -> Result<()> {
        self.files.push((name.to_string(), to_csv(rows)?));
        Ok(())
    }
}

pub(crate) fn to_csv<S: Serialize>(rows: &[S]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

/// Sample mean and standard deviation (n − 1 denominator).
pub fn mean_sd(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let m = xs.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (m, 0.0);
    }
    let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1) as f64;
    (m, v.sqrt())
}

/// Standard error of a sample mean.
pub fn std_error(xs: &[f64]) -> f64 {
    mean_sd(xs).1 / (xs.len() as f64).sqrt()
}

/// Standard error of a Bernoulli rate, floored at one success in `n` so a
/// saturated rate is not treated as exact.
pub fn rate_error(p: f64, n: usize) -> f64 {
    let n = n as f64;
    let p = p.clamp(1.0 / n, 1.0 - 1.0 / n);
    (p * (1.0 - p) / n).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeds_are_stable_and_distinct() {
        let a = trial_seed(1, "table1/l=10", 0);
        assert_eq!(a, trial_seed(1, "table1/l=10", 0));
        assert_ne!(a, trial_seed(1, "table1/l=10", 1));
        assert_ne!(a, trial_seed(2, "table1/l=10", 0));
        assert_ne!(a, trial_seed(1, "table1/l=100", 0));
    }

    #[test]
    fn seed_rule_matches_manual_digest() {
        let mut bytes = 7u64.to_le_bytes().to_vec();
        bytes.extend_from_slice(b"wmsr");
        bytes.extend_from_slice(&3u64.to_le_bytes());
        let d = Sha256::digest(&bytes);
        let expect = u64::from_le_bytes(d[..8].try_into().unwrap());
        assert_eq!(trial_seed(7, "wmsr", 3), expect);
    }

    #[test]
    fn trial_order_is_thread_independent() {
        let f = |t: usize, s: u64| Ok((t, s));
        let a = run_trials(&pool(Some(1)).unwrap(), 9, "x", 50, f).unwrap();
        let b = run_trials(&pool(Some(4)).unwrap(), 9, "x", 50, f).unwrap();
        assert_eq!(a, b);
        assert!(a.iter().enumerate().all(|(i, &(t, _))| i == t));
    }

    #[test]
    fn config_round_trip_and_validation() {
        let cfg = ExperimentConfig::default();
        let back = ExperimentConfig::from_toml(&cfg.to_toml()).unwrap();
        assert_eq!(back, cfg);
        let cfg = ExperimentConfig::from_toml("seed = 4\ntrials = 10\n[table1]\nepsilon = 0.2\n").unwrap();
        assert_eq!((cfg.seed, cfg.trials, cfg.table1.epsilon), (4, Some(10), 0.2));
        assert!(matches!(ExperimentConfig::from_toml("[table1]\nepsilon = 0.7\n"), Err(Error::Config(_))));
        assert!(matches!(ExperimentConfig::from_toml("bogus = 1\n"), Err(Error::Config(_))));
        assert!(matches!(ExperimentConfig::from_toml("trials = 0\n"), Err(Error::Config(_))));
    }

    #[test]
    fn mean_and_errors() {
        let (m, s) = mean_sd(&[1.0, 2.0, 3.0]);
        assert!((m - 2.0).abs() < 1e-12 && (s - 1.0).abs() < 1e-12);
        assert!(rate_error(1.0, 100) > 0.0);
    }
}
