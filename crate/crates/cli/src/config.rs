use std::path::{Path, PathBuf};

use clap::ValueEnum;
use nclab_core::fredholm::{SliceTest, TestFunctionSpec};
use nclab_core::montecarlo::{Bins, Interval, SimulationConfig, MIN_METROPOLIS_STEPS};
use nclab_core::quadrature::{QuadratureSpec, Scheme};
use nclab_core::stochastic::TimePartition;
use serde::{Deserialize, Serialize};

use crate::Failure;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Density,
    Correlate,
    Characteristic,
    Simulate,
    Verify,
}

impl Mode {
    pub fn name(&self) -> &'static str {
        match self {
            Mode::Density => "density",
            Mode::Correlate => "correlate",
            Mode::Characteristic => "characteristic",
            Mode::Simulate => "simulate",
            Mode::Verify => "verify",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
}

impl Default for Grid {
    fn default() -> Self {
        Self {
            lo: -3.0,
            hi: 3.0,
            points: 61,
        }
    }
}

impl Grid {
    pub fn values(&self) -> Vec<f64> {
        if self.points == 1 {
            return vec![self.lo];
        }
        let h = (self.hi - self.lo) / (self.points - 1) as f64;
        (0..self.points).map(|i| self.lo + i as f64 * h).collect()
    }

    fn check(&self, what: &str) -> Result<(), Failure> {
        if !(self.lo.is_finite() && self.hi.is_finite()) || self.points == 0 || (self.points > 1 && !(self.lo < self.hi)) {
            return Err(Failure::Config(format!("{what}: need finite lo < hi and at least one point")));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadratureSettings {
    #[serde(default = "default_abs_tol")]
    pub abs_tol: f64,
    /// Gauss-Legendre nodes per slice for Fredholm discretizations.
    #[serde(default = "default_nodes")]
    pub nodes: usize,
}

fn default_abs_tol() -> f64 {
    1e-10
}

fn default_nodes() -> usize {
    40
}

impl Default for QuadratureSettings {
    fn default() -> Self {
        Self {
            abs_tol: default_abs_tol(),
            nodes: default_nodes(),
        }
    }
}

impl QuadratureSettings {
    pub fn adaptive(&self) -> QuadratureSpec {
        QuadratureSpec::adaptive(self.abs_tol)
    }

    pub fn fixed(&self) -> QuadratureSpec {
        QuadratureSpec {
            scheme: Scheme::GaussLegendre,
            nodes: self.nodes,
            abs_tol: self.abs_tol,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorrelateSettings {
    pub slice_a: usize,
    pub slice_b: usize,
    /// Grid of `y`; the top-level grid is used when absent.
    #[serde(default)]
    pub grid_b: Option<Grid>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CharacteristicSettings {
    /// Test function and angle per observation time.
    pub slices: Vec<SliceTest>,
    /// Factors applied to every angle; one output row each.
    #[serde(default = "default_thetas")]
    pub thetas: Vec<f64>,
}

fn default_thetas() -> Vec<f64> {
    vec![1.0]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxSettings {
    pub slice_a: usize,
    pub slice_b: usize,
    pub list: Vec<(Interval, Interval)>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationSettings {
    pub delta: f64,
    pub dt: f64,
    pub paths: usize,
    #[serde(default = "default_metropolis_steps")]
    pub metropolis_steps: usize,
    #[serde(default = "default_proposal_scale")]
    pub proposal_scale: f64,
    pub bins: Bins,
    #[serde(default)]
    pub boxes: Option<BoxSettings>,
}

fn default_metropolis_steps() -> usize {
    MIN_METROPOLIS_STEPS
}

fn default_proposal_scale() -> f64 {
    1.0
}

/// Sizes of the `verify` suite.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifySettings {
    #[serde(default = "default_matrices")]
    pub matrices_per_dim: usize,
    #[serde(default = "default_gram_sizes")]
    pub gram_sizes: Vec<usize>,
    #[serde(default = "default_gram_ratios")]
    pub gram_ratios: Vec<f64>,
    #[serde(default = "default_bruteforce_points")]
    pub bruteforce_points: usize,
    #[serde(default = "default_series_points")]
    pub series_points: usize,
    #[serde(default = "default_normalization_sizes")]
    pub normalization_sizes: Vec<usize>,
    #[serde(default = "default_rains_nodes")]
    pub rains_nodes: Vec<usize>,
    #[serde(default = "default_characteristic_cases")]
    pub characteristic_cases: usize,
}

fn default_matrices() -> usize {
    20
}

fn default_gram_sizes() -> Vec<usize> {
    vec![2, 4]
}

fn default_gram_ratios() -> Vec<f64> {
    vec![0.25, 0.5, 0.9]
}

fn default_bruteforce_points() -> usize {
    3
}

fn default_series_points() -> usize {
    10
}

fn default_normalization_sizes() -> Vec<usize> {
    vec![2, 4]
}

fn default_rains_nodes() -> Vec<usize> {
    vec![20, 40]
}

fn default_characteristic_cases() -> usize {
    2
}

impl Default for VerifySettings {
    fn default() -> Self {
        Self {
            matrices_per_dim: default_matrices(),
            gram_sizes: default_gram_sizes(),
            gram_ratios: default_gram_ratios(),
            bruteforce_points: default_bruteforce_points(),
            series_points: default_series_points(),
            normalization_sizes: default_normalization_sizes(),
            rains_nodes: default_rains_nodes(),
            characteristic_cases: default_characteristic_cases(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub mode: Option<Mode>,
    #[serde(default = "default_n")]
    pub n: usize,
    #[serde(default = "default_horizon")]
    pub horizon: f64,
    /// Observation times; `[horizon]` when absent.
    #[serde(default)]
    pub times: Option<Vec<f64>>,
    #[serde(default)]
    pub seed: u64,
    /// Spare function pairs beyond `N / 2` in the basis.
    #[serde(default = "default_spare_pairs")]
    pub spare_pairs: usize,
    #[serde(default)]
    pub grid: Grid,
    #[serde(default)]
    pub quadrature: QuadratureSettings,
    #[serde(default)]
    pub correlate: Option<CorrelateSettings>,
    #[serde(default)]
    pub characteristic: Option<CharacteristicSettings>,
    #[serde(default)]
    pub simulation: Option<SimulationSettings>,
    #[serde(default)]
    pub verify: Option<VerifySettings>,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

fn default_n() -> usize {
    2
}

fn default_horizon() -> f64 {
    1.0
}

fn default_spare_pairs() -> usize {
    nclab_core::basis::DEFAULT_SPARE_PAIRS
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("empty config parses")
    }
}

impl ExperimentConfig {
    /// Parses a JSON document; errors carry line and column.
    pub fn parse(text: &str) -> Result<Self, Failure> {
        serde_json::from_str(text)
            .map_err(|e| Failure::Config(format!("line {} column {}: {e}", e.line(), e.column())))
    }

    pub fn load(path: &Path) -> Result<Self, Failure> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Fills the mode and observation times and checks everything that does
    /// not need numerics.
    pub fn resolve(mut self, mode: Mode) -> Result<Self, Failure> {
        if let Some(m) = self.mode {
            if m != mode {
                return Err(Failure::Config(format!(
                    "config is for mode '{}' but '{}' was requested",
                    m.name(),
                    mode.name()
                )));
            }
        }
        self.mode = Some(mode);
        if self.times.is_none() {
            self.times = Some(vec![self.horizon]);
        }
        if self.n == 0 || self.n % 2 == 1 {
            return Err(Failure::Config(format!("n = {} must be positive and even", self.n)));
        }
        let partition = self.partition()?;
        self.grid.check("grid")?;
        if !(self.quadrature.abs_tol > 0.0) || self.quadrature.nodes == 0 {
            return Err(Failure::Config("quadrature needs abs_tol > 0 and nodes > 0".into()));
        }
        let last = partition.len() - 1;
        match mode {
            Mode::Correlate => {
                let c = self.correlate.get_or_insert(CorrelateSettings {
                    slice_a: last,
                    slice_b: last,
                    grid_b: None,
                });
                if c.slice_a > last || c.slice_b > last {
                    return Err(Failure::Config("correlate: slice index out of range".into()));
                }
                if let Some(g) = &c.grid_b {
                    g.check("correlate.grid_b")?;
                }
            }
            Mode::Characteristic => {
                let Some(c) = &self.characteristic else {
                    return Err(Failure::Config("characteristic mode needs a 'characteristic' section".into()));
                };
                if self.n != 2 || partition.len() > 2 {
                    return Err(Failure::Config(
                        "characteristic mode compares against direct quadrature, which needs n = 2 and at most two times"
                            .into(),
                    ));
                }
                if c.slices.len() != partition.len() {
                    return Err(Failure::Config(format!(
                        "characteristic: {} slices given for {} times",
                        c.slices.len(),
                        partition.len()
                    )));
                }
                TestFunctionSpec::new(c.slices.clone()).map_err(|e| Failure::Config(format!("characteristic: {e}")))?;
                if c.thetas.is_empty() || c.thetas.iter().any(|t| !t.is_finite()) {
                    return Err(Failure::Config("characteristic: thetas must be finite and non-empty".into()));
                }
            }
            Mode::Simulate => {
                let Some(s) = &self.simulation else {
                    return Err(Failure::Config("simulate mode needs a 'simulation' section".into()));
                };
                self.simulation_config()?;
                Bins::new(s.bins.lo, s.bins.hi, s.bins.count).map_err(|e| Failure::Config(format!("simulation: {e}")))?;
                if partition.first() < s.delta {
                    return Err(Failure::Config(format!(
                        "simulation: first observation time {} precedes the warm-up time {}",
                        partition.first(),
                        s.delta
                    )));
                }
                if let Some(b) = &s.boxes {
                    if b.slice_a >= b.slice_b || b.slice_b > last {
                        return Err(Failure::Config("simulation.boxes: need slice_a < slice_b within range".into()));
                    }
                    if b.list.iter().any(|(a, b)| !(a.lo < a.hi && b.lo < b.hi)) {
                        return Err(Failure::Config("simulation.boxes: every interval needs lo < hi".into()));
                    }
                }
            }
            Mode::Verify => {
                self.verify.get_or_insert_with(VerifySettings::default);
            }
            Mode::Density => {}
        }
        Ok(self)
    }

    pub fn partition(&self) -> Result<TimePartition, Failure> {
        let times = self.times.clone().unwrap_or_else(|| vec![self.horizon]);
        TimePartition::new(times, self.horizon).map_err(|e| Failure::Config(format!("times: {e}")))
    }

    pub fn simulation_config(&self) -> Result<SimulationConfig, Failure> {
        let s = self
            .simulation
            .as_ref()
            .ok_or_else(|| Failure::Config("missing 'simulation' section".into()))?;
        let c = SimulationConfig {
            n: self.n,
            horizon: self.horizon,
            delta: s.delta,
            dt: s.dt,
            paths: s.paths,
            seed: self.seed,
            metropolis_steps: s.metropolis_steps,
            proposal_scale: s.proposal_scale,
        };
        c.validate().map_err(|e| Failure::Config(format!("simulation: {e}")))?;
        Ok(c)
    }

    /// Hex SHA-256 of the canonical JSON of the resolved config, leaving out
    /// the output directory.
    pub fn hash(&self) -> String {
        use sha2::{Digest, Sha256};
        let mut c = self.clone();
        c.output = None;
        let canonical = serde_json::to_string(&c).expect("config serializes");
        hex::encode(Sha256::digest(canonical.as_bytes()))
    }
}
