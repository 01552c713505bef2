//! Scenario configuration: a flat TOML key/value file where every key is
//! optional and falls back to the benchmark scenario.
//!
//! ```toml
//! # ring of four agents, proposed controller with online learning
//! n_agents = 4
//! edges = [[1, 2], [2, 3], [3, 4], [4, 1]]   # 1-based
//! controller = "proposed"
//! learning = "online_proposed"
//! initial_states = [-0.52, 0.15, -0.06, -0.71]
//! seed = 7
//! ```

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::control::{epsilon_bound, ControlGains};
use crate::gp::{BoundContext, GpError, KernelParams, DEFAULT_MAX_POINTS};
use crate::plant::{PlantError, PlantSpec, ScalarFn, DEFAULT_G_MIN};
use crate::scalar::Real;
use crate::topology::{Topology, TopologyError};
use crate::trigger::TriggerMode;

/// Grid step used for the benchmark `L_f` (max of `|f'|`).
pub const LIP_F_GRID_STEP: f64 = 1e-4;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("cannot parse config: {0}")]
    Parse(String),
    #[error("invalid config: {0}")]
    Invalid(String),
    #[error(transparent)]
    Topology(#[from] TopologyError),
    #[error(transparent)]
    Gp(#[from] GpError),
    #[error(transparent)]
    Plant(#[from] PlantError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Controller {
    Conventional,
    Proposed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Learning {
    Offline,
    OnlineNaive,
    OnlineProposed,
    OnlineRelaxed,
}

impl Learning {
    pub fn trigger_mode(self) -> TriggerMode {
        match self {
            Learning::Offline => TriggerMode::None,
            Learning::OnlineNaive => TriggerMode::Naive,
            Learning::OnlineProposed => TriggerMode::Proposed,
            Learning::OnlineRelaxed => TriggerMode::Relaxed,
        }
    }
}

/// Where the controller's estimate `f̂` comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Compensation {
    /// GP posterior mean at the agent's own state.
    Gp,
    /// `f_true(x) − oracle_bias`; for sanity runs with a known residual.
    Oracle,
}

/// How `ẋ` is obtained when a measurement is formed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeasurementMode {
    /// Exact model derivative; the only mode used for acceptance runs.
    OracleDerivative,
    /// Backward difference of the state over the last step.
    FiniteDifference,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlantName {
    Benchmark,
    /// Same dynamics as the benchmark; used for the two-agent example.
    Appendix,
    /// Built from `h_kind`/`g_kind`/`f_kind` coefficient tables.
    Custom,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FnKind {
    Zero,
    Constant,
    Affine,
    Sinusoid,
    Benchmark,
}

/// The four compared controller/learning combinations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CaseId {
    A,
    B,
    C,
    D,
}

impl CaseId {
    pub const ALL: [CaseId; 4] = [CaseId::A, CaseId::B, CaseId::C, CaseId::D];

    pub fn controller(self) -> Controller {
        match self {
            CaseId::A | CaseId::B => Controller::Conventional,
            CaseId::C | CaseId::D => Controller::Proposed,
        }
    }

    pub fn learning(self) -> Learning {
        match self {
            CaseId::A | CaseId::C => Learning::Offline,
            CaseId::B => Learning::OnlineNaive,
            CaseId::D => Learning::OnlineProposed,
        }
    }

    pub fn offline_dataset_size(self) -> usize {
        match self.learning() {
            Learning::Offline => 150,
            _ => 0,
        }
    }

    /// Overwrites the controller, learning strategy and offline dataset size.
    pub fn apply(self, config: &mut SimConfig) {
        config.controller = self.controller();
        config.learning = self.learning();
        config.offline_dataset_size = self.offline_dataset_size();
    }
}

impl fmt::Display for CaseId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            CaseId::A => "a",
            CaseId::B => "b",
            CaseId::C => "c",
            CaseId::D => "d",
        };
        f.write_str(s)
    }
}

impl FromStr for CaseId {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "a" => Ok(CaseId::A),
            "b" => Ok(CaseId::B),
            "c" => Ok(CaseId::C),
            "d" => Ok(CaseId::D),
            other => Err(ConfigError::Invalid(format!("unknown case '{other}' (expected a, b, c or d)"))),
        }
    }
}

/// Flat scenario description. All reals are `f64`; the engine converts them
/// to its scalar type when a [`Scenario`] is built.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub n_agents: usize,
    /// 1-based agent index pairs.
    pub edges: Vec<[usize; 2]>,
    pub plant: PlantName,
    pub h_kind: FnKind,
    pub h_coeffs: Vec<f64>,
    pub g_kind: FnKind,
    pub g_coeffs: Vec<f64>,
    pub f_kind: FnKind,
    pub f_coeffs: Vec<f64>,
    pub domain_lo: f64,
    pub domain_hi: f64,
    pub g_min: f64,
    /// Required for custom plants; derived from `|f'|` for built-ins.
    pub lip_f: Option<f64>,
    pub controller: Controller,
    pub learning: Learning,
    pub compensation: Compensation,
    pub oracle_bias: f64,
    pub measurement: MeasurementMode,
    pub c: f64,
    pub c_bar: f64,
    pub sigma_f: f64,
    pub length_scale: f64,
    pub sigma_n: f64,
    pub delta: f64,
    pub tau: f64,
    pub dt: f64,
    pub t_end: f64,
    /// Fixed initial states; when absent they are drawn uniformly from
    /// `[init_lo, init_hi]` (defaulting to the domain).
    pub initial_states: Option<Vec<f64>>,
    pub init_lo: Option<f64>,
    pub init_hi: Option<f64>,
    pub offline_dataset_size: usize,
    pub seed: u64,
    pub max_points: usize,
    pub log_stride: usize,
    pub gamma_grid_step: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            n_agents: 4,
            edges: vec![[1, 2], [2, 3], [3, 4], [4, 1]],
            plant: PlantName::Benchmark,
            h_kind: FnKind::Zero,
            h_coeffs: vec![],
            g_kind: FnKind::Constant,
            g_coeffs: vec![1.0],
            f_kind: FnKind::Benchmark,
            f_coeffs: vec![],
            domain_lo: -1.5,
            domain_hi: 1.5,
            g_min: DEFAULT_G_MIN,
            lip_f: None,
            controller: Controller::Proposed,
            learning: Learning::OnlineProposed,
            compensation: Compensation::Gp,
            oracle_bias: 0.0,
            measurement: MeasurementMode::OracleDerivative,
            c: 1.0,
            c_bar: 1.0,
            sigma_f: 1.0,
            length_scale: 0.05,
            sigma_n: 0.01,
            delta: 0.01,
            tau: 1e-3,
            dt: 1e-3,
            t_end: 10.0,
            initial_states: Some(vec![-0.52, 0.15, -0.06, -0.71]),
            init_lo: None,
            init_hi: None,
            offline_dataset_size: 0,
            seed: 0,
            max_points: DEFAULT_MAX_POINTS,
            log_stride: 10,
            gamma_grid_step: 1e-3,
        }
    }
}

fn fn_from_table<T: Real>(kind: FnKind, coeffs: &[f64], name: &str) -> Result<ScalarFn<T>, ConfigError> {
    let need = match kind {
        FnKind::Zero | FnKind::Benchmark => 0,
        FnKind::Constant => 1,
        FnKind::Affine => 2,
        FnKind::Sinusoid => 4,
    };
    if coeffs.len() != need {
        return Err(ConfigError::Invalid(format!(
            "{name}_coeffs needs {need} values for kind {kind:?}, got {}",
            coeffs.len()
        )));
    }
    let c = |i: usize| T::lit(coeffs[i]);
    Ok(match kind {
        FnKind::Zero => ScalarFn::Zero,
        FnKind::Benchmark => ScalarFn::Benchmark,
        FnKind::Constant => ScalarFn::Constant(c(0)),
        FnKind::Affine => ScalarFn::Affine { offset: c(0), slope: c(1) },
        FnKind::Sinusoid => {
            ScalarFn::Sinusoid { amplitude: c(0), frequency: c(1), phase: c(2), offset: c(3) }
        }
    })
}

impl SimConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))
    }

    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| ConfigError::Io { path: path.display().to_string(), source })?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("SimConfig serializes to TOML")
    }

    /// SHA-256 of the canonical TOML serialization, hex-encoded.
    pub fn hash_hex(&self) -> String {
        let digest = Sha256::digest(self.to_toml_string().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Configuration for one of the four compared cases.
    pub fn for_case(case: CaseId) -> Self {
        let mut cfg = Self::default();
        case.apply(&mut cfg);
        cfg
    }

    /// Two agents, one edge, conventional law, oracle compensation with a
    /// constant residual `eps_bias`.
    pub fn two_agent_example(x0: [f64; 2], eps_bias: f64, c: f64, t_end: f64) -> Self {
        Self {
            n_agents: 2,
            edges: vec![[1, 2]],
            plant: PlantName::Appendix,
            controller: Controller::Conventional,
            learning: Learning::Offline,
            compensation: Compensation::Oracle,
            oracle_bias: eps_bias,
            c,
            t_end,
            initial_states: Some(x0.to_vec()),
            ..Self::default()
        }
    }

    pub fn topology(&self) -> Result<Topology, ConfigError> {
        let mut edges = Vec::with_capacity(self.edges.len());
        for &[i, j] in &self.edges {
            if i == 0 || j == 0 {
                return Err(ConfigError::Invalid(format!("edge ({i}, {j}): agent indices are 1-based")));
            }
            edges.push((i - 1, j - 1));
        }
        Ok(Topology::new(self.n_agents, &edges)?)
    }

    pub fn plant_spec<T: Real>(&self) -> Result<PlantSpec<T>, ConfigError> {
        let (h, g, f) = match self.plant {
            PlantName::Benchmark | PlantName::Appendix => {
                (ScalarFn::Zero, ScalarFn::Constant(T::one()), ScalarFn::Benchmark)
            }
            PlantName::Custom => (
                fn_from_table(self.h_kind, &self.h_coeffs, "h")?,
                fn_from_table(self.g_kind, &self.g_coeffs, "g")?,
                fn_from_table(self.f_kind, &self.f_coeffs, "f")?,
            ),
        };
        Ok(PlantSpec::new(h, g, f, T::lit(self.domain_lo), T::lit(self.domain_hi), T::lit(self.g_min))?)
    }

    /// Validates the configuration and derives every constant the engine needs.
    pub fn scenario<T: Real>(&self) -> Result<Scenario<T>, ConfigError> {
        let invalid = |msg: String| Err(ConfigError::Invalid(msg));
        let topology = self.topology()?;
        let plant = self.plant_spec::<T>()?;
        let n = self.n_agents;

        if !(self.dt > 0.0) {
            return invalid(format!("dt must be > 0, got {}", self.dt));
        }
        if !(self.t_end >= 0.0) {
            return invalid(format!("t_end must be >= 0, got {}", self.t_end));
        }
        if self.log_stride == 0 {
            return invalid("log_stride must be >= 1".into());
        }
        if self.offline_dataset_size > self.max_points {
            return invalid(format!(
                "offline_dataset_size {} exceeds max_points {}",
                self.offline_dataset_size, self.max_points
            ));
        }
        if !(self.gamma_grid_step > 0.0) {
            return invalid(format!("gamma_grid_step must be > 0, got {}", self.gamma_grid_step));
        }
        if self.controller == Controller::Proposed && !(self.delta < 1.0 / n as f64) {
            return invalid(format!(
                "delta = {} must lie in (0, 1/N) = (0, {}) for the proposed controller",
                self.delta,
                1.0 / n as f64
            ));
        }
        if let Some(x0) = &self.initial_states {
            if x0.len() != n {
                return invalid(format!("initial_states has {} entries for {n} agents", x0.len()));
            }
            if let Some(x) = x0.iter().find(|x| !(**x >= self.domain_lo && **x <= self.domain_hi)) {
                return invalid(format!(
                    "initial state {x} outside domain [{}, {}]",
                    self.domain_lo, self.domain_hi
                ));
            }
        }
        let (lo, hi) = self.init_range();
        if !(lo <= hi && lo >= self.domain_lo && hi <= self.domain_hi) {
            return invalid(format!("init range [{lo}, {hi}] must lie inside the domain"));
        }

        let lip_f = match (self.lip_f, self.plant) {
            (Some(l), _) => l,
            (None, PlantName::Custom) => {
                return invalid("lip_f is required for custom plants".into());
            }
            (None, _) => plant.lipschitz_f(T::lit(LIP_F_GRID_STEP)).to_f64_lossy(),
        };

        let gains = ControlGains::new(T::lit(self.c), T::lit(self.c_bar))
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        let kernel = KernelParams::new(T::lit(self.sigma_f), T::lit(self.length_scale))?;
        let bound = BoundContext::new(
            T::lit(self.delta),
            T::lit(self.tau),
            T::lit(self.domain_lo),
            T::lit(self.domain_hi),
            T::lit(self.sigma_n),
            T::lit(lip_f),
        )?;
        let epsilon = epsilon_bound(&gains, n, bound.eta_bar_lower);
        let n_steps = (self.t_end / self.dt).round() as usize;

        Ok(Scenario {
            config: self.clone(),
            topology,
            plant,
            gains,
            kernel,
            noise_std: T::lit(self.sigma_n),
            bound,
            epsilon,
            trigger: self.learning.trigger_mode(),
            dt: T::lit(self.dt),
            n_steps,
        })
    }

    pub fn init_range(&self) -> (f64, f64) {
        (self.init_lo.unwrap_or(self.domain_lo), self.init_hi.unwrap_or(self.domain_hi))
    }
}

/// A validated configuration with all derived constants in scalar type `T`.
#[derive(Debug, Clone)]
pub struct Scenario<T> {
    pub config: SimConfig,
    pub topology: Topology,
    pub plant: PlantSpec<T>,
    pub gains: ControlGains<T>,
    pub kernel: KernelParams<T>,
    pub noise_std: T,
    pub bound: BoundContext<T>,
    /// `ε = 2 N η̲ / c`
    pub epsilon: T,
    pub trigger: TriggerMode,
    pub dt: T,
    pub n_steps: usize,
}
