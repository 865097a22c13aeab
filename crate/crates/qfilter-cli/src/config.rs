//! Strict JSON configuration schema with documented defaults.
//!
//! A minimal config only names the system, e.g. `{"system": {"type": "spin",
//! "two_j": 2}}`; every other field has a default (η = 1, controller `zero`,
//! target = highest eigenstate for spin / antisymmetric Bell state for the
//! two-qubit system, ρ₀ maximally mixed, dt = 1e-3, t_final = 10,
//! n_trajectories = 100, master_seed = 42, record_stride = 100,
//! converge_eps = 0.01). Unknown top-level fields are rejected.

use serde::{Deserialize, Serialize};
use std::fmt;

/// Configuration error: names the offending field and the accepted range.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "config error: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}

fn err(msg: impl Into<String>) -> ConfigError {
    ConfigError(msg.into())
}

/// Which physical system to simulate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum SystemConfig {
    /// Spin-J ladder, N = 2J + 1 levels; `two_j` keeps half-integers exact.
    Spin {
        /// 2J ≥ 1.
        two_j: u32,
    },
    /// Two identical qubits with collective F_z measurement.
    TwoQubit,
}

/// The pure state the controller steers toward.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum TargetConfig {
    /// F_z eigenstate ψ_m, basis index m ∈ {0, …, 2J}.
    SpinEigenstate {
        /// Basis index of the eigenstate.
        m: usize,
    },
    /// ½(ψ_↑↓ + ψ_↓↑)(·)†.
    TwoQubitSymmetric,
    /// ½(ψ_↑↓ − ψ_↓↑)(·)† (singlet).
    TwoQubitAntisymmetric,
}

/// Control law selection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ControllerConfig {
    /// u ≡ 0 (free collapse / reduction experiments).
    Zero,
    /// Constant control vector, one entry per channel.
    Constant {
        /// Channel values.
        values: Vec<f64>,
    },
    /// Spin feedback law applied unconditionally (no hysteresis).
    Feedback,
    /// Spin three-branch switching law with hysteresis parameter γ.
    Switching {
        /// Switching threshold γ ∈ (0, 1); the drive re-engages at γ/2.
        gamma: f64,
    },
    /// Two-qubit feedback-branch laws applied unconditionally.
    TwoQubitFeedback,
    /// Two-qubit three-branch switching law.
    TwoQubitSwitching {
        /// Switching threshold γ ∈ (0, 1).
        gamma: f64,
    },
}

/// Initial filter state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum InitialStateConfig {
    /// I/N.
    MaximallyMixed,
    /// Basis eigenstate ψ_m.
    Eigenstate {
        /// Basis index.
        m: usize,
    },
    /// Explicit density matrix, rows of `[re, im]` entries.
    Explicit {
        /// N rows of N `[re, im]` pairs.
        matrix: Vec<Vec<[f64; 2]>>,
    },
    /// Haar-random pure state, drawn from the trajectory's RNG stream
    /// before any dynamics noise (deterministic per seed/index).
    RandomPure,
}

fn default_eta() -> f64 {
    1.0
}
fn default_controller() -> ControllerConfig {
    ControllerConfig::Zero
}
fn default_dt() -> f64 {
    1e-3
}
fn default_t_final() -> f64 {
    10.0
}
fn default_initial() -> InitialStateConfig {
    InitialStateConfig::MaximallyMixed
}
fn default_n_trajectories() -> usize {
    100
}
fn default_master_seed() -> u64 {
    42
}
fn default_record_stride() -> usize {
    100
}
fn default_converge_eps() -> f64 {
    0.01
}

/// Full simulation configuration. See the module docs for defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationConfig {
    /// Physical system.
    pub system: SystemConfig,
    /// Measurement efficiency η ∈ (0, 1].
    #[serde(default = "default_eta")]
    pub eta: f64,
    /// Target state; defaults to the highest eigenstate (spin) or the
    /// antisymmetric Bell state (two-qubit).
    #[serde(default)]
    pub target: Option<TargetConfig>,
    /// Control law.
    #[serde(default = "default_controller")]
    pub controller: ControllerConfig,
    /// Euler–Maruyama step, > 0.
    #[serde(default = "default_dt")]
    pub dt: f64,
    /// Horizon T ≥ dt; the run takes round(T/dt) steps.
    #[serde(default = "default_t_final", alias = "T")]
    pub t_final: f64,
    /// Initial state.
    #[serde(default = "default_initial")]
    pub initial_state: InitialStateConfig,
    /// Ensemble size ≥ 1.
    #[serde(default = "default_n_trajectories")]
    pub n_trajectories: usize,
    /// Master seed; trajectory i uses an independent RNG stream derived
    /// from (master_seed, i).
    #[serde(default = "default_master_seed")]
    pub master_seed: u64,
    /// Samples are recorded every `record_stride` steps (plus the final
    /// step), ≥ 1.
    #[serde(default = "default_record_stride")]
    pub record_stride: usize,
    /// Convergence threshold on V(ρ_T) = 1 − Tr[ρ_Tρ_f] (and on v(ρ_T) for
    /// reduction classification), in (0, 1).
    #[serde(default = "default_converge_eps")]
    pub converge_eps: f64,
}

impl SimulationConfig {
    /// Hilbert-space dimension of the configured system.
    pub fn dim(&self) -> usize {
        match self.system {
            SystemConfig::Spin { two_j } => two_j as usize + 1,
            SystemConfig::TwoQubit => 4,
        }
    }

    /// Number of control channels of the configured system.
    pub fn channels(&self) -> usize {
        match self.system {
            SystemConfig::Spin { .. } => 1,
            SystemConfig::TwoQubit => 2,
        }
    }

    /// The configured target, or the system's default one.
    pub fn resolved_target(&self) -> TargetConfig {
        self.target.unwrap_or(match self.system {
            SystemConfig::Spin { two_j } => TargetConfig::SpinEigenstate {
                m: two_j as usize,
            },
            SystemConfig::TwoQubit => TargetConfig::TwoQubitAntisymmetric,
        })
    }

    /// Number of integration steps, round(T/dt).
    pub fn steps(&self) -> usize {
        (self.t_final / self.dt).round() as usize
    }

    /// Checks every invariant, reporting the offending field and its
    /// accepted range.
    pub fn validate(&self) -> Result<(), ConfigError> {
        if let SystemConfig::Spin { two_j } = self.system {
            if two_j == 0 {
                return Err(err("system.two_j: must be ≥ 1"));
            }
        }
        if !(self.eta > 0.0 && self.eta <= 1.0) {
            return Err(err("eta: must lie in (0, 1]"));
        }
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(err("dt: must be positive and finite"));
        }
        if !(self.t_final >= self.dt) || !self.t_final.is_finite() {
            return Err(err("t_final: must be finite and ≥ dt"));
        }
        if self.n_trajectories < 1 {
            return Err(err("n_trajectories: must be ≥ 1"));
        }
        if self.record_stride < 1 {
            return Err(err("record_stride: must be ≥ 1"));
        }
        if !(self.converge_eps > 0.0 && self.converge_eps < 1.0) {
            return Err(err("converge_eps: must lie in (0, 1)"));
        }

        let dim = self.dim();
        match (self.system, self.resolved_target()) {
            (SystemConfig::Spin { .. }, TargetConfig::SpinEigenstate { m }) => {
                if m >= dim {
                    return Err(err(format!(
                        "target.m: must lie in 0..={} for this system",
                        dim - 1
                    )));
                }
            }
            (SystemConfig::TwoQubit, TargetConfig::TwoQubitSymmetric)
            | (SystemConfig::TwoQubit, TargetConfig::TwoQubitAntisymmetric) => {}
            (SystemConfig::Spin { .. }, _) => {
                return Err(err("target: spin systems need a spin_eigenstate target"));
            }
            (SystemConfig::TwoQubit, TargetConfig::SpinEigenstate { .. }) => {
                return Err(err(
                    "target: the two-qubit system needs a two_qubit_* target",
                ));
            }
        }

        match &self.controller {
            ControllerConfig::Zero => {}
            ControllerConfig::Constant { values } => {
                if values.len() != self.channels() {
                    return Err(err(format!(
                        "controller.values: need exactly {} value(s) for this system",
                        self.channels()
                    )));
                }
                if values.iter().any(|v| !v.is_finite()) {
                    return Err(err("controller.values: entries must be finite"));
                }
            }
            ControllerConfig::Feedback | ControllerConfig::Switching { .. } => {
                if !matches!(self.system, SystemConfig::Spin { .. }) {
                    return Err(err(
                        "controller: feedback/switching apply to spin systems; use the two_qubit_* variants",
                    ));
                }
            }
            ControllerConfig::TwoQubitFeedback | ControllerConfig::TwoQubitSwitching { .. } => {
                if !matches!(self.system, SystemConfig::TwoQubit) {
                    return Err(err(
                        "controller: two_qubit_feedback/two_qubit_switching need the two_qubit system",
                    ));
                }
            }
        }
        if let ControllerConfig::Switching { gamma }
        | ControllerConfig::TwoQubitSwitching { gamma } = self.controller
        {
            if !(gamma > 0.0 && gamma < 1.0) {
                return Err(err("controller.gamma: must lie in (0, 1)"));
            }
        }

        match &self.initial_state {
            InitialStateConfig::MaximallyMixed | InitialStateConfig::RandomPure => {}
            InitialStateConfig::Eigenstate { m } => {
                if *m >= dim {
                    return Err(err(format!(
                        "initial_state.m: must lie in 0..={}",
                        dim - 1
                    )));
                }
            }
            InitialStateConfig::Explicit { matrix } => {
                if matrix.len() != dim || matrix.iter().any(|row| row.len() != dim) {
                    return Err(err(format!(
                        "initial_state.matrix: must be {dim}×{dim} rows of [re, im] pairs"
                    )));
                }
                if matrix
                    .iter()
                    .flatten()
                    .any(|z| !z[0].is_finite() || !z[1].is_finite())
                {
                    return Err(err("initial_state.matrix: entries must be finite"));
                }
            }
        }
        Ok(())
    }
}
