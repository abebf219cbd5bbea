//! Circuit/ensemble configuration and the flat `key = value` config format.

use crate::error::{Error, Result};
use crate::topology::TopologyKind;
use serde::{Deserialize, Serialize};

/// Hard cap on total qubits for statevector simulation (2^n amplitudes).
pub const MAX_STATEVECTOR_QUBITS: usize = 14;
/// Hard cap on total qubits for exact reduced-moment extraction (4^n · 2^n cost).
pub const MAX_MOMENT_QUBITS: usize = 6;
/// Hard cap on the reduced Markov dimension 3^n.
pub const MAX_MARKOV_DIM: usize = 531_441; // 3^12

pub const DEFAULT_P_SINGLE: f64 = 0.5;
pub const DEFAULT_C_RAND: f64 = 1.0 / 3.0;
pub const DEFAULT_N_LAYERS: usize = 1;
pub const DEFAULT_INTRACORE_STEPS: usize = 1;
pub const DEFAULT_MASTER_SEED: u64 = 0;
pub const DEFAULT_ENSEMBLE_SIZE: usize = 5000;

/// Full parametrization of one architecture/ensemble.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CircuitConfig {
    pub n_cores: usize,
    pub n_qubits_per_core: usize,
    /// Number of intracore gate events per core per layer. Zero is allowed
    /// (pure inter-core layer).
    pub intracore_steps: usize,
    pub n_layers: usize,
    pub topology: TopologyKind,
    /// Probability of drawing a single-qubit gate in an intracore step;
    /// a two-qubit CZ is drawn with probability 1 − p_single.
    pub p_single: f64,
    /// Randomization parameter of the reduced single-qubit matrix; 1/3 is
    /// the fully Haar-random point.
    pub c_rand: f64,
    pub master_seed: u64,
    pub ensemble_size: usize,
}

impl CircuitConfig {
    pub fn total_qubits(&self) -> usize {
        self.n_cores * self.n_qubits_per_core
    }

    pub fn hilbert_dim(&self) -> usize {
        1usize << self.total_qubits()
    }

    pub fn markov_dim(&self) -> usize {
        3usize.pow(self.total_qubits() as u32)
    }

    /// Same configuration with a different intracore depth; used by scans.
    pub fn with_intracore_steps(&self, i: usize) -> Self {
        CircuitConfig {
            intracore_steps: i,
            ..self.clone()
        }
    }

    /// Checks the algebraic invariants. Engine-specific caps are enforced
    /// where the engines are entered.
    pub fn validate(&self) -> Result<()> {
        if self.n_cores < self.topology.min_cores() {
            return Err(Error::InvalidCoreCount {
                kind: self.topology,
                n_cores: self.n_cores,
                reason: "below the minimum for this topology",
            });
        }
        if self.n_qubits_per_core == 0 {
            return Err(Error::OutOfRange {
                what: "n_qubits_per_core",
                value: 0.0,
                range: ">= 1",
            });
        }
        if self.n_layers == 0 {
            return Err(Error::OutOfRange {
                what: "n_layers",
                value: 0.0,
                range: ">= 1",
            });
        }
        if !(0.0..=1.0).contains(&self.p_single) {
            return Err(Error::OutOfRange {
                what: "p_single",
                value: self.p_single,
                range: "[0, 1]",
            });
        }
        if !(-1.0..=1.0).contains(&self.c_rand) {
            return Err(Error::OutOfRange {
                what: "c_rand",
                value: self.c_rand,
                range: "[-1, 1]",
            });
        }
        if self.ensemble_size == 0 {
            return Err(Error::OutOfRange {
                what: "ensemble_size",
                value: 0.0,
                range: ">= 1",
            });
        }
        Ok(())
    }
}

/// Partially resolved configuration: file values and CLI flags are merged
/// into one of these before defaults fill the gaps.
#[derive(Clone, Debug, Default)]
pub struct PartialConfig {
    pub n_cores: Option<usize>,
    pub n_qubits_per_core: Option<usize>,
    pub intracore_steps: Option<usize>,
    pub n_layers: Option<usize>,
    pub topology: Option<TopologyKind>,
    pub p_single: Option<f64>,
    pub c_rand: Option<f64>,
    pub master_seed: Option<u64>,
    pub ensemble_size: Option<usize>,
}

impl PartialConfig {
    /// Parses the flat `key = value` text format. Keys match the
    /// [`CircuitConfig`] field names exactly; `#` starts a comment;
    /// later assignments win.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut out = PartialConfig::default();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = match raw.find('#') {
                Some(p) => &raw[..p],
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::InvalidValue {
                key: line.to_string(),
                line: line_no,
                message: "expected `key = value`".to_string(),
            })?;
            let key = key.trim();
            let value = value.trim();
            let bad = |message: String| Error::InvalidValue {
                key: key.to_string(),
                line: line_no,
                message,
            };
            match key {
                "n_cores" => out.n_cores = Some(value.parse().map_err(|e| bad(format!("{e}")))?),
                "n_qubits_per_core" => {
                    out.n_qubits_per_core = Some(value.parse().map_err(|e| bad(format!("{e}")))?)
                }
                "intracore_steps" => {
                    out.intracore_steps = Some(value.parse().map_err(|e| bad(format!("{e}")))?)
                }
                "n_layers" => out.n_layers = Some(value.parse().map_err(|e| bad(format!("{e}")))?),
                "topology" => out.topology = Some(value.parse().map_err(bad)?),
                "p_single" => out.p_single = Some(value.parse().map_err(|e| bad(format!("{e}")))?),
                "c_rand" => out.c_rand = Some(value.parse().map_err(|e| bad(format!("{e}")))?),
                "master_seed" => {
                    out.master_seed = Some(value.parse().map_err(|e| bad(format!("{e}")))?)
                }
                "ensemble_size" => {
                    out.ensemble_size = Some(value.parse().map_err(|e| bad(format!("{e}")))?)
                }
                other => {
                    return Err(Error::UnknownKey {
                        key: other.to_string(),
                        line: line_no,
                    })
                }
            }
        }
        Ok(out)
    }

    /// Overlays `other` on `self`: values present in `other` win.
    pub fn merged_with(&self, other: &PartialConfig) -> PartialConfig {
        PartialConfig {
            n_cores: other.n_cores.or(self.n_cores),
            n_qubits_per_core: other.n_qubits_per_core.or(self.n_qubits_per_core),
            intracore_steps: other.intracore_steps.or(self.intracore_steps),
            n_layers: other.n_layers.or(self.n_layers),
            topology: other.topology.or(self.topology),
            p_single: other.p_single.or(self.p_single),
            c_rand: other.c_rand.or(self.c_rand),
            master_seed: other.master_seed.or(self.master_seed),
            ensemble_size: other.ensemble_size.or(self.ensemble_size),
        }
    }

    /// Fills defaults and validates. `topology`, `n_cores` and
    /// `n_qubits_per_core` have no defaults and must be present.
    pub fn resolve(&self) -> Result<CircuitConfig> {
        let config = CircuitConfig {
            n_cores: self.n_cores.ok_or(Error::MissingKey { key: "n_cores" })?,
            n_qubits_per_core: self.n_qubits_per_core.ok_or(Error::MissingKey {
                key: "n_qubits_per_core",
            })?,
            intracore_steps: self.intracore_steps.unwrap_or(DEFAULT_INTRACORE_STEPS),
            n_layers: self.n_layers.unwrap_or(DEFAULT_N_LAYERS),
            topology: self.topology.ok_or(Error::MissingKey { key: "topology" })?,
            p_single: self.p_single.unwrap_or(DEFAULT_P_SINGLE),
            c_rand: self.c_rand.unwrap_or(DEFAULT_C_RAND),
            master_seed: self.master_seed.unwrap_or(DEFAULT_MASTER_SEED),
            ensemble_size: self.ensemble_size.unwrap_or(DEFAULT_ENSEMBLE_SIZE),
        };
        config.validate()?;
        Ok(config)
    }
}
