//! TOML parameter files. One file describes one network instance; field
//! names mirror [`NetworkParams`].
//!
//! ```toml
//! n_neurons = 2
//! threshold = 1.0
//! leak_reversal = 0.0
//! excitatory_reversal = 1.0
//! inhibitory_reversal = -1.0
//! noise_amplitude = 1.0
//! reset_std = 0.5
//! profile_kind = "exponential"
//! capacitance = [1.0, 1.0]
//! leak_conductance = [2.0, 2.0]
//! population = ["excitatory", "inhibitory"]
//! max_conductance = [[0.0, 0.3], [0.3, 0.0]]
//! synapse_tau = [[0.5, 0.5], [0.5, 0.5]]
//!
//! [[external_current]]
//! neuron = 1
//! terms = [{ constant = 0.1 }]
//! ```

use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::params::{CurrentSpec, CurrentTerm, NetworkParams, Population, ProfileKind};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CurrentEntry {
    /// 1-based neuron index.
    neuron: usize,
    terms: Vec<CurrentTerm>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ParamsFile {
    n_neurons: usize,
    threshold: f64,
    leak_reversal: f64,
    excitatory_reversal: f64,
    inhibitory_reversal: f64,
    noise_amplitude: f64,
    reset_std: f64,
    #[serde(default)]
    refractory: f64,
    profile_kind: String,
    #[serde(default)]
    profile_degree: Option<u32>,
    capacitance: Vec<f64>,
    leak_conductance: Vec<f64>,
    #[serde(default)]
    population: Option<Vec<Population>>,
    #[serde(default)]
    max_conductance: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    synapse_tau: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    external_current: Vec<CurrentEntry>,
}

fn config_error(reason: impl Into<String>) -> Error {
    Error::InvalidParameter { field: "config".into(), reason: reason.into() }
}

impl ParamsFile {
    fn into_params(self) -> Result<NetworkParams> {
        let n = self.n_neurons;
        let profile = match self.profile_kind.as_str() {
            "exponential" => ProfileKind::Exponential,
            "alpha" => ProfileKind::Alpha,
            "power_exponential" => ProfileKind::PowerExponential(
                self.profile_degree
                    .ok_or_else(|| config_error("power_exponential needs profile_degree"))?,
            ),
            other => return Err(config_error(format!("unknown profile_kind {other:?}"))),
        };
        let mut current = vec![Vec::new(); n];
        for entry in self.external_current {
            if entry.neuron == 0 || entry.neuron > n {
                return Err(config_error(format!(
                    "external_current neuron {} out of range 1..={n}",
                    entry.neuron
                )));
            }
            current[entry.neuron - 1].extend(entry.terms);
        }
        Ok(NetworkParams {
            n_neurons: n,
            capacitance: self.capacitance,
            threshold: self.threshold,
            leak_reversal: self.leak_reversal,
            excitatory_reversal: self.excitatory_reversal,
            inhibitory_reversal: self.inhibitory_reversal,
            leak_conductance: self.leak_conductance,
            population: self.population.unwrap_or_else(|| vec![Population::Excitatory; n]),
            max_conductance: self.max_conductance.unwrap_or_else(|| vec![vec![0.0; n]; n]),
            synapse_tau: self.synapse_tau.unwrap_or_else(|| vec![vec![1.0; n]; n]),
            profile,
            noise_amplitude: self.noise_amplitude,
            reset_std: self.reset_std,
            refractory: self.refractory,
            external_current: CurrentSpec::new(current),
        })
    }
}

/// Parse a TOML parameter file into raw network parameters.
pub fn load_params(path: impl AsRef<Path>) -> Result<NetworkParams> {
    let text = std::fs::read_to_string(path.as_ref())?;
    let file: ParamsFile = toml::from_str(&text).map_err(|e| config_error(e.to_string()))?;
    file.into_params()
}
