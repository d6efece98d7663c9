//! The network handle: validated parameters, derived bound tables, and the
//! integration settings, bundled for the dynamics and kernel operations.

use crate::dynamics::IntegralConfig;
use crate::error::Result;
use crate::params::{derive_bounds, validate, BoundsTable, NetworkParams, ValidatedParams};

/// A validated network with its bound tables. Immutable after construction
/// and safe to share across threads.
#[derive(Clone, Debug)]
pub struct Network {
    params: ValidatedParams,
    bounds: BoundsTable,
    integral: IntegralConfig,
}

impl Network {
    pub fn new(params: NetworkParams) -> Result<Self> {
        Network::with_config(params, IntegralConfig::default())
    }

    pub fn with_config(params: NetworkParams, integral: IntegralConfig) -> Result<Self> {
        let params = validate(params)?;
        let bounds = derive_bounds(&params)?;
        Ok(Network { params, bounds, integral })
    }

    pub fn params(&self) -> &ValidatedParams {
        &self.params
    }

    pub fn bounds(&self) -> &BoundsTable {
        &self.bounds
    }

    pub fn integral(&self) -> &IntegralConfig {
        &self.integral
    }

    pub fn n_neurons(&self) -> usize {
        self.params.n_neurons()
    }
}
