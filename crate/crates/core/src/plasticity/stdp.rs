use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Pair-based STDP window and weight bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StdpParams {
    pub a_plus: f64,
    pub a_minus: f64,
    /// ms
    pub tau_plus: f64,
    /// ms
    pub tau_minus: f64,
    pub w_min: f64,
    pub w_max: f64,
}

impl Default for StdpParams {
    fn default() -> Self {
        Self {
            a_plus: 0.01,
            a_minus: 0.012,
            tau_plus: 20.0,
            tau_minus: 20.0,
            w_min: 0.0,
            w_max: 1.0,
        }
    }
}

impl StdpParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.tau_plus > 0.0 && self.tau_minus > 0.0) {
            return Err(Error::param("tau_plus/tau_minus", "must be > 0"));
        }
        if !(self.w_min <= self.w_max) {
            return Err(Error::param("w_min", "must be <= w_max"));
        }
        if ![self.a_plus, self.a_minus, self.w_min, self.w_max]
            .iter()
            .all(|x| x.is_finite())
        {
            return Err(Error::NonFinite("stdp parameters".into()));
        }
        Ok(())
    }
}

/// Weight change for one spike pair, `delta_t = t_post - t_pre` (ms).
///
/// Potentiation `a_plus * exp(-dt / tau_plus)` when the presynaptic spike
/// leads, depression `-a_minus * exp(dt / tau_minus)` when it lags, and zero
/// for coincident spikes.
pub fn stdp_delta(delta_t: f64, params: &StdpParams) -> f64 {
    if delta_t > 0.0 {
        params.a_plus * (-delta_t / params.tau_plus).exp()
    } else if delta_t < 0.0 {
        -params.a_minus * (delta_t / params.tau_minus).exp()
    } else {
        0.0
    }
}
