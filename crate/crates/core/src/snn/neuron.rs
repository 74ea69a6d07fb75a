//! Leaky integrate-and-fire dynamics.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Parameters of a leaky integrate-and-fire neuron.
///
/// Defaults: `tau_m = 10 ms`, `v_rest = 0`, `v_threshold = 1`, `v_reset = 0`,
/// `t_refractory = 2 ms`, `resistance = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NeuronParams {
    /// Membrane time constant (ms).
    pub tau_m: f64,
    pub v_rest: f64,
    pub v_threshold: f64,
    pub v_reset: f64,
    /// Refractory period (ms).
    pub t_refractory: f64,
    /// Input gain applied to the injected current.
    pub resistance: f64,
}

impl Default for NeuronParams {
    fn default() -> Self {
        Self {
            tau_m: 10.0,
            v_rest: 0.0,
            v_threshold: 1.0,
            v_reset: 0.0,
            t_refractory: 2.0,
            resistance: 1.0,
        }
    }
}

impl NeuronParams {
    pub fn validate(&self) -> Result<()> {
        let all = [
            self.tau_m,
            self.v_rest,
            self.v_threshold,
            self.v_reset,
            self.t_refractory,
            self.resistance,
        ];
        if all.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("neuron parameters".into()));
        }
        if self.tau_m <= 0.0 {
            return Err(Error::param("tau_m", "must be > 0"));
        }
        if self.v_threshold <= self.v_reset {
            return Err(Error::param("v_threshold", "must exceed v_reset"));
        }
        if self.t_refractory < 0.0 {
            return Err(Error::param("t_refractory", "must be >= 0"));
        }
        Ok(())
    }

    pub fn with_refractory(mut self, t_refractory: f64) -> Self {
        self.t_refractory = t_refractory;
        self
    }

    pub fn with_tau(mut self, tau_m: f64) -> Self {
        self.tau_m = tau_m;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NeuronState {
    pub v: f64,
    /// Remaining refractory time (ms).
    pub refractory_remaining: f64,
    /// Raised by threshold balancing; added to `v_threshold`.
    pub adaptive_threshold_offset: f64,
}

impl NeuronState {
    pub fn at_rest(params: &NeuronParams) -> Self {
        Self {
            v: params.v_rest,
            refractory_remaining: 0.0,
            adaptive_threshold_offset: 0.0,
        }
    }
}

/// Advance one neuron by `dt` ms under a constant `input_current`.
///
/// The membrane relaxes exponentially toward `v_rest + resistance * I`
/// (exact for piecewise-constant input). While refractory the potential is
/// held at `v_reset` and the input is ignored.
pub fn lif_step(
    state: NeuronState,
    params: &NeuronParams,
    input_current: f64,
    dt: f64,
) -> Result<(NeuronState, bool)> {
    if !input_current.is_finite() {
        return Err(Error::NonFinite("input_current".into()));
    }
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::param("dt", "must be > 0"));
    }
    Ok(lif_step_unchecked(state, params, input_current, dt))
}

#[inline]
pub(crate) fn lif_step_unchecked(
    mut state: NeuronState,
    params: &NeuronParams,
    input_current: f64,
    dt: f64,
) -> (NeuronState, bool) {
    if state.refractory_remaining > 0.0 {
        state.refractory_remaining = (state.refractory_remaining - dt).max(0.0);
        state.v = params.v_reset;
        return (state, false);
    }
    let v_inf = params.v_rest + params.resistance * input_current;
    state.v = v_inf + (state.v - v_inf) * (-dt / params.tau_m).exp();
    if state.v >= params.v_threshold + state.adaptive_threshold_offset {
        state.v = params.v_reset;
        state.refractory_remaining = params.t_refractory;
        (state, true)
    } else {
        (state, false)
    }
}

/// Closed-form first-spike time from rest under constant drive, or `None`
/// when the asymptote never reaches threshold.
pub fn analytic_first_spike(params: &NeuronParams, input_current: f64) -> Option<f64> {
    let v_inf = params.v_rest + params.resistance * input_current;
    if v_inf <= params.v_threshold {
        return None;
    }
    Some(params.tau_m * ((v_inf - params.v_rest) / (v_inf - params.v_threshold)).ln())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn first_spike(params: &NeuronParams, current: f64, dt: f64, horizon: f64) -> Option<f64> {
        let mut s = NeuronState::at_rest(params);
        let steps = (horizon / dt) as usize;
        for n in 0..steps {
            let (next, spiked) = lif_step(s, params, current, dt).unwrap();
            s = next;
            if spiked {
                return Some((n + 1) as f64 * dt);
            }
        }
        None
    }

    #[test]
    fn first_spike_matches_ten_ln_two() {
        let p = NeuronParams::default();
        let t = first_spike(&p, 2.0, 1.0, 100.0).unwrap();
        let exact = 10.0 * 2f64.ln();
        assert!((exact - 6.931_471_805_599_453).abs() < 1e-12);
        assert!((t - exact).abs() <= 1.0, "t = {t}");
        assert_eq!(analytic_first_spike(&p, 2.0), Some(exact));
    }

    #[test]
    fn zero_input_never_spikes() {
        let p = NeuronParams::default();
        assert_eq!(first_spike(&p, 0.0, 1.0, 10_000.0), None);
    }

    #[test]
    fn halving_dt_agrees_within_coarse_step() {
        let p = NeuronParams::default();
        let coarse = first_spike(&p, 2.0, 1.0, 100.0).unwrap();
        let fine = first_spike(&p, 2.0, 0.5, 100.0).unwrap();
        assert!((coarse - fine).abs() <= 1.0);
    }

    #[test]
    fn refractory_clamps_and_rejects_bad_input() {
        let p = NeuronParams::default();
        let s = NeuronState {
            v: 0.5,
            refractory_remaining: 1.5,
            adaptive_threshold_offset: 0.0,
        };
        let (s, spiked) = lif_step(s, &p, 100.0, 1.0).unwrap();
        assert!(!spiked);
        assert_eq!(s.v, p.v_reset);
        assert_eq!(s.refractory_remaining, 0.5);
        assert!(lif_step(s, &p, f64::NAN, 1.0).is_err());
        assert!(lif_step(s, &p, 1.0, 0.0).is_err());
    }

    #[test]
    fn threshold_offset_delays_spike() {
        let p = NeuronParams::default();
        let mut s = NeuronState::at_rest(&p);
        s.adaptive_threshold_offset = 0.5;
        let mut first = None;
        for n in 0..100 {
            let (next, spiked) = lif_step(s, &p, 2.0, 1.0).unwrap();
            s = next;
            if spiked {
                first = Some(n + 1);
                break;
            }
        }
        // 1.5 threshold: 10 ln 4 = 13.86 ms
        assert_eq!(first, Some(14));
    }

    #[test]
    fn params_validation() {
        assert!(NeuronParams::default().validate().is_ok());
        assert!(NeuronParams::default().with_tau(0.0).validate().is_err());
        let p = NeuronParams {
            v_reset: 2.0,
            ..NeuronParams::default()
        };
        assert!(p.validate().is_err());
        assert!(NeuronParams::default().with_refractory(-1.0).validate().is_err());
    }
}
