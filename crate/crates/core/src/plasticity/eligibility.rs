//! Eligibility traces and reward-modulated weight updates.

use serde::{Deserialize, Serialize};

use super::stdp::StdpParams;
use crate::error::{Error, Result};
use crate::snn::WeightMatrix;

/// Per-synapse eligibility (pre x post) plus the spike traces that pair
/// spikes across steps.
///
/// Eligibility is signed: depression pairs leave a negative tag.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EligibilityTrace {
    pub values: WeightMatrix,
    /// ms
    pub tau_e: f64,
    pre_trace: Vec<f64>,
    post_trace: Vec<f64>,
}

impl EligibilityTrace {
    pub fn new(n_pre: usize, n_post: usize, tau_e: f64) -> Result<Self> {
        if !(tau_e > 0.0) || !tau_e.is_finite() {
            return Err(Error::param("tau_e", "must be > 0"));
        }
        Ok(Self {
            values: WeightMatrix::zeros(n_pre, n_post),
            tau_e,
            pre_trace: vec![0.0; n_pre],
            post_trace: vec![0.0; n_post],
        })
    }

    pub fn shape(&self) -> (usize, usize) {
        self.values.shape()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.as_slice().iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Zero the tags and spike traces (episode boundary).
    pub fn reset(&mut self) {
        self.values.as_mut_slice().iter_mut().for_each(|v| *v = 0.0);
        self.pre_trace.iter_mut().for_each(|v| *v = 0.0);
        self.post_trace.iter_mut().for_each(|v| *v = 0.0);
    }
}

/// One step of eligibility dynamics.
///
/// Tags decay by `exp(-dt / tau_e)`, then every pre/post pairing completed in
/// this step adds its [`stdp_delta`](super::stdp_delta) (all-to-all pairing via
/// exponential spike traces; same-step pairs contribute zero).
pub fn update_eligibility(
    mut trace: EligibilityTrace,
    pre_spikes: &[bool],
    post_spikes: &[bool],
    stdp: &StdpParams,
    dt: f64,
) -> Result<EligibilityTrace> {
    if !(dt > 0.0) {
        return Err(Error::param("dt", "must be > 0"));
    }
    let (n_pre, n_post) = trace.shape();
    if pre_spikes.len() != n_pre || post_spikes.len() != n_post {
        return Err(Error::ShapeMismatch(format!(
            "spikes ({}, {}) vs trace ({n_pre}, {n_post})",
            pre_spikes.len(),
            post_spikes.len()
        )));
    }
    let decay = (-dt / trace.tau_e).exp();
    trace.values.as_mut_slice().iter_mut().for_each(|v| *v *= decay);
    let dp = (-dt / stdp.tau_plus).exp();
    let dm = (-dt / stdp.tau_minus).exp();
    trace.pre_trace.iter_mut().for_each(|x| *x *= dp);
    trace.post_trace.iter_mut().for_each(|y| *y *= dm);

    for (j, _) in post_spikes.iter().enumerate().filter(|(_, &s)| s) {
        for i in 0..n_pre {
            let x = trace.pre_trace[i];
            if x != 0.0 {
                let v = trace.values.get(i, j) + stdp.a_plus * x;
                trace.values.set(i, j, v);
            }
        }
    }
    for (i, _) in pre_spikes.iter().enumerate().filter(|(_, &s)| s) {
        let row = trace.values.row_mut(i);
        for (j, e) in row.iter_mut().enumerate() {
            let y = trace.post_trace[j];
            if y != 0.0 {
                *e -= stdp.a_minus * y;
            }
        }
    }
    for (i, _) in pre_spikes.iter().enumerate().filter(|(_, &s)| s) {
        trace.pre_trace[i] += 1.0;
    }
    for (j, _) in post_spikes.iter().enumerate().filter(|(_, &s)| s) {
        trace.post_trace[j] += 1.0;
    }
    Ok(trace)
}

/// Dopamine-gated update: `w += lr * dopamine * eligibility`, clamped.
pub fn rstdp_apply(
    weights: &WeightMatrix,
    trace: &EligibilityTrace,
    dopamine: f64,
    lr: f64,
    w_min: f64,
    w_max: f64,
) -> Result<WeightMatrix> {
    if weights.shape() != trace.shape() {
        return Err(Error::ShapeMismatch(format!(
            "weights {:?} vs trace {:?}",
            weights.shape(),
            trace.shape()
        )));
    }
    if !dopamine.is_finite() || !lr.is_finite() {
        return Err(Error::NonFinite("dopamine / lr".into()));
    }
    let mut out = weights.clone();
    for (w, e) in out.as_mut_slice().iter_mut().zip(trace.values.as_slice()) {
        *w = (*w + lr * dopamine * e).clamp(w_min, w_max);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::plasticity::stdp_delta;

    fn pair(trace: EligibilityTrace, p: &StdpParams) -> EligibilityTrace {
        // pre at step 0, post 5 ms later
        let mut t = update_eligibility(trace, &[true], &[false], p, 1.0).unwrap();
        for _ in 0..4 {
            t = update_eligibility(t, &[false], &[false], p, 1.0).unwrap();
        }
        update_eligibility(t, &[false], &[true], p, 1.0).unwrap()
    }

    #[test]
    fn single_pair_tag_equals_window() {
        let p = StdpParams::default();
        let t = pair(EligibilityTrace::new(1, 1, 200.0).unwrap(), &p);
        assert!((t.values.get(0, 0) - stdp_delta(5.0, &p)).abs() < 1e-12);
    }

    #[test]
    fn silence_is_pure_decay() {
        let p = StdpParams::default();
        let mut t = pair(EligibilityTrace::new(1, 1, 50.0).unwrap(), &p);
        let peak = t.values.get(0, 0);
        for _ in 0..150 {
            t = update_eligibility(t, &[false], &[false], &p, 1.0).unwrap();
        }
        // 3 tau_e
        assert!(t.values.get(0, 0) < 0.05 * peak);
        assert!((t.values.get(0, 0) - peak * (-3.0f64).exp()).abs() < 1e-12);
        for _ in 0..850 {
            t = update_eligibility(t, &[false], &[false], &p, 1.0).unwrap();
        }
        // 20 tau_e
        assert!(t.max_abs() < 1e-6);
    }

    #[test]
    fn two_pairs_accumulate_linearly() {
        let p = StdpParams::default();
        let tau_e = 1000.0;
        let one = pair(EligibilityTrace::new(1, 1, tau_e).unwrap(), &p).values.get(0, 0);
        // second pair 200 ms later; the first pair's spikes are ~e^-10 away
        let mut t = pair(EligibilityTrace::new(1, 1, tau_e).unwrap(), &p);
        for _ in 0..195 {
            t = update_eligibility(t, &[false], &[false], &p, 1.0).unwrap();
        }
        let t = pair(t, &p);
        // cross-pair terms are O(e^-10) of a single pair
        let expected = one * (1.0 + (-200.0 / tau_e).exp());
        assert!((t.values.get(0, 0) - expected).abs() < 1e-3 * one, "{} vs {expected}", t.values.get(0, 0));
    }

    #[test]
    fn post_before_pre_depresses() {
        let p = StdpParams::default();
        let mut t = EligibilityTrace::new(1, 1, 100.0).unwrap();
        t = update_eligibility(t, &[false], &[true], &p, 1.0).unwrap();
        t = update_eligibility(t, &[true], &[false], &p, 1.0).unwrap();
        assert!((t.values.get(0, 0) - stdp_delta(-1.0, &p)).abs() < 1e-12);
    }

    #[test]
    fn rstdp_arithmetic() {
        let w = WeightMatrix::filled(1, 1, 0.3);
        let mut e = EligibilityTrace::new(1, 1, 10.0).unwrap();
        e.values.set(0, 0, 0.5);
        assert_eq!(rstdp_apply(&w, &e, 0.0, 0.01, 0.0, 1.0).unwrap(), w);
        let up = rstdp_apply(&w, &e, 1.0, 0.01, 0.0, 1.0).unwrap().get(0, 0) - 0.3;
        let down = rstdp_apply(&w, &e, -1.0, 0.01, 0.0, 1.0).unwrap().get(0, 0) - 0.3;
        assert!((up - 0.005).abs() < 1e-15);
        assert!((down + 0.005).abs() < 1e-15);
        let clamped = rstdp_apply(&w, &e, 1000.0, 1.0, 0.0, 1.0).unwrap();
        assert_eq!(clamped.get(0, 0), 1.0);
        assert!(rstdp_apply(&WeightMatrix::zeros(2, 1), &e, 1.0, 1.0, 0.0, 1.0).is_err());
    }
}
