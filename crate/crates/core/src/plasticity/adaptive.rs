//! STDP with input filtering, adaptive lateral inhibition and threshold
//! balancing, for a single competitive layer.

use serde::{Deserialize, Serialize};

use super::stdp::StdpParams;
use crate::error::{Error, Result};
use crate::snn::{NeuronParams, SpikeTrain, WeightMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdaptiveStdpConfig {
    pub stdp: StdpParams,
    pub neuron: NeuronParams,
    /// ms
    pub dt: f64,
    /// Time constant of the first-order synaptic filter (ms).
    pub filter_tau: f64,
    /// Threshold balancing target, Hz.
    pub target_rate_hz: f64,
    /// Offset change per Hz of rate error, per presentation.
    pub threshold_lr: f64,
    /// Initial lateral inhibition magnitude.
    pub lateral_init: f64,
    /// If set, each neuron's incoming weights are rescaled to this sum after
    /// every presentation.
    pub weight_sum: Option<f64>,
}

impl Default for AdaptiveStdpConfig {
    fn default() -> Self {
        Self {
            stdp: StdpParams {
                a_plus: 0.01,
                a_minus: 0.006,
                tau_plus: 20.0,
                tau_minus: 20.0,
                w_min: 0.0,
                w_max: 1.0,
            },
            neuron: NeuronParams::default(),
            dt: 1.0,
            filter_tau: 5.0,
            target_rate_hz: 5.0,
            threshold_lr: 0.002,
            lateral_init: 0.5,
            weight_sum: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaptiveStdpState {
    /// Low-passed synaptic current, inputs x outputs.
    pub synaptic_filter_state: WeightMatrix,
    /// Outputs x outputs, all entries <= 0, zero diagonal.
    pub lateral_inhibition_weights: WeightMatrix,
    /// Per-neuron threshold offsets, >= 0.
    pub threshold_offsets: Vec<f64>,
}

impl AdaptiveStdpState {
    pub fn new(n_in: usize, n_out: usize, lateral_init: f64) -> Self {
        Self {
            synaptic_filter_state: WeightMatrix::zeros(n_in, n_out),
            lateral_inhibition_weights: WeightMatrix::from_fn(n_out, n_out, |r, c| {
                if r == c {
                    0.0
                } else {
                    -lateral_init.abs()
                }
            }),
            threshold_offsets: vec![0.0; n_out],
        }
    }
}

/// What the layer did during one presentation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerResponse {
    pub output_counts: Vec<usize>,
    pub output_rates_hz: Vec<f64>,
}

/// Present one input spike pattern to the layer and learn from it.
///
/// Per step: presynaptic spikes feed a per-synapse low-pass current; output
/// LIF neurons integrate it against `threshold + offset`; among neurons that
/// cross in the same step only the strongest fires and the others receive
/// lateral inhibition, which is deepened whenever it was too weak to silence
/// them; STDP (trace-based, all-to-all) updates the feed-forward weights.
/// After the presentation each offset moves by `threshold_lr * (rate - target)`.
pub fn apply_adaptive_stdp(
    input: &SpikeTrain,
    weights: &WeightMatrix,
    state: &AdaptiveStdpState,
    cfg: &AdaptiveStdpConfig,
) -> Result<(WeightMatrix, AdaptiveStdpState, LayerResponse)> {
    let (n_in, n_out) = weights.shape();
    if input.neuron_count() != n_in
        || state.synaptic_filter_state.shape() != (n_in, n_out)
        || state.lateral_inhibition_weights.shape() != (n_out, n_out)
        || state.threshold_offsets.len() != n_out
    {
        return Err(Error::ShapeMismatch(format!(
            "input {} / weights {:?} / state inconsistent",
            input.neuron_count(),
            weights.shape()
        )));
    }
    cfg.stdp.validate()?;
    cfg.neuron.validate()?;
    let dt = cfg.dt;
    let steps = (input.duration() / dt).ceil() as usize;
    let mut w = weights.clone();
    let mut st = state.clone();

    let mut pre_by_step: Vec<Vec<usize>> = vec![Vec::new(); steps];
    for s in input.events() {
        let k = (s.0 / dt).floor() as usize;
        if k < steps {
            pre_by_step[k].push(s.1);
        }
    }

    let filt_decay = (-dt / cfg.filter_tau).exp();
    let mem_decay = (-dt / cfg.neuron.tau_m).exp();
    let dp = (-dt / cfg.stdp.tau_plus).exp();
    let dm = (-dt / cfg.stdp.tau_minus).exp();
    let mut v = vec![cfg.neuron.v_rest; n_out];
    let mut refractory = vec![0.0f64; n_out];
    let mut pre_trace = vec![0.0f64; n_in];
    let mut post_trace = vec![0.0f64; n_out];
    let mut counts = vec![0usize; n_out];
    let mut current = vec![0.0f64; n_out];

    for pre in pre_by_step.iter() {
        // synaptic filter
        let f = st.synaptic_filter_state.as_mut_slice();
        f.iter_mut().for_each(|x| *x *= filt_decay);
        for &i in pre {
            let fr = st.synaptic_filter_state.row_mut(i);
            for (j, x) in fr.iter_mut().enumerate() {
                *x += w.get(i, j) * (1.0 - filt_decay);
            }
        }
        current.iter_mut().for_each(|c| *c = 0.0);
        for i in 0..n_in {
            for (j, x) in st.synaptic_filter_state.row(i).iter().enumerate() {
                current[j] += x;
            }
        }

        // membranes
        let mut crossing: Vec<(usize, f64)> = Vec::new();
        for j in 0..n_out {
            if refractory[j] > 0.0 {
                refractory[j] = (refractory[j] - dt).max(0.0);
                v[j] = cfg.neuron.v_reset;
                continue;
            }
            let v_inf = cfg.neuron.v_rest + cfg.neuron.resistance * current[j] * cfg.filter_tau;
            v[j] = v_inf + (v[j] - v_inf) * mem_decay;
            let thr = cfg.neuron.v_threshold + st.threshold_offsets[j];
            if v[j] >= thr {
                crossing.push((j, v[j] - thr));
            }
        }
        let winner = crossing
            .iter()
            .copied()
            .fold(None::<(usize, f64)>, |best, c| match best {
                Some(b) if b.1 >= c.1 => Some(b),
                _ => Some(c),
            })
            .map(|c| c.0);

        pre_trace.iter_mut().for_each(|x| *x *= dp);
        post_trace.iter_mut().for_each(|y| *y *= dm);

        // depression on presynaptic spikes (post-before-pre)
        for &i in pre {
            let row = w.row_mut(i);
            for (j, wij) in row.iter_mut().enumerate() {
                *wij = (*wij - cfg.stdp.a_minus * post_trace[j]).clamp(cfg.stdp.w_min, cfg.stdp.w_max);
            }
        }

        if let Some(win) = winner {
            counts[win] += 1;
            v[win] = cfg.neuron.v_reset;
            refractory[win] = cfg.neuron.t_refractory;
            for k in 0..n_out {
                if k == win {
                    continue;
                }
                let mut inh = st.lateral_inhibition_weights.get(win, k);
                let thr = cfg.neuron.v_threshold + st.threshold_offsets[k];
                if crossing.iter().any(|c| c.0 == k) && v[k] + inh >= thr {
                    // too weak to keep the runner-up silent
                    inh = -(v[k] - cfg.neuron.v_reset);
                    st.lateral_inhibition_weights.set(win, k, inh);
                }
                v[k] += inh;
            }
            // potentiation (pre-before-post)
            for i in 0..n_in {
                let x = pre_trace[i];
                if x > 0.0 {
                    let nw = (w.get(i, win) + cfg.stdp.a_plus * x).clamp(cfg.stdp.w_min, cfg.stdp.w_max);
                    w.set(i, win, nw);
                }
            }
            post_trace[win] += 1.0;
        }
        for &i in pre {
            pre_trace[i] += 1.0;
        }
    }

    if let Some(total) = cfg.weight_sum {
        for j in 0..n_out {
            let s: f64 = (0..n_in).map(|i| w.get(i, j)).sum();
            if s > 0.0 {
                for i in 0..n_in {
                    let nw = (w.get(i, j) * total / s).clamp(cfg.stdp.w_min, cfg.stdp.w_max);
                    w.set(i, j, nw);
                }
            }
        }
    }

    let secs = input.duration() / 1000.0;
    let rates: Vec<f64> = counts.iter().map(|&c| c as f64 / secs).collect();
    for (off, r) in st.threshold_offsets.iter_mut().zip(&rates) {
        *off = (*off + cfg.threshold_lr * (r - cfg.target_rate_hz)).max(0.0);
    }
    Ok((
        w,
        st,
        LayerResponse {
            output_counts: counts,
            output_rates_hz: rates,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use crate::snn::poisson_with;
    use rand::Rng;

    fn init_weights(n_in: usize, n_out: usize, seed: u64) -> WeightMatrix {
        let mut r = rng::stream(seed, "test.init");
        WeightMatrix::from_fn(n_in, n_out, |_, _| 0.2 + 0.3 * r.random::<f64>())
    }

    #[test]
    fn zero_input_leaves_weights_alone() {
        let w = init_weights(6, 3, 1);
        let st = AdaptiveStdpState::new(6, 3, 0.5);
        let input = SpikeTrain::empty(6, 200.0);
        let (w2, st2, resp) = apply_adaptive_stdp(&input, &w, &st, &AdaptiveStdpConfig::default()).unwrap();
        assert_eq!(w2, w);
        assert!(resp.output_counts.iter().all(|&c| c == 0));
        assert!(st2.threshold_offsets.iter().all(|&o| o == 0.0));
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        let w = init_weights(6, 3, 1);
        let st = AdaptiveStdpState::new(6, 3, 0.5);
        let input = SpikeTrain::empty(5, 200.0);
        assert!(apply_adaptive_stdp(&input, &w, &st, &AdaptiveStdpConfig::default()).is_err());
    }

    #[test]
    fn uniform_input_settles_at_target_rate() {
        let n_in = 20;
        let n_out = 4;
        let cfg = AdaptiveStdpConfig {
            weight_sum: Some(12.0),
            ..Default::default()
        };
        let mut w = init_weights(n_in, n_out, 2);
        let mut st = AdaptiveStdpState::new(n_in, n_out, cfg.lateral_init);
        let mut r = rng::stream(3, "test.uniform");
        let mut late = vec![0.0; n_out];
        let total = 600;
        for k in 0..total {
            let input = poisson_with(&vec![20.0; n_in], 500.0, &mut r).unwrap();
            let (w2, st2, resp) = apply_adaptive_stdp(&input, &w, &st, &cfg).unwrap();
            w = w2;
            st = st2;
            if k >= total - 200 {
                for (l, x) in late.iter_mut().zip(&resp.output_rates_hz) {
                    *l += x / 200.0;
                }
            }
        }
        for rate in late {
            assert!((rate - 5.0).abs() <= 0.5, "rate {rate}");
        }
        assert!(st.threshold_offsets.iter().all(|&o| o >= 0.0));
        assert!(st.lateral_inhibition_weights.as_slice().iter().all(|&l| l <= 0.0));
        assert!(w.as_slice().iter().all(|&x| (0.0..=1.0).contains(&x)));
    }

    fn cosine(a: &[f64], b: &[f64]) -> f64 {
        let d: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
        d / (a.iter().map(|x| x * x).sum::<f64>().sqrt() * b.iter().map(|x| x * x).sum::<f64>().sqrt())
    }

    #[test]
    fn two_clusters_give_distinct_receptive_fields() {
        let n_in = 16;
        let n_out = 2;
        let cfg = AdaptiveStdpConfig {
            weight_sum: Some(5.0),
            threshold_lr: 0.005,
            ..Default::default()
        };
        let mut w = init_weights(n_in, n_out, 4);
        let mut st = AdaptiveStdpState::new(n_in, n_out, cfg.lateral_init);
        let mut r = rng::stream(5, "test.clusters");
        let pattern = |c: usize| -> Vec<f64> {
            (0..n_in).map(|i| if (i < 8) == (c == 0) { 40.0 } else { 2.0 }).collect()
        };
        for _ in 0..400 {
            let c = r.random_range(0..2);
            let input = poisson_with(&pattern(c), 200.0, &mut r).unwrap();
            let (w2, st2, _) = apply_adaptive_stdp(&input, &w, &st, &cfg).unwrap();
            w = w2;
            st = st2;
        }
        let f0 = w.column(0);
        let f1 = w.column(1);
        let sim = cosine(&f0, &f1);
        assert!(sim < 0.5, "cosine {sim}: {f0:?} {f1:?}");
    }
}
