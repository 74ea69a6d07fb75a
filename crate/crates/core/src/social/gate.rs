//! Spiking inhibitory control between self- and other-perspective evidence.
//!
//! Each channel feeds a relay population one-to-one, and the relays converge
//! on a shared output. Every channel also drives its own pool of inhibitory
//! neurons, which reach the relay on the same step as the excitation. The
//! mode sets which pool is engaged: inferring another agent's view silences
//! the self channel, acting for oneself silences the other channel.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::snn::{simulate, Inputs, Network, NeuronParams, PlasticityTag, SimConfig, SpikeTrain, Stimulus, WeightMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GateMode {
    InferOther,
    ActSelf,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GateConfig {
    /// Feedforward excitation, above threshold.
    pub relay_weight: f64,
    /// Inhibition from an engaged pool onto its relay.
    pub inhibit_weight: f64,
}

impl Default for GateConfig {
    fn default() -> Self {
        Self {
            relay_weight: 1.5,
            inhibit_weight: 3.0,
        }
    }
}

impl GateConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.relay_weight > 0.0 && self.relay_weight.is_finite()) {
            return Err(Error::param("relay_weight", "must be finite and > 0"));
        }
        if !(self.inhibit_weight > self.relay_weight && self.inhibit_weight.is_finite()) {
            return Err(Error::param("inhibit_weight", "must exceed relay_weight"));
        }
        Ok(())
    }
}

/// Steps from an input spike to the output spike it causes.
const LATENCY: f64 = 3.0;

pub fn inhibitory_gate(self_signal: &SpikeTrain, other_signal: &SpikeTrain, mode: GateMode) -> Result<SpikeTrain> {
    inhibitory_gate_with(self_signal, other_signal, mode, &GateConfig::default())
}

/// Gate two aligned trains; the output is re-aligned to the input window.
pub fn inhibitory_gate_with(
    self_signal: &SpikeTrain,
    other_signal: &SpikeTrain,
    mode: GateMode,
    cfg: &GateConfig,
) -> Result<SpikeTrain> {
    cfg.validate()?;
    if self_signal.duration() != other_signal.duration() {
        return Err(Error::ShapeMismatch(format!(
            "gate inputs last {} ms and {} ms",
            self_signal.duration(),
            other_signal.duration()
        )));
    }
    let n = self_signal.neuron_count();
    if other_signal.neuron_count() != n {
        return Err(Error::ShapeMismatch(format!(
            "gate inputs have {n} and {} neurons",
            other_signal.neuron_count()
        )));
    }
    let duration = self_signal.duration();
    if n == 0 || duration <= 0.0 {
        return Ok(SpikeTrain::empty(n, duration));
    }
    let (self_gain, other_gain) = match mode {
        GateMode::InferOther => (1.0, 0.0),
        GateMode::ActSelf => (0.0, 1.0),
    };
    let fast = NeuronParams {
        t_refractory: 0.0,
        ..NeuronParams::default()
    };
    let mut net = Network::new();
    for name in ["self_in", "other_in"] {
        net.add_population(name, n, NeuronParams::default())?;
    }
    for name in ["self_inh", "other_inh", "self_relay", "other_relay", "out"] {
        net.add_population(name, n, fast)?;
    }
    let exc = |w| WeightMatrix::one_to_one(n, w);
    for (ch, gain) in [("self", self_gain), ("other", other_gain)] {
        let (input, inh, relay) = (format!("{ch}_in"), format!("{ch}_inh"), format!("{ch}_relay"));
        net.connect(&input, &inh, exc(cfg.relay_weight), 1.0, PlasticityTag::Fixed)?;
        net.connect(&input, &relay, exc(cfg.relay_weight), 2.0, PlasticityTag::Fixed)?;
        net.connect(&inh, &relay, exc(-cfg.inhibit_weight * gain), 1.0, PlasticityTag::Fixed)?;
        net.connect(&relay, "out", exc(cfg.relay_weight), 1.0, PlasticityTag::Fixed)?;
    }
    let inputs = Inputs::new()
        .with("self_in", Stimulus::Spikes(self_signal.clone()))
        .with("other_in", Stimulus::Spikes(other_signal.clone()));
    let rec = simulate(&net, &inputs, &SimConfig::new(duration + LATENCY, 0))?;
    let out = rec.train("out").ok_or_else(|| Error::UnknownPopulation("out".into()))?;
    Ok(SpikeTrain::clipped(
        n,
        duration,
        out.events().iter().map(|s| crate::snn::Spike(s.0 - LATENCY, s.1)),
    ))
}
