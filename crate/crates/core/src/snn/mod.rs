//! Clock-driven spiking network engine.
//!
//! Leaky integrate-and-fire neurons (exponential-Euler, `dt = 1 ms` by
//! default), spike-train encoders, population/projection wiring and a
//! deterministic simulator. A [`Network`] is plain data: it can be moved
//! between threads, and independent simulations share nothing.

mod network;
mod neuron;
mod simulate;
mod spikes;
mod wta;

pub use network::{Network, PlasticityTag, Population, Projection, WeightMatrix};
pub use neuron::{analytic_first_spike, lif_step, NeuronParams, NeuronState};
pub use simulate::{simulate, Inputs, SimConfig, SimRecord, Stimulus, WeightSnapshot};
pub use spikes::{encode_poisson, encode_rate_window, Spike, SpikeTrain};
pub use wta::{wta_select, wta_select_counts, TieRule};

pub(crate) use neuron::lif_step_unchecked;
#[cfg(test)]
pub(crate) use spikes::poisson_with;
