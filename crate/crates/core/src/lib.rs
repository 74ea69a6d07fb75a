//! Spiking-network toolkit for staged self-model experiments.
//!
//! The crate is organised by level, bottom-up:
//!
//! | module | level | content |
//! |---|---|---|
//! | [`snn`] | engine | LIF neurons, encoders, networks, simulation, WTA |
//! | [`plasticity`] | L0 | STDP family, R-STDP, hybrid update, CKA transfer loss, temporal-consistency loss |
//! | [`concept`] | L0 | multimodal spike-train fusion and concept classification |
//! | [`continual`] | L0 | grow / prune / importance / sleep continual learning |
//! | [`bodily`] | L1 | motor-visual association, self/other, mirror test, rubber hand |
//! | [`autonomous`] | L2 | cerebellar conditioning, speed generalization, R-STDP decisions |
//! | [`social`] | L3 | perspective taking, false belief, hazard warning, mirror-neuron empathy |
//! | [`harness`] | - | experiment registry, configs, seeded runs, export |
//!
//! Everything is deterministic given a seed; see [`rng`].

// `!(x > 0.0)` is used on purpose so that NaN fails validation
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod autonomous;
pub mod bodily;
pub mod concept;
pub mod continual;
pub mod error;
pub mod harness;
pub mod plasticity;
pub mod rng;
pub mod snn;
pub mod social;

pub use error::{Error, Result};
