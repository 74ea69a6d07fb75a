//! Grown pathways of LIF neurons with per-task readouts.
//!
//! Each task gets its own pathway of hidden neurons. A pathway sees the
//! input spikes through learned weights and, for later pathways, a constant
//! drive from the spike counts of older neurons (one-way reuse edges). Within
//! a pathway lateral inhibition keeps the `k` neurons with the most spikes;
//! their counts are the features a task's linear readout sees. Input weights
//! learn by a competitive Hebbian rule whose step on each synapse is divided
//! by `1 + importance`.

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{substream, SimRng};
use crate::snn::{lif_step_unchecked, NeuronParams, NeuronState};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GrowthConfig {
    pub neurons_per_task: usize,
    /// New pathways receive one-way edges from all older neurons.
    pub reuse: bool,
    /// Upper bound of a reuse weight, current per spike of the source.
    pub reuse_scale: f64,
    pub prune_inactivity_epochs: usize,
    /// Hz
    pub prune_rate_threshold: f64,
}

impl Default for GrowthConfig {
    fn default() -> Self {
        Self {
            neurons_per_task: 24,
            reuse: true,
            reuse_scale: 0.02,
            prune_inactivity_epochs: 3,
            prune_rate_threshold: 0.5,
        }
    }
}

impl GrowthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.neurons_per_task == 0 {
            return Err(Error::param("neurons_per_task", "must be >= 1"));
        }
        if !(self.reuse_scale >= 0.0 && self.prune_rate_threshold >= 0.0) {
            return Err(Error::param("prune_rate_threshold", "thresholds must be >= 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NetConfig {
    pub n_inputs: usize,
    pub window_ms: f64,
    /// Winners kept per pathway.
    pub k_winners: usize,
    /// Current per unit of input weight per input spike.
    pub init_gain: f64,
    pub hidden_lr: f64,
    pub readout_lr: f64,
    /// Units of importance: per-presentation co-activity times this.
    pub importance_scale: f64,
    pub neuron: NeuronParams,
}

impl Default for NetConfig {
    fn default() -> Self {
        Self {
            n_inputs: 60,
            window_ms: 100.0,
            k_winners: 4,
            init_gain: 40.0,
            hidden_lr: 0.05,
            readout_lr: 0.05,
            importance_scale: 100.0,
            neuron: NeuronParams::default(),
        }
    }
}

impl NetConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_inputs == 0 || self.k_winners == 0 {
            return Err(Error::param("k_winners", "inputs and winners must be positive"));
        }
        if !(self.window_ms >= 1.0 && self.init_gain > 0.0 && self.hidden_lr > 0.0 && self.readout_lr > 0.0 && self.importance_scale >= 0.0) {
            return Err(Error::param("window_ms", "window >= 1 ms and positive gain and rates required"));
        }
        self.neuron.validate()
    }

    pub fn steps(&self) -> usize {
        self.window_ms.round() as usize
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Neuron {
    pub id: usize,
    pub task: usize,
    pub w_in: Vec<f64>,
    /// Incoming one-way edges from older neurons, by id.
    pub reuse: Vec<(usize, f64)>,
    pub gain: f64,
    /// Accumulated importance per input weight.
    pub importance: Vec<f64>,
}

impl Neuron {
    pub fn important(&self) -> bool {
        self.importance.iter().any(|&i| i > 0.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pathway {
    pub task: usize,
    pub neurons: Vec<Neuron>,
}

/// Linear readout over one pathway's features, one row per class label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Readout {
    pub task: usize,
    pub labels: Vec<usize>,
    /// (neuron id, weight per label)
    pub weights: Vec<(usize, Vec<f64>)>,
    pub bias: Vec<f64>,
}

impl Readout {
    pub fn scores(&self, features: &BTreeMap<usize, f64>) -> Vec<f64> {
        let mut s = self.bias.clone();
        for (id, w) in &self.weights {
            if let Some(&f) = features.get(id) {
                s.iter_mut().zip(w).for_each(|(a, b)| *a += b * f);
            }
        }
        s
    }

    pub fn predict(&self, features: &BTreeMap<usize, f64>) -> usize {
        let s = self.scores(features);
        let best = (0..s.len())
            .max_by(|&a, &b| s[a].total_cmp(&s[b]).then(b.cmp(&a)))
            .expect("readout has labels");
        self.labels[best]
    }

    /// One softmax cross-entropy step toward `label`.
    pub fn sgd(&mut self, features: &BTreeMap<usize, f64>, label: usize, lr: f64) {
        let s = self.scores(features);
        let m = s.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let e: Vec<f64> = s.iter().map(|x| (x - m).exp()).collect();
        let z: f64 = e.iter().sum();
        let grad: Vec<f64> = e
            .iter()
            .zip(&self.labels)
            .map(|(p, &l)| p / z - if l == label { 1.0 } else { 0.0 })
            .collect();
        for (id, w) in &mut self.weights {
            if let Some(&f) = features.get(id) {
                w.iter_mut().zip(&grad).for_each(|(a, g)| *a -= lr * g * f);
            }
        }
        self.bias.iter_mut().zip(&grad).for_each(|(a, g)| *a -= lr * g);
    }
}

/// Input spikes of one presentation, by ms.
#[derive(Debug, Clone, PartialEq)]
pub struct Presentation {
    pub spikes: Vec<Vec<usize>>,
    pub counts: Vec<f64>,
}

impl Presentation {
    pub fn poisson(rates_hz: &[f64], steps: usize, rng: &mut SimRng) -> Self {
        let mut counts = vec![0.0; rates_hz.len()];
        let spikes = (0..steps)
            .map(|_| {
                rates_hz
                    .iter()
                    .enumerate()
                    .filter(|(_, &r)| r > 0.0 && rng.random::<f64>() < r / 1000.0)
                    .map(|(i, _)| {
                        counts[i] += 1.0;
                        i
                    })
                    .collect()
            })
            .collect();
        Self { spikes, counts }
    }
}

/// Response of every pathway to one presentation.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Response {
    /// Raw spike count per neuron id.
    pub raw: BTreeMap<usize, usize>,
    /// Post-inhibition counts per neuron id (zero for losers).
    pub features: BTreeMap<usize, f64>,
    /// Per pathway index, ids chosen for learning.
    pub learners: Vec<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContinualNet {
    pub config: NetConfig,
    pub pathways: Vec<Pathway>,
    pub readouts: BTreeMap<usize, Readout>,
    next_id: usize,
}

impl ContinualNet {
    pub fn new(config: NetConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            config,
            pathways: Vec::new(),
            readouts: BTreeMap::new(),
            next_id: 0,
        })
    }

    pub fn size(&self) -> usize {
        self.pathways.iter().map(|p| p.neurons.len()).sum()
    }

    pub fn neurons(&self) -> impl Iterator<Item = &Neuron> {
        self.pathways.iter().flat_map(|p| &p.neurons)
    }

    pub fn tasks(&self) -> BTreeSet<usize> {
        self.readouts.keys().copied().collect()
    }

    pub fn reuse_edges(&self, task: usize) -> usize {
        self.pathways
            .iter()
            .filter(|p| p.task == task)
            .flat_map(|p| &p.neurons)
            .map(|n| n.reuse.len())
            .sum()
    }

    /// Add a pathway of `n` neurons and a readout for `labels`.
    pub(crate) fn add_pathway(&mut self, task: usize, labels: &[usize], n: usize, growth: &GrowthConfig, seed: u64) -> Result<()> {
        if self.readouts.contains_key(&task) {
            return Err(Error::Duplicate {
                kind: "task",
                name: task.to_string(),
            });
        }
        if labels.is_empty() {
            return Err(Error::Empty("task labels".into()));
        }
        let mut rng = substream(seed, "continual.grow", task as u64);
        let old: Vec<usize> = self.neurons().map(|n| n.id).collect();
        let d = self.config.n_inputs;
        let neurons = (0..n)
            .map(|_| {
                let raw: Vec<f64> = (0..d).map(|_| rng.random::<f64>()).collect();
                let sum: f64 = raw.iter().sum();
                let reuse = if growth.reuse {
                    old.iter().map(|&id| (id, rng.random::<f64>() * growth.reuse_scale)).collect()
                } else {
                    Vec::new()
                };
                let id = self.next_id;
                self.next_id += 1;
                Neuron {
                    id,
                    task,
                    w_in: raw.iter().map(|w| w / sum).collect(),
                    reuse,
                    gain: self.config.init_gain,
                    importance: vec![0.0; d],
                }
            })
            .collect::<Vec<_>>();
        self.pathways.push(Pathway { task, neurons });
        self.add_readout(task, labels)
    }

    /// A readout for `task` over the most recent pathway.
    pub(crate) fn add_readout(&mut self, task: usize, labels: &[usize]) -> Result<()> {
        if self.readouts.contains_key(&task) {
            return Err(Error::Duplicate {
                kind: "task",
                name: task.to_string(),
            });
        }
        let p = self.pathways.last().ok_or_else(|| Error::Empty("network has no pathway".into()))?;
        self.readouts.insert(
            task,
            Readout {
                task,
                labels: labels.to_vec(),
                weights: p.neurons.iter().map(|n| (n.id, vec![0.0; labels.len()])).collect(),
                bias: vec![0.0; labels.len()],
            },
        );
        Ok(())
    }

    /// Run all pathways on one presentation.
    pub fn respond(&self, x: &Presentation) -> Response {
        let c = &self.config;
        let steps = x.spikes.len();
        let mut out = Response::default();
        for p in &self.pathways {
            let n = p.neurons.len();
            let tonic: Vec<f64> = p
                .neurons
                .iter()
                .map(|nr| {
                    nr.reuse
                        .iter()
                        .map(|(id, u)| u * out.features.get(id).copied().unwrap_or(0.0))
                        .sum::<f64>()
                        / steps.max(1) as f64
                })
                .collect();
            let mut states = vec![NeuronState::at_rest(&c.neuron); n];
            let mut counts = vec![0usize; n];
            for active in &x.spikes {
                for (j, nr) in p.neurons.iter().enumerate() {
                    let i_syn: f64 = active.iter().map(|&i| nr.w_in[i]).sum::<f64>() * nr.gain + tonic[j];
                    let (s, fired) = lif_step_unchecked(states[j], &c.neuron, i_syn, 1.0);
                    states[j] = s;
                    counts[j] += usize::from(fired);
                }
            }
            let drive: Vec<f64> = p
                .neurons
                .iter()
                .map(|nr| nr.w_in.iter().zip(&x.counts).map(|(w, x)| w * x).sum())
                .collect();
            // rank by spikes, then by synaptic drive
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by(|&a, &b| counts[b].cmp(&counts[a]).then(drive[b].total_cmp(&drive[a])).then(a.cmp(&b)));
            let k = c.k_winners.min(n);
            let winners: BTreeSet<usize> = order[..k].iter().copied().collect();
            for (j, nr) in p.neurons.iter().enumerate() {
                out.raw.insert(nr.id, counts[j]);
                let f = if winners.contains(&j) { counts[j] as f64 } else { 0.0 };
                out.features.insert(nr.id, f);
            }
            out.learners.push(order[..k].iter().map(|&j| p.neurons[j].id).collect());
        }
        out
    }

    /// Competitive Hebbian step: learners move toward the normalised input,
    /// each synapse by `lr / (1 + importance)`.
    pub(crate) fn hebbian_step(&mut self, x: &Presentation, r: &Response, lr: f64) {
        let total: f64 = x.counts.iter().sum();
        if total <= 0.0 {
            return;
        }
        let learners: BTreeSet<usize> = r.learners.iter().flatten().copied().collect();
        for nr in self.pathways.iter_mut().flat_map(|p| p.neurons.iter_mut()) {
            if !learners.contains(&nr.id) {
                continue;
            }
            for ((w, imp), xi) in nr.w_in.iter_mut().zip(&nr.importance).zip(&x.counts) {
                *w += lr / (1.0 + imp) * (xi / total - *w);
            }
        }
    }

    /// Features scaled for the readout.
    pub fn readout_features(&self, r: &Response) -> BTreeMap<usize, f64> {
        let scale = 1000.0 / self.config.window_ms / 100.0;
        r.features.iter().map(|(&id, &f)| (id, f * scale)).collect()
    }

    pub fn predict(&self, task: usize, x: &Presentation) -> Result<usize> {
        let ro = self.readouts.get(&task).ok_or_else(|| Error::Unknown {
            kind: "task",
            name: task.to_string(),
            registered: self.tasks().iter().map(|t| t.to_string()).collect::<Vec<_>>().join(", "),
        })?;
        Ok(ro.predict(&self.readout_features(&self.respond(x))))
    }

    /// Remove neurons by id, with their readout weights and reuse edges.
    pub(crate) fn remove(&mut self, ids: &BTreeSet<usize>) {
        for p in &mut self.pathways {
            p.neurons.retain(|n| !ids.contains(&n.id));
            for n in &mut p.neurons {
                n.reuse.retain(|(id, _)| !ids.contains(id));
            }
        }
        for ro in self.readouts.values_mut() {
            ro.weights.retain(|(id, _)| !ids.contains(id));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn readout_learns_a_separable_pair() {
        let mut ro = Readout {
            task: 0,
            labels: vec![3, 7],
            weights: vec![(0, vec![0.0; 2]), (1, vec![0.0; 2])],
            bias: vec![0.0; 2],
        };
        let a: BTreeMap<usize, f64> = [(0, 1.0), (1, 0.0)].into();
        let b: BTreeMap<usize, f64> = [(0, 0.0), (1, 1.0)].into();
        for _ in 0..200 {
            ro.sgd(&a, 3, 0.1);
            ro.sgd(&b, 7, 0.1);
        }
        assert_eq!(ro.predict(&a), 3);
        assert_eq!(ro.predict(&b), 7);
    }

    #[test]
    fn presentation_counts_match_spikes() {
        let mut rng = substream(1, "t", 0);
        let x = Presentation::poisson(&[100.0, 0.0, 500.0], 200, &mut rng);
        let n: usize = x.spikes.iter().map(Vec::len).sum();
        assert_eq!(n as f64, x.counts.iter().sum::<f64>());
        assert_eq!(x.counts[1], 0.0);
    }
}
