//! Synchronous clock-driven simulation.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::network::{Network, WeightMatrix};
use super::neuron::{lif_step_unchecked, NeuronState};
use super::spikes::{Spike, SpikeTrain};
use crate::error::{Error, Result};
use crate::rng;

/// External drive for one population.
#[derive(Debug, Clone, PartialEq)]
pub enum Stimulus {
    /// Forced spikes: the neuron fires at the step containing each event,
    /// whatever its membrane state.
    Spikes(SpikeTrain),
    /// Per-neuron current injected during `[start, stop)`.
    Current {
        amplitude: Vec<f64>,
        start: f64,
        stop: f64,
    },
    /// Seeded Poisson kicks: each event adds `weight` to the membrane.
    Poisson {
        rates_hz: Vec<f64>,
        weight: f64,
        start: f64,
        stop: f64,
    },
}

impl Stimulus {
    /// Constant current over the whole run.
    pub fn constant(amplitude: Vec<f64>) -> Self {
        Stimulus::Current {
            amplitude,
            start: 0.0,
            stop: f64::INFINITY,
        }
    }

    fn width(&self) -> usize {
        match self {
            Stimulus::Spikes(t) => t.neuron_count(),
            Stimulus::Current { amplitude, .. } => amplitude.len(),
            Stimulus::Poisson { rates_hz, .. } => rates_hz.len(),
        }
    }
}

/// Stimuli keyed by population name; several may target one population.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Inputs {
    entries: Vec<(String, Stimulus)>,
}

impl Inputs {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, population: &str, stimulus: Stimulus) -> Self {
        self.add(population, stimulus);
        self
    }

    pub fn add(&mut self, population: &str, stimulus: Stimulus) {
        self.entries.push((population.to_string(), stimulus));
    }

    pub fn entries(&self) -> &[(String, Stimulus)] {
        &self.entries
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    /// ms
    pub duration: f64,
    /// ms, default 1
    pub dt: f64,
    pub seed: u64,
    /// Sample membrane potentials every this many steps; `None` disables traces.
    pub trace_stride: Option<usize>,
}

impl SimConfig {
    pub fn new(duration: f64, seed: u64) -> Self {
        Self {
            duration,
            dt: 1.0,
            seed,
            trace_stride: None,
        }
    }

    pub fn with_dt(mut self, dt: f64) -> Self {
        self.dt = dt;
        self
    }

    pub fn with_traces(mut self, stride: usize) -> Self {
        self.trace_stride = Some(stride.max(1));
        self
    }

    pub fn steps(&self) -> usize {
        (self.duration / self.dt - 1e-9).ceil() as usize
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightSnapshot {
    pub epoch: usize,
    pub source: String,
    pub target: String,
    pub weights: WeightMatrix,
}

/// Output of [`simulate`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimRecord {
    pub duration: f64,
    pub dt: f64,
    pub spikes: BTreeMap<String, SpikeTrain>,
    /// Per population: one row of membrane potentials per sampled step.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub traces: BTreeMap<String, Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub weight_snapshots: Vec<WeightSnapshot>,
}

impl SimRecord {
    pub fn train(&self, population: &str) -> Option<&SpikeTrain> {
        self.spikes.get(population)
    }

    /// Spike count of a population, or 0 if it is unknown.
    pub fn count(&self, population: &str) -> usize {
        self.spikes.get(population).map_or(0, SpikeTrain::len)
    }

    /// For each step, the indices that fired.
    pub fn spike_steps(&self, population: &str) -> Vec<Vec<usize>> {
        let steps = (self.duration / self.dt - 1e-9).ceil() as usize;
        let mut out = vec![Vec::new(); steps];
        if let Some(train) = self.spikes.get(population) {
            for s in train.events() {
                let k = ((s.0 / self.dt) + 1e-9).floor() as usize;
                if k < steps {
                    out[k].push(s.1);
                }
            }
        }
        out
    }
}

struct Compiled {
    offset: Vec<usize>,
    total: usize,
    // (src_pop, tgt_pop, delay_steps, projection index)
    edges: Vec<(usize, usize, usize, usize)>,
    max_delay: usize,
}

fn compile(net: &Network, dt: f64) -> Compiled {
    let mut offset = Vec::with_capacity(net.populations().len());
    let mut total = 0;
    for p in net.populations() {
        offset.push(total);
        total += p.size;
    }
    let mut edges = Vec::new();
    let mut max_delay = 1;
    for (k, proj) in net.projections().iter().enumerate() {
        let s = net.population_index(&proj.source).expect("validated");
        let t = net.population_index(&proj.target).expect("validated");
        let d = ((proj.delay / dt) - 1e-9).ceil().max(1.0) as usize;
        max_delay = max_delay.max(d);
        edges.push((s, t, d, k));
    }
    Compiled {
        offset,
        total,
        edges,
        max_delay,
    }
}

/// Run `network` under `inputs` from rest.
///
/// Each step of length `dt`: pending synaptic input is added to the membrane,
/// the neuron is integrated under its injected current, forced spikes are
/// applied, and every spike is queued for delivery `ceil(delay / dt)` steps
/// later (at least one). Spikes are stamped with the start time of the step
/// in which they occur. Output is bit-identical for identical arguments.
pub fn simulate(network: &Network, inputs: &Inputs, cfg: &SimConfig) -> Result<SimRecord> {
    if !(cfg.duration > 0.0) || !cfg.duration.is_finite() {
        return Err(Error::param("duration", "must be > 0"));
    }
    if !(cfg.dt > 0.0) || !cfg.dt.is_finite() {
        return Err(Error::param("dt", "must be > 0"));
    }
    let c = compile(network, cfg.dt);
    let steps = cfg.steps();
    let dt = cfg.dt;
    let pops = network.populations();

    // Resolve stimuli to flat neuron indices.
    let mut currents: Vec<(usize, &[f64], usize, usize)> = Vec::new();
    let mut forced: Vec<Vec<usize>> = vec![Vec::new(); steps];
    let mut poisson: Vec<(usize, &[f64], f64, usize, usize, rng::SimRng)> = Vec::new();
    for (k, (name, stim)) in inputs.entries().iter().enumerate() {
        let p = network
            .population_index(name)
            .ok_or_else(|| Error::UnknownPopulation(name.clone()))?;
        if stim.width() != pops[p].size {
            return Err(Error::ShapeMismatch(format!(
                "stimulus for `{name}` has width {}, population has {}",
                stim.width(),
                pops[p].size
            )));
        }
        let to_step = |t: f64| -> usize {
            if t.is_infinite() {
                steps
            } else {
                (((t / dt) - 1e-9).ceil().max(0.0) as usize).min(steps)
            }
        };
        match stim {
            Stimulus::Spikes(train) => {
                for s in train.events() {
                    let step = ((s.0 / dt) + 1e-9).floor() as usize;
                    if step < steps {
                        forced[step].push(c.offset[p] + s.1);
                    }
                }
            }
            Stimulus::Current {
                amplitude,
                start,
                stop,
            } => {
                if amplitude.iter().any(|a| !a.is_finite()) {
                    return Err(Error::NonFinite(format!("current into `{name}`")));
                }
                currents.push((c.offset[p], amplitude, to_step(*start), to_step(*stop)));
            }
            Stimulus::Poisson {
                rates_hz,
                weight,
                start,
                stop,
            } => {
                if rates_hz.iter().any(|r| !(*r >= 0.0) || !r.is_finite()) || !weight.is_finite() {
                    return Err(Error::param("poisson", "rates must be finite and >= 0"));
                }
                poisson.push((
                    c.offset[p],
                    rates_hz,
                    *weight,
                    to_step(*start),
                    to_step(*stop),
                    rng::substream(cfg.seed, "simulate.poisson", k as u64),
                ));
            }
        }
    }

    let mut pop_of = vec![0usize; c.total];
    for (p, pop) in pops.iter().enumerate() {
        for i in 0..pop.size {
            pop_of[c.offset[p] + i] = p;
        }
    }
    let mut states: Vec<NeuronState> = (0..c.total)
        .map(|i| NeuronState::at_rest(&pops[pop_of[i]].params))
        .collect();
    let ring = c.max_delay + 1;
    let mut pending = vec![0.0f64; ring * c.total];
    let mut current = vec![0.0f64; c.total];
    let mut fired = vec![false; c.total];
    let mut events: Vec<Vec<Spike>> = vec![Vec::new(); pops.len()];
    let mut traces: Vec<Vec<Vec<f64>>> = vec![Vec::new(); pops.len()];

    // outgoing edges per source population
    let mut out_edges: Vec<Vec<(usize, usize, usize)>> = vec![Vec::new(); pops.len()];
    for &(s, t, d, k) in &c.edges {
        out_edges[s].push((t, d, k));
    }

    for n in 0..steps {
        let slot = n % ring;
        current.iter_mut().for_each(|x| *x = 0.0);
        for &(off, amp, start, stop) in &currents {
            if n >= start && n < stop {
                for (i, a) in amp.iter().enumerate() {
                    current[off + i] += a;
                }
            }
        }
        for (off, rates, w, start, stop, r) in poisson.iter_mut() {
            if n >= *start && n < *stop {
                for (i, rate) in rates.iter().enumerate() {
                    if *rate > 0.0 && r.random::<f64>() < rate * dt / 1000.0 {
                        pending[slot * c.total + *off + i] += *w;
                    }
                }
            }
        }
        for i in 0..c.total {
            let params = &pops[pop_of[i]].params;
            let mut s = states[i];
            let jump = std::mem::take(&mut pending[slot * c.total + i]);
            if s.refractory_remaining <= 0.0 {
                s.v += jump;
            }
            let (next, spiked) = lif_step_unchecked(s, params, current[i], dt);
            states[i] = next;
            fired[i] = spiked;
        }
        for &i in &forced[n] {
            if !fired[i] {
                fired[i] = true;
                let params = &pops[pop_of[i]].params;
                states[i].v = params.v_reset;
                states[i].refractory_remaining = params.t_refractory;
            }
        }
        let t = n as f64 * dt;
        for (p, pop) in pops.iter().enumerate() {
            let off = c.offset[p];
            for j in 0..pop.size {
                if !fired[off + j] {
                    continue;
                }
                events[p].push(Spike(t, j));
                for &(tp, d, k) in &out_edges[p] {
                    let row = network.projections()[k].weights.row(j);
                    let base = ((n + d) % ring) * c.total + c.offset[tp];
                    for (q, w) in row.iter().enumerate() {
                        pending[base + q] += w;
                    }
                }
            }
            if let Some(stride) = cfg.trace_stride {
                if n % stride == 0 {
                    traces[p].push(states[off..off + pop.size].iter().map(|s| s.v).collect());
                }
            }
        }
    }

    let mut spikes = BTreeMap::new();
    let mut trace_map = BTreeMap::new();
    for (p, pop) in pops.iter().enumerate() {
        let train = SpikeTrain::new(pop.size, cfg.duration, std::mem::take(&mut events[p]))?;
        spikes.insert(pop.name.clone(), train);
        if cfg.trace_stride.is_some() {
            trace_map.insert(pop.name.clone(), std::mem::take(&mut traces[p]));
        }
    }
    Ok(SimRecord {
        duration: cfg.duration,
        dt,
        spikes,
        traces: trace_map,
        weight_snapshots: Vec::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::snn::{NeuronParams, PlasticityTag};

    fn relay(weight: f64, delay: f64) -> Network {
        let mut n = Network::new();
        n.add_population("pre", 1, NeuronParams::default()).unwrap();
        n.add_population("post", 1, NeuronParams::default()).unwrap();
        n.connect("pre", "post", WeightMatrix::filled(1, 1, weight), delay, PlasticityTag::Fixed)
            .unwrap();
        n
    }

    #[test]
    fn empty_network_gives_empty_record() {
        let r = simulate(&Network::new(), &Inputs::new(), &SimConfig::new(10.0, 0)).unwrap();
        assert!(r.spikes.is_empty());
    }

    #[test]
    fn rejects_bad_duration_and_unknown_population() {
        let n = relay(2.0, 1.0);
        assert!(simulate(&n, &Inputs::new(), &SimConfig::new(0.0, 0)).is_err());
        let inputs = Inputs::new().with("nope", Stimulus::constant(vec![1.0]));
        assert!(matches!(
            simulate(&n, &inputs, &SimConfig::new(10.0, 0)),
            Err(Error::UnknownPopulation(_))
        ));
    }

    #[test]
    fn delayed_delivery_two_neuron_hand_simulation() {
        // Hand simulation: pre forced at t = 5; weight 2 arrives at step 5 + 3
        // and after one step of leak gives 2 e^{-0.1} = 1.81 >= 1, so post
        // fires in the arrival step: t = 8.
        let n = relay(2.0, 3.0);
        let pre = SpikeTrain::new(1, 20.0, vec![Spike(5.0, 0)]).unwrap();
        let inputs = Inputs::new().with("pre", Stimulus::Spikes(pre));
        let r = simulate(&n, &inputs, &SimConfig::new(20.0, 0)).unwrap();
        assert_eq!(r.train("pre").unwrap().times_of(0), vec![5.0]);
        assert_eq!(r.train("post").unwrap().times_of(0), vec![8.0]);

        // fractional delay rounds up; zero delay still takes one step
        let r = simulate(&relay(2.0, 2.2), &inputs, &SimConfig::new(20.0, 0)).unwrap();
        assert_eq!(r.train("post").unwrap().times_of(0), vec![8.0]);
        let r = simulate(&relay(2.0, 0.0), &inputs, &SimConfig::new(20.0, 0)).unwrap();
        assert_eq!(r.train("post").unwrap().times_of(0), vec![6.0]);
    }

    #[test]
    fn weak_synapse_stays_subthreshold() {
        let n = relay(0.5, 1.0);
        let pre = SpikeTrain::new(1, 20.0, vec![Spike(2.0, 0)]).unwrap();
        let r = simulate(&n, &Inputs::new().with("pre", Stimulus::Spikes(pre)), &SimConfig::new(20.0, 0))
            .unwrap();
        assert!(r.train("post").unwrap().is_empty());
    }

    #[test]
    fn rerun_is_identical() {
        let mut n = relay(0.6, 2.0);
        n.add_population("bg", 3, NeuronParams::default()).unwrap();
        n.connect("bg", "post", WeightMatrix::filled(3, 1, 0.3), 1.0, PlasticityTag::Fixed)
            .unwrap();
        let inputs = Inputs::new()
            .with(
                "bg",
                Stimulus::Poisson {
                    rates_hz: vec![200.0; 3],
                    weight: 0.6,
                    start: 0.0,
                    stop: f64::INFINITY,
                },
            )
            .with("pre", Stimulus::constant(vec![1.5]));
        let cfg = SimConfig::new(200.0, 11).with_traces(5);
        let a = simulate(&n, &inputs, &cfg).unwrap();
        let b = simulate(&n, &inputs, &cfg).unwrap();
        assert_eq!(a, b);
        assert!(a.count("post") > 0);
        assert_eq!(a.traces["post"].len(), 40);
        let c = simulate(&n, &inputs, &SimConfig::new(200.0, 12).with_traces(5)).unwrap();
        assert_ne!(a.train("bg"), c.train("bg"));
    }

    #[test]
    fn current_window_is_respected() {
        let mut n = Network::new();
        n.add_population("x", 1, NeuronParams::default()).unwrap();
        let inputs = Inputs::new().with(
            "x",
            Stimulus::Current {
                amplitude: vec![3.0],
                start: 50.0,
                stop: 60.0,
            },
        );
        let r = simulate(&n, &inputs, &SimConfig::new(100.0, 0)).unwrap();
        let times = r.train("x").unwrap().times_of(0);
        assert!(!times.is_empty());
        assert!(times.iter().all(|&t| (50.0..60.0).contains(&t)));
    }
}
