//! Cerebellar delay-conditioning circuit.
//!
//! Populations: PN (one block per conditioned stimulus), GC (granule block per
//! stimulus), PU (tonically active, inhibits IPN), IPN (output), IO (tonically
//! active olive, driven by the unconditioned stimulus and inhibited by IPN).
//! IO excites IPN directly (the reflex). Climbing fibers (IO to PU) are not
//! simulated synapses; their spike counts act as the teaching signal.
//!
//! After every trial the plastic weights change from spike counts. The
//! teaching signal `e` is the olive count around the US minus its tonic
//! expectation, averaged over the olive and ignored inside `cf_deadband`.
//! GC to PU follows `dw = -eta * gc * e`, so a climbing-fiber burst depresses
//! and a below-tonic olive (the IPN response predicting the US) potentiates.
//! Potentiation lands in a labile component that decays during rest; a
//! clearly unpredicted US removes the labile part `labile_reversal_gain`
//! times faster than it depresses the stable weight. The GC to PU weights are
//! net drive (parallel fibers minus feedforward interneuron inhibition), so
//! they are signed. PN to IPN potentiates with the PU pause while the US is
//! still unpredicted and depresses when the pause is shallow.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::derive_seed;
use crate::snn::{simulate, Inputs, Network, NeuronParams, PlasticityTag, SimConfig, SimRecord, Stimulus, WeightMatrix};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CircuitConfig {
    pub cs_count: usize,
    pub pn_per_cs: usize,
    pub gc_per_cs: usize,
    pub pu: usize,
    pub ipn: usize,
    pub io: usize,
    pub pn_rate_hz: f64,
    pub pn_to_gc: f64,
    pub pu_tonic: f64,
    /// Tonic drives of PU, IO and the IPN bias are spread linearly over `1 +- spread/2`
    /// so the populations do not fire in lockstep.
    pub tonic_spread: f64,
    pub pu_to_ipn: f64,
    pub ipn_bias: f64,
    pub io_tonic: f64,
    pub us_current: f64,
    pub us_duration: f64,
    pub ipn_to_io: f64,
    pub io_to_ipn: f64,
    pub gc_pu_bound: f64,
    pub pn_ipn_init: f64,
    pub pn_ipn_max: f64,
    /// Depression rate per unit climbing-fiber excess.
    pub eta_gc: f64,
    /// Potentiation rate per unit climbing-fiber deficit.
    pub eta_gc_ltp: f64,
    /// Depression removes labile potentiation this many times faster than it
    /// depresses the stable weight.
    pub labile_reversal_gain: f64,
    /// Mean olive error (spikes per neuron) needed for the fast reversal.
    pub reversal_min_error: f64,
    pub eta_pn: f64,
    /// PN to IPN depression rate per unit of pause below `pn_ltd_gate`.
    pub eta_pn_ltd: f64,
    /// Relative PU pause below which PN to IPN depresses.
    pub pn_ltd_gate: f64,
    /// Mean olive excess (spikes per neuron) at which PN to IPN learns at
    /// its full rate.
    pub pn_surprise_scale: f64,
    /// Labile potentiation decays with this time constant during rest, ms.
    pub labile_tau: f64,
    pub pre_cs: f64,
    pub post_us: f64,
    /// GC activity counts toward plasticity from this long before US onset, ms.
    pub plasticity_window: f64,
    /// Olive activity is compared with its tonic count over
    /// `[us_onset - cf_lead, us_end + cf_tail)`.
    pub cf_lead: f64,
    pub cf_tail: f64,
    /// Mean olive error (spikes per neuron) below which GC to PU does not
    /// change.
    pub cf_deadband: f64,
    /// CR window starts this long after CS onset (at most half the ISI).
    pub cr_skip: f64,
    /// IPN rate (Hz) that counts as a full CR.
    pub cr_ref_hz: f64,
    /// Cumulative IPN spikes after CS onset that mark CR onset.
    pub cr_onset_spikes: usize,
}

impl Default for CircuitConfig {
    fn default() -> Self {
        Self {
            cs_count: 4,
            pn_per_cs: 10,
            gc_per_cs: 20,
            pu: 10,
            ipn: 10,
            io: 10,
            pn_rate_hz: 100.0,
            pn_to_gc: 0.25,
            pu_tonic: 1.2,
            tonic_spread: 0.3,
            pu_to_ipn: -0.3,
            ipn_bias: 0.6,
            io_tonic: 1.25,
            us_current: 5.0,
            us_duration: 20.0,
            ipn_to_io: -0.4,
            io_to_ipn: 0.1,
            gc_pu_bound: 0.15,
            pn_ipn_init: 0.01,
            pn_ipn_max: 0.05,
            eta_gc: 0.0008,
            eta_gc_ltp: 0.0015,
            labile_reversal_gain: 8.0,
            reversal_min_error: 1.0,
            eta_pn: 0.006,
            eta_pn_ltd: 0.012,
            pn_ltd_gate: 0.4,
            pn_surprise_scale: 2.0,
            labile_tau: 3_600_000.0,
            pre_cs: 100.0,
            post_us: 50.0,
            plasticity_window: 200.0,
            cf_lead: 50.0,
            cf_tail: 10.0,
            cf_deadband: 0.3,
            cr_skip: 50.0,
            cr_ref_hz: 16.0,
            cr_onset_spikes: 3,
        }
    }
}

impl CircuitConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("cs_count", self.cs_count),
            ("pn_per_cs", self.pn_per_cs),
            ("gc_per_cs", self.gc_per_cs),
            ("pu", self.pu),
            ("ipn", self.ipn),
            ("io", self.io),
        ] {
            if v == 0 {
                return Err(Error::param(name, "must be positive"));
            }
        }
        if self.pu != self.io {
            return Err(Error::param("io", "one climbing fiber per Purkinje cell: io must equal pu"));
        }
        if self.pu_to_ipn > 0.0 || self.ipn_to_io > 0.0 {
            return Err(Error::param("pu_to_ipn", "PU to IPN and IPN to IO must be inhibitory"));
        }
        if !(self.cr_ref_hz > 0.0 && self.pn_surprise_scale > 0.0 && self.labile_tau > 0.0 && self.us_duration > 0.0) {
            return Err(Error::param("cr_ref_hz", "cr_ref_hz, labile_tau and us_duration must be positive"));
        }
        if !(0.0..=self.pn_ipn_max).contains(&self.pn_ipn_init) {
            return Err(Error::param("pn_ipn_init", "must lie in [0, pn_ipn_max]"));
        }
        Ok(())
    }
}

/// Stimuli of one trial. `cs` lists stimulus identities presented together.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialSpec {
    pub cs: Vec<usize>,
    pub us: bool,
    /// CS onset to US onset, ms. The CS stays on until the US (or its
    /// expected time) ends.
    pub isi: f64,
}

impl TrialSpec {
    pub fn new(cs: Vec<usize>, us: bool, isi: f64) -> Self {
        Self { cs, us, isi }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialOutcome {
    pub cr: f64,
    pub ipn_cs_rate_hz: f64,
    pub pu_cs_rate_hz: f64,
    /// Mean climbing-fiber count minus its tonic expectation.
    pub cf_error: f64,
    /// IPN spikes during the US and shortly after.
    pub ur_spikes: usize,
    /// ms from CS onset to CR onset.
    pub cr_latency: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditioningCircuit {
    pub config: CircuitConfig,
    network: Network,
    /// Labile part of GC to PU weights.
    labile: WeightMatrix,
    /// Per IO neuron.
    io_tonic_hz: Vec<f64>,
    pu_tonic_hz: f64,
    seed: u64,
    trials_run: u64,
}

const PN: &str = "PN";
const GC: &str = "GC";
const PU: &str = "PU";
const IPN: &str = "IPN";
const IO: &str = "IO";

impl ConditioningCircuit {
    pub fn new(config: CircuitConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let c = &config;
        let mut net = Network::new();
        let lif = NeuronParams::default();
        net.add_population(PN, c.cs_count * c.pn_per_cs, lif)?;
        net.add_population(GC, c.cs_count * c.gc_per_cs, lif)?;
        net.add_population(PU, c.pu, lif)?;
        net.add_population(IPN, c.ipn, lif)?;
        net.add_population(IO, c.io, lif)?;
        let pn_gc = WeightMatrix::from_fn(c.cs_count * c.pn_per_cs, c.cs_count * c.gc_per_cs, |i, j| {
            if i / c.pn_per_cs == j / c.gc_per_cs {
                c.pn_to_gc
            } else {
                0.0
            }
        });
        net.connect(PN, GC, pn_gc, 1.0, PlasticityTag::Fixed)?;
        net.connect(GC, PU, WeightMatrix::zeros(c.cs_count * c.gc_per_cs, c.pu), 1.0, PlasticityTag::Stdp)?;
        net.connect(PU, IPN, WeightMatrix::filled(c.pu, c.ipn, c.pu_to_ipn), 1.0, PlasticityTag::Fixed)?;
        net.connect(
            PN,
            IPN,
            WeightMatrix::filled(c.cs_count * c.pn_per_cs, c.ipn, c.pn_ipn_init),
            1.0,
            PlasticityTag::Hebbian,
        )?;
        net.connect(IPN, IO, WeightMatrix::filled(c.ipn, c.io, c.ipn_to_io), 1.0, PlasticityTag::Fixed)?;
        net.connect(IO, IPN, WeightMatrix::filled(c.io, c.ipn, c.io_to_ipn), 1.0, PlasticityTag::Fixed)?;
        let mut circuit = Self {
            labile: WeightMatrix::zeros(c.cs_count * c.gc_per_cs, c.pu),
            config,
            network: net,
            io_tonic_hz: Vec::new(),
            pu_tonic_hz: 0.0,
            seed,
            trials_run: 0,
        };
        circuit.calibrate()?;
        Ok(circuit)
    }

    /// Tonic rates of IO and PU with no stimulus at all.
    fn calibrate(&mut self) -> Result<()> {
        let settle = 100.0;
        let span = 2000.0;
        let rec = simulate(&self.network, &self.tonic_inputs(), &SimConfig::new(settle + span, self.seed))?;
        let rate = |pop: &str, n: usize| {
            rec.train(pop).map_or(0.0, |t| t.count_in(settle, settle + span) as f64) / n as f64 / span * 1000.0
        };
        self.io_tonic_hz = rec
            .train(IO)
            .map(|t| t.counts_in(settle, settle + span))
            .unwrap_or_default()
            .into_iter()
            .map(|n| n as f64 / span * 1000.0)
            .collect();
        self.pu_tonic_hz = rate(PU, self.config.pu);
        if self.pu_tonic_hz <= 0.0 {
            return Err(Error::Degenerate("Purkinje layer is silent at rest".into()));
        }
        Ok(())
    }

    fn tonic_inputs(&self) -> Inputs {
        let c = &self.config;
        let spread = |base: f64, n: usize| -> Vec<f64> {
            (0..n)
                .map(|i| {
                    let f = if n > 1 { i as f64 / (n - 1) as f64 - 0.5 } else { 0.0 };
                    base * (1.0 + c.tonic_spread * f)
                })
                .collect()
        };
        Inputs::new()
            .with(PU, Stimulus::constant(spread(c.pu_tonic, c.pu)))
            .with(IPN, Stimulus::constant(spread(c.ipn_bias, c.ipn)))
            .with(IO, Stimulus::constant(spread(c.io_tonic, c.io)))
    }

    pub fn network(&self) -> &Network {
        &self.network
    }

    pub fn io_tonic_hz(&self) -> &[f64] {
        &self.io_tonic_hz
    }

    pub fn pu_tonic_hz(&self) -> f64 {
        self.pu_tonic_hz
    }

    pub fn trials_run(&self) -> u64 {
        self.trials_run
    }

    /// Net GC to PU weights, stable plus labile.
    pub fn gc_pu(&self) -> WeightMatrix {
        let mut w = self.network.weights(GC, PU).expect("GC to PU exists").clone();
        for (a, b) in w.as_mut_slice().iter_mut().zip(self.labile.as_slice()) {
            *a += b;
        }
        w
    }

    pub fn pn_ipn(&self) -> &WeightMatrix {
        self.network.weights(PN, IPN).expect("PN to IPN exists")
    }

    /// Let the labile component decay for `ms`.
    pub fn rest(&mut self, ms: f64) -> Result<()> {
        if !(ms >= 0.0) {
            return Err(Error::param("rest", "duration must be >= 0"));
        }
        let k = (-ms / self.config.labile_tau).exp();
        self.labile.as_mut_slice().iter_mut().for_each(|w| *w *= k);
        Ok(())
    }

    /// Run one trial with learning.
    pub fn trial(&mut self, spec: &TrialSpec) -> Result<TrialOutcome> {
        self.run(spec, true)
    }

    /// Run one trial without changing any weight.
    pub fn probe(&mut self, spec: &TrialSpec) -> Result<TrialOutcome> {
        self.run(spec, false)
    }

    fn run(&mut self, spec: &TrialSpec, learn: bool) -> Result<TrialOutcome> {
        let c = self.config.clone();
        if !(spec.isi >= 0.0) || !spec.isi.is_finite() {
            return Err(Error::param("isi", "must be finite and >= 0"));
        }
        if let Some(&bad) = spec.cs.iter().find(|&&k| k >= c.cs_count) {
            return Err(Error::param("cs", format!("stimulus {bad} outside 0..{}", c.cs_count)));
        }
        let cs_on = c.pre_cs;
        let us_on = cs_on + spec.isi;
        let us_off = us_on + c.us_duration;
        let duration = us_off + c.post_us;

        // effective GC to PU weights for the simulation
        let stable = self.network.weights(GC, PU).expect("GC to PU").clone();
        let effective = self.gc_pu();
        *self.network.weights_mut(GC, PU).expect("GC to PU") = effective;

        let mut inputs = self.tonic_inputs();
        if !spec.cs.is_empty() {
            let mut rates = vec![0.0; c.cs_count * c.pn_per_cs];
            for &k in &spec.cs {
                rates[k * c.pn_per_cs..(k + 1) * c.pn_per_cs].fill(c.pn_rate_hz);
            }
            inputs.add(
                PN,
                Stimulus::Poisson {
                    rates_hz: rates,
                    weight: 2.0,
                    start: cs_on,
                    stop: us_off,
                },
            );
        }
        if spec.us {
            inputs.add(
                IO,
                Stimulus::Current {
                    amplitude: vec![c.us_current; c.io],
                    start: us_on,
                    stop: us_off,
                },
            );
        }
        let sim_seed = derive_seed(self.seed, "conditioning_trial", self.trials_run);
        self.trials_run += 1;
        let rec = simulate(&self.network, &inputs, &SimConfig::new(duration, sim_seed));
        *self.network.weights_mut(GC, PU).expect("GC to PU") = stable;
        let rec = rec?;
        let outcome = self.outcome(&rec, spec, cs_on, us_on, us_off);
        if learn {
            self.learn(&rec, spec, cs_on, us_on, us_off);
        }
        Ok(outcome)
    }

    fn outcome(&self, rec: &SimRecord, spec: &TrialSpec, cs_on: f64, us_on: f64, us_off: f64) -> TrialOutcome {
        let c = &self.config;
        let rate = |pop: &str, n: usize, a: f64, b: f64| {
            if b <= a {
                0.0
            } else {
                rec.train(pop).map_or(0, |t| t.count_in(a, b)) as f64 / n as f64 / (b - a) * 1000.0
            }
        };
        let cr_start = cs_on + c.cr_skip.min(spec.isi / 2.0);
        let has_cs = !spec.cs.is_empty();
        let ipn_cs = if has_cs { rate(IPN, c.ipn, cr_start, us_on) } else { 0.0 };
        let pu_cs = rate(PU, c.pu, cs_on, us_on);
        let ipn = rec.train(IPN).expect("IPN recorded");
        let cr_latency = if has_cs {
            let mut seen = 0;
            ipn.events()
                .iter()
                .filter(|s| s.0 >= cs_on && s.0 < us_on)
                .find_map(|s| {
                    seen += 1;
                    (seen >= c.cr_onset_spikes).then_some(s.0 - cs_on)
                })
        } else {
            None
        };
        TrialOutcome {
            cr: (ipn_cs / c.cr_ref_hz).clamp(0.0, 1.0),
            ipn_cs_rate_hz: ipn_cs,
            pu_cs_rate_hz: pu_cs,
            cf_error: self.cf_error(rec, us_on, us_off).iter().sum::<f64>() / c.io as f64,
            ur_spikes: ipn.count_in(us_on, us_off + 20.0),
            cr_latency,
        }
    }

    fn cf_error(&self, rec: &SimRecord, us_on: f64, us_off: f64) -> Vec<f64> {
        let c = &self.config;
        let a = (us_on - c.cf_lead).max(0.0);
        let b = us_off + c.cf_tail;
        rec.train(IO)
            .expect("IO recorded")
            .counts_in(a, b)
            .into_iter()
            .zip(&self.io_tonic_hz)
            .map(|(n, hz)| n as f64 - hz * (b - a) / 1000.0)
            .collect()
    }

    fn learn(&mut self, rec: &SimRecord, spec: &TrialSpec, cs_on: f64, us_on: f64, us_off: f64) {
        let c = self.config.clone();
        if spec.cs.is_empty() {
            return;
        }
        // GC to PU: climbing-fiber error times granule activity near the US
        let a = (us_on - c.plasticity_window).max(cs_on);
        let gc = rec.train(GC).expect("GC recorded").counts_in(a, us_off);
        let gc_norm = 0.1 * (us_off - a).max(1.0);
        let cf = self.cf_error(rec, us_on, us_off);
        let cf_mean = cf.iter().sum::<f64>() / cf.len() as f64;
        let e = if cf_mean.abs() < c.cf_deadband { 0.0 } else { cf_mean };
        let b = c.gc_pu_bound;
        let mut stable = self.network.weights(GC, PU).expect("GC to PU").clone();
        for (g, &n) in gc.iter().enumerate() {
            if n == 0 {
                continue;
            }
            for p in 0..c.pu {
                let x = n as f64 / gc_norm;
                let (s, l) = (stable.get(g, p), self.labile.get(g, p));
                let (s, l) = if e < 0.0 {
                    (s, l - c.eta_gc_ltp * x * e)
                } else {
                    // depression eats the labile part first, and faster when
                    // the US is clearly unpredicted
                    let dw = c.eta_gc * x * e;
                    let gain = if e >= c.reversal_min_error { c.labile_reversal_gain } else { 1.0 };
                    let from_l = (dw * gain).min(l.max(0.0));
                    let rest = dw - from_l / gain;
                    (s - rest, l - from_l)
                };
                let s = s.clamp(-b, b);
                let l = l.clamp(-b - s, b - s);
                stable.set(g, p, s);
                self.labile.set(g, p, l);
            }
        }
        *self.network.weights_mut(GC, PU).expect("GC to PU") = stable;

        // PN to IPN: a PU pause potentiates while the olive still fires above
        // tonic (US not yet predicted); a pause shallower than the gate depresses
        let surprise = ((cf_mean - c.cf_deadband) / c.pn_surprise_scale).clamp(0.0, 1.0);
        if us_on > cs_on && self.pu_tonic_hz > 0.0 {
            let pu = rec.train(PU).expect("PU recorded").count_in(cs_on, us_on) as f64;
            let pu_rate = pu / c.pu as f64 / (us_on - cs_on) * 1000.0;
            let pause = 1.0 - pu_rate / self.pu_tonic_hz;
            let drive = if pause > c.pn_ltd_gate {
                c.eta_pn * surprise * pause
            } else {
                c.eta_pn_ltd * (pause - c.pn_ltd_gate)
            };
            if drive != 0.0 {
                let pn = rec.train(PN).expect("PN recorded").counts_in(cs_on, us_on);
                let pn_norm = c.pn_rate_hz / 1000.0 * (us_on - cs_on);
                let w = self.network.weights_mut(PN, IPN).expect("PN to IPN");
                for (i, &n) in pn.iter().enumerate() {
                    if n == 0 {
                        continue;
                    }
                    for v in w.row_mut(i) {
                        *v = (*v + drive * n as f64 / pn_norm).clamp(0.0, c.pn_ipn_max);
                    }
                }
            }
        }
    }
}

/// One trial with stimulus 0 as the CS; returns the CR strength.
pub fn conditioning_trial(circuit: &mut ConditioningCircuit, cs: bool, us: bool, interval: f64) -> Result<f64> {
    let spec = TrialSpec::new(if cs { vec![0] } else { vec![] }, us, interval);
    Ok(circuit.trial(&spec)?.cr)
}
