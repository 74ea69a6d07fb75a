//! Sequential synthetic tasks and the grow / train / prune / sleep pipeline.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::net::{ContinualNet, GrowthConfig, NetConfig, Presentation};
use crate::error::{Error, Result};
use crate::rng::{derive_seed, substream};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskSpec {
    pub id: usize,
    pub labels: Vec<usize>,
    pub pattern_seed: u64,
    /// Per class.
    pub n_train: usize,
    pub n_test: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DataConfig {
    pub n_tasks: usize,
    pub classes_per_task: usize,
    /// Inputs driven by a class prototype.
    pub active_per_class: usize,
    pub active_hz: f64,
    pub background_hz: f64,
    /// Chance a prototype input is silent in one sample.
    pub jitter_drop: f64,
    /// Chance a background input is driven in one sample.
    pub jitter_add: f64,
    pub train_per_class: usize,
    pub test_per_class: usize,
}

impl Default for DataConfig {
    fn default() -> Self {
        Self {
            n_tasks: 3,
            classes_per_task: 4,
            active_per_class: 12,
            active_hz: 60.0,
            background_hz: 4.0,
            jitter_drop: 0.2,
            jitter_add: 0.03,
            train_per_class: 50,
            test_per_class: 50,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SleepConfig {
    pub epochs: usize,
    pub replay_per_class: usize,
    pub target_rate_hz: f64,
    /// Exponent of the per-epoch rescaling toward the target.
    pub homeostasis_rate: f64,
    pub replay_lr: f64,
}

impl Default for SleepConfig {
    fn default() -> Self {
        Self {
            epochs: 12,
            replay_per_class: 40,
            target_rate_hz: 15.0,
            homeostasis_rate: 0.25,
            replay_lr: 0.2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ContinualConfig {
    pub net: NetConfig,
    pub growth: GrowthConfig,
    pub data: DataConfig,
    pub sleep: SleepConfig,
    pub hidden_epochs: usize,
    pub readout_epochs: usize,
    /// Presentations per training sample when fitting a readout.
    pub readout_presentations: usize,
}

impl Default for ContinualConfig {
    fn default() -> Self {
        Self {
            net: NetConfig::default(),
            growth: GrowthConfig::default(),
            data: DataConfig::default(),
            sleep: SleepConfig::default(),
            hidden_epochs: 8,
            readout_epochs: 20,
            readout_presentations: 2,
        }
    }
}

impl ContinualConfig {
    pub fn validate(&self) -> Result<()> {
        self.net.validate()?;
        self.growth.validate()?;
        let d = &self.data;
        if d.n_tasks == 0 || d.classes_per_task < 2 || d.train_per_class == 0 || d.test_per_class == 0 {
            return Err(Error::param("data", "need tasks, >= 2 classes and non-empty splits"));
        }
        if d.active_per_class == 0 || d.active_per_class > self.net.n_inputs {
            return Err(Error::param("active_per_class", "must be in 1..=n_inputs"));
        }
        if !(d.active_hz > 0.0 && d.background_hz >= 0.0) {
            return Err(Error::param("active_hz", "rates must be non-negative"));
        }
        if !((0.0..=1.0).contains(&d.jitter_drop) && (0.0..=1.0).contains(&d.jitter_add)) {
            return Err(Error::param("jitter_drop", "jitter must be a probability"));
        }
        if !(self.sleep.target_rate_hz > 0.0 && self.sleep.homeostasis_rate >= 0.0 && self.sleep.replay_lr >= 0.0) {
            return Err(Error::param("sleep", "target rate > 0 and non-negative rates required"));
        }
        if self.readout_presentations == 0 {
            return Err(Error::param("readout_presentations", "must be >= 1"));
        }
        Ok(())
    }
}

/// The sequential benchmark: disjoint label blocks, one seed per task.
pub fn benchmark_tasks(data: &DataConfig, seed: u64) -> Vec<TaskSpec> {
    (0..data.n_tasks)
        .map(|t| TaskSpec {
            id: t,
            labels: (t * data.classes_per_task..(t + 1) * data.classes_per_task).collect(),
            pattern_seed: derive_seed(seed, "continual.task", t as u64),
            n_train: data.train_per_class,
            n_test: data.test_per_class,
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct TaskData {
    pub spec: TaskSpec,
    /// (per-input rates in Hz, label)
    pub train: Vec<(Vec<f64>, usize)>,
    /// Fixed presentations, so repeated evaluations see the same spikes.
    pub test: Vec<(Presentation, usize)>,
}

impl TaskData {
    pub fn generate(spec: &TaskSpec, cfg: &ContinualConfig) -> Result<Self> {
        let d = &cfg.data;
        let n = cfg.net.n_inputs;
        let all: Vec<usize> = (0..n).collect();
        let protos: Vec<BTreeSet<usize>> = (0..spec.labels.len())
            .map(|c| {
                let mut rng = substream(spec.pattern_seed, "continual.proto", c as u64);
                all.choose_multiple(&mut rng, d.active_per_class).copied().collect()
            })
            .collect();
        let sample = |c: usize, rng: &mut crate::rng::SimRng| -> Vec<f64> {
            (0..n)
                .map(|i| {
                    let on = if protos[c].contains(&i) {
                        rng.random::<f64>() >= d.jitter_drop
                    } else {
                        rng.random::<f64>() < d.jitter_add
                    };
                    if on {
                        d.active_hz
                    } else {
                        d.background_hz
                    }
                })
                .collect()
        };
        let steps = cfg.net.steps();
        let mut train = Vec::new();
        let mut test = Vec::new();
        for (c, &label) in spec.labels.iter().enumerate() {
            for k in 0..spec.n_train {
                let mut rng = substream(spec.pattern_seed, "continual.train", (c * spec.n_train + k) as u64);
                train.push((sample(c, &mut rng), label));
            }
            for k in 0..spec.n_test {
                let mut rng = substream(spec.pattern_seed, "continual.test", (c * spec.n_test + k) as u64);
                let rates = sample(c, &mut rng);
                test.push((Presentation::poisson(&rates, steps, &mut rng), label));
            }
        }
        Ok(Self {
            spec: spec.clone(),
            train,
            test,
        })
    }
}

/// Grow a fresh pathway and readout for an unseen task.
pub fn grow_for_task(net: &mut ContinualNet, task: &TaskSpec, cfg: &GrowthConfig, seed: u64) -> Result<()> {
    cfg.validate()?;
    net.add_pathway(task.id, &task.labels, cfg.neurons_per_task, cfg, seed)
}

/// Per-epoch mean output rate (Hz) of every neuron after lateral
/// inhibition, by id.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ActivityLog {
    pub epochs: Vec<BTreeMap<usize, f64>>,
}

/// Train hidden weights of every pathway on the task, then the task's
/// readout on frozen features. Returns the hidden-phase activity log.
pub fn train_task(net: &mut ContinualNet, data: &TaskData, cfg: &ContinualConfig, seed: u64) -> Result<ActivityLog> {
    let task = data.spec.id;
    if !net.readouts.contains_key(&task) {
        return Err(Error::Unknown {
            kind: "task",
            name: task.to_string(),
            registered: net.tasks().iter().map(|t| t.to_string()).collect::<Vec<_>>().join(", "),
        });
    }
    let steps = net.config.steps();
    let secs = net.config.window_ms / 1000.0;
    let mut log = ActivityLog::default();
    let mut order: Vec<usize> = (0..data.train.len()).collect();
    for epoch in 0..cfg.hidden_epochs {
        let tag = ((task as u64) << 32) | epoch as u64;
        order.shuffle(&mut substream(seed, "continual.order", tag));
        let mut spikes: BTreeMap<usize, usize> = net.neurons().map(|n| (n.id, 0)).collect();
        for &k in &order {
            let mut rng = substream(seed, "continual.hidden", (tag << 16) ^ k as u64);
            let x = Presentation::poisson(&data.train[k].0, steps, &mut rng);
            let r = net.respond(&x);
            for (id, c) in &r.features {
                *spikes.entry(*id).or_default() += *c as usize;
            }
            net.hebbian_step(&x, &r, net.config.hidden_lr);
        }
        let denom = order.len() as f64 * secs;
        log.epochs.push(spikes.into_iter().map(|(id, c)| (id, c as f64 / denom)).collect());
    }
    let mut feats = Vec::new();
    for (k, (rates, label)) in data.train.iter().enumerate() {
        for rep in 0..cfg.readout_presentations {
            let mut rng = substream(seed, "continual.readout", ((task as u64) << 40) ^ ((rep as u64) << 20) ^ k as u64);
            let x = Presentation::poisson(rates, steps, &mut rng);
            feats.push((net.readout_features(&net.respond(&x)), *label));
        }
    }
    let lr = net.config.readout_lr;
    let ro = net.readouts.get_mut(&task).expect("checked above");
    for epoch in 0..cfg.readout_epochs {
        let mut idx: Vec<usize> = (0..feats.len()).collect();
        idx.shuffle(&mut substream(seed, "continual.readout.order", ((task as u64) << 32) | epoch as u64));
        for i in idx {
            ro.sgd(&feats[i].0, feats[i].1, lr);
        }
    }
    Ok(log)
}

/// Percent correct on the task's fixed test presentations.
pub fn accuracy(net: &ContinualNet, data: &TaskData) -> Result<f64> {
    let mut ok = 0;
    for (x, label) in &data.test {
        ok += usize::from(net.predict(data.spec.id, x)? == *label);
    }
    Ok(100.0 * ok as f64 / data.test.len().max(1) as f64)
}

/// Hebbian co-activity of every input weight over a task's data.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ImportanceMap {
    /// Summed input-count x output-count products, per neuron id.
    pub coactivity: BTreeMap<usize, Vec<f64>>,
    pub samples: usize,
    pub scale: f64,
}

impl ImportanceMap {
    /// Co-activity per presentation, in importance units.
    pub fn importance(&self, id: usize) -> Option<Vec<f64>> {
        let n = self.samples.max(1) as f64 / self.scale;
        self.coactivity.get(&id).map(|v| v.iter().map(|c| c / n).collect())
    }
}

pub fn wake_importance(net: &ContinualNet, data: &TaskData, seed: u64) -> Result<ImportanceMap> {
    let steps = net.config.steps();
    let d = net.config.n_inputs;
    let mut map = ImportanceMap {
        coactivity: net.neurons().map(|n| (n.id, vec![0.0; d])).collect(),
        samples: 0,
        scale: net.config.importance_scale,
    };
    for (k, (rates, _)) in data.train.iter().enumerate() {
        let mut rng = substream(seed, "continual.wake", ((data.spec.id as u64) << 32) ^ k as u64);
        let x = Presentation::poisson(rates, steps, &mut rng);
        let r = net.respond(&x);
        for (id, &h) in r.features.iter().filter(|(_, h)| **h > 0.0) {
            let row = map.coactivity.get_mut(id).expect("every neuron has a row");
            row.iter_mut().zip(&x.counts).for_each(|(c, xi)| *c += xi * h);
        }
        map.samples += 1;
    }
    Ok(map)
}

/// Add a task's importance to the per-synapse totals.
pub fn apply_importance(net: &mut ContinualNet, map: &ImportanceMap) {
    for n in net.pathways.iter_mut().flat_map(|p| p.neurons.iter_mut()) {
        if let Some(imp) = map.importance(n.id) {
            n.importance.iter_mut().zip(imp).for_each(|(a, b)| *a += b);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PruneStats {
    pub considered: usize,
    pub pruned: Vec<usize>,
    /// Silent but kept because an old task relies on them.
    pub protected: usize,
}

/// Remove neurons silent below the rate threshold for the last
/// `prune_inactivity_epochs` epochs, sparing any with importance.
pub fn prune_inactive(net: &mut ContinualNet, log: &ActivityLog, cfg: &GrowthConfig) -> Result<PruneStats> {
    let k = cfg.prune_inactivity_epochs;
    if log.epochs.len() < k {
        return Err(Error::param(
            "activity_log",
            format!("covers {} epochs, pruning needs {k}", log.epochs.len()),
        ));
    }
    let window = &log.epochs[log.epochs.len() - k..];
    let mut stats = PruneStats {
        considered: net.size(),
        ..PruneStats::default()
    };
    let mut ids = BTreeSet::new();
    for n in net.neurons() {
        let silent = window
            .iter()
            .all(|e| e.get(&n.id).is_none_or(|&r| r < cfg.prune_rate_threshold));
        if !silent {
            continue;
        }
        if n.important() {
            stats.protected += 1;
        } else {
            ids.insert(n.id);
        }
    }
    net.remove(&ids);
    stats.pruned = ids.into_iter().collect();
    Ok(stats)
}

/// Class-mean input rates kept for replay.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub task: usize,
    pub label: usize,
    pub rates_hz: Vec<f64>,
}

pub fn snapshots(data: &TaskData) -> Vec<Snapshot> {
    data.spec
        .labels
        .iter()
        .map(|&label| {
            let rows: Vec<&Vec<f64>> = data.train.iter().filter(|(_, l)| *l == label).map(|(r, _)| r).collect();
            let n = rows.len().max(1) as f64;
            let d = rows.first().map_or(0, |r| r.len());
            let rates_hz = (0..d).map(|i| rows.iter().map(|r| r[i]).sum::<f64>() / n).collect();
            Snapshot {
                task: data.spec.id,
                label,
                rates_hz,
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SleepStats {
    /// Network mean rate (Hz) measured at the start of each epoch.
    pub mean_rate_hz: Vec<f64>,
}

/// Offline replay of stored class means. Each epoch first rescales every
/// gain by one factor toward the target rate, then refits the readouts of
/// the replayed tasks.
pub fn sleep_consolidate(
    net: &mut ContinualNet,
    store: &[Snapshot],
    epochs: usize,
    cfg: &SleepConfig,
    seed: u64,
) -> Result<SleepStats> {
    let mut stats = SleepStats::default();
    if epochs == 0 {
        return Ok(stats);
    }
    if store.is_empty() {
        return Err(Error::Empty("sleep needs at least one snapshot".into()));
    }
    for epoch in 0..epochs {
        let tag = derive_seed(seed, "continual.sleep.epoch", epoch as u64);
        let rate = replay_rate(net, store, cfg.replay_per_class, tag);
        stats.mean_rate_hz.push(rate);
        if rate > 0.0 {
            let factor = (cfg.target_rate_hz / rate).powf(cfg.homeostasis_rate);
            net.pathways
                .iter_mut()
                .flat_map(|p| p.neurons.iter_mut())
                .for_each(|n| n.gain *= factor);
        }
        let mut replays = Vec::new();
        for (s, snap) in store.iter().enumerate() {
            for k in 0..cfg.replay_per_class {
                let x = Presentation::poisson(
                    &snap.rates_hz,
                    net.config.steps(),
                    &mut substream(tag, "continual.sleep", ((s as u64) << 20) ^ k as u64),
                );
                replays.push((snap.task, net.readout_features(&net.respond(&x)), snap.label));
            }
        }
        replays.shuffle(&mut substream(tag, "continual.sleep.order", 0));
        for (task, f, label) in &replays {
            if let Some(ro) = net.readouts.get_mut(task) {
                ro.sgd(f, *label, cfg.replay_lr);
            }
        }
    }
    Ok(stats)
}

/// Network mean rate (Hz) under replay of the store, without learning.
pub fn replay_rate(net: &ContinualNet, store: &[Snapshot], per_class: usize, seed: u64) -> f64 {
    let steps = net.config.steps();
    let mut spikes = 0usize;
    let mut n = 0usize;
    for (s, snap) in store.iter().enumerate() {
        for k in 0..per_class {
            let x = Presentation::poisson(&snap.rates_hz, steps, &mut substream(seed, "continual.rate", ((s as u64) << 20) ^ k as u64));
            spikes += net.respond(&x).raw.values().sum::<usize>();
            n += 1;
        }
    }
    spikes as f64 / (n.max(1) as f64 * net.size().max(1) as f64 * net.config.window_ms / 1000.0)
}

/// Per-task accuracy after each training stage.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct AccuracyMatrix {
    /// `rows[i][j]`: accuracy on task `j` after training task `i`, `j <= i`.
    pub rows: Vec<Vec<f64>>,
}

impl AccuracyMatrix {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("after_task,eval_task,accuracy\n");
        for (i, row) in self.rows.iter().enumerate() {
            for (j, a) in row.iter().enumerate() {
                s.push_str(&format!("{i},{j},{a:.4}\n"));
            }
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForgettingReport {
    pub peak: Vec<f64>,
    pub last: Vec<f64>,
    /// Mean of `peak - last` over all tasks but the last, 0 for one task.
    pub average_forgetting: f64,
}

pub fn evaluate_forgetting(m: &AccuracyMatrix) -> Result<ForgettingReport> {
    let last = m.rows.last().ok_or_else(|| Error::Empty("accuracy matrix".into()))?.clone();
    let n = last.len();
    if n != m.rows.len() || m.rows.iter().enumerate().any(|(i, r)| r.len() != i + 1) {
        return Err(Error::ShapeMismatch("accuracy matrix must be lower triangular".into()));
    }
    let peak: Vec<f64> = (0..n)
        .map(|j| m.rows[j..].iter().map(|r| r[j]).fold(f64::NEG_INFINITY, f64::max))
        .collect();
    let average_forgetting = if n < 2 {
        0.0
    } else {
        (0..n - 1).map(|j| peak[j] - last[j]).sum::<f64>() / (n - 1) as f64
    };
    Ok(ForgettingReport {
        peak,
        last,
        average_forgetting,
    })
}

/// Which parts of the method are switched on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Method {
    pub growth: bool,
    pub importance: bool,
    pub prune: bool,
    pub sleep: bool,
}

impl Method {
    /// One fixed pool trained task after task.
    pub const NAIVE: Method = Method {
        growth: false,
        importance: false,
        prune: false,
        sleep: false,
    };
    pub const FULL: Method = Method {
        growth: true,
        importance: true,
        prune: true,
        sleep: true,
    };
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskStage {
    pub task: usize,
    pub size_after_growth: usize,
    pub reuse_edges: usize,
    pub accuracy_before_prune: f64,
    pub accuracy_after_prune: f64,
    pub pruned: usize,
    pub protected: usize,
    /// Mean accuracy on earlier tasks around sleep, when it ran.
    pub old_before_sleep: Option<f64>,
    pub old_after_sleep: Option<f64>,
    pub sleep_rates_hz: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContinualReport {
    pub method: Method,
    pub matrix: AccuracyMatrix,
    pub forgetting: ForgettingReport,
    pub grown: usize,
    pub pruned: usize,
    pub final_size: usize,
    pub stages: Vec<TaskStage>,
}

impl ContinualReport {
    pub fn pruned_fraction(&self) -> f64 {
        self.pruned as f64 / self.grown.max(1) as f64
    }
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len().max(1) as f64
}

/// Run the whole sequence under `method`.
pub fn run_continual(cfg: &ContinualConfig, method: Method, seed: u64) -> Result<ContinualReport> {
    cfg.validate()?;
    let tasks = benchmark_tasks(&cfg.data, seed);
    let data = tasks.iter().map(|t| TaskData::generate(t, cfg)).collect::<Result<Vec<_>>>()?;
    let mut net = ContinualNet::new(cfg.net.clone())?;
    let mut matrix = AccuracyMatrix::default();
    let mut stages = Vec::new();
    let mut store = Vec::new();
    let (mut grown, mut pruned) = (0, 0);
    for (t, (spec, d)) in tasks.iter().zip(&data).enumerate() {
        if method.growth || t == 0 {
            grow_for_task(&mut net, spec, &cfg.growth, seed)?;
            grown += cfg.growth.neurons_per_task;
        } else {
            net.add_readout(spec.id, &spec.labels)?;
        }
        let size_after_growth = net.size();
        let log = train_task(&mut net, d, cfg, seed)?;
        if method.importance {
            let map = wake_importance(&net, d, seed)?;
            apply_importance(&mut net, &map);
        }
        let accuracy_before_prune = accuracy(&net, d)?;
        let mut stage = TaskStage {
            task: t,
            size_after_growth,
            reuse_edges: net.reuse_edges(t),
            accuracy_before_prune,
            accuracy_after_prune: accuracy_before_prune,
            pruned: 0,
            protected: 0,
            old_before_sleep: None,
            old_after_sleep: None,
            sleep_rates_hz: Vec::new(),
        };
        if method.prune {
            let st = prune_inactive(&mut net, &log, &cfg.growth)?;
            stage.pruned = st.pruned.len();
            stage.protected = st.protected;
            pruned += st.pruned.len();
            stage.accuracy_after_prune = accuracy(&net, d)?;
        }
        store.extend(snapshots(d));
        if method.sleep && t > 0 {
            let old = |net: &ContinualNet| -> Result<f64> {
                Ok(mean(&data[..t].iter().map(|d| accuracy(net, d)).collect::<Result<Vec<_>>>()?))
            };
            stage.old_before_sleep = Some(old(&net)?);
            let st = sleep_consolidate(&mut net, &store, cfg.sleep.epochs, &cfg.sleep, derive_seed(seed, "continual.night", t as u64))?;
            stage.old_after_sleep = Some(old(&net)?);
            stage.sleep_rates_hz = st.mean_rate_hz;
        }
        matrix.rows.push(data[..=t].iter().map(|d| accuracy(&net, d)).collect::<Result<Vec<_>>>()?);
        stages.push(stage);
    }
    Ok(ContinualReport {
        method,
        forgetting: evaluate_forgetting(&matrix)?,
        matrix,
        grown,
        pruned,
        final_size: net.size(),
        stages,
    })
}
