//! Bodies of the registered experiments.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Experiment, Level, Outcome};
use crate::autonomous::{
    circuit_factory, corridor, speed_generalization, train_policy, CircuitConfig, ExperienceBuffer, GridWorld, Pos,
    PhenomenaSettings, PolicyConfig, PolicyNetwork, SpeedConfig, PHENOMENA,
};
use crate::bodily::{drift_sweep, run_mirror_test, MirrorConfig, RubberHandConfig};
use crate::concept::{evaluate_fixture, generate_fixture, sliding_coordinate, FixtureConfig};
use crate::continual::{run_continual, ContinualConfig, ContinualReport, Method};
use crate::error::{Error, Result};
use crate::plasticity::{
    linear_cka, stdp_delta, temporal_consistency_loss, transfer_loss, ConsistencyAnchor, StdpParams, TransferLossConfig,
};
use crate::rng::{derive_seed, stream};
use crate::snn::{analytic_first_spike, simulate, Inputs, Network, NeuronParams, SimConfig, Spike, SpikeTrain, Stimulus};
use crate::social::{
    decide_altruistic, default_episodes, hazard_fixture, observe_action_empathy, run_scenario, scenario, warn_of_hazard,
    AltruisticChoice, Attribution, BeliefConfig, EmotionState, MirrorSystem, MirrorSystemConfig, Warning,
};

pub(super) fn all() -> Vec<Experiment> {
    vec![
        Experiment::new(
            "lif-first-spike",
            Level::L0,
            "Simulated LIF first-spike time against the closed form",
            &["first-spike-within-dt"],
            lif_first_spike,
        ),
        Experiment::new(
            "plasticity-math",
            Level::L0,
            "STDP window, linear CKA invariances, transfer-loss limits, temporal consistency",
            &["stdp-window", "cka-invariance", "transfer-loss-limits", "consistency-zero-iff-constant"],
            plasticity_math,
        ),
        Experiment::new(
            "concept-fusion",
            Level::L0,
            "Bimodal spike-train concept fusion by sliding coordination",
            &["fused-not-worse", "offsets-recovered"],
            concept_fusion,
        ),
        Experiment::new(
            "continual-dsd",
            Level::L0,
            "Three sequential tasks: naive pool against growth, importance, pruning and sleep",
            &["naive-forgets", "full-retains", "pruning-is-cheap", "sleep-is-safe"],
            continual_dsd,
        ),
        Experiment::new(
            "mirror-test",
            Level::L1,
            "Three identical arms each pick out their own reflection",
            &["accuracy", "ambiguity"],
            mirror_test,
        ),
        Experiment::new(
            "rubber-hand",
            Level::L1,
            "Proprioceptive drift over deflection angle, synchronous and asynchronous",
            &["zero-at-zero", "rising-small", "flattening-medium", "zero-beyond-cutoff", "async-le-sync"],
            rubber_hand,
        ),
        Experiment::new(
            "conditioning",
            Level::L2,
            "Six classical conditioning phenomena on the cerebellar circuit",
            &PHENOMENA,
            conditioning,
        ),
        Experiment::new(
            "speed-generalization",
            Level::L2,
            "Obstacle avoidance trained at 1x speed, tested at higher speeds",
            &["success-at-3.5x"],
            speed,
        ),
        Experiment::new(
            "decision-making",
            Level::L2,
            "R-STDP action selection in the 5x5 gridworld",
            &["goal-rate", "zero-reward-control"],
            decision_making,
        ),
        Experiment::new(
            "false-belief",
            Level::L3,
            "False-belief scripts with theory of mind and the ground-truth ablation",
            &["tom-predicts-belief", "ablation-predicts-reality"],
            false_belief,
        ),
        Experiment::new(
            "hazard-warning",
            Level::L3,
            "Warn another agent of a hazard only it cannot see",
            &["warn-when-hidden", "silent-when-seen", "silent-off-path"],
            hazard_warning,
        ),
        Experiment::new(
            "empathy",
            Level::L3,
            "Mirror-neuron emotion sharing, self/other attribution and altruistic choice",
            &["shared-emotion", "attribution", "altruism-rule"],
            empathy,
        ),
    ]
}

fn fmt_ok(ok: usize, n: usize) -> String {
    format!("{ok}/{n}")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
struct LifParams {
    draws: usize,
    dt: f64,
}

impl Default for LifParams {
    fn default() -> Self {
        Self { draws: 20, dt: 1.0 }
    }
}

fn lif_first_spike(p: &LifParams, seed: u64) -> Result<Outcome> {
    let mut rng = stream(seed, "lif.draws");
    let mut out = Outcome::default();
    let mut csv = String::from("draw,tau_m,v_threshold,resistance,current,analytic_ms,simulated_ms\n");
    let (mut ok, mut worst) = (0, 0.0f64);
    for d in 0..p.draws {
        let params = NeuronParams {
            tau_m: rng.random_range(5.0..30.0),
            v_threshold: rng.random_range(0.5..2.0),
            resistance: rng.random_range(0.5..2.0),
            ..NeuronParams::default()
        };
        let current = params.v_threshold / params.resistance * rng.random_range(1.1..4.0);
        let analytic = analytic_first_spike(&params, current).expect("suprathreshold by construction");
        let mut net = Network::new();
        net.add_population("n", 1, params)?;
        let inputs = Inputs::new().with("n", Stimulus::constant(vec![current]));
        let mut sc = SimConfig::new(analytic * 2.0 + 10.0 * p.dt, derive_seed(seed, "lif.sim", d as u64));
        sc.dt = p.dt;
        let rec = simulate(&net, &inputs, &sc)?;
        let sim = rec.train("n").and_then(|t| t.events().first().map(|s| s.0));
        let err = sim.map_or(f64::INFINITY, |s| (s - analytic).abs());
        worst = worst.max(err);
        ok += usize::from(err <= p.dt);
        csv.push_str(&format!(
            "{d},{},{},{},{current},{analytic},{}\n",
            params.tau_m,
            params.v_threshold,
            params.resistance,
            sim.map_or(String::new(), |s| s.to_string())
        ));
    }
    out.metric("max_abs_error_ms", worst);
    out.check("first-spike-within-dt", ok == p.draws, fmt_ok(ok, p.draws));
    out.series("first_spikes", csv);
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
struct PlasticityParams {
    stdp: StdpParams,
    draws: usize,
    cka_instances: usize,
    rows: usize,
    cols: usize,
}

impl Default for PlasticityParams {
    fn default() -> Self {
        Self {
            stdp: StdpParams::default(),
            draws: 200,
            cka_instances: 5,
            rows: 5,
            cols: 4,
        }
    }
}

fn orthogonal(n: usize, rng: &mut crate::rng::SimRng) -> DMatrix<f64> {
    let m = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
    m.qr().q()
}

fn plasticity_math(p: &PlasticityParams, seed: u64) -> Result<Outcome> {
    p.stdp.validate()?;
    let mut out = Outcome::default();
    let mut rng = stream(seed, "plasticity.draws");

    // potentiation decays with positive lag, depression with negative lag
    let mut stdp_ok = stdp_delta(0.0, &p.stdp) == 0.0;
    for _ in 0..p.draws {
        let dt: f64 = rng.random_range(0.1..100.0);
        let (pot, dep) = (stdp_delta(dt, &p.stdp), stdp_delta(-dt, &p.stdp));
        let (pot2, dep2) = (stdp_delta(dt + 1.0, &p.stdp), stdp_delta(-dt - 1.0, &p.stdp));
        stdp_ok &= pot >= 0.0 && dep <= 0.0 && pot2 <= pot && dep2 >= dep;
        stdp_ok &= pot <= p.stdp.a_plus && -dep <= p.stdp.a_minus;
    }
    out.check("stdp-window", stdp_ok, format!("{} lags", p.draws));

    let mut worst = 0.0f64;
    for _ in 0..p.cka_instances {
        let x = DMatrix::from_fn(p.rows, p.cols, |_, _| rng.random_range(-1.0..1.0));
        let y = DMatrix::from_fn(p.rows, p.cols, |_, _| rng.random_range(-1.0..1.0));
        let base = linear_cka(&x, &y)?;
        let q = orthogonal(p.cols, &mut rng);
        let s: f64 = rng.random_range(0.1..10.0);
        worst = worst
            .max((linear_cka(&(&x * &q), &y)? - base).abs())
            .max((linear_cka(&(&x * s), &y)? - base).abs())
            .max((linear_cka(&x, &x)? - 1.0).abs());
    }
    out.metric("cka_max_invariance_error", worst);
    out.check("cka-invariance", worst <= 1e-6, format!("max error {worst:e}"));

    let feats = DMatrix::from_fn(p.rows, p.cols, |_, _| rng.random_range(-1.0..1.0));
    let pairs: Vec<(usize, usize)> = (0..p.rows).map(|i| (i, i)).collect();
    let cfg = |eta: f64, cls: f64| TransferLossConfig {
        eta_t: vec![eta; 2],
        source_features: vec![feats.clone(); 2],
        target_features: vec![feats.clone(); 2],
        label_pairs: pairs.clone(),
        cls_loss: vec![cls; 2],
    };
    // sigmoid saturates to exactly 0 and 1 at these magnitudes
    let aligned = transfer_loss(&cfg(800.0, 0.7))?;
    let unaligned = transfer_loss(&cfg(-800.0, 0.7))?;
    let arith = crate::plasticity::transfer_loss_from_alignment(&[0.0], &[0.8], &[0.4])?;
    let limits_ok = aligned.abs() <= 1e-12 && unaligned == 1.7 && (arith - 0.8).abs() <= 1e-15;
    out.metric("transfer_loss_aligned", aligned);
    out.metric("transfer_loss_unaligned", unaligned);
    out.metric("transfer_loss_half", arith);
    out.check("transfer-loss-limits", limits_ok, format!("{aligned:e}, {unaligned}, {arith}"));

    let constant = vec![vec![0.3, -1.0, 2.0]; 4];
    let mut varying = constant.clone();
    varying[2][1] += 0.5;
    let mut tc_ok = true;
    for anchor in [ConsistencyAnchor::MeanLogits, ConsistencyAnchor::Pairwise] {
        tc_ok &= temporal_consistency_loss(&constant, anchor)? == 0.0;
        tc_ok &= temporal_consistency_loss(&varying, anchor)? > 0.0;
    }
    out.check("consistency-zero-iff-constant", tc_ok, "constant and perturbed logits");
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
struct ConceptParams {
    fixture: FixtureConfig,
    shift_neurons: usize,
    shift_spikes: usize,
}

impl Default for ConceptParams {
    fn default() -> Self {
        Self {
            fixture: FixtureConfig::default(),
            shift_neurons: 8,
            shift_spikes: 60,
        }
    }
}

fn concept_fusion(p: &ConceptParams, seed: u64) -> Result<Outcome> {
    let mut out = Outcome::default();
    let fx = generate_fixture(&p.fixture, seed)?;
    let r = evaluate_fixture(&fx)?;
    out.metric("sensory_accuracy", r.sensory_accuracy);
    out.metric("text_accuracy", r.text_accuracy);
    out.metric("fused_accuracy", r.fused_accuracy);
    out.metric("mean_abs_offset_error", r.mean_abs_offset_error);
    let best = r.sensory_accuracy.max(r.text_accuracy);
    out.check(
        "fused-not-worse",
        r.fused_accuracy >= best,
        format!("fused {:.3} vs best single {best:.3}", r.fused_accuracy),
    );

    // irregular spikes away from the edges, so no shift clips
    let w = i64::from(p.fixture.window);
    let dur = p.fixture.duration + 4.0 * w as f64;
    let mut rng = stream(seed, "concept.shift");
    let events: Vec<Spike> = (0..p.shift_spikes)
        .map(|_| {
            let t = rng.random_range(2 * w..(dur as i64 - 2 * w)) as f64;
            Spike(t, rng.random_range(0..p.shift_neurons.max(1)))
        })
        .collect();
    let a = SpikeTrain::new(p.shift_neurons.max(1), dur, events)?;
    let mut csv = String::from("shift_ms,recovered_offset_ms\n");
    let mut ok = 0;
    for s in -w..=w {
        let f = sliding_coordinate(&a, &a.shifted(s as f64), p.fixture.window)?;
        ok += usize::from(f.offset == -s);
        csv.push_str(&format!("{s},{}\n", f.offset));
    }
    let n = (2 * w + 1) as usize;
    out.check("offsets-recovered", ok == n, fmt_ok(ok, n));
    out.series("offsets", csv);
    Ok(out)
}

fn continual_dsd(p: &ContinualConfig, seed: u64) -> Result<Outcome> {
    let mut out = Outcome::default();
    let (naive, full) = rayon::join(
        || run_continual(p, Method::NAIVE, seed),
        || run_continual(p, Method::FULL, seed),
    );
    let (naive, full): (ContinualReport, ContinualReport) = (naive?, full?);
    let nf = naive.forgetting.average_forgetting;
    let ff = full.forgetting.average_forgetting;
    out.metric("naive_forgetting", nf);
    out.metric("full_forgetting", ff);
    out.metric("pruned_fraction", full.pruned_fraction());
    out.metric("final_size", full.final_size as f64);
    let prune_cost = full
        .stages
        .iter()
        .map(|s| s.accuracy_before_prune - s.accuracy_after_prune)
        .fold(0.0f64, f64::max);
    let sleep_drop = full
        .stages
        .iter()
        .filter_map(|s| Some(s.old_before_sleep? - s.old_after_sleep?))
        .fold(0.0f64, f64::max);
    out.metric("max_prune_cost", prune_cost);
    out.metric("max_sleep_drop", sleep_drop);
    out.check("naive-forgets", nf >= 20.0, format!("{nf:.2} points"));
    out.check("full-retains", ff <= 5.0, format!("{ff:.2} points"));
    out.check(
        "pruning-is-cheap",
        full.pruned_fraction() >= 0.2 && prune_cost <= 2.0,
        format!("pruned {:.2}, cost {prune_cost:.2}", full.pruned_fraction()),
    );
    out.check("sleep-is-safe", sleep_drop <= 1.0, format!("largest drop {sleep_drop:.2}"));
    let mut csv = String::from("method,after_task,eval_task,accuracy\n");
    for (name, r) in [("naive", &naive), ("full", &full)] {
        for line in r.matrix.to_csv().lines().skip(1) {
            csv.push_str(&format!("{name},{line}\n"));
        }
    }
    out.series("accuracy_matrix", csv);
    out.detail("stages", &full.stages);
    Ok(out)
}

fn mirror_test(p: &MirrorConfig, seed: u64) -> Result<Outcome> {
    let r = run_mirror_test(p, seed)?;
    let mut out = Outcome::default();
    out.metric("accuracy", r.accuracy);
    out.metric("ambiguous_rate", r.ambiguous_rate);
    out.metric("final_training_error", r.final_training_error);
    out.check("accuracy", r.accuracy >= 0.95, format!("{:.3}", r.accuracy));
    out.check("ambiguity", r.ambiguous_rate < 0.05, format!("{:.3}", r.ambiguous_rate));
    out.series("trials", r.to_csv());
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
struct RubberParams {
    max_angle: f64,
    step: f64,
    config: RubberHandConfig,
}

impl Default for RubberParams {
    fn default() -> Self {
        Self {
            max_angle: 90.0,
            step: 2.5,
            config: RubberHandConfig::default(),
        }
    }
}

fn rubber_hand(p: &RubberParams, _seed: u64) -> Result<Outcome> {
    let c = &p.config;
    let sync = drift_sweep(p.max_angle, p.step, true, c)?;
    let asyn = drift_sweep(p.max_angle, p.step, false, c)?;
    let mut out = Outcome::default();
    let d: Vec<f64> = sync.iter().map(|r| r.proprioceptive_drift).collect();
    let a: Vec<f64> = sync.iter().map(|r| r.deflection_angle).collect();
    let small: Vec<usize> = (0..a.len()).filter(|&i| a[i] <= c.small_regime_end).collect();
    let medium: Vec<usize> = (0..a.len()).filter(|&i| a[i] >= c.small_regime_end && a[i] <= c.cutoff).collect();
    let rising = small.windows(2).all(|w| d[w[1]] > d[w[0]]);
    let flat = medium.windows(3).all(|w| d[w[2]] - 2.0 * d[w[1]] + d[w[0]] <= 1e-12);
    let beyond = a.iter().zip(&d).filter(|(x, _)| **x > c.cutoff).all(|(_, v)| *v == 0.0);
    let below = sync.iter().zip(&asyn).all(|(s, a)| a.proprioceptive_drift <= s.proprioceptive_drift);
    out.metric("peak_drift", d.iter().copied().fold(0.0, f64::max));
    out.check("zero-at-zero", d.first() == Some(&0.0), "drift at 0 degrees");
    out.check("rising-small", rising, format!("{} samples", small.len()));
    out.check("flattening-medium", flat, format!("{} samples", medium.len()));
    out.check("zero-beyond-cutoff", beyond, format!("cutoff {}", c.cutoff));
    out.check("async-le-sync", below, format!("{} angles", sync.len()));
    let mut csv = String::from("angle,drift_sync,drift_async,visual_weight_sync\n");
    for (s, x) in sync.iter().zip(&asyn) {
        csv.push_str(&format!(
            "{},{},{},{}\n",
            s.deflection_angle, s.proprioceptive_drift, x.proprioceptive_drift, s.visual_weight
        ));
    }
    out.series("drift", csv);
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
struct ConditioningParams {
    settings: PhenomenaSettings,
    circuit: CircuitConfig,
}

fn conditioning(p: &ConditioningParams, seed: u64) -> Result<Outcome> {
    let factory = circuit_factory(p.circuit.clone());
    let results = PHENOMENA
        .par_iter()
        .map(|name| crate::autonomous::run_phenomenon(name, &factory, &p.settings, seed))
        .collect::<Result<Vec<_>>>()?;
    let mut out = Outcome::default();
    let mut csv = String::from("phenomenon,phase,trial,cr\n");
    for r in &results {
        for (k, v) in &r.metrics {
            out.metric(&format!("{}.{k}", r.name), *v);
        }
        out.check(&r.name, r.pass, format!("{:?}", r.metrics));
        for t in &r.trace {
            for (i, cr) in t.cr.iter().enumerate() {
                csv.push_str(&format!("{},{},{},{cr}\n", r.name, t.label, i + 1));
            }
        }
    }
    out.series("cr_traces", csv);
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
struct SpeedParams {
    speed: SpeedConfig,
    corridor_length: usize,
    train_speed: f64,
    test_speeds: Vec<f64>,
}

impl Default for SpeedParams {
    fn default() -> Self {
        Self {
            speed: SpeedConfig::default(),
            corridor_length: 40,
            train_speed: 1.0,
            test_speeds: vec![1.0, 1.5, 2.0, 2.5, 3.0, 3.5],
        }
    }
}

fn speed(p: &SpeedParams, seed: u64) -> Result<Outcome> {
    let env = corridor(p.corridor_length)?;
    let res = speed_generalization(&env, p.train_speed, &p.test_speeds, &p.speed, seed)?;
    let mut out = Outcome::default();
    let mut csv = String::from("speed,success,mean_latency_ms\n");
    for r in &res {
        out.metric(&format!("success_at_{}x", r.speed), r.success);
        csv.push_str(&format!(
            "{},{},{}\n",
            r.speed,
            r.success,
            r.mean_latency.map_or(String::new(), |l| l.to_string())
        ));
    }
    let at = res.iter().find(|r| r.speed == 3.5).map(|r| r.success);
    out.check(
        "success-at-3.5x",
        at.is_some_and(|s| s >= 0.8),
        at.map_or("3.5x not among test speeds".into(), |s| format!("{s:.2}")),
    );
    out.series("speed", csv);
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
struct DecisionParams {
    policy: PolicyConfig,
    episodes: usize,
    tail: usize,
    control_episodes: usize,
}

impl Default for DecisionParams {
    fn default() -> Self {
        Self {
            policy: PolicyConfig::default(),
            episodes: 500,
            tail: 100,
            control_episodes: 20,
        }
    }
}

fn decision_making(p: &DecisionParams, seed: u64) -> Result<Outcome> {
    let mut env = GridWorld::five_by_five();
    let net = PolicyNetwork::new(env.cells(), p.policy.clone(), seed)?;
    let mut buf = ExperienceBuffer::new(p.policy.buffer_capacity)?;
    let run = train_policy(net, &mut env, p.episodes, 0, &mut buf, seed)?;
    let rate = run.final_goal_rate(p.tail);

    let mut silent = GridWorld::five_by_five();
    silent.goal_reward = 0.0;
    silent.hazard_reward = 0.0;
    silent.step_reward = 0.0;
    silent.collision_penalty = 0.0;
    let cfg = PolicyConfig {
        timeout_reward: 0.0,
        ..p.policy.clone()
    };
    let control = PolicyNetwork::new(silent.cells(), cfg, seed)?;
    let w0 = control.weights.clone();
    let mut cbuf = ExperienceBuffer::new(p.policy.buffer_capacity)?;
    let crun = train_policy(control, &mut silent, p.control_episodes, 0, &mut cbuf, seed)?;
    let drift = crun
        .policy
        .weights
        .as_slice()
        .iter()
        .zip(w0.as_slice())
        .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));

    let mut out = Outcome::default();
    out.metric("final_goal_rate", rate);
    out.metric("zero_reward_weight_drift", drift);
    out.check("goal-rate", rate >= 0.9, format!("{rate:.2} over the last {}", p.tail));
    out.check("zero-reward-control", drift <= 1e-6, format!("max drift {drift:e}"));
    out.series("episodes", run.to_csv());
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
struct BeliefParams {
    variant: String,
    with_tom: bool,
    belief: BeliefConfig,
}

impl Default for BeliefParams {
    fn default() -> Self {
        Self {
            variant: "sally-anne".into(),
            with_tom: true,
            belief: BeliefConfig::default(),
        }
    }
}

fn false_belief(p: &BeliefParams, seed: u64) -> Result<Outcome> {
    let sc = scenario(&p.variant, seed)?;
    let tom = run_scenario(&sc, true, &p.belief, seed)?;
    let ablation = run_scenario(&sc, false, &p.belief, seed)?;
    let history = sc.history()?;
    let truth = history
        .last()
        .and_then(|w| w.objects.get(&sc.object))
        .and_then(|&pos| sc.label_of(pos))
        .unwrap_or("unknown")
        .to_string();
    let mut out = Outcome::default();
    let shown = if p.with_tom { &tom } else { &ablation };
    out.detail("scenario", &sc.name);
    out.detail("with_tom", p.with_tom);
    out.detail("prediction", &shown.prediction);
    out.detail("belief_prediction", &tom.prediction);
    out.detail("ablation_prediction", &ablation.prediction);
    out.detail("expected", &sc.expected);
    out.detail("true_location", &truth);
    out.check("tom-predicts-belief", tom.correct, format!("{} vs {}", tom.prediction, sc.expected));
    out.check(
        "ablation-predicts-reality",
        ablation.prediction == truth,
        format!("{} vs {truth}", ablation.prediction),
    );
    let mut csv = String::from("mode,prediction\n");
    csv.push_str(&format!("tom,{}\nablation,{}\n", tom.prediction, ablation.prediction));
    out.series("predictions", csv);
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
struct HazardParams {
    hidden: Pos,
    seen: Pos,
    off_path: Pos,
}

impl Default for HazardParams {
    fn default() -> Self {
        Self {
            hidden: Pos::new(4, 0),
            seen: Pos::new(1, 2),
            off_path: Pos::new(5, 2),
        }
    }
}

fn hazard_warning(p: &HazardParams, _seed: u64) -> Result<Outcome> {
    let mut out = Outcome::default();
    let mut csv = String::from("case,x,y,warning\n");
    let cases = [
        ("warn-when-hidden", p.hidden, Warning::Warn),
        ("silent-when-seen", p.seen, Warning::NoWarn),
        ("silent-off-path", p.off_path, Warning::NoWarn),
    ];
    for (name, pos, want) in cases {
        let (world, me, other, path) = hazard_fixture(Some(pos))?;
        let got = warn_of_hazard(&me, &other, &world, &path)?;
        out.check(name, got == want, format!("{got:?} at ({}, {})", pos.x, pos.y));
        csv.push_str(&format!("{name},{},{},{got:?}\n", pos.x, pos.y));
    }
    out.series("warnings", csv);
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
struct EmpathyParams {
    mirror: MirrorSystemConfig,
    reps: usize,
    trials: u64,
    task_values: Vec<f64>,
    gains: Vec<f64>,
}

impl Default for EmpathyParams {
    fn default() -> Self {
        Self {
            mirror: MirrorSystemConfig::default(),
            reps: 20,
            trials: 10,
            task_values: (0..10).map(|i| i as f64 * 0.25).collect(),
            gains: (0..10).map(|i| i as f64 * 0.3).collect(),
        }
    }
}

fn empathy(p: &EmpathyParams, seed: u64) -> Result<Outcome> {
    let mut m = MirrorSystem::new(p.mirror.clone(), seed)?;
    m.train(&default_episodes(p.reps))?;
    let mut out = Outcome::default();
    let mut csv = String::from("action,trial,self_emotion,observed_emotion,attribution_copy,attribution_no_copy\n");
    let (mut shared_ok, mut attr_ok, mut n) = (0, 0, 0);
    let mut observed: BTreeMap<usize, EmotionState> = BTreeMap::new();
    for action in 0..p.mirror.n_actions {
        for trial in 0..p.trials {
            let own = m.self_experience(action, trial)?;
            let seen = observe_action_empathy(&m, action, false, trial)?;
            let mine = observe_action_empathy(&m, action, true, trial)?;
            shared_ok += usize::from(own.shared.emotion == seen.shared.emotion);
            attr_ok += usize::from(seen.attribution == Attribution::Other && mine.attribution == Attribution::SelfAgent);
            n += 1;
            observed.entry(action).or_insert_with(|| seen.shared.clone());
            csv.push_str(&format!(
                "{action},{trial},{:?},{:?},{:?},{:?}\n",
                own.shared.emotion, seen.shared.emotion, mine.attribution, seen.attribution
            ));
        }
    }
    out.check("shared-emotion", shared_ok == n, fmt_ok(shared_ok, n));
    out.check("attribution", attr_ok == n, fmt_ok(attr_ok, n));

    // rescue iff gain x negative valence of what was shared beats the task
    let distress = observed.get(&0).cloned().ok_or_else(|| Error::Empty("no actions".into()))?;
    let (mut rule_ok, mut points, mut rescues) = (0, 0, 0);
    for &v in &p.task_values {
        for &g in &p.gains {
            let choice = decide_altruistic(v, &distress, g)?;
            let want = g * distress.negative_valence() > v;
            rule_ok += usize::from((choice == AltruisticChoice::Rescue) == want);
            rescues += usize::from(choice == AltruisticChoice::Rescue);
            points += 1;
        }
    }
    out.metric("rescue_fraction", rescues as f64 / points.max(1) as f64);
    out.metric("observed_distress_valence", distress.valence);
    out.check("altruism-rule", rule_ok == points, fmt_ok(rule_ok, points));
    out.series("responses", csv);
    Ok(out)
}
