//! Acceptance suite: one line per criterion, nonzero exit if any fails.
//!
//! Runs with its own `main` so the report is printed even when every
//! criterion passes.

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use num_rational::Ratio;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use selfhood::autonomous::Pos;
use selfhood::bodily::{run_mirror_test, MirrorConfig};
use selfhood::harness::{registry, run_experiment, run_many, ExperimentConfig, RunResult};
use selfhood::plasticity::{
    linear_cka, stdp_delta, temporal_consistency_loss, transfer_loss, transfer_loss_from_alignment,
    ConsistencyAnchor, StdpParams, TransferLossConfig,
};
use selfhood::social::{perspective_transform, run_scenario, scenario, AgentPose, BeliefConfig, Facing, WorldState};
use selfhood::Result;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Result<Verdict> {
    Ok(Verdict {
        pass,
        detail: detail.into(),
    })
}

fn run_seeds(name: &str, seeds: std::ops::Range<u64>) -> Result<Vec<RunResult>> {
    let cfgs: Vec<_> = seeds.map(|s| ExperimentConfig::new(name, s)).collect();
    run_many(&cfgs, 4)?.into_iter().collect()
}

fn failed_checks(runs: &[RunResult]) -> Vec<String> {
    runs.iter()
        .flat_map(|r| {
            r.checks
                .iter()
                .filter(|c| !c.pass)
                .map(move |c| format!("seed {} {}: {}", r.seed, c.name, c.detail))
        })
        .collect()
}

fn seeds_verdict(runs: &[RunResult], summary: String) -> Result<Verdict> {
    let failed = failed_checks(runs);
    if failed.is_empty() {
        verdict(true, summary)
    } else {
        verdict(false, format!("{summary}; {}", failed.join("; ")))
    }
}

fn lif_oracle() -> Result<Verdict> {
    let r = run_experiment(&ExperimentConfig::new("lif-first-spike", 11))?;
    let c = &r.checks[0];
    verdict(r.passed, format!("{} draws within one dt, worst {:.3} ms", c.detail, r.metrics["max_abs_error_ms"]))
}

/// HSIC with explicit Gram and centering matrices.
fn cka_brute(x: &DMatrix<f64>, y: &DMatrix<f64>) -> f64 {
    let n = x.nrows();
    let gram = |m: &DMatrix<f64>| {
        DMatrix::from_fn(n, n, |i, j| (0..m.ncols()).map(|k| m[(i, k)] * m[(j, k)]).sum::<f64>())
    };
    let h = DMatrix::from_fn(n, n, |i, j| f64::from(u8::from(i == j)) - 1.0 / n as f64);
    let (k, l) = (&h * gram(x) * &h, &h * gram(y) * &h);
    let hsic = |a: &DMatrix<f64>, b: &DMatrix<f64>| (a * b).trace();
    hsic(&k, &l) / (hsic(&k, &k) * hsic(&l, &l)).sqrt()
}

fn softmax(z: &[f64]) -> Vec<f64> {
    let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = z.iter().map(|v| (v - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.iter().map(|v| v / s).collect()
}

fn plasticity_math() -> Result<Verdict> {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let p = StdpParams::default();
    let mut stdp_err = 0.0f64;
    for _ in 0..1000 {
        let dt: f64 = rng.random_range(-100.0..100.0);
        let direct = if dt > 0.0 {
            p.a_plus * (-dt.abs() / p.tau_plus).exp()
        } else if dt < 0.0 {
            -p.a_minus * (-dt.abs() / p.tau_minus).exp()
        } else {
            0.0
        };
        stdp_err = stdp_err.max((stdp_delta(dt, &p) - direct).abs());
    }

    let (mut oracle_err, mut inv_err) = (0.0f64, 0.0f64);
    for _ in 0..200 {
        let x = DMatrix::from_fn(5, 4, |_, _| rng.random_range(-2.0..2.0));
        let y = DMatrix::from_fn(5, 4, |_, _| rng.random_range(-2.0..2.0));
        let c = linear_cka(&x, &y)?;
        oracle_err = oracle_err.max((c - cka_brute(&x, &y)).abs());
        let q = DMatrix::from_fn(4, 4, |_, _| rng.random_range(-1.0..1.0)).qr().q();
        let s = rng.random_range(0.1..10.0);
        inv_err = inv_err
            .max((linear_cka(&(&x * &q), &y)? - c).abs())
            .max((linear_cka(&(&x * s), &(&y * &q))? - c).abs());
    }

    let feats = DMatrix::from_fn(5, 4, |_, _| rng.random_range(-1.0..1.0));
    let cls = [0.3, 0.9];
    let cfg = |eta: f64| TransferLossConfig {
        eta_t: vec![eta; 2],
        source_features: vec![feats.clone(); 2],
        target_features: vec![feats.clone(); 2],
        label_pairs: (0..5).map(|i| (i, i)).collect(),
        cls_loss: cls.to_vec(),
    };
    let to_zero = transfer_loss(&cfg(800.0))?;
    let to_cls = transfer_loss(&cfg(-800.0))?;
    let arith = transfer_loss_from_alignment(&[0.0], &[0.8], &[0.4])?;
    let limits = to_zero == 0.0 && to_cls == 1.0 + (cls[0] + cls[1]) / 2.0 && (arith - 0.8).abs() < 1e-15;

    // hand computation for (0,0) and (ln 3, 0)
    let steps = vec![vec![0.0, 0.0], vec![3f64.ln(), 0.0]];
    let mean = softmax(&[3f64.ln() / 2.0, 0.0]);
    let kl = |p: &[f64]| p.iter().zip(&mean).map(|(a, b)| a * (a / b).ln()).sum::<f64>();
    let hand = (kl(&softmax(&steps[0])) + kl(&softmax(&steps[1]))) / 2.0;
    let tc = temporal_consistency_loss(&steps, ConsistencyAnchor::MeanLogits)?;
    let mut tc_ok = (tc - hand).abs() < 1e-9;
    for _ in 0..100 {
        let row: Vec<f64> = (0..4).map(|_| rng.random_range(-3.0..3.0)).collect();
        let t = rng.random_range(1..6);
        let mut logits = vec![row.clone(); t];
        tc_ok &= temporal_consistency_loss(&logits, ConsistencyAnchor::MeanLogits)? == 0.0;
        if t > 1 {
            logits[rng.random_range(0..t)][rng.random_range(0..4)] += rng.random_range(0.01..1.0);
            tc_ok &= temporal_consistency_loss(&logits, ConsistencyAnchor::MeanLogits)? > 0.0;
        }
    }

    let pass = stdp_err <= 1e-9 && oracle_err <= 1e-9 && inv_err <= 1e-6 && limits && tc_ok;
    verdict(
        pass,
        format!(
            "stdp {stdp_err:.1e}, cka oracle {oracle_err:.1e}, invariance {inv_err:.1e}, limits {limits}, consistency {tc_ok}"
        ),
    )
}

fn conditioning() -> Result<Verdict> {
    let runs = run_seeds("conditioning", 0..5)?;
    let n = runs.iter().map(|r| r.checks.len()).sum::<usize>();
    let ok = runs.iter().flat_map(|r| &r.checks).filter(|c| c.pass).count();
    seeds_verdict(&runs, format!("{ok}/{n} phenomenon runs over 5 seeds"))
}

fn speed() -> Result<Verdict> {
    let runs = run_seeds("speed-generalization", 0..5)?;
    let rates: Vec<String> = runs.iter().map(|r| format!("{:.2}", r.metrics["success_at_3.5x"])).collect();
    seeds_verdict(&runs, format!("success at 3.5x per seed [{}]", rates.join(", ")))
}

fn decision() -> Result<Verdict> {
    let runs = run_seeds("decision-making", 0..5)?;
    let rates: Vec<String> = runs.iter().map(|r| format!("{:.2}", r.metrics["final_goal_rate"])).collect();
    let drift = runs.iter().map(|r| r.metrics["zero_reward_weight_drift"]).fold(0.0, f64::max);
    seeds_verdict(&runs, format!("goal rate [{}], control drift {drift:.1e}", rates.join(", ")))
}

fn mirror() -> Result<Verdict> {
    let cfg = MirrorConfig::default();
    assert_eq!((cfg.n_agents, cfg.trials), (3, 100));
    let r = run_mirror_test(&cfg, 0)?;
    verdict(
        r.accuracy >= 0.95 && r.ambiguous_rate < 0.05,
        format!("accuracy {:.3}, ambiguous {:.3}", r.accuracy, r.ambiguous_rate),
    )
}

fn rubber_hand() -> Result<Verdict> {
    let r = run_experiment(&ExperimentConfig::new("rubber-hand", 0))?;
    let failed = failed_checks(std::slice::from_ref(&r));
    verdict(r.passed, format!("5 regime checks, peak drift {:.3}{}", r.metrics["peak_drift"], failed.join("; ")))
}

type Q = Ratio<i64>;

/// Exact rational clip of the centre-to-centre segment against the open
/// square of cell `o`.
fn segment_enters(a: Pos, b: Pos, o: Pos) -> bool {
    let q = |v: usize| Q::from_integer(v as i64);
    let p0 = [q(a.x), q(a.y)];
    let d = [q(b.x) - q(a.x), q(b.y) - q(a.y)];
    let half = Q::new(1, 2);
    let (mut t0, mut t1) = (Q::from_integer(0), Q::from_integer(1));
    for k in 0..2 {
        let (lo, hi) = ([q(o.x), q(o.y)][k] - half, [q(o.x), q(o.y)][k] + half);
        if d[k] == Q::from_integer(0) {
            if p0[k] <= lo || p0[k] >= hi {
                return false;
            }
            continue;
        }
        let (a, b) = ((lo - p0[k]) / d[k], (hi - p0[k]) / d[k]);
        t0 = t0.max(a.min(b));
        t1 = t1.min(a.max(b));
    }
    t0 < t1
}

fn ray_cast(w: &WorldState, v: &AgentPose) -> BTreeSet<Pos> {
    let (fx, fy) = match v.facing {
        Facing::North => (0i64, -1i64),
        Facing::East => (1, 0),
        Facing::South => (0, 1),
        Facing::West => (-1, 0),
    };
    let cos_half = v.fov_half_deg.to_radians().cos();
    w.cells()
        .filter(|&c| {
            let (dx, dy) = (c.x as i64 - v.position.x as i64, c.y as i64 - v.position.y as i64);
            let in_cone = (dx, dy) == (0, 0) || {
                let dot = (dx * fx + dy * fy) as f64;
                dot >= cos_half * ((dx * dx + dy * dy) as f64).sqrt() - 1e-9
            };
            in_cone && !w.occluders.iter().any(|&o| o != c && o != v.position && segment_enters(v.position, c, o))
        })
        .collect()
}

fn false_belief() -> Result<Verdict> {
    let cfg = BeliefConfig::default();
    let (mut tom_ok, mut ablation_ok) = (0, 0);
    for seed in 0..50 {
        let sc = scenario("sally-anne", seed)?;
        let hist = sc.history()?;
        let truth = hist
            .last()
            .and_then(|w| w.objects.get(&sc.object))
            .and_then(|&p| sc.label_of(p))
            .unwrap_or("unknown");
        let tom = run_scenario(&sc, true, &cfg, seed)?;
        let off = run_scenario(&sc, false, &cfg, seed)?;
        tom_ok += usize::from(tom.prediction == sc.expected && sc.expected != truth);
        ablation_ok += usize::from(off.prediction == truth);
    }

    let all: Vec<Pos> = (0..6).flat_map(|y| (0..6).map(move |x| Pos::new(x, y))).collect();
    let (mut fixtures, mut mismatches) = (0usize, 0usize);
    for &at in &all {
        let free: Vec<Pos> = all.iter().copied().filter(|&p| p != at).collect();
        let mut sets: Vec<Vec<Pos>> = vec![vec![]];
        sets.extend(free.iter().map(|&p| vec![p]));
        for i in 0..free.len() {
            sets.extend(free[i + 1..].iter().map(|&p| vec![free[i], p]));
        }
        for occ in &sets {
            let mut w = WorldState::new(6, 6);
            w.occluders = occ.iter().copied().collect();
            for facing in Facing::ALL {
                for fov in [45.0, 90.0, 180.0] {
                    let v = AgentPose::new("v", at, facing, fov);
                    fixtures += 1;
                    mismatches += usize::from(perspective_transform(&w, &v)?.cells != ray_cast(&w, &v));
                }
            }
        }
    }
    verdict(
        tom_ok == 50 && ablation_ok == 50 && mismatches == 0,
        format!("ToM {tom_ok}/50, ablation {ablation_ok}/50, ray-cast mismatches {mismatches}/{fixtures}"),
    )
}

fn empathy() -> Result<Verdict> {
    let r = run_experiment(&ExperimentConfig::new("empathy", 0))?;
    let d: Vec<String> = r.checks.iter().map(|c| format!("{} {}", c.name, c.detail)).collect();
    verdict(r.passed, d.join(", "))
}

fn continual() -> Result<Verdict> {
    let r = run_experiment(&ExperimentConfig::new("continual-dsd", 0))?;
    let m = &r.metrics;
    verdict(
        r.passed,
        format!(
            "forgetting full {:.2} vs naive {:.2}, pruned {:.2} at cost {:.2}, worst sleep drop {:.2}",
            m["full_forgetting"], m["naive_forgetting"], m["pruned_fraction"], m["max_prune_cost"], m["max_sleep_drop"]
        ),
    )
}

fn concept() -> Result<Verdict> {
    let r = run_experiment(&ExperimentConfig::new("concept-fusion", 0))?;
    let m = &r.metrics;
    verdict(
        r.passed,
        format!(
            "fused {:.3} vs sensory {:.3} / text {:.3}, offsets {}",
            m["fused_accuracy"], m["sensory_accuracy"], m["text_accuracy"], r.checks[1].detail
        ),
    )
}

fn determinism() -> Result<Verdict> {
    let cfgs: Vec<_> = registry().iter().map(|e| ExperimentConfig::new(e.name, 5)).collect();
    let once = |threads| -> Result<Vec<String>> {
        run_many(&cfgs, threads)?.into_iter().map(|r| r.map(|r| r.summary_json())).collect()
    };
    let serial: Vec<String> = cfgs.iter().map(|c| run_experiment(c).map(|r| r.summary_json())).collect::<Result<_>>()?;
    let (one, four) = (once(1)?, once(4)?);
    let same = serial.iter().zip(&one).zip(&four).filter(|((a, b), c)| a == b && b == c).count();
    verdict(same == cfgs.len(), format!("{same}/{} summaries identical across reruns and 1 or 4 workers", cfgs.len()))
}

type Criterion = (&'static str, fn() -> Result<Verdict>, Duration);

fn main() {
    let secs = Duration::from_secs;
    let criteria: [Criterion; 12] = [
        ("lif-oracle", lif_oracle, secs(1)),
        ("plasticity-math", plasticity_math, secs(5)),
        ("conditioning-suite", conditioning, secs(120)),
        ("speed-generalization", speed, secs(180)),
        ("rstdp-decision-making", decision, secs(120)),
        ("mirror-test", mirror, secs(60)),
        ("rubber-hand-regimes", rubber_hand, secs(30)),
        ("false-belief", false_belief, secs(60)),
        ("empathy", empathy, secs(60)),
        ("continual-benchmark", continual, secs(300)),
        ("concept-fusion", concept, secs(30)),
        ("determinism", determinism, secs(600)),
    ];
    let mut failures = 0;
    for (i, (name, f, limit)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let v = f().unwrap_or_else(|e| Verdict {
            pass: false,
            detail: format!("error: {e}"),
        });
        let took = t.elapsed();
        let pass = v.pass && took <= *limit;
        failures += usize::from(!pass);
        println!(
            "{} {:>2} {name:<22} {} [{:.2}s of {}s]",
            if pass { "PASS" } else { "FAIL" },
            i + 1,
            v.detail,
            took.as_secs_f64(),
            limit.as_secs()
        );
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failures, criteria.len());
    if failures > 0 {
        std::process::exit(1);
    }
}
