//! Speed generalization of a conditioned avoidance turn.
//!
//! An agent runs along a row of a [`GridWorld`] toward an obstacle. The
//! obstacle becomes visible (the CS) once it is within `sensor_range` cells,
//! so the cue-to-collision interval is `distance / speed` actions. The
//! conditioning circuit is trained at one speed with the collision as the US;
//! frozen, its CR triggers a turn. An episode succeeds when the turn lands
//! before the move that would hit the obstacle.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::conditioning::{CircuitConfig, ConditioningCircuit, TrialSpec};
use super::gridworld::{Action, GridWorld, Pos};
use crate::error::{Error, Result};
use crate::rng::{derive_seed, substream};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SpeedConfig {
    /// Obstacle visibility, cells.
    pub sensor_range: f64,
    /// Duration of one action, ms.
    pub step_ms: f64,
    pub train_trials: usize,
    pub eval_episodes: usize,
    pub circuit: CircuitConfig,
}

impl Default for SpeedConfig {
    fn default() -> Self {
        Self {
            sensor_range: 14.0,
            step_ms: 10.0,
            train_trials: 50,
            eval_episodes: 20,
            circuit: CircuitConfig::default(),
        }
    }
}

impl SpeedConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.sensor_range >= 1.0 && self.step_ms > 0.0) {
            return Err(Error::param("sensor_range", "range >= 1 cell and step_ms > 0 required"));
        }
        if self.train_trials == 0 || self.eval_episodes == 0 {
            return Err(Error::param("eval_episodes", "train_trials and eval_episodes must be positive"));
        }
        self.circuit.validate()
    }

    /// Speeds at or beyond the sensing range reach the obstacle in the
    /// action that reveals it.
    pub fn check_speed(&self, speed: f64) -> Result<()> {
        if !(speed >= 1.0 && speed.is_finite()) {
            return Err(Error::param("speed", "must be finite and >= 1"));
        }
        if speed >= self.sensor_range {
            return Err(Error::Tunneling {
                speed,
                range: self.sensor_range,
            });
        }
        Ok(())
    }
}

/// One-row corridor of `length` cells ending in an obstacle.
pub fn corridor(length: usize) -> Result<GridWorld> {
    if length < 3 {
        return Err(Error::param("length", "corridor needs at least 3 cells"));
    }
    let mut g = GridWorld::open(length, 1, Pos::new(0, 0), Pos::new(0, 0))?;
    g.obstacles.insert(Pos::new(length - 1, 0));
    Ok(g)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpisodeResult {
    pub success: bool,
    /// Distance to the obstacle when it came into view, cells.
    pub cue_distance: f64,
    pub cr_latency: Option<f64>,
    /// Actions after the cue until the turn, if any.
    pub turn_after: Option<usize>,
    /// Index (after the cue) of the move that would hit the obstacle.
    pub collision_after: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeedResult {
    pub speed: f64,
    pub success: f64,
    pub mean_latency: Option<f64>,
    pub episodes: Vec<EpisodeResult>,
}

/// Run one frozen episode. `phase` in [0, 1) sets where the agent stands
/// within its stride when the obstacle comes into view.
pub fn run_episode(
    circuit: &mut ConditioningCircuit,
    env: &GridWorld,
    speed: f64,
    phase: f64,
    cfg: &SpeedConfig,
) -> Result<EpisodeResult> {
    cfg.check_speed(speed)?;
    let gap = env
        .distance_ahead(Action::Right)
        .ok_or_else(|| Error::param("env", "no obstacle ahead of the agent"))? as f64
        + 1.0;
    if gap <= cfg.sensor_range + speed {
        return Err(Error::param("env", "corridor too short to approach the obstacle from out of range"));
    }
    // first position within range, walking in strides of `speed`
    let cue_distance = cfg.sensor_range - phase.clamp(0.0, 1.0 - 1e-9) * speed;
    // moves k = 0, 1, ... after the cue; move k ends at cue_distance - (k+1) speed
    let collision_after = (cue_distance / speed).ceil() as usize - 1;
    let isi = cue_distance / speed * cfg.step_ms;
    let o = circuit.probe(&TrialSpec::new(vec![0], false, isi))?;
    let turn_after = o.cr_latency.map(|l| (l / cfg.step_ms).ceil() as usize);
    Ok(EpisodeResult {
        success: turn_after.is_some_and(|t| t <= collision_after),
        cue_distance,
        cr_latency: o.cr_latency,
        turn_after,
        collision_after,
    })
}

/// Train the circuit with the obstacle as US at `train_speed`.
pub fn train_avoidance(env: &GridWorld, train_speed: f64, cfg: &SpeedConfig, seed: u64) -> Result<ConditioningCircuit> {
    cfg.validate()?;
    cfg.check_speed(train_speed)?;
    env.validate()?;
    let mut circuit = ConditioningCircuit::new(cfg.circuit.clone(), derive_seed(seed, "speed.circuit", 0))?;
    let mut rng = substream(seed, "speed.train", 0);
    for _ in 0..cfg.train_trials {
        let phase: f64 = rng.random();
        let d = cfg.sensor_range - phase * train_speed;
        circuit.trial(&TrialSpec::new(vec![0], true, d / train_speed * cfg.step_ms))?;
    }
    Ok(circuit)
}

pub fn evaluate_speed(
    circuit: &ConditioningCircuit,
    env: &GridWorld,
    speed: f64,
    cfg: &SpeedConfig,
    seed: u64,
) -> Result<SpeedResult> {
    let mut circuit = circuit.clone();
    let mut rng = substream(seed, "speed.eval", speed.to_bits());
    let episodes = (0..cfg.eval_episodes)
        .map(|_| run_episode(&mut circuit, env, speed, rng.random(), cfg))
        .collect::<Result<Vec<_>>>()?;
    let success = episodes.iter().filter(|e| e.success).count() as f64 / episodes.len() as f64;
    let lat: Vec<f64> = episodes.iter().filter_map(|e| e.cr_latency).collect();
    Ok(SpeedResult {
        speed,
        success,
        mean_latency: (!lat.is_empty()).then(|| lat.iter().sum::<f64>() / lat.len() as f64),
        episodes,
    })
}

/// Train at `train_speed`, then evaluate the frozen circuit at every test speed.
pub fn speed_generalization(
    env: &GridWorld,
    train_speed: f64,
    test_speeds: &[f64],
    cfg: &SpeedConfig,
    seed: u64,
) -> Result<Vec<SpeedResult>> {
    for &s in test_speeds {
        cfg.check_speed(s)?;
    }
    let circuit = train_avoidance(env, train_speed, cfg, seed)?;
    test_speeds
        .par_iter()
        .map(|&s| evaluate_speed(&circuit, env, s, cfg, seed))
        .collect()
}
