//! Several identical arms move at once in front of a mirror. Each one sees
//! every reflected trajectory without labels and claims the one that best
//! matches the feedback it predicts for its own commands.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::arm::{Arm, ArmConfig, MotorCommand, Trajectory};
use super::association::{learn_motor_visual, AssociationConfig, AssociationMap};
use super::selfworld::trajectory_correlation;
use crate::error::{Error, Result};
use crate::rng::{stream, substream, SimRng};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MirrorConfig {
    pub n_agents: usize,
    pub trials: usize,
    pub commands_per_trial: usize,
    /// Random trial movements aim at postures within this many degrees of
    /// home on each joint.
    pub posture_span: f64,
    /// SD of visual noise on every observed position, scene units.
    pub noise_sd: f64,
    pub ambiguity_gap: f64,
    pub identical_commands: bool,
    pub agent_spacing: f64,
    pub mirror_y: f64,
    pub training_episodes: usize,
    pub arm: ArmConfig,
    pub association: AssociationConfig,
}

impl Default for MirrorConfig {
    fn default() -> Self {
        Self {
            n_agents: 3,
            trials: 100,
            commands_per_trial: 4,
            posture_span: 40.0,
            noise_sd: 0.01,
            ambiguity_gap: 0.05,
            identical_commands: false,
            agent_spacing: 2.5,
            mirror_y: 3.0,
            training_episodes: 400,
            arm: ArmConfig::default(),
            association: AssociationConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MirrorTrialRow {
    pub trial: usize,
    pub agent: usize,
    pub claimed_index: usize,
    pub true_index: usize,
    pub score: f64,
    #[serde(skip)]
    pub ambiguous: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MirrorReport {
    /// Correct claims over unambiguous claims.
    pub accuracy: f64,
    pub ambiguous_rate: f64,
    pub claims: usize,
    pub ambiguous: usize,
    pub final_training_error: f64,
    pub rows: Vec<MirrorTrialRow>,
}

impl MirrorReport {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("trial,agent,claimed_index,true_index,score\n");
        for r in &self.rows {
            s.push_str(&format!(
                "{},{},{},{},{:.6}\n",
                r.trial, r.agent, r.claimed_index, r.true_index, r.score
            ));
        }
        s
    }
}

/// What the camera sees: reflection about the mirror line plus pixel noise.
pub fn mirror_view(t: &Trajectory, mirror_y: f64, noise_sd: f64, rng: &mut SimRng) -> Result<Trajectory> {
    let n = Normal::new(0.0, noise_sd).map_err(|e| Error::param("noise_sd", e.to_string()))?;
    let mut noisy = |v: f64| if noise_sd > 0.0 { v + n.sample(rng) } else { v };
    Ok(t.map_points(|_, x, y| (noisy(x), noisy(2.0 * mirror_y - y))))
}

fn random_command(rng: &mut SimRng, limit: f64) -> MotorCommand {
    MotorCommand {
        joint_deltas: [rng.random_range(-limit..=limit), rng.random_range(-limit..=limit)],
        timestamp: 0.0,
    }
}

/// Moves toward random postures near home, each capped at the joint limit.
fn random_sequence(rng: &mut SimRng, cfg: &MirrorConfig) -> Vec<MotorCommand> {
    let home = cfg.arm.home;
    let span = cfg.posture_span;
    let lim = cfg.arm.joint_limit;
    let mut q = home;
    (0..cfg.commands_per_trial)
        .map(|_| {
            let mut d = [0.0; 2];
            for j in 0..2 {
                let target = home[j] + rng.random_range(-span..=span);
                d[j] = (target - q[j]).clamp(-lim, lim);
                q[j] += d[j];
            }
            MotorCommand {
                joint_deltas: d,
                timestamp: 0.0,
            }
        })
        .collect()
}

/// Self-observation in the mirror from the home pose.
pub fn train_mirror_agent(cfg: &MirrorConfig, seed: u64) -> Result<AssociationMap> {
    let mut rng = stream(seed, "mirror_training");
    let mut arm = Arm::new(cfg.arm.clone(), (0.0, 0.0));
    let limit = cfg.arm.joint_limit;
    let episodes = (0..cfg.training_episodes)
        .map(|_| {
            arm.reset();
            let c = random_command(&mut rng, limit);
            let t = arm.execute(&c)?;
            Ok((c, mirror_view(&t, cfg.mirror_y, cfg.noise_sd, &mut rng)?))
        })
        .collect::<Result<Vec<_>>>()?;
    learn_motor_visual(&episodes, &cfg.association, seed)
}

pub fn run_mirror_test(cfg: &MirrorConfig, seed: u64) -> Result<MirrorReport> {
    let map = train_mirror_agent(cfg, seed)?;
    run_mirror_test_with(&map, cfg, seed)
}

/// Mirror test with an already trained (shared, identical) agent model.
pub fn run_mirror_test_with(map: &AssociationMap, cfg: &MirrorConfig, seed: u64) -> Result<MirrorReport> {
    if cfg.n_agents == 0 {
        return Err(Error::param("n_agents", "need at least one agent"));
    }
    if cfg.trials == 0 {
        return Err(Error::param("trials", "must be positive"));
    }
    if cfg.commands_per_trial == 0 {
        return Err(Error::param("commands_per_trial", "must be positive"));
    }
    let per_trial: Vec<Vec<MirrorTrialRow>> = (0..cfg.trials)
        .into_par_iter()
        .map(|trial| mirror_trial(map, cfg, seed, trial))
        .collect::<Result<_>>()?;
    let rows: Vec<MirrorTrialRow> = per_trial.into_iter().flatten().collect();
    let ambiguous = rows.iter().filter(|r| r.ambiguous).count();
    let decided: Vec<_> = rows.iter().filter(|r| !r.ambiguous).collect();
    let correct = decided.iter().filter(|r| r.claimed_index == r.true_index).count();
    Ok(MirrorReport {
        accuracy: if decided.is_empty() {
            0.0
        } else {
            correct as f64 / decided.len() as f64
        },
        ambiguous_rate: ambiguous as f64 / rows.len() as f64,
        claims: rows.len(),
        ambiguous,
        final_training_error: map.error_history.last().copied().unwrap_or(f64::NAN),
        rows,
    })
}

fn mirror_trial(map: &AssociationMap, cfg: &MirrorConfig, seed: u64, trial: usize) -> Result<Vec<MirrorTrialRow>> {
    let mut rng = substream(seed, "mirror_trial", trial as u64);
    let n = cfg.n_agents;
    let shared = random_sequence(&mut rng, cfg);
    let commands: Vec<Vec<MotorCommand>> = (0..n)
        .map(|_| {
            if cfg.identical_commands {
                shared.clone()
            } else {
                random_sequence(&mut rng, cfg)
            }
        })
        .collect();
    let mut observed = Vec::with_capacity(n);
    for (i, cmds) in commands.iter().enumerate() {
        let mut arm = Arm::new(cfg.arm.clone(), (i as f64 * cfg.agent_spacing, 0.0));
        let t = arm.execute_sequence(cmds)?;
        observed.push(mirror_view(&t, cfg.mirror_y, cfg.noise_sd, &mut rng)?);
    }
    // the scene is unlabeled: present reflections in random order
    let mut slot: Vec<usize> = (0..n).collect();
    slot.shuffle(&mut rng);
    let mut shown = vec![None; n];
    for (agent, &s) in slot.iter().enumerate() {
        shown[s] = Some(&observed[agent]);
    }
    let mut rows = Vec::with_capacity(n);
    for (agent, cmds) in commands.iter().enumerate() {
        let pred = map.predict_sequence(cmds)?;
        let scores = shown
            .iter()
            .map(|o| trajectory_correlation(&pred, o.expect("every slot filled")))
            .collect::<Result<Vec<f64>>>()?;
        let mut best = 0;
        for (j, s) in scores.iter().enumerate() {
            if *s > scores[best] {
                best = j;
            }
        }
        let runner_up = scores
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != best)
            .map(|(_, s)| *s)
            .fold(f64::NEG_INFINITY, f64::max);
        rows.push(MirrorTrialRow {
            trial,
            agent,
            claimed_index: best,
            true_index: slot[agent],
            score: scores[best],
            ambiguous: scores[best] - runner_up < cfg.ambiguity_gap,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick() -> MirrorConfig {
        MirrorConfig {
            trials: 20,
            training_episodes: 200,
            ..Default::default()
        }
    }

    #[test]
    fn single_agent_is_always_right() {
        let cfg = MirrorConfig { n_agents: 1, ..quick() };
        let r = run_mirror_test(&cfg, 4).unwrap();
        assert_eq!(r.accuracy, 1.0);
        assert_eq!(r.ambiguous, 0);
    }

    #[test]
    fn identical_commands_are_ambiguous() {
        let cfg = MirrorConfig {
            identical_commands: true,
            ..quick()
        };
        let r = run_mirror_test(&cfg, 4).unwrap();
        assert_eq!(r.ambiguous_rate, 1.0);
    }

    #[test]
    fn csv_has_one_row_per_claim() {
        let r = run_mirror_test(&quick(), 9).unwrap();
        let csv = r.to_csv();
        assert_eq!(csv.lines().count(), 1 + 20 * 3);
        assert!(csv.starts_with("trial,agent,claimed_index,true_index,score"));
        assert!(run_mirror_test(&MirrorConfig { trials: 0, ..quick() }, 1).is_err());
    }
}
