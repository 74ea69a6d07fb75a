//! Motor to visual-feedback association.
//!
//! The efference copy of a command drives a 2D grid of Gaussian-tuned units
//! over commanded joint posture, sample by sample along the joint path. Each
//! unit projects to two visual prediction units (seen hand x and y). Weights
//! change only while motor and visual activity fall in the same sample
//! window: `dw = lr * a_pre * (v_obs - v_pred)`, with the step normalized by
//! the code's energy. Every episode starts from `home`.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::arm::{MotorCommand, TrajPoint, Trajectory};
use crate::error::{Error, Result};
use crate::rng::stream;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AssociationConfig {
    /// Units per joint axis.
    pub grid: usize,
    /// Posture every episode starts from, degrees.
    pub home: [f64; 2],
    /// Range covered by the grid, degrees either side of `home`.
    pub range: f64,
    /// Tuning width in grid spacings.
    pub width: f64,
    pub lr: f64,
    /// After `t` updates the rate is `lr / (1 + t / lr_decay_updates)`.
    pub lr_decay_updates: f64,
    pub epochs: usize,
    /// Fraction of episodes held out for the error history.
    pub holdout: f64,
    pub weight_bound: f64,
    /// Summed tuning activity a unit needs before it counts as experienced.
    pub experience_floor: f64,
    pub confidence_threshold: f64,
}

impl Default for AssociationConfig {
    fn default() -> Self {
        Self {
            grid: 13,
            home: super::arm::ArmConfig::default().home,
            range: 60.0,
            width: 0.7,
            lr: 0.5,
            lr_decay_updates: 10_000.0,
            epochs: 30,
            holdout: 0.2,
            weight_bound: 10.0,
            experience_floor: 0.5,
            confidence_threshold: 0.5,
        }
    }
}

impl AssociationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.grid < 2 {
            return Err(Error::param("grid", "need at least 2 units per axis"));
        }
        if !(self.range > 0.0 && self.width > 0.0 && self.lr > 0.0 && self.weight_bound > 0.0 && self.lr_decay_updates > 0.0) {
            return Err(Error::param("association", "range, width, rates and weight_bound must be positive"));
        }
        if !(0.0..1.0).contains(&self.holdout) {
            return Err(Error::param("holdout", "must be in [0, 1)"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssociationMap {
    pub config: AssociationConfig,
    /// Samples per command after the starting one.
    pub steps: usize,
    pub sample_dt: f64,
    /// `[x, y]` weights of each motor unit.
    pub weights: Vec<[f64; 2]>,
    pub experience: Vec<f64>,
    /// Mean relative held-out error after each epoch.
    pub error_history: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub trajectory: Trajectory,
    pub confidence: f64,
    pub low_confidence: bool,
}

/// Joint postures along a command's linear path, start included.
fn posture_path(start: [f64; 2], cmd: &MotorCommand, steps: usize) -> Vec<[f64; 2]> {
    (0..=steps)
        .map(|i| {
            let f = i as f64 / steps as f64;
            [start[0] + f * cmd.joint_deltas[0], start[1] + f * cmd.joint_deltas[1]]
        })
        .collect()
}

impl AssociationMap {
    fn centers(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        let g = self.config.grid;
        let step = 2.0 * self.config.range / (g - 1) as f64;
        let [h1, h2] = self.config.home;
        (0..g * g).map(move |j| {
            (
                h1 - self.config.range + (j / g) as f64 * step,
                h2 - self.config.range + (j % g) as f64 * step,
            )
        })
    }

    /// Tuning curve activity of each motor unit for a commanded posture.
    pub fn motor_code(&self, posture: [f64; 2]) -> Vec<f64> {
        let step = 2.0 * self.config.range / (self.config.grid - 1) as f64;
        let s2 = 2.0 * (self.config.width * step).powi(2);
        let [q1, q2] = posture;
        self.centers()
            .map(|(c1, c2)| (-((q1 - c1).powi(2) + (q2 - c2).powi(2)) / s2).exp())
            .collect()
    }

    fn readout(&self, code: &[f64]) -> [f64; 2] {
        let z: f64 = code.iter().sum::<f64>().max(f64::MIN_POSITIVE);
        let mut out = [0.0; 2];
        for (a, w) in code.iter().zip(&self.weights) {
            out[0] += a / z * w[0];
            out[1] += a / z * w[1];
        }
        out
    }

    pub fn is_trained(&self) -> bool {
        !self.error_history.is_empty()
    }

    fn posture_confidence(&self, posture: [f64; 2]) -> f64 {
        let code = self.motor_code(posture);
        let z: f64 = code.iter().sum::<f64>().max(f64::MIN_POSITIVE);
        code.iter()
            .zip(&self.experience)
            .map(|(a, e)| a * (e / self.config.experience_floor).min(1.0))
            .sum::<f64>()
            / z
    }

    /// Lowest posture confidence along the command's path from `home`.
    pub fn confidence(&self, cmd: &MotorCommand) -> f64 {
        posture_path(self.config.home, cmd, self.steps)
            .into_iter()
            .map(|q| self.posture_confidence(q))
            .fold(1.0, f64::min)
    }

    /// Expected visual feedback of `cmd` from `home`, as displacements from
    /// the movement start.
    pub fn predict(&self, cmd: &MotorCommand) -> Result<Prediction> {
        if !self.is_trained() {
            return Err(Error::NotTrained("association map".into()));
        }
        self.predict_raw(cmd)
    }

    fn predict_raw(&self, cmd: &MotorCommand) -> Result<Prediction> {
        let trajectory = self.predict_path(self.config.home, std::slice::from_ref(cmd))?;
        let confidence = self.confidence(cmd);
        Ok(Prediction {
            trajectory,
            confidence,
            low_confidence: confidence < self.config.confidence_threshold,
        })
    }

    fn predict_path(&self, start: [f64; 2], cmds: &[MotorCommand]) -> Result<Trajectory> {
        let mut postures = vec![start];
        for c in cmds {
            c.validate(f64::INFINITY)?;
            let from = *postures.last().expect("non-empty");
            postures.extend(posture_path(from, c, self.steps).into_iter().skip(1));
        }
        let t0 = cmds.first().map_or(0.0, |c| c.timestamp);
        let seen: Vec<[f64; 2]> = postures.iter().map(|&q| self.readout(&self.motor_code(q))).collect();
        Trajectory::new(
            seen.iter()
                .enumerate()
                .map(|(i, p)| TrajPoint {
                    t: t0 + i as f64 * self.sample_dt,
                    x: p[0] - seen[0][0],
                    y: p[1] - seen[0][1],
                })
                .collect(),
        )
    }

    /// Expected feedback of commands executed back to back from `home`.
    pub fn predict_sequence(&self, cmds: &[MotorCommand]) -> Result<Trajectory> {
        if !self.is_trained() {
            return Err(Error::NotTrained("association map".into()));
        }
        self.predict_path(self.config.home, cmds)
    }

    /// Mean relative prediction error over `episodes`.
    pub fn error_on(&self, episodes: &[(MotorCommand, Trajectory)]) -> Result<f64> {
        if episodes.is_empty() {
            return Err(Error::Empty("episodes".into()));
        }
        let mut total = 0.0;
        for (c, t) in episodes {
            total += relative_error(&self.predict_raw(c)?.trajectory, t)?;
        }
        Ok(total / episodes.len() as f64)
    }
}

/// RMS point distance between displacement series, relative to the RMS
/// excursion of `target` from its start (absolute when the target is still).
pub fn relative_error(pred: &Trajectory, target: &Trajectory) -> Result<f64> {
    let (p, q) = (pred.displacements(), target.displacements());
    if p.len() != q.len() || p.is_empty() {
        return Err(Error::ShapeMismatch(format!("{} vs {} samples", p.len(), q.len())));
    }
    let n = p.len() as f64;
    let err = (p.iter().zip(&q).map(|(a, b)| (a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sum::<f64>() / n).sqrt();
    let scale = (q.iter().map(|b| b.0 * b.0 + b.1 * b.1).sum::<f64>() / n).sqrt();
    Ok(if scale > 0.0 { err / scale } else { err })
}

/// Train a fresh map on `(command, observed trajectory)` episodes.
pub fn learn_motor_visual(
    episodes: &[(MotorCommand, Trajectory)],
    config: &AssociationConfig,
    seed: u64,
) -> Result<AssociationMap> {
    config.validate()?;
    let first = episodes
        .first()
        .ok_or_else(|| Error::Empty("no training episodes".into()))?;
    let samples = first.1.len();
    if samples < 2 {
        return Err(Error::Degenerate("training trajectories need two samples".into()));
    }
    if let Some((_, t)) = episodes.iter().find(|(_, t)| t.len() != samples) {
        return Err(Error::ShapeMismatch(format!("episode has {} samples, expected {samples}", t.len())));
    }
    let pts = first.1.samples();
    let mut map = AssociationMap {
        config: config.clone(),
        steps: samples - 1,
        sample_dt: pts[1].t - pts[0].t,
        weights: vec![[0.0; 2]; config.grid * config.grid],
        experience: vec![0.0; config.grid * config.grid],
        error_history: Vec::new(),
    };
    let mut rng = stream(seed, "motor_visual");
    let mut order: Vec<usize> = (0..episodes.len()).collect();
    order.shuffle(&mut rng);
    let n_hold = ((episodes.len() as f64) * config.holdout).floor() as usize;
    let (held_idx, train_idx) = if n_hold == 0 || n_hold == episodes.len() {
        (order.clone(), order)
    } else {
        let (h, t) = order.split_at(n_hold);
        (h.to_vec(), t.to_vec())
    };
    let held: Vec<_> = held_idx.iter().map(|&i| episodes[i].clone()).collect();
    // one (motor code, seen position) pair per sample window
    let mut windows: Vec<(Vec<f64>, [f64; 2])> = Vec::new();
    for &i in &train_idx {
        let (cmd, seen) = &episodes[i];
        // relative to the seen home posture, which every episode starts from
        for (q, (x, y)) in posture_path(config.home, cmd, map.steps).into_iter().zip(seen.displacements()) {
            let code = map.motor_code(q);
            for (e, a) in map.experience.iter_mut().zip(&code) {
                *e += a;
            }
            windows.push((code, [x, y]));
        }
    }
    let b = config.weight_bound;
    let mut idx: Vec<usize> = (0..windows.len()).collect();
    let mut updates = 0.0;
    for _ in 0..config.epochs {
        idx.shuffle(&mut rng);
        for &i in &idx {
            let lr = config.lr / (1.0 + updates / config.lr_decay_updates);
            updates += 1.0;
            let (code, target) = &windows[i];
            let pred = map.readout(code);
            let z: f64 = code.iter().sum();
            // normalized step so lr is the fraction of the error removed
            let energy: f64 = code.iter().map(|a| (a / z).powi(2)).sum();
            let err = [target[0] - pred[0], target[1] - pred[1]];
            for (a, w) in code.iter().zip(map.weights.iter_mut()) {
                let g = lr * a / z / energy;
                if g < 1e-12 {
                    continue;
                }
                w[0] = (w[0] + g * err[0]).clamp(-b, b);
                w[1] = (w[1] + g * err[1]).clamp(-b, b);
            }
        }
        let e = map.error_on(&held)?;
        map.error_history.push(e);
    }
    Ok(map)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bodily::arm::{Arm, ArmConfig};

    fn episode(arm: &mut Arm, d: [f64; 2]) -> (MotorCommand, Trajectory) {
        arm.reset();
        let c = MotorCommand::new(d, 0.0, 45.0).unwrap();
        let t = arm.execute(&c).unwrap();
        (c, t)
    }

    #[test]
    fn memorizes_single_pair() {
        let mut arm = Arm::new(ArmConfig::default(), (0.0, 0.0));
        let ep = episode(&mut arm, [20.0, -10.0]);
        let cfg = AssociationConfig {
            epochs: 300,
            ..Default::default()
        };
        let map = learn_motor_visual(std::slice::from_ref(&ep), &cfg, 1).unwrap();
        let e = map.error_on(&[ep]).unwrap();
        assert!(e < 0.02);
    }

    #[test]
    fn two_orthogonal_commands() {
        let mut arm = Arm::new(ArmConfig::default(), (0.0, 0.0));
        let eps = vec![episode(&mut arm, [25.0, 0.0]), episode(&mut arm, [0.0, 25.0])];
        let cfg = AssociationConfig {
            holdout: 0.0,
            ..Default::default()
        };
        let map = learn_motor_visual(&eps, &cfg, 1).unwrap();
        for e in &eps {
            assert!(map.error_on(std::slice::from_ref(e)).unwrap() < 0.1);
        }
    }

    #[test]
    fn untrained_and_empty_are_rejected() {
        assert!(learn_motor_visual(&[], &AssociationConfig::default(), 0).is_err());
        let mut arm = Arm::new(ArmConfig::default(), (0.0, 0.0));
        let ep = episode(&mut arm, [5.0, 5.0]);
        let cfg = AssociationConfig {
            epochs: 0,
            ..Default::default()
        };
        let map = learn_motor_visual(&[ep], &cfg, 0).unwrap();
        assert!(matches!(map.predict(&MotorCommand::zero()), Err(Error::NotTrained(_))));
    }

    fn babble(n: usize, limit: f64, seed: u64) -> Vec<(MotorCommand, Trajectory)> {
        use rand::Rng;
        let mut rng = crate::rng::stream(seed, "babble");
        let mut arm = Arm::new(ArmConfig::default(), (0.0, 0.0));
        (0..n)
            .map(|_| {
                let d = [rng.random_range(-limit..=limit), rng.random_range(-limit..=limit)];
                episode(&mut arm, d)
            })
            .collect()
    }

    /// Error of always predicting the mean displacement series.
    fn chance_error(train: &[(MotorCommand, Trajectory)], test: &[(MotorCommand, Trajectory)]) -> f64 {
        let n = train[0].1.len();
        let mut mean = vec![(0.0, 0.0); n];
        for (_, t) in train {
            for (m, d) in mean.iter_mut().zip(t.displacements()) {
                m.0 += d.0 / train.len() as f64;
                m.1 += d.1 / train.len() as f64;
            }
        }
        let mean_t = test[0].1.map_points(|i, _, _| mean[i]);
        test.iter().map(|(_, t)| relative_error(&mean_t, t).unwrap()).sum::<f64>() / test.len() as f64
    }

    #[test]
    fn shuffled_pairing_stays_at_chance() {
        let train = babble(300, 40.0, 1);
        let test = babble(60, 40.0, 2);
        let chance = chance_error(&train, &test);
        let cfg = AssociationConfig::default();
        let good = learn_motor_visual(&train, &cfg, 3).unwrap().error_on(&test).unwrap();
        let mut shuffled = train.clone();
        let n = shuffled.len();
        for i in 0..n {
            shuffled[i].1 = train[(i * 7 + 3) % n].1.clone();
        }
        let bad = learn_motor_visual(&shuffled, &cfg, 3).unwrap().error_on(&test).unwrap();
        assert!(good < 0.15 * chance, "trained {good} vs chance {chance}");
        assert!(bad > 0.9 * chance, "shuffled {bad} vs chance {chance}");
    }

    #[test]
    fn held_out_error_trends_down() {
        let map = learn_motor_visual(&babble(300, 40.0, 5), &AssociationConfig::default(), 5).unwrap();
        let ma: Vec<f64> = map.error_history.windows(5).map(|w| w.iter().sum::<f64>() / 5.0).collect();
        for w in ma.windows(2) {
            assert!(w[1] <= w[0] + 1e-9, "{ma:?}");
        }
    }

    #[test]
    fn readback_zero_and_out_of_support() {
        let train = babble(200, 15.0, 8);
        let map = learn_motor_visual(&train, &AssociationConfig::default(), 8).unwrap();
        let still = map.predict(&MotorCommand::zero()).unwrap();
        assert!(still.trajectory.displacements().iter().all(|d| d.0 == 0.0 && d.1 == 0.0));
        let inside = MotorCommand::new([10.0, -8.0], 0.0, 45.0).unwrap();
        assert!(!map.predict(&inside).unwrap().low_confidence);
        let scaled = inside.scaled(4.0);
        assert!(map.predict(&scaled).unwrap().low_confidence);
        assert!(map.error_on(&train[..20]).unwrap() < 0.1);
    }
}
