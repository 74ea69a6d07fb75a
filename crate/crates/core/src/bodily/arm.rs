//! Planar two-link arm and its observed end-effector trajectories.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Joint angle changes in degrees, issued at `timestamp` ms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MotorCommand {
    pub joint_deltas: [f64; 2],
    pub timestamp: f64,
}

impl MotorCommand {
    pub fn new(joint_deltas: [f64; 2], timestamp: f64, limit: f64) -> Result<Self> {
        let c = Self {
            joint_deltas,
            timestamp,
        };
        c.validate(limit)?;
        Ok(c)
    }

    pub fn zero() -> Self {
        Self {
            joint_deltas: [0.0; 2],
            timestamp: 0.0,
        }
    }

    pub fn validate(&self, limit: f64) -> Result<()> {
        if !self.timestamp.is_finite() || self.joint_deltas.iter().any(|d| !d.is_finite()) {
            return Err(Error::NonFinite("motor command".into()));
        }
        if let Some(d) = self.joint_deltas.iter().find(|d| d.abs() > limit) {
            return Err(Error::param("joint_deltas", format!("|{d}| exceeds joint limit {limit}")));
        }
        Ok(())
    }

    pub fn scaled(&self, k: f64) -> Self {
        Self {
            joint_deltas: self.joint_deltas.map(|d| d * k),
            timestamp: self.timestamp,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajPoint {
    pub t: f64,
    pub x: f64,
    pub y: f64,
}

/// Time-ordered 2D positions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<TrajPoint>", into = "Vec<TrajPoint>")]
pub struct Trajectory {
    samples: Vec<TrajPoint>,
}

impl TryFrom<Vec<TrajPoint>> for Trajectory {
    type Error = Error;
    fn try_from(v: Vec<TrajPoint>) -> Result<Self> {
        Trajectory::new(v)
    }
}

impl From<Trajectory> for Vec<TrajPoint> {
    fn from(t: Trajectory) -> Self {
        t.samples
    }
}

impl Trajectory {
    pub fn new(samples: Vec<TrajPoint>) -> Result<Self> {
        if samples.iter().any(|p| !(p.t.is_finite() && p.x.is_finite() && p.y.is_finite())) {
            return Err(Error::NonFinite("trajectory sample".into()));
        }
        if samples.windows(2).any(|w| w[1].t <= w[0].t) {
            return Err(Error::param("samples", "times must be strictly increasing"));
        }
        Ok(Self { samples })
    }

    pub fn samples(&self) -> &[TrajPoint] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn start_time(&self) -> Option<f64> {
        self.samples.first().map(|p| p.t)
    }

    pub fn end_time(&self) -> Option<f64> {
        self.samples.last().map(|p| p.t)
    }

    /// Positions relative to the first sample.
    pub fn displacements(&self) -> Vec<(f64, f64)> {
        let Some(p0) = self.samples.first() else {
            return Vec::new();
        };
        self.samples.iter().map(|p| (p.x - p0.x, p.y - p0.y)).collect()
    }

    /// Same positions played backwards on the same clock.
    pub fn time_reversed(&self) -> Self {
        let times = self.samples.iter().map(|p| p.t);
        let samples = times
            .zip(self.samples.iter().rev())
            .map(|(t, p)| TrajPoint { t, x: p.x, y: p.y })
            .collect();
        Self { samples }
    }

    pub fn map_points(&self, mut f: impl FnMut(usize, f64, f64) -> (f64, f64)) -> Self {
        let samples = self
            .samples
            .iter()
            .enumerate()
            .map(|(i, p)| {
                let (x, y) = f(i, p.x, p.y);
                TrajPoint { t: p.t, x, y }
            })
            .collect();
        Self { samples }
    }

    /// Append `other`, dropping its first sample (it repeats our last one).
    pub fn chain(&self, other: &Trajectory) -> Result<Self> {
        let (Some(end), Some(first)) = (self.samples.last(), other.samples.first()) else {
            return Ok(if self.is_empty() { other.clone() } else { self.clone() });
        };
        let (dt, dx, dy) = (end.t - first.t, end.x - first.x, end.y - first.y);
        let mut samples = self.samples.clone();
        samples.extend(other.samples.iter().skip(1).map(|p| TrajPoint {
            t: p.t + dt,
            x: p.x + dx,
            y: p.y + dy,
        }));
        Trajectory::new(samples)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArmConfig {
    pub upper: f64,
    pub fore: f64,
    /// Home joint angles in degrees.
    pub home: [f64; 2],
    pub joint_limit: f64,
    /// Samples per command after the starting one.
    pub samples_per_command: usize,
    pub sample_dt: f64,
}

impl Default for ArmConfig {
    fn default() -> Self {
        Self {
            upper: 1.0,
            fore: 0.8,
            home: [30.0, 60.0],
            joint_limit: 45.0,
            samples_per_command: 8,
            sample_dt: 10.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Arm {
    pub config: ArmConfig,
    pub base: (f64, f64),
    pub joints: [f64; 2],
}

impl Arm {
    pub fn new(config: ArmConfig, base: (f64, f64)) -> Self {
        let joints = config.home;
        Self { config, base, joints }
    }

    pub fn end_effector(&self, joints: [f64; 2]) -> (f64, f64) {
        let (q1, q2) = (joints[0].to_radians(), joints[1].to_radians());
        let c = &self.config;
        (
            self.base.0 + c.upper * q1.cos() + c.fore * (q1 + q2).cos(),
            self.base.1 + c.upper * q1.sin() + c.fore * (q1 + q2).sin(),
        )
    }

    pub fn reset(&mut self) {
        self.joints = self.config.home;
    }

    /// Execute `cmd` linearly in joint space; returns `samples_per_command + 1` samples.
    pub fn execute(&mut self, cmd: &MotorCommand) -> Result<Trajectory> {
        cmd.validate(self.config.joint_limit)?;
        let k = self.config.samples_per_command.max(1);
        let start = self.joints;
        let samples = (0..=k)
            .map(|i| {
                let f = i as f64 / k as f64;
                let q = [
                    start[0] + f * cmd.joint_deltas[0],
                    start[1] + f * cmd.joint_deltas[1],
                ];
                let (x, y) = self.end_effector(q);
                TrajPoint {
                    t: cmd.timestamp + i as f64 * self.config.sample_dt,
                    x,
                    y,
                }
            })
            .collect();
        self.joints = [start[0] + cmd.joint_deltas[0], start[1] + cmd.joint_deltas[1]];
        Trajectory::new(samples)
    }

    /// Execute commands back to back without resetting.
    pub fn execute_sequence(&mut self, cmds: &[MotorCommand]) -> Result<Trajectory> {
        let mut out = Trajectory::new(Vec::new())?;
        for c in cmds {
            let seg = self.execute(c)?;
            out = out.chain(&seg)?;
        }
        Ok(out)
    }
}
