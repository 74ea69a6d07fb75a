//! Rubber-hand drift.
//!
//! The felt hand position is a weighted mix of the seen (rubber) hand at the
//! deflection angle and the proprioceptive estimate at zero:
//! `drift = w * angle`. The visual weight is `w = r c / (r c + 1)` where `r` is
//! the reliability of vision relative to proprioception and
//! `c = k / (k + angle)` is a congruence kernel (scaled by
//! `async_congruence` when the touches are not synchronous). `k` is set so
//! that `w = 1/2` exactly at `small_regime_end`. Past `cutoff` the seen hand
//! is no longer bound to the body and the drift is zero.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RubberHandConfig {
    /// Degrees; vision dominates below this angle.
    pub small_regime_end: f64,
    /// Degrees; no drift beyond this angle.
    pub cutoff: f64,
    pub visual_reliability: f64,
    pub async_congruence: f64,
}

impl Default for RubberHandConfig {
    fn default() -> Self {
        Self {
            small_regime_end: 20.0,
            cutoff: 60.0,
            visual_reliability: 3.0,
            async_congruence: 0.1,
        }
    }
}

impl RubberHandConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.small_regime_end > 0.0 && self.cutoff > self.small_regime_end) {
            return Err(Error::param("cutoff", "need 0 < small_regime_end < cutoff"));
        }
        if !(self.visual_reliability > 1.0) {
            return Err(Error::param("visual_reliability", "must exceed 1"));
        }
        if !(0.0..=1.0).contains(&self.async_congruence) {
            return Err(Error::param("async_congruence", "must be in [0, 1]"));
        }
        Ok(())
    }

    fn kernel_width(&self) -> f64 {
        self.small_regime_end / (self.visual_reliability - 1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Modality {
    Vision,
    Proprioception,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriftResult {
    pub deflection_angle: f64,
    pub proprioceptive_drift: f64,
    pub visual_weight: f64,
    pub dominant_modality: Modality,
}

pub fn run_rubber_hand(angle: f64, synchronous: bool, cfg: &RubberHandConfig) -> Result<DriftResult> {
    cfg.validate()?;
    if !angle.is_finite() {
        return Err(Error::NonFinite("angle".into()));
    }
    if angle < 0.0 {
        return Err(Error::param("angle", "must be non-negative"));
    }
    let visual_weight = if angle > cfg.cutoff {
        0.0
    } else {
        let k = cfg.kernel_width();
        let sync = if synchronous { 1.0 } else { cfg.async_congruence };
        let c = sync * k / (k + angle);
        let rc = cfg.visual_reliability * c;
        rc / (rc + 1.0)
    };
    Ok(DriftResult {
        deflection_angle: angle,
        proprioceptive_drift: visual_weight * angle,
        visual_weight,
        dominant_modality: if visual_weight > 0.5 {
            Modality::Vision
        } else {
            Modality::Proprioception
        },
    })
}

/// Drift at each angle of `0, step, 2 step, ..` up to `max_angle`.
pub fn drift_sweep(max_angle: f64, step: f64, synchronous: bool, cfg: &RubberHandConfig) -> Result<Vec<DriftResult>> {
    if !(step > 0.0) {
        return Err(Error::param("step", "must be positive"));
    }
    let n = (max_angle / step).floor() as usize;
    (0..=n).map(|i| run_rubber_hand(i as f64 * step, synchronous, cfg)).collect()
}
