use serde::{Deserialize, Serialize};

use super::arm::Trajectory;
use crate::error::{Error, Result};

pub const DEFAULT_MATCH_THRESHOLD: f64 = 0.8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Agency {
    SelfGenerated,
    Other,
}

fn centered(v: impl Iterator<Item = f64> + Clone) -> Vec<f64> {
    let n = v.clone().count() as f64;
    let m = v.clone().sum::<f64>() / n;
    v.map(|x| x - m).collect()
}

/// Pearson correlation of the concatenated x and y series, each axis centered
/// on its own mean.
pub fn trajectory_correlation(a: &Trajectory, b: &Trajectory) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::ShapeMismatch(format!("{} vs {} samples", a.len(), b.len())));
    }
    if a.len() < 2 {
        return Err(Error::Degenerate("trajectory needs at least two samples".into()));
    }
    let series = |t: &Trajectory| {
        let mut v = centered(t.samples().iter().map(|p| p.x));
        v.extend(centered(t.samples().iter().map(|p| p.y)));
        v
    };
    let (x, y) = (series(a), series(b));
    let sxx: f64 = x.iter().map(|v| v * v).sum();
    let syy: f64 = y.iter().map(|v| v * v).sum();
    // rounding leaves ~1e-32 residue on a still trajectory
    if sxx < 1e-20 || syy < 1e-20 {
        return Err(Error::Degenerate("stationary trajectory".into()));
    }
    let sxy: f64 = x.iter().zip(&y).map(|(p, q)| p * q).sum();
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Self iff the observed motion correlates with the expected feedback at
/// `threshold` or above.
pub fn classify_self_world(predicted: &Trajectory, observed: &Trajectory, threshold: f64) -> Result<Agency> {
    let (Some(ps), Some(pe), Some(os), Some(oe)) = (
        predicted.start_time(),
        predicted.end_time(),
        observed.start_time(),
        observed.end_time(),
    ) else {
        return Err(Error::Degenerate("empty trajectory".into()));
    };
    if pe < os || oe < ps {
        return Err(Error::param("observed", "time ranges do not overlap"));
    }
    Ok(if trajectory_correlation(predicted, observed)? >= threshold {
        Agency::SelfGenerated
    } else {
        Agency::Other
    })
}
