//! Temporal-consistency loss for per-timestep SNN outputs.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// What each timestep's distribution is compared against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ConsistencyAnchor {
    /// `KL(p_t || softmax(mean_t logits))`, averaged over timesteps.
    #[default]
    MeanLogits,
    /// `KL(p_t || p_s)` averaged over all ordered pairs.
    Pairwise,
}

fn log_softmax(z: &[f64]) -> Vec<f64> {
    let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = m + z.iter().map(|v| (v - m).exp()).sum::<f64>().ln();
    z.iter().map(|v| v - lse).collect()
}

fn kl(log_p: &[f64], log_q: &[f64]) -> f64 {
    log_p
        .iter()
        .zip(log_q)
        .map(|(lp, lq)| lp.exp() * (lp - lq))
        .sum::<f64>()
        .max(0.0)
}

/// Mean divergence of each timestep's softmax output from the anchor.
/// Non-negative, and zero exactly when every timestep yields the same
/// distribution.
pub fn temporal_consistency_loss(logits: &[Vec<f64>], anchor: ConsistencyAnchor) -> Result<f64> {
    let t = logits.len();
    if t == 0 {
        return Err(Error::Empty("no timesteps".into()));
    }
    let k = logits[0].len();
    if k == 0 || logits.iter().any(|l| l.len() != k) {
        return Err(Error::ShapeMismatch("inconsistent class count across timesteps".into()));
    }
    if logits.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("logits".into()));
    }
    let logp: Vec<Vec<f64>> = logits.iter().map(|l| log_softmax(l)).collect();
    let n = t as f64;
    Ok(match anchor {
        ConsistencyAnchor::MeanLogits => {
            // offsets from the first step keep the mean exact on constant input
            let first = &logits[0];
            let mean: Vec<f64> = (0..k)
                .map(|c| first[c] + logits.iter().map(|l| l[c] - first[c]).sum::<f64>() / n)
                .collect();
            let logq = log_softmax(&mean);
            logp.iter().map(|lp| kl(lp, &logq)).sum::<f64>() / n
        }
        ConsistencyAnchor::Pairwise => {
            let mut s = 0.0;
            for a in &logp {
                for b in &logp {
                    s += kl(a, b);
                }
            }
            s / (n * n)
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn constant_outputs_are_exactly_zero_for_any_length() {
        let row = vec![0.1, -2.7, 1.3, 0.7];
        for t in 1..12 {
            let steps = vec![row.clone(); t];
            assert_eq!(temporal_consistency_loss(&steps, ConsistencyAnchor::MeanLogits).unwrap(), 0.0);
        }
    }

    #[test]
    fn constant_outputs_give_zero() {
        let l = vec![vec![0.2, -1.0, 3.0]; 4];
        assert_eq!(temporal_consistency_loss(&l, ConsistencyAnchor::MeanLogits).unwrap(), 0.0);
        assert_eq!(temporal_consistency_loss(&l, ConsistencyAnchor::Pairwise).unwrap(), 0.0);
        assert!(temporal_consistency_loss(&[vec![f64::NAN]], ConsistencyAnchor::MeanLogits).is_err());
        assert!(temporal_consistency_loss(&[], ConsistencyAnchor::MeanLogits).is_err());
    }

    #[test]
    fn two_step_hand_value() {
        // p1 = (1/2, 1/2), p2 = (3/4, 1/4), anchor softmax((ln 3)/2, 0) = (r, 1 - r), r = sqrt3/(sqrt3+1)
        let r = 3f64.sqrt() / (3f64.sqrt() + 1.0);
        let kl1 = 0.5 * (0.5 / r).ln() + 0.5 * (0.5 / (1.0 - r)).ln();
        let kl2 = 0.75 * (0.75 / r).ln() + 0.25 * (0.25 / (1.0 - r)).ln();
        let expected = (kl1 + kl2) / 2.0;
        let got = temporal_consistency_loss(
            &[vec![0.0, 0.0], vec![3f64.ln(), 0.0]],
            ConsistencyAnchor::MeanLogits,
        )
        .unwrap();
        assert!((got - expected).abs() < 1e-9, "{got} vs {expected}");
    }

    proptest! {
        #[test]
        fn nonnegative_and_order_free(l in prop::collection::vec(prop::collection::vec(-4.0f64..4.0, 3), 1..6)) {
            let a = temporal_consistency_loss(&l, ConsistencyAnchor::MeanLogits).unwrap();
            prop_assert!(a >= 0.0);
            let mut r = l.clone();
            r.reverse();
            let b = temporal_consistency_loss(&r, ConsistencyAnchor::MeanLogits).unwrap();
            prop_assert!((a - b).abs() < 1e-12);
            prop_assert!(temporal_consistency_loss(&l, ConsistencyAnchor::Pairwise).unwrap() >= 0.0);
        }
    }
}
