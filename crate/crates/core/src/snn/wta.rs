//! Winner-take-all readout.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum TieRule {
    #[default]
    LowestIndex,
    /// Uniform choice among the tied maxima, drawn from `seed`.
    Random { seed: u64 },
}

/// Index of the most active unit.
pub fn wta_select(activities: &[f64], tie: TieRule) -> Result<usize> {
    if activities.is_empty() {
        return Err(Error::Empty("wta_select activities".into()));
    }
    if activities.iter().any(|a| a.is_nan()) {
        return Err(Error::NonFinite("wta_select activities".into()));
    }
    let max = activities.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let tied: Vec<usize> = activities
        .iter()
        .enumerate()
        .filter(|(_, &a)| a == max)
        .map(|(i, _)| i)
        .collect();
    Ok(match tie {
        TieRule::LowestIndex => tied[0],
        TieRule::Random { seed } => {
            let mut r = rng::stream(seed, "wta_select");
            tied[r.random_range(0..tied.len())]
        }
    })
}

/// Convenience for spike counts.
pub fn wta_select_counts(counts: &[usize], tie: TieRule) -> Result<usize> {
    let a: Vec<f64> = counts.iter().map(|&c| c as f64).collect();
    wta_select(&a, tie)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn argmax_and_ties() {
        assert_eq!(wta_select(&[3.0, 9.0, 1.0], TieRule::LowestIndex).unwrap(), 1);
        assert_eq!(wta_select(&[5.0, 5.0], TieRule::LowestIndex).unwrap(), 0);
        assert!(wta_select(&[], TieRule::LowestIndex).is_err());
        let mut seen = [false; 2];
        for seed in 0..32 {
            seen[wta_select(&[5.0, 5.0, 1.0], TieRule::Random { seed }).unwrap()] = true;
        }
        assert!(seen[0] && seen[1]);
    }

    proptest! {
        #[test]
        fn permutation_equivariance(v in prop::collection::vec(0u32..1000, 1..12), rot in 0usize..12) {
            let vals: Vec<f64> = v.iter().map(|&x| x as f64).collect();
            let n = vals.len();
            let rot = rot % n;
            let perm: Vec<usize> = (0..n).map(|i| (i + rot) % n).collect();
            let permuted: Vec<f64> = perm.iter().map(|&p| vals[p]).collect();
            let w = wta_select(&vals, TieRule::LowestIndex).unwrap();
            let wp = wta_select(&permuted, TieRule::LowestIndex).unwrap();
            prop_assert_eq!(vals[perm[wp]], vals[w]);
            let distinct = vals.iter().filter(|&&x| x == vals[w]).count() == 1;
            if distinct {
                prop_assert_eq!(perm[wp], w);
            }
        }
    }
}
