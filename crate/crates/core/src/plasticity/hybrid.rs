use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Blend of a local (STDP-driven) and a global (error-driven) weight change.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HybridUpdateParams {
    /// Local learning rate.
    pub eta: f64,
    /// Global learning rate.
    pub beta: f64,
    pub delta_local: f64,
    pub delta_global: f64,
}

/// `w + eta * delta_local + beta * delta_global`.
pub fn hybrid_update(w: f64, p: &HybridUpdateParams) -> Result<f64> {
    if ![w, p.eta, p.beta, p.delta_local, p.delta_global]
        .iter()
        .all(|x| x.is_finite())
    {
        return Err(Error::NonFinite("hybrid update terms".into()));
    }
    Ok(w + p.eta * p.delta_local + p.beta * p.delta_global)
}

/// Elementwise form over a weight vector.
pub fn hybrid_update_all(
    weights: &[f64],
    eta: f64,
    beta: f64,
    delta_local: &[f64],
    delta_global: &[f64],
) -> Result<Vec<f64>> {
    if weights.len() != delta_local.len() || weights.len() != delta_global.len() {
        return Err(Error::ShapeMismatch("hybrid update operands".into()));
    }
    weights
        .iter()
        .zip(delta_local)
        .zip(delta_global)
        .map(|((&w, &dl), &dg)| {
            hybrid_update(
                w,
                &HybridUpdateParams {
                    eta,
                    beta,
                    delta_local: dl,
                    delta_global: dg,
                },
            )
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn identity_and_cancellation() {
        let p = HybridUpdateParams {
            eta: 0.0,
            beta: 0.0,
            delta_local: 3.0,
            delta_global: -7.0,
        };
        assert_eq!(hybrid_update(0.42, &p).unwrap(), 0.42);
        let p = HybridUpdateParams {
            eta: 0.1,
            beta: 0.2,
            delta_local: 1.0,
            delta_global: -0.5,
        };
        assert!((hybrid_update(0.5, &p).unwrap() - 0.5).abs() < 1e-15);
        let bad = HybridUpdateParams { eta: f64::NAN, ..p };
        assert!(hybrid_update(0.5, &bad).is_err());
    }

    proptest! {
        #[test]
        fn affine_in_deltas(w in -5.0f64..5.0, eta in -1.0f64..1.0, beta in -1.0f64..1.0,
                            dl in -3.0f64..3.0, dg in -3.0f64..3.0) {
            let one = hybrid_update(w, &HybridUpdateParams { eta, beta, delta_local: dl, delta_global: dg }).unwrap() - w;
            let two = hybrid_update(w, &HybridUpdateParams { eta, beta, delta_local: 2.0 * dl, delta_global: 2.0 * dg }).unwrap() - w;
            prop_assert!((two - 2.0 * one).abs() < 1e-12);
            let v = hybrid_update_all(&[w, w], eta, beta, &[dl, 0.0], &[dg, 0.0]).unwrap();
            prop_assert_eq!(v[1], w);
        }
    }
}
