//! Linear centered kernel alignment and the CKA-based transfer loss.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Rows are samples, columns are features.
pub type FeatureBatch = DMatrix<f64>;

fn center_columns(x: &FeatureBatch) -> FeatureBatch {
    let mut c = x.clone();
    for mut col in c.column_iter_mut() {
        let mean = col.mean();
        col.add_scalar_mut(-mean);
    }
    c
}

/// Linear CKA: `||Xc^T Yc||_F^2 / (||Xc^T Xc||_F ||Yc^T Yc||_F)` on
/// column-centered batches.
///
/// A batch with zero variance yields 0 (and a warning).
pub fn linear_cka(x: &FeatureBatch, y: &FeatureBatch) -> Result<f64> {
    if x.nrows() != y.nrows() {
        return Err(Error::ShapeMismatch(format!(
            "row counts differ: {} vs {}",
            x.nrows(),
            y.nrows()
        )));
    }
    if x.iter().chain(y.iter()).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("cka features".into()));
    }
    let xc = center_columns(x);
    let yc = center_columns(y);
    let xx = (xc.transpose() * &xc).norm();
    let yy = (yc.transpose() * &yc).norm();
    if xx <= f64::EPSILON || yy <= f64::EPSILON {
        log::warn!("linear_cka: zero-variance feature batch, alignment defined as 0");
        return Ok(0.0);
    }
    let xy = (xc.transpose() * &yc).norm();
    let xy = xy * xy;
    Ok((xy / (xx * yy)).clamp(0.0, 1.0))
}

/// Inputs of the knowledge-transfer loss.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransferLossConfig {
    /// Learnable per-timestep coefficients; its length is the number of timesteps.
    pub eta_t: Vec<f64>,
    /// Encoder features of the source domain, one batch per timestep.
    pub source_features: Vec<FeatureBatch>,
    /// Encoder features of the target domain, one batch per timestep.
    pub target_features: Vec<FeatureBatch>,
    /// `(source_row, target_row)` pairs that share a label.
    pub label_pairs: Vec<(usize, usize)>,
    /// Classification loss on the target (event) data, one per timestep.
    pub cls_loss: Vec<f64>,
}

impl TransferLossConfig {
    pub fn timesteps(&self) -> usize {
        self.eta_t.len()
    }

    pub fn validate(&self) -> Result<()> {
        let t = self.timesteps();
        if t == 0 {
            return Err(Error::param("timesteps_T", "must be >= 1"));
        }
        if self.source_features.len() != t || self.target_features.len() != t || self.cls_loss.len() != t {
            return Err(Error::ShapeMismatch(
                "eta_t, features and cls_loss must all have one entry per timestep".into(),
            ));
        }
        if self.label_pairs.is_empty() {
            return Err(Error::Empty("no matched label pairs".into()));
        }
        for (s, g) in self.source_features.iter().zip(&self.target_features) {
            if s.ncols() != g.ncols() {
                return Err(Error::ShapeMismatch("source/target feature dimension".into()));
            }
            if let Some(&(i, j)) = self
                .label_pairs
                .iter()
                .find(|(i, j)| *i >= s.nrows() || *j >= g.nrows())
            {
                return Err(Error::ShapeMismatch(format!("label pair ({i}, {j}) out of range")));
            }
        }
        if self.eta_t.iter().chain(&self.cls_loss).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("eta_t / cls_loss".into()));
        }
        Ok(())
    }
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// The loss from precomputed per-timestep alignments:
/// `1 - mean_t(sigmoid(eta_t) * cka_t) + mean_t((1 - sigmoid(eta_t)) * cls_t)`.
pub fn transfer_loss_from_alignment(eta_t: &[f64], cka_t: &[f64], cls_loss: &[f64]) -> Result<f64> {
    let t = eta_t.len();
    if t == 0 || cka_t.len() != t || cls_loss.len() != t {
        return Err(Error::ShapeMismatch("per-timestep terms".into()));
    }
    let n = t as f64;
    let align: f64 = eta_t.iter().zip(cka_t).map(|(&e, &c)| sigmoid(e) * c).sum::<f64>() / n;
    let cls: f64 = eta_t
        .iter()
        .zip(cls_loss)
        .map(|(&e, &l)| (1.0 - sigmoid(e)) * l)
        .sum::<f64>()
        / n;
    Ok(1.0 - align + cls)
}

/// Rows of the source and target batches selected by the matched label pairs.
pub fn matched_rows(
    source: &FeatureBatch,
    target: &FeatureBatch,
    pairs: &[(usize, usize)],
) -> (FeatureBatch, FeatureBatch) {
    let xs = DMatrix::from_fn(pairs.len(), source.ncols(), |r, c| source[(pairs[r].0, c)]);
    let ys = DMatrix::from_fn(pairs.len(), target.ncols(), |r, c| target[(pairs[r].1, c)]);
    (xs, ys)
}

/// Knowledge-transfer loss with linear-kernel CKA over label-matched rows.
pub fn transfer_loss(cfg: &TransferLossConfig) -> Result<f64> {
    cfg.validate()?;
    let cka: Vec<f64> = cfg
        .source_features
        .iter()
        .zip(&cfg.target_features)
        .map(|(s, g)| {
            let (xs, ys) = matched_rows(s, g, &cfg.label_pairs);
            linear_cka(&xs, &ys)
        })
        .collect::<Result<_>>()?;
    transfer_loss_from_alignment(&cfg.eta_t, &cka, &cfg.cls_loss)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn batch(rows: usize, cols: usize, data: &[f64]) -> FeatureBatch {
        DMatrix::from_row_slice(rows, cols, data)
    }

    #[test]
    fn self_alignment_and_zero_variance() {
        let x = batch(4, 2, &[1.0, 2.0, 3.0, 1.0, 0.0, 5.0, 2.0, 2.0]);
        assert!((linear_cka(&x, &x).unwrap() - 1.0).abs() < 1e-12);
        let flat = DMatrix::from_element(4, 2, 3.0);
        assert_eq!(linear_cka(&x, &flat).unwrap(), 0.0);
        assert!(linear_cka(&x, &batch(3, 2, &[0.0; 6])).is_err());
    }

    #[test]
    fn scaled_rotation_is_fully_aligned() {
        let x = batch(5, 2, &[1.0, 0.0, 2.0, 1.0, -1.0, 3.0, 0.5, -2.0, 4.0, 1.0]);
        let (s, c) = 0.3f64.sin_cos();
        let q = batch(2, 2, &[c, -s, s, c]);
        let y = &x * q * 3.0;
        assert!((linear_cka(&x, &y).unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn loss_limits_and_arithmetic() {
        let x = batch(3, 2, &[1.0, 0.0, 0.0, 1.0, 2.0, 2.0]);
        let mk = |eta: f64| TransferLossConfig {
            eta_t: vec![eta, eta],
            source_features: vec![x.clone(), x.clone()],
            target_features: vec![x.clone(), x.clone()],
            label_pairs: vec![(0, 0), (1, 1), (2, 2)],
            cls_loss: vec![0.3, 0.5],
        };
        assert_eq!(transfer_loss(&mk(1e3)).unwrap(), 0.0);
        assert_eq!(transfer_loss(&mk(-1e3)).unwrap(), 1.4);
        let v = transfer_loss_from_alignment(&[0.0], &[0.8], &[0.4]).unwrap();
        assert!((v - 0.8).abs() < 1e-15);
        let mut empty = mk(0.0);
        empty.label_pairs.clear();
        assert!(matches!(transfer_loss(&empty), Err(Error::Empty(_))));
        let mut bad = mk(0.0);
        bad.label_pairs.push((7, 0));
        assert!(transfer_loss(&bad).is_err());
    }

    proptest! {
        #[test]
        fn symmetric_and_bounded(data in prop::collection::vec(-5.0f64..5.0, 30)) {
            let x = batch(5, 3, &data[..15]);
            let y = batch(5, 3, &data[15..]);
            let a = linear_cka(&x, &y).unwrap();
            let b = linear_cka(&y, &x).unwrap();
            prop_assert!((a - b).abs() < 1e-12);
            prop_assert!((0.0..=1.0).contains(&a));
        }
    }
}
