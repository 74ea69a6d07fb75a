//! Multimodal concept fusion.
//!
//! Each modality's feature vector becomes a deterministic rate-window spike
//! train; two trains are aligned by maximum spike coincidence over a window
//! of temporal offsets, superposed, and classified against prototypes by
//! cosine similarity of per-neuron counts. More than two modalities fuse
//! left to right.

mod fixture;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::snn::{encode_rate_window, Spike, SpikeTrain};

pub use fixture::{generate_fixture, BimodalFixture, ConceptSample, FixtureConfig, FixtureReport, evaluate_fixture};

/// Default peak rate of the window code, spikes per ms.
pub const DEFAULT_MAX_RATE: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceTag {
    Sensory,
    TextDerived,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModalityRepr {
    pub modality: String,
    /// Values in `[0, 1]`.
    pub features: Vec<f64>,
    pub source: SourceTag,
}

impl ModalityRepr {
    pub fn new(modality: &str, features: Vec<f64>, source: SourceTag) -> Result<Self> {
        let r = Self {
            modality: modality.into(),
            features,
            source,
        };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(v) = self.features.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::param("features", format!("{v} outside [0, 1]")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FusedConcept {
    pub fused: SpikeTrain,
    /// Coincidences per neuron at the winning offset.
    pub coincidences: Vec<usize>,
    /// Offset (ms) applied to the second train.
    pub offset: i64,
}

impl FusedConcept {
    pub fn total_coincidences(&self) -> usize {
        self.coincidences.iter().sum()
    }

    /// Per-neuron spike counts of the fused train.
    pub fn counts(&self) -> Vec<f64> {
        self.fused.counts().into_iter().map(|c| c as f64).collect()
    }
}

/// Rate-window spike train of a modality representation.
pub fn to_spike_train(repr: &ModalityRepr, duration_t: f64) -> Result<SpikeTrain> {
    to_spike_train_with_rate(repr, duration_t, DEFAULT_MAX_RATE)
}

pub fn to_spike_train_with_rate(repr: &ModalityRepr, duration_t: f64, max_rate: f64) -> Result<SpikeTrain> {
    repr.validate()?;
    encode_rate_window(&repr.features, duration_t, max_rate)
}

fn binned(train: &SpikeTrain) -> Vec<BTreeMap<i64, usize>> {
    let mut bins = vec![BTreeMap::new(); train.neuron_count()];
    for s in train.events() {
        *bins[s.1].entry(s.0.floor() as i64).or_insert(0) += 1;
    }
    bins
}

/// Coincidences per neuron between `a` and `b` moved by `offset` ms (1 ms bins).
pub fn coincidences_at(a: &SpikeTrain, b: &SpikeTrain, offset: i64) -> Vec<usize> {
    let ba = binned(a);
    let bb = binned(b);
    coincidences_binned(&ba, &bb, offset)
}

fn coincidences_binned(ba: &[BTreeMap<i64, usize>], bb: &[BTreeMap<i64, usize>], offset: i64) -> Vec<usize> {
    ba.iter()
        .zip(bb)
        .map(|(ma, mb)| {
            ma.iter()
                .map(|(bin, &ca)| mb.get(&(bin - offset)).map_or(0, |&cb| ca.min(cb)))
                .sum()
        })
        .collect()
}

/// Align `b` to `a` by the offset in `[-window, window]` that maximizes spike
/// coincidences (ties go to the smallest `|offset|`, then the negative one),
/// and superpose the aligned trains.
pub fn sliding_coordinate(a: &SpikeTrain, b: &SpikeTrain, window: u32) -> Result<FusedConcept> {
    if a.neuron_count() != b.neuron_count() {
        return Err(Error::ShapeMismatch(format!(
            "neuron counts {} vs {}",
            a.neuron_count(),
            b.neuron_count()
        )));
    }
    let ba = binned(a);
    let bb = binned(b);
    let w = i64::from(window);
    let mut best: Option<(usize, i64, Vec<usize>)> = None;
    let mut order: Vec<i64> = (-w..=w).collect();
    order.sort_by_key(|o| (o.abs(), *o > 0));
    for o in order {
        let c = coincidences_binned(&ba, &bb, o);
        let total: usize = c.iter().sum();
        if best.as_ref().is_none_or(|b| total > b.0) {
            best = Some((total, o, c));
        }
    }
    let (_, offset, coincidences) = best.expect("window yields at least offset 0");
    let duration = a.duration().max(b.duration());
    let shifted = b.events().iter().map(|s| Spike(s.0 + offset as f64, s.1));
    let fused = SpikeTrain::clipped(
        a.neuron_count(),
        duration,
        a.events().iter().copied().chain(shifted),
    );
    Ok(FusedConcept {
        fused,
        coincidences,
        offset,
    })
}

/// Fuse any number of trains left to right.
pub fn fuse_all(trains: &[SpikeTrain], window: u32) -> Result<FusedConcept> {
    let (first, rest) = trains
        .split_first()
        .ok_or_else(|| Error::Empty("no trains to fuse".into()))?;
    let mut acc = FusedConcept {
        fused: first.clone(),
        coincidences: vec![0; first.neuron_count()],
        offset: 0,
    };
    for t in rest {
        acc = sliding_coordinate(&acc.fused, t, window)?;
    }
    Ok(acc)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConceptLabel {
    Label(u32),
    /// Fused activity was all zero.
    Unclassifiable,
}

pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}

/// Nearest prototype by cosine similarity; ties go to the lowest label.
pub fn classify_counts(counts: &[f64], prototypes: &BTreeMap<u32, Vec<f64>>) -> Result<ConceptLabel> {
    if prototypes.is_empty() {
        return Err(Error::Empty("prototype set".into()));
    }
    if let Some((l, _)) = prototypes.iter().find(|(_, p)| p.len() != counts.len()) {
        return Err(Error::ShapeMismatch(format!("prototype {l} width")));
    }
    if counts.iter().all(|&c| c == 0.0) {
        return Ok(ConceptLabel::Unclassifiable);
    }
    let mut best = (f64::NEG_INFINITY, 0u32);
    for (&label, proto) in prototypes {
        let s = cosine(counts, proto);
        if s > best.0 {
            best = (s, label);
        }
    }
    Ok(ConceptLabel::Label(best.1))
}

pub fn classify_concept(fused: &FusedConcept, prototypes: &BTreeMap<u32, Vec<f64>>) -> Result<ConceptLabel> {
    classify_counts(&fused.counts(), prototypes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn train(n: usize, events: &[(f64, usize)]) -> SpikeTrain {
        SpikeTrain::new(n, 100.0, events.iter().map(|&(t, i)| Spike(t, i)).collect()).unwrap()
    }

    #[test]
    fn spike_train_conversion() {
        let zero = ModalityRepr::new("touch", vec![0.0; 4], SourceTag::Sensory).unwrap();
        assert!(to_spike_train(&zero, 100.0).unwrap().is_empty());
        let one_hot = ModalityRepr::new("word", vec![0.0, 1.0, 0.0], SourceTag::TextDerived).unwrap();
        let t = to_spike_train(&one_hot, 100.0).unwrap();
        assert!(t.events().iter().all(|s| s.1 == 1));
        let r = ModalityRepr::new("v", vec![0.2, 0.5, 1.0], SourceTag::Sensory).unwrap();
        let c1 = to_spike_train(&r, 100.0).unwrap().counts();
        let c2 = to_spike_train(&r, 200.0).unwrap().counts();
        assert_eq!(c2, c1.iter().map(|c| 2 * c).collect::<Vec<_>>());
        assert_eq!(to_spike_train(&r, 100.0).unwrap(), to_spike_train(&r.clone(), 100.0).unwrap());
        assert!(ModalityRepr::new("bad", vec![1.5], SourceTag::Sensory).is_err());
    }

    #[test]
    fn constructed_shift_is_recovered() {
        let a = train(3, &[(3.0, 0), (10.0, 1), (22.0, 2), (40.0, 0), (41.0, 1)]);
        let b = a.shifted(7.0);
        let f = sliding_coordinate(&a, &b, 10).unwrap();
        assert_eq!(f.offset, -7);
        assert_eq!(f.total_coincidences(), a.len());
        assert!(f.total_coincidences() >= coincidences_at(&a, &b, 0).iter().sum::<usize>());
    }

    #[test]
    fn empty_first_train_is_identity() {
        let a = SpikeTrain::empty(2, 100.0);
        let b = train(2, &[(5.0, 0), (9.0, 1)]);
        let f = sliding_coordinate(&a, &b, 5).unwrap();
        assert_eq!(f.offset, 0);
        assert_eq!(f.fused, b);
        assert!(sliding_coordinate(&a, &SpikeTrain::empty(3, 100.0), 5).is_err());
    }

    #[test]
    fn classification_rules() {
        let mut protos = BTreeMap::new();
        protos.insert(2, vec![1.0, 0.0, 0.0]);
        protos.insert(5, vec![0.0, 1.0, 1.0]);
        protos.insert(7, vec![0.0, 2.0, 2.0]);
        assert_eq!(classify_counts(&[3.0, 0.0, 0.0], &protos).unwrap(), ConceptLabel::Label(2));
        // 5 and 7 tie on cosine: lowest label wins
        assert_eq!(classify_counts(&[0.0, 1.0, 1.0], &protos).unwrap(), ConceptLabel::Label(5));
        assert_eq!(classify_counts(&[0.0; 3], &protos).unwrap(), ConceptLabel::Unclassifiable);
        assert!(classify_counts(&[1.0; 3], &BTreeMap::new()).is_err());
    }

    proptest! {
        #[test]
        fn fusion_is_mirror_symmetric(
            ea in prop::collection::vec((0u32..60, 0usize..3), 0..12),
            eb in prop::collection::vec((0u32..60, 0usize..3), 0..12),
        ) {
            let a = train(3, &ea.iter().map(|&(t, i)| (t as f64, i)).collect::<Vec<_>>());
            let b = train(3, &eb.iter().map(|&(t, i)| (t as f64, i)).collect::<Vec<_>>());
            let ab = sliding_coordinate(&a, &b, 6).unwrap();
            let ba = sliding_coordinate(&b, &a, 6).unwrap();
            prop_assert_eq!(ab.total_coincidences(), ba.total_coincidences());
            prop_assert_eq!(&ab.coincidences, &coincidences_at(&b, &a, -ab.offset));
            let zero: usize = coincidences_at(&a, &b, 0).iter().sum();
            prop_assert!(ab.total_coincidences() >= zero);
            // offsets mirror unless +o and -o tie exactly
            let plus: usize = coincidences_at(&a, &b, ab.offset.abs()).iter().sum();
            let minus: usize = coincidences_at(&a, &b, -ab.offset.abs()).iter().sum();
            if plus != minus {
                prop_assert_eq!(ab.offset, -ba.offset);
            }
        }
    }
}
