//! Seeded synthetic bimodal dataset.
//!
//! Every class has one attribute vector shared by both modalities; each
//! modality sees it through its own independent Gaussian noise (clipped to
//! `[0, 1]`). The second modality's train is delayed by a random latency so
//! fusion has to realign it.

use std::collections::BTreeMap;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{classify_counts, fuse_all, to_spike_train_with_rate, ConceptLabel, ModalityRepr, SourceTag};
use crate::error::{Error, Result};
use crate::rng::{stream, substream};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FixtureConfig {
    pub classes: u32,
    pub features: usize,
    pub samples_per_class: usize,
    pub sensory_noise_sd: f64,
    pub text_noise_sd: f64,
    /// Upper bound (ms) of the second modality's latency.
    pub max_latency: u32,
    pub duration: f64,
    pub max_rate: f64,
    pub window: u32,
}

impl Default for FixtureConfig {
    fn default() -> Self {
        Self {
            classes: 10,
            features: 16,
            samples_per_class: 20,
            sensory_noise_sd: 0.35,
            text_noise_sd: 0.4,
            max_latency: 5,
            duration: 100.0,
            max_rate: super::DEFAULT_MAX_RATE,
            window: 8,
        }
    }
}

impl FixtureConfig {
    pub fn validate(&self) -> Result<()> {
        if self.classes == 0 || self.features == 0 || self.samples_per_class == 0 {
            return Err(Error::param("fixture", "classes, features and samples must be positive"));
        }
        let ok = |v: f64| v >= 0.0 && v.is_finite();
        if !ok(self.sensory_noise_sd) || !ok(self.text_noise_sd) {
            return Err(Error::param("noise_sd", "must be finite and non-negative"));
        }
        if !(self.duration > 0.0) || !(self.max_rate > 0.0) {
            return Err(Error::param("duration", "duration and max_rate must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConceptSample {
    pub label: u32,
    pub sensory: ModalityRepr,
    pub text: ModalityRepr,
    pub latency: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BimodalFixture {
    pub config: FixtureConfig,
    pub seed: u64,
    pub sensory_prototypes: BTreeMap<u32, Vec<f64>>,
    pub text_prototypes: BTreeMap<u32, Vec<f64>>,
    pub samples: Vec<ConceptSample>,
}

impl BimodalFixture {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

pub fn generate_fixture(cfg: &FixtureConfig, seed: u64) -> Result<BimodalFixture> {
    cfg.validate()?;
    let mut rng = stream(seed, "concept_prototypes");
    let mut proto = |_: u32| (0..cfg.features).map(|_| rng.random::<f64>()).collect::<Vec<_>>();
    let sensory_prototypes: BTreeMap<u32, Vec<f64>> = (0..cfg.classes).map(|c| (c, proto(c))).collect();
    let text_prototypes = sensory_prototypes.clone();
    let normal = |sd: f64| Normal::new(0.0, sd).map_err(|e| Error::param("noise_sd", e.to_string()));
    let (ns, nt) = (normal(cfg.sensory_noise_sd)?, normal(cfg.text_noise_sd)?);
    let mut samples = Vec::new();
    for c in 0..cfg.classes {
        for k in 0..cfg.samples_per_class {
            let mut r = substream(seed, "concept_sample", u64::from(c) * 1_000_003 + k as u64);
            let mut jitter = |p: &[f64], noise: &Normal<f64>| {
                p.iter()
                    .map(|v| (v + noise.sample(&mut r)).clamp(0.0, 1.0))
                    .collect::<Vec<_>>()
            };
            let s = jitter(&sensory_prototypes[&c], &ns);
            let t = jitter(&text_prototypes[&c], &nt);
            let latency = r.random_range(0..=cfg.max_latency);
            samples.push(ConceptSample {
                label: c,
                sensory: ModalityRepr::new("sensory", s, SourceTag::Sensory)?,
                text: ModalityRepr::new("text", t, SourceTag::TextDerived)?,
                latency,
            });
        }
    }
    Ok(BimodalFixture {
        config: cfg.clone(),
        seed,
        sensory_prototypes,
        text_prototypes,
        samples,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixtureReport {
    pub sensory_accuracy: f64,
    pub text_accuracy: f64,
    pub fused_accuracy: f64,
    pub mean_abs_offset_error: f64,
    pub unclassifiable: usize,
}

fn counts_of(repr: &ModalityRepr, cfg: &FixtureConfig) -> Result<Vec<f64>> {
    Ok(to_spike_train_with_rate(repr, cfg.duration, cfg.max_rate)?
        .counts()
        .into_iter()
        .map(|c| c as f64)
        .collect())
}

/// Classify every sample by each modality alone and by the fused train.
pub fn evaluate_fixture(fx: &BimodalFixture) -> Result<FixtureReport> {
    let cfg = &fx.config;
    let protos = |m: &BTreeMap<u32, Vec<f64>>, name: &str, tag| -> Result<BTreeMap<u32, Vec<f64>>> {
        m.iter()
            .map(|(&l, p)| Ok((l, counts_of(&ModalityRepr::new(name, p.clone(), tag)?, cfg)?)))
            .collect()
    };
    let sp = protos(&fx.sensory_prototypes, "sensory", SourceTag::Sensory)?;
    let tp = protos(&fx.text_prototypes, "text", SourceTag::TextDerived)?;
    let fp: BTreeMap<u32, Vec<f64>> = sp
        .iter()
        .map(|(l, a)| (*l, a.iter().zip(&tp[l]).map(|(x, y)| x + y).collect()))
        .collect();

    let hit = |label: ConceptLabel, truth: u32| usize::from(label == ConceptLabel::Label(truth));
    let (mut s_ok, mut t_ok, mut f_ok, mut unclass, mut off_err) = (0, 0, 0, 0, 0.0);
    for smp in &fx.samples {
        let a = to_spike_train_with_rate(&smp.sensory, cfg.duration, cfg.max_rate)?;
        let b = to_spike_train_with_rate(&smp.text, cfg.duration, cfg.max_rate)?.shifted(f64::from(smp.latency));
        s_ok += hit(classify_counts(&counts_of(&smp.sensory, cfg)?, &sp)?, smp.label);
        t_ok += hit(classify_counts(&counts_of(&smp.text, cfg)?, &tp)?, smp.label);
        let fused = fuse_all(&[a, b], cfg.window)?;
        off_err += (fused.offset + i64::from(smp.latency)).abs() as f64;
        let label = classify_counts(&fused.counts(), &fp)?;
        unclass += usize::from(label == ConceptLabel::Unclassifiable);
        f_ok += hit(label, smp.label);
    }
    let n = fx.samples.len() as f64;
    Ok(FixtureReport {
        sensory_accuracy: s_ok as f64 / n,
        text_accuracy: t_ok as f64 / n,
        fused_accuracy: f_ok as f64 / n,
        mean_abs_offset_error: off_err / n,
        unclassifiable: unclass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixture_is_reproducible() {
        let cfg = FixtureConfig {
            samples_per_class: 3,
            ..Default::default()
        };
        let a = generate_fixture(&cfg, 11).unwrap();
        assert_eq!(a.to_json().unwrap(), generate_fixture(&cfg, 11).unwrap().to_json().unwrap());
        assert_ne!(a.samples, generate_fixture(&cfg, 12).unwrap().samples);
        assert_eq!(a.samples.len(), 30);
    }

    #[test]
    fn fusion_beats_each_modality() {
        let fx = generate_fixture(&FixtureConfig::default(), 3).unwrap();
        let r = evaluate_fixture(&fx).unwrap();
        eprintln!("{r:?}");
        assert!(r.fused_accuracy >= r.sensory_accuracy.max(r.text_accuracy));
    }
}
