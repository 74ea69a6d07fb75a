//! Spike trains and input encoders.

use rand::Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

/// One spike: `(time_ms, neuron_index)`, serialized as a two-element array.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Spike(pub f64, pub usize);

impl Spike {
    pub fn time(&self) -> f64 {
        self.0
    }
    pub fn neuron(&self) -> usize {
        self.1
    }
}

#[derive(Deserialize)]
struct RawSpikeTrain {
    neuron_count: usize,
    duration: f64,
    events: Vec<Spike>,
}

/// Timestamped spikes of a group of neurons over `[0, duration)`.
///
/// Events are kept sorted by time, then neuron index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSpikeTrain")]
pub struct SpikeTrain {
    neuron_count: usize,
    duration: f64,
    events: Vec<Spike>,
}

impl TryFrom<RawSpikeTrain> for SpikeTrain {
    type Error = Error;
    fn try_from(raw: RawSpikeTrain) -> Result<Self> {
        SpikeTrain::new(raw.neuron_count, raw.duration, raw.events)
    }
}

impl SpikeTrain {
    pub fn new(neuron_count: usize, duration: f64, mut events: Vec<Spike>) -> Result<Self> {
        if !duration.is_finite() || duration < 0.0 {
            return Err(Error::param("duration", "must be finite and >= 0"));
        }
        for s in &events {
            if s.1 >= neuron_count {
                return Err(Error::ShapeMismatch(format!(
                    "spike index {} >= neuron_count {}",
                    s.1, neuron_count
                )));
            }
            if !(s.0 >= 0.0 && s.0 < duration) {
                return Err(Error::param(
                    "events",
                    format!("spike time {} outside [0, {})", s.0, duration),
                ));
            }
        }
        sort_events(&mut events);
        Ok(Self {
            neuron_count,
            duration,
            events,
        })
    }

    pub fn empty(neuron_count: usize, duration: f64) -> Self {
        Self {
            neuron_count,
            duration,
            events: Vec::new(),
        }
    }

    /// Build from events that may fall outside the window; those are dropped.
    pub fn clipped(neuron_count: usize, duration: f64, events: impl IntoIterator<Item = Spike>) -> Self {
        let mut events: Vec<Spike> = events
            .into_iter()
            .filter(|s| s.0 >= 0.0 && s.0 < duration && s.1 < neuron_count)
            .collect();
        sort_events(&mut events);
        Self {
            neuron_count,
            duration,
            events,
        }
    }

    pub fn neuron_count(&self) -> usize {
        self.neuron_count
    }
    pub fn duration(&self) -> f64 {
        self.duration
    }
    pub fn events(&self) -> &[Spike] {
        &self.events
    }
    pub fn len(&self) -> usize {
        self.events.len()
    }
    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// Spike count per neuron.
    pub fn counts(&self) -> Vec<usize> {
        let mut c = vec![0; self.neuron_count];
        for s in &self.events {
            c[s.1] += 1;
        }
        c
    }

    /// Spike count per neuron inside `[start, stop)`.
    pub fn counts_in(&self, start: f64, stop: f64) -> Vec<usize> {
        let mut c = vec![0; self.neuron_count];
        for s in self.events.iter().filter(|s| s.0 >= start && s.0 < stop) {
            c[s.1] += 1;
        }
        c
    }

    pub fn count_in(&self, start: f64, stop: f64) -> usize {
        self.events.iter().filter(|s| s.0 >= start && s.0 < stop).count()
    }

    /// Spike times of one neuron.
    pub fn times_of(&self, neuron: usize) -> Vec<f64> {
        self.events
            .iter()
            .filter(|s| s.1 == neuron)
            .map(|s| s.0)
            .collect()
    }

    /// Mean firing rate over the whole train, in Hz.
    pub fn mean_rate_hz(&self) -> f64 {
        if self.neuron_count == 0 || self.duration <= 0.0 {
            return 0.0;
        }
        self.events.len() as f64 * 1000.0 / (self.neuron_count as f64 * self.duration)
    }

    /// Union of two trains over the same neurons.
    pub fn merge(&self, other: &SpikeTrain) -> Result<SpikeTrain> {
        if self.neuron_count != other.neuron_count {
            return Err(Error::ShapeMismatch("merging trains of different widths".into()));
        }
        let duration = self.duration.max(other.duration);
        let mut events = self.events.clone();
        events.extend_from_slice(&other.events);
        sort_events(&mut events);
        Ok(SpikeTrain {
            neuron_count: self.neuron_count,
            duration,
            events,
        })
    }

    /// All spikes moved by `offset` ms; spikes leaving the window are dropped.
    pub fn shifted(&self, offset: f64) -> SpikeTrain {
        SpikeTrain::clipped(
            self.neuron_count,
            self.duration,
            self.events.iter().map(|s| Spike(s.0 + offset, s.1)),
        )
    }
}

fn sort_events(events: &mut [Spike]) {
    events.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
}

/// Independent homogeneous Poisson processes, one per entry of `rates_hz`.
pub fn encode_poisson(rates_hz: &[f64], duration: f64, seed: u64) -> Result<SpikeTrain> {
    let mut rng = rng::stream(seed, "encode_poisson");
    poisson_with(rates_hz, duration, &mut rng)
}

pub(crate) fn poisson_with<R: Rng + ?Sized>(
    rates_hz: &[f64],
    duration: f64,
    rng: &mut R,
) -> Result<SpikeTrain> {
    if !(duration >= 0.0) || !duration.is_finite() {
        return Err(Error::param("duration", "must be finite and >= 0"));
    }
    let mut events = Vec::new();
    for (i, &rate) in rates_hz.iter().enumerate() {
        if !rate.is_finite() {
            return Err(Error::NonFinite("poisson rate".into()));
        }
        if rate < 0.0 {
            return Err(Error::param("rates", format!("negative rate {rate} at {i}")));
        }
        if rate == 0.0 {
            continue;
        }
        let exp = Exp::new(rate / 1000.0).map_err(|e| Error::param("rates", e.to_string()))?;
        let mut t = exp.sample(rng);
        while t < duration {
            events.push(Spike(t, i));
            t += exp.sample(rng);
        }
    }
    sort_events(&mut events);
    Ok(SpikeTrain {
        neuron_count: rates_hz.len(),
        duration,
        events,
    })
}

/// Deterministic rate code: neuron `i` fires `round(values[i] * duration * max_rate)`
/// spikes evenly spaced over the window, the first at `t = 0`.
///
/// `max_rate` is in spikes per ms.
pub fn encode_rate_window(values: &[f64], duration: f64, max_rate: f64) -> Result<SpikeTrain> {
    if !(duration > 0.0) || !duration.is_finite() {
        return Err(Error::param("duration_T", "must be > 0"));
    }
    if !(max_rate > 0.0) || !max_rate.is_finite() {
        return Err(Error::param("max_rate", "must be > 0"));
    }
    let mut events = Vec::new();
    for (i, &v) in values.iter().enumerate() {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::param("values", format!("value {v} at {i} outside [0, 1]")));
        }
        let count = (v * duration * max_rate).round() as usize;
        let spacing = duration / count.max(1) as f64;
        events.extend((0..count).map(|k| Spike(k as f64 * spacing, i)));
    }
    sort_events(&mut events);
    Ok(SpikeTrain {
        neuron_count: values.len(),
        duration,
        events,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn poisson_zero_rate_is_empty() {
        let t = encode_poisson(&[0.0, 0.0], 1000.0, 1).unwrap();
        assert!(t.is_empty());
        assert_eq!(t.neuron_count(), 2);
    }

    #[test]
    fn poisson_count_within_three_sigma() {
        for seed in 0..20 {
            let t = encode_poisson(&[100.0], 1000.0, seed).unwrap();
            assert!((70..=130).contains(&t.len()), "seed {seed}: {}", t.len());
        }
    }

    #[test]
    fn poisson_is_deterministic_and_rejects_negative() {
        let a = encode_poisson(&[20.0, 50.0], 500.0, 9).unwrap();
        let b = encode_poisson(&[20.0, 50.0], 500.0, 9).unwrap();
        assert_eq!(a, b);
        assert!(encode_poisson(&[-1.0], 10.0, 0).is_err());
    }

    #[test]
    fn rate_window_counts_and_spacing() {
        assert!(encode_rate_window(&[0.0], 100.0, 0.1).unwrap().is_empty());
        let t = encode_rate_window(&[1.0], 100.0, 0.1).unwrap();
        let times = t.times_of(0);
        assert_eq!(times.len(), 10);
        for w in times.windows(2) {
            assert!((w[1] - w[0] - 10.0).abs() < 1e-12);
        }
        let t = encode_rate_window(&[0.5, 0.5], 100.0, 0.1).unwrap();
        let c = t.counts();
        assert_eq!(c[0], c[1]);
        assert!(encode_rate_window(&[1.2], 100.0, 0.1).is_err());
        assert!(encode_rate_window(&[-0.1], 100.0, 0.1).is_err());
    }

    #[test]
    fn train_validation_and_json_shape() {
        assert!(SpikeTrain::new(2, 10.0, vec![Spike(1.0, 2)]).is_err());
        assert!(SpikeTrain::new(2, 10.0, vec![Spike(10.0, 0)]).is_err());
        let t = SpikeTrain::new(2, 10.0, vec![Spike(3.0, 1), Spike(1.0, 0)]).unwrap();
        assert_eq!(t.events()[0], Spike(1.0, 0));
        let json = serde_json::to_string(&t).unwrap();
        assert_eq!(json, r#"{"neuron_count":2,"duration":10.0,"events":[[1.0,0],[3.0,1]]}"#);
        let back: SpikeTrain = serde_json::from_str(&json).unwrap();
        assert_eq!(back, t);
        let bad = r#"{"neuron_count":1,"duration":10.0,"events":[[1.0,4]]}"#;
        assert!(serde_json::from_str::<SpikeTrain>(bad).is_err());
    }
}
