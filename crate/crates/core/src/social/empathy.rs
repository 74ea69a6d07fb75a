//! Mirror-neuron affective empathy and the altruistic rescue rule.
//!
//! Three clusters: a perception population (one group per overt action), a
//! motor population split into disjoint mirror groups (one per action) and an
//! anti-mirror pool, and an emotion population (one group per emotion). Own
//! episodes drive perception, motor and emotion together, and Hebbian
//! co-activity wires perception to mirror and mirror to emotion. Observing an
//! action later replays the same chain. Anti-mirror neurons fire for any
//! perceived action unless the proprioceptive copy of one's own command
//! inhibits them, so their activity marks the action as someone else's.

use serde::{Deserialize, Serialize};

use crate::autonomous::{EmotionTag, ExperienceBuffer};
use crate::error::{Error, Result};
use crate::rng::derive_seed;
use crate::snn::{encode_poisson, simulate, Inputs, Network, NeuronParams, PlasticityTag, SimConfig, Stimulus, WeightMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Emotion {
    Neutral,
    Positive,
    Distress,
}

impl Emotion {
    pub const ALL: [Emotion; 3] = [Emotion::Neutral, Emotion::Positive, Emotion::Distress];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn valence(self) -> f64 {
        match self {
            Emotion::Neutral => 0.0,
            Emotion::Positive => 1.0,
            Emotion::Distress => -1.0,
        }
    }

    /// Read an experience tag; unrecognised labels are rejected.
    pub fn from_tag(tag: &EmotionTag) -> Result<Emotion> {
        match tag.0.as_str() {
            "neutral" => Ok(Emotion::Neutral),
            "positive" | "joy" => Ok(Emotion::Positive),
            "distress" | "negative" | "pain" | "fear" => Ok(Emotion::Distress),
            other => Err(Error::Unknown {
                kind: "emotion",
                name: other.into(),
                registered: "neutral, positive, joy, distress, negative, pain, fear".into(),
            }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Attribution {
    #[serde(rename = "self")]
    SelfAgent,
    Other,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmotionState {
    pub emotion: Emotion,
    /// Spike count per emotion group.
    pub counts: [usize; 3],
    /// (positive - distress) / total, 0 when silent.
    pub valence: f64,
}

impl EmotionState {
    pub fn from_counts(counts: [usize; 3], min_spikes: usize) -> Self {
        let total: usize = counts.iter().sum();
        let emotion = if total < min_spikes.max(1) {
            Emotion::Neutral
        } else {
            // ties go to the lowest index, neutral first
            let best = (0..3).max_by_key(|&i| (counts[i], std::cmp::Reverse(i))).expect("three groups");
            Emotion::ALL[best]
        };
        let valence = if total == 0 {
            0.0
        } else {
            (counts[Emotion::Positive.index()] as f64 - counts[Emotion::Distress.index()] as f64) / total as f64
        };
        Self {
            emotion,
            counts,
            valence,
        }
    }

    /// A fixed emotion at full strength.
    pub fn pure(emotion: Emotion) -> Self {
        Self {
            emotion,
            counts: [0; 3],
            valence: emotion.valence(),
        }
    }

    pub fn negative_valence(&self) -> f64 {
        (-self.valence).max(0.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpathyResponse {
    pub shared: EmotionState,
    pub attribution: Attribution,
    pub mirror_spikes: usize,
    pub anti_mirror_spikes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MirrorSystemConfig {
    pub n_actions: usize,
    /// Neurons per action or emotion group.
    pub group_size: usize,
    pub anti_size: usize,
    /// Drive rate of active groups, Hz.
    pub drive_hz: f64,
    pub window_ms: f64,
    pub eta: f64,
    pub w_max: f64,
    pub perception_to_anti: f64,
    /// Current from the proprioceptive copy onto anti-mirror neurons.
    pub copy_current: f64,
    /// Emotion spikes below this read as neutral.
    pub min_emotion_spikes: usize,
}

impl Default for MirrorSystemConfig {
    fn default() -> Self {
        Self {
            n_actions: 4,
            group_size: 10,
            anti_size: 10,
            drive_hz: 200.0,
            window_ms: 100.0,
            eta: 0.1,
            w_max: 0.5,
            perception_to_anti: 0.3,
            copy_current: -20.0,
            min_emotion_spikes: 5,
        }
    }
}

impl MirrorSystemConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_actions == 0 || self.group_size == 0 || self.anti_size == 0 {
            return Err(Error::param("group_size", "population sizes must be positive"));
        }
        if !(self.drive_hz > 0.0 && self.window_ms > 0.0 && self.eta > 0.0 && self.w_max > 0.0) {
            return Err(Error::param("drive_hz", "rates, window, eta and w_max must be positive"));
        }
        if !(self.perception_to_anti > 0.0 && self.copy_current < 0.0) {
            return Err(Error::param("copy_current", "anti-mirror drive must be excitatory and the copy inhibitory"));
        }
        Ok(())
    }
}

/// One own-experience episode: an overt action and the emotion felt with it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SelfEpisode {
    pub action: usize,
    pub emotion: Option<Emotion>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MirrorSystem {
    pub config: MirrorSystemConfig,
    /// Perception -> mirror, both `n_actions * group_size`.
    pub perception_to_mirror: WeightMatrix,
    /// Mirror -> emotion, `3 * group_size` columns.
    pub mirror_to_emotion: WeightMatrix,
    pub episodes: usize,
    seed: u64,
}

#[derive(Clone, Copy)]
enum Drive {
    Observe,
    Act,
}

impl MirrorSystem {
    pub fn new(config: MirrorSystemConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let m = config.n_actions * config.group_size;
        Ok(Self {
            perception_to_mirror: WeightMatrix::zeros(m, m),
            mirror_to_emotion: WeightMatrix::zeros(m, 3 * config.group_size),
            config,
            episodes: 0,
            seed,
        })
    }

    /// Indices of the mirror neurons; the anti-mirror pool is a separate
    /// population, so the two never overlap.
    pub fn mirror_range(&self, action: usize) -> std::ops::Range<usize> {
        action * self.config.group_size..(action + 1) * self.config.group_size
    }

    fn check_action(&self, action: usize) -> Result<()> {
        if action >= self.config.n_actions {
            return Err(Error::param(
                "action",
                format!("{action} out of range for {} actions", self.config.n_actions),
            ));
        }
        Ok(())
    }

    fn group_rates(&self, n_groups: usize, active: Option<usize>) -> Vec<f64> {
        let g = self.config.group_size;
        (0..n_groups * g)
            .map(|i| if Some(i / g) == active { self.config.drive_hz } else { 0.0 })
            .collect()
    }

    /// Hebbian update from one own episode: perception, motor and emotion
    /// groups fire together and co-active pairs strengthen.
    pub fn learn(&mut self, ep: SelfEpisode) -> Result<()> {
        self.check_action(ep.action)?;
        let c = &self.config;
        let s = derive_seed(self.seed, "mirror.learn", self.episodes as u64);
        let expected = c.drive_hz * c.window_ms / 1000.0;
        let norm = |counts: Vec<usize>| counts.into_iter().map(|k| k as f64 / expected).collect::<Vec<f64>>();
        let per = norm(encode_poisson(&self.group_rates(c.n_actions, Some(ep.action)), c.window_ms, s)?.counts());
        let mot = norm(encode_poisson(&self.group_rates(c.n_actions, Some(ep.action)), c.window_ms, s ^ 1)?.counts());
        let emo = norm(
            encode_poisson(&self.group_rates(3, ep.emotion.map(Emotion::index)), c.window_ms, s ^ 2)?.counts(),
        );
        let (eta, w_max) = (c.eta, c.w_max);
        let hebb = |w: &mut WeightMatrix, pre: &[f64], post: &[f64]| {
            for (i, &x) in pre.iter().enumerate().filter(|(_, x)| **x > 0.0) {
                for (wij, &y) in w.row_mut(i).iter_mut().zip(post) {
                    *wij = (*wij + eta * x * y).min(w_max);
                }
            }
        };
        hebb(&mut self.perception_to_mirror, &per, &mot);
        hebb(&mut self.mirror_to_emotion, &mot, &emo);
        self.episodes += 1;
        Ok(())
    }

    pub fn train(&mut self, episodes: &[SelfEpisode]) -> Result<()> {
        episodes.iter().try_for_each(|&e| self.learn(e))
    }

    /// Train on every record of an experience buffer, oldest first; the
    /// record's action index is the overt action.
    pub fn train_from_experience(&mut self, buffer: &ExperienceBuffer) -> Result<()> {
        let eps = buffer
            .iter()
            .map(|r| {
                Ok(SelfEpisode {
                    action: r.action.index(),
                    emotion: r.emotion.as_ref().map(Emotion::from_tag).transpose()?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        self.train(&eps)
    }

    fn respond(&self, action: usize, drive: Drive, proprioceptive_copy: bool, trial: u64) -> Result<EmpathyResponse> {
        if self.episodes == 0 {
            return Err(Error::NotTrained("mirror system has no self-experience".into()));
        }
        self.check_action(action)?;
        let c = &self.config;
        let m = c.n_actions * c.group_size;
        let mut net = Network::new();
        let p = NeuronParams::default();
        net.add_population("perception", m, p)?;
        net.add_population("mirror", m, p)?;
        net.add_population("anti_mirror", c.anti_size, p)?;
        net.add_population("emotion", 3 * c.group_size, p)?;
        net.connect("perception", "mirror", self.perception_to_mirror.clone(), 1.0, PlasticityTag::Hebbian)?;
        net.connect("mirror", "emotion", self.mirror_to_emotion.clone(), 1.0, PlasticityTag::Hebbian)?;
        net.connect(
            "perception",
            "anti_mirror",
            WeightMatrix::filled(m, c.anti_size, c.perception_to_anti),
            1.0,
            PlasticityTag::Fixed,
        )?;
        let s = derive_seed(self.seed, "mirror.respond", trial);
        let rates = self.group_rates(c.n_actions, Some(action));
        let mut inputs = Inputs::new().with("perception", Stimulus::Spikes(encode_poisson(&rates, c.window_ms, s)?));
        if let Drive::Act = drive {
            inputs.add("mirror", Stimulus::Spikes(encode_poisson(&rates, c.window_ms, s ^ 1)?));
        }
        if proprioceptive_copy {
            inputs.add("anti_mirror", Stimulus::constant(vec![c.copy_current; c.anti_size]));
        }
        let rec = simulate(&net, &inputs, &SimConfig::new(c.window_ms, s))?;
        let emo = rec.train("emotion").map(|t| t.counts()).unwrap_or_default();
        let mut counts = [0usize; 3];
        for (i, k) in emo.into_iter().enumerate() {
            counts[i / c.group_size] += k;
        }
        let anti = rec.count("anti_mirror");
        Ok(EmpathyResponse {
            shared: EmotionState::from_counts(counts, c.min_emotion_spikes),
            attribution: if anti > 0 { Attribution::Other } else { Attribution::SelfAgent },
            mirror_spikes: rec.count("mirror"),
            anti_mirror_spikes: anti,
        })
    }

    /// Perform `action` oneself: motor command, its sight and its copy.
    pub fn self_experience(&self, action: usize, trial: u64) -> Result<EmpathyResponse> {
        self.respond(action, Drive::Act, true, trial)
    }
}

/// Observe an overt action; the copy flag says whether it was one's own.
pub fn observe_action_empathy(
    mirror: &MirrorSystem,
    action: usize,
    proprioceptive_copy: bool,
    trial: u64,
) -> Result<EmpathyResponse> {
    mirror.respond(action, Drive::Observe, proprioceptive_copy, trial)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AltruisticChoice {
    ContinueTask,
    Rescue,
}

/// Rescue iff `empathy_gain * negative valence(other) > own_task_value`.
pub fn decide_altruistic(own_task_value: f64, other: &EmotionState, empathy_gain: f64) -> Result<AltruisticChoice> {
    if !(empathy_gain >= 0.0 && empathy_gain.is_finite()) {
        return Err(Error::param("empathy_gain", "must be finite and >= 0"));
    }
    if !own_task_value.is_finite() || !other.valence.is_finite() {
        return Err(Error::NonFinite("altruism inputs".into()));
    }
    Ok(if empathy_gain * other.negative_valence() > own_task_value {
        AltruisticChoice::Rescue
    } else {
        AltruisticChoice::ContinueTask
    })
}

/// Default training set: action 0 with distress, 1 with joy, 2 neutral,
/// 3 never paired with any emotion; `reps` episodes each.
pub fn default_episodes(reps: usize) -> Vec<SelfEpisode> {
    let pairs = [
        (0, Some(Emotion::Distress)),
        (1, Some(Emotion::Positive)),
        (2, Some(Emotion::Neutral)),
        (3, None),
    ];
    (0..reps)
        .flat_map(|_| pairs.iter().map(|&(action, emotion)| SelfEpisode { action, emotion }))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autonomous::{Action, ExperienceRecord};
    use proptest::prelude::*;

    fn trained() -> MirrorSystem {
        let mut m = MirrorSystem::new(MirrorSystemConfig::default(), 7).unwrap();
        m.train(&default_episodes(10)).unwrap();
        m
    }

    #[test]
    fn untrained_system_is_rejected() {
        let m = MirrorSystem::new(MirrorSystemConfig::default(), 7).unwrap();
        assert!(matches!(observe_action_empathy(&m, 0, false, 0), Err(Error::NotTrained(_))));
    }

    #[test]
    fn own_distress_is_self_attributed() {
        let r = observe_action_empathy(&trained(), 0, true, 1).unwrap();
        assert_eq!(r.shared.emotion, Emotion::Distress);
        assert_eq!(r.attribution, Attribution::SelfAgent);
    }

    #[test]
    fn peer_distress_shares_the_same_population() {
        let m = trained();
        let own = m.self_experience(0, 2).unwrap();
        let seen = observe_action_empathy(&m, 0, false, 3).unwrap();
        assert_eq!(seen.shared.emotion, Emotion::Distress);
        assert_eq!(seen.shared.emotion, own.shared.emotion);
        assert_eq!(seen.attribution, Attribution::Other);
        assert!(seen.mirror_spikes > 0);
    }

    #[test]
    fn unpaired_action_reads_neutral() {
        let m = trained();
        for copy in [true, false] {
            let r = observe_action_empathy(&m, 3, copy, 4).unwrap();
            assert_eq!(r.shared.emotion, Emotion::Neutral);
            assert_eq!(r.attribution == Attribution::SelfAgent, copy);
        }
    }

    #[test]
    fn training_from_experience_matches_direct_training() {
        let mut buf = ExperienceBuffer::new(100).unwrap();
        for t in 0..10 {
            let r = ExperienceRecord::new(0, Action::Up, -1.0, 0, t).with_emotion(EmotionTag::new("pain"));
            buf.record(r).unwrap();
        }
        let mut a = MirrorSystem::new(MirrorSystemConfig::default(), 1).unwrap();
        a.train_from_experience(&buf).unwrap();
        let mut b = MirrorSystem::new(MirrorSystemConfig::default(), 1).unwrap();
        b.train(&[SelfEpisode { action: 0, emotion: Some(Emotion::Distress) }; 10]).unwrap();
        assert_eq!(a, b);
        buf.record(ExperienceRecord::new(0, Action::Up, 0.0, 0, 99).with_emotion(EmotionTag::new("??"))).unwrap();
        assert!(a.train_from_experience(&buf).is_err());
    }

    #[test]
    fn altruism_edge_cases() {
        let distress = EmotionState::pure(Emotion::Distress);
        let neutral = EmotionState::pure(Emotion::Neutral);
        assert_eq!(decide_altruistic(0.0, &distress, 0.0).unwrap(), AltruisticChoice::ContinueTask);
        assert_eq!(decide_altruistic(0.5, &distress, 2.0).unwrap(), AltruisticChoice::Rescue);
        assert_eq!(decide_altruistic(0.0, &neutral, 100.0).unwrap(), AltruisticChoice::ContinueTask);
        assert!(decide_altruistic(0.5, &distress, -1.0).is_err());
    }

    proptest! {
        #[test]
        fn altruism_is_monotone(v in -2.0f64..2.0, neg in 0.0f64..1.0, g in 0.0f64..5.0, dg in 0.0f64..2.0, dn in 0.0f64..0.5) {
            let st = |n: f64| EmotionState { emotion: Emotion::Distress, counts: [0; 3], valence: -n };
            let rescue = |g, n| decide_altruistic(v, &st(n), g).unwrap() == AltruisticChoice::Rescue;
            if rescue(g, neg) {
                prop_assert!(rescue(g + dg, neg));
                prop_assert!(rescue(g, (neg + dn).min(1.0)));
            }
        }
    }
}
