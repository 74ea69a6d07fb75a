//! Reward-modulated spiking decision making.
//!
//! State (one-hot place cells, "prefrontal") projects onto a striatal layer
//! split into one group per action; each group excites its own premotor group
//! and the action is the premotor winner. After the choice a short commit
//! window lets thalamic feedback drive the chosen striatal group, so
//! place-cell/striatal pairings tag exactly the synapses that produced the
//! action. Dopamine is reward minus a running average of reward and converts
//! the tags into weight change.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::experience::{ExperienceBuffer, ExperienceRecord};
use super::gridworld::{Action, GridWorld};
use crate::error::{Error, Result};
use crate::plasticity::{rstdp_apply, update_eligibility, EligibilityTrace, StdpParams};
use crate::rng::{derive_seed, substream, SimRng};
use crate::snn::{lif_step_unchecked, wta_select_counts, NeuronParams, NeuronState, TieRule, WeightMatrix};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PolicyConfig {
    pub striatal_per_action: usize,
    pub premotor_per_action: usize,
    /// Firing rate of the active place cell, Hz.
    pub state_rate_hz: f64,
    /// Independent background input to each striatal cell.
    pub background_hz: f64,
    pub background_weight: f64,
    /// Current injected per unit weight per presynaptic spike.
    pub syn_gain: f64,
    pub striatum_to_premotor: f64,
    /// Inhibition each striatal spike sends to the other action groups.
    pub lateral_inhibition: f64,
    pub w_init: f64,
    pub w_jitter: f64,
    pub w_max: f64,
    pub decision_ms: usize,
    pub commit_ms: usize,
    pub feedback_current: f64,
    pub stdp: StdpParams,
    pub tau_e: f64,
    pub lr: f64,
    /// EMA rate of the dopamine baseline.
    pub baseline_rate: f64,
    pub eps_start: f64,
    pub eps_end: f64,
    /// Episodes over which exploration decays linearly.
    pub eps_decay_episodes: usize,
    pub max_steps: usize,
    /// Extra reward seen by the learner when an episode hits `max_steps`.
    pub timeout_reward: f64,
    pub buffer_capacity: usize,
}

impl Default for PolicyConfig {
    fn default() -> Self {
        Self {
            striatal_per_action: 8,
            premotor_per_action: 4,
            state_rate_hz: 300.0,
            background_hz: 50.0,
            background_weight: 0.5,
            syn_gain: 10.0,
            striatum_to_premotor: 0.4,
            lateral_inhibition: 0.3,
            w_init: 0.5,
            w_jitter: 0.05,
            w_max: 1.0,
            decision_ms: 20,
            commit_ms: 10,
            feedback_current: 3.0,
            stdp: StdpParams {
                a_plus: 0.01,
                a_minus: 0.005,
                ..StdpParams::default()
            },
            tau_e: 100.0,
            lr: 3.0,
            baseline_rate: 0.01,
            eps_start: 0.3,
            eps_end: 0.0,
            eps_decay_episodes: 300,
            max_steps: 30,
            timeout_reward: -1.0,
            buffer_capacity: 10_000,
        }
    }
}

impl PolicyConfig {
    pub fn validate(&self) -> Result<()> {
        if self.striatal_per_action == 0 || self.premotor_per_action == 0 {
            return Err(Error::param("striatal_per_action", "groups must be non-empty"));
        }
        if self.decision_ms == 0 || self.max_steps == 0 {
            return Err(Error::param("decision_ms", "decision window and step cap must be positive"));
        }
        if !(0.0..=1.0).contains(&self.eps_start) || !(0.0..=1.0).contains(&self.eps_end) {
            return Err(Error::param("eps", "exploration must lie in [0, 1]"));
        }
        if !(self.baseline_rate > 0.0 && self.baseline_rate <= 1.0) {
            return Err(Error::param("baseline_rate", "must lie in (0, 1]"));
        }
        if !(self.w_max > 0.0 && self.tau_e > 0.0) {
            return Err(Error::param("w_max", "w_max and tau_e must be positive"));
        }
        self.stdp.validate()
    }

    pub fn epsilon(&self, episode: usize) -> f64 {
        if self.eps_decay_episodes == 0 {
            return self.eps_end;
        }
        let f = (episode as f64 / self.eps_decay_episodes as f64).min(1.0);
        self.eps_start + (self.eps_end - self.eps_start) * f
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyNetwork {
    pub config: PolicyConfig,
    pub n_states: usize,
    /// Place cells to striatum, R-STDP tagged.
    pub weights: WeightMatrix,
    /// Running average reward.
    pub baseline: f64,
    neuron: NeuronParams,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Decision {
    pub action: Action,
    pub explored: bool,
}

impl PolicyNetwork {
    pub fn new(n_states: usize, config: PolicyConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        if n_states == 0 {
            return Err(Error::param("n_states", "must be positive"));
        }
        let mut rng = substream(seed, "dm.init", 0);
        let cols = Action::ALL.len() * config.striatal_per_action;
        let weights = WeightMatrix::from_fn(n_states, cols, |_, _| {
            (config.w_init + config.w_jitter * (2.0 * rng.random::<f64>() - 1.0)).clamp(0.0, config.w_max)
        });
        Ok(Self {
            config,
            n_states,
            weights,
            baseline: 0.0,
            neuron: NeuronParams::default(),
        })
    }

    fn striatal(&self) -> usize {
        Action::ALL.len() * self.config.striatal_per_action
    }

    fn check_state(&self, state: usize) -> Result<()> {
        if state >= self.n_states {
            return Err(Error::param("state", format!("{state} outside 0..{}", self.n_states)));
        }
        Ok(())
    }

    fn place_spike(&self, rng: &mut SimRng) -> bool {
        rng.random::<f64>() < self.config.state_rate_hz / 1000.0
    }

    /// Premotor spike counts over one decision window.
    fn decision_window(&self, state: usize, rng: &mut SimRng) -> Vec<usize> {
        let c = &self.config;
        let ns = self.striatal();
        let np = Action::ALL.len() * c.premotor_per_action;
        let mut str_v = vec![NeuronState::at_rest(&self.neuron); ns];
        let mut pm_v = vec![NeuronState::at_rest(&self.neuron); np];
        let mut str_spikes = vec![false; ns];
        let mut counts = vec![0usize; Action::ALL.len()];
        let p_bg = c.background_hz / 1000.0;
        for _ in 0..c.decision_ms {
            let pre = self.place_spike(rng);
            let row = self.weights.row(state);
            // premotor sees last step's striatal spikes
            let group_spikes: Vec<usize> = str_spikes
                .chunks(c.striatal_per_action)
                .map(|g| g.iter().filter(|&&s| s).count())
                .collect();
            let total: usize = group_spikes.iter().sum();
            for (j, v) in str_v.iter_mut().enumerate() {
                let others = total - group_spikes[j / c.striatal_per_action];
                let mut i = if pre { c.syn_gain * row[j] } else { 0.0 };
                i -= c.syn_gain * c.lateral_inhibition * others as f64;
                if rng.random::<f64>() < p_bg {
                    i += c.syn_gain * c.background_weight;
                }
                let (nv, s) = lif_step_unchecked(*v, &self.neuron, i, 1.0);
                *v = nv;
                str_spikes[j] = s;
            }
            for (k, v) in pm_v.iter_mut().enumerate() {
                let a = k / c.premotor_per_action;
                let i = c.syn_gain * c.striatum_to_premotor * group_spikes[a] as f64;
                let (nv, s) = lif_step_unchecked(*v, &self.neuron, i, 1.0);
                *v = nv;
                if s {
                    counts[a] += 1;
                }
            }
        }
        counts
    }

    /// Choose an action: uniform with probability `eps`, else the premotor
    /// winner of one decision window. Deterministic given the seed.
    pub fn select_action(&self, state: usize, eps: f64, seed: u64) -> Result<Decision> {
        self.check_state(state)?;
        if !(0.0..=1.0).contains(&eps) {
            return Err(Error::param("eps", "must lie in [0, 1]"));
        }
        let mut rng = substream(seed, "dm.select", state as u64);
        if rng.random::<f64>() < eps {
            let a = Action::ALL[rng.random_range(0..Action::ALL.len())];
            return Ok(Decision { action: a, explored: true });
        }
        let counts = self.decision_window(state, &mut rng);
        let winner = wta_select_counts(
            &counts,
            TieRule::Random {
                seed: derive_seed(seed, "dm.tie", state as u64),
            },
        )?;
        Ok(Decision {
            action: Action::ALL[winner],
            explored: false,
        })
    }

    /// Commit window: feedback drives the chosen group while the place cell
    /// keeps firing; the pairings accumulate in `trace`.
    fn commit(&self, state: usize, action: Action, trace: EligibilityTrace, rng: &mut SimRng) -> Result<EligibilityTrace> {
        let c = &self.config;
        let ns = self.striatal();
        let group = action.index() * c.striatal_per_action..(action.index() + 1) * c.striatal_per_action;
        let mut v = vec![NeuronState::at_rest(&self.neuron); ns];
        let mut trace = trace;
        let mut pre = vec![false; self.n_states];
        let mut post = vec![false; ns];
        for _ in 0..c.commit_ms {
            pre[state] = self.place_spike(rng);
            for (j, st) in v.iter_mut().enumerate() {
                let drive = if group.contains(&j) { c.feedback_current } else { 0.0 };
                let (nv, s) = lif_step_unchecked(*st, &self.neuron, drive, 1.0);
                *st = nv;
                post[j] = s;
            }
            trace = update_eligibility(trace, &pre, &post, &c.stdp, 1.0)?;
        }
        Ok(trace)
    }

    fn decay(&self, trace: EligibilityTrace, ms: usize) -> Result<EligibilityTrace> {
        let pre = vec![false; self.n_states];
        let post = vec![false; self.striatal()];
        let mut t = trace;
        for _ in 0..ms {
            t = update_eligibility(t, &pre, &post, &self.config.stdp, 1.0)?;
        }
        Ok(t)
    }

    /// Dopamine for `reward` against the current baseline, then move the baseline.
    pub fn dopamine(&mut self, reward: f64) -> f64 {
        let da = reward - self.baseline;
        self.baseline += self.config.baseline_rate * da;
        da
    }
}

pub fn dm_select_action(policy: &PolicyNetwork, state: usize, explore_eps: f64, seed: u64) -> Result<Action> {
    Ok(policy.select_action(state, explore_eps, seed)?.action)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpisodeStats {
    pub episode: usize,
    #[serde(rename = "return")]
    pub ret: f64,
    pub steps: usize,
    pub success: bool,
    pub truncated: bool,
}

/// Run one learning episode from the environment's start cell.
pub fn dm_train_episode(
    policy: &mut PolicyNetwork,
    env: &mut GridWorld,
    episode: usize,
    buffer: &mut ExperienceBuffer,
    seed: u64,
) -> Result<EpisodeStats> {
    if env.cells() != policy.n_states {
        return Err(Error::ShapeMismatch(format!(
            "grid has {} cells, policy {} states",
            env.cells(),
            policy.n_states
        )));
    }
    env.reset();
    let c = policy.config.clone();
    let eps = c.epsilon(episode);
    let mut trace = EligibilityTrace::new(policy.n_states, policy.striatal(), c.tau_e)?;
    let mut rng = substream(seed, "dm.commit", episode as u64);
    let mut stats = EpisodeStats {
        episode,
        ret: 0.0,
        steps: 0,
        success: false,
        truncated: false,
    };
    for step in 0..c.max_steps {
        let state = env.state(env.agent);
        let step_seed = derive_seed(seed, "dm.step", ((episode as u64) << 20) | step as u64);
        let d = policy.select_action(state, eps, step_seed)?;
        trace = policy.decay(trace, c.decision_ms)?;
        trace = policy.commit(state, d.action, trace, &mut rng)?;
        let out = env.step(d.action);
        let next = env.state(env.agent);
        // hitting the step cap counts as a failure for the learner
        let timeout = if !out.done && step + 1 == c.max_steps { c.timeout_reward } else { 0.0 };
        let da = policy.dopamine(out.reward + timeout);
        if da != 0.0 {
            policy.weights = rstdp_apply(&policy.weights, &trace, da, c.lr, 0.0, c.w_max)?;
        }
        buffer.record(ExperienceRecord::new(
            state,
            d.action,
            out.reward,
            next,
            ((episode as u64) << 20) | step as u64,
        ))?;
        stats.ret += out.reward;
        stats.steps = step + 1;
        if out.done {
            stats.success = out.reached_goal;
            return Ok(stats);
        }
    }
    stats.truncated = true;
    Ok(stats)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingRun {
    pub episodes: Vec<EpisodeStats>,
    pub policy: PolicyNetwork,
}

impl TrainingRun {
    /// Goal rate over the last `n` episodes.
    pub fn final_goal_rate(&self, n: usize) -> f64 {
        let tail = &self.episodes[self.episodes.len().saturating_sub(n)..];
        if tail.is_empty() {
            return 0.0;
        }
        tail.iter().filter(|e| e.success).count() as f64 / tail.len() as f64
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("episode,return,steps,success\n");
        for e in &self.episodes {
            s.push_str(&format!("{},{},{},{}\n", e.episode, e.ret, e.steps, e.success as u8));
        }
        s
    }
}

/// Train for `episodes` episodes, numbering them from `first_episode` for
/// the exploration schedule.
pub fn train_policy(
    policy: PolicyNetwork,
    env: &mut GridWorld,
    episodes: usize,
    first_episode: usize,
    buffer: &mut ExperienceBuffer,
    seed: u64,
) -> Result<TrainingRun> {
    let mut policy = policy;
    let mut out = Vec::with_capacity(episodes);
    for e in 0..episodes {
        let mut st = dm_train_episode(&mut policy, env, first_episode + e, buffer, seed)?;
        st.episode = e;
        out.push(st);
    }
    Ok(TrainingRun { episodes: out, policy })
}

/// Moving average with window `w` (shorter at the start).
pub fn moving_average(xs: &[f64], w: usize) -> Vec<f64> {
    let w = w.max(1);
    let mut sum = 0.0;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            sum += x;
            if i >= w {
                sum -= xs[i - w];
            }
            sum / (i + 1).min(w) as f64
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rayon::prelude::*;

    fn policy(seed: u64) -> PolicyNetwork {
        PolicyNetwork::new(25, PolicyConfig::default(), seed).unwrap()
    }

    #[test]
    fn pure_exploration_is_uniform() {
        let p = policy(0);
        let mut counts = [0usize; 4];
        for s in 0..10_000u64 {
            counts[dm_select_action(&p, 12, 1.0, s).unwrap().index()] += 1;
        }
        let chi2: f64 = counts.iter().map(|&c| (c as f64 - 2500.0).powi(2) / 2500.0).sum();
        // 3 dof, p = 0.01
        assert!(chi2 < 11.345, "{counts:?} chi2 {chi2}");
    }

    #[test]
    fn selection_is_deterministic() {
        let p = policy(1);
        for s in 0..20 {
            assert_eq!(p.select_action(7, 0.2, s).unwrap(), p.select_action(7, 0.2, s).unwrap());
        }
    }

    #[test]
    fn out_of_grid_state_is_rejected() {
        assert!(policy(0).select_action(25, 0.0, 0).is_err());
        assert!(policy(0).select_action(0, 1.5, 0).is_err());
    }

    #[test]
    fn zero_reward_leaves_weights_unchanged() {
        let mut env = GridWorld::five_by_five();
        env.goal_reward = 0.0;
        env.hazard_reward = 0.0;
        env.step_reward = 0.0;
        env.collision_penalty = 0.0;
        let cfg = PolicyConfig {
            timeout_reward: 0.0,
            ..PolicyConfig::default()
        };
        let p = PolicyNetwork::new(env.cells(), cfg, 2).unwrap();
        let w0 = p.weights.clone();
        let mut buf = ExperienceBuffer::new(100).unwrap();
        let run = train_policy(p, &mut env, 20, 0, &mut buf, 2).unwrap();
        let drift = run
            .policy
            .weights
            .as_slice()
            .iter()
            .zip(w0.as_slice())
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        assert!(drift < 1e-6);
        assert_eq!(run.policy.baseline, 0.0);
    }

    #[test]
    fn constant_reward_is_cancelled_by_the_baseline() {
        let mut p = policy(3);
        p.baseline = 0.7;
        assert_eq!(p.dopamine(0.7), 0.0);
        assert_eq!(p.baseline, 0.7);
    }

    #[test]
    fn baseline_tracks_the_mean_reward() {
        let mut p = policy(3);
        for _ in 0..2000 {
            p.dopamine(0.5);
        }
        assert!((p.baseline - 0.5).abs() < 1e-6);
    }

    #[test]
    fn episodes_are_capped() {
        let mut env = GridWorld::five_by_five();
        env.goal = crate::autonomous::Pos::new(4, 0);
        let cfg = PolicyConfig {
            max_steps: 3,
            ..PolicyConfig::default()
        };
        let mut p = PolicyNetwork::new(25, cfg, 0).unwrap();
        let mut buf = ExperienceBuffer::new(10).unwrap();
        // from the centre no 3-step path reaches (4,0) and (0,0) is 4 away too
        let st = dm_train_episode(&mut p, &mut env, 0, &mut buf, 0).unwrap();
        assert!(st.truncated);
        assert_eq!(st.steps, 3);
        assert_eq!(buf.len(), 3);
    }

    #[test]
    fn trained_policy_reaches_the_goal() {
        let mut env = GridWorld::five_by_five();
        let mut buf = ExperienceBuffer::new(20_000).unwrap();
        let run = train_policy(policy(4), &mut env, 500, 0, &mut buf, 4).unwrap();
        assert!(run.final_goal_rate(100) >= 0.9);
        // the cell the agent last stepped into the goal from has one rewarded action
        let last = buf.query(|r| r.reward > 0.0)[0].clone();
        let hits = (0..200u64)
            .filter(|&s| dm_select_action(&run.policy, last.state, 0.0, s).unwrap() == last.action)
            .count();
        assert!(hits >= 190, "{hits}/200");
        let csv = run.to_csv();
        assert!(csv.starts_with("episode,return,steps,success\n"));
        assert_eq!(csv.lines().count(), 501);
    }

    #[test]
    fn return_average_never_falls_far_below_its_best() {
        for seed in 0..5 {
            let mut env = GridWorld::five_by_five();
            let mut buf = ExperienceBuffer::new(1000).unwrap();
            let run = train_policy(policy(seed), &mut env, 500, 0, &mut buf, seed).unwrap();
            let returns: Vec<f64> = run.episodes.iter().map(|e| e.ret).collect();
            // a 100-episode average exists once 100 episodes have run
            let ma = &moving_average(&returns, 100)[99..];
            // tolerance is 5% of the return scale, the goal reward
            let tol = 0.05 * env.goal_reward;
            let mut best = f64::MIN;
            for (i, &v) in ma.iter().enumerate() {
                best = best.max(v);
                assert!(v >= best - tol, "seed {seed} episode {i}: {v} below best {best} by more than {tol}");
            }
        }
    }

    #[test]
    fn flipped_rewards_are_relearned() {
        // one seed in thirty fails to reverse; require nine of ten
        let reversed = (0..10u64)
            .into_par_iter()
            .filter(|&seed| {
                let mut env = GridWorld::five_by_five();
                let mut buf = ExperienceBuffer::new(1000).unwrap();
                let run = train_policy(policy(seed), &mut env, 500, 0, &mut buf, seed).unwrap();
                env.flip_rewards();
                let rev = train_policy(run.policy, &mut env, 500, 0, &mut buf, seed + 1000).unwrap();
                rev.episodes[400..].iter().filter(|e| e.ret > 0.0).count() >= 90
            })
            .count();
        assert!(reversed >= 9, "{reversed}/10 seeds reversed");
    }

    #[test]
    fn moving_average_matches_direct_sum() {
        let xs = [1.0, 2.0, 3.0, 4.0, 5.0];
        let ma = moving_average(&xs, 2);
        assert_eq!(ma, vec![1.0, 1.5, 2.5, 3.5, 4.5]);
    }
}
