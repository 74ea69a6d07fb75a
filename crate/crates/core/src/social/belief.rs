//! Belief attribution by perspective replay, false-belief scripts and hazard
//! warning.
//!
//! The world history is replayed through the other agent's perspective; the
//! last place it actually saw each object becomes its evidence, the self's own
//! last sighting the competing evidence. Both are rate-coded over grid cells
//! and passed through the inhibitory gate in infer-other mode, and the belief
//! is read off the gated output.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::gate::{inhibitory_gate_with, GateConfig, GateMode};
use super::world::{perspective_transform, AgentPose, Facing, WorldState};
use crate::autonomous::Pos;
use crate::error::{Error, Result};
use crate::rng::{derive_seed, substream};
use crate::snn::{encode_poisson, SpikeTrain};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Belief {
    pub owner: String,
    /// Believed location per object, `None` if never seen.
    pub objects: BTreeMap<String, Option<Pos>>,
    /// Hazards the owner has seen.
    pub hazards: BTreeSet<Pos>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BeliefConfig {
    /// Rate on the cell holding the evidence, Hz.
    pub evidence_hz: f64,
    /// Background rate on every cell, Hz.
    pub noise_hz: f64,
    pub window_ms: f64,
    /// Gated output spikes needed to commit to a location.
    pub min_count: usize,
    pub gate: GateConfig,
}

impl Default for BeliefConfig {
    fn default() -> Self {
        Self {
            evidence_hz: 400.0,
            noise_hz: 5.0,
            window_ms: 100.0,
            min_count: 15,
            gate: GateConfig::default(),
        }
    }
}

impl BeliefConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.evidence_hz > 0.0 && self.noise_hz >= 0.0 && self.window_ms > 0.0) {
            return Err(Error::param("evidence_hz", "rates and window must be positive"));
        }
        self.gate.validate()
    }
}

/// Last sighting of every object and every hazard seen, from `viewer`'s eyes.
fn replay(history: &[WorldState], viewer: &str) -> Result<(BTreeMap<String, Option<Pos>>, BTreeSet<Pos>)> {
    let mut objects: BTreeMap<String, Option<Pos>> = BTreeMap::new();
    let mut hazards = BTreeSet::new();
    for w in history {
        for name in w.objects.keys() {
            objects.entry(name.clone()).or_insert(None);
        }
        let p = perspective_transform(w, w.agent(viewer)?)?;
        for (name, pos) in p.objects {
            objects.insert(name, Some(pos));
        }
        hazards.extend(p.hazards);
    }
    Ok((objects, hazards))
}

fn evidence(world: &WorldState, at: Option<Pos>, cfg: &BeliefConfig, seed: u64) -> Result<SpikeTrain> {
    let mut rates = vec![cfg.noise_hz; world.width * world.height];
    if let Some(p) = at {
        rates[world.index(p)] = cfg.evidence_hz;
    }
    encode_poisson(&rates, cfg.window_ms, seed)
}

/// Belief of `other` after the history, as seen through `self_id`'s inference.
pub fn infer_belief(history: &[WorldState], other: &str, self_id: &str, cfg: &BeliefConfig, seed: u64) -> Result<Belief> {
    cfg.validate()?;
    let last = history.last().ok_or_else(|| Error::Empty("world history".into()))?;
    let (w, h) = (last.width, last.height);
    for world in history {
        if (world.width, world.height) != (w, h) {
            return Err(Error::ShapeMismatch("world history changes grid size".into()));
        }
        world.validate()?;
    }
    let (theirs, hazards) = replay(history, other)?;
    let (mine, _) = replay(history, self_id)?;
    let mut objects = BTreeMap::new();
    for (k, (name, seen)) in theirs.iter().enumerate() {
        let s = derive_seed(seed, "belief.evidence", k as u64);
        let other_ev = evidence(last, *seen, cfg, s)?;
        let self_ev = evidence(last, mine.get(name).copied().flatten(), cfg, s ^ 0x5eed)?;
        let gated = inhibitory_gate_with(&self_ev, &other_ev, GateMode::InferOther, &cfg.gate)?;
        let counts = gated.counts();
        let (best, &n) = counts
            .iter()
            .enumerate()
            .max_by_key(|(i, c)| (**c, std::cmp::Reverse(*i)))
            .expect("grid is non-empty");
        objects.insert(name.clone(), (n >= cfg.min_count).then(|| last.pos_of(best)).flatten());
    }
    Ok(Belief {
        owner: other.into(),
        objects,
        hazards,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum ScriptEvent {
    Leave { agent: String },
    Enter { agent: String },
    Turn { agent: String, facing: Facing },
    /// Move an object into a named container.
    Move { object: String, to: String },
}

/// Declarative false-belief scene: a room, named containers, two agents and
/// a timeline. Containers are opaque, so an object can be seen only in the
/// snapshot where it is put in place.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    pub width: usize,
    pub height: usize,
    #[serde(default)]
    pub occluders: BTreeSet<Pos>,
    pub containers: BTreeMap<String, Pos>,
    pub object: String,
    pub start: String,
    /// The agent whose search is predicted.
    pub subject: String,
    /// The agent doing the predicting.
    pub observer: String,
    pub agents: Vec<AgentPose>,
    pub events: Vec<ScriptEvent>,
    /// Where the subject should search, by the false-belief standard.
    pub expected: String,
}

impl Scenario {
    fn container(&self, label: &str) -> Result<Pos> {
        self.containers.get(label).copied().ok_or_else(|| Error::Unknown {
            kind: "container",
            name: label.into(),
            registered: self.containers.keys().cloned().collect::<Vec<_>>().join(", "),
        })
    }

    pub fn label_of(&self, p: Pos) -> Option<&str> {
        self.containers.iter().find(|(_, c)| **c == p).map(|(k, _)| k.as_str())
    }

    /// Snapshots before and after every event.
    pub fn history(&self) -> Result<Vec<WorldState>> {
        let mut w = WorldState::new(self.width, self.height);
        w.occluders = self.occluders.clone();
        w.objects.insert(self.object.clone(), self.container(&self.start)?);
        w.agents = self.agents.clone();
        w.validate()?;
        self.container(&self.expected)?;
        let mut out = vec![w.clone()];
        for ev in &self.events {
            w.concealed = w.objects.keys().cloned().collect();
            match ev {
                ScriptEvent::Leave { agent } => w.agent_mut(agent)?.present = false,
                ScriptEvent::Enter { agent } => w.agent_mut(agent)?.present = true,
                ScriptEvent::Turn { agent, facing } => w.agent_mut(agent)?.facing = *facing,
                ScriptEvent::Move { object, to } => {
                    let p = self.container(to)?;
                    let slot = w.objects.get_mut(object).ok_or_else(|| Error::Unknown {
                        kind: "object",
                        name: object.clone(),
                        registered: self.object.clone(),
                    })?;
                    *slot = p;
                    w.concealed.remove(object);
                }
            }
            w.validate()?;
            out.push(w.clone());
        }
        Ok(out)
    }
}

/// Registered false-belief variants.
pub const SCRIPTS: [(&str, &str); 4] = [
    ("double-move", "object moved twice while the subject is out"),
    ("sally-anne", "object moved while the subject is out of the room"),
    ("sally-stays", "object moved in full view of the subject"),
    ("turned-away", "object moved while the subject faces the other way"),
];

/// Build a registered script; `seed` places the containers and agents.
pub fn scenario(variant: &str, seed: u64) -> Result<Scenario> {
    if !SCRIPTS.iter().any(|(n, _)| *n == variant) {
        return Err(Error::Unknown {
            kind: "false-belief variant",
            name: variant.into(),
            registered: SCRIPTS.iter().map(|(n, _)| *n).collect::<Vec<_>>().join(", "),
        });
    }
    let (w, h) = (6, 6);
    let mut rng = substream(seed, "belief.scenario", 0);
    // containers on the right half, agents in the left column
    let mut right: Vec<Pos> = (0..h).flat_map(|y| (3..w).map(move |x| Pos::new(x, y))).collect();
    right.shuffle(&mut rng);
    let mut rows: Vec<usize> = (0..h).collect();
    rows.shuffle(&mut rng);
    let containers: BTreeMap<String, Pos> = ["A", "B", "C"].iter().map(|s| s.to_string()).zip(right).collect();
    let sally = AgentPose::new("sally", Pos::new(0, rows[0]), Facing::East, 90.0);
    let anne = AgentPose::new("anne", Pos::new(rng.random_range(1..3), rows[1]), Facing::East, 180.0);
    let s = |a: &str| a.to_string();
    let mv = |to: &str| ScriptEvent::Move {
        object: s("marble"),
        to: s(to),
    };
    let (events, expected) = match variant {
        "sally-anne" => (
            vec![ScriptEvent::Leave { agent: s("sally") }, mv("B"), ScriptEvent::Enter { agent: s("sally") }],
            "A",
        ),
        "sally-stays" => (vec![mv("B")], "B"),
        "double-move" => (
            vec![
                ScriptEvent::Leave { agent: s("sally") },
                mv("B"),
                mv("C"),
                ScriptEvent::Enter { agent: s("sally") },
            ],
            "A",
        ),
        _ => (
            vec![
                ScriptEvent::Turn {
                    agent: s("sally"),
                    facing: Facing::West,
                },
                mv("B"),
                ScriptEvent::Turn {
                    agent: s("sally"),
                    facing: Facing::East,
                },
            ],
            "A",
        ),
    };
    Ok(Scenario {
        name: variant.into(),
        width: w,
        height: h,
        occluders: BTreeSet::new(),
        containers,
        object: s("marble"),
        start: s("A"),
        subject: s("sally"),
        observer: s("anne"),
        agents: vec![sally, anne],
        events,
        expected: s(expected),
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FalseBeliefResult {
    pub scenario: String,
    pub with_tom: bool,
    /// Container label, or `"unknown"`.
    pub prediction: String,
    pub correct: bool,
}

/// Predict where the subject searches. Without theory of mind the observer
/// answers from the true state of the world.
pub fn run_scenario(sc: &Scenario, with_tom: bool, cfg: &BeliefConfig, seed: u64) -> Result<FalseBeliefResult> {
    let history = sc.history()?;
    let last = history.last().expect("history starts with the initial state");
    let at = if with_tom {
        infer_belief(&history, &sc.subject, &sc.observer, cfg, seed)?
            .objects
            .get(&sc.object)
            .copied()
            .flatten()
    } else {
        last.objects.get(&sc.object).copied()
    };
    let prediction = at.and_then(|p| sc.label_of(p)).unwrap_or("unknown").to_string();
    Ok(FalseBeliefResult {
        scenario: sc.name.clone(),
        with_tom,
        correct: prediction == sc.expected,
        prediction,
    })
}

pub fn run_false_belief_task(variant: &str, with_tom: bool, seed: u64) -> Result<FalseBeliefResult> {
    run_scenario(&scenario(variant, seed)?, with_tom, &BeliefConfig::default(), seed)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Warning {
    Warn,
    NoWarn,
}

/// Warn when a hazard on the other's planned path is hidden from them but
/// visible to the self.
pub fn warn_of_hazard(me: &AgentPose, other: &AgentPose, world: &WorldState, path: &[Pos]) -> Result<Warning> {
    if !me.present || !other.present {
        return Err(Error::param("agents", "both agents must be present"));
    }
    let mine = perspective_transform(world, me)?;
    let theirs = perspective_transform(world, other)?;
    let hidden_danger = path
        .iter()
        .filter(|p| world.hazards.contains(p))
        .any(|p| !theirs.hazards.contains(p) && mine.hazards.contains(p));
    Ok(if hidden_danger { Warning::Warn } else { Warning::NoWarn })
}

/// Corner fixture: the walker starts bottom-left facing east and plans to
/// go right, turn north at column 3, then east along the top row. A wall at
/// column 2 hides the top row from its start; the watcher stands bottom-right
/// looking north.
pub fn hazard_fixture(hazard: Option<Pos>) -> Result<(WorldState, AgentPose, AgentPose, Vec<Pos>)> {
    let mut w = WorldState::new(7, 3);
    w.occluders.insert(Pos::new(2, 0));
    w.occluders.insert(Pos::new(2, 1));
    if let Some(h) = hazard {
        w.hazards.insert(h);
    }
    let other = AgentPose::new("walker", Pos::new(0, 2), Facing::East, 90.0);
    let me = AgentPose::new("watcher", Pos::new(4, 2), Facing::North, 90.0);
    w.agents = vec![other.clone(), me.clone()];
    w.validate()?;
    let path = [(1, 2), (2, 2), (3, 2), (3, 1), (3, 0), (4, 0), (5, 0), (6, 0)]
        .iter()
        .map(|&(x, y)| Pos::new(x, y))
        .collect();
    Ok((w, me, other, path))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> BeliefConfig {
        BeliefConfig::default()
    }

    #[test]
    fn full_observation_gives_the_truth() {
        let sc = scenario("sally-stays", 3).unwrap();
        let hist = sc.history().unwrap();
        let b = infer_belief(&hist, "sally", "anne", &cfg(), 3).unwrap();
        assert_eq!(b.objects["marble"], Some(sc.containers["B"]));
    }

    #[test]
    fn sally_believes_the_old_place() {
        for seed in 0..5 {
            let r = run_false_belief_task("sally-anne", true, seed).unwrap();
            assert_eq!(r.prediction, "A");
            assert!(r.correct);
            let r = run_false_belief_task("sally-anne", false, seed).unwrap();
            assert_eq!(r.prediction, "B");
            assert!(!r.correct);
        }
    }

    #[test]
    fn double_move_keeps_the_last_sighting() {
        let r = run_false_belief_task("double-move", true, 1).unwrap();
        assert_eq!(r.prediction, "A");
        assert_eq!(run_false_belief_task("double-move", false, 1).unwrap().prediction, "C");
    }

    #[test]
    fn no_false_belief_when_sally_stays() {
        for tom in [true, false] {
            assert_eq!(run_false_belief_task("sally-stays", tom, 2).unwrap().prediction, "B");
        }
    }

    #[test]
    fn facing_away_is_like_leaving() {
        assert_eq!(run_false_belief_task("turned-away", true, 5).unwrap().prediction, "A");
    }

    #[test]
    fn unseen_object_is_unknown() {
        let mut sc = scenario("sally-anne", 0).unwrap();
        sc.agents[0].present = false;
        sc.events.retain(|e| !matches!(e, ScriptEvent::Enter { .. }));
        let b = infer_belief(&sc.history().unwrap(), "sally", "anne", &cfg(), 0).unwrap();
        assert_eq!(b.objects["marble"], None);
    }

    #[test]
    fn bad_inputs_are_rejected() {
        assert!(infer_belief(&[], "sally", "anne", &cfg(), 0).is_err());
        assert!(matches!(
            run_false_belief_task("nope", true, 0),
            Err(Error::Unknown { .. })
        ));
        let hist = scenario("sally-anne", 0).unwrap().history().unwrap();
        assert!(infer_belief(&hist, "bob", "anne", &cfg(), 0).is_err());
    }

    #[test]
    fn scripts_round_trip_through_json() {
        let sc = scenario("double-move", 9).unwrap();
        let s = serde_json::to_string(&sc).unwrap();
        assert_eq!(serde_json::from_str::<Scenario>(&s).unwrap(), sc);
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(32))]
        #[test]
        fn watched_moves_leave_no_false_belief(seed in 0u64..10_000, moves in proptest::collection::vec(0usize..3, 0..6)) {
            let mut sc = scenario("sally-stays", seed).unwrap();
            sc.events = moves
                .iter()
                .map(|&m| ScriptEvent::Move { object: "marble".into(), to: ["A", "B", "C"][m].into() })
                .collect();
            let hist = sc.history().unwrap();
            let truth = hist.last().unwrap().objects["marble"];
            let b = infer_belief(&hist, "sally", "anne", &cfg(), seed).unwrap();
            proptest::prop_assert_eq!(b.objects["marble"], Some(truth));
        }
    }

    #[test]
    fn hazard_warnings() {
        // hidden from the walker by the wall, seen by the watcher
        let (w, me, other, path) = hazard_fixture(Some(Pos::new(4, 0))).unwrap();
        assert_eq!(warn_of_hazard(&me, &other, &w, &path).unwrap(), Warning::Warn);
        // in the open: the walker sees it too
        let (w, me, other, path) = hazard_fixture(Some(Pos::new(1, 2))).unwrap();
        assert_eq!(warn_of_hazard(&me, &other, &w, &path).unwrap(), Warning::NoWarn);
        // off the route
        let (w, me, other, path) = hazard_fixture(Some(Pos::new(5, 2))).unwrap();
        assert_eq!(warn_of_hazard(&me, &other, &w, &path).unwrap(), Warning::NoWarn);
        let mut gone = other.clone();
        gone.present = false;
        assert!(warn_of_hazard(&me, &gone, &w, &path).is_err());
    }
}
