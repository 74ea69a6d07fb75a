//! Social self: perspective taking, belief inference, hazard warning and
//! mirror-neuron empathy.

mod belief;
mod empathy;
mod gate;
mod world;

pub use belief::{
    hazard_fixture, infer_belief, run_false_belief_task, run_scenario, scenario, warn_of_hazard, Belief, BeliefConfig,
    FalseBeliefResult, Scenario, ScriptEvent, Warning, SCRIPTS,
};
pub use empathy::{
    decide_altruistic, default_episodes, observe_action_empathy, AltruisticChoice, Attribution, Emotion, EmotionState,
    EmpathyResponse, MirrorSystem, MirrorSystemConfig, SelfEpisode,
};
pub use gate::{inhibitory_gate, inhibitory_gate_with, GateConfig, GateMode};
pub use world::{perspective_transform, AgentPose, Facing, Percept, WorldState};
