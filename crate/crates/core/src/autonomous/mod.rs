//! Autonomous self: cerebellar conditioning, speed generalization, and
//! reward-modulated decision making.

mod conditioning;
mod decision;
mod experience;
mod gridworld;
mod phenomena;
mod speed;

pub use conditioning::{conditioning_trial, CircuitConfig, ConditioningCircuit, TrialOutcome, TrialSpec};
pub use decision::{
    dm_select_action, dm_train_episode, moving_average, train_policy, Decision, EpisodeStats, PolicyConfig, PolicyNetwork,
    TrainingRun,
};
pub use experience::{query_experience, record_experience, EmotionTag, ExperienceBuffer, ExperienceRecord};
pub use gridworld::{Action, GridWorld, Pos, StepOutcome};
pub use phenomena::{
    circuit_factory, protocol, run_phenomenon, run_protocol, Phase, PhaseTrace, PhenomenaSettings, PhenomenonResult, Protocol,
    StopRule, PHENOMENA,
};
pub use speed::{
    corridor, evaluate_speed, run_episode, speed_generalization, train_avoidance, EpisodeResult, SpeedConfig, SpeedResult,
};
