//! Bodily self: motor-visual association, self/other attribution, the mirror
//! test, and rubber-hand drift.

mod arm;
mod association;
mod mirror;
mod rubber;
mod selfworld;

pub use arm::{Arm, ArmConfig, MotorCommand, TrajPoint, Trajectory};
pub use association::{learn_motor_visual, relative_error, AssociationConfig, AssociationMap, Prediction};
pub use mirror::{mirror_view, run_mirror_test, run_mirror_test_with, train_mirror_agent, MirrorConfig, MirrorReport, MirrorTrialRow};
pub use rubber::{drift_sweep, run_rubber_hand, DriftResult, Modality, RubberHandConfig};
pub use selfworld::{classify_self_world, trajectory_correlation, Agency, DEFAULT_MATCH_THRESHOLD};
