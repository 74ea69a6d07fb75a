//! Continual learning by per-task growth, inactivity pruning, Hebbian
//! importance and sleep replay.

mod bench;
mod net;

pub use bench::{
    accuracy, apply_importance, benchmark_tasks, evaluate_forgetting, grow_for_task, prune_inactive, replay_rate, run_continual,
    sleep_consolidate, snapshots, train_task, wake_importance, AccuracyMatrix, ActivityLog, ContinualConfig, ContinualReport,
    DataConfig, ForgettingReport, ImportanceMap, Method, PruneStats, SleepConfig, SleepStats, Snapshot, TaskData, TaskSpec,
    TaskStage,
};
pub use net::{ContinualNet, GrowthConfig, NetConfig, Neuron, Pathway, Presentation, Readout, Response};
