//! Mirror neurons share the emotion of an observed action, the motor copy
//! tells whose action it was, and shared distress can outweigh a task.
use selfhood::social::{
    decide_altruistic, default_episodes, observe_action_empathy, MirrorSystem, MirrorSystemConfig,
};

fn main() -> selfhood::Result<()> {
    let cfg = MirrorSystemConfig::default();
    let mut m = MirrorSystem::new(cfg.clone(), 0)?;
    m.train(&default_episodes(20))?;
    for action in 0..cfg.n_actions {
        let own = m.self_experience(action, 0)?;
        let seen = observe_action_empathy(&m, action, false, 0)?;
        let mine = observe_action_empathy(&m, action, true, 0)?;
        println!(
            "action {action}: felt {:?}, observed {:?} (valence {:+.2}), attributed {:?} / {:?}",
            own.shared.emotion, seen.shared.emotion, seen.shared.valence, seen.attribution, mine.attribution
        );
    }
    let distress = observe_action_empathy(&m, 0, false, 1)?.shared;
    for gain in [0.5, 1.0, 2.0] {
        let choice = decide_altruistic(1.0, &distress, gain)?;
        println!("task value 1.0, empathy gain {gain}: {choice:?}");
    }
    Ok(())
}
