//! Reward-modulated STDP learns to reach the goal of a 5x5 gridworld; the
//! transitions it lived through are kept in an experience buffer.
use selfhood::autonomous::{
    moving_average, query_experience, train_policy, ExperienceBuffer, GridWorld, PolicyConfig, PolicyNetwork,
};

fn main() -> selfhood::Result<()> {
    let mut env = GridWorld::five_by_five();
    let cfg = PolicyConfig::default();
    let net = PolicyNetwork::new(env.cells(), cfg.clone(), 0)?;
    let mut buffer = ExperienceBuffer::new(cfg.buffer_capacity)?;
    let run = train_policy(net, &mut env, 500, 0, &mut buffer, 0)?;
    let returns: Vec<f64> = run.episodes.iter().map(|e| e.ret).collect();
    let ma = moving_average(&returns, 100);
    for e in (0..500).step_by(50).chain([499]) {
        println!("episode {e:>3}: return MA {:>6.2}, steps {}", ma[e], run.episodes[e].steps);
    }
    println!("goal rate over the last 100 episodes: {:.2}", run.final_goal_rate(100));
    let rewarded = query_experience(&buffer, |r| r.reward > 0.0);
    println!("{} rewarded transitions remembered", rewarded.len());
    Ok(())
}
