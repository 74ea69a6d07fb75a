//! Obstacle avoidance learned at normal speed and tested, frozen, at higher
//! speeds.
use selfhood::autonomous::{corridor, speed_generalization, SpeedConfig};

fn main() -> selfhood::Result<()> {
    let env = corridor(40)?;
    let speeds = [1.0, 2.0, 3.0, 3.5, 5.0, 8.0];
    let rows = speed_generalization(&env, 1.0, &speeds, &SpeedConfig::default(), 0)?;
    println!("speed,success,mean_latency_ms");
    for r in rows {
        println!("{},{:.2},{}", r.speed, r.success, r.mean_latency.map_or("-".into(), |l| format!("{l:.1}")));
    }
    Ok(())
}
