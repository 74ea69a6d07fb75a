//! Telling self-generated motion from motion caused by someone else: the
//! observed trajectory is compared with the feedback the motor command
//! predicts.
use selfhood::bodily::{classify_self_world, trajectory_correlation, TrajPoint, Trajectory, DEFAULT_MATCH_THRESHOLD};

fn path(f: impl Fn(f64) -> (f64, f64)) -> selfhood::Result<Trajectory> {
    let pts: Vec<TrajPoint> = (0..40)
        .map(|i| {
            let t = i as f64 * 10.0;
            let (x, y) = f(t / 400.0);
            TrajPoint { t, x, y }
        })
        .collect();
    Trajectory::try_from(pts)
}

fn main() -> selfhood::Result<()> {
    let predicted = path(|s| (s.cos(), (2.0 * s).sin()))?;
    let candidates = [
        ("own arm, slight noise", path(|s| (s.cos() + 0.01 * (40.0 * s).sin(), (2.0 * s).sin()))?),
        ("own arm, mirror not undone", path(|s| (-s.cos(), (2.0 * s).sin()))?),
        ("someone else's arm", path(|s| ((3.0 * s).sin(), s.cos()))?),
    ];
    for (name, observed) in &candidates {
        println!(
            "{name:<24} correlation {:+.3} -> {:?}",
            trajectory_correlation(&predicted, observed)?,
            classify_self_world(&predicted, observed, DEFAULT_MATCH_THRESHOLD)?
        );
    }
    Ok(())
}
