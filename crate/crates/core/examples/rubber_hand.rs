//! Proprioceptive drift against the angle between the real and the rubber
//! hand, for synchronous and asynchronous stroking.
use selfhood::bodily::{drift_sweep, RubberHandConfig};

fn main() -> selfhood::Result<()> {
    let cfg = RubberHandConfig::default();
    let sync = drift_sweep(90.0, 7.5, true, &cfg)?;
    let asyn = drift_sweep(90.0, 7.5, false, &cfg)?;
    println!("angle,drift_sync,drift_async,dominant");
    for (s, a) in sync.iter().zip(&asyn) {
        println!(
            "{},{:.3},{:.3},{:?}",
            s.deflection_angle, s.proprioceptive_drift, a.proprioceptive_drift, s.dominant_modality
        );
    }
    Ok(())
}
