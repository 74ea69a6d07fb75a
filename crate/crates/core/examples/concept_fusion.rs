//! Sensory and text spike trains of the same concept fused by sliding
//! coordination, with the recovered offset and the fused classification.
use selfhood::concept::{evaluate_fixture, generate_fixture, FixtureConfig};

fn main() -> selfhood::Result<()> {
    let cfg = FixtureConfig::default();
    let fx = generate_fixture(&cfg, 0)?;
    let r = evaluate_fixture(&fx)?;
    println!(
        "accuracy: sensory {:.3}, text {:.3}, fused {:.3}; mean offset error {:.2} ms",
        r.sensory_accuracy, r.text_accuracy, r.fused_accuracy, r.mean_abs_offset_error
    );
    Ok(())
}
