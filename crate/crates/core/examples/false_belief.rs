//! False-belief scripts: the observer predicts where the subject will search,
//! with theory of mind and with the ground-truth ablation.
use selfhood::social::{run_scenario, scenario, BeliefConfig, SCRIPTS};

fn main() -> selfhood::Result<()> {
    let cfg = BeliefConfig::default();
    for (variant, about) in SCRIPTS {
        let sc = scenario(variant, 0)?;
        let tom = run_scenario(&sc, true, &cfg, 0)?;
        let ablation = run_scenario(&sc, false, &cfg, 0)?;
        println!(
            "{variant:<12} ({about}): expected {}, with ToM {}, ablation {}",
            sc.expected, tom.prediction, ablation.prediction
        );
    }
    Ok(())
}
