//! Seed sweep through the harness on a worker pool, written to a run
//! directory and exported as CSV.
use selfhood::harness::{export_results, list_experiments, run_many, ExperimentConfig, ExportFormat};

fn main() -> selfhood::Result<()> {
    for e in list_experiments() {
        println!("{:<22} {}", e.name, e.level);
    }
    let root = std::env::temp_dir().join("selfhood-sweep");
    let cfgs: Vec<ExperimentConfig> = (0..4)
        .map(|seed| {
            let mut c = ExperimentConfig::new("decision-making", seed).with_override("episodes", "300");
            c.out_dir = Some(root.join(format!("seed-{seed}")));
            c
        })
        .collect();
    for r in run_many(&cfgs, 4)? {
        let r = r?;
        println!("seed {}: goal rate {:.2}, passed {}", r.seed, r.metrics["final_goal_rate"], r.passed);
    }
    println!("export: {}", export_results(&root, ExportFormat::Csv)?.display());
    Ok(())
}
