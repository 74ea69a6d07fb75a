//! Three tasks learned in sequence: a fixed pool forgets, growth with
//! importance protection, pruning and sleep does not.
use selfhood::continual::{run_continual, ContinualConfig, Method};

fn main() -> selfhood::Result<()> {
    let cfg = ContinualConfig::default();
    for (name, method) in [("naive", Method::NAIVE), ("full", Method::FULL)] {
        let r = run_continual(&cfg, method, 0)?;
        println!("{name}: average forgetting {:.2} points", r.forgetting.average_forgetting);
        print!("{}", r.matrix.to_csv());
        for s in &r.stages {
            println!(
                "  task {}: size {}, pruned {} ({} protected), old tasks around sleep {:?} -> {:?}",
                s.task, s.size_after_growth, s.pruned, s.protected, s.old_before_sleep, s.old_after_sleep
            );
        }
    }
    Ok(())
}
