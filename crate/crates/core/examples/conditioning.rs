//! Classical conditioning phenomena on the cerebellar circuit, with the
//! conditioned-response trace of each phase.
use selfhood::autonomous::{circuit_factory, run_phenomenon, CircuitConfig, PhenomenaSettings, PHENOMENA};

fn main() -> selfhood::Result<()> {
    let factory = circuit_factory(CircuitConfig::default());
    let settings = PhenomenaSettings::default();
    for name in PHENOMENA {
        let r = run_phenomenon(name, &factory, &settings, 0)?;
        println!("{name}: {}", if r.pass { "pass" } else { "fail" });
        for t in &r.trace {
            let head: Vec<String> = t.cr.iter().take(8).map(|v| format!("{v:.2}")).collect();
            println!("  {:<24} {:>3} trials, mean CR {:.2}, first [{}]", t.label, t.cr.len(), t.mean(), head.join(" "));
        }
    }
    Ok(())
}
