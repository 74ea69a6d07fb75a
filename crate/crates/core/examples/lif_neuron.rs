//! A single LIF neuron driven by constant current: simulated first spike
//! against the closed form, plus a two-population network with a delay.
use selfhood::snn::{
    analytic_first_spike, simulate, Inputs, Network, NeuronParams, PlasticityTag, SimConfig, Stimulus, WeightMatrix,
};

fn main() -> selfhood::Result<()> {
    let params = NeuronParams::default();
    for current in [1.2, 2.0, 4.0] {
        let mut net = Network::new();
        net.add_population("n", 1, params)?;
        let inputs = Inputs::new().with("n", Stimulus::constant(vec![current]));
        let rec = simulate(&net, &inputs, &SimConfig::new(200.0, 0).with_dt(0.1))?;
        let first = rec.train("n").and_then(|t| t.events().first()).map(|s| s.0);
        println!(
            "I = {current}: analytic {:?} ms, simulated {first:?} ms, {} spikes in 200 ms",
            analytic_first_spike(&params, current),
            rec.count("n")
        );
    }

    let mut net = Network::new();
    net.add_population("pre", 4, params)?;
    net.add_population("post", 2, params)?;
    let w = WeightMatrix::from_fn(4, 2, |r, c| if r / 2 == c { 0.8 } else { 0.0 });
    net.connect("pre", "post", w, 5.0, PlasticityTag::Fixed)?;
    let inputs = Inputs::new().with("pre", Stimulus::constant(vec![3.0, 3.0, 0.0, 0.0]));
    let rec = simulate(&net, &inputs, &SimConfig::new(100.0, 1))?;
    println!("pre counts {:?}, post counts {:?}", rec.train("pre").unwrap().counts(), rec.train("post").unwrap().counts());
    Ok(())
}
