//! The spiking gate between one's own and another's perspective: inferring
//! the other silences the self channel, acting for oneself does the reverse.
use selfhood::snn::{Spike, SpikeTrain};
use selfhood::social::{inhibitory_gate, GateMode};

fn main() -> selfhood::Result<()> {
    // self evidence on neuron 0, the other's on neuron 1
    let self_view = SpikeTrain::new(2, 50.0, (0..5).map(|k| Spike(5.0 + 10.0 * k as f64, 0)).collect())?;
    let other_view = SpikeTrain::new(2, 50.0, (0..5).map(|k| Spike(5.0 + 10.0 * k as f64, 1)).collect())?;
    for mode in [GateMode::InferOther, GateMode::ActSelf] {
        let out = inhibitory_gate(&self_view, &other_view, mode)?;
        println!("{mode:?}: output counts per neuron {:?}", out.counts());
    }
    Ok(())
}
