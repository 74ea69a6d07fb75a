//! The STDP window, linear CKA with its invariances, the knowledge-transfer
//! loss and the temporal consistency loss.
use nalgebra::DMatrix;
use selfhood::plasticity::{
    linear_cka, stdp_delta, temporal_consistency_loss, transfer_loss_from_alignment, ConsistencyAnchor, StdpParams,
};

fn main() -> selfhood::Result<()> {
    let p = StdpParams::default();
    println!("dt_ms,delta_w");
    for dt in [-40.0, -20.0, -5.0, 0.0, 5.0, 20.0, 40.0] {
        println!("{dt},{:.5}", stdp_delta(dt, &p));
    }

    let x = DMatrix::from_row_slice(5, 3, &[1., 0., 2., 3., 1., 0., 0., 4., 1., 2., 2., 2., 5., 0., 1.]);
    let y = DMatrix::from_row_slice(5, 3, &[0., 1., 1., 2., 0., 3., 1., 1., 0., 4., 2., 1., 0., 0., 2.]);
    let (s, c) = 0.7f64.sin_cos();
    let q = DMatrix::from_row_slice(3, 3, &[c, -s, 0., s, c, 0., 0., 0., 1.]);
    println!("cka(x, y) = {:.6}", linear_cka(&x, &y)?);
    println!("cka(3xq, y) = {:.6}", linear_cka(&(&x * &q * 3.0), &y)?);
    println!("cka(x, x) = {:.6}", linear_cka(&x, &x)?);

    for eta in [-5.0, 0.0, 5.0] {
        let l = transfer_loss_from_alignment(&[eta], &[0.8], &[0.4])?;
        println!("transfer loss at eta {eta}: {l:.4}");
    }

    let steady = vec![vec![1.0, 0.0, -1.0]; 4];
    let drifting = vec![vec![1.0, 0.0, -1.0], vec![0.0, 1.0, -1.0], vec![-1.0, 0.0, 1.0]];
    for (name, logits) in [("steady", &steady), ("drifting", &drifting)] {
        println!(
            "{name}: consistency loss {:.4}",
            temporal_consistency_loss(logits, ConsistencyAnchor::MeanLogits)?
        );
    }
    Ok(())
}
