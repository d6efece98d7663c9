//! Markov approximations of the infinite-memory law: distance between the
//! depth-truncated conditional and the deep reference as the depth grows.
//!
//! ```bash
//! cargo run --release --example markov_truncation
//! ```

use gifnet::analysis::{markov_error, variation_bound, Quantity};
use gifnet::{CurrentSpec, Network, NetworkParams, Population, ProfileKind};

fn main() -> gifnet::Result<()> {
    let params = NetworkParams {
        n_neurons: 2,
        capacitance: vec![1.0; 2],
        threshold: 1.0,
        leak_reversal: -0.2,
        excitatory_reversal: 1.0,
        inhibitory_reversal: -1.0,
        leak_conductance: vec![2.5; 2],
        population: vec![Population::Excitatory, Population::Inhibitory],
        max_conductance: vec![vec![0.0, 0.3], vec![0.3, 0.0]],
        synapse_tau: vec![vec![0.4; 2]; 2],
        profile: ProfileKind::Exponential,
        noise_amplitude: 1.0,
        reset_std: 0.4,
        refractory: 0.0,
        external_current: CurrentSpec::none(2),
    };
    let net = Network::new(params)?;

    println!("predicted depth for 1e-6 accuracy: {}", net.history_horizon(1e-6));
    println!("depth   max_tv         mean_kl        analytic bound");
    for depth in 0..=8 {
        let err = markov_error(&net, depth, 16, 7)?;
        println!(
            "  {depth}    {:.6e}   {:.6e}   {:.6e}",
            err.max_tv,
            err.mean_kl,
            variation_bound(&net, Quantity::Kernel, depth)
        );
    }
    Ok(())
}
