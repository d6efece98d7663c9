//! Evaluate the exact conditional spike law for a small network: per-neuron
//! membrane statistics, pattern probabilities, and the Gibbs potential.
//!
//! ```bash
//! cargo run --example conditional_law
//! ```

use gifnet::{CurrentSpec, Network, NetworkParams, Past, Population, ProfileKind, Raster};

fn main() -> gifnet::Result<()> {
    let params = NetworkParams {
        n_neurons: 2,
        capacitance: vec![1.0, 1.0],
        threshold: 1.0,
        leak_reversal: -0.2,
        excitatory_reversal: 1.0,
        inhibitory_reversal: -1.0,
        leak_conductance: vec![1.0, 1.0],
        population: vec![Population::Excitatory, Population::Inhibitory],
        max_conductance: vec![vec![0.0, 0.5], vec![0.5, 0.0]],
        synapse_tau: vec![vec![1.0, 1.0], vec![1.0, 1.0]],
        profile: ProfileKind::Alpha,
        noise_amplitude: 1.0,
        reset_std: 0.4,
        refractory: 0.0,
        external_current: CurrentSpec::none(2),
    };
    let net = Network::new(params)?;

    // a short history: neuron 1 fired twice, neuron 2 once
    let mut history = Raster::new(2, -10, -1, Past::Empty);
    history.set_bit(0, -6, 1);
    history.set_bit(0, -2, 1);
    history.set_bit(1, -4, 1);

    let law = net.conditional_law(0, &history, 12)?;
    println!("conditional law at time 0 given the history:");
    for (k, nl) in law.neurons.iter().enumerate() {
        println!(
            "  neuron {}: v_det = {:+.6}  sigma = {:.6}  x = {:+.6}  p_fire = {:.6}",
            k + 1,
            nl.v_det,
            nl.sigma,
            nl.x,
            nl.p_fire
        );
    }

    println!("\npattern probabilities (must sum to 1):");
    let mut total = 0.0;
    for idx in 0u8..4 {
        let pattern = vec![idx & 1, idx >> 1];
        let p = net.transition_prob(&law, &pattern);
        let phi = net.potential(&law, &pattern);
        total += p;
        println!("  P[{}{}] = {:.6}   potential = {:+.6}", pattern[0], pattern[1], p, phi.total);
    }
    println!("  sum = {total:.12}");

    println!("\nlaw as CSV:");
    println!("{}", gifnet::ConditionalLaw::csv_header());
    for row in law.csv_rows() {
        println!("{row}");
    }
    Ok(())
}
