//! Expand a truncated potential on the monomial basis: the coefficients play
//! the part of maximum-entropy multipliers for spike-event constraints.
//! Past-coupled monomials survive; simultaneous time-0 pairs vanish.
//!
//! ```bash
//! cargo run --example monomial_expansion
//! ```

use gifnet::analysis::expand_monomials;
use gifnet::{CurrentSpec, Network, NetworkParams, Population, ProfileKind};

fn main() -> gifnet::Result<()> {
    let params = NetworkParams {
        n_neurons: 2,
        capacitance: vec![1.0; 2],
        threshold: 1.0,
        leak_reversal: -0.2,
        excitatory_reversal: 1.0,
        inhibitory_reversal: -1.0,
        leak_conductance: vec![1.5; 2],
        population: vec![Population::Excitatory, Population::Inhibitory],
        max_conductance: vec![vec![0.0, 0.5], vec![0.5, 0.0]],
        synapse_tau: vec![vec![0.6; 2]; 2],
        profile: ProfileKind::Exponential,
        noise_amplitude: 1.0,
        reset_std: 0.4,
        refractory: 0.0,
        external_current: CurrentSpec::none(2),
    };
    let net = Network::new(params)?;

    let depth = 2;
    let expansion = expand_monomials(&net, depth)?;
    println!("truncated potential at depth {depth}: constant = {:+.6}", expansion.constant());
    println!("monomial coefficients above 1e-9 (neuron@time factors):");
    let mut terms: Vec<_> =
        expansion.terms().filter(|&(mask, l)| mask != 0 && l.abs() > 1e-9).collect();
    terms.sort_by(|a, b| b.1.abs().partial_cmp(&a.1.abs()).unwrap());
    for (mask, lambda) in terms {
        let label: Vec<String> = expansion
            .factors(mask)
            .into_iter()
            .map(|(k, t)| format!("{}@{}", k + 1, t))
            .collect();
        println!("  {:+.6}   {}", lambda, label.join(" "));
    }
    println!("(no monomial couples two time-0 factors: the law is causal)");
    Ok(())
}
