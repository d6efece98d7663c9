//! Memory decay: measure the variation of conductances, membrane terms, and
//! the transition kernel over enumerated cylinder pairs, against the
//! closed-form analytic bounds.
//!
//! ```bash
//! cargo run --release --example variation_decay
//! ```

use gifnet::analysis::{measure_variation, Quantity};
use gifnet::{CurrentSpec, Network, NetworkParams, Population, ProfileKind};

fn main() -> gifnet::Result<()> {
    let params = NetworkParams {
        n_neurons: 2,
        capacitance: vec![1.0; 2],
        threshold: 1.0,
        leak_reversal: -0.2,
        excitatory_reversal: 1.0,
        inhibitory_reversal: -1.0,
        leak_conductance: vec![2.0; 2],
        population: vec![Population::Excitatory, Population::Inhibitory],
        max_conductance: vec![vec![0.0, 0.4], vec![0.4, 0.0]],
        synapse_tau: vec![vec![0.5; 2]; 2],
        profile: ProfileKind::Exponential,
        noise_amplitude: 1.0,
        reset_std: 0.4,
        refractory: 0.0,
        external_current: CurrentSpec::none(2),
    };
    let net = Network::new(params)?;

    for quantity in Quantity::ALL {
        println!("{}:", quantity.name());
        println!("   m    measured        bound");
        for m in 0..=8 {
            let report = measure_variation(&net, quantity, m, 3)?;
            let ok = report.measured_lower <= report.analytic_upper + 1e-8;
            println!(
                "   {m}   {:.6e}   {:.6e}   {}",
                report.measured_lower,
                report.analytic_upper,
                if ok { "ok" } else { "VIOLATED" }
            );
        }
    }
    Ok(())
}
