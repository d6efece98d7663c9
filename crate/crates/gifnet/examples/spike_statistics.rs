//! Simulate a network, estimate rates, lagged correlations, and block
//! frequencies, check silent-interval bounds, and bin the raster.
//!
//! ```bash
//! cargo run --release --example spike_statistics
//! ```

use gifnet::analysis::{bin_raster, empirical_stats, silent_interval_check};
use gifnet::{CurrentSpec, Network, NetworkParams, Past, Population, ProfileKind, SimulateOptions};

fn main() -> gifnet::Result<()> {
    let params = NetworkParams {
        n_neurons: 2,
        capacitance: vec![1.0; 2],
        threshold: 1.0,
        leak_reversal: -0.2,
        excitatory_reversal: 1.0,
        inhibitory_reversal: -1.0,
        leak_conductance: vec![1.0; 2],
        population: vec![Population::Excitatory, Population::Inhibitory],
        max_conductance: vec![vec![0.0, 0.5], vec![0.5, 0.0]],
        synapse_tau: vec![vec![1.0; 2]; 2],
        profile: ProfileKind::Exponential,
        noise_amplitude: 1.0,
        reset_std: 0.4,
        refractory: 0.0,
        external_current: CurrentSpec::none(2),
    };
    let net = Network::new(params)?;
    let horizon = net.history_horizon(1e-6);

    let opts = SimulateOptions { steps: 400, trials: 20, seed: 11, horizon, past: Past::Empty };
    let rasters = net.simulate(&opts)?;

    let stats = empirical_stats(&rasters, 4, 2)?;
    for (k, rate) in stats.rates.iter().enumerate() {
        println!("neuron {} rate = {:.4} +- {:.4}", k + 1, rate, stats.rate_std_error[k]);
    }
    println!("\ncentered pairwise correlations (neuron 1 x neuron 2):");
    for lag in 0..=4 {
        println!("  lag {lag}: {:+.6}", stats.pairwise[0][1][lag]);
    }
    println!("\nwidth-2 block frequencies above 1%:");
    for (code, freq) in stats.block_freqs[1].iter().enumerate() {
        if *freq > 0.01 {
            println!("  block {:04b}: {:.4}", code, freq);
        }
    }

    println!("\nsilent-interval check for neuron 1:");
    for t0 in [1, 2, 4] {
        let r = silent_interval_check(&net, 0, t0, 4000, 77, horizon)?;
        println!(
            "  T0 = {t0}: empirical {:.4} inside [{:.4}, {:.4}]",
            r.empirical, r.lower, r.upper
        );
    }

    let binned = bin_raster(&rasters[0], 4);
    let rate: f64 = (0..binned.len() as i64).filter(|&t| binned.bit(0, t) == 1).count() as f64
        / binned.len() as f64;
    println!("\nbinning trial 0 with width 4: neuron 1 occupancy {rate:.4}");
    Ok(())
}
