//! Sample spike rasters from the exact conditional law and write them in the
//! raster file format.
//!
//! ```bash
//! cargo run --example simulate_raster
//! ```

use gifnet::raster::write_raster;
use gifnet::{CurrentSpec, CurrentTerm, Network, NetworkParams, Past, SimulateOptions};

fn main() -> gifnet::Result<()> {
    // a periodically driven cell: the law is non-stationary by construction
    let mut params = NetworkParams::isolated(1.0, 0.5, 1.0, 0.0, 1.0, 0.5);
    params.external_current = CurrentSpec::new(vec![vec![CurrentTerm::Sinusoid {
        amplitude: 0.3,
        period: 25.0,
        phase: 0.0,
    }]]);
    let net = Network::new(params)?;

    let horizon = net.history_horizon(1e-6);
    println!("history horizon for eps = 1e-6: {horizon} steps");

    let opts = SimulateOptions {
        steps: 120,
        trials: 3,
        seed: 2024,
        horizon,
        past: Past::Empty,
    };
    let rasters = net.simulate(&opts)?;

    let dir = std::env::temp_dir().join("gifnet_simulate_example");
    std::fs::create_dir_all(&dir)?;
    for (i, raster) in rasters.iter().enumerate() {
        let rate = (0..raster.len() as i64).filter(|&t| raster.bit(0, t) == 1).count() as f64
            / raster.len() as f64;
        let path = dir.join(format!("raster_{i}.txt"));
        write_raster(raster, &path)?;
        println!("trial {i}: rate = {rate:.4}  ->  {}", path.display());
    }

    // a quick look at the first 60 steps of trial 0
    let line: String =
        (0..60).map(|t| if rasters[0].bit(0, t) == 1 { '|' } else { '.' }).collect();
    println!("trial 0, steps 0..60: {line}");
    Ok(())
}
