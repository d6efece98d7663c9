//! The raster container: extremal rasters, spike-time extraction, last-reset
//! lookup, and the text file format round trip.
//!
//! ```bash
//! cargo run --example raster_files
//! ```

use gifnet::raster::{read_raster, write_raster};
use gifnet::{Past, Raster, ResetTime};

fn main() -> gifnet::Result<()> {
    let mut raster = Raster::new(2, 0, 9, Past::Empty);
    for t in [1, 4, 7] {
        raster.set_bit(0, t, 1);
    }
    raster.set_bit(1, 5, 1);

    println!("spike times of neuron 1 before t = 8.5: {:?}", raster.spike_times(0, 8.5, 20));
    match raster.last_reset(0, 9) {
        ResetTime::Time(t) => println!("neuron 1 last reset at {t}"),
        ResetTime::MinusInfinity => println!("neuron 1 never reset"),
    }
    match raster.last_reset(1, 3) {
        ResetTime::Time(t) => println!("neuron 2 last reset at {t} (before time 3)"),
        ResetTime::MinusInfinity => println!("neuron 2 never reset before time 3"),
    }

    // the always-firing raster resolves resets through its past convention
    let saturated = Raster::omega1(2, 0, 4);
    println!(
        "saturated raster, neuron 1, spikes below t = 2.5 within depth 4: {:?}",
        saturated.spike_times(0, 2.5, 4)
    );

    let path = std::env::temp_dir().join("gifnet_raster_example.txt");
    write_raster(&raster, &path)?;
    let back = read_raster(&path)?;
    println!("file round trip identical: {}", back == raster);
    println!("file contents:\n{}", std::fs::read_to_string(&path)?);
    Ok(())
}
