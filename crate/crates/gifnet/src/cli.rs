//! Batch front-end used by the `gifnet` binary. The library is the primary
//! interface; these subcommands wrap it for scripted runs.
//!
//! Exit codes: 0 on success with all asserted bounds holding, 1 when a bound
//! failed numerically, 2 on usage/config errors, 3 on numerical
//! non-convergence.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use crate::analysis::{self, Quantity};
use crate::config::load_params;
use crate::error::Error;
use crate::kernel::SimulateOptions;
use crate::model::Network;
use crate::raster::{read_raster, write_raster, Past, Raster};

#[derive(Parser)]
#[command(name = "gifnet", version, about = "Conductance-based integrate-and-fire network toolbox")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum PastArg {
    Empty,
    Allones,
}

impl From<PastArg> for Past {
    fn from(p: PastArg) -> Past {
        match p {
            PastArg::Empty => Past::Empty,
            PastArg::Allones => Past::AllOnes,
        }
    }
}

#[derive(clap::Args)]
struct SimulateArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value_t = 100)]
    steps: u32,
    #[arg(long, default_value_t = 1)]
    trials: u32,
    /// History expansion depth; defaults to the depth certified for --eps.
    #[arg(long)]
    horizon: Option<u32>,
    /// Tolerance the default horizon is derived from.
    #[arg(long, default_value_t = 1e-6)]
    eps: f64,
    #[arg(long, value_enum, default_value_t = PastArg::Empty)]
    past: PastArg,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Sample rasters from the exact conditional law.
    Simulate(SimulateArgs),
    /// Write the derived bound table and the uniqueness certificate.
    Bounds {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Measured variation against the analytic bounds for all quantities.
    Variation {
        #[arg(long)]
        config: PathBuf,
        #[arg(long = "m-max", default_value_t = 8)]
        m_max: u32,
        #[arg(long, default_value_t = 2)]
        tail_horizon: u32,
        #[arg(long)]
        out: PathBuf,
    },
    /// Markov-truncation error sweep over depths.
    Approx {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 8)]
        depth: u32,
        #[arg(long, default_value_t = 16)]
        probes: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Empirical statistics of raster files.
    Stats {
        #[arg(long, num_args = 1.., required = true)]
        input: Vec<PathBuf>,
        #[arg(long, default_value_t = 5)]
        max_lag: u32,
        #[arg(long, default_value_t = 3)]
        block_width: u32,
        #[arg(long)]
        out: PathBuf,
    },
    /// Recode a raster with a coarser time bin.
    Bin {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 1)]
        width: u32,
        #[arg(long)]
        out: PathBuf,
    },
}

fn exit_code(err: &Error) -> i32 {
    match err {
        Error::QuadratureNonConvergence { .. } | Error::SeriesDivergence { .. } => 3,
        _ => 2,
    }
}

fn load_network(config: &Path) -> crate::error::Result<Network> {
    Network::new(load_params(config)?)
}

fn write_text(path: &Path, text: &str) -> crate::error::Result<()> {
    std::fs::write(path, text)?;
    Ok(())
}

fn cmd_simulate(args: &SimulateArgs) -> crate::error::Result<bool> {
    let (steps, trials, seed) = (args.steps, args.trials, args.seed);
    if steps == 0 || trials == 0 {
        return Err(Error::InvalidParameter {
            field: "steps/trials".into(),
            reason: "must be at least 1".into(),
        });
    }
    if args.eps.is_nan() || args.eps <= 0.0 {
        return Err(Error::InvalidParameter {
            field: "eps".into(),
            reason: "must be positive".into(),
        });
    }
    let net = load_network(&args.config)?;
    let horizon = args.horizon.unwrap_or_else(|| net.history_horizon(args.eps));
    let out = &args.out;
    std::fs::create_dir_all(out)?;
    let opts = SimulateOptions { steps, trials, seed, horizon, past: args.past.into() };
    let rasters = net.simulate(&opts)?;

    let mut summary = String::from("stat,trial,neuron,value\n");
    let _ = writeln!(summary, "seed,,,{seed}");
    let _ = writeln!(summary, "steps,,,{steps}");
    let _ = writeln!(summary, "trials,,,{trials}");
    let _ = writeln!(summary, "horizon,,,{horizon}");
    for (trial, raster) in rasters.iter().enumerate() {
        write_raster(raster, out.join(format!("raster_{trial:04}.txt")))?;
        for k in 0..net.n_neurons() {
            let rate = (0..steps as i64).map(|t| raster.bit(k, t) as u64).sum::<u64>() as f64
                / steps as f64;
            let _ = writeln!(summary, "rate,{},{},{rate}", trial + 1, k + 1);
        }
    }
    write_text(&out.join("summary.csv"), &summary)?;
    Ok(true)
}

fn cmd_bounds(config: &Path, out: &Path) -> crate::error::Result<bool> {
    let net = load_network(config)?;
    std::fs::create_dir_all(out)?;
    let mut table = String::from("quantity,neuron,value\n");
    for (quantity, neuron, value) in net.bounds().csv_rows() {
        let _ = writeln!(table, "{quantity},{neuron},{value}");
    }
    write_text(&out.join("bounds.csv"), &table)?;

    let cert = net.uniqueness_certificate()?;
    let mut text = String::from("quantity,value\n");
    let _ = writeln!(text, "m_p_lower,{}", cert.m_p_lower);
    let _ = writeln!(text, "ln_m_p_lower,{}", cert.ln_m_p_lower);
    let _ = writeln!(text, "v_p_upper,{}", cert.v_p_upper);
    write_text(&out.join("certificate.csv"), &text)?;
    Ok(cert.m_p_lower > 0.0 && cert.v_p_upper.is_finite())
}

fn cmd_variation(config: &Path, m_max: u32, tail_horizon: u32, out: &Path) -> crate::error::Result<bool> {
    let net = load_network(config)?;
    std::fs::create_dir_all(out)?;
    let mut text = String::from("quantity,m,measured,bound\n");
    let mut all_held = true;
    for quantity in Quantity::ALL {
        for m in 0..=m_max {
            let report = analysis::measure_variation(&net, quantity, m, tail_horizon)?;
            let _ = writeln!(
                text,
                "{},{m},{},{}",
                quantity.name(),
                report.measured_lower,
                report.analytic_upper
            );
            if report.measured_lower > report.analytic_upper + 1e-8 {
                all_held = false;
                eprintln!(
                    "bound violated: {} at m={m}: measured {} > bound {}",
                    quantity.name(),
                    report.measured_lower,
                    report.analytic_upper
                );
            }
        }
    }
    write_text(&out.join("variation.csv"), &text)?;
    Ok(all_held)
}

fn cmd_approx(config: &Path, depth: u32, probes: usize, seed: u64, out: &Path) -> crate::error::Result<bool> {
    let net = load_network(config)?;
    std::fs::create_dir_all(out)?;
    let mut text = String::from("depth,max_tv,mean_kl\n");
    let mut all_held = true;
    let mut prev_tv = f64::INFINITY;
    for d in 0..=depth {
        let err = analysis::markov_error(&net, d, probes, seed)?;
        let _ = writeln!(text, "{d},{},{}", err.max_tv, err.mean_kl);
        let bound = analysis::variation_bound(&net, Quantity::Kernel, d);
        if err.max_tv > bound + 1e-8 {
            all_held = false;
            eprintln!("truncation error at depth {d}: {} exceeds bound {bound}", err.max_tv);
        }
        if err.max_tv > prev_tv + 1e-10 {
            all_held = false;
            eprintln!("truncation error grew from {prev_tv} to {} at depth {d}", err.max_tv);
        }
        prev_tv = err.max_tv;
    }
    write_text(&out.join("approx.csv"), &text)?;
    Ok(all_held)
}

fn cmd_stats(input: &[PathBuf], max_lag: u32, block_width: u32, out: &Path) -> crate::error::Result<bool> {
    let rasters: Vec<Raster> =
        input.iter().map(read_raster).collect::<crate::error::Result<_>>()?;
    let stats = analysis::empirical_stats(&rasters, max_lag, block_width)?;
    std::fs::create_dir_all(out)?;
    let mut text = String::from("estimator,indices,value,stderr\n");
    for (k, rate) in stats.rates.iter().enumerate() {
        let _ = writeln!(text, "rate,{},{rate},{}", k + 1, stats.rate_std_error[k]);
    }
    for (k, row) in stats.pairwise.iter().enumerate() {
        for (j, lags) in row.iter().enumerate() {
            for (lag, value) in lags.iter().enumerate() {
                let _ = writeln!(text, "pairwise,{}:{}:{lag},{value},", k + 1, j + 1);
            }
        }
    }
    for (w, freqs) in stats.block_freqs.iter().enumerate() {
        for (code, freq) in freqs.iter().enumerate() {
            let _ = writeln!(text, "block_freq,w{}:{code:b},{freq},", w + 1);
        }
    }
    write_text(&out.join("stats.csv"), &text)?;
    Ok(true)
}

fn cmd_bin(input: &Path, width: u32, out: &Path) -> crate::error::Result<bool> {
    if width == 0 {
        return Err(Error::InvalidParameter {
            field: "width".into(),
            reason: "must be at least 1".into(),
        });
    }
    let raster = read_raster(input)?;
    let binned = analysis::bin_raster(&raster, width);
    std::fs::create_dir_all(out)?;
    write_raster(&binned, out.join("binned.txt"))?;
    Ok(true)
}

/// Entry point for the `gifnet` binary; returns the process exit code.
pub fn run_cli() -> i32 {
    if let Ok(threads) = std::env::var("GIFNET_THREADS") {
        if let Ok(threads) = threads.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
        }
    }
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Simulate(args) => cmd_simulate(args),
        Command::Bounds { config, out } => cmd_bounds(config, out),
        Command::Variation { config, m_max, tail_horizon, out } => {
            cmd_variation(config, *m_max, *tail_horizon, out)
        }
        Command::Approx { config, depth, probes, seed, out } => {
            cmd_approx(config, *depth, *probes, *seed, out)
        }
        Command::Stats { input, max_lag, block_width, out } => {
            cmd_stats(input, *max_lag, *block_width, out)
        }
        Command::Bin { input, width, out } => cmd_bin(input, *width, out),
    };
    match result {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(err) => {
            eprintln!("error: {err}");
            exit_code(&err)
        }
    }
}
