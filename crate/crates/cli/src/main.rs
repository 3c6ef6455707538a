//! `fademac`: analytical curves and event-driven MAC experiments for
//! 802.11 DCF over log-normal fading links.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};

use fademac_cli::{parse_config, rerun_from_manifest, run_experiment, RunManifest};

#[derive(Parser)]
#[command(name = "fademac", version, about = "802.11 DCF behavior over fading links", long_about = None)]
struct Cli {
    /// TOML configuration file; omitted keys fall back to defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Base seed, overriding `experiment.base_seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory, overriding `experiment.out_dir`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Seeds per data point, overriding `experiment.replications`.
    #[arg(long, global = true)]
    replications: Option<u32>,
    /// Also write an event trace of one representative simulated run.
    #[arg(long, global = true)]
    trace: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Received-power samples over time at a fixed distance.
    PowerTrace,
    /// Analytic vs Monte Carlo link delivery ratio across distance.
    Delivery,
    /// Retry-limited packet delivery curves across link quality.
    PacketDelivery,
    /// Expected backoff window across link quality.
    BackoffCurve,
    /// Simulated one-hop delay across distance.
    Delay,
    /// Simulated saturation capacity across distance, both access modes.
    Capacity,
    /// Throughput shares of two contending links, one weakening.
    Unfairness,
    /// End-to-end throughput of two-hop chains in all hop orderings.
    HopOrder,
    /// Blind-flooding coverage across node density and loss.
    Flooding,
    /// Capture, collision-avoidance, and carrier-sense distance bounds.
    CaptureGeometry,
    /// Cross-check closed forms, enumeration, and sampling; nonzero on failure.
    Validate,
    /// Re-execute a recorded run and verify outputs byte for byte.
    Rerun {
        /// Path to the `manifest.json` of the recorded run.
        #[arg(long)]
        manifest: PathBuf,
    },
}

impl Command {
    fn experiment_name(&self) -> &'static str {
        match self {
            Command::PowerTrace => "power_trace",
            Command::Delivery => "delivery_vs_distance",
            Command::PacketDelivery => "packet_delivery_curves",
            Command::BackoffCurve => "backoff_curve",
            Command::Delay => "delay",
            Command::Capacity => "capacity",
            Command::Unfairness => "unfairness",
            Command::HopOrder => "hop_order",
            Command::Flooding => "flooding",
            Command::CaptureGeometry => "capture_geometry",
            Command::Validate => "validate",
            Command::Rerun { .. } => unreachable!("rerun is dispatched separately"),
        }
    }
}

fn run(cli: Cli) -> Result<RunManifest> {
    if let Command::Rerun { manifest } = &cli.command {
        let out = cli.out.clone().unwrap_or_else(|| PathBuf::from("rerun_out"));
        return rerun_from_manifest(manifest, &out);
    }

    let mut config = parse_config(cli.config.as_deref())?;
    if let Some(seed) = cli.seed {
        config.experiment.base_seed = seed;
    }
    if let Some(out) = &cli.out {
        config.experiment.out_dir = out.display().to_string();
    }
    if let Some(reps) = cli.replications {
        config.experiment.replications = reps;
    }
    if cli.trace {
        config.experiment.trace = true;
    }
    let out_dir = PathBuf::from(&config.experiment.out_dir);
    run_experiment(cli.command.experiment_name(), &config, &out_dir)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(manifest) => {
            println!("experiment: {}", manifest.experiment);
            for out in &manifest.outputs {
                println!("  {}  sha256:{}", out.file, &out.sha256[..16]);
            }
            println!("manifest: manifest.json (seed {})", manifest.seed);
            ExitCode::SUCCESS
        }
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}
