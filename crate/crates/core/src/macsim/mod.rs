//! Discrete-event simulation of the 802.11 distributed coordination
//! function over the slow-fading channel.
//!
//! [`run`] executes one scenario under one configuration and seed and
//! returns per-connection, per-node, and flood metrics. Identical inputs
//! produce identical output: events are ordered by (time, insertion
//! sequence) and all randomness flows from one seeded generator.

mod config;
mod engine;
mod metrics;

pub use config::{ConfigError, DcfConfig, FrameBits, Ns, US};
pub use metrics::{
    one_hop_delay, ConnectionMetrics, DelayStats, FloodMetrics, LegMetrics, NodeMetrics,
    RunMetrics,
};

use crate::scenarios::{single_link, Scenario, ScenarioError, Traffic};
use crate::table::Table;
use engine::Engine;
use thiserror::Error;

/// A scenario/configuration pair that cannot be simulated.
#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Config(#[from] ConfigError),
}

/// Runs one simulation and returns its metrics.
pub fn run(scenario: &Scenario, config: &DcfConfig, seed: u64) -> Result<RunMetrics, RunError> {
    scenario.validate()?;
    config.validate(&scenario.channel.params())?;
    let (metrics, _) = Engine::new(scenario, config, seed, false).run();
    metrics.assert_conserved();
    Ok(metrics)
}

/// Runs one simulation and additionally returns a per-event trace table
/// (time, node, event kind, frame kind, value).
pub fn run_traced(
    scenario: &Scenario,
    config: &DcfConfig,
    seed: u64,
) -> Result<(RunMetrics, Table), RunError> {
    scenario.validate()?;
    config.validate(&scenario.channel.params())?;
    let (metrics, trace) = Engine::new(scenario, config, seed, true).run();
    metrics.assert_conserved();
    Ok((metrics, trace.expect("trace requested")))
}

/// Saturation throughput of a single sender-receiver pair at the given
/// distance: acknowledged payload bits per second after discarding the
/// warm-up prefix of the run.
pub fn saturation_capacity(
    distance_m: f64,
    config: &DcfConfig,
    channel: crate::scenarios::ChannelModel,
    payload_bytes: u32,
    duration_s: f64,
    seed: u64,
) -> f64 {
    let scenario = single_link(
        distance_m,
        payload_bytes,
        Traffic::Saturated,
        channel,
        duration_s,
        seed,
    );
    let metrics = run(&scenario, config, seed).expect("single link scenario is valid");
    let warmup_s = config.warmup_fraction * duration_s;
    metrics.connections[0].acked_throughput_bps(duration_s, warmup_s)
}
