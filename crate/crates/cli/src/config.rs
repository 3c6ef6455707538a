//! Configuration file handling.
//!
//! The file is TOML with three sections: `[propagation]`, `[mac]`, and
//! `[experiment]`. Every key is optional (an empty file yields the
//! defaults), unknown keys are errors, and every global CLI flag overrides
//! its config-file counterpart. The fully resolved configuration is what
//! the manifest records, making it the single source of truth for a rerun.

use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use fademac_core::analytic::{BackoffParams, RetryLimits};
use fademac_core::macsim::{DcfConfig, FrameBits};
use fademac_core::propagation::PropagationParams;
use fademac_core::scenarios::ChannelModel;

/// Fully resolved configuration: defaults filled, flags applied, validated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Resolved {
    pub propagation: PropagationParams,
    pub mac: DcfConfig,
    pub experiment: ExperimentSettings,
}

impl Resolved {
    pub fn channel(&self) -> ChannelModel {
        ChannelModel::Fading(self.propagation)
    }
}

/// Experiment-level knobs shared across subcommands. Each subcommand reads
/// the subset it needs; grids and defaults are documented in the README.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSettings {
    pub duration_s: f64,
    pub replications: u32,
    pub payload_bytes: u32,
    pub base_seed: u64,
    pub out_dir: String,
    pub trace: bool,
    /// Distance for the received-power trace.
    pub trace_distance_m: f64,
    /// Monte Carlo draws per distance for the delivery-ratio comparison.
    pub n_samples: u32,
    /// Distance grid for the delivery-ratio comparison.
    pub delivery_grid_m: Vec<f64>,
    /// Distance grid for capacity and delay scans.
    pub capacity_grid_m: Vec<f64>,
    /// Link-ratio grid for packet-delivery and backoff curves.
    pub p_grid: Vec<f64>,
    pub unfairness_fixed_d_m: f64,
    pub unfairness_varied_d_m: Vec<f64>,
    pub source_gap_m: f64,
    pub hop_strong_m: f64,
    pub hop_weak_m: f64,
    pub flood_node_counts: Vec<usize>,
    pub flood_drop_probs: Vec<f64>,
    pub flood_area_m: f64,
    pub flood_jitter_us: u64,
    pub flood_payload_bytes: u32,
    /// Sender-receiver distance grid for the capture-geometry table.
    pub geometry_grid_m: Vec<f64>,
}

impl Default for ExperimentSettings {
    fn default() -> Self {
        let step_grid = |from: u32, to: u32, step: u32| -> Vec<f64> {
            (from..=to).step_by(step as usize).map(f64::from).collect()
        };
        ExperimentSettings {
            duration_s: 60.0,
            replications: 10,
            payload_bytes: 500,
            base_seed: 1,
            out_dir: "out".to_string(),
            trace: false,
            trace_distance_m: 220.0,
            n_samples: 10_000,
            delivery_grid_m: step_grid(25, 450, 25),
            capacity_grid_m: step_grid(50, 240, 10),
            p_grid: (0..=100).map(|i| i as f64 / 100.0).collect(),
            unfairness_fixed_d_m: 150.0,
            unfairness_varied_d_m: vec![150.0, 180.0, 200.0, 220.0],
            source_gap_m: 100.0,
            hop_strong_m: 100.0,
            hop_weak_m: 220.0,
            flood_node_counts: vec![25, 50, 100, 150, 200],
            flood_drop_probs: vec![0.0, 0.1, 0.2, 0.3, 0.4, 0.5],
            flood_area_m: 1000.0,
            flood_jitter_us: 10_000,
            flood_payload_bytes: 64,
            geometry_grid_m: step_grid(10, 250, 10),
        }
    }
}

// --- raw (file-shaped) layer --------------------------------------------------

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct RawConfig {
    propagation: RawPropagation,
    mac: RawMac,
    experiment: RawExperiment,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct RawPropagation {
    beta: Option<f64>,
    sigma_db: Option<f64>,
    d0_m: Option<f64>,
    p_th_dbm: Option<f64>,
    ideal_range_m: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct RawMac {
    srl: Option<u32>,
    lrl: Option<u32>,
    cw_min_slots: Option<u32>,
    cw_max_slots: Option<u32>,
    backoff_enabled: Option<bool>,
    rts_cts_enabled: Option<bool>,
    slot_us: Option<u64>,
    sifs_us: Option<u64>,
    difs_us: Option<u64>,
    data_rate_bps: Option<u64>,
    control_rate_bps: Option<u64>,
    cs_threshold_dbm: Option<f64>,
    capture_enabled: Option<bool>,
    capture_threshold_db: Option<f64>,
    queue_capacity: Option<usize>,
    warmup_fraction: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct RawExperiment {
    duration_s: Option<f64>,
    replications: Option<u32>,
    payload_bytes: Option<u32>,
    base_seed: Option<u64>,
    out_dir: Option<String>,
    trace: Option<bool>,
    trace_distance_m: Option<f64>,
    n_samples: Option<u32>,
    delivery_grid_m: Option<Vec<f64>>,
    capacity_grid_m: Option<Vec<f64>>,
    p_grid: Option<Vec<f64>>,
    unfairness_fixed_d_m: Option<f64>,
    unfairness_varied_d_m: Option<Vec<f64>>,
    source_gap_m: Option<f64>,
    hop_strong_m: Option<f64>,
    hop_weak_m: Option<f64>,
    flood_node_counts: Option<Vec<usize>>,
    flood_drop_probs: Option<Vec<f64>>,
    flood_area_m: Option<f64>,
    flood_jitter_us: Option<u64>,
    flood_payload_bytes: Option<u32>,
    geometry_grid_m: Option<Vec<f64>>,
}

/// Parses and validates a configuration file. A missing `path` of `None`
/// yields pure defaults.
pub fn parse_config(path: Option<&Path>) -> Result<Resolved> {
    let raw: RawConfig = match path {
        None => RawConfig::default(),
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .with_context(|| format!("reading config file {}", p.display()))?;
            toml::from_str(&text)
                .with_context(|| format!("parsing config file {}", p.display()))?
        }
    };
    resolve(raw)
}

fn resolve(raw: RawConfig) -> Result<Resolved> {
    let beta = raw.propagation.beta.unwrap_or(3.0);
    let sigma_db = raw.propagation.sigma_db.unwrap_or(4.0);
    let d0_m = raw.propagation.d0_m.unwrap_or(1.0);
    let p_th_dbm = raw.propagation.p_th_dbm.unwrap_or(-64.0);
    let ideal_range_m = raw.propagation.ideal_range_m.unwrap_or(250.0);
    if !(beta > 0.0) {
        bail!("propagation.beta: path-loss exponent must be positive, got {beta}");
    }
    if !(sigma_db >= 0.0) {
        bail!("propagation.sigma_db: shadowing deviation must be >= 0 dB, got {sigma_db}");
    }
    if !(d0_m > 0.0) {
        bail!("propagation.d0_m: reference distance must be positive, got {d0_m}");
    }
    if !(ideal_range_m > d0_m) {
        bail!(
            "propagation.ideal_range_m: must exceed the reference distance {d0_m} m, got {ideal_range_m}"
        );
    }
    let propagation = PropagationParams::calibrated(beta, sigma_db, d0_m, p_th_dbm, ideal_range_m);

    let srl = raw.mac.srl.unwrap_or(7);
    let lrl = raw.mac.lrl.unwrap_or(4);
    // The enumeration behind the analytic cross-checks carries the retry
    // state exactly, which bounds the limits it accepts.
    for (name, v) in [("srl", srl), ("lrl", lrl)] {
        if !(1..=16).contains(&v) {
            bail!("mac.{name}: retry limit must be in 1..=16, got {v}");
        }
    }
    let retry = RetryLimits { srl, lrl };
    let cw_min = raw.mac.cw_min_slots.unwrap_or(31);
    let cw_max = raw.mac.cw_max_slots.unwrap_or(1023);
    for (name, v) in [("cw_min_slots", cw_min), ("cw_max_slots", cw_max)] {
        if v < 1 || !(v + 1).is_power_of_two() {
            bail!("mac.{name}: contention window must be one below a power of two, got {v}");
        }
    }
    if cw_min > cw_max {
        bail!("mac.cw_min_slots ({cw_min}) must not exceed mac.cw_max_slots ({cw_max})");
    }
    let backoff = BackoffParams { cw_min_slots: cw_min, cw_max_slots: cw_max };

    let defaults = DcfConfig::default_for(&propagation);
    let mac = DcfConfig {
        retry,
        backoff,
        backoff_enabled: raw.mac.backoff_enabled.unwrap_or(defaults.backoff_enabled),
        rts_cts_enabled: raw.mac.rts_cts_enabled.unwrap_or(defaults.rts_cts_enabled),
        slot_us: raw.mac.slot_us.unwrap_or(defaults.slot_us),
        sifs_us: raw.mac.sifs_us.unwrap_or(defaults.sifs_us),
        difs_us: raw.mac.difs_us.unwrap_or(defaults.difs_us),
        data_rate_bps: raw.mac.data_rate_bps.unwrap_or(defaults.data_rate_bps),
        control_rate_bps: raw.mac.control_rate_bps.unwrap_or(defaults.control_rate_bps),
        frame_bits: FrameBits::default(),
        cs_threshold_dbm: raw.mac.cs_threshold_dbm.unwrap_or(defaults.cs_threshold_dbm),
        capture_enabled: raw.mac.capture_enabled.unwrap_or(defaults.capture_enabled),
        capture_threshold_db: raw
            .mac
            .capture_threshold_db
            .unwrap_or(defaults.capture_threshold_db),
        queue_capacity: raw.mac.queue_capacity.unwrap_or(defaults.queue_capacity),
        warmup_fraction: raw.mac.warmup_fraction.unwrap_or(defaults.warmup_fraction),
    };
    mac.validate(&propagation).map_err(|e| anyhow::anyhow!("mac: {e}"))?;

    let d = ExperimentSettings::default();
    let e = raw.experiment;
    let experiment = ExperimentSettings {
        duration_s: e.duration_s.unwrap_or(d.duration_s),
        replications: e.replications.unwrap_or(d.replications),
        payload_bytes: e.payload_bytes.unwrap_or(d.payload_bytes),
        base_seed: e.base_seed.unwrap_or(d.base_seed),
        out_dir: e.out_dir.unwrap_or(d.out_dir),
        trace: e.trace.unwrap_or(d.trace),
        trace_distance_m: e.trace_distance_m.unwrap_or(d.trace_distance_m),
        n_samples: e.n_samples.unwrap_or(d.n_samples),
        delivery_grid_m: e.delivery_grid_m.unwrap_or(d.delivery_grid_m),
        capacity_grid_m: e.capacity_grid_m.unwrap_or(d.capacity_grid_m),
        p_grid: e.p_grid.unwrap_or(d.p_grid),
        unfairness_fixed_d_m: e.unfairness_fixed_d_m.unwrap_or(d.unfairness_fixed_d_m),
        unfairness_varied_d_m: e.unfairness_varied_d_m.unwrap_or(d.unfairness_varied_d_m),
        source_gap_m: e.source_gap_m.unwrap_or(d.source_gap_m),
        hop_strong_m: e.hop_strong_m.unwrap_or(d.hop_strong_m),
        hop_weak_m: e.hop_weak_m.unwrap_or(d.hop_weak_m),
        flood_node_counts: e.flood_node_counts.unwrap_or(d.flood_node_counts),
        flood_drop_probs: e.flood_drop_probs.unwrap_or(d.flood_drop_probs),
        flood_area_m: e.flood_area_m.unwrap_or(d.flood_area_m),
        flood_jitter_us: e.flood_jitter_us.unwrap_or(d.flood_jitter_us),
        flood_payload_bytes: e.flood_payload_bytes.unwrap_or(d.flood_payload_bytes),
        geometry_grid_m: e.geometry_grid_m.unwrap_or(d.geometry_grid_m),
    };
    validate_experiment(&experiment)?;
    Ok(Resolved { propagation, mac, experiment })
}

fn validate_experiment(e: &ExperimentSettings) -> Result<()> {
    if !(e.duration_s > 0.0) {
        bail!("experiment.duration_s: must be positive, got {}", e.duration_s);
    }
    if e.replications == 0 {
        bail!("experiment.replications: must be at least 1");
    }
    if e.payload_bytes == 0 || e.flood_payload_bytes == 0 {
        bail!("experiment payload sizes must be at least 1 byte");
    }
    if e.n_samples == 0 {
        bail!("experiment.n_samples: must be at least 1");
    }
    for (name, grid) in [
        ("delivery_grid_m", &e.delivery_grid_m),
        ("capacity_grid_m", &e.capacity_grid_m),
        ("p_grid", &e.p_grid),
        ("unfairness_varied_d_m", &e.unfairness_varied_d_m),
        ("flood_drop_probs", &e.flood_drop_probs),
        ("geometry_grid_m", &e.geometry_grid_m),
    ] {
        if grid.is_empty() {
            bail!("experiment.{name}: grid must not be empty");
        }
    }
    if e.p_grid.iter().any(|p| !(0.0..=1.0).contains(p)) {
        bail!("experiment.p_grid: link ratios must lie in [0, 1]");
    }
    if e.flood_drop_probs.iter().any(|p| !(0.0..=1.0).contains(p)) {
        bail!("experiment.flood_drop_probs: probabilities must lie in [0, 1]");
    }
    if e.flood_node_counts.is_empty() || e.flood_node_counts.iter().any(|&n| n < 2) {
        bail!("experiment.flood_node_counts: every count must be at least 2");
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn parse_str(text: &str) -> Result<Resolved> {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(text.as_bytes()).unwrap();
        parse_config(Some(f.path()))
    }

    #[test]
    fn empty_file_yields_defaults() {
        let r = parse_str("").unwrap();
        assert_eq!(r.propagation.beta, 3.0);
        assert_eq!(r.propagation.sigma_db, 4.0);
        assert!((r.propagation.ideal_range_m() - 250.0).abs() < 1e-9);
        assert_eq!(r.mac.retry.srl, 7);
        assert_eq!(r.mac.retry.lrl, 4);
        assert_eq!(r.experiment.replications, 10);
        assert_eq!(r, parse_config(None).unwrap());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = parse_str("[mac]\nsrll = 7\n").unwrap_err();
        assert!(format!("{err:#}").contains("srll"), "{err:#}");
    }

    #[test]
    fn negative_sigma_is_rejected_by_name() {
        let err = parse_str("[propagation]\nsigma_db = -1\n").unwrap_err();
        let msg = format!("{err:#}");
        assert!(msg.contains("sigma_db"), "{msg}");
    }

    #[test]
    fn zero_srl_is_rejected() {
        let err = parse_str("[mac]\nsrl = 0\n").unwrap_err();
        let msg = format!("{err:#}");
        assert!(msg.contains("retry"), "{msg}");
    }

    #[test]
    fn sifs_difs_ordering_enforced() {
        let err = parse_str("[mac]\nsifs_us = 60\n").unwrap_err();
        let msg = format!("{err:#}").to_lowercase();
        assert!(msg.contains("sifs"), "{msg}");
    }

    #[test]
    fn overrides_apply() {
        let r = parse_str(
            "[propagation]\nbeta = 2.5\n[mac]\nrts_cts_enabled = true\n[experiment]\nreplications = 3\n",
        )
        .unwrap();
        assert_eq!(r.propagation.beta, 2.5);
        assert!(r.mac.rts_cts_enabled);
        assert_eq!(r.experiment.replications, 3);
        // Untouched keys keep their defaults.
        assert_eq!(r.mac.retry.srl, 7);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let err = parse_str("[mac]\nsrl = \"seven\"\n").unwrap_err();
        let msg = format!("{err:#}");
        assert!(msg.contains("line 2"), "{msg}");
    }

    #[test]
    fn resolved_round_trips_through_json() {
        let r = parse_config(None).unwrap();
        let json = serde_json::to_string(&r).unwrap();
        let back: Resolved = serde_json::from_str(&json).unwrap();
        assert_eq!(r, back);
    }
}
