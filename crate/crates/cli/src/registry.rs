//! Experiment registry: name to runner dispatch.
//!
//! Every runner consumes only the resolved configuration, writes CSVs plus a
//! `manifest.json` into the output directory, and is deterministic in the
//! (config, seed) pair. [`rerun_from_manifest`] exploits that to verify a
//! recorded run byte for byte.

use std::path::Path;

use anyhow::{bail, Context, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use fademac_core::analytic::{
    backoff_markov_oracle, expected_backoff_slots, packet_delivery_long_rtscts,
    packet_delivery_no_rts, packet_delivery_short_rtscts, retry_process_oracle,
    AttemptProbabilities, RetryLimits,
};
use fademac_core::geometry::{region_table, CaptureParams};
use fademac_core::macsim::run_traced;
use fademac_core::scenarios::{
    contending_pair, exp_backoff_curve, exp_capacity, exp_delay, exp_delivery_vs_distance,
    exp_flooding, exp_hop_order, exp_packet_delivery_curves, exp_power_trace, exp_unfairness,
    random_flood, single_link, two_hop_chain, ChannelModel, ExperimentResult, Scenario, Traffic,
    UnfairnessOptions,
};
use fademac_core::{seeds, Table};

use crate::config::Resolved;
use crate::manifest::{emit_csv, RunManifest};

/// Every experiment the CLI can run, in registry order.
pub const EXPERIMENTS: [&str; 11] = [
    "power_trace",
    "delivery_vs_distance",
    "packet_delivery_curves",
    "backoff_curve",
    "delay",
    "capacity",
    "unfairness",
    "hop_order",
    "flooding",
    "capture_geometry",
    "validate",
];

/// Runs one registered experiment, writing outputs and the manifest into
/// `out_dir` (created if missing). The returned manifest lists every file
/// with its digest. `validate` additionally fails if any check fails, after
/// its report and manifest are written.
pub fn run_experiment(name: &str, config: &Resolved, out_dir: &Path) -> Result<RunManifest> {
    if !EXPERIMENTS.contains(&name) {
        bail!(
            "unknown experiment {name:?}; available: {}",
            EXPERIMENTS.join(", ")
        );
    }
    std::fs::create_dir_all(out_dir)
        .with_context(|| format!("creating output directory {}", out_dir.display()))?;

    let mut manifest = RunManifest::begin(name, config);
    let failed_checks = dispatch(name, config, out_dir, &mut manifest)?;
    manifest.finish();
    manifest.write(out_dir)?;
    if let Some(failures) = failed_checks {
        bail!("validation failed: {failures}");
    }
    Ok(manifest)
}

/// Runs the named experiment. Returns `Some(failure summary)` only for a
/// failing `validate`, deferred so the manifest still gets written.
fn dispatch(
    name: &str,
    config: &Resolved,
    out_dir: &Path,
    manifest: &mut RunManifest,
) -> Result<Option<String>> {
    let e = &config.experiment;
    let channel = config.channel();
    match name {
        "power_trace" => {
            let t =
                exp_power_trace(e.trace_distance_m, e.duration_s, e.base_seed, &config.propagation);
            emit_csv(manifest, out_dir, "power_trace.csv", &t)?;
        }
        "delivery_vs_distance" => {
            let t = exp_delivery_vs_distance(
                &e.delivery_grid_m,
                e.n_samples,
                e.base_seed,
                &config.propagation,
            );
            emit_csv(manifest, out_dir, "delivery_vs_distance.csv", &t)?;
        }
        "packet_delivery_curves" => {
            let t = exp_packet_delivery_curves(&e.p_grid, config.mac.retry);
            emit_csv(manifest, out_dir, "packet_delivery_curves.csv", &t)?;
        }
        "backoff_curve" => {
            let t = exp_backoff_curve(&e.p_grid, config.mac.backoff);
            emit_csv(manifest, out_dir, "backoff_curve.csv", &t)?;
        }
        "delay" => {
            let r = exp_delay(
                &e.capacity_grid_m,
                e.payload_bytes,
                channel,
                &config.mac,
                e.duration_s,
                e.replications,
                e.base_seed,
            );
            emit_result(manifest, out_dir, &r)?;
            maybe_trace(name, config, out_dir, manifest)?;
        }
        "capacity" => {
            let r = exp_capacity(
                &e.capacity_grid_m,
                e.payload_bytes,
                channel,
                &config.mac,
                e.duration_s,
                e.replications,
                e.base_seed,
            );
            emit_result(manifest, out_dir, &r)?;
            maybe_trace(name, config, out_dir, manifest)?;
        }
        "unfairness" => {
            let opts = UnfairnessOptions {
                fixed_d_m: e.unfairness_fixed_d_m,
                varied_d_m: e.unfairness_varied_d_m.clone(),
                payload_bytes: e.payload_bytes,
                rts_cts: config.mac.rts_cts_enabled,
                backoff_enabled: config.mac.backoff_enabled,
                source_gap_m: e.source_gap_m,
                duration_s: e.duration_s,
                replications: e.replications,
                base_seed: e.base_seed,
            };
            let r = exp_unfairness(channel, &config.mac, &opts);
            emit_result(manifest, out_dir, &r)?;
            maybe_trace(name, config, out_dir, manifest)?;
        }
        "hop_order" => {
            let r = exp_hop_order(
                e.hop_strong_m,
                e.hop_weak_m,
                e.payload_bytes,
                channel,
                &config.mac,
                e.duration_s,
                e.replications,
                e.base_seed,
            );
            emit_result(manifest, out_dir, &r)?;
            maybe_trace(name, config, out_dir, manifest)?;
        }
        "flooding" => {
            let r = exp_flooding(
                &e.flood_node_counts,
                &e.flood_drop_probs,
                e.flood_area_m,
                e.flood_jitter_us,
                e.flood_payload_bytes,
                &config.mac,
                e.duration_s,
                e.replications,
                e.base_seed,
            );
            // Headline table in (n, drop_p, coverage) form on top of the
            // generic summary/raw pair.
            let mut t = Table::new(["n", "drop_p", "coverage_fraction"]);
            for &n in &e.flood_node_counts {
                let measure = format!("coverage_n{n}");
                for &drop_p in &e.flood_drop_probs {
                    t.push_cells(vec![
                        n.into(),
                        drop_p.into(),
                        r.get(&measure, drop_p).mean().into(),
                    ]);
                }
            }
            emit_csv(manifest, out_dir, "flooding.csv", &t)?;
            emit_result(manifest, out_dir, &r)?;
            maybe_trace(name, config, out_dir, manifest)?;
        }
        "capture_geometry" => {
            let t = region_table(geometry_params(config), &e.geometry_grid_m);
            emit_csv(manifest, out_dir, "capture_geometry.csv", &t)?;
        }
        "validate" => {
            let (t, failures) = validation_report(config);
            emit_csv(manifest, out_dir, "validation_report.csv", &t)?;
            return Ok(if failures.is_empty() {
                None
            } else {
                Some(failures.join("; "))
            });
        }
        _ => unreachable!("registry membership checked by run_experiment"),
    }
    Ok(None)
}

/// Writes the generic per-point summary and raw replicate tables, and the
/// metadata of the run when the experiment recorded any.
fn emit_result(manifest: &mut RunManifest, out_dir: &Path, r: &ExperimentResult) -> Result<()> {
    emit_csv(manifest, out_dir, &format!("{}_summary.csv", r.name), &r.summary_table())?;
    emit_csv(manifest, out_dir, &format!("{}_raw.csv", r.name), &r.raw_table())?;
    if !r.metadata.is_empty() {
        let mut t = Table::new(["key", "value"]);
        for (k, v) in &r.metadata {
            t.push_cells(vec![k.as_str().into(), v.as_str().into()]);
        }
        emit_csv(manifest, out_dir, &format!("{}_metadata.csv", r.name), &t)?;
    }
    Ok(())
}

/// With tracing enabled, runs one small representative scenario for the
/// experiment and writes its event log. The scenario and its seed are pure
/// functions of the configuration, so traces reproduce like everything else.
fn maybe_trace(
    name: &str,
    config: &Resolved,
    out_dir: &Path,
    manifest: &mut RunManifest,
) -> Result<()> {
    let e = &config.experiment;
    if !e.trace {
        return Ok(());
    }
    let channel = config.channel();
    let duration = e.duration_s.min(1.0);
    let seed = seeds::derive(e.base_seed, &[0x7ace]);
    let scenario: Scenario = match name {
        "delay" | "capacity" => single_link(
            e.capacity_grid_m[0],
            e.payload_bytes,
            Traffic::Saturated,
            channel,
            duration,
            seed,
        ),
        "unfairness" => contending_pair(
            e.unfairness_fixed_d_m,
            e.unfairness_varied_d_m[0],
            e.source_gap_m,
            e.payload_bytes,
            channel,
            duration,
            seed,
        ),
        "hop_order" => two_hop_chain(
            e.hop_strong_m,
            e.hop_weak_m,
            e.payload_bytes,
            Traffic::Saturated,
            channel,
            duration,
            seed,
        ),
        "flooding" => random_flood(
            e.flood_node_counts[0],
            e.flood_area_m,
            ChannelModel::BernoulliDrop { drop_p: e.flood_drop_probs[0] },
            e.flood_jitter_us,
            e.flood_payload_bytes,
            duration,
            seed,
            seeds::derive(e.base_seed, &[0x7ace, 1]),
        ),
        _ => return Ok(()),
    };
    let (_, trace) = run_traced(&scenario, &config.mac, seed)
        .with_context(|| format!("tracing representative {name} run"))?;
    emit_csv(manifest, out_dir, "trace.csv", &trace)?;
    Ok(())
}

/// Capture-geometry parameters derived from the resolved configuration: the
/// same capture ratio and path-loss exponent the simulator uses, reception
/// range at the fading model's ideal range, and the carrier-sense radius at
/// the distance where mean received power crosses the sensing threshold.
fn geometry_params(config: &Resolved) -> CaptureParams {
    let p = &config.propagation;
    let cs_range_m =
        p.d0_m * 10f64.powf((p.p_d0_dbm - config.mac.cs_threshold_dbm) / (10.0 * p.beta));
    CaptureParams {
        capture_threshold: config.mac.capture_ratio(),
        n: p.beta,
        tx_range_m: p.ideal_range_m(),
        cs_range_factor: (cs_range_m / p.ideal_range_m()).max(1.0),
    }
}

fn check_row(t: &mut Table, failures: &mut Vec<String>, name: &str, value: f64, bound: f64) {
    let ok = value <= bound;
    t.push_cells(vec![
        name.into(),
        if ok { "pass" } else { "fail" }.into(),
        value.into(),
        bound.into(),
    ]);
    if !ok {
        failures.push(name.to_string());
    }
}

/// Cross-checks the closed forms against the exact retry-process enumeration
/// and the fading model against Monte Carlo. Returns the report plus the
/// names of failed checks.
fn validation_report(config: &Resolved) -> (Table, Vec<String>) {
    let mut t = Table::new(["check", "status", "value", "bound"]);
    let mut failures = Vec::new();

    let limits = config.mac.retry;
    let grid: Vec<f64> = (0..=100).map(|i| i as f64 / 100.0).collect();
    let max_gap = |f: &dyn Fn(f64) -> (f64, f64)| -> f64 {
        grid.iter()
            .map(|&p| {
                let (a, b) = f(p);
                (a - b).abs()
            })
            .fold(0.0, f64::max)
    };

    let short = max_gap(&|p| {
        (
            packet_delivery_short_rtscts(p, limits.srl),
            retry_process_oracle(AttemptProbabilities::short_frame_rtscts(p), limits),
        )
    });
    check_row(&mut t, &mut failures, "short_rtscts_matches_oracle", short, 1e-12);

    let no_rts = max_gap(&|p| {
        (
            packet_delivery_no_rts(p, limits.lrl),
            retry_process_oracle(AttemptProbabilities::new(p, false), limits),
        )
    });
    check_row(&mut t, &mut failures, "no_rts_matches_oracle", no_rts, 1e-12);

    // The transcribed closed form for overall RTS/CTS delivery undercounts
    // some mixed failure paths; the enumeration is authoritative. Reported
    // for visibility, never a failure. The form is specific to limits (7, 4).
    if limits == (RetryLimits { srl: 7, lrl: 4 }) {
        let long = max_gap(&|p| {
            (
                packet_delivery_long_rtscts(p, limits),
                retry_process_oracle(AttemptProbabilities::new(p, true), limits),
            )
        });
        t.push_cells(vec![
            "long_rtscts_form_divergence".into(),
            "info".into(),
            long.into(),
            0.0.into(),
        ]);
    }

    let bp = config.mac.backoff;
    check_row(
        &mut t,
        &mut failures,
        "backoff_perfect_link_is_half_cw_min",
        (expected_backoff_slots(1.0, bp) - bp.cw_min_slots as f64 / 2.0).abs(),
        1e-12,
    );
    check_row(
        &mut t,
        &mut failures,
        "backoff_dead_link_is_half_cw_max",
        (expected_backoff_slots(0.0, bp) - bp.cw_max_slots as f64 / 2.0).abs(),
        1e-12,
    );
    let markov = max_gap(&|p| (expected_backoff_slots(p, bp), backoff_markov_oracle(p, bp)));
    check_row(&mut t, &mut failures, "backoff_form_matches_markov_oracle", markov, 1e-9);

    let prop = &config.propagation;
    check_row(
        &mut t,
        &mut failures,
        "delivery_ratio_half_at_ideal_range",
        (prop.link_delivery_ratio(prop.ideal_range_m()) - 0.5).abs(),
        1e-9,
    );

    // Monte Carlo agreement at a quarter, half, and the full ideal range,
    // in binomial standard deviations.
    let mut worst_sigma = 0f64;
    let n = config.experiment.n_samples.max(1000);
    let mut rng =
        ChaCha8Rng::seed_from_u64(seeds::derive(config.experiment.base_seed, &[0x5eed]));
    for frac in [0.25, 0.5, 1.0] {
        let d = prop.ideal_range_m() * frac;
        let analytic = prop.link_delivery_ratio(d);
        let mut hits = 0u64;
        for _ in 0..n {
            if prop.sample_received_power_dbm(d, &mut rng) >= prop.p_th_dbm {
                hits += 1;
            }
        }
        let mc = hits as f64 / n as f64;
        let sigma = (analytic * (1.0 - analytic) / n as f64).sqrt().max(1e-12);
        worst_sigma = worst_sigma.max((mc - analytic).abs() / sigma);
    }
    check_row(
        &mut t,
        &mut failures,
        "montecarlo_delivery_within_4_sigma",
        worst_sigma,
        4.0,
    );

    (t, failures)
}

/// Re-executes the experiment recorded in a manifest into `out_dir` and
/// compares output digests file by file. Errors if any file differs or is
/// missing; on success returns the fresh manifest.
pub fn rerun_from_manifest(manifest_path: &Path, out_dir: &Path) -> Result<RunManifest> {
    let recorded = RunManifest::read(manifest_path)?;
    let fresh = run_experiment(&recorded.experiment, &recorded.config, out_dir)?;
    let mut mismatches = Vec::new();
    for old in &recorded.outputs {
        match fresh.outputs.iter().find(|n| n.file == old.file) {
            None => mismatches.push(format!("{} missing from rerun", old.file)),
            Some(new) if new.sha256 != old.sha256 => {
                mismatches.push(format!("{} digest changed", old.file))
            }
            Some(_) => {}
        }
    }
    for new in &fresh.outputs {
        if !recorded.outputs.iter().any(|o| o.file == new.file) {
            mismatches.push(format!("{} not in recorded run", new.file));
        }
    }
    if !mismatches.is_empty() {
        bail!(
            "rerun does not reproduce recorded outputs: {}",
            mismatches.join(", ")
        );
    }
    Ok(fresh)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_config;

    fn quick_config() -> Resolved {
        let mut c = parse_config(None).unwrap();
        c.experiment.duration_s = 2.0;
        c.experiment.replications = 2;
        c.experiment.n_samples = 2000;
        c.experiment.capacity_grid_m = vec![100.0, 200.0];
        c.experiment.unfairness_varied_d_m = vec![180.0];
        c.experiment.flood_node_counts = vec![20];
        c.experiment.flood_drop_probs = vec![0.0, 0.3];
        c
    }

    #[test]
    fn unknown_name_lists_registry() {
        let dir = tempfile::tempdir().unwrap();
        let err = run_experiment("no_such", &parse_config(None).unwrap(), dir.path()).unwrap_err();
        let msg = format!("{err:#}");
        assert!(msg.contains("delivery_vs_distance"), "{msg}");
        assert!(msg.contains("flooding"), "{msg}");
    }

    #[test]
    fn delivery_vs_distance_writes_expected_schema() {
        let dir = tempfile::tempdir().unwrap();
        let mut c = quick_config();
        c.experiment.delivery_grid_m = vec![100.0, 250.0];
        let m = run_experiment("delivery_vs_distance", &c, dir.path()).unwrap();
        assert_eq!(m.outputs.len(), 1);
        let csv = std::fs::read_to_string(dir.path().join("delivery_vs_distance.csv")).unwrap();
        assert!(csv.starts_with("d_m,analytic_p,montecarlo_p,two_ray_p\n"), "{csv}");
        assert_eq!(csv.lines().count(), 3);
        assert!(dir.path().join("manifest.json").exists());
    }

    #[test]
    fn validate_passes_on_defaults() {
        let dir = tempfile::tempdir().unwrap();
        let m = run_experiment("validate", &quick_config(), dir.path()).unwrap();
        assert_eq!(m.outputs[0].file, "validation_report.csv");
        let csv = std::fs::read_to_string(dir.path().join("validation_report.csv")).unwrap();
        assert!(!csv.contains(",fail,"), "{csv}");
        assert!(csv.contains("long_rtscts_form_divergence,info,0.00716"), "{csv}");
    }

    #[test]
    fn capacity_run_emits_summary_raw_and_metadata() {
        let dir = tempfile::tempdir().unwrap();
        let m = run_experiment("capacity", &quick_config(), dir.path()).unwrap();
        let files: Vec<&str> = m.outputs.iter().map(|o| o.file.as_str()).collect();
        assert_eq!(files, ["capacity_summary.csv", "capacity_raw.csv", "capacity_metadata.csv"]);
    }

    #[test]
    fn trace_flag_adds_event_log() {
        let dir = tempfile::tempdir().unwrap();
        let mut c = quick_config();
        c.experiment.trace = true;
        c.experiment.duration_s = 0.5;
        let m = run_experiment("delay", &c, dir.path()).unwrap();
        assert!(m.outputs.iter().any(|o| o.file == "trace.csv"));
        let csv = std::fs::read_to_string(dir.path().join("trace.csv")).unwrap();
        assert!(csv.starts_with("time_us,node,event,frame,value\n"), "{csv}");
        assert!(csv.lines().count() > 10);
    }

    #[test]
    fn flooding_writes_headline_coverage_table() {
        let dir = tempfile::tempdir().unwrap();
        let mut c = quick_config();
        c.experiment.duration_s = 1.0;
        run_experiment("flooding", &c, dir.path()).unwrap();
        let csv = std::fs::read_to_string(dir.path().join("flooding.csv")).unwrap();
        assert!(csv.starts_with("n,drop_p,coverage_fraction\n"), "{csv}");
        // One row per (node count, drop prob) pair.
        assert_eq!(csv.lines().count(), 1 + 2);
    }

    #[test]
    fn rerun_reproduces_and_detects_tampering() {
        let dir = tempfile::tempdir().unwrap();
        let mut c = quick_config();
        c.experiment.delivery_grid_m = vec![150.0, 250.0];
        run_experiment("delivery_vs_distance", &c, dir.path()).unwrap();
        let manifest_path = dir.path().join("manifest.json");

        let rerun_dir = tempfile::tempdir().unwrap();
        rerun_from_manifest(&manifest_path, rerun_dir.path()).unwrap();
        let a = std::fs::read(dir.path().join("delivery_vs_distance.csv")).unwrap();
        let b = std::fs::read(rerun_dir.path().join("delivery_vs_distance.csv")).unwrap();
        assert_eq!(a, b, "rerun must be byte-identical");

        // Corrupt the recorded digest; the rerun must notice.
        let mut m = RunManifest::read(&manifest_path).unwrap();
        m.outputs[0].sha256 = "0".repeat(64);
        m.write(dir.path()).unwrap();
        let bad_dir = tempfile::tempdir().unwrap();
        let err = rerun_from_manifest(&manifest_path, bad_dir.path()).unwrap_err();
        assert!(format!("{err:#}").contains("digest changed"), "{err:#}");
    }

    #[test]
    fn geometry_params_track_config() {
        let c = parse_config(None).unwrap();
        let g = geometry_params(&c);
        assert!((g.capture_threshold - 10.0).abs() < 1e-12);
        assert!((g.n - 3.0).abs() < 1e-12);
        assert!((g.tx_range_m - 250.0).abs() < 1e-6);
        // Default sensing threshold sits at mean power of 2.2x the range.
        assert!((g.cs_range_factor - 2.2).abs() < 1e-6, "{}", g.cs_range_factor);
    }
}
