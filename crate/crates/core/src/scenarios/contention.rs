//! Contention experiments on one- and two-connection topologies: saturation
//! capacity, one-hop service delay, and the bandwidth-sharing (unfairness)
//! study. Replications fan out in parallel; per-run seeds are derived from
//! the base seed and the grid position, so results never depend on thread
//! scheduling or on how many replications run.

use rayon::prelude::*;

use super::{
    contending_pair, single_link, ChannelModel, ExperimentResult, Scenario, Series, Traffic,
};
use crate::macsim::{one_hop_delay, run, saturation_capacity, DcfConfig};
use crate::seeds;

/// Parameters of the bandwidth-sharing experiment. Connection 1 spans
/// `fixed_d_m`; connection 2's span sweeps `varied_d_m`. The sources sit
/// `source_gap_m` apart so they always hear each other; each receiver points
/// away from the rival connection.
#[derive(Debug, Clone)]
pub struct UnfairnessOptions {
    pub fixed_d_m: f64,
    pub varied_d_m: Vec<f64>,
    pub payload_bytes: u32,
    pub rts_cts: bool,
    pub backoff_enabled: bool,
    pub source_gap_m: f64,
    pub duration_s: f64,
    pub replications: u32,
    pub base_seed: u64,
}

impl Default for UnfairnessOptions {
    fn default() -> Self {
        UnfairnessOptions {
            fixed_d_m: 150.0,
            varied_d_m: vec![150.0, 180.0, 200.0, 220.0],
            payload_bytes: 500,
            rts_cts: false,
            backoff_enabled: true,
            source_gap_m: 100.0,
            duration_s: 60.0,
            replications: 10,
            base_seed: 1,
        }
    }
}

/// How two saturated connections share the medium as one link weakens.
///
/// For every varied distance and replication, three runs execute: both
/// connections contending, then each connection alone with the same traffic.
/// The normalized share of a connection is packets delivered under
/// contention divided by packets delivered solo, clamped to [0, 1] (solo is
/// an upper bound only in expectation; clamps are counted in the metadata).
pub fn exp_unfairness(
    channel: ChannelModel,
    base: &DcfConfig,
    opts: &UnfairnessOptions,
) -> ExperimentResult {
    let mut cfg = *base;
    cfg.rts_cts_enabled = opts.rts_cts;
    cfg.backoff_enabled = opts.backoff_enabled;

    let jobs: Vec<(usize, u32)> = (0..opts.varied_d_m.len())
        .flat_map(|di| (0..opts.replications).map(move |r| (di, r)))
        .collect();
    let per_run: Vec<(usize, [f64; 4], bool)> = jobs
        .into_par_iter()
        .map(|(di, r)| {
            let d2 = opts.varied_d_m[di];
            let mk = |which: u64| seeds::derive(opts.base_seed, &[which, di as u64, r as u64]);
            let contended = contending_pair(
                opts.fixed_d_m,
                d2,
                opts.source_gap_m,
                opts.payload_bytes,
                channel,
                opts.duration_s,
                mk(0),
            );
            let both = run(&contended, &cfg, mk(0)).expect("constructed scenario");
            let solo = |d: f64, which: u64| {
                let s = single_link(
                    d,
                    opts.payload_bytes,
                    Traffic::Saturated,
                    channel,
                    opts.duration_s,
                    mk(which),
                );
                run(&s, &cfg, mk(which)).expect("constructed scenario").connections[0]
                    .end_to_end_delivered
            };
            let alone = [solo(opts.fixed_d_m, 1), solo(d2, 2)];
            let delivered =
                [both.connections[0].end_to_end_delivered, both.connections[1].end_to_end_delivered];
            let mut clamped = false;
            let share = |i: usize| -> f64 {
                if alone[i] == 0 {
                    return 0.0;
                }
                let s = delivered[i] as f64 / alone[i] as f64;
                s.min(1.0)
            };
            let (s0, s1) = (share(0), share(1));
            if delivered[0] > alone[0] || delivered[1] > alone[1] {
                clamped = true;
            }
            let bits = 8.0 * opts.payload_bytes as f64;
            let thr = |i: usize| delivered[i] as f64 * bits / opts.duration_s;
            (di, [s0, s1, thr(0), thr(1)], clamped)
        })
        .collect();

    let measures = ["share_fixed", "share_varied", "throughput_fixed_bps", "throughput_varied_bps"];
    let mut series = Vec::new();
    for (di, &d2) in opts.varied_d_m.iter().enumerate() {
        for (mi, measure) in measures.iter().enumerate() {
            let replicates: Vec<f64> = per_run
                .iter()
                .filter(|(j, _, _)| *j == di)
                .map(|(_, vals, _)| vals[mi])
                .collect();
            series.push(Series { measure: measure.to_string(), x: d2, replicates });
        }
    }
    let clamps = per_run.iter().filter(|(_, _, c)| *c).count();
    let mut metadata = vec![
        ("fixed_d_m".to_string(), opts.fixed_d_m.to_string()),
        ("payload_bytes".to_string(), opts.payload_bytes.to_string()),
        ("rts_cts".to_string(), opts.rts_cts.to_string()),
        ("backoff_enabled".to_string(), opts.backoff_enabled.to_string()),
        ("duration_s".to_string(), opts.duration_s.to_string()),
        ("replications".to_string(), opts.replications.to_string()),
        ("shares_clamped".to_string(), clamps.to_string()),
    ];
    for &d2 in &opts.varied_d_m {
        let s = contending_pair(
            opts.fixed_d_m,
            d2,
            opts.source_gap_m,
            opts.payload_bytes,
            channel,
            opts.duration_s,
            0,
        );
        let coords: Vec<String> =
            s.nodes.iter().map(|n| format!("{}:({},{})", n.id, n.x_m, n.y_m)).collect();
        metadata.push((format!("geometry_d{d2}"), coords.join(" ")));
    }
    ExperimentResult { name: "unfairness".to_string(), series, metadata }
}

/// Saturation capacity of a single link across distances, with and without
/// the RTS/CTS handshake. Measures: `capacity_no_rts_bps`, `capacity_rts_bps`.
pub fn exp_capacity(
    grid: &[f64],
    payload_bytes: u32,
    channel: ChannelModel,
    base: &DcfConfig,
    duration_s: f64,
    replications: u32,
    base_seed: u64,
) -> ExperimentResult {
    let jobs: Vec<(usize, usize, u32)> = (0..2)
        .flat_map(|mode| {
            (0..grid.len()).flat_map(move |di| (0..replications).map(move |r| (mode, di, r)))
        })
        .collect();
    let per_run: Vec<(usize, usize, f64)> = jobs
        .into_par_iter()
        .map(|(mode, di, r)| {
            let mut cfg = *base;
            cfg.rts_cts_enabled = mode == 1;
            let seed = seeds::derive(base_seed, &[mode as u64, di as u64, r as u64]);
            let bps =
                saturation_capacity(grid[di], &cfg, channel, payload_bytes, duration_s, seed);
            (mode, di, bps)
        })
        .collect();
    let mut series = Vec::new();
    for (mode, measure) in [(0, "capacity_no_rts_bps"), (1, "capacity_rts_bps")] {
        for (di, &d) in grid.iter().enumerate() {
            let replicates: Vec<f64> = per_run
                .iter()
                .filter(|(m, j, _)| *m == mode && *j == di)
                .map(|(_, _, v)| *v)
                .collect();
            series.push(Series { measure: measure.to_string(), x: d, replicates });
        }
    }
    ExperimentResult {
        name: "capacity".to_string(),
        series,
        metadata: vec![
            ("payload_bytes".to_string(), payload_bytes.to_string()),
            ("duration_s".to_string(), duration_s.to_string()),
            ("replications".to_string(), replications.to_string()),
        ],
    }
}

/// Mean MAC service delay (enqueue to ACK) of delivered packets on a single
/// saturated link across distances. The source hands the MAC one packet at
/// a time, so the measured delay excludes queueing. Measure: `mean_delay_us`.
pub fn exp_delay(
    grid: &[f64],
    payload_bytes: u32,
    channel: ChannelModel,
    base: &DcfConfig,
    duration_s: f64,
    replications: u32,
    base_seed: u64,
) -> ExperimentResult {
    let jobs: Vec<(usize, u32)> = (0..grid.len())
        .flat_map(|di| (0..replications).map(move |r| (di, r)))
        .collect();
    let per_run: Vec<(usize, Option<f64>)> = jobs
        .into_par_iter()
        .map(|(di, r)| {
            let seed = seeds::derive(base_seed, &[di as u64, r as u64]);
            let scenario: Scenario = single_link(
                grid[di],
                payload_bytes,
                Traffic::Saturated,
                channel,
                duration_s,
                seed,
            );
            let metrics = run(&scenario, base, seed).expect("constructed scenario");
            (di, one_hop_delay(&metrics).map(|s| s.mean_us))
        })
        .collect();
    let series = grid
        .iter()
        .enumerate()
        .map(|(di, &d)| Series {
            measure: "mean_delay_us".to_string(),
            x: d,
            replicates: per_run
                .iter()
                .filter(|(j, _)| *j == di)
                .filter_map(|(_, v)| *v)
                .collect(),
        })
        .collect();
    ExperimentResult {
        name: "delay".to_string(),
        series,
        metadata: vec![
            ("payload_bytes".to_string(), payload_bytes.to_string()),
            ("duration_s".to_string(), duration_s.to_string()),
            ("replications".to_string(), replications.to_string()),
        ],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::propagation::PropagationParams;

    fn channel() -> ChannelModel {
        ChannelModel::Fading(PropagationParams::default())
    }

    #[test]
    fn equal_distance_shares_are_near_parity() {
        let opts = UnfairnessOptions {
            varied_d_m: vec![150.0],
            duration_s: 20.0,
            replications: 4,
            ..Default::default()
        };
        let cfg = DcfConfig::default_for(&channel().params());
        let r = exp_unfairness(channel(), &cfg, &opts);
        let s0 = r.get("share_fixed", 150.0).mean();
        let s1 = r.get("share_varied", 150.0).mean();
        assert!(s0 > 0.0 && s1 > 0.0);
        assert!(
            (s0 - s1).abs() / s0.max(s1) < 0.10,
            "equal links should share evenly: {s0:.3} vs {s1:.3}"
        );
        for s in &r.series {
            if s.measure.starts_with("share") {
                assert!(s.replicates.iter().all(|&v| (0.0..=1.0).contains(&v)));
            }
        }
    }

    #[test]
    fn weak_link_loses_under_contention() {
        let opts = UnfairnessOptions {
            varied_d_m: vec![220.0],
            duration_s: 20.0,
            replications: 4,
            ..Default::default()
        };
        let cfg = DcfConfig::default_for(&channel().params());
        let r = exp_unfairness(channel(), &cfg, &opts);
        let strong = r.get("share_fixed", 220.0).mean();
        let weak = r.get("share_varied", 220.0).mean();
        assert!(strong > weak, "strong {strong:.3} must dominate weak {weak:.3}");
    }

    #[test]
    fn metadata_records_geometry() {
        let opts = UnfairnessOptions {
            varied_d_m: vec![180.0],
            duration_s: 5.0,
            replications: 2,
            ..Default::default()
        };
        let cfg = DcfConfig::default_for(&channel().params());
        let r = exp_unfairness(channel(), &cfg, &opts);
        let geom = r
            .metadata
            .iter()
            .find(|(k, _)| k == "geometry_d180")
            .map(|(_, v)| v.clone())
            .expect("geometry recorded");
        assert!(geom.contains("1:(-150,0)"), "geometry: {geom}");
        assert!(geom.contains("3:(280,0)"), "geometry: {geom}");
    }

    #[test]
    fn capacity_declines_with_distance() {
        let cfg = DcfConfig::default_for(&channel().params());
        let r = exp_capacity(&[100.0, 240.0], 500, channel(), &cfg, 20.0, 3, 5);
        let near = r.get("capacity_no_rts_bps", 100.0).mean();
        let far = r.get("capacity_no_rts_bps", 240.0).mean();
        assert!(near > far, "capacity must fall with distance: {near:.0} vs {far:.0}");
        // The handshake only adds overhead on a single link.
        let rts_near = r.get("capacity_rts_bps", 100.0).mean();
        assert!(near > rts_near);
    }

    #[test]
    fn delay_grows_as_the_link_degrades() {
        let cfg = DcfConfig::default_for(&channel().params());
        let r = exp_delay(&[150.0, 240.0], 500, channel(), &cfg, 20.0, 3, 7);
        let good = r.get("mean_delay_us", 150.0).mean();
        let bad = r.get("mean_delay_us", 240.0).mean();
        assert!(bad > good, "delay must grow with distance: {good:.0} vs {bad:.0}");
    }
}
