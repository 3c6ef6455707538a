//! Link-level experiments: power traces, delivery ratio versus distance,
//! packet delivery curves, and the expected backoff curve. These need no
//! event simulation; they sample or evaluate the channel and retry models
//! directly.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::analytic::{
    backoff_markov_oracle, expected_backoff_slots, packet_delivery_no_rts,
    packet_delivery_short_rtscts, retry_process_oracle, AttemptProbabilities, BackoffParams,
    RetryLimits,
};
use crate::propagation::PropagationParams;
use crate::table::Table;

/// Power samples are drawn once per transmitted packet at this rate.
pub const TRACE_PACKETS_PER_S: f64 = 25.0;

/// Received power over time at a fixed distance: one independent shadowing
/// draw per packet. Columns: `time_s`, `power_dbm`, `threshold_dbm`.
pub fn exp_power_trace(
    d_m: f64,
    duration_s: f64,
    seed: u64,
    params: &PropagationParams,
) -> Table {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut t = Table::new(["time_s", "power_dbm", "threshold_dbm"]);
    let n = (duration_s * TRACE_PACKETS_PER_S).floor() as u64;
    for i in 0..n {
        let time_s = i as f64 / TRACE_PACKETS_PER_S;
        let power = params.sample_received_power_dbm(d_m, &mut rng);
        t.push_cells(vec![time_s.into(), power.into(), params.p_th_dbm.into()]);
    }
    t
}

/// Closed-form link delivery ratio against a Monte Carlo estimate at each
/// distance, with the idealized disc model (a step at the ideal range) as a
/// reference column. Columns: `d_m`, `analytic_p`, `montecarlo_p`,
/// `two_ray_p`.
pub fn exp_delivery_vs_distance(
    grid: &[f64],
    n_samples: u32,
    seed: u64,
    params: &PropagationParams,
) -> Table {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut t = Table::new(["d_m", "analytic_p", "montecarlo_p", "two_ray_p"]);
    for &d in grid {
        let analytic = params.link_delivery_ratio(d);
        let mut hits = 0u32;
        for _ in 0..n_samples {
            if params.sample_received_power_dbm(d, &mut rng) >= params.p_th_dbm {
                hits += 1;
            }
        }
        let mc = hits as f64 / n_samples as f64;
        // Disc reference: inside iff the mean power clears the threshold.
        // The 1e-9 dB slack keeps the boundary distance itself inside.
        let step =
            if params.mean_received_power_dbm(d) >= params.p_th_dbm - 1e-9 { 1.0 } else { 0.0 };
        t.push_cells(vec![d.into(), analytic.into(), mc.into(), step.into()]);
    }
    t
}

/// Packet delivery after retries as a function of the link ratio, for the
/// RTS/CTS handshake (closed form and exact enumeration) and the basic
/// access mode. Columns: `p`, `link`, `short_rtscts`, `long_rtscts_oracle`,
/// `no_rts`.
pub fn exp_packet_delivery_curves(grid: &[f64], limits: RetryLimits) -> Table {
    let mut t = Table::new(["p", "link", "short_rtscts", "long_rtscts_oracle", "no_rts"]);
    for &p in grid {
        let short = packet_delivery_short_rtscts(p, limits.srl);
        let long = retry_process_oracle(AttemptProbabilities::new(p, true), limits);
        let no_rts = packet_delivery_no_rts(p, limits.lrl);
        t.push_cells(vec![p.into(), p.into(), short.into(), long.into(), no_rts.into()]);
    }
    t
}

/// Expected backoff per packet versus link ratio, from the closed form and
/// from the stationary distribution of the window chain. Columns: `p`,
/// `expected_slots`, `markov_slots`.
pub fn exp_backoff_curve(grid: &[f64], params: BackoffParams) -> Table {
    let mut t = Table::new(["p", "expected_slots", "markov_slots"]);
    for &p in grid {
        t.push_cells(vec![
            p.into(),
            expected_backoff_slots(p, params).into(),
            backoff_markov_oracle(p, params).into(),
        ]);
    }
    t
}
