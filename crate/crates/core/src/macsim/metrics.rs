//! Run output: per-leg counters, delays, backoff statistics, flood coverage.

use super::config::Ns;

/// Counters for one hop of one connection. `offered` splits into packets
/// that entered the queue and drop-tail losses; enqueued packets leave the
/// system as acknowledged, retry-exhausted, or still pending at run end.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LegMetrics {
    pub offered: u64,
    pub enqueued: u64,
    pub queue_dropped: u64,
    pub acked: u64,
    pub retry_dropped: u64,
    pub pending_at_end: u64,
    pub payload_bits_acked: u64,
    /// Enqueue-to-ACK time of each acknowledged packet, microseconds,
    /// aligned with `ack_times_us`.
    pub delays_us: Vec<f64>,
    /// Absolute ACK times, microseconds, for warm-up filtering.
    pub ack_times_us: Vec<f64>,
    /// `attempts_histogram[k]` counts packets resolved (either way) after
    /// exactly `k + 1` transmission attempts.
    pub attempts_histogram: Vec<u64>,
}

impl LegMetrics {
    pub(crate) fn record_attempts(&mut self, attempts: u32) {
        assert!(attempts >= 1, "a resolved packet was transmitted at least once");
        let idx = attempts as usize - 1;
        if self.attempts_histogram.len() <= idx {
            self.attempts_histogram.resize(idx + 1, 0);
        }
        self.attempts_histogram[idx] += 1;
    }

    /// Packets with a final verdict from the retry process.
    pub fn resolved(&self) -> u64 {
        self.acked + self.retry_dropped
    }

    /// Fraction of retry-resolved packets that were delivered: the simulated
    /// counterpart of the analytic retry-process delivery probability.
    pub fn delivery_fraction(&self) -> Option<f64> {
        let n = self.resolved();
        (n > 0).then(|| self.acked as f64 / n as f64)
    }
}

/// Per-connection view: one [`LegMetrics`] per hop plus end-to-end counters
/// measured at the final destination (first decode of each packet).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConnectionMetrics {
    pub legs: Vec<LegMetrics>,
    pub payload_bytes: u32,
    pub end_to_end_delivered: u64,
    /// Source-enqueue to destination-decode, microseconds, aligned with
    /// `end_to_end_times_us`.
    pub end_to_end_delays_us: Vec<f64>,
    pub end_to_end_times_us: Vec<f64>,
}

impl ConnectionMetrics {
    /// End-to-end payload throughput over `[warmup, duration]`.
    pub fn throughput_bps(&self, duration_s: f64, warmup_s: f64) -> f64 {
        let window = duration_s - warmup_s;
        assert!(window > 0.0, "warm-up swallows the whole run");
        let bits: u64 = self
            .end_to_end_times_us
            .iter()
            .filter(|&&t| t >= warmup_s * 1e6)
            .count() as u64
            * 8
            * self.payload_bytes as u64;
        bits as f64 / window
    }

    /// Sender-confirmed payload throughput on the first hop over
    /// `[warmup, duration]`; for a single-hop connection this is the MAC
    /// capacity measure.
    pub fn acked_throughput_bps(&self, duration_s: f64, warmup_s: f64) -> f64 {
        let window = duration_s - warmup_s;
        assert!(window > 0.0, "warm-up swallows the whole run");
        let bits: u64 = self.legs[0]
            .ack_times_us
            .iter()
            .filter(|&&t| t >= warmup_s * 1e6)
            .count() as u64
            * 8
            * self.payload_bytes as u64;
        bits as f64 / window
    }
}

/// Backoff bookkeeping per node.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct NodeMetrics {
    pub backoff_draws: u64,
    pub backoff_slots_drawn: u64,
}

/// Flood outcome: which nodes the broadcast reached.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FloodMetrics {
    pub reached: Vec<bool>,
    pub rebroadcasts: u64,
}

impl FloodMetrics {
    /// Fraction of all nodes (origin included) the flood reached.
    pub fn coverage(&self) -> f64 {
        if self.reached.is_empty() {
            return 0.0;
        }
        self.reached.iter().filter(|&&r| r).count() as f64 / self.reached.len() as f64
    }
}

/// Everything a run reports.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunMetrics {
    pub duration_s: f64,
    pub connections: Vec<ConnectionMetrics>,
    pub nodes: Vec<NodeMetrics>,
    pub flood: Option<FloodMetrics>,
    /// Total time at least one transmission was in flight anywhere.
    pub channel_busy_s: f64,
}

impl RunMetrics {
    pub fn mean_backoff_slots(&self) -> Option<f64> {
        let draws: u64 = self.nodes.iter().map(|n| n.backoff_draws).sum();
        let slots: u64 = self.nodes.iter().map(|n| n.backoff_slots_drawn).sum();
        (draws > 0).then(|| slots as f64 / draws as f64)
    }

    /// Checks packet conservation on every leg; call in tests after any run.
    pub fn assert_conserved(&self) {
        for (ci, conn) in self.connections.iter().enumerate() {
            for (li, leg) in conn.legs.iter().enumerate() {
                assert_eq!(
                    leg.offered,
                    leg.enqueued + leg.queue_dropped,
                    "offered split violated on connection {ci} leg {li}"
                );
                assert_eq!(
                    leg.enqueued,
                    leg.acked + leg.retry_dropped + leg.pending_at_end,
                    "enqueued split violated on connection {ci} leg {li}"
                );
                assert_eq!(leg.acked, leg.delays_us.len() as u64);
                assert_eq!(leg.acked, leg.ack_times_us.len() as u64);
            }
        }
    }
}

/// Summary statistics of delivered-packet delays.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DelayStats {
    pub n: usize,
    pub mean_us: f64,
    pub p50_us: f64,
    pub p90_us: f64,
    pub max_us: f64,
}

/// Delay statistics of the first leg of the first connection; `None` when
/// nothing was delivered.
pub fn one_hop_delay(metrics: &RunMetrics) -> Option<DelayStats> {
    let delays = &metrics.connections.first()?.legs.first()?.delays_us;
    if delays.is_empty() {
        return None;
    }
    let mut sorted = delays.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    // Nearest-rank percentile: smallest value with at least q of the mass.
    let pct = |q: f64| sorted[(q * sorted.len() as f64).ceil() as usize - 1];
    Some(DelayStats {
        n: sorted.len(),
        mean_us: sorted.iter().sum::<f64>() / sorted.len() as f64,
        p50_us: pct(0.5),
        p90_us: pct(0.9),
        max_us: *sorted.last().unwrap(),
    })
}

pub(crate) fn ns_to_us(t: Ns) -> f64 {
    t as f64 / 1e3
}
