//! Closed-form MAC-level delivery and backoff models, validated against an
//! exact enumeration of the 802.11 dual-counter retry process.
//!
//! The retry process charges every RTS/CTS miss to the short retry counter
//! and every DATA/ACK miss to *both* counters; a packet is abandoned when
//! either counter reaches its limit. [`retry_process_oracle`] enumerates that
//! process exactly and is the authority here: the closed forms are kept
//! because they are cheap and, in two of three cases, provably identical.
//! The third, [`packet_delivery_long_rtscts`], undercounts one family of
//! retry paths and is retained for comparison only (see its docs).

use crate::propagation::LinkRatio;

/// Retransmission budget for one packet: `srl` bounds total attempts (every
/// failure increments it), `lrl` bounds DATA/ACK failures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct RetryLimits {
    pub srl: u32,
    pub lrl: u32,
}

impl RetryLimits {
    pub fn new(srl: u32, lrl: u32) -> Self {
        let limits = RetryLimits { srl, lrl };
        limits.validate();
        limits
    }

    pub fn validate(&self) {
        assert!(self.srl >= 1 && self.lrl >= 1, "retry limits must be >= 1");
    }
}

impl Default for RetryLimits {
    fn default() -> Self {
        RetryLimits { srl: 7, lrl: 4 }
    }
}

/// Outcome distribution of a single transmission attempt. `p_s` ends the
/// packet successfully, `p_sf` charges the short counter only, `p_lf`
/// charges both counters; the three sum to 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AttemptProbabilities {
    pub p_s: f64,
    pub p_sf: f64,
    pub p_lf: f64,
}

impl AttemptProbabilities {
    /// Per-attempt outcomes on a link that delivers each frame independently
    /// with probability `p`.
    ///
    /// With RTS/CTS, success needs all four frames (`p^4`); a short failure
    /// is a miss in the RTS/CTS handshake (`1 - p^2`) and a long failure a
    /// miss in DATA/ACK after the handshake succeeded (`p^2 (1 - p^2)`).
    /// Without RTS/CTS only DATA and ACK are exchanged: success is `p^2` and
    /// every failure counts against the long counter.
    pub fn new(p: LinkRatio, rts_cts: bool) -> Self {
        check_ratio(p);
        let ap = if rts_cts {
            AttemptProbabilities {
                p_s: p.powi(4),
                p_sf: 1.0 - p * p,
                p_lf: p * p * (1.0 - p * p),
            }
        } else {
            AttemptProbabilities {
                p_s: p * p,
                p_sf: 0.0,
                p_lf: 1.0 - p * p,
            }
        };
        debug_assert!((ap.p_s + ap.p_sf + ap.p_lf - 1.0).abs() < 1e-12);
        ap
    }

    /// Per-attempt outcomes for a frame short enough that every failure,
    /// DATA/ACK included, is charged to the short counter alone.
    pub fn short_frame_rtscts(p: LinkRatio) -> Self {
        check_ratio(p);
        AttemptProbabilities {
            p_s: p.powi(4),
            p_sf: 1.0 - p.powi(4),
            p_lf: 0.0,
        }
    }

    /// Per-attempt failure probability.
    pub fn p_f(&self) -> f64 {
        self.p_sf + self.p_lf
    }
}

/// See [`AttemptProbabilities::new`].
pub fn attempt_probs(p: LinkRatio, rts_cts: bool) -> AttemptProbabilities {
    AttemptProbabilities::new(p, rts_cts)
}

/// Delivery probability for a short frame with RTS/CTS: success within `srl`
/// attempts, each succeeding with probability `p^4`. Matches the enumeration
/// exactly because only one counter is in play.
pub fn packet_delivery_short_rtscts(p: LinkRatio, srl: u32) -> f64 {
    check_ratio(p);
    1.0 - (1.0 - p.powi(4)).powi(srl as i32)
}

/// Delivery probability without RTS/CTS: success within `lrl` attempts, each
/// succeeding with probability `p^2`.
pub fn packet_delivery_no_rts(p: LinkRatio, lrl: u32) -> f64 {
    check_ratio(p);
    1.0 - (1.0 - p * p).powi(lrl as i32)
}

/// Closed-form delivery probability for a long frame with RTS/CTS and limits
/// (7, 4), written as a sum over the attempt on which success occurs.
///
/// Retained for comparison only: its final term misses the retry paths with
/// exactly six failures of which two are long (15 orderings exist, the form
/// counts 9), so it falls short of [`retry_process_oracle`] by up to
/// `7.17e-3` (at `p = 0.63`). The enumeration is authoritative and is what
/// every downstream consumer uses.
pub fn packet_delivery_long_rtscts(p: LinkRatio, limits: RetryLimits) -> f64 {
    check_ratio(p);
    assert!(
        limits == RetryLimits { srl: 7, lrl: 4 },
        "the closed form is specific to limits (7, 4); use retry_process_oracle for {limits:?}"
    );
    let ap = AttemptProbabilities::new(p, true);
    let (s, sf, lf) = (ap.p_s, ap.p_sf, ap.p_lf);
    let f = ap.p_f();
    let first_four = 1.0 + f + f * f + f * f * f;
    let fifth = f.powi(4) - lf.powi(4);
    let sixth = 4.0 * sf * sf * lf.powi(3) + (f.powi(4) - lf.powi(4) - 4.0 * sf * lf.powi(3)) * f;
    let seventh = 16.0 * sf.powi(3) * lf.powi(3) + (4.0 * sf.powi(3) * lf + sf.powi(4)) * f * f;
    s * (first_four + fifth + sixth + seventh)
}

/// Exact delivery probability of the dual-counter retry process.
///
/// State `(s, l)` holds the current counter values; the packet is dropped
/// once `s >= srl` or `l >= lrl`, otherwise the next attempt succeeds with
/// `p_s`, moves to `(s+1, l)` with `p_sf`, or to `(s+1, l+1)` with `p_lf`.
/// Evaluated by dynamic programming over the (srl x lrl) state grid, which
/// is a closed form of the full outcome tree rather than an approximation.
pub fn retry_process_oracle(ap: AttemptProbabilities, limits: RetryLimits) -> f64 {
    limits.validate();
    assert!(
        limits.srl <= 16 && limits.lrl <= 16,
        "enumeration bound is 16, got {limits:?}"
    );
    let (srl, lrl) = (limits.srl as usize, limits.lrl as usize);
    // deliver[s][l], with one guard row/column of zeros for the drop states.
    let mut deliver = vec![vec![0.0f64; lrl + 1]; srl + 1];
    for s in (0..srl).rev() {
        for l in (0..lrl).rev() {
            deliver[s][l] =
                ap.p_s + ap.p_sf * deliver[s + 1][l] + ap.p_lf * deliver[s + 1][l + 1];
        }
    }
    deliver[0][0]
}

/// Drop probability of the same process; complements [`retry_process_oracle`].
pub fn retry_drop_probability(ap: AttemptProbabilities, limits: RetryLimits) -> f64 {
    1.0 - retry_process_oracle(ap, limits)
}

/// Contention-window ladder bounds in slots. Both bounds are `2^k - 1` so
/// the ladder is exactly the doubling sequence cw_min, 2(cw_min+1)-1, ...
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct BackoffParams {
    pub cw_min_slots: u32,
    pub cw_max_slots: u32,
}

impl BackoffParams {
    pub fn new(cw_min_slots: u32, cw_max_slots: u32) -> Self {
        let bp = BackoffParams { cw_min_slots, cw_max_slots };
        bp.validate();
        bp
    }

    pub fn validate(&self) {
        assert!(
            self.cw_min_slots <= self.cw_max_slots,
            "cw_min must not exceed cw_max"
        );
        for (name, v) in [("cw_min", self.cw_min_slots), ("cw_max", self.cw_max_slots)] {
            assert!(
                (v + 1).is_power_of_two() && v >= 1,
                "{name} must be one below a power of two, got {v}"
            );
        }
    }

    /// The doubling ladder cw_min, ..., cw_max (inclusive).
    pub fn ladder(&self) -> Vec<u32> {
        let mut rungs = Vec::new();
        let mut cw = self.cw_min_slots;
        loop {
            rungs.push(cw);
            if cw >= self.cw_max_slots {
                return rungs;
            }
            cw = (cw + 1) * 2 - 1;
        }
    }
}

impl Default for BackoffParams {
    fn default() -> Self {
        BackoffParams { cw_min_slots: 31, cw_max_slots: 1023 }
    }
}

/// Expected backoff draw, in slots, for a station whose attempts succeed
/// with probability `p^2` (DATA and ACK both arriving), under the doubling
/// ladder: the window resets to `cw_min` on success and doubles on failure,
/// capping at `cw_max`.
///
/// Written in the sum-plus-remainder form `(p^2/2) * sum CW_k q^k +
/// (cw_max/2) * (1 - p^2 * sum q^k)` with `q = 1 - p^2`; the remainder
/// factor telescopes to `q^K`, making this the mean of the uniform draw
/// under the stationary distribution of the ladder chain — which
/// [`backoff_markov_oracle`] computes independently.
pub fn expected_backoff_slots(p: LinkRatio, bp: BackoffParams) -> f64 {
    check_ratio(p);
    bp.validate();
    let ladder = bp.ladder();
    let stages = ladder.len() - 1; // rungs strictly below the cap
    let p2 = p * p;
    let q = 1.0 - p2;
    let mut sum = 0.0;
    let mut qk = 1.0;
    let mut qsum = 0.0;
    for &cw in &ladder[..stages] {
        sum += cw as f64 * qk;
        qsum += qk;
        qk *= q;
    }
    (p2 / 2.0) * sum + (bp.cw_max_slots as f64 / 2.0) * (1.0 - p2 * qsum)
}

/// Mean backoff draw from the stationary distribution of the ladder chain,
/// computed by power iteration over the explicit transition matrix (success
/// with probability `p^2` returns to the lowest rung, failure climbs one,
/// the top rung absorbs further failures).
///
/// An independent route to the same quantity as [`expected_backoff_slots`];
/// the two agree to floating-point precision and both are exercised so a
/// regression in either is caught by the other.
pub fn backoff_markov_oracle(p: LinkRatio, bp: BackoffParams) -> f64 {
    check_ratio(p);
    bp.validate();
    let ladder = bp.ladder();
    let n = ladder.len();
    let p2 = p * p;
    let q = 1.0 - p2;
    let mut pi = vec![1.0 / n as f64; n];
    for _ in 0..4096 {
        let mut next = vec![0.0; n];
        next[0] += p2; // success from anywhere: total mass p2 lands on rung 0
        for k in 0..n {
            next[(k + 1).min(n - 1)] += q * pi[k];
        }
        let diff: f64 = pi.iter().zip(&next).map(|(a, b)| (a - b).abs()).sum();
        pi = next;
        if diff < 1e-16 {
            break;
        }
    }
    pi.iter()
        .zip(&ladder)
        .map(|(mass, &cw)| mass * cw as f64 / 2.0)
        .sum()
}

/// Expected number of packets sent before one exhausts its retries, at which
/// point an upper layer reacting to MAC drops (e.g. by tearing down a route)
/// would be triggered.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RouteErrorExpectation {
    /// One drop every this many packets on average.
    Every(f64),
    /// Delivery is certain; retries never exhaust.
    Never,
}

impl RouteErrorExpectation {
    /// Numeric view; `Never` maps to infinity.
    pub fn as_packets(&self) -> f64 {
        match self {
            RouteErrorExpectation::Every(n) => *n,
            RouteErrorExpectation::Never => f64::INFINITY,
        }
    }
}

/// Reciprocal of the per-packet drop probability under the retry process.
pub fn expected_packets_per_route_error(
    p: LinkRatio,
    limits: RetryLimits,
    rts_cts: bool,
) -> RouteErrorExpectation {
    check_ratio(p);
    let drop = retry_drop_probability(AttemptProbabilities::new(p, rts_cts), limits);
    if drop <= 0.0 {
        RouteErrorExpectation::Never
    } else {
        RouteErrorExpectation::Every(1.0 / drop)
    }
}

/// The link ratio `p*` at which retry-limited delivery with RTS/CTS crosses
/// the raw link delivery ratio: below it the MAC delivers a *smaller*
/// fraction than a single unacknowledged transmission would, above it the
/// retries win. Located by bisection on the enumeration.
pub fn rts_delivery_crossover(limits: RetryLimits) -> f64 {
    let gap = |p: f64| retry_process_oracle(AttemptProbabilities::new(p, true), limits) - p;
    // The gap is negative for small p and positive approaching 1 (it is 0 at
    // both endpoints); scan for the sign change, then bisect.
    let mut lo = 0.01;
    let mut hi = 0.99;
    let mut x = lo;
    while x < hi {
        if gap(x) > 0.0 {
            hi = x;
            break;
        }
        lo = x;
        x += 0.01;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if gap(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn check_ratio(p: f64) {
    assert!(
        (0.0..=1.0).contains(&p),
        "link delivery ratio must be in [0, 1], got {p}"
    );
}
