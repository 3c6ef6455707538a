//! Simulator configuration: DCF timing, rates, thresholds, and frame sizes.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analytic::{BackoffParams, RetryLimits};
use crate::propagation::PropagationParams;

/// Simulation clock tick. All times are nanoseconds from run start.
pub type Ns = u64;

pub const US: Ns = 1_000;

/// Frame sizes in bits. Control frames (`rts`, `cts`, `ack`) are totals
/// including their physical-layer header and are sent at the control rate;
/// a DATA frame is `phy_header + mac_header + 8 * payload` bits at the data
/// rate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrameBits {
    pub phy_header: u32,
    pub mac_header: u32,
    pub rts: u32,
    pub cts: u32,
    pub ack: u32,
}

impl Default for FrameBits {
    fn default() -> Self {
        FrameBits { phy_header: 128, mac_header: 272, rts: 288, cts: 240, ack: 240 }
    }
}

/// Full MAC/PHY configuration of a run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DcfConfig {
    pub retry: RetryLimits,
    pub backoff: BackoffParams,
    /// When false the contention window is pinned at `cw_min` and never
    /// doubled.
    pub backoff_enabled: bool,
    /// When true every unicast DATA frame is preceded by an RTS/CTS
    /// handshake; broadcasts never use it.
    pub rts_cts_enabled: bool,
    pub slot_us: u64,
    pub sifs_us: u64,
    pub difs_us: u64,
    pub data_rate_bps: u64,
    pub control_rate_bps: u64,
    pub frame_bits: FrameBits,
    /// Received power at or above this makes the medium busy for a node.
    pub cs_threshold_dbm: f64,
    /// When false, any overlap with a sensible (above `cs_threshold_dbm`)
    /// transmission destroys a reception outright.
    pub capture_enabled: bool,
    /// Minimum dB advantage of the wanted frame over the sum of all
    /// overlapping transmissions for it to survive.
    pub capture_threshold_db: f64,
    /// Per-node FIFO depth; arrivals beyond it are drop-tail losses.
    pub queue_capacity: usize,
    /// Leading fraction of simulated time excluded from throughput figures.
    pub warmup_fraction: f64,
}

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("SIFS ({sifs_us} us) must be shorter than DIFS ({difs_us} us)")]
    SifsNotBelowDifs { sifs_us: u64, difs_us: u64 },
    #[error("bit rates must be positive")]
    NonPositiveRate,
    #[error("slot time must be positive")]
    ZeroSlot,
    #[error(
        "carrier-sense threshold {cs_dbm} dBm is above receiver sensitivity {th_dbm} dBm; \
         decodable frames must always be sensed"
    )]
    CarrierSenseAboveSensitivity { cs_dbm: f64, th_dbm: f64 },
    #[error("queue capacity must be at least 1")]
    ZeroQueue,
    #[error("warm-up fraction must be in [0, 1), got {0}")]
    BadWarmup(f64),
}

impl DcfConfig {
    /// Defaults tuned to the propagation model: the carrier-sense threshold
    /// is the mean received power at 2.2x the ideal range, so the sensing
    /// radius is 2.2x the transmission range under mean path loss.
    pub fn default_for(chan: &PropagationParams) -> Self {
        DcfConfig {
            retry: RetryLimits::default(),
            backoff: BackoffParams::default(),
            backoff_enabled: true,
            rts_cts_enabled: false,
            slot_us: 20,
            sifs_us: 10,
            difs_us: 50,
            data_rate_bps: 2_000_000,
            control_rate_bps: 1_000_000,
            frame_bits: FrameBits::default(),
            cs_threshold_dbm: chan.mean_received_power_dbm(2.2 * chan.ideal_range_m()),
            capture_enabled: true,
            capture_threshold_db: 10.0,
            queue_capacity: 50,
            warmup_fraction: 0.1,
        }
    }

    pub fn validate(&self, chan: &PropagationParams) -> Result<(), ConfigError> {
        self.retry.validate();
        self.backoff.validate();
        if self.sifs_us >= self.difs_us {
            return Err(ConfigError::SifsNotBelowDifs { sifs_us: self.sifs_us, difs_us: self.difs_us });
        }
        if self.data_rate_bps == 0 || self.control_rate_bps == 0 {
            return Err(ConfigError::NonPositiveRate);
        }
        if self.slot_us == 0 {
            return Err(ConfigError::ZeroSlot);
        }
        if self.cs_threshold_dbm > chan.p_th_dbm {
            return Err(ConfigError::CarrierSenseAboveSensitivity {
                cs_dbm: self.cs_threshold_dbm,
                th_dbm: chan.p_th_dbm,
            });
        }
        if self.queue_capacity == 0 {
            return Err(ConfigError::ZeroQueue);
        }
        if !(0.0..1.0).contains(&self.warmup_fraction) {
            return Err(ConfigError::BadWarmup(self.warmup_fraction));
        }
        Ok(())
    }

    pub fn slot(&self) -> Ns {
        self.slot_us * US
    }
    pub fn sifs(&self) -> Ns {
        self.sifs_us * US
    }
    pub fn difs(&self) -> Ns {
        self.difs_us * US
    }

    pub fn data_bits(&self, payload_bytes: u32) -> u64 {
        (self.frame_bits.phy_header + self.frame_bits.mac_header) as u64
            + 8 * payload_bytes as u64
    }

    pub fn data_duration(&self, payload_bytes: u32) -> Ns {
        bits_to_ns(self.data_bits(payload_bytes), self.data_rate_bps)
    }
    pub fn rts_duration(&self) -> Ns {
        bits_to_ns(self.frame_bits.rts as u64, self.control_rate_bps)
    }
    pub fn cts_duration(&self) -> Ns {
        bits_to_ns(self.frame_bits.cts as u64, self.control_rate_bps)
    }
    pub fn ack_duration(&self) -> Ns {
        bits_to_ns(self.frame_bits.ack as u64, self.control_rate_bps)
    }

    /// How long a sender waits after its RTS ends before declaring the CTS
    /// missing: the SIFS turnaround, the CTS airtime, and one slot of grace.
    pub fn cts_timeout(&self) -> Ns {
        self.sifs() + self.cts_duration() + self.slot()
    }
    /// Same structure for the ACK after a DATA frame.
    pub fn ack_timeout(&self) -> Ns {
        self.sifs() + self.ack_duration() + self.slot()
    }

    /// Linear capture requirement (wanted power over interference).
    pub fn capture_ratio(&self) -> f64 {
        10f64.powf(self.capture_threshold_db / 10.0)
    }
}

impl Default for DcfConfig {
    fn default() -> Self {
        DcfConfig::default_for(&PropagationParams::default())
    }
}

fn bits_to_ns(bits: u64, rate_bps: u64) -> Ns {
    // Exact for the rates used here (bit counts * 1e9 stay far below u64::MAX).
    bits * 1_000_000_000 / rate_bps
}
