//! Collision geometry for a sender-receiver pair and a single interferer
//! under an ideal power law (no fading, no noise).
//!
//! A frame survives an overlapping transmission when the sender-to-receiver
//! power exceeds the interferer-to-receiver power by the capture threshold;
//! with power decaying as `d^-n` that condition is a pure distance ratio.
//! Two defense mechanisms try to silence the interferer before it harms the
//! frame: collision avoidance (the CTS only reaches interferers within
//! reception range of the receiver) and carrier sense (the interferer hears
//! the *sender* if it is within the sensing radius). Everything here is a
//! comparison of those radii.

use serde::{Deserialize, Serialize};

use crate::table::Table;

/// Parameters of the capture analysis. Powers are relative, so only the
/// capture ratio, path-loss exponent, and the two ranges appear.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CaptureParams {
    /// Minimum ratio of wanted to interfering power, linear scale.
    pub capture_threshold: f64,
    /// Path-loss exponent for this analysis.
    pub n: f64,
    /// Nominal reception range in meters (how far a CTS reaches).
    pub tx_range_m: f64,
    /// Carrier-sense radius as a multiple of `tx_range_m`.
    pub cs_range_factor: f64,
}

impl CaptureParams {
    pub fn validate(&self) {
        assert!(self.capture_threshold >= 1.0, "capture threshold below 1 is meaningless");
        assert!(self.n > 0.0, "path-loss exponent must be positive");
        assert!(self.tx_range_m > 0.0, "tx range must be positive");
        assert!(self.cs_range_factor >= 1.0, "carrier-sense radius below tx range");
    }

    /// The carrier-sense radius in meters.
    pub fn cs_range_m(&self) -> f64 {
        self.cs_range_factor * self.tx_range_m
    }
}

impl Default for CaptureParams {
    /// Capture ratio 10 (10 dB), exponent 4, 250 m reception range, sensing
    /// out to 2.2x that.
    fn default() -> Self {
        CaptureParams {
            capture_threshold: 10.0,
            n: 4.0,
            tx_range_m: 250.0,
            cs_range_factor: 2.2,
        }
    }
}

/// Where the single interferer stands relative to the sender.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CsmaCase {
    /// Interferer-to-sender distance taken equal to the interferer-to-
    /// receiver distance (interferer roughly abreast of the receiver).
    Average,
    /// Interferer directly behind the receiver as seen from the sender, so
    /// its distance to the sender is `d_sr + d_ir`.
    Worst,
}

/// Interferer-to-receiver distance below which an overlapping transmission
/// destroys the frame: `d_ir = d_sr * capture^(1/n)`. Beyond it the wanted
/// signal is strong enough to be captured.
pub fn capture_line(params: CaptureParams, d_sr_m: f64) -> f64 {
    params.validate();
    assert!(d_sr_m > 0.0, "sender-receiver distance must be positive");
    d_sr_m * params.capture_threshold.powf(1.0 / params.n)
}

/// Whether collision avoidance silences an interferer at `d_ir_m` from the
/// receiver: it must be able to decode the CTS, i.e. be within reception
/// range of the receiver.
pub fn ca_blocks(params: CaptureParams, d_ir_m: f64) -> bool {
    params.validate();
    assert!(d_ir_m >= 0.0);
    d_ir_m <= params.tx_range_m
}

/// Whether carrier sense silences the interferer: it must hear the *sender*,
/// whose distance follows from the geometry case.
pub fn csma_blocks(params: CaptureParams, d_sr_m: f64, d_ir_m: f64, case: CsmaCase) -> bool {
    params.validate();
    assert!(d_sr_m >= 0.0 && d_ir_m >= 0.0);
    let d_is = match case {
        CsmaCase::Average => d_ir_m,
        CsmaCase::Worst => d_sr_m + d_ir_m,
    };
    d_is <= params.cs_range_m()
}

/// One row per sender-receiver distance: the capture line plus the largest
/// interferer-to-receiver distance each mechanism can silence. The worst-
/// case carrier-sense bound shrinks with `d_sr` and is clamped at zero once
/// the sender itself is beyond sensing range.
pub fn region_table(params: CaptureParams, d_sr_grid: &[f64]) -> Table {
    params.validate();
    assert!(!d_sr_grid.is_empty(), "grid must be non-empty");
    let mut table = Table::new([
        "d_sr",
        "capture_line",
        "ca_bound",
        "csma_avg_bound",
        "csma_worst_bound",
    ]);
    for &d_sr in d_sr_grid {
        assert!(d_sr > 0.0, "grid distances must be positive");
        table.push([
            d_sr,
            capture_line(params, d_sr),
            params.tx_range_m,
            params.cs_range_m(),
            (params.cs_range_m() - d_sr).max(0.0),
        ]);
    }
    table
}
