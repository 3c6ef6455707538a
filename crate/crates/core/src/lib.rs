//! Analytical models and a discrete-event simulator for single-channel
//! IEEE 802.11 DCF behavior over log-normal slow-fading links.
//!
//! The crate is organized around the pipeline a link-layer study follows:
//!
//! - [`propagation`] — distance-dependent mean path loss, per-packet
//!   log-normal shadowing samples, and the closed-form link delivery ratio.
//! - [`analytic`] — closed-form MAC models (per-attempt success, retry-limited
//!   packet delivery with and without RTS/CTS, expected backoff window) next
//!   to an exact enumeration of the dual-counter retry process that serves as
//!   the reference for all of them.
//! - [`geometry`] — capture-threshold collision geometry for one interferer:
//!   which interferer positions collide, and which are blocked by collision
//!   avoidance (CTS range) versus carrier sense (average and worst case).
//! - [`macsim`] — the event-driven DCF simulator: basic access and RTS/CTS,
//!   unicast retries, unacknowledged broadcast, capture resolution, carrier
//!   sense, NAV, and a backoff-disable switch.
//! - [`scenarios`] — pre-built experiment harnesses (delivery curves,
//!   capacity, unfairness, hop order, flooding coverage) that fan out seeded
//!   replications and emit tidy tables.
//!
//! Everything is deterministic for a fixed seed: samplers own their own
//! [`rand_chacha::ChaCha8Rng`] stream, and replication seeds are derived with
//! the counter scheme in [`seeds`] so results never depend on execution order.

pub mod analytic;
pub mod geometry;
pub mod macsim;
pub mod math;
pub mod propagation;
pub mod scenarios;
pub mod seeds;
pub mod table;

pub use analytic::{AttemptProbabilities, BackoffParams, RetryLimits};
pub use geometry::CaptureParams;
pub use macsim::{DcfConfig, RunMetrics};
pub use propagation::PropagationParams;
pub use scenarios::{ChannelModel, Scenario};
pub use table::Table;
