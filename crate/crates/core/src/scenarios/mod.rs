//! Scenario descriptions and pre-built experiment harnesses.
//!
//! A [`Scenario`] is the complete, validated input to one simulation run:
//! node placement, traffic, channel model, duration, and seeding. The
//! submodules wrap the simulator into the experiments the CLI exposes, each
//! returning an [`ExperimentResult`] or a plain table with a stable schema.

mod contention;
mod flooding;
mod link_level;
mod multihop;

pub use contention::{exp_capacity, exp_delay, exp_unfairness, UnfairnessOptions};
pub use flooding::exp_flooding;
pub use link_level::{
    exp_backoff_curve, exp_delivery_vs_distance, exp_packet_delivery_curves, exp_power_trace,
};
pub use multihop::{exp_hop_order, HOP_ORDER_CASES};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::propagation::PropagationParams;
use crate::table::Table;

pub type NodeId = usize;

/// A stationary node at a planar position, distances in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NodeSpec {
    pub id: NodeId,
    pub x_m: f64,
    pub y_m: f64,
}

impl NodeSpec {
    pub fn distance_to(&self, other: &NodeSpec) -> f64 {
        ((self.x_m - other.x_m).powi(2) + (self.y_m - other.y_m).powi(2)).sqrt()
    }
}

/// Offered load of one connection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Traffic {
    /// The source always has a next packet: measures saturation behavior.
    Saturated,
    /// Saturated until exactly `packets` have been offered, then silent.
    /// Used when an experiment needs a fixed sample size.
    Backlog { packets: u64 },
    /// Periodic arrivals, first at t=0.
    Cbr { packets_per_s: f64 },
}

/// A unicast flow along a static route. Intermediate nodes forward at the
/// MAC level, deduplicating on packet sequence numbers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Connection {
    /// Source, any forwarders, destination: at least two distinct nodes.
    pub route: Vec<NodeId>,
    pub payload_bytes: u32,
    pub traffic: Traffic,
}

/// How receptions are decided.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ChannelModel {
    /// Log-normal shadowing: one power draw per (transmission, receiver).
    Fading(PropagationParams),
    /// Deterministic disc propagation (no shadowing) plus an independent
    /// Bernoulli drop per (transmission, receiver) at decode time. Carrier
    /// sense and interference use the unfaded powers.
    BernoulliDrop { drop_p: f64 },
}

impl ChannelModel {
    /// The propagation constants behind the channel; the Bernoulli variant
    /// uses the default geometry with shadowing switched off.
    pub fn params(&self) -> PropagationParams {
        match self {
            ChannelModel::Fading(p) => *p,
            ChannelModel::BernoulliDrop { .. } => {
                PropagationParams::calibrated(3.0, 0.0, 1.0, -64.0, 250.0)
            }
        }
    }

    pub fn drop_p(&self) -> Option<f64> {
        match self {
            ChannelModel::Fading(_) => None,
            ChannelModel::BernoulliDrop { drop_p } => Some(*drop_p),
        }
    }
}

/// One network-wide broadcast flood: the origin sends a single broadcast
/// frame; every node that decodes it rebroadcasts exactly once after a
/// uniform jitter in `[0, jitter_us]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FloodSpec {
    pub origin: NodeId,
    pub jitter_us: u64,
    pub payload_bytes: u32,
}

/// Complete input to one simulation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub nodes: Vec<NodeSpec>,
    pub connections: Vec<Connection>,
    pub flood: Option<FloodSpec>,
    pub channel: ChannelModel,
    pub duration_s: f64,
    pub replications: u32,
    pub base_seed: u64,
}

#[derive(Debug, Error, PartialEq)]
pub enum ScenarioError {
    #[error("no nodes defined")]
    NoNodes,
    #[error("duplicate node id {id}")]
    DuplicateNodeId { id: NodeId },
    #[error("node id {id} referenced but not defined")]
    UnknownNode { id: NodeId },
    #[error("route needs at least two nodes, got {len}")]
    RouteTooShort { len: usize },
    #[error("route visits node {id} twice")]
    RouteRevisitsNode { id: NodeId },
    #[error("nodes {a} and {b} are {dist_m:.3} m apart, below the propagation reference distance {min_m} m")]
    NodesTooClose { a: NodeId, b: NodeId, dist_m: f64, min_m: f64 },
    #[error("duration must be positive, got {0}")]
    NonPositiveDuration(f64),
    #[error("replications must be at least 1")]
    ZeroReplications,
    #[error("payload must be at least 1 byte")]
    EmptyPayload,
    #[error("CBR rate must be positive, got {0}")]
    NonPositiveRate(f64),
    #[error("backlog must offer at least 1 packet")]
    EmptyBacklog,
    #[error("drop probability must be in [0, 1], got {0}")]
    BadDropProbability(f64),
    #[error("nothing to simulate: no connections and no flood")]
    NoTraffic,
}

impl Scenario {
    /// Checks every structural invariant; simulation refuses to start on the
    /// first violation.
    pub fn validate(&self) -> Result<(), ScenarioError> {
        if self.nodes.is_empty() {
            return Err(ScenarioError::NoNodes);
        }
        let mut seen = std::collections::HashSet::new();
        for n in &self.nodes {
            if !seen.insert(n.id) {
                return Err(ScenarioError::DuplicateNodeId { id: n.id });
            }
        }
        let exists = |id: NodeId| seen.contains(&id);
        for c in &self.connections {
            if c.route.len() < 2 {
                return Err(ScenarioError::RouteTooShort { len: c.route.len() });
            }
            let mut on_route = std::collections::HashSet::new();
            for &id in &c.route {
                if !exists(id) {
                    return Err(ScenarioError::UnknownNode { id });
                }
                if !on_route.insert(id) {
                    return Err(ScenarioError::RouteRevisitsNode { id });
                }
            }
            if c.payload_bytes == 0 {
                return Err(ScenarioError::EmptyPayload);
            }
            match c.traffic {
                Traffic::Cbr { packets_per_s } if packets_per_s <= 0.0 => {
                    return Err(ScenarioError::NonPositiveRate(packets_per_s));
                }
                Traffic::Backlog { packets: 0 } => return Err(ScenarioError::EmptyBacklog),
                _ => {}
            }
        }
        if let Some(f) = &self.flood {
            if !exists(f.origin) {
                return Err(ScenarioError::UnknownNode { id: f.origin });
            }
            if f.payload_bytes == 0 {
                return Err(ScenarioError::EmptyPayload);
            }
        }
        if self.connections.is_empty() && self.flood.is_none() {
            return Err(ScenarioError::NoTraffic);
        }
        if let ChannelModel::BernoulliDrop { drop_p } = self.channel {
            if !(0.0..=1.0).contains(&drop_p) {
                return Err(ScenarioError::BadDropProbability(drop_p));
            }
        }
        if !(self.duration_s > 0.0) {
            return Err(ScenarioError::NonPositiveDuration(self.duration_s));
        }
        if self.replications == 0 {
            return Err(ScenarioError::ZeroReplications);
        }
        // Propagation is undefined below the reference distance; placements
        // must respect it for every pair, since any pair can interfere.
        let min_m = self.channel.params().d0_m;
        for (i, a) in self.nodes.iter().enumerate() {
            for b in &self.nodes[i + 1..] {
                let dist_m = a.distance_to(b);
                if dist_m < min_m {
                    return Err(ScenarioError::NodesTooClose { a: a.id, b: b.id, dist_m, min_m });
                }
            }
        }
        Ok(())
    }
}

// --- placement builders -----------------------------------------------------

/// Sender at the origin, receiver `d_m` east: the basic one-link scenario.
pub fn single_link(
    d_m: f64,
    payload_bytes: u32,
    traffic: Traffic,
    channel: ChannelModel,
    duration_s: f64,
    base_seed: u64,
) -> Scenario {
    Scenario {
        nodes: vec![
            NodeSpec { id: 0, x_m: 0.0, y_m: 0.0 },
            NodeSpec { id: 1, x_m: d_m, y_m: 0.0 },
        ],
        connections: vec![Connection { route: vec![0, 1], payload_bytes, traffic }],
        flood: None,
        channel,
        duration_s,
        replications: 1,
        base_seed,
    }
}

/// Two contending single-hop connections on a line. The sources sit
/// `source_gap_m` apart (well inside carrier-sense range of each other); each
/// receiver is placed on the far side of its own source, pointing away from
/// the other connection, so the receivers are `source_gap_m + d1 + d2` apart.
pub fn contending_pair(
    d1_m: f64,
    d2_m: f64,
    source_gap_m: f64,
    payload_bytes: u32,
    channel: ChannelModel,
    duration_s: f64,
    base_seed: u64,
) -> Scenario {
    Scenario {
        nodes: vec![
            NodeSpec { id: 0, x_m: 0.0, y_m: 0.0 },               // source 1
            NodeSpec { id: 1, x_m: -d1_m, y_m: 0.0 },             // receiver 1
            NodeSpec { id: 2, x_m: source_gap_m, y_m: 0.0 },      // source 2
            NodeSpec { id: 3, x_m: source_gap_m + d2_m, y_m: 0.0 }, // receiver 2
        ],
        connections: vec![
            Connection { route: vec![0, 1], payload_bytes, traffic: Traffic::Saturated },
            Connection { route: vec![2, 3], payload_bytes, traffic: Traffic::Saturated },
        ],
        flood: None,
        channel,
        duration_s,
        replications: 1,
        base_seed,
    }
}

/// A two-hop chain on a line: source, forwarder at `d1_m`, destination at
/// `d1_m + d2_m`.
pub fn two_hop_chain(
    d1_m: f64,
    d2_m: f64,
    payload_bytes: u32,
    traffic: Traffic,
    channel: ChannelModel,
    duration_s: f64,
    base_seed: u64,
) -> Scenario {
    Scenario {
        nodes: vec![
            NodeSpec { id: 0, x_m: 0.0, y_m: 0.0 },
            NodeSpec { id: 1, x_m: d1_m, y_m: 0.0 },
            NodeSpec { id: 2, x_m: d1_m + d2_m, y_m: 0.0 },
        ],
        connections: vec![Connection { route: vec![0, 1, 2], payload_bytes, traffic }],
        flood: None,
        channel,
        duration_s,
        replications: 1,
        base_seed,
    }
}

/// `n` nodes placed uniformly at random in a square area, with the flood
/// origin pinned at the center so coverage is comparable across densities.
/// Placements closer than the propagation reference distance are resampled.
pub fn random_flood(
    n: usize,
    area_m: f64,
    channel: ChannelModel,
    jitter_us: u64,
    payload_bytes: u32,
    duration_s: f64,
    base_seed: u64,
    placement_seed: u64,
) -> Scenario {
    use rand::{Rng, SeedableRng};
    assert!(n >= 2, "flooding needs at least two nodes");
    let min_sep = channel.params().d0_m;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(placement_seed);
    let mut nodes = vec![NodeSpec { id: 0, x_m: area_m / 2.0, y_m: area_m / 2.0 }];
    while nodes.len() < n {
        let cand = NodeSpec {
            id: nodes.len(),
            x_m: rng.random_range(0.0..area_m),
            y_m: rng.random_range(0.0..area_m),
        };
        if nodes.iter().all(|p| p.distance_to(&cand) >= min_sep) {
            nodes.push(cand);
        }
    }
    Scenario {
        nodes,
        connections: Vec::new(),
        flood: Some(FloodSpec { origin: 0, jitter_us, payload_bytes }),
        channel,
        duration_s,
        replications: 1,
        base_seed,
    }
}

// --- experiment results -----------------------------------------------------

/// Replicated measurements of one measure at one sweep position.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    /// What was measured, e.g. `"share_conn1"`.
    pub measure: String,
    /// Independent-variable value the measurements belong to.
    pub x: f64,
    pub replicates: Vec<f64>,
}

impl Series {
    pub fn mean(&self) -> f64 {
        self.replicates.iter().sum::<f64>() / self.replicates.len() as f64
    }

    /// 95% normal-approximation half-width; absent below two replications.
    pub fn ci_half_width(&self) -> Option<f64> {
        let n = self.replicates.len();
        if n < 2 {
            return None;
        }
        let mean = self.mean();
        let var = self.replicates.iter().map(|v| (v - mean).powi(2)).sum::<f64>()
            / (n as f64 - 1.0);
        Some(1.959963984540054 * (var / n as f64).sqrt())
    }
}

/// The output of one experiment: per-(measure, x) replicated series, plus
/// free-form metadata recording how the scenario was constructed.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub name: String,
    pub series: Vec<Series>,
    pub metadata: Vec<(String, String)>,
}

impl ExperimentResult {
    /// The series for `measure` at `x`. Panics if absent; experiment schemas
    /// are static, so a miss is a bug.
    pub fn get(&self, measure: &str, x: f64) -> &Series {
        self.series
            .iter()
            .find(|s| s.measure == measure && s.x == x)
            .unwrap_or_else(|| panic!("no series {measure:?} at x={x} in {}", self.name))
    }

    /// One row per series: x, measure, replication count, mean, CI.
    pub fn summary_table(&self) -> Table {
        let mut t = Table::new(["x", "measure", "n", "mean", "ci95_half_width"]);
        for s in &self.series {
            t.push_cells(vec![
                s.x.into(),
                s.measure.as_str().into(),
                s.replicates.len().into(),
                s.mean().into(),
                s.ci_half_width().map_or(crate::table::Cell::Str(String::new()), |w| w.into()),
            ]);
        }
        t
    }

    /// One row per replication: x, measure, replication index, value.
    pub fn raw_table(&self) -> Table {
        let mut t = Table::new(["x", "measure", "replication", "value"]);
        for s in &self.series {
            for (i, v) in s.replicates.iter().enumerate() {
                t.push_cells(vec![s.x.into(), s.measure.as_str().into(), i.into(), (*v).into()]);
            }
        }
        t
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn valid() -> Scenario {
        single_link(
            150.0,
            500,
            Traffic::Saturated,
            ChannelModel::Fading(PropagationParams::default()),
            10.0,
            1,
        )
    }

    #[test]
    fn builders_produce_valid_scenarios() {
        valid().validate().unwrap();
        contending_pair(
            150.0,
            220.0,
            100.0,
            500,
            ChannelModel::Fading(PropagationParams::default()),
            10.0,
            1,
        )
        .validate()
        .unwrap();
        two_hop_chain(
            100.0,
            220.0,
            500,
            Traffic::Saturated,
            ChannelModel::Fading(PropagationParams::default()),
            10.0,
            1,
        )
        .validate()
        .unwrap();
        let flood = random_flood(
            50,
            1000.0,
            ChannelModel::BernoulliDrop { drop_p: 0.2 },
            10_000,
            64,
            5.0,
            1,
            7,
        );
        flood.validate().unwrap();
        assert_eq!(flood.nodes.len(), 50);
        // Origin pinned to the center.
        assert_eq!(flood.nodes[0].x_m, 500.0);
    }

    #[test]
    fn contending_pair_geometry() {
        let s = contending_pair(
            150.0,
            220.0,
            100.0,
            500,
            ChannelModel::Fading(PropagationParams::default()),
            10.0,
            1,
        );
        let d = |a: usize, b: usize| s.nodes[a].distance_to(&s.nodes[b]);
        assert_eq!(d(0, 1), 150.0); // connection 1 link
        assert_eq!(d(2, 3), 220.0); // connection 2 link
        assert_eq!(d(0, 2), 100.0); // sources adjacent
        assert_eq!(d(1, 3), 470.0); // receivers pointed away from each other
        // Receivers are far outside reception range of the opposite source.
        assert!(d(1, 2) > 250.0 - 1e-9);
        assert!(d(0, 3) > 250.0);
    }

    #[test]
    fn validation_catches_each_invariant() {
        let mut s = valid();
        s.nodes[1].id = 0;
        assert_eq!(s.validate(), Err(ScenarioError::DuplicateNodeId { id: 0 }));

        let mut s = valid();
        s.connections[0].route = vec![0, 9];
        assert_eq!(s.validate(), Err(ScenarioError::UnknownNode { id: 9 }));

        let mut s = valid();
        s.connections[0].route = vec![0];
        assert_eq!(s.validate(), Err(ScenarioError::RouteTooShort { len: 1 }));

        let mut s = valid();
        s.connections[0].route = vec![0, 1, 0];
        assert_eq!(s.validate(), Err(ScenarioError::RouteRevisitsNode { id: 0 }));

        let mut s = valid();
        s.duration_s = 0.0;
        assert_eq!(s.validate(), Err(ScenarioError::NonPositiveDuration(0.0)));

        let mut s = valid();
        s.replications = 0;
        assert_eq!(s.validate(), Err(ScenarioError::ZeroReplications));

        let mut s = valid();
        s.connections[0].payload_bytes = 0;
        assert_eq!(s.validate(), Err(ScenarioError::EmptyPayload));

        let mut s = valid();
        s.connections[0].traffic = Traffic::Cbr { packets_per_s: 0.0 };
        assert_eq!(s.validate(), Err(ScenarioError::NonPositiveRate(0.0)));

        let mut s = valid();
        s.channel = ChannelModel::BernoulliDrop { drop_p: 1.5 };
        assert_eq!(s.validate(), Err(ScenarioError::BadDropProbability(1.5)));

        let mut s = valid();
        s.connections.clear();
        assert_eq!(s.validate(), Err(ScenarioError::NoTraffic));

        let mut s = valid();
        s.nodes[1].x_m = 0.5;
        assert!(matches!(s.validate(), Err(ScenarioError::NodesTooClose { .. })));
    }

    #[test]
    fn series_statistics() {
        let s = Series { measure: "m".into(), x: 1.0, replicates: vec![2.0, 4.0, 6.0] };
        assert_eq!(s.mean(), 4.0);
        // sd = 2, half-width = 1.96 * 2 / sqrt(3)
        let hw = s.ci_half_width().unwrap();
        assert!((hw - 1.959963984540054 * 2.0 / 3f64.sqrt()).abs() < 1e-12);

        let single = Series { measure: "m".into(), x: 1.0, replicates: vec![2.0] };
        assert_eq!(single.ci_half_width(), None);
    }

    #[test]
    fn result_tables_have_stable_schemas() {
        let r = ExperimentResult {
            name: "t".into(),
            series: vec![Series { measure: "a".into(), x: 0.5, replicates: vec![1.0, 2.0] }],
            metadata: vec![],
        };
        assert_eq!(r.summary_table().columns(), ["x", "measure", "n", "mean", "ci95_half_width"]);
        assert_eq!(r.raw_table().len(), 2);
        assert_eq!(r.get("a", 0.5).mean(), 1.5);
    }
}
