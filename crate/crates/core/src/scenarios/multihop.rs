//! Hop-order experiment: end-to-end throughput of a saturated two-hop chain
//! for every combination of a strong and a weak hop. The forwarder relays
//! at the MAC level with sequence-number deduplication; no routing protocol
//! is involved.

use rayon::prelude::*;

use super::{two_hop_chain, ChannelModel, ExperimentResult, Series, Traffic};
use crate::macsim::{run, DcfConfig};
use crate::seeds;

/// The four chains, as (case name, first hop strong?, second hop strong?).
pub const HOP_ORDER_CASES: [(&str, bool, bool); 4] = [
    ("strong_then_strong", true, true),
    ("strong_then_weak", true, false),
    ("weak_then_strong", false, true),
    ("weak_then_weak", false, false),
];

/// End-to-end throughput of each two-hop chain, `replications` seeds per
/// case. Strong and weak hops are realized as short and long distances.
/// One series per case; `x` is the case index in [`HOP_ORDER_CASES`].
pub fn exp_hop_order(
    strong_d_m: f64,
    weak_d_m: f64,
    payload_bytes: u32,
    channel: ChannelModel,
    base: &DcfConfig,
    duration_s: f64,
    replications: u32,
    base_seed: u64,
) -> ExperimentResult {
    let dist = |strong: bool| if strong { strong_d_m } else { weak_d_m };
    let jobs: Vec<(usize, u32)> = (0..HOP_ORDER_CASES.len())
        .flat_map(|ci| (0..replications).map(move |r| (ci, r)))
        .collect();
    let per_run: Vec<(usize, f64)> = jobs
        .into_par_iter()
        .map(|(ci, r)| {
            let (_, first_strong, second_strong) = HOP_ORDER_CASES[ci];
            let seed = seeds::derive(base_seed, &[ci as u64, r as u64]);
            let scenario = two_hop_chain(
                dist(first_strong),
                dist(second_strong),
                payload_bytes,
                Traffic::Saturated,
                channel,
                duration_s,
                seed,
            );
            let metrics = run(&scenario, base, seed).expect("constructed scenario");
            let delivered = metrics.connections[0].end_to_end_delivered as f64;
            (ci, delivered * 8.0 * payload_bytes as f64 / duration_s)
        })
        .collect();
    let series = HOP_ORDER_CASES
        .iter()
        .enumerate()
        .map(|(ci, (name, _, _))| Series {
            measure: name.to_string(),
            x: ci as f64,
            replicates: per_run
                .iter()
                .filter(|(j, _)| *j == ci)
                .map(|(_, v)| *v)
                .collect(),
        })
        .collect();
    ExperimentResult {
        name: "hop_order".to_string(),
        series,
        metadata: vec![
            ("strong_d_m".to_string(), strong_d_m.to_string()),
            ("weak_d_m".to_string(), weak_d_m.to_string()),
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

    #[test]
    fn strong_chain_dominates_and_order_matters() {
        let channel = ChannelModel::Fading(PropagationParams::default());
        let cfg = DcfConfig::default_for(&channel.params());
        let r = exp_hop_order(100.0, 220.0, 500, channel, &cfg, 20.0, 4, 3);
        let mean = |name: &str| {
            let ci = HOP_ORDER_CASES.iter().position(|(n, _, _)| *n == name).unwrap();
            r.get(name, ci as f64).mean()
        };
        let ss = mean("strong_then_strong");
        let sw = mean("strong_then_weak");
        let ws = mean("weak_then_strong");
        let ww = mean("weak_then_weak");
        assert!(ss >= sw && ss >= ws && ss >= ww, "two strong hops dominate");
        assert!(ws > sw, "weak-first {ws:.0} must beat strong-first {sw:.0}");
    }
}
