//! The discrete-event DCF engine.
//!
//! Time is u64 nanoseconds. Events live in a binary heap ordered by
//! `(time, insertion sequence)`, so ties resolve in scheduling order and a
//! run is a pure function of (scenario, config, seed). Cancellable events
//! (backoff completions, response timeouts) carry a token; cancelling
//! removes the token from the live set and the event is ignored when popped.
//!
//! Reception model: every transmission draws one received power per
//! potential receiver at start (slow fading: the channel holds for the
//! frame). A frame decodes at a node iff that power reaches the sensitivity
//! threshold, the node never transmitted during the airtime, and the frame's
//! power stayed above the aggregate power of all overlapping transmissions
//! by the capture margin (checked whenever the overlap set grows; failures
//! latch). Carrier sense compares the same drawn power to the sensing
//! threshold, which sits below sensitivity, so every decodable frame is also
//! sensed.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap, HashSet, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::{DcfConfig, Ns};
use super::metrics::{
    ns_to_us, ConnectionMetrics, FloodMetrics, LegMetrics, NodeMetrics, RunMetrics,
};
use crate::propagation::PropagationParams;
use crate::scenarios::{Scenario, Traffic};
use crate::table::Table;

// --- frames and transmissions ------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum FrameKind {
    Rts,
    Cts,
    Data,
    Ack,
    Broadcast,
}

impl FrameKind {
    fn name(self) -> &'static str {
        match self {
            FrameKind::Rts => "rts",
            FrameKind::Cts => "cts",
            FrameKind::Data => "data",
            FrameKind::Ack => "ack",
            FrameKind::Broadcast => "broadcast",
        }
    }
}

/// Identity of a packet as it moves along a route: connection index, origin
/// sequence number, and origin enqueue time for end-to-end delay.
#[derive(Debug, Clone, Copy)]
struct PacketMeta {
    conn: usize,
    seq: u64,
    origin_ns: Ns,
}

#[derive(Debug, Clone, Copy)]
struct Frame {
    kind: FrameKind,
    src: usize,
    dst: Option<usize>,
    duration: Ns,
    /// Absolute time until which an overheard RTS/CTS reserves the medium;
    /// 0 means the frame carries no reservation.
    nav_until: Ns,
    /// Packet identity for DATA frames (forwarding, end-to-end accounting).
    meta: Option<PacketMeta>,
}

struct Transmission {
    frame: Frame,
    end: Ns,
    power_dbm: Vec<f64>,
    power_mw: Vec<f64>,
    /// Latched per-node feasibility: power above sensitivity, Bernoulli draw
    /// kept, no half-duplex violation, capture never lost.
    decodable: Vec<bool>,
    sensed: Vec<bool>,
}

// --- events ------------------------------------------------------------------

#[derive(Debug)]
enum Event {
    TxEnd { tx: usize },
    BackoffDone { node: usize, token: u64 },
    Timeout { node: usize, token: u64 },
    StartTx { node: usize, frame: Frame },
    Arrival { conn: usize },
    FloodRelay { node: usize },
}

struct Entry {
    time: Ns,
    seq: u64,
    event: Event,
}

impl PartialEq for Entry {
    fn eq(&self, other: &Self) -> bool {
        self.time == other.time && self.seq == other.seq
    }
}
impl Eq for Entry {}
impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Entry {
    // Reversed so the max-heap pops the earliest (time, seq) first.
    fn cmp(&self, other: &Self) -> Ordering {
        other.time.cmp(&self.time).then(other.seq.cmp(&self.seq))
    }
}

// --- per-node MAC state -------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum MacState {
    /// Nothing in service.
    Idle,
    /// Counting down backoff (possibly frozen behind a busy medium).
    Contend,
    /// The cycle's opening frame (RTS, DATA, or broadcast) is in the air.
    TxHead,
    /// RTS sent, waiting for the CTS or its timeout.
    AwaitCts,
    /// CTS received, DATA scheduled one SIFS ahead.
    SifsData,
    /// DATA sent, waiting for the ACK or its timeout.
    AwaitAck,
}

/// One packet in service or queued at a node. Broadcast relays reuse the
/// same plumbing with `broadcast = true` and no meaningful leg.
#[derive(Debug, Clone)]
struct Service {
    meta: PacketMeta,
    leg: usize,
    payload_bytes: u32,
    enqueue_ns: Ns,
    s_count: u32,
    l_count: u32,
    attempts: u32,
    broadcast: bool,
}

struct NodeSim {
    queue: VecDeque<Service>,
    service: Option<Service>,
    state: MacState,
    cw: u32,
    backoff_remaining: u32,
    /// Countdown clock anchor: slots are consumed from this instant on.
    difs_end: Ns,
    backoff_fire: Ns,
    backoff_token: u64,
    wait_token: u64,
    nav_until: Ns,
    tx_until: Ns,
    /// Connection whose source sits here and pulls packets on demand.
    pulls: Option<usize>,
    flood_seen: bool,
    flood_relayed: bool,
    /// Forwarding / end-to-end dedup of (connection, sequence).
    seen: HashSet<(usize, u64)>,
}

// --- engine -------------------------------------------------------------------

pub(crate) struct Engine<'a> {
    scenario: &'a Scenario,
    cfg: &'a DcfConfig,
    chan: PropagationParams,
    drop_p: Option<f64>,
    now: Ns,
    end_ns: Ns,
    heap: BinaryHeap<Entry>,
    next_seq: u64,
    live: HashSet<u64>,
    next_token: u64,
    rng: ChaCha8Rng,
    nodes: Vec<NodeSim>,
    /// Dense index per scenario node id.
    index_of: HashMap<usize, usize>,
    /// Routes translated to dense indices, one per connection.
    routes: Vec<Vec<usize>>,
    dist: Vec<Vec<f64>>,
    txs: Vec<Transmission>,
    active: Vec<usize>,
    conn_next_seq: Vec<u64>,
    /// Packets a pull source may still offer; `None` = unlimited.
    conn_remaining: Vec<Option<u64>>,
    metrics: RunMetrics,
    busy_since: Option<Ns>,
    busy_ns: Ns,
    trace: Option<Table>,
}

pub(crate) fn trace_table() -> Table {
    Table::new(["time_us", "node", "event", "frame", "value"])
}

impl<'a> Engine<'a> {
    pub(crate) fn new(
        scenario: &'a Scenario,
        cfg: &'a DcfConfig,
        seed: u64,
        traced: bool,
    ) -> Self {
        let chan = scenario.channel.params();
        let n = scenario.nodes.len();
        let index_of: HashMap<usize, usize> =
            scenario.nodes.iter().enumerate().map(|(i, spec)| (spec.id, i)).collect();
        let routes: Vec<Vec<usize>> = scenario
            .connections
            .iter()
            .map(|c| c.route.iter().map(|id| index_of[id]).collect())
            .collect();
        let mut dist = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    dist[i][j] = scenario.nodes[i].distance_to(&scenario.nodes[j]);
                }
            }
        }
        let mut nodes: Vec<NodeSim> = (0..n)
            .map(|_| NodeSim {
                queue: VecDeque::new(),
                service: None,
                state: MacState::Idle,
                cw: cfg.backoff.cw_min_slots,
                backoff_remaining: 0,
                difs_end: 0,
                backoff_fire: 0,
                backoff_token: 0,
                wait_token: 0,
                nav_until: 0,
                tx_until: 0,
                pulls: None,
                flood_seen: false,
                flood_relayed: false,
                seen: HashSet::new(),
            })
            .collect();
        let mut metrics = RunMetrics {
            duration_s: scenario.duration_s,
            connections: scenario
                .connections
                .iter()
                .map(|c| ConnectionMetrics {
                    legs: vec![LegMetrics::default(); c.route.len() - 1],
                    payload_bytes: c.payload_bytes,
                    ..Default::default()
                })
                .collect(),
            nodes: vec![NodeMetrics::default(); n],
            flood: None,
            channel_busy_s: 0.0,
        };
        if scenario.flood.is_some() {
            metrics.flood = Some(FloodMetrics { reached: vec![false; n], rebroadcasts: 0 });
        }
        for (ci, conn) in scenario.connections.iter().enumerate() {
            if matches!(conn.traffic, Traffic::Saturated | Traffic::Backlog { .. }) {
                nodes[routes[ci][0]].pulls = Some(ci);
            }
        }
        Engine {
            scenario,
            cfg,
            chan,
            drop_p: scenario.channel.drop_p(),
            now: 0,
            end_ns: (scenario.duration_s * 1e9).round() as Ns,
            heap: BinaryHeap::new(),
            next_seq: 0,
            live: HashSet::new(),
            next_token: 1,
            rng: ChaCha8Rng::seed_from_u64(seed),
            nodes,
            index_of,
            routes,
            dist,
            txs: Vec::new(),
            active: Vec::new(),
            conn_next_seq: vec![0; scenario.connections.len()],
            conn_remaining: scenario
                .connections
                .iter()
                .map(|c| match c.traffic {
                    Traffic::Backlog { packets } => Some(packets),
                    _ => None,
                })
                .collect(),
            metrics,
            busy_since: None,
            busy_ns: 0,
            trace: traced.then(trace_table),
        }
    }

    pub(crate) fn run(mut self) -> (RunMetrics, Option<Table>) {
        for ci in 0..self.scenario.connections.len() {
            match self.scenario.connections[ci].traffic {
                Traffic::Saturated | Traffic::Backlog { .. } => self.pull_next(ci),
                Traffic::Cbr { .. } => self.schedule(0, Event::Arrival { conn: ci }),
            }
        }
        if let Some(flood) = self.scenario.flood {
            let origin = self.index_of[&flood.origin];
            self.nodes[origin].flood_seen = true;
            self.metrics.flood.as_mut().unwrap().reached[origin] = true;
            self.enqueue_broadcast(origin);
        }
        while let Some(entry) = self.heap.pop() {
            if entry.time > self.end_ns {
                break;
            }
            debug_assert!(entry.time >= self.now, "time went backwards");
            self.now = entry.time;
            match entry.event {
                Event::TxEnd { tx } => self.on_tx_end(tx),
                Event::BackoffDone { node, token } => self.on_backoff_done(node, token),
                Event::Timeout { node, token } => self.on_timeout(node, token),
                Event::StartTx { node, frame } => self.on_start_tx(node, frame),
                Event::Arrival { conn } => self.on_arrival(conn),
                Event::FloodRelay { node } => self.enqueue_broadcast(node),
            }
        }
        self.finalize()
    }

    // --- scheduling utilities -------------------------------------------------

    fn schedule(&mut self, at: Ns, event: Event) {
        let seq = self.next_seq;
        self.next_seq += 1;
        self.heap.push(Entry { time: at, seq, event });
    }

    fn new_token(&mut self) -> u64 {
        let t = self.next_token;
        self.next_token += 1;
        self.live.insert(t);
        t
    }

    fn cancel(&mut self, token: u64) {
        self.live.remove(&token);
    }

    fn trace(&mut self, node: usize, event: &str, frame: &str, value: f64) {
        let now = self.now;
        if let Some(t) = self.trace.as_mut() {
            t.push_cells(vec![
                ns_to_us(now).into(),
                node.into(),
                event.into(),
                frame.into(),
                value.into(),
            ]);
        }
    }

    // --- traffic ----------------------------------------------------------------

    /// Pull sources (saturated / backlog) hand the MAC exactly one packet at
    /// a time, so their queue never overflows and offered == enqueued.
    fn pull_next(&mut self, conn: usize) {
        let src = self.routes[conn][0];
        if self.nodes[src].service.is_some() || !self.nodes[src].queue.is_empty() {
            return;
        }
        match &mut self.conn_remaining[conn] {
            Some(0) => return,
            Some(k) => *k -= 1,
            None => {}
        }
        let seq = self.conn_next_seq[conn];
        self.conn_next_seq[conn] += 1;
        let meta = PacketMeta { conn, seq, origin_ns: self.now };
        self.offer(src, meta, 0);
    }

    fn on_arrival(&mut self, conn: usize) {
        let src = self.routes[conn][0];
        let seq = self.conn_next_seq[conn];
        self.conn_next_seq[conn] += 1;
        let meta = PacketMeta { conn, seq, origin_ns: self.now };
        self.offer(src, meta, 0);
        let Traffic::Cbr { packets_per_s } = self.scenario.connections[conn].traffic else {
            unreachable!("arrival event on non-CBR connection");
        };
        let period = (1e9 / packets_per_s).round() as Ns;
        let at = self.now + period.max(1);
        self.schedule(at, Event::Arrival { conn });
    }

    /// Presents one packet to the MAC queue of `node` for hop `leg`; applies
    /// the queue cap and starts service if the node is idle.
    fn offer(&mut self, node: usize, meta: PacketMeta, leg: usize) {
        let payload = self.scenario.connections[meta.conn].payload_bytes;
        let lm = &mut self.metrics.connections[meta.conn].legs[leg];
        lm.offered += 1;
        let in_system =
            self.nodes[node].queue.len() + self.nodes[node].service.is_some() as usize;
        if in_system >= self.cfg.queue_capacity {
            lm.queue_dropped += 1;
            self.trace(node, "queue_drop", "data", meta.seq as f64);
            return;
        }
        lm.enqueued += 1;
        self.trace(node, "enqueue", "data", meta.seq as f64);
        self.nodes[node].queue.push_back(Service {
            meta,
            leg,
            payload_bytes: payload,
            enqueue_ns: self.now,
            s_count: 0,
            l_count: 0,
            attempts: 0,
            broadcast: false,
        });
        if self.nodes[node].state == MacState::Idle {
            self.begin_service(node);
        }
    }

    fn enqueue_broadcast(&mut self, node: usize) {
        let flood = self.scenario.flood.expect("broadcast without flood spec");
        let in_system =
            self.nodes[node].queue.len() + self.nodes[node].service.is_some() as usize;
        if in_system >= self.cfg.queue_capacity {
            return;
        }
        self.nodes[node].queue.push_back(Service {
            meta: PacketMeta { conn: usize::MAX, seq: 0, origin_ns: self.now },
            leg: 0,
            payload_bytes: flood.payload_bytes,
            enqueue_ns: self.now,
            s_count: 0,
            l_count: 0,
            attempts: 0,
            broadcast: true,
        });
        if self.nodes[node].state == MacState::Idle {
            self.begin_service(node);
        }
    }

    // --- contention -------------------------------------------------------------

    fn begin_service(&mut self, node: usize) {
        debug_assert_eq!(self.nodes[node].state, MacState::Idle);
        debug_assert!(self.nodes[node].service.is_none());
        let Some(service) = self.nodes[node].queue.pop_front() else {
            return;
        };
        self.nodes[node].service = Some(service);
        self.nodes[node].state = MacState::Contend;
        self.draw_backoff(node);
        self.arm_backoff(node);
    }

    fn draw_backoff(&mut self, node: usize) {
        let cw = self.nodes[node].cw;
        let slots = self.rng.random_range(0..=cw);
        self.nodes[node].backoff_remaining = slots;
        self.metrics.nodes[node].backoff_draws += 1;
        self.metrics.nodes[node].backoff_slots_drawn += slots as u64;
        self.trace(node, "backoff_draw", "", slots as f64);
    }

    /// Schedules (or reschedules) this node's BackoffDone: the medium must
    /// stay idle from `busy horizon` for DIFS plus the remaining slots.
    fn arm_backoff(&mut self, node: usize) {
        debug_assert_eq!(self.nodes[node].state, MacState::Contend);
        let old = self.nodes[node].backoff_token;
        if old != 0 {
            self.cancel(old);
        }
        let horizon = self.busy_horizon(node);
        let difs_end = horizon.max(self.now) + self.cfg.difs();
        let fire = difs_end + self.nodes[node].backoff_remaining as Ns * self.cfg.slot();
        let token = self.new_token();
        self.nodes[node].difs_end = difs_end;
        self.nodes[node].backoff_fire = fire;
        self.nodes[node].backoff_token = token;
        self.schedule(fire, Event::BackoffDone { node, token });
    }

    /// Latest instant the medium is known busy for `node`: its own radio,
    /// its NAV, and every in-flight transmission it senses.
    fn busy_horizon(&self, node: usize) -> Ns {
        let mut h = self.nodes[node].nav_until.max(self.nodes[node].tx_until);
        for &t in &self.active {
            if self.txs[t].sensed[node] {
                h = h.max(self.txs[t].end);
            }
        }
        h
    }

    /// A new busy source appeared for `node` at `now`. If it is counting
    /// down, bank the slots consumed so far and re-arm against the new
    /// horizon. A countdown that completes exactly now is left to fire:
    /// stations commit to a slot boundary, which is how same-slot collisions
    /// happen.
    fn on_busy_start(&mut self, node: usize) {
        if self.nodes[node].state != MacState::Contend {
            return;
        }
        if self.nodes[node].backoff_fire <= self.now {
            return;
        }
        let consumed = if self.now > self.nodes[node].difs_end {
            ((self.now - self.nodes[node].difs_end) / self.cfg.slot()) as u32
        } else {
            0
        };
        let n = &mut self.nodes[node];
        n.backoff_remaining = n.backoff_remaining.saturating_sub(consumed);
        self.arm_backoff(node);
    }

    fn on_backoff_done(&mut self, node: usize, token: u64) {
        if !self.live.remove(&token) {
            return;
        }
        self.nodes[node].backoff_token = 0;
        debug_assert_eq!(self.nodes[node].state, MacState::Contend);
        let service = self.nodes[node].service.clone().expect("contending without service");
        let frame = if service.broadcast {
            Frame {
                kind: FrameKind::Broadcast,
                src: node,
                dst: None,
                duration: self.cfg.data_duration(service.payload_bytes),
                nav_until: 0,
                meta: Some(service.meta),
            }
        } else if self.cfg.rts_cts_enabled {
            let rts_end = self.now + self.cfg.rts_duration();
            let nav_until = rts_end
                + self.cfg.sifs()
                + self.cfg.cts_duration()
                + self.cfg.sifs()
                + self.cfg.data_duration(service.payload_bytes)
                + self.cfg.sifs()
                + self.cfg.ack_duration();
            Frame {
                kind: FrameKind::Rts,
                src: node,
                dst: Some(self.peer(node)),
                duration: self.cfg.rts_duration(),
                nav_until,
                meta: Some(service.meta),
            }
        } else {
            Frame {
                kind: FrameKind::Data,
                src: node,
                dst: Some(self.peer(node)),
                duration: self.cfg.data_duration(service.payload_bytes),
                nav_until: 0,
                meta: Some(service.meta),
            }
        };
        if let Some(s) = self.nodes[node].service.as_mut() {
            s.attempts += 1;
        }
        self.nodes[node].state = MacState::TxHead;
        self.start_transmission(node, frame);
    }

    /// Next hop of the packet currently in service at `node`.
    fn peer(&self, node: usize) -> usize {
        let service = self.nodes[node].service.as_ref().expect("no service");
        self.routes[service.meta.conn][service.leg + 1]
    }

    // --- the air ------------------------------------------------------------------

    fn start_transmission(&mut self, src: usize, frame: Frame) {
        debug_assert!(self.nodes[src].tx_until <= self.now, "node already transmitting");
        let n = self.nodes.len();
        let end = self.now + frame.duration;
        self.nodes[src].tx_until = end;

        let mut power_dbm = vec![f64::NEG_INFINITY; n];
        let mut decodable = vec![false; n];
        let mut sensed = vec![false; n];
        for r in 0..n {
            if r == src {
                continue;
            }
            let p = match self.drop_p {
                None => self.chan.sample_received_power_dbm(self.dist[src][r], &mut self.rng),
                Some(_) => self.chan.mean_received_power_dbm(self.dist[src][r]),
            };
            let keep = match self.drop_p {
                None => true,
                Some(dp) => self.rng.random::<f64>() >= dp,
            };
            power_dbm[r] = p;
            sensed[r] = p >= self.cfg.cs_threshold_dbm;
            decodable[r] = keep && p >= self.chan.p_th_dbm && self.nodes[r].tx_until <= self.now;
        }
        let power_mw: Vec<f64> = power_dbm
            .iter()
            .map(|&dbm| if dbm == f64::NEG_INFINITY { 0.0 } else { 10f64.powf(dbm / 10.0) })
            .collect();

        let tx_id = self.txs.len();
        self.txs.push(Transmission { frame, end, power_dbm, power_mw, decodable, sensed });
        self.resolve_overlaps(tx_id);
        self.active.push(tx_id);
        if self.active.len() == 1 {
            self.busy_since = Some(self.now);
        }
        self.schedule(end, Event::TxEnd { tx: tx_id });
        self.trace(src, "tx_start", frame.kind.name(), ns_to_us(frame.duration));

        // The new energy freezes countdowns: at every node that senses it,
        // and at the sender itself (a response transmission must freeze the
        // sender's own pending countdown).
        for r in 0..n {
            if r == src || self.txs[tx_id].sensed[r] {
                self.on_busy_start(r);
            }
        }
    }

    /// Applies overlap rules between the newly started transmission and
    /// everything already in flight. With capture, a frame needs its power
    /// to exceed the *sum* of all overlapping powers by the capture ratio at
    /// every moment of its airtime; lost capture latches. Without capture,
    /// any sensible overlap kills both frames at that node.
    fn resolve_overlaps(&mut self, new_id: usize) {
        let n = self.nodes.len();
        let src = self.txs[new_id].frame.src;
        // A node mid-transmission cannot receive the new frame (set at
        // draw time); the new frame also deafens its own sender to every
        // frame already in flight.
        for &t in &self.active {
            self.txs[t].decodable[src] = false;
        }
        if self.cfg.capture_enabled {
            let ratio = self.cfg.capture_ratio();
            for r in 0..n {
                let mut total = self.txs[new_id].power_mw[r];
                for &t in &self.active {
                    total += self.txs[t].power_mw[r];
                }
                for t in self.active.iter().copied().chain([new_id]) {
                    if !self.txs[t].decodable[r] {
                        continue;
                    }
                    let own = self.txs[t].power_mw[r];
                    let interference = total - own;
                    if interference > 0.0 && own < ratio * interference {
                        self.txs[t].decodable[r] = false;
                    }
                }
            }
        } else {
            for r in 0..n {
                let new_sensed = self.txs[new_id].sensed[r];
                let mut any_other_sensed = false;
                for &t in &self.active {
                    any_other_sensed |= self.txs[t].sensed[r];
                    if new_sensed {
                        self.txs[t].decodable[r] = false;
                    }
                }
                if any_other_sensed {
                    self.txs[new_id].decodable[r] = false;
                }
            }
        }
    }

    fn on_tx_end(&mut self, tx_id: usize) {
        self.active.retain(|&t| t != tx_id);
        if self.active.is_empty() {
            self.busy_ns += self.now - self.busy_since.take().expect("busy interval open");
        }
        let frame = self.txs[tx_id].frame;
        self.trace(frame.src, "tx_end", frame.kind.name(), 0.0);

        for r in 0..self.nodes.len() {
            if r != frame.src && self.txs[tx_id].decodable[r] {
                let power = self.txs[tx_id].power_dbm[r];
                self.trace(r, "decode", frame.kind.name(), power);
                self.on_decode(r, &frame);
            }
        }

        // Sender-side continuation of the exchange.
        match frame.kind {
            FrameKind::Rts if self.nodes[frame.src].state == MacState::TxHead => {
                let token = self.new_token();
                self.nodes[frame.src].wait_token = token;
                self.nodes[frame.src].state = MacState::AwaitCts;
                self.schedule(self.now + self.cfg.cts_timeout(), Event::Timeout {
                    node: frame.src,
                    token,
                });
            }
            FrameKind::Data if self.nodes[frame.src].state == MacState::TxHead => {
                let token = self.new_token();
                self.nodes[frame.src].wait_token = token;
                self.nodes[frame.src].state = MacState::AwaitAck;
                self.schedule(self.now + self.cfg.ack_timeout(), Event::Timeout {
                    node: frame.src,
                    token,
                });
            }
            FrameKind::Broadcast => {
                if let Some(f) = self.metrics.flood.as_mut() {
                    if Some(self.scenario.nodes[frame.src].id)
                        != self.scenario.flood.map(|fl| fl.origin)
                    {
                        f.rebroadcasts += 1;
                    }
                }
                self.resolve_service(frame.src);
            }
            _ => {}
        }
    }

    fn on_decode(&mut self, r: usize, frame: &Frame) {
        match frame.kind {
            FrameKind::Rts => {
                if frame.dst == Some(r) {
                    let reply = Frame {
                        kind: FrameKind::Cts,
                        src: r,
                        dst: Some(frame.src),
                        duration: self.cfg.cts_duration(),
                        nav_until: frame.nav_until,
                        meta: None,
                    };
                    self.schedule(self.now + self.cfg.sifs(), Event::StartTx {
                        node: r,
                        frame: reply,
                    });
                } else {
                    self.set_nav(r, frame.nav_until);
                }
            }
            FrameKind::Cts => {
                if frame.dst == Some(r) {
                    if self.nodes[r].state == MacState::AwaitCts && frame.src == self.peer(r) {
                        let token = self.nodes[r].wait_token;
                        self.cancel(token);
                        self.nodes[r].wait_token = 0;
                        // A decoded CTS resets the window even though the
                        // packet is not yet through.
                        self.nodes[r].cw = self.cfg.backoff.cw_min_slots;
                        self.nodes[r].state = MacState::SifsData;
                        let service = self.nodes[r].service.clone().expect("no service");
                        let data = Frame {
                            kind: FrameKind::Data,
                            src: r,
                            dst: Some(self.peer(r)),
                            duration: self.cfg.data_duration(service.payload_bytes),
                            nav_until: 0,
                            meta: Some(service.meta),
                        };
                        self.schedule(self.now + self.cfg.sifs(), Event::StartTx {
                            node: r,
                            frame: data,
                        });
                    }
                } else {
                    self.set_nav(r, frame.nav_until);
                }
            }
            FrameKind::Data => {
                if frame.dst == Some(r) {
                    let reply = Frame {
                        kind: FrameKind::Ack,
                        src: r,
                        dst: Some(frame.src),
                        duration: self.cfg.ack_duration(),
                        nav_until: 0,
                        meta: None,
                    };
                    self.schedule(self.now + self.cfg.sifs(), Event::StartTx {
                        node: r,
                        frame: reply,
                    });
                    let meta = frame.meta.expect("data frame without packet identity");
                    if self.nodes[r].seen.insert((meta.conn, meta.seq)) {
                        let route = &self.routes[meta.conn];
                        let pos = route.iter().position(|&x| x == r).expect("not on route");
                        if pos == route.len() - 1 {
                            let cm = &mut self.metrics.connections[meta.conn];
                            cm.end_to_end_delivered += 1;
                            cm.end_to_end_delays_us.push(ns_to_us(self.now - meta.origin_ns));
                            cm.end_to_end_times_us.push(ns_to_us(self.now));
                            self.trace(r, "delivered", "data", meta.seq as f64);
                        } else {
                            self.offer(r, meta, pos);
                        }
                    }
                }
            }
            FrameKind::Ack => {
                if frame.dst == Some(r)
                    && self.nodes[r].state == MacState::AwaitAck
                    && frame.src == self.peer(r)
                {
                    let token = self.nodes[r].wait_token;
                    self.cancel(token);
                    self.nodes[r].wait_token = 0;
                    self.nodes[r].cw = self.cfg.backoff.cw_min_slots;
                    let service = self.nodes[r].service.clone().expect("no service");
                    let lm =
                        &mut self.metrics.connections[service.meta.conn].legs[service.leg];
                    lm.acked += 1;
                    lm.payload_bits_acked += 8 * service.payload_bytes as u64;
                    lm.delays_us.push(ns_to_us(self.now - service.enqueue_ns));
                    lm.ack_times_us.push(ns_to_us(self.now));
                    lm.record_attempts(service.attempts);
                    self.resolve_service(r);
                }
            }
            FrameKind::Broadcast => {
                if !self.nodes[r].flood_seen {
                    self.nodes[r].flood_seen = true;
                    if let Some(f) = self.metrics.flood.as_mut() {
                        f.reached[r] = true;
                    }
                    if !self.nodes[r].flood_relayed {
                        self.nodes[r].flood_relayed = true;
                        let flood = self.scenario.flood.expect("flood frame without spec");
                        let jitter = self.rng.random_range(0..=flood.jitter_us * 1_000);
                        self.schedule(self.now + jitter, Event::FloodRelay { node: r });
                    }
                }
            }
        }
    }

    fn set_nav(&mut self, r: usize, until: Ns) {
        if until > self.nodes[r].nav_until {
            self.nodes[r].nav_until = until;
            self.trace(r, "nav_set", "", ns_to_us(until));
            self.on_busy_start(r);
        }
    }

    fn on_start_tx(&mut self, node: usize, frame: Frame) {
        match frame.kind {
            FrameKind::Cts | FrameKind::Ack => {
                // Half-duplex: a response is skipped if the responder is
                // already transmitting something else.
                if self.nodes[node].tx_until > self.now {
                    return;
                }
                self.start_transmission(node, frame);
            }
            FrameKind::Data => {
                debug_assert_eq!(self.nodes[node].state, MacState::SifsData);
                self.nodes[node].state = MacState::TxHead;
                self.start_transmission(node, frame);
            }
            _ => unreachable!("only responses and post-CTS data are pre-scheduled"),
        }
    }

    // --- retries and resolution ------------------------------------------------

    fn on_timeout(&mut self, node: usize, token: u64) {
        if !self.live.remove(&token) {
            return;
        }
        self.nodes[node].wait_token = 0;
        match self.nodes[node].state {
            MacState::AwaitCts => {
                self.trace(node, "timeout", "cts", 0.0);
                if let Some(s) = self.nodes[node].service.as_mut() {
                    s.s_count += 1;
                }
            }
            MacState::AwaitAck => {
                self.trace(node, "timeout", "ack", 0.0);
                if let Some(s) = self.nodes[node].service.as_mut() {
                    s.s_count += 1;
                    s.l_count += 1;
                }
            }
            other => unreachable!("timeout in state {other:?}"),
        }
        if self.cfg.backoff_enabled {
            let doubled = (self.nodes[node].cw + 1) * 2 - 1;
            self.nodes[node].cw = doubled.min(self.cfg.backoff.cw_max_slots);
        }
        let service = self.nodes[node].service.as_ref().expect("timeout without service");
        if service.s_count >= self.cfg.retry.srl || service.l_count >= self.cfg.retry.lrl {
            let service = service.clone();
            let lm = &mut self.metrics.connections[service.meta.conn].legs[service.leg];
            lm.retry_dropped += 1;
            lm.record_attempts(service.attempts);
            self.trace(node, "drop_retry", "data", service.meta.seq as f64);
            self.resolve_service(node);
        } else {
            self.nodes[node].state = MacState::Contend;
            self.draw_backoff(node);
            self.arm_backoff(node);
        }
    }

    /// The packet in service reached a verdict; reset for the next one.
    fn resolve_service(&mut self, node: usize) {
        self.nodes[node].service = None;
        self.nodes[node].cw = self.cfg.backoff.cw_min_slots;
        self.nodes[node].state = MacState::Idle;
        if !self.nodes[node].queue.is_empty() {
            self.begin_service(node);
        } else if let Some(conn) = self.nodes[node].pulls {
            self.pull_next(conn);
            // pull_next offers through the normal path, which begins
            // service; if the backlog is exhausted the node stays idle.
        }
    }

    fn finalize(mut self) -> (RunMetrics, Option<Table>) {
        if let Some(since) = self.busy_since.take() {
            self.busy_ns += self.end_ns.saturating_sub(since);
        }
        self.metrics.channel_busy_s = self.busy_ns as f64 / 1e9;
        for node in &self.nodes {
            for service in node.service.iter().chain(node.queue.iter()) {
                if !service.broadcast {
                    self.metrics.connections[service.meta.conn].legs[service.leg]
                        .pending_at_end += 1;
                }
            }
        }
        (self.metrics, self.trace)
    }
}
