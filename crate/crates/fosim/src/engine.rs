//! The discrete-event loop binding everything together.
//!
//! One run owns one [`Simulation`]: the graph, the switch tables, the
//! controller, an ordered event queue, and the metric accumulators. Events
//! are processed in `(time_ms, seq)` order; `seq` is the insertion counter,
//! which makes the order total and the run deterministic.
//!
//! Timing model for a physical link change at time `t`:
//!
//! * the graph flips at `t` — the data plane starts blackholing or carrying
//!   immediately, long before the controller knows;
//! * the controller learns of it at `t + detection` (plus optional seeded
//!   uniform jitter) — the `PortStatusDetected` event, where the control
//!   logic runs and mutates its registries;
//! * the resulting rule changes land on the switches at
//!   `t + detection + hc + hs + rtt` — the `RuleCommitted` events.
//!
//! Traffic is fluid: between consecutive event times each flow offers
//! `rate · Δt`. A flow whose walk blackholes drops all of it; a flow on an
//! up path delivers the fraction allowed by its most oversubscribed link
//! (per-link scale = capacity / offered load, applied proportionally, so
//! e.g. four 20 Mbps flows through a 71 Mbps link each lose 9/80 of their
//! traffic). Admission installs rules synchronously — rule install at flow
//! start is not on the failover critical path, and this keeps the no-failure
//! baseline loss-free, which is what the loss experiments measure against.

use std::cmp::{Ordering, Reverse};
use std::collections::{BTreeMap, BinaryHeap};
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::controller::{apply_rule_op, Controller, RuleOp};
use crate::flow::{active_path, ActivePath, FlowId, FlowTables, TrafficDemand};
use crate::metrics::{
    load_metric, FlowStats, LoadSample, Metrics, RecoveryRecord, RerouteEntry,
};
use crate::recovery::PortChange;
use crate::routing::RouteError;
use crate::topology::{LinkId, NetworkGraph};
use crate::weights::WeightParams;

/// Control-plane latency components, all in milliseconds.
///
/// The defaults put the end-to-end recovery delay at
/// `44.6 + 5 + 2 + 3.5 = 55.1 ms`: detection dominates, the rest covers
/// controller compute, switch table update, and the controller↔switch round
/// trip. Every component can be overridden per scenario.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DelayModel {
    /// Port-status detection latency (physical change → controller knows).
    pub detection_ms: f64,
    /// Controller processing time per handled port event.
    pub hc_ms: f64,
    /// Switch processing time for a rule update.
    pub hs_ms: f64,
    /// Controller↔switch round-trip time.
    pub rtt_ms: f64,
    /// Half-width of a uniform per-detection jitter, seeded by the run's
    /// RNG seed. Zero (the default) keeps detection exactly constant.
    pub detection_jitter_ms: f64,
}

impl Default for DelayModel {
    fn default() -> Self {
        DelayModel {
            detection_ms: 44.6,
            hc_ms: 5.0,
            hs_ms: 2.0,
            rtt_ms: 3.5,
            detection_jitter_ms: 0.0,
        }
    }
}

/// What happens at a point in simulated time.
#[derive(Debug, Clone, PartialEq)]
pub enum EventKind {
    FlowArrival(TrafficDemand),
    FlowDeparture(FlowId),
    /// Physical failure: the graph flips down at this instant.
    LinkFail(LinkId),
    /// Physical restoration: the graph flips up at this instant.
    LinkRestore(LinkId),
    /// The controller learns of a physical change and runs its handler.
    PortStatusDetected {
        link: LinkId,
        change: PortChange,
        /// When the physical change actually happened.
        changed_at_ms: f64,
        /// The detection latency actually drawn for this event (base plus
        /// jitter); kept in the payload so the recovery record can report
        /// it exactly.
        detection_ms: f64,
    },
    /// A rule operation lands on the switches.
    RuleCommitted { op: RuleOp },
}

/// One queued event. Ordered by `(time_ms, seq)`; `seq` is assigned at
/// scheduling time, so simultaneous events run in insertion order — in
/// particular, a revert's `ReplaceLow` always commits before its
/// `DeleteHigh`.
#[derive(Debug, Clone)]
pub struct SimEvent {
    pub time_ms: f64,
    pub seq: u64,
    pub kind: EventKind,
}

impl PartialEq for SimEvent {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for SimEvent {}

impl PartialOrd for SimEvent {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for SimEvent {
    fn cmp(&self, other: &Self) -> Ordering {
        self.time_ms
            .total_cmp(&other.time_ms)
            .then(self.seq.cmp(&other.seq))
    }
}

/// Everything a finished run hands back.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub metrics: Metrics,
    /// Line-delimited `time kind key=value…` records, stable field order.
    pub event_log: String,
}

/// One in-progress simulation run.
pub struct Simulation {
    graph: NetworkGraph,
    tables: FlowTables,
    controller: Controller,
    delays: DelayModel,
    duration_ms: f64,
    heap: BinaryHeap<Reverse<SimEvent>>,
    next_seq: u64,
    clock_ms: f64,
    /// Traffic accounting is settled up to this instant.
    accrued_to_ms: f64,
    rng: ChaCha8Rng,
    /// Flows currently offering traffic (arrived, not departed) — including
    /// ones the controller could not route, which drop at the source.
    arrived: BTreeMap<FlowId, TrafficDemand>,
    stats: BTreeMap<FlowId, FlowStats>,
    recoveries: Vec<RecoveryRecord>,
    load_series: Vec<LoadSample>,
    log: String,
    finished: bool,
}

impl Simulation {
    pub fn new(
        graph: NetworkGraph,
        params: WeightParams,
        delays: DelayModel,
        duration_ms: f64,
        seed: u64,
    ) -> Self {
        assert!(duration_ms >= 0.0, "duration must be nonnegative");
        let mut sim = Simulation {
            graph,
            tables: FlowTables::new(),
            controller: Controller::new(params),
            delays,
            duration_ms,
            heap: BinaryHeap::new(),
            next_seq: 0,
            clock_ms: 0.0,
            accrued_to_ms: 0.0,
            rng: ChaCha8Rng::seed_from_u64(seed),
            arrived: BTreeMap::new(),
            stats: BTreeMap::new(),
            recoveries: Vec::new(),
            load_series: Vec::new(),
            log: String::new(),
            finished: false,
        };
        sim.sample_load(0.0);
        sim
    }

    /// Queues an event. Scenario events are scheduled up front, so at equal
    /// times they run before any controller-derived event.
    pub fn schedule(&mut self, time_ms: f64, kind: EventKind) {
        debug_assert!(!self.finished, "cannot schedule after finish");
        let seq = self.next_seq;
        self.next_seq += 1;
        self.heap.push(Reverse(SimEvent { time_ms, seq, kind }));
    }

    pub fn graph(&self) -> &NetworkGraph {
        &self.graph
    }

    pub fn tables(&self) -> &FlowTables {
        &self.tables
    }

    pub fn controller(&self) -> &Controller {
        &self.controller
    }

    pub fn clock_ms(&self) -> f64 {
        self.clock_ms
    }

    pub fn event_log(&self) -> &str {
        &self.log
    }

    /// Processes the next event within the run's duration. Returns the
    /// processed event, or `None` when the queue is exhausted or every
    /// remaining event lies beyond the duration (those never run).
    pub fn step(&mut self) -> Option<SimEvent> {
        let Reverse(ev) = self.heap.pop()?;
        if ev.time_ms > self.duration_ms {
            self.heap.clear();
            return None;
        }
        self.accrue(ev.time_ms);
        self.clock_ms = ev.time_ms;
        self.process(&ev);
        let batch_done = self
            .heap
            .peek()
            .is_none_or(|Reverse(next)| next.time_ms.total_cmp(&ev.time_ms) != Ordering::Equal);
        if batch_done {
            self.sample_load(ev.time_ms);
        }
        Some(ev)
    }

    /// Settles traffic accounting up to the duration, takes the final load
    /// sample, and seals the per-flow records. Idempotent.
    pub fn finish(&mut self) {
        if self.finished {
            return;
        }
        self.heap.clear();
        self.accrue(self.duration_ms);
        self.clock_ms = self.duration_ms;
        self.sample_load(self.duration_ms);
        let still_active: Vec<FlowId> = self.arrived.keys().copied().collect();
        for flow in still_active {
            let demand = self.arrived[&flow].clone();
            let walk = active_path(&self.tables, &self.graph, &demand);
            if let Some(stats) = self.stats.get_mut(&flow) {
                stats.final_path = walk.as_path().cloned();
            }
        }
        for stats in self.stats.values_mut() {
            stats.finalize();
        }
        self.finished = true;
    }

    /// Runs to completion and hands back metrics plus the event log.
    pub fn run(mut self) -> RunOutput {
        while self.step().is_some() {}
        self.finish();
        self.into_output()
    }

    /// Consumes the (finished) simulation into its outputs.
    pub fn into_output(mut self) -> RunOutput {
        self.finish();
        RunOutput {
            metrics: Metrics {
                duration_ms: self.duration_ms,
                flows: self.stats.into_values().collect(),
                recoveries: self.recoveries,
                load_series: self.load_series,
            },
            event_log: self.log,
        }
    }

    /// Settles fluid traffic over `[accrued_to, to]`.
    ///
    /// Per-link offered load counts the nominal rate of every flow whose
    /// current walk crosses the link; a flow's delivered fraction is the
    /// worst per-link scale `min(1, capacity / offered)` along its walk.
    fn accrue(&mut self, to_ms: f64) {
        let dt_ms = to_ms - self.accrued_to_ms;
        if dt_ms <= 0.0 {
            return;
        }
        self.accrued_to_ms = to_ms;
        if self.arrived.is_empty() {
            return;
        }
        let mut offered: BTreeMap<LinkId, f64> = BTreeMap::new();
        let mut walks: BTreeMap<FlowId, ActivePath> = BTreeMap::new();
        for (flow, demand) in &self.arrived {
            let walk = active_path(&self.tables, &self.graph, demand);
            if let ActivePath::Path(p) = &walk {
                for link in p.links() {
                    *offered.entry(link).or_insert(0.0) += demand.rate_mbps;
                }
            }
            walks.insert(*flow, walk);
        }
        for (flow, demand) in &self.arrived {
            let amount_mbit = demand.rate_mbps * dt_ms / 1000.0;
            let stats = self
                .stats
                .get_mut(flow)
                .expect("every arrived flow has a stats record");
            match &walks[flow] {
                ActivePath::Blackhole => stats.dropped_mb += amount_mbit,
                ActivePath::Path(p) => {
                    let mut frac: f64 = 1.0;
                    for link in p.links() {
                        // the walk only traverses up links, so capacity > 0
                        let cap = self
                            .graph
                            .effective_capacity(&link)
                            .expect("walked links exist");
                        let load = offered[&link];
                        if load > cap {
                            frac = frac.min(cap / load);
                        }
                    }
                    stats.delivered_mb += amount_mbit * frac;
                    stats.dropped_mb += amount_mbit * (1.0 - frac);
                }
            }
        }
    }

    fn sample_load(&mut self, time_ms: f64) {
        let load = load_metric(self.controller.tl(), self.graph.link_count());
        if let Some(last) = self.load_series.last_mut() {
            if last.time_ms.total_cmp(&time_ms) == Ordering::Equal {
                last.load = load;
                return;
            }
        }
        self.load_series.push(LoadSample { time_ms, load });
    }

    fn process(&mut self, ev: &SimEvent) {
        match ev.kind.clone() {
            EventKind::FlowArrival(demand) => self.on_arrival(ev.time_ms, demand),
            EventKind::FlowDeparture(flow) => self.on_departure(ev.time_ms, flow),
            EventKind::LinkFail(link) => {
                self.on_physical_change(ev.time_ms, link, PortChange::LinkRemoved)
            }
            EventKind::LinkRestore(link) => {
                self.on_physical_change(ev.time_ms, link, PortChange::LinkAdd)
            }
            EventKind::PortStatusDetected {
                link,
                change,
                changed_at_ms,
                detection_ms,
            } => self.on_detected(ev.time_ms, link, change, changed_at_ms, detection_ms),
            EventKind::RuleCommitted { op } => self.on_committed(ev.time_ms, op),
        }
    }

    fn on_arrival(&mut self, t: f64, demand: TrafficDemand) {
        let flow = demand.flow_id;
        match self.controller.admit_flow(&self.graph, demand.clone()) {
            Ok((outcome, ops)) => {
                for op in &ops {
                    apply_rule_op(&mut self.tables, op).expect("fresh low install cannot clash");
                }
                self.log_line(
                    t,
                    &format!(
                        "FlowArrival flow={flow} src={} dst={} rate_mbps={:.6} path={} satisfied={}",
                        demand.src, demand.dst, demand.rate_mbps, outcome.path, outcome.satisfied
                    ),
                );
                self.stats.insert(
                    flow,
                    FlowStats::new(
                        flow,
                        demand.src.as_str(),
                        demand.dst.as_str(),
                        demand.rate_mbps,
                        outcome.satisfied,
                    ),
                );
                self.arrived.insert(flow, demand);
            }
            Err(RouteError::DuplicateFlow(_)) => {
                // A scenario bug; keep the first arrival authoritative.
                self.log_line(
                    t,
                    &format!(
                        "FlowArrival flow={flow} src={} dst={} rate_mbps={:.6} duplicate=true",
                        demand.src, demand.dst, demand.rate_mbps
                    ),
                );
            }
            Err(_) => {
                // No route (e.g. the destination is cut off at arrival
                // time). The flow still offers traffic and drops all of it
                // at the source until it departs.
                self.log_line(
                    t,
                    &format!(
                        "FlowArrival flow={flow} src={} dst={} rate_mbps={:.6} path=- satisfied=false",
                        demand.src, demand.dst, demand.rate_mbps
                    ),
                );
                self.stats.insert(
                    flow,
                    FlowStats::new(
                        flow,
                        demand.src.as_str(),
                        demand.dst.as_str(),
                        demand.rate_mbps,
                        false,
                    ),
                );
                self.arrived.insert(flow, demand);
            }
        }
    }

    fn on_departure(&mut self, t: f64, flow: FlowId) {
        let Some(demand) = self.arrived.remove(&flow) else {
            self.log_line(t, &format!("FlowDeparture flow={flow} unknown=true"));
            return;
        };
        // capture the carrying path before the rules disappear
        let walk = active_path(&self.tables, &self.graph, &demand);
        if let Some(stats) = self.stats.get_mut(&flow) {
            stats.final_path = walk.as_path().cloned();
        }
        if self.controller.demand(flow).is_some() {
            let ops = self
                .controller
                .remove_flow(flow)
                .expect("flow presence checked above");
            for op in &ops {
                apply_rule_op(&mut self.tables, op).expect("deletes cannot clash");
            }
        }
        self.log_line(t, &format!("FlowDeparture flow={flow}"));
    }

    fn on_physical_change(&mut self, t: f64, link: LinkId, change: PortChange) {
        let tag = match change {
            PortChange::LinkRemoved => "LinkFail",
            PortChange::LinkAdd => "LinkRestore",
        };
        if self.graph.link(&link).is_none() {
            self.log_line(t, &format!("{tag} link={link} unknown=true"));
            return;
        }
        let want_up = change == PortChange::LinkAdd;
        if self.graph.link_is_up(&link) == want_up {
            // no physical transition, hence nothing for a port to report
            self.log_line(t, &format!("{tag} link={link} noop=true"));
            return;
        }
        self.graph
            .set_link_state(&link, want_up)
            .expect("link existence checked above");
        self.log_line(t, &format!("{tag} link={link}"));
        let jitter = if self.delays.detection_jitter_ms > 0.0 {
            let j = self.delays.detection_jitter_ms;
            self.rng.gen_range(-j..=j)
        } else {
            0.0
        };
        let detection_ms = (self.delays.detection_ms + jitter).max(0.0);
        self.schedule(
            t + detection_ms,
            EventKind::PortStatusDetected {
                link,
                change,
                changed_at_ms: t,
                detection_ms,
            },
        );
    }

    fn on_detected(
        &mut self,
        t: f64,
        link: LinkId,
        change: PortChange,
        changed_at_ms: f64,
        detection_ms: f64,
    ) {
        // A notification can be overtaken by events: if the link flipped
        // back before this one was processed, the controller reconciles
        // against the current port state and does nothing. The opposite
        // notification that must also be in flight will match.
        let want_down = change == PortChange::LinkRemoved;
        if self.graph.link_is_up(&link) == want_down {
            self.log_line(
                t,
                &format!("PortStatusDetected link={link} change={} stale=true", change.as_str()),
            );
            return;
        }
        // full recovery delay, left-to-right so the decomposition is exact
        let rd_ms = detection_ms + self.delays.hc_ms + self.delays.hs_ms + self.delays.rtt_ms;
        let committed_at_ms = changed_at_ms + rd_ms;
        match change {
            PortChange::LinkRemoved => {
                let plan = self.controller.handle_link_removed(&self.graph, &link);
                self.log_line(
                    t,
                    &format!(
                        "PortStatusDetected link={link} change=LinkRemoved affected={} blackholed={}",
                        ids(&plan.affected),
                        ids(&plan.blackholed)
                    ),
                );
                for op in &plan.ops {
                    self.schedule(committed_at_ms, EventKind::RuleCommitted { op: op.clone() });
                }
                if !plan.affected.is_empty() {
                    self.recoveries.push(RecoveryRecord {
                        link: link.to_string(),
                        failed_at_ms: changed_at_ms,
                        detected_at_ms: t,
                        committed_at_ms,
                        detection_ms,
                        rd_ms,
                        affected: plan.affected.clone(),
                        blackholed: plan.blackholed.clone(),
                        reroutes: plan
                            .reroutes
                            .iter()
                            .map(|(flow, path)| RerouteEntry {
                                flow: *flow,
                                backup_path: path.to_string(),
                            })
                            .collect(),
                    });
                }
            }
            PortChange::LinkAdd => {
                let plan = self.controller.handle_link_add(&self.graph, &link);
                let reverted: Vec<FlowId> = plan.reverts.iter().map(|(f, _)| *f).collect();
                self.log_line(
                    t,
                    &format!(
                        "PortStatusDetected link={link} change=LinkAdd affected={}",
                        ids(&reverted)
                    ),
                );
                for (_, ops) in &plan.ops_by_flow {
                    for op in ops {
                        self.schedule(committed_at_ms, EventKind::RuleCommitted { op: op.clone() });
                    }
                }
            }
        }
    }

    fn on_committed(&mut self, t: f64, op: RuleOp) {
        let flow = op.flow();
        if self.controller.demand(flow).is_none() {
            // the flow departed while this op was in flight
            self.log_line(
                t,
                &format!("RuleCommitted flow={flow} op={} skipped=true", op.kind_str()),
            );
            return;
        }
        apply_rule_op(&mut self.tables, &op).expect("controller-issued ops are consistent");
        let path = op
            .path()
            .map(|p| p.to_string())
            .unwrap_or_else(|| "-".to_string());
        self.log_line(
            t,
            &format!("RuleCommitted flow={flow} op={} path={path}", op.kind_str()),
        );
    }

    fn log_line(&mut self, t: f64, body: &str) {
        writeln!(self.log, "{t:.6} {body}").expect("writing to a String cannot fail");
    }
}

/// Comma-joined flow ids, `-` when empty — keeps log fields non-empty and
/// the field order stable.
fn ids(flows: &[FlowId]) -> String {
    if flows.is_empty() {
        return "-".to_string();
    }
    flows
        .iter()
        .map(|f| f.to_string())
        .collect::<Vec<_>>()
        .join(",")
}
