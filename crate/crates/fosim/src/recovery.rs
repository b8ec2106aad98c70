//! Failure handling: fast failover onto backup paths and the revert when a
//! link comes back.
//!
//! On LINK REMOVED the affected flows (ascending flow id) are rerouted one
//! at a time over the flow-count weights, recomputed after each placement:
//! every placement raises the chosen path's cost, which is what spreads the
//! affected flows across distinct lightly-loaded backup paths instead of
//! piling them onto one. Each backup is installed at high priority so it
//! shadows the still-present normal path the moment it commits.
//!
//! A deliberate quirk inherited from the algorithm: the reroute updates the
//! TL registry only on the links of the chosen backup path. Entries on the
//! rest of a flow's pre-failure path stay put until the link returns (or the
//! flow departs). Those stale entries keep the old path expensive while the
//! batch is being placed — remove them eagerly and the second or third
//! affected flow happily tunnels through a link the first flow just vacated,
//! defeating the even spread.
//!
//! On LINK ADD the affected flows get fresh normal-state routes, installed
//! at low priority *before* the high-priority backup rules are deleted
//! (make-before-break), so forwarding never gaps during the revert.

use std::collections::BTreeMap;

use crate::controller::{Controller, RuleOp};
use crate::flow::{FlowId, FlowPath};
use crate::routing::shortest_path;
use crate::telemetry::measure_loads;
use crate::topology::{LinkId, NetworkGraph};
use crate::weights::{refresh_weights, WeightMode};

/// A port-status notification as the controller sees it, one detection
/// latency after the physical change.
#[derive(Debug, Clone, PartialEq)]
pub struct PortStatusEvent {
    pub link: LinkId,
    pub change: PortChange,
    pub detected_at_ms: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PortChange {
    LinkRemoved,
    LinkAdd,
}

impl PortChange {
    pub fn as_str(&self) -> &'static str {
        match self {
            PortChange::LinkRemoved => "LinkRemoved",
            PortChange::LinkAdd => "LinkAdd",
        }
    }
}

/// Outcome of the LINK REMOVED branch.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FailoverPlan {
    /// Flows that were registered on the failed link, ascending.
    pub affected: Vec<FlowId>,
    /// Backup path chosen per rerouted flow, in placement order.
    pub reroutes: Vec<(FlowId, FlowPath)>,
    /// Flows with no up backup path; they keep their normal rules and drop
    /// traffic until the link returns.
    pub blackholed: Vec<FlowId>,
    /// High-priority installs, one per rerouted flow, in placement order.
    pub ops: Vec<RuleOp>,
}

/// Outcome of the LINK ADD branch.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RevertPlan {
    /// New normal path per reverted flow, in placement order.
    pub reverts: Vec<(FlowId, FlowPath)>,
    /// Per flow, in order: `[ReplaceLow, DeleteHigh]` — the install must
    /// commit before the delete for the swap to be hitless.
    pub ops_by_flow: Vec<(FlowId, Vec<RuleOp>)>,
}

impl Controller {
    /// LINK REMOVED: reroutes every flow registered on the failed link onto
    /// a backup path over the flow-count weights, one flow at a time.
    ///
    /// The graph must already show the link as down (the physical failure
    /// precedes its detection).
    pub fn handle_link_removed(&mut self, graph: &NetworkGraph, link: &LinkId) -> FailoverPlan {
        debug_assert!(!graph.link_is_up(link), "failure must precede detection");
        let affected: Vec<FlowId> = self.tl.flows_on(link).into_iter().collect();
        let mut plan = FailoverPlan {
            affected: affected.clone(),
            ..FailoverPlan::default()
        };
        // Backup paths placed so far in this batch, to distinguish a fellow
        // affected flow's fresh placement from its stale pre-failure entry.
        let mut placed: BTreeMap<FlowId, FlowPath> = BTreeMap::new();

        for flow in affected {
            let Some(demand) = self.demands.get(&flow).cloned() else {
                // TL only holds active flows; keep the loop robust anyway.
                continue;
            };
            // Weights from the registry as it stands now: earlier placements
            // in this batch have already raised their paths' costs.
            let weights = refresh_weights(
                WeightMode::PostRecovery,
                &self.params,
                graph,
                &BTreeMap::new(),
                &self.tl,
            );
            self.al.add(link.clone(), flow);
            match shortest_path(graph, &weights, &demand.src, &demand.dst) {
                Ok(backup) => {
                    let al_members = self.al.flows_for(link);
                    for l in backup.links() {
                        // Scrub stale entries of this failure's other
                        // affected flows from the backup path's links, but
                        // never a placement made earlier in this batch.
                        for g in &al_members {
                            if *g == flow {
                                continue;
                            }
                            let freshly_placed =
                                placed.get(g).is_some_and(|p| p.crosses(&l));
                            if !freshly_placed && self.tl.contains(&l, *g) {
                                self.tl
                                    .remove(&l, *g)
                                    .expect("presence checked above");
                            }
                        }
                        self.tl.add(l, flow);
                    }
                    self.high_paths.insert(flow, backup.clone());
                    placed.insert(flow, backup.clone());
                    plan.ops.push(RuleOp::InstallHigh {
                        flow,
                        path: backup.clone(),
                    });
                    plan.reroutes.push((flow, backup));
                }
                Err(_) => {
                    // Total disconnection: no rule changes; the flow keeps
                    // its normal rules and blackholes until LINK ADD.
                    plan.blackholed.push(flow);
                }
            }
        }
        plan
    }

    /// LINK ADD: gives every flow in the restored link's AL a fresh
    /// normal-state route, one flow at a time, each seeing the loads left by
    /// the previous revert.
    pub fn handle_link_add(&mut self, graph: &NetworkGraph, link: &LinkId) -> RevertPlan {
        debug_assert!(graph.link_is_up(link), "restore must precede detection");
        let mut plan = RevertPlan::default();
        for flow in self.al.flows_for(link) {
            let Some(demand) = self.demands.get(&flow).cloned() else {
                self.al.remove(link, flow);
                continue;
            };
            let samples = measure_loads(graph, &self.route_view());
            let weights =
                refresh_weights(WeightMode::Normal, &self.params, graph, &samples, &self.tl);
            self.al.remove(link, flow);
            let Ok(path) = shortest_path(graph, &weights, &demand.src, &demand.dst) else {
                // Another failure still partitions the pair. This link's
                // failure is resolved, so the AL entry goes; the flow keeps
                // whatever rules it has.
                continue;
            };
            self.tl.purge(flow);
            for l in path.links() {
                self.tl.add(l, flow);
            }
            self.low_paths.insert(flow, path.clone());
            self.high_paths.remove(&flow);
            plan.ops_by_flow.push((
                flow,
                vec![
                    RuleOp::ReplaceLow {
                        flow,
                        path: path.clone(),
                    },
                    RuleOp::DeleteHigh { flow },
                ],
            ));
            plan.reverts.push((flow, path));
        }
        plan
    }
}
