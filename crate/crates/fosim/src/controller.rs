//! The controller's view of the network: active demands, the paths it has
//! programmed, the TL/AL registries, and the rule operations it sends to
//! the data plane.
//!
//! The controller never touches switch tables directly. Admission, failover
//! and revert all return [`RuleOp`] values; the simulation engine decides
//! when each op commits (immediately for admission, after the configured
//! control-plane delays for failure handling) and applies it with
//! [`apply_rule_op`]. This split is what lets the simulator show a flow
//! blackholing between a physical failure and the moment its backup rules
//! actually land.

use std::collections::BTreeMap;

use crate::flow::{
    AffectedFlowRegistry, FlowId, FlowPath, FlowTables, LinkFlowRegistry, RulePriority,
    TableError, TrafficDemand,
};
use crate::telemetry::RouteView;
use crate::weights::WeightParams;

/// A rule-table mutation the controller asks the data plane to perform.
#[derive(Debug, Clone, PartialEq)]
pub enum RuleOp {
    /// Fresh low-priority install at admission time.
    InstallLow { flow: FlowId, path: FlowPath },
    /// Revert-time install: clears the flow's old low-priority rules first,
    /// then lays out the new path.
    ReplaceLow { flow: FlowId, path: FlowPath },
    /// Failover install: clears any previous high-priority rules for the
    /// flow (at most one backup path at a time), then lays out the backup.
    InstallHigh { flow: FlowId, path: FlowPath },
    /// Drops the flow's high-priority rules everywhere.
    DeleteHigh { flow: FlowId },
    /// Drops everything the flow has, both priorities (departure).
    DeleteAll { flow: FlowId },
}

impl RuleOp {
    pub fn flow(&self) -> FlowId {
        match self {
            RuleOp::InstallLow { flow, .. }
            | RuleOp::ReplaceLow { flow, .. }
            | RuleOp::InstallHigh { flow, .. }
            | RuleOp::DeleteHigh { flow }
            | RuleOp::DeleteAll { flow } => *flow,
        }
    }

    /// Short tag for event logs.
    pub fn kind_str(&self) -> &'static str {
        match self {
            RuleOp::InstallLow { .. } => "InstallLow",
            RuleOp::ReplaceLow { .. } => "ReplaceLow",
            RuleOp::InstallHigh { .. } => "InstallHigh",
            RuleOp::DeleteHigh { .. } => "DeleteHigh",
            RuleOp::DeleteAll { .. } => "DeleteAll",
        }
    }

    pub fn path(&self) -> Option<&FlowPath> {
        match self {
            RuleOp::InstallLow { path, .. }
            | RuleOp::ReplaceLow { path, .. }
            | RuleOp::InstallHigh { path, .. } => Some(path),
            RuleOp::DeleteHigh { .. } | RuleOp::DeleteAll { .. } => None,
        }
    }
}

/// Applies one committed rule operation to the switch tables.
pub fn apply_rule_op(tables: &mut FlowTables, op: &RuleOp) -> Result<(), TableError> {
    match op {
        RuleOp::InstallLow { flow, path } => tables.install_rules(path, *flow, RulePriority::Low),
        RuleOp::ReplaceLow { flow, path } => {
            tables.delete_rules(*flow, RulePriority::Low);
            tables.install_rules(path, *flow, RulePriority::Low)
        }
        RuleOp::InstallHigh { flow, path } => {
            tables.delete_rules(*flow, RulePriority::High);
            tables.install_rules(path, *flow, RulePriority::High)
        }
        RuleOp::DeleteHigh { flow } => {
            tables.delete_rules(*flow, RulePriority::High);
            Ok(())
        }
        RuleOp::DeleteAll { flow } => {
            tables.delete_rules(*flow, RulePriority::Low);
            tables.delete_rules(*flow, RulePriority::High);
            Ok(())
        }
    }
}

/// Control-plane state. Mutated only from the single-threaded engine loop.
#[derive(Debug, Clone)]
pub struct Controller {
    pub(crate) params: WeightParams,
    pub(crate) demands: BTreeMap<FlowId, TrafficDemand>,
    /// The normal (low-priority) path programmed per flow.
    pub(crate) low_paths: BTreeMap<FlowId, FlowPath>,
    /// The backup (high-priority) path per flow, while a failover is active.
    pub(crate) high_paths: BTreeMap<FlowId, FlowPath>,
    pub(crate) satisfied: BTreeMap<FlowId, bool>,
    pub(crate) tl: LinkFlowRegistry,
    pub(crate) al: AffectedFlowRegistry,
}

impl Controller {
    pub fn new(params: WeightParams) -> Self {
        Controller {
            params,
            demands: BTreeMap::new(),
            low_paths: BTreeMap::new(),
            high_paths: BTreeMap::new(),
            satisfied: BTreeMap::new(),
            tl: LinkFlowRegistry::new(),
            al: AffectedFlowRegistry::new(),
        }
    }

    pub fn params(&self) -> &WeightParams {
        &self.params
    }

    /// The path the controller believes carries the flow right now: the
    /// backup path while one is programmed, otherwise the normal path.
    pub fn current_path(&self, flow: FlowId) -> Option<&FlowPath> {
        self.high_paths.get(&flow).or_else(|| self.low_paths.get(&flow))
    }

    pub fn low_path(&self, flow: FlowId) -> Option<&FlowPath> {
        self.low_paths.get(&flow)
    }

    pub fn high_path(&self, flow: FlowId) -> Option<&FlowPath> {
        self.high_paths.get(&flow)
    }

    pub fn demand(&self, flow: FlowId) -> Option<&TrafficDemand> {
        self.demands.get(&flow)
    }

    pub fn active_flows(&self) -> impl Iterator<Item = &TrafficDemand> {
        self.demands.values()
    }

    pub fn is_satisfied(&self, flow: FlowId) -> Option<bool> {
        self.satisfied.get(&flow).copied()
    }

    /// Flows whose admission-time residual covered their rate.
    pub fn satisfied_count(&self) -> usize {
        self.satisfied.values().filter(|s| **s).count()
    }

    pub fn tl(&self) -> &LinkFlowRegistry {
        &self.tl
    }

    pub fn al(&self) -> &AffectedFlowRegistry {
        &self.al
    }

    /// Snapshot of every active flow with its currently programmed path,
    /// the input telemetry works from.
    pub fn route_view(&self) -> RouteView {
        self.demands
            .iter()
            .filter_map(|(id, d)| {
                self.current_path(*id)
                    .map(|p| (*id, (d.clone(), p.clone())))
            })
            .collect()
    }
}
