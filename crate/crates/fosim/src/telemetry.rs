//! Per-link traffic load (TR) and residual bandwidth (R).
//!
//! Loads are computed analytically from the routes the controller believes
//! are in effect — no sampling, no noise — which keeps every run
//! reproducible. The residual is clamped at zero when a link is
//! oversubscribed so that downstream weight math stays finite.

use std::collections::BTreeMap;

use crate::flow::{FlowId, FlowPath, TrafficDemand};
use crate::topology::{LinkId, NetworkGraph};

/// TR/R measurement for one link, in Mbps.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LinkLoadSample {
    /// Offered traffic across the link (both directions pooled).
    pub tr_mbps: f64,
    /// Residual bandwidth: effective capacity minus TR, floored at zero.
    pub r_mbps: f64,
}

/// Routes as the controller sees them: each active flow with its demand and
/// the path it is currently programmed to use.
pub type RouteView = BTreeMap<FlowId, (TrafficDemand, FlowPath)>;

/// Sums per-link offered load over the given routes and derives residuals.
/// Every graph link gets a sample, including idle and down links.
pub fn measure_loads(graph: &NetworkGraph, routes: &RouteView) -> BTreeMap<LinkId, LinkLoadSample> {
    let mut samples: BTreeMap<LinkId, LinkLoadSample> = graph
        .links()
        .map(|(id, _)| (id.clone(), LinkLoadSample::default()))
        .collect();
    for (demand, path) in routes.values() {
        for link in path.links() {
            if let Some(s) = samples.get_mut(&link) {
                s.tr_mbps += demand.rate_mbps;
            }
        }
    }
    refresh_residuals(graph, &mut samples);
    samples
}

/// Recomputes `r = max(0, effective_capacity − tr)` for every sample.
/// Idempotent: running it twice changes nothing.
pub fn refresh_residuals(graph: &NetworkGraph, samples: &mut BTreeMap<LinkId, LinkLoadSample>) {
    for (id, s) in samples.iter_mut() {
        let cap = graph.effective_capacity(id).unwrap_or(0.0);
        s.r_mbps = (cap - s.tr_mbps).max(0.0);
    }
}
