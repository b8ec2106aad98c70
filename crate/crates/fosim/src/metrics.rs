//! Run-level measurement: per-flow delivery accounting, recovery timing
//! records, and the load-distribution index sampled over the run.

use serde::Serialize;

use crate::flow::{FlowId, FlowPath, LinkFlowRegistry};

/// Delivery accounting for one flow, filled in by the engine's fluid traffic
/// model and sealed by [`FlowStats::finalize`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlowStats {
    pub flow: FlowId,
    pub src: String,
    pub dst: String,
    pub rate_mbps: f64,
    /// Admission-time verdict: every link on the chosen path had residual
    /// capacity for the full rate. Best-effort flows still get routed.
    pub satisfied: bool,
    /// The path carrying traffic when the flow departed or the run ended;
    /// `None` if it was blackholed at that instant.
    pub final_path: Option<FlowPath>,
    pub delivered_mb: f64,
    pub dropped_mb: f64,
    /// Always `delivered_mb + dropped_mb` after finalize, so the accounting
    /// identity holds by construction rather than by hope.
    pub offered_mb: f64,
    pub loss_pct: f64,
}

impl FlowStats {
    pub fn new(flow: FlowId, src: &str, dst: &str, rate_mbps: f64, satisfied: bool) -> Self {
        FlowStats {
            flow,
            src: src.to_string(),
            dst: dst.to_string(),
            rate_mbps,
            satisfied,
            final_path: None,
            delivered_mb: 0.0,
            dropped_mb: 0.0,
            offered_mb: 0.0,
            loss_pct: 0.0,
        }
    }

    /// Seals the record: derives `offered_mb` and `loss_pct` from the two
    /// accumulators. A flow that never offered traffic has zero loss.
    pub fn finalize(&mut self) {
        self.offered_mb = self.delivered_mb + self.dropped_mb;
        self.loss_pct = if self.offered_mb > 0.0 {
            100.0 * self.dropped_mb / self.offered_mb
        } else {
            0.0
        };
    }
}

/// One rerouted flow inside a [`RecoveryRecord`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RerouteEntry {
    pub flow: FlowId,
    pub backup_path: String,
}

/// Timing and outcome of one handled link failure.
///
/// `rd_ms` is the full recovery delay — detection, plus the controller's
/// handling and rule-install round trip — so
/// `committed_at_ms == failed_at_ms + rd_ms` up to float association.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RecoveryRecord {
    pub link: String,
    pub failed_at_ms: f64,
    pub detected_at_ms: f64,
    pub committed_at_ms: f64,
    pub detection_ms: f64,
    pub rd_ms: f64,
    pub affected: Vec<FlowId>,
    pub blackholed: Vec<FlowId>,
    pub reroutes: Vec<RerouteEntry>,
}

/// Load-distribution index at one instant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LoadSample {
    pub time_ms: f64,
    pub load: f64,
}

/// Everything a run reports, ready for serialization.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Metrics {
    pub duration_ms: f64,
    /// Ascending by flow id.
    pub flows: Vec<FlowStats>,
    pub recoveries: Vec<RecoveryRecord>,
    pub load_series: Vec<LoadSample>,
}

/// The load-distribution index: the busiest link's registered flow count
/// over the mean count across *all* links of the topology (idle ones
/// included). 1.0 means perfectly even; an idle network reads 0 rather than
/// 0/0.
pub fn load_metric(tl: &LinkFlowRegistry, link_count: usize) -> f64 {
    if link_count == 0 {
        return 0.0;
    }
    let mut max = 0usize;
    let mut sum = 0usize;
    for (_, flows) in tl.nonempty_links() {
        max = max.max(flows.len());
        sum += flows.len();
    }
    if max == 0 {
        return 0.0;
    }
    max as f64 / (sum as f64 / link_count as f64)
}
