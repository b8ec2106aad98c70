//! Link weights: the exponential load-aware cost for the normal state and
//! the flow-count cost used while placing backup paths after a failure.
//!
//! Normal state (per link, with `u = (C − R)/C` the utilization):
//!
//! ```text
//! W  = Q_b · exp(α · u)          Q_0 for wired links, Q_1 for mesh links
//! ```
//!
//! Post-recovery placement:
//!
//! ```text
//! W′ = exp(|TL|)                 |TL| = flows registered on the link
//! ```
//!
//! A down link carries `+∞` in both maps so the router can never choose it.
//! The parameters are constrained to `0 < 2·q0 < 1`, `q0 + q1 = 1`, `α > 0`:
//! a cheap wired class plus a convex penalty is what pushes early flows onto
//! the Ethernet uplinks and spreads later flows over the mesh.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::flow::LinkFlowRegistry;
use crate::telemetry::LinkLoadSample;
use crate::topology::{LinkId, LinkKind, NetworkGraph};

/// Default weight exponent α.
pub const DEFAULT_ALPHA: f64 = 10.0;
/// Default wired-class multiplier Q₀.
pub const DEFAULT_Q0: f64 = 0.1;

/// The (Q₀, Q₁, α) parameter set of the normal-state weight function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightParams {
    pub q0: f64,
    pub q1: f64,
    pub alpha: f64,
}

impl Default for WeightParams {
    fn default() -> Self {
        WeightParams::new(DEFAULT_Q0, DEFAULT_ALPHA).expect("defaults are valid")
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum WeightError {
    #[error("weight params must satisfy 0 < 2*q0 < 1, got q0 = {0}")]
    Q0Range(f64),
    #[error("weight params must satisfy q0 + q1 = 1, got q0 = {0}, q1 = {1}")]
    QSum(f64, f64),
    #[error("weight params must satisfy alpha > 0, got {0}")]
    AlphaRange(f64),
    #[error("normal weight undefined on zero-capacity link {0} (use +inf for down links)")]
    ZeroCapacity(LinkId),
}

impl WeightParams {
    /// Builds params with `q1 = 1 − q0` and validates the constraints.
    pub fn new(q0: f64, alpha: f64) -> Result<Self, WeightError> {
        let p = WeightParams {
            q0,
            q1: 1.0 - q0,
            alpha,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), WeightError> {
        if !(self.q0 > 0.0 && 2.0 * self.q0 < 1.0) {
            return Err(WeightError::Q0Range(self.q0));
        }
        if self.q0 + self.q1 != 1.0 {
            return Err(WeightError::QSum(self.q0, self.q1));
        }
        if !(self.alpha > 0.0) {
            return Err(WeightError::AlphaRange(self.alpha));
        }
        Ok(())
    }

    /// The class multiplier: Q₀ for wired links, Q₁ for mesh links.
    pub fn q_for(&self, kind: LinkKind) -> f64 {
        match kind {
            LinkKind::Wired => self.q0,
            LinkKind::WirelessMesh => self.q1,
        }
    }
}

/// Which weight rule to apply when refreshing.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeightMode {
    /// Network start: every link weighs its bare class multiplier Q_b.
    Init,
    /// Normal operation: the utilization-driven exponential cost.
    Normal,
    /// Backup-path placement after a failure: the flow-count cost.
    PostRecovery,
}

/// Per-link weights for both states. Down links carry `+∞` in both maps.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LinkWeights {
    by_link: BTreeMap<LinkId, f64>,
}

impl LinkWeights {
    /// Builds a weight table directly from a map. Mostly useful in tests;
    /// production code goes through [`refresh_weights`].
    pub fn from_map(by_link: BTreeMap<LinkId, f64>) -> Self {
        LinkWeights { by_link }
    }

    /// Weight of a link; `+∞` for links absent from the map.
    pub fn get(&self, link: &LinkId) -> f64 {
        self.by_link.get(link).copied().unwrap_or(f64::INFINITY)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&LinkId, f64)> {
        self.by_link.iter().map(|(l, w)| (l, *w))
    }
}

/// Normal-state weight of one up link: `Q_b · exp(α·(C−R)/C)`.
///
/// `capacity` must be the effective (up) capacity; zero capacity is an error
/// because the caller is expected to pin down links at `+∞` instead.
pub fn normal_weight(
    params: &WeightParams,
    kind: LinkKind,
    link: &LinkId,
    capacity_mbps: f64,
    residual_mbps: f64,
) -> Result<f64, WeightError> {
    if capacity_mbps <= 0.0 {
        return Err(WeightError::ZeroCapacity(link.clone()));
    }
    let utilization = (capacity_mbps - residual_mbps) / capacity_mbps;
    Ok(params.q_for(kind) * (params.alpha * utilization).exp())
}

/// Post-recovery weight of one up link: `exp(|TL|)`.
pub fn recovery_weight(flow_count: usize) -> f64 {
    (flow_count as f64).exp()
}

/// Computes the full weight map for the requested mode.
///
/// * `Init` ignores both inputs and assigns bare class multipliers.
/// * `Normal` reads residuals from `telemetry` (Eq-1 style exponential).
/// * `PostRecovery` reads flow counts from the `tl` registry.
///
/// Down links get `+∞` in every mode.
pub fn refresh_weights(
    mode: WeightMode,
    params: &WeightParams,
    graph: &NetworkGraph,
    telemetry: &BTreeMap<LinkId, LinkLoadSample>,
    tl: &LinkFlowRegistry,
) -> LinkWeights {
    let mut by_link = BTreeMap::new();
    for (id, link) in graph.links() {
        let w = if !link.up {
            f64::INFINITY
        } else {
            match mode {
                WeightMode::Init => params.q_for(link.kind),
                WeightMode::Normal => {
                    let residual = telemetry
                        .get(id)
                        .map(|s| s.r_mbps)
                        .unwrap_or(link.capacity_mbps);
                    normal_weight(params, link.kind, id, link.capacity_mbps, residual)
                        .expect("up link has positive capacity")
                }
                WeightMode::PostRecovery => recovery_weight(tl.count_on(id)),
            }
        };
        by_link.insert(id.clone(), w);
    }
    LinkWeights { by_link }
}
