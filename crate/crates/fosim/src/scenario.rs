//! Scenario files: the JSON description of one simulation run — topology,
//! weight parameters, delay overrides, and the timed event script.
//!
//! The format is versioned (`schema_version`) and round-trips exactly:
//! `Scenario::from_json(s.to_json_string())` reproduces `s`. Validation
//! happens separately from parsing so error messages can name the violated
//! constraint rather than a JSON offset.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::{DelayModel, EventKind, Simulation};
use crate::flow::{FlowId, TrafficDemand};
use crate::topology::{LinkId, LinkKind, NetworkGraph, NodeId};
use crate::weights::WeightParams;

/// The only schema version this build reads.
pub const SCHEMA_VERSION: u32 = 1;

/// One runnable scenario, as parsed from JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub schema_version: u32,
    pub name: String,
    pub duration_ms: f64,
    /// RNG seed for the run (detection jitter); the CLI can override it.
    #[serde(default)]
    pub seed: u64,
    pub weights: WeightsSpec,
    #[serde(default)]
    pub delays: DelaySpec,
    pub topology: TopologySpec,
    #[serde(default)]
    pub events: Vec<TimedEvent>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightsSpec {
    pub q0: f64,
    pub alpha: f64,
}

/// Per-scenario overrides of the control-plane delay components; anything
/// left out keeps the [`DelayModel`] default.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DelaySpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detection_ms: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hc_ms: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hs_ms: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rtt_ms: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detection_jitter_ms: Option<f64>,
}

impl DelaySpec {
    pub fn resolve(&self) -> DelayModel {
        let d = DelayModel::default();
        DelayModel {
            detection_ms: self.detection_ms.unwrap_or(d.detection_ms),
            hc_ms: self.hc_ms.unwrap_or(d.hc_ms),
            hs_ms: self.hs_ms.unwrap_or(d.hs_ms),
            rtt_ms: self.rtt_ms.unwrap_or(d.rtt_ms),
            detection_jitter_ms: self.detection_jitter_ms.unwrap_or(d.detection_jitter_ms),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TopologySpec {
    pub nodes: Vec<String>,
    pub links: Vec<LinkSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkSpec {
    pub a: String,
    pub b: String,
    pub kind: LinkKind,
    pub capacity_mbps: f64,
    #[serde(default)]
    pub prop_delay_ms: f64,
}

/// One scripted event. Serialized with a `kind` tag next to the fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TimedEvent {
    FlowArrival {
        time_ms: f64,
        flow: u64,
        src: String,
        dst: String,
        rate_mbps: f64,
    },
    FlowDeparture {
        time_ms: f64,
        flow: u64,
    },
    LinkFail {
        time_ms: f64,
        a: String,
        b: String,
    },
    LinkRestore {
        time_ms: f64,
        a: String,
        b: String,
    },
}

impl TimedEvent {
    pub fn time_ms(&self) -> f64 {
        match self {
            TimedEvent::FlowArrival { time_ms, .. }
            | TimedEvent::FlowDeparture { time_ms, .. }
            | TimedEvent::LinkFail { time_ms, .. }
            | TimedEvent::LinkRestore { time_ms, .. } => *time_ms,
        }
    }

    fn to_engine_kind(&self) -> EventKind {
        match self {
            TimedEvent::FlowArrival {
                flow,
                src,
                dst,
                rate_mbps,
                ..
            } => EventKind::FlowArrival(TrafficDemand {
                flow_id: FlowId(*flow),
                src: NodeId::from(src.as_str()),
                dst: NodeId::from(dst.as_str()),
                rate_mbps: *rate_mbps,
            }),
            TimedEvent::FlowDeparture { flow, .. } => EventKind::FlowDeparture(FlowId(*flow)),
            TimedEvent::LinkFail { a, b, .. } => EventKind::LinkFail(LinkId::of(a, b)),
            TimedEvent::LinkRestore { a, b, .. } => EventKind::LinkRestore(LinkId::of(a, b)),
        }
    }
}

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    /// JSON syntax/shape problems; the message carries line and column.
    #[error("scenario parse error: {0}")]
    Parse(#[from] serde_json::Error),
    /// A well-formed file that violates a semantic constraint.
    #[error("invalid scenario: {0}")]
    Invalid(String),
}

fn invalid(msg: impl fmt::Display) -> ScenarioError {
    ScenarioError::Invalid(msg.to_string())
}

impl Scenario {
    /// Parses and validates a scenario from a JSON string.
    pub fn from_json(text: &str) -> Result<Self, ScenarioError> {
        let scenario: Scenario = serde_json::from_str(text)?;
        scenario.validate()?;
        Ok(scenario)
    }

    /// Parses and validates a scenario file.
    pub fn from_path(path: impl AsRef<Path>) -> Result<Self, ScenarioError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json(&text)
    }

    /// Pretty-printed JSON that parses back to an equal scenario.
    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serialization cannot fail")
    }

    pub fn weight_params(&self) -> Result<WeightParams, ScenarioError> {
        WeightParams::new(self.weights.q0, self.weights.alpha).map_err(invalid)
    }

    pub fn delay_model(&self) -> DelayModel {
        self.delays.resolve()
    }

    /// Builds the network graph described by the topology section.
    pub fn build_graph(&self) -> Result<NetworkGraph, ScenarioError> {
        let mut graph = NetworkGraph::new();
        for node in &self.topology.nodes {
            graph.add_node(NodeId::from(node.as_str())).map_err(invalid)?;
        }
        for link in &self.topology.links {
            graph
                .add_link(
                    NodeId::from(link.a.as_str()),
                    NodeId::from(link.b.as_str()),
                    link.kind,
                    link.capacity_mbps,
                    link.prop_delay_ms,
                )
                .map_err(invalid)?;
        }
        Ok(graph)
    }

    /// Checks every semantic constraint, reporting the first violation by
    /// name. Parsing alone does not run this; [`Scenario::from_json`] does.
    pub fn validate(&self) -> Result<(), ScenarioError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(invalid(format!(
                "schema_version must be {SCHEMA_VERSION}, got {}",
                self.schema_version
            )));
        }
        if !(self.duration_ms.is_finite() && self.duration_ms >= 0.0) {
            return Err(invalid(format!(
                "duration_ms must be finite and >= 0, got {}",
                self.duration_ms
            )));
        }
        self.weight_params()?;
        let d = self.delay_model();
        for (name, v) in [
            ("detection_ms", d.detection_ms),
            ("hc_ms", d.hc_ms),
            ("hs_ms", d.hs_ms),
            ("rtt_ms", d.rtt_ms),
            ("detection_jitter_ms", d.detection_jitter_ms),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(invalid(format!("delays.{name} must be finite and >= 0, got {v}")));
            }
        }
        let graph = self.build_graph()?;
        let mut arrivals: std::collections::BTreeMap<u64, f64> = std::collections::BTreeMap::new();
        for event in &self.events {
            let t = event.time_ms();
            if !(t.is_finite() && t >= 0.0 && t <= self.duration_ms) {
                return Err(invalid(format!(
                    "event time {t} ms outside [0, {}]",
                    self.duration_ms
                )));
            }
            match event {
                TimedEvent::FlowArrival {
                    flow,
                    src,
                    dst,
                    rate_mbps,
                    time_ms,
                } => {
                    for node in [src, dst] {
                        if !graph.contains_node(&NodeId::from(node.as_str())) {
                            return Err(invalid(format!(
                                "flow_arrival {flow} references undeclared node {node}"
                            )));
                        }
                    }
                    if src == dst {
                        return Err(invalid(format!(
                            "flow_arrival {flow} has src = dst = {src}"
                        )));
                    }
                    if !(rate_mbps.is_finite() && *rate_mbps > 0.0) {
                        return Err(invalid(format!(
                            "flow_arrival {flow} rate_mbps must be positive, got {rate_mbps}"
                        )));
                    }
                    if arrivals.insert(*flow, *time_ms).is_some() {
                        return Err(invalid(format!("flow {flow} arrives more than once")));
                    }
                }
                TimedEvent::FlowDeparture { flow, time_ms } => {
                    let Some(arrived_at) = arrivals.get(flow) else {
                        return Err(invalid(format!(
                            "flow_departure for flow {flow} without a prior arrival"
                        )));
                    };
                    if time_ms < arrived_at {
                        return Err(invalid(format!(
                            "flow {flow} departs at {time_ms} ms before arriving at {arrived_at} ms"
                        )));
                    }
                }
                TimedEvent::LinkFail { a, b, .. } | TimedEvent::LinkRestore { a, b, .. } => {
                    let link = LinkId::of(a, b);
                    if graph.link(&link).is_none() {
                        return Err(invalid(format!(
                            "link event references undeclared link {link}"
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// Builds a ready-to-run simulation with all scripted events queued.
    /// `seed_override` takes precedence over the scenario's own seed.
    pub fn build_simulation(&self, seed_override: Option<u64>) -> Result<Simulation, ScenarioError> {
        self.validate()?;
        let graph = self.build_graph()?;
        let params = self.weight_params()?;
        let mut sim = Simulation::new(
            graph,
            params,
            self.delay_model(),
            self.duration_ms,
            seed_override.unwrap_or(self.seed),
        );
        // File order is the tie-break order for simultaneous events.
        for event in &self.events {
            sim.schedule(event.time_ms(), event.to_engine_kind());
        }
        Ok(sim)
    }
}

/// The scenarios compiled into the library, as `(name, json)` pairs:
/// the sixteen-flow admission run, the twelve-flow wired-failure run, and
/// the two single-flow failure cases (wired and mesh).
pub fn bundled() -> Vec<(&'static str, &'static str)> {
    vec![
        (
            "fig2-16flows",
            include_str!("../../../scenarios/fig2-16flows.json"),
        ),
        (
            "fig2-12flows-fail",
            include_str!("../../../scenarios/fig2-12flows-fail.json"),
        ),
        (
            "single-flow-fail-wired",
            include_str!("../../../scenarios/single-flow-fail-wired.json"),
        ),
        (
            "single-flow-fail-mesh",
            include_str!("../../../scenarios/single-flow-fail-mesh.json"),
        ),
    ]
}

/// Parses one bundled scenario by name.
pub fn bundled_scenario(name: &str) -> Option<Scenario> {
    bundled()
        .into_iter()
        .find(|(n, _)| *n == name)
        .map(|(_, json)| Scenario::from_json(json).expect("bundled scenarios are valid"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_sixteen_flow_scenario_parses() {
        let s = bundled_scenario("fig2-16flows").unwrap();
        assert_eq!(s.schema_version, 1);
        assert_eq!(s.topology.nodes.len(), 6);
        assert_eq!(s.topology.links.len(), 15);
        let wired = s
            .topology
            .links
            .iter()
            .filter(|l| l.kind == LinkKind::Wired)
            .count();
        assert_eq!(wired, 5);
        let arrivals: Vec<f64> = s
            .events
            .iter()
            .filter_map(|e| match e {
                TimedEvent::FlowArrival { rate_mbps, .. } => Some(*rate_mbps),
                _ => None,
            })
            .collect();
        assert_eq!(arrivals.len(), 16);
        assert!(arrivals.iter().all(|r| *r == 20.0));
    }

    #[test]
    fn every_bundled_scenario_validates_and_round_trips() {
        for (name, json) in bundled() {
            let s = Scenario::from_json(json).unwrap_or_else(|e| panic!("{name}: {e}"));
            let again = Scenario::from_json(&s.to_json_string()).unwrap();
            assert_eq!(s, again, "{name} must round-trip");
        }
    }

    fn base() -> Scenario {
        bundled_scenario("single-flow-fail-wired").unwrap()
    }

    #[test]
    fn q0_outside_the_open_interval_is_rejected_by_name() {
        let mut s = base();
        s.weights.q0 = 0.6;
        let err = s.validate().unwrap_err().to_string();
        assert!(err.contains("2*q0"), "constraint must be named: {err}");
    }

    #[test]
    fn undeclared_node_in_an_event_is_rejected() {
        let mut s = base();
        s.events.push(TimedEvent::FlowArrival {
            time_ms: 0.0,
            flow: 99,
            src: "AP1".into(),
            dst: "AP9".into(),
            rate_mbps: 5.0,
        });
        let err = s.validate().unwrap_err().to_string();
        assert!(err.contains("undeclared node AP9"), "{err}");
    }

    #[test]
    fn undeclared_link_in_an_event_is_rejected() {
        let mut s = base();
        s.events.push(TimedEvent::LinkFail {
            time_ms: 10.0,
            a: "GW".into(),
            b: "GW2".into(),
        });
        let err = s.validate().unwrap_err().to_string();
        assert!(err.contains("undeclared link"), "{err}");
    }

    #[test]
    fn departure_without_arrival_is_rejected() {
        let mut s = base();
        s.events.push(TimedEvent::FlowDeparture {
            time_ms: 100.0,
            flow: 42,
        });
        let err = s.validate().unwrap_err().to_string();
        assert!(err.contains("without a prior arrival"), "{err}");
    }

    #[test]
    fn event_beyond_the_duration_is_rejected() {
        let mut s = base();
        s.events.push(TimedEvent::FlowDeparture {
            time_ms: 30_001.0,
            flow: 1,
        });
        let err = s.validate().unwrap_err().to_string();
        assert!(err.contains("outside [0, 30000]"), "{err}");
    }

    #[test]
    fn duplicate_arrival_is_rejected() {
        let mut s = base();
        s.events.push(TimedEvent::FlowArrival {
            time_ms: 5.0,
            flow: 1,
            src: "AP1".into(),
            dst: "AP2".into(),
            rate_mbps: 5.0,
        });
        let err = s.validate().unwrap_err().to_string();
        assert!(err.contains("arrives more than once"), "{err}");
    }

    #[test]
    fn missing_delays_fall_back_to_defaults() {
        let s = base();
        assert_eq!(s.delay_model(), DelayModel::default());
        let with_override = DelaySpec {
            detection_ms: Some(10.0),
            ..DelaySpec::default()
        };
        let d = with_override.resolve();
        assert_eq!(d.detection_ms, 10.0);
        assert_eq!(d.hc_ms, DelayModel::default().hc_ms);
    }

    #[test]
    fn parse_errors_carry_location() {
        let err = Scenario::from_json("{ \"schema_version\": }").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("line"), "json errors should locate themselves: {msg}");
    }

    #[test]
    fn wrong_schema_version_is_rejected() {
        let mut s = base();
        s.schema_version = 2;
        let err = s.validate().unwrap_err().to_string();
        assert!(err.contains("schema_version"), "{err}");
    }
}
