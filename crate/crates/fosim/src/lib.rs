//! Deterministic discrete-event simulation of a centrally controlled
//! dual-band network — wired uplinks plus a wireless mesh — with load-aware
//! routing and millisecond-scale failure recovery via pre-computed
//! priority-swapped backup paths.
//!
//! The controller keeps four cooperating pieces of state per run:
//!
//! * a [`topology::NetworkGraph`] of nodes and undirected links, each link
//!   wired or mesh, with capacity and up/down state;
//! * per-link residual-capacity telemetry ([`telemetry`]);
//! * class-biased exponential link weights ([`weights`]): cheap-but-finite
//!   wired links versus utilization-penalized mesh links in normal
//!   operation, and pure flow-count weights right after a failure;
//! * the TL/AL registries ([`flow`]) recording which flows ride which link
//!   and which flows a failed link displaced.
//!
//! Admission ([`routing`]) runs Dijkstra over the normal weights and
//! installs low-priority rules. A link failure ([`recovery`]) reroutes the
//! displaced flows one at a time over the flow-count weights — each
//! placement raising the next one's costs, which spreads them — and
//! installs the backups at *high* priority so they shadow the normal rules;
//! restoration recomputes normal routes, installs them low, and only then
//! deletes the high-priority rules (make-before-break). The [`engine`]
//! sequences all of it on a single event queue with explicit detection and
//! rule-install delays, accounts fluid traffic between events, and emits
//! [`metrics`]. [`scenario`] and [`report`] handle JSON run descriptions
//! and file artifacts; the `fosim` binary wraps them in a CLI.
//!
//! Everything is deterministic: ordered maps throughout, a seeded RNG for
//! the one optional stochastic knob (detection jitter), and total-order
//! tie-breaks in routing — identical inputs give byte-identical outputs.
//!
//! ```
//! use fosim::scenario::bundled_scenario;
//!
//! let scenario = bundled_scenario("fig2-16flows").unwrap();
//! let output = scenario.build_simulation(None).unwrap().run();
//! let satisfied = output.metrics.flows.iter().filter(|f| f.satisfied).count();
//! assert_eq!(satisfied, 16);
//! ```

pub mod controller;
pub mod engine;
pub mod flow;
pub mod metrics;
pub mod recovery;
pub mod report;
pub mod routing;
pub mod scenario;
pub mod telemetry;
pub mod topology;
pub mod weights;

pub use controller::{Controller, RuleOp};
pub use engine::{DelayModel, EventKind, RunOutput, SimEvent, Simulation};
pub use flow::{ActivePath, FlowId, FlowPath, FlowTables, TrafficDemand};
pub use metrics::Metrics;
pub use scenario::Scenario;
pub use topology::{LinkId, LinkKind, NetworkGraph, NodeId};
pub use weights::WeightParams;
