//! The guide from `book/`, attached chapter by chapter to empty modules so
//! that every code block in the book compiles and runs under
//! `cargo test -p fosim-guide`. If a chapter drifts from the library, the
//! doctests break — the book cannot silently go stale.
//!
//! Render the same sources as a website with `mdbook build book`.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/network-model.md")]
pub mod network_model {}

#[doc = include_str!("../../../book/src/link-weights.md")]
pub mod link_weights {}

#[doc = include_str!("../../../book/src/routing.md")]
pub mod routing {}

#[doc = include_str!("../../../book/src/failure-recovery.md")]
pub mod failure_recovery {}

#[doc = include_str!("../../../book/src/simulation.md")]
pub mod simulation {}

#[doc = include_str!("../../../book/src/scenarios-and-cli.md")]
pub mod scenarios_and_cli {}
