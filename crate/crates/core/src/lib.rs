//! Truss topology optimization on ground structures with a firefly swarm
//! whose moves can be gated by per-pair t-tests on past collaboration success.
//!
//! The pipeline runs from a design vector through [`topology::decode`],
//! [`topology::remove_unwanted_elements`] and [`fea::analyze`] to the
//! penalized weight of [`objective::evaluate`]. [`firefly::run`] drives the
//! swarm with any [`firefly::MoveGate`]; [`gating::CollaborationLedger`] is
//! the statistical gate and [`firefly::run_fa`] the ungated baseline.

pub mod bench;
pub mod cli;
pub mod fea;
pub mod firefly;
pub mod gating;
pub mod objective;
pub mod topology;
