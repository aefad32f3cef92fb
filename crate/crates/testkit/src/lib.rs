//! Test support for forkscope: brute-force oracles, random fork topologies,
//! scripted git fixtures and recorded-API snapshots.
//!
//! Nothing here depends on `forkscope-core`; the oracles are deliberately
//! naive so they stay independent of the implementation they check.

pub mod classifier;
pub mod gitfix;
pub mod oracle;
pub mod snapshot;
pub mod topology;
