//! Finds the forks of a repository that carry commits the origin never
//! merged, flags likely bug fixes among them, and packages the result as a
//! JSON artifact plus a static bubble-chart viewer.
//!
//! The analysis is pure set algebra over commit ids:
//!
//! * [`divergence::divergent_count`] ranks each fork by the commits it has
//!   that the origin lacks (pull-request refs of the origin count as the
//!   origin's, so contributions sent upstream do not count as divergence);
//! * [`divergence::unique_commits`] charges every commit to the most
//!   divergent repository holding it;
//! * [`selection::select_forks`] keeps the top forks with something unique.
//!
//! [`provider`] does the I/O and [`pipeline::analyze`] ties it together.

pub mod artifact;
pub mod classify;
pub mod divergence;
pub mod exec;
pub mod model;
pub mod pipeline;
pub mod provider;
pub mod render;
pub mod scale;
pub mod selection;

pub use artifact::AnalysisArtifact;
pub use classify::classify_bugfix;
pub use exec::Execution;
pub use model::{CommitRecord, CommitSet, ForkUniverse, RepoAnalysis, RepoId, Sha};
pub use pipeline::{analyze, AnalysisReport, AnalyzeOptions, PipelineError};
pub use provider::{ProviderConfig, ProviderError, RepoProvider};
pub use scale::bubble_radius;
