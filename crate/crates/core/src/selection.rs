//! Choosing which forks become rows of the view.

use std::num::NonZeroUsize;

use crate::model::{CommitRecord, ForkUniverse, RepoAnalysis};

/// Default number of fork rows.
pub const DEFAULT_TOP_K: usize = 10;

/// Drops merge commits, keeping order.
pub fn exclude_merges(commits: Vec<CommitRecord>) -> Vec<CommitRecord> {
    commits.into_iter().filter(|c| !c.is_merge).collect()
}

/// Keeps the `top_k` most divergent forks that still have unique commits.
///
/// Forks are (re)ordered by descending `divergent_count`, ties broken by
/// ascending `full_name`; forks with no unique commits are dropped before the
/// cut. The origin is always retained.
pub fn select_forks(
    origin: RepoAnalysis,
    forks: Vec<RepoAnalysis>,
    top_k: NonZeroUsize,
) -> ForkUniverse {
    let mut forks: Vec<RepoAnalysis> = forks
        .into_iter()
        .filter(|f| !f.unique_commits.is_empty())
        .collect();
    forks.sort_by(|a, b| {
        b.divergent_count
            .cmp(&a.divergent_count)
            .then_with(|| a.full_name.cmp(&b.full_name))
    });
    forks.truncate(top_k.get());
    ForkUniverse { origin, forks }
}
