//! Commit-set algebra over a fork family.
//!
//! `d(R_i) = |Commits(R_i) \ Commits(R_0)|` ranks forks;
//! `U(R_i) = Commits(R_i) \ ∪_{j<i} Commits(R_j)` charges every commit to the
//! highest-ranked repository that contains it. Identity is the commit id.

use std::collections::HashMap;

use crate::exec::Execution;
use crate::model::{CommitSet, Sha};

/// Number of commits in `fork` that the origin does not have.
pub fn divergent_count(fork: &CommitSet, origin: &CommitSet) -> usize {
    fork.shas().filter(|sha| !origin.contains(sha)).count()
}

/// [`divergent_count`] for every fork.
pub fn divergent_counts(origin: &CommitSet, forks: &[&CommitSet], exec: Execution) -> Vec<usize> {
    exec.map(forks, |fork| divergent_count(fork, origin))
}

/// Display order for forks: descending divergence, ties by ascending full
/// name. Returns indices into the input slices.
pub fn ranking_order(full_names: &[&str], counts: &[usize]) -> Vec<usize> {
    assert_eq!(full_names.len(), counts.len());
    let mut order: Vec<usize> = (0..counts.len()).collect();
    order.sort_by(|&a, &b| {
        counts[b]
            .cmp(&counts[a])
            .then_with(|| full_names[a].cmp(full_names[b]))
    });
    order
}

/// `U(R_i)` for `repos` ordered origin-first, then by rank.
///
/// `U(R_0) = Commits(R_0)`. The outputs are pairwise disjoint, each is a
/// subset of its input, and together they cover the union of the inputs.
/// Records are taken from the repository a commit is charged to.
pub fn unique_commits(repos: &[&CommitSet], exec: Execution) -> Vec<CommitSet> {
    let owners = first_owners(repos);
    let indexed: Vec<(usize, &CommitSet)> = repos.iter().copied().enumerate().collect();
    exec.map(&indexed, |&(i, set)| {
        set.records()
            .filter(|r| owners.get(&r.sha) == Some(&i))
            .cloned()
            .collect()
    })
}

/// Index of the first repository, in rank order, containing each commit.
fn first_owners(repos: &[&CommitSet]) -> HashMap<Sha, usize> {
    let mut owners = HashMap::with_capacity(repos.iter().map(|r| r.len()).sum());
    for (i, set) in repos.iter().enumerate() {
        for sha in set.shas() {
            owners.entry(*sha).or_insert(i);
        }
    }
    owners
}
