//! End-to-end analysis: enumerate, fetch, rank, extract unique commits,
//! select, window, measure, and package the artifact.

use std::num::NonZeroUsize;

use chrono::{DateTime, NaiveDate, Utc};
use thiserror::Error;

use crate::artifact::AnalysisArtifact;
use crate::divergence::{divergent_counts, ranking_order, unique_commits};
use crate::exec::Execution;
use crate::model::{CommitSet, ForkUniverse, RepoAnalysis, RepoId};
use crate::provider::{ForkTreeEntry, ProviderError, RepoProvider};
use crate::selection::{exclude_merges, select_forks, DEFAULT_TOP_K};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Provider(#[from] ProviderError),
    #[error("could not fetch {} repositories: {}", .0.len(), .0.join("; "))]
    PartialFetch(Vec<String>),
}

impl PipelineError {
    /// Process exit code for the command line.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Provider(ProviderError::OriginNotFound(_)) => 2,
            PipelineError::Provider(ProviderError::RateLimited { .. }) => 3,
            PipelineError::Provider(ProviderError::OfflineCacheMiss(_)) => 4,
            PipelineError::PartialFetch(_) => 5,
            PipelineError::Provider(_) => 1,
        }
    }
}

#[derive(Debug, Clone)]
pub struct AnalyzeOptions {
    pub origin: RepoId,
    pub top_k: NonZeroUsize,
    /// Commits before this UTC date are not displayed. Ranking ignores it.
    pub since: Option<NaiveDate>,
    pub allow_partial: bool,
    /// Fixed `generated_at`, for reproducible output.
    pub generated_at: Option<DateTime<Utc>>,
    pub execution: Execution,
}

impl AnalyzeOptions {
    pub fn new(origin: RepoId) -> Self {
        AnalyzeOptions {
            origin,
            top_k: NonZeroUsize::new(DEFAULT_TOP_K).expect("nonzero"),
            since: None,
            allow_partial: false,
            generated_at: None,
            execution: Execution::default(),
        }
    }
}

/// Counts reported alongside the artifact.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AnalysisStats {
    /// Forks found by enumeration (origin excluded).
    pub forks_enumerated: usize,
    /// Forks whose commits were fetched.
    pub forks_fetched: usize,
    /// Forks with at least one unique non-merge commit.
    pub forks_with_unique: usize,
    /// Fork rows in the artifact.
    pub forks_shown: usize,
}

#[derive(Debug, Clone)]
pub struct AnalysisReport {
    pub artifact: AnalysisArtifact,
    pub universe: ForkUniverse,
    pub stats: AnalysisStats,
}

/// Ranked rows before selection: origin first, then forks by descending
/// divergence. Fork rows may be empty.
#[derive(Debug, Clone)]
pub struct RankedRows {
    pub origin: (ForkTreeEntry, RepoAnalysis),
    pub forks: Vec<(ForkTreeEntry, RepoAnalysis)>,
}

/// Applies `d`, the ranking and `U` to fetched commit sets.
///
/// `origin` must be the first element of `sets`.
pub fn rank_and_extract(sets: Vec<(ForkTreeEntry, CommitSet)>, exec: Execution) -> RankedRows {
    let mut sets = sets.into_iter();
    let (origin_entry, origin_set) = sets.next().expect("origin commit set");
    let forks: Vec<(ForkTreeEntry, CommitSet)> = sets.collect();

    let fork_refs: Vec<&CommitSet> = forks.iter().map(|(_, s)| s).collect();
    let counts = divergent_counts(&origin_set, &fork_refs, exec);
    let names: Vec<&str> = forks.iter().map(|(e, _)| e.full_name.as_str()).collect();
    let order = ranking_order(&names, &counts);

    let mut ordered_sets: Vec<&CommitSet> = vec![&origin_set];
    ordered_sets.extend(order.iter().map(|&i| &forks[i].1));
    let mut unique = unique_commits(&ordered_sets, exec).into_iter();

    let row = |entry: &ForkTreeEntry, d: usize, set: CommitSet| {
        RepoAnalysis::new(&entry.repo_id(), entry.url.clone(), d, exclude_merges(set.into_records()))
    };
    let origin_row = row(&origin_entry, 0, unique.next().expect("origin row"));
    let fork_rows = order
        .iter()
        .zip(unique)
        .map(|(&i, set)| {
            let entry = forks[i].0.clone();
            let r = row(&entry, counts[i], set);
            (entry, r)
        })
        .collect();
    RankedRows {
        origin: (origin_entry, origin_row),
        forks: fork_rows,
    }
}

/// Runs the whole analysis against `provider`.
pub fn analyze(provider: &RepoProvider, opts: &AnalyzeOptions) -> Result<AnalysisReport, PipelineError> {
    let exec = opts.execution;
    let tree = provider.enumerate_forks(&opts.origin)?;
    let mut warnings = tree.warnings.clone();

    let mut entries = vec![tree.origin.clone()];
    entries.extend(tree.forks.iter().cloned());
    let fetched = provider.fetch_commit_sets(&entries)?;
    if !fetched.failures.is_empty() {
        let failed: Vec<String> = fetched
            .failures
            .iter()
            .map(|(name, reason)| format!("{name}: {reason}"))
            .collect();
        if !opts.allow_partial {
            return Err(PipelineError::PartialFetch(failed));
        }
        warnings.extend(failed.into_iter().map(|f| format!("fetch failed, repository skipped: {f}")));
    }
    let forks_fetched = fetched.sets.len() - 1;

    let ranked = rank_and_extract(fetched.sets, exec);
    let forks_with_unique = ranked
        .forks
        .iter()
        .filter(|(_, r)| !r.unique_commits.is_empty())
        .count();

    let (origin_entry, origin_row) = ranked.origin;
    let entries_by_name: std::collections::HashMap<String, ForkTreeEntry> = ranked
        .forks
        .iter()
        .map(|(e, r)| (r.full_name.clone(), e.clone()))
        .collect();
    let fork_rows: Vec<RepoAnalysis> = ranked.forks.into_iter().map(|(_, r)| r).collect();
    let mut universe = select_forks(origin_row, fork_rows, opts.top_k);

    if let Some(since) = opts.since {
        let start = since.and_hms_opt(0, 0, 0).expect("midnight").and_utc();
        let before = universe.forks.len();
        for row in std::iter::once(&mut universe.origin).chain(universe.forks.iter_mut()) {
            row.unique_commits.retain(|c| c.timestamp >= start);
            row.normalize();
        }
        universe.forks.retain(|f| !f.unique_commits.is_empty());
        let hidden = before - universe.forks.len();
        if hidden > 0 {
            warnings.push(format!(
                "{hidden} selected forks have no commits since {since} and are not shown"
            ));
        }
    }

    let mut jobs: Vec<(ForkTreeEntry, Vec<_>)> = vec![(origin_entry, std::mem::take(&mut universe.origin.unique_commits))];
    for row in &mut universe.forks {
        let entry = entries_by_name[&row.full_name].clone();
        jobs.push((entry, std::mem::take(&mut row.unique_commits)));
    }
    let measured = exec.map_bounded(&jobs, provider.config().max_parallel_fetches, |(entry, commits)| {
        provider.measure_change_sizes(entry, commits.clone())
    });
    let mut measured = measured.into_iter();
    let rows = std::iter::once(&mut universe.origin).chain(universe.forks.iter_mut());
    for (row, m) in rows.zip(&mut measured) {
        row.unique_commits = m.commits;
        row.normalize();
        warnings.extend(m.warnings);
    }
    debug_assert_eq!(universe.check_invariants(), Ok(()));

    let generated_at = opts.generated_at.unwrap_or_else(Utc::now);
    let artifact = AnalysisArtifact::from_universe(&universe, generated_at, warnings);
    let stats = AnalysisStats {
        forks_enumerated: tree.forks.len(),
        forks_fetched,
        forks_with_unique,
        forks_shown: universe.forks.len(),
    };
    Ok(AnalysisReport {
        artifact,
        universe,
        stats,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{CommitRecord, Sha};
    use chrono::TimeZone;

    fn entry(name: &str, parent: Option<&str>) -> ForkTreeEntry {
        ForkTreeEntry {
            full_name: name.to_string(),
            url: format!("https://gh.test/{name}"),
            clone_url: String::new(),
            parent_full_name: parent.map(str::to_string),
            fetched_at: Utc.timestamp_opt(0, 0).unwrap(),
        }
    }

    fn set(ids: &[(u8, usize)]) -> CommitSet {
        ids.iter()
            .map(|&(n, parents)| {
                CommitRecord::new(
                    Sha::from_bytes([n; 20]),
                    Utc.timestamp_opt(1000 - n as i64, 0).unwrap(),
                    format!("c{n}"),
                    parents,
                    "",
                )
            })
            .collect()
    }

    #[test]
    fn ranks_extracts_and_drops_merges() {
        let sets = vec![
            (entry("o/r", None), set(&[(1, 0), (2, 1)])),
            (entry("b/r", Some("o/r")), set(&[(1, 0), (2, 1), (5, 1)])),
            (entry("a/r", Some("o/r")), set(&[(1, 0), (2, 1), (5, 1), (6, 2), (7, 1)])),
            (entry("c/r", Some("o/r")), set(&[(1, 0)])),
        ];
        let ranked = rank_and_extract(sets, Execution::default());
        let names: Vec<_> = ranked.forks.iter().map(|(e, _)| e.full_name.as_str()).collect();
        assert_eq!(names, vec!["a/r", "b/r", "c/r"]);
        let a = &ranked.forks[0].1;
        assert_eq!(a.divergent_count, 3);
        // merge commit 6 is charged to a/r but not listed
        let ids: Vec<u8> = a.unique_commits.iter().map(|c| c.sha.as_bytes()[0]).collect();
        assert_eq!(ids, vec![7, 5]);
        assert!(ranked.forks[1].1.unique_commits.is_empty());
        assert_eq!(ranked.origin.1.unique_commits.len(), 2);
        assert_eq!(
            a.unique_commits[0].url,
            "",
            "rows keep the urls the provider assigned"
        );
    }

    #[test]
    fn exit_codes() {
        let code = |e: ProviderError| PipelineError::Provider(e).exit_code();
        assert_eq!(code(ProviderError::OriginNotFound("x".into())), 2);
        assert_eq!(code(ProviderError::RateLimited { reset: None }), 3);
        assert_eq!(code(ProviderError::OfflineCacheMiss("x".into())), 4);
        assert_eq!(PipelineError::PartialFetch(vec![]).exit_code(), 5);
        assert_eq!(code(ProviderError::Git("x".into())), 1);
    }
}
