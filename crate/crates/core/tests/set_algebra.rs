//! The commit-set algebra against the nested-loop oracle, plus the
//! structural invariants of ranked and selected fork families.

mod common;

use std::collections::BTreeSet;
use std::num::NonZeroUsize;

use chrono::{TimeZone, Utc};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::{commit_set, hex_sorted};
use forkscope::divergence::{divergent_counts, ranking_order, unique_commits};
use forkscope::pipeline::rank_and_extract;
use forkscope::provider::ForkTreeEntry;
use forkscope::selection::select_forks;
use forkscope::{CommitSet, Execution};
use forkscope_testkit::oracle;
use forkscope_testkit::topology::{random_topology, Topology};

fn entry(name: &str, origin: bool) -> ForkTreeEntry {
    ForkTreeEntry {
        full_name: name.to_string(),
        url: format!("https://example.test/{name}"),
        clone_url: String::new(),
        parent_full_name: (!origin).then(|| "origin/project".to_string()),
        fetched_at: Utc.timestamp_opt(0, 0).unwrap(),
    }
}

fn topology(seed: u64) -> Topology {
    random_topology(&mut ChaCha8Rng::seed_from_u64(seed), 10, 500)
}

fn ranked_sets(t: &Topology) -> Vec<(ForkTreeEntry, CommitSet)> {
    t.names
        .iter()
        .zip(&t.repos)
        .enumerate()
        .map(|(i, (n, ids))| (entry(n, i == 0), commit_set(ids)))
        .collect()
}

fn check_against_oracle(t: &Topology, exec: Execution) -> Result<(), TestCaseError> {
    let expected = oracle::analyze(&t.names, &t.repos);
    let sets: Vec<CommitSet> = t.repos.iter().map(|r| commit_set(r)).collect();
    let fork_refs: Vec<&CommitSet> = sets[1..].iter().collect();
    let counts = divergent_counts(&sets[0], &fork_refs, exec);
    prop_assert_eq!(&counts, &expected.divergent);

    let names: Vec<&str> = t.names[1..].iter().map(String::as_str).collect();
    let order = ranking_order(&names, &counts);
    prop_assert_eq!(&order, &expected.order);

    let mut ordered = vec![&sets[0]];
    ordered.extend(order.iter().map(|&i| &sets[i + 1]));
    let unique = unique_commits(&ordered, exec);
    let got: Vec<Vec<String>> = unique.iter().map(hex_sorted).collect();
    prop_assert_eq!(got, expected.unique);
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn matches_oracle_in_both_modes(seed in any::<u64>()) {
        let t = topology(seed);
        check_against_oracle(&t, Execution::Sequential)?;
        check_against_oracle(&t, Execution::Parallel)?;
    }

    #[test]
    fn ranked_rows_are_disjoint_covering_subsets(seed in any::<u64>()) {
        let t = topology(seed);
        let ranked = rank_and_extract(ranked_sets(&t), Execution::default());
        let rows: Vec<_> = std::iter::once(&ranked.origin.1).chain(ranked.forks.iter().map(|(_, r)| r)).collect();

        let mut seen = BTreeSet::new();
        for row in &rows {
            let own: BTreeSet<String> = {
                let i = t.names.iter().position(|n| *n == row.full_name).unwrap();
                t.repos[i].iter().cloned().collect()
            };
            for c in &row.unique_commits {
                prop_assert!(own.contains(&c.sha.to_string()), "subset violated in {}", row.full_name);
                prop_assert!(seen.insert(c.sha), "commit {} in two rows", c.sha);
            }
        }
        let all: BTreeSet<String> = t.repos.iter().flatten().cloned().collect();
        let covered: BTreeSet<String> = seen.iter().map(|s| s.to_string()).collect();
        prop_assert_eq!(covered, all);
    }

    #[test]
    fn selection_keeps_invariants(seed in any::<u64>(), k in 1usize..12) {
        let t = topology(seed);
        let ranked = rank_and_extract(ranked_sets(&t), Execution::default());
        let non_empty = ranked.forks.iter().filter(|(_, r)| !r.unique_commits.is_empty()).count();
        let forks = ranked.forks.into_iter().map(|(_, r)| r).collect();
        let universe = select_forks(ranked.origin.1, forks, NonZeroUsize::new(k).unwrap());
        prop_assert_eq!(universe.check_invariants(), Ok(()));
        prop_assert_eq!(universe.forks.len(), non_empty.min(k));
    }

    #[test]
    fn listing_order_does_not_matter(seed in any::<u64>(), shuffle_seed in any::<u64>()) {
        let t = topology(seed);
        let mut rng = ChaCha8Rng::seed_from_u64(shuffle_seed);
        let mut shuffled = t.clone();
        for repo in &mut shuffled.repos {
            repo.shuffle(&mut rng);
        }
        // fork enumeration order must not matter either
        let mut forks: Vec<(String, Vec<String>)> = shuffled.names[1..].iter().cloned().zip(shuffled.repos[1..].iter().cloned()).collect();
        forks.shuffle(&mut rng);
        shuffled.names.truncate(1);
        shuffled.repos.truncate(1);
        for (n, r) in forks {
            shuffled.names.push(n);
            shuffled.repos.push(r);
        }
        let a = rank_and_extract(ranked_sets(&t), Execution::Sequential);
        let b = rank_and_extract(ranked_sets(&shuffled), Execution::Parallel);
        prop_assert_eq!(&a.origin.1, &b.origin.1);
        let rows = |r: &forkscope::pipeline::RankedRows| r.forks.iter().map(|(_, x)| x.clone()).collect::<Vec<_>>();
        prop_assert_eq!(rows(&a), rows(&b));
    }
}

#[test]
fn pull_request_commits_count_as_the_origins() {
    let id = |n: u8| format!("{n:02x}").repeat(20);
    // origin main: 1,2 ; origin PR head: 3 ; fork: 1,2,3,4
    let origin = vec![id(1), id(2), id(3)];
    let fork = vec![id(1), id(2), id(3), id(4)];
    let t = Topology {
        names: vec!["origin/project".into(), "a/project".into()],
        repos: vec![origin, fork],
    };
    let ranked = rank_and_extract(ranked_sets(&t), Execution::default());
    let row = &ranked.forks[0].1;
    assert_eq!(row.divergent_count, 1);
    let shas: Vec<String> = row.unique_commits.iter().map(|c| c.sha.to_string()).collect();
    assert_eq!(shas, vec![id(4)]);
}
