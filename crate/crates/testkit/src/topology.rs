//! Random fork families for property tests.

use rand::seq::SliceRandom;
use rand::Rng;

/// A generated family: `names[0]`/`repos[0]` is the origin. Each repository
/// lists commit ids (40 lowercase hex characters) in shuffled order.
#[derive(Debug, Clone)]
pub struct Topology {
    pub names: Vec<String>,
    pub repos: Vec<Vec<String>>,
}

pub fn random_sha<R: Rng>(rng: &mut R) -> String {
    let bytes: [u8; 20] = rng.random();
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Up to `max_repos` repositories (origin included) of up to `max_commits`
/// commits each. Forks copy part of a random earlier repository, add their
/// own commits and occasionally pick up commits of unrelated repositories,
/// so sharing happens across and within branches of the tree.
pub fn random_topology<R: Rng>(rng: &mut R, max_repos: usize, max_commits: usize) -> Topology {
    let repo_count = rng.random_range(1..=max_repos.max(1));
    let mut repos: Vec<Vec<String>> = Vec::with_capacity(repo_count);
    let mut names = Vec::with_capacity(repo_count);

    let origin_len = rng.random_range(0..=max_commits);
    repos.push((0..origin_len).map(|_| random_sha(rng)).collect());
    names.push("origin/project".to_string());

    for i in 1..repo_count {
        let parent = rng.random_range(0..i);
        let mut commits: Vec<String> = Vec::new();
        let inherited = rng.random_range(0..=repos[parent].len());
        let mut parent_commits = repos[parent].clone();
        parent_commits.shuffle(rng);
        commits.extend(parent_commits.into_iter().take(inherited));

        if rng.random_bool(0.3) {
            let other = rng.random_range(0..i);
            let take = rng.random_range(0..=repos[other].len().min(20));
            commits.extend(repos[other].iter().take(take).cloned());
        }
        let own = if rng.random_bool(0.25) { 0 } else { rng.random_range(0..=60) };
        commits.extend((0..own).map(|_| random_sha(rng)));
        if rng.random_bool(0.1) && !commits.is_empty() {
            let dup = commits[rng.random_range(0..commits.len())].clone();
            commits.push(dup);
        }
        commits.shuffle(rng);
        commits.truncate(max_commits);
        repos.push(commits);

        // Names collide in rank ties on purpose: short owner alphabet.
        let owner: String = (0..rng.random_range(1..=3))
            .map(|_| (b'a' + rng.random_range(0..6u8)) as char)
            .collect();
        let mut name = format!("{owner}/project");
        if names.contains(&name) {
            name = format!("{owner}{i}/project");
        }
        names.push(name);
    }
    Topology { names, repos }
}
