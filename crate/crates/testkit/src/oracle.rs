//! Nested-loop reference implementations of the commit-set formulas.
//!
//! Commits are plain id strings; sets are lists that may contain duplicates
//! and come in any order.

/// `|fork \ origin|`, counting each distinct id of `fork` once.
pub fn divergent_count(fork: &[String], origin: &[String]) -> usize {
    let mut count = 0;
    for (i, c) in fork.iter().enumerate() {
        let mut duplicate = false;
        for earlier in &fork[..i] {
            if earlier == c {
                duplicate = true;
                break;
            }
        }
        if duplicate {
            continue;
        }
        let mut in_origin = false;
        for o in origin {
            if o == c {
                in_origin = true;
                break;
            }
        }
        if !in_origin {
            count += 1;
        }
    }
    count
}

/// `U(R_i) = R_i \ (R_0 ∪ … ∪ R_{i-1})` for repositories already in rank
/// order. Each output is sorted and duplicate-free.
pub fn unique_commits(repos: &[Vec<String>]) -> Vec<Vec<String>> {
    let mut out = Vec::with_capacity(repos.len());
    for (i, repo) in repos.iter().enumerate() {
        let mut unique: Vec<String> = Vec::new();
        for c in repo {
            let mut seen_before = false;
            for earlier in &repos[..i] {
                for e in earlier {
                    if e == c {
                        seen_before = true;
                        break;
                    }
                }
                if seen_before {
                    break;
                }
            }
            if !seen_before && !unique.contains(c) {
                unique.push(c.clone());
            }
        }
        unique.sort();
        out.push(unique);
    }
    out
}

/// Fork indices in display order: descending divergence, ties by ascending
/// name. Selection sort, on purpose.
pub fn ranking(names: &[String], counts: &[usize]) -> Vec<usize> {
    let mut remaining: Vec<usize> = (0..names.len()).collect();
    let mut order = Vec::new();
    while !remaining.is_empty() {
        let mut best = 0;
        for k in 1..remaining.len() {
            let (a, b) = (remaining[k], remaining[best]);
            if counts[a] > counts[b] || (counts[a] == counts[b] && names[a] < names[b]) {
                best = k;
            }
        }
        order.push(remaining.remove(best));
    }
    order
}

/// Full reference analysis of a topology whose first repository is the
/// origin: ranks the forks and extracts unique commits.
pub struct Reference {
    /// `d` per fork, in input order.
    pub divergent: Vec<usize>,
    /// Fork indices (into the input forks) in rank order.
    pub order: Vec<usize>,
    /// `U` for origin then forks in rank order.
    pub unique: Vec<Vec<String>>,
}

pub fn analyze(names: &[String], repos: &[Vec<String>]) -> Reference {
    let origin = &repos[0];
    let forks = &repos[1..];
    let divergent: Vec<usize> = forks.iter().map(|f| divergent_count(f, origin)).collect();
    let order = ranking(&names[1..], &divergent);
    let mut ranked = vec![origin.clone()];
    ranked.extend(order.iter().map(|&i| forks[i].clone()));
    let unique = unique_commits(&ranked);
    Reference {
        divergent,
        order,
        unique,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(ids: &[&str]) -> Vec<String> {
        ids.iter().map(|x| x.to_string()).collect()
    }

    #[test]
    fn formulas_on_small_cases() {
        assert_eq!(divergent_count(&s(&["a", "b", "c", "c"]), &s(&["a", "b"])), 1);
        assert_eq!(
            unique_commits(&[s(&["a"]), s(&["a", "x"]), s(&["x", "a"])]),
            vec![s(&["a"]), s(&["x"]), vec![]]
        );
        assert_eq!(ranking(&s(&["z", "a", "m"]), &[5, 5, 7]), vec![2, 1, 0]);
    }
}
