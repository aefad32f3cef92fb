//! Regex reimplementation of the bug-fix rule and a labeled message corpus.

use std::sync::OnceLock;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use regex::Regex;

/// Reference rule: a case-insensitive keyword (substring) and `#<digit>`.
pub fn is_bugfix(message: &str) -> bool {
    static KEYWORD: OnceLock<Regex> = OnceLock::new();
    static ISSUE: OnceLock<Regex> = OnceLock::new();
    let keyword = KEYWORD.get_or_init(|| Regex::new(r"(?i)fix|bug|error|issue").unwrap());
    let issue = ISSUE.get_or_init(|| Regex::new(r"#[0-9]").unwrap());
    keyword.is_match(message) && issue.is_match(message)
}

const HAND_WRITTEN: &[&str] = &[
    "Fix crash on startup #123",
    "",
    "Fix typo in README",
    "Prefix table rebuild (#42)",
    "Fix launch on Apple M1 (#57)",
    "Merge pull request #430 from ian4hu/master",
    "Update Sparkle to 1.21.3",
    "Bump version to 1.2.12",
    "Resolve issue #374: app does not start",
    "BUG: clipboard history lost after reboot (#88)",
    "Handle ERROR when pasteboard is empty #9",
    "Refactor menu manager",
    "Add data-flow transformation pass",
    "fix: null pointer in opaque predicate pass\n\nCloses #14",
    "Support LLVM 12",
    "Import LLVM 9.0 sources",
    "Debugging notes for -mllvm -fla crash",
    "fixes #",
    "Fix # 12 spacing",
    "See #77 for details",
    "Issue tracker template",
    "Errors are now reported via NSAlert\n\nRefs #301",
    "Bugfix release",
    "Revert \"Fix search\" (#19)",
    "debug logging for #5",
    "Fixed memory leak in snippet editor\r\n\r\nThis was reported in GH-45.",
    "hotfix #2",
    "Mixed Case FiX for #3",
    "Update build scripts for Xcode 13 (#1)",
    "Improve error message",
];

const VERBS: &[&str] = &["Fix", "Add", "Update", "Remove", "Refactor", "Handle", "Prefix", "Debug"];
const OBJECTS: &[&str] = &[
    "bug in parser",
    "error handling",
    "issue template",
    "search feature",
    "menu layout",
    "build settings",
    "snippet folder",
];
const TAILS: &[&str] = &["", " (#12)", " #7", " # 4", " see issue 40", "\n\nCloses #1024", " #x"];

/// Fifty messages with labels from [`is_bugfix`]: the hand-written cases
/// above plus seeded random compositions.
pub fn labeled_corpus() -> Vec<(String, bool)> {
    let mut rng = ChaCha8Rng::seed_from_u64(2022);
    let mut messages: Vec<String> = HAND_WRITTEN.iter().map(|m| m.to_string()).collect();
    while messages.len() < 50 {
        let verb = VERBS.choose(&mut rng).unwrap();
        let object = OBJECTS.choose(&mut rng).unwrap();
        let tail = TAILS.choose(&mut rng).unwrap();
        let mut m = format!("{verb} {object}{tail}");
        if rng.random_bool(0.2) {
            m = m.to_uppercase();
        }
        if !messages.contains(&m) {
            messages.push(m);
        }
    }
    messages
        .into_iter()
        .map(|m| {
            let label = is_bugfix(&m);
            (m, label)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn corpus_is_balanced_enough() {
        let corpus = labeled_corpus();
        assert_eq!(corpus.len(), 50);
        let positives = corpus.iter().filter(|(_, l)| *l).count();
        assert!((10..=40).contains(&positives), "{positives} positives");
    }
}
