#![allow(dead_code)]

use chrono::{TimeZone, Utc};
use forkscope::{CommitRecord, CommitSet, Sha};

/// A commit record for a hex id, with a timestamp and message derived from
/// the id so equal ids always give equal records.
pub fn record(id: &str) -> CommitRecord {
    let sha: Sha = id.parse().expect("40 hex characters");
    let b = sha.as_bytes();
    let secs = 1_500_000_000 + (u32::from_be_bytes([0, b[0], b[1], b[2]]) as i64);
    let message = match b[3] % 4 {
        0 => format!("Fix crash #{}", b[4]),
        1 => "Update docs".to_string(),
        2 => format!("Add feature\n\nsee #{}", b[5]),
        _ => "Refactor error handling".to_string(),
    };
    CommitRecord::new(sha, Utc.timestamp_opt(secs, 0).unwrap(), message, 1, format!("https://example.test/c/{id}"))
}

pub fn commit_set(ids: &[String]) -> CommitSet {
    ids.iter().map(|id| record(id)).collect()
}

pub fn hex_sorted(set: &CommitSet) -> Vec<String> {
    let mut v: Vec<String> = set.shas().map(|s| s.to_string()).collect();
    v.sort();
    v
}
