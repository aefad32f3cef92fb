//! The GitHub client against synthetic API recordings.

use std::sync::Arc;

use chrono::{TimeZone, Utc};
use forkscope::pipeline::{analyze, AnalyzeOptions};
use forkscope::provider::github::GitHubForge;
use forkscope::provider::transport::{Recording, ReplayTransport};
use forkscope::provider::{ProviderConfig, RepoProvider, RetryPolicy};
use forkscope_testkit::snapshot::{generate, Snapshot, SnapshotSpec};
use tempfile::TempDir;

fn spec() -> SnapshotSpec {
    SnapshotSpec {
        origin: "acme/widget".into(),
        seed: 11,
        forks: 140,
        forks_with_unique: 17,
        api_base: "https://api.test".into(),
        clone_base: "file:///nonexistent/forkscope".into(),
    }
}

fn provider(snap: &Snapshot, cache: &std::path::Path) -> (RepoProvider, Arc<ReplayTransport>) {
    let recording: Recording = serde_json::from_value(snap.recording.clone()).unwrap();
    let transport = Arc::new(ReplayTransport::new(recording));
    let forge = GitHubForge::new("https://api.test", Box::new(transport.clone()), None, RetryPolicy::default());
    let mut config = ProviderConfig::new(cache);
    config.api_base_url = "https://api.test".into();
    (RepoProvider::online(config, Box::new(forge)).unwrap(), transport)
}

fn options(snap: &Snapshot) -> AnalyzeOptions {
    let mut o = AnalyzeOptions::new(snap.origin.parse().unwrap());
    o.generated_at = Some(Utc.timestamp_opt(1_650_000_000, 0).unwrap());
    o
}

#[test]
fn replayed_network_matches_oracle() {
    let snap = generate(&spec());
    let dir = TempDir::new().unwrap();
    let (p, _) = provider(&snap, dir.path());
    let report = analyze(&p, &options(&snap)).unwrap();
    assert_eq!(report.stats.forks_enumerated, 140);
    assert_eq!(report.stats.forks_fetched, 140);
    assert_eq!(report.stats.forks_with_unique, 17);
    assert_eq!(report.stats.forks_shown, 10);

    let expected = snap.top(10);
    assert_eq!(report.artifact.forks.len(), expected.len());
    for (row, exp) in report.artifact.forks.iter().zip(expected) {
        assert_eq!(row.full_name, exp.full_name);
        assert_eq!(row.divergent_count as usize, exp.divergent);
        assert_eq!(row.bugfix_count as usize, exp.bugfix);
        let mut shas: Vec<String> = row.commits.iter().map(|c| c.sha.to_string()).collect();
        shas.sort();
        assert_eq!(shas, exp.unique);
        assert!(row.commits.iter().all(|c| c.url.starts_with("https://github.com/")));
    }
    let mut origin: Vec<String> = report.artifact.origin.commits.iter().map(|c| c.sha.to_string()).collect();
    origin.sort();
    assert_eq!(origin, snap.origin_unique);
    // clones are unreachable here, so sizes are reported as unmeasured
    assert!(report.artifact.warnings.iter().any(|w| w.contains("unmeasured")));
}

#[test]
fn cached_rerun_requests_no_commit_lists() {
    let snap = generate(&spec());
    let dir = TempDir::new().unwrap();
    let (first, _) = provider(&snap, dir.path());
    let a = analyze(&first, &options(&snap)).unwrap().artifact;

    let (second, transport) = provider(&snap, dir.path());
    let b = analyze(&second, &options(&snap)).unwrap().artifact;
    let non_commit = snap.recording["exchanges"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|e| !e["url"].as_str().unwrap().contains("/commits?"))
        .count();
    assert_eq!(transport.request_count(), non_commit);
    assert_eq!(a.to_json(), b.to_json());

    let offline = RepoProvider::offline(ProviderConfig::new(dir.path())).unwrap();
    let mut c = analyze(&offline, &options(&snap)).unwrap().artifact;
    // without clones the two modes word the unmeasured-size warnings differently
    assert_eq!(a.warnings.len(), c.warnings.len());
    c.warnings = a.warnings.clone();
    assert_eq!(a.to_json(), c.to_json());
}

#[test]
fn recording_survives_disk_round_trip() {
    let snap = generate(&spec());
    let dir = TempDir::new().unwrap();
    let recording: Recording = serde_json::from_value(snap.recording.clone()).unwrap();
    let path = dir.path().join("rec.json");
    recording.save(&path).unwrap();
    let replay = ReplayTransport::load(&path).unwrap();
    let forge = GitHubForge::new("https://api.test", Box::new(replay), None, RetryPolicy::default());
    let p = RepoProvider::online(ProviderConfig::new(dir.path().join("cache")), Box::new(forge)).unwrap();
    let report = analyze(&p, &options(&snap)).unwrap();
    assert_eq!(report.stats.forks_with_unique, 17);
}
