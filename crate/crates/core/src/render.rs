//! Writes a self-contained viewer directory for an artifact.
//!
//! The directory holds `index.html` (with the data inlined so it opens from
//! the filesystem), `data.json`, `viewer.js` and `viewer.css`. Nothing is
//! fetched from the network.

use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::artifact::{AnalysisArtifact, ArtifactError};
use crate::scale::{LOG_SCALE, MIN_RADIUS, ROW_HEIGHT};

const INDEX_TEMPLATE: &str = include_str!("../assets/index.html");
const VIEWER_JS: &str = include_str!("../assets/viewer.js");
const VIEWER_CSS: &str = include_str!("../assets/viewer.css");

#[derive(Debug, Error)]
pub enum RenderError {
    #[error(transparent)]
    Artifact(#[from] ArtifactError),
    #[error("cannot write {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl RenderError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RenderError::Artifact(ArtifactError::Invalid { .. } | ArtifactError::Json(_)) => 2,
            _ => 1,
        }
    }
}

/// Renders the artifact at `artifact_path` into `out_dir`. Returns the files
/// written.
pub fn render(artifact_path: &Path, out_dir: &Path) -> Result<Vec<PathBuf>, RenderError> {
    let artifact = AnalysisArtifact::read(artifact_path)?;
    render_artifact(&artifact, out_dir)
}

pub fn render_artifact(artifact: &AnalysisArtifact, out_dir: &Path) -> Result<Vec<PathBuf>, RenderError> {
    let io = |path: &Path| {
        let path = path.display().to_string();
        move |source| RenderError::Io { path, source }
    };
    fs::create_dir_all(out_dir).map_err(io(out_dir))?;
    let data = artifact.to_json();
    let files = [
        ("index.html", index_html(artifact, &data)),
        ("data.json", data),
        ("viewer.js", VIEWER_JS.to_string()),
        ("viewer.css", VIEWER_CSS.to_string()),
    ];
    let mut written = Vec::new();
    for (name, contents) in files {
        let path = out_dir.join(name);
        fs::write(&path, contents).map_err(io(&path))?;
        written.push(path);
    }
    Ok(written)
}

fn index_html(artifact: &AnalysisArtifact, data: &str) -> String {
    let config = format!(
        r#"{{"minRadius":{MIN_RADIUS:?},"logScale":{LOG_SCALE:?},"rowHeight":{ROW_HEIGHT:?}}}"#
    );
    INDEX_TEMPLATE
        .replace("{{TITLE}}", &escape_html(&artifact.origin.full_name))
        .replace("{{CONFIG}}", &config)
        .replace("{{DATA}}", &escape_script(data.trim_end()))
}

fn escape_html(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Keeps inlined JSON from closing its `<script>` element early. `<` only
/// occurs inside JSON strings, where `\u003c` is an equivalent escape.
fn escape_script(json: &str) -> String {
    json.replace('<', "\\u003c")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn script_escaping() {
        let escaped = escape_script(r#"{"subject":"</script><!--"}"#);
        assert_eq!(escaped, r#"{"subject":"\u003c/script>\u003c!--"}"#);
        let back: serde_json::Value = serde_json::from_str(&escaped).unwrap();
        assert_eq!(back["subject"], "</script><!--");
        assert_eq!(escape_html("a<b>&\""), "a&lt;b&gt;&amp;&quot;");
    }
}
