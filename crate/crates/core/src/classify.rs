//! Keyword + issue-reference heuristic for bug-fix commits.

/// Keywords matched as case-insensitive substrings, so "Bugfix" and "prefix"
/// both match.
pub const BUGFIX_KEYWORDS: [&str; 4] = ["fix", "bug", "error", "issue"];

/// True iff the message mentions a bug-fix keyword and an issue reference.
///
/// Both must hold anywhere in the full message (subject and body):
/// one of [`BUGFIX_KEYWORDS`] as a lowercase substring, and a `#` immediately
/// followed by at least one ASCII digit.
pub fn classify_bugfix(message: &str) -> bool {
    has_keyword(message) && has_issue_reference(message)
}

fn has_keyword(message: &str) -> bool {
    let lower = message.to_lowercase();
    BUGFIX_KEYWORDS.iter().any(|k| lower.contains(k))
}

fn has_issue_reference(message: &str) -> bool {
    message
        .as_bytes()
        .windows(2)
        .any(|w| w[0] == b'#' && w[1].is_ascii_digit())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn documented_examples() {
        assert!(classify_bugfix("Fix crash on startup #123"));
        assert!(!classify_bugfix(""));
        assert!(!classify_bugfix("Fix typo in README"));
        // "prefix" contains "fix"
        assert!(classify_bugfix("Prefix table rebuild (#42)"));
    }

    #[test]
    fn each_keyword_counts() {
        for kw in ["FIX", "Bug", "ERROR", "Issue", "bugfix", "fixes", "errors"] {
            assert!(classify_bugfix(&format!("{kw} #7")), "{kw}");
        }
        assert!(!classify_bugfix("Update dependencies #7"));
    }

    #[test]
    fn issue_reference_needs_digit_right_after_hash() {
        assert!(!classify_bugfix("fix # 12"));
        assert!(!classify_bugfix("fix #abc"));
        assert!(!classify_bugfix("fix #"));
        assert!(classify_bugfix("fix\n\nCloses #0"));
        assert!(classify_bugfix("issue##9"));
    }

    #[test]
    fn body_lines_count() {
        assert!(classify_bugfix("Update launcher\n\nfixes launch on M1, see #57"));
    }

    #[test]
    fn whitespace_padding_is_irrelevant() {
        for m in ["fix #1", "Add feature", "error #2\n", "bug"] {
            let padded = format!("  \n\t{m}\n \r\n");
            assert_eq!(classify_bugfix(m), classify_bugfix(&padded));
        }
    }
}
