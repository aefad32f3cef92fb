//! Bubble sizing for the timeline view.

/// Radius of a commit with no added lines.
pub const MIN_RADIUS: f64 = 3.0;
/// Multiplier applied to `ln(1 + added_lines)`.
pub const LOG_SCALE: f64 = 2.0;
/// Height of one repository row in the viewer; radii stay below half of it
/// for any realistic commit.
pub const ROW_HEIGHT: f64 = 48.0;

/// `MIN_RADIUS + LOG_SCALE * ln(1 + added_lines)`, in display units.
pub fn bubble_radius(added_lines: u64) -> f64 {
    MIN_RADIUS + LOG_SCALE * (added_lines as f64).ln_1p()
}
