use serde::{Deserialize, Serialize};

/// Labels shorter than this are instantaneous; they match a window iff
/// their midpoint lies inside it.
pub const POINT_EPS_S: f64 = 0.2;

/// A closed time span in seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeInterval {
    pub start_s: f64,
    pub end_s: f64,
}

impl TimeInterval {
    pub const fn new(start_s: f64, end_s: f64) -> Self {
        Self { start_s, end_s }
    }

    pub fn len(&self) -> f64 {
        self.end_s - self.start_s
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.start_s + self.end_s)
    }

    pub fn is_point(&self) -> bool {
        self.len() < POINT_EPS_S
    }

    /// Closed-interval containment of a time.
    pub fn contains(&self, t: f64) -> bool {
        self.start_s <= t && t <= self.end_s
    }

    /// True when the closed intervals share at least one point.
    pub fn intersects(&self, other: &TimeInterval) -> bool {
        self.start_s <= other.end_s && other.start_s <= self.end_s
    }

    /// Length of the intersection, zero when disjoint.
    pub fn overlap(&self, other: &TimeInterval) -> f64 {
        interval_overlap(self, other)
    }

    /// Distance between the intervals; zero or negative when they overlap.
    pub fn gap(&self, other: &TimeInterval) -> f64 {
        self.start_s.max(other.start_s) - self.end_s.min(other.end_s)
    }

    pub fn shift(&self, offset_s: f64) -> TimeInterval {
        TimeInterval::new(self.start_s + offset_s, self.end_s + offset_s)
    }

    /// floor(start), ceil(end). A zero-width whole-second result is widened
    /// to one second so the span stays renderable.
    pub fn round_outward(&self) -> TimeInterval {
        let start = self.start_s.floor();
        let mut end = self.end_s.ceil();
        if end <= start {
            end = start + 1.0;
        }
        TimeInterval::new(start, end)
    }

    /// Render as `[mm:ss to mm:ss]` with floor(start) and ceil(end).
    pub fn render_timestamp(&self) -> String {
        let r = self.round_outward();
        format!("[{} to {}]", mmss(r.start_s), mmss(r.end_s))
    }
}

fn mmss(t: f64) -> String {
    let secs = t.max(0.0) as u64;
    format!("{:02}:{:02}", secs / 60, secs % 60)
}

/// `max(0, min(a.end, b.end) - max(a.start, b.start))`.
pub fn interval_overlap(a: &TimeInterval, b: &TimeInterval) -> f64 {
    (a.end_s.min(b.end_s) - a.start_s.max(b.start_s)).max(0.0)
}

/// Window membership shared by every query in the crate: point labels match
/// by midpoint containment, others need to intersect the window with at
/// least `min_overlap` seconds in common.
pub fn matches_window(label: &TimeInterval, window: &TimeInterval, min_overlap: f64) -> bool {
    if label.is_point() {
        window.contains(label.midpoint())
    } else {
        label.intersects(window) && interval_overlap(label, window) >= min_overlap
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn overlap_examples() {
        let a = TimeInterval::new(1.0, 3.0);
        let b = TimeInterval::new(2.0, 5.0);
        assert_eq!(interval_overlap(&a, &b), 1.0);
        let c = TimeInterval::new(0.0, 1.0);
        let d = TimeInterval::new(2.0, 3.0);
        assert_eq!(interval_overlap(&c, &d), 0.0);
    }

    #[test]
    fn rounding_and_rendering() {
        let w = TimeInterval::new(3.2, 5.8).round_outward();
        assert_eq!(w, TimeInterval::new(3.0, 6.0));
        assert_eq!(TimeInterval::new(1.0, 12.0).render_timestamp(), "[00:01 to 00:12]");
        assert_eq!(TimeInterval::new(61.4, 125.0).render_timestamp(), "[01:01 to 02:05]");
        assert_eq!(TimeInterval::new(4.0, 4.0).round_outward(), TimeInterval::new(4.0, 5.0));
    }

    #[test]
    fn point_labels_use_midpoint() {
        let p = TimeInterval::new(2.0, 2.1);
        assert!(matches_window(&p, &TimeInterval::new(2.0, 3.0), 0.5));
        assert!(!matches_window(&p, &TimeInterval::new(2.06, 3.0), 0.0));
    }

    /// Unit-grid oracle: count unit cells [k, k+1] covered by both intervals.
    fn grid_overlap(a: (i32, i32), b: (i32, i32)) -> f64 {
        (-50..50)
            .filter(|&k| a.0 <= k && k < a.1 && b.0 <= k && k < b.1)
            .count() as f64
    }

    proptest! {
        #[test]
        fn overlap_matches_grid(a0 in -20i32..20, al in 0i32..15, b0 in -20i32..20, bl in 0i32..15) {
            let a = TimeInterval::new(a0 as f64, (a0 + al) as f64);
            let b = TimeInterval::new(b0 as f64, (b0 + bl) as f64);
            prop_assert_eq!(interval_overlap(&a, &b), grid_overlap((a0, a0 + al), (b0, b0 + bl)));
        }

        #[test]
        fn overlap_symmetric_bounded(a0 in 0.0f64..100.0, al in 0.0f64..50.0, b0 in 0.0f64..100.0, bl in 0.0f64..50.0) {
            let a = TimeInterval::new(a0, a0 + al);
            let b = TimeInterval::new(b0, b0 + bl);
            let ab = interval_overlap(&a, &b);
            prop_assert_eq!(ab, interval_overlap(&b, &a));
            prop_assert!(ab >= 0.0);
            prop_assert!(ab <= a.len().min(b.len()) + 1e-12);
        }
    }
}
