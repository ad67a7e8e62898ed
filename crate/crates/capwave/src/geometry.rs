//! Self-intersection test for periodic surface polylines.
//!
//! The curve is given by one period of vertices; it continues periodically
//! with a horizontal shift of L. Segments from the two neighbouring periodic
//! images are included so crossings through the seam are caught. Pairs are
//! pruned with an x-interval sweep before the exact segment test runs.

#[derive(Debug, Clone, Copy)]
struct Segment {
    ax: f64,
    ay: f64,
    bx: f64,
    by: f64,
    /// Index of the source edge modulo the period, used to skip the shared
    /// endpoints of consecutive edges.
    source: usize,
    /// Periodic image offset in units of L (-1, 0, +1).
    image: i32,
}

impl Segment {
    fn xmin(&self) -> f64 {
        self.ax.min(self.bx)
    }

    fn xmax(&self) -> f64 {
        self.ax.max(self.bx)
    }
}

fn orient(ax: f64, ay: f64, bx: f64, by: f64, cx: f64, cy: f64) -> f64 {
    (bx - ax) * (cy - ay) - (by - ay) * (cx - ax)
}

fn on_segment(ax: f64, ay: f64, bx: f64, by: f64, px: f64, py: f64, eps: f64) -> bool {
    orient(ax, ay, bx, by, px, py).abs() <= eps
        && px >= ax.min(bx) - eps
        && px <= ax.max(bx) + eps
        && py >= ay.min(by) - eps
        && py <= ay.max(by) + eps
}

fn segments_intersect(s: &Segment, t: &Segment, eps: f64) -> bool {
    let o1 = orient(s.ax, s.ay, s.bx, s.by, t.ax, t.ay);
    let o2 = orient(s.ax, s.ay, s.bx, s.by, t.bx, t.by);
    let o3 = orient(t.ax, t.ay, t.bx, t.by, s.ax, s.ay);
    let o4 = orient(t.ax, t.ay, t.bx, t.by, s.bx, s.by);
    if o1 * o2 < 0.0 && o3 * o4 < 0.0 {
        return true;
    }
    // touching or collinear overlap
    on_segment(s.ax, s.ay, s.bx, s.by, t.ax, t.ay, eps)
        || on_segment(s.ax, s.ay, s.bx, s.by, t.bx, t.by, eps)
        || on_segment(t.ax, t.ay, t.bx, t.by, s.ax, s.ay, eps)
        || on_segment(t.ax, t.ay, t.bx, t.by, s.bx, s.by, eps)
}

/// Consecutive edges of the periodic curve share an endpoint; those contacts
/// are not self-intersections.
fn adjacent(n: usize, s: &Segment, t: &Segment) -> bool {
    if s.source == t.source {
        return true;
    }
    let succ = (s.source + 1) % n == t.source;
    let pred = (t.source + 1) % n == s.source;
    if !(succ || pred) {
        return false;
    }
    let eps = 1e-9 * (1.0 + s.xmax().abs().max(t.xmax().abs()));
    let share =
        |x1: f64, y1: f64, x2: f64, y2: f64| (x1 - x2).abs() <= eps && (y1 - y2).abs() <= eps;
    share(s.ax, s.ay, t.ax, t.ay)
        || share(s.ax, s.ay, t.bx, t.by)
        || share(s.bx, s.by, t.ax, t.ay)
        || share(s.bx, s.by, t.bx, t.by)
}

/// Whether one period of the closed curve, continued periodically with
/// horizontal shift `period`, intersects itself.
pub fn periodic_polyline_self_intersects(points: &[(f64, f64)], period: f64) -> bool {
    let n = points.len();
    if n < 3 {
        return false;
    }
    let scale = points
        .iter()
        .fold(period.abs(), |a, p| a.max(p.0.abs()).max(p.1.abs()));
    let eps = 1e-12 * scale;

    let mut segments = Vec::with_capacity(3 * n);
    for image in -1..=1 {
        let shift = image as f64 * period;
        for i in 0..n {
            let (ax, ay) = points[i];
            let (bx, by) = if i + 1 < n {
                points[i + 1]
            } else {
                (points[0].0 + period, points[0].1)
            };
            segments.push(Segment { ax: ax + shift, ay, bx: bx + shift, by, source: i, image });
        }
    }
    segments.sort_by(|a, b| a.xmin().partial_cmp(&b.xmin()).unwrap());

    // x-interval sweep: only segments whose x-ranges overlap reach the exact
    // predicate
    let mut active: Vec<Segment> = Vec::new();
    for seg in &segments {
        let x = seg.xmin();
        active.retain(|s| s.xmax() >= x - eps);
        for other in &active {
            // a segment spans less than one period, so it never meets its
            // own periodic images
            if other.source == seg.source && other.image != seg.image {
                continue;
            }
            if adjacent(n, seg, other) {
                continue;
            }
            if segments_intersect(seg, other, eps) {
                return true;
            }
        }
        active.push(*seg);
    }
    false
}
