//! Planar geometry primitives: point-in-polygon, shoelace areas, rectangle
//! clipping and bounding boxes.
//!
//! Everything here works in CRS units on `f64` with no robust predicates;
//! the extraction weights that consume these quantities are ratios within a
//! single raster cell and tolerate ~1e-9 relative noise.

use crate::vector::PolygonFeature;

/// A 2D point in CRS units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }
}

/// Axis-aligned rectangle, `x_min <= x_max` and `y_min <= y_max`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rectangle {
    pub x_min: f64,
    pub y_min: f64,
    pub x_max: f64,
    pub y_max: f64,
}

impl Rectangle {
    pub fn new(x_min: f64, y_min: f64, x_max: f64, y_max: f64) -> Self {
        assert!(
            x_min <= x_max && y_min <= y_max,
            "invalid rectangle [{x_min},{x_max}]x[{y_min},{y_max}]"
        );
        Self {
            x_min,
            y_min,
            x_max,
            y_max,
        }
    }

    pub fn width(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn height(&self) -> f64 {
        self.y_max - self.y_min
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn center(&self) -> Point {
        Point::new(
            (self.x_min + self.x_max) / 2.0,
            (self.y_min + self.y_max) / 2.0,
        )
    }

    /// Closed-box intersection test; boundary contact counts.
    pub fn intersects(&self, other: &Rectangle) -> bool {
        self.x_min <= other.x_max
            && self.x_max >= other.x_min
            && self.y_min <= other.y_max
            && self.y_max >= other.y_min
    }

    pub fn contains_point(&self, p: Point) -> bool {
        p.x >= self.x_min && p.x <= self.x_max && p.y >= self.y_min && p.y <= self.y_max
    }

    pub fn contains_rect(&self, other: &Rectangle) -> bool {
        self.x_min <= other.x_min
            && self.x_max >= other.x_max
            && self.y_min <= other.y_min
            && self.y_max >= other.y_max
    }
}

/// Signed shoelace area of a ring: positive for counter-clockwise winding.
///
/// Degenerate rings (fewer than 3 vertices, or collinear) give 0.
pub fn ring_area_signed(ring: &[Point]) -> f64 {
    if ring.len() < 3 {
        return 0.0;
    }
    let mut twice = 0.0;
    let n = ring.len();
    for i in 0..n {
        let a = ring[i];
        let b = ring[(i + 1) % n];
        twice += a.x * b.y - b.x * a.y;
    }
    twice / 2.0
}

/// Even-odd crossing test against a single ring.
///
/// Boundary resolution is the half-open rule: an edge is crossed iff exactly
/// one of its endpoints lies strictly above the ray height, so a vertex
/// sitting exactly at the ray height counts only when its edge's other
/// endpoint is strictly above.
pub fn point_in_ring(p: Point, ring: &[Point]) -> bool {
    let n = ring.len();
    if n < 3 {
        return false;
    }
    let mut inside = false;
    let mut j = n - 1;
    for i in 0..n {
        let a = ring[i];
        let b = ring[j];
        if (a.y > p.y) != (b.y > p.y) {
            let x_cross = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
            if p.x < x_cross {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

/// Even-odd membership over all rings of all parts; a point inside a hole is
/// outside the feature.
pub fn point_in_feature(p: Point, feature: &PolygonFeature) -> bool {
    let mut inside = false;
    for part in &feature.parts {
        if point_in_ring(p, &part.outer) {
            inside = !inside;
        }
        for hole in &part.holes {
            if point_in_ring(p, hole) {
                inside = !inside;
            }
        }
    }
    inside
}

/// Planar area of a feature: per part, |outer| minus the hole areas, clamped
/// at zero before summing.
pub fn feature_area(feature: &PolygonFeature) -> f64 {
    feature
        .parts
        .iter()
        .map(|part| {
            let outer = ring_area_signed(&part.outer).abs();
            let holes: f64 = part.holes.iter().map(|h| ring_area_signed(h).abs()).sum();
            (outer - holes).max(0.0)
        })
        .sum()
}

#[derive(Clone, Copy)]
enum ClipEdge {
    Left(f64),
    Right(f64),
    Bottom(f64),
    Top(f64),
}

impl ClipEdge {
    fn keeps(&self, p: Point) -> bool {
        match *self {
            ClipEdge::Left(x) => p.x >= x,
            ClipEdge::Right(x) => p.x <= x,
            ClipEdge::Bottom(y) => p.y >= y,
            ClipEdge::Top(y) => p.y <= y,
        }
    }

    fn crossing(&self, a: Point, b: Point) -> Point {
        match *self {
            ClipEdge::Left(x) | ClipEdge::Right(x) => {
                let t = (x - a.x) / (b.x - a.x);
                Point::new(x, a.y + t * (b.y - a.y))
            }
            ClipEdge::Bottom(y) | ClipEdge::Top(y) => {
                let t = (y - a.y) / (b.y - a.y);
                Point::new(a.x + t * (b.x - a.x), y)
            }
        }
    }
}

fn clip_against(points: Vec<Point>, edge: ClipEdge) -> Vec<Point> {
    if points.is_empty() {
        return points;
    }
    let mut out = Vec::with_capacity(points.len() + 2);
    let mut prev = *points.last().unwrap();
    let mut prev_in = edge.keeps(prev);
    for &cur in &points {
        let cur_in = edge.keeps(cur);
        if cur_in != prev_in {
            out.push(edge.crossing(prev, cur));
        }
        if cur_in {
            out.push(cur);
        }
        prev = cur;
        prev_in = cur_in;
    }
    out
}

/// Sutherland-Hodgman clip of a ring against a rectangle, applying the four
/// half-planes in order left, right, bottom, top.
///
/// Against a convex window the output of a concave subject may contain
/// degenerate zero-width bridges; its shoelace area is still the exact
/// intersection area, which is the only quantity consumed downstream.
pub fn clip_ring_to_rect(ring: &[Point], rect: &Rectangle) -> Vec<Point> {
    let mut points = ring.to_vec();
    for edge in [
        ClipEdge::Left(rect.x_min),
        ClipEdge::Right(rect.x_max),
        ClipEdge::Bottom(rect.y_min),
        ClipEdge::Top(rect.y_max),
    ] {
        points = clip_against(points, edge);
        if points.is_empty() {
            break;
        }
    }
    points
}

fn ring_rect_overlap(ring: &[Point], rect: &Rectangle) -> f64 {
    ring_area_signed(&clip_ring_to_rect(ring, rect)).abs()
}

/// Area of the intersection between a feature and a rectangle: per part, the
/// clipped outer area minus the clipped hole areas, clamped at zero.
pub fn feature_rect_overlap_area(feature: &PolygonFeature, rect: &Rectangle) -> f64 {
    feature
        .parts
        .iter()
        .map(|part| {
            let outer = ring_rect_overlap(&part.outer, rect);
            let holes: f64 = part.holes.iter().map(|h| ring_rect_overlap(h, rect)).sum();
            (outer - holes).max(0.0)
        })
        .sum()
}

/// Tight bounding box over every vertex of every ring.
pub fn feature_bbox(feature: &PolygonFeature) -> Rectangle {
    let mut vertices = feature
        .parts
        .iter()
        .flat_map(|part| std::iter::once(&part.outer).chain(part.holes.iter()))
        .flatten();
    let first = *vertices
        .next()
        .expect("feature invariant: at least one ring with vertices");
    let mut bbox = (first.x, first.y, first.x, first.y);
    for v in vertices {
        bbox.0 = bbox.0.min(v.x);
        bbox.1 = bbox.1.min(v.y);
        bbox.2 = bbox.2.max(v.x);
        bbox.3 = bbox.3.max(v.y);
    }
    Rectangle::new(bbox.0, bbox.1, bbox.2, bbox.3)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vector::PolygonPart;

    fn ring(coords: &[(f64, f64)]) -> Vec<Point> {
        coords.iter().map(|&(x, y)| Point::new(x, y)).collect()
    }

    fn square_feature(x0: f64, y0: f64, side: f64) -> PolygonFeature {
        PolygonFeature::from_parts(vec![PolygonPart {
            outer: ring(&[
                (x0, y0),
                (x0 + side, y0),
                (x0 + side, y0 + side),
                (x0, y0 + side),
            ]),
            holes: vec![],
        }])
    }

    #[test]
    fn shoelace_unit_square_ccw() {
        let r = ring(&[(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)]);
        assert_eq!(ring_area_signed(&r), 1.0);
    }

    #[test]
    fn shoelace_unit_square_cw() {
        let r = ring(&[(0.0, 0.0), (0.0, 1.0), (1.0, 1.0), (1.0, 0.0)]);
        assert_eq!(ring_area_signed(&r), -1.0);
    }

    #[test]
    fn shoelace_degenerate_is_zero() {
        assert_eq!(ring_area_signed(&ring(&[(0.0, 0.0), (1.0, 1.0)])), 0.0);
        let collinear = ring(&[(0.0, 0.0), (1.0, 1.0), (2.0, 2.0)]);
        assert_eq!(ring_area_signed(&collinear), 0.0);
    }

    #[test]
    fn point_in_unit_square() {
        let f = square_feature(0.0, 0.0, 1.0);
        assert!(point_in_feature(Point::new(0.5, 0.5), &f));
        assert!(!point_in_feature(Point::new(1.5, 0.5), &f));
    }

    #[test]
    fn point_in_hole_is_outside() {
        let f = PolygonFeature::from_parts(vec![PolygonPart {
            outer: ring(&[(0.0, 0.0), (2.0, 0.0), (2.0, 2.0), (0.0, 2.0)]),
            holes: vec![ring(&[(0.5, 0.5), (1.5, 0.5), (1.5, 1.5), (0.5, 1.5)])],
        }]);
        assert!(!point_in_feature(Point::new(1.0, 1.0), &f));
        assert!(point_in_feature(Point::new(0.25, 0.25), &f));
    }

    #[test]
    fn feature_area_square() {
        assert!((feature_area(&square_feature(0.0, 0.0, 1.0)) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn feature_area_with_hole() {
        let f = PolygonFeature::from_parts(vec![PolygonPart {
            outer: ring(&[(0.0, 0.0), (2.0, 0.0), (2.0, 2.0), (0.0, 2.0)]),
            holes: vec![ring(&[(0.5, 0.5), (1.5, 0.5), (1.5, 1.5), (0.5, 1.5)])],
        }]);
        assert!((feature_area(&f) - 3.0).abs() < 1e-12);
    }

    #[test]
    fn clip_identity() {
        let r = ring(&[(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)]);
        let rect = Rectangle::new(0.0, 0.0, 1.0, 1.0);
        let clipped = clip_ring_to_rect(&r, &rect);
        assert!((ring_area_signed(&clipped).abs() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn clip_quarter_overlap() {
        let r = ring(&[(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)]);
        let rect = Rectangle::new(0.5, 0.5, 1.5, 1.5);
        let clipped = clip_ring_to_rect(&r, &rect);
        assert!((ring_area_signed(&clipped).abs() - 0.25).abs() < 1e-12);
        for p in &clipped {
            assert!(p.x >= rect.x_min - 1e-12 && p.x <= rect.x_max + 1e-12);
            assert!(p.y >= rect.y_min - 1e-12 && p.y <= rect.y_max + 1e-12);
        }
    }

    #[test]
    fn clip_disjoint_is_empty() {
        let r = ring(&[(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)]);
        let rect = Rectangle::new(5.0, 5.0, 6.0, 6.0);
        assert!(clip_ring_to_rect(&r, &rect).is_empty());
    }

    #[test]
    fn overlap_area_full_and_disjoint() {
        let f = square_feature(0.0, 0.0, 1.0);
        let full = feature_rect_overlap_area(&f, &Rectangle::new(0.0, 0.0, 1.0, 1.0));
        assert!((full - 1.0).abs() < 1e-12);
        let none = feature_rect_overlap_area(&f, &Rectangle::new(3.0, 3.0, 4.0, 4.0));
        assert_eq!(none, 0.0);
    }

    #[test]
    fn overlap_area_with_hole() {
        let f = PolygonFeature::from_parts(vec![PolygonPart {
            outer: ring(&[(0.0, 0.0), (2.0, 0.0), (2.0, 2.0), (0.0, 2.0)]),
            holes: vec![ring(&[(0.5, 0.5), (1.5, 0.5), (1.5, 1.5), (0.5, 1.5)])],
        }]);
        // Left half of the feature: outer 1x2 minus half the hole.
        let rect = Rectangle::new(0.0, 0.0, 1.0, 2.0);
        assert!((feature_rect_overlap_area(&f, &rect) - 1.5).abs() < 1e-12);
    }

    #[test]
    fn bbox_unit_square() {
        let f = square_feature(0.0, 0.0, 1.0);
        assert_eq!(feature_bbox(&f), Rectangle::new(0.0, 0.0, 1.0, 1.0));
    }

    #[test]
    fn bbox_two_disjoint_squares() {
        let f = PolygonFeature::from_parts(vec![
            PolygonPart {
                outer: ring(&[(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)]),
                holes: vec![],
            },
            PolygonPart {
                outer: ring(&[(5.0, 5.0), (6.0, 5.0), (6.0, 6.0), (5.0, 6.0)]),
                holes: vec![],
            },
        ]);
        assert_eq!(feature_bbox(&f), Rectangle::new(0.0, 0.0, 6.0, 6.0));
    }

    #[test]
    fn multipart_area_sums() {
        let f = PolygonFeature::from_parts(vec![
            PolygonPart {
                outer: ring(&[(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)]),
                holes: vec![],
            },
            PolygonPart {
                outer: ring(&[(5.0, 5.0), (6.0, 5.0), (6.0, 6.0), (5.0, 6.0)]),
                holes: vec![],
            },
        ]);
        assert!((feature_area(&f) - 2.0).abs() < 1e-12);
    }
}
