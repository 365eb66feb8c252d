//! Planar points, `L_p` metrics and axis-aligned boxes.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn coords(&self) -> [f64; 2] {
        [self.x, self.y]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Metric {
    L1,
    #[default]
    L2,
    LInf,
}

impl Metric {
    /// Norm of a displacement `(dx, dy)`.
    #[inline]
    pub fn norm(self, dx: f64, dy: f64) -> f64 {
        let (ax, ay) = (dx.abs(), dy.abs());
        match self {
            Metric::L1 => ax + ay,
            Metric::L2 => libm::sqrt(ax * ax + ay * ay),
            Metric::LInf => ax.max(ay),
        }
    }

    #[inline]
    pub fn dist(self, a: Point, b: Point) -> f64 {
        self.norm(a.x - b.x, a.y - b.y)
    }

    /// Distance between coordinate tuples of arbitrary (equal) dimension.
    pub fn dist_coords(self, a: &[f64], b: &[f64]) -> Result<f64> {
        if a.len() != b.len() {
            return Err(Error::DimensionMismatch { left: a.len(), right: b.len() });
        }
        let diffs = a.iter().zip(b).map(|(p, q)| (p - q).abs());
        Ok(match self {
            Metric::L1 => diffs.sum(),
            Metric::L2 => libm::sqrt(diffs.map(|d| d * d).sum()),
            Metric::LInf => diffs.fold(0.0, f64::max),
        })
    }

    /// Largest distance from the center of a square cell of side `side`
    /// to any point of the cell.
    pub fn cell_half_diameter(self, side: f64) -> f64 {
        match self {
            Metric::L1 => side,
            Metric::L2 => side / core::f64::consts::SQRT_2,
            Metric::LInf => side / 2.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Metric::L1 => "l1",
            Metric::L2 => "l2",
            Metric::LInf => "linf",
        }
    }

    pub fn parse(s: &str) -> Option<Metric> {
        match s {
            "l1" | "L1" => Some(Metric::L1),
            "l2" | "L2" => Some(Metric::L2),
            "linf" | "Linf" | "LInf" | "LINF" => Some(Metric::LInf),
            _ => None,
        }
    }
}

/// Closed axis-aligned rectangle `[x0, x1] x [y0, y1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl Rect {
    pub const EVERYTHING: Rect = Rect {
        x0: f64::NEG_INFINITY,
        y0: f64::NEG_INFINITY,
        x1: f64::INFINITY,
        y1: f64::INFINITY,
    };

    pub const fn new(x0: f64, y0: f64, x1: f64, y1: f64) -> Self {
        Rect { x0, y0, x1, y1 }
    }

    pub fn square(x0: f64, y0: f64, side: f64) -> Self {
        Rect { x0, y0, x1: x0 + side, y1: y0 + side }
    }

    pub fn point(p: Point) -> Self {
        Rect { x0: p.x, y0: p.y, x1: p.x, y1: p.y }
    }

    /// Bounding box of a non-empty point sequence.
    pub fn bounding<I: IntoIterator<Item = Point>>(points: I) -> Option<Rect> {
        let mut it = points.into_iter();
        let first = it.next()?;
        Some(it.fold(Rect::point(first), |r, p| r.expand(p)))
    }

    pub fn expand(self, p: Point) -> Rect {
        Rect {
            x0: self.x0.min(p.x),
            y0: self.y0.min(p.y),
            x1: self.x1.max(p.x),
            y1: self.y1.max(p.y),
        }
    }

    pub fn union(self, o: Rect) -> Rect {
        Rect {
            x0: self.x0.min(o.x0),
            y0: self.y0.min(o.y0),
            x1: self.x1.max(o.x1),
            y1: self.y1.max(o.y1),
        }
    }

    pub fn intersect(self, o: Rect) -> Rect {
        Rect {
            x0: self.x0.max(o.x0),
            y0: self.y0.max(o.y0),
            x1: self.x1.min(o.x1),
            y1: self.y1.min(o.y1),
        }
    }

    pub fn is_empty(&self) -> bool {
        !(self.x0 <= self.x1 && self.y0 <= self.y1)
    }

    pub fn width(&self) -> f64 {
        self.x1 - self.x0
    }

    pub fn height(&self) -> f64 {
        self.y1 - self.y0
    }

    pub fn center(&self) -> Point {
        Point::new((self.x0 + self.x1) / 2.0, (self.y0 + self.y1) / 2.0)
    }

    #[inline]
    pub fn contains(&self, p: Point) -> bool {
        self.x0 <= p.x && p.x <= self.x1 && self.y0 <= p.y && p.y <= self.y1
    }

    pub fn contains_rect(&self, o: &Rect) -> bool {
        self.x0 <= o.x0 && o.x1 <= self.x1 && self.y0 <= o.y0 && o.y1 <= self.y1
    }

    /// Smallest square with the same lower-left corner containing `self`.
    pub fn enclosing_square(&self) -> Rect {
        Rect::square(self.x0, self.y0, self.width().max(self.height()))
    }

    pub fn corners(&self) -> [Point; 4] {
        [
            Point::new(self.x0, self.y0),
            Point::new(self.x1, self.y0),
            Point::new(self.x0, self.y1),
            Point::new(self.x1, self.y1),
        ]
    }

    pub fn diameter(&self, metric: Metric) -> f64 {
        metric.norm(self.width(), self.height())
    }

    /// Distance from `p` to the nearest point of the rectangle.
    #[inline]
    pub fn dist_to_point(&self, p: Point, metric: Metric) -> f64 {
        let dx = (self.x0 - p.x).max(0.0).max(p.x - self.x1);
        let dy = (self.y0 - p.y).max(0.0).max(p.y - self.y1);
        metric.norm(dx, dy)
    }

    /// Minimum distance between two rectangles.
    pub fn min_dist(&self, o: &Rect, metric: Metric) -> f64 {
        let dx = (o.x0 - self.x1).max(0.0).max(self.x0 - o.x1);
        let dy = (o.y0 - self.y1).max(0.0).max(self.y0 - o.y1);
        metric.norm(dx, dy)
    }

    /// Diameter of the union of two rectangles: both are convex, so the
    /// farthest pair is realised by corners.
    pub fn union_diameter(&self, o: &Rect, metric: Metric) -> f64 {
        let mut best = self.diameter(metric).max(o.diameter(metric));
        for a in self.corners() {
            for b in o.corners() {
                best = best.max(metric.dist(a, b));
            }
        }
        best
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn textbook_distances() {
        let (a, b) = (Point::new(0.0, 0.0), Point::new(3.0, 4.0));
        assert_eq!(Metric::L2.dist(a, b), 5.0);
        assert_eq!(Metric::L1.dist(a, b), 7.0);
        assert_eq!(Metric::LInf.dist(a, b), 4.0);
        let c = Point::new(1.0, 1.0);
        assert_eq!(Metric::LInf.dist(c, c), 0.0);
    }

    #[test]
    fn dimension_mismatch() {
        assert_eq!(
            Metric::L2.dist_coords(&[0.0, 1.0], &[0.0, 1.0, 2.0]),
            Err(Error::DimensionMismatch { left: 2, right: 3 })
        );
        assert_eq!(Metric::L2.dist_coords(&[0.0, 0.0, 0.0], &[1.0, 2.0, 2.0]), Ok(3.0));
    }

    #[test]
    fn union_diameter_of_points_is_distance() {
        let a = Rect::point(Point::new(0.0, 0.0));
        let b = Rect::point(Point::new(3.0, 4.0));
        assert_eq!(a.union_diameter(&b, Metric::L2), 5.0);
        assert_eq!(a.min_dist(&b, Metric::L2), 5.0);
    }

    fn coord() -> impl Strategy<Value = f64> {
        -1.0e3..1.0e3f64
    }

    proptest! {
        #[test]
        fn triangle_inequality(ax in coord(), ay in coord(), bx in coord(), by in coord(), cx in coord(), cy in coord()) {
            let (a, b, c) = (Point::new(ax, ay), Point::new(bx, by), Point::new(cx, cy));
            for m in [Metric::L1, Metric::L2, Metric::LInf] {
                let (ab, bc, ac) = (m.dist(a, b), m.dist(b, c), m.dist(a, c));
                prop_assert!(ac <= (ab + bc) * (1.0 + 1e-12) + 1e-12);
                prop_assert_eq!(ab, m.dist(b, a));
                prop_assert!(ab >= 0.0);
            }
        }

        #[test]
        fn half_diameter_bounds_cell(side in 0.01..10.0f64, fx in 0.0..1.0f64, fy in 0.0..1.0f64) {
            let cell = Rect::square(0.0, 0.0, side);
            let p = Point::new(fx * side, fy * side);
            for m in [Metric::L1, Metric::L2, Metric::LInf] {
                prop_assert!(m.dist(p, cell.center()) <= m.cell_half_diameter(side) * (1.0 + 1e-12));
            }
        }
    }
}
