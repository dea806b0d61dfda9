//! Disk and lens (two-disk intersection) helpers.

use crate::scenario::Point;
use crate::tolerance;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Disk {
    pub center: Point,
    pub radius: f64,
}

impl Disk {
    pub fn new(center: Point, radius: f64) -> Self {
        Disk { center, radius }
    }

    pub fn contains(&self, p: Point, slack: f64) -> bool {
        p.dist(self.center) <= self.radius + slack
    }

    /// Nearest point of the closed disk.
    pub fn project(&self, p: Point) -> Point {
        let off = p - self.center;
        let d = off.norm();
        if d <= self.radius {
            p
        } else {
            self.center + off * (self.radius / d)
        }
    }
}

/// Intersection of two equal-radius disks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lens {
    pub a: Disk,
    pub b: Disk,
}

impl Lens {
    pub fn new(a: Point, b: Point, radius: f64) -> Self {
        Lens {
            a: Disk::new(a, radius),
            b: Disk::new(b, radius),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.a.center.dist(self.b.center) > self.a.radius + self.b.radius
    }

    /// Midpoint of the two centers; interior whenever the lens has interior.
    pub fn center(&self) -> Point {
        self.a.center.lerp(self.b.center, 0.5)
    }

    /// Half the lens width across the center line; zero for tangent disks.
    pub fn half_width(&self) -> f64 {
        let r = self.a.radius;
        let half = 0.5 * self.a.center.dist(self.b.center);
        ((r - half) * (r + half)).max(0.0).sqrt()
    }

    /// The two corner points where the boundary circles cross, ordered
    /// counter-clockwise as seen from disk `a`.
    pub fn corners(&self) -> Option<(Point, Point)> {
        let d = self.a.center.dist(self.b.center);
        if d == 0.0 || self.is_empty() {
            return None;
        }
        let mid = self.center();
        let dir = (self.b.center - self.a.center) * (1.0 / d);
        let normal = Point::new(-dir.y, dir.x);
        let w = self.half_width();
        Some((mid - normal * w, mid + normal * w))
    }

    pub fn contains(&self, p: Point, slack: f64) -> bool {
        self.a.contains(p, slack) && self.b.contains(p, slack)
    }

    /// Euclidean projection onto the lens.
    ///
    /// At the nearest point either one disk constraint is active, in which
    /// case it is that disk's projection, or both are, in which case it is a
    /// corner. Checking the cases in turn gives the exact answer.
    pub fn project(&self, p: Point) -> Point {
        if self.contains(p, 0.0) {
            return p;
        }
        let slack = tolerance::LENS_PROJECTION_M;
        let on_a = self.a.project(p);
        if self.b.contains(on_a, slack) {
            return on_a;
        }
        let on_b = self.b.project(p);
        if self.a.contains(on_b, slack) {
            return on_b;
        }
        match self.corners() {
            Some((c1, c2)) => {
                if p.dist(c1) <= p.dist(c2) {
                    c1
                } else {
                    c2
                }
            }
            // empty lens: the best available is the midpoint of the gap
            None => self.center(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn corners_of_unit_overlap() {
        let lens = Lens::new(Point::new(0.0, 0.0), Point::new(1000.0, 0.0), 1000.0);
        let (lo, hi) = lens.corners().unwrap();
        assert_relative_eq!(lo.x, 500.0, epsilon = 1e-9);
        assert_relative_eq!(lo.y, -866.0254, epsilon = 1e-4);
        assert_relative_eq!(hi.y, 866.0254, epsilon = 1e-4);
        assert_relative_eq!(lens.half_width(), 866.0254, epsilon = 1e-4);
    }

    #[test]
    fn tangent_lens_is_a_point() {
        let lens = Lens::new(Point::new(0.0, 0.0), Point::new(2.0, 0.0), 1.0);
        assert_eq!(lens.half_width(), 0.0);
        let p = lens.project(Point::new(1.0, 5.0));
        assert_eq!(p, Point::new(1.0, 0.0));
    }

    #[test]
    fn projection_of_inside_point_is_identity() {
        let lens = Lens::new(Point::new(0.0, 0.0), Point::new(1.0, 0.0), 1.0);
        assert_eq!(lens.project(Point::new(0.5, 0.1)), Point::new(0.5, 0.1));
    }

    proptest! {
        #[test]
        fn projection_is_nearest_feasible(px in -3.0..4.0f64, py in -3.0..3.0f64, sep in 0.0..1.9f64) {
            let lens = Lens::new(Point::new(0.0, 0.0), Point::new(sep, 0.0), 1.0);
            let p = Point::new(px, py);
            let q = lens.project(p);
            prop_assert!(lens.contains(q, 1e-6));
            // brute force over a polar grid of the lens boundary and interior
            let mut best = f64::INFINITY;
            for i in 0..400 {
                for j in 0..=40 {
                    let ang = i as f64 / 400.0 * std::f64::consts::TAU;
                    let rad = j as f64 / 40.0;
                    let c = Point::new(rad * ang.cos(), rad * ang.sin());
                    if lens.contains(c, 0.0) {
                        best = best.min(p.dist(c));
                    }
                }
            }
            prop_assert!(p.dist(q) <= best + 1e-6);
        }
    }
}
