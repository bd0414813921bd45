use std::f64::consts::PI;
use std::ops::{Add, Mul, Sub};

/// A position in the workspace, in meters.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn dot(self, other: Point2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn dist(self, other: Point2) -> f64 {
        (self - other).norm()
    }

    pub fn dist_sq(self, other: Point2) -> f64 {
        let d = self - other;
        d.dot(d)
    }

    /// Rotates by `angle` radians about the origin.
    pub fn rotate(self, angle: f64) -> Point2 {
        let (s, c) = angle.sin_cos();
        Point2::new(c * self.x - s * self.y, s * self.x + c * self.y)
    }

    pub fn lerp(self, other: Point2, t: f64) -> Point2 {
        self + (other - self) * t
    }
}

impl Add for Point2 {
    type Output = Point2;
    fn add(self, rhs: Point2) -> Point2 {
        Point2::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl Sub for Point2 {
    type Output = Point2;
    fn sub(self, rhs: Point2) -> Point2 {
        Point2::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Mul<f64> for Point2 {
    type Output = Point2;
    fn mul(self, rhs: f64) -> Point2 {
        Point2::new(self.x * rhs, self.y * rhs)
    }
}

/// Wraps an angle into `[-pi, pi)`.
pub fn wrap_angle(a: f64) -> f64 {
    let two_pi = 2.0 * PI;
    let w = a - two_pi * ((a + PI) / two_pi).floor();
    // floor() rounding can land exactly on +pi
    if w >= PI {
        w - two_pi
    } else {
        w
    }
}

/// Distance from `p` to the closed segment `[a, b]`.
pub fn point_segment_dist(p: Point2, a: Point2, b: Point2) -> f64 {
    let ab = b - a;
    let len_sq = ab.dot(ab);
    if len_sq == 0.0 {
        return p.dist(a);
    }
    let t = ((p - a).dot(ab) / len_sq).clamp(0.0, 1.0);
    p.dist(a + ab * t)
}

/// Axis-aligned box, also used as the workspace bounds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aabb {
    pub min: Point2,
    pub max: Point2,
}

impl Aabb {
    pub const fn new(xmin: f64, ymin: f64, xmax: f64, ymax: f64) -> Self {
        Self {
            min: Point2::new(xmin, ymin),
            max: Point2::new(xmax, ymax),
        }
    }

    pub fn width(&self) -> f64 {
        self.max.x - self.min.x
    }

    pub fn height(&self) -> f64 {
        self.max.y - self.min.y
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn contains(&self, p: Point2) -> bool {
        p.x >= self.min.x && p.x <= self.max.x && p.y >= self.min.y && p.y <= self.max.y
    }

    pub fn overlaps(&self, other: &Aabb) -> bool {
        self.min.x <= other.max.x
            && other.min.x <= self.max.x
            && self.min.y <= other.max.y
            && other.min.y <= self.max.y
    }

    pub fn inflate(&self, r: f64) -> Aabb {
        Aabb::new(self.min.x - r, self.min.y - r, self.max.x + r, self.max.y + r)
    }

    pub fn of_segment(a: Point2, b: Point2) -> Aabb {
        Aabb::new(a.x.min(b.x), a.y.min(b.y), a.x.max(b.x), a.y.max(b.y))
    }

    /// Distance from `p` to the closest point of the box boundary, for `p` inside.
    pub fn interior_clearance(&self, p: Point2) -> f64 {
        (p.x - self.min.x)
            .min(self.max.x - p.x)
            .min(p.y - self.min.y)
            .min(self.max.y - p.y)
    }
}

/// A static obstacle. Both shapes are closed sets: a point at distance zero
/// from the boundary is in collision.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Obstacle {
    RotRect {
        cx: f64,
        cy: f64,
        w: f64,
        h: f64,
        theta: f64,
    },
    Circle {
        cx: f64,
        cy: f64,
        r: f64,
    },
}

impl Obstacle {
    pub fn rect(cx: f64, cy: f64, w: f64, h: f64, theta: f64) -> Obstacle {
        Obstacle::RotRect {
            cx,
            cy,
            w,
            h,
            theta: wrap_angle(theta),
        }
    }

    pub fn circle(cx: f64, cy: f64, r: f64) -> Obstacle {
        Obstacle::Circle { cx, cy, r }
    }

    pub fn center(&self) -> Point2 {
        match *self {
            Obstacle::RotRect { cx, cy, .. } | Obstacle::Circle { cx, cy, .. } => {
                Point2::new(cx, cy)
            }
        }
    }

    /// Returns the same shape moved to `c` and rotated to `theta` (ignored for circles).
    pub fn placed(&self, c: Point2, theta: f64) -> Obstacle {
        match *self {
            Obstacle::RotRect { w, h, .. } => Obstacle::rect(c.x, c.y, w, h, theta),
            Obstacle::Circle { r, .. } => Obstacle::circle(c.x, c.y, r),
        }
    }

    pub fn theta(&self) -> f64 {
        match *self {
            Obstacle::RotRect { theta, .. } => theta,
            Obstacle::Circle { .. } => 0.0,
        }
    }

    pub fn area(&self) -> f64 {
        match *self {
            Obstacle::RotRect { w, h, .. } => w * h,
            Obstacle::Circle { r, .. } => std::f64::consts::PI * r * r,
        }
    }

    pub fn is_valid(&self) -> bool {
        match *self {
            Obstacle::RotRect {
                cx,
                cy,
                w,
                h,
                theta,
            } => {
                [cx, cy, w, h, theta].iter().all(|v| v.is_finite())
                    && w > 0.0
                    && h > 0.0
                    && (-PI..PI).contains(&theta)
            }
            Obstacle::Circle { cx, cy, r } => {
                cx.is_finite() && cy.is_finite() && r.is_finite() && r > 0.0
            }
        }
    }

    pub fn aabb(&self) -> Aabb {
        match *self {
            Obstacle::RotRect {
                cx,
                cy,
                w,
                h,
                theta,
            } => {
                let (s, c) = theta.sin_cos();
                let ex = 0.5 * (w * c.abs() + h * s.abs());
                let ey = 0.5 * (w * s.abs() + h * c.abs());
                Aabb::new(cx - ex, cy - ey, cx + ex, cy + ey)
            }
            Obstacle::Circle { cx, cy, r } => Aabb::new(cx - r, cy - r, cx + r, cy + r),
        }
    }

    /// Corners of a rectangle in world coordinates, counter-clockwise.
    pub fn corners(&self) -> Option<[Point2; 4]> {
        match *self {
            Obstacle::RotRect {
                cx,
                cy,
                w,
                h,
                theta,
            } => {
                let c = Point2::new(cx, cy);
                let (hw, hh) = (0.5 * w, 0.5 * h);
                Some(
                    [
                        Point2::new(-hw, -hh),
                        Point2::new(hw, -hh),
                        Point2::new(hw, hh),
                        Point2::new(-hw, hh),
                    ]
                    .map(|p| c + p.rotate(theta)),
                )
            }
            Obstacle::Circle { .. } => None,
        }
    }

    /// Euclidean distance from `p` to the obstacle; zero when `p` is inside.
    pub fn distance_to_point(&self, p: Point2) -> f64 {
        match *self {
            Obstacle::RotRect {
                cx,
                cy,
                w,
                h,
                theta,
            } => {
                let local = (p - Point2::new(cx, cy)).rotate(-theta);
                let dx = (local.x.abs() - 0.5 * w).max(0.0);
                let dy = (local.y.abs() - 0.5 * h).max(0.0);
                dx.hypot(dy)
            }
            Obstacle::Circle { cx, cy, r } => (p.dist(Point2::new(cx, cy)) - r).max(0.0),
        }
    }

    /// Euclidean distance from the segment `[a, b]` to the obstacle; zero on overlap.
    pub fn distance_to_segment(&self, a: Point2, b: Point2) -> f64 {
        match *self {
            Obstacle::Circle { cx, cy, r } => {
                (point_segment_dist(Point2::new(cx, cy), a, b) - r).max(0.0)
            }
            Obstacle::RotRect {
                cx,
                cy,
                w,
                h,
                theta,
            } => {
                let c = Point2::new(cx, cy);
                let la = (a - c).rotate(-theta);
                let lb = (b - c).rotate(-theta);
                let (hw, hh) = (0.5 * w, 0.5 * h);
                if segment_hits_box(la, lb, hw, hh) {
                    return 0.0;
                }
                // Disjoint convex sets in the plane: the closest pair always
                // involves a vertex of one of them.
                let box_dist = |p: Point2| {
                    let dx = (p.x.abs() - hw).max(0.0);
                    let dy = (p.y.abs() - hh).max(0.0);
                    dx.hypot(dy)
                };
                let mut best = box_dist(la).min(box_dist(lb));
                for corner in [
                    Point2::new(-hw, -hh),
                    Point2::new(hw, -hh),
                    Point2::new(hw, hh),
                    Point2::new(-hw, hh),
                ] {
                    best = best.min(point_segment_dist(corner, la, lb));
                }
                best
            }
        }
    }
}

/// Liang-Barsky clip of segment `[a, b]` against the centered box `[-hw, hw] x [-hh, hh]`.
fn segment_hits_box(a: Point2, b: Point2, hw: f64, hh: f64) -> bool {
    let d = b - a;
    let mut t0 = 0.0f64;
    let mut t1 = 1.0f64;
    for (p, q) in [
        (-d.x, a.x + hw),
        (d.x, hw - a.x),
        (-d.y, a.y + hh),
        (d.y, hh - a.y),
    ] {
        if p == 0.0 {
            if q < 0.0 {
                return false;
            }
        } else {
            let r = q / p;
            if p < 0.0 {
                t0 = t0.max(r);
            } else {
                t1 = t1.min(r);
            }
            if t0 > t1 {
                return false;
            }
        }
    }
    true
}
