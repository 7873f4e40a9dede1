//! State-space points and the velocity-field abstraction shared by the
//! characteristic integrator and the transport scheme.

use std::ops::{Add, Mul, Sub};

/// A point `(x, theta)` of the structuring space: tumor size and angiogenic
/// capacity, both in mm³.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point {
    pub x: f64,
    pub theta: f64,
}

impl Point {
    pub const fn new(x: f64, theta: f64) -> Self {
        Point { x, theta }
    }

    pub fn dot(self, other: Point) -> f64 {
        self.x * other.x + self.theta * other.theta
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.theta)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.theta.is_finite()
    }
}

impl Add for Point {
    type Output = Point;
    fn add(self, rhs: Point) -> Point {
        Point::new(self.x + rhs.x, self.theta + rhs.theta)
    }
}

impl Sub for Point {
    type Output = Point;
    fn sub(self, rhs: Point) -> Point {
        Point::new(self.x - rhs.x, self.theta - rhs.theta)
    }
}

impl Mul<Point> for f64 {
    type Output = Point;
    fn mul(self, rhs: Point) -> Point {
        Point::new(self * rhs.x, self * rhs.theta)
    }
}

/// A time-dependent planar velocity field `G(t, X)` together with its
/// divergence.
///
/// Implementations are evaluated inside the closed domain only. They may
/// return non-finite values outside their domain of definition; callers
/// check finiteness.
pub trait VelocityField: Sync {
    fn velocity(&self, t: f64, p: Point) -> Point;

    fn divergence(&self, t: f64, p: Point) -> f64;

    /// Whether some therapy acts at time `t`. Only used for reporting.
    fn treated(&self, _t: f64) -> bool {
        false
    }
}

impl<F: VelocityField + ?Sized> VelocityField for &F {
    fn velocity(&self, t: f64, p: Point) -> Point {
        (**self).velocity(t, p)
    }

    fn divergence(&self, t: f64, p: Point) -> f64 {
        (**self).divergence(t, p)
    }

    fn treated(&self, t: f64) -> bool {
        (**self).treated(t)
    }
}

/// Affine field `G(X) = A X + c`, handy for synthetic checks with known
/// flows. Its divergence is the trace of `A`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AffineField {
    pub a: [[f64; 2]; 2],
    pub c: Point,
}

impl AffineField {
    pub fn constant(c: Point) -> Self {
        AffineField {
            a: [[0.0; 2]; 2],
            c,
        }
    }
}

impl VelocityField for AffineField {
    fn velocity(&self, _t: f64, p: Point) -> Point {
        Point::new(
            self.a[0][0] * p.x + self.a[0][1] * p.theta + self.c.x,
            self.a[1][0] * p.x + self.a[1][1] * p.theta + self.c.theta,
        )
    }

    fn divergence(&self, _t: f64, _p: Point) -> f64 {
        self.a[0][0] + self.a[1][1]
    }
}
