//! Characteristic curves `X(t; tau, sigma)` of a velocity field, the
//! Jacobians of the two characteristic changes of variables, and the
//! backward entrance map.
//!
//! Curves starting on the inflow boundary at time `tau` straighten the
//! boundary-fed part of the density; curves starting at time 0 inside the
//! domain straighten the part carried by the initial condition. Along a
//! curve the area element changes by `exp(int div G)`, and a curve born on
//! the boundary additionally carries the inflow speed `|G . nu|`.

use crate::error::{Error, Result};
use crate::field::{Point, VelocityField};

/// Closed rectangle `[x_birth, b] x [theta_low, b]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Domain {
    pub x_birth: f64,
    pub theta_low: f64,
    pub b: f64,
}

/// A side of the domain rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    /// `x = x_birth`, where metastases are born.
    Birth,
    /// `theta = theta_low`.
    ThetaLow,
    /// `x = b`.
    SizeMax,
    /// `theta = b`.
    ThetaMax,
}

impl Domain {
    pub fn new(x_birth: f64, theta_low: f64, b: f64) -> Result<Self> {
        if !(x_birth > 0.0 && x_birth < b) {
            return Err(Error::param("x_birth", format!("must lie in (0, b = {b})")));
        }
        if !(theta_low > 0.0 && theta_low < b) {
            return Err(Error::param("theta_low", format!("must lie in (0, b = {b})")));
        }
        Ok(Domain {
            x_birth,
            theta_low,
            b,
        })
    }

    /// Tolerance below which clamping is not reported.
    pub fn eps_dom(&self) -> f64 {
        1e-9 * self.b
    }

    /// Tolerance of the forward/backward round trip.
    pub fn eps_rt(&self) -> f64 {
        1e-6 * self.b
    }

    pub fn contains(&self, p: Point) -> bool {
        p.x >= self.x_birth && p.x <= self.b && p.theta >= self.theta_low && p.theta <= self.b
    }

    /// Projects `p` onto the closed domain; returns the projection and the
    /// distance moved.
    pub fn clamp(&self, p: Point) -> (Point, f64) {
        let q = Point::new(
            p.x.clamp(self.x_birth, self.b),
            p.theta.clamp(self.theta_low, self.b),
        );
        (q, (q - p).norm())
    }

    fn side_tol(value: f64) -> f64 {
        1e-9 * value.abs()
    }

    /// The side `p` lies on, within a tolerance relative to that side's
    /// coordinate. Corners resolve to the birth side first.
    pub fn side_of(&self, p: Point) -> Option<Side> {
        if (p.x - self.x_birth).abs() <= Self::side_tol(self.x_birth) {
            Some(Side::Birth)
        } else if (p.theta - self.theta_low).abs() <= Self::side_tol(self.theta_low) {
            Some(Side::ThetaLow)
        } else if (p.x - self.b).abs() <= Self::side_tol(self.b) {
            Some(Side::SizeMax)
        } else if (p.theta - self.b).abs() <= Self::side_tol(self.b) {
            Some(Side::ThetaMax)
        } else {
            None
        }
    }

    pub fn on_boundary(&self, p: Point) -> bool {
        self.side_of(p).is_some()
    }

    /// Unit normal pointing into the domain.
    pub fn inward_normal(side: Side) -> Point {
        match side {
            Side::Birth => Point::new(1.0, 0.0),
            Side::ThetaLow => Point::new(0.0, 1.0),
            Side::SizeMax => Point::new(-1.0, 0.0),
            Side::ThetaMax => Point::new(0.0, -1.0),
        }
    }

    /// Moves the coordinates of `p` that lie outside back onto the sides
    /// they crossed.
    fn snap(&self, p: Point) -> Point {
        self.clamp(p).0
    }
}

/// Uniform time grid `t_k = k dt`, `k = 0..=steps`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    pub dt: f64,
    pub steps: usize,
}

impl TimeGrid {
    /// Requires `t_end / dt` to be an integer up to round-off.
    pub fn new(t_end: f64, dt: f64) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::param("dt", "must be positive"));
        }
        if !(t_end >= 0.0 && t_end.is_finite()) {
            return Err(Error::param("t_end", "must be non-negative"));
        }
        let steps = (t_end / dt).round();
        if (steps * dt - t_end).abs() > 1e-9 * t_end.max(dt) {
            return Err(Error::param(
                "dt",
                format!("horizon {t_end} is not an integer multiple of {dt}"),
            ));
        }
        Ok(TimeGrid {
            dt,
            steps: steps as usize,
        })
    }

    pub fn time(&self, k: usize) -> f64 {
        k as f64 * self.dt
    }

    pub fn t_end(&self) -> f64 {
        self.time(self.steps)
    }
}

/// Result of a clamped RK4 step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Step {
    pub point: Point,
    /// Distance by which the raw update was projected back into the domain,
    /// or zero when below `eps_dom`.
    pub clamped: f64,
}

/// One classical Runge-Kutta step of size `dt` (may be negative), without
/// any projection.
#[inline]
pub fn rk4_free<F: VelocityField + ?Sized>(field: &F, t: f64, p: Point, dt: f64) -> Point {
    let k1 = field.velocity(t, p);
    let k2 = field.velocity(t + 0.5 * dt, p + (0.5 * dt) * k1);
    let k3 = field.velocity(t + 0.5 * dt, p + (0.5 * dt) * k2);
    let k4 = field.velocity(t + dt, p + dt * k3);
    p + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
}

/// One classical Runge-Kutta step kept inside the closed domain.
///
/// Stage points are projected onto the domain before the field is
/// evaluated, so a field that pushes outward (for instance a cytotoxic kill
/// term at the birth size) never gets evaluated where it is undefined.
#[inline]
pub fn rk4_step<F: VelocityField + ?Sized>(
    t: f64,
    p: Point,
    dt: f64,
    field: &F,
    domain: &Domain,
) -> Result<Step> {
    let c = |q: Point| domain.clamp(q).0;
    let k1 = field.velocity(t, p);
    let k2 = field.velocity(t + 0.5 * dt, c(p + (0.5 * dt) * k1));
    let k3 = field.velocity(t + 0.5 * dt, c(p + (0.5 * dt) * k2));
    let k4 = field.velocity(t + dt, c(p + dt * k3));
    let raw = p + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if !raw.is_finite() {
        return Err(Error::NonFinite {
            t,
            what: format!("RK4 step from ({}, {})", p.x, p.theta),
        });
    }
    let (point, dist) = domain.clamp(raw);
    Ok(Step {
        point,
        clamped: if dist > domain.eps_dom() { dist } else { 0.0 },
    })
}

/// Integrates `dX/dt = G` from `(t0, p)` to `t1` with `steps` unclamped RK4
/// steps.
pub fn flow<F: VelocityField + ?Sized>(
    field: &F,
    t0: f64,
    p: Point,
    t1: f64,
    steps: usize,
) -> Result<Point> {
    let h = (t1 - t0) / steps.max(1) as f64;
    let mut q = p;
    for n in 0..steps.max(1) {
        q = rk4_free(field, t0 + n as f64 * h, q, h);
        if !q.is_finite() {
            return Err(Error::NonFinite {
                t: t0 + n as f64 * h,
                what: "flow integration".into(),
            });
        }
    }
    Ok(q)
}

/// A characteristic sampled on the time grid from its origin time onward.
#[derive(Debug, Clone, PartialEq)]
pub struct CharacteristicPath {
    pub origin_time: f64,
    pub origin: Point,
    /// Grid index of `origin_time`.
    pub origin_step: usize,
    pub dt: f64,
    /// `X(t_k)` for `k = origin_step..=steps`.
    pub samples: Vec<Point>,
    /// `div G(t_k, X(t_k))` at every sample.
    pub div_samples: Vec<f64>,
    /// Largest projection distance recorded while integrating.
    pub max_clamp: f64,
}

impl CharacteristicPath {
    pub fn time(&self, n: usize) -> f64 {
        self.origin_time + n as f64 * self.dt
    }

    pub fn last(&self) -> Point {
        *self.samples.last().expect("path has its origin sample")
    }
}

fn check_div(t: f64, v: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonFinite {
            t,
            what: "divergence".into(),
        })
    }
}

/// Samples the characteristic through `(tau, sigma)` at every grid time
/// from `tau` to the horizon. `tau` must be a grid time.
pub fn integrate_path<F: VelocityField + ?Sized>(
    tau: f64,
    sigma: Point,
    grid: &TimeGrid,
    field: &F,
    domain: &Domain,
) -> Result<CharacteristicPath> {
    let start = (tau / grid.dt).round();
    if start < 0.0 || (start * grid.dt - tau).abs() > 1e-9 * grid.dt.max(tau) {
        return Err(Error::param("tau", format!("{tau} is not on the time grid")));
    }
    let start = start as usize;
    if start > grid.steps {
        return Err(Error::param("tau", "beyond the horizon"));
    }
    if !domain.contains(sigma) {
        return Err(Error::Domain(format!(
            "origin ({}, {}) outside the domain",
            sigma.x, sigma.theta
        )));
    }
    let n = grid.steps - start + 1;
    let mut samples = Vec::with_capacity(n);
    let mut divs = Vec::with_capacity(n);
    let mut max_clamp: f64 = 0.0;
    let mut p = sigma;
    samples.push(p);
    divs.push(check_div(tau, field.divergence(tau, p))?);
    for k in start..grid.steps {
        let t = grid.time(k);
        let step = rk4_step(t, p, grid.dt, field, domain)?;
        max_clamp = max_clamp.max(step.clamped);
        p = step.point;
        samples.push(p);
        divs.push(check_div(t + grid.dt, field.divergence(t + grid.dt, p))?);
    }
    Ok(CharacteristicPath {
        origin_time: tau,
        origin: sigma,
        origin_step: start,
        dt: grid.dt,
        samples,
        div_samples: divs,
        max_clamp,
    })
}

/// Running composite trapezoid of equally spaced samples, starting at 0.
pub fn cumulative_trapezoid(values: &[f64], h: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(values.len());
    let mut acc = 0.0;
    for (n, v) in values.iter().enumerate() {
        if n > 0 {
            acc += 0.5 * h * (values[n - 1] + v);
        }
        out.push(acc);
    }
    out
}

/// `J1(t_k) = |G(tau, sigma) . nu| exp(int_tau^t_k div G)` along a path born
/// on the boundary, with the integral taken by the composite trapezoid rule.
///
/// `normal` is the inward unit normal at the origin; the path must be
/// inflowing there.
pub fn jacobian_j1<F: VelocityField + ?Sized>(
    path: &CharacteristicPath,
    normal: Point,
    field: &F,
) -> Result<Vec<f64>> {
    let speed = field.velocity(path.origin_time, path.origin).dot(normal);
    if !(speed > 0.0) {
        return Err(Error::NotInflowing {
            t: path.origin_time,
            x: path.origin.x,
            theta: path.origin.theta,
            normal_speed: speed,
        });
    }
    Ok(cumulative_trapezoid(&path.div_samples, path.dt)
        .into_iter()
        .map(|s| speed * s.exp())
        .collect())
}

/// `J2(t_k) = exp(int_0^t_k div G)` along a path starting at time 0.
pub fn jacobian_j2(path: &CharacteristicPath) -> Result<Vec<f64>> {
    if path.origin_step != 0 {
        return Err(Error::param("tau", "J2 is defined for paths starting at t = 0"));
    }
    Ok(cumulative_trapezoid(&path.div_samples, path.dt)
        .into_iter()
        .map(f64::exp)
        .collect())
}

/// Where the characteristic through a point came from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Entrance {
    /// Entered through the boundary at time `tau`, at point `sigma`.
    Boundary { tau: f64, sigma: Point, side: Side },
    /// Already inside the domain at time 0, at `origin`.
    Interior { origin: Point },
}

/// Follows the characteristic through `(t, x)` backward in time until it
/// either meets the boundary or reaches time 0.
///
/// Backward steps use the grid step; the step that leaves the domain is
/// bisected down to round-off to locate the crossing.
pub fn entrance_map<F: VelocityField + ?Sized>(
    t: f64,
    x: Point,
    grid: &TimeGrid,
    field: &F,
    domain: &Domain,
) -> Result<Entrance> {
    if !domain.contains(x) {
        return Err(Error::EntranceSearch(format!(
            "({}, {}) is outside the domain",
            x.x, x.theta
        )));
    }
    if let Some(side) = domain.side_of(x) {
        return Ok(Entrance::Boundary {
            tau: t,
            sigma: x,
            side,
        });
    }
    let inside = |q: Point| q.is_finite() && domain.contains(q);
    let mut s = t;
    let mut p = x;
    while s > 0.0 {
        let h = grid.dt.min(s);
        let q = rk4_free(field, s, p, -h);
        if inside(q) {
            p = q;
            s -= h;
            // snap accumulated round-off onto t = 0
            if s < 1e-12 * grid.dt {
                s = 0.0;
            }
            continue;
        }
        let (mut lo, mut hi) = (0.0f64, h);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if inside(rk4_free(field, s, p, -mid)) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let inner = rk4_free(field, s, p, -lo);
        let outer = rk4_free(field, s, p, -hi);
        // the crossed side is the one the outer point violates
        let crossed = if !outer.is_finite() || outer.x < domain.x_birth {
            Point::new(domain.x_birth, inner.theta)
        } else if outer.theta < domain.theta_low {
            Point::new(inner.x, domain.theta_low)
        } else if outer.x > domain.b {
            Point::new(domain.b, inner.theta)
        } else {
            Point::new(inner.x, domain.b)
        };
        let sigma = domain.snap(crossed);
        let side = domain.side_of(sigma).ok_or_else(|| {
            Error::EntranceSearch(format!(
                "crossing ({}, {}) not on a side",
                sigma.x, sigma.theta
            ))
        })?;
        return Ok(Entrance::Boundary {
            tau: (s - lo).max(0.0),
            sigma,
            side,
        });
    }
    Ok(Entrance::Interior { origin: p })
}

/// Incrementally extended characteristic used by the transport scheme:
/// current position plus the running trapezoid integral of the divergence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathCursor {
    pub pos: Point,
    /// Trapezoid approximation of `int div G` since the origin.
    pub log_jacobian: f64,
    last_div: f64,
    prev_div: f64,
    /// Largest `|d^2/dt^2 div G|` seen along the path (second differences),
    /// which bounds the trapezoid error of `log_jacobian`.
    pub max_div_curvature: f64,
    /// `|G . nu|` at the origin for boundary-born paths, 1 otherwise.
    pub inflow: f64,
    pub max_clamp: f64,
}

impl PathCursor {
    pub fn start<F: VelocityField + ?Sized>(
        t: f64,
        origin: Point,
        inflow: f64,
        field: &F,
    ) -> Result<Self> {
        Ok(PathCursor {
            pos: origin,
            log_jacobian: 0.0,
            last_div: check_div(t, field.divergence(t, origin))?,
            prev_div: f64::NAN,
            max_div_curvature: 0.0,
            inflow,
            max_clamp: 0.0,
        })
    }

    /// Advances from `t` to `t + dt`.
    #[inline]
    pub fn step<F: VelocityField + ?Sized>(
        &mut self,
        t: f64,
        dt: f64,
        field: &F,
        domain: &Domain,
    ) -> Result<()> {
        let s = rk4_step(t, self.pos, dt, field, domain)?;
        let div = check_div(t + dt, field.divergence(t + dt, s.point))?;
        self.log_jacobian += 0.5 * dt * (self.last_div + div);
        if self.prev_div.is_finite() {
            let curv = (div - 2.0 * self.last_div + self.prev_div).abs() / (dt * dt);
            self.max_div_curvature = self.max_div_curvature.max(curv);
        }
        self.prev_div = self.last_div;
        self.last_div = div;
        self.pos = s.point;
        self.max_clamp = self.max_clamp.max(s.clamped);
        Ok(())
    }

    pub fn jacobian(&self) -> f64 {
        self.inflow * self.log_jacobian.exp()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::AffineField;
    use crate::pkpd::{GrowthParams, TumorGrowthField};

    fn unit_domain() -> Domain {
        Domain::new(1.0, 1.0, 10.0).unwrap()
    }

    fn mouse_field() -> (TumorGrowthField, Domain) {
        let p = GrowthParams::mouse();
        let d = Domain::new(p.x0, p.x0, p.carrying_capacity()).unwrap();
        (TumorGrowthField::untreated(p), d)
    }

    #[test]
    fn zero_field_leaves_point_unchanged() {
        let f = AffineField::constant(Point::new(0.0, 0.0));
        let p = Point::new(3.0, 4.0);
        let s = rk4_step(0.0, p, 0.5, &f, &unit_domain()).unwrap();
        assert_eq!(s.point, p);
        assert_eq!(s.clamped, 0.0);
    }

    #[test]
    fn exponential_growth_step() {
        let f = AffineField {
            a: [[1.0, 0.0], [0.0, 0.0]],
            c: Point::new(0.0, 0.0),
        };
        let s = rk4_step(0.0, Point::new(1.0, 5.0), 0.1, &f, &unit_domain()).unwrap();
        // one RK4 step reproduces the degree-4 Taylor polynomial of exp
        let h: f64 = 0.1;
        let taylor = 1.0 + h + h * h / 2.0 + h.powi(3) / 6.0 + h.powi(4) / 24.0;
        assert!((s.point.x - taylor).abs() < 1e-15);
        assert!((s.point.x / h.exp() - 1.0).abs() < 1e-7);
        assert_eq!(s.point.theta, 5.0);
    }

    #[test]
    fn carrying_capacity_is_fixed() {
        let (f, d) = mouse_field();
        let b = d.b;
        let s = rk4_step(0.0, Point::new(b, b), 0.1, &f, &d).unwrap();
        assert!((s.point.x - b).abs() < 1e-9 * b);
        assert!((s.point.theta - b).abs() < 1e-9 * b);
    }

    #[test]
    fn clamp_is_recorded() {
        let f = AffineField::constant(Point::new(-100.0, 0.0));
        let s = rk4_step(0.0, Point::new(2.0, 5.0), 0.1, &f, &unit_domain()).unwrap();
        assert_eq!(s.point.x, 1.0);
        assert!((s.clamped - 9.0).abs() < 1e-12);
    }

    #[test]
    fn path_at_horizon_is_single_sample() {
        let (f, d) = mouse_field();
        let grid = TimeGrid::new(2.0, 0.1).unwrap();
        let sigma = Point::new(d.x_birth, 625.0);
        let path = integrate_path(2.0, sigma, &grid, &f, &d).unwrap();
        assert_eq!(path.samples, vec![sigma]);
    }

    #[test]
    fn untreated_path_approaches_carrying_capacity() {
        let (f, d) = mouse_field();
        let grid = TimeGrid::new(150.0, 0.05).unwrap();
        let path = integrate_path(0.0, Point::new(d.x_birth, 625.0), &grid, &f, &d).unwrap();
        let end = path.last();
        assert!((end.x / d.b - 1.0).abs() < 0.02, "{end:?}");
        assert!((end.theta / d.b - 1.0).abs() < 0.02, "{end:?}");
        // later samples are closer to (b, b) than earlier ones
        let gap = |p: Point| (p - Point::new(d.b, d.b)).norm();
        let n = path.samples.len();
        assert!(gap(path.samples[n - 1]) < gap(path.samples[n / 2]));
    }

    #[test]
    fn rk4_fourth_order_on_untreated_field() {
        let (f, d) = mouse_field();
        let sigma = Point::new(1.0, 625.0);
        let end = |dt: f64| {
            let g = TimeGrid::new(4.0, dt).unwrap();
            integrate_path(0.0, sigma, &g, &f, &d).unwrap().last()
        };
        let reference = end(0.2 / 64.0);
        let e1 = (end(0.2) - reference).norm();
        let e2 = (end(0.1) - reference).norm();
        let ratio = e1 / e2;
        assert!(ratio > 12.0 && ratio < 20.0, "ratio {ratio}");
    }

    #[test]
    fn j1_constant_divergence() {
        let lambda = 0.3;
        let f = AffineField {
            a: [[-lambda / 2.0, 0.0], [0.0, -lambda / 2.0]],
            c: Point::new(3.0, 2.5),
        };
        let d = unit_domain();
        let grid = TimeGrid::new(2.0, 0.1).unwrap();
        let sigma = Point::new(1.0, 5.0);
        let path = integrate_path(0.5, sigma, &grid, &f, &d).unwrap();
        let j1 = jacobian_j1(&path, Domain::inward_normal(Side::Birth), &f).unwrap();
        let speed = f.velocity(0.5, sigma).x;
        assert_eq!(j1[0], speed);
        for (n, v) in j1.iter().enumerate() {
            let exact = speed * (-lambda * n as f64 * 0.1).exp();
            assert!((v - exact).abs() < 1e-12 * exact);
        }
    }

    #[test]
    fn j1_divergence_free_is_constant() {
        let f = AffineField::constant(Point::new(1.0, 0.2));
        let d = unit_domain();
        let grid = TimeGrid::new(3.0, 0.25).unwrap();
        let path = integrate_path(0.0, Point::new(1.0, 3.0), &grid, &f, &d).unwrap();
        let j1 = jacobian_j1(&path, Domain::inward_normal(Side::Birth), &f).unwrap();
        assert!(j1.iter().all(|&v| v == 1.0));
        let j2 = jacobian_j2(&path).unwrap();
        assert!(j2.iter().all(|&v| v == 1.0));
    }

    #[test]
    fn j1_rejects_outflow() {
        let f = AffineField::constant(Point::new(-1.0, 0.0));
        let d = unit_domain();
        let grid = TimeGrid::new(1.0, 0.5).unwrap();
        let path = integrate_path(0.0, Point::new(1.0, 3.0), &grid, &f, &d).unwrap();
        let err = jacobian_j1(&path, Domain::inward_normal(Side::Birth), &f).unwrap_err();
        assert!(matches!(err, Error::NotInflowing { .. }));
    }

    #[test]
    fn j2_constant_divergence() {
        let f = AffineField {
            a: [[-0.1, 0.0], [0.0, -0.2]],
            c: Point::new(1.0, 1.5),
        };
        let d = unit_domain();
        let grid = TimeGrid::new(2.0, 0.1).unwrap();
        let path = integrate_path(0.0, Point::new(4.0, 4.0), &grid, &f, &d).unwrap();
        let j2 = jacobian_j2(&path).unwrap();
        assert_eq!(j2[0], 1.0);
        for (n, v) in j2.iter().enumerate() {
            assert!((v - (-0.3 * n as f64 * 0.1).exp()).abs() < 1e-12);
        }
        let late = integrate_path(0.5, Point::new(4.0, 4.0), &grid, &f, &d).unwrap();
        assert!(jacobian_j2(&late).is_err());
    }

    #[test]
    fn entrance_of_boundary_point_is_itself() {
        let (f, d) = mouse_field();
        let grid = TimeGrid::new(5.0, 0.1).unwrap();
        let x = Point::new(d.x_birth, 700.0);
        match entrance_map(3.0, x, &grid, &f, &d).unwrap() {
            Entrance::Boundary { tau, sigma, side } => {
                assert_eq!(tau, 3.0);
                assert_eq!(sigma, x);
                assert_eq!(side, Side::Birth);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn entrance_round_trip() {
        let (f, d) = mouse_field();
        let grid = TimeGrid::new(6.0, 0.05).unwrap();
        for &tau in &[0.5, 2.0, 4.5] {
            let sigma = Point::new(d.x_birth, 640.0);
            let path = integrate_path(tau, sigma, &grid, &f, &d).unwrap();
            match entrance_map(6.0, path.last(), &grid, &f, &d).unwrap() {
                Entrance::Boundary { tau: t2, sigma: s2, side } => {
                    assert_eq!(side, Side::Birth);
                    assert!((t2 - tau).abs() < 1e-3 * grid.dt, "{t2} vs {tau}");
                    assert!((s2 - sigma).norm() < d.eps_rt());
                }
                other => panic!("{other:?}"),
            }
        }
    }

    #[test]
    fn entrance_of_interior_image() {
        let (f, d) = mouse_field();
        let grid = TimeGrid::new(3.0, 0.05).unwrap();
        let y = Point::new(50.0, 800.0);
        let path = integrate_path(0.0, y, &grid, &f, &d).unwrap();
        match entrance_map(3.0, path.last(), &grid, &f, &d).unwrap() {
            Entrance::Interior { origin } => assert!((origin - y).norm() < 1e-6 * y.norm()),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn time_grid_requires_integral_steps() {
        assert_eq!(TimeGrid::new(15.0, 0.01).unwrap().steps, 1500);
        assert!(TimeGrid::new(1.0, 0.3).is_err());
    }

    #[test]
    fn trapezoid_of_linear_is_exact() {
        let v: Vec<f64> = (0..5).map(|n| 2.0 * n as f64).collect();
        let c = cumulative_trapezoid(&v, 0.5);
        // integral of 4s from 0 to n/2 is 2 (n/2)^2
        for (n, s) in c.iter().enumerate() {
            assert!((s - 2.0 * (n as f64 * 0.5).powi(2)).abs() < 1e-12);
        }
    }
}
