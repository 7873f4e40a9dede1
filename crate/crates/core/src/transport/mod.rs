//! Lagrangian scheme for the straightened densities.
//!
//! The boundary-fed part `rho1(t, tau, sigma)` and the initial-data part
//! `rho2(t, Y)` are constant along characteristics, so each time step only
//! copies the stored values, moves every cached characteristic by one RK4
//! step and appends one boundary row
//!
//! ```text
//! rho1(k+1, k+1, j) = N_j B^{k+1} + f_j^{k+1}
//! B^{k+1} = sum_i sum_j beta(X(t_{k+1}; tau_i, sigma_j)) rho1(i, j) w_i w_j
//!         + sum_{l,m} beta(X(t_{k+1}; 0, Y_lm)) rho2(l, m) w_lm
//! ```
//!
//! whose right-hand side only involves rows that already exist.

mod boundary;
mod cells;
mod density;
mod solver;

pub use boundary::BoundaryGrid;
pub use cells::{CellEntry, CellGrid, InitialDensity};
pub use density::JacobianTable;
pub use solver::{
    BoundConstants, SeriesRow, SimulationSeries, Solver, SolverOptions, StepDiagnostics,
};

use crate::characteristics::Domain;
use crate::error::{Error, Result};
use crate::field::{Point, VelocityField};
use crate::pkpd::{Colonization, GrowthParams, Therapy, TumorGrowthField};

/// Quadrature of the nonlocal emission integral and of the masses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Quadrature {
    /// First-order sums, exactly as written for the discrete scheme.
    Rectangle,
    /// Composite trapezoid on the nodes, with a left rectangle on the last
    /// (still unknown) time interval.
    #[default]
    Trapezoid,
}

/// How data are sampled on the grids.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DataMode {
    /// Cell averages; suited to merely bounded data.
    #[default]
    CellAverage,
    /// Node values; suited to Lipschitz data and convergence studies.
    PointValue,
}

/// Angular profile `N` of newborn metastases along the birth side.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Repartition {
    /// `1 / (2 dtheta)` on `[theta0 - dtheta, theta0 + dtheta]`.
    #[default]
    Uniform,
    /// Triangular profile with the same support and unit mass; Lipschitz.
    Hat,
}

impl Repartition {
    /// Density at `theta` for a segment centered at `center`.
    pub fn density(self, center: f64, half_width: f64, theta: f64) -> f64 {
        let u = (theta - center).abs();
        if u > half_width {
            return 0.0;
        }
        match self {
            Repartition::Uniform => 0.5 / half_width,
            Repartition::Hat => (half_width - u) / (half_width * half_width),
        }
    }

    /// Cumulative mass on `(-inf, theta]`.
    pub fn cdf(self, center: f64, half_width: f64, theta: f64) -> f64 {
        let s = ((theta - center) / half_width).clamp(-1.0, 1.0);
        match self {
            Repartition::Uniform => 0.5 * (s + 1.0),
            Repartition::Hat => {
                if s <= 0.0 {
                    0.5 * (1.0 + s) * (1.0 + s)
                } else {
                    1.0 - 0.5 * (1.0 - s) * (1.0 - s)
                }
            }
        }
    }
}

/// Grid steps and scheme options.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Discretization {
    /// Horizon (day).
    pub t_end: f64,
    /// Time step (day).
    pub dt: f64,
    /// Step along the birth side (mm³). Rounded down so that it divides the
    /// support of `N`.
    pub dsigma: f64,
    /// Cell size for the initial-data grid (mm³); the last cell is shortened
    /// when it does not divide the domain.
    pub dx: f64,
    pub quadrature: Quadrature,
    /// Collapse `N` to a unit point mass at `(x_birth, theta0)`.
    pub dirac: bool,
    pub data_mode: DataMode,
}

impl Default for Discretization {
    fn default() -> Self {
        Discretization {
            t_end: 15.0,
            dt: 0.01,
            dsigma: 1.0,
            dx: 100.0,
            quadrature: Quadrature::Trapezoid,
            dirac: true,
            data_mode: DataMode::CellAverage,
        }
    }
}

impl Discretization {
    /// All three steps divided by `factor`.
    pub fn refined(&self, factor: f64) -> Self {
        Discretization {
            dt: self.dt / factor,
            dsigma: self.dsigma / factor,
            dx: self.dx / factor,
            ..*self
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("dt", self.dt), ("dsigma", self.dsigma), ("dx", self.dx)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::param(name, format!("must be positive, got {v}")));
            }
        }
        crate::characteristics::TimeGrid::new(self.t_end, self.dt)?;
        Ok(())
    }
}

/// Where newborn metastases enter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BirthSegment {
    /// `theta0`.
    pub center: f64,
    /// `delta_theta`; ignored in Dirac mode.
    pub half_width: f64,
    pub profile: Repartition,
}

/// Emission by the primary tumor, `f(t, sigma) = N(sigma) s(t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Source {
    /// `s(t) = beta(X_p(t))`, with `X_p` the growth trajectory from the given
    /// initial state.
    PrimaryTumor(Point),
    /// `s(t) = rate`.
    Constant(f64),
    /// `f = 0`.
    Off,
}

/// A complete transport problem: velocity field, domain, emission law and
/// boundary repartition.
#[derive(Debug, Clone, PartialEq)]
pub struct Model<F> {
    pub field: F,
    pub domain: Domain,
    pub colonization: Colonization,
    pub birth: BirthSegment,
    pub source: Source,
}

impl Model<TumorGrowthField> {
    /// The tumor model. `theta_low` defaults to the birth size `x0`.
    pub fn tumor(params: &GrowthParams, therapy: &Therapy, theta_low: Option<f64>) -> Result<Self> {
        params.validate()?;
        if let Some(s) = &therapy.aa {
            s.validate()?;
        }
        if let Some(s) = &therapy.ct {
            s.validate()?;
        }
        let b = params.carrying_capacity();
        let domain = Domain::new(params.x0, theta_low.unwrap_or(params.x0), b)?;
        Ok(Model {
            field: TumorGrowthField::new(params.clone(), therapy.clone(), domain.theta_low),
            domain,
            colonization: params.colonization(),
            birth: BirthSegment {
                center: params.theta0,
                half_width: params.delta_theta,
                profile: Repartition::Uniform,
            },
            source: Source::PrimaryTumor(Point::new(params.primary_x0, params.primary_theta0)),
        })
    }

    pub fn with_repartition(mut self, profile: Repartition) -> Self {
        self.birth.profile = profile;
        self
    }
}

impl<F: VelocityField> Model<F> {
    pub(crate) fn validate(&self, disc: &Discretization) -> Result<()> {
        let d = &self.domain;
        let c = self.birth.center;
        if !(c > d.theta_low && c < d.b) {
            return Err(Error::param("theta0", "birth capacity must lie inside the domain"));
        }
        if !disc.dirac {
            let h = self.birth.half_width;
            if !(h > 0.0) {
                return Err(Error::param(
                    "delta_theta",
                    "must be positive outside Dirac mode",
                ));
            }
            if c - h < d.theta_low || c + h > d.b {
                return Err(Error::param("delta_theta", "birth segment leaves the domain"));
            }
        }
        if let Source::PrimaryTumor(p) = self.source {
            if !d.contains(p) {
                return Err(Error::param("primary_x0", "primary tumor starts outside the domain"));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn repartition_profiles_have_unit_mass() {
        for p in [Repartition::Uniform, Repartition::Hat] {
            assert_eq!(p.cdf(10.0, 2.0, 7.0), 0.0);
            assert_eq!(p.cdf(10.0, 2.0, 13.0), 1.0);
            assert!((p.cdf(10.0, 2.0, 10.0) - 0.5).abs() < 1e-15);
            // midpoint sum of the density
            let n = 4000;
            let h = 4.0 / n as f64;
            let mass: f64 = (0..n)
                .map(|i| p.density(10.0, 2.0, 8.0 + (i as f64 + 0.5) * h) * h)
                .sum();
            assert!((mass - 1.0).abs() < 1e-6);
        }
    }
}
