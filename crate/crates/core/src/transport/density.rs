use super::Solver;
use crate::characteristics::{entrance_map, Entrance, Side, TimeGrid};
use crate::error::{Error, Result};
use crate::field::{Point, VelocityField};

/// Approximate Jacobians of the straightening maps at the current step.
#[derive(Debug, Clone, PartialEq)]
pub struct JacobianTable {
    pub k: usize,
    /// `J1(t_k; tau_i, sigma_n)` per boundary row and birth node.
    pub j1: Vec<Vec<f64>>,
    /// `J2(t_k; Y_n)` per tracked initial-data node.
    pub j2: Vec<f64>,
    /// Composite-trapezoid error bound on `log J`, from the largest second
    /// difference of the divergence seen along any path.
    pub log_residual: f64,
}

impl<F: VelocityField> Solver<F> {
    /// Collects the Jacobians accumulated by the cached characteristics.
    pub fn jacobian_table(&self) -> JacobianTable {
        let k = self.step_index();
        let t = self.time();
        let dt = self.discretization().dt;
        let mut curv: f64 = 0.0;
        let j1 = (0..=k)
            .map(|i| {
                self.row_cursors(i)
                    .iter()
                    .map(|c| {
                        curv = curv.max(c.max_div_curvature);
                        c.jacobian()
                    })
                    .collect()
            })
            .collect();
        let j2 = self
            .cell_cursors()
            .iter()
            .map(|c| {
                curv = curv.max(c.max_div_curvature);
                c.jacobian()
            })
            .collect();
        JacobianTable {
            k,
            j1,
            j2,
            log_residual: t * dt * dt / 12.0 * curv,
        }
    }

    /// Density `rho(t_k, X)` on the domain, recovered from the straightened
    /// unknowns through the entrance map and the Jacobians.
    ///
    /// Boundary-born points take the row and birth cell that contain their
    /// entrance `(tau, sigma)`; other points take the initial cell that
    /// contains their origin. Points entering outside the support of `N` or
    /// through another side carry no density.
    pub fn reconstruct_density(&self, table: &JacobianTable, x: Point) -> Result<f64> {
        let disc = self.discretization();
        if disc.dirac {
            return Err(Error::Unsupported(
                "density reconstruction needs a birth segment; the point-mass boundary has no density"
                    .into(),
            ));
        }
        if table.k != self.step_index() {
            return Err(Error::Unsupported(format!(
                "Jacobian table built at step {}, solver is at step {}",
                table.k,
                self.step_index()
            )));
        }
        let model = self.model();
        let k = self.step_index();
        let grid = TimeGrid {
            dt: disc.dt,
            steps: k,
        };
        match entrance_map(self.time(), x, &grid, &model.field, &model.domain)? {
            Entrance::Boundary { tau, sigma, side } => {
                if side != Side::Birth {
                    return Ok(0.0);
                }
                let Some(j) = self.boundary_grid().entry_at(sigma.theta) else {
                    return Ok(0.0);
                };
                let i = ((tau / disc.dt - 1e-9).ceil().max(0.0) as usize).min(k);
                let value = self.rho1_rows().nth(i).expect("row exists")[j];
                let node = self.boundary_grid().entry_nodes[j][0];
                Ok(value / table.j1[i][node])
            }
            Entrance::Interior { origin } => match self.cell_grid().locate(origin) {
                Some((e, node)) => Ok(self.cell_grid().entries[e].value / table.j2[node]),
                None => Ok(0.0),
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::characteristics::Domain;
    use crate::field::AffineField;
    use crate::pkpd::{Colonization, GrowthParams, Therapy};
    use crate::transport::{
        BirthSegment, Discretization, InitialDensity, Model, Repartition, SolverOptions, Source,
    };

    fn model(velocity: Point, source: Source) -> Model<AffineField> {
        Model {
            field: AffineField::constant(velocity),
            domain: Domain::new(1.0, 1.0, 10.0).unwrap(),
            colonization: Colonization { m: 0.0, alpha: 1.0 },
            birth: BirthSegment {
                center: 5.0,
                half_width: 3.0,
                profile: Repartition::Uniform,
            },
            source,
        }
    }

    fn disc() -> Discretization {
        Discretization {
            t_end: 2.0,
            dt: 0.1,
            dsigma: 0.5,
            dx: 0.25,
            dirac: false,
            ..Discretization::default()
        }
    }

    #[test]
    fn transported_constant_is_recovered() {
        let mut s = Solver::new(
            model(Point::new(1.0, 0.5), Source::Off),
            disc(),
            &InitialDensity::custom(|_| 2.5),
            SolverOptions::default(),
        )
        .unwrap();
        s.run_to_end().unwrap();
        let table = s.jacobian_table();
        for x in [Point::new(6.0, 6.0), Point::new(3.1, 2.2), Point::new(9.9, 9.9)] {
            let v = s.reconstruct_density(&table, x).unwrap();
            assert!((v - 2.5).abs() < 1e-12, "{x:?} {v}");
        }
    }

    #[test]
    fn freshly_emitted_density_is_trace_over_normal_speed() {
        let mut s = Solver::new(
            model(Point::new(2.0, 0.0), Source::Constant(3.0)),
            disc(),
            &InitialDensity::Zero,
            SolverOptions::default(),
        )
        .unwrap();
        s.run_to_end().unwrap();
        let table = s.jacobian_table();
        let n = 1.0 / 6.0;
        let on_side = s.reconstruct_density(&table, Point::new(1.0, 5.2)).unwrap();
        assert!((on_side - 3.0 * n / 2.0).abs() < 1e-12);
        // outside the support of N and in the unreached region
        assert_eq!(s.reconstruct_density(&table, Point::new(1.0, 9.0)).unwrap(), 0.0);
        assert_eq!(s.reconstruct_density(&table, Point::new(8.0, 5.0)).unwrap(), 0.0);
    }

    #[test]
    fn dirac_mode_has_no_density() {
        let m = Model::tumor(&GrowthParams::mouse(), &Therapy::none(), None).unwrap();
        let s = Solver::new(
            m,
            Discretization {
                t_end: 0.1,
                ..Discretization::default()
            },
            &InitialDensity::Zero,
            SolverOptions::default(),
        )
        .unwrap();
        let table = s.jacobian_table();
        assert!(matches!(
            s.reconstruct_density(&table, Point::new(1.0, 625.0)),
            Err(Error::Unsupported(_))
        ));
    }
}
