//! Density of metastases on a few points of the (size, capacity) plane,
//! recovered from the straightened unknowns, and a midpoint-rule check of
//! its integral against the metastatic index.
//!
//! ```text
//! cargo run --release --example density_reconstruction
//! ```

use angiomet::transport::{DataMode, Quadrature, Repartition};
use angiomet::{
    Discretization, GrowthParams, InitialDensity, Model, Point, Solver, SolverOptions, Therapy,
};

fn main() -> angiomet::Result<()> {
    let params = GrowthParams {
        delta_theta: 100.0,
        m: 1e-2,
        ..GrowthParams::mouse().established()
    };
    let model = Model::tumor(&params, &Therapy::none(), None)?.with_repartition(Repartition::Uniform);
    let disc = Discretization {
        t_end: 3.0,
        dt: 0.01,
        dsigma: 2.0,
        dirac: false,
        quadrature: Quadrature::Trapezoid,
        data_mode: DataMode::CellAverage,
        ..Discretization::default()
    };
    let mut solver = Solver::new(model, disc, &InitialDensity::Zero, SolverOptions::default())?;
    solver.run_to_end()?;
    let table = solver.jacobian_table();
    println!("trapezoid bound on log J: {:.2e}", table.log_residual);

    // sample along the characteristics born half way through the run
    let positions = solver.row_positions(solver.step_index() / 2);
    for p in positions.iter().step_by(20) {
        let q = Point::new(p.x, p.theta);
        println!(
            "rho(T, {:>10.4e}, {:>8.3}) = {:.6e}",
            q.x,
            q.theta,
            solver.reconstruct_density(&table, q)?
        );
    }

    // integrate on log-spaced sizes, where the density lives
    let (nx, nt) = (400usize, 400usize);
    let (lx0, lx1) = (1e-6f64.ln(), 10f64.ln());
    let (t0, t1) = (400.0, 900.0);
    let mut total = 0.0;
    for i in 0..nx {
        let (a, b) = (lx0 + (lx1 - lx0) * i as f64 / nx as f64, lx0 + (lx1 - lx0) * (i + 1) as f64 / nx as f64);
        let x = (0.5 * (a + b)).exp();
        let wx = b.exp() - a.exp();
        for j in 0..nt {
            let th = t0 + (t1 - t0) * (j as f64 + 0.5) / nt as f64;
            total += wx * (t1 - t0) / nt as f64 * solver.reconstruct_density(&table, Point::new(x, th))?;
        }
    }
    println!("integral of the density: {total:.6e}");
    println!("metastatic index:        {:.6e}", solver.metastatic_index());
    Ok(())
}
