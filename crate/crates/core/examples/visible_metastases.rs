//! Total against visible (at least 100 mm³) metastases without treatment,
//! from a single-cell primary tumor, and who emitted them.
//!
//! ```text
//! cargo run --release --example visible_metastases
//! ```

use angiomet::{Discretization, GrowthParams, InitialDensity, Model, Solver, SolverOptions, Therapy};

fn main() -> angiomet::Result<()> {
    let disc = Discretization {
        t_end: 60.0,
        dt: 0.02,
        ..Discretization::default()
    };
    let model = Model::tumor(&GrowthParams::mouse(), &Therapy::none(), None)?;
    let mut solver = Solver::new(model, disc, &InitialDensity::Zero, SolverOptions::default())?;
    println!(
        "{:>5} {:>12} {:>12} {:>12} {:>14} {:>14}",
        "day", "x_p", "total", "visible", "from primary", "from metast."
    );
    for day in (0..=60).step_by(5) {
        while solver.time() < day as f64 - 1e-9 {
            solver.advance()?;
        }
        let r = solver.series().last();
        println!(
            "{day:>5} {:>12.4e} {:>12.4e} {:>12.4e} {:>14.4e} {:>14.4e}",
            r.x_p, r.mi, r.visible, r.emitted_primary, r.emitted_meta
        );
    }
    println!("visible above 1000 mm³ at day 60: {:.4e}", solver.visible_count(1000.0));
    Ok(())
}
