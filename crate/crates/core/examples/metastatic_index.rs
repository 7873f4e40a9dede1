//! Metastatic index of the untreated model for three colonization
//! coefficients, in the point-mass boundary reduction, with the primary
//! tumor starting at 200 mm³.
//!
//! ```text
//! cargo run --release --example metastatic_index
//! ```

use angiomet::{Discretization, GrowthParams, InitialDensity, Model, Solver, SolverOptions, Therapy};

fn main() -> angiomet::Result<()> {
    let disc = Discretization {
        t_end: 20.0,
        dt: 0.01,
        ..Discretization::default()
    };
    println!(
        "{:>8} {:>12} {:>12} {:>12} {:>12} {:>12}",
        "m", "MI(1.5)", "MI(7.5)", "MI(15)", "MI(20)", "vis(20)"
    );
    for m in [1e-4, 1e-3, 1e-2] {
        let params = GrowthParams {
            m,
            ..GrowthParams::mouse().established()
        };
        let model = Model::tumor(&params, &Therapy::none(), None)?;
        let series = Solver::new(model, disc, &InitialDensity::Zero, SolverOptions::default())?.run()?;
        println!(
            "{:>8.0e} {:>12.4e} {:>12.4e} {:>12.4e} {:>12.4e} {:>12.4e}",
            m,
            series.at(1.5).mi,
            series.at(7.5).mi,
            series.at(15.0).mi,
            series.at(20.0).mi,
            series.at(20.0).visible,
        );
    }
    Ok(())
}
