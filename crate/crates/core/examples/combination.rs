//! Order of a cytotoxic and an anti-angiogenic course: cytotoxic first
//! (days 5-10) then endostatine (days 10-15), against the reverse order.
//!
//! ```text
//! cargo run --release --example combination
//! ```

use angiomet::{
    Discretization, DrugSchedule, GrowthParams, InitialDensity, Model, Solver, SolverOptions,
    Therapy,
};

fn daily(from: f64, to: f64) -> Vec<f64> {
    (0..)
        .map(|i| from + i as f64)
        .take_while(|&t| t <= to)
        .collect()
}

fn main() -> angiomet::Result<()> {
    let cytotoxic = |from, to| DrugSchedule::new(1.0, 1.0, 1.0, daily(from, to));
    let endostatine = |from, to| DrugSchedule::new(0.66, 1.7, 20.0, daily(from, to));
    let protocols = [
        ("CT then AA", Therapy {
            ct: Some(cytotoxic(5.0, 10.0)?),
            aa: Some(endostatine(10.0, 15.0)?),
        }),
        ("AA then CT", Therapy {
            aa: Some(endostatine(5.0, 10.0)?),
            ct: Some(cytotoxic(10.0, 15.0)?),
        }),
    ];
    let disc = Discretization {
        t_end: 15.0,
        dt: 0.01,
        ..Discretization::default()
    };
    println!("{:<12} {:>12} {:>12} {:>14}", "protocol", "x_p(10)", "x_p(15)", "MI(15)");
    for (name, therapy) in protocols {
        let model = Model::tumor(&GrowthParams::mouse(), &therapy, None)?;
        let series =
            Solver::new(model, disc, &InitialDensity::Zero, SolverOptions::default())?.run()?;
        let inflow = series
            .diagnostics
            .iter()
            .map(|d| d.min_inflow)
            .fold(f64::INFINITY, f64::min);
        println!(
            "{name:<12} {:>12.4e} {:>12.4e} {:>14.6e}   (min birth inflow {inflow:.2e})",
            series.at(10.0).x_p,
            series.last().x_p,
            series.last().mi
        );
    }
    Ok(())
}
