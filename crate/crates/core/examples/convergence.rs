//! Observed convergence orders of the two scheme variants on a smooth
//! untreated problem: hat-shaped birth profile, established primary tumor,
//! with and without an initial bump of metastases.
//!
//! ```text
//! cargo run --release --example convergence
//! ```

use angiomet::transport::{DataMode, Quadrature};
use angiomet::verify::{convergence_study, ConvergenceSetup};

fn main() -> angiomet::Result<()> {
    for bump in [false, true] {
        for (q, mode) in [
            (Quadrature::Rectangle, DataMode::CellAverage),
            (Quadrature::Trapezoid, DataMode::PointValue),
        ] {
            let mut setup = ConvergenceSetup::smooth(q, mode);
            if bump {
                setup = setup.with_initial_bump();
            }
            let report = convergence_study(&setup, 4, 32)?;
            println!("{q:?} + {mode:?}, initial bump: {bump}");
            print!("{}", report.table());
            println!();
        }
    }
    Ok(())
}
