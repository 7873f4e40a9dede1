//! Final metastatic index as the daily endostatine dose increases.
//!
//! ```text
//! cargo run --release --example dose_response
//! ```

use std::path::Path;

use angiomet::config::RunConfig;
use angiomet::runner::sweep;

fn main() -> angiomet::Result<()> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs/endostatine.cfg");
    let cfg = RunConfig::load(&path)?;
    let doses: Vec<String> = [0, 5, 10, 20, 40, 80].iter().map(|d| d.to_string()).collect();
    println!("{:>8} {:>14} {:>14} {:>14}", "dose_mg", "min theta_p", "final x_p", "final MI");
    for (dose, run) in sweep(&cfg, "therapy.aa.dose_mg", &doses)? {
        let rows = &run.series.rows;
        let min_theta = rows.iter().map(|r| r.theta_p).fold(f64::INFINITY, f64::min);
        let last = run.series.last();
        println!("{dose:>8} {min_theta:>14.6e} {:>14.6e} {:>14.6e}", last.x_p, last.mi);
    }
    Ok(())
}
