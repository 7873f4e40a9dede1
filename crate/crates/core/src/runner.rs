//! File-driven runs: single simulations, protocol comparisons, parameter
//! sweeps, and the CSV format shared by all of them.

use std::io::{self, Write};

use rayon::prelude::*;

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::transport::{SimulationSeries, Solver};
use crate::verify::{check_bounds, EstimateReport};

pub const CSV_HEADER: &str =
    "t,x_p,theta_p,MI,visible,emitted_primary,emitted_meta,mass_rho1,mass_rho2";

/// Process exit status for a failed run: 1 for configuration errors, 3 for
/// numerical failures. Invariant failures (2) are reported by the caller.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config { .. } | Error::InvalidParameter { .. } => 1,
        _ => 3,
    }
}

/// Writes one row per grid time, with shortest round-trip decimals.
pub fn write_csv<W: Write>(series: &SimulationSeries, mut out: W) -> io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for r in &series.rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            r.t,
            r.x_p,
            r.theta_p,
            r.mi,
            r.visible,
            r.emitted_primary,
            r.emitted_meta,
            r.mass_rho1,
            r.mass_rho2
        )?;
    }
    Ok(())
}

pub fn csv_string(series: &SimulationSeries) -> String {
    let mut buf = Vec::new();
    write_csv(series, &mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("CSV is ASCII")
}

/// A finished run and its invariant checks.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub series: SimulationSeries,
    pub report: EstimateReport,
}

impl RunOutcome {
    /// Failures of the checks enabled in the configuration.
    pub fn failures(&self, cfg: &RunConfig) -> Vec<String> {
        let mut v = Vec::new();
        if cfg.checks.bounds && !self.report.bounds_hold() {
            v.push("discrete L1/Linf bounds violated".to_string());
        }
        if cfg.checks.bounds && self.report.rho2_drift >= 1e-12 {
            v.push(format!("initial-data mass drifted by {:.3e}", self.report.rho2_drift));
        }
        if cfg.checks.nonnegative && !self.report.nonnegative() {
            v.push(format!("negative value {:.3e}", self.report.min_value));
        }
        v
    }

    /// Conditions worth a warning that do not fail a simulation.
    pub fn warnings(&self) -> Vec<String> {
        let bad: Vec<_> = self.report.steps.iter().filter(|s| s.min_inflow <= 0.0).collect();
        match (bad.first(), bad.last()) {
            (Some(a), Some(b)) => vec![format!(
                "birth-side velocity not inflowing on {} steps (t in [{}, {}], min {:.3e})",
                bad.len(),
                a.t,
                b.t,
                bad.iter().map(|s| s.min_inflow).fold(f64::INFINITY, f64::min)
            )],
            _ => Vec::new(),
        }
    }
}

pub fn simulate(cfg: &RunConfig) -> Result<RunOutcome> {
    let model = cfg.model()?;
    let solver = Solver::new(model, cfg.disc, &cfg.initial.density(), cfg.solver_options())?;
    let series = solver.run()?;
    let report = check_bounds(&series);
    Ok(RunOutcome { series, report })
}

/// Summary line of one configuration in a comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct CompareRow {
    pub name: String,
    pub final_size: f64,
    pub final_mi: f64,
    pub min_size: f64,
    pub final_visible: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub rows: Vec<CompareRow>,
}

impl Comparison {
    /// Names ordered by increasing final metastatic index.
    pub fn ranking(&self) -> Vec<&str> {
        let mut idx: Vec<usize> = (0..self.rows.len()).collect();
        idx.sort_by(|&a, &b| self.rows[a].final_mi.total_cmp(&self.rows[b].final_mi));
        idx.into_iter().map(|i| self.rows[i].name.as_str()).collect()
    }

    pub fn table(&self) -> String {
        let w = self.rows.iter().map(|r| r.name.len()).max().unwrap_or(4).max(4);
        let mut s = format!(
            "{:<w$} {:>14} {:>14} {:>14} {:>14}\n",
            "name", "final_size", "min_size", "final_MI", "final_visible"
        );
        for r in &self.rows {
            s += &format!(
                "{:<w$} {:>14.6e} {:>14.6e} {:>14.6e} {:>14.6e}\n",
                r.name, r.final_size, r.min_size, r.final_mi, r.final_visible
            );
        }
        s += "pairwise final MI:\n";
        for (i, a) in self.rows.iter().enumerate() {
            for b in &self.rows[i + 1..] {
                let rel = match a.final_mi.total_cmp(&b.final_mi) {
                    std::cmp::Ordering::Less => "<",
                    std::cmp::Ordering::Equal => "=",
                    std::cmp::Ordering::Greater => ">",
                };
                s += &format!("  {} {rel} {}\n", a.name, b.name);
            }
        }
        s
    }
}

/// Runs every configuration (concurrently) and tabulates final outcomes.
/// All configurations must share one discretization.
pub fn compare(configs: &[(String, RunConfig)]) -> Result<(Comparison, Vec<RunOutcome>)> {
    if configs.len() < 2 {
        return Err(Error::config("--config", "compare needs at least two configurations"));
    }
    let first = &configs[0].1.disc;
    if let Some((name, _)) = configs.iter().find(|(_, c)| c.disc != *first) {
        return Err(Error::config(
            "discretization",
            format!("'{name}' does not share the discretization of '{}'", configs[0].0),
        ));
    }
    let outcomes: Vec<RunOutcome> = configs
        .par_iter()
        .map(|(_, c)| simulate(c))
        .collect::<Result<_>>()?;
    let rows = configs
        .iter()
        .zip(&outcomes)
        .map(|((name, _), o)| {
            let last = o.series.last();
            CompareRow {
                name: name.clone(),
                final_size: last.x_p,
                final_mi: last.mi,
                min_size: o.series.rows.iter().map(|r| r.x_p).fold(f64::INFINITY, f64::min),
                final_visible: last.visible,
            }
        })
        .collect();
    Ok((Comparison { rows }, outcomes))
}

/// Runs `cfg` once per value of `key` (concurrently).
pub fn sweep(cfg: &RunConfig, key: &str, values: &[String]) -> Result<Vec<(String, RunOutcome)>> {
    let configs = values
        .iter()
        .map(|v| {
            let mut c = cfg.clone();
            c.set(key, v)?;
            c.validate()?;
            Ok((v.clone(), c))
        })
        .collect::<Result<Vec<_>>>()?;
    configs
        .par_iter()
        .map(|(v, c)| Ok((v.clone(), simulate(c)?)))
        .collect()
}
