use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use angiomet::config::RunConfig;
use angiomet::runner::{self, exit_code, RunOutcome};
use angiomet::transport::{DataMode, Quadrature};
use angiomet::verify::{check_bounds, convergence_study, ConvergenceSetup};
use angiomet::Error;

#[derive(Parser)]
#[command(name = "angiomet", version, about = "Metastatic density under anti-angiogenic and cytotoxic therapy")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one configuration and write its time series as CSV.
    Simulate {
        #[command(flatten)]
        run: RunArgs,
        /// CSV destination (defaults to `outputs.csv_path`, then stdout).
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Run several configurations sharing one discretization and rank them.
    Compare {
        #[command(flatten)]
        run: RunArgs,
        /// Directory receiving one CSV per configuration.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Vary one configuration key over a list of values.
    Sweep {
        #[command(flatten)]
        run: RunArgs,
        /// Key to vary, e.g. `therapy.aa.dose_mg`.
        #[arg(long)]
        param: String,
        /// Comma-separated values.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<String>,
        /// Directory receiving one CSV per value.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Observed convergence order against a refined reference run.
    Converge {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, default_value_t = 4)]
        levels: usize,
        #[arg(long, default_value_t = 32)]
        reference: usize,
    },
    /// Check the discrete a-priori bounds, nonnegativity and inflow.
    Check {
        #[command(flatten)]
        run: RunArgs,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum QuadratureArg {
    Rectangle,
    Trapezoid,
}

#[derive(Clone, Copy, ValueEnum)]
enum DataModeArg {
    Average,
    Point,
}

#[derive(Args)]
struct RunArgs {
    /// Configuration file; repeat for `compare`.
    #[arg(long = "config", required = true)]
    configs: Vec<PathBuf>,
    /// Collapse the birth profile to a point mass.
    #[arg(long, overrides_with = "no_dirac")]
    dirac: bool,
    #[arg(long, overrides_with = "dirac")]
    no_dirac: bool,
    #[arg(long, value_enum)]
    quadrature: Option<QuadratureArg>,
    #[arg(long, value_enum)]
    data_mode: Option<DataModeArg>,
    /// Accepted for scripting symmetry; runs are fully deterministic.
    #[arg(long)]
    seedless: bool,
}

impl RunArgs {
    fn load(&self) -> Result<Vec<(String, RunConfig)>, Error> {
        self.configs
            .iter()
            .map(|p| {
                let mut c = RunConfig::load(p)?;
                if self.dirac {
                    c.disc.dirac = true;
                }
                if self.no_dirac {
                    c.disc.dirac = false;
                }
                if let Some(q) = self.quadrature {
                    c.disc.quadrature = match q {
                        QuadratureArg::Rectangle => Quadrature::Rectangle,
                        QuadratureArg::Trapezoid => Quadrature::Trapezoid,
                    };
                }
                if let Some(m) = self.data_mode {
                    c.disc.data_mode = match m {
                        DataModeArg::Average => DataMode::CellAverage,
                        DataModeArg::Point => DataMode::PointValue,
                    };
                }
                c.validate()?;
                let name = p
                    .file_stem()
                    .map_or_else(|| p.display().to_string(), |s| s.to_string_lossy().into_owned());
                Ok((name, c))
            })
            .collect()
    }

    fn single(&self) -> Result<RunConfig, Error> {
        let mut v = self.load()?;
        if v.len() != 1 {
            return Err(Error::config("--config", "expected exactly one configuration"));
        }
        Ok(v.pop().unwrap().1)
    }
}

fn write_series(path: &Path, outcome: &RunOutcome) -> Result<(), Error> {
    let file = File::create(path)
        .map_err(|e| Error::config("--output", format!("cannot write {}: {e}", path.display())))?;
    runner::write_csv(&outcome.series, BufWriter::new(file))
        .map_err(|e| Error::config("--output", e.to_string()))
}

fn report(cfg: &RunConfig, name: &str, outcome: &RunOutcome) -> bool {
    for w in outcome.warnings() {
        eprintln!("warning: {name}: {w}");
    }
    let failures = outcome.failures(cfg);
    for f in &failures {
        eprintln!("error: {name}: {f}");
    }
    failures.is_empty()
}

fn run(cli: Cli) -> Result<i32, Error> {
    match cli.command {
        Command::Simulate { run, output } => {
            let cfg = run.single()?;
            let outcome = runner::simulate(&cfg)?;
            match output.or_else(|| cfg.outputs.csv_path.clone()) {
                Some(p) => write_series(&p, &outcome)?,
                None => {
                    let stdout = io::stdout();
                    runner::write_csv(&outcome.series, stdout.lock())
                        .map_err(|e| Error::config("--output", e.to_string()))?;
                }
            }
            Ok(if report(&cfg, "simulate", &outcome) { 0 } else { 2 })
        }
        Command::Compare { run, output } => {
            let configs = run.load()?;
            let (cmp, outcomes) = runner::compare(&configs)?;
            print!("{}", cmp.table());
            println!("ranking (lowest final MI first): {}", cmp.ranking().join(", "));
            let mut ok = true;
            for ((name, cfg), o) in configs.iter().zip(&outcomes) {
                if let Some(dir) = &output {
                    write_series(&dir.join(format!("{name}.csv")), o)?;
                }
                ok &= report(cfg, name, o);
            }
            Ok(if ok { 0 } else { 2 })
        }
        Command::Sweep {
            run,
            param,
            values,
            output,
        } => {
            let cfg = run.single()?;
            let runs = runner::sweep(&cfg, &param, &values)?;
            println!("{param},final_size,final_MI,final_visible");
            let mut ok = true;
            for (v, o) in &runs {
                let last = o.series.last();
                println!("{v},{},{},{}", last.x_p, last.mi, last.visible);
                if let Some(dir) = &output {
                    write_series(&dir.join(format!("{param}={v}.csv")), o)?;
                }
                ok &= report(&cfg, &format!("{param}={v}"), o);
            }
            Ok(if ok { 0 } else { 2 })
        }
        Command::Converge {
            run,
            levels,
            reference,
        } => {
            let cfg = run.single()?;
            if levels == 0 || reference <= (1 << (levels - 1)) || reference % (1 << (levels - 1)) != 0 {
                return Err(Error::config(
                    "--reference",
                    "must be a strict multiple of the finest level factor",
                ));
            }
            let setup = ConvergenceSetup {
                params: cfg.growth.clone(),
                therapy: cfg.therapy()?,
                repartition: cfg.repartition,
                rho0: cfg.initial.density(),
                base: cfg.disc,
            };
            let rep = convergence_study(&setup, levels, reference)?;
            print!("{}", rep.table());
            let target = match (cfg.disc.quadrature, cfg.disc.data_mode) {
                (Quadrature::Trapezoid, DataMode::PointValue) => Some(1.8),
                (Quadrature::Rectangle, _) => Some(0.9),
                _ => None,
            };
            if !rep.monotone() {
                eprintln!("warning: errors do not decrease monotonically; coarse levels are pre-asymptotic");
            }
            Ok(match target {
                Some(p) if rep.mi_order() < p => {
                    eprintln!("error: observed order {:.3} below {p}", rep.mi_order());
                    2
                }
                _ => 0,
            })
        }
        Command::Check { run } => {
            let cfg = run.single()?;
            let outcome = runner::simulate(&cfg)?;
            let rep = check_bounds(&outcome.series);
            print!("{}", rep.summary(20));
            Ok(if rep.passed() { 0 } else { 2 })
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            // help and version are not errors; usage errors share the
            // configuration-error status
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let code = match run(cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    };
    let _ = io::stdout().flush();
    ExitCode::from(code as u8)
}
