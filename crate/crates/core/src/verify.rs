//! Executable checks of the scheme: discrete a-priori bounds, the
//! small-time closed form of the metastatic index, linearity in `m`,
//! observed convergence orders, and two flow identities.

use rayon::prelude::*;

use crate::characteristics::{flow, rk4_free};
use crate::error::Result;
use crate::field::{Point, VelocityField};
use crate::pkpd::{growth_field, GrowthParams, Therapy};
use crate::transport::{
    BoundConstants, DataMode, Discretization, InitialDensity, Model, Quadrature, Repartition,
    SimulationSeries, Solver, SolverOptions,
};

/// Relative slack granted to every "observed <= bound" comparison.
const ROUNDING_SLACK: f64 = 1e-12;

/// `e^{t ||beta|| ||N||_h} (||rho0|| + ||f||_h / (||beta|| ||N||_h))`.
///
/// Without colonization the boundary part only carries the source, so the
/// bound is `||rho0||` when `f = 0` and infinite otherwise.
pub fn l1_bound(t: f64, c: &BoundConstants) -> f64 {
    let rate = c.beta_sup * c.n_h;
    if rate == 0.0 {
        return if c.f_h == 0.0 { c.rho0_l1 } else { f64::INFINITY };
    }
    (t * rate).exp() * (c.rho0_l1 + c.f_h / rate)
}

/// `||N||_inf ||beta||_inf max_k (||rho1(t_k)|| + ||rho0||) + ||f||_inf`.
pub fn linf_bound(max_l1_plus_rho0: f64, c: &BoundConstants) -> f64 {
    c.n_inf * c.beta_sup * max_l1_plus_rho0 + c.f_inf
}

/// Bounds at one grid time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundCheck {
    pub t: f64,
    pub l1: f64,
    pub l1_bound: f64,
    pub linf: f64,
    pub linf_bound: f64,
    pub mass_rho2: f64,
    /// `min G . nu_in` on the birth nodes.
    pub min_inflow: f64,
    pub treated: bool,
}

impl BoundCheck {
    pub fn l1_ok(&self) -> bool {
        self.l1 <= self.l1_bound * (1.0 + ROUNDING_SLACK)
    }

    pub fn linf_ok(&self) -> bool {
        self.linf <= self.linf_bound * (1.0 + ROUNDING_SLACK)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimateReport {
    pub steps: Vec<BoundCheck>,
    pub constants: BoundConstants,
    /// Largest relative change of the initial-data mass.
    pub rho2_drift: f64,
    /// Smallest stored value over the whole run.
    pub min_value: f64,
}

impl EstimateReport {
    pub fn bounds_hold(&self) -> bool {
        self.steps.iter().all(|s| s.l1_ok() && s.linf_ok())
    }

    pub fn nonnegative(&self) -> bool {
        self.min_value >= 0.0
    }

    /// Inflow through the birth side at every step.
    pub fn inflow_holds(&self) -> bool {
        self.steps.iter().all(|s| s.min_inflow > 0.0)
    }

    pub fn passed(&self) -> bool {
        self.bounds_hold() && self.nonnegative() && self.inflow_holds() && self.rho2_drift < 1e-12
    }

    /// Plain-text summary, one line per failing step at most `limit` lines.
    pub fn summary(&self, limit: usize) -> String {
        let mut out = format!(
            "steps {}  bounds {}  nonnegative {}  inflow {}  rho2 drift {:.3e}\n",
            self.steps.len(),
            flag(self.bounds_hold()),
            flag(self.nonnegative()),
            flag(self.inflow_holds()),
            self.rho2_drift
        );
        let worst = self
            .steps
            .iter()
            .map(|s| s.l1 / s.l1_bound)
            .fold(0.0f64, |m, r| if r.is_nan() { m } else { m.max(r) });
        out += &format!("max l1/bound {worst:.3e}\n");
        for s in self
            .steps
            .iter()
            .filter(|s| !(s.l1_ok() && s.linf_ok() && s.min_inflow > 0.0))
            .take(limit)
        {
            out += &format!(
                "t={} l1={:.6e}/{:.6e} linf={:.6e}/{:.6e} inflow={:.3e} treated={}\n",
                s.t, s.l1, s.l1_bound, s.linf, s.linf_bound, s.min_inflow, s.treated
            );
        }
        out
    }
}

fn flag(ok: bool) -> &'static str {
    if ok {
        "pass"
    } else {
        "FAIL"
    }
}

/// Compares the norms recorded by a run against the discrete bounds.
pub fn check_bounds(series: &SimulationSeries) -> EstimateReport {
    let c = series.constants;
    let mut running = 0.0f64;
    let steps = series
        .diagnostics
        .iter()
        .zip(&series.rows)
        .map(|(d, r)| {
            running = running.max(d.l1_rho1 + c.rho0_l1);
            BoundCheck {
                t: d.t,
                l1: d.l1_rho1,
                l1_bound: l1_bound(d.t, &c),
                linf: d.linf_rho1,
                linf_bound: linf_bound(running, &c),
                mass_rho2: r.mass_rho2,
                min_inflow: d.min_inflow,
                treated: d.treated,
            }
        })
        .collect::<Vec<_>>();
    let m0 = steps.first().map_or(0.0, |s| s.mass_rho2);
    let rho2_drift = steps
        .iter()
        .map(|s| {
            if m0 == 0.0 {
                s.mass_rho2.abs()
            } else {
                ((s.mass_rho2 - m0) / m0).abs()
            }
        })
        .fold(0.0, f64::max);
    EstimateReport {
        min_value: series.diagnostics.last().map_or(0.0, |d| d.min_value),
        steps,
        constants: c,
        rho2_drift,
    }
}

/// `m int_0^t x_p(s)^alpha ds` at the grid times `k dt`, with the primary
/// tumor integrated by its own RK4 loop and the integral by the composite
/// trapezoid rule.
pub fn small_time_oracle(
    params: &GrowthParams,
    therapy: &Therapy,
    t_end: f64,
    dt: f64,
) -> Result<Vec<(f64, f64)>> {
    let steps = (t_end / dt).round() as usize;
    let g = |t: f64, x: f64, th: f64| -> Result<(f64, f64)> {
        growth_field(t, x, th, params, therapy)
    };
    let integrand = |x: f64| {
        if params.m == 0.0 {
            0.0
        } else {
            params.m * x.powf(params.alpha)
        }
    };
    let (mut x, mut th) = (params.primary_x0, params.primary_theta0);
    let mut acc = 0.0;
    let mut prev = integrand(x);
    let mut out = Vec::with_capacity(steps + 1);
    out.push((0.0, 0.0));
    for k in 0..steps {
        let t = k as f64 * dt;
        let (a1, b1) = g(t, x, th)?;
        let (a2, b2) = g(t + 0.5 * dt, x + 0.5 * dt * a1, th + 0.5 * dt * b1)?;
        let (a3, b3) = g(t + 0.5 * dt, x + 0.5 * dt * a2, th + 0.5 * dt * b2)?;
        let (a4, b4) = g(t + dt, x + dt * a3, th + dt * b3)?;
        x += dt / 6.0 * (a1 + 2.0 * a2 + 2.0 * a3 + a4);
        th += dt / 6.0 * (b1 + 2.0 * b2 + 2.0 * b3 + b4);
        let cur = integrand(x);
        acc += 0.5 * dt * (prev + cur);
        prev = cur;
        out.push(((k + 1) as f64 * dt, acc));
    }
    Ok(out)
}

/// One entry of [`linearity_in_m`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearityRow {
    pub t: f64,
    pub m_low: f64,
    pub m_high: f64,
    pub mi_low: f64,
    pub mi_high: f64,
}

impl LinearityRow {
    /// `MI(t; m_high) / MI(t; m_low)`.
    pub fn ratio(&self) -> f64 {
        self.mi_high / self.mi_low
    }
}

/// Metastatic index for each `m` (from `rho0 = 0`) and the ratios between
/// consecutive values, at each requested time.
pub fn linearity_in_m(
    params: &GrowthParams,
    therapy: &Therapy,
    disc: &Discretization,
    m_values: &[f64],
    times: &[f64],
) -> Result<Vec<LinearityRow>> {
    let runs: Vec<SimulationSeries> = m_values
        .par_iter()
        .map(|&m| {
            let p = GrowthParams { m, ..params.clone() };
            let model = Model::tumor(&p, therapy, None)?;
            Solver::new(model, *disc, &InitialDensity::Zero, SolverOptions::default())?.run()
        })
        .collect::<Result<_>>()?;
    let mut rows = Vec::new();
    for &t in times {
        for w in 0..m_values.len().saturating_sub(1) {
            rows.push(LinearityRow {
                t,
                m_low: m_values[w],
                m_high: m_values[w + 1],
                mi_low: runs[w].at(t).mi,
                mi_high: runs[w + 1].at(t).mi,
            });
        }
    }
    Ok(rows)
}

/// Problem refined by [`convergence_study`].
#[derive(Debug, Clone)]
pub struct ConvergenceSetup {
    pub params: GrowthParams,
    pub therapy: Therapy,
    pub repartition: Repartition,
    pub rho0: InitialDensity,
    /// Coarsest level.
    pub base: Discretization,
}

impl ConvergenceSetup {
    /// Untreated mouse parameters with an established primary tumor, a
    /// Lipschitz (hat) birth profile of half-width 100 mm³, no initial
    /// metastases, and `dt = 0.1`, `dsigma = dx = 50` up to `T = 2`.
    pub fn smooth(quadrature: Quadrature, data_mode: DataMode) -> Self {
        ConvergenceSetup {
            params: GrowthParams {
                delta_theta: 100.0,
                ..GrowthParams::mouse().established()
            },
            therapy: Therapy::none(),
            repartition: Repartition::Hat,
            rho0: InitialDensity::Zero,
            base: Discretization {
                t_end: 2.0,
                dt: 0.1,
                dsigma: 50.0,
                dx: 50.0,
                quadrature,
                dirac: false,
                data_mode,
            },
        }
    }

    /// Adds a smooth bump of initial metastases around `(200, 700)`.
    pub fn with_initial_bump(self) -> Self {
        ConvergenceSetup {
            rho0: InitialDensity::Bump {
                x: (100.0, 300.0),
                theta: (600.0, 800.0),
                amplitude: 1e-4,
            },
            ..self
        }
    }

    fn solve(&self, factor: usize) -> Result<Solver<crate::pkpd::TumorGrowthField>> {
        let model = Model::tumor(&self.params, &self.therapy, None)?.with_repartition(self.repartition);
        let mut s = Solver::new(
            model,
            self.base.refined(factor as f64),
            &self.rho0,
            SolverOptions::default(),
        )?;
        s.run_to_end()?;
        Ok(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceLevel {
    /// Refinement factor of the level (1, 2, 4, ...).
    pub factor: usize,
    pub dt: f64,
    pub mi: f64,
    /// `|MI(T) - MI_ref(T)|`.
    pub mi_error: f64,
    /// L¹ distance of the boundary unknowns to the reference, on this
    /// level's grid.
    pub rho1_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub levels: Vec<ConvergenceLevel>,
    pub reference_factor: usize,
    pub reference_mi: f64,
}

/// Least-squares slope of `log e` against `-log h`.
fn fitted_order(levels: &[ConvergenceLevel], e: impl Fn(&ConvergenceLevel) -> f64) -> f64 {
    let pts: Vec<(f64, f64)> = levels
        .iter()
        .map(|l| ((l.factor as f64).ln(), e(l).ln()))
        .collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    -sxy / sxx
}

impl ConvergenceReport {
    pub fn mi_order(&self) -> f64 {
        fitted_order(&self.levels, |l| l.mi_error)
    }

    pub fn rho1_order(&self) -> f64 {
        fitted_order(&self.levels, |l| l.rho1_error)
    }

    /// `log2(e_r / e_{r+1})` for consecutive levels.
    pub fn pairwise_orders(&self, e: impl Fn(&ConvergenceLevel) -> f64) -> Vec<f64> {
        self.levels
            .windows(2)
            .map(|w| (e(&w[0]) / e(&w[1])).ln() / (w[1].factor as f64 / w[0].factor as f64).ln())
            .collect()
    }

    /// Errors decrease strictly from level to level; when they do not, the
    /// coarse levels are not yet asymptotic.
    pub fn monotone(&self) -> bool {
        self.levels
            .windows(2)
            .all(|w| w[1].mi_error < w[0].mi_error && w[1].rho1_error < w[0].rho1_error)
    }

    pub fn table(&self) -> String {
        let mut out = format!(
            "{:>6} {:>10} {:>22} {:>12} {:>12}\n",
            "factor", "dt", "MI(T)", "|dMI|", "|drho1|_1"
        );
        for l in &self.levels {
            out += &format!(
                "{:>6} {:>10.3e} {:>22.15e} {:>12.4e} {:>12.4e}\n",
                l.factor, l.dt, l.mi, l.mi_error, l.rho1_error
            );
        }
        out += &format!(
            "reference factor {} MI(T) = {:.15e}\norder MI {:.3}  order rho1 {:.3}  monotone {}\n",
            self.reference_factor,
            self.reference_mi,
            self.mi_order(),
            self.rho1_order(),
            self.monotone()
        );
        out
    }
}

/// Runs `levels` successive halvings of all steps and compares each with a
/// run refined `reference_factor` times.
///
/// Boundary unknowns are compared on the coarse grid: rows at the coarse
/// birth times, and along the birth side either the coarse nodes (point
/// values) or the mean of the reference cells inside each coarse cell (cell
/// averages).
pub fn convergence_study(
    setup: &ConvergenceSetup,
    levels: usize,
    reference_factor: usize,
) -> Result<ConvergenceReport> {
    let factors: Vec<usize> = (0..levels).map(|r| 1usize << r).collect();
    assert!(
        factors.iter().all(|f| reference_factor.is_multiple_of(*f) && reference_factor > *f),
        "reference factor must be a strictly finer multiple of every level"
    );
    let mut all: Vec<usize> = factors.clone();
    all.push(reference_factor);
    let mut runs: Vec<_> = all
        .par_iter()
        .map(|&f| setup.solve(f))
        .collect::<Result<_>>()?;
    let reference = runs.pop().expect("reference run");
    let ref_rows: Vec<&[f64]> = reference.rho1_rows().collect();
    let ref_mi = reference.metastatic_index();
    let levels = runs
        .iter()
        .zip(&factors)
        .map(|(s, &f)| {
            let ratio = reference_factor / f;
            let bd = s.boundary_grid();
            let dt = s.discretization().dt;
            let mut err = 0.0;
            for (i, row) in s.rho1_rows().enumerate() {
                let fine = ref_rows[i * ratio];
                for (j, (&v, &w)) in row.iter().zip(&bd.weights).enumerate() {
                    let r = match s.discretization().data_mode {
                        DataMode::PointValue => fine[j * ratio],
                        DataMode::CellAverage => {
                            fine[j * ratio..(j + 1) * ratio].iter().sum::<f64>() / ratio as f64
                        }
                    };
                    err += dt * w * (v - r).abs();
                }
            }
            ConvergenceLevel {
                factor: f,
                dt,
                mi: s.metastatic_index(),
                mi_error: (s.metastatic_index() - ref_mi).abs(),
                rho1_error: err,
            }
        })
        .collect();
    Ok(ConvergenceReport {
        levels,
        reference_factor,
        reference_mi: ref_mi,
    })
}

/// Observed order of the free RK4 integrator from `(t0, p)` to `t1`, from
/// runs with `steps`, `2 steps` and `4 steps`.
pub fn rk4_self_convergence<F: VelocityField + ?Sized>(
    field: &F,
    t0: f64,
    p: Point,
    t1: f64,
    steps: usize,
) -> f64 {
    let run = |n: usize| {
        let h = (t1 - t0) / n as f64;
        (0..n).fold(p, |q, i| rk4_free(field, t0 + i as f64 * h, q, h))
    };
    let (a, b, c) = (run(steps), run(2 * steps), run(4 * steps));
    ((a - b).norm() / (b - c).norm()).log2()
}

/// Both sides of `d/dtau X(t; tau, sigma) = -D_Y X(t; tau, sigma) G(tau, sigma)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TauDerivativeCheck {
    /// Forward difference quotient in `tau` with step `h`.
    pub difference: Point,
    /// Right-hand side, with `D_Y X G` as a central directional difference.
    pub identity: Point,
}

impl TauDerivativeCheck {
    pub fn error(&self) -> f64 {
        (self.difference - self.identity).norm()
    }
}

/// Evaluates both sides of the `tau`-derivative identity of the flow with
/// accurate RK4 flows of `substeps` steps per unit time.
pub fn tau_derivative_check<F: VelocityField + ?Sized>(
    field: &F,
    t: f64,
    tau: f64,
    sigma: Point,
    h: f64,
    substeps: usize,
) -> Result<TauDerivativeCheck> {
    let go = |t0: f64, p: Point| {
        let n = (((t - t0) * substeps as f64).ceil() as usize).max(1);
        flow(field, t0, p, t, n)
    };
    let base = go(tau, sigma)?;
    let difference = (1.0 / h) * (go(tau + h, sigma)? - base);
    let g = field.velocity(tau, sigma);
    let eps = 1e-6 * sigma.norm().max(1.0) / g.norm().max(1e-300);
    let dxg = (0.5 / eps) * (go(tau, sigma + eps * g)? - go(tau, sigma - eps * g)?);
    Ok(TauDerivativeCheck {
        difference,
        identity: -1.0 * dxg,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::characteristics::Domain;
    use crate::field::AffineField;
    use crate::pkpd::Colonization;
    use crate::transport::{BirthSegment, Source};

    /// One birth node, constant source 2, `beta = 0.1 x` on `[1, 10]²`,
    /// velocity `(1, 0)`, two steps of 0.5.
    #[test]
    fn bound_formulas_on_a_two_step_toy_run() {
        let model = Model {
            field: AffineField::constant(Point::new(1.0, 0.0)),
            domain: Domain::new(1.0, 1.0, 10.0).unwrap(),
            colonization: Colonization { m: 0.1, alpha: 1.0 },
            birth: BirthSegment {
                center: 5.0,
                half_width: 0.0,
                profile: Repartition::Uniform,
            },
            source: Source::Constant(2.0),
        };
        let disc = Discretization {
            t_end: 1.0,
            dt: 0.5,
            quadrature: Quadrature::Rectangle,
            ..Discretization::default()
        };
        let series = Solver::new(model, disc, &InitialDensity::Zero, SolverOptions::default())
            .unwrap()
            .run()
            .unwrap();
        let r = check_bounds(&series);
        assert_eq!(r.steps.len(), 3);
        let c = r.constants;
        assert_eq!((c.beta_sup, c.n_h, c.n_inf, c.f_h, c.f_inf), (1.0, 1.0, 1.0, 2.0, 2.0));
        // rows: 2, 2, 2 + 0.5 * 0.1 * 1.5 * 2
        let s = r.steps[2];
        assert!((s.l1 - 2.075).abs() < 1e-14);
        assert!((s.linf - 2.15).abs() < 1e-14);
        assert!((s.l1_bound - 2.0 * 1f64.exp()).abs() < 1e-14);
        assert!((s.linf_bound - 4.075).abs() < 1e-14);
        assert!((r.steps[1].l1 - 1.0).abs() < 1e-15);
        assert!((r.steps[1].l1_bound - 2.0 * 0.5f64.exp()).abs() < 1e-14);
        assert!((r.steps[1].linf_bound - 3.0).abs() < 1e-14);
        assert!(r.passed());
    }

    #[test]
    fn bounds_without_colonization() {
        let mut c = BoundConstants {
            beta_sup: 0.0,
            n_h: 1.0,
            n_inf: 1.0,
            rho0_l1: 3.0,
            rho0_inf: 1.0,
            f_h: 0.0,
            f_inf: 0.0,
        };
        assert_eq!(l1_bound(5.0, &c), 3.0);
        c.f_h = 1.0;
        assert_eq!(l1_bound(5.0, &c), f64::INFINITY);
    }

    #[test]
    fn oracle_vanishes_without_colonization() {
        let p = GrowthParams {
            m: 0.0,
            ..GrowthParams::mouse()
        };
        let o = small_time_oracle(&p, &Therapy::none(), 1.0, 0.1).unwrap();
        assert_eq!(o.len(), 11);
        assert!(o.iter().all(|&(_, v)| v == 0.0));
    }

    #[test]
    fn oracle_of_a_constant_size_primary() {
        // a primary at the carrying capacity stays there
        let p = GrowthParams::mouse();
        let b = p.carrying_capacity();
        let p = p.with_primary(b, b);
        let o = small_time_oracle(&p, &Therapy::none(), 2.0, 0.01).unwrap();
        let expected = 2.0 * 1e-3 * b.powf(2.0 / 3.0);
        assert!((o.last().unwrap().1 - expected).abs() < 1e-9 * expected);
    }

    #[test]
    fn fitted_order_of_exact_power_law() {
        let levels: Vec<_> = [1usize, 2, 4, 8]
            .iter()
            .map(|&f| ConvergenceLevel {
                factor: f,
                dt: 0.1 / f as f64,
                mi: 0.0,
                mi_error: 3.0 / (f * f) as f64,
                rho1_error: 1.0 / f as f64,
            })
            .collect();
        let r = ConvergenceReport {
            levels,
            reference_factor: 32,
            reference_mi: 0.0,
        };
        assert!((r.mi_order() - 2.0).abs() < 1e-12);
        assert!((r.rho1_order() - 1.0).abs() < 1e-12);
        assert!(r.pairwise_orders(|l| l.mi_error).iter().all(|o| (o - 2.0).abs() < 1e-12));
        assert!(r.monotone());
    }

    #[test]
    fn rk4_is_fourth_order_on_a_rotation() {
        let f = AffineField {
            a: [[0.0, -1.0], [1.0, 0.0]],
            c: Point::new(0.0, 0.0),
        };
        let order = rk4_self_convergence(&f, 0.0, Point::new(1.0, 0.0), 2.0, 10);
        assert!((order - 4.0).abs() < 0.1, "{order}");
    }

    #[test]
    fn tau_derivative_of_a_linear_flow() {
        let f = AffineField {
            a: [[0.3, 0.1], [-0.2, 0.1]],
            c: Point::new(1.0, 0.5),
        };
        let e1 = tau_derivative_check(&f, 2.0, 0.5, Point::new(1.0, 2.0), 1e-2, 2000).unwrap().error();
        let e2 = tau_derivative_check(&f, 2.0, 0.5, Point::new(1.0, 2.0), 5e-3, 2000).unwrap().error();
        assert!(e1 < 1e-2);
        assert!((e1 / e2 - 2.0).abs() < 0.1, "{e1} {e2}");
    }
}
