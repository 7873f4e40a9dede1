use super::{
    BoundaryGrid, CellGrid, DataMode, Discretization, InitialDensity, Model, Quadrature, Source,
};
use crate::characteristics::{rk4_step, Domain, PathCursor, Side, TimeGrid};
use crate::error::{Error, Result};
use crate::field::{Point, VelocityField};

/// Run options that do not change the scheme itself.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Size (mm³) above which a metastasis counts as visible.
    pub visible_threshold: f64,
    /// Reject initial data with negative values.
    pub enforce_nonnegative: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            visible_threshold: 100.0,
            enforce_nonnegative: true,
        }
    }
}

/// Observables at one grid time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesRow {
    pub t: f64,
    /// Primary tumor state; NaN when the source is not a tumor.
    pub x_p: f64,
    pub theta_p: f64,
    /// Total number of metastases.
    pub mi: f64,
    /// Metastases larger than the visibility threshold.
    pub visible: f64,
    /// Part of the boundary-born mass emitted by the primary tumor.
    pub emitted_primary: f64,
    /// Part emitted by metastases.
    pub emitted_meta: f64,
    pub mass_rho1: f64,
    pub mass_rho2: f64,
}

/// Quantities entering the discrete a-priori bounds, at one grid time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepDiagnostics {
    pub t: f64,
    /// `sum |rho1| w` over all boundary rows, with the mass weights.
    pub l1_rho1: f64,
    /// `max |rho1|` over all rows created so far.
    pub linf_rho1: f64,
    /// Smallest stored value of `rho1` or `rho2`.
    pub min_value: f64,
    /// `sum_j |f_j^k| w_j`.
    pub f_h: f64,
    pub f_inf: f64,
    /// Smallest `G . nu_in` over the birth nodes; the scheme assumes it is
    /// positive.
    pub min_inflow: f64,
    /// Largest projection distance of any characteristic so far.
    pub max_clamp: f64,
    pub treated: bool,
}

/// Time-independent constants of the bounds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundConstants {
    /// `sup beta` over the domain.
    pub beta_sup: f64,
    /// `||N||_h`.
    pub n_h: f64,
    pub n_inf: f64,
    pub rho0_l1: f64,
    pub rho0_inf: f64,
    /// `max_k sum_j |f_j^k| w_j` over the whole horizon.
    pub f_h: f64,
    pub f_inf: f64,
}

/// Full output of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationSeries {
    pub rows: Vec<SeriesRow>,
    pub diagnostics: Vec<StepDiagnostics>,
    pub constants: BoundConstants,
}

impl SimulationSeries {
    pub fn last(&self) -> &SeriesRow {
        self.rows.last().expect("series has at least the initial row")
    }

    /// Row at the grid time closest to `t`.
    pub fn at(&self, t: f64) -> &SeriesRow {
        self.rows
            .iter()
            .min_by(|a, b| (a.t - t).abs().total_cmp(&(b.t - t).abs()))
            .expect("series has at least the initial row")
    }
}

#[derive(Debug, Clone)]
struct Row {
    values: Vec<f64>,
    cursors: Vec<PathCursor>,
    mass: f64,
    mass_f: f64,
    mass_b: f64,
    abs_mass: f64,
    sup: f64,
    min: f64,
}

/// Per-step evaluation of every stored row.
struct Sweep {
    /// Emission sum of the boundary rows, `sum_j beta_ij rho_ij w_j`.
    r: Vec<f64>,
    /// Visible mass of the boundary rows.
    vis: Vec<f64>,
    /// Emission and visible mass of the initial-data part.
    r2: f64,
    vis2: f64,
}

/// State of the Lagrangian scheme after `k` steps.
#[derive(Debug, Clone)]
pub struct Solver<F> {
    model: Model<F>,
    disc: Discretization,
    options: SolverOptions,
    grid: TimeGrid,
    boundary: BoundaryGrid,
    cells: CellGrid,
    cell_cursors: Vec<PathCursor>,
    rows: Vec<Row>,
    primary: Vec<Point>,
    k: usize,
    last_b: f64,
    cum: [f64; 3],
    series: SimulationSeries,
    max_clamp: f64,
}

impl<F: VelocityField> Solver<F> {
    /// Builds the grids, samples the initial density and creates the first
    /// boundary row `rho1(0, 0, j) = N_j B^0 + f_j^0`.
    pub fn new(
        model: Model<F>,
        disc: Discretization,
        rho0: &InitialDensity,
        options: SolverOptions,
    ) -> Result<Self> {
        disc.validate()?;
        model.validate(&disc)?;
        let grid = TimeGrid::new(disc.t_end, disc.dt)?;
        let boundary = BoundaryGrid::new(&model.birth, &disc);
        let cells = CellGrid::new(rho0, &model.domain, disc.dx, disc.data_mode, disc.quadrature);
        if let Some(e) = cells.entries.iter().find(|e| !e.value.is_finite()) {
            return Err(Error::NonFinite {
                t: 0.0,
                what: format!("initial density at cell {:?}", e.index),
            });
        }
        if options.enforce_nonnegative {
            if let Some(e) = cells.entries.iter().find(|e| e.value < 0.0) {
                return Err(Error::param(
                    "initial",
                    format!("negative initial density {} at cell {:?}", e.value, e.index),
                ));
            }
        }
        let cell_cursors = (0..cells.nodes.len())
            .map(|n| PathCursor::start(0.0, cells.node_point(n), 1.0, &model.field))
            .collect::<Result<Vec<_>>>()?;

        let primary = match model.source {
            Source::PrimaryTumor(p0) => {
                let mut traj = Vec::with_capacity(grid.steps + 2);
                let mut p = p0;
                traj.push(p);
                for k in 0..=grid.steps {
                    p = rk4_step(grid.time(k), p, disc.dt, &model.field, &model.domain)?.point;
                    traj.push(p);
                }
                traj
            }
            _ => Vec::new(),
        };

        let constants = BoundConstants {
            beta_sup: model.colonization.sup(model.domain.b),
            n_h: boundary.profile_mass(),
            n_inf: boundary.profile_sup(),
            rho0_l1: cells.mass(),
            rho0_inf: cells.sup(),
            f_h: 0.0,
            f_inf: 0.0,
        };
        let mut solver = Solver {
            model,
            disc,
            options,
            grid,
            boundary,
            cells,
            cell_cursors,
            rows: Vec::with_capacity(grid.steps + 1),
            primary,
            k: 0,
            last_b: 0.0,
            cum: [0.0; 3],
            series: SimulationSeries {
                rows: Vec::with_capacity(grid.steps + 1),
                diagnostics: Vec::with_capacity(grid.steps + 1),
                constants,
            },
            max_clamp: 0.0,
        };
        let (f_h, f_inf) = (0..=grid.steps).fold((0.0f64, 0.0f64), |(h, i), k| {
            let s = solver.source_rate(k).abs();
            (h.max(s * solver.series.constants.n_h), i.max(s * solver.series.constants.n_inf))
        });
        solver.series.constants.f_h = f_h;
        solver.series.constants.f_inf = f_inf;

        let sweep = solver.sweep(solver.options.visible_threshold);
        let b0 = sweep.r2;
        solver.push_row(b0)?;
        solver.record(&sweep)?;
        Ok(solver)
    }

    /// Whether the cell-average mode also averages in `tau`.
    fn tau_average(&self) -> bool {
        !self.disc.dirac
            && self.disc.quadrature == Quadrature::Rectangle
            && self.disc.data_mode == DataMode::CellAverage
    }

    /// `s(t_k)` in `f_j^k = N_j s(t_k)`.
    fn source_rate(&self, k: usize) -> f64 {
        match self.model.source {
            Source::PrimaryTumor(_) => {
                let beta = |k: usize| self.model.colonization.rate(self.primary[k].x);
                if self.tau_average() {
                    0.5 * (beta(k) + beta(k + 1))
                } else {
                    beta(k)
                }
            }
            Source::Constant(r) => r,
            Source::Off => 0.0,
        }
    }

    /// Evaluates the emission and visible mass of every stored row at the
    /// current positions of their characteristics.
    fn sweep(&self, thr: f64) -> Sweep {
        let col = &self.model.colonization;
        let bd = &self.boundary;
        let tau_avg = self.tau_average();
        let mut prev: Vec<f64> = Vec::new();
        let mut cur: Vec<f64> = vec![0.0; bd.nodes.len()];
        let mut xs: Vec<f64> = vec![0.0; bd.nodes.len()];
        let mut r = Vec::with_capacity(self.rows.len() + 1);
        let mut vis = Vec::with_capacity(self.rows.len() + 1);
        for (i, row) in self.rows.iter().enumerate() {
            for (n, c) in row.cursors.iter().enumerate() {
                cur[n] = col.rate(c.pos.x);
                xs[n] = c.pos.x;
            }
            let (mut ri, mut vi) = (0.0, 0.0);
            for (j, (&w, &v)) in bd.weights.iter().zip(&row.values).enumerate() {
                let mut beta = bd.entry_value(j, &cur);
                if tau_avg && i > 0 {
                    beta = 0.5 * (beta + bd.entry_value(j, &prev));
                }
                ri += w * beta * v;
                if bd.entry_value(j, &xs) >= thr {
                    vi += w * v;
                }
            }
            r.push(ri);
            vis.push(vi);
            if tau_avg {
                std::mem::swap(&mut prev, &mut cur);
                cur.resize(bd.nodes.len(), 0.0);
            }
        }
        let node_beta: Vec<f64> = self.cell_cursors.iter().map(|c| col.rate(c.pos.x)).collect();
        let node_x: Vec<f64> = self.cell_cursors.iter().map(|c| c.pos.x).collect();
        let (mut r2, mut vis2) = (0.0, 0.0);
        for e in &self.cells.entries {
            r2 += e.weight * self.cells.entry_value(e, &node_beta) * e.value;
            if self.cells.entry_value(e, &node_x) >= thr {
                vis2 += e.weight * e.value;
            }
        }
        Sweep { r, vis, r2, vis2 }
    }

    /// Appends row `k` from the emission `b = B^k`.
    fn push_row(&mut self, b: f64) -> Result<()> {
        let k = self.rows.len();
        let t = self.grid.time(k);
        let s = self.source_rate(k);
        let bd = &self.boundary;
        let mut row = Row {
            values: Vec::with_capacity(bd.entries()),
            cursors: Vec::with_capacity(bd.nodes.len()),
            mass: 0.0,
            mass_f: 0.0,
            mass_b: 0.0,
            abs_mass: 0.0,
            sup: 0.0,
            min: f64::INFINITY,
        };
        for (&n, &w) in bd.profile.iter().zip(&bd.weights) {
            let (fb, ff) = (n * b, n * s);
            let v = fb + ff;
            row.values.push(v);
            row.mass += w * v;
            row.mass_f += w * ff;
            row.mass_b += w * fb;
            row.abs_mass += w * v.abs();
            row.sup = row.sup.max(v.abs());
            row.min = row.min.min(v);
        }
        if !row.mass.is_finite() {
            return Err(Error::NonFinite {
                t,
                what: "boundary emission".into(),
            });
        }
        let normal = Domain::inward_normal(Side::Birth);
        for &theta in &bd.nodes {
            let p = Point::new(self.model.domain.x_birth, theta);
            let g = self.model.field.velocity(t, p).dot(normal);
            row.cursors.push(PathCursor::start(t, p, g.abs(), &self.model.field)?);
        }
        self.cum[0] += row.mass;
        self.cum[1] += row.mass_f;
        self.cum[2] += row.mass_b;
        self.last_b = b;
        self.rows.push(row);
        Ok(())
    }

    /// `sum_i w_i v_i` with the time weights of the current quadrature
    /// (`v` indexed by row).
    fn tau_sum(&self, v: impl Fn(usize) -> f64, cum: Option<f64>) -> f64 {
        let k = self.k;
        let dt = self.disc.dt;
        let total = cum.unwrap_or_else(|| (0..=k).map(&v).sum());
        match self.disc.quadrature {
            Quadrature::Rectangle => dt * (total - v(0)),
            Quadrature::Trapezoid if k == 0 => 0.0,
            Quadrature::Trapezoid => dt * (total - 0.5 * v(0) - 0.5 * v(k)),
        }
    }

    fn visible_from(&self, sweep: &Sweep, thr: f64) -> f64 {
        let bd = &self.boundary;
        let newest = self.rows.len() - 1;
        let vis_new = if sweep.vis.len() > newest {
            sweep.vis[newest]
        } else {
            let row = &self.rows[newest];
            let xs: Vec<f64> = row.cursors.iter().map(|c| c.pos.x).collect();
            (0..bd.entries())
                .filter(|&j| bd.entry_value(j, &xs) >= thr)
                .map(|j| bd.weights[j] * row.values[j])
                .sum()
        };
        self.tau_sum(|i| if i < newest { sweep.vis[i] } else { vis_new }, None) + sweep.vis2
    }

    fn record(&mut self, sweep: &Sweep) -> Result<()> {
        let t = self.grid.time(self.k);
        let mass_rho1 = self.tau_sum(|i| self.rows[i].mass, Some(self.cum[0]));
        let emitted_primary = self.tau_sum(|i| self.rows[i].mass_f, Some(self.cum[1]));
        let emitted_meta = self.tau_sum(|i| self.rows[i].mass_b, Some(self.cum[2]));
        let mass_rho2: f64 = self.cells.entries.iter().map(|e| e.weight * e.value).sum();
        let visible = self.visible_from(sweep, self.options.visible_threshold);
        let (x_p, theta_p) = self
            .primary
            .get(self.k)
            .map_or((f64::NAN, f64::NAN), |p| (p.x, p.theta));
        self.series.rows.push(SeriesRow {
            t,
            x_p,
            theta_p,
            mi: mass_rho1 + mass_rho2,
            visible,
            emitted_primary,
            emitted_meta,
            mass_rho1,
            mass_rho2,
        });

        let l1 = self.tau_sum(|i| self.rows[i].abs_mass, None);
        let prev = self.series.diagnostics.last();
        let newest = self.rows.last().unwrap();
        let linf = prev.map_or(0.0, |d| d.linf_rho1).max(newest.sup);
        let min_rho2 = self.cells.entries.iter().fold(f64::INFINITY, |m, e| m.min(e.value));
        let min_value = prev
            .map_or(f64::INFINITY, |d| d.min_value)
            .min(newest.min)
            .min(min_rho2);
        let s = self.source_rate(self.k).abs();
        let normal = Domain::inward_normal(Side::Birth);
        let min_inflow = self
            .boundary
            .nodes
            .iter()
            .map(|&th| {
                let p = Point::new(self.model.domain.x_birth, th);
                self.model.field.velocity(t, p).dot(normal)
            })
            .fold(f64::INFINITY, f64::min);
        self.series.diagnostics.push(StepDiagnostics {
            t,
            l1_rho1: l1,
            linf_rho1: linf,
            min_value,
            f_h: s * self.series.constants.n_h,
            f_inf: s * self.series.constants.n_inf,
            min_inflow,
            max_clamp: self.max_clamp,
            treated: self.model.field.treated(t),
        });
        Ok(())
    }

    /// Moves every characteristic from `t_k` to `t_{k+1}`, computes
    /// `B^{k+1}` and appends the new boundary row.
    pub fn advance(&mut self) -> Result<()> {
        if self.k >= self.grid.steps {
            return Err(Error::Unsupported(format!(
                "horizon {} already reached",
                self.grid.t_end()
            )));
        }
        let t = self.grid.time(self.k);
        let dt = self.disc.dt;
        let (field, domain) = (&self.model.field, &self.model.domain);
        let mut clamp = self.max_clamp;
        for row in &mut self.rows {
            for c in &mut row.cursors {
                c.step(t, dt, field, domain)?;
                clamp = clamp.max(c.max_clamp);
            }
        }
        for c in &mut self.cell_cursors {
            c.step(t, dt, field, domain)?;
            clamp = clamp.max(c.max_clamp);
        }
        self.max_clamp = clamp;

        let sweep = self.sweep(self.options.visible_threshold);
        let k = self.k;
        let b = match self.disc.quadrature {
            Quadrature::Rectangle => dt * sweep.r[1..].iter().sum::<f64>(),
            Quadrature::Trapezoid if k == 0 => dt * sweep.r[0],
            Quadrature::Trapezoid => {
                dt * (0.5 * sweep.r[0] + sweep.r[1..k].iter().sum::<f64>() + 1.5 * sweep.r[k])
            }
        } + sweep.r2;
        self.push_row(b)?;
        self.k += 1;
        self.record(&sweep)
    }

    /// Advances to the horizon.
    pub fn run_to_end(&mut self) -> Result<&SimulationSeries> {
        while self.k < self.grid.steps {
            self.advance()?;
        }
        Ok(&self.series)
    }

    /// Runs to the horizon and returns the observables.
    pub fn run(mut self) -> Result<SimulationSeries> {
        self.run_to_end()?;
        Ok(self.series)
    }

    pub fn step_index(&self) -> usize {
        self.k
    }

    pub fn time(&self) -> f64 {
        self.grid.time(self.k)
    }

    pub fn time_grid(&self) -> TimeGrid {
        self.grid
    }

    pub fn model(&self) -> &Model<F> {
        &self.model
    }

    pub fn discretization(&self) -> &Discretization {
        &self.disc
    }

    pub fn options(&self) -> &SolverOptions {
        &self.options
    }

    pub fn boundary_grid(&self) -> &BoundaryGrid {
        &self.boundary
    }

    pub fn cell_grid(&self) -> &CellGrid {
        &self.cells
    }

    pub fn series(&self) -> &SimulationSeries {
        &self.series
    }

    pub fn into_series(self) -> SimulationSeries {
        self.series
    }

    /// `B^k` of the newest row.
    pub fn boundary_emission(&self) -> f64 {
        self.last_b
    }

    /// `f_j^k` for the current step.
    pub fn source_terms(&self) -> Vec<f64> {
        let s = self.source_rate(self.k);
        self.boundary.profile.iter().map(|n| n * s).collect()
    }

    /// Stored values `rho1(i, j)`, one slice per birth time `tau_i`.
    pub fn rho1_rows(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.rows.iter().map(|r| r.values.as_slice())
    }

    /// Current positions of the characteristics started at the birth nodes
    /// of row `i`.
    pub fn row_positions(&self, i: usize) -> Vec<Point> {
        self.rows[i].cursors.iter().map(|c| c.pos).collect()
    }

    pub(crate) fn row_cursors(&self, i: usize) -> &[PathCursor] {
        &self.rows[i].cursors
    }

    pub(crate) fn cell_cursors(&self) -> &[PathCursor] {
        &self.cell_cursors
    }

    /// Tracked `rho2` values in the order of [`CellGrid::entries`].
    pub fn rho2_values(&self) -> Vec<f64> {
        self.cells.entries.iter().map(|e| e.value).collect()
    }

    /// Primary tumor at `t_k`, if the source is a tumor.
    pub fn primary(&self) -> Option<Point> {
        self.primary.get(self.k).copied()
    }

    pub fn metastatic_index(&self) -> f64 {
        self.series.last().mi
    }

    pub fn mass_rho1(&self) -> f64 {
        self.series.last().mass_rho1
    }

    pub fn mass_rho2(&self) -> f64 {
        self.series.last().mass_rho2
    }

    /// `(emitted_primary, emitted_meta)` at the current time.
    pub fn emission_split(&self) -> (f64, f64) {
        let r = self.series.last();
        (r.emitted_primary, r.emitted_meta)
    }

    /// Number of metastases of size at least `threshold` at the current
    /// time.
    pub fn visible_count(&self, threshold: f64) -> f64 {
        let sweep = self.sweep(threshold);
        self.visible_from(&sweep, threshold)
    }
}
