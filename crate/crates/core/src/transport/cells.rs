use std::collections::HashMap;
use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use super::{DataMode, Quadrature};
use crate::characteristics::Domain;
use crate::field::Point;

/// Initial density of metastases on the domain.
#[derive(Clone, Default)]
pub enum InitialDensity {
    #[default]
    Zero,
    /// `value` on `[x.0, x.1] x [theta.0, theta.1]`, zero elsewhere.
    Box {
        x: (f64, f64),
        theta: (f64, f64),
        value: f64,
    },
    /// `amplitude sin^2(pi u) sin^2(pi v)` with `(u, v)` the relative
    /// position inside the box; smooth and vanishing on the box edges.
    Bump {
        x: (f64, f64),
        theta: (f64, f64),
        amplitude: f64,
    },
    Custom(Arc<dyn Fn(Point) -> f64 + Send + Sync>),
}

impl fmt::Debug for InitialDensity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InitialDensity::Zero => write!(f, "Zero"),
            InitialDensity::Box { x, theta, value } => {
                write!(f, "Box {{ x: {x:?}, theta: {theta:?}, value: {value} }}")
            }
            InitialDensity::Bump {
                x,
                theta,
                amplitude,
            } => write!(f, "Bump {{ x: {x:?}, theta: {theta:?}, amplitude: {amplitude} }}"),
            InitialDensity::Custom(_) => write!(f, "Custom(..)"),
        }
    }
}

impl InitialDensity {
    pub fn custom(f: impl Fn(Point) -> f64 + Send + Sync + 'static) -> Self {
        InitialDensity::Custom(Arc::new(f))
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, InitialDensity::Zero)
    }

    /// Bounding box `(x, theta)` outside which the density vanishes, if
    /// known.
    pub fn support(&self) -> Option<((f64, f64), (f64, f64))> {
        match self {
            InitialDensity::Zero => Some(((0.0, 0.0), (0.0, 0.0))),
            InitialDensity::Box { x, theta, .. } | InitialDensity::Bump { x, theta, .. } => {
                Some((*x, *theta))
            }
            InitialDensity::Custom(_) => None,
        }
    }

    pub fn eval(&self, p: Point) -> f64 {
        let inside = |x: (f64, f64), th: (f64, f64)| {
            p.x >= x.0 && p.x <= x.1 && p.theta >= th.0 && p.theta <= th.1
        };
        match self {
            InitialDensity::Zero => 0.0,
            InitialDensity::Box { x, theta, value } => {
                if inside(*x, *theta) {
                    *value
                } else {
                    0.0
                }
            }
            InitialDensity::Bump {
                x,
                theta,
                amplitude,
            } => {
                if !inside(*x, *theta) {
                    return 0.0;
                }
                let u = (PI * (p.x - x.0) / (x.1 - x.0)).sin();
                let v = (PI * (p.theta - theta.0) / (theta.1 - theta.0)).sin();
                amplitude * u * u * v * v
            }
            InitialDensity::Custom(f) => f(p),
        }
    }

    /// Mean over `[x0, x1] x [t0, t1]` by 3x3 Gauss-Legendre.
    pub fn cell_average(&self, x0: f64, x1: f64, t0: f64, t1: f64) -> f64 {
        const G: [(f64, f64); 3] = [
            (-0.774_596_669_241_483_4, 5.0 / 9.0),
            (0.0, 8.0 / 9.0),
            (0.774_596_669_241_483_4, 5.0 / 9.0),
        ];
        let (cx, hx) = (0.5 * (x0 + x1), 0.5 * (x1 - x0));
        let (ct, ht) = (0.5 * (t0 + t1), 0.5 * (t1 - t0));
        let mut s = 0.0;
        for (u, wu) in G {
            for (v, wv) in G {
                s += wu * wv * self.eval(Point::new(cx + hx * u, ct + ht * v));
            }
        }
        s / 4.0
    }
}

/// One unknown of the initial-data part.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellEntry {
    /// Grid index `(l, m)` of the cell or node.
    pub index: (usize, usize),
    pub value: f64,
    pub weight: f64,
    /// Tracked nodes whose emission rates are averaged (positions in
    /// [`CellGrid::nodes`]).
    pub corners: [usize; 4],
}

/// Tensor grid of the domain on which the initial density is sampled.
///
/// Only the entries with nonzero value and weight are tracked, together
/// with the grid nodes they need; every other entry stays zero for all time.
#[derive(Debug, Clone, PartialEq)]
pub struct CellGrid {
    pub x_nodes: Vec<f64>,
    pub theta_nodes: Vec<f64>,
    pub entries: Vec<CellEntry>,
    /// Grid indices of the tracked nodes.
    pub nodes: Vec<(usize, usize)>,
    pub mode: DataMode,
    lookup: HashMap<(usize, usize), usize>,
}

fn axis(lo: f64, hi: f64, h: f64) -> Vec<f64> {
    let n = (((hi - lo) / h) - 1e-9).ceil().max(1.0) as usize;
    (0..=n)
        .map(|l| if l == n { hi } else { lo + l as f64 * h })
        .collect()
}

fn trapezoid_weights(nodes: &[f64]) -> Vec<f64> {
    let n = nodes.len();
    (0..n)
        .map(|i| {
            let left = if i > 0 { nodes[i] - nodes[i - 1] } else { 0.0 };
            let right = if i + 1 < n { nodes[i + 1] - nodes[i] } else { 0.0 };
            0.5 * (left + right)
        })
        .collect()
}

impl CellGrid {
    pub fn new(
        rho0: &InitialDensity,
        domain: &Domain,
        dx: f64,
        mode: DataMode,
        quadrature: Quadrature,
    ) -> Self {
        let x_nodes = axis(domain.x_birth, domain.b, dx);
        let theta_nodes = axis(domain.theta_low, domain.b, dx);
        let mut grid = CellGrid {
            x_nodes,
            theta_nodes,
            entries: Vec::new(),
            nodes: Vec::new(),
            mode,
            lookup: HashMap::new(),
        };
        if rho0.is_zero() {
            return grid;
        }
        let (nx, nt) = (grid.x_nodes.len(), grid.theta_nodes.len());
        // index ranges of the cells meeting the support
        let span = |v: &[f64], lo: f64, hi: f64| {
            let a = v.partition_point(|&s| s < lo).saturating_sub(1);
            let b = v.partition_point(|&s| s <= hi).min(v.len());
            (a, b)
        };
        let ((lx0, lx1), (lt0, lt1)) = match rho0.support() {
            Some((x, th)) => (
                span(&grid.x_nodes, x.0, x.1),
                span(&grid.theta_nodes, th.0, th.1),
            ),
            None => ((0, nx), (0, nt)),
        };
        let mut node_pos: HashMap<(usize, usize), usize> = HashMap::new();
        let mut track = |grid: &mut CellGrid, idx: (usize, usize)| -> usize {
            *node_pos.entry(idx).or_insert_with(|| {
                grid.nodes.push(idx);
                grid.nodes.len() - 1
            })
        };
        match mode {
            DataMode::CellAverage => {
                for l in lx0..lx1.min(nx - 1) {
                    for m in lt0..lt1.min(nt - 1) {
                        let (x0, x1) = (grid.x_nodes[l], grid.x_nodes[l + 1]);
                        let (t0, t1) = (grid.theta_nodes[m], grid.theta_nodes[m + 1]);
                        let value = rho0.cell_average(x0, x1, t0, t1);
                        if value == 0.0 {
                            continue;
                        }
                        let corners = [
                            track(&mut grid, (l, m)),
                            track(&mut grid, (l + 1, m)),
                            track(&mut grid, (l, m + 1)),
                            track(&mut grid, (l + 1, m + 1)),
                        ];
                        grid.lookup.insert((l, m), grid.entries.len());
                        grid.entries.push(CellEntry {
                            index: (l, m),
                            value,
                            weight: (x1 - x0) * (t1 - t0),
                            corners,
                        });
                    }
                }
            }
            DataMode::PointValue => {
                let (wx, wt) = match quadrature {
                    Quadrature::Trapezoid => (
                        trapezoid_weights(&grid.x_nodes),
                        trapezoid_weights(&grid.theta_nodes),
                    ),
                    Quadrature::Rectangle => {
                        let lower = |v: &[f64]| {
                            let mut w: Vec<f64> = v.windows(2).map(|p| p[1] - p[0]).collect();
                            w.push(0.0);
                            w
                        };
                        (lower(&grid.x_nodes), lower(&grid.theta_nodes))
                    }
                };
                #[allow(clippy::needless_range_loop)]
                for l in lx0..lx1 {
                    for m in lt0..lt1 {
                        let weight = wx[l] * wt[m];
                        let p = Point::new(grid.x_nodes[l], grid.theta_nodes[m]);
                        let value = rho0.eval(p);
                        if value == 0.0 || weight == 0.0 {
                            continue;
                        }
                        let n = track(&mut grid, (l, m));
                        grid.lookup.insert((l, m), grid.entries.len());
                        grid.entries.push(CellEntry {
                            index: (l, m),
                            value,
                            weight,
                            corners: [n; 4],
                        });
                    }
                }
            }
        }
        grid
    }

    pub fn node_point(&self, n: usize) -> Point {
        let (l, m) = self.nodes[n];
        Point::new(self.x_nodes[l], self.theta_nodes[m])
    }

    /// Entry rate from tracked-node rates.
    #[inline]
    pub fn entry_value(&self, e: &CellEntry, node_values: &[f64]) -> f64 {
        let c = e.corners;
        if c[0] == c[3] {
            node_values[c[0]]
        } else {
            0.25 * (node_values[c[0]] + node_values[c[1]] + node_values[c[2]] + node_values[c[3]])
        }
    }

    /// Representative position of an entry (mean of its corners).
    pub fn entry_point(&self, e: &CellEntry) -> Point {
        let mut s = Point::new(0.0, 0.0);
        for &c in &e.corners {
            s = s + self.node_point(c);
        }
        0.25 * s
    }

    /// `sum w |rho2|`.
    pub fn mass(&self) -> f64 {
        self.entries.iter().map(|e| e.weight * e.value.abs()).sum()
    }

    pub fn sup(&self) -> f64 {
        self.entries.iter().fold(0.0, |m, e| m.max(e.value.abs()))
    }

    /// Entry index of the cell containing `p` together with the tracked
    /// node that carries its Jacobian (the lower-left corner).
    pub fn locate(&self, p: Point) -> Option<(usize, usize)> {
        let find = |v: &[f64], s: f64| {
            let i = v.partition_point(|&a| a <= s);
            i.saturating_sub(1).min(v.len() - 2)
        };
        let idx = (find(&self.x_nodes, p.x), find(&self.theta_nodes, p.theta));
        let e = *self.lookup.get(&idx)?;
        Some((e, self.entries[e].corners[0]))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dom() -> Domain {
        Domain::new(1.0, 1.0, 10.0).unwrap()
    }

    #[test]
    fn zero_density_tracks_nothing() {
        let g = CellGrid::new(
            &InitialDensity::Zero,
            &dom(),
            1.0,
            DataMode::CellAverage,
            Quadrature::Trapezoid,
        );
        assert!(g.entries.is_empty());
        assert_eq!(g.mass(), 0.0);
    }

    #[test]
    fn constant_density_cell_values_and_mass() {
        let rho = InitialDensity::custom(|_| 3.0);
        for mode in [DataMode::CellAverage, DataMode::PointValue] {
            for q in [Quadrature::Rectangle, Quadrature::Trapezoid] {
                let g = CellGrid::new(&rho, &dom(), 0.7, mode, q);
                assert!(g.entries.iter().all(|e| (e.value - 3.0).abs() < 1e-14));
                assert!((g.mass() - 3.0 * 81.0).abs() < 1e-10, "{mode:?} {q:?}");
            }
        }
    }

    #[test]
    fn truncated_last_cell() {
        let g = CellGrid::new(
            &InitialDensity::Zero,
            &dom(),
            2.0,
            DataMode::CellAverage,
            Quadrature::Trapezoid,
        );
        assert_eq!(g.x_nodes, vec![1.0, 3.0, 5.0, 7.0, 9.0, 10.0]);
    }

    #[test]
    fn gauss_average_is_exact_for_quintics() {
        let rho = InitialDensity::custom(|p| p.x.powi(5) * p.theta.powi(4));
        let avg = rho.cell_average(0.0, 2.0, 0.0, 1.0);
        let exact = (64.0 / 6.0) / 2.0 * (1.0 / 5.0);
        assert!((avg - exact).abs() < 1e-12 * exact);
    }

    #[test]
    fn locate_finds_lower_left_corner() {
        let rho = InitialDensity::custom(|_| 1.0);
        let g = CellGrid::new(&rho, &dom(), 1.0, DataMode::CellAverage, Quadrature::Trapezoid);
        let (e, n) = g.locate(Point::new(2.5, 9.99)).unwrap();
        assert_eq!(g.entries[e].index, (1, 8));
        assert_eq!(g.nodes[n], (1, 8));
        let (e, _) = g.locate(Point::new(10.0, 10.0)).unwrap();
        assert_eq!(g.entries[e].index, (8, 8));
    }

    #[test]
    fn bump_vanishes_on_its_edges() {
        let b = InitialDensity::Bump {
            x: (2.0, 4.0),
            theta: (3.0, 5.0),
            amplitude: 2.0,
        };
        assert!(b.eval(Point::new(2.0, 4.0)).abs() < 1e-30);
        assert!((b.eval(Point::new(3.0, 4.0)) - 2.0).abs() < 1e-14);
        assert_eq!(b.eval(Point::new(5.0, 4.0)), 0.0);
    }
}
