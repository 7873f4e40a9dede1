use super::{BirthSegment, DataMode, Discretization, Quadrature};

/// Discretization of the birth side `{x_birth} x [theta0 - dtheta, theta0 + dtheta]`.
///
/// Characteristics start at the `nodes`. Each entry of a boundary row is
/// attached to one or two nodes: in cell-average mode entry `j` is the cell
/// `[s_j, s_{j+1}]` and its emission rate is the mean of the two corner
/// values; in point-value mode entry `j` is node `j` itself.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryGrid {
    /// Angular coordinate of each node.
    pub nodes: Vec<f64>,
    /// `N_j` for each entry.
    pub profile: Vec<f64>,
    /// Quadrature weight of each entry along the side.
    pub weights: Vec<f64>,
    /// Nodes whose emission rates are averaged for each entry.
    pub entry_nodes: Vec<[usize; 2]>,
    /// Effective step.
    pub ds: f64,
    pub dirac: bool,
}

impl BoundaryGrid {
    pub fn new(birth: &BirthSegment, disc: &Discretization) -> Self {
        if disc.dirac {
            return BoundaryGrid {
                nodes: vec![birth.center],
                profile: vec![1.0],
                weights: vec![1.0],
                entry_nodes: vec![[0, 0]],
                ds: 0.0,
                dirac: true,
            };
        }
        let (c, h) = (birth.center, birth.half_width);
        let cells = ((2.0 * h / disc.dsigma) - 1e-9).ceil().max(1.0) as usize;
        let ds = 2.0 * h / cells as f64;
        let lo = c - h;
        let nodes: Vec<f64> = (0..=cells)
            .map(|j| if j == cells { c + h } else { lo + j as f64 * ds })
            .collect();
        let p = birth.profile;
        match disc.data_mode {
            DataMode::CellAverage => BoundaryGrid {
                profile: (0..cells)
                    .map(|j| (p.cdf(c, h, nodes[j + 1]) - p.cdf(c, h, nodes[j])) / ds)
                    .collect(),
                weights: vec![ds; cells],
                entry_nodes: (0..cells).map(|j| [j, j + 1]).collect(),
                nodes,
                ds,
                dirac: false,
            },
            DataMode::PointValue => {
                let weights = (0..=cells)
                    .map(|j| match disc.quadrature {
                        Quadrature::Rectangle if j == cells => 0.0,
                        Quadrature::Rectangle => ds,
                        Quadrature::Trapezoid if j == 0 || j == cells => 0.5 * ds,
                        Quadrature::Trapezoid => ds,
                    })
                    .collect();
                BoundaryGrid {
                    profile: nodes.iter().map(|&s| p.density(c, h, s)).collect(),
                    weights,
                    entry_nodes: (0..=cells).map(|j| [j, j]).collect(),
                    nodes,
                    ds,
                    dirac: false,
                }
            }
        }
    }

    pub fn entries(&self) -> usize {
        self.profile.len()
    }

    /// `||N||_h = sum_j N_j w_j`.
    pub fn profile_mass(&self) -> f64 {
        self.profile.iter().zip(&self.weights).map(|(n, w)| n.abs() * w).sum()
    }

    pub fn profile_sup(&self) -> f64 {
        self.profile.iter().fold(0.0, |m, n| m.max(n.abs()))
    }

    /// Entry rate from node rates.
    #[inline]
    pub fn entry_value(&self, j: usize, node_values: &[f64]) -> f64 {
        let [a, b] = self.entry_nodes[j];
        if a == b {
            node_values[a]
        } else {
            0.5 * (node_values[a] + node_values[b])
        }
    }

    /// Entry whose piecewise-constant extension covers `theta`, if any.
    pub fn entry_at(&self, theta: f64) -> Option<usize> {
        if self.dirac {
            return None;
        }
        let lo = self.nodes[0];
        let hi = *self.nodes.last().unwrap();
        let tol = 1e-12 * hi.abs().max(1.0);
        if theta < lo - tol || theta > hi + tol {
            return None;
        }
        let cells = self.nodes.len() - 1;
        let j = (((theta - lo) / self.ds).floor().max(0.0) as usize).min(cells - 1);
        Some(j)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transport::Repartition;

    fn segment(profile: Repartition) -> BirthSegment {
        BirthSegment {
            center: 50.0,
            half_width: 10.0,
            profile,
        }
    }

    #[test]
    fn dirac_has_one_unit_entry() {
        let g = BoundaryGrid::new(&segment(Repartition::Uniform), &Discretization::default());
        assert_eq!(g.nodes, vec![50.0]);
        assert_eq!(g.profile_mass(), 1.0);
    }

    #[test]
    fn step_is_rounded_to_divide_the_support() {
        let disc = Discretization {
            dirac: false,
            dsigma: 3.0,
            ..Discretization::default()
        };
        let g = BoundaryGrid::new(&segment(Repartition::Uniform), &disc);
        assert_eq!(g.entries(), 7);
        assert!((g.ds - 20.0 / 7.0).abs() < 1e-14);
        assert_eq!(*g.nodes.last().unwrap(), 60.0);
    }

    #[test]
    fn discrete_profile_mass_is_one() {
        for mode in [DataMode::CellAverage, DataMode::PointValue] {
            for q in [Quadrature::Rectangle, Quadrature::Trapezoid] {
                for p in [Repartition::Uniform, Repartition::Hat] {
                    let disc = Discretization {
                        dirac: false,
                        dsigma: 0.5,
                        data_mode: mode,
                        quadrature: q,
                        ..Discretization::default()
                    };
                    let g = BoundaryGrid::new(&segment(p), &disc);
                    // Rectangle point values of the uniform profile miss
                    // nothing; the hat loses nothing either since it
                    // vanishes at both ends.
                    assert!((g.profile_mass() - 1.0).abs() < 1e-12, "{mode:?} {q:?} {p:?}");
                }
            }
        }
    }

    #[test]
    fn entry_lookup() {
        let disc = Discretization {
            dirac: false,
            dsigma: 5.0,
            ..Discretization::default()
        };
        let g = BoundaryGrid::new(&segment(Repartition::Uniform), &disc);
        assert_eq!(g.entry_at(40.0), Some(0));
        assert_eq!(g.entry_at(47.5), Some(1));
        assert_eq!(g.entry_at(60.0), Some(3));
        assert_eq!(g.entry_at(61.0), None);
    }
}
