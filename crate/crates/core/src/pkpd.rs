//! Tumor growth under angiogenic control with bolus pharmacokinetics.
//!
//! A tumor of size `x` and angiogenic capacity `theta` (both mm³) evolves by
//!
//! ```text
//! dx/dt     = a x ln(theta / x)            - h gamma_C(t) H(x - x_min)
//! dtheta/dt = c x - d theta x^(2/3)        - e gamma_A(t) H(theta - theta_min)
//! ```
//!
//! where `gamma_A`, `gamma_C` are drug concentrations produced by boli with
//! first-order elimination and `H` is a tanh-regularized Heaviside step.
//! Without treatment the field has a fixed point at the carrying capacity
//! `b = (c/d)^(3/2)`.

use crate::error::{Error, Result};
use crate::field::{Point, VelocityField};

/// Display conversion: one mm³ of tumor holds roughly 10⁶ cells.
pub const CELLS_PER_MM3: f64 = 1.0e6;

/// Default slope of the regularized Heaviside, in units of the thresholded
/// variable (mm³).
pub const DEFAULT_HEAVISIDE_SLOPE: f64 = 1.0e-3;

/// Initial primary volume (mm³) of an established tumor.
pub const ESTABLISHED_PRIMARY_MM3: f64 = 200.0;

/// Growth, angiogenesis and colonization constants.
#[derive(Debug, Clone, PartialEq)]
pub struct GrowthParams {
    /// Gompertz growth velocity (1/day).
    pub a: f64,
    /// Angiogenic stimulation (1/day).
    pub c: f64,
    /// Angiogenic inhibition (1/(day mm²)).
    pub d: f64,
    /// Colonization coefficient (metastases / (day mm^(3 alpha))).
    pub m: f64,
    /// Fractal dimension of the vasculature.
    pub alpha: f64,
    /// Size of a newly emitted metastasis (mm³).
    pub x0: f64,
    /// Angiogenic capacity of a newly emitted metastasis (mm³).
    pub theta0: f64,
    /// Half-width of the birth repartition around `theta0` (mm³).
    pub delta_theta: f64,
    /// Initial size of the primary tumor (mm³).
    pub primary_x0: f64,
    /// Initial angiogenic capacity of the primary tumor (mm³).
    pub primary_theta0: f64,
}

impl GrowthParams {
    /// Untreated mouse parameters with `alpha = 2/3` and `m = 10⁻³`. The
    /// primary tumor starts as a single cell at `(x0, theta0)`, like every
    /// metastasis.
    pub fn mouse() -> Self {
        GrowthParams {
            a: 0.192,
            c: 5.85,
            d: 8.73e-3,
            m: 1.0e-3,
            alpha: 2.0 / 3.0,
            x0: 1.0e-6,
            theta0: 625.0,
            delta_theta: 0.0,
            primary_x0: 1.0e-6,
            primary_theta0: 625.0,
        }
    }

    /// Same parameters with the primary tumor starting at `(x, theta)`.
    pub fn with_primary(self, x: f64, theta: f64) -> Self {
        GrowthParams {
            primary_x0: x,
            primary_theta0: theta,
            ..self
        }
    }

    /// Primary tumor already established at [`ESTABLISHED_PRIMARY_MM3`],
    /// the starting volume of the mouse experiments the growth constants
    /// were fitted on.
    pub fn established(self) -> Self {
        let theta = self.theta0;
        self.with_primary(ESTABLISHED_PRIMARY_MM3, theta)
    }

    pub fn carrying_capacity(&self) -> f64 {
        carrying_capacity(self.c, self.d)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("a", self.a), ("c", self.c), ("d", self.d)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::param(name, format!("must be positive, got {v}")));
            }
        }
        if !(self.m >= 0.0 && self.m.is_finite()) {
            return Err(Error::param("m", format!("must be non-negative, got {}", self.m)));
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::param(
                "alpha",
                format!("must lie in (0, 1], got {}", self.alpha),
            ));
        }
        let b = self.carrying_capacity();
        for (name, v) in [
            ("x0", self.x0),
            ("theta0", self.theta0),
            ("primary_x0", self.primary_x0),
            ("primary_theta0", self.primary_theta0),
        ] {
            if !(v > 0.0 && v < b) {
                return Err(Error::param(
                    name,
                    format!("must lie in (0, b = {b}), got {v}"),
                ));
            }
        }
        if !(self.delta_theta >= 0.0 && self.theta0 - self.delta_theta > 0.0)
            || self.theta0 + self.delta_theta > b
        {
            return Err(Error::param(
                "delta_theta",
                format!(
                    "birth segment [{}, {}] must be non-empty and inside (0, b)",
                    self.theta0 - self.delta_theta,
                    self.theta0 + self.delta_theta
                ),
            ));
        }
        Ok(())
    }

    pub fn colonization(&self) -> Colonization {
        Colonization {
            m: self.m,
            alpha: self.alpha,
        }
    }
}

/// Emission rate `beta(x, theta) = m x^alpha` of new metastases.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Colonization {
    pub m: f64,
    pub alpha: f64,
}

impl Colonization {
    #[inline]
    pub fn rate(&self, x: f64) -> f64 {
        if self.m == 0.0 {
            return 0.0;
        }
        self.m * x.powf(self.alpha)
    }

    /// Supremum of the rate over sizes in `(0, b]`.
    pub fn sup(&self, b: f64) -> f64 {
        self.rate(b)
    }
}

/// `beta(x) = m x^alpha`; independent of the angiogenic capacity.
pub fn colonization_rate(x: f64, p: &GrowthParams) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::Domain(format!("colonization rate needs x > 0, got {x}")));
    }
    Ok(p.colonization().rate(x))
}

/// `b = (c/d)^(3/2)`.
pub fn carrying_capacity(c: f64, d: f64) -> f64 {
    (c / d).powf(1.5)
}

/// `H(s) = 1/2 + 1/2 tanh(s/K)`.
#[inline]
pub fn smooth_heaviside(s: f64, slope: f64) -> f64 {
    0.5 + 0.5 * (s / slope).tanh()
}

/// `H'(s) = sech²(s/K) / (2K)`.
#[inline]
pub fn smooth_heaviside_derivative(s: f64, slope: f64) -> f64 {
    let th = (s / slope).tanh();
    (1.0 - th * th) / (2.0 * slope)
}

/// One drug given as a sequence of boli.
#[derive(Debug, Clone, PartialEq)]
pub struct DrugSchedule {
    /// Pharmacodynamic strength (`e` for anti-angiogenics, `h` for cytotoxics).
    pub efficacy: f64,
    /// Elimination rate (1/day).
    pub clearance: f64,
    /// Bolus dose (mg).
    pub dose: f64,
    /// Administration times (day), strictly increasing.
    pub admin_times: Vec<f64>,
    /// Minimal size / capacity for the drug to act. `None` selects the
    /// domain floor of the acted-upon variable.
    pub action_threshold: Option<f64>,
    /// Slope `K` of the regularized Heaviside.
    pub heaviside_slope: f64,
}

impl DrugSchedule {
    pub fn new(efficacy: f64, clearance: f64, dose: f64, admin_times: Vec<f64>) -> Result<Self> {
        let s = DrugSchedule {
            efficacy,
            clearance,
            dose,
            admin_times,
            action_threshold: None,
            heaviside_slope: DEFAULT_HEAVISIDE_SLOPE,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn with_threshold(mut self, threshold: f64) -> Self {
        self.action_threshold = Some(threshold);
        self
    }

    pub fn with_slope(mut self, slope: f64) -> Self {
        self.heaviside_slope = slope;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.efficacy >= 0.0) {
            return Err(Error::param("efficacy", "must be non-negative"));
        }
        if !(self.clearance > 0.0) {
            return Err(Error::param("clearance", "must be positive"));
        }
        if !(self.dose >= 0.0) {
            return Err(Error::param("dose", "must be non-negative"));
        }
        if !(self.heaviside_slope > 0.0) {
            return Err(Error::param("heaviside_slope", "must be positive"));
        }
        if self.admin_times.iter().any(|t| !t.is_finite())
            || self.admin_times.windows(2).any(|w| w[1] <= w[0])
        {
            return Err(Error::param(
                "admin_times",
                "must be finite and strictly increasing",
            ));
        }
        Ok(())
    }

    /// Efficacy over clearance, the ratio that governs a drug's overall
    /// effect.
    pub fn efficacy_ratio(&self) -> f64 {
        self.efficacy / self.clearance
    }

    pub fn concentration(&self, t: f64) -> f64 {
        concentration(self, t)
    }
}

/// Plasma concentration `sum_{t_i <= t} D exp(-clr (t - t_i))`.
///
/// Onset is a sharp indicator: zero before the first bolus and
/// right-continuous at every administration.
pub fn concentration(s: &DrugSchedule, t: f64) -> f64 {
    s.admin_times
        .iter()
        .take_while(|&&ti| ti <= t)
        .map(|&ti| s.dose * (-s.clearance * (t - ti)).exp())
        .sum()
}

/// Anti-angiogenic (`aa`) and cytotoxic (`ct`) treatment. An absent
/// schedule means no treatment of that kind.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Therapy {
    pub aa: Option<DrugSchedule>,
    pub ct: Option<DrugSchedule>,
}

impl Therapy {
    pub fn none() -> Self {
        Therapy::default()
    }

    pub fn is_active(&self, t: f64) -> bool {
        [&self.aa, &self.ct]
            .into_iter()
            .flatten()
            .any(|s| s.efficacy > 0.0 && s.concentration(t) > 0.0)
    }
}

/// The growth field `G = (g1, g2)` with resolved drug thresholds.
#[derive(Debug, Clone, PartialEq)]
pub struct TumorGrowthField {
    pub params: GrowthParams,
    pub therapy: Therapy,
    x_min: f64,
    theta_min: f64,
}

impl TumorGrowthField {
    /// `theta_low` is the lower capacity bound of the domain; it is the
    /// default anti-angiogenic threshold. The cytotoxic default is `x0`.
    pub fn new(params: GrowthParams, therapy: Therapy, theta_low: f64) -> Self {
        let x_min = therapy
            .ct
            .as_ref()
            .and_then(|s| s.action_threshold)
            .unwrap_or(params.x0);
        let theta_min = therapy
            .aa
            .as_ref()
            .and_then(|s| s.action_threshold)
            .unwrap_or(theta_low);
        TumorGrowthField {
            params,
            therapy,
            x_min,
            theta_min,
        }
    }

    pub fn untreated(params: GrowthParams) -> Self {
        let theta_low = params.x0;
        TumorGrowthField::new(params, Therapy::none(), theta_low)
    }

    #[inline]
    fn cytotoxic(&self, t: f64) -> Option<(f64, f64)> {
        let s = self.therapy.ct.as_ref()?;
        let g = s.concentration(t);
        (g > 0.0 && s.efficacy > 0.0).then_some((s.efficacy * g, s.heaviside_slope))
    }

    #[inline]
    fn antiangiogenic(&self, t: f64) -> Option<(f64, f64)> {
        let s = self.therapy.aa.as_ref()?;
        let g = s.concentration(t);
        (g > 0.0 && s.efficacy > 0.0).then_some((s.efficacy * g, s.heaviside_slope))
    }

    /// `(g1, g2)`; non-finite when `x <= 0` or `theta <= 0`.
    #[inline]
    pub fn eval(&self, t: f64, x: f64, theta: f64) -> (f64, f64) {
        if x <= 0.0 || theta <= 0.0 {
            return (f64::NAN, f64::NAN);
        }
        let p = &self.params;
        let x23 = x.cbrt().powi(2);
        let mut g1 = p.a * x * (theta / x).ln();
        let mut g2 = p.c * x - p.d * theta * x23;
        if let Some((kill, k)) = self.cytotoxic(t) {
            g1 -= kill * smooth_heaviside(x - self.x_min, k);
        }
        if let Some((inhib, k)) = self.antiangiogenic(t) {
            g2 -= inhib * smooth_heaviside(theta - self.theta_min, k);
        }
        (g1, g2)
    }

    /// `d g1/dx + d g2/dtheta`.
    #[inline]
    pub fn eval_divergence(&self, t: f64, x: f64, theta: f64) -> f64 {
        if x <= 0.0 || theta <= 0.0 {
            return f64::NAN;
        }
        let p = &self.params;
        let mut div = p.a * (theta / x).ln() - p.a - p.d * x.cbrt().powi(2);
        if let Some((kill, k)) = self.cytotoxic(t) {
            div -= kill * smooth_heaviside_derivative(x - self.x_min, k);
        }
        if let Some((inhib, k)) = self.antiangiogenic(t) {
            div -= inhib * smooth_heaviside_derivative(theta - self.theta_min, k);
        }
        div
    }
}

impl VelocityField for TumorGrowthField {
    #[inline]
    fn velocity(&self, t: f64, p: Point) -> Point {
        let (g1, g2) = self.eval(t, p.x, p.theta);
        Point::new(g1, g2)
    }

    #[inline]
    fn divergence(&self, t: f64, p: Point) -> f64 {
        self.eval_divergence(t, p.x, p.theta)
    }

    fn treated(&self, t: f64) -> bool {
        self.therapy.is_active(t)
    }
}

fn check_positive(x: f64, theta: f64) -> Result<()> {
    if !(x > 0.0) || !(theta > 0.0) {
        return Err(Error::Domain(format!(
            "growth field needs x > 0 and theta > 0, got ({x}, {theta})"
        )));
    }
    Ok(())
}

/// `G(t, x, theta)`. Drug thresholds default to `x0` for both drugs.
pub fn growth_field(
    t: f64,
    x: f64,
    theta: f64,
    p: &GrowthParams,
    th: &Therapy,
) -> Result<(f64, f64)> {
    check_positive(x, theta)?;
    Ok(TumorGrowthField::new(p.clone(), th.clone(), p.x0).eval(t, x, theta))
}

/// Analytic divergence of [`growth_field`].
pub fn divergence_field(
    t: f64,
    x: f64,
    theta: f64,
    p: &GrowthParams,
    th: &Therapy,
) -> Result<f64> {
    check_positive(x, theta)?;
    Ok(TumorGrowthField::new(p.clone(), th.clone(), p.x0).eval_divergence(t, x, theta))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bolus(times: Vec<f64>) -> DrugSchedule {
        DrugSchedule::new(0.66, 1.7, 20.0, times).unwrap()
    }

    #[test]
    fn concentration_single_bolus() {
        let s = bolus(vec![5.0]);
        assert_eq!(concentration(&s, 4.0), 0.0);
        assert_eq!(concentration(&s, 5.0), 20.0);
        let expected = 20.0 * (-1.7f64).exp();
        assert!((concentration(&s, 6.0) - expected).abs() < 1e-12);
        assert!((expected - 3.6536).abs() < 1e-4);
    }

    #[test]
    fn concentration_sums_series_term_by_term() {
        let s = bolus(vec![1.0, 2.0, 3.5]);
        let t = 4.25;
        let mut manual = 0.0;
        for ti in [1.0f64, 2.0, 3.5] {
            manual += 20.0 * (-1.7 * (t - ti)).exp();
        }
        assert!((concentration(&s, t) - manual).abs() < 1e-12);
    }

    #[test]
    fn concentration_jumps_by_dose() {
        let s = bolus(vec![1.0, 2.0, 3.0]);
        for &ti in &s.admin_times {
            let left = concentration(&s, ti - 1e-12);
            let right = concentration(&s, ti);
            assert!((right - left - 20.0).abs() < 1e-9);
        }
    }

    #[test]
    fn heaviside_values() {
        assert_eq!(smooth_heaviside(0.0, 0.3), 0.5);
        assert!((smooth_heaviside(1e-3, 1e-3) - 0.880797).abs() < 1e-6);
        assert!((smooth_heaviside(1e3, 1.0) - 1.0).abs() < 1e-15);
        assert!(smooth_heaviside(-1e3, 1.0) < 1e-15);
    }

    #[test]
    fn fixed_point_at_carrying_capacity() {
        let p = GrowthParams::mouse();
        let b = p.carrying_capacity();
        let (g1, g2) = growth_field(0.0, b, b, &p, &Therapy::none()).unwrap();
        assert!(g1.abs() < 1e-9 * b);
        assert!(g2.abs() < 1e-9 * b);
    }

    #[test]
    fn field_values_at_unit_size() {
        let p = GrowthParams::mouse();
        let (g1, g2) = growth_field(0.0, 1.0, 625.0, &p, &Therapy::none()).unwrap();
        assert!((g1 - 0.192 * 625f64.ln()).abs() < 1e-12);
        assert!((g1 - 1.2361).abs() < 1e-4);
        assert!((g2 - 0.39375).abs() < 1e-12);
    }

    #[test]
    fn divergence_on_diagonal() {
        let p = GrowthParams::mouse();
        let b = p.carrying_capacity();
        let d = divergence_field(0.0, 10.0, 10.0, &p, &Therapy::none()).unwrap();
        assert!((d - (-p.a - p.d * 10f64.powf(2.0 / 3.0))).abs() < 1e-12);
        let db = divergence_field(0.0, b, b, &p, &Therapy::none()).unwrap();
        assert!((db + 6.042).abs() < 1e-9);
    }

    #[test]
    fn domain_errors() {
        let p = GrowthParams::mouse();
        assert!(growth_field(0.0, 0.0, 1.0, &p, &Therapy::none()).is_err());
        assert!(divergence_field(0.0, 1.0, -1.0, &p, &Therapy::none()).is_err());
        assert!(colonization_rate(0.0, &p).is_err());
    }

    #[test]
    fn carrying_capacity_alternative_constants() {
        assert!((carrying_capacity(5.85, 8.73e-3) - 17347.0).abs() <= 1.0);
        assert!((carrying_capacity(0.1, 1.4923e-4) - 17347.0).abs() <= 1.0);
        assert_eq!(carrying_capacity(2.0, 2.0), 1.0);
    }

    #[test]
    fn colonization_values() {
        let p = GrowthParams::mouse();
        assert!((colonization_rate(1.0, &p).unwrap() - 1e-3).abs() < 1e-18);
        let visible = colonization_rate(100.0, &p).unwrap();
        assert!((visible - 1e-3 * 100f64.powf(2.0 / 3.0)).abs() < 1e-15);
        assert!((visible - 2.154e-2).abs() < 1e-5);
        let mut p2 = p.clone();
        p2.m *= 2.0;
        assert_eq!(colonization_rate(7.0, &p2).unwrap(), 2.0 * colonization_rate(7.0, &p).unwrap());
    }

    #[test]
    fn schedule_validation() {
        assert!(DrugSchedule::new(1.0, 1.0, 1.0, vec![2.0, 1.0]).is_err());
        assert!(DrugSchedule::new(1.0, 0.0, 1.0, vec![]).is_err());
        assert!(DrugSchedule::new(1.0, 1.0, 1.0, vec![1.0, 1.0]).is_err());
    }

    #[test]
    fn efficacy_ratios() {
        let r = |e: f64, c: f64| (e / c * 100.0).round() / 100.0;
        assert_eq!(r(1.3, 10.1), 0.13);
        assert_eq!(r(0.66, 1.7), 0.39);
        assert_eq!(r(0.15, 0.38), 0.39);
    }
}
