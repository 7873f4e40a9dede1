//! Run configuration: a flat `key = value` text format with dotted keys.
//!
//! Keys may be written in full (`growth.a_per_day = 0.192`) or below a
//! `[section]` header (`[growth]` then `a_per_day = 0.192`). `#` starts a
//! comment. Unknown and duplicate keys are errors. Every quantity carries
//! its unit in the key name.
//!
//! Administration times are either an explicit list (`5, 6, 7.5`) or a rule
//! `every N day[s] from A to B [twice-daily]`, with both ends included;
//! `twice-daily` halves the interval.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::pkpd::{DrugSchedule, GrowthParams, Therapy, TumorGrowthField, DEFAULT_HEAVISIDE_SLOPE};
use crate::transport::{
    DataMode, Discretization, InitialDensity, Model, Quadrature, Repartition, SolverOptions,
};

/// One drug as written in a configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct DrugConfig {
    pub efficacy: f64,
    pub clearance: f64,
    pub dose: f64,
    pub times: Vec<f64>,
    pub threshold: Option<f64>,
    pub heaviside_slope: f64,
}

impl DrugConfig {
    pub fn schedule(&self) -> Result<DrugSchedule> {
        let mut s = DrugSchedule::new(self.efficacy, self.clearance, self.dose, self.times.clone())?
            .with_slope(self.heaviside_slope);
        if let Some(t) = self.threshold {
            s = s.with_threshold(t);
        }
        Ok(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InitialKind {
    #[default]
    Zero,
    Box,
    Bump,
}

/// Initial density as written in a configuration.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct InitialConfig {
    pub kind: InitialKind,
    pub x: (f64, f64),
    pub theta: (f64, f64),
    /// Box value or bump amplitude (metastases / mm⁶).
    pub value: f64,
}

impl InitialConfig {
    pub fn density(&self) -> InitialDensity {
        match self.kind {
            InitialKind::Zero => InitialDensity::Zero,
            InitialKind::Box => InitialDensity::Box {
                x: self.x,
                theta: self.theta,
                value: self.value,
            },
            InitialKind::Bump => InitialDensity::Bump {
                x: self.x,
                theta: self.theta,
                amplitude: self.value,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputConfig {
    pub csv_path: Option<PathBuf>,
    pub visible_threshold: f64,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            csv_path: None,
            visible_threshold: 100.0,
        }
    }
}

/// Invariant checks performed after a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CheckConfig {
    pub bounds: bool,
    pub nonnegative: bool,
}

impl Default for CheckConfig {
    fn default() -> Self {
        CheckConfig {
            bounds: true,
            nonnegative: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub growth: GrowthParams,
    pub theta_low: Option<f64>,
    pub aa: Option<DrugConfig>,
    pub ct: Option<DrugConfig>,
    pub disc: Discretization,
    pub repartition: Repartition,
    pub initial: InitialConfig,
    pub outputs: OutputConfig,
    pub checks: CheckConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            growth: GrowthParams::mouse(),
            theta_low: None,
            aa: None,
            ct: None,
            disc: Discretization::default(),
            repartition: Repartition::Uniform,
            initial: InitialConfig::default(),
            outputs: OutputConfig::default(),
            checks: CheckConfig::default(),
        }
    }
}

const DRUG_KEYS: [&str; 6] = [
    "efficacy_per_day_mg",
    "clearance_per_day",
    "dose_mg",
    "times",
    "threshold_mm3",
    "heaviside_slope_mm3",
];

fn num(key: &str, v: &str) -> Result<f64> {
    let x: f64 = v
        .trim()
        .parse()
        .map_err(|_| Error::config(key, format!("expected a number, got '{v}'")))?;
    if !x.is_finite() {
        return Err(Error::config(key, "must be finite"));
    }
    Ok(x)
}

fn boolean(key: &str, v: &str) -> Result<bool> {
    match v.trim() {
        "true" | "yes" | "on" => Ok(true),
        "false" | "no" | "off" => Ok(false),
        other => Err(Error::config(key, format!("expected true or false, got '{other}'"))),
    }
}

fn pair(key: &str, v: &str) -> Result<(f64, f64)> {
    let parts: Vec<&str> = v.split(',').collect();
    if parts.len() != 2 {
        return Err(Error::config(key, "expected 'low, high'"));
    }
    let (a, b) = (num(key, parts[0])?, num(key, parts[1])?);
    if !(a < b) {
        return Err(Error::config(key, "low must be below high"));
    }
    Ok((a, b))
}

/// Expands an administration-time specification into sorted times.
pub fn parse_times(key: &str, v: &str) -> Result<Vec<f64>> {
    let text = v.trim();
    if let Some(rule) = text.strip_prefix("every") {
        let words: Vec<&str> = rule.split_whitespace().collect();
        let bad = || {
            Error::config(
                key,
                format!("expected 'every N day[s] from A to B [twice-daily]', got '{text}'"),
            )
        };
        let (n, rest) = match words.as_slice() {
            [n, "day" | "days", rest @ ..] => (num(key, n)?, rest),
            _ => return Err(bad()),
        };
        let (a, b, twice) = match rest {
            ["from", a, "to", b] => (num(key, a)?, num(key, b)?, false),
            ["from", a, "to", b, "twice-daily"] => (num(key, a)?, num(key, b)?, true),
            _ => return Err(bad()),
        };
        let step = if twice { n / 2.0 } else { n };
        if !(step > 0.0) || b < a {
            return Err(Error::config(key, "need a positive interval and from <= to"));
        }
        let count = ((b - a) / step + 1e-9).floor() as usize;
        return Ok((0..=count).map(|i| a + i as f64 * step).collect());
    }
    let times = text
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| num(key, s))
        .collect::<Result<Vec<f64>>>()?;
    if times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::config(key, "times must be strictly increasing"));
    }
    Ok(times)
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            Error::config("--config", format!("cannot read {}: {e}", path.display()))
        })?;
        Self::parse(&text)
    }

    /// Parses a configuration; keys not given keep their defaults
    /// ([`GrowthParams::mouse`], no therapy, [`Discretization::default`]).
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries: BTreeMap<String, String> = BTreeMap::new();
        let mut section = String::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                section = name.trim().to_string();
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                Error::config(format!("line {}", n + 1), format!("expected 'key = value', got '{line}'"))
            })?;
            let key = if section.is_empty() {
                k.trim().to_string()
            } else {
                format!("{section}.{}", k.trim())
            };
            if entries.insert(key.clone(), v.trim().to_string()).is_some() {
                return Err(Error::config(key, "given twice"));
            }
        }
        let mut cfg = RunConfig::default();
        let mut drugs: BTreeMap<&str, BTreeMap<String, String>> = BTreeMap::new();
        for (key, value) in &entries {
            let mut parts = key.splitn(3, '.');
            match (parts.next(), parts.next(), parts.next()) {
                (Some("therapy"), Some(role @ ("aa" | "ct")), Some(field)) => {
                    if !DRUG_KEYS.contains(&field) {
                        return Err(Error::config(key.clone(), "unknown key"));
                    }
                    drugs.entry(role).or_default().insert(field.into(), value.clone());
                }
                _ => cfg.set(key, value)?,
            }
        }
        for (role, fields) in drugs {
            let drug = Self::drug(role, &fields)?;
            match role {
                "aa" => cfg.aa = Some(drug),
                _ => cfg.ct = Some(drug),
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn drug(role: &str, f: &BTreeMap<String, String>) -> Result<DrugConfig> {
        let key = |field: &str| format!("therapy.{role}.{field}");
        let need = |field: &str| {
            f.get(field)
                .ok_or_else(|| Error::config(key(field), "missing"))
        };
        Ok(DrugConfig {
            efficacy: num(&key("efficacy_per_day_mg"), need("efficacy_per_day_mg")?)?,
            clearance: num(&key("clearance_per_day"), need("clearance_per_day")?)?,
            dose: num(&key("dose_mg"), need("dose_mg")?)?,
            times: parse_times(&key("times"), need("times")?)?,
            threshold: f
                .get("threshold_mm3")
                .map(|v| num(&key("threshold_mm3"), v))
                .transpose()?,
            heaviside_slope: f
                .get("heaviside_slope_mm3")
                .map(|v| num(&key("heaviside_slope_mm3"), v))
                .transpose()?
                .unwrap_or(DEFAULT_HEAVISIDE_SLOPE),
        })
    }

    /// Sets one key, as in a configuration file. Drug keys replace the
    /// corresponding field of an existing drug.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let g = &mut self.growth;
        let d = &mut self.disc;
        let v = value;
        match key {
            "growth.a_per_day" => g.a = num(key, v)?,
            "growth.c_per_day" => g.c = num(key, v)?,
            "growth.d_per_day_mm2" => g.d = num(key, v)?,
            "growth.m_per_day_mm3alpha" => g.m = num(key, v)?,
            "growth.alpha" => g.alpha = num(key, v)?,
            "growth.x0_mm3" => g.x0 = num(key, v)?,
            "growth.theta0_mm3" => g.theta0 = num(key, v)?,
            "growth.delta_theta_mm3" => g.delta_theta = num(key, v)?,
            "growth.primary_x0_mm3" => g.primary_x0 = num(key, v)?,
            "growth.primary_theta0_mm3" => g.primary_theta0 = num(key, v)?,
            "domain.theta_low_mm3" => self.theta_low = Some(num(key, v)?),
            "discretization.t_end_day" => d.t_end = num(key, v)?,
            "discretization.dt_day" => d.dt = num(key, v)?,
            "discretization.dsigma_mm3" => d.dsigma = num(key, v)?,
            "discretization.dx_mm3" => d.dx = num(key, v)?,
            "discretization.dirac" => d.dirac = boolean(key, v)?,
            "discretization.quadrature" => {
                d.quadrature = match v.trim() {
                    "rectangle" => Quadrature::Rectangle,
                    "trapezoid" => Quadrature::Trapezoid,
                    o => return Err(Error::config(key, format!("expected rectangle or trapezoid, got '{o}'"))),
                }
            }
            "discretization.data_mode" => {
                d.data_mode = match v.trim() {
                    "average" => DataMode::CellAverage,
                    "point" => DataMode::PointValue,
                    o => return Err(Error::config(key, format!("expected average or point, got '{o}'"))),
                }
            }
            "discretization.repartition" => {
                self.repartition = match v.trim() {
                    "uniform" => Repartition::Uniform,
                    "hat" => Repartition::Hat,
                    o => return Err(Error::config(key, format!("expected uniform or hat, got '{o}'"))),
                }
            }
            "initial.kind" => {
                self.initial.kind = match v.trim() {
                    "zero" => InitialKind::Zero,
                    "box" => InitialKind::Box,
                    "bump" => InitialKind::Bump,
                    o => return Err(Error::config(key, format!("expected zero, box or bump, got '{o}'"))),
                }
            }
            "initial.x_mm3" => self.initial.x = pair(key, v)?,
            "initial.theta_mm3" => self.initial.theta = pair(key, v)?,
            "initial.value_per_mm6" => self.initial.value = num(key, v)?,
            "outputs.csv_path" => self.outputs.csv_path = Some(PathBuf::from(v.trim())),
            "outputs.visible_threshold_mm3" => self.outputs.visible_threshold = num(key, v)?,
            "checks.bounds" => self.checks.bounds = boolean(key, v)?,
            "checks.nonnegative" => self.checks.nonnegative = boolean(key, v)?,
            _ => {
                let mut parts = key.splitn(3, '.');
                if let (Some("therapy"), Some(role @ ("aa" | "ct")), Some(field)) =
                    (parts.next(), parts.next(), parts.next())
                {
                    let slot = if role == "aa" { &mut self.aa } else { &mut self.ct };
                    let drug = slot
                        .as_mut()
                        .ok_or_else(|| Error::config(key, format!("no {role} drug configured")))?;
                    match field {
                        "efficacy_per_day_mg" => drug.efficacy = num(key, v)?,
                        "clearance_per_day" => drug.clearance = num(key, v)?,
                        "dose_mg" => drug.dose = num(key, v)?,
                        "times" => drug.times = parse_times(key, v)?,
                        "threshold_mm3" => drug.threshold = Some(num(key, v)?),
                        "heaviside_slope_mm3" => drug.heaviside_slope = num(key, v)?,
                        _ => return Err(Error::config(key, "unknown key")),
                    }
                    return Ok(());
                }
                return Err(Error::config(key, "unknown key"));
            }
        }
        Ok(())
    }

    /// Checks the assembled configuration, naming the key at fault.
    pub fn validate(&self) -> Result<()> {
        let as_config = |e: Error, fallback: &str| match e {
            Error::InvalidParameter { name, reason } => {
                Error::config(config_key(name).unwrap_or(fallback), reason)
            }
            other => other,
        };
        self.growth.validate().map_err(|e| as_config(e, "growth"))?;
        for (role, drug) in [("aa", &self.aa), ("ct", &self.ct)] {
            if let Some(d) = drug {
                d.schedule().map_err(|e| match e {
                    Error::InvalidParameter { name, reason } => Error::config(
                        format!("therapy.{role}.{}", drug_key(name)),
                        reason,
                    ),
                    other => other,
                })?;
            }
        }
        self.disc.validate().map_err(|e| as_config(e, "discretization"))?;
        if self.initial.kind != InitialKind::Zero && self.initial.x == (0.0, 0.0) {
            return Err(Error::config("initial.x_mm3", "missing"));
        }
        if self.initial.kind != InitialKind::Zero && self.initial.theta == (0.0, 0.0) {
            return Err(Error::config("initial.theta_mm3", "missing"));
        }
        if !(self.outputs.visible_threshold > 0.0) {
            return Err(Error::config("outputs.visible_threshold_mm3", "must be positive"));
        }
        self.model().map(|_| ()).map_err(|e| as_config(e, "growth"))
    }

    pub fn therapy(&self) -> Result<Therapy> {
        Ok(Therapy {
            aa: self.aa.as_ref().map(DrugConfig::schedule).transpose()?,
            ct: self.ct.as_ref().map(DrugConfig::schedule).transpose()?,
        })
    }

    pub fn model(&self) -> Result<Model<TumorGrowthField>> {
        let model = Model::tumor(&self.growth, &self.therapy()?, self.theta_low)?
            .with_repartition(self.repartition);
        model.validate(&self.disc)?;
        Ok(model)
    }

    pub fn solver_options(&self) -> SolverOptions {
        SolverOptions {
            visible_threshold: self.outputs.visible_threshold,
            enforce_nonnegative: self.checks.nonnegative,
        }
    }

    /// Serializes every key; parsing the result gives back `self`.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let g = &self.growth;
        let d = &self.disc;
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        kv("growth.a_per_day", g.a.to_string());
        kv("growth.c_per_day", g.c.to_string());
        kv("growth.d_per_day_mm2", g.d.to_string());
        kv("growth.m_per_day_mm3alpha", g.m.to_string());
        kv("growth.alpha", g.alpha.to_string());
        kv("growth.x0_mm3", g.x0.to_string());
        kv("growth.theta0_mm3", g.theta0.to_string());
        kv("growth.delta_theta_mm3", g.delta_theta.to_string());
        kv("growth.primary_x0_mm3", g.primary_x0.to_string());
        kv("growth.primary_theta0_mm3", g.primary_theta0.to_string());
        if let Some(t) = self.theta_low {
            kv("domain.theta_low_mm3", t.to_string());
        }
        for (role, drug) in [("aa", &self.aa), ("ct", &self.ct)] {
            if let Some(dr) = drug {
                let p = format!("therapy.{role}");
                kv(&format!("{p}.efficacy_per_day_mg"), dr.efficacy.to_string());
                kv(&format!("{p}.clearance_per_day"), dr.clearance.to_string());
                kv(&format!("{p}.dose_mg"), dr.dose.to_string());
                let times: Vec<String> = dr.times.iter().map(f64::to_string).collect();
                kv(&format!("{p}.times"), times.join(", "));
                if let Some(t) = dr.threshold {
                    kv(&format!("{p}.threshold_mm3"), t.to_string());
                }
                kv(&format!("{p}.heaviside_slope_mm3"), dr.heaviside_slope.to_string());
            }
        }
        kv("discretization.t_end_day", d.t_end.to_string());
        kv("discretization.dt_day", d.dt.to_string());
        kv("discretization.dsigma_mm3", d.dsigma.to_string());
        kv("discretization.dx_mm3", d.dx.to_string());
        kv(
            "discretization.quadrature",
            match d.quadrature {
                Quadrature::Rectangle => "rectangle",
                Quadrature::Trapezoid => "trapezoid",
            }
            .into(),
        );
        kv("discretization.dirac", d.dirac.to_string());
        kv(
            "discretization.data_mode",
            match d.data_mode {
                DataMode::CellAverage => "average",
                DataMode::PointValue => "point",
            }
            .into(),
        );
        kv(
            "discretization.repartition",
            match self.repartition {
                Repartition::Uniform => "uniform",
                Repartition::Hat => "hat",
            }
            .into(),
        );
        let i = &self.initial;
        kv(
            "initial.kind",
            match i.kind {
                InitialKind::Zero => "zero",
                InitialKind::Box => "box",
                InitialKind::Bump => "bump",
            }
            .into(),
        );
        if i.kind != InitialKind::Zero {
            kv("initial.x_mm3", format!("{}, {}", i.x.0, i.x.1));
            kv("initial.theta_mm3", format!("{}, {}", i.theta.0, i.theta.1));
            kv("initial.value_per_mm6", i.value.to_string());
        }
        if let Some(p) = &self.outputs.csv_path {
            kv("outputs.csv_path", p.display().to_string());
        }
        kv(
            "outputs.visible_threshold_mm3",
            self.outputs.visible_threshold.to_string(),
        );
        kv("checks.bounds", self.checks.bounds.to_string());
        kv("checks.nonnegative", self.checks.nonnegative.to_string());
        s
    }
}

/// Configuration key of a parameter name used in validation errors.
fn config_key(name: &str) -> Option<&'static str> {
    Some(match name {
        "a" => "growth.a_per_day",
        "c" => "growth.c_per_day",
        "d" => "growth.d_per_day_mm2",
        "m" => "growth.m_per_day_mm3alpha",
        "alpha" => "growth.alpha",
        "x0" => "growth.x0_mm3",
        "theta0" => "growth.theta0_mm3",
        "delta_theta" => "growth.delta_theta_mm3",
        "primary_x0" => "growth.primary_x0_mm3",
        "primary_theta0" => "growth.primary_theta0_mm3",
        "theta_low" => "domain.theta_low_mm3",
        "dt" => "discretization.dt_day",
        "dsigma" => "discretization.dsigma_mm3",
        "dx" => "discretization.dx_mm3",
        "t_end" => "discretization.t_end_day",
        "initial" => "initial.kind",
        _ => return None,
    })
}

fn drug_key(name: &str) -> &'static str {
    match name {
        "efficacy" => "efficacy_per_day_mg",
        "clearance" => "clearance_per_day",
        "dose" => "dose_mg",
        "admin_times" => "times",
        "action_threshold" => "threshold_mm3",
        "heaviside_slope" => "heaviside_slope_mm3",
        _ => "times",
    }
}
