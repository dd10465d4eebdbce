//! Scenario configuration: `[section]` headers and `key = value` lines.
//!
//! Values set later win, so a config file is applied over the defaults and
//! command-line flags over the file. [`ScenarioConfig::to_text`] writes every
//! key; parsing that text back yields the same configuration bit for bit.

use std::fmt::Write as _;
use std::path::PathBuf;

use crate::ball::VolumeMethod;
use crate::entropy::MIN_WINDOW_POINTS;
use crate::error::{Error, Result};
use crate::flow::FlowOptions;
use crate::geometry::{catalog_lookup, GeometryModel, MetricState};
use crate::quadrature::QuadratureRule;
use crate::rescaling::ClassifyOptions;

/// Quadrature key selecting the closed-form space-form volumes.
pub const CLOSED_FORM: &str = "closed-form";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Spacing {
    Linear,
    Log,
}

impl Spacing {
    pub fn as_str(self) -> &'static str {
        match self {
            Spacing::Linear => "linear",
            Spacing::Log => "log",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RadiusGrid {
    pub min: f64,
    pub max: f64,
    pub count: usize,
    pub spacing: Spacing,
}

impl RadiusGrid {
    pub fn points(&self) -> Vec<f64> {
        let n = self.count;
        (0..n)
            .map(|i| {
                if i + 1 == n {
                    return self.max;
                }
                let u = i as f64 / (n - 1) as f64;
                match self.spacing {
                    Spacing::Linear => self.min + u * (self.max - self.min),
                    Spacing::Log => self.min * (self.max / self.min).powf(u),
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub geometry: String,
    pub initial_coeffs: [f64; 3],
    pub t_end: f64,
    pub tol: f64,
    pub curvature_cap: f64,
    pub coefficient_floor: f64,
    pub r_grid: RadiusGrid,
    /// A quadrature rule name, or [`CLOSED_FORM`].
    pub quadrature: String,
    pub window: (f64, f64),
    pub window_points: usize,
    pub t_sequence: Vec<f64>,
    /// Radii of the audit tables.
    pub radii: Vec<f64>,
    /// Radial step of the audit finite differences.
    pub dr: f64,
    /// Lattice lengths for the collapse proxy.
    pub lattice: [f64; 3],
    pub horizon: f64,
    pub exponent_tol: f64,
    pub out_dir: PathBuf,
    /// Reserved for stochastic cross-checks; nothing draws from it yet.
    pub seed: u64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        let flow = FlowOptions::default();
        let classify = ClassifyOptions::default();
        Self {
            geometry: "euclidean".into(),
            initial_coeffs: [1.0; 3],
            t_end: 1.0,
            tol: flow.tol,
            curvature_cap: flow.curvature_cap,
            coefficient_floor: flow.coefficient_floor,
            r_grid: RadiusGrid {
                min: 0.05,
                max: 10.0,
                count: 200,
                spacing: Spacing::Linear,
            },
            quadrature: QuadratureRule::default().name().into(),
            window: (6.0, 10.0),
            window_points: 41,
            t_sequence: vec![0.0, 0.5, 2.0],
            radii: vec![1.0, 2.0],
            dr: 1e-3,
            lattice: [1.0; 3],
            horizon: classify.horizon,
            exponent_tol: classify.exponent_tol,
            out_dir: PathBuf::from("out"),
            seed: 0,
        }
    }
}

const KEYS: &[(&str, &[&str])] = &[
    ("scenario", &["geometry", "initial_coeffs"]),
    (
        "flow",
        &["t_end", "tol", "curvature_cap", "coefficient_floor"],
    ),
    (
        "volume",
        &["r_min", "r_max", "r_count", "spacing", "quadrature"],
    ),
    ("entropy", &["window", "window_points", "t_sequence"]),
    ("audit", &["radii", "dr", "lattice"]),
    ("classify", &["horizon", "exponent_tol"]),
    ("output", &["dir", "seed"]),
];

fn bad(section: &str, key: &str, value: &str, why: &str) -> Error {
    Error::Config(format!("[{section}] {key} = {value:?}: {why}"))
}

fn parse_f64(section: &str, key: &str, value: &str) -> Result<f64> {
    let x: f64 = value
        .parse()
        .map_err(|_| bad(section, key, value, "not a number"))?;
    if !x.is_finite() {
        return Err(bad(section, key, value, "must be finite"));
    }
    Ok(x)
}

fn parse_list(section: &str, key: &str, value: &str) -> Result<Vec<f64>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse_f64(section, key, s))
        .collect()
}

fn parse_n<const N: usize>(section: &str, key: &str, value: &str) -> Result<[f64; N]> {
    let v = parse_list(section, key, value)?;
    v.try_into().map_err(|_| {
        bad(
            section,
            key,
            value,
            &format!("expected {N} comma-separated numbers"),
        )
    })
}

fn parse_usize(section: &str, key: &str, value: &str) -> Result<usize> {
    value
        .parse()
        .map_err(|_| bad(section, key, value, "not a non-negative integer"))
}

fn join(xs: &[f64]) -> String {
    xs.iter().map(f64::to_string).collect::<Vec<_>>().join(", ")
}

impl ScenarioConfig {
    /// Parses config text over the defaults and validates the result.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        cfg.apply_text(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Applies config text on top of `self` without validating.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        let mut section: Option<String> = None;
        let mut seen = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                let name = name.trim();
                if !KEYS.iter().any(|(s, _)| *s == name) {
                    return Err(Error::Config(format!(
                        "line {}: unknown section [{name}]",
                        lineno + 1
                    )));
                }
                section = Some(name.to_string());
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::Config(format!(
                    "line {}: expected `key = value`, got {line:?}",
                    lineno + 1
                )));
            };
            let Some(sec) = section.as_deref() else {
                return Err(Error::Config(format!(
                    "line {}: `{}` appears before any [section]",
                    lineno + 1,
                    key.trim()
                )));
            };
            let key = key.trim();
            let id = format!("{sec}.{key}");
            if seen.contains(&id) {
                return Err(Error::Config(format!(
                    "line {}: duplicate key {id}",
                    lineno + 1
                )));
            }
            self.set(sec, key, value.trim())?;
            seen.push(id);
        }
        Ok(())
    }

    /// Sets one entry from its textual value. Unknown keys are errors.
    pub fn set(&mut self, section: &str, key: &str, value: &str) -> Result<()> {
        let (s, k, v) = (section, key, value);
        match (s, k) {
            ("scenario", "geometry") => self.geometry = v.to_string(),
            ("scenario", "initial_coeffs") => self.initial_coeffs = parse_n(s, k, v)?,
            ("flow", "t_end") => self.t_end = parse_f64(s, k, v)?,
            ("flow", "tol") => self.tol = parse_f64(s, k, v)?,
            ("flow", "curvature_cap") => self.curvature_cap = parse_f64(s, k, v)?,
            ("flow", "coefficient_floor") => self.coefficient_floor = parse_f64(s, k, v)?,
            ("volume", "r_min") => self.r_grid.min = parse_f64(s, k, v)?,
            ("volume", "r_max") => self.r_grid.max = parse_f64(s, k, v)?,
            ("volume", "r_count") => self.r_grid.count = parse_usize(s, k, v)?,
            ("volume", "spacing") => {
                self.r_grid.spacing = match v {
                    "linear" => Spacing::Linear,
                    "log" => Spacing::Log,
                    _ => return Err(bad(s, k, v, "expected `linear` or `log`")),
                }
            }
            ("volume", "quadrature") => self.quadrature = v.to_string(),
            ("entropy", "window") => {
                let [a, b] = parse_n(s, k, v)?;
                self.window = (a, b);
            }
            ("entropy", "window_points") => self.window_points = parse_usize(s, k, v)?,
            ("entropy", "t_sequence") => self.t_sequence = parse_list(s, k, v)?,
            ("audit", "radii") => self.radii = parse_list(s, k, v)?,
            ("audit", "dr") => self.dr = parse_f64(s, k, v)?,
            ("audit", "lattice") => self.lattice = parse_n(s, k, v)?,
            ("classify", "horizon") => self.horizon = parse_f64(s, k, v)?,
            ("classify", "exponent_tol") => self.exponent_tol = parse_f64(s, k, v)?,
            ("output", "dir") => self.out_dir = PathBuf::from(v),
            ("output", "seed") => {
                self.seed = v
                    .parse()
                    .map_err(|_| bad(s, k, v, "not a non-negative integer"))?
            }
            _ => {
                let valid = KEYS
                    .iter()
                    .find(|(name, _)| *name == s)
                    .map(|(_, keys)| keys.join(", "))
                    .unwrap_or_default();
                return Err(Error::Config(format!(
                    "unknown key `{k}` in [{s}]; valid keys: {valid}"
                )));
            }
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        let model = catalog_lookup(&self.geometry)?;
        if self.initial_coeffs.iter().any(|c| !(*c > 0.0)) {
            return fail(format!(
                "initial_coeffs must be positive, got {:?}",
                self.initial_coeffs
            ));
        }
        if model.is_space_form() {
            let [a, b, c] = self.initial_coeffs;
            if a != b || a != c {
                return fail(format!(
                    "{} needs isotropic initial_coeffs, got {:?}",
                    model.name(),
                    self.initial_coeffs
                ));
            }
        }
        if !(self.t_end > 0.0) {
            return fail(format!("t_end must be positive, got {}", self.t_end));
        }
        if !(self.tol > 0.0 && self.tol < 1.0) {
            return fail(format!("tol must lie in (0, 1), got {}", self.tol));
        }
        if !(self.curvature_cap > 0.0) || !(self.coefficient_floor > 0.0) {
            return fail("curvature_cap and coefficient_floor must be positive".into());
        }
        let g = &self.r_grid;
        if !(g.min > 0.0 && g.max > g.min) || g.count < 2 {
            return fail(format!(
                "radius grid needs 0 < r_min < r_max and r_count >= 2, got [{}, {}] x {}",
                g.min, g.max, g.count
            ));
        }
        if self.quadrature == CLOSED_FORM {
            if !model.is_space_form() {
                return fail(format!(
                    "{CLOSED_FORM} volumes need a space form, not {}",
                    model.name()
                ));
            }
        } else {
            QuadratureRule::from_name(&self.quadrature)
                .map_err(|e| Error::Config(e.to_string()))?;
        }
        let (a, b) = self.window;
        if !(a > 0.0 && b > a) {
            return fail(format!("window needs 0 < start < end, got ({a}, {b})"));
        }
        if self.window_points < MIN_WINDOW_POINTS {
            return fail(format!(
                "window_points must be at least {MIN_WINDOW_POINTS}"
            ));
        }
        let ts = &self.t_sequence;
        if ts.is_empty() || ts[0] < 0.0 || ts.windows(2).any(|w| w[1] <= w[0]) {
            return fail(format!(
                "t_sequence must be non-empty, non-negative and increasing, got {ts:?}"
            ));
        }
        if !(self.dr > 0.0)
            || self.radii.is_empty()
            || self.radii.iter().any(|r| !(*r > 2.0 * self.dr))
        {
            return fail(format!(
                "audit radii must be non-empty and exceed 2*dr = {}, got {:?}",
                2.0 * self.dr,
                self.radii
            ));
        }
        if self.lattice.iter().any(|l| !(*l > 0.0)) {
            return fail(format!(
                "lattice lengths must be positive, got {:?}",
                self.lattice
            ));
        }
        if !(self.horizon > 0.0 && self.exponent_tol > 0.0) {
            return fail("horizon and exponent_tol must be positive".into());
        }
        if self.out_dir.as_os_str().is_empty() {
            return fail("output dir must not be empty".into());
        }
        Ok(())
    }

    /// Canonical text form; every key, shortest round-trip number formatting.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let g = &self.r_grid;
        let _ = write!(
            s,
            "[scenario]\ngeometry = {}\ninitial_coeffs = {}\n\n\
             [flow]\nt_end = {}\ntol = {}\ncurvature_cap = {}\ncoefficient_floor = {}\n\n\
             [volume]\nr_min = {}\nr_max = {}\nr_count = {}\nspacing = {}\nquadrature = {}\n\n\
             [entropy]\nwindow = {}, {}\nwindow_points = {}\nt_sequence = {}\n\n\
             [audit]\nradii = {}\ndr = {}\nlattice = {}\n\n\
             [classify]\nhorizon = {}\nexponent_tol = {}\n\n\
             [output]\ndir = {}\nseed = {}\n",
            self.geometry,
            join(&self.initial_coeffs),
            self.t_end,
            self.tol,
            self.curvature_cap,
            self.coefficient_floor,
            g.min,
            g.max,
            g.count,
            g.spacing.as_str(),
            self.quadrature,
            self.window.0,
            self.window.1,
            self.window_points,
            join(&self.t_sequence),
            join(&self.radii),
            self.dr,
            join(&self.lattice),
            self.horizon,
            self.exponent_tol,
            self.out_dir.display(),
            self.seed,
        );
        s
    }

    pub fn model(&self) -> Result<GeometryModel> {
        catalog_lookup(&self.geometry)
    }

    pub fn initial_state(&self) -> Result<MetricState> {
        MetricState::new(self.initial_coeffs, 0.0)
    }

    pub fn flow_options(&self) -> FlowOptions {
        FlowOptions {
            tol: self.tol,
            curvature_cap: self.curvature_cap,
            coefficient_floor: self.coefficient_floor,
            ..FlowOptions::default()
        }
    }

    pub fn volume_method(&self) -> Result<VolumeMethod> {
        if self.quadrature == CLOSED_FORM {
            return Ok(VolumeMethod::ClosedForm);
        }
        Ok(VolumeMethod::jacobi(QuadratureRule::from_name(
            &self.quadrature,
        )?))
    }

    pub fn classify_options(&self) -> ClassifyOptions {
        ClassifyOptions {
            horizon: self.horizon,
            exponent_tol: self.exponent_tol,
            ..ClassifyOptions::default()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid_and_round_trip() {
        let cfg = ScenarioConfig::default();
        cfg.validate().unwrap();
        assert_eq!(ScenarioConfig::parse(&cfg.to_text()).unwrap(), cfg);
    }

    #[test]
    fn awkward_numbers_round_trip_exactly() {
        let mut cfg = ScenarioConfig::default();
        cfg.geometry = "nil".into();
        cfg.initial_coeffs = [0.1 + 0.2, 1.0 / 3.0, 7e-5];
        cfg.t_sequence = vec![0.0, 1e-7, std::f64::consts::PI, 1e4];
        cfg.r_grid.spacing = Spacing::Log;
        cfg.seed = u64::MAX;
        let back = ScenarioConfig::parse(&cfg.to_text()).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.initial_coeffs[0].to_bits(), (0.1f64 + 0.2).to_bits());
    }

    #[test]
    fn later_entries_override_earlier_ones() {
        let mut cfg = ScenarioConfig::default();
        cfg.apply_text("[flow]\nt_end = 3 # comment\n").unwrap();
        cfg.set("flow", "t_end", "4").unwrap();
        assert_eq!(cfg.t_end, 4.0);
        assert_eq!(cfg.tol, FlowOptions::default().tol);
    }

    #[test]
    fn rejects_unknown_and_malformed_entries() {
        for text in [
            "[flow]\nt_ned = 1\n",
            "[flows]\nt_end = 1\n",
            "t_end = 1\n",
            "[flow]\nt_end\n",
            "[flow]\nt_end = soon\n",
            "[flow]\nt_end = 1\nt_end = 2\n",
            "[scenario]\ninitial_coeffs = 1, 2\n",
            "[volume]\nspacing = cubic\n",
        ] {
            let err = ScenarioConfig::parse(text).unwrap_err();
            assert!(err.is_config_error(), "{text:?}: {err}");
        }
    }

    #[test]
    fn rejects_invalid_ranges() {
        for text in [
            "[scenario]\ngeometry = klein-bottle\n",
            "[scenario]\ninitial_coeffs = 1, 0, 1\n",
            "[scenario]\ngeometry = hyperbolic\ninitial_coeffs = 1, 2, 1\n",
            "[flow]\nt_end = -1\n",
            "[flow]\ntol = 0\n",
            "[volume]\nr_min = 2\nr_max = 1\n",
            "[volume]\nquadrature = lebedev7\n",
            "[volume]\nquadrature = closed-form\n",
            "[entropy]\nwindow = 8, 4\n",
            "[entropy]\nwindow_points = 3\n",
            "[entropy]\nt_sequence = 1, 0.5\n",
            "[audit]\nradii = 0.001\n",
            "[output]\nseed = -1\n",
        ] {
            let err = ScenarioConfig::parse(text).unwrap_err();
            assert!(err.is_config_error(), "{text:?}: {err}");
        }
    }

    #[test]
    fn log_grid_hits_both_ends() {
        let g = RadiusGrid {
            min: 0.1,
            max: 10.0,
            count: 5,
            spacing: Spacing::Log,
        };
        let p = g.points();
        assert_eq!((p[0], p[4]), (0.1, 10.0));
        assert!((p[2] - 1.0).abs() < 1e-15);
    }
}
