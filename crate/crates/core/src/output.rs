//! Machine-readable outputs: CSV tables, JSON-lines verdicts and the run manifest.
//!
//! Every real number is written with 17 significant digits (`{:.16e}`), which
//! round-trips `f64` and is identical across platforms and thread counts.

use std::fs;
use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::ball::VolumeProfile;
use crate::error::Result;
use crate::flow::FlowTrajectory;
use crate::rescaling::BlowupFit;

pub const CONFIG_MARKER: &str = "----- config -----";
pub const WALL_TIME_KEY: &str = "wall_time_seconds";

pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn opt_num(x: Option<f64>) -> String {
    x.map_or_else(String::new, num)
}

/// A CSV table. Cells are numbers and identifiers, so no quoting is needed.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self {
            header: header.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn render(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.render())?;
        Ok(())
    }
}

pub fn trajectory_table(traj: &FlowTrajectory) -> Table {
    let mut t = Table::new(&["t", "A", "B", "C", "R", "rm_norm", "K23", "K31", "K12"]);
    for s in traj.samples() {
        let [a, b, c] = s.state.coeffs();
        let k = s.curvature.sectional;
        t.push(
            [
                s.time(),
                a,
                b,
                c,
                s.curvature.scalar,
                s.curvature.riemann_norm,
                k[0],
                k[1],
                k[2],
            ]
            .map(num)
            .to_vec(),
        );
    }
    t
}

pub fn profile_table(profile: &VolumeProfile) -> Table {
    let mut t = Table::new(&["r", "vol_ball", "area_sphere", "conjugate_flag"]);
    for i in 0..profile.r_grid.len() {
        t.push(vec![
            num(profile.r_grid[i]),
            num(profile.vol_ball[i]),
            num(profile.area_sphere[i]),
            u8::from(profile.is_upper_bound(i)).to_string(),
        ]);
    }
    t
}

/// One row of the audit table.
#[derive(Debug, Clone, PartialEq)]
pub struct AuditRow {
    pub scenario: String,
    pub t: f64,
    pub r: f64,
    pub omega: f64,
    pub domega_dt_measured: f64,
    pub rhs_eq2: f64,
    pub shell_term: f64,
    pub hypothesis_sign: f64,
    pub bound_eq5: f64,
    pub h_estimate: f64,
    pub h_stderr: f64,
    pub collapse_proxy: f64,
    pub verdict: String,
}

pub const AUDIT_COLUMNS: [&str; 13] = [
    "scenario",
    "t",
    "r",
    "omega",
    "domega_dt_measured",
    "rhs_eq2",
    "shell_term",
    "hypothesis_sign",
    "bound_eq5",
    "h_estimate",
    "h_stderr",
    "collapse_proxy",
    "verdict",
];

pub fn audit_table(rows: &[AuditRow]) -> Table {
    let mut t = Table::new(&AUDIT_COLUMNS);
    for r in rows {
        let mut cells = vec![r.scenario.clone()];
        cells.extend(
            [
                r.t,
                r.r,
                r.omega,
                r.domega_dt_measured,
                r.rhs_eq2,
                r.shell_term,
                r.hypothesis_sign,
                r.bound_eq5,
                r.h_estimate,
                r.h_stderr,
                r.collapse_proxy,
            ]
            .map(num),
        );
        cells.push(r.verdict.clone());
        t.push(cells);
    }
    t
}

#[derive(Serialize)]
struct ClassificationRecord<'a> {
    scenario: &'a str,
    verdict: &'a str,
    #[serde(rename = "T")]
    singular_time: Option<f64>,
    exponent: Option<f64>,
    constant: Option<f64>,
    residual: Option<f64>,
}

/// `{scenario, verdict, T, exponent, constant, residual}`; absent values are null.
pub fn classification_record(scenario: &str, fit: &BlowupFit) -> String {
    serde_json::to_string(&ClassificationRecord {
        scenario,
        verdict: fit.verdict.as_str(),
        singular_time: fit.singular_time,
        exponent: fit.exponent,
        constant: fit.constant,
        residual: fit.residual,
    })
    .expect("plain record serializes")
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

/// Plain-text record of a run: `key = value` lines, then the full config.
#[derive(Debug, Clone, PartialEq)]
pub struct Manifest {
    pub subcommand: String,
    pub config_text: String,
    pub results: Vec<(String, String)>,
    pub wall_time_seconds: f64,
}

impl Manifest {
    pub fn render(&self) -> String {
        let mut s = format!(
            "tool = {}\nversion = {}\nsubcommand = {}\nconfig_sha256 = {}\n{WALL_TIME_KEY} = {:.6}\n",
            env!("CARGO_PKG_NAME"),
            env!("CARGO_PKG_VERSION"),
            self.subcommand,
            sha256_hex(self.config_text.as_bytes()),
            self.wall_time_seconds,
        );
        for (k, v) in &self.results {
            s.push_str(&format!("{k} = {v}\n"));
        }
        s.push_str(CONFIG_MARKER);
        s.push('\n');
        s.push_str(&self.config_text);
        s
    }

    /// The config text embedded after the marker line.
    pub fn embedded_config(manifest: &str) -> Option<&str> {
        let start = manifest.find(CONFIG_MARKER)? + CONFIG_MARKER.len();
        manifest[start..].strip_prefix('\n')
    }

    /// Value of a header `key = value` line.
    pub fn field<'a>(manifest: &'a str, key: &str) -> Option<&'a str> {
        manifest
            .lines()
            .take_while(|l| *l != CONFIG_MARKER)
            .find_map(|l| {
                let (k, v) = l.split_once(" = ")?;
                (k == key).then_some(v)
            })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::{integrate_flow, FlowOptions};
    use crate::geometry::catalog_lookup;
    use crate::geometry::MetricState;
    use crate::rescaling::BlowupType;

    #[test]
    fn numbers_carry_seventeen_significant_digits() {
        assert_eq!(num(0.25), "2.5000000000000000e-1");
        assert_eq!(num(-1.0 / 3.0), "-3.3333333333333331e-1");
        for x in [0.1 + 0.2, 1e-300, 6.02214076e23, -0.0] {
            assert_eq!(num(x).parse::<f64>().unwrap().to_bits(), x.to_bits());
        }
        assert_eq!(opt_num(None), "");
    }

    #[test]
    fn trajectory_csv_layout() {
        let model = catalog_lookup("nil").unwrap();
        let state = MetricState::new([1.0; 3], 0.0).unwrap();
        let traj = integrate_flow(&model, &state, 0.1, &FlowOptions::default()).unwrap();
        let text = trajectory_table(&traj).render();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("t,A,B,C,R,rm_norm,K23,K31,K12"));
        let first: Vec<f64> = lines
            .next()
            .unwrap()
            .split(',')
            .map(|c| c.parse().unwrap())
            .collect();
        assert_eq!(first[..4], [0.0, 1.0, 1.0, 1.0]);
        assert_eq!(first[4], -0.5);
        assert_eq!(text.lines().count(), traj.samples().len() + 1);
    }

    #[test]
    fn classification_line_uses_null_for_missing_values() {
        let fit = BlowupFit {
            verdict: BlowupType::Other,
            singular_time: None,
            exponent: None,
            constant: None,
            residual: None,
            product_spread: None,
            samples: 3,
        };
        let line = classification_record("euclidean", &fit);
        let v: serde_json::Value = serde_json::from_str(&line).unwrap();
        assert_eq!(v["verdict"], "other");
        assert!(v["T"].is_null());
        assert_eq!(v.as_object().unwrap().len(), 6);
    }

    #[test]
    fn manifest_round_trip() {
        let m = Manifest {
            subcommand: "flow".into(),
            config_text: "[flow]\nt_end = 1\n".into(),
            results: vec![("singular_time".into(), num(0.25))],
            wall_time_seconds: 0.5,
        };
        let text = m.render();
        assert_eq!(
            Manifest::embedded_config(&text),
            Some("[flow]\nt_end = 1\n")
        );
        assert_eq!(Manifest::field(&text, "subcommand"), Some("flow"));
        assert_eq!(
            Manifest::field(&text, "singular_time"),
            Some("2.5000000000000000e-1")
        );
        assert_eq!(
            Manifest::field(&text, "config_sha256").map(str::len),
            Some(64)
        );
        assert_eq!(Manifest::field(&text, "t_end"), None);
    }
}
