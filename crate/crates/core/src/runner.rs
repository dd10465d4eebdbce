//! The work behind each subcommand. Each runner writes its tables into the
//! configured output directory and returns `key = value` results for the
//! manifest.

use std::fs;
use std::path::Path;

use rayon::prelude::*;

use crate::ball::ball_volume_profile;
use crate::config::ScenarioConfig;
use crate::entropy::{
    default_dt, evolution_audit, monotonicity_audit, profile_at, radial_identity_check,
    radial_stencil, soliton_check, supersolution_compare, ENTROPY_METHOD,
};
use crate::error::Result;
use crate::flow::{
    integrate_flow, measure_evolution_check, EinsteinPath, FlowTrajectory, MetricPath, SolitonSpec,
};
use crate::geometry::{catalog, curvature, Backend, GeometryModel};
use crate::output::{
    audit_table, classification_record, num, opt_num, profile_table, trajectory_table, AuditRow,
    Table,
};
use crate::rescaling::{classify_blowup, growth_shift_identity, limit_entropy_experiment};

pub type Results = Vec<(String, String)>;

/// Metric factor of the growth-shift table.
pub const GROWTH_SHIFT_FACTOR: f64 = 4.0;

fn kv(k: &str, v: impl Into<String>) -> (String, String) {
    (k.to_string(), v.into())
}

pub fn catalog_table() -> Table {
    let mut t = Table::new(&["name", "backend", "lambda1", "lambda2", "lambda3", "kappa"]);
    for m in catalog() {
        let row = match m.backend() {
            Backend::StructureConstants { lambda } => {
                let mut r = vec![m.name().to_string(), "structure-constants".into()];
                r.extend(lambda.map(num));
                r.push(String::new());
                r
            }
            Backend::SpaceForm { kappa } => vec![
                m.name().to_string(),
                "space-form".into(),
                String::new(),
                String::new(),
                String::new(),
                num(kappa),
            ],
        };
        t.push(row);
    }
    t
}

pub fn run_catalog(out: &Path) -> Result<Results> {
    let models = catalog();
    for m in &models {
        println!("{m}");
    }
    catalog_table().write(&out.join("catalog.csv"))?;
    Ok(vec![kv("models", models.len().to_string())])
}

pub fn run_flow(cfg: &ScenarioConfig) -> Result<Results> {
    let model = cfg.model()?;
    let traj = integrate_flow(
        &model,
        &cfg.initial_state()?,
        cfg.t_end,
        &cfg.flow_options(),
    )?;
    trajectory_table(&traj).write(&cfg.out_dir.join("trajectory.csv"))?;
    Ok(vec![
        kv("termination", traj.termination().as_str()),
        kv("singular_time", opt_num(traj.singular_time())),
        kv("final_time", num(traj.t_final())),
        kv("samples", traj.samples().len().to_string()),
    ])
}

pub fn run_volume(cfg: &ScenarioConfig) -> Result<Results> {
    let method = cfg.volume_method()?;
    let profile = ball_volume_profile(
        &cfg.model()?,
        &cfg.initial_state()?,
        &cfg.r_grid.points(),
        method,
    )?;
    profile_table(&profile).write(&cfg.out_dir.join("profile.csv"))?;
    Ok(vec![
        kv("method", method.label()),
        kv(
            "min_conjugate_radius",
            opt_num(profile.min_conjugate_radius),
        ),
    ])
}

/// Space forms follow their exact Einstein path; everything else is
/// integrated far enough past `t_last` for centered time differences.
enum ScenarioPath {
    Exact(EinsteinPath),
    Numerical(FlowTrajectory),
}

impl ScenarioPath {
    fn new(cfg: &ScenarioConfig, model: &GeometryModel, t_last: f64) -> Result<Self> {
        let state = cfg.initial_state()?;
        if model.is_space_form() {
            return Ok(Self::Exact(EinsteinPath::new(
                model.clone(),
                state.coeffs()[0],
                0.0,
            )?));
        }
        let t_end = t_last + 3.0 * default_dt(t_last);
        Ok(Self::Numerical(integrate_flow(
            model,
            &state,
            t_end,
            &cfg.flow_options(),
        )?))
    }

    fn as_path(&self) -> &dyn MetricPath {
        match self {
            Self::Exact(p) => p,
            Self::Numerical(p) => p,
        }
    }

    /// A sampled trajectory for the measure check over `[0, t_last]`.
    fn sampled(&self, t_last: f64) -> Result<FlowTrajectory> {
        match self {
            Self::Numerical(p) => Ok(p.clone()),
            Self::Exact(p) => {
                let span = if t_last > 0.0 { t_last } else { 1e-2 };
                let times: Vec<f64> = (0..=MEASURE_GRID)
                    .map(|k| span * k as f64 / MEASURE_GRID as f64)
                    .collect();
                p.to_trajectory(&times)
            }
        }
    }
}

/// Intervals of the uniform grid on which exact paths are sampled.
const MEASURE_GRID: usize = 2000;

pub fn run_entropy(cfg: &ScenarioConfig) -> Result<Results> {
    let model = cfg.model()?;
    let t_last = *cfg.t_sequence.last().expect("validated non-empty");
    let path = ScenarioPath::new(cfg, &model, t_last)?;
    let audit = monotonicity_audit(
        path.as_path(),
        cfg.volume_method()?,
        cfg.window,
        cfg.window_points,
        &cfg.t_sequence,
        cfg.lattice,
    )?;
    let mut t = Table::new(&[
        "t",
        "h",
        "stderr",
        "window_start",
        "window_end",
        "points",
        "degree",
        "collapse_proxy",
    ]);
    for p in &audit.series {
        let e = &p.estimate;
        t.push(vec![
            num(p.t),
            num(e.h),
            num(e.stderr),
            num(e.window.0),
            num(e.window.1),
            e.points.to_string(),
            num(e.degree),
            num(p.collapse_proxy),
        ]);
    }
    t.write(&cfg.out_dir.join("entropy.csv"))?;
    Ok(vec![
        kv("estimator", ENTROPY_METHOD),
        kv("verdict", audit.verdict.as_str()),
    ])
}

pub fn run_audit(cfg: &ScenarioConfig) -> Result<Results> {
    let model = cfg.model()?;
    let method = cfg.volume_method()?;
    let ts = &cfg.t_sequence;
    let t_last = *ts.last().expect("validated non-empty");
    let scenario = ScenarioPath::new(cfg, &model, t_last)?;
    let path = scenario.as_path();
    let out = &cfg.out_dir;

    let cells: Vec<(f64, f64)> = ts
        .iter()
        .flat_map(|&t| cfg.radii.iter().map(move |&r| (t, r)))
        .collect();
    let evolution = cells
        .par_iter()
        .map(|&(t, r)| evolution_audit(path, method, r, t, default_dt(t)))
        .collect::<Result<Vec<_>>>()?;
    let super_cells = supersolution_compare(path, method, &cfg.radii, ts, cfg.dr)?;
    let mono = monotonicity_audit(path, method, cfg.window, cfg.window_points, ts, cfg.lattice)?;

    let rows: Vec<AuditRow> = evolution
        .iter()
        .zip(&super_cells)
        .map(|(e, s)| {
            let p = mono
                .series
                .iter()
                .find(|p| p.t == e.t)
                .expect("series covers every audit time");
            AuditRow {
                scenario: model.name().to_string(),
                t: e.t,
                r: e.r,
                omega: e.omega,
                domega_dt_measured: e.domega_dt_measured,
                rhs_eq2: e.rhs_eq2,
                shell_term: e.shell_term,
                hypothesis_sign: s.hypothesis_sign,
                bound_eq5: s.bound,
                h_estimate: p.estimate.h,
                h_stderr: p.estimate.stderr,
                collapse_proxy: p.collapse_proxy,
                verdict: mono.verdict.as_str().to_string(),
            }
        })
        .collect();
    audit_table(&rows).write(&out.join("audit.csv"))?;

    let mut sup = Table::new(&["t", "r", "omega", "bound", "hypothesis_sign", "holds"]);
    for c in &super_cells {
        sup.push(vec![
            num(c.t),
            num(c.r),
            num(c.omega),
            num(c.bound),
            num(c.hypothesis_sign),
            c.holds.to_string(),
        ]);
    }
    sup.write(&out.join("supersolution.csv"))?;

    let radial = cells
        .par_iter()
        .map(|&(t, r)| {
            let profile = profile_at(path, t, &radial_stencil(r, cfg.dr), method)?;
            Ok((t, radial_identity_check(&profile, r, cfg.dr)?))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut rad = Table::new(&[
        "t",
        "r",
        "dr",
        "lhs",
        "corrected_rhs",
        "corrected_residual",
        "printed_rhs",
        "printed_residual",
    ]);
    for (t, x) in &radial {
        rad.push(
            [
                *t,
                x.r,
                x.dr,
                x.lhs,
                x.corrected_rhs,
                x.corrected_residual,
                x.printed_rhs,
                x.printed_residual,
            ]
            .map(num)
            .to_vec(),
        );
    }
    rad.write(&out.join("radial.csv"))?;

    let mut results = vec![
        kv("verdict", mono.verdict.as_str()),
        kv("estimator", ENTROPY_METHOD),
        kv("method", method.label()),
    ];

    if model.is_space_form() {
        let einstein = EinsteinPath::new(model.clone(), cfg.initial_coeffs[0], 0.0)?;
        let spec = SolitonSpec::of_einstein(&einstein);
        let mut sol = Table::new(&["t", "r", "epsilon", "measured", "remark_prediction"]);
        for &(t, r) in &cells {
            let c = soliton_check(&einstein, &spec, r, t, default_dt(t))?;
            sol.push(vec![
                num(c.t),
                num(c.r),
                spec.epsilon().to_string(),
                num(c.measured),
                num(c.remark_prediction),
            ]);
        }
        sol.write(&out.join("soliton.csv"))?;
        results.push(kv("soliton_epsilon", spec.epsilon().to_string()));
    }

    let measure = measure_evolution_check(&scenario.sampled(t_last)?)?;
    let mut meas = Table::new(&["t", "residual"]);
    for m in &measure {
        meas.push(vec![num(m.t), num(m.residual)]);
    }
    meas.write(&out.join("measure.csv"))?;
    let worst = measure.iter().map(|m| m.residual.abs()).fold(0.0, f64::max);
    results.push(kv("measure_residual_max", num(worst)));

    let initial = path.state_at(ts[0])?;
    let mut shift = Table::new(&[
        "r",
        "factor",
        "offset",
        "omega_rescaled",
        "verbatim_residual",
        "scale_consistent_residual",
    ]);
    for &r in &cfg.radii {
        let g = growth_shift_identity(&model, &initial, GROWTH_SHIFT_FACTOR, r, method)?;
        shift.push(
            [
                g.r,
                g.factor,
                g.offset,
                g.omega_rescaled,
                g.verbatim_residual,
                g.scale_consistent_residual,
            ]
            .map(num)
            .to_vec(),
        );
    }
    shift.write(&out.join("growth_shift.csv"))?;

    if curvature(&model, &initial)?.riemann_norm > 0.0 {
        let limit = limit_entropy_experiment(path, ts, cfg.window, cfg.window_points, method)?;
        let mut lim = Table::new(&[
            "t",
            "factor",
            "h_original",
            "h_rescaled",
            "shift_at_window_start",
            "shift_at_window_end",
        ]);
        for row in &limit {
            lim.push(
                [
                    row.t,
                    row.factor,
                    row.original.h,
                    row.rescaled.h,
                    row.shift_at_window_start,
                    row.shift_at_window_end,
                ]
                .map(num)
                .to_vec(),
            );
        }
        lim.write(&out.join("limit_entropy.csv"))?;
    }
    Ok(results)
}

pub fn run_classify(cfg: &ScenarioConfig) -> Result<Results> {
    let model = cfg.model()?;
    let traj = integrate_flow(
        &model,
        &cfg.initial_state()?,
        cfg.t_end,
        &cfg.flow_options(),
    )?;
    let fit = classify_blowup(&traj, &cfg.classify_options())?;
    let mut line = classification_record(model.name(), &fit);
    line.push('\n');
    fs::write(cfg.out_dir.join("classification.jsonl"), line)?;
    Ok(vec![
        kv("verdict", fit.verdict.as_str()),
        kv("singular_time", opt_num(fit.singular_time)),
        kv("exponent", opt_num(fit.exponent)),
        kv("termination", traj.termination().as_str()),
    ])
}
