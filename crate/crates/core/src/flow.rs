//! Unnormalized Ricci flow `∂g/∂t = −2 Rc` on diagonal metric coefficients.
//!
//! The integrator is an embedded Dormand–Prince 5(4) pair on the
//! log-coefficients `ln A, ln B, ln C`. Positivity is automatic in those
//! variables and the per-step error bound is a relative bound on the
//! coefficients.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{curvature, isotropic_scale, CurvatureReport, GeometryModel, MetricState};

/// `dA/dt, dB/dt, dC/dt = −2 Ric(e_i, e_i)`.
pub fn flow_rhs(model: &GeometryModel, state: &MetricState) -> Result<[f64; 3]> {
    let ric = curvature(model, state)?.ricci_components;
    Ok(ric.map(|r| -2.0 * r))
}

fn log_rhs(model: &GeometryModel, log_coeffs: [f64; 3]) -> Result<[f64; 3]> {
    let state = MetricState::new(log_coeffs.map(f64::exp), 0.0)?;
    let ric = curvature(model, &state)?.ricci_eigenvalues;
    Ok(ric.map(|r| -2.0 * r))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TerminationReason {
    ReachedTEnd,
    CurvatureCap,
    CoefficientFloor,
}

impl TerminationReason {
    pub fn as_str(self) -> &'static str {
        match self {
            TerminationReason::ReachedTEnd => "reached_t_end",
            TerminationReason::CurvatureCap => "curvature_cap",
            TerminationReason::CoefficientFloor => "coefficient_floor",
        }
    }
}

/// How an integration run records samples.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Sampling {
    /// Every accepted step. Steps are limited in log-coefficient change, so the
    /// samples come out log-spaced near blow-up and on long runs.
    Steps,
    /// Only the uniform grid `t0 + k·dt`, plus the endpoint.
    Uniform(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowOptions {
    /// Local error bound per step on the log-coefficients.
    pub tol: f64,
    pub curvature_cap: f64,
    pub coefficient_floor: f64,
    /// Largest change of any log-coefficient in one step.
    pub max_log_step: f64,
    pub sampling: Sampling,
}

impl Default for FlowOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            curvature_cap: 1e8,
            coefficient_floor: 1e-12,
            max_log_step: 0.05,
            sampling: Sampling::Steps,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FlowSample {
    pub state: MetricState,
    pub curvature: CurvatureReport,
}

impl FlowSample {
    pub fn new(model: &GeometryModel, state: MetricState) -> Result<Self> {
        Ok(Self {
            curvature: curvature(model, &state)?,
            state,
        })
    }

    pub fn time(&self) -> f64 {
        self.state.time()
    }
}

/// A time-sampled Ricci flow solution. Immutable once built.
#[derive(Debug, Clone, Serialize)]
pub struct FlowTrajectory {
    model: GeometryModel,
    samples: Vec<FlowSample>,
    singular_time: Option<f64>,
    termination: TerminationReason,
    #[serde(skip)]
    options: Option<FlowOptions>,
}

/// Anything that yields the metric of a Ricci flow solution at a given time.
pub trait MetricPath: Sync {
    fn model(&self) -> &GeometryModel;
    fn state_at(&self, t: f64) -> Result<MetricState>;

    /// Earliest time the path is defined at.
    fn t_start(&self) -> f64 {
        f64::NEG_INFINITY
    }
}

impl FlowTrajectory {
    /// Builds a trajectory from states, recomputing every curvature report.
    pub fn from_states(
        model: GeometryModel,
        states: Vec<MetricState>,
        singular_time: Option<f64>,
        termination: TerminationReason,
    ) -> Result<Self> {
        if states.is_empty() {
            return Err(Error::InsufficientSamples {
                what: "trajectory",
                needed: 1,
                got: 0,
            });
        }
        if states.windows(2).any(|w| w[1].time() <= w[0].time()) {
            return Err(Error::InvalidArgument(
                "trajectory sample times must be strictly increasing".into(),
            ));
        }
        let samples = states
            .into_iter()
            .map(|s| FlowSample::new(&model, s))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            model,
            samples,
            singular_time,
            termination,
            options: None,
        })
    }

    pub fn model(&self) -> &GeometryModel {
        &self.model
    }

    /// Integration options, for trajectories produced by [`integrate_flow`].
    pub fn options(&self) -> Option<FlowOptions> {
        self.options
    }

    /// Attaches integration options so refined queries re-integrate. Valid for
    /// any trajectory that solves the flow, since the options are
    /// scale-free in log-coefficients.
    pub(crate) fn with_options(mut self, options: Option<FlowOptions>) -> Self {
        self.options = options;
        self
    }

    pub fn samples(&self) -> &[FlowSample] {
        &self.samples
    }

    pub fn singular_time(&self) -> Option<f64> {
        self.singular_time
    }

    pub fn termination(&self) -> TerminationReason {
        self.termination
    }

    pub fn t_start(&self) -> f64 {
        self.samples[0].time()
    }

    pub fn t_final(&self) -> f64 {
        self.samples[self.samples.len() - 1].time()
    }

    pub fn last(&self) -> &FlowSample {
        &self.samples[self.samples.len() - 1]
    }

    /// Metric at time `t`, cubic Hermite in the log-coefficients between samples.
    pub fn state_at(&self, t: f64) -> Result<MetricState> {
        let (t0, t1) = (self.t_start(), self.t_final());
        let slack = 1e-12 * t0.abs().max(t1.abs()).max(1.0);
        if !(t >= t0 - slack && t <= t1 + slack) {
            return Err(Error::InvalidArgument(format!(
                "time {t} outside trajectory span [{t0}, {t1}]"
            )));
        }
        let t = t.clamp(t0, t1);
        let idx = self.samples.partition_point(|s| s.time() <= t);
        if idx == 0 {
            return Ok(self.samples[0].state);
        }
        if idx == self.samples.len() {
            return Ok(self.last().state.with_time(t));
        }
        let (lo, hi) = (&self.samples[idx - 1], &self.samples[idx]);
        if t == lo.time() {
            return Ok(lo.state);
        }
        let h = hi.time() - lo.time();
        let s = (t - lo.time()) / h;
        let h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
        let h10 = s * (1.0 - s) * (1.0 - s);
        let h01 = s * s * (3.0 - 2.0 * s);
        let h11 = s * s * (s - 1.0);
        let mut coeffs = [0.0; 3];
        for (i, c) in coeffs.iter_mut().enumerate() {
            let y0 = lo.state.coeffs()[i].ln();
            let y1 = hi.state.coeffs()[i].ln();
            let d0 = -2.0 * lo.curvature.ricci_eigenvalues[i];
            let d1 = -2.0 * hi.curvature.ricci_eigenvalues[i];
            *c = (h00 * y0 + h10 * h * d0 + h01 * y1 + h11 * h * d1).exp();
        }
        if self.model.is_space_form() {
            // keep space-form states exactly isotropic
            coeffs = [coeffs[0]; 3];
        }
        MetricState::new(coeffs, t)
    }

    /// Metric at time `t`, re-integrated from the last sample at or before `t`
    /// with the run's tolerance. Falls back to interpolation for trajectories
    /// not produced by [`integrate_flow`].
    pub fn state_at_refined(&self, t: f64) -> Result<MetricState> {
        let Some(opts) = self.options else {
            return self.state_at(t);
        };
        let interpolated = self.state_at(t)?;
        let t = interpolated.time();
        let idx = self.samples.partition_point(|s| s.time() <= t);
        let lo = &self.samples[idx.saturating_sub(1)];
        if lo.time() == t {
            return Ok(lo.state);
        }
        let segment_opts = FlowOptions {
            curvature_cap: f64::INFINITY,
            coefficient_floor: 0.0,
            sampling: Sampling::Steps,
            ..opts
        };
        let segment = integrate_flow(&self.model, &lo.state, t, &segment_opts)?;
        Ok(segment.last().state.with_time(t))
    }

    pub fn curvature_at(&self, t: f64) -> Result<CurvatureReport> {
        curvature(&self.model, &self.state_at_refined(t)?)
    }
}

impl MetricPath for FlowTrajectory {
    fn model(&self) -> &GeometryModel {
        &self.model
    }

    fn state_at(&self, t: f64) -> Result<MetricState> {
        self.state_at_refined(t)
    }

    fn t_start(&self) -> f64 {
        FlowTrajectory::t_start(self)
    }
}

// Dormand–Prince 5(4) tableau. The flow is autonomous, so the nodes are not needed.
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// One Dormand–Prince step from `y` (with `f(y)` already known). Returns the
/// fifth-order solution and the error estimate, or `None` if a stage left the
/// domain of valid metrics.
fn dp_step(model: &GeometryModel, y: [f64; 3], f0: [f64; 3], h: f64) -> Option<([f64; 3], f64)> {
    let mut k = [[0.0; 3]; 7];
    k[0] = f0;
    for s in 1..7 {
        let mut ys = y;
        for (i, v) in ys.iter_mut().enumerate() {
            *v += h * (0..s).map(|j| A[s][j] * k[j][i]).sum::<f64>();
        }
        k[s] = log_rhs(model, ys).ok()?;
    }
    let mut y5 = y;
    let mut err: f64 = 0.0;
    for i in 0..3 {
        let d5: f64 = (0..7).map(|s| B5[s] * k[s][i]).sum();
        let d4: f64 = (0..7).map(|s| B4[s] * k[s][i]).sum();
        y5[i] += h * d5;
        err = err.max((h * (d5 - d4)).abs());
    }
    if y5.iter().all(|v| v.is_finite()) && err.is_finite() {
        Some((y5, err))
    } else {
        None
    }
}

pub fn integrate_flow(
    model: &GeometryModel,
    initial: &MetricState,
    t_end: f64,
    opts: &FlowOptions,
) -> Result<FlowTrajectory> {
    let t0 = initial.time();
    if !(opts.tol > 0.0) {
        return Err(Error::InvalidArgument("tolerance must be positive".into()));
    }
    if !(t_end > t0) {
        return Err(Error::InvalidArgument(format!(
            "t_end {t_end} must exceed the initial time {t0}"
        )));
    }
    if let Sampling::Uniform(dt) = opts.sampling {
        if !(dt > 0.0) {
            return Err(Error::InvalidArgument(
                "sampling step must be positive".into(),
            ));
        }
    }
    if model.is_space_form() {
        isotropic_scale(initial)?;
    }

    let first = FlowSample::new(model, *initial)?;
    let mut samples = vec![first];
    let mut y = initial.coeffs().map(f64::ln);
    let mut coeffs_now = initial.coeffs();
    let mut f = log_rhs(model, y)?;
    let mut t = t0;
    let rate = f.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let span = t_end - t0;
    let mut h = if rate > 0.0 {
        (0.01 / rate).min(span)
    } else {
        span
    };
    let mut grid_index: u64 = 1;
    let termination;

    loop {
        let target = match opts.sampling {
            Sampling::Steps => t_end,
            Sampling::Uniform(dt) => {
                let tk = t0 + grid_index as f64 * dt;
                if tk >= t_end - 1e-9 * dt {
                    t_end
                } else {
                    tk
                }
            }
        };
        let lands = h >= target - t;
        let step = if lands { target - t } else { h };
        if step < 1e-14 * t.abs().max(1.0) {
            return Err(Error::StepUnderflow { t, h: step });
        }

        let Some((y_new, err)) = dp_step(model, y, f, step) else {
            h = 0.25 * step;
            continue;
        };
        let max_change = (0..3).map(|i| (y_new[i] - y[i]).abs()).fold(0.0, f64::max);
        if err > opts.tol || max_change > opts.max_log_step {
            let by_err = 0.9 * (opts.tol / err).powf(0.2);
            let by_change = 0.9 * opts.max_log_step / max_change;
            h = step * by_err.min(by_change).clamp(0.1, 0.9);
            continue;
        }

        let t_new = if lands { target } else { t + step };
        let prev = coeffs_now;
        let mut coeffs = [0.0; 3];
        for i in 0..3 {
            coeffs[i] = prev[i] * (y_new[i] - y[i]).exp();
        }
        if model.is_space_form() {
            coeffs = [coeffs[0]; 3];
        }
        coeffs_now = coeffs;
        let state = MetricState::new(coeffs, t_new)?;
        let sample = FlowSample::new(model, state)?;
        y = y_new;
        f = log_rhs(model, y)?;
        t = t_new;
        let factor = if err > 0.0 {
            (0.9 * (opts.tol / err).powf(0.2)).clamp(0.2, 5.0)
        } else {
            5.0
        };
        if !lands || factor < 1.0 {
            h = step * factor;
        } else {
            h = h.max(step * factor);
        }

        let capped = sample.curvature.riemann_norm >= opts.curvature_cap;
        let floored = coeffs.iter().any(|c| *c <= opts.coefficient_floor);
        let finished = t >= t_end;
        let on_grid = match opts.sampling {
            Sampling::Steps => true,
            Sampling::Uniform(_) => lands,
        };
        if lands && matches!(opts.sampling, Sampling::Uniform(_)) {
            grid_index += 1;
        }

        if capped || floored || finished {
            termination = if capped {
                TerminationReason::CurvatureCap
            } else if floored {
                TerminationReason::CoefficientFloor
            } else {
                TerminationReason::ReachedTEnd
            };
            if on_grid {
                samples.push(sample);
            } else if let Sampling::Uniform(dt) = opts.sampling {
                let prev = samples[samples.len() - 1].time();
                if samples.len() > 1 && t - prev < 0.5 * dt {
                    samples.pop();
                }
                samples.push(sample);
            }
            break;
        }
        if on_grid {
            samples.push(sample);
        }
    }

    let singular_time = match termination {
        TerminationReason::CurvatureCap => estimate_singular_time(&samples),
        _ => None,
    };
    Ok(FlowTrajectory {
        model: model.clone(),
        samples,
        singular_time,
        termination,
        options: Some(*opts),
    })
}

/// Extrapolates `1/|Rm| → 0` linearly over the last decade of `1/|Rm|`.
fn estimate_singular_time(samples: &[FlowSample]) -> Option<f64> {
    let inv_last = 1.0 / samples.last()?.curvature.riemann_norm;
    let mut window: Vec<(f64, f64)> = samples
        .iter()
        .rev()
        .map(|s| (s.time(), 1.0 / s.curvature.riemann_norm))
        .take_while(|(_, inv)| *inv <= 10.0 * inv_last)
        .collect();
    if window.len() < 2 {
        window = samples
            .iter()
            .rev()
            .take(2)
            .map(|s| (s.time(), 1.0 / s.curvature.riemann_norm))
            .collect();
    }
    if window.len() < 2 {
        return None;
    }
    let (slope, intercept) = linear_fit(&window);
    (slope < 0.0).then(|| -intercept / slope)
}

/// Least-squares line through `(x, y)` pairs, centered for conditioning.
pub(crate) fn linear_fit(points: &[(f64, f64)]) -> (f64, f64) {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// Closed-form flow of an Einstein space form: `c(t) = c0 − 4κ t`.
pub fn closed_form_trajectory(model: &GeometryModel, c0: f64, t: f64) -> Result<MetricState> {
    EinsteinPath::new(model.clone(), c0, 0.0)?.state_at(t)
}

/// The exact flow `g(t) = (1 − 2ρ(t − t0)) g(t0)` of an Einstein space form with `Ric = ρ g`.
#[derive(Debug, Clone, PartialEq)]
pub struct EinsteinPath {
    model: GeometryModel,
    kappa: f64,
    c0: f64,
    t0: f64,
}

impl EinsteinPath {
    pub fn new(model: GeometryModel, c0: f64, t0: f64) -> Result<Self> {
        let kappa = model.kappa().ok_or_else(|| {
            Error::InvalidArgument(format!(
                "closed-form trajectories need a space form, got {}",
                model.name()
            ))
        })?;
        if !(c0 > 0.0 && c0.is_finite()) {
            return Err(Error::InvalidMetric(format!(
                "initial scale must be positive, got {c0}"
            )));
        }
        Ok(Self {
            model,
            kappa,
            c0,
            t0,
        })
    }

    pub fn scale_at(&self, t: f64) -> f64 {
        self.c0 - 4.0 * self.kappa * (t - self.t0)
    }

    /// `T = t0 + c0 / (4κ)` for positive curvature.
    pub fn singular_time(&self) -> Option<f64> {
        (self.kappa > 0.0).then(|| self.t0 + self.c0 / (4.0 * self.kappa))
    }

    /// Samples the path at the given times.
    pub fn to_trajectory(&self, times: &[f64]) -> Result<FlowTrajectory> {
        let states = times
            .iter()
            .map(|&t| self.state_at(t))
            .collect::<Result<Vec<_>>>()?;
        FlowTrajectory::from_states(
            self.model.clone(),
            states,
            self.singular_time(),
            TerminationReason::ReachedTEnd,
        )
    }
}

impl MetricPath for EinsteinPath {
    fn model(&self) -> &GeometryModel {
        &self.model
    }

    fn state_at(&self, t: f64) -> Result<MetricState> {
        let c = self.scale_at(t);
        if c <= 0.0 {
            return Err(Error::PastSingularTime {
                t,
                singular_time: self.singular_time().unwrap_or(f64::NAN),
            });
        }
        MetricState::isotropic(c, t)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeasureResidual {
    pub t: f64,
    pub residual: f64,
}

/// Residuals of `d/dt ln √(ABC) = −R` at interior samples, with the
/// derivative taken by a three-point difference on the sample grid.
pub fn measure_evolution_check(traj: &FlowTrajectory) -> Result<Vec<MeasureResidual>> {
    let samples = traj.samples();
    if samples.len() < 3 {
        return Err(Error::InsufficientSamples {
            what: "measure evolution check",
            needed: 3,
            got: samples.len(),
        });
    }
    let log_vol: Vec<f64> = samples
        .iter()
        .map(|s| s.state.volume_element().ln())
        .collect();
    Ok((1..samples.len() - 1)
        .map(|k| {
            let h1 = samples[k].time() - samples[k - 1].time();
            let h2 = samples[k + 1].time() - samples[k].time();
            let d = (h1 * h1 * (log_vol[k + 1] - log_vol[k])
                + h2 * h2 * (log_vol[k] - log_vol[k - 1]))
                / (h1 * h2 * (h1 + h2));
            MeasureResidual {
                t: samples[k].time(),
                residual: (d + samples[k].curvature.scalar).abs(),
            }
        })
        .collect())
}

/// Largest mismatch between a centered difference of the log-coefficients of
/// `path` at `t` and the Ricci flow velocity `−2 Ric(f_i, f_i)`.
pub fn flow_equation_residual(path: &dyn MetricPath, t: f64, dt: f64) -> Result<f64> {
    let lo = path.state_at(t - dt)?;
    let hi = path.state_at(t + dt)?;
    let mid = path.state_at(t)?;
    let ric = curvature(path.model(), &mid)?.ricci_eigenvalues;
    Ok((0..3)
        .map(|i| {
            let fd = (hi.coeffs()[i].ln() - lo.coeffs()[i].ln()) / (2.0 * dt);
            (fd + 2.0 * ric[i]).abs()
        })
        .fold(0.0, f64::max))
}

/// Self-similar type of an Einstein solution: shrinking (−1), steady (0) or
/// expanding (+1), with the time the self-similar scale vanishes. The soliton
/// potential plays no role for Einstein metrics and is not represented.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolitonSpec {
    epsilon: i8,
    time_origin: f64,
}

impl SolitonSpec {
    pub fn new(epsilon: i8, time_origin: f64) -> Result<Self> {
        if !(-1..=1).contains(&epsilon) {
            return Err(Error::InvalidArgument(format!(
                "soliton epsilon must be -1, 0 or 1, got {epsilon}"
            )));
        }
        if !time_origin.is_finite() {
            return Err(Error::InvalidArgument(
                "soliton time origin must be finite".into(),
            ));
        }
        Ok(Self {
            epsilon,
            time_origin,
        })
    }

    /// The soliton type of an Einstein path: `g(t) = 4|κ|(t − t*) g₁` up to a
    /// fixed metric, with `t*` where the scale vanishes.
    pub fn of_einstein(path: &EinsteinPath) -> Self {
        let epsilon = if path.kappa > 0.0 {
            -1
        } else if path.kappa < 0.0 {
            1
        } else {
            0
        };
        let time_origin = if path.kappa == 0.0 {
            0.0
        } else {
            path.t0 + path.c0 / (4.0 * path.kappa)
        };
        Self {
            epsilon,
            time_origin,
        }
    }

    pub fn epsilon(&self) -> i8 {
        self.epsilon
    }

    pub fn time_origin(&self) -> f64 {
        self.time_origin
    }
}
