//! Geodesic ball volumes in the universal cover.
//!
//! `Vol B(r) = Σ_v w_v ∫₀^r j(ρ, v) dρ` where `j` is the determinant of the
//! 2×2 Jacobi matrix along the unit-speed geodesic from the identity in
//! direction `v`. Geodesics of a left-invariant metric are integrated in the
//! orthonormal Milnor frame together with a parallel frame for the orthogonal
//! complement of the velocity, in which the Jacobi equation reads
//! `Y'' + M Y = 0`, `M_mn = <R(E_n, γ')γ', E_m>`.
//!
//! Past the first conjugate point of a ray `j` is clamped to zero, so entries
//! beyond the smallest conjugate radius of a profile are upper bounds: the
//! multiplicity of the exponential map is not tracked.
//!
//! The base point is the identity; left translations act transitively and
//! preserve the frame, so any other base point gives the same ray data.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{
    frame_sectional, isotropic_scale, levi_civita, orthonormal_structure_constants, Backend,
    GeometryModel, MetricState,
};
use crate::quadrature::QuadratureRule;

/// Ray integration control.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RayOptions {
    /// Largest RK4 step, in units of the metric's length scale `(ABC)^{1/6}`.
    /// Measuring the step in that unit keeps the profile pipeline exactly
    /// covariant under `g ↦ c·g`.
    pub step: f64,
}

impl Default for RayOptions {
    fn default() -> Self {
        Self { step: 0.01 }
    }
}

/// How a profile's volumes were obtained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum VolumeMethod {
    ClosedForm,
    Jacobi {
        quadrature: QuadratureRule,
        rays: RayOptions,
    },
}

impl VolumeMethod {
    pub fn jacobi(quadrature: QuadratureRule) -> Self {
        VolumeMethod::Jacobi {
            quadrature,
            rays: RayOptions::default(),
        }
    }

    pub fn label(&self) -> String {
        match self {
            VolumeMethod::ClosedForm => "closed-form".to_string(),
            VolumeMethod::Jacobi { quadrature, .. } => {
                format!("{}:{}", quadrature.name(), quadrature.node_count())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VolumeProfile {
    pub model: GeometryModel,
    pub state: MetricState,
    pub r_grid: Vec<f64>,
    pub vol_ball: Vec<f64>,
    pub area_sphere: Vec<f64>,
    /// `None` when no ray met a conjugate point within the grid.
    pub min_conjugate_radius: Option<f64>,
    pub method: VolumeMethod,
}

impl VolumeProfile {
    /// Entries beyond the first conjugate radius are upper bounds.
    pub fn is_upper_bound(&self, index: usize) -> bool {
        self.min_conjugate_radius
            .is_some_and(|rc| self.r_grid[index] > rc)
    }

    /// Index of `r` in the grid, matching to a relative 1e-9.
    pub fn index_of(&self, r: f64) -> Option<usize> {
        let tol = 1e-9 * r.abs().max(1e-300);
        let i = self.r_grid.partition_point(|x| *x < r - tol);
        (i < self.r_grid.len() && (self.r_grid[i] - r).abs() <= tol).then_some(i)
    }

    pub fn volume_at(&self, r: f64) -> Result<f64> {
        self.index_of(r)
            .map(|i| self.vol_ball[i])
            .ok_or(Error::OutsideGrid { r })
    }

    pub fn area_at(&self, r: f64) -> Result<f64> {
        self.index_of(r)
            .map(|i| self.area_sphere[i])
            .ok_or(Error::OutsideGrid { r })
    }
}

/// Per-ray curvature data in the orthonormal frame.
#[derive(Debug, Clone, Copy)]
struct RayFrame {
    gamma: [[[f64; 3]; 3]; 3],
    sectional: [f64; 3],
    length_scale: f64,
}

impl RayFrame {
    fn new(model: &GeometryModel, state: &MetricState) -> Result<Self> {
        let sectional = frame_sectional(model, state)?;
        match model.backend() {
            Backend::StructureConstants { lambda } => Ok(Self {
                gamma: levi_civita(orthonormal_structure_constants(lambda, state.coeffs())),
                sectional,
                length_scale: state.length_scale(),
            }),
            // Constant curvature: the frame need not turn, only M = (κ/c) I matters.
            Backend::SpaceForm { .. } => Ok(Self {
                gamma: [[[0.0; 3]; 3]; 3],
                sectional,
                length_scale: isotropic_scale(state)?.sqrt(),
            }),
        }
    }
}

// State layout: v[0..3], E1[3..6], E2[6..9], Y[9..13] row-major, Y'[13..17].
const N: usize = 17;

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn vec3(y: &[f64; N], at: usize) -> [f64; 3] {
    [y[at], y[at + 1], y[at + 2]]
}

fn derivative(frame: &RayFrame, y: &[f64; N]) -> [f64; N] {
    let v = vec3(y, 0);
    let mut dy = [0.0; N];
    // transport of v, E1, E2: x_k' = −Σ_ij v_i x_j Γ_ijk
    for (slot, at) in [0usize, 3, 6].into_iter().enumerate() {
        let x = vec3(y, at);
        for k in 0..3 {
            let mut s = 0.0;
            for i in 0..3 {
                for j in 0..3 {
                    s += v[i] * x[j] * frame.gamma[i][j][k];
                }
            }
            dy[at + k] = -s;
        }
        let _ = slot;
    }
    let ev = [cross(vec3(y, 3), v), cross(vec3(y, 6), v)];
    let mut m = [[0.0; 2]; 2];
    for a in 0..2 {
        for b in 0..2 {
            m[a][b] = (0..3)
                .map(|k| frame.sectional[k] * ev[a][k] * ev[b][k])
                .sum();
        }
    }
    for r in 0..2 {
        for c in 0..2 {
            dy[9 + 2 * r + c] = y[13 + 2 * r + c];
            dy[13 + 2 * r + c] = -(m[r][0] * y[9 + c] + m[r][1] * y[11 + c]);
        }
    }
    dy
}

fn rk4(frame: &RayFrame, y: &[f64; N], h: f64) -> [f64; N] {
    let add = |base: &[f64; N], k: &[f64; N], s: f64| {
        let mut out = *base;
        for i in 0..N {
            out[i] += s * k[i];
        }
        out
    };
    let k1 = derivative(frame, y);
    let k2 = derivative(frame, &add(y, &k1, 0.5 * h));
    let k3 = derivative(frame, &add(y, &k2, 0.5 * h));
    let k4 = derivative(frame, &add(y, &k3, h));
    let mut out = *y;
    for i in 0..N {
        out[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    out
}

/// `(det Y, d/dρ det Y)`.
fn jacobian(y: &[f64; N]) -> (f64, f64) {
    let (a, b, c, d) = (y[9], y[10], y[11], y[12]);
    let (ap, bp, cp, dp) = (y[13], y[14], y[15], y[16]);
    (a * d - b * c, ap * d + a * dp - bp * c - b * cp)
}

/// Cubic Hermite segment of `j` on `[0, h]` in the unit variable `s = ρ/h`.
#[derive(Clone, Copy)]
struct Segment {
    h: f64,
    j0: f64,
    d0: f64,
    j1: f64,
    d1: f64,
}

impl Segment {
    fn value(&self, s: f64) -> f64 {
        let h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
        let h10 = s * (1.0 - s) * (1.0 - s);
        let h01 = s * s * (3.0 - 2.0 * s);
        let h11 = s * s * (s - 1.0);
        h00 * self.j0 + h10 * self.h * self.d0 + h01 * self.j1 + h11 * self.h * self.d1
    }

    fn slope(&self, s: f64) -> f64 {
        let g00 = 6.0 * s * s - 6.0 * s;
        let g10 = 3.0 * s * s - 4.0 * s + 1.0;
        let g01 = -6.0 * s * s + 6.0 * s;
        let g11 = 3.0 * s * s - 2.0 * s;
        (g00 * self.j0 + g01 * self.j1) / self.h + g10 * self.d0 + g11 * self.d1
    }

    /// `∫₀^{sh} j dρ`.
    fn integral(&self, s: f64) -> f64 {
        let s2 = s * s;
        let s3 = s2 * s;
        let s4 = s3 * s;
        let i00 = 0.5 * s4 - s3 + s;
        let i10 = 0.25 * s4 - 2.0 * s3 / 3.0 + 0.5 * s2;
        let i01 = -0.5 * s4 + s3;
        let i11 = 0.25 * s4 - s3 / 3.0;
        self.h * (i00 * self.j0 + i10 * self.h * self.d0 + i01 * self.j1 + i11 * self.h * self.d1)
    }

    /// Where `j` first reaches zero on this segment, as a fraction of the step.
    fn conjugate_point(&self, j_peak: f64) -> Option<f64> {
        const TOUCH: f64 = 1e-6;
        if self.j1 <= 0.0 {
            // sign change (or exact zero at the right end): bisect
            let (mut lo, mut hi) = (0.0, 1.0);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if self.value(mid) > 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
                if hi - lo < 1e-15 {
                    break;
                }
            }
            return Some(hi);
        }
        if self.d0 < 0.0 && self.d1 >= 0.0 {
            // even-multiplicity touch: j dips to zero without changing sign
            let (mut lo, mut hi) = (0.0, 1.0);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if self.slope(mid) < 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
                if hi - lo < 1e-15 {
                    break;
                }
            }
            let s = 0.5 * (lo + hi);
            if self.value(s) <= TOUCH * j_peak {
                return Some(s);
            }
        }
        None
    }
}

struct RayTrace {
    /// `j` at each checkpoint.
    jacobian: Vec<f64>,
    /// `∫₀^r j` at each checkpoint.
    volume: Vec<f64>,
    conjugate_radius: Option<f64>,
    /// `(ρ, j)` at every step, when requested.
    steps: Vec<(f64, f64)>,
}

fn orthonormal_complement(v: [f64; 3]) -> ([f64; 3], [f64; 3]) {
    // start from the axis least aligned with v
    let axis = (0..3)
        .min_by(|&a, &b| v[a].abs().total_cmp(&v[b].abs()))
        .unwrap_or(0);
    let mut u = [0.0; 3];
    u[axis] = 1.0;
    let dot = v[axis];
    let mut e1 = [u[0] - dot * v[0], u[1] - dot * v[1], u[2] - dot * v[2]];
    let n = (e1[0] * e1[0] + e1[1] * e1[1] + e1[2] * e1[2]).sqrt();
    e1 = e1.map(|x| x / n);
    let e2 = cross(v, e1);
    (e1, e2)
}

fn trace_ray(
    frame: &RayFrame,
    direction: [f64; 3],
    checkpoints: &[f64],
    step: f64,
    record_steps: bool,
) -> RayTrace {
    let (e1, e2) = orthonormal_complement(direction);
    let mut y = [0.0; N];
    y[0..3].copy_from_slice(&direction);
    y[3..6].copy_from_slice(&e1);
    y[6..9].copy_from_slice(&e2);
    y[13] = 1.0;
    y[16] = 1.0;

    let h_max = step * frame.length_scale;
    let mut out = RayTrace {
        jacobian: Vec::with_capacity(checkpoints.len()),
        volume: Vec::with_capacity(checkpoints.len()),
        conjugate_radius: None,
        steps: Vec::new(),
    };
    if record_steps {
        out.steps.push((0.0, 0.0));
    }
    let mut rho = 0.0;
    let mut vol = 0.0;
    let (mut j, mut dj) = jacobian(&y);
    let mut j_peak: f64 = 0.0;

    'checkpoints: for &target in checkpoints {
        if out.conjugate_radius.is_some() {
            out.jacobian.push(0.0);
            out.volume.push(vol);
            continue;
        }
        let span = target - rho;
        let n = (span / h_max).ceil().max(1.0) as usize;
        let h = span / n as f64;
        for k in 0..n {
            let y_next = rk4(frame, &y, h);
            let (j_next, dj_next) = jacobian(&y_next);
            let seg = Segment {
                h,
                j0: j,
                d0: dj,
                j1: j_next,
                d1: dj_next,
            };
            if let Some(s) = seg.conjugate_point(j_peak) {
                let rc = rho + s * h;
                vol += seg.integral(s);
                out.conjugate_radius = Some(rc);
                if record_steps {
                    out.steps.push((rc, 0.0));
                }
                rho = rc;
                out.jacobian.push(0.0);
                out.volume.push(vol);
                continue 'checkpoints;
            }
            vol += seg.integral(1.0);
            y = y_next;
            j = j_next;
            dj = dj_next;
            j_peak = j_peak.max(j);
            rho = if k + 1 == n { target } else { rho + h };
            if record_steps {
                out.steps.push((rho, j));
            }
        }
        out.jacobian.push(j);
        out.volume.push(vol);
    }
    out
}

fn validate_direction(direction: [f64; 3]) -> Result<()> {
    let norm = (direction.iter().map(|x| x * x).sum::<f64>()).sqrt();
    if (norm - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidArgument(format!(
            "ray direction must be g-unit, got norm {norm}"
        )));
    }
    Ok(())
}

/// Radial Jacobian samples along one geodesic from the identity.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JacobiRay {
    pub radii: Vec<f64>,
    /// `j(ρ) = det Y(ρ)`, zero past the conjugate radius.
    pub jacobian: Vec<f64>,
    pub conjugate_radius: Option<f64>,
}

/// Integrates the geodesic in `direction` (components in the g-orthonormal
/// frame) and its Jacobi fields up to `r_max`.
pub fn geodesic_jacobi_ray(
    model: &GeometryModel,
    state: &MetricState,
    direction: [f64; 3],
    r_max: f64,
    opts: &RayOptions,
) -> Result<JacobiRay> {
    validate_direction(direction)?;
    if !(r_max > 0.0 && r_max.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "ray length must be positive, got {r_max}"
        )));
    }
    if !(opts.step > 0.0) {
        return Err(Error::InvalidArgument("ray step must be positive".into()));
    }
    let frame = RayFrame::new(model, state)?;
    let trace = trace_ray(&frame, direction, &[r_max], opts.step, true);
    let (radii, jacobian) = trace.steps.into_iter().unzip();
    Ok(JacobiRay {
        radii,
        jacobian,
        conjugate_radius: trace.conjugate_radius,
    })
}

fn validate_grid(r_grid: &[f64]) -> Result<()> {
    if r_grid.is_empty() {
        return Err(Error::InvalidArgument("radius grid is empty".into()));
    }
    if r_grid[0] <= 0.0 || r_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument(
            "radius grid must be positive and strictly increasing".into(),
        ));
    }
    if r_grid.iter().any(|r| !r.is_finite()) {
        return Err(Error::InvalidArgument("radius grid must be finite".into()));
    }
    Ok(())
}

/// Volume and area of geodesic balls about the identity on `r_grid`.
///
/// Rays are traced in parallel; the direction sum runs in node order, so the
/// result does not depend on the number of threads.
pub fn ball_volume_profile(
    model: &GeometryModel,
    state: &MetricState,
    r_grid: &[f64],
    method: VolumeMethod,
) -> Result<VolumeProfile> {
    validate_grid(r_grid)?;
    let (quadrature, rays) = match method {
        VolumeMethod::ClosedForm => return closed_form_profile(model, state, r_grid),
        VolumeMethod::Jacobi { quadrature, rays } => (quadrature, rays),
    };
    if !(rays.step > 0.0) {
        return Err(Error::InvalidArgument("ray step must be positive".into()));
    }
    let frame = RayFrame::new(model, state)?;
    let nodes = quadrature.nodes();
    let traces: Vec<RayTrace> = nodes
        .directions
        .par_iter()
        .map(|d| trace_ray(&frame, *d, r_grid, rays.step, false))
        .collect();

    let mut vol_ball = vec![0.0; r_grid.len()];
    let mut area_sphere = vec![0.0; r_grid.len()];
    let mut min_conjugate_radius: Option<f64> = None;
    for (trace, w) in traces.iter().zip(&nodes.weights) {
        for i in 0..r_grid.len() {
            vol_ball[i] += w * trace.volume[i];
            area_sphere[i] += w * trace.jacobian[i];
        }
        if let Some(rc) = trace.conjugate_radius {
            min_conjugate_radius = Some(min_conjugate_radius.map_or(rc, |m| m.min(rc)));
        }
    }
    if let Some(rc) = min_conjugate_radius {
        if r_grid[r_grid.len() - 1] > rc {
            log_warning(&format!(
                "{}: radii beyond the first conjugate radius {rc:.6} are upper bounds",
                model.name()
            ));
        }
    }
    Ok(VolumeProfile {
        model: model.clone(),
        state: *state,
        r_grid: r_grid.to_vec(),
        vol_ball,
        area_sphere,
        min_conjugate_radius,
        method,
    })
}

fn log_warning(msg: &str) {
    if std::env::var_os("RICCI_ENTROPY_QUIET").is_none() {
        eprintln!("warning: {msg}");
    }
}

/// `sinh x − x` without cancellation for small `x`.
fn sinh_minus_x(x: f64) -> f64 {
    if x.abs() < 0.02 {
        let x2 = x * x;
        x * x2 / 6.0 * (1.0 + x2 / 20.0 * (1.0 + x2 / 42.0 * (1.0 + x2 / 72.0)))
    } else {
        x.sinh() - x
    }
}

/// `x − sin x` without cancellation for small `x`.
fn x_minus_sin(x: f64) -> f64 {
    if x.abs() < 0.02 {
        let x2 = x * x;
        x * x2 / 6.0 * (1.0 - x2 / 20.0 * (1.0 - x2 / 42.0 * (1.0 - x2 / 72.0)))
    } else {
        x - x.sin()
    }
}

/// Volume and area of the radius-`r` ball in the space form of curvature
/// `κ ∈ {−1, 0, 1}` with metric `c · g_κ`.
pub fn closed_form_volume(kappa: f64, c: f64, r: f64) -> Result<(f64, f64)> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::InvalidMetric(format!(
            "scale must be positive, got {c}"
        )));
    }
    if !(r >= 0.0 && r.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "radius must be nonnegative, got {r}"
        )));
    }
    let rho = r / c.sqrt();
    let vol_scale = c * c.sqrt();
    let (v, a) = if kappa == 0.0 {
        (4.0 * PI / 3.0 * rho.powi(3), 4.0 * PI * rho * rho)
    } else if kappa == -1.0 {
        (PI * sinh_minus_x(2.0 * rho), 4.0 * PI * rho.sinh().powi(2))
    } else if kappa == 1.0 {
        let diameter = PI * c.sqrt();
        if r > diameter * (1.0 + 1e-12) {
            return Err(Error::RadiusBeyondDiameter { r, diameter });
        }
        let rho = rho.min(PI);
        (PI * x_minus_sin(2.0 * rho), 4.0 * PI * rho.sin().powi(2))
    } else {
        return Err(Error::InvalidArgument(format!(
            "closed-form volumes need kappa in {{-1, 0, 1}}, got {kappa}"
        )));
    };
    Ok((vol_scale * v, c * a))
}

/// Closed-form profile of a space-form state. Round-sphere radii past the
/// diameter see the whole sphere: volume `2π²c^{3/2}`, area zero.
pub fn closed_form_profile(
    model: &GeometryModel,
    state: &MetricState,
    r_grid: &[f64],
) -> Result<VolumeProfile> {
    validate_grid(r_grid)?;
    let kappa = model.kappa().ok_or_else(|| {
        Error::InvalidArgument(format!(
            "closed-form volumes need a space form, got {}",
            model.name()
        ))
    })?;
    let c = isotropic_scale(state)?;
    let diameter = (kappa > 0.0).then(|| PI * c.sqrt());
    let mut vol_ball = Vec::with_capacity(r_grid.len());
    let mut area_sphere = Vec::with_capacity(r_grid.len());
    for &r in r_grid {
        let r_eff = diameter.map_or(r, |d| r.min(d));
        let (v, a) = closed_form_volume(kappa, c, r_eff)?;
        vol_ball.push(v);
        area_sphere.push(if r_eff < r { 0.0 } else { a });
    }
    Ok(VolumeProfile {
        model: model.clone(),
        state: *state,
        r_grid: r_grid.to_vec(),
        vol_ball,
        area_sphere,
        min_conjugate_radius: diameter,
        method: VolumeMethod::ClosedForm,
    })
}

/// `∫_{S(r)} H dσ`, the first variation of area, by a three-point difference
/// of the sphere areas around the grid point `r`.
pub fn mean_curvature_integral(profile: &VolumeProfile, r: f64) -> Result<f64> {
    let i = profile.index_of(r).ok_or(Error::OutsideGrid { r })?;
    if i == 0 || i + 1 >= profile.r_grid.len() {
        return Err(Error::OutsideGrid { r });
    }
    if i >= 2 && i + 2 < profile.r_grid.len() {
        if let Some(h) = uniform_step(&profile.r_grid[i - 2..=i + 2]) {
            return Ok(five_point_derivative(
                &profile.area_sphere[i - 2..=i + 2],
                h,
            ));
        }
    }
    Ok(three_point_derivative(
        &profile.r_grid[i - 1..=i + 1],
        &profile.area_sphere[i - 1..=i + 1],
    ))
}

/// The common spacing of `x` if it is uniform to 1e-6 relative.
pub(crate) fn uniform_step(x: &[f64]) -> Option<f64> {
    let h = (x[x.len() - 1] - x[0]) / (x.len() - 1) as f64;
    x.windows(2)
        .all(|w| ((w[1] - w[0]) - h).abs() <= 1e-6 * h)
        .then_some(h)
}

/// Fourth-order centered first derivative on five equally spaced values.
pub(crate) fn five_point_derivative(y: &[f64], h: f64) -> f64 {
    (y[0] - 8.0 * y[1] + 8.0 * y[3] - y[4]) / (12.0 * h)
}

/// Fourth-order centered second derivative on five equally spaced values.
pub(crate) fn five_point_second_derivative(y: &[f64], h: f64) -> f64 {
    (-y[0] + 16.0 * y[1] - 30.0 * y[2] + 16.0 * y[3] - y[4]) / (12.0 * h * h)
}

/// Derivative at the middle of three (possibly unevenly spaced) points.
pub(crate) fn three_point_derivative(x: &[f64], y: &[f64]) -> f64 {
    let h1 = x[1] - x[0];
    let h2 = x[2] - x[1];
    (h1 * h1 * (y[2] - y[1]) + h2 * h2 * (y[1] - y[0])) / (h1 * h2 * (h1 + h2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{catalog, catalog_lookup, scale_metric};
    use crate::oracle::koszul_riemann;
    use proptest::prelude::*;

    fn unit() -> MetricState {
        MetricState::new([1.0; 3], 0.0).unwrap()
    }

    fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
        (0..n)
            .map(|i| a + (b - a) * i as f64 / (n - 1) as f64)
            .collect()
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    #[test]
    fn jacobi_operator_matches_koszul_tensor() {
        // <R(X,v)v, Z> via the cross-product form against the full tensor.
        let lambda = [1.3, -0.7, 0.4];
        let coeffs = [0.8, 1.9, 0.6];
        let model = GeometryModel::lie_group("t", lambda).unwrap();
        let state = MetricState::new(coeffs, 0.0).unwrap();
        let k = frame_sectional(&model, &state).unwrap();
        let riem = koszul_riemann(lambda, coeffs);
        let x = [0.3, -1.0, 0.5];
        let v = [0.2, 0.4, -0.9];
        let z = [-0.6, 0.1, 0.7];
        let via_cross: f64 = {
            let a = cross(x, v);
            let b = cross(z, v);
            (0..3).map(|i| k[i] * a[i] * b[i]).sum()
        };
        let mut via_tensor = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                for l in 0..3 {
                    for m in 0..3 {
                        via_tensor += x[i] * v[j] * v[l] * z[m] * riem[i][j][l][m];
                    }
                }
            }
        }
        assert!(
            (via_cross - via_tensor).abs() < 1e-12,
            "{via_cross} {via_tensor}"
        );
    }

    #[test]
    fn euclidean_ray_is_rho_squared() {
        let e = catalog_lookup("euclidean").unwrap();
        let ray =
            geodesic_jacobi_ray(&e, &unit(), [0.0, 0.6, 0.8], 3.0, &RayOptions::default()).unwrap();
        assert!(ray.conjugate_radius.is_none());
        for (r, j) in ray.radii.iter().zip(&ray.jacobian) {
            assert!((j - r * r).abs() <= 1e-12 * r * r.max(1.0));
        }
    }

    #[test]
    fn hyperbolic_ray_is_sinh_squared() {
        let h = catalog_lookup("hyperbolic").unwrap();
        let ray =
            geodesic_jacobi_ray(&h, &unit(), [1.0, 0.0, 0.0], 5.0, &RayOptions::default()).unwrap();
        for (r, j) in ray.radii.iter().zip(&ray.jacobian).skip(1) {
            assert!(rel(*j, r.sinh().powi(2)) < 1e-8, "r={r}");
        }
    }

    #[test]
    fn round_sphere_conjugate_radius_is_pi() {
        let s = catalog_lookup("round-sphere").unwrap();
        let ray =
            geodesic_jacobi_ray(&s, &unit(), [0.0, 0.0, 1.0], 4.0, &RayOptions::default()).unwrap();
        let rc = ray.conjugate_radius.unwrap();
        assert!((rc - PI).abs() < 1e-6, "{rc}");
        for (r, j) in ray.radii.iter().zip(&ray.jacobian) {
            if *r < rc {
                assert!((j - r.sin().powi(2)).abs() < 1e-8);
            } else {
                assert_eq!(*j, 0.0);
            }
        }
        // same sphere as the Lie group su2 with unit coefficients
        let su2 = catalog_lookup("su2").unwrap();
        let d = [0.48, 0.6, 0.64];
        let ray = geodesic_jacobi_ray(&su2, &unit(), d, 4.0, &RayOptions::default()).unwrap();
        assert!((ray.conjugate_radius.unwrap() - PI).abs() < 1e-6);
    }

    #[test]
    fn rejects_non_unit_direction() {
        let e = catalog_lookup("euclidean").unwrap();
        assert!(
            geodesic_jacobi_ray(&e, &unit(), [1.0, 1.0, 0.0], 1.0, &RayOptions::default()).is_err()
        );
    }

    #[test]
    fn closed_form_examples() {
        let (v, a) = closed_form_volume(0.0, 1.0, 1.0).unwrap();
        assert!(rel(v, 4.0 * PI / 3.0) < 1e-15 && rel(a, 4.0 * PI) < 1e-15);
        let (v, a) = closed_form_volume(-1.0, 1.0, 2.0).unwrap();
        assert!(rel(v, PI * (4f64.sinh() - 4.0)) < 1e-14);
        assert!(rel(a, 4.0 * PI * 2f64.sinh().powi(2)) < 1e-14);
        let (v, a) = closed_form_volume(1.0, 1.0, PI).unwrap();
        assert!(rel(v, 2.0 * PI * PI) < 1e-15 && a.abs() < 1e-14);
        assert!(matches!(
            closed_form_volume(1.0, 1.0, 3.5),
            Err(Error::RadiusBeyondDiameter { .. })
        ));
        assert!(closed_form_volume(0.5, 1.0, 1.0).is_err());
    }

    #[test]
    fn closed_form_area_is_volume_derivative() {
        for kappa in [-1.0, 0.0, 1.0] {
            for r in [0.003, 0.4, 1.7, 2.9] {
                let h = 1e-4 * r;
                let vp = closed_form_volume(kappa, 1.3, r + h).unwrap().0;
                let vm = closed_form_volume(kappa, 1.3, r - h).unwrap().0;
                let a = closed_form_volume(kappa, 1.3, r).unwrap().1;
                assert!(rel((vp - vm) / (2.0 * h), a) < 1e-6, "kappa={kappa} r={r}");
            }
        }
    }

    proptest! {
        #[test]
        fn closed_form_scale_equivariance(c in 0.1f64..10.0, r in 0.01f64..3.0, k in 0usize..3) {
            let kappa = [-1.0, 0.0, 1.0][k];
            let base = closed_form_volume(kappa, 1.0, r).unwrap();
            let scaled = closed_form_volume(kappa, c, r * c.sqrt()).unwrap();
            prop_assert!(rel(scaled.0, c.powf(1.5) * base.0) < 1e-12);
        }
    }

    #[test]
    fn euclidean_engine_volume() {
        let e = catalog_lookup("euclidean").unwrap();
        let grid = [0.5, 1.0, 2.0];
        let p = ball_volume_profile(
            &e,
            &unit(),
            &grid,
            VolumeMethod::jacobi(QuadratureRule::default()),
        )
        .unwrap();
        assert!(rel(p.volume_at(2.0).unwrap(), 32.0 * PI / 3.0) < 1e-8);
        assert!(p.min_conjugate_radius.is_none());
    }

    #[test]
    fn hyperbolic_engine_matches_closed_form() {
        let h = catalog_lookup("hyperbolic").unwrap();
        let grid = linspace(0.25, 3.0, 12);
        let p = ball_volume_profile(
            &h,
            &unit(),
            &grid,
            VolumeMethod::jacobi(QuadratureRule::Lebedev26),
        )
        .unwrap();
        for (r, v) in grid.iter().zip(&p.vol_ball) {
            assert!(rel(*v, PI * ((2.0 * r).sinh() - 2.0 * r)) < 1e-6, "r={r}");
        }
    }

    #[test]
    fn round_sphere_engine_saturates() {
        let s = catalog_lookup("round-sphere").unwrap();
        let grid = [1.0, 2.0, 3.0, 3.5, 5.0];
        let p = ball_volume_profile(
            &s,
            &unit(),
            &grid,
            VolumeMethod::jacobi(QuadratureRule::Lebedev26),
        )
        .unwrap();
        for &r in &grid[..3] {
            let (v, _) = closed_form_volume(1.0, 1.0, r).unwrap();
            assert!(rel(p.volume_at(r).unwrap(), v) < 1e-8);
        }
        assert!(rel(p.volume_at(5.0).unwrap(), 2.0 * PI * PI) < 1e-8);
        assert_eq!(p.area_at(5.0).unwrap(), 0.0);
        assert!(p.is_upper_bound(4) && !p.is_upper_bound(2));
        let cf = closed_form_profile(&s, &unit(), &grid).unwrap();
        assert!(rel(cf.volume_at(5.0).unwrap(), 2.0 * PI * PI) < 1e-15);
    }

    #[test]
    fn small_balls_are_flat() {
        for model in catalog() {
            let p = ball_volume_profile(
                &model,
                &unit(),
                &[0.001, 0.005, 0.01],
                VolumeMethod::jacobi(QuadratureRule::Lebedev26),
            )
            .unwrap();
            for (r, v) in p.r_grid.iter().zip(&p.vol_ball) {
                assert!(
                    rel(*v, 4.0 * PI / 3.0 * r.powi(3)) < 0.01,
                    "{}",
                    model.name()
                );
            }
        }
    }

    #[test]
    fn nil_small_ball_ratio_tends_to_one() {
        let nil = catalog_lookup("nil").unwrap();
        let grid = [0.01, 0.1, 0.5];
        let p = ball_volume_profile(
            &nil,
            &unit(),
            &grid,
            VolumeMethod::jacobi(QuadratureRule::default()),
        )
        .unwrap();
        let ratios: Vec<f64> = grid
            .iter()
            .zip(&p.vol_ball)
            .map(|(r, v)| v / (4.0 * PI / 3.0 * r.powi(3)))
            .collect();
        assert!((ratios[0] - 1.0).abs() < 1e-4);
        assert!((ratios[0] - 1.0).abs() < (ratios[2] - 1.0).abs());
    }

    #[test]
    fn profile_invariants_on_catalog() {
        let grid = linspace(0.05, 3.0, 60);
        for model in catalog() {
            let p = ball_volume_profile(
                &model,
                &unit(),
                &grid,
                VolumeMethod::jacobi(QuadratureRule::Lebedev86),
            )
            .unwrap();
            let rc = p.min_conjugate_radius.unwrap_or(f64::INFINITY);
            for i in 1..grid.len() {
                if grid[i] <= rc {
                    assert!(p.vol_ball[i] > p.vol_ball[i - 1], "{}", model.name());
                } else {
                    assert!(p.vol_ball[i] >= p.vol_ball[i - 1], "{}", model.name());
                }
                assert!(p.area_sphere[i] >= 0.0);
            }
            // area is the radial derivative of volume on conjugate-free interior
            // points where the grid resolves the profile
            for i in 1..grid.len() - 1 {
                if grid[i] >= 1.0 && grid[i + 1] < rc {
                    let d =
                        three_point_derivative(&grid[i - 1..=i + 1], &p.vol_ball[i - 1..=i + 1]);
                    // relative to the largest area so far: areas shrink to zero
                    // towards an antipodal point
                    let scale = p.area_sphere[..=i].iter().cloned().fold(0.0, f64::max);
                    assert!(
                        (d - p.area_sphere[i]).abs() < 5e-3 * scale,
                        "{} r={}",
                        model.name(),
                        grid[i]
                    );
                }
            }
        }
    }

    #[test]
    fn pipeline_scale_equivariance() {
        let grid = [0.5, 1.0, 2.0, 2.5];
        for model in catalog() {
            let state = if model.is_space_form() {
                unit()
            } else {
                MetricState::new([0.7, 1.3, 1.1], 0.0).unwrap()
            };
            for c in [0.25, 4.0] {
                let method = VolumeMethod::jacobi(QuadratureRule::Lebedev26);
                let base = ball_volume_profile(&model, &state, &grid, method).unwrap();
                let scaled_grid: Vec<f64> = grid.iter().map(|r| r * f64::sqrt(c)).collect();
                let scaled = ball_volume_profile(
                    &model,
                    &scale_metric(&state, c).unwrap(),
                    &scaled_grid,
                    method,
                )
                .unwrap();
                for i in 0..grid.len() {
                    let expect = c.powf(1.5) * base.vol_ball[i];
                    assert!(
                        rel(scaled.vol_ball[i], expect) < 1e-6,
                        "{} c={c}",
                        model.name()
                    );
                }
            }
        }
    }

    #[test]
    fn quadrature_refinement_is_stable() {
        // conjugate-free geometries at moderate radius
        let grid = [1.0, 2.0];
        for (name, coeffs) in [
            ("hyperbolic", [1.0; 3]),
            ("nil", [1.0, 2.0, 0.5]),
            ("sol", [1.0; 3]),
            ("sl2", [1.0; 3]),
            ("euclidean", [2.0, 1.0, 0.5]),
        ] {
            let model = catalog_lookup(name).unwrap();
            let state = MetricState::new(coeffs, 0.0).unwrap();
            let mut prev: Option<Vec<f64>> = None;
            for rule in [
                QuadratureRule::Lebedev86,
                QuadratureRule::Product230,
                QuadratureRule::Lebedev590,
            ] {
                let p =
                    ball_volume_profile(&model, &state, &grid, VolumeMethod::jacobi(rule)).unwrap();
                if let Some(prev) = &prev {
                    for i in 0..grid.len() {
                        assert!(rel(p.vol_ball[i], prev[i]) < 2e-3, "{name} {}", rule.name());
                    }
                }
                prev = Some(p.vol_ball);
            }
        }
    }

    #[test]
    fn base_point_is_irrelevant() {
        // A left translation maps the identity frame to the frame at the new
        // base point; in frame coordinates both rays are the same computation.
        let sol = catalog_lookup("sol").unwrap();
        let d = [0.6, 0.0, 0.8];
        let a = geodesic_jacobi_ray(&sol, &unit(), d, 2.0, &RayOptions::default()).unwrap();
        let b = geodesic_jacobi_ray(&sol, &unit(), d, 2.0, &RayOptions::default()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn mean_curvature_examples() {
        let flat = GeometryModel::space_form("flat", 0.0).unwrap();
        let grid = [0.999, 1.0, 1.001];
        let p = closed_form_profile(&flat, &unit(), &grid).unwrap();
        assert!(rel(mean_curvature_integral(&p, 1.0).unwrap(), 8.0 * PI) < 5e-3);
        let h = catalog_lookup("hyperbolic").unwrap();
        let p = closed_form_profile(&h, &unit(), &grid).unwrap();
        assert!(
            rel(
                mean_curvature_integral(&p, 1.0).unwrap(),
                4.0 * PI * 2f64.sinh()
            ) < 5e-3
        );
        let s = catalog_lookup("round-sphere").unwrap();
        let grid = [PI / 2.0 - 1e-3, PI / 2.0, PI / 2.0 + 1e-3];
        let p = closed_form_profile(&s, &unit(), &grid).unwrap();
        assert!(mean_curvature_integral(&p, PI / 2.0).unwrap().abs() < 0.05);
        assert!(matches!(
            mean_curvature_integral(&p, grid[0]),
            Err(Error::OutsideGrid { .. })
        ));
    }
}
