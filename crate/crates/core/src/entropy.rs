//! Volume growth function `ω(r) = (1/r) ln Vol B̃(r)`, volume entropy
//! estimates, and audits of how they evolve along a Ricci flow.
//!
//! Radii are geodesic radii of the metric at the time in question, so a time
//! derivative of `ω` at fixed `r` sees both the change of the measure and the
//! change of the ball itself. The latter (the shell term) is measured, not
//! assumed to vanish.
//!
//! Scalar curvature is constant in space on every model here, so the ball
//! average of `R` is `R(t)` exactly and is never integrated numerically.

use rayon::prelude::*;
use serde::Serialize;

use crate::ball::{
    ball_volume_profile, five_point_second_derivative, mean_curvature_integral, uniform_step,
    VolumeMethod, VolumeProfile,
};
use crate::error::{Error, Result};
use crate::fit::least_squares;
use crate::flow::{EinsteinPath, MetricPath, SolitonSpec};
use crate::geometry::{curvature, MetricState};

/// Fewest grid points an entropy window may hold.
pub const MIN_WINDOW_POINTS: usize = 8;

/// Smallest time step accepted for finite differences in `t`.
pub const MIN_DT: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GrowthSample {
    pub t: f64,
    pub r: f64,
    pub omega: f64,
}

pub fn growth_function(profile: &VolumeProfile, r: f64) -> Result<GrowthSample> {
    let vol = profile.volume_at(r)?;
    if !(vol > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "ball volume must be positive at r = {r}, got {vol}"
        )));
    }
    Ok(GrowthSample {
        t: profile.state.time(),
        r,
        omega: vol.ln() / r,
    })
}

/// Entropy of one profile over a radius window.
///
/// `ln Vol B(r)` is regressed on `1, r, ln r, 1/r`; the coefficient of `r` is
/// the exponential growth rate. The logarithmic and inverse terms absorb the
/// polynomial prefactor and its leading correction, which a bare slope would
/// misread as growth (a bare slope of `(4π/3)r³` over `[5, 8]` is about 0.5).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EntropyEstimate {
    pub h: f64,
    pub stderr: f64,
    pub window: (f64, f64),
    pub points: usize,
    /// Fitted power of `r` in the volume prefactor.
    pub degree: f64,
}

pub const ENTROPY_METHOD: &str = "log-volume regression on 1, r, ln r, 1/r";

fn validate_window(window: (f64, f64)) -> Result<()> {
    let (lo, hi) = window;
    if !(lo > 0.0 && hi > lo && hi.is_finite()) {
        return Err(Error::DegenerateWindow(format!(
            "window must satisfy 0 < r_min < r_max, got [{lo}, {hi}]"
        )));
    }
    Ok(())
}

/// `count` evenly spaced radii spanning `window`.
pub fn window_grid(window: (f64, f64), count: usize) -> Result<Vec<f64>> {
    validate_window(window)?;
    if count < MIN_WINDOW_POINTS {
        return Err(Error::DegenerateWindow(format!(
            "entropy windows need at least {MIN_WINDOW_POINTS} points, got {count}"
        )));
    }
    let (lo, hi) = window;
    Ok((0..count)
        .map(|i| {
            if i + 1 == count {
                hi
            } else {
                lo + (hi - lo) * i as f64 / (count - 1) as f64
            }
        })
        .collect())
}

pub fn entropy_estimate(profile: &VolumeProfile, window: (f64, f64)) -> Result<EntropyEstimate> {
    validate_window(window)?;
    let (lo, hi) = window;
    let grid = &profile.r_grid;
    let slack = 1e-9 * hi;
    if lo < grid[0] - slack || hi > grid[grid.len() - 1] + slack {
        return Err(Error::DegenerateWindow(format!(
            "window [{lo}, {hi}] leaves the profile grid [{}, {}]",
            grid[0],
            grid[grid.len() - 1]
        )));
    }
    let (rows, y): (Vec<Vec<f64>>, Vec<f64>) = grid
        .iter()
        .zip(&profile.vol_ball)
        .filter(|(r, _)| **r >= lo - slack && **r <= hi + slack)
        .map(|(&r, &v)| (vec![1.0, r, r.ln(), 1.0 / r], v.ln()))
        .unzip();
    if rows.len() < MIN_WINDOW_POINTS {
        return Err(Error::DegenerateWindow(format!(
            "window [{lo}, {hi}] holds {} grid points, need {MIN_WINDOW_POINTS}",
            rows.len()
        )));
    }
    let fit = least_squares(&rows, &y)?;
    Ok(EntropyEstimate {
        h: fit.coeffs[1],
        stderr: fit.stderr[1],
        window,
        points: rows.len(),
        degree: fit.coeffs[2],
    })
}

/// The profile of `path` at time `t`.
pub fn profile_at(
    path: &dyn MetricPath,
    t: f64,
    r_grid: &[f64],
    method: VolumeMethod,
) -> Result<VolumeProfile> {
    let state = path.state_at(t)?;
    ball_volume_profile(path.model(), &state, r_grid, method)
}

fn omega_at(path: &dyn MetricPath, t: f64, r: f64, method: VolumeMethod) -> Result<f64> {
    Ok(growth_function(&profile_at(path, t, &[r], method)?, r)?.omega)
}

fn check_dt(dt: f64) -> Result<()> {
    if !(dt >= MIN_DT && dt.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "time step {dt} is below the finite-difference floor {MIN_DT}"
        )));
    }
    Ok(())
}

/// `∂ω/∂t` at fixed geodesic radius, split into the curvature term
/// `−R(t)/r` and the remainder (the shell term).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EvolutionAudit {
    pub t: f64,
    pub r: f64,
    pub omega: f64,
    pub domega_dt_measured: f64,
    pub rhs_eq2: f64,
    pub shell_term: f64,
}

/// Default time step for differences at time `t`.
pub fn default_dt(t: f64) -> f64 {
    1e-4 * t.abs().max(1.0)
}

pub fn evolution_audit(
    path: &dyn MetricPath,
    method: VolumeMethod,
    r: f64,
    t: f64,
    dt: f64,
) -> Result<EvolutionAudit> {
    check_dt(dt)?;
    let omega = omega_at(path, t, r, method)?;
    // Second order either way; one-sided where the path has no past.
    let domega_dt_measured = if t - dt >= path.t_start() {
        let lo = omega_at(path, t - dt, r, method)?;
        let hi = omega_at(path, t + dt, r, method)?;
        (hi - lo) / (2.0 * dt)
    } else {
        let h1 = omega_at(path, t + dt, r, method)?;
        let h2 = omega_at(path, t + 2.0 * dt, r, method)?;
        (-3.0 * omega + 4.0 * h1 - h2) / (2.0 * dt)
    };
    let scalar = curvature(path.model(), &path.state_at(t)?)?.scalar;
    let rhs_eq2 = -scalar / r;
    Ok(EvolutionAudit {
        t,
        r,
        omega,
        domega_dt_measured,
        rhs_eq2,
        shell_term: domega_dt_measured - rhs_eq2,
    })
}

/// Second radial derivative of `ω` against two closed expressions.
///
/// With `V = Vol B(r)`, `A = Area S(r)` and `A' = ∫_S H dσ`, calculus gives
/// `ω'' = 2ω/r² − 2A/(r²V) + A'/(rV) − A²/(rV²)` (the corrected form). The
/// printed form `2ω/r² − 1/(r²V) − A²/(rV²) + A'/(rV)` is evaluated as
/// written for comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RadialIdentity {
    pub r: f64,
    pub dr: f64,
    pub lhs: f64,
    pub corrected_rhs: f64,
    pub corrected_residual: f64,
    pub printed_rhs: f64,
    pub printed_residual: f64,
}

/// Radii a profile needs for [`radial_identity_check`] at `r`: a five-point
/// stencil, so both radial derivatives are fourth order in `dr`.
pub fn radial_stencil(r: f64, dr: f64) -> [f64; 5] {
    [r - 2.0 * dr, r - dr, r, r + dr, r + 2.0 * dr]
}

pub fn radial_identity_check(profile: &VolumeProfile, r: f64, dr: f64) -> Result<RadialIdentity> {
    if !(dr > 0.0 && r - 2.0 * dr > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "radius {r} needs a margin of 2·dr = {} from the origin",
            2.0 * dr
        )));
    }
    let idx = radial_stencil(r, dr)
        .into_iter()
        .map(|x| profile.index_of(x).ok_or(Error::OutsideGrid { r: x }))
        .collect::<Result<Vec<_>>>()?;
    let i = idx[2];
    let step = uniform_step(&profile.r_grid[idx[0]..=idx[4]]);
    let (Some(h), true) = (step, idx.windows(2).all(|w| w[0] + 1 == w[1])) else {
        return Err(Error::InvalidArgument(format!(
            "profile grid does not hold the stencil of step {dr} around r = {r}"
        )));
    };
    let omegas: Vec<f64> = idx
        .iter()
        .map(|&k| profile.vol_ball[k].ln() / profile.r_grid[k])
        .collect();
    let lhs = five_point_second_derivative(&omegas, h);
    let r = profile.r_grid[i];
    let v = profile.vol_ball[i];
    let a = profile.area_sphere[i];
    let h_int = mean_curvature_integral(profile, r)?;
    let w = omegas[2];
    let corrected_rhs =
        2.0 * w / (r * r) - 2.0 * a / (r * r * v) + h_int / (r * v) - a * a / (r * v * v);
    let printed_rhs = 2.0 * w / (r * r) - 1.0 / (r * r * v) - a * a / (r * v * v) + h_int / (r * v);
    Ok(RadialIdentity {
        r,
        dr,
        lhs,
        corrected_rhs,
        corrected_residual: (lhs - corrected_rhs).abs(),
        printed_rhs,
        printed_residual: (lhs - printed_rhs).abs(),
    })
}

/// `∫_B R dμ − ∫_S H dσ = R·Vol B(r) − ∫_S H dσ`.
pub fn hypothesis_sign(profile: &VolumeProfile, r: f64) -> Result<f64> {
    let scalar = curvature(&profile.model, &profile.state)?.scalar;
    Ok(scalar * profile.volume_at(r)? - mean_curvature_integral(profile, r)?)
}

/// One `(t, r)` cell of the supersolution comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SupersolutionCell {
    pub t: f64,
    pub r: f64,
    pub omega: f64,
    /// `ω(t₀, r)·exp(−2(t − t₀)/r²)` with `t₀` the first time of the grid.
    pub bound: f64,
    pub hypothesis_sign: f64,
    pub holds: bool,
}

fn stencil_grid(radii: &[f64], dr: f64) -> Result<Vec<f64>> {
    let mut grid: Vec<f64> = radii.iter().flat_map(|&r| radial_stencil(r, dr)).collect();
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    if grid[0] <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "radius stencil reaches the origin (dr = {dr})"
        )));
    }
    Ok(grid)
}

pub fn supersolution_compare(
    path: &dyn MetricPath,
    method: VolumeMethod,
    radii: &[f64],
    t_grid: &[f64],
    dr: f64,
) -> Result<Vec<SupersolutionCell>> {
    if radii.is_empty() || t_grid.is_empty() {
        return Err(Error::InvalidArgument("empty radius or time grid".into()));
    }
    let grid = stencil_grid(radii, dr)?;
    let profiles = t_grid
        .par_iter()
        .map(|&t| profile_at(path, t, &grid, method))
        .collect::<Result<Vec<_>>>()?;
    let t0 = t_grid[0];
    let base = radii
        .iter()
        .map(|&r| growth_function(&profiles[0], r).map(|g| g.omega))
        .collect::<Result<Vec<_>>>()?;
    let mut cells = Vec::with_capacity(radii.len() * t_grid.len());
    for (profile, &t) in profiles.iter().zip(t_grid) {
        for (&r, &omega0) in radii.iter().zip(&base) {
            let omega = growth_function(profile, r)?.omega;
            let bound = omega0 * (-2.0 * (t - t0) / (r * r)).exp();
            cells.push(SupersolutionCell {
                t,
                r,
                omega,
                bound,
                hypothesis_sign: hypothesis_sign(profile, r)?,
                holds: omega >= bound,
            });
        }
    }
    Ok(cells)
}

/// Measured `∂ω/∂t` on an Einstein path against the prediction
/// `3ε / (2(t − t*) r)` from treating the ball volume as scaling with the
/// metric at fixed radius.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolitonCheck {
    pub t: f64,
    pub r: f64,
    pub measured: f64,
    pub remark_prediction: f64,
}

pub fn soliton_check(
    path: &EinsteinPath,
    spec: &SolitonSpec,
    r: f64,
    t: f64,
    dt: f64,
) -> Result<SolitonCheck> {
    let elapsed = t - spec.time_origin();
    let remark_prediction = if spec.epsilon() == 0 {
        0.0
    } else if elapsed == 0.0 {
        return Err(Error::InvalidArgument(format!(
            "soliton check at its time origin t = {t}"
        )));
    } else {
        3.0 * f64::from(spec.epsilon()) / (2.0 * elapsed * r)
    };
    let audit = evolution_audit(path, VolumeMethod::ClosedForm, r, t, dt)?;
    Ok(SolitonCheck {
        t,
        r,
        measured: audit.domega_dt_measured,
        remark_prediction,
    })
}

/// Half the shortest translation of the unit lattice, `½ min √coeffᵢ·Lᵢ`:
/// a stand-in for the injectivity radius of the quotient.
pub fn collapse_proxy(state: &MetricState, lattice_lengths: [f64; 3]) -> Result<f64> {
    if lattice_lengths.iter().any(|l| !(*l > 0.0 && l.is_finite())) {
        return Err(Error::InvalidArgument(format!(
            "lattice lengths must be positive, got {lattice_lengths:?}"
        )));
    }
    Ok(0.5
        * state
            .coeffs()
            .iter()
            .zip(lattice_lengths)
            .map(|(c, l)| c.sqrt() * l)
            .fold(f64::INFINITY, f64::min))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum MonotonicityVerdict {
    Nondecreasing,
    Decreasing,
    Mixed,
}

impl MonotonicityVerdict {
    pub fn as_str(self) -> &'static str {
        match self {
            MonotonicityVerdict::Nondecreasing => "nondecreasing",
            MonotonicityVerdict::Decreasing => "decreasing",
            MonotonicityVerdict::Mixed => "mixed",
        }
    }

    /// Classifies a series, counting a step as a change only when it exceeds
    /// twice the larger of the two standard errors.
    pub fn of_series(series: &[EntropyPoint]) -> Self {
        let mut up = false;
        let mut down = false;
        for w in series.windows(2) {
            let (a, b) = (&w[0].estimate, &w[1].estimate);
            let tol = 2.0 * a.stderr.max(b.stderr);
            if b.h - a.h > tol {
                up = true;
            } else if a.h - b.h > tol {
                down = true;
            }
        }
        match (up, down) {
            (_, false) => MonotonicityVerdict::Nondecreasing,
            (false, true) => MonotonicityVerdict::Decreasing,
            (true, true) => MonotonicityVerdict::Mixed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EntropyPoint {
    pub t: f64,
    pub estimate: EntropyEstimate,
    pub collapse_proxy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonotonicityAudit {
    pub series: Vec<EntropyPoint>,
    pub verdict: MonotonicityVerdict,
}

/// Entropy along a path at each time of `t_grid`, with the verdict reported
/// as a finding.
pub fn monotonicity_audit(
    path: &dyn MetricPath,
    method: VolumeMethod,
    window: (f64, f64),
    window_points: usize,
    t_grid: &[f64],
    lattice_lengths: [f64; 3],
) -> Result<MonotonicityAudit> {
    if t_grid.is_empty() {
        return Err(Error::InvalidArgument("empty time grid".into()));
    }
    let grid = window_grid(window, window_points)?;
    let series = t_grid
        .par_iter()
        .map(|&t| {
            let profile = profile_at(path, t, &grid, method)?;
            Ok(EntropyPoint {
                t,
                estimate: entropy_estimate(&profile, window)?,
                collapse_proxy: collapse_proxy(&profile.state, lattice_lengths)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let verdict = MonotonicityVerdict::of_series(&series);
    Ok(MonotonicityAudit { series, verdict })
}
