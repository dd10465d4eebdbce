//! Parabolic rescaling `g_i(t) = K·g(t_i + t/K)`, the growth-function shift it
//! induces, and type I/III blow-up classification.
//!
//! `|Rm|` is constant in space on homogeneous models, so the blow-up base
//! points of the general theory play no role and `K = |Rm(t_i)|`.

use rayon::prelude::*;
use serde::Serialize;

use crate::ball::{ball_volume_profile, VolumeMethod};
use crate::entropy::{entropy_estimate, growth_function, window_grid, EntropyEstimate};
use crate::error::{Error, Result};
use crate::fit::least_squares;
use crate::flow::{FlowTrajectory, MetricPath, TerminationReason};
use crate::geometry::{curvature, scale_metric, GeometryModel, MetricState, DIM};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RescalingTransform {
    pub base_time: f64,
    pub factor: f64,
}

impl RescalingTransform {
    pub fn new(base_time: f64, factor: f64) -> Result<Self> {
        if !(factor > 0.0 && factor.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "rescaling factor must be positive, got {factor}"
            )));
        }
        if !base_time.is_finite() {
            return Err(Error::InvalidArgument(
                "rescaling base time must be finite".into(),
            ));
        }
        Ok(Self { base_time, factor })
    }

    /// Original time at rescaled time `s`.
    pub fn original_time(&self, s: f64) -> f64 {
        self.base_time + s / self.factor
    }

    /// Rescaled time of original time `t`.
    pub fn rescaled_time(&self, t: f64) -> f64 {
        self.factor * (t - self.base_time)
    }

    /// Rescaled metric built from the original metric at `original_time(s)`.
    pub fn apply(&self, original: &MetricState) -> Result<MetricState> {
        Ok(scale_metric(original, self.factor)?.with_time(self.rescaled_time(original.time())))
    }

    /// `other ∘ self`: rescale by `self`, then rescale the result by `other`.
    pub fn then(&self, other: &RescalingTransform) -> RescalingTransform {
        RescalingTransform {
            base_time: self.original_time(other.base_time),
            factor: self.factor * other.factor,
        }
    }
}

/// Applies `transform` to every sample; curvature reports are recomputed.
pub fn rescale_with(
    traj: &FlowTrajectory,
    transform: &RescalingTransform,
) -> Result<FlowTrajectory> {
    let states = traj
        .samples()
        .iter()
        .map(|s| transform.apply(&s.state))
        .collect::<Result<Vec<_>>>()?;
    Ok(FlowTrajectory::from_states(
        traj.model().clone(),
        states,
        traj.singular_time().map(|t| transform.rescaled_time(t)),
        traj.termination(),
    )?
    .with_options(traj.options()))
}

/// Rescales about `t_i` by `K = |Rm(t_i)|`, so the rescaled metric has unit
/// curvature norm at time zero. The rescaled samples are the original samples
/// with one inserted at `t_i`.
pub fn parabolic_rescale(
    traj: &FlowTrajectory,
    t_i: f64,
) -> Result<(FlowTrajectory, RescalingTransform)> {
    if !(t_i > traj.t_start() && t_i < traj.t_final()) {
        return Err(Error::InvalidArgument(format!(
            "base time {t_i} must lie strictly inside [{}, {}]",
            traj.t_start(),
            traj.t_final()
        )));
    }
    let base = traj.state_at_refined(t_i)?;
    let k = curvature(traj.model(), &base)?.riemann_norm;
    if !(k > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "{} is flat at t = {t_i}; parabolic rescaling is undefined",
            traj.model().name()
        )));
    }
    let transform = RescalingTransform::new(t_i, k)?;
    let gap = 1e-12 * t_i.abs().max(1.0);
    let mut states: Vec<MetricState> = Vec::with_capacity(traj.samples().len() + 1);
    for s in traj.samples() {
        let t = s.time();
        if (t - t_i).abs() <= gap {
            continue;
        }
        if t > t_i && states.last().is_none_or(|p| p.time() < 0.0) {
            states.push(transform.apply(&base)?);
        }
        states.push(transform.apply(&s.state)?);
    }
    let rescaled = FlowTrajectory::from_states(
        traj.model().clone(),
        states,
        traj.singular_time().map(|t| transform.rescaled_time(t)),
        traj.termination(),
    )?
    .with_options(traj.options());
    Ok((rescaled, transform))
}

/// Both readings of the growth-function shift under `g ↦ K·g`, at radius `r`
/// of the rescaled metric:
///
/// * (a) `ω(Kg, r) − (3/2) ln K / r − ω(g, r)`;
/// * (b) `ω(Kg, r) − (3/2) ln K / r − (1/r) ln Vol_g B(r/√K)`, which is zero
///   by `Vol_{Kg} B(r) = K^{3/2} Vol_g B(r/√K)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GrowthShift {
    pub r: f64,
    pub factor: f64,
    pub offset: f64,
    pub omega_rescaled: f64,
    pub verbatim_residual: f64,
    pub scale_consistent_residual: f64,
}

pub fn growth_shift_identity(
    model: &GeometryModel,
    original: &MetricState,
    factor: f64,
    r: f64,
    method: VolumeMethod,
) -> Result<GrowthShift> {
    let rescaled = scale_metric(original, factor)?;
    let omega_rescaled =
        growth_function(&ball_volume_profile(model, &rescaled, &[r], method)?, r)?.omega;
    let omega_same_r =
        growth_function(&ball_volume_profile(model, original, &[r], method)?, r)?.omega;
    let matched = r / factor.sqrt();
    let vol_matched = ball_volume_profile(model, original, &[matched], method)?.vol_ball[0];
    let offset = 0.5 * DIM as f64 * factor.ln() / r;
    Ok(GrowthShift {
        r,
        factor,
        offset,
        omega_rescaled,
        verbatim_residual: (omega_rescaled - offset - omega_same_r).abs(),
        scale_consistent_residual: (omega_rescaled - offset - vol_matched.ln() / r).abs(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum BlowupType {
    #[serde(rename = "I")]
    TypeI,
    #[serde(rename = "III")]
    TypeIII,
    #[serde(rename = "other")]
    Other,
}

impl BlowupType {
    pub fn as_str(self) -> &'static str {
        match self {
            BlowupType::TypeI => "I",
            BlowupType::TypeIII => "III",
            BlowupType::Other => "other",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClassifyOptions {
    /// A trajectory must reach this time to count as immortal.
    pub horizon: f64,
    pub exponent_tol: f64,
    pub min_samples: usize,
    /// Products `(T−t)|Rm|` or `t|Rm|` at or above this count as unbounded.
    pub product_cap: f64,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        Self {
            horizon: 1e4,
            exponent_tol: 0.05,
            min_samples: 20,
            product_cap: 1e8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BlowupFit {
    pub verdict: BlowupType,
    pub singular_time: Option<f64>,
    /// Fitted power of `(T − t)` or `t` in `|Rm|`.
    pub exponent: Option<f64>,
    /// Largest `(T − t)|Rm|` or `t|Rm|` over the fit window.
    pub constant: Option<f64>,
    /// RMS residual of the log-log fit.
    pub residual: Option<f64>,
    /// Spread `max/min − 1` of the product over the fit window.
    pub product_spread: Option<f64>,
    pub samples: usize,
}

impl BlowupFit {
    fn other(traj: &FlowTrajectory) -> Self {
        Self {
            verdict: BlowupType::Other,
            singular_time: traj.singular_time(),
            exponent: None,
            constant: None,
            residual: None,
            product_spread: None,
            samples: 0,
        }
    }
}

/// Log-log fit of `|Rm|` against `x`, with `(x, |Rm|)` pairs.
fn power_fit(points: &[(f64, f64)]) -> Result<(f64, f64, f64, f64)> {
    let rows: Vec<Vec<f64>> = points.iter().map(|(x, _)| vec![1.0, x.ln()]).collect();
    let y: Vec<f64> = points.iter().map(|(_, rm)| rm.ln()).collect();
    let fit = least_squares(&rows, &y)?;
    let products = points.iter().map(|(x, rm)| x * rm);
    let (lo, hi) = products.fold((f64::INFINITY, 0.0f64), |(lo, hi), p| {
        (lo.min(p), hi.max(p))
    });
    Ok((fit.coeffs[1], hi, fit.rms, hi / lo - 1.0))
}

/// Classifies finite-time blow-up (type I: `|Rm| ~ (T − t)^{-1}` over the last
/// decade of `T − t`) and immortal decay (type III: `|Rm| ~ t^{-1}` over the
/// last two decades of a run reaching the horizon).
pub fn classify_blowup(traj: &FlowTrajectory, opts: &ClassifyOptions) -> Result<BlowupFit> {
    let samples = traj.samples();
    if samples.iter().all(|s| s.curvature.riemann_norm == 0.0) {
        return Ok(BlowupFit::other(traj));
    }
    let (verdict, points) = if let Some(big_t) = traj.singular_time() {
        let nearest = big_t - traj.t_final();
        if !(nearest > 0.0) {
            return Ok(BlowupFit::other(traj));
        }
        let points: Vec<(f64, f64)> = samples
            .iter()
            .map(|s| (big_t - s.time(), s.curvature.riemann_norm))
            .filter(|(gap, _)| *gap <= 10.0 * nearest)
            .collect();
        (BlowupType::TypeI, points)
    } else if traj.termination() == TerminationReason::ReachedTEnd
        && traj.t_final() >= opts.horizon * (1.0 - 1e-12)
        && traj.t_final() > 0.0
    {
        let start = traj.t_final() / 100.0;
        let points: Vec<(f64, f64)> = samples
            .iter()
            .filter(|s| s.time() >= start)
            .map(|s| (s.time(), s.curvature.riemann_norm))
            .collect();
        (BlowupType::TypeIII, points)
    } else {
        return Ok(BlowupFit::other(traj));
    };
    if points.len() < opts.min_samples {
        return Err(Error::InsufficientSamples {
            what: "blow-up fit window",
            needed: opts.min_samples,
            got: points.len(),
        });
    }
    if points.iter().any(|(_, rm)| *rm <= 0.0) {
        return Ok(BlowupFit::other(traj));
    }
    let (exponent, constant, residual, spread) = power_fit(&points)?;
    let accepted = (exponent + 1.0).abs() <= opts.exponent_tol && constant < opts.product_cap;
    Ok(BlowupFit {
        verdict: if accepted { verdict } else { BlowupType::Other },
        singular_time: traj.singular_time(),
        exponent: Some(exponent),
        constant: Some(constant),
        residual: Some(residual),
        product_spread: Some(spread),
        samples: points.len(),
    })
}

/// Entropy of `g(t_i)` and of its rescaling `K_i·g(t_i)` over the same radius
/// window, with the shift `(3/2) ln K_i / r` at both ends of the window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LimitEntropyRow {
    pub t: f64,
    pub factor: f64,
    pub original: EntropyEstimate,
    pub rescaled: EntropyEstimate,
    pub shift_at_window_start: f64,
    pub shift_at_window_end: f64,
}

pub fn limit_entropy_experiment(
    path: &dyn MetricPath,
    t_sequence: &[f64],
    window: (f64, f64),
    window_points: usize,
    method: VolumeMethod,
) -> Result<Vec<LimitEntropyRow>> {
    if t_sequence.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument(
            "t_sequence must be increasing".into(),
        ));
    }
    let grid = window_grid(window, window_points)?;
    t_sequence
        .par_iter()
        .map(|&t| {
            let state = path.state_at(t)?;
            let factor = curvature(path.model(), &state)?.riemann_norm;
            if !(factor > 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "{} is flat at t = {t}; no rescaling",
                    path.model().name()
                )));
            }
            let original = entropy_estimate(
                &ball_volume_profile(path.model(), &state, &grid, method)?,
                window,
            )?;
            let rescaled_state = scale_metric(&state, factor)?;
            let rescaled = entropy_estimate(
                &ball_volume_profile(path.model(), &rescaled_state, &grid, method)?,
                window,
            )?;
            let shift = |r: f64| 0.5 * DIM as f64 * factor.ln() / r;
            Ok(LimitEntropyRow {
                t,
                factor,
                original,
                rescaled,
                shift_at_window_start: shift(window.0),
                shift_at_window_end: shift(window.1),
            })
        })
        .collect()
}
