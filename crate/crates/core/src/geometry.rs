//! Homogeneous model geometries and curvature of diagonal left-invariant metrics.
//!
//! Structure-constant models are 3-dimensional unimodular Lie groups with a
//! Milnor frame `e1, e2, e3` satisfying
//!
//! ```text
//! [e2, e3] = λ1 e1,   [e3, e1] = λ2 e2,   [e1, e2] = λ3 e3
//! ```
//!
//! and metric `g = A ω¹⊗ω¹ + B ω²⊗ω² + C ω³⊗ω³`. Space-form models carry a
//! sectional curvature `κ` and use isotropic states `A = B = C = c`, meaning the
//! metric `c · g_κ`.
//!
//! Curvature norm convention: `|Rm|` is the ℓ² norm of the curvature operator
//! eigenvalues on 2-vectors, counted over ordered index pairs, so that
//! `|Rm|² = 4 (K23² + K31² + K12²)`. All models are homogeneous, so `|Rm|` does
//! not depend on the base point.

use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};

pub const DIM: usize = 3;

/// How a model's curvature is computed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Backend {
    StructureConstants { lambda: [f64; 3] },
    SpaceForm { kappa: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GeometryModel {
    name: String,
    backend: Backend,
}

const CATALOG: &[(&str, Backend)] = &[
    (
        "euclidean",
        Backend::StructureConstants {
            lambda: [0.0, 0.0, 0.0],
        },
    ),
    // λ = (2,2,2) makes the unit metric the round sphere of curvature 1.
    (
        "su2",
        Backend::StructureConstants {
            lambda: [2.0, 2.0, 2.0],
        },
    ),
    (
        "nil",
        Backend::StructureConstants {
            lambda: [1.0, 0.0, 0.0],
        },
    ),
    (
        "sol",
        Backend::StructureConstants {
            lambda: [1.0, -1.0, 0.0],
        },
    ),
    (
        "e2tilde",
        Backend::StructureConstants {
            lambda: [1.0, 1.0, 0.0],
        },
    ),
    (
        "sl2",
        Backend::StructureConstants {
            lambda: [1.0, 1.0, -1.0],
        },
    ),
    ("hyperbolic", Backend::SpaceForm { kappa: -1.0 }),
    ("round-sphere", Backend::SpaceForm { kappa: 1.0 }),
];

/// Names of every catalog entry, in catalog order.
pub fn catalog_names() -> impl Iterator<Item = &'static str> {
    CATALOG.iter().map(|(name, _)| *name)
}

/// The full catalog, in catalog order.
pub fn catalog() -> Vec<GeometryModel> {
    CATALOG
        .iter()
        .map(|(name, backend)| GeometryModel {
            name: (*name).to_string(),
            backend: *backend,
        })
        .collect()
}

pub fn catalog_lookup(name: &str) -> Result<GeometryModel> {
    CATALOG
        .iter()
        .find(|(key, _)| *key == name)
        .map(|(key, backend)| GeometryModel {
            name: (*key).to_string(),
            backend: *backend,
        })
        .ok_or_else(|| Error::UnknownGeometry {
            name: name.to_string(),
            valid: catalog_names().collect::<Vec<_>>().join(", "),
        })
}

impl GeometryModel {
    /// A structure-constant model outside the catalog.
    pub fn lie_group(name: impl Into<String>, lambda: [f64; 3]) -> Result<Self> {
        if lambda.iter().any(|l| !l.is_finite()) {
            return Err(Error::InvalidArgument(
                "structure constants must be finite".into(),
            ));
        }
        Ok(Self {
            name: name.into(),
            backend: Backend::StructureConstants { lambda },
        })
    }

    pub fn space_form(name: impl Into<String>, kappa: f64) -> Result<Self> {
        if !kappa.is_finite() {
            return Err(Error::InvalidArgument("curvature must be finite".into()));
        }
        Ok(Self {
            name: name.into(),
            backend: Backend::SpaceForm { kappa },
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn backend(&self) -> Backend {
        self.backend
    }

    pub fn is_space_form(&self) -> bool {
        matches!(self.backend, Backend::SpaceForm { .. })
    }

    pub fn kappa(&self) -> Option<f64> {
        match self.backend {
            Backend::SpaceForm { kappa } => Some(kappa),
            Backend::StructureConstants { .. } => None,
        }
    }

    pub fn lambda(&self) -> Option<[f64; 3]> {
        match self.backend {
            Backend::StructureConstants { lambda } => Some(lambda),
            Backend::SpaceForm { .. } => None,
        }
    }

    /// The metric state a scenario starts from when no coefficients are given.
    pub fn default_state(&self) -> MetricState {
        MetricState {
            coeffs: [1.0; 3],
            time: 0.0,
        }
    }
}

impl fmt::Display for GeometryModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.backend {
            Backend::StructureConstants { lambda } => write!(
                f,
                "{} structure-constants lambda=({}, {}, {})",
                self.name, lambda[0], lambda[1], lambda[2]
            ),
            Backend::SpaceForm { kappa } => write!(f, "{} space-form kappa={}", self.name, kappa),
        }
    }
}

/// Diagonal left-invariant metric coefficients `(A, B, C)` at time `t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MetricState {
    coeffs: [f64; 3],
    time: f64,
}

impl MetricState {
    pub fn new(coeffs: [f64; 3], time: f64) -> Result<Self> {
        if let Some(bad) = coeffs.iter().find(|c| !(c.is_finite() && **c > 0.0)) {
            return Err(Error::InvalidMetric(format!(
                "metric coefficients must be positive and finite, got {bad}"
            )));
        }
        if !time.is_finite() {
            return Err(Error::InvalidMetric("time must be finite".into()));
        }
        Ok(Self { coeffs, time })
    }

    /// The space-form state `c · g_κ`.
    pub fn isotropic(scale: f64, time: f64) -> Result<Self> {
        Self::new([scale; 3], time)
    }

    pub fn coeffs(&self) -> [f64; 3] {
        self.coeffs
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn with_time(self, time: f64) -> Self {
        Self { time, ..self }
    }

    /// `√(ABC)`, the volume of the unit lattice cell.
    pub fn volume_element(&self) -> f64 {
        (self.coeffs[0] * self.coeffs[1] * self.coeffs[2]).sqrt()
    }

    /// Geometric length scale `(ABC)^{1/6}`.
    pub fn length_scale(&self) -> f64 {
        self.volume_element().cbrt()
    }
}

pub fn scale_metric(state: &MetricState, c: f64) -> Result<MetricState> {
    if !(c.is_finite() && c > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "scale factor must be positive, got {c}"
        )));
    }
    let [a, b, cc] = state.coeffs;
    MetricState::new([c * a, c * b, c * cc], state.time)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurvatureReport {
    /// Ricci curvature `Ric(f_i, f_i)` in the orthonormal frame `f_i = e_i / √coeff_i`.
    pub ricci_eigenvalues: [f64; 3],
    /// Metric-frame components `Ric(e_i, e_i)`.
    pub ricci_components: [f64; 3],
    pub scalar: f64,
    pub riemann_norm: f64,
    /// Sectional curvatures `(K23, K31, K12)` of the coordinate planes.
    pub sectional: [f64; 3],
}

/// Structure constants `μ` of the orthonormal frame: `[f2, f3] = μ1 f1` and cyclic.
pub(crate) fn orthonormal_structure_constants(lambda: [f64; 3], coeffs: [f64; 3]) -> [f64; 3] {
    let vol = (coeffs[0] * coeffs[1] * coeffs[2]).sqrt();
    [
        lambda[0] * coeffs[0] / vol,
        lambda[1] * coeffs[1] / vol,
        lambda[2] * coeffs[2] / vol,
    ]
}

/// Christoffel symbols of the orthonormal frame, `∇_{f_i} f_j = Σ_k Γ[i][j][k] f_k`.
pub(crate) fn levi_civita(mu: [f64; 3]) -> [[[f64; 3]; 3]; 3] {
    // bracket[i][j][k] = <[f_i, f_j], f_k>
    let mut bracket = [[[0.0; 3]; 3]; 3];
    for i in 0..3 {
        let j = (i + 1) % 3;
        let k = (i + 2) % 3;
        bracket[j][k][i] = mu[i];
        bracket[k][j][i] = -mu[i];
    }
    let mut gamma = [[[0.0; 3]; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            for k in 0..3 {
                gamma[i][j][k] = 0.5 * (bracket[i][j][k] - bracket[j][k][i] + bracket[k][i][j]);
            }
        }
    }
    gamma
}

/// Sectional curvatures `(K23, K31, K12)` of the orthonormal Milnor frame.
///
/// In dimension three the curvature operator of a diagonal metric is diagonal on
/// `f2∧f3, f3∧f1, f1∧f2` with these eigenvalues.
pub(crate) fn frame_sectional(model: &GeometryModel, state: &MetricState) -> Result<[f64; 3]> {
    match model.backend {
        Backend::StructureConstants { lambda } => {
            let mu = orthonormal_structure_constants(lambda, state.coeffs);
            let half = 0.5 * (mu[0] + mu[1] + mu[2]);
            let nu = [half - mu[0], half - mu[1], half - mu[2]];
            let ric = [
                2.0 * nu[1] * nu[2],
                2.0 * nu[2] * nu[0],
                2.0 * nu[0] * nu[1],
            ];
            Ok([
                0.5 * (ric[1] + ric[2] - ric[0]),
                0.5 * (ric[2] + ric[0] - ric[1]),
                0.5 * (ric[0] + ric[1] - ric[2]),
            ])
        }
        Backend::SpaceForm { kappa } => {
            let c = isotropic_scale(state)?;
            Ok([kappa / c; 3])
        }
    }
}

pub(crate) fn isotropic_scale(state: &MetricState) -> Result<f64> {
    let [a, b, c] = state.coeffs;
    let tol = 1e-12 * a.max(b).max(c);
    if (a - b).abs() > tol || (a - c).abs() > tol {
        return Err(Error::InvalidMetric(format!(
            "space-form states must be isotropic, got ({a}, {b}, {c})"
        )));
    }
    Ok(a)
}

pub fn curvature(model: &GeometryModel, state: &MetricState) -> Result<CurvatureReport> {
    let sectional = frame_sectional(model, state)?;
    let [k23, k31, k12] = sectional;
    let ricci_eigenvalues = [k12 + k31, k12 + k23, k31 + k23];
    let coeffs = state.coeffs;
    let ricci_components = [
        ricci_eigenvalues[0] * coeffs[0],
        ricci_eigenvalues[1] * coeffs[1],
        ricci_eigenvalues[2] * coeffs[2],
    ];
    let scalar = ricci_eigenvalues.iter().sum();
    let riemann_norm = 2.0 * (k23 * k23 + k31 * k31 + k12 * k12).sqrt();
    Ok(CurvatureReport {
        ricci_eigenvalues,
        ricci_components,
        scalar,
        riemann_norm,
        sectional,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::koszul_oracle;
    use proptest::prelude::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
    }

    #[test]
    fn catalog_has_required_models() {
        let names: Vec<_> = catalog_names().collect();
        for key in [
            "euclidean",
            "su2",
            "nil",
            "sol",
            "e2tilde",
            "sl2",
            "hyperbolic",
            "round-sphere",
        ] {
            assert!(names.contains(&key), "missing {key}");
        }
        assert_eq!(
            catalog_lookup("euclidean").unwrap().lambda(),
            Some([0.0; 3])
        );
        assert_eq!(catalog_lookup("hyperbolic").unwrap().kappa(), Some(-1.0));
        assert_eq!(
            catalog_lookup("nil").unwrap().lambda(),
            Some([1.0, 0.0, 0.0])
        );
    }

    #[test]
    fn unknown_geometry_lists_keys() {
        let err = catalog_lookup("tetrahedral").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("nil") && msg.contains("round-sphere"), "{msg}");
    }

    #[test]
    fn nil_is_heisenberg() {
        // Only [e2, e3] = e1 is nonzero and e1 is central: the Heisenberg algebra.
        let (ric, _, _) = koszul_oracle([1.0, 0.0, 0.0], [1.0; 3]);
        assert!(close(ric[0][0], 0.5, 1e-14));
        assert!(close(ric[1][1], -0.5, 1e-14));
        assert!(close(ric[2][2], -0.5, 1e-14));
        let nil = catalog_lookup("nil").unwrap();
        let rep = curvature(&nil, &MetricState::new([1.0; 3], 0.0).unwrap()).unwrap();
        assert_eq!(rep.ricci_components, [0.5, -0.5, -0.5]);
        assert!(close(rep.scalar, -0.5, 1e-15));
    }

    #[test]
    fn euclidean_is_flat() {
        let m = catalog_lookup("euclidean").unwrap();
        let rep = curvature(&m, &MetricState::new([0.3, 2.0, 7.0], 0.0).unwrap()).unwrap();
        assert_eq!(rep.scalar, 0.0);
        assert_eq!(rep.riemann_norm, 0.0);
        assert_eq!(rep.ricci_components, [0.0; 3]);
    }

    #[test]
    fn hyperbolic_space_form() {
        let m = catalog_lookup("hyperbolic").unwrap();
        let rep = curvature(&m, &MetricState::isotropic(1.0, 0.0).unwrap()).unwrap();
        assert_eq!(rep.ricci_components, [-2.0; 3]);
        assert_eq!(rep.scalar, -6.0);
        assert!(close(rep.riemann_norm, 2.0 * 3f64.sqrt(), 1e-15));
    }

    #[test]
    fn su2_unit_metric_is_round() {
        let m = catalog_lookup("su2").unwrap();
        let rep = curvature(&m, &MetricState::new([1.0; 3], 0.0).unwrap()).unwrap();
        assert_eq!(rep.sectional, [1.0; 3]);
        assert_eq!(rep.scalar, 6.0);
    }

    #[test]
    fn space_form_rejects_anisotropic_state() {
        let m = catalog_lookup("round-sphere").unwrap();
        assert!(curvature(&m, &MetricState::new([1.0, 2.0, 1.0], 0.0).unwrap()).is_err());
    }

    #[test]
    fn scale_metric_examples() {
        let s = MetricState::new([1.0; 3], 0.5).unwrap();
        let t = scale_metric(&s, 4.0).unwrap();
        assert_eq!(t.coeffs(), [4.0; 3]);
        assert_eq!(t.time(), 0.5);
        assert_eq!(scale_metric(&s, 1.0).unwrap(), s);
        assert!(scale_metric(&s, 0.0).is_err());
        assert!(scale_metric(&s, -1.0).is_err());
        assert!(MetricState::new([1.0, 0.0, 1.0], 0.0).is_err());
    }

    #[test]
    fn levi_civita_matches_oracle_connection() {
        // The frame connection must be metric: Γ_ijk = −Γ_ikj.
        let g = levi_civita([0.3, -1.2, 2.0]);
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    assert!((g[i][j][k] + g[i][k][j]).abs() < 1e-15);
                }
            }
        }
    }

    fn lie_catalog() -> Vec<GeometryModel> {
        catalog()
            .into_iter()
            .filter(|m| !m.is_space_form())
            .collect()
    }

    proptest! {
        #[test]
        fn milnor_formulas_match_koszul_oracle(
            a in 0.1f64..10.0, b in 0.1f64..10.0, c in 0.1f64..10.0,
            l1 in -2.0f64..2.0, l2 in -2.0f64..2.0, l3 in -2.0f64..2.0,
        ) {
            let model = GeometryModel::lie_group("random", [l1, l2, l3]).unwrap();
            let state = MetricState::new([a, b, c], 0.0).unwrap();
            let rep = curvature(&model, &state).unwrap();
            let (ric, sec, gam) = koszul_oracle([l1, l2, l3], [a, b, c]);
            let mu = orthonormal_structure_constants([l1, l2, l3], [a, b, c]);
            let lc = levi_civita(mu);
            for i in 0..3 {
                for j in 0..3 {
                    for k in 0..3 {
                        prop_assert!(close(lc[i][j][k], gam[i][j][k], 1e-12));
                    }
                }
            }
            for i in 0..3 {
                prop_assert!(close(rep.ricci_eigenvalues[i], ric[i][i], 1e-10));
                for j in 0..3 {
                    if i != j {
                        prop_assert!(ric[i][j].abs() < 1e-10 * (1.0 + rep.riemann_norm));
                    }
                }
            }
            prop_assert!(close(rep.sectional[0], sec[1][2], 1e-10));
            prop_assert!(close(rep.sectional[1], sec[2][0], 1e-10));
            prop_assert!(close(rep.sectional[2], sec[0][1], 1e-10));
        }

        #[test]
        fn report_identities(
            a in 0.1f64..10.0, b in 0.1f64..10.0, c in 0.1f64..10.0, idx in 0usize..6,
        ) {
            let model = &lie_catalog()[idx];
            let state = MetricState::new([a, b, c], 0.0).unwrap();
            let rep = curvature(model, &state).unwrap();
            let trace = rep.ricci_components[0] / a + rep.ricci_components[1] / b
                + rep.ricci_components[2] / c;
            prop_assert!(close(rep.scalar, trace, 1e-12));
            let sec_sum = 2.0 * rep.sectional.iter().sum::<f64>();
            prop_assert!(close(rep.scalar, sec_sum, 1e-12));
            let flat = rep.sectional.iter().all(|k| k.abs() < 1e-12);
            prop_assert_eq!(rep.riemann_norm < 1e-12, flat);
        }

        #[test]
        fn curvature_scaling(
            a in 0.1f64..10.0, b in 0.1f64..10.0, c in 0.1f64..10.0,
            factor in 0.05f64..20.0, idx in 0usize..8,
        ) {
            let model = &catalog()[idx];
            let state = if model.is_space_form() {
                MetricState::isotropic(a, 0.0).unwrap()
            } else {
                MetricState::new([a, b, c], 0.0).unwrap()
            };
            let base = curvature(model, &state).unwrap();
            let scaled = curvature(model, &scale_metric(&state, factor).unwrap()).unwrap();
            prop_assert!(close(scaled.scalar * factor, base.scalar, 1e-10));
            prop_assert!(close(scaled.riemann_norm * factor, base.riemann_norm, 1e-10));
        }

        #[test]
        fn frame_permutation_equivariance(
            a in 0.1f64..10.0, b in 0.1f64..10.0, c in 0.1f64..10.0,
            l1 in -2.0f64..2.0, l2 in -2.0f64..2.0, l3 in -2.0f64..2.0, p in 0usize..6,
        ) {
            const PERMS: [[usize; 3]; 6] =
                [[0, 1, 2], [1, 2, 0], [2, 0, 1], [1, 0, 2], [0, 2, 1], [2, 1, 0]];
            let perm = PERMS[p];
            let coeffs = [a, b, c];
            let lambda = [l1, l2, l3];
            let base = curvature(
                &GeometryModel::lie_group("x", lambda).unwrap(),
                &MetricState::new(coeffs, 0.0).unwrap(),
            ).unwrap();
            let permuted = curvature(
                &GeometryModel::lie_group("y", perm.map(|i| lambda[i])).unwrap(),
                &MetricState::new(perm.map(|i| coeffs[i]), 0.0).unwrap(),
            ).unwrap();
            for (slot, &i) in perm.iter().enumerate() {
                prop_assert!(close(permuted.ricci_components[slot], base.ricci_components[i], 1e-12));
            }
        }
    }
}
