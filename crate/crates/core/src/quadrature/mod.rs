//! Node sets on the unit sphere for direction-integrated ray sums.
//!
//! Three rules are Lebedev octahedral rules (26, 86 and 590 nodes, exact for
//! spherical harmonics up to degree 7, 15 and 41). The 230-node set is a
//! Gauss–Legendre × trapezoid product rule (10 polar × 23 azimuthal nodes):
//! the 230-node Lebedev rule has a negative weight, and the ray sums need
//! positive weights so that the clamped volumes stay upper bounds.

mod tables;

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum QuadratureRule {
    Lebedev26,
    Lebedev86,
    Product230,
    Lebedev590,
}

impl Default for QuadratureRule {
    fn default() -> Self {
        QuadratureRule::Product230
    }
}

impl QuadratureRule {
    pub const ALL: [QuadratureRule; 4] = [
        QuadratureRule::Lebedev26,
        QuadratureRule::Lebedev86,
        QuadratureRule::Product230,
        QuadratureRule::Lebedev590,
    ];

    pub fn name(self) -> &'static str {
        match self {
            QuadratureRule::Lebedev26 => "lebedev26",
            QuadratureRule::Lebedev86 => "lebedev86",
            QuadratureRule::Product230 => "product230",
            QuadratureRule::Lebedev590 => "lebedev590",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|r| r.name() == name)
            .ok_or_else(|| {
                Error::Config(format!(
                    "unknown quadrature `{name}`; valid: {}",
                    Self::ALL.map(|r| r.name()).join(", ")
                ))
            })
    }

    pub fn node_count(self) -> usize {
        match self {
            QuadratureRule::Lebedev26 => 26,
            QuadratureRule::Lebedev86 => 86,
            QuadratureRule::Product230 => 230,
            QuadratureRule::Lebedev590 => 590,
        }
    }

    /// The next larger rule, if any.
    pub fn refined(self) -> Option<Self> {
        match self {
            QuadratureRule::Lebedev26 => Some(QuadratureRule::Lebedev86),
            QuadratureRule::Lebedev86 => Some(QuadratureRule::Product230),
            QuadratureRule::Product230 => Some(QuadratureRule::Lebedev590),
            QuadratureRule::Lebedev590 => None,
        }
    }

    pub fn nodes(self) -> SphereQuadrature {
        let (directions, weights) = match self {
            QuadratureRule::Lebedev26 => expand_octahedral(tables::LEBEDEV_26),
            QuadratureRule::Lebedev86 => expand_octahedral(tables::LEBEDEV_86),
            QuadratureRule::Product230 => product_rule(10, 23),
            QuadratureRule::Lebedev590 => expand_octahedral(tables::LEBEDEV_590),
        };
        debug_assert_eq!(directions.len(), self.node_count());
        SphereQuadrature {
            rule: self,
            directions,
            weights,
        }
    }
}

/// Unit directions with positive weights summing to 4π.
#[derive(Debug, Clone, PartialEq)]
pub struct SphereQuadrature {
    pub rule: QuadratureRule,
    pub directions: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
}

impl SphereQuadrature {
    pub fn len(&self) -> usize {
        self.directions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.directions.is_empty()
    }

    /// `Σ w_v f(v)` in node order.
    pub fn integrate(&self, f: impl Fn([f64; 3]) -> f64) -> f64 {
        self.directions
            .iter()
            .zip(&self.weights)
            .map(|(d, w)| w * f(*d))
            .sum()
    }
}

const PERMUTATIONS: [[usize; 3]; 6] = [
    [0, 1, 2],
    [0, 2, 1],
    [1, 0, 2],
    [1, 2, 0],
    [2, 0, 1],
    [2, 1, 0],
];

fn expand_octahedral(generators: &[([f64; 3], f64)]) -> (Vec<[f64; 3]>, Vec<f64>) {
    let mut directions: Vec<[f64; 3]> = Vec::new();
    let mut weights = Vec::new();
    for &(gen, weight) in generators {
        for perm in PERMUTATIONS {
            for signs in 0..8u8 {
                let mut p = [0.0; 3];
                let mut redundant = false;
                for axis in 0..3 {
                    let v = gen[perm[axis]];
                    let flip = signs & (1 << axis) != 0;
                    if flip && v == 0.0 {
                        redundant = true;
                    }
                    p[axis] = if flip { -v } else { v };
                }
                if redundant || directions.contains(&p) {
                    continue;
                }
                directions.push(p);
                weights.push(weight);
            }
        }
    }
    (directions, weights)
}

/// Gauss–Legendre nodes and weights on `[-1, 1]` by Newton iteration on `P_n`.
pub(crate) fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        dp = if d != 0.0 { d } else { dp };
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

fn product_rule(polar: usize, azimuthal: usize) -> (Vec<[f64; 3]>, Vec<f64>) {
    let (zs, wz) = gauss_legendre(polar);
    let dphi = 2.0 * PI / azimuthal as f64;
    let mut directions = Vec::with_capacity(polar * azimuthal);
    let mut weights = Vec::with_capacity(polar * azimuthal);
    for (z, w) in zs.iter().zip(&wz) {
        let rho = (1.0 - z * z).sqrt();
        for k in 0..azimuthal {
            let phi = (k as f64 + 0.5) * dphi;
            directions.push([rho * phi.cos(), rho * phi.sin(), *z]);
            weights.push(w * dphi);
        }
    }
    (directions, weights)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn node_counts_and_weights() {
        for rule in QuadratureRule::ALL {
            let q = rule.nodes();
            assert_eq!(q.len(), rule.node_count(), "{}", rule.name());
            assert!(q.weights.iter().all(|w| *w > 0.0));
            let total: f64 = q.weights.iter().sum();
            assert!((total - 4.0 * PI).abs() < 1e-13, "{} {total}", rule.name());
            for d in &q.directions {
                let norm = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
                assert!((norm - 1.0).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn low_degree_moments_are_exact() {
        // ∫ x² = 4π/3, ∫ x⁴ = 4π/5, ∫ x²y² = 4π/15, ∫ x²y²z² = 4π/105, ∫ z⁶ = 4π/7
        let cases: [(fn([f64; 3]) -> f64, f64); 5] = [
            (|d| d[0] * d[0], 4.0 * PI / 3.0),
            (|d| d[0].powi(4), 4.0 * PI / 5.0),
            (|d| d[0] * d[0] * d[1] * d[1], 4.0 * PI / 15.0),
            (|d| (d[0] * d[1] * d[2]).powi(2), 4.0 * PI / 105.0),
            (|d| d[2].powi(6), 4.0 * PI / 7.0),
        ];
        for rule in QuadratureRule::ALL {
            let q = rule.nodes();
            for (f, exact) in cases {
                let got = q.integrate(f);
                assert!((got - exact).abs() < 1e-13, "{} {got} {exact}", rule.name());
            }
            // odd moments vanish
            assert!(q.integrate(|d| d[0] * d[1] * d[1]).abs() < 1e-14);
        }
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(10);
        let int = |p: i32| x.iter().zip(&w).map(|(x, w)| w * x.powi(p)).sum::<f64>();
        assert!((int(0) - 2.0).abs() < 1e-14);
        assert!((int(18) - 2.0 / 19.0).abs() < 1e-14);
        assert!(int(19).abs() < 1e-14);
    }

    #[test]
    fn names_round_trip() {
        for rule in QuadratureRule::ALL {
            assert_eq!(QuadratureRule::from_name(rule.name()).unwrap(), rule);
        }
        assert!(QuadratureRule::from_name("lebedev230").is_err());
    }
}
