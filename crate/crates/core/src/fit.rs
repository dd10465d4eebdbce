//! Ordinary least squares with coefficient standard errors.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct LinearFit {
    pub coeffs: Vec<f64>,
    pub stderr: Vec<f64>,
    /// Root-mean-square residual.
    pub rms: f64,
}

/// Fits `y ≈ X β` by SVD on column-normalized regressors.
///
/// Standard errors use the residual variance with `n − p` degrees of freedom.
pub(crate) fn least_squares(rows: &[Vec<f64>], y: &[f64]) -> Result<LinearFit> {
    let n = rows.len();
    let p = rows.first().map_or(0, Vec::len);
    if n <= p || p == 0 {
        return Err(Error::DegenerateWindow(format!(
            "least squares needs more points than parameters ({n} points, {p} parameters)"
        )));
    }
    let mut x = DMatrix::from_fn(n, p, |i, j| rows[i][j]);
    let norms: Vec<f64> = (0..p).map(|j| x.column(j).norm()).collect();
    if norms.iter().any(|s| !(*s > 0.0 && s.is_finite())) {
        return Err(Error::DegenerateWindow("regressor column vanishes".into()));
    }
    for (j, s) in norms.iter().enumerate() {
        x.column_mut(j).scale_mut(1.0 / s);
    }
    let yv = DVector::from_column_slice(y);
    let svd = x.clone().svd(true, true);
    let smax = svd.singular_values.max();
    if svd.singular_values.min() <= 1e-13 * smax {
        return Err(Error::DegenerateWindow("regressors are collinear".into()));
    }
    let beta = svd
        .solve(&yv, 0.0)
        .map_err(|e| Error::DegenerateWindow(e.to_string()))?;
    let resid = &yv - &x * &beta;
    let ss = resid.norm_squared();
    let sigma2 = ss / (n - p) as f64;
    let v_t = svd.v_t.as_ref().expect("requested V^T");
    let coeffs = (0..p).map(|j| beta[j] / norms[j]).collect();
    let stderr = (0..p)
        .map(|j| {
            // (XᵀX)⁻¹_jj = Σ_k V_jk² / σ_k²
            let var: f64 = (0..p)
                .map(|k| (v_t[(k, j)] / svd.singular_values[k]).powi(2))
                .sum();
            (sigma2 * var).sqrt() / norms[j]
        })
        .collect();
    Ok(LinearFit {
        coeffs,
        stderr,
        rms: (ss / n as f64).sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_exact_linear_model() {
        let xs: Vec<f64> = (0..20).map(|i| 1.0 + 0.3 * i as f64).collect();
        let rows: Vec<Vec<f64>> = xs.iter().map(|x| vec![1.0, *x, x.ln()]).collect();
        let y: Vec<f64> = xs.iter().map(|x| 0.5 - 2.0 * x + 3.0 * x.ln()).collect();
        let fit = least_squares(&rows, &y).unwrap();
        for (got, want) in fit.coeffs.iter().zip([0.5, -2.0, 3.0]) {
            assert!((got - want).abs() < 1e-10);
        }
        assert!(fit.rms < 1e-12);
    }

    #[test]
    fn slope_stderr_matches_textbook_formula() {
        let xs: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let y: Vec<f64> = xs
            .iter()
            .enumerate()
            .map(|(i, x)| 1.0 + 2.0 * x + if i % 2 == 0 { 0.1 } else { -0.1 })
            .collect();
        let rows: Vec<Vec<f64>> = xs.iter().map(|x| vec![1.0, *x]).collect();
        let fit = least_squares(&rows, &y).unwrap();
        let mx = 4.5;
        let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
        let b = fit.coeffs[1];
        let a = fit.coeffs[0];
        let ss: f64 = xs
            .iter()
            .zip(&y)
            .map(|(x, y)| (y - a - b * x).powi(2))
            .sum();
        let want = (ss / 8.0 / sxx).sqrt();
        assert!((fit.stderr[1] - want).abs() < 1e-12 * want.max(1.0));
    }

    #[test]
    fn rejects_degenerate_designs() {
        let rows = vec![vec![1.0, 2.0], vec![1.0, 2.0], vec![1.0, 2.0]];
        assert!(least_squares(&rows, &[1.0, 2.0, 3.0]).is_err());
        assert!(least_squares(&rows[..2], &[1.0, 2.0]).is_err());
    }
}
