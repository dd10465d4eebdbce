//! Test-only reference computations, written independently of the production
//! curvature and volume code.

/// Independent Koszul-formula curvature from the Lie bracket of the
/// coordinate frame `e_i`, converted to the orthonormal frame by hand.
/// Returns (Ric(f_i, f_j), sectional K(f_i, f_j), Γ_ijk).
#[allow(clippy::type_complexity)]
pub(crate) fn koszul_oracle(
    lambda: [f64; 3],
    coeffs: [f64; 3],
) -> ([[f64; 3]; 3], [[f64; 3]; 3], [[[f64; 3]; 3]; 3]) {
    // [e_i, e_j] = Σ_k s[i][j][k] e_k
    let mut s = [[[0.0; 3]; 3]; 3];
    s[1][2][0] = lambda[0];
    s[2][1][0] = -lambda[0];
    s[2][0][1] = lambda[1];
    s[0][2][1] = -lambda[1];
    s[0][1][2] = lambda[2];
    s[1][0][2] = -lambda[2];
    // f_i = e_i / sqrt(g_i): [f_i, f_j] = Σ_k s_ijk sqrt(g_k)/(sqrt(g_i) sqrt(g_j)) f_k
    let r: Vec<f64> = coeffs.iter().map(|g| g.sqrt()).collect();
    let mut c = [[[0.0; 3]; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            for k in 0..3 {
                c[i][j][k] = s[i][j][k] * r[k] / (r[i] * r[j]);
            }
        }
    }
    // Koszul: <∇_X Y, Z> = ½(<[X,Y],Z> − <[Y,Z],X> + <[Z,X],Y>)
    let mut gam = [[[0.0; 3]; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            for k in 0..3 {
                gam[i][j][k] = 0.5 * (c[i][j][k] - c[j][k][i] + c[k][i][j]);
            }
        }
    }
    // R(f_i,f_j)f_k = ∇_i∇_j f_k − ∇_j∇_i f_k − ∇_[f_i,f_j] f_k
    let mut riem = [[[[0.0; 3]; 3]; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            for k in 0..3 {
                for m in 0..3 {
                    let mut v = 0.0;
                    for l in 0..3 {
                        v += gam[j][k][l] * gam[i][l][m]
                            - gam[i][k][l] * gam[j][l][m]
                            - c[i][j][l] * gam[l][k][m];
                    }
                    riem[i][j][k][m] = v;
                }
            }
        }
    }
    let mut ric = [[0.0; 3]; 3];
    let mut sec = [[0.0; 3]; 3];
    for j in 0..3 {
        for k in 0..3 {
            ric[j][k] = (0..3).map(|i| riem[i][j][k][i]).sum();
            sec[j][k] = riem[j][k][k][j];
        }
    }
    (ric, sec, gam)
}

/// Full Riemann tensor `<R(f_i, f_j) f_k, f_m>` in the orthonormal frame, from
/// the Koszul connection.
pub(crate) fn koszul_riemann(lambda: [f64; 3], coeffs: [f64; 3]) -> [[[[f64; 3]; 3]; 3]; 3] {
    let (_, _, gam) = koszul_oracle(lambda, coeffs);
    let mut c = [[[0.0; 3]; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            for k in 0..3 {
                c[i][j][k] = gam[i][j][k] - gam[j][i][k];
            }
        }
    }
    let mut riem = [[[[0.0; 3]; 3]; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            for k in 0..3 {
                for m in 0..3 {
                    riem[i][j][k][m] = (0..3)
                        .map(|l| {
                            gam[j][k][l] * gam[i][l][m]
                                - gam[i][k][l] * gam[j][l][m]
                                - c[i][j][l] * gam[l][k][m]
                        })
                        .sum();
                }
            }
        }
    }
    riem
}
