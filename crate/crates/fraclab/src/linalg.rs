//! Dense linear-algebra support: tridiagonal SPD mass solves, the
//! generalized symmetric eigensolve via Cholesky reduction, a double-double
//! Jacobi eigensolver for severely ill-conditioned Gramians, and small
//! least-squares fit helpers.

use nalgebra::{DMatrix, DVector};

use crate::dd::Dd;
use crate::error::{Error, Result};

/// Symmetric positive-definite tridiagonal matrix (constant layout, not
/// necessarily constant entries).
#[derive(Clone, Debug)]
pub struct TridiagSpd {
    pub diag: Vec<f64>,
    pub off: Vec<f64>,
}

impl TridiagSpd {
    pub fn n(&self) -> usize {
        self.diag.len()
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let n = self.n();
        let mut y = vec![0.0; n];
        for i in 0..n {
            let mut v = self.diag[i] * x[i];
            if i > 0 {
                v += self.off[i - 1] * x[i - 1];
            }
            if i + 1 < n {
                v += self.off[i] * x[i + 1];
            }
            y[i] = v;
        }
        y
    }

    /// Cholesky factor `L` (lower bidiagonal): diagonal and subdiagonal.
    pub fn cholesky(&self) -> Result<BidiagLower> {
        let n = self.n();
        let mut ld = vec![0.0; n];
        let mut lo = vec![0.0; n.saturating_sub(1)];
        for i in 0..n {
            let mut d = self.diag[i];
            if i > 0 {
                d -= lo[i - 1] * lo[i - 1];
            }
            if d <= 0.0 {
                return Err(Error::Eigen(format!(
                    "mass matrix not positive definite at row {i} (pivot {d:.3e})"
                )));
            }
            ld[i] = d.sqrt();
            if i + 1 < n {
                lo[i] = self.off[i] / ld[i];
            }
        }
        Ok(BidiagLower { diag: ld, sub: lo })
    }

    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let l = self.cholesky()?;
        let mut y = rhs.to_vec();
        l.forward_solve(&mut y);
        l.backward_solve(&mut y);
        Ok(y)
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.n();
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = self.diag[i];
            if i + 1 < n {
                m[(i, i + 1)] = self.off[i];
                m[(i + 1, i)] = self.off[i];
            }
        }
        m
    }
}

/// Lower bidiagonal Cholesky factor of a [`TridiagSpd`].
#[derive(Clone, Debug)]
pub struct BidiagLower {
    pub diag: Vec<f64>,
    pub sub: Vec<f64>,
}

impl BidiagLower {
    /// In-place solve of `L x = b`.
    pub fn forward_solve(&self, b: &mut [f64]) {
        let n = self.diag.len();
        b[0] /= self.diag[0];
        for i in 1..n {
            b[i] = (b[i] - self.sub[i - 1] * b[i - 1]) / self.diag[i];
        }
    }

    /// In-place solve of `L^T x = b`.
    pub fn backward_solve(&self, b: &mut [f64]) {
        let n = self.diag.len();
        b[n - 1] /= self.diag[n - 1];
        for i in (0..n - 1).rev() {
            b[i] = (b[i] - self.sub[i] * b[i + 1]) / self.diag[i];
        }
    }
}

/// Ascending eigenpairs of the symmetric-definite pencil `(A, B)` with `B`
/// tridiagonal SPD, via Cholesky reduction to standard form.
///
/// Returns the first `m` eigenvalues and `B`-orthonormal eigenvectors.
pub fn generalized_symmetric_eigen(
    a: &DMatrix<f64>,
    b: &TridiagSpd,
    m: usize,
) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let n = a.nrows();
    if a.ncols() != n || b.n() != n {
        return Err(Error::Eigen("dimension mismatch in pencil".into()));
    }
    if m > n {
        return Err(Error::Eigen(format!("requested {m} modes from an {n}-dim pencil")));
    }
    let l = b.cholesky()?;
    // C = L^{-1} A L^{-T}, built column-by-column
    let mut c = a.clone();
    for j in 0..n {
        let mut col: Vec<f64> = c.column(j).iter().copied().collect();
        l.forward_solve(&mut col);
        c.set_column(j, &DVector::from_vec(col));
    }
    c.transpose_mut();
    for j in 0..n {
        let mut col: Vec<f64> = c.column(j).iter().copied().collect();
        l.forward_solve(&mut col);
        c.set_column(j, &DVector::from_vec(col));
    }
    // symmetrize against roundoff before factorizing
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (c[(i, j)] + c[(j, i)]);
            c[(i, j)] = v;
            c[(j, i)] = v;
        }
    }
    let eig = nalgebra::linalg::SymmetricEigen::new(c);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].partial_cmp(&eig.eigenvalues[j]).unwrap());
    let mut values = Vec::with_capacity(m);
    let mut vectors = DMatrix::zeros(n, m);
    for (k, &idx) in order.iter().take(m).enumerate() {
        values.push(eig.eigenvalues[idx]);
        let mut col: Vec<f64> = eig.eigenvectors.column(idx).iter().copied().collect();
        l.backward_solve(&mut col);
        vectors.set_column(k, &DVector::from_vec(col));
    }
    Ok((values, vectors))
}

/// Eigendecomposition of a symmetric f64 matrix in double-double arithmetic
/// (cyclic Jacobi). Resolves spectra with condition numbers up to ~1e28.
///
/// Returns eigenvalues ascending and the matching eigenvector columns.
pub fn jacobi_eigen_dd(g: &DMatrix<f64>) -> (Vec<Dd>, Vec<Vec<Dd>>) {
    let n = g.nrows();
    assert_eq!(n, g.ncols());
    let mut a: Vec<Vec<Dd>> = (0..n)
        .map(|i| (0..n).map(|j| Dd::from_f64(0.5 * (g[(i, j)] + g[(j, i)]))).collect())
        .collect();
    let mut v: Vec<Vec<Dd>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| if i == j { Dd::ONE } else { Dd::ZERO })
                .collect()
        })
        .collect();
    let norm: f64 = (0..n).map(|i| a[i][i].hi.abs()).fold(0.0, f64::max).max(1e-300);
    let half = Dd::from_f64(0.5);
    for _sweep in 0..64 {
        let mut off = 0.0f64;
        for p in 0..n {
            for q in (p + 1)..n {
                off = off.max(a[p][q].hi.abs());
            }
        }
        if off <= 1e-30 * norm {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p][q];
                if apq.hi.abs() <= 1e-32 * norm {
                    continue;
                }
                let theta = half * (a[q][q] - a[p][p]) / apq;
                // t = sgn(theta) / (|theta| + sqrt(1 + theta^2))
                let t_abs = (theta.abs() + (Dd::ONE + theta * theta).sqrt()).recip();
                let t = if theta.hi < 0.0 { -t_abs } else { t_abs };
                let c = (Dd::ONE + t * t).sqrt().recip();
                let s = t * c;
                let tau = s / (Dd::ONE + c);
                let app = a[p][p];
                let aqq = a[q][q];
                a[p][p] = app - t * apq;
                a[q][q] = aqq + t * apq;
                a[p][q] = Dd::ZERO;
                a[q][p] = Dd::ZERO;
                for i in 0..n {
                    if i != p && i != q {
                        let aip = a[i][p];
                        let aiq = a[i][q];
                        let new_ip = aip - s * (aiq + tau * aip);
                        let new_iq = aiq + s * (aip - tau * aiq);
                        a[i][p] = new_ip;
                        a[p][i] = new_ip;
                        a[i][q] = new_iq;
                        a[q][i] = new_iq;
                    }
                }
                for row in v.iter_mut() {
                    let vip = row[p];
                    let viq = row[q];
                    row[p] = vip - s * (viq + tau * vip);
                    row[q] = viq + s * (vip - tau * viq);
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[i][i].partial_cmp(&a[j][j]).unwrap());
    let values: Vec<Dd> = order.iter().map(|&i| a[i][i]).collect();
    let vectors: Vec<Vec<Dd>> = order
        .iter()
        .map(|&k| (0..n).map(|i| v[i][k]).collect())
        .collect();
    (values, vectors)
}

/// Affine least-squares fit `y ≈ slope·x + intercept` with its R².
#[derive(Clone, Copy, Debug, serde::Serialize)]
pub struct AffineFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

pub fn fit_affine(x: &[f64], y: &[f64]) -> AffineFit {
    assert_eq!(x.len(), y.len());
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(u, v)| (u - mx) * (v - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = x
        .iter()
        .zip(y)
        .map(|(u, v)| {
            let p = slope * u + intercept;
            (v - p) * (v - p)
        })
        .sum();
    let ss_tot: f64 = y.iter().map(|v| (v - my) * (v - my)).sum();
    let r_squared = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };
    AffineFit { slope, intercept, r_squared }
}

/// Log-spaced grid with `count` points from `lo` to `hi` inclusive.
pub fn geomspace(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi > lo && count >= 2);
    let step = (hi / lo).ln() / (count - 1) as f64;
    (0..count).map(|i| lo * (step * i as f64).exp()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tridiag_solve_roundtrip() {
        let b = TridiagSpd {
            diag: vec![2.0; 6],
            off: vec![0.5; 5],
        };
        let x = vec![1.0, -2.0, 3.0, 0.0, 1.5, -1.0];
        let y = b.matvec(&x);
        let x2 = b.solve(&y).unwrap();
        for (u, v) in x.iter().zip(&x2) {
            assert!((u - v).abs() < 1e-13);
        }
    }

    #[test]
    fn generalized_eigen_identity_mass_matches_standard() {
        let n = 12;
        let mut a = DMatrix::zeros(n, n);
        for i in 0..n {
            a[(i, i)] = 2.0;
            if i + 1 < n {
                a[(i, i + 1)] = -1.0;
                a[(i + 1, i)] = -1.0;
            }
        }
        let b = TridiagSpd {
            diag: vec![1.0; n],
            off: vec![0.0; n - 1],
        };
        let (vals, vecs) = generalized_symmetric_eigen(&a, &b, n).unwrap();
        // 1-d Dirichlet Laplacian stencil eigenvalues: 2 - 2 cos(k pi/(n+1))
        for (k, &lam) in vals.iter().enumerate() {
            let exact = 2.0 - 2.0 * ((k + 1) as f64 * std::f64::consts::PI / (n as f64 + 1.0)).cos();
            assert!((lam - exact).abs() < 1e-12, "k={k} lam={lam} exact={exact}");
        }
        // residual check
        for k in 0..n {
            let v = vecs.column(k);
            let r = &a * v - vals[k] * v.clone_owned();
            assert!(r.norm() < 1e-11);
        }
    }

    #[test]
    fn jacobi_dd_on_hilbert_matrix() {
        // Hilbert 8x8: cond ~ 1e10; dd Jacobi must recover A = V S V^T to ~1e-25
        let n = 8;
        let h = DMatrix::from_fn(n, n, |i, j| 1.0 / ((i + j + 1) as f64));
        let (vals, vecs) = jacobi_eigen_dd(&h);
        for k in 0..n {
            for i in 0..n {
                let mut acc = Dd::ZERO;
                for j in 0..n {
                    acc = acc + Dd::from_f64(h[(i, j)]) * vecs[k][j];
                }
                let r = (acc - vals[k] * vecs[k][i]).to_f64().abs();
                assert!(r < 1e-24, "k={k} i={i} r={r:.3e}");
            }
        }
        assert!(vals.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn affine_fit_recovers_line() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y = [3.0, 5.0, 7.0, 9.0];
        let f = fit_affine(&x, &y);
        assert!((f.slope - 2.0).abs() < 1e-14 && (f.intercept - 1.0).abs() < 1e-13);
        assert!((f.r_squared - 1.0).abs() < 1e-14);
    }
}
