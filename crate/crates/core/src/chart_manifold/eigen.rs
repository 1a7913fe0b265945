//! Symmetric and generalized symmetric eigenproblems.
//!
//! `phi v = lambda g v` is reduced by the congruence `C = L^{-1} phi L^{-T}`
//! with `g = L L^T`, and `C` is diagonalised by cyclic Jacobi rotations.

use nalgebra::{DMatrix, DVector};

use crate::error::{GeomError, Result};

/// Relative off-diagonal tolerance for the Jacobi iteration.
pub const JACOBI_TOL: f64 = 1e-12;
pub const JACOBI_MAX_SWEEPS: usize = 100;

/// Eigenvalues (ascending) and eigenvectors (columns) of a symmetric matrix.
pub fn jacobi_eigen(sym: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let n = sym.nrows();
    assert!(sym.is_square(), "jacobi_eigen needs a square matrix");
    let mut a = 0.5 * (sym + sym.transpose());
    let mut v = DMatrix::<f64>::identity(n, n);
    let scale = a.norm();

    for _ in 0..JACOBI_MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[(i, j)] * a[(i, j)])
            .sum::<f64>()
            .sqrt();
        if off <= JACOBI_TOL * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let tau = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                // A <- J^T A J, J = identity except J_pp = J_qq = c, J_pq = s, J_qp = -s
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].total_cmp(&a[(j, j)]));
    let values = DVector::from_iterator(n, order.iter().map(|&i| a[(i, i)]));
    let vectors = DMatrix::from_fn(n, n, |r, c| v[(r, order[c])]);
    (values, vectors)
}

/// Solution of `phi v = lambda g v`.
#[derive(Debug, Clone)]
pub struct GenEigen {
    /// Ascending eigenvalues.
    pub values: DVector<f64>,
    /// `g`-orthonormal eigenvectors, one per column.
    pub vectors: DMatrix<f64>,
}

impl GenEigen {
    pub fn vector(&self, i: usize) -> DVector<f64> {
        self.vectors.column(i).into_owned()
    }

    /// `sum_i lambda_i (g v_i)(g v_i)^T`, which equals `phi` for an exact solution.
    pub fn reconstruct(&self, g: &DMatrix<f64>) -> DMatrix<f64> {
        let gv = g * &self.vectors;
        let n = g.nrows();
        let mut out = DMatrix::zeros(n, n);
        for i in 0..n {
            let col = gv.column(i);
            out += self.values[i] * &col * col.transpose();
        }
        out
    }
}

/// Eigenvalues of the symmetric form `phi` relative to the positive-definite form `g`.
pub fn sym_eigen(phi: &DMatrix<f64>, g: &DMatrix<f64>) -> Result<GenEigen> {
    let n = g.nrows();
    if phi.nrows() != n || phi.ncols() != n || g.ncols() != n {
        return Err(GeomError::DimensionMismatch {
            expected: n,
            got: phi.nrows(),
            context: "sym_eigen operands",
        });
    }
    let chol = g
        .clone()
        .cholesky()
        .ok_or_else(|| GeomError::NotPositiveDefinite(format!("{g}")))?;
    let l = chol.l();
    let linv = l
        .clone()
        .solve_lower_triangular(&DMatrix::identity(n, n))
        .ok_or_else(|| GeomError::NotPositiveDefinite("singular Cholesky factor".into()))?;
    let reduced = &linv * phi * linv.transpose();
    let (values, q) = jacobi_eigen(&reduced);
    let vectors = linv.transpose() * q;
    Ok(GenEigen { values, vectors })
}
