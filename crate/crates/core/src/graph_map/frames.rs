//! Singular value decomposition of `df` and the adapted frames of the graph.

use nalgebra::{DMatrix, DVector};

use super::pullback;
use crate::chart_manifold::sym_eigen;
use crate::error::{GeomError, Result};
use crate::product_space::SplitVector;

/// `lambda_i` counts toward the rank iff `lambda_i > RANK_TOL * (1 + lambda_max)`.
pub const RANK_TOL: f64 = 1e-8;

/// Acceptance threshold for the defining relations of the frames.
pub const FRAME_TOL: f64 = 1e-8;

/// Singular values of `df` and the frames built from them, at one point.
///
/// Index conventions are zero-based: `alpha_i` pairs with `beta_{n-m+i}` for
/// `i >= m - r`, and `xi_i` for `i >= n - r` pairs with `alpha_{i+m-n}`.
#[derive(Debug, Clone)]
pub struct GraphFrameData {
    /// Ascending singular values.
    pub lambdas: DVector<f64>,
    pub rank: usize,
    /// `g_M`-orthonormal eigenbasis of `f^* g_N`, one vector per column.
    pub alpha: DMatrix<f64>,
    /// `g_N`-orthonormal basis of the target tangent space, one vector per column.
    pub beta: DMatrix<f64>,
    /// `g`-orthonormal frame `e_i = alpha_i / sqrt(1 + lambda_i^2)`, one vector per column.
    pub e: DMatrix<f64>,
    /// Orthonormal tangent frame of the graph in `M x N`.
    pub e_tilde: Vec<SplitVector>,
    /// Orthonormal normal frame of the graph in `M x N`.
    pub xi: Vec<SplitVector>,
}

impl GraphFrameData {
    pub fn dims(&self) -> (usize, usize) {
        (self.alpha.nrows(), self.beta.nrows())
    }

    pub fn lambda_max(&self) -> f64 {
        self.lambdas.iter().copied().fold(0.0, f64::max)
    }

    /// `(1 - lambda_i^2) / (1 + lambda_i^2)`, the value of `s(e_i, e_i)`.
    pub fn s_eigenvalue(&self, i: usize) -> f64 {
        let l2 = self.lambdas[i] * self.lambdas[i];
        (1.0 - l2) / (1.0 + l2)
    }

    pub fn e_vec(&self, i: usize) -> DVector<f64> {
        self.e.column(i).into_owned()
    }

    /// Singular value paired with the normal `xi_i`, or `None` for kernel normals.
    pub fn xi_lambda(&self, i: usize) -> Option<f64> {
        let (m, n) = self.dims();
        (i >= n - self.rank).then(|| self.lambdas[i + m - n])
    }

    /// Residuals of every defining relation of the frames.
    pub fn residuals(&self, g_m: &DMatrix<f64>, g_n: &DMatrix<f64>, d1: &DMatrix<f64>) -> FrameResiduals {
        let (m, n) = self.dims();
        let r = self.rank;
        let gmn = |u: &SplitVector, v: &SplitVector| {
            u.m_part.dot(&(g_m * &v.m_part)) + u.n_part.dot(&(g_n * &v.n_part))
        };
        let smn = |u: &SplitVector, v: &SplitVector| {
            u.m_part.dot(&(g_m * &v.m_part)) - u.n_part.dot(&(g_n * &v.n_part))
        };
        let delta = |i: usize, j: usize| if i == j { 1.0 } else { 0.0 };
        let mut out = FrameResiduals::default();

        let ga = self.alpha.transpose() * g_m * &self.alpha;
        let gb = self.beta.transpose() * g_n * &self.beta;
        let g = g_m + pullback(d1, g_n);
        let ge = self.e.transpose() * &g * &self.e;
        for i in 0..m {
            for j in 0..m {
                let d = delta(i, j);
                out.orthonormality = out
                    .orthonormality
                    .max((ga[(i, j)] - d).abs())
                    .max((ge[(i, j)] - d).abs())
                    .max((gmn(&self.e_tilde[i], &self.e_tilde[j]) - d).abs());
                let s_expected = self.s_eigenvalue(i) * d;
                out.s_tangent = out
                    .s_tangent
                    .max((smn(&self.e_tilde[i], &self.e_tilde[j]) - s_expected).abs());
            }
            for k in 0..n {
                out.orthonormality = out
                    .orthonormality
                    .max(gmn(&self.e_tilde[i], &self.xi[k]).abs());
            }
        }
        for i in 0..n {
            for j in 0..n {
                let d = delta(i, j);
                out.orthonormality = out
                    .orthonormality
                    .max((gb[(i, j)] - d).abs())
                    .max((gmn(&self.xi[i], &self.xi[j]) - d).abs());
                let expected = match self.xi_lambda(i) {
                    None => -d,
                    Some(l) => -(1.0 - l * l) / (1.0 + l * l) * d,
                };
                out.s_normal = out.s_normal.max((smn(&self.xi[i], &self.xi[j]) - expected).abs());
            }
        }
        for i in 0..r {
            for j in 0..r {
                let l = self.lambdas[m - r + i];
                let expected = -2.0 * l / (1.0 + l * l) * delta(i, j);
                let got = smn(&self.e_tilde[m - r + i], &self.xi[n - r + j]);
                out.s_mixed = out.s_mixed.max((got - expected).abs());
            }
        }
        for i in 0..m {
            let a = self.alpha.column(i);
            let image = d1 * a;
            let expected = if i >= m - r {
                self.lambdas[i] * self.beta.column(i + n - m)
            } else {
                DVector::zeros(n)
            };
            out.svd = out.svd.max((image - expected).amax());
            // dF(e_i) = e_i (+) df(e_i) must reproduce e_tilde_i
            let e = self.e.column(i).into_owned();
            let df_e = SplitVector::new(e.clone(), d1 * &e);
            out.tangent_lift = out.tangent_lift.max(df_e.max_abs_diff(&self.e_tilde[i]));
        }
        out
    }
}

/// Largest residual per defining relation of [`GraphFrameData`].
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct FrameResiduals {
    pub orthonormality: f64,
    pub svd: f64,
    pub s_tangent: f64,
    pub s_normal: f64,
    pub s_mixed: f64,
    pub tangent_lift: f64,
}

impl FrameResiduals {
    pub fn max(&self) -> f64 {
        [
            self.orthonormality,
            self.svd,
            self.s_tangent,
            self.s_normal,
            self.s_mixed,
            self.tangent_lift,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }

    pub fn ensure(&self, tol: f64) -> Result<()> {
        let checks = [
            ("orthonormality", self.orthonormality),
            ("singular value decomposition", self.svd),
            ("s on tangent frame", self.s_tangent),
            ("s on normal frame", self.s_normal),
            ("s on mixed pairs", self.s_mixed),
            ("tangent lift", self.tangent_lift),
        ];
        for (check, residual) in checks {
            if !(residual <= tol) {
                return Err(GeomError::FrameConstruction {
                    check,
                    residual,
                    tolerance: tol,
                });
            }
        }
        Ok(())
    }
}

/// Builds `lambda`, `alpha`, `beta`, `e`, `e_tilde`, `xi` from `g_M`, `g_N(f(x))` and `df`.
pub fn adapted_frames(g_m: &DMatrix<f64>, g_n: &DMatrix<f64>, d1: &DMatrix<f64>) -> Result<GraphFrameData> {
    let (n, m) = d1.shape();
    if g_m.nrows() != m || g_n.nrows() != n {
        return Err(GeomError::DimensionMismatch {
            expected: m,
            got: g_m.nrows(),
            context: "frame metrics",
        });
    }
    let eig = sym_eigen(&pullback(d1, g_n), g_m)?;
    let mut lambdas = eig.values.map(|v| v.max(0.0).sqrt());
    let lmax = lambdas.iter().copied().fold(0.0, f64::max);
    let tol = RANK_TOL * (1.0 + lmax);
    let rank = lambdas.iter().filter(|&&l| l > tol).count().min(n);
    for i in 0..(m - rank) {
        lambdas[i] = 0.0;
    }
    let alpha = eig.vectors;

    let mut beta_cols: Vec<Option<DVector<f64>>> = vec![None; n];
    for i in (m - rank)..m {
        let image = d1 * alpha.column(i);
        beta_cols[i + n - m] = Some(image / lambdas[i]);
    }
    let g_norm = |v: &DVector<f64>| v.dot(&(g_n * v)).sqrt();
    let orthogonalize = |v: DVector<f64>, basis: &[DVector<f64>]| {
        let mut v = v;
        for _ in 0..2 {
            for b in basis {
                let proj = b.dot(&(g_n * &v));
                v -= proj * b;
            }
        }
        v
    };
    let mut built: Vec<DVector<f64>> = beta_cols.iter().flatten().cloned().collect();
    for slot in 0..n {
        if beta_cols[slot].is_some() {
            continue;
        }
        let best = (0..n)
            .map(|c| {
                let mut cand = DVector::zeros(n);
                cand[c] = 1.0 / g_n[(c, c)].sqrt();
                orthogonalize(cand, &built)
            })
            .max_by(|a, b| g_norm(a).total_cmp(&g_norm(b)))
            .expect("target dimension is positive");
        let norm = g_norm(&best);
        if !(norm > 1e-6) {
            return Err(GeomError::FrameConstruction {
                check: "beta completion",
                residual: norm,
                tolerance: 1e-6,
            });
        }
        let v = best / norm;
        built.push(v.clone());
        beta_cols[slot] = Some(v);
    }
    let beta = DMatrix::from_columns(&beta_cols.into_iter().map(|v| v.unwrap()).collect::<Vec<_>>());

    let e = DMatrix::from_fn(m, m, |r, i| alpha[(r, i)] / (1.0 + lambdas[i] * lambdas[i]).sqrt());
    let e_tilde = (0..m)
        .map(|i| {
            let w = (1.0 + lambdas[i] * lambdas[i]).sqrt();
            let n_part = if i >= m - rank {
                beta.column(i + n - m) * (lambdas[i] / w)
            } else {
                DVector::zeros(n)
            };
            SplitVector::new(alpha.column(i) / w, n_part)
        })
        .collect();
    let xi = (0..n)
        .map(|i| {
            if i < n - rank {
                SplitVector::from_n(m, beta.column(i).into_owned())
            } else {
                let j = i + m - n;
                let w = (1.0 + lambdas[j] * lambdas[j]).sqrt();
                SplitVector::new(alpha.column(j) * (-lambdas[j] / w), beta.column(i) / w)
            }
        })
        .collect();

    Ok(GraphFrameData {
        lambdas,
        rank,
        alpha,
        beta,
        e,
        e_tilde,
        xi,
    })
}
