//! Rough Laplacian of symmetric 2-tensor fields with respect to the induced
//! metric, the elliptic equation for `Phi_c`, and the log-Jacobian equation.

use nalgebra::{DMatrix, DVector};
use ndarray::{Array3, Array4};

use super::decomposition::psi_c_matrix;
use crate::chart_manifold::{curvature, ChartPoint, MetricJet};
use crate::error::{GeomError, Result};
use crate::extrinsic::MINIMAL_TOL;
use crate::fd::central_jet;
use crate::geometry::PointGeometry;
use crate::graph_map::{phi_shift, pullback_jet, SmoothMap};

/// How chart derivatives of a tensor field are obtained.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LaplacianScheme {
    /// Second-order central differences of the pointwise field at step `h`.
    Central { h: f64 },
    /// Central differences at `h` and `h/2` combined to cancel the `h^2` term.
    Richardson { h: f64 },
    /// Chart derivatives from the exact jets of the map and both metrics.
    ExactJet,
}

impl LaplacianScheme {
    pub fn step(&self) -> Option<f64> {
        match *self {
            LaplacianScheme::Central { h } | LaplacianScheme::Richardson { h } => Some(h),
            LaplacianScheme::ExactJet => None,
        }
    }
}

/// Value and first two chart derivatives of a symmetric 2-tensor field.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorJet {
    pub value: DMatrix<f64>,
    /// `d1[k] = d_k T`.
    pub d1: Vec<DMatrix<f64>>,
    /// `d2[k][l] = d_k d_l T`.
    pub d2: Vec<Vec<DMatrix<f64>>>,
}

impl TensorJet {
    /// Central-difference jet of a matrix-valued field.
    pub fn central<F>(field: F, x: &[f64], h: f64) -> Result<Self>
    where
        F: Fn(&[f64]) -> Result<DMatrix<f64>>,
    {
        let m = x.len();
        let value = field(x)?;
        let (r, c) = value.shape();
        let j = central_jet(|y| Ok(field(y)?.as_slice().to_vec()), x, h)?;
        let mat = |v: &[f64]| DMatrix::from_column_slice(r, c, v);
        Ok(Self {
            value,
            d1: (0..m).map(|k| mat(&j.grad[k])).collect(),
            d2: (0..m).map(|k| (0..m).map(|l| mat(&j.hess[k][l])).collect()).collect(),
        })
    }

    /// `(2^p fine - coarse) / (2^p - 1)` on the derivatives, with `p = 2`.
    pub fn richardson(coarse: &Self, fine: &Self) -> Self {
        let comb = |a: &DMatrix<f64>, b: &DMatrix<f64>| (b * 4.0 - a) / 3.0;
        Self {
            value: fine.value.clone(),
            d1: coarse.d1.iter().zip(&fine.d1).map(|(a, b)| comb(a, b)).collect(),
            d2: coarse
                .d2
                .iter()
                .zip(&fine.d2)
                .map(|(ra, rb)| ra.iter().zip(rb).map(|(a, b)| comb(a, b)).collect())
                .collect(),
        }
    }
}

/// `g^{kl} (nabla^2_{kl} T)_ij` for a covariant 2-tensor `T` given its chart jet,
/// the Christoffel symbols `gamma[[p, i, j]]` and their derivatives `dgamma[[p, i, j, k]] = d_k Gamma^p_ij`.
pub fn rough_laplacian(t: &TensorJet, g_inv: &DMatrix<f64>, gamma: &Array3<f64>, dgamma: &Array4<f64>) -> DMatrix<f64> {
    let m = t.value.nrows();
    // first covariant derivative: n1[[l, i, j]] = (nabla_l T)_ij
    let n1 = Array3::from_shape_fn((m, m, m), |(l, i, j)| {
        let mut v = t.d1[l][(i, j)];
        for p in 0..m {
            v -= gamma[[p, l, i]] * t.value[(p, j)] + gamma[[p, l, j]] * t.value[(i, p)];
        }
        v
    });
    // d_k of n1, by the product rule on the exact expression above
    let dn1 = |k: usize, l: usize, i: usize, j: usize| {
        let mut v = t.d2[k][l][(i, j)];
        for p in 0..m {
            v -= dgamma[[p, l, i, k]] * t.value[(p, j)] + gamma[[p, l, i]] * t.d1[k][(p, j)];
            v -= dgamma[[p, l, j, k]] * t.value[(i, p)] + gamma[[p, l, j]] * t.d1[k][(i, p)];
        }
        v
    };
    let mut out = DMatrix::zeros(m, m);
    for i in 0..m {
        for j in i..m {
            let mut sum = 0.0;
            for k in 0..m {
                for l in 0..m {
                    let w = g_inv[(k, l)];
                    if w == 0.0 {
                        continue;
                    }
                    let mut v = dn1(k, l, i, j);
                    for p in 0..m {
                        v -= gamma[[p, k, l]] * n1[[p, i, j]] + gamma[[p, k, i]] * n1[[l, p, j]] + gamma[[p, k, j]] * n1[[l, i, p]];
                    }
                    sum += w * v;
                }
            }
            out[(i, j)] = sum;
            out[(j, i)] = sum;
        }
    }
    out
}

/// Chart jet of `Phi_c` under `scheme`.
pub fn phi_c_jet(f: &SmoothMap, geo: &PointGeometry, c: f64, scheme: LaplacianScheme) -> Result<TensorJet> {
    let field = |y: &[f64]| f.phi_c_at(&f.domain().point(y)?, c);
    let x = geo.x.as_slice();
    match scheme {
        LaplacianScheme::Central { h } => TensorJet::central(field, x, h),
        LaplacianScheme::Richardson { h } => Ok(TensorJet::richardson(
            &TensorJet::central(field, x, h)?,
            &TensorJet::central(field, x, h / 2.0)?,
        )),
        LaplacianScheme::ExactJet => {
            // Phi_c = (1 - a) g - 2 f^*g_N
            let a = phi_shift(c)?;
            let target = f.target().metric_jet(&geo.y)?;
            let pb = pullback_jet(&geo.jet, &target);
            let d2p = pb.d2p.ok_or_else(|| GeomError::Capability {
                map: f.name().to_string(),
                available: f.order(),
                required: 3,
            })?;
            let m = geo.dims().0;
            let g = &geo.induced;
            let d1 = (0..m)
                .map(|k| DMatrix::from_fn(m, m, |i, j| (1.0 - a) * g.dg[[i, j, k]] - 2.0 * pb.dp[[i, j, k]]))
                .collect();
            let d2 = (0..m)
                .map(|k| {
                    (0..m)
                        .map(|l| DMatrix::from_fn(m, m, |i, j| (1.0 - a) * g.d2g[[i, j, k, l]] - 2.0 * d2p[[i, j, k, l]]))
                        .collect()
                })
                .collect();
            Ok(TensorJet {
                value: geo.phi_c(c)?,
                d1,
                d2,
            })
        }
    }
}

/// `Delta_g T` in chart components for the tensor jet `t` at the point of `geo`.
pub fn rough_laplacian_of(geo: &PointGeometry, t: &TensorJet) -> Result<DMatrix<f64>> {
    Ok(rough_laplacian(t, &geo.g_inv, &geo.gamma_g, geo.dgamma_g()?))
}

/// `max_ij |(Delta Phi_c + Psi_c(Phi_c))(e_i, e_j)|` in the adapted frame.
pub fn elliptic_residual(f: &SmoothMap, geo: &PointGeometry, c: f64, scheme: LaplacianScheme) -> Result<f64> {
    let jet = phi_c_jet(f, geo, c, scheme)?;
    let lap = rough_laplacian_of(geo, &jet)?;
    let psi = psi_c_matrix(geo, c, &jet.value)?;
    let e = &geo.frames.e;
    Ok((e.transpose() * (lap + psi) * e).amax())
}

/// Elliptic residual with the minimality precondition enforced.
pub fn delta_phi_residual(f: &SmoothMap, p: &ChartPoint, c: f64, scheme: LaplacianScheme) -> Result<f64> {
    let geo = PointGeometry::compute(f, p)?;
    if !(geo.extrinsic.h_norm < MINIMAL_TOL) {
        return Err(GeomError::Precondition(format!(
            "non-minimal: |H| = {:.3e} at {:?}",
            geo.extrinsic.h_norm,
            p.as_slice()
        )));
    }
    elliptic_residual(f, &geo, c, scheme)
}

/// Both sides of the log-Jacobian equation for `dim M = dim N = 2`.
#[derive(Debug, Clone, PartialEq)]
pub struct LogJacobian {
    /// `1 / sqrt((1 + lambda_1^2)(1 + lambda_2^2))`.
    pub v_singular: f64,
    /// `sqrt(det g_M / det g)`.
    pub v_det: f64,
    pub lhs: f64,
    pub rhs: f64,
    /// `A^gamma_ij = g_{MxN}(A(e_i, e_j), xi_gamma)`, indexed `[gamma][i][j]`.
    pub a_normal: [[[f64; 2]; 2]; 2],
}

impl LogJacobian {
    pub fn residual(&self) -> f64 {
        (self.lhs - self.rhs).abs()
    }
}

/// `(|A^2_11 + A^2_22|, |A^1_22 + A^1_11|)` (one-based normal labels).
pub fn minimality_relations(lj: &LogJacobian) -> (f64, f64) {
    let a = &lj.a_normal;
    ((a[1][0][0] + a[1][1][1]).abs(), (a[0][1][1] + a[0][0][0]).abs())
}

fn half_log_det_ratio(f: &SmoothMap, y: &[f64]) -> Result<f64> {
    let p = f.domain().point(y)?;
    let g_m = f.domain().metric_at(&p)?;
    let g = f.induced_metric_at(&p)?;
    Ok(0.5 * (g_m.determinant().ln() - g.determinant().ln()))
}

/// `Delta_g ln v` and the curvature/second-fundamental-form expression it equals.
pub fn log_jacobian(f: &SmoothMap, geo: &PointGeometry, scheme: LaplacianScheme) -> Result<LogJacobian> {
    let (m, n) = geo.dims();
    if m != 2 || n != 2 {
        return Err(GeomError::DimensionMismatch {
            expected: 2,
            got: if m != 2 { m } else { n },
            context: "log-Jacobian equation needs dim M = dim N = 2",
        });
    }
    let l = &geo.frames.lambdas;
    let (l1, l2) = (l[0], l[1]);
    let v_singular = 1.0 / ((1.0 + l1 * l1) * (1.0 + l2 * l2)).sqrt();
    let v_det = (geo.g_m().determinant() / geo.g().determinant()).sqrt();

    // u = ln v; Delta u = g^{kl} (d_k d_l u - Gamma^p_kl d_p u)
    let x = geo.x.as_slice();
    let (grad, hess) = match scheme {
        LaplacianScheme::Central { h } => {
            let j = central_jet(|y| Ok(vec![half_log_det_ratio(f, y)?]), x, h)?;
            stencil_to_arrays(&j.grad, &j.hess)
        }
        LaplacianScheme::Richardson { h } => {
            let a = central_jet(|y| Ok(vec![half_log_det_ratio(f, y)?]), x, h)?;
            let b = central_jet(|y| Ok(vec![half_log_det_ratio(f, y)?]), x, h / 2.0)?;
            let (ga, ha) = stencil_to_arrays(&a.grad, &a.hess);
            let (gb, hb) = stencil_to_arrays(&b.grad, &b.hess);
            ((gb * 4.0 - ga) / 3.0, (hb * 4.0 - ha) / 3.0)
        }
        LaplacianScheme::ExactJet => {
            let base = f.domain().metric_jet(&geo.x)?;
            let gmi = curvature::spd_inverse(&base.g)?;
            // d ln det G = tr(G^-1 dG); dd ln det G = tr(G^-1 ddG) - tr(G^-1 dG G^-1 dG)
            let ld = |inv: &DMatrix<f64>, jet: &MetricJet| {
                let dk = |k: usize| DMatrix::from_fn(m, m, |i, j| jet.dg[[i, j, k]]);
                let grad = DVector::from_fn(m, |k, _| (inv * dk(k)).trace());
                let hess = DMatrix::from_fn(m, m, |k, l| {
                    let dkl = DMatrix::from_fn(m, m, |i, j| jet.d2g[[i, j, k, l]]);
                    (inv * dkl).trace() - (inv * dk(l) * inv * dk(k)).trace()
                });
                (grad, hess)
            };
            let (gb, hb) = ld(&gmi, &base);
            let (gg, hg) = ld(&geo.g_inv, &geo.induced);
            ((gb - gg) * 0.5, (hb - hg) * 0.5)
        }
    };
    let mut lhs = 0.0;
    for k in 0..m {
        for q in 0..m {
            let mut v = hess[(k, q)];
            for p in 0..m {
                v -= geo.gamma_g[[p, k, q]] * grad[p];
            }
            lhs += geo.g_inv[(k, q)] * v;
        }
    }

    let mut a_normal = [[[0.0; 2]; 2]; 2];
    for (gam, xi) in geo.frames.xi.iter().enumerate() {
        for i in 0..2 {
            for j in 0..2 {
                a_normal[gam][i][j] = geo.gmn(&geo.extrinsic.a[i][j], xi);
            }
        }
    }
    let a = &a_normal;
    let sec_m = geo.sec_m(&geo.e(0), &geo.e(1))?;
    let sec_n = if geo.frames.rank == 2 {
        geo.sec_n_on_image(&geo.e(0), &geo.e(1))?
    } else {
        0.0
    };
    let (q1, q2) = (l1 * l1, l2 * l2);
    let rhs = -geo.extrinsic.a_norm_sq
        - q1 * (a[0][0][0].powi(2) + a[0][0][1].powi(2))
        - q2 * (a[1][0][1].powi(2) + a[1][1][1].powi(2))
        - 2.0 * l1 * l2 * (a[1][0][0] * a[0][1][0] + a[1][0][1] * a[0][1][1])
        - ((q1 + q2) * sec_m - 2.0 * q1 * q2 * sec_n) / ((1.0 + q1) * (1.0 + q2));
    Ok(LogJacobian {
        v_singular,
        v_det,
        lhs,
        rhs,
        a_normal,
    })
}

fn stencil_to_arrays(grad: &[Vec<f64>], hess: &[Vec<Vec<f64>>]) -> (DVector<f64>, DMatrix<f64>) {
    let m = grad.len();
    (
        DVector::from_fn(m, |k, _| grad[k][0]),
        DMatrix::from_fn(m, m, |k, l| hess[k][l][0]),
    )
}

/// `|Delta ln v - RHS|` with the minimality precondition enforced.
pub fn log_jacobian_residual_2d(f: &SmoothMap, p: &ChartPoint, scheme: LaplacianScheme) -> Result<f64> {
    let geo = PointGeometry::compute(f, p)?;
    if !(geo.extrinsic.h_norm < MINIMAL_TOL) {
        return Err(GeomError::Precondition(format!(
            "non-minimal: |H| = {:.3e}",
            geo.extrinsic.h_norm
        )));
    }
    Ok(log_jacobian(f, &geo, scheme)?.residual())
}
