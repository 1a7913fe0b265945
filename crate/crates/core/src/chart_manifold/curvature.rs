//! Coordinate formulas for the Levi-Civita connection and its curvature.
//!
//! Sign convention: `R(u, v, u, v) = sec(u ^ v) |u ^ v|^2`, so the Ricci form
//! `Ric(v, w) = g^{ik} R(e_i, v, e_k, w)` is positive on round spheres.

use nalgebra::{DMatrix, DVector};
use ndarray::{Array3, Array4};

use super::MetricJet;
use crate::error::{GeomError, Result};

/// Relative threshold on `|u ^ v|^2 / (|u|^2 |v|^2)` below which a plane is rejected.
pub const SECTIONAL_WEDGE_TOL: f64 = 1e-12;

/// Inverse of a symmetric positive-definite matrix.
pub fn spd_inverse(g: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    g.clone()
        .cholesky()
        .map(|c| c.inverse())
        .ok_or_else(|| GeomError::DegenerateMetric(format!("metric not invertible: {g}")))
}

/// Christoffel symbols of the first kind, `out[[l, i, j]] = Gamma_{l,ij}`.
pub fn christoffel_first_kind(jet: &MetricJet) -> Array3<f64> {
    let n = jet.dim();
    let dg = &jet.dg;
    Array3::from_shape_fn((n, n, n), |(l, i, j)| {
        0.5 * (dg[[j, l, i]] + dg[[i, l, j]] - dg[[i, j, l]])
    })
}

/// `gamma[[k, i, j]] = Gamma^k_ij`.
pub fn christoffel(jet: &MetricJet) -> Result<Array3<f64>> {
    let ginv = spd_inverse(&jet.g)?;
    Ok(raise_first(&ginv, &christoffel_first_kind(jet)))
}

fn raise_first(ginv: &DMatrix<f64>, lowered: &Array3<f64>) -> Array3<f64> {
    let n = ginv.nrows();
    Array3::from_shape_fn((n, n, n), |(k, i, j)| {
        (0..n).map(|l| ginv[(k, l)] * lowered[[l, i, j]]).sum()
    })
}

/// `out[[k, i, j, m]] = d_m Gamma^k_ij`, from the second metric jet.
pub fn christoffel_derivative(jet: &MetricJet) -> Result<Array4<f64>> {
    let n = jet.dim();
    let ginv = spd_inverse(&jet.g)?;
    let first = christoffel_first_kind(jet);
    let d2g = &jet.d2g;
    // d_m g^{kl} = -g^{ka} d_m g_ab g^{bl}
    let dginv: Vec<DMatrix<f64>> = (0..n)
        .map(|m| {
            let dgm = DMatrix::from_fn(n, n, |a, b| jet.dg[[a, b, m]]);
            -(&ginv * dgm * &ginv)
        })
        .collect();
    let mut out = Array4::zeros((n, n, n, n));
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                for m in 0..n {
                    let mut acc = 0.0;
                    for l in 0..n {
                        let d_first = 0.5
                            * (d2g[[j, l, i, m]] + d2g[[i, l, j, m]] - d2g[[i, j, l, m]]);
                        acc += dginv[m][(k, l)] * first[[l, i, j]] + ginv[(k, l)] * d_first;
                    }
                    out[[k, i, j, m]] = acc;
                }
            }
        }
    }
    Ok(out)
}

/// Fully covariant Riemann tensor `R_ijkl`.
pub fn riemann(jet: &MetricJet) -> Result<Array4<f64>> {
    let n = jet.dim();
    let ginv = spd_inverse(&jet.g)?;
    let first = christoffel_first_kind(jet);
    let gamma = raise_first(&ginv, &first);
    let d2g = &jet.d2g;
    Ok(Array4::from_shape_fn((n, n, n, n), |(i, j, k, l)| {
        let second = 0.5
            * (d2g[[i, l, j, k]] + d2g[[j, k, i, l]] - d2g[[j, l, i, k]] - d2g[[i, k, j, l]]);
        let quad: f64 = (0..n)
            .map(|p| gamma[[p, j, k]] * first[[p, i, l]] - gamma[[p, i, k]] * first[[p, j, l]])
            .sum();
        second + quad
    }))
}

/// `T(u, v, w, z)` for a covariant 4-tensor.
pub fn contract4(t: &Array4<f64>, u: &DVector<f64>, v: &DVector<f64>, w: &DVector<f64>, z: &DVector<f64>) -> f64 {
    let n = u.len();
    let mut acc = 0.0;
    for i in 0..n {
        if u[i] == 0.0 {
            continue;
        }
        for j in 0..n {
            if v[j] == 0.0 {
                continue;
            }
            for k in 0..n {
                for l in 0..n {
                    acc += t[[i, j, k, l]] * u[i] * v[j] * w[k] * z[l];
                }
            }
        }
    }
    acc
}

/// Sectional curvature of the plane spanned by `u`, `v`.
pub fn sectional(g: &DMatrix<f64>, riem: &Array4<f64>, u: &DVector<f64>, v: &DVector<f64>) -> Result<f64> {
    if g.nrows() < 2 {
        return Err(GeomError::DegeneratePlane {
            wedge_sq: 0.0,
            threshold: 0.0,
        });
    }
    let uu = u.dot(&(g * u));
    let vv = v.dot(&(g * v));
    let uv = u.dot(&(g * v));
    let wedge = uu * vv - uv * uv;
    let threshold = SECTIONAL_WEDGE_TOL * uu * vv;
    if !(wedge >= threshold) || wedge <= 0.0 {
        return Err(GeomError::DegeneratePlane {
            wedge_sq: wedge,
            threshold,
        });
    }
    Ok(contract4(riem, u, v, u, v) / wedge)
}

/// Ricci tensor as a bilinear form, as a `g`-self-adjoint operator, and its trace.
#[derive(Debug, Clone, PartialEq)]
pub struct Ricci {
    /// `Ric_jl = g^{ik} R_ijkl`.
    pub bilinear: DMatrix<f64>,
    /// `Ric^a_b = g^{ac} Ric_cb`; column `b` is `Ric(d_b)`.
    pub operator: DMatrix<f64>,
    pub scalar: f64,
}

pub fn ricci(g: &DMatrix<f64>, riem: &Array4<f64>) -> Result<Ricci> {
    let n = g.nrows();
    let ginv = spd_inverse(g)?;
    let bilinear = DMatrix::from_fn(n, n, |j, l| {
        let mut acc = 0.0;
        for i in 0..n {
            for k in 0..n {
                acc += ginv[(i, k)] * riem[[i, j, k, l]];
            }
        }
        acc
    });
    let operator = &ginv * &bilinear;
    let scalar = operator.trace();
    Ok(Ricci {
        bilinear,
        operator,
        scalar,
    })
}

/// Largest violation of the algebraic Riemann symmetries and the first Bianchi identity.
pub fn riemann_symmetry_defect(riem: &Array4<f64>) -> f64 {
    let n = riem.shape()[0];
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    let r = riem[[i, j, k, l]];
                    worst = worst
                        .max((r + riem[[j, i, k, l]]).abs())
                        .max((r + riem[[i, j, l, k]]).abs())
                        .max((r - riem[[k, l, i, j]]).abs())
                        .max((r + riem[[j, k, i, l]] + riem[[k, i, j, l]]).abs());
                }
            }
        }
    }
    worst
}
