//! Pointwise probes of the maximum-principle ingredients: the null-eigenvector
//! condition for `Psi_c` and the second derivative criterion at a grid maximum.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::decomposition::psi_c_apply;
use super::laplacian::{phi_c_jet, rough_laplacian_of, LaplacianScheme, TensorJet};
use crate::chart_manifold::sym_eigen;
use crate::error::{GeomError, Result};
use crate::geometry::PointGeometry;
use crate::graph_map::{phi_shift, SmoothMap};
use crate::sampling::Grid;

/// Which half of the rigidity argument a probe exercises.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProbeBranch {
    /// `lambda_0^2 < 1`; only curvature pinching is needed.
    StrictlyLengthDecreasing,
    /// `lambda_0^2 >= 1`; needs the trace, `kappa` and second fundamental form bounds too.
    Expanding,
}

impl ProbeBranch {
    pub fn for_lambda0_sq(lambda0_sq: f64) -> Self {
        if lambda0_sq < 1.0 {
            ProbeBranch::StrictlyLengthDecreasing
        } else {
            ProbeBranch::Expanding
        }
    }
}

/// `theta = P^T S P` with `S = B B^T` random and `P = I - v v^T g` the
/// `g`-orthogonal projector killing the `g`-unit vector `v`.
pub fn psd_with_null_vector<R: Rng>(g: &DMatrix<f64>, v: &DVector<f64>, rng: &mut R) -> DMatrix<f64> {
    let m = g.nrows();
    let b = DMatrix::from_fn(m, m, |_, _| rng.random_range(-1.0..1.0));
    let s = &b * b.transpose();
    let p = DMatrix::identity(m, m) - v * (v.transpose() * g);
    let theta = p.transpose() * s * p;
    0.5 * (&theta + theta.transpose())
}

/// Outcome of the null-eigenvector probe at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NullProbe {
    pub draws: usize,
    pub failures: usize,
    /// Smallest `Psi_c(theta)(v, v)` seen.
    pub min_value: f64,
    /// Largest `|Psi_c(theta)(v, v) - reduced form|`; the Ricci terms drop out when `theta v = 0`.
    pub reduction_gap: f64,
    /// Largest `|theta v|`.
    pub null_defect: f64,
}

/// Draws `draws` pairs `(v, theta)` and evaluates `Psi_c(theta)(v, v) >= -tol`.
pub fn null_eigenvector_probe(geo: &PointGeometry, c: f64, draws: usize, seed: u64, tol: f64) -> Result<NullProbe> {
    let (m, _) = geo.dims();
    let g = geo.g();
    let a = phi_shift(c)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let e: Vec<DVector<f64>> = (0..m).map(|k| geo.e(k)).collect();
    let mut out = NullProbe {
        draws,
        failures: 0,
        min_value: f64::INFINITY,
        reduction_gap: 0.0,
        null_defect: 0.0,
    };
    for _ in 0..draws {
        let mut v = DVector::from_fn(m, |_, _| rng.random_range(-1.0..1.0));
        let norm = v.dot(&(g * &v)).sqrt();
        if !(norm > 1e-6) {
            v = e[m - 1].clone();
        } else {
            v /= norm;
        }
        let theta = psd_with_null_vector(g, &v, &mut rng);
        let value = psi_c_apply(geo, c, &theta, &v, &v)?;
        let mut reduced = 0.0;
        for ek in &e {
            let x = geo.a(ek, &v);
            reduced -= 2.0 * (geo.smn(&x, &x) - a * geo.gmn(&x, &x));
            reduced -= 4.0 / (1.0 + c) * (geo.pulled_riem_n(ek, &v, ek, &v) - c * geo.riem_m(ek, &v, ek, &v));
        }
        out.min_value = out.min_value.min(value);
        out.reduction_gap = out.reduction_gap.max((value - reduced).abs());
        out.null_defect = out.null_defect.max((&theta * &v).amax());
        if value < -tol {
            out.failures += 1;
        }
    }
    Ok(out)
}

/// Result of the second derivative criterion at the grid maximum of the top eigenvalue of `Phi_c`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "outcome", rename_all = "kebab-case")]
pub enum SdcOutcome {
    Checked {
        /// `max_k |(nabla_k Phi_c)(v, v)|`.
        gradient: f64,
        gradient_tol: f64,
        /// `(Delta Phi_c)(v, v)`.
        laplacian: f64,
        laplacian_tol: f64,
        pass: bool,
    },
    Inconclusive {
        reason: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SdcReport {
    pub c: f64,
    pub argmax: Vec<f64>,
    pub top_eigenvalue: f64,
    pub outcome: SdcOutcome,
}

/// First covariant derivative `out[l][(i, j)] = (nabla_l T)_ij`.
fn covariant_derivative(t: &TensorJet, geo: &PointGeometry) -> Vec<DMatrix<f64>> {
    let m = t.value.nrows();
    let gamma = &geo.gamma_g;
    (0..m)
        .map(|l| {
            DMatrix::from_fn(m, m, |i, j| {
                let mut v = t.d1[l][(i, j)];
                for p in 0..m {
                    v -= gamma[[p, l, i]] * t.value[(p, j)] + gamma[[p, l, j]] * t.value[(i, p)];
                }
                v
            })
        })
        .collect()
}

fn top_eigen(phi: &DMatrix<f64>, g: &DMatrix<f64>) -> Result<(f64, DVector<f64>)> {
    let eig = sym_eigen(phi, g)?;
    let last = eig.values.len() - 1;
    Ok((eig.values[last], eig.vectors.column(last).into_owned()))
}

/// Locates the grid point maximising the top `g`-eigenvalue of `Phi_c` and,
/// when it is interior, checks `(nabla Phi_c)(v, v) ~ 0` and `(Delta Phi_c)(v, v) <= tol`.
///
/// Ties within a relative `1e-10` go to the point nearest the box center.
pub fn sdc_probe(f: &SmoothMap, c: f64, grid: &Grid, scheme: LaplacianScheme, laplacian_tol: f64) -> Result<SdcReport> {
    if grid.is_empty() {
        return Err(GeomError::EmptyGrid);
    }
    let tops = grid
        .points
        .iter()
        .map(|x| {
            let p = f.domain().point(x)?;
            let phi = f.phi_c_at(&p, c)?;
            Ok(top_eigen(&phi, &f.induced_metric_at(&p)?)?.0)
        })
        .collect::<Result<Vec<f64>>>()?;
    let best = tops.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let center = grid.sample_box.center();
    let dist = |x: &[f64]| x.iter().zip(&center).map(|(a, b)| (a - b).powi(2)).sum::<f64>();
    let idx = (0..grid.len())
        .filter(|&i| tops[i] >= best - 1e-10 * (1.0 + best.abs()))
        .min_by(|&a, &b| dist(&grid.points[a]).total_cmp(&dist(&grid.points[b])))
        .expect("grid is non-empty");
    let x = grid.points[idx].clone();
    if grid.is_boundary(idx) {
        return Ok(SdcReport {
            c,
            argmax: x,
            top_eigenvalue: tops[idx],
            outcome: SdcOutcome::Inconclusive {
                reason: "maximum on the sample box boundary".into(),
            },
        });
    }
    let geo = PointGeometry::compute(f, &f.domain().point(&x)?)?;
    let jet = phi_c_jet(f, &geo, c, scheme)?;
    let (_, v) = top_eigen(&jet.value, geo.g())?;
    let m = v.len();
    let grads = covariant_derivative(&jet, &geo);
    let gradient = grads
        .iter()
        .map(|d| PointGeometry::form(d, &v, &v).abs())
        .fold(0.0, f64::max);
    let lap = rough_laplacian_of(&geo, &jet)?;
    let laplacian = PointGeometry::form(&lap, &v, &v);
    // At a grid maximum the gradient is only small at the scale of the spacing
    // times the second derivative along v.
    let spacing = grid.spacing().into_iter().fold(0.0, f64::max);
    let d2 = (0..m)
        .flat_map(|k| (0..m).map(move |l| (k, l)))
        .map(|(k, l)| PointGeometry::form(&jet.d2[k][l], &v, &v).abs())
        .fold(0.0, f64::max);
    let gradient_tol = 2.0 * (m as f64).sqrt() * spacing * d2 + 1e-9;
    Ok(SdcReport {
        c,
        argmax: x,
        top_eigenvalue: tops[idx],
        outcome: SdcOutcome::Checked {
            gradient,
            gradient_tol,
            laplacian,
            laplacian_tol,
            pass: gradient < gradient_tol && laplacian <= laplacian_tol,
        },
    })
}
