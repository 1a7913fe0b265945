//! Second fundamental tensor and mean curvature of a graph in `M x N`.

use nalgebra::{DMatrix, DVector};
use ndarray::Array3;
use rayon::prelude::*;
use serde::Serialize;

use crate::chart_manifold::ChartPoint;
use crate::error::{GeomError, Result};
use crate::geometry::PointGeometry;
use crate::graph_map::{GraphFrameData, MapJet, SmoothMap};
use crate::product_space::{ProductTensors, SplitVector};

/// Default threshold on `max |H|` for minimality.
pub const MINIMAL_TOL: f64 = 1e-6;
/// Default threshold on `max |A|` for total geodesy.
pub const TOTALLY_GEODESIC_TOL: f64 = 1e-8;

/// Jet of the embedding `F(x) = (x, f(x))` in product-chart coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingJet {
    /// `(x, f(x))` concatenated.
    pub value: DVector<f64>,
    /// `(m + n) x m`: identity block over `df`.
    pub d1: DMatrix<f64>,
    /// `d2[[C, i, j]] = d_i d_j F^C`: zero block over `d^2 f`.
    pub d2: Array3<f64>,
}

pub fn embedding_jet(x: &ChartPoint, jet: &MapJet) -> EmbeddingJet {
    let (n, m) = jet.d1.shape();
    let value = DVector::from_fn(m + n, |c, _| if c < m { x.coords()[c] } else { jet.value[c - m] });
    let d1 = DMatrix::from_fn(m + n, m, |c, i| {
        if c < m {
            if c == i {
                1.0
            } else {
                0.0
            }
        } else {
            jet.d1[(c - m, i)]
        }
    });
    let d2 = Array3::from_shape_fn((m + n, m, m), |(c, i, j)| if c < m { 0.0 } else { jet.d2[[c - m, i, j]] });
    EmbeddingJet { value, d1, d2 }
}

pub fn graph_embedding_jet(f: &SmoothMap, p: &ChartPoint) -> Result<EmbeddingJet> {
    Ok(embedding_jet(p, &f.sample(p)?.jet))
}

/// `A(d_i, d_j)` in product-chart components, row-major over `(i, j)`:
/// `d_i d_j F^C + Gamma^C_AB d_i F^A d_j F^B - Gamma(g)^k_ij d_k F^C`.
pub fn second_fundamental_coords(jet: &MapJet, product: &ProductTensors, gamma_g: &Array3<f64>) -> Vec<SplitVector> {
    let (n, m) = jet.d1.shape();
    let d1 = &jet.d1;
    let mut out = Vec::with_capacity(m * m);
    for i in 0..m {
        for j in 0..m {
            let m_part = DVector::from_fn(m, |a, _| product.gamma_m[[a, i, j]] - gamma_g[[a, i, j]]);
            let n_part = DVector::from_fn(n, |al, _| {
                let mut v = jet.d2[[al, i, j]];
                for b in 0..n {
                    for c in 0..n {
                        v += product.gamma_n[[al, b, c]] * d1[(b, i)] * d1[(c, j)];
                    }
                }
                for k in 0..m {
                    v -= gamma_g[[k, i, j]] * d1[(al, k)];
                }
                v
            });
            out.push(SplitVector::new(m_part, n_part));
        }
    }
    out
}

/// `sum_ij u^i v^j A(d_i, d_j)`.
pub fn contract_a(a_coords: &[SplitVector], u: &DVector<f64>, v: &DVector<f64>) -> SplitVector {
    let m = u.len();
    let (mm, nn) = a_coords[0].dims();
    let mut out = SplitVector::zero(mm, nn);
    for i in 0..m {
        for j in 0..m {
            let w = u[i] * v[j];
            if w != 0.0 {
                out.m_part.axpy(w, &a_coords[i * m + j].m_part, 1.0);
                out.n_part.axpy(w, &a_coords[i * m + j].n_part, 1.0);
            }
        }
    }
    out
}

/// Second fundamental form in the adapted `g`-orthonormal frame and its invariants.
#[derive(Debug, Clone)]
pub struct ExtrinsicData {
    /// `a[i][j] = A(e_i, e_j)`.
    pub a: Vec<Vec<SplitVector>>,
    pub h: SplitVector,
    pub a_norm_sq: f64,
    pub h_norm: f64,
    /// `max |g_{MxN}(A(e_i, e_j), e_tilde_k)|`; zero up to rounding by the Gauss formula.
    pub tangential: f64,
}

impl ExtrinsicData {
    pub fn from_frame(a_coords: &[SplitVector], frames: &GraphFrameData, product: &ProductTensors) -> Result<Self> {
        let m = frames.e.ncols();
        let (mm, nn) = frames.dims();
        let a: Vec<Vec<SplitVector>> = (0..m)
            .map(|i| (0..m).map(|j| contract_a(a_coords, &frames.e_vec(i), &frames.e_vec(j))).collect())
            .collect();
        let mut h = SplitVector::zero(mm, nn);
        let mut a_norm_sq = 0.0;
        let mut tangential: f64 = 0.0;
        for i in 0..m {
            h = &h + &a[i][i];
            for j in 0..m {
                a_norm_sq += product.metric(&a[i][j], &a[i][j])?;
                for et in &frames.e_tilde {
                    tangential = tangential.max(product.metric(&a[i][j], et)?.abs());
                }
            }
        }
        let h_norm = product.metric(&h, &h)?.max(0.0).sqrt();
        Ok(Self {
            a,
            h,
            a_norm_sq,
            h_norm,
            tangential,
        })
    }

    pub fn a_norm(&self) -> f64 {
        self.a_norm_sq.max(0.0).sqrt()
    }
}

pub fn second_fundamental_at(f: &SmoothMap, p: &ChartPoint) -> Result<ExtrinsicData> {
    Ok(PointGeometry::compute(f, p)?.extrinsic)
}

/// Per-point extrinsic invariants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExtrinsicSample {
    pub a_norm_sq: f64,
    pub h_norm: f64,
    pub tangential: f64,
}

/// Minimality and total geodesy over a set of points.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExtrinsicSweep {
    pub points_checked: usize,
    pub max_h_norm: f64,
    pub max_a_norm: f64,
    pub max_tangential: f64,
    pub minimal_tol: f64,
    pub totally_geodesic_tol: f64,
    pub minimal: bool,
    pub totally_geodesic: bool,
}

impl ExtrinsicSweep {
    pub fn from_samples(samples: &[ExtrinsicSample], minimal_tol: f64, totally_geodesic_tol: f64) -> Result<Self> {
        if samples.is_empty() {
            return Err(GeomError::EmptyGrid);
        }
        let max_h_norm = samples.iter().map(|s| s.h_norm).fold(0.0, f64::max);
        let max_a_norm = samples.iter().map(|s| s.a_norm_sq.max(0.0).sqrt()).fold(0.0, f64::max);
        let max_tangential = samples.iter().map(|s| s.tangential).fold(0.0, f64::max);
        let totally_geodesic = max_a_norm < totally_geodesic_tol;
        Ok(Self {
            points_checked: samples.len(),
            max_h_norm,
            max_a_norm,
            max_tangential,
            minimal_tol,
            totally_geodesic_tol,
            minimal: totally_geodesic || max_h_norm < minimal_tol,
            totally_geodesic,
        })
    }
}

/// Evaluates `A` and `H` at every point (in parallel) and reduces in input order.
pub fn extrinsic_sweep(
    f: &SmoothMap,
    points: &[Vec<f64>],
    minimal_tol: f64,
    totally_geodesic_tol: f64,
) -> Result<ExtrinsicSweep> {
    let samples = points
        .par_iter()
        .map(|x| {
            let p = f.domain().point(x)?;
            let e = second_fundamental_at(f, &p)?;
            Ok(ExtrinsicSample {
                a_norm_sq: e.a_norm_sq,
                h_norm: e.h_norm,
                tangential: e.tangential,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    ExtrinsicSweep::from_samples(&samples, minimal_tol, totally_geodesic_tol)
}

pub fn is_minimal(f: &SmoothMap, points: &[Vec<f64>], tol: f64) -> Result<bool> {
    Ok(extrinsic_sweep(f, points, tol, TOTALLY_GEODESIC_TOL)?.minimal)
}

pub fn is_totally_geodesic(f: &SmoothMap, points: &[Vec<f64>], tol: f64) -> Result<bool> {
    Ok(extrinsic_sweep(f, points, MINIMAL_TOL, tol)?.totally_geodesic)
}
