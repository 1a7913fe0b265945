//! Everything known about a graph at one point, computed once from exact jets.

use nalgebra::{DMatrix, DVector};
use ndarray::{Array3, Array4};

use crate::chart_manifold::curvature::{self, Ricci};
use crate::chart_manifold::{ChartPoint, MetricJet};
use crate::error::{GeomError, Result};
use crate::extrinsic::{contract_a, second_fundamental_coords, ExtrinsicData};
use crate::graph_map::{adapted_frames, phi_c, pullback_jet, GraphFrameData, MapJet, SmoothMap, FRAME_TOL};
use crate::product_space::{ProductPoint, ProductSpace, ProductTensors, SplitVector};

/// Metrics, curvatures, frames and second fundamental form of a graph at `x`.
#[derive(Debug, Clone)]
pub struct PointGeometry {
    pub x: ChartPoint,
    pub y: ChartPoint,
    pub jet: MapJet,
    pub product: ProductTensors,
    /// Ricci of `(M, g_M)`.
    pub ric_m: Ricci,
    /// `f^* g_N` at `x`.
    pub pullback: DMatrix<f64>,
    /// Jet of the induced metric `g`; the second derivatives are zero-filled
    /// when the map has no third derivatives (see `has_curvature`).
    pub induced: MetricJet,
    pub g_inv: DMatrix<f64>,
    pub gamma_g: Array3<f64>,
    /// `d_m Gamma(g)^k_ij` and the curvature of `(M, g)`; present for order-3 maps.
    pub dgamma_g: Option<Array4<f64>>,
    pub riem_g: Option<Array4<f64>>,
    pub ric_g: Option<Ricci>,
    pub frames: GraphFrameData,
    /// `A(d_i, d_j)` row-major.
    pub a_coords: Vec<SplitVector>,
    pub extrinsic: ExtrinsicData,
}

impl PointGeometry {
    pub fn compute(f: &SmoothMap, p: &ChartPoint) -> Result<Self> {
        let sample = f.sample(p)?;
        let space = ProductSpace::new(f.domain().clone(), f.target().clone());
        let q = ProductPoint {
            base: p.clone(),
            fiber: sample.image.clone(),
        };
        let product = space.tensors_at(&q)?;
        let ric_m = curvature::ricci(&product.g_m, &product.riem_m)?;
        let base = f.domain().metric_jet(p)?;
        let target = f.target().metric_jet(&sample.image)?;
        let pb = pullback_jet(&sample.jet, &target);
        let has_third = pb.d2p.is_some();
        let induced = MetricJet {
            g: &base.g + &pb.p,
            dg: &base.dg + &pb.dp,
            d2g: match &pb.d2p {
                Some(d2p) => &base.d2g + d2p,
                None => Array4::zeros(base.d2g.raw_dim()),
            },
        };
        let g_inv = curvature::spd_inverse(&induced.g)?;
        let gamma_g = curvature::christoffel(&induced)?;
        let (dgamma_g, riem_g, ric_g) = if has_third {
            let riem = curvature::riemann(&induced)?;
            let ric = curvature::ricci(&induced.g, &riem)?;
            (Some(curvature::christoffel_derivative(&induced)?), Some(riem), Some(ric))
        } else {
            (None, None, None)
        };
        let frames = adapted_frames(&product.g_m, &product.g_n, &sample.jet.d1)?;
        frames
            .residuals(&product.g_m, &product.g_n, &sample.jet.d1)
            .ensure(FRAME_TOL)?;
        let a_coords = second_fundamental_coords(&sample.jet, &product, &gamma_g);
        let extrinsic = ExtrinsicData::from_frame(&a_coords, &frames, &product)?;
        Ok(Self {
            x: p.clone(),
            y: sample.image,
            jet: sample.jet,
            product,
            ric_m,
            pullback: pb.p,
            induced,
            g_inv,
            gamma_g,
            dgamma_g,
            riem_g,
            ric_g,
            frames,
            a_coords,
            extrinsic,
        })
    }

    /// `(dim M, dim N)`.
    pub fn dims(&self) -> (usize, usize) {
        self.product.dims()
    }

    pub fn g(&self) -> &DMatrix<f64> {
        &self.induced.g
    }

    pub fn g_m(&self) -> &DMatrix<f64> {
        &self.product.g_m
    }

    pub fn s(&self) -> DMatrix<f64> {
        &self.product.g_m - &self.pullback
    }

    pub fn phi_c(&self, c: f64) -> Result<DMatrix<f64>> {
        phi_c(&self.product.g_m, &self.pullback, c)
    }

    /// `tr_g(s)`.
    pub fn trace_s(&self) -> f64 {
        (&self.g_inv * self.s()).trace()
    }

    /// `tr_g(t)` for a chart-component form `t`.
    pub fn trace_g(&self, t: &DMatrix<f64>) -> f64 {
        (&self.g_inv * t).trace()
    }

    pub fn lambda_max_sq(&self) -> f64 {
        self.frames.lambda_max().powi(2)
    }

    pub fn e(&self, i: usize) -> DVector<f64> {
        self.frames.e_vec(i)
    }

    pub fn form(t: &DMatrix<f64>, u: &DVector<f64>, v: &DVector<f64>) -> f64 {
        u.dot(&(t * v))
    }

    /// `df(u)`.
    pub fn push(&self, u: &DVector<f64>) -> DVector<f64> {
        &self.jet.d1 * u
    }

    /// `A(u, v)` for chart vectors `u`, `v`.
    pub fn a(&self, u: &DVector<f64>, v: &DVector<f64>) -> SplitVector {
        contract_a(&self.a_coords, u, v)
    }

    pub fn gmn(&self, u: &SplitVector, v: &SplitVector) -> f64 {
        self.product.g_m_product(&u.m_part, &v.m_part) + self.product.g_n_product(&u.n_part, &v.n_part)
    }

    pub fn smn(&self, u: &SplitVector, v: &SplitVector) -> f64 {
        self.product.g_m_product(&u.m_part, &v.m_part) - self.product.g_n_product(&u.n_part, &v.n_part)
    }

    /// `R_M(u, v, w, z)`.
    pub fn riem_m(&self, u: &DVector<f64>, v: &DVector<f64>, w: &DVector<f64>, z: &DVector<f64>) -> f64 {
        curvature::contract4(&self.product.riem_m, u, v, w, z)
    }

    /// `(f^* R_N)(u, v, w, z) = R_N(df u, df v, df w, df z)`.
    pub fn pulled_riem_n(&self, u: &DVector<f64>, v: &DVector<f64>, w: &DVector<f64>, z: &DVector<f64>) -> f64 {
        curvature::contract4(&self.product.riem_n, &self.push(u), &self.push(v), &self.push(w), &self.push(z))
    }

    /// Sectional curvature of `g_M` on `u ^ v`.
    pub fn sec_m(&self, u: &DVector<f64>, v: &DVector<f64>) -> Result<f64> {
        curvature::sectional(&self.product.g_m, &self.product.riem_m, u, v)
    }

    /// Sectional curvature of `g_N` on `df u ^ df v`.
    pub fn sec_n_on_image(&self, u: &DVector<f64>, v: &DVector<f64>) -> Result<f64> {
        curvature::sectional(&self.product.g_n, &self.product.riem_n, &self.push(u), &self.push(v))
    }

    /// Ricci of the induced metric, or a capability error for maps without third derivatives.
    pub fn ric_g(&self) -> Result<&Ricci> {
        self.ric_g.as_ref().ok_or_else(|| GeomError::Capability {
            map: "map at this point".into(),
            available: 2,
            required: 3,
        })
    }

    pub fn dgamma_g(&self) -> Result<&Array4<f64>> {
        self.dgamma_g.as_ref().ok_or_else(|| GeomError::Capability {
            map: "map at this point".into(),
            available: 2,
            required: 3,
        })
    }
}
