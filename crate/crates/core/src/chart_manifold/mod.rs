//! Riemannian manifolds represented on a single coordinate chart.
//!
//! A [`ChartManifold`] pairs a chart box with a [`MetricField`] that returns
//! exact metric jets `(g_ij, d_k g_ij, d_k d_l g_ij)`. Every intrinsic quantity
//! (Christoffel symbols, Riemann and Ricci tensors, sectional curvature) is
//! computed from those jets by the coordinate formulas in [`curvature`].

mod charts;
pub mod curvature;
pub mod eigen;

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use ndarray::{Array3, Array4};

pub use charts::{Circle, ConstantMetric, StereographicSphere};
pub use curvature::{Ricci, SECTIONAL_WEDGE_TOL};
pub use eigen::{jacobi_eigen, sym_eigen, GenEigen};

use crate::error::{GeomError, Result};
use crate::sampling::SampleBox;

/// Fraction of the chart width excluded on each side when validating points.
pub const DEFAULT_BOUNDARY_MARGIN: f64 = 0.1;

/// A point given by its chart coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct ChartPoint(DVector<f64>);

impl ChartPoint {
    pub fn coords(&self) -> &DVector<f64> {
        &self.0
    }

    pub fn as_slice(&self) -> &[f64] {
        self.0.as_slice()
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }
}

/// Metric components and their first and second chart derivatives at a point.
///
/// Layout: `dg[[i, j, k]] = d_k g_ij`, `d2g[[i, j, k, l]] = d_k d_l g_ij`.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricJet {
    pub g: DMatrix<f64>,
    pub dg: Array3<f64>,
    pub d2g: Array4<f64>,
}

impl MetricJet {
    pub fn dim(&self) -> usize {
        self.g.nrows()
    }

    /// Jet of a metric that is constant in the chart.
    pub fn constant(g: DMatrix<f64>) -> Self {
        let n = g.nrows();
        Self {
            g,
            dg: Array3::zeros((n, n, n)),
            d2g: Array4::zeros((n, n, n, n)),
        }
    }

    /// Largest violation of the index symmetries of the jet.
    pub fn symmetry_defect(&self) -> f64 {
        let n = self.dim();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                worst = worst.max((self.g[(i, j)] - self.g[(j, i)]).abs());
                for k in 0..n {
                    worst = worst.max((self.dg[[i, j, k]] - self.dg[[j, i, k]]).abs());
                    for l in 0..n {
                        worst = worst
                            .max((self.d2g[[i, j, k, l]] - self.d2g[[j, i, k, l]]).abs())
                            .max((self.d2g[[i, j, k, l]] - self.d2g[[i, j, l, k]]).abs());
                    }
                }
            }
        }
        worst
    }
}

/// Source of exact metric jets on a chart.
pub trait MetricField: Send + Sync + fmt::Debug {
    fn dim(&self) -> usize;

    /// Metric jet at chart coordinates `x`; `x` is assumed to lie in the chart.
    fn jet(&self, x: &[f64]) -> Result<MetricJet>;
}

/// A Riemannian manifold on one chart box.
#[derive(Clone)]
pub struct ChartManifold {
    name: String,
    chart_box: SampleBox,
    margin: f64,
    field: Arc<dyn MetricField>,
}

impl fmt::Debug for ChartManifold {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ChartManifold")
            .field("name", &self.name)
            .field("dim", &self.dim())
            .field("chart_box", &self.chart_box)
            .finish()
    }
}

impl ChartManifold {
    pub fn new(name: impl Into<String>, chart_box: SampleBox, field: Arc<dyn MetricField>) -> Self {
        assert_eq!(chart_box.dim(), field.dim(), "chart box and metric dimension differ");
        Self {
            name: name.into(),
            chart_box,
            margin: DEFAULT_BOUNDARY_MARGIN,
            field,
        }
    }

    /// Round sphere `S^dim(radius)` in stereographic coordinates,
    /// `g = 4 r^4 / (r^2 + |x|^2)^2 delta`.
    pub fn sphere(dim: usize, radius: f64) -> Self {
        Self::new(
            format!("S^{dim}({radius})"),
            SampleBox::cube(dim, 10.0 * radius),
            Arc::new(StereographicSphere::new(dim, radius)),
        )
    }

    /// Euclidean space with the identity metric.
    pub fn euclidean(dim: usize) -> Self {
        Self::new(
            format!("R^{dim}"),
            SampleBox::cube(dim, 10.0),
            Arc::new(ConstantMetric::identity(dim)),
        )
    }

    /// Flat torus `R^dim / 2 pi Z^dim` in lifted angle coordinates.
    pub fn flat_torus(dim: usize) -> Self {
        Self::new(
            format!("T^{dim}"),
            SampleBox::cube(dim, 4.0 * std::f64::consts::PI),
            Arc::new(ConstantMetric::identity(dim)),
        )
    }

    /// Circle of radius `radius` in (lifted) angle coordinate, `g = r^2`.
    pub fn circle(radius: f64) -> Self {
        Self::new(
            format!("S^1({radius})"),
            SampleBox::cube(1, 4.0 * std::f64::consts::PI),
            Arc::new(Circle::new(radius)),
        )
    }

    pub fn with_margin(mut self, margin: f64) -> Self {
        assert!((0.0..0.5).contains(&margin), "margin must lie in [0, 0.5)");
        self.margin = margin;
        self
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.field.dim()
    }

    pub fn chart_box(&self) -> &SampleBox {
        &self.chart_box
    }

    /// The part of the chart box where points are accepted.
    pub fn usable_box(&self) -> SampleBox {
        self.chart_box.shrink(self.margin)
    }

    pub fn field(&self) -> &Arc<dyn MetricField> {
        &self.field
    }

    /// Validated chart point.
    pub fn point(&self, coords: &[f64]) -> Result<ChartPoint> {
        if coords.len() != self.dim() {
            return Err(GeomError::DimensionMismatch {
                expected: self.dim(),
                got: coords.len(),
                context: "chart point",
            });
        }
        if !coords.iter().all(|v| v.is_finite()) || !self.usable_box().contains(coords) {
            return Err(GeomError::OutOfChart {
                chart: self.name.clone(),
                coords: coords.to_vec(),
            });
        }
        Ok(ChartPoint(DVector::from_column_slice(coords)))
    }

    pub fn metric_jet(&self, p: &ChartPoint) -> Result<MetricJet> {
        self.field.jet(p.as_slice())
    }

    pub fn metric_at(&self, p: &ChartPoint) -> Result<DMatrix<f64>> {
        Ok(self.metric_jet(p)?.g)
    }

    /// `gamma[[k, i, j]] = Gamma^k_ij`.
    pub fn christoffel_at(&self, p: &ChartPoint) -> Result<Array3<f64>> {
        curvature::christoffel(&self.metric_jet(p)?)
    }

    /// Fully covariant `R_ijkl`, normalised so that `R(u, v, u, v) > 0` on round spheres.
    pub fn riemann_at(&self, p: &ChartPoint) -> Result<Array4<f64>> {
        curvature::riemann(&self.metric_jet(p)?)
    }

    pub fn sectional_curvature(
        &self,
        p: &ChartPoint,
        u: &DVector<f64>,
        v: &DVector<f64>,
    ) -> Result<f64> {
        let jet = self.metric_jet(p)?;
        let riem = curvature::riemann(&jet)?;
        curvature::sectional(&jet.g, &riem, u, v)
    }

    pub fn ricci_at(&self, p: &ChartPoint) -> Result<Ricci> {
        let jet = self.metric_jet(p)?;
        let riem = curvature::riemann(&jet)?;
        curvature::ricci(&jet.g, &riem)
    }
}
