//! Maps between chart manifolds and the pointwise geometry of their graphs:
//! pullback and induced metrics, singular values, adapted frames, `s` and `Phi_c`.

mod frames;
pub mod induced;
pub mod maps;

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use ndarray::{Array3, Array4};

pub use frames::{adapted_frames, FrameResiduals, GraphFrameData, FRAME_TOL, RANK_TOL};
pub use induced::{pullback_jet, InducedMetric, PullbackJet};
pub use maps::{AffineMap, ConstantMap, HolomorphicPower, PrecomposeLinear, TruncatedJets};

use crate::chart_manifold::{sym_eigen, ChartManifold, ChartPoint};
use crate::error::{GeomError, Result};

/// Value and chart derivatives of a map `R^m -> R^n` at a point.
///
/// Layout: `d1[(a, i)] = d_i f^a`, `d2[[a, i, j]] = d_i d_j f^a`,
/// `d3[[a, i, j, k]] = d_i d_j d_k f^a`.
#[derive(Debug, Clone, PartialEq)]
pub struct MapJet {
    pub value: DVector<f64>,
    pub d1: DMatrix<f64>,
    pub d2: Array3<f64>,
    pub d3: Option<Array4<f64>>,
}

impl MapJet {
    /// Largest violation of the symmetry of `d2` and `d3` in their derivative indices.
    pub fn symmetry_defect(&self) -> f64 {
        let (n, m) = self.d1.shape();
        let mut worst: f64 = 0.0;
        for a in 0..n {
            for i in 0..m {
                for j in 0..m {
                    worst = worst.max((self.d2[[a, i, j]] - self.d2[[a, j, i]]).abs());
                    if let Some(d3) = &self.d3 {
                        for k in 0..m {
                            let v = d3[[a, i, j, k]];
                            worst = worst
                                .max((v - d3[[a, j, i, k]]).abs())
                                .max((v - d3[[a, i, k, j]]).abs());
                        }
                    }
                }
            }
        }
        worst
    }
}

/// Exact jets of a chart map.
pub trait MapJets: Send + Sync + fmt::Debug {
    fn domain_dim(&self) -> usize;
    fn target_dim(&self) -> usize;

    /// Highest derivative order provided; `d3` is populated iff this is at least 3.
    fn order(&self) -> usize {
        3
    }

    fn jet(&self, x: &[f64]) -> MapJet;
}

/// A smooth map `f: M -> N` between chart manifolds.
#[derive(Clone)]
pub struct SmoothMap {
    name: String,
    domain: ChartManifold,
    target: ChartManifold,
    jets: Arc<dyn MapJets>,
}

impl fmt::Debug for SmoothMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SmoothMap")
            .field("name", &self.name)
            .field("domain", &self.domain.name())
            .field("target", &self.target.name())
            .finish()
    }
}

/// Map jet at a point together with the validated image point.
#[derive(Debug, Clone)]
pub struct MapSample {
    pub jet: MapJet,
    pub image: ChartPoint,
}

impl SmoothMap {
    pub fn new(
        name: impl Into<String>,
        domain: ChartManifold,
        target: ChartManifold,
        jets: Arc<dyn MapJets>,
    ) -> Result<Self> {
        if jets.domain_dim() != domain.dim() {
            return Err(GeomError::DimensionMismatch {
                expected: domain.dim(),
                got: jets.domain_dim(),
                context: "map domain",
            });
        }
        if jets.target_dim() != target.dim() {
            return Err(GeomError::DimensionMismatch {
                expected: target.dim(),
                got: jets.target_dim(),
                context: "map target",
            });
        }
        Ok(Self {
            name: name.into(),
            domain,
            target,
            jets,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn domain(&self) -> &ChartManifold {
        &self.domain
    }

    pub fn target(&self) -> &ChartManifold {
        &self.target
    }

    pub fn jets(&self) -> &Arc<dyn MapJets> {
        &self.jets
    }

    pub fn order(&self) -> usize {
        self.jets.order()
    }

    pub fn require_order(&self, required: usize) -> Result<()> {
        if self.order() < required {
            return Err(GeomError::Capability {
                map: self.name.clone(),
                available: self.order(),
                required,
            });
        }
        Ok(())
    }

    /// Jet at `p` with the image validated against the target chart.
    pub fn sample(&self, p: &ChartPoint) -> Result<MapSample> {
        let jet = self.jets.jet(p.as_slice());
        let image = self.target.point(jet.value.as_slice())?;
        Ok(MapSample { jet, image })
    }

    /// `(f^* g_N)_ij = d_i f^a d_j f^b (g_N)_ab(f(p))`.
    pub fn pullback_metric_at(&self, p: &ChartPoint) -> Result<DMatrix<f64>> {
        let s = self.sample(p)?;
        let g_n = self.target.metric_at(&s.image)?;
        Ok(pullback(&s.jet.d1, &g_n))
    }

    /// Singular values with the `alpha` and `beta` bases (the tangent and
    /// normal frames are filled in as well, unverified).
    pub fn singular_values_at(&self, p: &ChartPoint) -> Result<GraphFrameData> {
        let s = self.sample(p)?;
        let g_m = self.domain.metric_at(p)?;
        let g_n = self.target.metric_at(&s.image)?;
        adapted_frames(&g_m, &g_n, &s.jet.d1)
    }

    /// Adapted frames, rejected if any of the defining relations fails by more than [`FRAME_TOL`].
    pub fn adapted_frames_at(&self, p: &ChartPoint) -> Result<GraphFrameData> {
        let s = self.sample(p)?;
        let g_m = self.domain.metric_at(p)?;
        let g_n = self.target.metric_at(&s.image)?;
        let frames = adapted_frames(&g_m, &g_n, &s.jet.d1)?;
        frames.residuals(&g_m, &g_n, &s.jet.d1).ensure(FRAME_TOL)?;
        Ok(frames)
    }

    /// Induced metric `g = g_M + f^* g_N` in chart components.
    pub fn induced_metric_at(&self, p: &ChartPoint) -> Result<DMatrix<f64>> {
        Ok(self.domain.metric_at(p)? + self.pullback_metric_at(p)?)
    }

    /// `s = g_M - f^* g_N` in chart components.
    pub fn s_tensor_at(&self, p: &ChartPoint) -> Result<DMatrix<f64>> {
        Ok(self.domain.metric_at(p)? - self.pullback_metric_at(p)?)
    }

    /// `tr_g(s)`.
    pub fn trace_s_at(&self, p: &ChartPoint) -> Result<f64> {
        let g_m = self.domain.metric_at(p)?;
        let pb = self.pullback_metric_at(p)?;
        trace_with(&(&g_m - &pb), &(&g_m + &pb))
    }

    /// `Phi_c = s - (1 - c)/(1 + c) g` in chart components.
    pub fn phi_c_at(&self, p: &ChartPoint, c: f64) -> Result<DMatrix<f64>> {
        let g_m = self.domain.metric_at(p)?;
        let pb = self.pullback_metric_at(p)?;
        phi_c(&g_m, &pb, c)
    }

    /// `M` with the induced metric `g`, on the domain chart.
    pub fn induced_manifold(&self) -> Result<ChartManifold> {
        self.require_order(3)?;
        Ok(ChartManifold::new(
            format!("graph of {}", self.name),
            self.domain.chart_box().clone(),
            Arc::new(InducedMetric::new(self.clone())),
        ))
    }
}

/// `d1^T g_N d1`.
pub fn pullback(d1: &DMatrix<f64>, g_n: &DMatrix<f64>) -> DMatrix<f64> {
    let p = d1.transpose() * g_n * d1;
    0.5 * (&p + p.transpose())
}

/// `(1 - c) / (1 + c)`, the shift in `Phi_c`.
pub fn phi_shift(c: f64) -> Result<f64> {
    if !(c >= 0.0) || !c.is_finite() {
        return Err(GeomError::InvalidParameter {
            name: "c",
            value: c,
            reason: "must be non-negative and finite",
        });
    }
    Ok((1.0 - c) / (1.0 + c))
}

/// `Phi_c = (g_M - P) - a (g_M + P)` with `a = (1 - c)/(1 + c)`.
pub fn phi_c(g_m: &DMatrix<f64>, pullback: &DMatrix<f64>, c: f64) -> Result<DMatrix<f64>> {
    let a = phi_shift(c)?;
    Ok((1.0 - a) * g_m - (1.0 + a) * pullback)
}

/// Trace of the form `t` with respect to the metric `g`.
pub fn trace_with(t: &DMatrix<f64>, g: &DMatrix<f64>) -> Result<f64> {
    let ginv = crate::chart_manifold::curvature::spd_inverse(g)?;
    Ok((ginv * t).trace())
}

/// Eigenvalues of `t` relative to `g`, ascending.
pub fn eigenvalues_with(t: &DMatrix<f64>, g: &DMatrix<f64>) -> Result<DVector<f64>> {
    Ok(sym_eigen(t, g)?.values)
}

#[cfg(test)]
mod tests;
