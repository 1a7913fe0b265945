//! Built-in `(M, N, f)` triples with exact jets and declared expectations.

mod selftest;

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{DMatrix, Vector3};
use serde::Serialize;

pub use selftest::{jets_selftest, JetCheck, JetSelftest};

use crate::chart_manifold::ChartManifold;
use crate::error::{GeomError, Result};
use crate::graph_map::{AffineMap, ConstantMap, HolomorphicPower, MapJets, SmoothMap};
use crate::sampling::{Grid, SampleBox};
use crate::theorem_gate::Verdict;

/// Default points per axis for grid sweeps over two-dimensional domains.
pub const DEFAULT_RESOLUTION: usize = 20;
/// Default points per axis over three-dimensional domains.
pub const DEFAULT_RESOLUTION_3D: usize = 10;

/// A declared property and whether it is asserted or only measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Expectation {
    Yes,
    No,
    Measured,
}

impl Expectation {
    pub fn label(self) -> &'static str {
        match self {
            Expectation::Yes => "yes",
            Expectation::No => "no",
            Expectation::Measured => "measured",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Expected {
    pub minimal: Expectation,
    pub totally_geodesic: Expectation,
    /// Gate verdict at the scenario's default `sigma`.
    pub verdict: Option<Verdict>,
    pub lambda_field: &'static str,
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: &'static str,
    pub summary: &'static str,
    pub map: SmoothMap,
    pub sample_box: SampleBox,
    pub resolution: usize,
    /// Default curvature pinching level.
    pub sigma: f64,
    pub expected: Expected,
}

impl Scenario {
    pub fn domain(&self) -> &ChartManifold {
        self.map.domain()
    }

    pub fn target(&self) -> &ChartManifold {
        self.map.target()
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.domain().dim(), self.target().dim())
    }

    /// Grid over `sample_box` (or `override_box`) with `resolution` points per axis.
    pub fn grid(&self, override_box: Option<&SampleBox>, resolution: &[usize]) -> Result<Grid> {
        let b = override_box.unwrap_or(&self.sample_box);
        if b.dim() != self.domain().dim() {
            return Err(GeomError::DimensionMismatch {
                expected: self.domain().dim(),
                got: b.dim(),
                context: "sample box",
            });
        }
        b.grid(resolution)
    }

    pub fn default_grid(&self) -> Grid {
        self.sample_box
            .grid(&[self.resolution])
            .expect("built-in resolution is valid")
    }

    /// Uniform random points in the sample box.
    pub fn random_points(&self, count: usize, seed: u64) -> Vec<Vec<f64>> {
        self.sample_box.random_points(count, seed)
    }
}

fn make(
    name: &'static str,
    summary: &'static str,
    domain: ChartManifold,
    target: ChartManifold,
    jets: Arc<dyn MapJets>,
    sample_box: SampleBox,
    sigma: f64,
    expected: Expected,
) -> Scenario {
    let resolution = if domain.dim() <= 2 {
        DEFAULT_RESOLUTION
    } else {
        DEFAULT_RESOLUTION_3D
    };
    let map = SmoothMap::new(name, domain, target, jets).expect("built-in scenario dimensions agree");
    Scenario {
        name,
        summary,
        map,
        sample_box,
        resolution,
        sigma,
        expected,
    }
}

fn rotation2(angle: f64) -> DMatrix<f64> {
    DMatrix::from_row_slice(2, 2, &[angle.cos(), -angle.sin(), angle.sin(), angle.cos()])
}

/// Rotation by `angle` about `axis` (Rodrigues).
fn rotation3(axis: [f64; 3], angle: f64) -> DMatrix<f64> {
    let k = Vector3::from(axis).normalize();
    let kx = nalgebra::Matrix3::new(0.0, -k.z, k.y, k.z, 0.0, -k.x, -k.y, k.x, 0.0);
    let r = nalgebra::Matrix3::identity() + kx * angle.sin() + kx * kx * (1.0 - angle.cos());
    DMatrix::from_column_slice(3, 3, r.as_slice())
}

fn rigid(verdict: Verdict, lambda_field: &'static str) -> Expected {
    Expected {
        minimal: Expectation::Yes,
        totally_geodesic: Expectation::Yes,
        verdict: Some(verdict),
        lambda_field,
    }
}

/// All built-in scenarios, in catalog order.
pub fn registry() -> Vec<Scenario> {
    let s2 = ChartManifold::sphere(2, 1.0);
    let s3 = ChartManifold::sphere(3, 1.0);
    let s3r2 = ChartManifold::sphere(3, 2.0);
    let t2 = ChartManifold::flat_torus(2);
    let t3 = ChartManifold::flat_torus(3);
    let circle = ChartManifold::circle(1.0);
    let tg_iso = Verdict::TotallyGeodesicIsometricImmersion;
    vec![
        make(
            "constant-s2",
            "constant map S^2(1) -> S^2(1)",
            s2.clone(),
            s2.clone(),
            Arc::new(ConstantMap::new(2, vec![0.3, -0.2])),
            SampleBox::cube(2, 1.5),
            1.0,
            rigid(Verdict::Constant, "lambda = 0"),
        ),
        make(
            "constant-s3",
            "constant map S^3(2) -> S^3(2)",
            s3r2.clone(),
            s3r2.clone(),
            Arc::new(ConstantMap::new(3, vec![0.5, -0.5, 1.0])),
            SampleBox::cube(3, 2.0),
            0.25,
            rigid(Verdict::Constant, "lambda = 0"),
        ),
        make(
            "identity-s2",
            "identity S^2(1) -> S^2(1)",
            s2.clone(),
            s2.clone(),
            Arc::new(AffineMap::identity(2)),
            SampleBox::cube(2, 1.5),
            1.0,
            rigid(tg_iso, "lambda = 1"),
        ),
        make(
            "identity-s3-r2",
            "identity S^3(2) -> S^3(2)",
            s3r2.clone(),
            s3r2.clone(),
            Arc::new(AffineMap::identity(3)),
            SampleBox::cube(3, 2.0),
            0.25,
            rigid(tg_iso, "lambda = 1"),
        ),
        make(
            "rotation-s2",
            "rotation about the polar axis of S^2(1)",
            s2.clone(),
            s2.clone(),
            Arc::new(AffineMap::linear(rotation2(0.9))),
            SampleBox::cube(2, 1.5),
            1.0,
            rigid(tg_iso, "lambda = 1"),
        ),
        make(
            "rotation-s3",
            "rotation of S^3(1) fixing the polar axis",
            s3.clone(),
            s3.clone(),
            Arc::new(AffineMap::linear(rotation3([1.0, 1.0, 1.0], 0.6))),
            SampleBox::cube(3, 1.0),
            1.0,
            rigid(tg_iso, "lambda = 1"),
        ),
        make(
            "holo-w2",
            "w -> w^2 on S^2(1)",
            s2.clone(),
            s2.clone(),
            Arc::new(HolomorphicPower::new(2)),
            SampleBox::cube(2, 1.5),
            1.0,
            Expected {
                minimal: Expectation::Yes,
                totally_geodesic: Expectation::No,
                verdict: Some(Verdict::HypothesisViolated),
                lambda_field: "lambda = 2|w|(1+|w|^2)/(1+|w|^4), conformal",
            },
        ),
        make(
            "holo-w3",
            "w -> w^3 on S^2(1)",
            s2.clone(),
            s2.clone(),
            Arc::new(HolomorphicPower::new(3)),
            SampleBox::cube(2, 1.2),
            1.0,
            Expected {
                minimal: Expectation::Yes,
                totally_geodesic: Expectation::No,
                verdict: Some(Verdict::HypothesisViolated),
                lambda_field: "lambda = 3|w|^2(1+|w|^2)/(1+|w|^6), conformal",
            },
        ),
        make(
            "holo-dilate-0.5",
            "w -> w/2 on S^2(1), strictly length-decreasing",
            s2.clone(),
            s2.clone(),
            Arc::new(AffineMap::scaling(2, 0.5)),
            SampleBox::cube(2, 0.9),
            1.0,
            Expected {
                minimal: Expectation::Yes,
                totally_geodesic: Expectation::No,
                verdict: Some(Verdict::HypothesisViolated),
                lambda_field: "lambda = (1+|w|^2)/(2+|w|^2/2) < 1, maximal on the box corners",
            },
        ),
        make(
            "torus-linear",
            "x -> Qx on T^2, Q = [[2,1],[1,1]]",
            t2.clone(),
            t2.clone(),
            Arc::new(AffineMap::linear(DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 1.0]))),
            SampleBox::cube(2, PI),
            1.0,
            Expected {
                minimal: Expectation::Yes,
                totally_geodesic: Expectation::Yes,
                verdict: Some(Verdict::HypothesisViolated),
                lambda_field: "constant, lambda = (3 -+ sqrt 5)/2, lambda^2 = (7 -+ 3 sqrt 5)/2",
            },
        ),
        make(
            "torus-t3-t2",
            "x -> Qx from T^3 to T^2, Q = [[1,0,1],[0,1,1]]",
            t3,
            t2,
            Arc::new(AffineMap::linear(DMatrix::from_row_slice(2, 3, &[1.0, 0.0, 1.0, 0.0, 1.0, 1.0]))),
            SampleBox::cube(3, 2.0),
            1.0,
            Expected {
                minimal: Expectation::Yes,
                totally_geodesic: Expectation::Yes,
                verdict: Some(Verdict::HypothesisViolated),
                lambda_field: "constant, lambda^2 in {0, 1, 3}",
            },
        ),
        make(
            "proj-s3-s1",
            "first chart coordinate S^3(1) -> S^1(1)",
            s3.clone(),
            circle.clone(),
            Arc::new(AffineMap::linear(DMatrix::from_row_slice(1, 3, &[1.0, 0.0, 0.0]))),
            SampleBox::cube(3, 1.0),
            1.0,
            Expected {
                minimal: Expectation::Measured,
                totally_geodesic: Expectation::Measured,
                verdict: Some(Verdict::HypothesisViolated),
                lambda_field: "rank 1, lambda_3 = (1+|x|^2)/2",
            },
        ),
        make(
            "proj-s3r2-s1",
            "scaled first chart coordinate S^3(2) -> S^1(1), f = x_1/4",
            s3r2,
            circle,
            Arc::new(AffineMap::linear(DMatrix::from_row_slice(1, 3, &[0.25, 0.0, 0.0]))),
            SampleBox::cube(3, 2.0),
            0.25,
            Expected {
                minimal: Expectation::Measured,
                totally_geodesic: Expectation::Measured,
                verdict: Some(Verdict::HypothesisViolated),
                lambda_field: "rank 1, lambda_3 = (4+|x|^2)/32",
            },
        ),
        make(
            "scaled-sphere-0.5",
            "x -> x/2 from S^2(1) to S^2(0.5), a homothety",
            s2.clone(),
            ChartManifold::sphere(2, 0.5),
            Arc::new(AffineMap::scaling(2, 0.5)),
            SampleBox::cube(2, 1.5),
            1.0,
            Expected {
                minimal: Expectation::Measured,
                totally_geodesic: Expectation::Measured,
                verdict: Some(Verdict::HypothesisViolated),
                lambda_field: "lambda = 1/2",
            },
        ),
    ]
}

pub fn names() -> Vec<&'static str> {
    registry().iter().map(|s| s.name).collect()
}

pub fn lookup(name: &str) -> Result<Scenario> {
    registry()
        .into_iter()
        .find(|s| s.name == name)
        .ok_or_else(|| GeomError::UnknownScenario(name.to_string()))
}

/// Scenarios whose name contains `pattern`.
pub fn matching(pattern: &str) -> Vec<Scenario> {
    registry().into_iter().filter(|s| s.name.contains(pattern)).collect()
}
