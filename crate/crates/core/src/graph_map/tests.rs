use std::sync::Arc;

use approx::assert_abs_diff_eq;
use nalgebra::{DMatrix, DVector};
use ndarray::{Array3, Array4};
use proptest::prelude::*;

use super::*;
use crate::chart_manifold::{curvature, MetricJet};
use crate::fd;
use crate::sampling::SampleBox;

fn s2() -> ChartManifold {
    ChartManifold::sphere(2, 1.0)
}

fn holo(k: u32) -> SmoothMap {
    SmoothMap::new(format!("w^{k}"), s2(), s2(), Arc::new(HolomorphicPower::new(k))).unwrap()
}

fn identity(m: usize, r: f64) -> SmoothMap {
    let s = ChartManifold::sphere(m, r);
    SmoothMap::new("id", s.clone(), s, Arc::new(AffineMap::identity(m))).unwrap()
}

fn constant(m: usize) -> SmoothMap {
    let s = ChartManifold::sphere(m, 1.0);
    let value = (0..m).map(|i| 0.3 - 0.5 * i as f64).collect();
    SmoothMap::new("const", s.clone(), s, Arc::new(ConstantMap::new(m, value))).unwrap()
}

/// Maps with every rank pattern the frame construction has to handle.
fn assorted() -> Vec<(SmoothMap, SampleBox)> {
    let e3 = ChartManifold::euclidean(3);
    let e2 = ChartManifold::euclidean(2);
    let proj = AffineMap::linear(DMatrix::from_row_slice(2, 3, &[1.0, 0.5, 0.0, -0.2, 1.0, 0.3]));
    let incl = AffineMap::linear(DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 2.0, 0.5, 0.5]));
    let rank_one = AffineMap::linear(DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 4.0]));
    let s3 = ChartManifold::sphere(3, 1.0);
    let circle = ChartManifold::circle(1.0);
    let to_circle = AffineMap::linear(DMatrix::from_row_slice(1, 3, &[1.0, 0.0, 0.0]));
    vec![
        (constant(2), SampleBox::cube(2, 2.0)),
        (constant(3), SampleBox::cube(3, 2.0)),
        (identity(2, 1.0), SampleBox::cube(2, 2.0)),
        (identity(3, 2.0), SampleBox::cube(3, 3.0)),
        (holo(2), SampleBox::cube(2, 1.5)),
        (holo(3), SampleBox::cube(2, 1.2)),
        (SmoothMap::new("proj", e3.clone(), e2.clone(), Arc::new(proj)).unwrap(), SampleBox::cube(3, 2.0)),
        (SmoothMap::new("incl", e2.clone(), e3, Arc::new(incl)).unwrap(), SampleBox::cube(2, 2.0)),
        (SmoothMap::new("rank1", e2.clone(), e2, Arc::new(rank_one)).unwrap(), SampleBox::cube(2, 1.0)),
        (SmoothMap::new("s3->s1", s3, circle, Arc::new(to_circle)).unwrap(), SampleBox::cube(3, 2.0)),
    ]
}

fn points(map: &SmoothMap, b: &SampleBox, count: usize, seed: u64) -> Vec<ChartPoint> {
    b.random_points(count, seed)
        .iter()
        .map(|x| map.domain().point(x).unwrap())
        .collect()
}

/// Closed-form singular value of `w -> w^k` between unit spheres in stereographic charts.
fn holo_lambda(k: u32, x: &[f64]) -> f64 {
    let r2 = x[0] * x[0] + x[1] * x[1];
    let kf = f64::from(k);
    kf * r2.powf((kf - 1.0) / 2.0) * (1.0 + r2) / (1.0 + r2.powi(k as i32))
}

#[test]
fn pullback_of_constant_and_identity() {
    let c = constant(2);
    let p = c.domain().point(&[0.4, -0.7]).unwrap();
    assert!(c.pullback_metric_at(&p).unwrap().iter().all(|v| *v == 0.0));
    let id = identity(2, 1.0);
    assert_eq!(id.pullback_metric_at(&p).unwrap(), id.domain().metric_at(&p).unwrap());
}

#[test]
fn square_map_at_one_has_singular_values_two() {
    let f = holo(2);
    let p = f.domain().point(&[1.0, 0.0]).unwrap();
    let g_m = f.domain().metric_at(&p).unwrap();
    let pb = f.pullback_metric_at(&p).unwrap();
    // conformal factors: 4/(1+1)^2 = 1 at w = 1 and 4/(1+1)^2 = 1 at w^2 = 1, |f'| = 2
    assert_abs_diff_eq!(pb, 4.0 * &g_m, epsilon = 1e-12);
    let fr = f.singular_values_at(&p).unwrap();
    assert_eq!(fr.rank, 2);
    assert_abs_diff_eq!(fr.lambdas[0], 2.0, epsilon = 1e-12);
    assert_abs_diff_eq!(fr.lambdas[1], 2.0, epsilon = 1e-12);
}

#[test]
fn holomorphic_singular_values_match_conformal_formula() {
    for k in [2, 3] {
        let f = holo(k);
        for p in points(&f, &SampleBox::cube(2, 1.5), 50, u64::from(k)) {
            let fr = f.singular_values_at(&p).unwrap();
            let expected = holo_lambda(k, p.as_slice());
            for l in fr.lambdas.iter() {
                assert!((l - expected).abs() < 1e-9 * (1.0 + expected), "{l} vs {expected}");
            }
        }
    }
}

#[test]
fn trivial_rank_and_singular_values() {
    let fr = identity(2, 1.0).singular_values_at(&s2().point(&[0.3, 0.3]).unwrap()).unwrap();
    assert_eq!(fr.rank, 2);
    assert_abs_diff_eq!(fr.lambdas[0], 1.0, epsilon = 1e-12);
    assert_abs_diff_eq!(fr.lambdas[1], 1.0, epsilon = 1e-12);
    let fr = constant(3)
        .singular_values_at(&ChartManifold::sphere(3, 1.0).point(&[0.1, 0.2, 0.3]).unwrap())
        .unwrap();
    assert_eq!(fr.rank, 0);
    assert!(fr.lambdas.iter().all(|l| *l == 0.0));
}

#[test]
fn frame_relations_hold_for_every_rank_pattern() {
    for (map, b) in assorted() {
        for p in points(&map, &b, 100, 17) {
            let fr = map.adapted_frames_at(&p).unwrap();
            let (m, n) = (map.domain().dim(), map.target().dim());
            assert!(fr.rank <= m.min(n));
            let s = map.sample(&p).unwrap();
            let g_m = map.domain().metric_at(&p).unwrap();
            let g_n = map.target().metric_at(&s.image).unwrap();
            let res = fr.residuals(&g_m, &g_n, &s.jet.d1);
            assert!(res.max() < 1e-8, "{}: {res:?}", map.name());
        }
    }
}

#[test]
fn frame_formula_anchors() {
    let id = identity(2, 1.0);
    let p = s2().point(&[0.2, -0.5]).unwrap();
    let fr = id.adapted_frames_at(&p).unwrap();
    let g_m = s2().metric_at(&p).unwrap();
    let smn = |u: &crate::product_space::SplitVector, v: &crate::product_space::SplitVector| {
        u.m_part.dot(&(&g_m * &v.m_part)) - u.n_part.dot(&(&g_m * &v.n_part))
    };
    for i in 0..2 {
        assert_abs_diff_eq!(smn(&fr.e_tilde[i], &fr.xi[i]), -1.0, epsilon = 1e-12);
    }

    let c = constant(2);
    let fr = c.adapted_frames_at(&p).unwrap();
    let g_n = s2().metric_at(&c.sample(&p).unwrap().image).unwrap();
    for xi in &fr.xi {
        assert_eq!(xi.m_part.amax(), 0.0);
        assert_abs_diff_eq!(-xi.n_part.dot(&(&g_n * &xi.n_part)), -1.0, epsilon = 1e-12);
    }

    // w^2 at w = 1: s(e_i, e_i) = (1 - 4)/(1 + 4), checked directly on chart components
    let f = holo(2);
    let q = s2().point(&[1.0, 0.0]).unwrap();
    let fr = f.adapted_frames_at(&q).unwrap();
    let s = f.s_tensor_at(&q).unwrap();
    for i in 0..2 {
        let e = fr.e_vec(i);
        assert_abs_diff_eq!(e.dot(&(&s * &e)), -0.6, epsilon = 1e-12);
        assert_abs_diff_eq!(fr.s_eigenvalue(i), -0.6, epsilon = 1e-12);
    }
}

#[test]
fn trace_of_s_anchors() {
    let p3 = ChartManifold::sphere(3, 1.0).point(&[0.5, 0.1, -0.3]).unwrap();
    assert_abs_diff_eq!(constant(3).trace_s_at(&p3).unwrap(), 3.0, epsilon = 1e-12);
    let p = s2().point(&[0.5, 0.1]).unwrap();
    assert_abs_diff_eq!(identity(2, 1.0).trace_s_at(&p).unwrap(), 0.0, epsilon = 1e-12);
    let q = s2().point(&[1.0, 0.0]).unwrap();
    assert_abs_diff_eq!(holo(2).trace_s_at(&q).unwrap(), -1.2, epsilon = 1e-12);
}

#[test]
fn s_spectrum_matches_singular_values() {
    for (map, b) in assorted() {
        for p in points(&map, &b, 30, 3) {
            let fr = map.adapted_frames_at(&p).unwrap();
            let s = map.s_tensor_at(&p).unwrap();
            let g = map.induced_metric_at(&p).unwrap();
            let spec = eigenvalues_with(&s, &g).unwrap();
            let m = spec.len();
            // ascending s-eigenvalues pair with descending singular values
            for i in 0..m {
                assert!((spec[i] - fr.s_eigenvalue(m - 1 - i)).abs() < 1e-8, "{}", map.name());
            }
            let frame_trace: f64 = (0..m).map(|i| fr.e_vec(i).dot(&(&s * fr.e_vec(i)))).sum();
            assert!((frame_trace - spec.sum()).abs() < 1e-10);
            assert!((map.trace_s_at(&p).unwrap() - spec.sum()).abs() < 1e-10);
        }
    }
}

#[test]
fn phi_c_anchors_and_spectrum() {
    let p = s2().point(&[0.3, 0.8]).unwrap();
    assert!(identity(2, 1.0).phi_c_at(&p, 1.0).unwrap().amax() < 1e-14);
    let c = constant(2);
    let g = c.induced_metric_at(&p).unwrap();
    for cval in [0.5, 1.0, 3.0] {
        let phi = c.phi_c_at(&p, cval).unwrap();
        assert_abs_diff_eq!(phi, g.clone() * (2.0 * cval / (1.0 + cval)), epsilon = 1e-12);
    }
    // c = 0 is the constant-map endpoint: Phi_0 = s - g = -2 f^* g_N
    assert!(c.phi_c_at(&p, 0.0).unwrap().amax() < 1e-15);
    assert!(matches!(c.phi_c_at(&p, -0.5), Err(GeomError::InvalidParameter { .. })));
    assert!(c.phi_c_at(&p, f64::NAN).is_err());

    let f = holo(3);
    let shift = phi_shift(2.5).unwrap();
    for q in points(&f, &SampleBox::cube(2, 1.2), 20, 8) {
        let fr = f.singular_values_at(&q).unwrap();
        let spec = eigenvalues_with(&f.phi_c_at(&q, 2.5).unwrap(), &f.induced_metric_at(&q).unwrap()).unwrap();
        for i in 0..2 {
            assert!((spec[i] - (fr.s_eigenvalue(1 - i) - shift)).abs() < 1e-9);
        }
    }
}

#[test]
fn phi_at_global_max_is_nonnegative_on_grid() {
    let f = holo(2);
    let grid = SampleBox::cube(2, 1.5).grid(&[15]).unwrap();
    let pts: Vec<ChartPoint> = grid.points.iter().map(|x| s2().point(x).unwrap()).collect();
    let lambda0_sq = pts
        .iter()
        .map(|p| f.singular_values_at(p).unwrap().lambda_max().powi(2))
        .fold(0.0, f64::max);
    for p in &pts {
        let spec = eigenvalues_with(&f.phi_c_at(p, lambda0_sq).unwrap(), &f.induced_metric_at(p).unwrap()).unwrap();
        assert!(spec[0] > -1e-12);
    }
}

#[test]
fn singular_values_are_invariant_under_rotation() {
    let angle: f64 = 0.7;
    let q = DMatrix::from_row_slice(2, 2, &[angle.cos(), -angle.sin(), angle.sin(), angle.cos()]);
    let inner: Arc<dyn MapJets> = Arc::new(HolomorphicPower::new(3));
    let rotated = SmoothMap::new("w^3 o R", s2(), s2(), Arc::new(PrecomposeLinear::new(inner, q.clone()))).unwrap();
    let f = holo(3);
    for p in points(&f, &SampleBox::cube(2, 1.0), 30, 5) {
        let qp = s2().point((&q * p.coords()).as_slice()).unwrap();
        let a = rotated.singular_values_at(&p).unwrap().lambdas;
        let b = f.singular_values_at(&qp).unwrap().lambdas;
        assert!((a - b).amax() < 1e-8);
    }
}

#[test]
fn induced_manifold_anchors() {
    let c = constant(2);
    let ind = c.induced_manifold().unwrap();
    let p = s2().point(&[0.6, -0.4]).unwrap();
    assert_eq!(ind.metric_jet(&p).unwrap(), s2().metric_jet(&p).unwrap());

    let id = identity(3, 2.0);
    let ind = id.induced_manifold().unwrap();
    let s3 = ChartManifold::sphere(3, 2.0);
    let p = s3.point(&[0.6, -0.4, 1.0]).unwrap();
    let a = ind.metric_jet(&p).unwrap();
    let b = s3.metric_jet(&p).unwrap();
    assert_abs_diff_eq!(a.g, 2.0 * &b.g, epsilon = 1e-13);
    let diff = (&a.d2g - &(&b.d2g * 2.0)).iter().fold(0.0f64, |m, v| m.max(v.abs()));
    assert!(diff < 1e-12);
}

#[test]
fn missing_third_derivatives_are_a_capability_error() {
    let inner: Arc<dyn MapJets> = Arc::new(HolomorphicPower::new(2));
    let f = SmoothMap::new("w^2 order 2", s2(), s2(), Arc::new(TruncatedJets::new(inner, 2))).unwrap();
    assert!(matches!(f.induced_manifold(), Err(GeomError::Capability { required: 3, .. })));
    assert!(f.pullback_metric_at(&s2().point(&[0.1, 0.1]).unwrap()).is_ok());
}

#[test]
fn image_outside_target_chart_is_rejected() {
    let f = SmoothMap::new("blowup", s2(), s2(), Arc::new(AffineMap::scaling(2, 100.0))).unwrap();
    let p = s2().point(&[1.0, 0.0]).unwrap();
    assert!(matches!(f.pullback_metric_at(&p), Err(GeomError::OutOfChart { .. })));
    assert!(SmoothMap::new("bad", s2(), s2(), Arc::new(AffineMap::identity(3))).is_err());
}

fn max_diff(a: impl Iterator<Item = f64>, b: impl Iterator<Item = f64>) -> f64 {
    a.zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Each derivative order of `f` against central differences of the order below.
#[test]
fn map_jets_agree_with_finite_differences() {
    let inner: Arc<dyn MapJets> = Arc::new(HolomorphicPower::with_coeff(3, 0.7, -0.4));
    let q = DMatrix::from_row_slice(2, 2, &[0.6, -0.8, 0.8, 0.6]);
    let maps: Vec<Arc<dyn MapJets>> = vec![
        Arc::new(HolomorphicPower::new(2)),
        inner.clone(),
        Arc::new(PrecomposeLinear::new(inner, q)),
    ];
    for jets in maps {
        let x = [0.4, -0.3];
        let exact = jets.jet(&x);
        assert!(exact.symmetry_defect() < 1e-12);
        let errors = |h: f64| {
            let d1 = fd::central_gradient(|y| Ok(jets.jet(y).value.iter().copied().collect()), &x, h).unwrap();
            let d2 = fd::central_gradient(|y| Ok(jets.jet(y).d1.iter().copied().collect()), &x, h).unwrap();
            let d3 = fd::central_gradient(
                |y| Ok(jets.jet(y).d2.iter().copied().collect()),
                &x,
                h,
            )
            .unwrap();
            let e1 = max_diff(
                (0..2).flat_map(|k| (0..2).map(move |a| (a, k))).map(|(a, k)| exact.d1[(a, k)]),
                (0..2).flat_map(|k| d1[k].clone()),
            );
            // d1 is column-major: entry (a, i) at a + 2 i
            let e2 = (0..2)
                .flat_map(|k| (0..2).flat_map(move |a| (0..2).map(move |i| (a, i, k))))
                .map(|(a, i, k)| (exact.d2[[a, i, k]] - d2[k][a + 2 * i]).abs())
                .fold(0.0, f64::max);
            // d2 iterates in row-major (a, i, j) order
            let t3 = exact.d3.as_ref().unwrap();
            let e3 = (0..2)
                .flat_map(|k| (0..2).flat_map(move |a| (0..2).flat_map(move |i| (0..2).map(move |j| (a, i, j, k)))))
                .map(|(a, i, j, k)| (t3[[a, i, j, k]] - d3[k][a * 4 + i * 2 + j]).abs())
                .fold(0.0, f64::max);
            (e1, e2, e3)
        };
        let (a1, a2, a3) = errors(1e-3);
        let (b1, b2, b3) = errors(5e-4);
        for (a, b) in [(a1, b1), (a2, b2), (a3, b3)] {
            let c = fd::Convergence::classify(a, b, 1e-10);
            assert!(c.is_second_order(3.5, 4.5), "{jets:?}: {c:?}");
        }
    }
}

fn induced_fd_jet(man: &ChartManifold, x: &[f64], h: f64) -> MetricJet {
    let n = man.dim();
    let st = fd::central_jet(|y| Ok(man.field().jet(y)?.g.iter().copied().collect()), x, h).unwrap();
    MetricJet {
        g: DMatrix::from_column_slice(n, n, &st.value),
        dg: Array3::from_shape_fn((n, n, n), |(i, j, k)| st.grad[k][i + n * j]),
        d2g: Array4::from_shape_fn((n, n, n, n), |(i, j, k, l)| st.hess[k][l][i + n * j]),
    }
}

#[test]
fn induced_jets_and_ricci_agree_with_finite_differences() {
    for f in [holo(2), holo(3)] {
        let ind = f.induced_manifold().unwrap();
        for p in points(&f, &SampleBox::cube(2, 1.0), 5, 12) {
            let exact = ind.metric_jet(&p).unwrap();
            let ric = curvature::ricci(&exact.g, &curvature::riemann(&exact).unwrap()).unwrap();
            let err = |h: f64| {
                let j = induced_fd_jet(&ind, p.as_slice(), h);
                let r = curvature::ricci(&j.g, &curvature::riemann(&j).unwrap()).unwrap();
                (
                    max_diff(exact.dg.iter().copied(), j.dg.iter().copied()),
                    max_diff(exact.d2g.iter().copied(), j.d2g.iter().copied()),
                    (&ric.bilinear - &r.bilinear).amax(),
                )
            };
            let (a1, a2, a3) = err(1e-3);
            let (b1, b2, b3) = err(5e-4);
            for (label, a, b) in [("dg", a1, b1), ("d2g", a2, b2), ("ricci", a3, b3)] {
                let c = fd::Convergence::classify(a, b, 1e-9);
                assert!(c.is_second_order(3.5, 4.5), "{} {label}: {c:?}", f.name());
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]
    #[test]
    fn frames_hold_for_random_holomorphic_maps(
        re in -1.5f64..1.5, im in -1.5f64..1.5, k in 1u32..4, x in -1.0f64..1.0, y in -1.0f64..1.0
    ) {
        let f = SmoothMap::new("w", s2(), s2(), Arc::new(HolomorphicPower::with_coeff(k, re, im))).unwrap();
        let p = s2().point(&[x, y]).unwrap();
        let fr = f.singular_values_at(&p).unwrap();
        let s = f.sample(&p).unwrap();
        let g_m = s2().metric_at(&p).unwrap();
        let g_n = s2().metric_at(&s.image).unwrap();
        prop_assert!(fr.residuals(&g_m, &g_n, &s.jet.d1).max() < 1e-8);
        // conformal map: both singular values coincide
        prop_assert!((fr.lambdas[0] - fr.lambdas[1]).abs() < 1e-7 * (1.0 + fr.lambdas[1]));
        let _ = DVector::<f64>::zeros(1);
    }
}
