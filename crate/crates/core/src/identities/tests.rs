use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::chart_manifold::sym_eigen;
use crate::error::GeomError;
use crate::geometry::PointGeometry;
use crate::sampling::SampleBox;
use crate::scenarios::{lookup, registry, Scenario};

fn geo_at(name: &str, x: &[f64]) -> PointGeometry {
    let s = lookup(name).unwrap();
    PointGeometry::compute(&s.map, &s.domain().point(x).unwrap()).unwrap()
}

fn random_geos(s: &Scenario, count: usize, seed: u64) -> Vec<PointGeometry> {
    s.random_points(count, seed)
        .iter()
        .map(|x| PointGeometry::compute(&s.map, &s.domain().point(x).unwrap()).unwrap())
        .collect()
}

#[test]
fn constant_map_decomposition_closed_form() {
    // f*R_N = 0 and R_M(e_k, e_l, e_k, e_l) = 1/r^2 for g = g_M, so both sides are -2c(m-1)/r^2
    for (name, m, r) in [("constant-s2", 2.0, 1.0), ("constant-s3", 3.0, 2.0)] {
        for c in [0.5, 2.0, 7.0] {
            let g = geo_at(name, &vec![0.3; m as usize]);
            for l in 0..m as usize {
                let d = curvature_decomposition(&g, c, 1.0, l).unwrap();
                let expected = -2.0 * c * (m - 1.0) / (r * r);
                assert!((d.lhs - expected).abs() < 1e-8, "{name} c={c}: {}", d.lhs);
                assert!((d.lemma_rhs() - expected).abs() < 1e-8);
                assert!((d.corollary_rhs() - expected).abs() < 1e-8);
            }
        }
    }
    let d = curvature_decomposition(&geo_at("constant-s2", &[0.0, 0.0]), 2.0, 1.0, 0).unwrap();
    assert!((d.lhs + 4.0).abs() < 1e-8);
    assert!((d.corollary_rhs() + 4.0).abs() < 1e-8);
}

#[test]
fn identity_decomposition_vanishes_term_by_term() {
    let g = geo_at("identity-s2", &[0.4, -0.7]);
    for l in 0..2 {
        let d = curvature_decomposition(&g, 1.0, 1.0, l).unwrap();
        assert!(d.lhs.abs() < 1e-10);
        for t in d.lemma_terms.iter().chain(&d.corollary_terms) {
            assert!(t.abs() < 1e-10, "{:?}", d);
        }
    }
}

#[test]
fn decomposition_frame_index_is_checked() {
    let g = geo_at("identity-s2", &[0.0, 0.0]);
    assert!(matches!(
        curvature_decomposition(&g, 1.0, 1.0, 2),
        Err(GeomError::DimensionMismatch { .. })
    ));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn decompositions_hold_for_any_c_and_sigma(
        idx in 0usize..14,
        seed in any::<u64>(),
        c in 1e-3f64..=10.0,
        sigma in -2.0f64..=2.0,
        l in 0usize..3,
    ) {
        let all = registry();
        let s = &all[idx % all.len()];
        let g = &random_geos(s, 1, seed)[0];
        let l = l % s.dims().0;
        let d = curvature_decomposition(g, c, sigma, l).unwrap();
        prop_assert!(d.lemma_residual() < 1e-6, "{} {:?}", s.name, d);
        prop_assert!(d.corollary_residual() < 1e-6);
        prop_assert!(d.rhs_agreement() < 1e-8);
    }

    #[test]
    fn psd_construction_has_exact_null_vector(seed in any::<u64>(), m in 2usize..5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let b = DMatrix::from_fn(m, m, |i, j| ((i * 7 + j * 3 + seed as usize % 11) % 5) as f64 * 0.1);
        let g = &b * b.transpose() + DMatrix::identity(m, m);
        let mut v = DVector::from_fn(m, |i, _| 1.0 + i as f64);
        v /= v.dot(&(&g * &v)).sqrt();
        let theta = psd_with_null_vector(&g, &v, &mut rng);
        prop_assert!((&theta * &v).amax() < 1e-10);
        prop_assert!((&theta - theta.transpose()).amax() == 0.0);
        let eig = sym_eigen(&theta, &DMatrix::identity(m, m)).unwrap();
        prop_assert!(eig.values.iter().all(|&x| x > -1e-10));
    }
}

#[test]
fn normal_estimate_is_sharp_at_lambda_max() {
    // s(xi, xi) = -(1 - lambda^2)/(1 + lambda^2) equals the bound for the normal paired with lambda_m
    let g = geo_at("identity-s2", &[0.2, 0.1]);
    assert!(normal_estimate(&g, 1.0, 20, 1).unwrap().worst_slack.abs() < 1e-12);
    let g = geo_at("constant-s2", &[0.2, 0.1]);
    assert!(normal_estimate(&g, 0.0, 20, 1).unwrap().worst_slack.abs() < 1e-12);
    let s = lookup("holo-w2").unwrap();
    for g in random_geos(&s, 50, 3) {
        let lm2 = g.lambda_max_sq();
        let at = normal_estimate(&g, lm2, 20, 5).unwrap();
        assert!(at.worst_slack >= -1e-10 && at.worst_slack < 1e-10, "{}", at.worst_slack);
        let above = normal_estimate(&g, lm2 + 1.0, 20, 5).unwrap();
        assert!(above.worst_slack > 0.0);
        assert_eq!(above.normals_tested, 2 + 20 + 4);
    }
}

#[test]
fn normal_estimate_rejects_small_c() {
    let g = geo_at("holo-w2", &[0.5, 0.5]);
    let err = normal_estimate(&g, 0.5 * g.lambda_max_sq(), 5, 0).unwrap_err();
    assert!(matches!(err, GeomError::Precondition(_)));
    let s = lookup("holo-w2").unwrap();
    assert!(lemma_aest_check(&s.map, &s.domain().point(&[0.5, 0.5]).unwrap(), 100.0, 0).is_ok());
}

#[test]
fn psi_anchors() {
    // totally geodesic and flat: every term vanishes
    let g = geo_at("torus-linear", &[0.3, -0.2]);
    assert_eq!(psi_c_matrix(&g, 2.0, &DMatrix::zeros(2, 2)).unwrap().amax(), 0.0);
    // constant map, theta = g: (m - 1)/r^2 (4c/(1 + c) - 2) on a unit vector
    let g = geo_at("constant-s2", &[0.4, 0.1]);
    let e1 = g.e(0);
    for (c, expected) in [(1.0, 0.0), (3.0, 1.0), (0.0, -2.0)] {
        let v = psi_c_apply(&g, c, &g.g().clone(), &e1, &e1).unwrap();
        assert!((v - expected).abs() < 1e-10, "c={c}: {v}");
    }
    let g = geo_at("constant-s3", &[0.4, 0.1, -0.3]);
    let e = g.e(2);
    let v = psi_c_apply(&g, 3.0, &g.g().clone(), &e, &e).unwrap();
    assert!((v - 2.0 / 4.0).abs() < 1e-10);
}

#[test]
fn psi_matrix_is_symmetric_and_bilinear() {
    let g = geo_at("holo-w3", &[0.3, 0.5]);
    let theta = DMatrix::from_row_slice(2, 2, &[1.0, 0.3, 0.3, 2.0]);
    let psi = psi_c_matrix(&g, 4.0, &theta).unwrap();
    assert_eq!(psi, psi.transpose());
    let (u, w) = (DVector::from_vec(vec![1.0, -2.0]), DVector::from_vec(vec![0.5, 3.0]));
    let direct = psi_c_apply(&g, 4.0, &theta, &u, &w).unwrap();
    let by_parts = u[0] * w[0] * psi[(0, 0)] + u[0] * w[1] * psi[(0, 1)] + u[1] * w[0] * psi[(1, 0)] + u[1] * w[1] * psi[(1, 1)];
    assert!((direct - by_parts).abs() < 1e-12);
}

fn metric_jet_as_tensor(g: &PointGeometry) -> TensorJet {
    let m = g.dims().0;
    let jet = &g.induced;
    TensorJet {
        value: jet.g.clone(),
        d1: (0..m).map(|k| DMatrix::from_fn(m, m, |i, j| jet.dg[[i, j, k]])).collect(),
        d2: (0..m)
            .map(|k| (0..m).map(|l| DMatrix::from_fn(m, m, |i, j| jet.d2g[[i, j, k, l]])).collect())
            .collect(),
    }
}

#[test]
fn rough_laplacian_of_metric_vanishes() {
    for name in ["holo-w2", "holo-w3", "proj-s3-s1", "torus-t3-t2", "rotation-s3"] {
        let s = lookup(name).unwrap();
        for g in random_geos(&s, 5, 11) {
            let lap = rough_laplacian_of(&g, &metric_jet_as_tensor(&g)).unwrap();
            assert!(lap.amax() < 1e-9, "{name}: {lap}");
        }
    }
}

#[test]
fn rough_laplacian_is_flat_trace_without_christoffels() {
    let mut t = TensorJet {
        value: DMatrix::zeros(2, 2),
        d1: vec![DMatrix::zeros(2, 2); 2],
        d2: vec![vec![DMatrix::zeros(2, 2); 2]; 2],
    };
    t.d2[0][0] = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 3.0]);
    t.d2[1][1] = DMatrix::from_row_slice(2, 2, &[4.0, 0.0, 0.0, -1.0]);
    let gamma = ndarray::Array3::zeros((2, 2, 2));
    let dgamma = ndarray::Array4::zeros((2, 2, 2, 2));
    let g_inv = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 0.5]));
    let lap = rough_laplacian(&t, &g_inv, &gamma, &dgamma);
    assert_eq!(lap, DMatrix::from_row_slice(2, 2, &[3.0, 2.0, 2.0, 2.5]));
}

#[test]
fn elliptic_equation_on_parallel_fields() {
    // Phi_c is a constant multiple of g for rigid maps, hence parallel
    for name in ["identity-s2", "identity-s3-r2", "constant-s2", "constant-s3", "rotation-s3"] {
        let s = lookup(name).unwrap();
        for g in random_geos(&s, 5, 2) {
            for c in [0.5, 1.0, 2.0] {
                let exact = elliptic_residual(&s.map, &g, c, LaplacianScheme::ExactJet).unwrap();
                assert!(exact < 1e-8, "{name}: {exact}");
            }
        }
    }
}

#[test]
fn elliptic_equation_converges_on_minimal_maps() {
    for name in ["holo-w2", "holo-w3", "holo-dilate-0.5"] {
        let s = lookup(name).unwrap();
        for g in random_geos(&s, 10, 4) {
            let coarse = elliptic_residual(&s.map, &g, 2.0, LaplacianScheme::Central { h: 1e-3 }).unwrap();
            let fine = elliptic_residual(&s.map, &g, 2.0, LaplacianScheme::Central { h: 5e-4 }).unwrap();
            let rich = elliptic_residual(&s.map, &g, 2.0, LaplacianScheme::Richardson { h: 1e-3 }).unwrap();
            let exact = elliptic_residual(&s.map, &g, 2.0, LaplacianScheme::ExactJet).unwrap();
            assert!(coarse < 1e-4);
            assert!(exact < 1e-10, "{name}: {exact}");
            assert!(rich < coarse);
            if coarse > 1e-7 {
                let q = coarse / fine;
                assert!((3.5..=4.5).contains(&q), "{name}: factor {q}");
            }
        }
    }
}

#[test]
fn delta_phi_requires_minimality() {
    let s = lookup("proj-s3-s1").unwrap();
    let p = s.domain().point(&[0.3, 0.2, 0.1]).unwrap();
    assert!(matches!(
        delta_phi_residual(&s.map, &p, 2.0, LaplacianScheme::Central { h: 1e-3 }),
        Err(GeomError::Precondition(_))
    ));
    let s = lookup("holo-w2").unwrap();
    let p = s.domain().point(&[0.3, 0.2]).unwrap();
    assert!(delta_phi_residual(&s.map, &p, 2.0, LaplacianScheme::Central { h: 1e-3 }).unwrap() < 1e-4);
}

/// `ln v = -ln(1 + lambda^2)` for the conformal map `w -> w^k` on the unit sphere,
/// with `lambda = k |w|^(k-1) (1 + |w|^2) / (1 + |w|^(2k))`.
fn holo_ln_v(k: i32, x: &[f64]) -> f64 {
    let r2 = x[0] * x[0] + x[1] * x[1];
    let lambda = k as f64 * r2.powf((k - 1) as f64 / 2.0) * (1.0 + r2) / (1.0 + r2.powi(k));
    -(1.0 + lambda * lambda).ln()
}

#[test]
fn log_jacobian_lhs_matches_conformal_oracle() {
    // g = (1 + lambda^2) g_M = (1 + lambda^2) phi delta, so Delta_g = flat Laplacian / ((1 + lambda^2) phi)
    for k in [2, 3] {
        let s = lookup(if k == 2 { "holo-w2" } else { "holo-w3" }).unwrap();
        for x in s.random_points(10, 8) {
            let g = PointGeometry::compute(&s.map, &s.domain().point(&x).unwrap()).unwrap();
            let lj = log_jacobian(&s.map, &g, LaplacianScheme::ExactJet).unwrap();
            let h = 1e-3;
            let at = |dx: f64, dy: f64| holo_ln_v(k, &[x[0] + dx, x[1] + dy]);
            let flat = (at(h, 0.0) + at(-h, 0.0) + at(0.0, h) + at(0.0, -h) - 4.0 * at(0.0, 0.0)) / (h * h);
            let r2 = x[0] * x[0] + x[1] * x[1];
            let phi = 4.0 / (1.0 + r2).powi(2);
            let lambda_sq = g.lambda_max_sq();
            let oracle = flat / ((1.0 + lambda_sq) * phi);
            assert!((lj.lhs - oracle).abs() < 1e-5 * (1.0 + oracle.abs()), "k={k}: {} vs {oracle}", lj.lhs);
            assert!((lj.v_singular - at(0.0, 0.0).exp()).abs() < 1e-12);
        }
    }
}

#[test]
fn log_jacobian_identity_and_constant() {
    let g = geo_at("identity-s2", &[0.6, -0.3]);
    let f = &lookup("identity-s2").unwrap().map;
    let lj = log_jacobian(f, &g, LaplacianScheme::ExactJet).unwrap();
    assert!((lj.v_singular - 0.5).abs() < 1e-14 && (lj.v_det - 0.5).abs() < 1e-14);
    assert!(lj.lhs.abs() < 1e-10 && lj.rhs.abs() < 1e-10);
    let g = geo_at("constant-s2", &[0.6, -0.3]);
    let f = &lookup("constant-s2").unwrap().map;
    let lj = log_jacobian(f, &g, LaplacianScheme::Central { h: 1e-3 }).unwrap();
    assert!((lj.v_det - 1.0).abs() < 1e-14);
    assert_eq!(lj.lhs, 0.0);
    assert!(lj.rhs.abs() < 1e-14);
}

#[test]
fn log_jacobian_converges_on_square_map() {
    let s = lookup("holo-w2").unwrap();
    for g in random_geos(&s, 50, 9) {
        let coarse = log_jacobian(&s.map, &g, LaplacianScheme::Central { h: 1e-3 }).unwrap();
        let fine = log_jacobian(&s.map, &g, LaplacianScheme::Central { h: 5e-4 }).unwrap();
        let exact = log_jacobian(&s.map, &g, LaplacianScheme::ExactJet).unwrap();
        assert!(coarse.residual() < 1e-4);
        assert!(exact.residual() < 1e-10, "{}", exact.residual());
        assert!((coarse.v_singular - coarse.v_det).abs() < 1e-12);
        if coarse.residual() > 1e-7 {
            let q = coarse.residual() / fine.residual();
            assert!((3.5..=4.5).contains(&q), "factor {q}");
        }
        let (r1, r2) = minimality_relations(&coarse);
        assert!(r1 < 1e-6 && r2 < 1e-6);
    }
}

#[test]
fn log_jacobian_needs_surfaces() {
    let s = lookup("rotation-s3").unwrap();
    let p = s.domain().point(&[0.1, 0.2, 0.3]).unwrap();
    assert!(matches!(
        log_jacobian_residual_2d(&s.map, &p, LaplacianScheme::ExactJet),
        Err(GeomError::DimensionMismatch { .. })
    ));
}

#[test]
fn null_probe_on_rigid_maps() {
    for (name, c) in [("identity-s2", 1.0), ("rotation-s3", 1.0), ("constant-s2", 0.0), ("constant-s3", 0.0)] {
        let s = lookup(name).unwrap();
        for (i, g) in random_geos(&s, 10, 6).iter().enumerate() {
            let p = null_eigenvector_probe(g, c, 20, i as u64, 1e-8).unwrap();
            assert_eq!(p.failures, 0, "{name}");
            assert!(p.min_value > -1e-10);
            assert!(p.reduction_gap < 1e-10);
            assert!(p.null_defect < 1e-10);
        }
    }
}

#[test]
fn null_probe_reduction_holds_off_hypotheses() {
    // the Ricci terms drop out whenever theta v = 0, hypotheses or not
    let s = lookup("holo-w3").unwrap();
    for g in random_geos(&s, 5, 12) {
        let p = null_eigenvector_probe(&g, 9.0, 20, 3, 1e-8).unwrap();
        assert!(p.reduction_gap < 1e-9 * (1.0 + p.min_value.abs()));
    }
}

#[test]
fn probe_branch_split() {
    assert_eq!(ProbeBranch::for_lambda0_sq(0.25), ProbeBranch::StrictlyLengthDecreasing);
    assert_eq!(ProbeBranch::for_lambda0_sq(1.0), ProbeBranch::Expanding);
}

#[test]
fn sdc_on_rigid_and_minimal_maps() {
    let s = lookup("identity-s2").unwrap();
    let rep = sdc_probe(&s.map, 1.0, &s.default_grid(), LaplacianScheme::Central { h: 1e-3 }, 1e-6).unwrap();
    match rep.outcome {
        SdcOutcome::Checked { gradient, laplacian, pass, .. } => {
            assert!(pass && gradient < 1e-9 && laplacian.abs() < 1e-6);
        }
        other => panic!("{other:?}"),
    }
    let s = lookup("holo-w2").unwrap();
    let grid = s.default_grid();
    let lambda0_sq = grid
        .points
        .iter()
        .map(|x| s.map.singular_values_at(&s.domain().point(x).unwrap()).unwrap().lambda_max().powi(2))
        .fold(0.0, f64::max);
    let rep = sdc_probe(&s.map, lambda0_sq, &grid, LaplacianScheme::ExactJet, 1e-8).unwrap();
    assert!(matches!(rep.outcome, SdcOutcome::Checked { pass: true, .. }), "{rep:?}");
}

#[test]
fn sdc_boundary_maximum_is_inconclusive() {
    // lambda grows with |x| for w -> w/2, so the top eigenvalue of Phi_c peaks at the corner nearest 0
    let s = lookup("holo-dilate-0.5").unwrap();
    let grid = SampleBox::new(vec![0.2, 0.2], vec![0.8, 0.8]).grid(&[9]).unwrap();
    let rep = sdc_probe(&s.map, 1.0, &grid, LaplacianScheme::ExactJet, 1e-8).unwrap();
    assert!(matches!(rep.outcome, SdcOutcome::Inconclusive { .. }));
    assert_eq!(rep.argmax, vec![0.2, 0.2]);
}

#[test]
fn final_proof_terms_vanish_for_isometries() {
    for name in ["identity-s2", "rotation-s2", "identity-s3-r2"] {
        let s = lookup(name).unwrap();
        for g in random_geos(&s, 3, 1) {
            let t = final_proof_terms(&g, 1.0, s.sigma).unwrap();
            assert!(t.terms.iter().all(|x| x.abs() < 1e-10), "{name}: {t:?}");
        }
    }
}

#[test]
fn final_proof_first_term_bounds_its_source() {
    // the normal estimate caps sum (s - a g)(A_ij, A_ij) by 2 (c - 1)/(1 + c) |A|^2
    let s = lookup("holo-w2").unwrap();
    for g in random_geos(&s, 10, 2) {
        let c = g.lambda_max_sq();
        let a = (1.0 - c) / (1.0 + c);
        let mut exact = 0.0;
        for row in &g.extrinsic.a {
            for x in row {
                exact += g.smn(x, x) - a * g.gmn(x, x);
            }
        }
        let t = final_proof_terms(&g, c, 1.0).unwrap();
        let bound_no_trace = 4.0 / (1.0 + c) * (c - 1.0) * g.extrinsic.a_norm_sq;
        let trace_part = t.terms[0] - bound_no_trace;
        assert!((trace_part + 4.0 * c / (1.0 + c).powi(2) * g.trace_s()).abs() < 1e-12);
        assert!(exact <= 2.0 * (c - 1.0) / (1.0 + c) * g.extrinsic.a_norm_sq + 1e-9);
    }
}

#[test]
fn suite_passes_on_every_scenario() {
    let cfg = SuiteConfig {
        points: 8,
        draws: 5,
        ..SuiteConfig::default()
    };
    for s in registry() {
        let reports = verify_scenario(&s, &cfg).unwrap();
        assert_eq!(reports.len(), DEFAULT_TOLERANCES.len());
        for r in &reports {
            assert_eq!(r.pass, r.max_residual <= r.tolerance);
            assert!(r.pass, "{}: {r:?}", s.name);
        }
    }
}

#[test]
fn suite_skips_with_reasons() {
    let cfg = SuiteConfig {
        points: 4,
        draws: 2,
        ..SuiteConfig::default()
    };
    let reports = verify_scenario(&lookup("proj-s3-s1").unwrap(), &cfg).unwrap();
    let status = |n: &str| reports.iter().find(|r| r.name == n).unwrap().status.clone();
    assert_eq!(status("elliptic-equation"), "skipped (non-minimal)");
    assert_eq!(status("log-jacobian"), "skipped (needs dim M = dim N = 2)");
    assert_eq!(status("final-proof-signs"), "skipped (gate hypotheses fail)");
    assert_eq!(status("frame-formulas"), "checked");
}

#[test]
fn suite_is_deterministic_and_honours_overrides() {
    let s = lookup("holo-w2").unwrap();
    let mut cfg = SuiteConfig {
        points: 5,
        draws: 3,
        seed: 42,
        ..SuiteConfig::default()
    };
    assert_eq!(verify_scenario(&s, &cfg).unwrap(), verify_scenario(&s, &cfg).unwrap());
    cfg.tolerances.insert("elliptic-equation".into(), 1e-12);
    let reports = verify_scenario(&s, &cfg).unwrap();
    let ell = reports.iter().find(|r| r.name == "elliptic-equation").unwrap();
    assert_eq!(ell.tolerance, 1e-12);
    assert!(!ell.pass);
}

#[test]
fn report_constructors() {
    let r = IdentityReport::checked("x", 3, 0.5, 0.4);
    assert!(!r.pass);
    let r = IdentityReport::skipped("x", 0.4, "why");
    assert!(r.pass && r.is_skipped() && r.status == "skipped (why)");
    let r = IdentityReport::inconclusive("x", 0.4, "edge").with_extra("k", 1.0);
    assert!(r.pass && !r.is_skipped() && r.extras["k"] == 1.0);
}
