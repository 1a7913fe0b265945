//! Finite-difference audit of the exact jets carried by a scenario.

use serde::Serialize;

use super::Scenario;
use crate::chart_manifold::ChartManifold;
use crate::error::Result;
use crate::fd::{central_gradient, max_abs_diff, Convergence};

/// Number of random sample points audited in addition to the box center.
const RANDOM_POINTS: usize = 4;
const SEED: u64 = 0x5e1f_7e57;

/// One exact derivative compared against central differences of the order below.
#[derive(Debug, Clone, Serialize)]
pub struct JetCheck {
    pub name: String,
    pub err_h: f64,
    pub err_h2: f64,
    /// `err_h / err_h2`, or `None` when both sit at the rounding floor.
    pub factor: Option<f64>,
    pub floor: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct JetSelftest {
    pub scenario: String,
    pub h: f64,
    pub checks: Vec<JetCheck>,
    pub pass: bool,
}

impl JetSelftest {
    pub fn worst_factor(&self) -> Option<(f64, f64)> {
        let f: Vec<f64> = self.checks.iter().filter_map(|c| c.factor).collect();
        if f.is_empty() {
            return None;
        }
        Some((
            f.iter().copied().fold(f64::INFINITY, f64::min),
            f.iter().copied().fold(0.0, f64::max),
        ))
    }
}

/// Compares `d_k F` from `exact` with central differences of `lower` at `h` and `h/2`.
fn audit<L, E>(name: String, x: &[f64], h: f64, lower: L, exact: E) -> Result<JetCheck>
where
    L: Fn(&[f64]) -> Result<Vec<f64>>,
    E: Fn(&[f64]) -> Result<Vec<Vec<f64>>>,
{
    let want = exact(x)?;
    let scale = want.iter().flatten().fold(0.0f64, |a, v| a.max(v.abs()))
        + lower(x)?.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let err = |step: f64| -> Result<f64> {
        let got = central_gradient(&lower, x, step)?;
        Ok(got
            .iter()
            .zip(&want)
            .map(|(a, b)| max_abs_diff(a, b))
            .fold(0.0, f64::max))
    };
    let err_h = err(h)?;
    let err_h2 = err(h / 2.0)?;
    // Rounding noise of a central difference is about eps * |F| / h.
    let floor = 1e3 * f64::EPSILON * (1.0 + scale) / (h / 2.0);
    let conv = Convergence::classify(err_h, err_h2, floor);
    let (factor, pass) = match conv {
        Convergence::Exact { .. } => (None, true),
        Convergence::Rate { factor, .. } => (Some(factor), conv.is_second_order(3.5, 4.5)),
    };
    Ok(JetCheck {
        name,
        err_h,
        err_h2,
        factor,
        floor,
        pass,
    })
}

fn metric_checks(label: &str, manifold: &ChartManifold, x: &[f64], h: f64, out: &mut Vec<JetCheck>) -> Result<()> {
    let field = manifold.field().clone();
    let d = manifold.dim();
    let f1 = field.clone();
    out.push(audit(
        format!("{label} metric order 1"),
        x,
        h,
        |y| Ok(f1.jet(y)?.g.as_slice().to_vec()),
        |y| {
            let j = field.jet(y)?;
            Ok((0..d)
                .map(|k| (0..d * d).map(|c| j.dg[[c % d, c / d, k]]).collect())
                .collect())
        },
    )?);
    let f2 = manifold.field().clone();
    out.push(audit(
        format!("{label} metric order 2"),
        x,
        h,
        |y| Ok(f2.jet(y)?.dg.iter().copied().collect()),
        |y| {
            let j = f2.jet(y)?;
            Ok((0..d)
                .map(|l| {
                    // dg is laid out [i, j, k] in standard order; match it with d2g[i, j, k, l].
                    j.d2g
                        .indexed_iter()
                        .filter(|((_, _, _, ll), _)| *ll == l)
                        .map(|(_, v)| *v)
                        .collect()
                })
                .collect())
        },
    )?);
    Ok(())
}

/// Audits every exact jet of `s` (orders 1 to 3 of the map, 1 to 2 of both
/// metrics) at the box center and a few seeded random points.
pub fn jets_selftest(s: &Scenario, h: f64) -> Result<JetSelftest> {
    let mut points = vec![s.sample_box.center()];
    points.extend(s.random_points(RANDOM_POINTS, SEED));
    let jets = s.map.jets().clone();
    let (m, n) = s.dims();
    let mut checks = Vec::new();
    for (pi, x) in points.iter().enumerate() {
        s.domain().point(x)?;
        let tag = |what: &str| format!("{what} at point {pi}");
        checks.push(audit(
            tag("map order 1"),
            x,
            h,
            |y| Ok(jets.jet(y).value.as_slice().to_vec()),
            |y| {
                let j = jets.jet(y);
                Ok((0..m).map(|k| (0..n).map(|a| j.d1[(a, k)]).collect()).collect())
            },
        )?);
        checks.push(audit(
            tag("map order 2"),
            x,
            h,
            |y| Ok(jets.jet(y).d1.as_slice().to_vec()),
            |y| {
                let j = jets.jet(y);
                // d1 is column-major: entry (a, i) at a + n * i.
                Ok((0..m)
                    .map(|k| {
                        (0..n * m)
                            .map(|c| j.d2[[c % n, c / n, k]])
                            .collect()
                    })
                    .collect())
            },
        )?);
        if s.map.order() >= 3 {
            checks.push(audit(
                tag("map order 3"),
                x,
                h,
                |y| Ok(jets.jet(y).d2.iter().copied().collect()),
                |y| {
                    let d3 = jets.jet(y).d3.expect("order-3 map provides d3");
                    Ok((0..m)
                        .map(|k| {
                            d3.indexed_iter()
                                .filter(|((_, _, _, kk), _)| *kk == k)
                                .map(|(_, v)| *v)
                                .collect()
                        })
                        .collect())
                },
            )?);
        }
        metric_checks(&tag("domain"), s.domain(), x, h, &mut checks)?;
        let y = jets.jet(x).value;
        s.target().point(y.as_slice())?;
        metric_checks(&tag("target"), s.target(), y.as_slice(), h, &mut checks)?;
    }
    let pass = checks.iter().all(|c| c.pass);
    Ok(JetSelftest {
        scenario: s.name.to_string(),
        h,
        checks,
        pass,
    })
}
