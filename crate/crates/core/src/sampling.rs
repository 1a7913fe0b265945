//! Axis-aligned sample boxes, tensor-product grids and seeded random sampling.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{GeomError, Result};

/// Axis-aligned box `[lo_0, hi_0] x ... x [lo_{d-1}, hi_{d-1}]` in chart coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleBox {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl SampleBox {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Self {
        assert_eq!(lo.len(), hi.len(), "box corners must have equal length");
        assert!(
            lo.iter().zip(&hi).all(|(a, b)| a < b),
            "box must have positive extent on every axis"
        );
        Self { lo, hi }
    }

    /// The cube `[-half, half]^dim`.
    pub fn cube(dim: usize, half: f64) -> Self {
        Self::new(vec![-half; dim], vec![half; dim])
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn center(&self) -> Vec<f64> {
        self.lo.iter().zip(&self.hi).map(|(a, b)| 0.5 * (a + b)).collect()
    }

    /// Box shrunk symmetrically by `frac` of its width on each side.
    pub fn shrink(&self, frac: f64) -> Self {
        let (lo, hi) = self
            .lo
            .iter()
            .zip(&self.hi)
            .map(|(&a, &b)| {
                let w = b - a;
                (a + frac * w, b - frac * w)
            })
            .unzip();
        Self::new(lo, hi)
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x
                .iter()
                .zip(self.lo.iter().zip(&self.hi))
                .all(|(v, (a, b))| *v >= *a && *v <= *b)
    }

    pub fn contains_box(&self, other: &SampleBox) -> bool {
        self.contains(&other.lo) && self.contains(&other.hi)
    }

    /// Tensor-product grid including the box faces, in row-major order
    /// (last axis fastest).
    pub fn grid(&self, resolution: &[usize]) -> Result<Grid> {
        let res = expand_resolution(resolution, self.dim())?;
        let total: usize = res.iter().product();
        let mut points = Vec::with_capacity(total);
        let mut idx = vec![0usize; self.dim()];
        for _ in 0..total {
            points.push(
                idx.iter()
                    .enumerate()
                    .map(|(a, &i)| {
                        let t = i as f64 / (res[a] - 1) as f64;
                        self.lo[a] + t * (self.hi[a] - self.lo[a])
                    })
                    .collect(),
            );
            for a in (0..self.dim()).rev() {
                idx[a] += 1;
                if idx[a] < res[a] {
                    break;
                }
                idx[a] = 0;
            }
        }
        Ok(Grid {
            sample_box: self.clone(),
            resolution: res,
            points,
        })
    }

    pub fn random_point<R: Rng>(&self, rng: &mut R) -> Vec<f64> {
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(&a, &b)| rng.random_range(a..b))
            .collect()
    }

    /// `count` uniformly distributed points from a ChaCha stream seeded with `seed`.
    pub fn random_points(&self, count: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..count).map(|_| self.random_point(&mut rng)).collect()
    }
}

fn expand_resolution(resolution: &[usize], dim: usize) -> Result<Vec<usize>> {
    let Some(&last) = resolution.last() else {
        return Err(GeomError::EmptyGrid);
    };
    let res: Vec<usize> = (0..dim)
        .map(|a| resolution.get(a).copied().unwrap_or(last))
        .collect();
    if res.iter().any(|&n| n < 2) {
        return Err(GeomError::InvalidParameter {
            name: "resolution",
            value: *res.iter().min().unwrap_or(&0) as f64,
            reason: "grid needs at least 2 points per axis",
        });
    }
    Ok(res)
}

/// A materialised grid over a [`SampleBox`].
#[derive(Debug, Clone)]
pub struct Grid {
    pub sample_box: SampleBox,
    pub resolution: Vec<usize>,
    pub points: Vec<Vec<f64>>,
}

impl Grid {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Multi-index of the flat point index.
    pub fn multi_index(&self, flat: usize) -> Vec<usize> {
        let mut rem = flat;
        let mut idx = vec![0; self.resolution.len()];
        for a in (0..self.resolution.len()).rev() {
            idx[a] = rem % self.resolution[a];
            rem /= self.resolution[a];
        }
        idx
    }

    pub fn flat_index(&self, multi: &[usize]) -> usize {
        multi
            .iter()
            .zip(&self.resolution)
            .fold(0, |acc, (&i, &n)| acc * n + i)
    }

    pub fn is_boundary(&self, flat: usize) -> bool {
        self.multi_index(flat)
            .iter()
            .zip(&self.resolution)
            .any(|(&i, &n)| i == 0 || i + 1 == n)
    }

    /// Grid spacing per axis.
    pub fn spacing(&self) -> Vec<f64> {
        self.resolution
            .iter()
            .enumerate()
            .map(|(a, &n)| (self.sample_box.hi[a] - self.sample_box.lo[a]) / (n - 1) as f64)
            .collect()
    }
}

/// Deterministic per-item seed derived from a run seed (splitmix64 finaliser).
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
