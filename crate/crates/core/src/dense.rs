//! Dense-matrix verification oracle.
//!
//! Materializes the Bell operator as a `2^n × 2^n` Hermitian matrix from the
//! single-site spin matrices and estimates its spectral norm by power
//! iteration on `Q²`. Shares no code with the analytic spectrum in
//! [`crate::coplanar`].

use num_complex::Complex64;
use rand::Rng;

use crate::error::{BellError, Result};
use crate::model::{AngleConfig, BellSpec, PolarConfig};
use crate::rng::seeded_rng;

pub const MAX_DENSE_SITES: usize = 12;
pub const MAX_POWER_ITERS: usize = 100_000;
pub const RESIDUAL_TOL: f64 = 1e-12;

/// Directions for the dense build.
#[derive(Debug, Clone, Copy)]
pub enum Directions<'a> {
    Coplanar(&'a AngleConfig),
    Polar(&'a PolarConfig),
}

impl Directions<'_> {
    fn dims(&self) -> (usize, usize) {
        match self {
            Directions::Coplanar(a) => (a.n(), a.r()),
            Directions::Polar(p) => (p.n(), p.r()),
        }
    }

    fn polar(&self, site: usize, setting: usize) -> (f64, f64) {
        match self {
            Directions::Coplanar(a) => (std::f64::consts::FRAC_PI_2, a.get(site, setting)),
            Directions::Polar(p) => p.direction(site, setting),
        }
    }
}

/// `σ(a) = [[cos θ, sin θ e^{−iφ}], [sin θ e^{iφ}, −cos θ]]`.
pub fn spin_matrix(theta: f64, phi: f64) -> [[Complex64; 2]; 2] {
    let (s, c) = theta.sin_cos();
    [
        [Complex64::new(c, 0.0), Complex64::from_polar(s, -phi)],
        [Complex64::from_polar(s, phi), Complex64::new(-c, 0.0)],
    ]
}

/// Row-major dense complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseOperator {
    dim: usize,
    data: Vec<Complex64>,
}

impl DenseOperator {
    pub fn build(spec: &BellSpec, directions: Directions<'_>) -> Result<Self> {
        let (n, r) = directions.dims();
        if (n, r) != (spec.n(), spec.r()) {
            return Err(BellError::Shape(format!(
                "spec has (n, r) = ({}, {}) but directions have ({n}, {r})",
                spec.n(),
                spec.r()
            )));
        }
        if n > MAX_DENSE_SITES {
            return Err(BellError::SizeLimit(format!(
                "dense build needs n <= {MAX_DENSE_SITES}, got {n}"
            )));
        }
        let spins: Vec<Vec<[[Complex64; 2]; 2]>> = (0..n)
            .map(|j| {
                (0..r)
                    .map(|k| {
                        let (theta, phi) = directions.polar(j, k);
                        spin_matrix(theta, phi)
                    })
                    .collect()
            })
            .collect();
        Ok(Self::build_block(spec.values(), &spins, n, r))
    }

    /// Operator of sites `0..m` with coefficients `values` (length `r^m`):
    /// `Σ_k σ^{m-1}_k ⊗ (operator of the slice with last setting k)`.
    fn build_block(values: &[f64], spins: &[Vec<[[Complex64; 2]; 2]>], m: usize, r: usize) -> Self {
        if m == 0 {
            return Self {
                dim: 1,
                data: vec![Complex64::new(values[0], 0.0)],
            };
        }
        let slice = values.len() / r;
        let sub_dim = 1usize << (m - 1);
        let dim = 2 * sub_dim;
        let mut data = vec![Complex64::new(0.0, 0.0); dim * dim];
        for k in 0..r {
            let chunk = &values[k * slice..(k + 1) * slice];
            if chunk.iter().all(|&v| v == 0.0) {
                continue;
            }
            let sub = Self::build_block(chunk, spins, m - 1, r);
            let sigma = &spins[m - 1][k];
            for (a, sigma_row) in sigma.iter().enumerate() {
                for (b, &s) in sigma_row.iter().enumerate() {
                    if s == Complex64::new(0.0, 0.0) {
                        continue;
                    }
                    for i in 0..sub_dim {
                        let row = (a * sub_dim + i) * dim + b * sub_dim;
                        let src = &sub.data[i * sub_dim..(i + 1) * sub_dim];
                        for (dst, &v) in data[row..row + sub_dim].iter_mut().zip(src) {
                            *dst += s * v;
                        }
                    }
                }
            }
        }
        Self { dim, data }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.data[row * self.dim + col]
    }

    pub fn apply(&self, v: &[Complex64]) -> Vec<Complex64> {
        self.data
            .chunks_exact(self.dim)
            .map(|row| row.iter().zip(v).map(|(a, x)| a * x).sum())
            .collect()
    }

    /// Largest `|entry - conj(transpose entry)|`.
    pub fn hermitian_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.dim {
            for j in 0..self.dim {
                worst = worst.max((self.get(i, j) - self.get(j, i).conj()).norm());
            }
        }
        worst
    }
}

fn vec_norm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn random_unit(dim: usize, seed: u64) -> Vec<Complex64> {
    let mut rng = seeded_rng(seed);
    let mut v: Vec<Complex64> = (0..dim)
        .map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
        .collect();
    let norm = vec_norm(&v);
    v.iter_mut().for_each(|z| *z /= norm);
    v
}

/// Spectral norm of a Hermitian operator by power iteration on `Q²`.
pub fn power_norm(op: &DenseOperator) -> Result<f64> {
    const STAGNATION_WINDOW: usize = 2_000;
    let mut restarts = 0u64;
    let mut v = random_unit(op.dim, restarts);
    let mut checkpoint = f64::INFINITY;
    for iter in 1..=MAX_POWER_ITERS {
        let w = op.apply(&op.apply(&v));
        let rho: f64 = v.iter().zip(&w).map(|(a, b)| (a.conj() * b).re).sum();
        let wn = vec_norm(&w);
        if wn == 0.0 {
            return Ok(0.0);
        }
        let residual = v
            .iter()
            .zip(&w)
            .map(|(a, b)| (b - a * rho).norm_sqr())
            .sum::<f64>()
            .sqrt()
            / rho.abs();
        if residual <= RESIDUAL_TOL {
            return Ok(rho.max(0.0).sqrt());
        }
        if iter % STAGNATION_WINDOW == 0 {
            if residual >= 0.999 * checkpoint {
                restarts += 1;
                v = random_unit(op.dim, restarts);
                checkpoint = f64::INFINITY;
                continue;
            }
            checkpoint = residual;
        }
        v = w.into_iter().map(|z| z / wn).collect();
    }
    Err(BellError::Convergence(format!(
        "no convergence after {MAX_POWER_ITERS} iterations"
    )))
}

/// `‖Q‖` via the dense matrix, for coplanar or general directions.
pub fn dense_norm_oracle(spec: &BellSpec, directions: Directions<'_>) -> Result<f64> {
    power_norm(&DenseOperator::build(spec, directions)?)
}
