//! The two-setting extremal family: sign functions `f: {0,1}^n → {±1}`, their
//! Walsh-Hadamard coefficients `β_f`, and the product-form eigenvalues and
//! single-variable random polynomial built from them.
//!
//! All `2^n`-term sums run in rank-ascending order so that the different
//! evaluation routes can be compared to round-off.

use std::fmt::Write as _;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::coplanar::{canonical_magnitudes, max_norm_over_angles, OptimizerConfig, ParityVector, MAX_ENUM_SITES};
use crate::error::{BellError, Result};
use crate::model::{AngleConfig, BellSpec};
use crate::rng::seeded_rng;

pub const MAX_ENUMERATE_SITES: usize = 4;
pub const SIGN_TOL: f64 = 1e-9;

/// In-place unnormalized fast Walsh-Hadamard transform.
pub fn fwht(data: &mut [f64]) {
    let len = data.len();
    debug_assert!(len.is_power_of_two());
    let mut half = 1;
    while half < len {
        for base in (0..len).step_by(2 * half) {
            for i in base..base + half {
                let (a, b) = (data[i], data[i + half]);
                data[i] = a + b;
                data[i + half] = a - b;
            }
        }
        half *= 2;
    }
}

fn log2_len(len: usize) -> Result<usize> {
    if len < 2 || !len.is_power_of_two() {
        return Err(BellError::Shape(format!("length {len} is not a power of two >= 2")));
    }
    Ok(len.trailing_zeros() as usize)
}

/// `f(ε)` for every `ε ∈ {0,1}^n`, indexed by `Σ_j ε_j 2^(j-1)`.
///
/// Serialized as a hex string of the integer `Σ_ε bit(ε) 2^rank(ε)` with
/// `bit = (1 - f)/2`, most significant digit first.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SignFunction {
    values: Vec<i8>,
}

impl SignFunction {
    pub fn new(values: Vec<i8>) -> Result<Self> {
        log2_len(values.len())?;
        if values.iter().any(|&v| v != 1 && v != -1) {
            return Err(BellError::NotSignFunction("entries must be ±1".into()));
        }
        Ok(Self { values })
    }

    pub fn constant(n: usize) -> Self {
        Self {
            values: vec![1; 1 << n],
        }
    }

    /// `f(ε) = (-1)^bit_ε(index)`: the `index`-th function in rank order.
    pub fn from_index(n: usize, index: u64) -> Self {
        let values = (0..1usize << n)
            .map(|e| if (index >> e) & 1 == 1 { -1 } else { 1 })
            .collect();
        Self { values }
    }

    pub fn n(&self) -> usize {
        self.values.len().trailing_zeros() as usize
    }

    pub fn values(&self) -> &[i8] {
        &self.values
    }

    pub fn to_hex(&self) -> String {
        let digits = self.values.len().div_ceil(4);
        let mut out = String::with_capacity(digits);
        for d in (0..digits).rev() {
            let nibble = (0..4)
                .filter_map(|b| self.values.get(4 * d + b).map(|&v| (b, v)))
                .fold(0u32, |acc, (b, v)| acc | (u32::from(v < 0) << b));
            write!(out, "{nibble:x}").expect("writing to a String");
        }
        out
    }

    pub fn from_hex(n: usize, hex: &str) -> Result<Self> {
        let len = 1usize << n;
        let digits = len.div_ceil(4);
        if hex.len() != digits {
            return Err(BellError::Shape(format!(
                "expected {digits} hex digits for n = {n}, got {}",
                hex.len()
            )));
        }
        let mut values = vec![1i8; len];
        for (d, ch) in hex.chars().rev().enumerate() {
            let nibble = ch
                .to_digit(16)
                .ok_or_else(|| BellError::NotSignFunction(format!("invalid hex digit {ch:?}")))?;
            for b in 0..4 {
                let bit = (nibble >> b) & 1;
                match values.get_mut(4 * d + b) {
                    Some(v) => *v = if bit == 1 { -1 } else { 1 },
                    None if bit == 1 => {
                        return Err(BellError::NotSignFunction("hex string has bits beyond 2^n".into()))
                    }
                    None => {}
                }
            }
        }
        Ok(Self { values })
    }
}

impl Serialize for SignFunction {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Packed {
            n: usize,
            bits: String,
        }
        Packed {
            n: self.n(),
            bits: self.to_hex(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for SignFunction {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Packed {
            n: usize,
            bits: String,
        }
        let packed = Packed::deserialize(deserializer)?;
        Self::from_hex(packed.n, &packed.bits).map_err(serde::de::Error::custom)
    }
}

/// `β_f(s)`, indexed by rank of `s`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WWCoefficients {
    beta: Vec<f64>,
}

impl WWCoefficients {
    pub fn new(beta: Vec<f64>) -> Result<Self> {
        log2_len(beta.len())?;
        Ok(Self { beta })
    }

    pub fn n(&self) -> usize {
        self.beta.len().trailing_zeros() as usize
    }

    pub fn values(&self) -> &[f64] {
        &self.beta
    }

    pub fn sum_squares(&self) -> f64 {
        self.beta.iter().map(|b| b * b).sum()
    }

    pub fn to_spec(&self) -> Result<BellSpec> {
        BellSpec::from_signed(self.n(), 2, self.beta.clone())
    }
}

/// `β_f(s) = 2^{-n} Σ_ε (-1)^{ε·s} f(ε)`.
pub fn beta_from_f(f: &SignFunction) -> WWCoefficients {
    let mut data: Vec<f64> = f.values.iter().map(|&v| f64::from(v)).collect();
    fwht(&mut data);
    let scale = 1.0 / data.len() as f64;
    data.iter_mut().for_each(|v| *v *= scale);
    WWCoefficients { beta: data }
}

/// Inverse of [`beta_from_f`]; fails unless every entry lands on ±1.
pub fn f_from_beta(beta: &WWCoefficients) -> Result<SignFunction> {
    let mut data = beta.beta.clone();
    fwht(&mut data);
    let values = data
        .iter()
        .enumerate()
        .map(|(e, &v)| {
            if (v - 1.0).abs() <= SIGN_TOL {
                Ok(1)
            } else if (v + 1.0).abs() <= SIGN_TOL {
                Ok(-1)
            } else {
                Err(BellError::NotSignFunction(format!(
                    "inverse transform is {v} at rank {e}"
                )))
            }
        })
        .collect::<Result<Vec<i8>>>()?;
    Ok(SignFunction { values })
}

fn angle_config(theta0: &[f64], theta1: &[f64]) -> Result<AngleConfig> {
    if theta0.len() != theta1.len() {
        return Err(BellError::Shape("theta0 and theta1 differ in length".into()));
    }
    let angles = theta0.iter().zip(theta1).flat_map(|(&a, &b)| [a, b]).collect();
    AngleConfig::new(theta0.len(), 2, angles)
}

/// `|λ_f(ω)|` for every canonical `ω` at directions `(θ_0^j, θ_1^j)`.
pub fn ww_eigenvalue_magnitudes(f: &SignFunction, theta0: &[f64], theta1: &[f64]) -> Result<Vec<(ParityVector, f64)>> {
    let n = f.n();
    if theta0.len() != n {
        return Err(BellError::Shape(format!(
            "expected {n} angles per setting, got {}",
            theta0.len()
        )));
    }
    if n > MAX_ENUM_SITES {
        return Err(BellError::SizeLimit(format!("n = {n} exceeds {MAX_ENUM_SITES}")));
    }
    let spec = beta_from_f(f).to_spec()?;
    canonical_magnitudes(&spec, &angle_config(theta0, theta1)?)
}

/// `‖W_f‖` at fixed directions.
pub fn ww_norm_fixed_angles(f: &SignFunction, theta0: &[f64], theta1: &[f64]) -> Result<f64> {
    Ok(ww_eigenvalue_magnitudes(f, theta0, theta1)?
        .into_iter()
        .map(|(_, m)| m)
        .fold(0.0, f64::max))
}

/// `c(ε) = 2^{-n} Π_j (e^{iθ_0^j} + (-1)^{ε_j} e^{iθ_1^j})`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProductCoefficients {
    pub theta0: Vec<f64>,
    pub theta1: Vec<f64>,
    pub c: Vec<Complex64>,
}

impl ProductCoefficients {
    pub fn n(&self) -> usize {
        self.theta0.len()
    }

    pub fn sum_norm_sqr(&self) -> f64 {
        self.c.iter().map(|z| z.norm_sqr()).sum()
    }
}

pub fn product_coefficients(theta0: &[f64], theta1: &[f64]) -> Result<ProductCoefficients> {
    if theta0.len() != theta1.len() {
        return Err(BellError::Shape("theta0 and theta1 differ in length".into()));
    }
    if theta0.len() > MAX_ENUM_SITES {
        return Err(BellError::SizeLimit(format!(
            "n = {} exceeds {MAX_ENUM_SITES}",
            theta0.len()
        )));
    }
    let mut c = vec![Complex64::new(1.0, 0.0)];
    for (&a, &b) in theta0.iter().zip(theta1) {
        let (e0, e1) = (Complex64::from_polar(1.0, a), Complex64::from_polar(1.0, b));
        let plus = (e0 + e1) * 0.5;
        let minus = (e0 - e1) * 0.5;
        let mut next = Vec::with_capacity(2 * c.len());
        next.extend(c.iter().map(|z| z * plus));
        next.extend(c.iter().map(|z| z * minus));
        c = next;
    }
    Ok(ProductCoefficients {
        theta0: theta0.to_vec(),
        theta1: theta1.to_vec(),
        c,
    })
}

fn check_match(f: &SignFunction, pc: &ProductCoefficients) -> Result<()> {
    if f.values.len() != pc.c.len() {
        return Err(BellError::Shape(format!(
            "f has {} entries, c has {}",
            f.values.len(),
            pc.c.len()
        )));
    }
    Ok(())
}

/// `λ_f = Σ_ε f(ε) c(ε)`.
pub fn lambda_via_product(f: &SignFunction, pc: &ProductCoefficients) -> Result<Complex64> {
    check_match(f, pc)?;
    Ok(f.values.iter().zip(&pc.c).map(|(&s, &z)| z * f64::from(s)).sum())
}

/// `R(t) = Σ_ε f(ε) c(ε) e^{i n(ε) t}` with `n(ε) = rank(ε)`.
pub fn r_poly_eval(f: &SignFunction, pc: &ProductCoefficients, t: f64) -> Result<Complex64> {
    check_match(f, pc)?;
    Ok(f.values
        .iter()
        .zip(&pc.c)
        .enumerate()
        .map(|(e, (&s, &z))| (z * f64::from(s)) * Complex64::from_polar(1.0, e as f64 * t))
        .sum())
}

/// Attained lower bound on `sup ‖W_f‖` over directions, with the directions
/// as `(θ_0, θ_1)`.
pub fn ww_max_norm_over_angles(f: &SignFunction, opt: &OptimizerConfig) -> Result<(f64, (Vec<f64>, Vec<f64>))> {
    if f.n() > MAX_ENUM_SITES {
        return Err(BellError::SizeLimit(format!("n = {} exceeds {MAX_ENUM_SITES}", f.n())));
    }
    let spec = beta_from_f(f).to_spec()?;
    let (value, angles) = max_norm_over_angles(&spec, opt)?;
    let theta0 = (0..f.n()).map(|j| angles.get(j, 0)).collect();
    let theta1 = (0..f.n()).map(|j| angles.get(j, 1)).collect();
    Ok((value, (theta0, theta1)))
}

/// All `2^(2^n)` sign functions in rank order.
pub fn enumerate_f(n: usize) -> Result<impl Iterator<Item = SignFunction>> {
    if n == 0 || n > MAX_ENUMERATE_SITES {
        return Err(BellError::SizeLimit(format!(
            "enumeration needs 1 <= n <= {MAX_ENUMERATE_SITES}, got {n}"
        )));
    }
    let count = 1u64 << (1u32 << n);
    Ok((0..count).map(move |i| SignFunction::from_index(n, i)))
}

/// Reproducible stream of i.i.d. uniform sign functions.
pub struct SignFunctionSampler {
    rng: rand_chacha::ChaCha8Rng,
    n: usize,
}

impl Iterator for SignFunctionSampler {
    type Item = SignFunction;

    fn next(&mut self) -> Option<SignFunction> {
        let len = 1usize << self.n;
        let mut values = Vec::with_capacity(len);
        while values.len() < len {
            let word: u64 = self.rng.random();
            let take = (len - values.len()).min(64);
            values.extend((0..take).map(|b| if (word >> b) & 1 == 0 { 1i8 } else { -1i8 }));
        }
        Some(SignFunction { values })
    }
}

pub fn sample_f(seed: u64, n: usize) -> Result<SignFunctionSampler> {
    if n == 0 || n > MAX_ENUM_SITES {
        return Err(BellError::SizeLimit(format!(
            "sampling needs 1 <= n <= {MAX_ENUM_SITES}, got {n}"
        )));
    }
    Ok(SignFunctionSampler {
        rng: seeded_rng(seed),
        n,
    })
}
