//! Shared data model: multi-indices, coefficient tensors, sign assignments
//! and direction grids.
//!
//! Every `r^n`-sized array in this crate is indexed by the little-endian rank
//! of a [`MultiIndex`]: site 1 is the least significant digit. Settings are
//! 0-based.

use std::f64::consts::TAU;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{BellError, Result};
use crate::rng::seeded_rng;

/// Tolerance for the unit sum-of-squares invariant.
pub const NORMALIZATION_TOL: f64 = 1e-12;

/// Number of multi-indices `r^n`, or a size-limit error on overflow.
pub fn tensor_len(n: usize, r: usize) -> Result<usize> {
    let exp = u32::try_from(n).map_err(|_| BellError::SizeLimit(format!("n = {n}")))?;
    r.checked_pow(exp)
        .filter(|&len| len <= isize::MAX as usize / 16)
        .ok_or_else(|| BellError::SizeLimit(format!("r^n overflows for r = {r}, n = {n}")))
}

/// Setting choice `(k_1, ..., k_n)`, one entry per site.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MultiIndex(pub Vec<usize>);

impl MultiIndex {
    pub fn new(settings: Vec<usize>) -> Self {
        Self(settings)
    }

    pub fn settings(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// `sum_j k_j * r^(j-1)`.
    pub fn rank(&self, r: usize) -> Result<usize> {
        let mut rank = 0usize;
        let mut place = 1usize;
        for (j, &k) in self.0.iter().enumerate() {
            if k >= r {
                return Err(BellError::InvalidIndex(format!(
                    "setting {k} at site {} is not below r = {r}",
                    j + 1
                )));
            }
            rank = k
                .checked_mul(place)
                .and_then(|v| v.checked_add(rank))
                .ok_or_else(|| BellError::SizeLimit("rank overflow".into()))?;
            place = place.saturating_mul(r);
        }
        Ok(rank)
    }

    pub fn unrank(rank: usize, n: usize, r: usize) -> Result<Self> {
        let len = tensor_len(n, r)?;
        if rank >= len {
            return Err(BellError::InvalidIndex(format!("rank {rank} outside [0, {len})")));
        }
        let mut rest = rank;
        let settings = (0..n)
            .map(|_| {
                let k = rest % r;
                rest /= r;
                k
            })
            .collect();
        Ok(Self(settings))
    }
}

/// Free-function form of [`MultiIndex::rank`].
pub fn rank(m: &MultiIndex, r: usize) -> Result<usize> {
    m.rank(r)
}

fn check_dims(n: usize, r: usize) -> Result<usize> {
    if n == 0 || r == 0 {
        return Err(BellError::Domain(format!(
            "need n >= 1 and r >= 1, got n = {n}, r = {r}"
        )));
    }
    tensor_len(n, r)
}

fn sum_squares(values: &[f64]) -> f64 {
    values.iter().map(|v| v * v).sum()
}

fn check_normalized(values: &[f64]) -> Result<()> {
    if values.iter().any(|v| !v.is_finite()) {
        return Err(BellError::Numeric("non-finite coefficient".into()));
    }
    let ss = sum_squares(values);
    if (ss - 1.0).abs() > NORMALIZATION_TOL {
        return Err(BellError::DegenerateCoefficients(format!(
            "sum of squares is {ss}, expected 1"
        )));
    }
    Ok(())
}

/// Rescale to unit sum of squares.
fn normalize(mut values: Vec<f64>) -> Result<Vec<f64>> {
    if values.iter().any(|v| !v.is_finite()) {
        return Err(BellError::Numeric("non-finite coefficient".into()));
    }
    let norm = sum_squares(&values).sqrt();
    if norm == 0.0 {
        return Err(BellError::DegenerateCoefficients("all coefficients are zero".into()));
    }
    values.iter_mut().for_each(|v| *v /= norm);
    Ok(values)
}

/// How the nonnegative magnitudes `c(k)` are chosen.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoefficientScheme {
    /// Every entry `r^(-n/2)`.
    Uniform,
    /// Absolute values of i.i.d. standard normals, rescaled.
    RandomNormalized { seed: u64 },
    /// Caller-supplied nonnegative values, rescaled.
    Explicit(Vec<f64>),
}

/// Nonnegative magnitudes `c(k)` with unit sum of squares.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientTensor {
    n: usize,
    r: usize,
    values: Vec<f64>,
}

impl CoefficientTensor {
    pub fn new(n: usize, r: usize, values: Vec<f64>) -> Result<Self> {
        let len = check_dims(n, r)?;
        if values.len() != len {
            return Err(BellError::Shape(format!(
                "expected {len} coefficients, got {}",
                values.len()
            )));
        }
        if values.iter().any(|&v| v < 0.0) {
            return Err(BellError::Domain("coefficient magnitudes must be nonnegative".into()));
        }
        check_normalized(&values)?;
        Ok(Self { n, r, values })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

pub fn make_coefficients(scheme: &CoefficientScheme, n: usize, r: usize) -> Result<CoefficientTensor> {
    let len = check_dims(n, r)?;
    let values = match scheme {
        CoefficientScheme::Uniform => {
            let v = (r as f64).powf(-(n as f64) / 2.0);
            vec![v; len]
        }
        CoefficientScheme::RandomNormalized { seed } => {
            let mut rng = seeded_rng(*seed);
            let raw: Vec<f64> = (0..len)
                .map(|_| {
                    let x: f64 = StandardNormal.sample(&mut rng);
                    x.abs()
                })
                .collect();
            normalize(raw)?
        }
        CoefficientScheme::Explicit(raw) => {
            if raw.len() != len {
                return Err(BellError::Shape(format!(
                    "expected {len} coefficients, got {}",
                    raw.len()
                )));
            }
            if raw.iter().any(|&v| v < 0.0) {
                return Err(BellError::Domain("explicit coefficients must be nonnegative".into()));
            }
            normalize(raw.clone())?
        }
    };
    Ok(CoefficientTensor { n, r, values })
}

/// One `±1` per multi-index, drawn from a seeded stream.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SignAssignment {
    signs: Vec<i8>,
    seed: u64,
}

impl SignAssignment {
    /// Signs chosen by the caller; `seed` is recorded as given.
    pub fn from_signs(signs: Vec<i8>, seed: u64) -> Result<Self> {
        if let Some(bad) = signs.iter().find(|&&s| s != 1 && s != -1) {
            return Err(BellError::Domain(format!("sign entry {bad} is not ±1")));
        }
        Ok(Self { signs, seed })
    }

    pub fn signs(&self) -> &[i8] {
        &self.signs
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }
}

/// `r^n` i.i.d. uniform signs, a pure function of `(master_seed, n, r)`.
pub fn sample_signs(master_seed: u64, n: usize, r: usize) -> Result<SignAssignment> {
    let len = check_dims(n, r)?;
    let mut rng = seeded_rng(master_seed);
    let mut signs = Vec::with_capacity(len);
    while signs.len() < len {
        let word: u64 = rng.random();
        let take = (len - signs.len()).min(64);
        signs.extend((0..take).map(|b| if (word >> b) & 1 == 0 { 1i8 } else { -1i8 }));
    }
    Ok(SignAssignment {
        signs,
        seed: master_seed,
    })
}

/// Signed coefficients `±c(k)` with unit sum of squares.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignedCoefficients {
    n: usize,
    r: usize,
    values: Vec<f64>,
}

impl SignedCoefficients {
    pub fn new(n: usize, r: usize, values: Vec<f64>) -> Result<Self> {
        let len = check_dims(n, r)?;
        if values.len() != len {
            return Err(BellError::Shape(format!(
                "expected {len} coefficients, got {}",
                values.len()
            )));
        }
        check_normalized(&values)?;
        Ok(Self { n, r, values })
    }

    /// Like [`SignedCoefficients::new`] but rescales instead of rejecting.
    pub fn normalized(n: usize, r: usize, values: Vec<f64>) -> Result<Self> {
        let len = check_dims(n, r)?;
        if values.len() != len {
            return Err(BellError::Shape(format!(
                "expected {len} coefficients, got {}",
                values.len()
            )));
        }
        Ok(Self {
            n,
            r,
            values: normalize(values)?,
        })
    }

    pub fn from_parts(coeffs: &CoefficientTensor, signs: &SignAssignment) -> Result<Self> {
        if coeffs.values.len() != signs.signs.len() {
            return Err(BellError::Shape(format!(
                "{} coefficients but {} signs",
                coeffs.values.len(),
                signs.signs.len()
            )));
        }
        let values = coeffs
            .values
            .iter()
            .zip(&signs.signs)
            .map(|(&c, &s)| if s < 0 { -c } else { c })
            .collect();
        Ok(Self {
            n: coeffs.n,
            r: coeffs.r,
            values,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `sum_k |c(k)|`, the triangle-inequality ceiling on every norm.
    pub fn l1_norm(&self) -> f64 {
        self.values.iter().map(|v| v.abs()).sum()
    }
}

/// A Bell operator up to the choice of directions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BellSpec {
    pub coeffs: SignedCoefficients,
}

impl BellSpec {
    pub fn new(coeffs: SignedCoefficients) -> Self {
        Self { coeffs }
    }

    pub fn from_parts(coeffs: &CoefficientTensor, signs: &SignAssignment) -> Result<Self> {
        SignedCoefficients::from_parts(coeffs, signs).map(Self::new)
    }

    /// Validates `values` as already normalized signed coefficients.
    pub fn from_signed(n: usize, r: usize, values: Vec<f64>) -> Result<Self> {
        SignedCoefficients::new(n, r, values).map(Self::new)
    }

    pub fn n(&self) -> usize {
        self.coeffs.n
    }

    pub fn r(&self) -> usize {
        self.coeffs.r
    }

    pub fn values(&self) -> &[f64] {
        &self.coeffs.values
    }

    /// Every sign flipped.
    pub fn negated(&self) -> Self {
        let values = self.coeffs.values.iter().map(|v| -v).collect();
        Self::new(SignedCoefficients {
            values,
            ..self.coeffs.clone()
        })
    }
}

/// Coplanar direction grid: `t_k^j` is the in-plane angle of setting `k` at
/// site `j`. Stored site-major (`j * r + k`), canonicalized to `[0, 2π)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AngleConfig {
    n: usize,
    r: usize,
    angles: Vec<f64>,
}

impl AngleConfig {
    pub fn new(n: usize, r: usize, angles: Vec<f64>) -> Result<Self> {
        check_dims(n, r)?;
        if angles.len() != n * r {
            return Err(BellError::Shape(format!(
                "expected {} angles, got {}",
                n * r,
                angles.len()
            )));
        }
        if angles.iter().any(|a| !a.is_finite()) {
            return Err(BellError::Numeric("non-finite angle".into()));
        }
        Ok(Self::from_raw(n, r, angles))
    }

    /// Rows are sites; row `j` lists `t_0^j, ..., t_{r-1}^j`.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let r = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != r) {
            return Err(BellError::Shape("ragged angle rows".into()));
        }
        Self::new(n, r, rows.concat())
    }

    pub(crate) fn from_raw(n: usize, r: usize, mut angles: Vec<f64>) -> Self {
        for a in &mut angles {
            *a = canonical_angle(*a);
        }
        Self { n, r, angles }
    }

    pub fn random(n: usize, r: usize, seed: u64) -> Result<Self> {
        let mut rng = seeded_rng(seed);
        let angles = (0..n * r).map(|_| rng.random::<f64>() * TAU).collect();
        Self::new(n, r, angles)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.angles
    }

    /// `t_k^j` with 0-based `site` and `setting`.
    pub fn get(&self, site: usize, setting: usize) -> f64 {
        self.angles[site * self.r + setting]
    }

    /// Embed as polar angles in the x-y plane (`θ = π/2`, `φ = t`).
    pub fn to_polar(&self) -> PolarConfig {
        PolarConfig {
            n: self.n,
            r: self.r,
            thetas: vec![std::f64::consts::FRAC_PI_2; self.angles.len()],
            phis: self.angles.clone(),
        }
    }
}

pub(crate) fn canonical_angle(a: f64) -> f64 {
    let t = a.rem_euclid(TAU);
    // rem_euclid can round up to exactly TAU for tiny negative inputs
    if t >= TAU {
        0.0
    } else {
        t
    }
}

/// General direction grid in polar coordinates, site-major like
/// [`AngleConfig`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolarConfig {
    n: usize,
    r: usize,
    thetas: Vec<f64>,
    phis: Vec<f64>,
}

impl PolarConfig {
    pub fn new(n: usize, r: usize, thetas: Vec<f64>, phis: Vec<f64>) -> Result<Self> {
        check_dims(n, r)?;
        if thetas.len() != n * r || phis.len() != n * r {
            return Err(BellError::Shape(format!(
                "expected {} polar and azimuthal angles, got {} and {}",
                n * r,
                thetas.len(),
                phis.len()
            )));
        }
        if thetas.iter().chain(&phis).any(|a| !a.is_finite()) {
            return Err(BellError::Numeric("non-finite angle".into()));
        }
        Ok(Self { n, r, thetas, phis })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn thetas(&self) -> &[f64] {
        &self.thetas
    }

    pub fn phis(&self) -> &[f64] {
        &self.phis
    }

    /// `(θ, φ)` of setting `setting` at site `site`, both 0-based.
    pub fn direction(&self, site: usize, setting: usize) -> (f64, f64) {
        let i = site * self.r + setting;
        (self.thetas[i], self.phis[i])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rank_examples() {
        assert_eq!(rank(&MultiIndex::new(vec![0, 0, 0]), 2).unwrap(), 0);
        assert_eq!(rank(&MultiIndex::new(vec![1, 0, 1]), 2).unwrap(), 5);
        assert_eq!(rank(&MultiIndex::new(vec![2, 1]), 3).unwrap(), 5);
    }

    #[test]
    fn rank_rejects_out_of_range() {
        let err = MultiIndex::new(vec![0, 3]).rank(3).unwrap_err();
        assert!(matches!(err, BellError::InvalidIndex(_)));
        assert!(matches!(MultiIndex::unrank(8, 3, 2), Err(BellError::InvalidIndex(_))));
    }

    #[test]
    fn rank_unrank_bijection_exhaustive() {
        for n in 1..=6 {
            for r in 1..=3 {
                let len = tensor_len(n, r).unwrap();
                for idx in 0..len {
                    let m = MultiIndex::unrank(idx, n, r).unwrap();
                    assert_eq!(m.len(), n);
                    assert!(m.settings().iter().all(|&k| k < r));
                    assert_eq!(m.rank(r).unwrap(), idx);
                }
            }
        }
    }

    #[test]
    fn uniform_coefficients() {
        let c = make_coefficients(&CoefficientScheme::Uniform, 2, 2).unwrap();
        assert_eq!(c.values(), &[0.5; 4]);
        let c = make_coefficients(&CoefficientScheme::Uniform, 3, 2).unwrap();
        for v in c.values() {
            assert!((v - 0.353553).abs() < 1e-6);
            assert!((v - 2f64.powf(-1.5)).abs() < 1e-15);
        }
    }

    #[test]
    fn explicit_coefficients_rescale() {
        let c = make_coefficients(&CoefficientScheme::Explicit(vec![3.0, 4.0, 0.0, 0.0]), 2, 2).unwrap();
        let expected = [0.6, 0.8, 0.0, 0.0];
        for (a, b) in c.values().iter().zip(expected) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn explicit_all_zero_is_degenerate() {
        let err = make_coefficients(&CoefficientScheme::Explicit(vec![0.0; 4]), 2, 2).unwrap_err();
        assert!(matches!(err, BellError::DegenerateCoefficients(_)));
    }

    #[test]
    fn random_normalized_is_unit_and_nonnegative() {
        for seed in 0..50 {
            let c = make_coefficients(&CoefficientScheme::RandomNormalized { seed }, 4, 3).unwrap();
            assert!(c.values().iter().all(|&v| v >= 0.0));
            assert!((sum_squares(c.values()) - 1.0).abs() <= NORMALIZATION_TOL);
        }
    }

    #[test]
    fn sample_signs_is_pure() {
        let a = sample_signs(1234, 2, 2).unwrap();
        let b = sample_signs(1234, 2, 2).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.signs().len(), 4);
        assert!(a.signs().iter().all(|&s| s == 1 || s == -1));
    }

    #[test]
    fn sample_signs_distinct_seeds_differ() {
        // 10 sites, r = 2: two assignments agree with probability 2^-1024.
        let differing = (0..1000u64)
            .filter(|&i| sample_signs(2 * i, 10, 2).unwrap() != sample_signs(2 * i + 1, 10, 2).unwrap())
            .count();
        assert_eq!(differing, 1000);
    }

    #[test]
    fn sample_signs_mean_is_zero() {
        let mut sum = 0i64;
        let mut count = 0usize;
        let mut seed = 0u64;
        while count < 1_000_000 {
            let s = sample_signs(seed, 10, 2).unwrap();
            sum += s.signs().iter().map(|&v| i64::from(v)).sum::<i64>();
            count += s.signs().len();
            seed += 1;
        }
        let mean = sum as f64 / count as f64;
        assert!(mean.abs() < 4e-3, "mean {mean}");
    }

    #[test]
    fn sample_signs_overflow_is_size_limit() {
        assert!(matches!(sample_signs(0, 200, 3), Err(BellError::SizeLimit(_))));
    }

    #[test]
    fn angles_are_canonicalized() {
        let a = AngleConfig::new(1, 2, vec![-std::f64::consts::FRAC_PI_2, 7.0]).unwrap();
        assert!((a.get(0, 0) - 1.5 * std::f64::consts::PI).abs() < 1e-15);
        assert!((a.get(0, 1) - (7.0 - TAU)).abs() < 1e-15);
        assert!(a.as_slice().iter().all(|&t| (0.0..TAU).contains(&t)));
        assert_eq!(canonical_angle(-1e-300), 0.0);
    }

    #[test]
    fn signed_coefficients_reject_unnormalized() {
        assert!(SignedCoefficients::new(1, 2, vec![0.5, 0.5]).is_err());
        let s = SignedCoefficients::normalized(1, 2, vec![1.0, -1.0]).unwrap();
        assert!((s.values()[1] + std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
    }
}
