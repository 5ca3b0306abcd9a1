//! Pure-state simulator: GHZ states, single-site spin operators and Bell
//! expectations `⟨Φ|Q|Φ⟩` at arbitrary directions, plus the Mermin-Klyshko
//! reference operator.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, FRAC_PI_4, PI, TAU};

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::coplanar::{eigenvalue_magnitude, OptimizerConfig, ParityVector, GRID_STARTS};
use crate::dense::spin_matrix;
use crate::error::{BellError, Result};
use crate::model::{tensor_len, AngleConfig, BellSpec, PolarConfig};
use crate::rng::{mix_seed, seeded_rng};

pub const MAX_STATE_SITES: usize = 24;
/// Ceiling on `r^n · n · 2^n` for [`bell_expectation`].
pub const EXPECTATION_BUDGET: u128 = 4_000_000_000;
/// Largest `n` and `r` accepted by [`max_expectation_over_angles`].
pub const MAX_OPT_SITES: usize = 10;
pub const MAX_OPT_SETTINGS: usize = 3;
/// Central finite-difference step for the polishing ascent.
pub const FD_STEP: f64 = 1e-5;

type Mat2 = [[Complex64; 2]; 2];

/// `2^n` amplitudes, little-endian: site `j` is bit `j-1` of the index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<[f64; 2]>", into = "Vec<[f64; 2]>")]
pub struct QuantumState {
    amps: Vec<Complex64>,
}

impl QuantumState {
    pub fn new(amps: Vec<Complex64>) -> Result<Self> {
        if amps.len() < 2 || !amps.len().is_power_of_two() {
            return Err(BellError::Shape(format!(
                "amplitude count {} is not a power of two >= 2",
                amps.len()
            )));
        }
        let norm: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
        if !norm.is_finite() || (norm - 1.0).abs() > 1e-12 {
            return Err(BellError::Domain(format!("state has squared norm {norm}")));
        }
        Ok(Self { amps })
    }

    /// Rescales `amps` to unit norm.
    pub fn normalized(mut amps: Vec<Complex64>) -> Result<Self> {
        let norm: f64 = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(BellError::Domain("cannot normalize a zero state".into()));
        }
        amps.iter_mut().for_each(|a| *a /= norm);
        Self::new(amps)
    }

    pub fn n(&self) -> usize {
        self.amps.len().trailing_zeros() as usize
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn inner(&self, other: &QuantumState) -> Complex64 {
        inner(&self.amps, &other.amps)
    }

    /// Applies an arbitrary 2×2 matrix to `site` (1-based).
    pub fn apply_single(&self, site: usize, m: &Mat2) -> Result<QuantumState> {
        let n = self.n();
        if site == 0 || site > n {
            return Err(BellError::InvalidIndex(format!("site {site} outside 1..={n}")));
        }
        let mut amps = self.amps.clone();
        apply_in_place(&mut amps, site - 1, m);
        Ok(QuantumState { amps })
    }
}

impl TryFrom<Vec<[f64; 2]>> for QuantumState {
    type Error = BellError;

    fn try_from(pairs: Vec<[f64; 2]>) -> Result<Self> {
        Self::new(pairs.into_iter().map(|[re, im]| Complex64::new(re, im)).collect())
    }
}

impl From<QuantumState> for Vec<[f64; 2]> {
    fn from(state: QuantumState) -> Self {
        state.amps.into_iter().map(|a| [a.re, a.im]).collect()
    }
}

fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn apply_in_place(amps: &mut [Complex64], bit: usize, m: &Mat2) {
    let stride = 1usize << bit;
    for base in (0..amps.len()).step_by(2 * stride) {
        for i in base..base + stride {
            let (a0, a1) = (amps[i], amps[i + stride]);
            amps[i] = m[0][0] * a0 + m[0][1] * a1;
            amps[i + stride] = m[1][0] * a0 + m[1][1] * a1;
        }
    }
}

/// `(|0…0⟩ + |1…1⟩)/√2`.
pub fn ghz(n: usize) -> Result<QuantumState> {
    if n == 0 || n > MAX_STATE_SITES {
        return Err(BellError::SizeLimit(format!(
            "GHZ needs 1 <= n <= {MAX_STATE_SITES}, got {n}"
        )));
    }
    let mut amps = vec![Complex64::new(0.0, 0.0); 1 << n];
    amps[0] = Complex64::new(FRAC_1_SQRT_2, 0.0);
    amps[(1 << n) - 1] = Complex64::new(FRAC_1_SQRT_2, 0.0);
    QuantumState::new(amps)
}

/// Applies `σ(θ, φ)` on `site` (1-based).
pub fn apply_spin(state: &QuantumState, site: usize, theta: f64, phi: f64) -> Result<QuantumState> {
    state.apply_single(site, &spin_matrix(theta, phi))
}

fn check_dims(spec: &BellSpec, state: &QuantumState, n: usize, r: usize) -> Result<()> {
    if (spec.n(), spec.r()) != (n, r) || state.n() != n {
        return Err(BellError::Shape(format!(
            "spec (n, r) = ({}, {}), directions ({n}, {r}), state on {} sites",
            spec.n(),
            spec.r(),
            state.n()
        )));
    }
    Ok(())
}

/// `⟨Φ|Q|Φ⟩`, one spin application per site per term and one inner product
/// per term, summed in rank-ascending order.
pub fn bell_expectation(spec: &BellSpec, state: &QuantumState, polar: &PolarConfig) -> Result<f64> {
    let (n, r) = (polar.n(), polar.r());
    check_dims(spec, state, n, r)?;
    let cost = ((tensor_len(n, r)? as u128) * (n as u128)) << n;
    if cost > EXPECTATION_BUDGET {
        return Err(BellError::SizeLimit(format!(
            "expectation cost {cost} exceeds budget {EXPECTATION_BUDGET}"
        )));
    }
    let spins: Vec<Vec<Mat2>> = (0..n)
        .map(|j| {
            (0..r)
                .map(|k| {
                    let (theta, phi) = polar.direction(j, k);
                    spin_matrix(theta, phi)
                })
                .collect()
        })
        .collect();
    let mut acc = Complex64::new(0.0, 0.0);
    // Highest site outermost so leaves are visited in rank order.
    expectation_rec(spec.values(), &spins, n, r, &state.amps, state.amps.clone(), &mut acc);
    let scale = spec.coeffs.l1_norm().max(1.0);
    if acc.im.abs() > 1e-10 * scale || !acc.re.is_finite() {
        return Err(BellError::Numeric(format!("expectation has imaginary part {}", acc.im)));
    }
    Ok(acc.re)
}

fn expectation_rec(
    values: &[f64],
    spins: &[Vec<Mat2>],
    m: usize,
    r: usize,
    bra: &[Complex64],
    ket: Vec<Complex64>,
    acc: &mut Complex64,
) {
    if m == 0 {
        *acc += values[0] * inner(bra, &ket);
        return;
    }
    let slice = values.len() / r;
    for k in 0..r {
        let chunk = &values[k * slice..(k + 1) * slice];
        if chunk.iter().all(|&v| v == 0.0) {
            continue;
        }
        let mut next = ket.clone();
        apply_in_place(&mut next, m - 1, &spins[m - 1][k]);
        expectation_rec(chunk, spins, m - 1, r, bra, next, acc);
    }
}

/// `T[μ] = ⟨Φ|σ_{μ_1} ⊗ … ⊗ σ_{μ_n}|Φ⟩` for `μ ∈ {x, y, z}^n`, site 1 fastest.
///
/// The expectation is multilinear in the Bloch vectors of the directions, so
/// `⟨Φ|Q|Φ⟩ = Σ_k c(k) Σ_μ T[μ] Π_j a^j_{k_j}[μ_j]`.
#[derive(Debug, Clone)]
pub struct CorrelationTensor {
    n: usize,
    values: Vec<f64>,
}

impl CorrelationTensor {
    pub fn from_state(state: &QuantumState) -> Self {
        let n = state.n();
        let zero = Complex64::new(0.0, 0.0);
        let one = Complex64::new(1.0, 0.0);
        let i = Complex64::new(0.0, 1.0);
        let paulis: [Mat2; 3] = [
            [[zero, one], [one, zero]],
            [[zero, -i], [i, zero]],
            [[one, zero], [zero, -one]],
        ];
        let mut values = Vec::with_capacity(3usize.pow(n as u32));
        Self::fill(&paulis, n, &state.amps, state.amps.clone(), &mut values);
        Self { n, values }
    }

    fn fill(paulis: &[Mat2; 3], m: usize, bra: &[Complex64], ket: Vec<Complex64>, out: &mut Vec<f64>) {
        if m == 0 {
            out.push(inner(bra, &ket).re);
            return;
        }
        for p in paulis {
            let mut next = ket.clone();
            apply_in_place(&mut next, m - 1, p);
            Self::fill(paulis, m - 1, bra, next, out);
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

fn bloch(theta: f64, phi: f64) -> [f64; 3] {
    let (s, c) = theta.sin_cos();
    [s * phi.cos(), s * phi.sin(), c]
}

/// Contract `axis` (size `dims[axis]`) with `mat` (`rows × dims[axis]`).
fn contract_axis(data: &[f64], dims: &mut [usize], axis: usize, mat: &[f64], rows: usize) -> Vec<f64> {
    let old = dims[axis];
    let inner: usize = dims[..axis].iter().product();
    let outer: usize = dims[axis + 1..].iter().product();
    let mut out = vec![0.0; inner * rows * outer];
    for o in 0..outer {
        for (row, coeffs) in mat.chunks_exact(old).enumerate() {
            let dst = inner * (row + rows * o);
            for (col, &w) in coeffs.iter().enumerate() {
                if w == 0.0 {
                    continue;
                }
                let src = inner * (col + old * o);
                for i in 0..inner {
                    out[dst + i] += w * data[src + i];
                }
            }
        }
    }
    dims[axis] = rows;
    out
}

/// Fast evaluator of `⟨Φ|Q|Φ⟩` as a function of the `r·n` Bloch vectors.
struct ExpectationObjective<'a> {
    tensor: &'a CorrelationTensor,
    values: &'a [f64],
    n: usize,
    r: usize,
}

impl ExpectationObjective<'_> {
    /// `G[k][μ] = ∂E/∂a^site_k[μ]`, flattened `k * 3 + μ`.
    fn site_gradient(&self, vectors: &[[f64; 3]], site: usize) -> Vec<f64> {
        let (n, r) = (self.n, self.r);
        let mut dims = vec![3usize; n];
        let mut data = self.tensor.values.clone();
        for j in (0..n).filter(|&j| j != site) {
            let mat: Vec<f64> = (0..r).flat_map(|k| vectors[j * r + k]).collect();
            data = contract_axis(&data, &mut dims, j, &mat, r);
        }
        let inner = r.pow(site as u32);
        let outer = r.pow((n - site - 1) as u32);
        let mut grad = vec![0.0; 3 * r];
        for o in 0..outer {
            for k in 0..r {
                for i in 0..inner {
                    let a = self.values[i + inner * (k + r * o)];
                    if a == 0.0 {
                        continue;
                    }
                    for mu in 0..3 {
                        grad[3 * k + mu] += a * data[i + inner * (mu + 3 * o)];
                    }
                }
            }
        }
        grad
    }

    fn value(&self, vectors: &[[f64; 3]]) -> f64 {
        let (n, r) = (self.n, self.r);
        let mut dims = vec![3usize; n];
        let mut data = self.tensor.values.clone();
        for j in 0..n {
            let mat: Vec<f64> = (0..r).flat_map(|k| vectors[j * r + k]).collect();
            data = contract_axis(&data, &mut dims, j, &mat, r);
        }
        data.iter().zip(self.values).map(|(d, a)| d * a).sum()
    }

    fn value_polar(&self, angles: &[f64]) -> f64 {
        let half = angles.len() / 2;
        let vectors: Vec<[f64; 3]> = (0..half).map(|i| bloch(angles[i], angles[half + i])).collect();
        self.value(&vectors)
    }
}

fn unit(v: [f64; 3]) -> Option<[f64; 3]> {
    let norm = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    (norm > 0.0 && norm.is_finite()).then(|| [v[0] / norm, v[1] / norm, v[2] / norm])
}

/// Maximizes `sign · E` from `vectors`; returns the final signed value and
/// polar angles (`θ`s then `φ`s).
fn ascend_expectation(
    obj: &ExpectationObjective<'_>,
    mut vectors: Vec<[f64; 3]>,
    sign: f64,
    opt: &OptimizerConfig,
) -> Result<(f64, Vec<f64>)> {
    let (n, r) = (obj.n, obj.r);
    let mut prev = sign * obj.value(&vectors);
    // exact per-site maximization: E is linear in each site's vectors
    for _ in 0..opt.max_iters {
        for j in 0..n {
            let grad = obj.site_gradient(&vectors, j);
            for k in 0..r {
                let g = [grad[3 * k], grad[3 * k + 1], grad[3 * k + 2]];
                if let Some(u) = unit([sign * g[0], sign * g[1], sign * g[2]]) {
                    vectors[j * r + k] = u;
                }
            }
        }
        let value = sign * obj.value(&vectors);
        if !value.is_finite() {
            return Err(BellError::Numeric("expectation objective is not finite".into()));
        }
        let done = value <= prev + 1e-15 * prev.abs().max(1.0);
        prev = value;
        if done {
            break;
        }
    }

    let mut angles: Vec<f64> = vectors.iter().map(|v| v[2].clamp(-1.0, 1.0).acos()).collect();
    angles.extend(vectors.iter().map(|v| v[1].atan2(v[0])));

    // central-difference polish in the polar angles
    let f = |a: &[f64]| sign * obj.value_polar(a);
    let mut fx = f(&angles);
    let mut step = 0.1;
    let tol = opt.grad_tol.max(1e-7);
    for _ in 0..opt.max_iters.min(500) {
        let grad: Vec<f64> = (0..angles.len())
            .map(|i| {
                let mut plus = angles.clone();
                let mut minus = angles.clone();
                plus[i] += FD_STEP;
                minus[i] -= FD_STEP;
                (f(&plus) - f(&minus)) / (2.0 * FD_STEP)
            })
            .collect();
        let gmax = grad.iter().fold(0.0f64, |m, g| m.max(g.abs()));
        if gmax <= tol {
            break;
        }
        let gnorm2: f64 = grad.iter().map(|g| g * g).sum();
        let mut accepted = false;
        while step > 1e-18 {
            let cand: Vec<f64> = angles.iter().zip(&grad).map(|(a, g)| a + step * g).collect();
            let fc = f(&cand);
            if fc > fx + 1e-4 * step * gnorm2 {
                angles = cand;
                fx = fc;
                step *= 2.0;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    Ok((fx, angles))
}

/// Attained lower bound on `max |⟨Φ|Q|Φ⟩|` over all directions, with the
/// maximizing directions.
pub fn max_expectation_over_angles(
    spec: &BellSpec,
    state: &QuantumState,
    opt: &OptimizerConfig,
) -> Result<(f64, PolarConfig)> {
    let (n, r) = (spec.n(), spec.r());
    check_dims(spec, state, n, r)?;
    if n > MAX_OPT_SITES || r > MAX_OPT_SETTINGS {
        return Err(BellError::SizeLimit(format!(
            "expectation maximization needs n <= {MAX_OPT_SITES} and r <= {MAX_OPT_SETTINGS}, got n = {n}, r = {r}"
        )));
    }
    if opt.starts == 0 {
        return Err(BellError::Domain("optimizer needs at least one start".into()));
    }
    let tensor = CorrelationTensor::from_state(state);
    let obj = ExpectationObjective {
        tensor: &tensor,
        values: spec.values(),
        n,
        r,
    };
    let mut best: Option<(f64, Vec<f64>)> = None;
    for start in 0..opt.starts {
        let init: Vec<[f64; 3]> = if start < GRID_STARTS {
            let spacing = (start + 1) as f64 * PI / (GRID_STARTS + 1) as f64;
            (0..n)
                .flat_map(|_| (0..r).map(move |k| bloch(FRAC_PI_2, k as f64 * spacing)))
                .collect()
        } else {
            let mut rng = seeded_rng(mix_seed(opt.seed, start as u64));
            (0..n * r)
                .map(|_| {
                    let z: f64 = 1.0 - 2.0 * rng.random::<f64>();
                    bloch(z.acos(), TAU * rng.random::<f64>())
                })
                .collect()
        };
        for sign in [1.0, -1.0] {
            let (value, angles) = ascend_expectation(&obj, init.clone(), sign, opt)?;
            if best.as_ref().is_none_or(|(b, _)| value > *b) {
                best = Some((value, angles));
            }
        }
    }
    let (value, angles) = best.expect("at least one start");
    let half = angles.len() / 2;
    let polar = PolarConfig::new(n, r, angles[..half].to_vec(), angles[half..].to_vec())?;
    let verified = bell_expectation(spec, state, &polar)?;
    if (verified.abs() - value).abs() > 1e-8 * value.abs().max(1.0) {
        return Err(BellError::Numeric(format!(
            "statevector expectation {verified} disagrees with contracted value {value}"
        )));
    }
    Ok((verified.abs(), polar))
}

/// Mermin-Klyshko operator with directions attaining `2^((n-1)/2)` on GHZ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MKSpec {
    pub spec: BellSpec,
    pub optimal_angles: AngleConfig,
}

/// `2^((n-1)/2)`, the largest Bell violation on `n` qubits.
pub fn mk_reference(n: usize) -> f64 {
    2f64.powf((n as f64 - 1.0) / 2.0)
}

/// Mermin-Klyshko coefficients by the recursion
/// `β_m(s, 0) = (β_{m-1}(s) + β_{m-1}(s̄))/2`,
/// `β_m(s, 1) = (β_{m-1}(s) − β_{m-1}(s̄))/2`, from `β_1 = (1, 0)`.
pub fn mk_coefficients(n: usize) -> Vec<f64> {
    let mut beta = vec![1.0, 0.0];
    for m in 1..n {
        let mask = (1usize << m) - 1;
        let flipped: Vec<f64> = (0..beta.len()).map(|s| beta[s ^ mask]).collect();
        let plus = beta.iter().zip(&flipped).map(|(a, b)| 0.5 * (a + b));
        let minus: Vec<f64> = beta.iter().zip(&flipped).map(|(a, b)| 0.5 * (a - b)).collect();
        beta = plus.chain(minus).collect();
    }
    beta
}

pub fn mk_spec(n: usize) -> Result<MKSpec> {
    if !(2..=20).contains(&n) {
        return Err(BellError::Domain(format!("MK operator needs 2 <= n <= 20, got {n}")));
    }
    let spec = BellSpec::from_signed(n, 2, mk_coefficients(n))?;
    // site 1 at (0, π/2), later sites at (−π/4, π/4): each step multiplies
    // the ω = (1, …, 1) sum by √2
    let mut rows = vec![vec![0.0, FRAC_PI_2]];
    rows.extend((1..n).map(|_| vec![-FRAC_PI_4, FRAC_PI_4]));
    let angles = AngleConfig::from_rows(&rows)?;
    let mu = eigenvalue_magnitude(&spec, &angles, &ParityVector::ones(n))?;
    // rotate site 1 so that μ(1, …, 1) is real and positive
    let shift = -mu.mu().arg();
    if shift.abs() > 1e-12 {
        rows[0].iter_mut().for_each(|t| *t += shift);
    }
    Ok(MKSpec {
        spec,
        optimal_angles: AngleConfig::from_rows(&rows)?,
    })
}
