//! Exact spectra of Bell operators whose per-site directions are coplanar.
//!
//! With every direction of site `j` in one plane, the operator maps the basis
//! vector `|ω⟩` to `μ(ω) |−ω⟩` where
//!
//! ```text
//! μ(ω) = Σ_k ±c(k) · exp(i Σ_j ω_j t^j_{k_j})
//! ```
//!
//! so each pair `{|ω⟩, |−ω⟩}` spans an invariant plane with eigenvalues
//! `±|μ(ω)|`. The norm at fixed angles is the largest `|μ(ω)|`; the sup over
//! angles reduces to the `ω = (1, ..., 1)` sum because `ω_j` can be absorbed
//! into the angles of site `j`.

use std::cmp::Ordering;
use std::f64::consts::{FRAC_1_SQRT_2, PI, TAU};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{BellError, Result};
use crate::model::{canonical_angle, tensor_len, AngleConfig, BellSpec};
use crate::rng::{mix_seed, seeded_rng};
use crate::statevector::QuantumState;

/// Largest site count for which all `2^(n-1)` parity vectors are enumerated.
pub const MAX_ENUM_SITES: usize = 24;

/// `ω ∈ {−1, +1}^n`, labelling the invariant plane `{|ω⟩, |−ω⟩}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ParityVector(Vec<i8>);

impl ParityVector {
    pub fn new(omega: Vec<i8>) -> Result<Self> {
        if omega.is_empty() {
            return Err(BellError::Shape("parity vector must be non-empty".into()));
        }
        if omega.iter().any(|&w| w != 1 && w != -1) {
            return Err(BellError::Domain("parity entries must be ±1".into()));
        }
        Ok(Self(omega))
    }

    pub fn ones(n: usize) -> Self {
        Self(vec![1; n])
    }

    /// The canonical vector (`ω_1 = +1`) whose sites `2..n` are `−1` exactly
    /// where the bits of `index` are set.
    pub fn canonical(n: usize, index: usize) -> Self {
        let omega = (0..n)
            .map(|j| if j > 0 && (index >> (j - 1)) & 1 == 1 { -1 } else { 1 })
            .collect();
        Self(omega)
    }

    pub fn canonical_all(n: usize) -> impl Iterator<Item = Self> {
        let count = 1usize << n.saturating_sub(1);
        (0..count).map(move |i| Self::canonical(n, i))
    }

    /// Computational-basis index of `|ω⟩` (`ω_j = +1` is bit `j-1` clear).
    pub fn basis_index(&self) -> usize {
        self.0
            .iter()
            .enumerate()
            .filter(|(_, &w)| w < 0)
            .fold(0, |acc, (j, _)| acc | (1 << j))
    }

    pub fn from_basis_index(n: usize, index: usize) -> Self {
        Self((0..n).map(|j| if (index >> j) & 1 == 1 { -1 } else { 1 }).collect())
    }

    pub fn is_canonical(&self) -> bool {
        self.0[0] == 1
    }

    pub fn negated(&self) -> Self {
        Self(self.0.iter().map(|w| -w).collect())
    }

    pub fn values(&self) -> &[i8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// `μ(ω)` in polar form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenRecord {
    pub omega: ParityVector,
    pub magnitude: f64,
    /// `arg μ(ω)` in `[0, 2π)`.
    pub phase: f64,
}

impl EigenRecord {
    pub fn mu(&self) -> Complex64 {
        Complex64::from_polar(self.magnitude, self.phase)
    }

    /// `θ(ω) = −arg μ(ω)`: the relative phase of the `+|μ|` eigenvector.
    pub fn theta(&self) -> f64 {
        canonical_angle(-self.phase)
    }
}

fn check_shapes(spec: &BellSpec, angles: &AngleConfig) -> Result<()> {
    if spec.n() != angles.n() || spec.r() != angles.r() {
        return Err(BellError::Shape(format!(
            "spec has (n, r) = ({}, {}) but angles have ({}, {})",
            spec.n(),
            spec.r(),
            angles.n(),
            angles.r()
        )));
    }
    Ok(())
}

/// Direct rank-ascending evaluation of `μ(ω)`.
pub fn eigenvalue_magnitude(spec: &BellSpec, angles: &AngleConfig, omega: &ParityVector) -> Result<EigenRecord> {
    check_shapes(spec, angles)?;
    if omega.len() != spec.n() {
        return Err(BellError::Shape(format!(
            "parity vector has {} sites, spec has {}",
            omega.len(),
            spec.n()
        )));
    }
    let (n, r) = (spec.n(), spec.r());
    let mut settings = vec![0usize; n];
    let mut mu = Complex64::new(0.0, 0.0);
    for &c in spec.values() {
        let mut phase = 0.0;
        for (j, &k) in settings.iter().enumerate() {
            let t = angles.get(j, k);
            phase += if omega.0[j] > 0 { t } else { -t };
        }
        mu += Complex64::from_polar(c, phase);
        // odometer, site 1 fastest
        for k in settings.iter_mut() {
            *k += 1;
            if *k < r {
                break;
            }
            *k = 0;
        }
    }
    Ok(EigenRecord {
        omega: omega.clone(),
        magnitude: mu.norm(),
        phase: canonical_angle(mu.arg()),
    })
}

/// `μ(ω)` for every `ω`, indexed by [`ParityVector::basis_index`].
///
/// Applies the per-site `2 × r` matrices `M_j[b][k] = exp(±i t_k^j)` along
/// each tensor axis in turn, costing `O(n r^(n+1))` instead of `O(2^n r^n)`.
pub fn eigenvalue_sums(spec: &BellSpec, angles: &AngleConfig) -> Result<Vec<Complex64>> {
    check_shapes(spec, angles)?;
    let (n, r) = (spec.n(), spec.r());
    if n > MAX_ENUM_SITES {
        return Err(BellError::SizeLimit(format!(
            "parity enumeration needs n <= {MAX_ENUM_SITES}, got {n}"
        )));
    }
    let mut data: Vec<Complex64> = spec.values().iter().map(|&c| Complex64::new(c, 0.0)).collect();
    let mut inner = 1usize;
    for j in 0..n {
        let outer = tensor_len(n - j - 1, r)?;
        let up: Vec<Complex64> = (0..r).map(|k| Complex64::from_polar(1.0, angles.get(j, k))).collect();
        let mut next = vec![Complex64::new(0.0, 0.0); inner * 2 * outer];
        for o in 0..outer {
            for k in 0..r {
                let src = inner * (k + r * o);
                let dst0 = inner * (2 * o);
                let dst1 = inner * (1 + 2 * o);
                for i in 0..inner {
                    let v = data[src + i];
                    next[dst0 + i] += v * up[k];
                    next[dst1 + i] += v * up[k].conj();
                }
            }
        }
        data = next;
        inner *= 2;
    }
    Ok(data)
}

/// Every canonical `(ω, |μ(ω)|)` pair.
pub fn canonical_magnitudes(spec: &BellSpec, angles: &AngleConfig) -> Result<Vec<(ParityVector, f64)>> {
    let sums = eigenvalue_sums(spec, angles)?;
    let n = spec.n();
    Ok((0..sums.len())
        .step_by(2)
        .map(|b| (ParityVector::from_basis_index(n, b), sums[b].norm()))
        .collect())
}

/// `‖Q‖` at fixed coplanar directions: the largest `|μ(ω)|`.
pub fn norm_fixed_angles(spec: &BellSpec, angles: &AngleConfig) -> Result<f64> {
    let sums = eigenvalue_sums(spec, angles)?;
    Ok(sums.iter().step_by(2).map(|z| z.norm()).fold(0.0, f64::max))
}

/// The `+|μ|` eigenvector `(e^{iθ}|ω⟩ + |−ω⟩)/√2`.
pub fn eigenvector(omega: &ParityVector, theta: f64, n: usize) -> Result<QuantumState> {
    if omega.len() != n {
        return Err(BellError::Shape(format!(
            "parity vector has {} sites, expected {n}",
            omega.len()
        )));
    }
    if n > MAX_ENUM_SITES {
        return Err(BellError::SizeLimit(format!(
            "state vectors need n <= {MAX_ENUM_SITES}"
        )));
    }
    let mut amps = vec![Complex64::new(0.0, 0.0); 1 << n];
    amps[omega.basis_index()] = Complex64::from_polar(FRAC_1_SQRT_2, theta);
    amps[omega.negated().basis_index()] = Complex64::new(FRAC_1_SQRT_2, 0.0);
    QuantumState::new(amps)
}

/// Settings for the multi-start ascents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OptimizerConfig {
    pub starts: usize,
    pub max_iters: usize,
    pub grad_tol: f64,
    pub seed: u64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            starts: 64,
            max_iters: 10_000,
            grad_tol: 1e-9,
            seed: 0,
        }
    }
}

/// Number of deterministic grid starts preceding the random ones.
pub const GRID_STARTS: usize = 8;

/// `|S(t)|^2` with `S(t) = Σ_k a_k exp(i Σ_j t^j_{k_j})` and its partial sums.
struct TorusObjective<'a> {
    values: &'a [f64],
    n: usize,
    r: usize,
}

impl TorusObjective<'_> {
    fn terms(&self, angles: &[f64]) -> Vec<Complex64> {
        let mut phases = vec![Complex64::new(1.0, 0.0)];
        for j in 0..self.n {
            let len = phases.len();
            let mut next = Vec::with_capacity(len * self.r);
            for k in 0..self.r {
                let u = Complex64::from_polar(1.0, angles[j * self.r + k]);
                next.extend(phases.iter().map(|p| p * u));
            }
            phases = next;
        }
        phases.iter_mut().zip(self.values).for_each(|(p, &a)| *p *= a);
        phases
    }

    /// `P_jk` for every setting `k` of site `j`.
    fn site_partials(&self, terms: &[Complex64], j: usize, out: &mut [Complex64]) {
        let inner = self.r.pow(j as u32);
        out.fill(Complex64::new(0.0, 0.0));
        for chunk in terms.chunks_exact(inner * self.r) {
            for (acc, sub) in out.iter_mut().zip(chunk.chunks_exact(inner)) {
                *acc += sub.iter().sum::<Complex64>();
            }
        }
    }

    /// Multiplies the terms using setting `k` of site `j` by `rots[k]`.
    fn rotate_site(&self, terms: &mut [Complex64], j: usize, rots: &[Complex64]) {
        let inner = self.r.pow(j as u32);
        for chunk in terms.chunks_exact_mut(inner * self.r) {
            for (&rot, sub) in rots.iter().zip(chunk.chunks_exact_mut(inner)) {
                sub.iter_mut().for_each(|z| *z *= rot);
            }
        }
    }

    /// `∂|S|²/∂t_k^j = −2 Im(conj(S) · P_jk)`.
    fn gradient(&self, terms: &[Complex64], s: Complex64) -> Vec<f64> {
        let mut grad = Vec::with_capacity(self.n * self.r);
        for j in 0..self.n {
            let mut partials = vec![Complex64::new(0.0, 0.0); self.r];
            self.site_partials(terms, j, &mut partials);
            grad.extend(partials.iter().map(|p| -2.0 * (s.conj() * p).im));
        }
        grad
    }

    /// Gradient and Hessian of `|S|²`:
    /// `H_ab = 2 Re(conj(P_a) P_b) − 2 Re(conj(S) P_ab)`, where `P_ab` sums the
    /// terms using both settings (zero for two settings of one site).
    fn gradient_hessian(&self, terms: &[Complex64], s: Complex64) -> (DVector<f64>, DMatrix<f64>) {
        let (n, r) = (self.n, self.r);
        let dim = n * r;
        let zero = Complex64::new(0.0, 0.0);
        let mut p = vec![zero; dim];
        let mut pair = vec![zero; dim * dim];
        let mut digits = vec![0usize; n];
        for &t in terms {
            for j in 0..n {
                let a = j * r + digits[j];
                p[a] += t;
                for (jj, &d) in digits.iter().enumerate().skip(j + 1) {
                    pair[a * dim + jj * r + d] += t;
                }
            }
            for d in digits.iter_mut() {
                *d += 1;
                if *d < r {
                    break;
                }
                *d = 0;
            }
        }
        let grad = DVector::from_iterator(dim, p.iter().map(|pa| -2.0 * (s.conj() * pa).im));
        let hess = DMatrix::from_fn(dim, dim, |a, b| {
            let (lo, hi) = (a.min(b), a.max(b));
            let pab = if a == b { p[a] } else { pair[lo * dim + hi] };
            2.0 * (p[a].conj() * p[b]).re - 2.0 * (s.conj() * pab).re
        });
        (grad, hess)
    }

    fn value(&self, angles: &[f64]) -> f64 {
        self.terms(angles).iter().sum::<Complex64>().norm_sqr()
    }
}

fn wrap_pi(x: f64) -> f64 {
    let y = (x + PI).rem_euclid(TAU) - PI;
    if y <= -PI {
        y + TAU
    } else {
        y
    }
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Exact coordinate sweeps, then gradient polishing. Returns `|S|` and angles.
fn ascend(obj: &TorusObjective<'_>, mut angles: Vec<f64>, opt: &OptimizerConfig) -> Result<(f64, Vec<f64>)> {
    const REFRESH_SWEEPS: usize = 32;
    const STALL_REL: f64 = 1e-6;
    let (n, r) = (obj.n, obj.r);
    let mut terms = obj.terms(&angles);
    let mut s: Complex64 = terms.iter().sum();
    let mut prev = s.norm();
    let mut partials = vec![Complex64::new(0.0, 0.0); r];
    let mut rots = vec![Complex64::new(1.0, 0.0); r];
    for sweep in 1..=opt.max_iters {
        for j in 0..n {
            // settings of one site touch disjoint terms, so their partial
            // sums can be taken together and the updates applied in one pass
            obj.site_partials(&terms, j, &mut partials);
            let mut moved = false;
            for k in 0..r {
                let p = partials[k];
                let rest = s - p;
                rots[k] = Complex64::new(1.0, 0.0);
                if p.norm() == 0.0 || rest.norm() == 0.0 {
                    continue;
                }
                // |rest + p e^{iδ}| is maximal when p is rotated onto rest
                let delta = wrap_pi(rest.arg() - p.arg());
                if delta == 0.0 {
                    continue;
                }
                rots[k] = Complex64::from_polar(1.0, delta);
                s = rest + p * rots[k];
                angles[j * r + k] += delta;
                moved = true;
            }
            if moved {
                obj.rotate_site(&mut terms, j, &rots);
            }
        }
        let stalled = s.norm() <= prev * (1.0 + STALL_REL);
        if !stalled && sweep % REFRESH_SWEEPS != 0 {
            prev = s.norm();
            continue;
        }
        angles.iter_mut().for_each(|a| *a = canonical_angle(*a));
        terms = obj.terms(&angles);
        s = terms.iter().sum();
        let value = s.norm();
        if !value.is_finite() {
            return Err(BellError::Numeric("objective is not finite".into()));
        }
        if stalled || inf_norm(&obj.gradient(&terms, s)) <= opt.grad_tol {
            break;
        }
        prev = value;
    }
    angles.iter_mut().for_each(|a| *a = canonical_angle(*a));
    newton_polish(obj, &mut angles, opt);

    // projected gradient ascent with backtracking
    let mut f = obj.value(&angles);
    let mut step = 0.1;
    for _ in 0..opt.max_iters {
        let terms = obj.terms(&angles);
        let s: Complex64 = terms.iter().sum();
        let grad = obj.gradient(&terms, s);
        let gnorm2: f64 = grad.iter().map(|g| g * g).sum();
        if inf_norm(&grad) <= opt.grad_tol {
            break;
        }
        let mut accepted = false;
        while step > 1e-18 {
            let cand: Vec<f64> = angles
                .iter()
                .zip(&grad)
                .map(|(a, g)| canonical_angle(a + step * g))
                .collect();
            let fc = obj.value(&cand);
            if fc > f + 1e-4 * step * gnorm2 {
                angles = cand;
                f = fc;
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
    Ok((f.sqrt(), angles))
}

/// Damped Newton (Levenberg-Marquardt) ascent on `|S|²`.
fn newton_polish(obj: &TorusObjective<'_>, angles: &mut Vec<f64>, opt: &OptimizerConfig) {
    const MAX_STEPS: usize = 100;
    const MAX_DAMPING: f64 = 1e12;
    let dim = angles.len();
    let mut damping = 1e-9;
    for _ in 0..MAX_STEPS.min(opt.max_iters) {
        let terms = obj.terms(angles);
        let s: Complex64 = terms.iter().sum();
        let f = s.norm_sqr();
        let (grad, hess) = obj.gradient_hessian(&terms, s);
        if grad.amax() <= opt.grad_tol {
            return;
        }
        let mut accepted = false;
        while damping < MAX_DAMPING {
            let system = DMatrix::identity(dim, dim) * damping - &hess;
            if let Some(chol) = system.cholesky() {
                let step = chol.solve(&grad);
                let cand: Vec<f64> = angles
                    .iter()
                    .zip(step.iter())
                    .map(|(a, d)| canonical_angle(a + d))
                    .collect();
                if obj.value(&cand) > f {
                    *angles = cand;
                    damping = (damping * 0.25).max(1e-12);
                    accepted = true;
                    break;
                }
            }
            damping *= 4.0;
        }
        if !accepted {
            return;
        }
    }
}

fn grid_start(g: usize, n: usize, r: usize) -> Vec<f64> {
    let spacing = (g + 1) as f64 * PI / (GRID_STARTS + 1) as f64;
    (0..n)
        .flat_map(|_| (0..r).map(move |k| canonical_angle(k as f64 * spacing)))
        .collect()
}

fn lex_cmp(a: &[f64], b: &[f64]) -> Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(Ordering::Equal)
}

/// Attained lower bound on `sup_t ‖Q(t)‖` over coplanar directions, with the
/// angles that attain it.
pub fn max_norm_over_angles(spec: &BellSpec, opt: &OptimizerConfig) -> Result<(f64, AngleConfig)> {
    if opt.starts == 0 {
        return Err(BellError::Domain("optimizer needs at least one start".into()));
    }
    if spec.values().iter().any(|v| !v.is_finite()) {
        return Err(BellError::Numeric("non-finite coefficient".into()));
    }
    let (n, r) = (spec.n(), spec.r());
    let obj = TorusObjective {
        values: spec.values(),
        n,
        r,
    };
    let mut best: Option<(f64, AngleConfig)> = None;
    for start in 0..opt.starts {
        let init = if start < GRID_STARTS {
            grid_start(start, n, r)
        } else {
            let mut rng = seeded_rng(mix_seed(opt.seed, start as u64));
            (0..n * r).map(|_| rng.random::<f64>() * TAU).collect()
        };
        let (modulus, angles) = ascend(&obj, init, opt)?;
        let config = AngleConfig::from_raw(n, r, angles);
        let value = if n <= MAX_ENUM_SITES {
            norm_fixed_angles(spec, &config)?
        } else {
            modulus
        };
        if !value.is_finite() {
            return Err(BellError::Numeric("objective is not finite".into()));
        }
        let better = match &best {
            None => true,
            Some((bv, ba)) => value > *bv || (value == *bv && lex_cmp(config.as_slice(), ba.as_slice()).is_lt()),
        };
        if better {
            best = Some((value, config));
        }
    }
    Ok(best.expect("at least one start"))
}
