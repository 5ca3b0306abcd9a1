//! Classical (local hidden variable) value `‖C‖∞ = max |Σ_k ±c(k) Π_j X^j_{k_j}|`
//! over deterministic assignments `X^j_k = ±1`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{BellError, Result};
use crate::model::BellSpec;
use crate::rng::{mix_seed, seeded_rng};

/// Exact enumeration covers `2^(rn)` assignments; beyond this use the heuristic.
pub const MAX_EXACT_VARIABLES: usize = 24;
pub const DEFAULT_RESTARTS: usize = 32;

/// `X^j_k` for every site `j` and setting `k`, site-major (`j * r + k`).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassicalAssignment {
    pub n: usize,
    pub r: usize,
    pub x: Vec<i8>,
}

impl ClassicalAssignment {
    pub fn get(&self, site: usize, setting: usize) -> i8 {
        self.x[site * self.r + setting]
    }

    /// `C(X)`, summed in rank order.
    pub fn evaluate(&self, spec: &BellSpec) -> f64 {
        self.term_signs(spec)
            .iter()
            .zip(spec.values())
            .map(|(&s, &c)| if s < 0 { -c } else { c })
            .sum()
    }

    fn term_signs(&self, spec: &BellSpec) -> Vec<i8> {
        let mut signs = vec![1i8];
        for j in 0..spec.n() {
            let len = signs.len();
            let mut next = Vec::with_capacity(len * spec.r());
            for k in 0..spec.r() {
                let x = self.get(j, k);
                next.extend(signs[..len].iter().map(|s| s * x));
            }
            signs = next;
        }
        signs
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LhvResult {
    pub value: f64,
    pub argmax: ClassicalAssignment,
    pub exact: bool,
}

/// Signed terms `±c(k) Π_j X^j_{k_j}` with incremental single-variable flips.
struct TermState<'a> {
    n: usize,
    r: usize,
    coeffs: &'a [f64],
    terms: Vec<f64>,
    x: Vec<i8>,
}

impl<'a> TermState<'a> {
    fn new(spec: &'a BellSpec, x: Vec<i8>) -> Self {
        let assignment = ClassicalAssignment {
            n: spec.n(),
            r: spec.r(),
            x,
        };
        let terms = assignment
            .term_signs(spec)
            .iter()
            .zip(spec.values())
            .map(|(&s, &c)| if s < 0 { -c } else { c })
            .collect();
        Self {
            n: spec.n(),
            r: spec.r(),
            coeffs: spec.values(),
            terms,
            x: assignment.x,
        }
    }

    fn blocks(&self, var: usize) -> impl Iterator<Item = std::ops::Range<usize>> {
        let (j, k) = (var / self.r, var % self.r);
        let inner = self.r.pow(j as u32);
        let outer = self.r.pow((self.n - j - 1) as u32);
        let r = self.r;
        (0..outer).map(move |o| {
            let start = inner * (k + r * o);
            start..start + inner
        })
    }

    /// Sum of the terms touched by `var`.
    fn partial(&self, var: usize) -> f64 {
        self.blocks(var).map(|b| self.terms[b].iter().sum::<f64>()).sum()
    }

    fn flip(&mut self, var: usize) {
        let blocks: Vec<_> = self.blocks(var).collect();
        for b in blocks {
            self.terms[b].iter_mut().for_each(|t| *t = -*t);
        }
        self.x[var] = -self.x[var];
    }

    /// Rank-ascending exact sum.
    fn total(&self) -> f64 {
        self.terms.iter().sum()
    }

    fn assignment(&self) -> ClassicalAssignment {
        ClassicalAssignment {
            n: self.n,
            r: self.r,
            x: self.x.clone(),
        }
    }

    fn scale(&self) -> f64 {
        self.coeffs.iter().map(|c| c.abs()).sum::<f64>().max(f64::MIN_POSITIVE)
    }
}

/// Exact `‖C‖∞` by Gray-code enumeration with incremental updates.
///
/// Flipping all of site 1's variables negates `C`, so `X^1_0 = +1` is fixed
/// and `2^(rn-1)` assignments are visited.
pub fn lhv_norm_exact(spec: &BellSpec) -> Result<LhvResult> {
    let vars = spec.n() * spec.r();
    if vars > MAX_EXACT_VARIABLES {
        return Err(BellError::SizeLimit(format!(
            "exact enumeration needs rn <= {MAX_EXACT_VARIABLES}, got {vars}"
        )));
    }
    let mut state = TermState::new(spec, vec![1; vars]);
    let slack = 1e-9 * state.scale();
    let mut best = state.total().abs();
    let mut argmax = state.assignment();
    let mut running = state.total();
    let free = vars - 1;
    for step in 1u64..(1u64 << free) {
        let var = 1 + step.trailing_zeros() as usize;
        let delta = state.partial(var);
        running -= 2.0 * delta;
        state.flip(var);
        if step % (1 << 16) == 0 {
            running = state.total();
        }
        if running.abs() >= best - slack {
            let exact = state.total();
            running = exact;
            if exact.abs() > best {
                best = exact.abs();
                argmax = state.assignment();
            }
        }
    }
    Ok(LhvResult {
        value: best,
        argmax,
        exact: true,
    })
}

/// Best-of-restarts steepest-ascent bit-flip search; a lower bound on `‖C‖∞`.
pub fn lhv_norm_heuristic(spec: &BellSpec, restarts: usize, seed: u64) -> Result<LhvResult> {
    if restarts == 0 {
        return Err(BellError::Domain("heuristic needs at least one restart".into()));
    }
    let vars = spec.n() * spec.r();
    let mut best: Option<(f64, ClassicalAssignment)> = None;
    for restart in 0..restarts {
        let mut rng = seeded_rng(mix_seed(seed, restart as u64));
        let x: Vec<i8> = (0..vars).map(|_| if rng.random::<bool>() { 1 } else { -1 }).collect();
        let mut state = TermState::new(spec, x);
        let tol = 1e-15 * state.scale();
        let mut current = state.total();
        loop {
            let mut pick: Option<(usize, f64)> = None;
            for var in 0..vars {
                let candidate = (current - 2.0 * state.partial(var)).abs();
                // strict comparison keeps the lowest (j, k) among ties
                if candidate > current.abs() + tol && pick.is_none_or(|(_, v)| candidate > v) {
                    pick = Some((var, candidate));
                }
            }
            let Some((var, _)) = pick else { break };
            state.flip(var);
            current = state.total();
        }
        let value = state.total().abs();
        if best.as_ref().is_none_or(|(b, _)| value > *b) {
            best = Some((value, state.assignment()));
        }
    }
    let (value, argmax) = best.expect("at least one restart");
    Ok(LhvResult {
        value,
        argmax,
        exact: false,
    })
}

/// Exact when `rn <= 24`, otherwise the heuristic with `restarts`.
pub fn lhv_norm(spec: &BellSpec, restarts: usize, seed: u64) -> Result<LhvResult> {
    if spec.n() * spec.r() <= MAX_EXACT_VARIABLES {
        lhv_norm_exact(spec)
    } else {
        lhv_norm_heuristic(spec, restarts, seed)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testing::random_spec;

    fn chsh() -> BellSpec {
        BellSpec::from_signed(2, 2, vec![0.5, 0.5, 0.5, -0.5]).unwrap()
    }

    /// Plain enumeration of all 2^(rn) assignments.
    fn brute_force(spec: &BellSpec) -> f64 {
        let vars = spec.n() * spec.r();
        (0..1u64 << vars)
            .map(|bits| {
                let x = (0..vars).map(|v| if (bits >> v) & 1 == 1 { -1 } else { 1 }).collect();
                ClassicalAssignment {
                    n: spec.n(),
                    r: spec.r(),
                    x,
                }
                .evaluate(spec)
                .abs()
            })
            .fold(0.0, f64::max)
    }

    #[test]
    fn chsh_classical_value_is_one() {
        let res = lhv_norm_exact(&chsh()).unwrap();
        assert_eq!(res.value, 1.0);
        assert!(res.exact);
        assert_eq!(res.argmax.evaluate(&chsh()).abs(), 1.0);
    }

    #[test]
    fn mermin_three_classical_value_is_one() {
        let spec = BellSpec::from_signed(3, 2, vec![0.0, 0.5, 0.5, 0.0, 0.5, 0.0, 0.0, -0.5]).unwrap();
        assert_eq!(lhv_norm_exact(&spec).unwrap().value, 1.0);
        assert_eq!(brute_force(&spec), 1.0);
    }

    #[test]
    fn single_term() {
        let spec = BellSpec::from_signed(1, 1, vec![1.0]).unwrap();
        assert_eq!(lhv_norm_exact(&spec).unwrap().value, 1.0);
    }

    #[test]
    fn exact_matches_brute_force() {
        for seed in 0..30u64 {
            let n = 1 + (seed as usize % 4);
            let r = 1 + (seed as usize % 3);
            let spec = random_spec(n, r, seed);
            let res = lhv_norm_exact(&spec).unwrap();
            assert_eq!(res.value, brute_force(&spec), "seed {seed}");
            assert!((res.argmax.evaluate(&spec).abs() - res.value).abs() <= 1e-12);
        }
    }

    #[test]
    fn heuristic_never_exceeds_exact() {
        let mut hits = 0;
        for seed in 0..200u64 {
            let n = 2 + (seed as usize % 3);
            let r = if n == 4 { 2 } else { 1 + (seed as usize % 3) };
            let spec = random_spec(n, r, seed);
            let exact = lhv_norm_exact(&spec).unwrap().value;
            let heur = lhv_norm_heuristic(&spec, DEFAULT_RESTARTS, seed).unwrap();
            assert!(!heur.exact);
            assert!(heur.value <= exact);
            if (heur.value - exact).abs() <= 1e-12 {
                hits += 1;
            }
        }
        assert!(hits >= 190, "heuristic matched exact on {hits}/200");
    }

    #[test]
    fn heuristic_chsh_matches_exact() {
        assert_eq!(lhv_norm_heuristic(&chsh(), 8, 1).unwrap().value, 1.0);
    }

    #[test]
    fn heuristic_uniform_twelve_sites_is_deterministic() {
        let coeffs = crate::model::make_coefficients(&crate::model::CoefficientScheme::Uniform, 12, 2).unwrap();
        let signs = crate::model::sample_signs(5, 12, 2).unwrap();
        let spec = BellSpec::from_parts(&coeffs, &signs).unwrap();
        let a = lhv_norm_heuristic(&spec, 4, 9).unwrap();
        let b = lhv_norm_heuristic(&spec, 4, 9).unwrap();
        assert_eq!(a, b);
        assert!(a.value <= 64.0 + 1e-9);
    }

    #[test]
    fn negation_and_site_permutation_invariance() {
        for seed in 0..10u64 {
            let spec = random_spec(3, 2, seed);
            let value = lhv_norm_exact(&spec).unwrap().value;
            assert_eq!(lhv_norm_exact(&spec.negated()).unwrap().value, value);
            // swap sites 1 and 3
            let v = spec.values();
            let swapped: Vec<f64> = (0..8)
                .map(|m| {
                    let (a, b, c) = (m & 1, (m >> 1) & 1, (m >> 2) & 1);
                    v[c | (b << 1) | (a << 2)]
                })
                .collect();
            let swapped = BellSpec::from_signed(3, 2, swapped).unwrap();
            assert!((lhv_norm_exact(&swapped).unwrap().value - value).abs() < 1e-15);
        }
    }

    #[test]
    fn oversized_exact_is_size_limit() {
        let spec = random_spec(13, 2, 0);
        assert!(matches!(lhv_norm_exact(&spec), Err(BellError::SizeLimit(_))));
    }
}
