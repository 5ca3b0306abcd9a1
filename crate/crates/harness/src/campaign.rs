//! Seeded Monte Carlo campaigns.
//!
//! Trial `i` draws everything from `mix_seed(master_seed, i)`, so a record
//! depends only on the config and its index, never on scheduling.

use std::time::Instant;

use bell_core::coplanar::canonical_magnitudes;
use bell_core::rng::{mix_seed, seeded_rng};
use bell_core::werner_wolf::ww_norm_fixed_angles;
use bell_core::{
    beta_from_f, eigenvalue_magnitude, eigenvector, ghz, lhv_norm, make_coefficients, max_expectation_over_angles,
    max_norm_over_angles, mk_reference, mk_spec, norm_fixed_angles, prop_bound, sample_f, sample_signs, szk_bound,
    szk_probability, tail_probability, AngleConfig, BellSpec, CoefficientTensor, OptimizerConfig, PropKind,
    QuantumState, SignAssignment, SignFunction, LOG_BASE,
};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{CampaignConfig, CampaignKind, StateSelector};
use crate::error::{HarnessError, Result};

/// Tolerance for `mk_baseline` norms against `2^((n-1)/2)`.
pub const MK_TOL: f64 = 1e-9;

const OPTIMIZER_STREAM: u64 = 1;
const STATE_STREAM: u64 = 2;
const LHV_STREAM: u64 = 3;
const FIXED_ANGLE_STREAM: u64 = u64::MAX;

pub const ESTIMATE_NOTE: &str = "norm estimates are attained values (lower bounds on the true maxima); \
a pass is therefore conservative for an upper-bound claim";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial_index: u64,
    pub trial_seed: u64,
    pub n: usize,
    pub r: usize,
    pub norm_estimate: f64,
    pub bound: f64,
    pub lhv_value: Option<f64>,
    pub passed: bool,
    pub elapsed_ms: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quantiles {
    pub min: f64,
    pub p50: f64,
    pub p95: f64,
    pub max: f64,
}

impl Quantiles {
    /// Nearest-rank quantiles.
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        let at = |p: f64| sorted[((p * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len()) - 1];
        Some(Self {
            min: sorted[0],
            p50: at(0.5),
            p95: at(0.95),
            max: sorted[sorted.len() - 1],
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignSummary {
    pub kind: CampaignKind,
    pub n: usize,
    pub r: usize,
    pub trials: usize,
    pub bound: f64,
    pub passed: usize,
    pub empirical_pass_fraction: f64,
    /// Guaranteed pass fraction from the tail estimate; absent for `mk_baseline`.
    pub paper_bound_fraction: Option<f64>,
    pub quantiles: Quantiles,
    pub max_lhv: Option<f64>,
    /// `2^((n-1)/2)`.
    pub mk_reference: f64,
    /// `mk_baseline` only: every norm matched `2^((m-1)/2)` within [`MK_TOL`].
    pub mk_check: Option<bool>,
    /// `ww_mc` only: `9 sqrt(n ln 2)`, the sup-norm level for one-variable
    /// polynomials of degree `2^n`.
    pub ww_szk_bound: Option<f64>,
    pub config: CampaignConfig,
    pub version: String,
    pub log_base: String,
    pub note: String,
}

impl CampaignSummary {
    /// The `--assert-bounds` check.
    pub fn bounds_hold(&self) -> bool {
        let fraction_ok = self
            .paper_bound_fraction
            .is_none_or(|p| self.empirical_pass_fraction >= p);
        fraction_ok && self.mk_check != Some(false)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignOutput {
    pub summary: CampaignSummary,
    pub records: Vec<TrialRecord>,
}

pub fn run_campaign(cfg: &CampaignConfig) -> Result<CampaignOutput> {
    match cfg.kind {
        CampaignKind::CoplanarMc => run_coplanar_mc(cfg),
        CampaignKind::WwMc => run_ww_mc(cfg),
        CampaignKind::ExpectationMc => run_expectation_mc(cfg),
        CampaignKind::LhvSweep => run_lhv_sweep(cfg),
        CampaignKind::MkBaseline => run_mk_baseline(cfg),
    }
}

fn check_kind(cfg: &CampaignConfig, kind: CampaignKind) -> Result<CampaignConfig> {
    if cfg.kind != kind {
        return Err(HarnessError::Config(format!(
            "expected a {kind:?} config, got {:?}",
            cfg.kind
        )));
    }
    cfg.validated()
}

fn trial_optimizer(cfg: &CampaignConfig, trial_seed: u64) -> OptimizerConfig {
    OptimizerConfig {
        seed: mix_seed(mix_seed(trial_seed, OPTIMIZER_STREAM), cfg.optimizer.seed),
        ..cfg.optimizer.clone()
    }
}

fn trial_spec(cfg: &CampaignConfig, coeffs: &CoefficientTensor, trial_seed: u64) -> Result<BellSpec> {
    let signs = match &cfg.forced_signs {
        Some(s) => SignAssignment::from_signs(s.clone(), trial_seed)?,
        None => sample_signs(trial_seed, cfg.n, cfg.r)?,
    };
    Ok(BellSpec::from_parts(coeffs, &signs)?)
}

fn trial_lhv(cfg: &CampaignConfig, spec: &BellSpec, trial_seed: u64) -> Result<Option<f64>> {
    if !cfg.with_lhv {
        return Ok(None);
    }
    Ok(Some(
        lhv_norm(spec, cfg.lhv_restarts, mix_seed(trial_seed, LHV_STREAM))?.value,
    ))
}

struct Outcome {
    n: usize,
    r: usize,
    norm_estimate: f64,
    bound: f64,
    lhv_value: Option<f64>,
}

/// Runs `trial` for every index on a pool of `cfg.threads` workers and
/// returns the records in index order.
fn run_trials<F>(cfg: &CampaignConfig, count: u64, trial: F) -> Result<Vec<TrialRecord>>
where
    F: Fn(u64, u64) -> Result<Outcome> + Sync,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads)
        .build()
        .map_err(|e| HarnessError::Pool(e.to_string()))?;
    pool.install(|| {
        (0..count)
            .into_par_iter()
            .map(|index| {
                let trial_seed = mix_seed(cfg.master_seed, index);
                let start = Instant::now();
                let out = trial(index, trial_seed)?;
                let elapsed_ms = if cfg.record_timing {
                    start.elapsed().as_secs_f64() * 1e3
                } else {
                    0.0
                };
                Ok(TrialRecord {
                    trial_index: index,
                    trial_seed,
                    n: out.n,
                    r: out.r,
                    norm_estimate: out.norm_estimate,
                    bound: out.bound,
                    lhv_value: out.lhv_value,
                    passed: out.norm_estimate <= out.bound,
                    elapsed_ms,
                })
            })
            .collect()
    })
}

struct SummaryExtras {
    bound: f64,
    paper_bound_fraction: Option<f64>,
    mk_check: Option<bool>,
    ww_szk_bound: Option<f64>,
}

fn summarize(cfg: CampaignConfig, records: Vec<TrialRecord>, extras: SummaryExtras) -> CampaignOutput {
    let norms: Vec<f64> = records.iter().map(|t| t.norm_estimate).collect();
    let passed = records.iter().filter(|t| t.passed).count();
    let max_lhv = records.iter().filter_map(|t| t.lhv_value).reduce(f64::max);
    let summary = CampaignSummary {
        kind: cfg.kind,
        n: cfg.n,
        r: cfg.r,
        trials: records.len(),
        bound: extras.bound,
        passed,
        empirical_pass_fraction: passed as f64 / records.len() as f64,
        paper_bound_fraction: extras.paper_bound_fraction,
        quantiles: Quantiles::of(&norms).expect("campaigns have at least one trial"),
        max_lhv,
        mk_reference: mk_reference(cfg.n),
        mk_check: extras.mk_check,
        ww_szk_bound: extras.ww_szk_bound,
        version: env!("CARGO_PKG_VERSION").to_string(),
        log_base: LOG_BASE.to_string(),
        note: ESTIMATE_NOTE.to_string(),
        config: cfg,
    };
    CampaignOutput { summary, records }
}

/// Coplanar max-norm per sampled sign assignment against the `Prop1` bound.
pub fn run_coplanar_mc(cfg: &CampaignConfig) -> Result<CampaignOutput> {
    let cfg = check_kind(cfg, CampaignKind::CoplanarMc)?;
    let coeffs = make_coefficients(&cfg.scheme, cfg.n, cfg.r)?;
    let bound = prop_bound(PropKind::Prop1, cfg.n, cfg.r)?;
    let records = run_trials(&cfg, cfg.trial_count() as u64, |_, seed| {
        let spec = trial_spec(&cfg, &coeffs, seed)?;
        let (norm, _) = max_norm_over_angles(&spec, &trial_optimizer(&cfg, seed))?;
        Ok(Outcome {
            n: cfg.n,
            r: cfg.r,
            norm_estimate: norm,
            bound,
            lhv_value: trial_lhv(&cfg, &spec, seed)?,
        })
    })?;
    let extras = SummaryExtras {
        bound,
        paper_bound_fraction: Some(tail_probability(cfg.n, cfg.r)?),
        mk_check: None,
        ww_szk_bound: None,
    };
    Ok(summarize(cfg, records, extras))
}

/// Classical value per sampled sign assignment against the `Prop1` bound.
pub fn run_lhv_sweep(cfg: &CampaignConfig) -> Result<CampaignOutput> {
    let cfg = check_kind(cfg, CampaignKind::LhvSweep)?;
    let coeffs = make_coefficients(&cfg.scheme, cfg.n, cfg.r)?;
    let bound = prop_bound(PropKind::Prop1, cfg.n, cfg.r)?;
    let records = run_trials(&cfg, cfg.trial_count() as u64, |_, seed| {
        let spec = trial_spec(&cfg, &coeffs, seed)?;
        let value = lhv_norm(&spec, cfg.lhv_restarts, mix_seed(seed, LHV_STREAM))?.value;
        Ok(Outcome {
            n: cfg.n,
            r: cfg.r,
            norm_estimate: value,
            bound,
            lhv_value: Some(value),
        })
    })?;
    let extras = SummaryExtras {
        bound,
        paper_bound_fraction: Some(tail_probability(cfg.n, cfg.r)?),
        mk_check: None,
        ww_szk_bound: None,
    };
    Ok(summarize(cfg, records, extras))
}

/// `‖W_f‖` per sign function against `13 sqrt(n)`.
///
/// With `optimizer.starts = 0` every trial is evaluated at one set of random
/// directions drawn from the master seed; otherwise each trial maximizes
/// over directions.
pub fn run_ww_mc(cfg: &CampaignConfig) -> Result<CampaignOutput> {
    let cfg = check_kind(cfg, CampaignKind::WwMc)?;
    let n = cfg.n;
    let bound = prop_bound(PropKind::Prop3, n, 2)?;
    let fixed = AngleConfig::random(n, 2, mix_seed(cfg.master_seed, FIXED_ANGLE_STREAM))?;
    let theta0: Vec<f64> = (0..n).map(|j| fixed.get(j, 0)).collect();
    let theta1: Vec<f64> = (0..n).map(|j| fixed.get(j, 1)).collect();
    let forced = cfg.forced_f.clone().map(SignFunction::new).transpose()?;
    let count = if cfg.exhaustive {
        1u64 << (1u32 << n)
    } else {
        cfg.trial_count() as u64
    };
    let records = run_trials(&cfg, count, |index, seed| {
        let f = match &forced {
            Some(f) => f.clone(),
            None if cfg.exhaustive => SignFunction::from_index(n, index),
            None => sample_f(seed, n)?.next().expect("sampler is infinite"),
        };
        let norm = if cfg.optimizer.starts == 0 {
            ww_norm_fixed_angles(&f, &theta0, &theta1)?
        } else {
            bell_core::ww_max_norm_over_angles(&f, &trial_optimizer(&cfg, seed))?.0
        };
        let lhv_value = if cfg.with_lhv {
            trial_lhv(&cfg, &beta_from_f(&f).to_spec()?, seed)?
        } else {
            None
        };
        Ok(Outcome {
            n,
            r: 2,
            norm_estimate: norm,
            bound,
            lhv_value,
        })
    })?;
    let degree = 1usize << n;
    let extras = SummaryExtras {
        bound,
        paper_bound_fraction: Some(szk_probability(1, degree)?),
        mk_check: None,
        ww_szk_bound: Some(szk_bound(1, degree, 1.0)?),
    };
    let mut cfg = cfg;
    cfg.trials = Some(count as usize);
    Ok(summarize(cfg, records, extras))
}

/// Haar-random `SU(2)` from a normalized Gaussian 4-vector.
fn haar_unitary<R: Rng>(rng: &mut R) -> [[Complex64; 2]; 2] {
    let g: Vec<f64> = (0..4).map(|_| rng.sample(StandardNormal)).collect();
    let norm = g.iter().map(|x| x * x).sum::<f64>().sqrt();
    let a = Complex64::new(g[0], g[1]) / norm;
    let b = Complex64::new(g[2], g[3]) / norm;
    [[a, -b.conj()], [b, a.conj()]]
}

fn trial_state(cfg: &CampaignConfig, spec: &BellSpec, trial_seed: u64) -> Result<QuantumState> {
    let n = cfg.n;
    let seed = mix_seed(trial_seed, STATE_STREAM);
    match cfg.state {
        StateSelector::Ghz => Ok(ghz(n)?),
        StateSelector::Random => {
            let mut rng = seeded_rng(seed);
            let mut state = ghz(n)?;
            for site in 1..=n {
                state = state.apply_single(site, &haar_unitary(&mut rng))?;
            }
            Ok(state)
        }
        StateSelector::Eigen => {
            let angles = AngleConfig::random(n, cfg.r, seed)?;
            let (omega, _) = canonical_magnitudes(spec, &angles)?
                .into_iter()
                .reduce(|best, cand| if cand.1 > best.1 { cand } else { best })
                .expect("n >= 1");
            let record = eigenvalue_magnitude(spec, &angles, &omega)?;
            Ok(eigenvector(&omega, record.theta(), n)?)
        }
    }
}

/// `max |⟨Φ|Q|Φ⟩|` over directions for a fixed state against the `Prop2` bound.
pub fn run_expectation_mc(cfg: &CampaignConfig) -> Result<CampaignOutput> {
    let cfg = check_kind(cfg, CampaignKind::ExpectationMc)?;
    let coeffs = make_coefficients(&cfg.scheme, cfg.n, cfg.r)?;
    let bound = prop_bound(PropKind::Prop2, cfg.n, cfg.r)?;
    let records = run_trials(&cfg, cfg.trial_count() as u64, |_, seed| {
        let spec = trial_spec(&cfg, &coeffs, seed)?;
        let state = trial_state(&cfg, &spec, seed)?;
        let (value, _) = max_expectation_over_angles(&spec, &state, &trial_optimizer(&cfg, seed))?;
        Ok(Outcome {
            n: cfg.n,
            r: cfg.r,
            norm_estimate: value,
            bound,
            lhv_value: trial_lhv(&cfg, &spec, seed)?,
        })
    })?;
    let extras = SummaryExtras {
        bound,
        paper_bound_fraction: Some(szk_probability(2 * cfg.r * cfg.n, 2 * cfg.n)?),
        mk_check: None,
        ww_szk_bound: None,
    };
    Ok(summarize(cfg, records, extras))
}

/// Mermin-Klyshko operators for `m = 2..=n` at their optimal directions; one
/// record per `m`, checked against `2^((m-1)/2)`.
pub fn run_mk_baseline(cfg: &CampaignConfig) -> Result<CampaignOutput> {
    let cfg = check_kind(cfg, CampaignKind::MkBaseline)?;
    let sizes: Vec<usize> = (2..=cfg.n).collect();
    let records = run_trials(&cfg, sizes.len() as u64, |index, seed| {
        let m = sizes[index as usize];
        let mk = mk_spec(m)?;
        let norm = norm_fixed_angles(&mk.spec, &mk.optimal_angles)?;
        let lhv_value = if cfg.with_lhv && 2 * m <= bell_core::lhv::MAX_EXACT_VARIABLES {
            trial_lhv(&cfg, &mk.spec, seed)?
        } else {
            None
        };
        Ok(Outcome {
            n: m,
            r: 2,
            norm_estimate: norm,
            bound: prop_bound(PropKind::Prop1, m, 2)?,
            lhv_value,
        })
    })?;
    let mk_check = records
        .iter()
        .all(|t| (t.norm_estimate - mk_reference(t.n)).abs() <= MK_TOL);
    let extras = SummaryExtras {
        bound: prop_bound(PropKind::Prop1, cfg.n, 2)?,
        paper_bound_fraction: None,
        mk_check: Some(mk_check),
        ww_szk_bound: None,
    };
    let mut cfg = cfg;
    cfg.trials = Some(sizes.len());
    Ok(summarize(cfg, records, extras))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::SQRT_2;

    #[test]
    fn quantiles_nearest_rank() {
        let q = Quantiles::of(&[5.0, 1.0, 3.0, 2.0, 4.0]).unwrap();
        assert_eq!(
            q,
            Quantiles {
                min: 1.0,
                p50: 3.0,
                p95: 5.0,
                max: 5.0
            }
        );
        let values: Vec<f64> = (1..=100).map(f64::from).collect();
        let q = Quantiles::of(&values).unwrap();
        assert_eq!((q.p50, q.p95), (50.0, 95.0));
        assert!(Quantiles::of(&[]).is_none());
    }

    #[test]
    fn chsh_forced_single_trial() {
        let cfg = CampaignConfig {
            n: 2,
            trials: Some(1),
            scheme: bell_core::CoefficientScheme::Explicit(vec![1.0; 4]),
            forced_signs: Some(vec![1, 1, 1, -1]),
            ..CampaignConfig::default()
        };
        let out = run_coplanar_mc(&cfg).unwrap();
        let t = &out.records[0];
        assert!((t.norm_estimate - SQRT_2).abs() < 1e-9);
        assert!((t.bound - 9.0 * (4.0 * 2f64.ln()).sqrt()).abs() < 1e-12);
        assert!((t.bound - 14.98).abs() < 1e-2);
        assert!(t.passed);
        assert_eq!(out.summary.empirical_pass_fraction, 1.0);
    }

    #[test]
    fn ww_chsh_with_optimizer() {
        // f = CHSH: β = (1, 1, 1, -1)/2
        let cfg = CampaignConfig {
            kind: CampaignKind::WwMc,
            n: 2,
            trials: Some(1),
            forced_f: Some(vec![1, 1, 1, -1]),
            ..CampaignConfig::default()
        };
        let out = run_ww_mc(&cfg).unwrap();
        assert!((out.records[0].norm_estimate - SQRT_2).abs() < 1e-9);
        assert_eq!(out.records[0].bound, 13.0 * SQRT_2);
        assert!(out.records[0].passed);
    }

    #[test]
    fn ww_exhaustive_counts_all_functions() {
        let mut cfg = CampaignConfig::new(CampaignKind::WwMc);
        cfg.n = 2;
        cfg.exhaustive = true;
        cfg.optimizer.starts = 0;
        let out = run_ww_mc(&cfg).unwrap();
        assert_eq!(out.records.len(), 16);
        assert_eq!(out.summary.trials, 16);
        assert!(out.summary.quantiles.max <= 13.0 * SQRT_2);
    }

    #[test]
    fn mk_baseline_matches_reference() {
        let cfg = CampaignConfig {
            n: 6,
            with_lhv: true,
            ..CampaignConfig::new(CampaignKind::MkBaseline)
        };
        let out = run_mk_baseline(&cfg).unwrap();
        assert_eq!(out.records.len(), 5);
        assert_eq!(out.summary.mk_check, Some(true));
        assert!(out.summary.bounds_hold());
        for t in &out.records {
            assert_eq!(t.lhv_value, Some(1.0));
        }
    }

    #[test]
    fn lhv_sweep_is_below_bound() {
        let cfg = CampaignConfig {
            n: 4,
            trials: Some(20),
            ..CampaignConfig::new(CampaignKind::LhvSweep)
        };
        let out = run_lhv_sweep(&cfg).unwrap();
        assert!(out
            .records
            .iter()
            .all(|t| t.passed && t.lhv_value == Some(t.norm_estimate)));
    }

    #[test]
    fn state_selectors_give_unit_states() {
        for state in [StateSelector::Ghz, StateSelector::Random, StateSelector::Eigen] {
            let cfg = CampaignConfig {
                n: 3,
                state,
                ..CampaignConfig::new(CampaignKind::ExpectationMc)
            };
            let coeffs = make_coefficients(&cfg.scheme, 3, 2).unwrap();
            let spec = trial_spec(&cfg, &coeffs, 11).unwrap();
            let phi = trial_state(&cfg, &spec, 11).unwrap();
            assert!((phi.norm_sqr() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn eigen_state_attains_fixed_angle_norm() {
        let cfg = CampaignConfig {
            n: 3,
            state: StateSelector::Eigen,
            ..CampaignConfig::new(CampaignKind::ExpectationMc)
        };
        let coeffs = make_coefficients(&cfg.scheme, 3, 2).unwrap();
        let spec = trial_spec(&cfg, &coeffs, 4).unwrap();
        let phi = trial_state(&cfg, &spec, 4).unwrap();
        let angles = AngleConfig::random(3, 2, mix_seed(4, STATE_STREAM)).unwrap();
        let at = bell_core::bell_expectation(&spec, &phi, &angles.to_polar()).unwrap();
        assert!((at - norm_fixed_angles(&spec, &angles).unwrap()).abs() < 1e-10);
    }

    #[test]
    fn bounds_hold_compares_fractions() {
        let cfg = CampaignConfig {
            n: 3,
            trials: Some(2),
            ..CampaignConfig::new(CampaignKind::LhvSweep)
        };
        let mut s = run_lhv_sweep(&cfg).unwrap().summary;
        assert!(s.bounds_hold());
        s.empirical_pass_fraction = 0.5;
        assert!(!s.bounds_hold());
        s.paper_bound_fraction = None;
        assert!(s.bounds_hold());
        s.mk_check = Some(false);
        assert!(!s.bounds_hold());
    }

    #[test]
    fn kind_mismatch_is_config_error() {
        let cfg = CampaignConfig::new(CampaignKind::WwMc);
        assert!(matches!(run_coplanar_mc(&cfg), Err(HarnessError::Config(_))));
    }
}
