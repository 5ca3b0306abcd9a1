//! Random Bell operators and their quantum and classical norms.
//!
//! A Bell operator on `n` qubits with `r` measurement settings per site is
//! `Q = Σ_k ±c(k) σ(a¹_{k₁}) ⊗ … ⊗ σ(aⁿ_{kₙ})`. This crate builds such
//! operators with random signs ([`model`]), evaluates closed-form
//! high-probability norm bounds ([`bounds`]), computes exact spectra for
//! coplanar directions ([`coplanar`]) with a dense-matrix cross-check
//! ([`dense`]), the classical local-hidden-variable value ([`lhv`]), the
//! two-setting extremal family ([`werner_wolf`]) and pure-state expectations
//! for arbitrary directions ([`statevector`]).

pub mod bounds;
pub mod coplanar;
pub mod dense;
pub mod error;
pub mod lhv;
pub mod model;
pub mod rng;
pub mod statevector;
pub mod werner_wolf;

#[cfg(test)]
pub(crate) mod testing;

pub use bounds::{prop_bound, szk_bound, szk_probability, tail_probability, PropKind, LOG_BASE};
pub use coplanar::{
    eigenvalue_magnitude, eigenvector, max_norm_over_angles, norm_fixed_angles, EigenRecord, OptimizerConfig,
    ParityVector,
};
pub use dense::{dense_norm_oracle, DenseOperator, Directions};
pub use error::{BellError, Result};
pub use lhv::{lhv_norm, lhv_norm_exact, lhv_norm_heuristic, ClassicalAssignment, LhvResult};
pub use model::{
    make_coefficients, rank, sample_signs, AngleConfig, BellSpec, CoefficientScheme, CoefficientTensor, MultiIndex,
    PolarConfig, SignAssignment, SignedCoefficients,
};
pub use statevector::{
    apply_spin, bell_expectation, ghz, max_expectation_over_angles, mk_reference, mk_spec, MKSpec, QuantumState,
};
pub use werner_wolf::{
    beta_from_f, enumerate_f, f_from_beta, lambda_via_product, product_coefficients, r_poly_eval, sample_f,
    ww_eigenvalue_magnitudes, ww_max_norm_over_angles, ProductCoefficients, SignFunction, WWCoefficients,
};
