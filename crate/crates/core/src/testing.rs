//! Random fixtures shared by the unit tests.

use num_complex::Complex64;
use rand::Rng;

use crate::model::{make_coefficients, sample_signs, BellSpec, CoefficientScheme};
use crate::rng::{mix_seed, seeded_rng};
use crate::statevector::QuantumState;

pub(crate) fn random_spec(n: usize, r: usize, seed: u64) -> BellSpec {
    let coeffs = make_coefficients(
        &CoefficientScheme::RandomNormalized {
            seed: mix_seed(seed, 1),
        },
        n,
        r,
    )
    .unwrap();
    let signs = sample_signs(mix_seed(seed, 2), n, r).unwrap();
    BellSpec::from_parts(&coeffs, &signs).unwrap()
}

pub(crate) fn random_state(n: usize, seed: u64) -> QuantumState {
    let mut rng = seeded_rng(mix_seed(seed, 3));
    let amps = (0..1usize << n)
        .map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
        .collect();
    QuantumState::normalized(amps).unwrap()
}
