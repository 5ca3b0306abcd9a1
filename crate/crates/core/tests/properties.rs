use bell_core::coplanar::{canonical_magnitudes, eigenvalue_sums};
use bell_core::werner_wolf::fwht;
use bell_core::{
    beta_from_f, eigenvalue_magnitude, f_from_beta, lhv_norm_exact, max_norm_over_angles, norm_fixed_angles, rank,
    AngleConfig, BellSpec, MultiIndex, OptimizerConfig, ParityVector, SignFunction,
};
use proptest::prelude::*;

fn spec_strategy() -> impl Strategy<Value = BellSpec> {
    (1usize..=4, 1usize..=3).prop_flat_map(|(n, r)| {
        let len = r.pow(n as u32);
        prop::collection::vec(-1.0f64..1.0, len).prop_filter_map("nonzero", move |v| {
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            (norm > 1e-3).then(|| BellSpec::from_signed(n, r, v.iter().map(|x| x / norm).collect()).unwrap())
        })
    })
}

fn angles_for(spec: &BellSpec, seed: u64) -> AngleConfig {
    AngleConfig::random(spec.n(), spec.r(), seed).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn rank_unrank_round_trip(n in 1usize..=6, r in 1usize..=4, seed in any::<u64>()) {
        let len = r.pow(n as u32);
        let idx = (seed % len as u64) as usize;
        let m = MultiIndex::unrank(idx, n, r).unwrap();
        prop_assert_eq!(rank(&m, r).unwrap(), idx);
    }

    #[test]
    fn fwht_twice_scales_by_length(values in prop::collection::vec(-10.0f64..10.0, 16)) {
        let mut data = values.clone();
        fwht(&mut data);
        fwht(&mut data);
        for (a, b) in data.iter().zip(&values) {
            prop_assert!((a / 16.0 - b).abs() < 1e-12);
        }
    }

    #[test]
    fn sign_function_round_trips_through_beta(bits in any::<u64>(), n in 1usize..=6) {
        let len = 1usize << n;
        let values = (0..len).map(|i| if (bits >> (i % 64)) & 1 == 1 { -1 } else { 1 }).collect();
        let f = SignFunction::new(values).unwrap();
        prop_assert_eq!(f_from_beta(&beta_from_f(&f)).unwrap(), f);
    }

    #[test]
    fn spectrum_is_conjugate_symmetric(spec in spec_strategy(), seed in any::<u64>()) {
        let angles = angles_for(&spec, seed);
        let sums = eigenvalue_sums(&spec, &angles).unwrap();
        let mask = (1usize << spec.n()) - 1;
        for (b, mu) in sums.iter().enumerate() {
            prop_assert!((mu - sums[b ^ mask].conj()).norm() < 1e-12);
        }
    }

    #[test]
    fn fast_and_direct_eigenvalues_agree(spec in spec_strategy(), seed in any::<u64>()) {
        let angles = angles_for(&spec, seed);
        for (omega, magnitude) in canonical_magnitudes(&spec, &angles).unwrap() {
            let direct = eigenvalue_magnitude(&spec, &angles, &omega).unwrap().magnitude;
            prop_assert!((magnitude - direct).abs() < 1e-12);
        }
    }

    #[test]
    fn classical_value_is_below_quantum_norm(spec in spec_strategy()) {
        let lhv = lhv_norm_exact(&spec).unwrap().value;
        let opt = OptimizerConfig { starts: 16, ..Default::default() };
        let (norm, _) = max_norm_over_angles(&spec, &opt).unwrap();
        prop_assert!(lhv <= norm + 1e-9);
        // the quantum norm never exceeds the l1 norm of the coefficients
        prop_assert!(norm <= spec.values().iter().map(|v| v.abs()).sum::<f64>() + 1e-9);
    }

    #[test]
    fn negation_preserves_norm(spec in spec_strategy(), seed in any::<u64>()) {
        let angles = angles_for(&spec, seed);
        let a = norm_fixed_angles(&spec, &angles).unwrap();
        let b = norm_fixed_angles(&spec.negated(), &angles).unwrap();
        prop_assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn parity_basis_index_round_trip(n in 1usize..=12, idx in any::<usize>()) {
        let idx = idx % (1 << n);
        prop_assert_eq!(ParityVector::from_basis_index(n, idx).basis_index(), idx);
    }
}
