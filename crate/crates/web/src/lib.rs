//! wasm-bindgen bindings for the browser demo in `www/`.

use std::f64::consts::TAU;

use bell_core::coplanar::canonical_magnitudes;
use bell_core::rng::mix_seed;
use bell_core::{
    lambda_via_product, lhv_norm_exact, make_coefficients, max_norm_over_angles, product_coefficients, prop_bound,
    r_poly_eval, sample_f, sample_signs, AngleConfig, BellError, BellSpec, CoefficientScheme, OptimizerConfig,
    PropKind,
};
use wasm_bindgen::prelude::*;

fn js_err(e: BellError) -> JsError {
    JsError::new(&e.to_string())
}

/// `|μ(ω)|` for every canonical `ω`, given signed coefficients (length
/// `r^n`, rank order) and site-major coplanar angles (length `n r`).
#[wasm_bindgen]
pub fn spectrum(n: usize, r: usize, values: Vec<f64>, angles: Vec<f64>) -> Result<Vec<f64>, JsError> {
    let spec = BellSpec::from_signed(n, r, values).map_err(js_err)?;
    let angles = AngleConfig::new(n, r, angles).map_err(js_err)?;
    let mags = canonical_magnitudes(&spec, &angles).map_err(js_err)?;
    Ok(mags.into_iter().map(|(_, m)| m).collect())
}

/// Exact classical value of the same coefficients.
#[wasm_bindgen]
pub fn classical_value(n: usize, r: usize, values: Vec<f64>) -> Result<f64, JsError> {
    let spec = BellSpec::from_signed(n, r, values).map_err(js_err)?;
    Ok(lhv_norm_exact(&spec).map_err(js_err)?.value)
}

/// For a sampled sign function on `n` sites at random directions:
/// `[|λ_f|, |R(t_0)|, …, |R(t_{samples-1})|]` with `t_i = 2π i / samples`.
#[wasm_bindgen]
pub fn ww_curve(n: usize, seed: u32, samples: usize) -> Result<Vec<f64>, JsError> {
    let f = sample_f(u64::from(seed), n)
        .map_err(js_err)?
        .next()
        .expect("sampler is infinite");
    let angles = AngleConfig::random(n, 2, mix_seed(u64::from(seed), 1)).map_err(js_err)?;
    let t0: Vec<f64> = (0..n).map(|j| angles.get(j, 0)).collect();
    let t1: Vec<f64> = (0..n).map(|j| angles.get(j, 1)).collect();
    let pc = product_coefficients(&t0, &t1).map_err(js_err)?;
    let mut out = vec![lambda_via_product(&f, &pc).map_err(js_err)?.norm()];
    for i in 0..samples {
        let t = TAU * i as f64 / samples as f64;
        out.push(r_poly_eval(&f, &pc, t).map_err(js_err)?.norm());
    }
    Ok(out)
}

/// Coplanar max-norm estimates for `trials` uniform random-sign operators.
#[wasm_bindgen]
pub fn random_norms(n: usize, r: usize, trials: usize, seed: u32, starts: usize) -> Result<Vec<f64>, JsError> {
    let coeffs = make_coefficients(&CoefficientScheme::Uniform, n, r).map_err(js_err)?;
    (0..trials as u64)
        .map(|i| {
            let trial_seed = mix_seed(u64::from(seed), i);
            let signs = sample_signs(trial_seed, n, r)?;
            let spec = BellSpec::from_parts(&coeffs, &signs)?;
            let opt = OptimizerConfig {
                starts,
                seed: trial_seed,
                ..OptimizerConfig::default()
            };
            Ok(max_norm_over_angles(&spec, &opt)?.0)
        })
        .collect::<Result<Vec<f64>, BellError>>()
        .map_err(js_err)
}

/// `9 sqrt(rn ln n)`.
#[wasm_bindgen]
pub fn coplanar_bound(n: usize, r: usize) -> Result<f64, JsError> {
    prop_bound(PropKind::Prop1, n, r).map_err(js_err)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chsh_spectrum() {
        let q = std::f64::consts::FRAC_PI_4;
        let mags = spectrum(2, 2, vec![0.5, 0.5, 0.5, -0.5], vec![0.0, 2.0 * q, -q, q]).unwrap();
        assert!(mags.iter().any(|m| (m - std::f64::consts::SQRT_2).abs() < 1e-12));
        assert_eq!(classical_value(2, 2, vec![0.5, 0.5, 0.5, -0.5]).unwrap(), 1.0);
    }

    #[test]
    fn curve_starts_at_lambda() {
        let curve = ww_curve(4, 3, 16).unwrap();
        assert_eq!(curve.len(), 17);
        assert_eq!(curve[0], curve[1]);
    }

    #[test]
    fn norms_stay_below_bound() {
        let bound = coplanar_bound(4, 2).unwrap();
        assert!(random_norms(4, 2, 5, 1, 8).unwrap().iter().all(|&v| v <= bound));
    }
}
