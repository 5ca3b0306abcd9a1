//! Closed-form high-probability bounds on random-sign norms.
//!
//! Logarithms are natural logarithms throughout.

use serde::{Deserialize, Serialize};

use crate::error::{BellError, Result};

/// Base of the logarithm used by every bound, echoed in reports.
pub const LOG_BASE: &str = "natural";

/// `9 * sqrt(s * weight * ln N)`, the sup-norm level exceeded by a random-sign
/// trigonometric polynomial in `s` variables of degree `N` with probability at
/// most `1 / (N^2 e^s)`.
pub fn szk_bound(s: usize, degree: usize, weight: f64) -> Result<f64> {
    if s < 1 {
        return Err(BellError::Domain(format!("s must be >= 1, got {s}")));
    }
    if degree < 2 {
        return Err(BellError::Domain(format!("degree must be >= 2, got {degree}")));
    }
    if !(weight > 0.0 && weight.is_finite()) {
        return Err(BellError::Domain(format!("weight must be positive, got {weight}")));
    }
    Ok(9.0 * (s as f64 * weight * (degree as f64).ln()).sqrt())
}

/// `1 - 1/(N^2 e^s)`: lower bound on the probability that [`szk_bound`] holds.
pub fn szk_probability(s: usize, degree: usize) -> Result<f64> {
    if s < 1 || degree < 2 {
        return Err(BellError::Domain(format!(
            "need s >= 1 and degree >= 2, got s = {s}, degree = {degree}"
        )));
    }
    let d = degree as f64;
    Ok(1.0 - 1.0 / (d * d * (s as f64).exp()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PropKind {
    /// Coplanar operator norm, `9 sqrt(rn ln n)`.
    Prop1,
    /// Expectation in a fixed state, `36 sqrt(rn ln n)`.
    Prop2,
    /// Werner-Wolf operator norm, `13 sqrt(n)`.
    Prop3,
}

pub fn prop_bound(kind: PropKind, n: usize, r: usize) -> Result<f64> {
    if n < 2 {
        return Err(BellError::Domain(format!("bounds need n >= 2, got {n}")));
    }
    if r < 1 {
        return Err(BellError::Domain("r must be >= 1".into()));
    }
    match kind {
        PropKind::Prop1 => szk_bound(r * n, n, 1.0),
        PropKind::Prop2 => Ok(4.0 * szk_bound(r * n, n, 1.0)?),
        PropKind::Prop3 if r != 2 => Err(BellError::Unsupported(format!(
            "the Werner-Wolf bound needs r = 2, got r = {r}"
        ))),
        PropKind::Prop3 => Ok(13.0 * (n as f64).sqrt()),
    }
}

/// `1 - 1/(n^2 e^(rn))`, the guaranteed fraction of sign choices whose
/// coplanar max-norm stays below the `Prop1` bound.
pub fn tail_probability(n: usize, r: usize) -> Result<f64> {
    if n < 2 || r < 1 {
        return Err(BellError::Domain(format!(
            "need n >= 2 and r >= 1, got n = {n}, r = {r}"
        )));
    }
    szk_probability(r * n, n)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn szk_examples() {
        // 9 * sqrt(20 ln 10), 9 * sqrt(ln 1024), 9 * sqrt(ln 2)
        assert!(close(szk_bound(20, 10, 1.0).unwrap(), 61.075, 1e-3));
        assert!(close(szk_bound(1, 1024, 1.0).unwrap(), 23.694, 1.5e-3));
        assert!(close(szk_bound(4, 2, 0.25).unwrap(), 7.492, 1.5e-3));
        assert!(close(szk_bound(4, 2, 0.25).unwrap(), 9.0 * 2f64.ln().sqrt(), 1e-12));
    }

    #[test]
    fn szk_domain_errors() {
        assert!(matches!(szk_bound(1, 1, 1.0), Err(BellError::Domain(_))));
        assert!(matches!(szk_bound(0, 4, 1.0), Err(BellError::Domain(_))));
        assert!(matches!(szk_bound(1, 4, 0.0), Err(BellError::Domain(_))));
    }

    #[test]
    fn prop_examples() {
        assert!(close(prop_bound(PropKind::Prop1, 10, 2).unwrap(), 61.075, 1e-3));
        assert!(close(prop_bound(PropKind::Prop2, 10, 2).unwrap(), 244.30, 1e-2));
        assert_eq!(prop_bound(PropKind::Prop3, 9, 2).unwrap(), 39.0);
        assert!(matches!(prop_bound(PropKind::Prop1, 1, 2), Err(BellError::Domain(_))));
        assert!(matches!(
            prop_bound(PropKind::Prop3, 9, 3),
            Err(BellError::Unsupported(_))
        ));
    }

    #[test]
    fn prop1_is_szk_instantiation() {
        for n in 2..40 {
            for r in 1..5 {
                assert_eq!(
                    prop_bound(PropKind::Prop1, n, r).unwrap(),
                    szk_bound(r * n, n, 1.0).unwrap()
                );
            }
        }
    }

    #[test]
    fn tail_examples() {
        let p = tail_probability(10, 2).unwrap();
        assert!(close((1.0 - p) / 2.0612e-11, 1.0, 1e-4));
        assert!(close(tail_probability(2, 1).unwrap(), 0.96617, 1e-5));
        assert!(close(tail_probability(2, 2).unwrap(), 0.995421, 1e-6));
        assert!(tail_probability(1, 2).is_err());
    }

    #[test]
    fn szk_monotone_on_grid() {
        let weights = [0.1, 0.5, 1.0, 2.0, 5.0, 10.0, 20.0, 50.0, 100.0, 1000.0];
        for s in 1..=10 {
            for degree in 2..=11 {
                for (wi, &w) in weights.iter().enumerate() {
                    let v = szk_bound(s, degree, w).unwrap();
                    assert!(szk_bound(s + 1, degree, w).unwrap() > v);
                    assert!(szk_bound(s, degree + 1, w).unwrap() > v);
                    if let Some(&w2) = weights.get(wi + 1) {
                        assert!(szk_bound(s, degree, w2).unwrap() > v);
                    }
                }
            }
        }
    }
}
