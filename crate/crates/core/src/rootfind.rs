//! Bisection for monotone scalar equations.
//!
//! Every strategy and allocation in this crate reduces to an equalization
//! equation `Σ_i w^{1/m_i} = target` with `w ∈ [0, 1]`, whose left-hand side
//! is strictly increasing from `0` to the number of terms.

use crate::error::{Error, Result};

pub const DEFAULT_TOL: f64 = 1e-12;
pub const MAX_ITERATIONS: usize = 200;

/// Finds `x ∈ [lo, hi]` with `g(x) = target` for strictly increasing `g`.
///
/// Stops once the bracket is narrower than `tol` (or after
/// [`MAX_ITERATIONS`] halvings) and returns its midpoint.
pub fn solve_monotone_increasing<G>(g: G, target: f64, lo: f64, hi: f64, tol: f64) -> Result<f64>
where
    G: Fn(f64) -> f64,
{
    let (mut lo, mut hi) = (lo, hi);
    let (g_lo, g_hi) = (g(lo), g(hi));
    // Written negated so that NaN anywhere rejects the bracket.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    let unbracketed = !(lo <= hi) || !(g_lo <= target && target <= g_hi);
    if unbracketed {
        return Err(Error::Bracket { g_lo, g_hi, target });
    }
    if g_lo == target {
        return Ok(lo);
    }
    if g_hi == target {
        return Ok(hi);
    }
    for _ in 0..MAX_ITERATIONS {
        if hi - lo <= tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let g_mid = g(mid);
        if g_mid == target {
            return Ok(mid);
        }
        if g_mid < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Solves `Σ_i w^{1/m_i} = target` for `w ∈ [0, 1]`.
///
/// `target` must lie in `[0, exponents.len()]`; every `m_i >= 1`.
pub fn solve_power_sum(exponents: &[u32], target: f64) -> Result<f64> {
    if exponents.contains(&0) {
        return Err(Error::InvalidSpec(
            "exponent denominators must be >= 1".into(),
        ));
    }
    let inv: Vec<f64> = exponents.iter().map(|&m| 1.0 / f64::from(m)).collect();
    solve_monotone_increasing(
        |w| inv.iter().map(|&e| w.powf(e)).sum(),
        target,
        0.0,
        1.0,
        DEFAULT_TOL,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear() {
        let x = solve_monotone_increasing(|w| 2.0 * w, 1.0, 0.0, 1.0, 1e-12).unwrap();
        assert!((x - 0.5).abs() < 1e-12);
    }

    #[test]
    fn square_root() {
        let x = solve_monotone_increasing(|w| 3.0 * w.sqrt(), 2.0, 0.0, 1.0, 1e-12).unwrap();
        assert!((x - 4.0 / 9.0).abs() < 1e-11);
    }

    #[test]
    fn golden_quadratic() {
        let x = solve_monotone_increasing(|w| w.sqrt() + w, 1.0, 0.0, 1.0, 1e-12).unwrap();
        assert!((x - (3.0 - 5f64.sqrt()) / 2.0).abs() < 1e-11);
    }

    #[test]
    fn bracket_violation() {
        let err = solve_monotone_increasing(|w| w, 2.0, 0.0, 1.0, 1e-12).unwrap_err();
        assert!(matches!(err, Error::Bracket { .. }));
        assert!(solve_monotone_increasing(|w| w, 0.5, 1.0, 0.0, 1e-12).is_err());
        assert!(solve_monotone_increasing(|w| w, f64::NAN, 0.0, 1.0, 1e-12).is_err());
    }

    #[test]
    fn endpoint_targets() {
        assert_eq!(solve_power_sum(&[3], 0.0).unwrap(), 0.0);
        assert_eq!(solve_power_sum(&[2, 2], 2.0).unwrap(), 1.0);
    }

    #[test]
    fn power_sum_matches_closed_form() {
        // 2 w^{1/2} = 1
        let w = solve_power_sum(&[2, 2], 1.0).unwrap();
        assert!((w - 0.25).abs() < 1e-11);
        assert!(solve_power_sum(&[0, 1], 1.0).is_err());
    }
}
