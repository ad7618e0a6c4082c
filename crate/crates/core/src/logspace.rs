//! Log-space arithmetic. Bayes factor totals reach 10^50 and beyond, so
//! nothing is exponentiated without first shifting by a running maximum.

use std::f64::consts::LN_10;

/// `ln(eᵃ + eᵇ)`; `-∞` is the additive identity.
#[inline]
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// `ln Σ exp(vᵢ)`, summed in slice order; `-∞` for an empty slice.
pub fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max.is_infinite() {
        return max;
    }
    max + values.iter().map(|&v| (v - max).exp()).sum::<f64>().ln()
}

/// Natural log to decimal log.
#[inline]
pub fn to_log10(ln: f64) -> f64 {
    ln / LN_10
}

/// Probability of the first branch given two unnormalized log weights,
/// `1 / (1 + exp(b − a))`, stable for any magnitudes.
#[inline]
pub fn two_way_probability(log_a: f64, log_b: f64) -> f64 {
    match (log_a == f64::NEG_INFINITY, log_b == f64::NEG_INFINITY) {
        (true, true) => 0.0,
        (true, false) => 0.0,
        (false, true) => 1.0,
        (false, false) => {
            let d = log_b - log_a;
            if d > 0.0 {
                let e = (-d).exp();
                e / (1.0 + e)
            } else {
                1.0 / (1.0 + d.exp())
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn add_exp_identities() {
        assert_eq!(log_add_exp(f64::NEG_INFINITY, 3.0), 3.0);
        assert!((log_add_exp(0.0, 0.0) - 2f64.ln()).abs() < 1e-15);
        let big = log_add_exp(1000.0, 1000.0);
        assert!((big - 1000.0 - 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn sum_exp_matches_direct_when_safe() {
        let v = [-1.0, -2.0, -3.0];
        let direct = v.iter().map(|x: &f64| x.exp()).sum::<f64>().ln();
        assert!((log_sum_exp(&v) - direct).abs() < 1e-15);
        assert_eq!(log_sum_exp(&[]), f64::NEG_INFINITY);
        assert_eq!(log_sum_exp(&[f64::NEG_INFINITY; 3]), f64::NEG_INFINITY);
    }

    #[test]
    fn two_way_is_symmetric_and_stable() {
        assert_eq!(two_way_probability(5.0, 5.0), 0.5);
        assert!((two_way_probability(800.0, 0.0) - 1.0).abs() < 1e-300);
        assert!(two_way_probability(0.0, 700.0) > 0.0);
        assert_eq!(two_way_probability(f64::NEG_INFINITY, 0.0), 0.0);
        assert_eq!(two_way_probability(0.0, f64::NEG_INFINITY), 1.0);
        let p = two_way_probability(1.3, -0.4);
        assert!((p + two_way_probability(-0.4, 1.3) - 1.0).abs() < 1e-15);
    }
}
