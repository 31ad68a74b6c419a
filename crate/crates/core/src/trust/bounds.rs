//! Closed-form round budgets.

use std::f64::consts::E;

use crate::error::{input, Error, Result};

/// Rounds plus the failure probability they were sized for.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RoundBudget {
    pub r: usize,
    pub delta: f64,
}

impl RoundBudget {
    pub fn new(r: usize, delta: f64) -> Result<Self> {
        if r == 0 {
            return input("round budget must be at least 1");
        }
        check_delta(delta)?;
        Ok(Self { r, delta })
    }
}

fn check_delta(delta: f64) -> Result<()> {
    if !(delta > 0.0 && delta < 1.0) {
        return input(format!("delta must lie in (0, 1), got {delta}"));
    }
    Ok(())
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if !(epsilon > 0.0 && epsilon < 0.5) {
        return input(format!("epsilon must lie in (0, 0.5), got {epsilon}"));
    }
    Ok(())
}

/// Ceiling that ignores float noise just above an integer.
fn ceil_tolerant(x: f64) -> f64 {
    (x - 1e-9 * x.abs().max(1.0)).ceil()
}

/// Rounds sufficient for every legitimate robot to hold the correct vector
/// with probability at least `1 − δ`:
///
/// `⌈ ln(2ln/(δε²τ))/(τε²) + ln(2e^e·d_L/τ)/ε² ⌉ + 1`
///
/// `d_L` is the largest self-inclusive legitimate degree.
pub fn rounds_bound_theorem1(
    l: usize,
    n: usize,
    epsilon: f64,
    tau: i64,
    d_l: usize,
    delta: f64,
) -> Result<usize> {
    if tau <= 0 {
        return Err(Error::Domain(format!(
            "τ = {tau}: consensus on trust is impossible without positive τ"
        )));
    }
    if l == 0 || n < l || d_l == 0 {
        return input(format!("need 1 <= l <= n and d_L >= 1, got l={l}, n={n}, d_L={d_l}"));
    }
    check_epsilon(epsilon)?;
    check_delta(delta)?;
    let (l, n, tau, d_l) = (l as f64, n as f64, tau as f64, d_l as f64);
    let e2 = epsilon * epsilon;
    let first = (2.0 * l * n / (delta * e2 * tau)).ln() / (tau * e2);
    let second = (2.0 * E.powf(E) * d_l / tau).ln() / e2;
    let r = ceil_tolerant(first + second) + 1.0;
    Ok(r.max(1.0) as usize)
}

/// Observation count at which a plain majority misclassifies one pair with
/// probability at most `δ`: `⌈ln(1/δ)/(2ε²)⌉`.
pub fn rounds_bound_baseline(delta: f64, epsilon: f64) -> Result<usize> {
    check_delta(delta)?;
    check_epsilon(epsilon)?;
    let r = ceil_tolerant((1.0 / delta).ln() / (2.0 * epsilon * epsilon));
    Ok(r.max(1.0) as usize)
}

/// Largest round estimate the doubling driver tries: `20·ln(n/ε²)/ε²`.
pub fn anytime_cap(n: usize, epsilon: f64) -> Result<f64> {
    if n == 0 {
        return input("n must be positive");
    }
    check_epsilon(epsilon)?;
    let e2 = epsilon * epsilon;
    Ok(20.0 * (n as f64 / e2).ln() / e2)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bound(l: usize, n: usize, eps: f64, tau: i64, d: usize, delta: f64) -> usize {
        rounds_bound_theorem1(l, n, eps, tau, d, delta).unwrap()
    }

    #[test]
    fn round_bound_direct_evaluation() {
        // ln(2·10·115·9/(0.5·5)) / (5/9) + ln(2e^e·115/5) · 9
        let eps: f64 = 1.0 / 3.0;
        let first = (2.0 * 10.0 * 115.0 / (0.5 * eps * eps * 5.0)).ln() / (5.0 * eps * eps);
        let second = (2.0 * E.powf(E) * 115.0 / 5.0).ln() / (eps * eps);
        let expected = (first + second).ceil() as usize + 1;
        assert_eq!(bound(10, 115, eps, 5, 115, 0.5), expected);
        assert_eq!(expected, 77);
    }

    #[test]
    fn round_bound_domain_errors() {
        assert!(matches!(
            rounds_bound_theorem1(10, 115, 0.3, 0, 115, 0.5),
            Err(Error::Domain(_))
        ));
        assert!(rounds_bound_theorem1(10, 115, 0.6, 5, 115, 0.5).is_err());
        assert!(rounds_bound_theorem1(10, 115, 0.3, 5, 115, 1.0).is_err());
        assert!(rounds_bound_theorem1(0, 115, 0.3, 5, 115, 0.5).is_err());
    }

    #[test]
    fn doubling_tau_lowers_the_bound() {
        for &(l, n, eps) in &[(10usize, 115usize, 1.0 / 3.0), (100, 1150, 1.0 / 3.0), (1000, 11500, 1.0 / 3.0)] {
            for tau in [2i64, 4, 5, 8, 16] {
                if tau * 2 > l as i64 {
                    continue;
                }
                assert!(bound(l, n, eps, 2 * tau, n, 0.5) < bound(l, n, eps, tau, n, 0.5));
            }
        }
    }

    #[test]
    fn halving_delta_costs_little() {
        for &eps in &[0.1, 0.2, 1.0 / 3.0] {
            for tau in [2i64, 5, 10] {
                for &delta in &[0.5, 0.1, 0.01] {
                    let a = bound(20, 200, eps, tau, 50, delta);
                    let b = bound(20, 200, eps, tau, 50, delta / 2.0);
                    let slack = (2f64.ln() / (tau as f64 * eps * eps)).ceil() as usize + 1;
                    assert!(b >= a && b - a <= slack, "{eps} {tau} {delta}: {a} -> {b}");
                }
            }
        }
    }

    #[test]
    fn baseline_substitutions() {
        assert_eq!(rounds_bound_baseline((-2f64).exp(), 1.0 / 3.0).unwrap(), 9);
        assert_eq!(rounds_bound_baseline(0.5, 0.1).unwrap(), 35);
        assert!(rounds_bound_baseline(0.0, 0.1).is_err());
    }

    #[test]
    fn anytime_cap_value() {
        let cap = anytime_cap(115, 1.0 / 3.0).unwrap();
        assert!((cap - 180.0 * 1035f64.ln()).abs() < 1e-9);
    }

    #[test]
    fn budget_validation() {
        assert!(RoundBudget::new(0, 0.1).is_err());
        assert!(RoundBudget::new(3, 1.5).is_err());
        assert_eq!(RoundBudget::new(3, 0.1).unwrap().r, 3);
    }
}
