//! Maximum-entropy product distributions on subsets of `[n]`.
//!
//! For a budget `x` the entropy `Σ h(p_m)` is maximized subject to
//! `Σ p_m/m ≤ x`. Below the saturation point `x < H_n/2` the maximizer is
//! `p_m = 1/(1 + e^{c·n/m})` for the unique `c > 0` meeting the budget with
//! equality. As `n → ∞`, `c` tends to the root `λ` of
//!
//! ```text
//! ∫₀¹ dy / (y (1 + e^{λ/y})) = x
//! ```
//!
//! and `H/n` tends to `c_x = ∫₀¹ h(1/(1 + e^{λ/y})) dy`.
//!
//! Both integrals are taken in the variable `v = ln(1/y)`, which turns the
//! singular endpoint into a smooth, exponentially decaying tail.

pub mod quadrature;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use quadrature::{integrate, pairwise_sum, QuadConfig};

/// Numerical tolerances shared by every solver in this module.
#[derive(Debug, Clone, Copy)]
pub struct Tolerances {
    /// Relative budget residual accepted from the discrete solver.
    pub profile_rel: f64,
    pub max_bisections: usize,
    /// `p` at or below this is treated as 0 in `p log p`.
    pub entropy_floor: f64,
    /// Slack added per element when rounding `H` up for counting bounds.
    pub bound_slack_per_element: f64,
    pub lambda_bracket: (f64, f64),
    pub lambda_residual: f64,
    /// Truncation target for the discarded tail of the moment integral.
    pub tail: f64,
    pub quad: QuadConfig,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            profile_rel: 1e-10,
            max_bisections: 200,
            entropy_floor: 1e-300,
            bound_slack_per_element: 1e-9,
            lambda_bracket: (1e-12, 1e2),
            lambda_residual: 1e-8,
            tail: 1e-12,
            quad: QuadConfig::default(),
        }
    }
}

/// Binary entropy in bits, with `h(0) = h(1) = 0`.
pub fn binary_entropy(p: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(domain(format!("probability {p} outside [0, 1]")));
    }
    Ok(h_bits(p, Tolerances::default().entropy_floor))
}

fn h_bits(p: f64, floor: f64) -> f64 {
    let q = 1.0 - p;
    let a = if p <= floor { 0.0 } else { -p * p.ln() };
    let b = if q <= floor { 0.0 } else { -q * (-p).ln_1p() };
    (a + b) / std::f64::consts::LN_2
}

/// `1/(1 + e^t)` without overflow.
fn logistic_tail(t: f64) -> f64 {
    if t >= 0.0 {
        let e = (-t).exp();
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + t.exp())
    }
}

/// The discrete maximizer for `[n]` and budget `x`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropyProfile {
    pub n: u64,
    pub x: f64,
    /// The Lagrange parameter; 0 in the saturated regime.
    pub c: f64,
    /// `p[m-1]` is the inclusion probability of `m`.
    pub p: Vec<f64>,
    /// `Σ h(p_m)` in bits.
    pub entropy_bits: f64,
}

impl EntropyProfile {
    pub fn saturated(&self) -> bool {
        self.c == 0.0
    }

    /// `Σ p_m / m`.
    pub fn budget_used(&self) -> f64 {
        let terms: Vec<f64> = self
            .p
            .iter()
            .enumerate()
            .map(|(i, &p)| p / (i + 1) as f64)
            .collect();
        pairwise_sum(&terms)
    }

    /// Two columns, `m,p_m`, one row per element.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("m,p_m\n");
        for (i, p) in self.p.iter().enumerate() {
            out.push_str(&format!("{},{:e}\n", i + 1, p));
        }
        out
    }

    /// A profile with caller-chosen probabilities, e.g. degenerate test inputs.
    pub fn from_probabilities(p: Vec<f64>, x: f64) -> Result<Self> {
        if p.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(domain("probabilities must lie in [0, 1]"));
        }
        let floor = Tolerances::default().entropy_floor;
        let entropy_bits = pairwise_sum(&p.iter().map(|&v| h_bits(v, floor)).collect::<Vec<_>>());
        Ok(EntropyProfile {
            n: p.len() as u64,
            x,
            c: f64::NAN,
            p,
            entropy_bits,
        })
    }
}

/// Inclusion probabilities `1/(1+e^{c·scale/m})` for each `m` in `elements`
/// with `c` chosen so that `Σ p_m/m = x`. Returns `(c, p)`; `c = 0` with all
/// `p = 1/2` when even the unconstrained maximizer fits the budget.
pub fn fit_inclusion_probabilities(
    elements: &[u64],
    scale: f64,
    x: f64,
    tol: &Tolerances,
) -> Result<(f64, Vec<f64>)> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(domain(format!(
            "budget x = {x} must be positive and finite"
        )));
    }
    if elements.contains(&0) {
        return Err(domain("element 0 has no reciprocal"));
    }
    let inv: Vec<f64> = elements.iter().map(|&m| 1.0 / m as f64).collect();
    let budget = |c: f64| -> f64 {
        let terms: Vec<f64> = inv
            .iter()
            .map(|&r| r * logistic_tail(c * scale * r))
            .collect();
        pairwise_sum(&terms)
    };
    let probs =
        |c: f64| -> Vec<f64> { inv.iter().map(|&r| logistic_tail(c * scale * r)).collect() };

    let full = budget(0.0);
    if x >= full * (1.0 - 1e-12) {
        return Ok((0.0, vec![0.5; elements.len()]));
    }

    // budget(lo) >= x > budget(hi)
    let mut lo = 0.0f64;
    let mut hi = 1.0f64;
    let mut grow = 0;
    while budget(hi) >= x {
        lo = hi;
        hi *= 2.0;
        grow += 1;
        if grow > 2000 || !hi.is_finite() {
            return Err(Error::NonConvergence {
                what: "profile bracket",
                iterations: grow,
            });
        }
    }
    for _ in 0..tol.max_bisections {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if budget(mid) >= x {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let residual = (budget(lo) - x).abs();
    if residual > tol.profile_rel * x {
        return Err(Error::NonConvergence {
            what: "discrete profile bisection",
            iterations: tol.max_bisections,
        });
    }
    // `lo` keeps the budget at or above x, so the entropy is never understated.
    Ok((lo, probs(lo)))
}

/// The maximum-entropy product distribution on `[n]` with `Σ p_m/m ≤ x`.
pub fn discrete_profile(n: u64, x: f64) -> Result<EntropyProfile> {
    discrete_profile_with(n, x, &Tolerances::default())
}

pub fn discrete_profile_with(n: u64, x: f64, tol: &Tolerances) -> Result<EntropyProfile> {
    if n == 0 {
        return Err(domain("n must be at least 1"));
    }
    if !(x > 0.0) {
        return Err(domain(format!("x = {x} must be positive")));
    }
    let elements: Vec<u64> = (1..=n).collect();
    let (c, p) = fit_inclusion_probabilities(&elements, n as f64, x, tol)?;
    let entropy_bits = if c == 0.0 {
        n as f64
    } else {
        pairwise_sum(
            &p.iter()
                .map(|&v| h_bits(v, tol.entropy_floor))
                .collect::<Vec<_>>(),
        )
    };
    Ok(EntropyProfile {
        n,
        x,
        c,
        p,
        entropy_bits,
    })
}

/// `H(P(x))` rounded up so that `count(s(A) ≤ x) ≤ 2^H` is safe to assert.
pub fn entropy_upper_bound(n: u64, x: &crate::exactmath::Rational) -> Result<f64> {
    let tol = Tolerances::default();
    // nudge up past any rounding in the conversion; H is non-decreasing in x
    let xf = x.to_f64() * (1.0 + 4.0 * f64::EPSILON);
    let profile = discrete_profile_with(n, xf, &tol)?;
    if profile.saturated() {
        return Ok(n as f64);
    }
    let bound = profile.entropy_bits + tol.bound_slack_per_element * n as f64;
    Ok(bound.min(n as f64))
}

/// `∫₀¹ dy / (y(1 + e^{λ/y}))`, evaluated as `∫₀^V dv / (1 + e^{λ e^v})`
/// with `V` chosen so the discarded tail is below `tol.tail`.
pub fn moment_integral(lambda: f64, tol: &Tolerances) -> Result<f64> {
    if !(lambda > 0.0) {
        return Err(domain(format!("lambda = {lambda} must be positive")));
    }
    let upper = truncation_point(lambda, tol.tail).ln();
    let r = integrate(|v| logistic_tail(lambda * v.exp()), 0.0, upper, &tol.quad)?;
    Ok(r.value)
}

/// Smallest `U ≥ 1` (up to doubling) with `e^{-λU}/(λU) < tail`.
fn truncation_point(lambda: f64, tail: f64) -> f64 {
    let mut u = (1.0 / lambda).max(1.0);
    while (-lambda * u).exp() / (lambda * u) >= tail {
        u *= 2.0;
    }
    u
}

/// The unique `λ > 0` with `moment_integral(λ) = x`.
pub fn continuous_lambda(x: f64) -> Result<f64> {
    continuous_lambda_with(x, &Tolerances::default())
}

pub fn continuous_lambda_with(x: f64, tol: &Tolerances) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(domain(format!("x = {x} must be positive and finite")));
    }
    let (mut lo, mut hi) = tol.lambda_bracket;
    let g_lo = moment_integral(lo, tol)?;
    let g_hi = moment_integral(hi, tol)?;
    if !(g_lo >= x && x >= g_hi) {
        return Err(domain(format!(
            "x = {x} outside the bracketed range [{g_hi:e}, {g_lo}] of the moment integral"
        )));
    }
    // The integral is decreasing in λ; bisect on log λ since λ spans many decades.
    for _ in 0..tol.max_bisections {
        let mid = (lo * hi).sqrt();
        if mid <= lo || mid >= hi {
            break;
        }
        if moment_integral(mid, tol)? > x {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let lambda = (lo * hi).sqrt();
    let residual = (moment_integral(lambda, tol)? - x).abs();
    if residual > tol.lambda_residual {
        return Err(Error::NonConvergence {
            what: "continuous lambda bisection",
            iterations: tol.max_bisections,
        });
    }
    Ok(lambda)
}

/// `λ` and the growth constant `c_x` (bits per element).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContinuousConstants {
    pub x: f64,
    pub lambda: f64,
    pub c_x: f64,
}

/// `c_x = ∫₀¹ h(1/(1+e^{λ/y})) dy = ∫₀^∞ h(1/(1+e^{λ e^v})) e^{-v} dv`.
pub fn cx_constant(x: f64) -> Result<ContinuousConstants> {
    cx_constant_with(x, &Tolerances::default())
}

pub fn cx_constant_with(x: f64, tol: &Tolerances) -> Result<ContinuousConstants> {
    let lambda = continuous_lambda_with(x, tol)?;
    Ok(ContinuousConstants {
        x,
        lambda,
        c_x: growth_integral(lambda, tol)?,
    })
}

/// `∫₀¹ h(1/(1+e^{λ/y})) dy` for a given `λ`.
pub fn growth_integral(lambda: f64, tol: &Tolerances) -> Result<f64> {
    if !(lambda > 0.0) {
        return Err(domain(format!("lambda = {lambda} must be positive")));
    }
    // h ≤ 1, so the tail past V is below e^{-V}.
    let upper = truncation_point(lambda, tol.tail).ln().max(-tol.tail.ln());
    let r = integrate(
        |v| h_bits(logistic_tail(lambda * v.exp()), tol.entropy_floor) * (-v).exp(),
        0.0,
        upper,
        &tol.quad,
    )?;
    Ok(r.value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactmath::harmonic;

    #[test]
    fn binary_entropy_examples() {
        assert_eq!(binary_entropy(0.0).unwrap(), 0.0);
        assert_eq!(binary_entropy(1.0).unwrap(), 0.0);
        assert!((binary_entropy(0.5).unwrap() - 1.0).abs() < 1e-15);
        // -(1/4)log2(1/4) - (3/4)log2(3/4) = 1/2 + (3/4)(2 - log2 3)
        let direct = 0.5 + 0.75 * (2.0 - 3f64.log2());
        assert!((binary_entropy(0.25).unwrap() - direct).abs() < 1e-15);
        assert!((direct - 0.811278).abs() < 1e-6);
        assert!(binary_entropy(-0.1).is_err());
        assert!(binary_entropy(1.5).is_err());
        assert!(binary_entropy(f64::NAN).is_err());
        assert!(binary_entropy(1e-320).unwrap() >= 0.0);
    }

    #[test]
    fn saturated_profile_at_half_harmonic() {
        for n in [1u64, 5, 40, 300] {
            let x = harmonic(n).unwrap().to_f64() / 2.0;
            let prof = discrete_profile(n, x).unwrap();
            assert_eq!(prof.c, 0.0, "n = {n}");
            assert!(prof.p.iter().all(|&p| p == 0.5));
            assert_eq!(prof.entropy_bits, n as f64);
            let above = discrete_profile(n, x * 3.0).unwrap();
            assert!(above.saturated());
        }
    }

    #[test]
    fn profile_meets_budget_and_is_monotone() {
        let prof = discrete_profile(1000, 1.0).unwrap();
        assert!(prof.c > 0.0);
        assert!((prof.budget_used() - 1.0).abs() <= 1e-10);
        for w in prof.p.windows(2) {
            assert!(w[0] <= w[1]);
        }
        assert!(prof.p.iter().all(|&p| p > 0.0 && p <= 0.5));
        // c·e^{2x} stays order one; recorded, not asserted against an unstated constant
        let ratio = prof.c * (2.0f64).exp();
        assert!(ratio > 0.1 && ratio < 10.0, "{ratio}");
    }

    #[test]
    fn lagrange_condition_holds_at_optimum() {
        for (n, x) in [(200u64, 0.5), (5000, 1.0), (5000, 2.5)] {
            let prof = discrete_profile(n, x).unwrap();
            let grads: Vec<f64> = prof
                .p
                .iter()
                .enumerate()
                .map(|(i, &p)| ((1.0 - p) / p).log2() * (i + 1) as f64)
                .collect();
            let expected = prof.c * n as f64 / std::f64::consts::LN_2;
            for g in grads {
                assert!(
                    (g - expected).abs() <= 1e-6 * expected,
                    "n={n} x={x}: {g} vs {expected}"
                );
            }
        }
    }

    #[test]
    fn profile_rejects_bad_inputs() {
        assert!(discrete_profile(10, 0.0).is_err());
        assert!(discrete_profile(10, -1.0).is_err());
        assert!(discrete_profile(0, 1.0).is_err());
    }

    #[test]
    fn upper_bound_examples() {
        let one = crate::exactmath::Rational::one();
        let h3 = entropy_upper_bound(3, &one).unwrap();
        assert!(2f64.powf(h3) >= 5.0, "{h3}");
        let big: crate::exactmath::Rational = "50".parse().unwrap();
        assert_eq!(entropy_upper_bound(17, &big).unwrap(), 17.0);
    }

    #[test]
    fn small_budgets_force_large_c() {
        let prof = discrete_profile(100, 1e-6).unwrap();
        assert!(prof.c > 1.0);
        assert!((prof.budget_used() - 1e-6).abs() <= 1e-15);
    }

    #[test]
    fn lambda_monotone_and_positive() {
        let l_half = continuous_lambda(0.5).unwrap();
        let l_one = continuous_lambda(1.0).unwrap();
        let l_two = continuous_lambda(2.0).unwrap();
        assert!(l_half > l_one && l_one > l_two && l_two > 0.0);
        let l_eight = continuous_lambda(8.0).unwrap();
        assert!(l_eight > 0.0 && l_eight < 1e-5, "{l_eight}");
        // c = Θ(e^{-2x}): record the ratio, keep it loosely bounded
        let ratio = l_eight * (16f64).exp();
        assert!(ratio > 1e-2 && ratio < 1e2, "{ratio}");
    }

    #[test]
    fn lambda_rejects_out_of_range() {
        assert!(continuous_lambda(0.0).is_err());
        assert!(continuous_lambda(1e6).is_err());
    }

    #[test]
    fn c1_matches_reference() {
        let k = cx_constant(1.0).unwrap();
        assert!((k.c_x - 0.91117).abs() < 1e-4, "{}", k.c_x);
    }

    #[test]
    fn cx_near_zero_and_near_one() {
        // independent adaptive quadrature + root finding: λ = 3.1927852, c = 0.05804956
        let small = cx_constant(0.01).unwrap();
        assert!(
            (small.lambda - 3.192_785_2).abs() < 1e-6,
            "{}",
            small.lambda
        );
        assert!((small.c_x - 0.058_049_56).abs() < 1e-7, "{}", small.c_x);
        let eight = cx_constant(8.0).unwrap();
        let one = cx_constant(1.0).unwrap();
        assert!(eight.c_x < 1.0 && eight.c_x > one.c_x);
    }

    #[test]
    fn csv_has_one_row_per_element() {
        let prof = discrete_profile(5, 0.5).unwrap();
        let csv = prof.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "m,p_m");
        assert_eq!(lines.len(), 6);
        assert!(lines[3].starts_with("3,"));
    }
}
