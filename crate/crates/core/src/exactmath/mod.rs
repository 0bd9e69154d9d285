//! Exact arithmetic, sieves and number-theoretic predicates.
//!
//! Everything here is pure. A [`FactorSieve`] is immutable once built and can be
//! shared across threads.

mod rational;

pub use rational::Rational;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{domain, Result};

/// Smallest-prime-factor table for `0..=limit`.
#[derive(Debug, Clone)]
pub struct FactorSieve {
    limit: u64,
    spf: Vec<u32>,
}

impl FactorSieve {
    /// Linear sieve. Limits up to `u32::MAX` are supported.
    pub fn new(limit: u64) -> Self {
        assert!(limit < u32::MAX as u64, "sieve limit {limit} too large");
        let len = limit as usize + 1;
        let mut spf = vec![0u32; len];
        let mut primes: Vec<u32> = Vec::new();
        for i in 2..len {
            if spf[i] == 0 {
                spf[i] = i as u32;
                primes.push(i as u32);
            }
            let si = spf[i];
            for &p in &primes {
                let j = i * p as usize;
                if p > si || j >= len {
                    break;
                }
                spf[j] = p;
            }
        }
        if len > 1 {
            spf[1] = 1;
        }
        FactorSieve { limit, spf }
    }

    pub fn limit(&self) -> u64 {
        self.limit
    }

    fn check(&self, m: u64) -> Result<()> {
        if m == 0 || m > self.limit {
            return Err(domain(format!(
                "{m} outside sieve range [1, {}]",
                self.limit
            )));
        }
        Ok(())
    }

    /// Smallest prime factor of `m` (1 for `m == 1`).
    pub fn spf(&self, m: u64) -> Result<u64> {
        self.check(m)?;
        Ok(self.spf[m as usize] as u64)
    }

    pub fn is_prime(&self, m: u64) -> bool {
        m >= 2 && m <= self.limit && self.spf[m as usize] as u64 == m
    }

    /// `(p, e)` pairs in increasing `p`.
    pub fn factorize(&self, m: u64) -> Result<Vec<(u64, u32)>> {
        self.check(m)?;
        let mut out = Vec::new();
        let mut rest = m as usize;
        while rest > 1 {
            let p = self.spf[rest] as usize;
            let mut e = 0;
            while rest.is_multiple_of(p) {
                rest /= p;
                e += 1;
            }
            out.push((p as u64, e));
        }
        Ok(out)
    }

    /// Prime-power factors `p^{v_p(m)}` in increasing `p`.
    pub fn prime_power_factors(&self, m: u64) -> Result<Vec<u64>> {
        Ok(self
            .factorize(m)?
            .into_iter()
            .map(|(p, e)| p.pow(e))
            .collect())
    }

    /// Largest prime-power factor of `m`; 1 for `m == 1`.
    pub fn max_prime_power_factor(&self, m: u64) -> Result<u64> {
        Ok(self.prime_power_factors(m)?.into_iter().max().unwrap_or(1))
    }

    /// True iff every prime-power factor of `m` is at most `t`.
    pub fn is_powersmooth(&self, m: u64, t: u64) -> Result<bool> {
        Ok(self.max_prime_power_factor(m)? <= t)
    }

    /// Primes up to the sieve limit, ascending.
    pub fn primes(&self) -> impl Iterator<Item = u64> + '_ {
        (2..=self.limit).filter(move |&m| self.spf[m as usize] as u64 == m)
    }

    /// Largest prime-power factor for every `m` in `1..=limit`, index 0 unused.
    pub fn max_prime_power_table(&self) -> Vec<u64> {
        let len = self.limit as usize + 1;
        let mut table = vec![0u64; len];
        if len > 1 {
            table[1] = 1;
        }
        for m in 2..len {
            let p = self.spf[m] as usize;
            let mut rest = m;
            let mut pe = 1usize;
            while rest % p == 0 {
                rest /= p;
                pe *= p;
            }
            table[m] = (pe as u64).max(table[rest]);
        }
        table
    }
}

/// `s(A) = Σ_{a∈A} 1/a`, exact and in lowest terms.
///
/// Sums over a common denominator (the lcm of `A`) so large sets cost one
/// bigint division per element plus a single final reduction.
pub fn reciprocal_sum(set: &[u64]) -> Result<Rational> {
    if set.contains(&0) {
        return Err(domain("reciprocal of 0"));
    }
    if set.is_empty() {
        return Ok(Rational::zero());
    }
    let mut lcm = BigUint::one();
    for &a in set {
        let r = (&lcm % a).to_u64().expect("remainder fits");
        lcm *= a / a.gcd(&r);
    }
    let mut num = BigUint::zero();
    for &a in set {
        num += &lcm / a;
    }
    Rational::new(BigInt::from(num), BigInt::from(lcm))
}

/// `H_n = Σ_{m=1}^{n} 1/m`.
pub fn harmonic(n: u64) -> Result<Rational> {
    if n == 0 {
        return Err(domain("harmonic number of 0"));
    }
    let all: Vec<u64> = (1..=n).collect();
    reciprocal_sum(&all)
}

/// `lcm(1, 2, …, n)`, computed as the product of the largest prime powers `≤ n`.
pub fn lcm_range(n: u64) -> Result<BigUint> {
    if n == 0 {
        return Err(domain("lcm_range of 0"));
    }
    let sieve = FactorSieve::new(n);
    let mut out = BigUint::one();
    for p in sieve.primes() {
        let mut pe = p;
        while pe <= n / p {
            pe *= p;
        }
        out *= pe;
    }
    Ok(out)
}

/// `lcm(1..=n)` as a `u128`, or `None` on overflow (happens for `n ≥ 89`).
pub fn lcm_range_u128(n: u64) -> Option<u128> {
    lcm_range(n).ok()?.to_u128()
}

/// Number of `m ≤ n` whose prime-power factors are all at most `t`.
pub fn powersmooth_count(n: u64, t: u64) -> u64 {
    if n == 0 {
        return 0;
    }
    let sieve = FactorSieve::new(n);
    sieve.max_prime_power_table()[1..]
        .iter()
        .filter(|&&mpp| mpp <= t)
        .count() as u64
}

/// All prime powers `p^a` (a ≥ 1) in `[lo, hi]` as `(p, p^a)`, descending by `p^a`.
pub fn prime_powers_in(lo: u64, hi: u64) -> Result<Vec<(u64, u64)>> {
    if lo > hi {
        return Err(domain(format!("empty range [{lo}, {hi}]")));
    }
    if hi < 2 {
        return Ok(Vec::new());
    }
    let sieve = FactorSieve::new(hi);
    Ok(prime_powers_with(&sieve, lo, hi))
}

/// As [`prime_powers_in`] with a caller-supplied sieve covering `hi`.
pub fn prime_powers_with(sieve: &FactorSieve, lo: u64, hi: u64) -> Vec<(u64, u64)> {
    let hi = hi.min(sieve.limit());
    let mut out = Vec::new();
    for p in sieve.primes().take_while(|&p| p <= hi) {
        let mut pe = p;
        loop {
            if pe >= lo {
                out.push((p, pe));
            }
            match pe.checked_mul(p) {
                Some(next) if next <= hi => pe = next,
                _ => break,
            }
        }
    }
    out.sort_unstable_by(|a, b| b.1.cmp(&a.1));
    out
}

/// Density of `n^u`-smooth integers for `u ∈ (1/2, 1]`: `1 + ln u`.
pub fn smooth_density_linear(u: f64) -> Result<f64> {
    if !(u > 0.5 && u <= 1.0) {
        return Err(domain(format!("u = {u} outside (1/2, 1]")));
    }
    Ok(1.0 + u.ln())
}

/// The largest power of `p` dividing `v`, as `(exponent, p^exponent)`.
pub fn prime_power_part(v: &BigUint, p: u64) -> (u32, BigUint) {
    let mut rest = v.clone();
    let mut e = 0;
    let mut pe = BigUint::one();
    if v.is_zero() {
        return (0, pe);
    }
    loop {
        let (q, r) = rest.div_rem(&BigUint::from(p));
        if !r.is_zero() {
            break;
        }
        rest = q;
        e += 1;
        pe *= p;
    }
    (e, pe)
}
