//! Constructive witnesses for `Σ_{a∈A} 1/a = x` with `A ⊆ [n]`.
//!
//! The pipeline:
//!
//! 1. Set aside the reservoir `R` of multiples of `K = lcm(prime powers ≤ L)`,
//!    and for each prime power `q` a small pool `P(q)` of multiples of `q`.
//! 2. Sample a base set `A₀` from the remaining powersmooth numbers `U` with
//!    `s(A₀) ≤ (1−η)x`.
//! 3. Repeatedly take the largest prime power `q > L` exactly dividing the
//!    denominator of the remaining gap and subtract `s(q·B)` where `B` solves
//!    a modular inverse subset-sum problem that clears `q` from the denominator.
//! 4. The gap `x_f` now has denominator dividing `K`, so `K·x_f` is an integer;
//!    write it as `Σ_{d∈D} 1/d` with `d ≤ n/K` and add `K·D`.
//!
//! Every run produces an [`AbsorptionTrace`] that can be replayed exactly.

mod reservoir;

pub use reservoir::{decompose, Decomposition};

use std::collections::{BTreeMap, BTreeSet, HashSet};

use num_bigint::BigUint;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::entropy::{fit_inclusion_probabilities, Tolerances};
use crate::error::{domain, Error, Result};
use crate::exactmath::{reciprocal_sum, FactorSieve, Rational};
use crate::modular::{InverseSumTable, ModInstance};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AbsorptionParams {
    /// Reservoir prime-power cutoff.
    pub l: u64,
    pub eta: f64,
    pub max_attempts: usize,
    /// Largest subset size per modular call.
    pub s_max: usize,
    /// Alternative modular solutions tried when the minimal one overshoots.
    pub alternatives: usize,
    /// Resamples of `A₀` per attempt before giving up on it.
    pub base_retries: usize,
    /// Node budget for the reservoir search.
    pub reservoir_nodes: u64,
    pub seed: u64,
}

impl Default for AbsorptionParams {
    fn default() -> Self {
        AbsorptionParams {
            l: 4,
            eta: 0.25,
            max_attempts: 50,
            s_max: 12,
            alternatives: 10,
            base_retries: 1000,
            reservoir_nodes: 2_000_000,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct AbsorptionConfig {
    pub n: u64,
    pub x: Rational,
    pub l: u64,
    pub k: u64,
    pub eta: f64,
    pub seed: u64,
    /// `{K, 2K, …} ∩ [n]`
    pub reservoir: Vec<u64>,
    /// Prime power `q` ↦ reserved multiples `q·b` with `b ∈ [⌈√q⌉, 2⌈√q⌉]`.
    pub interval_sets: BTreeMap<u64, Vec<u64>>,
    /// Powersmoothness bound for `U`: the largest prime power `q` with
    /// `q·2⌈√q⌉ ≤ n`.
    pub smooth_bound: u64,
    /// Sampling universe, ascending.
    pub u: Vec<u64>,
    sieve: FactorSieve,
}

impl AbsorptionConfig {
    pub fn sieve(&self) -> &FactorSieve {
        &self.sieve
    }

    /// Reserved as a reservoir or pool element.
    pub fn is_reserved(&self, m: u64) -> bool {
        m.is_multiple_of(self.k) || self.interval_sets.values().any(|v| v.contains(&m))
    }
}

fn ceil_sqrt(q: u64) -> u64 {
    let mut r = (q as f64).sqrt() as u64;
    while r * r < q {
        r += 1;
    }
    while r > 0 && (r - 1) * (r - 1) >= q {
        r -= 1;
    }
    r
}

/// Prime powers `q` with `L < q ≤ hi`, descending.
fn prime_powers_desc(sieve: &FactorSieve, lo_exclusive: u64, hi: u64) -> Vec<u64> {
    let mut out = Vec::new();
    for p in sieve.primes() {
        if p > hi {
            break;
        }
        let mut pe = p;
        loop {
            if pe > lo_exclusive {
                out.push(pe);
            }
            match pe.checked_mul(p) {
                Some(v) if v <= hi => pe = v,
                _ => break,
            }
        }
    }
    out.sort_unstable_by(|a, b| b.cmp(a));
    out
}

/// Prime-power factorization of `v` over the sieve primes, with the cofactor
/// left after removing them.
fn prime_power_split(v: &BigUint, sieve: &FactorSieve) -> (Vec<(u64, u64)>, BigUint) {
    let mut rest = v.clone();
    let mut out = Vec::new();
    for p in sieve.primes() {
        if rest.is_one() {
            break;
        }
        let pb = BigUint::from(p);
        let mut pe = BigUint::one();
        loop {
            let (quo, r) = rest.div_rem(&pb);
            if !r.is_zero() {
                break;
            }
            rest = quo;
            pe *= p;
        }
        if !pe.is_one() {
            out.push((p, pe.to_u64().unwrap_or(u64::MAX)));
        }
    }
    (out, rest)
}

pub fn build_config(n: u64, x: &Rational, l: u64, eta: f64, seed: u64) -> Result<AbsorptionConfig> {
    if l < 2 {
        return Err(Error::Config(format!(
            "L = {l} gives K = 1 and reserves all of [n]"
        )));
    }
    if !(eta > 0.0 && eta < 1.0) {
        return Err(Error::Config(format!("eta = {eta} outside (0, 1)")));
    }
    if !x.is_positive() {
        return Err(domain(format!("x = {x} must be positive")));
    }
    let small = FactorSieve::new(l);
    let k = small
        .primes()
        .map(|p| {
            let mut pe = p;
            while pe * p <= l {
                pe *= p;
            }
            pe
        })
        .product::<u64>();
    if n < 4 * k {
        return Err(Error::Config(format!(
            "n = {n} is below the minimum {} = 4K for K = {k}",
            4 * k
        )));
    }
    let sieve = FactorSieve::new(n);
    let (parts, rest) = prime_power_split(&x.denom_biguint(), &sieve);
    if !rest.is_one() || parts.iter().any(|&(_, pe)| pe > n / 2) {
        return Err(domain(format!(
            "denominator of x = {x} has a prime-power factor above n/2 = {}",
            n / 2
        )));
    }

    let reservoir: Vec<u64> = (1..=n / k).map(|i| i * k).collect();
    let mut smooth_bound = l;
    for q in prime_powers_desc(&sieve, l, n) {
        if q * 2 * ceil_sqrt(q) <= n {
            smooth_bound = q;
            break;
        }
    }

    let mut assigned: HashSet<u64> = HashSet::new();
    let mut interval_sets = BTreeMap::new();
    let mpp = sieve.max_prime_power_table();
    for q in prime_powers_desc(&sieve, l, smooth_bound) {
        let s = ceil_sqrt(q);
        let mut pool = Vec::new();
        for b in s..=2 * s {
            let m = q * b;
            if m <= n && b.gcd(&q) == 1 && m % k != 0 && mpp[b as usize] < q && assigned.insert(m) {
                pool.push(m);
            }
        }
        interval_sets.insert(q, pool);
    }
    let u: Vec<u64> = (1..=n)
        .filter(|&m| m % k != 0 && !assigned.contains(&m) && mpp[m as usize] <= smooth_bound)
        .collect();
    if u.is_empty() {
        return Err(Error::Config("sampling universe U is empty".into()));
    }
    Ok(AbsorptionConfig {
        n,
        x: x.clone(),
        l,
        k,
        eta,
        seed,
        reservoir,
        interval_sets,
        smooth_bound,
        u,
        sieve,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AbsorptionStep {
    pub q: u64,
    /// Multipliers; the added elements are `q·b`.
    #[serde(rename = "B")]
    pub b: Vec<u64>,
    pub x_after: Rational,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AbsorptionTrace {
    pub n: u64,
    pub x: Rational,
    pub base_set: Vec<u64>,
    pub steps: Vec<AbsorptionStep>,
    pub x_f: Option<Rational>,
    #[serde(rename = "D")]
    pub d: Vec<u64>,
    #[serde(rename = "A")]
    pub a: Vec<u64>,
    pub verified: bool,
}

impl AbsorptionTrace {
    fn start(n: u64, x: &Rational, base_set: Vec<u64>) -> Self {
        AbsorptionTrace {
            n,
            x: x.clone(),
            base_set,
            steps: Vec::new(),
            x_f: None,
            d: Vec::new(),
            a: Vec::new(),
            verified: false,
        }
    }

    /// Gap left after the base set.
    pub fn x0(&self) -> Result<Rational> {
        Ok(&self.x - &reciprocal_sum(&self.base_set)?)
    }

    /// Recompute every stored quantity from `x`, `A₀`, the `B_i` and `D`,
    /// given the reservoir modulus `k`. Returns the first mismatch.
    pub fn replay(&self, k: u64) -> core::result::Result<(), String> {
        let mut x = self.x0().map_err(|e| e.to_string())?;
        for (i, step) in self.steps.iter().enumerate() {
            let elems: Vec<u64> = step.b.iter().map(|b| b * step.q).collect();
            let mass = reciprocal_sum(&elems).map_err(|e| e.to_string())?;
            if mass >= x {
                return Err(format!("step {i}: s(qB) = {mass} ≥ x_i = {x}"));
            }
            x = &x - &mass;
            if x != step.x_after {
                return Err(format!("step {i}: replayed {x} ≠ stored {}", step.x_after));
            }
            if x.denom_biguint() % step.q == BigUint::zero() {
                return Err(format!(
                    "step {i}: {} still divides the denominator",
                    step.q
                ));
            }
        }
        if !self.verified {
            return Ok(());
        }
        let x_f = self.x_f.as_ref().ok_or("missing x_f")?;
        if &x != x_f {
            return Err(format!("x_f = {x_f} but steps end at {x}"));
        }
        if !k.is_multiple_of(x_f.denom_biguint().to_u64().unwrap_or(0).max(1))
            || x_f.denom_biguint() > BigUint::from(k)
        {
            return Err(format!(
                "denominator of x_f = {x_f} does not divide K = {k}"
            ));
        }
        let kx = x_f * &Rational::from(k);
        if reciprocal_sum(&self.d).map_err(|e| e.to_string())? != kx {
            return Err(format!("s(D) ≠ K·x_f = {kx}"));
        }
        let mut parts: Vec<u64> = self.base_set.clone();
        for step in &self.steps {
            parts.extend(step.b.iter().map(|b| b * step.q));
        }
        parts.extend(self.d.iter().map(|d| d * k));
        let total = parts.len();
        parts.sort_unstable();
        parts.dedup();
        if parts.len() != total {
            return Err("parts are not pairwise disjoint".into());
        }
        if parts != self.a {
            return Err("A is not the union of its parts".into());
        }
        if !verify_representation(&self.a, self.n, &self.x) {
            return Err("A does not represent x".into());
        }
        Ok(())
    }
}

/// `true` iff `a ⊆ [n]`, its elements are distinct, and `Σ 1/a = x`.
pub fn verify_representation(a: &[u64], n: u64, x: &Rational) -> bool {
    let distinct: BTreeSet<u64> = a.iter().copied().collect();
    distinct.len() == a.len()
        && a.iter().all(|&m| (1..=n).contains(&m))
        && reciprocal_sum(a).is_ok_and(|s| &s == x)
}

fn attempt_rng(seed: u64, attempt: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(attempt);
    rng
}

fn unit_interval(word: u64) -> f64 {
    (word >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Draw `A₀ ⊆ U` with the maximum-entropy inclusion probabilities for budget
/// `(1−η)x` on `U`, resampling on overshoot.
pub fn sample_base_set(config: &AbsorptionConfig) -> Result<(Vec<u64>, Rational)> {
    sample_base_set_attempt(config, 0, AbsorptionParams::default().base_retries)
}

fn sample_base_set_attempt(
    config: &AbsorptionConfig,
    attempt: u64,
    retries: usize,
) -> Result<(Vec<u64>, Rational)> {
    let eta = Rational::from(BigRational::from_float(config.eta).unwrap_or_else(BigRational::zero));
    let cap = &config.x * &(&Rational::one() - &eta);
    let budget = cap.to_f64();
    let universe_mass: f64 = config.u.iter().map(|&m| 1.0 / m as f64).sum();
    let probs = if budget >= universe_mass {
        // the whole universe fits
        vec![1.0; config.u.len()]
    } else {
        fit_inclusion_probabilities(&config.u, config.n as f64, budget, &Tolerances::default())?.1
    };
    let mut rng = attempt_rng(config.seed, attempt);
    for _ in 0..retries.max(1) {
        let a0: Vec<u64> = config
            .u
            .iter()
            .zip(&probs)
            .filter_map(|(&m, &p)| (unit_interval(rng.next_u64()) < p).then_some(m))
            .collect();
        let s = reciprocal_sum(&a0)?;
        if s <= cap {
            let x0 = &config.x - &s;
            return Ok((a0, x0));
        }
    }
    Err(Error::Sampling(format!(
        "no base set with s(A₀) ≤ {cap} in {retries} draws"
    )))
}

/// Failure inside one pipeline run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StepFailure {
    pub reason: String,
}

/// Clear every prime power above `L` from the denominator of `x0`, largest
/// first. Elements in `used` are unavailable and newly chosen ones are added.
/// Returns the steps and `x_f`.
pub fn cancel_prime_powers(
    config: &AbsorptionConfig,
    used: &mut HashSet<u64>,
    x0: &Rational,
    s_max: usize,
    alternatives: usize,
) -> core::result::Result<(Vec<AbsorptionStep>, Rational), (Vec<AbsorptionStep>, StepFailure)> {
    let mpp = config.sieve.max_prime_power_table();
    let mut steps = Vec::new();
    let mut x = x0.clone();
    let bound = prime_powers_desc(&config.sieve, config.l, config.n).len();
    for _ in 0..=bound {
        if x.is_zero() {
            return Ok((steps, x));
        }
        let den = x.denom_biguint();
        let (parts, rest) = prime_power_split(&den, &config.sieve);
        if !rest.is_one() {
            return Err((
                steps,
                StepFailure {
                    reason: format!("denominator of {x} has a prime above n"),
                },
            ));
        }
        let Some(&(_, q)) = parts
            .iter()
            .filter(|&&(_, pe)| pe > config.l)
            .max_by_key(|&&(_, pe)| pe)
        else {
            return Ok((steps, x));
        };
        // x = u / (q·w) with gcd(w, q) = 1; need Σ b⁻¹ ≡ u·w⁻¹ (mod q)
        let u_mod = x.numer().to_biguint().expect("positive") % q;
        let w_mod = (&den / q) % q;
        let w_inv =
            crate::modular::mod_inverse(w_mod.to_u64().expect("< q") as i64, q).map_err(|e| {
                (
                    steps.clone(),
                    StepFailure {
                        reason: e.to_string(),
                    },
                )
            })?;
        let target = (u_mod.to_u64().expect("< q") as u128 * w_inv as u128 % q as u128) as u64;

        let pool: Vec<u64> = (1..=config.n / q)
            .rev()
            .filter(|&b| {
                let m = q * b;
                b.gcd(&q) == 1 && m % config.k != 0 && !used.contains(&m) && mpp[b as usize] < q
            })
            .collect();
        let pool_size = pool.len();
        let instance = ModInstance::new(q, pool, s_max).map_err(|e| {
            (
                steps.clone(),
                StepFailure {
                    reason: e.to_string(),
                },
            )
        })?;
        let mut table = InverseSumTable::new(&instance);
        let candidates = table.solutions(target, alternatives + 1);
        if candidates.is_empty() {
            return Err((
                steps,
                StepFailure {
                    reason: format!(
                        "no subset of size ≤ {s_max} clears q = {q} (pool size {pool_size})"
                    ),
                },
            ));
        }
        let mut chosen = None;
        for b in candidates {
            let elems: Vec<u64> = b.iter().map(|v| v * q).collect();
            let mass = reciprocal_sum(&elems).expect("positive elements");
            if mass < x {
                chosen = Some((b, elems, mass));
                break;
            }
        }
        let Some((mut b, elems, mass)) = chosen else {
            return Err((
                steps,
                StepFailure {
                    reason: format!("every candidate at q = {q} overshoots x = {x}"),
                },
            ));
        };
        x = &x - &mass;
        used.extend(elems);
        b.sort_unstable();
        steps.push(AbsorptionStep {
            q,
            b,
            x_after: x.clone(),
        });
    }
    Err((
        steps,
        StepFailure {
            reason: "prime-power loop did not terminate".into(),
        },
    ))
}

/// `D ⊆ [n/K]` with `Σ 1/d = K·x_f`, avoiding indices whose multiple `K·d` is
/// in `used`.
pub fn reservoir_decompose(
    config: &AbsorptionConfig,
    x_f: &Rational,
    used: &HashSet<u64>,
    node_budget: u64,
) -> core::result::Result<Vec<u64>, StepFailure> {
    let target = x_f * &Rational::from(config.k);
    if !target.is_integer() || target.is_negative() {
        return Err(StepFailure {
            reason: format!("K·x_f = {target} is not a non-negative integer"),
        });
    }
    let indices: Vec<u64> = (1..=config.n / config.k)
        .filter(|d| !used.contains(&(d * config.k)))
        .collect();
    match decompose(&target, &indices, node_budget) {
        Decomposition::Found(d) => Ok(d),
        Decomposition::Impossible => Err(StepFailure {
            reason: format!("remainder {target} has no decomposition over [n/K]"),
        }),
        Decomposition::Exhausted { nodes } => Err(StepFailure {
            reason: format!("reservoir search for remainder {target} stopped after {nodes} nodes"),
        }),
    }
}

/// One full pipeline run for a given attempt index.
fn run_attempt(
    config: &AbsorptionConfig,
    params: &AbsorptionParams,
    attempt: u64,
) -> core::result::Result<AbsorptionTrace, (String, Option<AbsorptionTrace>)> {
    let (a0, x0) = sample_base_set_attempt(config, attempt, params.base_retries)
        .map_err(|e| (e.to_string(), None))?;
    let mut trace = AbsorptionTrace::start(config.n, &config.x, a0.clone());
    let mut used: HashSet<u64> = a0.iter().copied().collect();
    let (steps, x_f) =
        match cancel_prime_powers(config, &mut used, &x0, params.s_max, params.alternatives) {
            Ok(v) => v,
            Err((steps, fail)) => {
                trace.steps = steps;
                return Err((fail.reason, Some(trace)));
            }
        };
    trace.steps = steps;
    trace.x_f = Some(x_f.clone());
    let d = match reservoir_decompose(config, &x_f, &used, params.reservoir_nodes) {
        Ok(d) => d,
        Err(fail) => return Err((fail.reason, Some(trace))),
    };
    trace.d = d;
    let mut a: Vec<u64> = used.into_iter().collect();
    a.extend(trace.d.iter().map(|d| d * config.k));
    a.sort_unstable();
    trace.a = a;
    trace.verified = verify_representation(&trace.a, config.n, &config.x);
    if !trace.verified {
        return Err((
            "assembled set failed exact verification".into(),
            Some(trace),
        ));
    }
    Ok(trace)
}

/// Build a witness `A ⊆ [n]` with `Σ 1/a = x`, resampling `A₀` up to
/// `max_attempts` times.
pub fn construct_representation(
    n: u64,
    x: &Rational,
    params: &AbsorptionParams,
) -> Result<AbsorptionTrace> {
    let config = build_config(n, x, params.l, params.eta, params.seed)?;
    construct_with(&config, params)
}

/// As [`construct_representation`] with a prebuilt configuration; the seed
/// comes from `config` and `params.seed` is ignored.
pub fn construct_with(
    config: &AbsorptionConfig,
    params: &AbsorptionParams,
) -> Result<AbsorptionTrace> {
    let mut last = None;
    let mut reason = String::from("no attempts made");
    for attempt in 0..params.max_attempts {
        match run_attempt(config, params, attempt as u64) {
            Ok(trace) => return Ok(trace),
            Err((why, trace)) => {
                reason = why;
                last = trace;
            }
        }
    }
    Err(Error::Construction {
        attempts: params.max_attempts,
        reason,
        last_trace: last.map(Box::new),
    })
}
