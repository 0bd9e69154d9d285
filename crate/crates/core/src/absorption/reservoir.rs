//! Exact decomposition of a rational into distinct unit fractions with bounded
//! denominators.

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, Zero};

use crate::exactmath::{FactorSieve, Rational};

/// Outcome of a bounded search.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Decomposition {
    Found(Vec<u64>),
    /// The search space was exhausted.
    Impossible,
    /// The node budget ran out first.
    Exhausted {
        nodes: u64,
    },
}

struct Search<'a> {
    candidates: &'a [u64],
    /// `tail[i] = Σ_{j≥i} 1/candidates[j]`
    tail: Vec<f64>,
    primes: Vec<u64>,
    max: u64,
    nodes: u64,
    budget: u64,
    chosen: Vec<u64>,
}

/// Smoothness bounds tried before the full candidate set. Indices with a large
/// prime factor `p` need other multiples of `p` to cancel it, which is what
/// makes the unrestricted search slow.
const SMOOTH_STAGES: [u64; 2] = [11, 13];

/// Distinct `d ∈ candidates` with `Σ 1/d = target`.
///
/// Each stage is a largest-reciprocal-first branch and bound with full
/// backtracking, first over the 11-smooth candidates, then the 13-smooth ones,
/// then all of them. Each stage gets `node_budget` nodes. `Impossible` is only
/// reported when the unrestricted stage proves it.
pub fn decompose(target: &Rational, candidates: &[u64], node_budget: u64) -> Decomposition {
    if target.is_zero() {
        return Decomposition::Found(Vec::new());
    }
    if target.is_negative() {
        return Decomposition::Impossible;
    }
    let mut sorted: Vec<u64> = candidates.iter().copied().filter(|&d| d > 0).collect();
    sorted.sort_unstable();
    sorted.dedup();
    let max = sorted.last().copied().unwrap_or(0);
    let sieve = FactorSieve::new(max.max(2));
    let mut nodes = 0;
    let mut previous_len = None;
    for bound in SMOOTH_STAGES.iter().copied().chain([u64::MAX]) {
        let stage: Vec<u64> = sorted
            .iter()
            .copied()
            .filter(|&d| {
                bound == u64::MAX
                    || sieve
                        .factorize(d)
                        .is_ok_and(|f| f.iter().all(|&(p, _)| p <= bound))
            })
            .collect();
        if previous_len == Some(stage.len()) {
            continue;
        }
        previous_len = Some(stage.len());
        let complete = stage.len() == sorted.len();
        match decompose_stage(target, &stage, &sieve, node_budget) {
            (Some(true), _, found) => return Decomposition::Found(found),
            (Some(false), _, _) if complete => return Decomposition::Impossible,
            (_, used, _) => nodes += used,
        }
        if complete {
            break;
        }
    }
    Decomposition::Exhausted { nodes }
}

fn decompose_stage(
    target: &Rational,
    sorted: &[u64],
    sieve: &FactorSieve,
    node_budget: u64,
) -> (Option<bool>, u64, Vec<u64>) {
    let max = sorted.last().copied().unwrap_or(0);
    let mut tail = vec![0.0; sorted.len() + 1];
    for i in (0..sorted.len()).rev() {
        tail[i] = tail[i + 1] + 1.0 / sorted[i] as f64;
    }
    let mut s = Search {
        candidates: sorted,
        tail,
        primes: sieve.primes().take_while(|&p| p <= max).collect(),
        max,
        nodes: 0,
        budget: node_budget,
        chosen: Vec::new(),
    };
    let outcome = s.run(0, target.clone());
    (outcome, s.nodes, s.chosen)
}

impl Search<'_> {
    /// `None` when the budget runs out.
    fn run(&mut self, start: usize, rem: Rational) -> Option<bool> {
        if rem.is_zero() {
            return Some(true);
        }
        self.nodes += 1;
        if self.nodes > self.budget {
            return None;
        }
        let r = rem.to_f64();
        if self.tail[start] < r * (1.0 - 1e-12) || !self.denominator_reachable(&rem, start) {
            return Some(false);
        }
        // 1/d ≤ rem forces d ≥ ⌈1/rem⌉
        let min_d = ceil_recip(&rem);
        let first = start + self.candidates[start..].partition_point(|&d| BigUint::from(d) < min_d);
        for i in first..self.candidates.len() {
            if self.tail[i] < r * (1.0 - 1e-12) {
                break;
            }
            let d = self.candidates[i];
            let next = &rem - &Rational::unit(d).expect("d > 0");
            self.chosen.push(d);
            match self.run(i + 1, next) {
                Some(true) => return Some(true),
                Some(false) => {}
                None => return None,
            }
            self.chosen.pop();
        }
        Some(false)
    }

    /// Every prime power exactly dividing `den(rem)` needs a multiple among the
    /// remaining candidates.
    fn denominator_reachable(&self, rem: &Rational, start: usize) -> bool {
        let mut den = rem.denom_biguint();
        for &p in &self.primes {
            if den.is_one() {
                break;
            }
            let pb = BigUint::from(p);
            let mut pe = 1u64;
            while (&den % &pb).is_zero() {
                den /= &pb;
                pe = match pe.checked_mul(p) {
                    Some(v) if v <= self.max => v,
                    _ => return false,
                };
            }
            if pe > 1 && !self.candidates[start..].iter().any(|&d| d % pe == 0) {
                return false;
            }
        }
        den.is_one()
    }
}

fn ceil_recip(r: &Rational) -> BigUint {
    let num = r.numer().to_biguint().expect("positive");
    let den = r.denom_biguint();
    let (q, rem) = den.div_rem(&num);
    if rem.is_zero() {
        q
    } else {
        q + 1u32
    }
}
