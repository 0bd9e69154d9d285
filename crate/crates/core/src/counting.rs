//! Exact counts of subsets `A ⊆ [n]` with `s(A) = x` or `s(A) ≤ x`.
//!
//! Two counters are provided. [`count_brute`] walks all `2^n` subsets with exact
//! rational sums and serves as the oracle. [`count_mitm`] scales every
//! reciprocal by `L = lcm(1..n)` so sums become `u128` integers, enumerates the
//! two halves of `[n]` separately and joins them by binary search.

use std::collections::HashSet;
use std::time::{Duration, Instant};

use num_bigint::{BigInt, BigUint};
use num_traits::{ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::exactmath::{lcm_range_u128, reciprocal_sum, Rational};

/// Largest `n` accepted by [`count_brute`].
pub const BRUTE_FORCE_CAP: u64 = 25;
/// Largest `n` accepted by [`count_mitm`].
pub const MITM_CAP: u64 = 48;
/// Largest `n` accepted by [`enumerate_representations`].
pub const ENUMERATION_CAP: u64 = 40;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// `s(A) = x`
    Exact,
    /// `s(A) ≤ x`
    AtMost,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    BruteForce,
    MeetInMiddle,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountQuery {
    pub n: u64,
    pub x: Rational,
    pub mode: Mode,
}

impl CountQuery {
    pub fn new(n: u64, x: Rational, mode: Mode) -> Result<Self> {
        if n == 0 {
            return Err(domain("n must be at least 1"));
        }
        if !x.is_positive() {
            return Err(domain(format!("x = {x} must be positive")));
        }
        Ok(CountQuery { n, x, mode })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CountResult {
    pub query: CountQuery,
    pub count: BigUint,
    pub method: Method,
    pub elapsed: Duration,
}

/// Exhaustive count over all `2^n` subsets. Refuses `n > BRUTE_FORCE_CAP`.
pub fn count_brute(query: &CountQuery) -> Result<CountResult> {
    count_brute_capped(query, BRUTE_FORCE_CAP)
}

pub fn count_brute_capped(query: &CountQuery, cap: u64) -> Result<CountResult> {
    if query.n > cap {
        return Err(Error::AboveCap {
            what: "n (brute force)",
            value: query.n,
            cap,
        });
    }
    let start = Instant::now();
    let units: Vec<Rational> = (1..=query.n)
        .map(|m| Rational::unit(m).expect("m >= 1"))
        .collect();
    let count = brute_walk(&units, 0, Rational::zero(), &query.x, query.mode);
    Ok(CountResult {
        query: query.clone(),
        count: BigUint::from(count),
        method: Method::BruteForce,
        elapsed: start.elapsed(),
    })
}

fn brute_walk(units: &[Rational], depth: usize, sum: Rational, x: &Rational, mode: Mode) -> u64 {
    if depth == units.len() {
        let hit = match mode {
            Mode::Exact => &sum == x,
            Mode::AtMost => &sum <= x,
        };
        return hit as u64;
    }
    let with = &sum + &units[depth];
    brute_walk(units, depth + 1, sum, x, mode) + brute_walk(units, depth + 1, with, x, mode)
}

/// Meet-in-the-middle count. Refuses `n > MITM_CAP`.
pub fn count_mitm(query: &CountQuery) -> Result<CountResult> {
    count_mitm_capped(query, MITM_CAP)
}

pub fn count_mitm_capped(query: &CountQuery, cap: u64) -> Result<CountResult> {
    if query.n > cap {
        return Err(Error::AboveCap {
            what: "n (meet in the middle)",
            value: query.n,
            cap,
        });
    }
    let start = Instant::now();
    let n = query.n;
    let scale = lcm_range_u128(n)
        .ok_or_else(|| Error::Overflow(format!("lcm(1..{n}) does not fit in 128 bits")))?;
    let weights = scaled_weights(n, scale);
    let total = weights
        .iter()
        .try_fold(0u128, |acc, &w| acc.checked_add(w))
        .ok_or_else(|| Error::Overflow(format!("L·H_{n} does not fit in 128 bits")))?;

    let target = match scaled_target(&query.x, scale, query.mode, total) {
        Some(t) => t,
        None => {
            return Ok(CountResult {
                query: query.clone(),
                count: BigUint::zero(),
                method: Method::MeetInMiddle,
                elapsed: start.elapsed(),
            })
        }
    };

    let split = n.div_ceil(2) as usize;
    let (left, right) = rayon::join(
        || aggregated_sums(&weights[..split]),
        || aggregated_sums(&weights[split..]),
    );
    let count: u128 = match query.mode {
        Mode::Exact => left
            .par_iter()
            .filter(|(s, _)| *s <= target)
            .map(|&(s, c)| {
                let want = target - s;
                match right.binary_search_by(|probe| probe.0.cmp(&want)) {
                    Ok(i) => c as u128 * right[i].1 as u128,
                    Err(_) => 0,
                }
            })
            .sum(),
        Mode::AtMost => {
            let mut prefix = Vec::with_capacity(right.len());
            let mut acc = 0u128;
            for &(_, c) in &right {
                acc += c as u128;
                prefix.push(acc);
            }
            left.par_iter()
                .filter(|(s, _)| *s <= target)
                .map(|&(s, c)| {
                    let room = target - s;
                    let k = right.partition_point(|probe| probe.0 <= room);
                    if k == 0 {
                        0
                    } else {
                        c as u128 * prefix[k - 1]
                    }
                })
                .sum()
        }
    };
    Ok(CountResult {
        query: query.clone(),
        count: BigUint::from(count),
        method: Method::MeetInMiddle,
        elapsed: start.elapsed(),
    })
}

fn scaled_weights(n: u64, scale: u128) -> Vec<u128> {
    (1..=n).map(|m| scale / m as u128).collect()
}

/// `x·L` as an integer target, clamped to `total`. `None` means no subset can match.
fn scaled_target(x: &Rational, scale: u128, mode: Mode, total: u128) -> Option<u128> {
    let scaled = x * &Rational::from_integer(BigInt::from(scale));
    match mode {
        Mode::Exact => {
            if !scaled.is_integer() || scaled.is_negative() {
                return None;
            }
            let t = scaled.floor().to_u128()?;
            (t <= total).then_some(t)
        }
        Mode::AtMost => {
            if scaled.is_negative() {
                return None;
            }
            Some(scaled.floor().to_u128().unwrap_or(u128::MAX).min(total))
        }
    }
}

/// All subset sums of `weights`, sorted, with multiplicities.
fn aggregated_sums(weights: &[u128]) -> Vec<(u128, u64)> {
    let mut sums = Vec::with_capacity(1usize << weights.len());
    sums.push(0u128);
    for &w in weights {
        let len = sums.len();
        for i in 0..len {
            sums.push(sums[i] + w);
        }
    }
    sums.par_sort_unstable();
    let mut out: Vec<(u128, u64)> = Vec::new();
    for s in sums {
        match out.last_mut() {
            Some((last, c)) if *last == s => *c += 1,
            _ => out.push((s, 1)),
        }
    }
    out
}

/// Up to `limit` subsets of `[n]` with reciprocal sum exactly `x`, in lexicographic
/// order of their ascending element lists. Each one is re-verified with exact
/// rational arithmetic before it is returned.
pub fn enumerate_representations(n: u64, x: &Rational, limit: usize) -> Result<Vec<Vec<u64>>> {
    if n == 0 || n > ENUMERATION_CAP {
        return Err(Error::AboveCap {
            what: "n (enumeration)",
            value: n,
            cap: ENUMERATION_CAP,
        });
    }
    let mut out = Vec::new();
    if limit == 0 || !x.is_positive() {
        return Ok(out);
    }
    let scale = lcm_range_u128(n).expect("lcm(1..40) fits in u128");
    let weights = scaled_weights(n, scale);
    let total: u128 = weights.iter().sum();
    let Some(target) = scaled_target(x, scale, Mode::Exact, total) else {
        return Ok(out);
    };

    // suffix[i] = Σ weights[i..]
    let mut suffix = vec![0u128; weights.len() + 1];
    for i in (0..weights.len()).rev() {
        suffix[i] = suffix[i + 1] + weights[i];
    }
    // Exact reachability for short tails: reach[i] holds every subset sum of weights[i..].
    let tail = weights.len().min(20);
    let first_tail = weights.len() - tail;
    let mut reach: Vec<HashSet<u128>> = vec![HashSet::new(); weights.len() + 1];
    reach[weights.len()].insert(0);
    for i in (first_tail..weights.len()).rev() {
        let next: Vec<u128> = reach[i + 1].iter().copied().collect();
        let mut here: HashSet<u128> = next.iter().copied().collect();
        here.extend(next.iter().map(|s| s + weights[i]));
        reach[i] = here;
    }

    let mut walk = Enumerator {
        weights: &weights,
        suffix: &suffix,
        reach: &reach,
        first_tail,
        limit,
        chosen: Vec::new(),
        out: &mut out,
    };
    walk.descend(0, target);

    for set in &out {
        if reciprocal_sum(set)? != *x {
            return Err(domain(format!(
                "enumeration produced a non-representation {set:?}"
            )));
        }
    }
    Ok(out)
}

struct Enumerator<'a> {
    weights: &'a [u128],
    suffix: &'a [u128],
    reach: &'a [HashSet<u128>],
    first_tail: usize,
    limit: usize,
    chosen: Vec<u64>,
    out: &'a mut Vec<Vec<u64>>,
}

impl Enumerator<'_> {
    fn feasible(&self, from: usize, remainder: u128) -> bool {
        if remainder > self.suffix[from] {
            return false;
        }
        if from >= self.first_tail {
            return self.reach[from].contains(&remainder);
        }
        true
    }

    fn descend(&mut self, from: usize, remainder: u128) {
        if self.out.len() >= self.limit {
            return;
        }
        if remainder == 0 {
            self.out.push(self.chosen.clone());
            return;
        }
        for i in from..self.weights.len() {
            if self.out.len() >= self.limit || self.suffix[i] < remainder {
                return;
            }
            let w = self.weights[i];
            if w > remainder || !self.feasible(i + 1, remainder - w) {
                continue;
            }
            self.chosen.push(i as u64 + 1);
            self.descend(i + 1, remainder - w);
            self.chosen.pop();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: u64, x: &str, mode: Mode) -> CountQuery {
        CountQuery::new(n, x.parse().unwrap(), mode).unwrap()
    }

    fn count_u64(r: CountResult) -> u64 {
        r.count.to_u64().unwrap()
    }

    #[test]
    fn brute_examples() {
        assert_eq!(count_u64(count_brute(&q(4, "1", Mode::Exact)).unwrap()), 1);
        assert_eq!(count_u64(count_brute(&q(3, "1", Mode::AtMost)).unwrap()), 5);
        assert_eq!(count_u64(count_brute(&q(5, "3", Mode::Exact)).unwrap()), 0);
    }

    #[test]
    fn brute_refuses_above_cap() {
        let err = count_brute(&q(26, "1", Mode::Exact)).unwrap_err();
        assert!(err.to_string().contains("25"), "{err}");
        assert!(count_brute_capped(&q(8, "1", Mode::Exact), 7).is_err());
    }

    #[test]
    fn mitm_examples() {
        assert_eq!(count_u64(count_mitm(&q(6, "1", Mode::Exact)).unwrap()), 2);
        assert_eq!(
            count_u64(count_mitm(&q(1, "1/2", Mode::AtMost)).unwrap()),
            1
        );
        let a = count_mitm(&q(20, "1", Mode::Exact)).unwrap();
        let b = count_brute(&q(20, "1", Mode::Exact)).unwrap();
        assert_eq!(a.count, b.count);
        assert_eq!(a.method, Method::MeetInMiddle);
        assert_eq!(b.method, Method::BruteForce);
    }

    #[test]
    fn mitm_handles_unreachable_and_saturated_targets() {
        // 1/7 cannot appear in any sum over [6]
        assert_eq!(count_u64(count_mitm(&q(6, "1/7", Mode::Exact)).unwrap()), 0);
        // x beyond H_n: every subset qualifies
        assert_eq!(
            count_u64(count_mitm(&q(10, "100", Mode::AtMost)).unwrap()),
            1024
        );
        assert_eq!(
            count_u64(count_mitm(&q(10, "100", Mode::Exact)).unwrap()),
            0
        );
        assert!(count_mitm(&q(49, "1", Mode::Exact)).is_err());
    }

    #[test]
    fn query_rejects_bad_inputs() {
        assert!(CountQuery::new(0, Rational::one(), Mode::Exact).is_err());
        assert!(CountQuery::new(3, Rational::zero(), Mode::Exact).is_err());
    }

    #[test]
    fn enumeration_examples() {
        let one = Rational::one();
        assert_eq!(
            enumerate_representations(6, &one, 10).unwrap(),
            vec![vec![1], vec![2, 3, 6]]
        );
        let x: Rational = "25/12".parse().unwrap();
        assert_eq!(
            enumerate_representations(4, &x, 10).unwrap(),
            vec![vec![1, 2, 3, 4]]
        );
        let ten: Rational = "10".parse().unwrap();
        assert!(enumerate_representations(5, &ten, 10).unwrap().is_empty());
        assert!(enumerate_representations(41, &one, 1).is_err());
    }

    #[test]
    fn enumeration_agrees_with_counts_and_is_lexicographic() {
        let one = Rational::one();
        let all = enumerate_representations(24, &one, usize::MAX).unwrap();
        let count = count_mitm(&q(24, "1", Mode::Exact)).unwrap().count;
        assert_eq!(BigUint::from(all.len()), count);
        for w in all.windows(2) {
            assert!(w[0] < w[1], "{:?} !< {:?}", w[0], w[1]);
        }
        let first3 = enumerate_representations(24, &one, 3).unwrap();
        assert_eq!(first3[..], all[..3]);
    }

    #[test]
    fn enumeration_at_the_cap_is_fast_and_exact() {
        let one = Rational::one();
        let got = enumerate_representations(40, &one, 25).unwrap();
        assert_eq!(got.len(), 25);
        assert_eq!(got[0], vec![1]);
        for set in &got {
            assert_eq!(reciprocal_sum(set).unwrap(), one);
            assert!(set.iter().all(|&a| (1..=40).contains(&a)));
        }
    }

    #[test]
    fn mitm_matches_brute_on_small_grid() {
        for n in 1..=12 {
            for x in ["1/3", "1/2", "1", "3/2", "2"] {
                for mode in [Mode::Exact, Mode::AtMost] {
                    let query = q(n, x, mode);
                    assert_eq!(
                        count_mitm(&query).unwrap().count,
                        count_brute(&query).unwrap().count,
                        "n={n} x={x} {mode:?}"
                    );
                }
            }
        }
    }
}
