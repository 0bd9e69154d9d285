//! Subset sums of modular inverses.
//!
//! Given a prime power `q` and a set `I` of integers coprime to `q`, the
//! questions are which residues `Σ_{i∈B} i⁻¹ (mod q)` are reachable with
//! `B ⊆ I`, `|B| ≤ s`, and what the smallest such `B` is. These are answered
//! exactly by a layered dynamic program over residues.
//!
//! Layer `k` stores, for every residue `r`, the largest possible *first* index
//! among size-`k` subsets (indices taken in the order of `I`) whose inverse
//! sum is `r`. A subset can be extended on the left by any index below its first
//! one, so this single number per residue is enough to decide reachability with
//! distinct elements, and it lets reconstruction pick the lexicographically
//! smallest subset greedily.

use std::collections::HashMap;

use num_integer::Integer;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

/// Largest modulus accepted by the dynamic program.
pub const MODULUS_CAP: u64 = 1_000_000;

/// Inverse of `a` modulo `q` in `[0, q)`.
pub fn mod_inverse(a: i64, q: u64) -> Result<u64> {
    if q == 0 {
        return Err(domain("modulus 0"));
    }
    if q == 1 {
        return Ok(0);
    }
    let a_mod = (a as i128).rem_euclid(q as i128);
    let eg = a_mod.extended_gcd(&(q as i128));
    if eg.gcd != 1 {
        return Err(domain(format!("{a} is not invertible modulo {q}")));
    }
    Ok(eg.x.rem_euclid(q as i128) as u64)
}

/// The representative of `v mod q` in `(-q/2, q/2]`.
pub fn signed_rep(v: i128, q: u64) -> i64 {
    let r = v.rem_euclid(q as i128);
    if 2 * r > q as i128 {
        (r - q as i128) as i64
    } else {
        r as i64
    }
}

fn is_prime_power(q: u64) -> bool {
    if q < 2 {
        return false;
    }
    let mut p = 2;
    while p * p <= q {
        if q.is_multiple_of(p) {
            let mut rest = q;
            while rest.is_multiple_of(p) {
                rest /= p;
            }
            return rest == 1;
        }
        p += 1;
    }
    true
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModInstance {
    q: u64,
    elements: Vec<u64>,
    inverses: Vec<u64>,
    s_max: usize,
}

impl ModInstance {
    /// Validates that `q` is 1 or a prime power no larger than [`MODULUS_CAP`]
    /// and that the elements are distinct and coprime to `q`.
    pub fn new(q: u64, elements: Vec<u64>, s_max: usize) -> Result<Self> {
        if q != 1 && !is_prime_power(q) {
            return Err(domain(format!("{q} is not a prime power")));
        }
        if q > MODULUS_CAP {
            return Err(domain(format!("modulus {q} above cap {MODULUS_CAP}")));
        }
        let mut seen = std::collections::HashSet::new();
        let mut inverses = Vec::with_capacity(elements.len());
        for &e in &elements {
            if !seen.insert(e) {
                return Err(domain(format!("element {e} repeated")));
            }
            inverses.push(mod_inverse(e as i64, q)?);
        }
        Ok(ModInstance {
            q,
            elements,
            inverses,
            s_max,
        })
    }

    /// Keeps only the candidates coprime to `q` (first occurrence of each).
    pub fn coprime_filtered(
        q: u64,
        candidates: impl IntoIterator<Item = u64>,
        s_max: usize,
    ) -> Result<Self> {
        let mut seen = std::collections::HashSet::new();
        let elements: Vec<u64> = candidates
            .into_iter()
            .filter(|&e| e.gcd(&q) == 1 && seen.insert(e))
            .collect();
        Self::new(q, elements, s_max)
    }

    pub fn q(&self) -> u64 {
        self.q
    }

    pub fn elements(&self) -> &[u64] {
        &self.elements
    }

    pub fn inverses(&self) -> &[u64] {
        &self.inverses
    }

    pub fn s_max(&self) -> usize {
        self.s_max
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModSubsetSolution {
    pub instance: ModInstance,
    pub target: u64,
    pub subset: Vec<u64>,
    pub size: usize,
}

impl ModSubsetSolution {
    /// Recomputes `Σ i⁻¹ mod q` from scratch.
    pub fn verify(&self) -> bool {
        let q = self.instance.q;
        let mut acc = 0u64;
        for &e in &self.subset {
            match mod_inverse(e as i64, q) {
                Ok(inv) => acc = (acc + inv) % q,
                Err(_) => return false,
            }
        }
        self.size == self.subset.len()
            && self.size <= self.instance.s_max
            && acc == self.target % q.max(1)
            && self
                .subset
                .iter()
                .all(|e| self.instance.elements.contains(e))
    }
}

const NONE: i32 = -1;

/// The layered table for one instance, grown lazily.
pub struct InverseSumTable<'a> {
    instance: &'a ModInstance,
    layers: Vec<Vec<i32>>,
}

impl<'a> InverseSumTable<'a> {
    pub fn new(instance: &'a ModInstance) -> Self {
        let q = instance.q.max(1) as usize;
        let mut base = vec![NONE; q];
        base[0] = instance.elements.len() as i32;
        InverseSumTable {
            instance,
            layers: vec![base],
        }
    }

    fn q(&self) -> usize {
        self.instance.q.max(1) as usize
    }

    /// Builds layers up to `k` (capped at `s_max`). Returns false once a layer is empty.
    fn extend_to(&mut self, k: usize) -> bool {
        let k = k.min(self.instance.s_max);
        while self.layers.len() <= k {
            let prev = self.layers.last().expect("layer 0 exists");
            if prev.iter().all(|&v| v == NONE) {
                return false;
            }
            let q = self.q();
            let mut next = vec![NONE; q];
            for (r, &first) in prev.iter().enumerate() {
                if first <= 0 {
                    continue;
                }
                for i in 0..first as usize {
                    let r2 = (r + self.instance.inverses[i] as usize) % q;
                    if next[r2] < i as i32 {
                        next[r2] = i as i32;
                    }
                }
            }
            self.layers.push(next);
        }
        self.layers[k].iter().any(|&v| v != NONE)
    }

    /// Smallest size reaching `target`, if any within `s_max`.
    pub fn min_size(&mut self, target: u64) -> Option<usize> {
        let r = (target % self.q() as u64) as usize;
        for k in 0..=self.instance.s_max {
            if k >= self.layers.len() && !self.extend_to(k) && k >= self.layers.len() {
                return None;
            }
            if self.layers[k][r] != NONE {
                return Some(k);
            }
        }
        None
    }

    /// Can `remaining` more elements, all with index above `after`, sum to `r`?
    fn completes(&self, remaining: usize, r: usize, after: i64) -> bool {
        self.layers[remaining][r] as i64 > after
    }

    /// Lexicographically smallest index list of size `k` reaching `target`.
    fn lex_smallest(&self, k: usize, target: usize) -> Option<Vec<usize>> {
        let q = self.q();
        if !self.completes(k, target, -1) {
            return None;
        }
        let mut chosen = Vec::with_capacity(k);
        let mut r = target;
        let mut start = 0usize;
        for remaining in (1..=k).rev() {
            let pick = (start..self.instance.elements.len()).find(|&i| {
                let r2 = (r + q - self.instance.inverses[i] as usize) % q;
                self.completes(remaining - 1, r2, i as i64)
            })?;
            chosen.push(pick);
            r = (r + q - self.instance.inverses[pick] as usize) % q;
            start = pick + 1;
        }
        Some(chosen)
    }

    /// Up to `limit` solutions ordered by size, then lexicographically.
    pub fn solutions(&mut self, target: u64, limit: usize) -> Vec<Vec<u64>> {
        let q = self.q();
        let target = (target % q as u64) as usize;
        let mut out = Vec::new();
        let Some(first) = self.min_size(target as u64) else {
            return out;
        };
        for k in first..=self.instance.s_max {
            if out.len() >= limit {
                break;
            }
            if k >= self.layers.len() && !self.extend_to(k) && k >= self.layers.len() {
                break;
            }
            let mut stack = Vec::with_capacity(k);
            self.walk(k, target, 0, &mut stack, &mut out, limit);
        }
        out
    }

    fn walk(
        &self,
        remaining: usize,
        r: usize,
        start: usize,
        stack: &mut Vec<usize>,
        out: &mut Vec<Vec<u64>>,
        limit: usize,
    ) {
        if out.len() >= limit {
            return;
        }
        if remaining == 0 {
            if r == 0 {
                out.push(stack.iter().map(|&i| self.instance.elements[i]).collect());
            }
            return;
        }
        let q = self.q();
        for i in start..self.instance.elements.len() {
            if out.len() >= limit {
                return;
            }
            let r2 = (r + q - self.instance.inverses[i] as usize) % q;
            if !self.completes(remaining - 1, r2, i as i64) {
                continue;
            }
            stack.push(i);
            self.walk(remaining - 1, r2, i + 1, stack, out, limit);
            stack.pop();
        }
    }
}

/// A minimum-size subset of `I` whose inverses sum to `target (mod q)`; among
/// minimum-size subsets, the lexicographically smallest in the order of `I`.
/// `None` when no subset of size at most `s_max` works.
pub fn min_subset_inverse_sum(instance: &ModInstance, target: u64) -> Option<ModSubsetSolution> {
    let mut table = InverseSumTable::new(instance);
    let q = instance.q.max(1);
    let target = target % q;
    let k = table.min_size(target)?;
    let idx = table.lex_smallest(k, target as usize)?;
    Some(ModSubsetSolution {
        instance: instance.clone(),
        target,
        subset: idx.iter().map(|&i| instance.elements[i]).collect(),
        size: k,
    })
}

/// Minimum subset size for every residue.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Coverage {
    pub q: u64,
    /// `min_size[r]` is `None` when `r` is unreachable within `s_max`.
    pub min_size: Vec<Option<u32>>,
}

impl Coverage {
    pub fn reachable(&self) -> usize {
        self.min_size.iter().filter(|s| s.is_some()).count()
    }

    pub fn is_total(&self) -> bool {
        self.reachable() == self.min_size.len()
    }

    pub fn max_min_size(&self) -> Option<u32> {
        self.min_size.iter().flatten().copied().max()
    }

    /// `histogram[k]` = number of residues whose minimum size is `k`.
    pub fn histogram(&self) -> Vec<u64> {
        let mut h = vec![0u64; self.max_min_size().map_or(1, |m| m as usize + 1)];
        for s in self.min_size.iter().flatten() {
            h[*s as usize] += 1;
        }
        h
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("residue,min_size\n");
        for (r, s) in self.min_size.iter().enumerate() {
            match s {
                Some(k) => out.push_str(&format!("{r},{k}\n")),
                None => out.push_str(&format!("{r},\n")),
            }
        }
        out
    }
}

pub fn residue_coverage(instance: &ModInstance) -> Coverage {
    let q = instance.q.max(1) as usize;
    let mut table = InverseSumTable::new(instance);
    let mut min_size = vec![None; q];
    min_size[0] = Some(0);
    let mut covered = 1usize;
    let mut k = 1;
    while covered < q && k <= instance.s_max {
        if !table.extend_to(k) {
            break;
        }
        for (r, &v) in table.layers[k].iter().enumerate() {
            if v != NONE && min_size[r].is_none() {
                min_size[r] = Some(k as u32);
                covered += 1;
            }
        }
        k += 1;
    }
    Coverage {
        q: instance.q.max(1),
        min_size,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShrinkResult {
    pub t: u64,
    pub d_prime: Vec<i64>,
    /// `b_i = 2 (q/a_i) (A/q)^{1/k}`
    pub bounds: Vec<f64>,
}

impl ShrinkResult {
    pub fn satisfies_bounds(&self) -> bool {
        self.d_prime
            .iter()
            .zip(&self.bounds)
            .all(|(&d, &b)| (d.unsigned_abs() as f64) <= b)
    }
}

/// `b_i = 2 (q/a_i) (A/q)^{1/k}` with `A = Π a_i`.
pub fn shrink_bounds(q: u64, a: &[u64]) -> Vec<f64> {
    let k = a.len() as f64;
    let log_a: f64 = a.iter().map(|&v| (v as f64).ln()).sum();
    let scale = ((log_a - (q as f64).ln()) / k).exp();
    a.iter()
        .map(|&ai| 2.0 * (q as f64 / ai as f64) * scale)
        .collect()
}

/// Finds `0 < T < q` with `|ol(T·d_i)| ≤ b_i` for every `i` by bucketing
/// `s ∈ Z_q` on `(⌊ol(s·d_i)/b_i⌋)_i` and differencing the first collision.
pub fn dirichlet_shrink(q: u64, d: &[i64], a: &[u64]) -> Result<ShrinkResult> {
    if d.is_empty() || d.len() != a.len() {
        return Err(domain("need k ≥ 1 residues and as many weights"));
    }
    if q < 2 {
        return Err(domain("modulus must be at least 2"));
    }
    if a.contains(&0) {
        return Err(domain("weights must be positive"));
    }
    for &di in d {
        if (di as i128).rem_euclid(q as i128).gcd(&(q as i128)) != 1 {
            return Err(domain(format!("{di} is not coprime to {q}")));
        }
    }
    let bounds = shrink_bounds(q, a);
    let evaluate = |t: u64| -> Vec<i64> {
        d.iter()
            .map(|&di| signed_rep(t as i128 * di as i128, q))
            .collect()
    };

    let mut buckets: HashMap<Vec<i64>, u64> = HashMap::new();
    for s in 0..q {
        let key: Vec<i64> = evaluate(s)
            .iter()
            .zip(&bounds)
            .map(|(&v, &b)| (v as f64 / b).floor() as i64)
            .collect();
        if let Some(&s0) = buckets.get(&key) {
            let t = s - s0;
            let found = ShrinkResult {
                t,
                d_prime: evaluate(t),
                bounds: bounds.clone(),
            };
            if found.satisfies_bounds() {
                return Ok(found);
            }
        } else {
            buckets.insert(key, s);
        }
    }
    // Bucket counts can round past q for loose inputs; fall back to a direct scan.
    (1..q)
        .map(|t| ShrinkResult {
            t,
            d_prime: evaluate(t),
            bounds: bounds.clone(),
        })
        .find(ShrinkResult::satisfies_bounds)
        .ok_or_else(|| domain(format!("no T < {q} meets the bounds {bounds:?}")))
}
