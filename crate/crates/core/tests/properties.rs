//! Cross-module invariants checked against independent oracles.

use std::collections::HashSet;

use egyptian::absorption::{build_config, construct_with, verify_representation, AbsorptionParams};
use egyptian::counting::{count_mitm, enumerate_representations, CountQuery, Mode};
use egyptian::entropy::{discrete_profile, entropy_upper_bound};
use egyptian::exactmath::{prime_powers_in, reciprocal_sum, FactorSieve, Rational};
use egyptian::modular::{
    dirichlet_shrink, min_subset_inverse_sum, mod_inverse, signed_rep, ModInstance,
};
use num_traits::ToPrimitive;
use proptest::prelude::*;

fn rat(s: &str) -> Rational {
    s.parse().unwrap()
}

#[test]
fn counts_stay_below_entropy_bound_up_to_34() {
    for n in 3..=34u64 {
        for x in ["1/3", "1/2", "1/1", "3/2", "2/1"] {
            let xr = rat(x);
            let q = CountQuery::new(n, xr.clone(), Mode::AtMost).unwrap();
            let count = count_mitm(&q).unwrap().count.to_f64().unwrap();
            let bound = entropy_upper_bound(n, &xr).unwrap();
            let h = discrete_profile(n, xr.to_f64()).unwrap().entropy_bits;
            assert!(count <= h.exp2(), "n={n} x={x}: {count} > 2^{h}");
            assert!(h <= bound && bound <= n as f64, "n={n} x={x}");
        }
    }
}

#[test]
fn exact_count_matches_enumeration() {
    for (n, x) in [(24u64, "1/1"), (30, "1/2"), (22, "3/2")] {
        let q = CountQuery::new(n, rat(x), Mode::Exact).unwrap();
        let count = count_mitm(&q).unwrap().count.to_usize().unwrap();
        let reps = enumerate_representations(n, &rat(x), usize::MAX).unwrap();
        assert_eq!(reps.len(), count);
        assert!(reps.iter().all(|r| verify_representation(r, n, &rat(x))));
    }
}

fn brute_min_size(q: u64, elems: &[u64], target: u64) -> Option<usize> {
    let inv: Vec<u64> = elems
        .iter()
        .map(|&e| mod_inverse(e as i64, q).unwrap())
        .collect();
    (0u32..1 << elems.len())
        .filter(|mask| {
            (0..elems.len())
                .filter(|&i| mask >> i & 1 == 1)
                .map(|i| inv[i])
                .sum::<u64>()
                % q
                == target
        })
        .map(|mask| mask.count_ones() as usize)
        .min()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn modular_minimum_matches_brute_force(
        qi in 0usize..8,
        raw in proptest::collection::btree_set(1u64..200, 0..11),
        target in 0u64..1000,
    ) {
        let q = [5u64, 7, 9, 16, 25, 49, 101, 127][qi];
        let elems: Vec<u64> = raw.into_iter().filter(|&e| num_integer::gcd(e, q) == 1).collect();
        let inst = ModInstance::new(q, elems.clone(), elems.len()).unwrap();
        let t = target % q;
        let got = min_subset_inverse_sum(&inst, t);
        prop_assert_eq!(got.as_ref().map(|s| s.size), brute_min_size(q, &elems, t));
        if let Some(s) = got {
            prop_assert!(s.verify());
        }
    }

    #[test]
    fn shrink_meets_bound(
        pi in 0usize..1229,
        k in 1usize..=3,
        seeds in proptest::collection::vec(any::<u64>(), 6),
    ) {
        let primes: Vec<u64> = FactorSieve::new(10_000).primes().filter(|&p| p > 2).collect();
        let q = primes[pi % primes.len()];
        let d: Vec<i64> = (0..k).map(|i| 1 + (seeds[i] % (q - 1)) as i64).collect();
        let a: Vec<u64> = (0..k).map(|i| 1 + seeds[3 + i] % q).collect();
        let r = dirichlet_shrink(q, &d, &a).unwrap();
        prop_assert!(r.t >= 1 && r.t < q);
        prop_assert!(r.satisfies_bounds());
        for (dp, di) in r.d_prime.iter().zip(&d) {
            prop_assert_eq!(*dp, signed_rep(r.t as i128 * *di as i128, q));
        }
    }
}

#[test]
fn traces_obey_step_invariants_across_targets() {
    for (n, x) in [
        (3000u64, "1/1"),
        (3000, "1/2"),
        (3000, "2/3"),
        (4000, "5/6"),
        (5000, "3/2"),
    ] {
        let xr = rat(x);
        let sieve = FactorSieve::new(n);
        let max_steps = prime_powers_in(5, n).unwrap().len();
        let config = build_config(n, &xr, 4, 0.25, 0).unwrap();
        let mut sets = HashSet::new();
        for seed in 1..=5u64 {
            let mut config = config.clone();
            config.seed = seed;
            let trace = construct_with(&config, &AbsorptionParams::default())
                .unwrap_or_else(|e| panic!("n={n} x={x} seed={seed}: {e}"));
            trace.replay(12).unwrap();
            assert!(trace.steps.len() <= max_steps);
            let u: HashSet<u64> = config.u.iter().copied().collect();
            assert!(trace.base_set.iter().all(|m| u.contains(m)));
            assert!(reciprocal_sum(&trace.base_set).unwrap() <= &xr * &rat("3/4"));
            let mut prev_q = u64::MAX;
            let mut x_i = trace.x0().unwrap();
            for step in &trace.steps {
                assert!(
                    step.q < prev_q,
                    "prime powers processed in decreasing order"
                );
                prev_q = step.q;
                for &b in &step.b {
                    let new_pp = sieve.max_prime_power_factor(b).unwrap();
                    assert!(
                        new_pp < step.q,
                        "b = {b} brings a prime power ≥ q = {}",
                        step.q
                    );
                    assert_eq!(num_integer::gcd(b, step.q), 1);
                }
                let elems: Vec<u64> = step.b.iter().map(|b| b * step.q).collect();
                let mass = reciprocal_sum(&elems).unwrap();
                let min_b = *step.b.iter().min().unwrap();
                let cap = Rational::new(step.b.len() as u64, step.q * min_b).unwrap();
                assert!(mass <= cap && mass < x_i);
                x_i = &x_i - &mass;
            }
            assert!(verify_representation(&trace.a, n, &xr));
            assert!(
                sets.insert(trace.a.clone()),
                "seed {seed} repeated a witness"
            );
        }
    }
}
