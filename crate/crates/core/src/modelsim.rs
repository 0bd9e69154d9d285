//! Sampling from the product distribution of an [`EntropyProfile`].
//!
//! A sample includes each `m ∈ [n]` independently with probability `p_m`, and
//! `Z = Σ_{m included} 1/m`. Moments of `Z` have closed forms; the simulator
//! checks them and estimates `Pr[Z ≤ x]` by Monte Carlo.
//!
//! Randomness comes from ChaCha8 keyed by the seed, with the trial index as the
//! stream id. Element `m` always consumes the `m`-th 64-bit word of its stream,
//! so a trial's subset depends only on `(seed, trial)` and not on scheduling.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::entropy::quadrature::pairwise_sum;
use crate::entropy::EntropyProfile;
use crate::error::{domain, Result};
use crate::exactmath::{reciprocal_sum, Rational};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentSummary {
    pub mean: f64,
    pub variance: f64,
    /// `Σ E|Y_m/m − p_m/m|³`
    pub third_abs_sum: f64,
}

impl MomentSummary {
    /// `Σρ / (Σζ)^{3/2}`, the quantity controlling the normal approximation error.
    pub fn berry_esseen_ratio(&self) -> f64 {
        self.third_abs_sum / self.variance.powf(1.5)
    }
}

/// Closed-form mean, variance and summed absolute third central moment of `Z`.
pub fn model_moments(profile: &EntropyProfile) -> MomentSummary {
    let mut mean = Vec::with_capacity(profile.p.len());
    let mut var = Vec::with_capacity(profile.p.len());
    let mut third = Vec::with_capacity(profile.p.len());
    for (i, &p) in profile.p.iter().enumerate() {
        let r = 1.0 / (i + 1) as f64;
        let q = 1.0 - p;
        mean.push(p * r);
        var.push(p * q * r * r);
        third.push(p * (q * r).powi(3) + q * (p * r).powi(3));
    }
    MomentSummary {
        mean: pairwise_sum(&mean),
        variance: pairwise_sum(&var),
        third_abs_sum: pairwise_sum(&third),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelSample {
    pub subset: Vec<u64>,
    /// Exact `Σ 1/m` over `subset`.
    pub z: Rational,
}

/// One draw (trial 0 of `seed`).
pub fn sample_model(profile: &EntropyProfile, seed: u64) -> Result<ModelSample> {
    let subset = draw_subset(profile, seed, 0);
    let z = reciprocal_sum(&subset)?;
    Ok(ModelSample { subset, z })
}

/// The subset drawn in trial `trial` of `seed`.
pub fn draw_subset(profile: &EntropyProfile, seed: u64, trial: u64) -> Vec<u64> {
    let mut rng = trial_rng(seed, trial);
    let mut out = Vec::new();
    for (i, &p) in profile.p.iter().enumerate() {
        if unit_interval(rng.next_u64()) < p {
            out.push(i as u64 + 1);
        }
    }
    out
}

fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// Top 53 bits as a double in `[0, 1)`.
fn unit_interval(word: u64) -> f64 {
    (word >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationReport {
    pub n: u64,
    pub trials: u64,
    pub seed: u64,
    pub threshold: Rational,
    /// Empirical mean of `Z`.
    pub mean: f64,
    /// Unbiased empirical variance of `Z`.
    pub variance: f64,
    /// Fraction of trials with `Z ≤ threshold`.
    pub estimate: f64,
    /// Binomial standard error of `estimate`.
    pub stderr: f64,
    /// Trials whose comparison needed exact arithmetic.
    pub exact_fallbacks: u64,
}

struct Trial {
    z: f64,
    at_most: bool,
    exact: bool,
}

/// Run `trials` independent draws and summarize them.
///
/// `Z` is accumulated in double precision with a forward error bound; a trial
/// whose float sum lands within that bound of the threshold is re-decided with
/// exact rationals, so the `Z ≤ threshold` count is exact.
pub fn simulate(
    profile: &EntropyProfile,
    threshold: &Rational,
    trials: u64,
    seed: u64,
) -> Result<SimulationReport> {
    if trials == 0 {
        return Err(domain("at least one trial is required"));
    }
    let inv: Vec<f64> = (1..=profile.p.len()).map(|m| 1.0 / m as f64).collect();
    let x = threshold.to_f64();

    let outcomes: Vec<Result<Trial>> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = trial_rng(seed, t);
            let mut z = 0.0f64;
            let mut k = 0u32;
            for (&p, &r) in profile.p.iter().zip(&inv) {
                if unit_interval(rng.next_u64()) < p {
                    z += r;
                    k += 1;
                }
            }
            // |fl(Z) − Z| ≤ (k+1)·ε·Z for a sum of k correctly rounded positive terms
            let slack = (k as f64 + 2.0) * f64::EPSILON * z
                + 2.0 * f64::EPSILON * x.abs()
                + f64::MIN_POSITIVE;
            if (z - x).abs() > slack {
                return Ok(Trial {
                    z,
                    at_most: z <= x,
                    exact: false,
                });
            }
            let subset = draw_subset(profile, seed, t);
            let exact = reciprocal_sum(&subset)?;
            Ok(Trial {
                z,
                at_most: &exact <= threshold,
                exact: true,
            })
        })
        .collect();
    let outcomes: Vec<Trial> = outcomes.into_iter().collect::<Result<_>>()?;

    let zs: Vec<f64> = outcomes.iter().map(|t| t.z).collect();
    let mean = pairwise_sum(&zs) / trials as f64;
    let dev: Vec<f64> = zs.iter().map(|z| (z - mean) * (z - mean)).collect();
    let variance = if trials > 1 {
        pairwise_sum(&dev) / (trials - 1) as f64
    } else {
        0.0
    };
    let hits = outcomes.iter().filter(|t| t.at_most).count() as f64;
    let estimate = hits / trials as f64;
    Ok(SimulationReport {
        n: profile.n,
        trials,
        seed,
        threshold: threshold.clone(),
        mean,
        variance,
        estimate,
        stderr: (estimate * (1.0 - estimate) / trials as f64).sqrt(),
        exact_fallbacks: outcomes.iter().filter(|t| t.exact).count() as u64,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbabilityEstimate {
    pub estimate: f64,
    pub stderr: f64,
}

/// Monte Carlo estimate of `Pr[Z ≤ x]`.
pub fn estimate_prob_at_most(
    profile: &EntropyProfile,
    x: &Rational,
    trials: u64,
    seed: u64,
) -> Result<ProbabilityEstimate> {
    let report = simulate(profile, x, trials, seed)?;
    Ok(ProbabilityEstimate {
        estimate: report.estimate,
        stderr: report.stderr,
    })
}
