//! Globally adaptive Gauss–Kronrod (7/15) quadrature on a finite interval.

#![allow(clippy::excessive_precision)]

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

// Gauss weights for the odd-indexed Kronrod nodes XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

#[derive(Debug, Clone, Copy)]
pub struct QuadConfig {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl Default for QuadConfig {
    fn default() -> Self {
        QuadConfig {
            abs_tol: 1e-14,
            rel_tol: 1e-13,
            max_intervals: 4000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub error: f64,
    pub intervals: usize,
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    lo: f64,
    hi: f64,
    value: f64,
    error: f64,
}

fn gk15<F: Fn(f64) -> f64>(f: &F, lo: f64, hi: f64) -> Panel {
    let center = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = half * XGK[j];
        let pair = f(center - dx) + f(center + dx);
        kronrod += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    Panel {
        lo,
        hi,
        value: kronrod * half,
        error: ((kronrod - gauss) * half).abs(),
    }
}

/// Integrate `f` over `[lo, hi]`, bisecting the panel with the largest error
/// estimate until the total estimate meets `max(abs_tol, rel_tol·|I|)`.
pub fn integrate<F: Fn(f64) -> f64>(
    f: F,
    lo: f64,
    hi: f64,
    cfg: &QuadConfig,
) -> Result<QuadResult> {
    let mut panels = vec![gk15(&f, lo, hi)];
    loop {
        let (value, error) = totals(&panels);
        if !value.is_finite() || !error.is_finite() {
            return Err(Error::Quadrature {
                lo,
                hi,
                error,
                intervals: panels.len(),
            });
        }
        if error <= cfg.abs_tol.max(cfg.rel_tol * value.abs()) {
            return Ok(QuadResult {
                value,
                error,
                intervals: panels.len(),
            });
        }
        if panels.len() >= cfg.max_intervals {
            return Err(Error::Quadrature {
                lo,
                hi,
                error,
                intervals: panels.len(),
            });
        }
        let worst = panels
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.error.total_cmp(&b.1.error))
            .map(|(i, _)| i)
            .expect("non-empty");
        let p = panels.swap_remove(worst);
        let mid = 0.5 * (p.lo + p.hi);
        if mid <= p.lo || mid >= p.hi {
            // panel can no longer be split in double precision
            return Err(Error::Quadrature {
                lo,
                hi,
                error,
                intervals: panels.len() + 1,
            });
        }
        panels.push(gk15(&f, p.lo, mid));
        panels.push(gk15(&f, mid, p.hi));
    }
}

/// Sums in left-endpoint order so the result does not depend on split history.
fn totals(panels: &[Panel]) -> (f64, f64) {
    let mut ordered: Vec<&Panel> = panels.iter().collect();
    ordered.sort_by(|a, b| a.lo.total_cmp(&b.lo));
    let values: Vec<f64> = ordered.iter().map(|p| p.value).collect();
    let error = ordered.iter().map(|p| p.error).sum();
    (pairwise_sum(&values), error)
}

pub(crate) fn pairwise_sum(xs: &[f64]) -> f64 {
    match xs.len() {
        0 => 0.0,
        1 => xs[0],
        len if len <= 8 => xs.iter().sum(),
        len => {
            let (a, b) = xs.split_at(len / 2);
            pairwise_sum(a) + pairwise_sum(b)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomials_are_exact() {
        let r = integrate(
            |x| x.powi(5) - 3.0 * x * x,
            0.0,
            2.0,
            &QuadConfig::default(),
        )
        .unwrap();
        assert!((r.value - (64.0 / 6.0 - 8.0)).abs() < 1e-13);
        assert_eq!(r.intervals, 1);
    }

    #[test]
    fn peaked_integrand_converges() {
        // ∫_0^1 1/(1e-4 + (x-0.3)^2) dx, closed form via arctan
        let eps = 1e-4f64;
        let exact =
            ((0.7f64) / eps.sqrt()).atan() / eps.sqrt() + (0.3f64 / eps.sqrt()).atan() / eps.sqrt();
        let r = integrate(
            |x| 1.0 / (eps + (x - 0.3).powi(2)),
            0.0,
            1.0,
            &QuadConfig::default(),
        )
        .unwrap();
        assert!(
            (r.value - exact).abs() < 1e-9 * exact,
            "{} vs {exact}",
            r.value
        );
    }

    #[test]
    fn reports_failure_with_diagnostics() {
        let cfg = QuadConfig {
            max_intervals: 3,
            ..QuadConfig::default()
        };
        let err = integrate(|x: f64| x.sqrt().recip(), 0.0, 1.0, &cfg).unwrap_err();
        assert!(
            matches!(err, Error::Quadrature { intervals: 3, .. }),
            "{err}"
        );
    }

    #[test]
    fn pairwise_sum_matches_naive_for_small_inputs() {
        let xs: Vec<f64> = (1..=100).map(|i| i as f64).collect();
        assert_eq!(pairwise_sum(&xs), 5050.0);
        assert_eq!(pairwise_sum(&[]), 0.0);
    }
}
