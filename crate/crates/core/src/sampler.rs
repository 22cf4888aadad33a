//! Synthetic stable variates and heavy-tailed sums.
//!
//! Draws use the uniform-angle / exponential transform. The transform natively
//! produces the `1 - i*b*sgn(k)*tan(pi*alpha/2)` form, so the internal skew is
//! `b = -beta` for `alpha != 1` and `b = beta` at `alpha = 1` to reproduce the
//! characteristic function in [`crate::params`]. The `cf_round_trip` tests
//! pin this choice.
//!
//! Output is split into fixed-size chunks, each drawn from its own ChaCha
//! stream `(seed, chunk)`, so results do not depend on thread count.

use std::f64::consts::{FRAC_2_PI, FRAC_PI_2, PI};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use rayon::prelude::*;
use statrs::function::gamma::gamma;

use crate::error::{Result, StableError};
use crate::params::StableParams;

const CHUNK: usize = 4096;
const SUMS_PER_CHUNK: usize = 64;

/// Internal transform skew sign relative to `beta`, for `alpha != 1`.
pub(crate) const TRANSFORM_SKEW_SIGN: f64 = -1.0;

#[derive(Debug, Clone, PartialEq)]
pub struct SampleBatch {
    pub values: Vec<f64>,
    pub params: StableParams,
    pub seed: u64,
}

fn chunk_rng(seed: u64, chunk: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chunk as u64);
    rng
}

/// Uniform on the open interval (0, 1).
fn open_unit<R: Rng>(rng: &mut R) -> f64 {
    loop {
        let u: f64 = rng.gen();
        if u > 0.0 {
            return u;
        }
    }
}

/// One standard draw with transform skew `b`, given `u` uniform on (-pi/2, pi/2)
/// and `w` standard exponential.
fn standard_draw(alpha: f64, b: f64, u: f64, w: f64) -> f64 {
    if alpha == 1.0 {
        let lead = FRAC_PI_2 + b * u;
        FRAC_2_PI * (lead * u.tan() - b * ((FRAC_PI_2 * w * u.cos()) / lead).ln())
    } else {
        let t = b * (FRAC_PI_2 * alpha).tan();
        let shift = t.atan() / alpha;
        let scale = (1.0 + t * t).powf(0.5 / alpha);
        let au = alpha * (u + shift);
        scale * au.sin() / u.cos().powf(1.0 / alpha)
            * ((u - au).cos() / w).powf((1.0 - alpha) / alpha)
    }
}

/// `n` i.i.d. draws with characteristic function `params.char_fn`.
pub fn sample(params: &StableParams, n: usize, seed: u64) -> Result<SampleBatch> {
    if n == 0 {
        return Err(StableError::Domain {
            field: "n",
            value: 0.0,
            reason: "need at least one draw",
        });
    }
    let alpha = params.alpha();
    let gamma_ = params.gamma();
    let b = if alpha == 1.0 {
        params.beta()
    } else {
        TRANSFORM_SKEW_SIGN * params.beta()
    };
    let shift = if alpha == 1.0 {
        params.delta() + FRAC_2_PI * b * gamma_ * gamma_.ln()
    } else {
        params.delta()
    };
    let mut values = vec![0.0; n];
    values
        .par_chunks_mut(CHUNK)
        .enumerate()
        .for_each(|(chunk, out)| {
            let mut rng = chunk_rng(seed, chunk);
            for v in out.iter_mut() {
                let u = PI * (open_unit(&mut rng) - 0.5);
                let w: f64 = rng.sample(Exp1);
                *v = gamma_ * standard_draw(alpha, b, u, w) + shift;
            }
        });
    Ok(SampleBatch {
        values,
        params: *params,
        seed,
    })
}

/// Stable law that rescaled sums of the two-sided Pareto base variable
/// approach, in the sign convention of [`StableParams::char_fn`].
///
/// With `P(X > x) = p x^-a`, `P(X < -x) = q x^-a` and `p + q = 1`, the limit
/// has scale `(Gamma(1 - a) cos(pi a / 2))^(1/a)` (`pi / 2` at `a = 1`) and
/// native skew `p - q`.
pub fn gclt_limit_params(tail_alpha: f64, skew_ratio: f64) -> Result<StableParams> {
    check_gclt(tail_alpha, skew_ratio)?;
    let (beta, scale) = if tail_alpha == 1.0 {
        (skew_ratio, FRAC_PI_2)
    } else {
        let s = gamma(1.0 - tail_alpha) * (FRAC_PI_2 * tail_alpha).cos();
        (TRANSFORM_SKEW_SIGN * skew_ratio, s.powf(1.0 / tail_alpha))
    };
    StableParams::new(tail_alpha, beta, scale, 0.0)
}

fn check_gclt(tail_alpha: f64, skew_ratio: f64) -> Result<()> {
    if !(tail_alpha > 0.0 && tail_alpha < 2.0) {
        return Err(StableError::Domain {
            field: "tail_alpha",
            value: tail_alpha,
            reason: "must lie in (0, 2)",
        });
    }
    if !(-1.0..=1.0).contains(&skew_ratio) {
        return Err(StableError::Domain {
            field: "skew_ratio",
            value: skew_ratio,
            reason: "must lie in [-1, 1]",
        });
    }
    Ok(())
}

/// `n_sums` independent sums of `n_terms` two-sided Pareto variables, each
/// rescaled by `n_terms^(1/tail_alpha)` and centred.
///
/// Centring subtracts the exact mean for `tail_alpha > 1` and the sample
/// median of the rescaled sums otherwise, where the mean does not exist.
pub fn gclt_sum_demo(
    tail_alpha: f64,
    skew_ratio: f64,
    n_terms: usize,
    n_sums: usize,
    seed: u64,
) -> Result<SampleBatch> {
    check_gclt(tail_alpha, skew_ratio)?;
    if n_terms == 0 || n_sums == 0 {
        return Err(StableError::Domain {
            field: "n_terms",
            value: n_terms.min(n_sums) as f64,
            reason: "need at least one term and one sum",
        });
    }
    let p_right = 0.5 * (1.0 + skew_ratio);
    let inv_alpha = 1.0 / tail_alpha;
    let norm = (n_terms as f64).powf(inv_alpha);
    // E[X] = (p - q) a / (a - 1)
    let mean = if tail_alpha > 1.0 {
        skew_ratio * tail_alpha / (tail_alpha - 1.0)
    } else {
        0.0
    };
    let mut values = vec![0.0; n_sums];
    values
        .par_chunks_mut(SUMS_PER_CHUNK)
        .enumerate()
        .for_each(|(chunk, out)| {
            let mut rng = chunk_rng(seed, chunk);
            for v in out.iter_mut() {
                let mut total = 0.0;
                for _ in 0..n_terms {
                    let magnitude = open_unit(&mut rng).powf(-inv_alpha);
                    let right = rng.gen::<f64>() < p_right;
                    total += if right { magnitude } else { -magnitude };
                }
                *v = (total - n_terms as f64 * mean) / norm;
            }
        });
    if tail_alpha <= 1.0 {
        let med = median(&values);
        values.iter_mut().for_each(|v| *v -= med);
    }
    Ok(SampleBatch {
        values,
        params: gclt_limit_params(tail_alpha, skew_ratio)?,
        seed,
    })
}

fn median(values: &[f64]) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::make_params;
    use num_complex::Complex64;

    fn ecf(values: &[f64], k: f64) -> Complex64 {
        let (mut c, mut s) = (0.0, 0.0);
        for &x in values {
            let (sn, cs) = (k * x).sin_cos();
            c += cs;
            s += sn;
        }
        Complex64::new(c, s) / values.len() as f64
    }

    #[test]
    fn deterministic_per_seed() {
        let p = make_params(1.3, 0.4, 2.0, -1.0).unwrap();
        let a = sample(&p, 10_000, 17).unwrap();
        let b = sample(&p, 10_000, 17).unwrap();
        let c = sample(&p, 10_000, 18).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.values, c.values);
    }

    #[test]
    fn independent_of_thread_count() {
        let p = make_params(1.7, -0.2, 1.0, 0.0).unwrap();
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let many = rayon::ThreadPoolBuilder::new().num_threads(8).build().unwrap();
        let a = one.install(|| sample(&p, 50_000, 3).unwrap());
        let b = many.install(|| sample(&p, 50_000, 3).unwrap());
        assert_eq!(a.values, b.values);
    }

    #[test]
    fn gaussian_corner_moments() {
        let n = 100_000;
        let p = make_params(2.0, 0.0, 1.0, 0.0).unwrap();
        let v = sample(&p, n, 11).unwrap().values;
        let mean = v.iter().sum::<f64>() / n as f64;
        let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        assert!(mean.abs() < 4.0 * (2.0 / n as f64).sqrt(), "mean {mean}");
        assert!((var - 2.0).abs() < 0.1, "var {var}");
    }

    #[test]
    fn scaling_equivariance() {
        for alpha in [0.7, 1.5, 2.0] {
            let unit = make_params(alpha, 0.3, 1.0, 0.0).unwrap();
            let moved = make_params(alpha, 0.3, 0.25, 4.0).unwrap();
            let a = sample(&unit, 5000, 9).unwrap().values;
            let b = sample(&moved, 5000, 9).unwrap().values;
            for (x, y) in a.iter().zip(&b) {
                assert_eq!(0.25 * x + 4.0, *y);
            }
        }
    }

    #[test]
    fn cf_round_trip() {
        let n = 100_000;
        let bound = 5.0 / (n as f64).sqrt();
        for alpha in [0.8, 1.2, 1.5, 1.9] {
            for beta in [-0.8, 0.0, 0.8] {
                let p = make_params(alpha, beta, 1.0, 0.0).unwrap();
                let v = sample(&p, n, 2024).unwrap().values;
                for i in 0..=19 {
                    let k = 0.1 + 0.1 * i as f64;
                    let err = (ecf(&v, k) - p.char_fn(k)).norm();
                    assert!(err < bound, "alpha {alpha} beta {beta} k {k}: {err}");
                }
            }
        }
    }

    #[test]
    fn cf_round_trip_at_alpha_one() {
        let n = 100_000;
        for (beta, gamma_, delta) in [(0.0, 1.0, 0.0), (0.5, 2.0, 1.0), (-0.6, 0.5, -0.3)] {
            let p = make_params(1.0, beta, gamma_, delta).unwrap();
            let v = sample(&p, n, 5).unwrap().values;
            for k in [0.1, 0.3, 0.7, 1.0] {
                let err = (ecf(&v, k) - p.char_fn(k)).norm();
                assert!(err < 5.0 / (n as f64).sqrt(), "beta {beta} k {k}: {err}");
            }
        }
    }

    #[test]
    fn flipped_skew_sign_is_detected() {
        // The opposite internal sign must miss the characteristic function.
        let n = 100_000;
        let p = make_params(1.5, 0.8, 1.0, 0.0).unwrap();
        let mirrored = make_params(1.5, -0.8, 1.0, 0.0).unwrap();
        let v = sample(&mirrored, n, 1).unwrap().values;
        let err = (ecf(&v, 1.0) - p.char_fn(1.0)).norm();
        assert!(err > 0.2, "{err}");
    }

    #[test]
    fn sample_rejects_empty() {
        let p = make_params(1.5, 0.0, 1.0, 0.0).unwrap();
        assert!(sample(&p, 0, 1).is_err());
    }

    #[test]
    fn gclt_rejects_bad_inputs() {
        assert!(gclt_sum_demo(2.0, 0.0, 10, 10, 1).is_err());
        assert!(gclt_sum_demo(1.5, 1.5, 10, 10, 1).is_err());
        assert!(gclt_sum_demo(1.5, 0.0, 0, 10, 1).is_err());
    }

    #[test]
    fn single_term_tail_slope() {
        // n_terms = 1: the centred base variable; density slope -(1 + alpha)
        let tail_alpha = 1.5;
        let batch = gclt_sum_demo(tail_alpha, 0.0, 1, 1_000_000, 8).unwrap();
        // log-spaced histogram of |x| over [10, 100]
        let edges: Vec<f64> = (0..=10).map(|i| 10f64 * 10f64.powf(i as f64 / 10.0)).collect();
        let mut counts = vec![0usize; 10];
        for v in &batch.values {
            let a = v.abs();
            if let Some(i) = edges.windows(2).position(|w| a >= w[0] && a < w[1]) {
                counts[i] += 1;
            }
        }
        let pts: Vec<(f64, f64)> = edges
            .windows(2)
            .zip(&counts)
            .map(|(w, &c)| ((w[0] * w[1]).sqrt().ln(), (c as f64 / (w[1] - w[0])).ln()))
            .collect();
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let slope = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>()
            / pts.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
        assert!((slope + 1.0 + tail_alpha).abs() < 0.15, "{slope}");
    }

    #[test]
    fn gclt_limit_scale_matches_cauchy_case() {
        // symmetric a = 1 Pareto sums approach a Cauchy law with scale pi/2
        let p = gclt_limit_params(1.0, 0.0).unwrap();
        assert!((p.gamma() - FRAC_PI_2).abs() < 1e-15);
        let p = gclt_limit_params(1.5, 0.4).unwrap();
        assert!((p.beta() + 0.4).abs() < 1e-15);
        assert!(p.gamma() > 1.0 && p.gamma() < 2.5);
    }
}
