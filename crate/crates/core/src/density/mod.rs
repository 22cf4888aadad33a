//! Probability density by numerical inversion of the characteristic function.
//!
//! All routes evaluate the half-line form
//!
//! ```text
//! f(x) = (1/pi) * integral_0^inf Re[ phi(k) * exp(-i*k*x) ] dk
//! ```
//!
//! [`pdf_at`] walks the half line in panels of half an oscillation period,
//! [`pdf_grid`] uses an FFT over a trapezoid rule in `k`, and
//! [`quadrature_oracle`] is an independent adaptive Gauss-Kronrod route kept
//! for verification.
//!
//! Accuracy for `alpha < 0.6` is not guaranteed to the requested tolerance.

mod gauss;
mod grid;
mod oracle;

use std::collections::VecDeque;
use std::f64::consts::{FRAC_2_PI, PI};

use crate::error::{Result, StableError};
use crate::params::StableParams;

pub use grid::{pdf_grid, DensityGrid};
pub use oracle::{quadrature_oracle, quadrature_oracle_tol};

/// Default absolute tolerance used by the CLI and the oracle comparisons.
pub const DEFAULT_TOL: f64 = 1e-8;

const MAX_PANELS: usize = 400_000;
const WYNN_WINDOW: usize = 41;

/// Upper bound on `integral_K^inf exp(-(gamma k)^alpha) dk`, or infinity when
/// `K` is not yet far enough out for the bound to apply.
pub(crate) fn envelope_remainder(params: &StableParams, k: f64) -> f64 {
    let alpha = params.alpha();
    let gamma = params.gamma();
    let u = (gamma * k).powf(alpha);
    let s = 1.0 / alpha;
    let lead = u.powf(s - 1.0) * (-u).exp() / (alpha * gamma);
    if s <= 1.0 {
        lead
    } else if u > 2.0 * (s - 1.0) + 1.0 {
        2.0 * lead
    } else {
        f64::INFINITY
    }
}

fn check_tol(tol: f64) -> Result<()> {
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(StableError::Domain {
            field: "tol",
            value: tol,
            reason: "must be positive and finite",
        });
    }
    Ok(())
}

fn check_x(x: f64) -> Result<()> {
    if !x.is_finite() {
        return Err(StableError::Domain {
            field: "x",
            value: x,
            reason: "must be finite",
        });
    }
    Ok(())
}

/// Phase of the inversion integrand minus its linear part.
fn skew_phase(params: &StableParams, k: f64) -> f64 {
    params.log_char_fn(k).im - params.delta() * k
}

/// d/dk of the integrand phase `Im ln phi(k) - k x`, for `k > 0`.
fn phase_slope(params: &StableParams, x: f64, k: f64) -> f64 {
    let (alpha, beta, gamma) = (params.alpha(), params.beta(), params.gamma());
    let linear = params.delta() - x;
    if alpha == 2.0 || beta == 0.0 {
        linear
    } else if alpha == 1.0 {
        linear - gamma * beta * FRAC_2_PI * (k.ln() + 1.0)
    } else {
        linear - alpha * beta * params.omega(k) * gamma.powf(alpha) * k.powf(alpha - 1.0)
    }
}

/// Density at `x`, accurate to absolute error `tol`.
///
/// The value is not clipped, so it may be negative by at most `tol`.
pub fn pdf_at(params: &StableParams, x: f64, tol: f64) -> Result<f64> {
    check_tol(tol)?;
    check_x(x)?;
    let budget = tol * PI;
    let integrand = |k: f64| {
        let lc = params.log_char_fn(k);
        lc.re.exp() * (lc.im - k * x).cos()
    };
    let env_width = 0.5 / params.gamma();

    // First panel: short enough that the non-linear phase stays below one
    // radian, graded dyadically toward the |k|^alpha cusp at the origin.
    let mut head = env_width;
    let dist = (params.delta() - x).abs();
    if dist > 0.0 {
        head = head.min(PI / dist);
    }
    while skew_phase(params, head).abs() > 1.0 && head > f64::MIN_POSITIVE {
        head *= 0.5;
    }
    let mut evaluations = 0usize;
    let mut sum = 0.0;
    let mut hi = head;
    while hi > budget * 1e-3 {
        let lo = 0.5 * hi;
        sum += gauss::integrate(integrand, lo, hi);
        evaluations += gauss::ORDER;
        hi = lo;
    }

    // Half-period panels out to where the envelope is negligible.
    let mut k = head;
    let mut partial: VecDeque<f64> = VecDeque::with_capacity(WYNN_WINDOW + 1);
    for _ in 0..MAX_PANELS {
        if envelope_remainder(params, k) <= 0.25 * budget {
            return Ok(sum / PI);
        }
        let mut width = env_width;
        let w0 = phase_slope(params, x, k).abs();
        if w0 > 0.0 {
            width = width.min(PI / w0);
        }
        let w1 = phase_slope(params, x, k + width).abs();
        if w1 > w0 {
            width = width.min(PI / w1);
        }
        sum += gauss::integrate(integrand, k, k + width);
        evaluations += gauss::ORDER;
        k += width;
        if partial.len() == WYNN_WINDOW {
            partial.pop_front();
        }
        partial.push_back(sum);
    }

    // Envelope decays too slowly: extrapolate the alternating panel sums.
    let seq: Vec<f64> = partial.into_iter().collect();
    match wynn_epsilon(&seq) {
        Some((limit, err)) if err <= 0.25 * budget => Ok(limit / PI),
        Some((_, err)) => Err(StableError::Convergence {
            tol,
            estimate: err / PI,
            evaluations,
        }),
        None => Err(StableError::Convergence {
            tol,
            estimate: f64::INFINITY,
            evaluations,
        }),
    }
}

/// Wynn's epsilon algorithm. Returns the extrapolated limit and the distance
/// between the last two estimates of the highest even column.
pub(crate) fn wynn_epsilon(seq: &[f64]) -> Option<(f64, f64)> {
    if seq.len() < 3 {
        return None;
    }
    let mut prev = vec![0.0; seq.len() + 1];
    let mut cur = seq.to_vec();
    let mut best: Option<(f64, f64)> = None;
    let mut col = 0;
    while cur.len() >= 2 {
        let mut next = Vec::with_capacity(cur.len() - 1);
        for i in 0..cur.len() - 1 {
            let diff = cur[i + 1] - cur[i];
            if diff == 0.0 {
                // converged exactly
                return Some((cur[i + 1], 0.0));
            }
            next.push(prev[i + 1] + 1.0 / diff);
        }
        col += 1;
        prev = cur;
        cur = next;
        if col % 2 == 0 && cur.len() >= 2 {
            let n = cur.len();
            let est = cur[n - 1];
            let err = (cur[n - 1] - cur[n - 2]).abs();
            if est.is_finite() && err.is_finite() {
                best = Some((est, err));
            }
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::make_params;

    fn cauchy(x: f64) -> f64 {
        1.0 / (PI * (1.0 + x * x))
    }

    fn normal_var2(x: f64) -> f64 {
        (-x * x / 4.0).exp() / (2.0 * PI.sqrt())
    }

    #[test]
    fn closed_form_corners() {
        let c = make_params(1.0, 0.0, 1.0, 0.0).unwrap();
        let g = make_params(2.0, 0.0, 1.0, 0.0).unwrap();
        let tol = 1e-10;
        assert!((pdf_at(&c, 0.0, tol).unwrap() - 1.0 / PI).abs() < tol);
        assert!((pdf_at(&g, 0.0, tol).unwrap() - 0.5 / PI.sqrt()).abs() < tol);
        for x in [-30.0, -3.0, 0.5, 7.0, 100.0] {
            assert!((pdf_at(&c, x, tol).unwrap() - cauchy(x)).abs() < tol, "cauchy x={x}");
            assert!((pdf_at(&g, x, tol).unwrap() - normal_var2(x)).abs() < tol, "gauss x={x}");
        }
    }

    #[test]
    fn scale_and_location() {
        // f_{gamma,delta}(x) = f((x - delta)/gamma) / gamma
        let base = make_params(1.6, -0.3, 1.0, 0.0).unwrap();
        let moved = make_params(1.6, -0.3, 0.02, 0.001).unwrap();
        for z in [-4.0, -0.5, 0.0, 2.0] {
            let want = pdf_at(&base, z, 1e-11).unwrap() / 0.02;
            let got = pdf_at(&moved, 0.001 + 0.02 * z, 1e-9).unwrap();
            assert!((want - got).abs() < 1e-8, "z={z}: {want} vs {got}");
        }
    }

    #[test]
    fn bad_tolerance_rejected() {
        let p = make_params(1.5, 0.0, 1.0, 0.0).unwrap();
        assert!(matches!(pdf_at(&p, 0.0, 0.0), Err(StableError::Domain { field: "tol", .. })));
        assert!(pdf_at(&p, f64::NAN, 1e-6).is_err());
    }

    #[test]
    fn wynn_accelerates_alternating_series() {
        // partial sums of ln 2 = 1 - 1/2 + 1/3 - ...
        let mut s = 0.0;
        let seq: Vec<f64> = (1..=20)
            .map(|n| {
                s += if n % 2 == 1 { 1.0 } else { -1.0 } / n as f64;
                s
            })
            .collect();
        let (limit, err) = wynn_epsilon(&seq).unwrap();
        assert!((limit - 2f64.ln()).abs() < 1e-10, "{limit}");
        assert!(err < 1e-8);
    }

    #[test]
    fn heavy_tail_uses_extrapolation_or_converges() {
        // alpha = 0.7 needs a long walk; both routes must agree loosely.
        let p = make_params(0.7, 0.5, 1.0, 0.0).unwrap();
        let a = pdf_at(&p, 1.5, 1e-7).unwrap();
        let b = quadrature_oracle_tol(&p, 1.5, 1e-9).unwrap();
        assert!((a - b).abs() < 2e-7, "{a} vs {b}");
    }
}
