use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;

use super::{check_tol, envelope_remainder};
use crate::error::{Result, StableError};
use crate::params::StableParams;

const MAX_FFT_LEN: usize = 1 << 24;

/// Densities on a uniform abscissa grid.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityGrid {
    pub x_values: Vec<f64>,
    pub f_values: Vec<f64>,
    pub params: StableParams,
    pub inversion_tolerance: f64,
}

impl DensityGrid {
    pub fn len(&self) -> usize {
        self.x_values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x_values.is_empty()
    }

    /// Trapezoid mass on the grid plus power-law tail mass beyond each end.
    ///
    /// Each tail is modelled as `c1 |y|^-(1+alpha) + c2 |y|^-(1+2 alpha)`
    /// (`y = x - delta`), fitted through the end point and the grid point
    /// nearest half its distance; the model is then integrated to infinity.
    /// Falls back to the leading term alone when the fit is not usable.
    pub fn mass_with_tails(&self) -> f64 {
        let n = self.len();
        if n < 2 {
            return 0.0;
        }
        let mut mass = 0.0;
        for i in 1..n {
            let dx = self.x_values[i] - self.x_values[i - 1];
            mass += 0.5 * dx * (self.f_values[i] + self.f_values[i - 1]);
        }
        mass + self.tail_mass(0) + self.tail_mass(n - 1)
    }

    fn tail_mass(&self, end: usize) -> f64 {
        let alpha = self.params.alpha();
        let delta = self.params.delta();
        let d = (self.x_values[end] - delta).abs();
        let f_end = self.f_values[end];
        let leading = f_end * d / alpha;
        if alpha >= 2.0 || d == 0.0 {
            return leading;
        }
        let half_x = if end == 0 {
            self.x_values[0] + 0.5 * d
        } else {
            self.x_values[end] - 0.5 * d
        };
        let j = self
            .x_values
            .partition_point(|&x| x < half_x)
            .min(self.len() - 1);
        let e = (self.x_values[j] - delta).abs();
        let same_side = (self.x_values[j] - delta) * (self.x_values[end] - delta) > 0.0;
        if !same_side || e >= d || e <= 0.0 {
            return leading;
        }
        // f(y) = c1 y^-(1+a) + c2 y^-(1+2a) through (d, f_end) and (e, f_e)
        let f_e = self.f_values[j];
        let (p1d, p2d) = (d.powf(-1.0 - alpha), d.powf(-1.0 - 2.0 * alpha));
        let (p1e, p2e) = (e.powf(-1.0 - alpha), e.powf(-1.0 - 2.0 * alpha));
        let det = p1d * p2e - p2d * p1e;
        if det == 0.0 {
            return leading;
        }
        let c1 = (f_end * p2e - p2d * f_e) / det;
        let c2 = (p1d * f_e - f_end * p1e) / det;
        let first = c1 * d.powf(-alpha) / alpha;
        let second = c2 * d.powf(-2.0 * alpha) / (2.0 * alpha);
        let tail = first + second;
        if c1 > 0.0 && tail.is_finite() && second.abs() <= 0.5 * first {
            tail
        } else {
            leading
        }
    }
}

/// Distance from the centre beyond which the summed alias images of the
/// density stay below `tol / 4`.
fn alias_radius(params: &StableParams, tol: f64) -> f64 {
    let alpha = params.alpha();
    let gamma = params.gamma();
    let core = gamma * (20.0 + 4.0 * (1.0 / tol).ln().max(0.0).sqrt());
    let skew_shift = if alpha == 1.0 || alpha == 2.0 {
        0.0
    } else {
        (params.beta() * params.omega(1.0)).abs() * gamma
    };
    let power = if alpha < 2.0 {
        // f(y) <= c |y|^-(1+alpha) with c <= 1.6 sin(pi alpha / 2) gamma^alpha;
        // the image sum adds a factor zeta(1 + alpha) <= 1 + 1/alpha.
        let c = 1.6 * (0.5 * PI * alpha).sin() * gamma.powf(alpha);
        (2.0 * c * (1.0 + 1.0 / alpha) / (0.25 * tol)).powf(1.0 / (1.0 + alpha))
    } else {
        0.0
    };
    core.max(power) + 2.0 * skew_shift
}

/// Smallest `K` with `integral_K^inf |phi| dk <= budget`.
fn truncation_point(params: &StableParams, budget: f64) -> f64 {
    let mut k = 1.0 / params.gamma();
    while envelope_remainder(params, k) > budget {
        k *= 1.25;
    }
    k
}

/// Densities on `n_points` uniformly spaced abscissae in `[x_min, x_max]`.
///
/// A trapezoid rule in `k` is summed for all abscissae at once with an FFT.
/// By Poisson summation its only error besides truncation in `k` is the sum
/// of periodic images of the density, so the period is chosen from the
/// power-law tail bound. Values are clipped to be non-negative.
pub fn pdf_grid(
    params: &StableParams,
    x_min: f64,
    x_max: f64,
    n_points: usize,
    tol: f64,
) -> Result<DensityGrid> {
    check_tol(tol)?;
    if !(x_min.is_finite() && x_max.is_finite() && x_min < x_max) {
        return Err(StableError::InvalidGrid(format!(
            "need finite x_min < x_max, got [{x_min}, {x_max}]"
        )));
    }
    if n_points < 2 {
        return Err(StableError::InvalidGrid(format!(
            "need at least 2 points, got {n_points}"
        )));
    }
    let dx = (x_max - x_min) / (n_points - 1) as f64;
    let delta = params.delta();
    let reach = (x_min - delta).abs().max((x_max - delta).abs());
    let period = reach + alias_radius(params, tol);
    let wanted = ((period / dx).ceil() as usize).max(n_points);
    let len = wanted.checked_next_power_of_two().unwrap_or(usize::MAX);
    if len > MAX_FFT_LEN {
        return Err(StableError::Convergence {
            tol,
            estimate: f64::INFINITY,
            evaluations: len,
        });
    }
    let dk = 2.0 * PI / (len as f64 * dx);
    let k_max = truncation_point(params, 0.25 * tol * PI);
    let n_k = (k_max / dk).ceil() as usize + 1;
    if n_k > 8 * MAX_FFT_LEN {
        return Err(StableError::Convergence {
            tol,
            estimate: f64::INFINITY,
            evaluations: n_k,
        });
    }

    // Fold the k samples modulo the transform length; exp(-2 pi i n j / len)
    // is periodic in n, so folding is exact.
    let mut buf = vec![Complex64::new(0.0, 0.0); len];
    for n in 0..n_k {
        let k = n as f64 * dk;
        let lc = params.log_char_fn(k);
        let mut term = Complex64::new(lc.re, lc.im - k * x_min).exp();
        if n == 0 {
            term *= 0.5;
        }
        buf[n % len] += term;
    }
    FftPlanner::new().plan_fft_forward(len).process(&mut buf);

    let x_values: Vec<f64> = (0..n_points)
        .map(|j| if j + 1 == n_points { x_max } else { x_min + j as f64 * dx })
        .collect();
    let f_values: Vec<f64> = buf[..n_points]
        .iter()
        .map(|z| (dk / PI * z.re).max(0.0))
        .collect();
    Ok(DensityGrid {
        x_values,
        f_values,
        params: *params,
        inversion_tolerance: tol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::pdf_at;
    use crate::params::make_params;

    #[test]
    fn gaussian_grid_matches_closed_form() {
        let p = make_params(2.0, 0.0, 1.0, 0.0).unwrap();
        let tol = 1e-8;
        let g = pdf_grid(&p, -5.0, 5.0, 101, tol).unwrap();
        for (x, f) in g.x_values.iter().zip(&g.f_values) {
            let exact = (-x * x / 4.0).exp() / (2.0 * PI.sqrt());
            assert!((f - exact).abs() < tol, "x={x}");
        }
    }

    #[test]
    fn cauchy_grid_matches_closed_form() {
        let p = make_params(1.0, 0.0, 1.0, 0.0).unwrap();
        let tol = 1e-8;
        let g = pdf_grid(&p, -10.0, 10.0, 201, tol).unwrap();
        for (x, f) in g.x_values.iter().zip(&g.f_values) {
            let exact = 1.0 / (PI * (1.0 + x * x));
            assert!((f - exact).abs() < tol, "x={x}: {f} vs {exact}");
        }
    }

    #[test]
    fn grid_agrees_with_pointwise() {
        let p = make_params(1.570, -0.162, 1.0, 0.0).unwrap();
        let tol = 1e-8;
        let g = pdf_grid(&p, -8.0, 8.0, 401, tol).unwrap();
        for i in (0..g.len()).step_by(20) {
            let v = pdf_at(&p, g.x_values[i], tol).unwrap();
            assert!((v - g.f_values[i]).abs() < 2.0 * tol, "x={}", g.x_values[i]);
        }
    }

    #[test]
    fn normalizes_with_tail_correction() {
        let p = make_params(1.570, -0.162, 1.0, 0.0).unwrap();
        let g = pdf_grid(&p, -8.0, 8.0, 401, 1e-8).unwrap();
        assert!((g.mass_with_tails() - 1.0).abs() < 1e-3, "{}", g.mass_with_tails());
    }

    #[test]
    fn rejects_bad_grids() {
        let p = make_params(1.5, 0.0, 1.0, 0.0).unwrap();
        assert!(pdf_grid(&p, 1.0, 1.0, 10, 1e-6).is_err());
        assert!(pdf_grid(&p, 0.0, 1.0, 1, 1e-6).is_err());
    }
}
