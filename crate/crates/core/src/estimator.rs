//! Characteristic-function regression estimator.
//!
//! With `phi_N(k) = (1/N) sum exp(i k X_n)` and `k > 0`,
//!
//! ```text
//! ln(-ln|phi_N(k)|)              = alpha ln k + alpha ln gamma
//! arctan(Im phi_N / Re phi_N) / k = -beta gamma^alpha tan(pi alpha / 2) k^(alpha-1) + delta
//! ```
//!
//! are both linear, so `(alpha, gamma)` and then `(beta, delta)` come from two
//! ordinary least-squares fits. The fits are only well conditioned near
//! `(gamma, delta) = (1, 0)`, so [`normalize_and_fit`] repeatedly rescales the
//! data by the current estimates and refits, composing the affine maps so the
//! result is reported in the original units.

use std::f64::consts::FRAC_PI_2;

use bitflags::bitflags;
use num_complex::Complex64;

use crate::error::{Result, StableError};
use crate::params::StableParams;

/// Half-width of the band around `alpha = 1` where the skewness fit is refused.
pub const ALPHA_ONE_BAND: f64 = 0.02;
/// Samples shorter than this are rejected.
pub const MIN_SAMPLE: usize = 100;
/// Samples shorter than this are fitted but flagged.
pub const SMALL_SAMPLE: usize = 1000;

bitflags! {
    #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
    pub struct FitFlags: u32 {
        const ALPHA_CLAMPED = 1;
        const BETA_CLAMPED = 1 << 1;
        const NEAR_ALPHA_ONE = 1 << 2;
        const DEGENERATE_DATA = 1 << 3;
        const NOT_CONVERGED = 1 << 4;
        const SMALL_SAMPLE = 1 << 5;
        /// The window or series could not be fitted at all.
        const FIT_FAILED = 1 << 6;
    }
}

impl FitFlags {
    /// Short names joined by `|`, empty when no flag is set.
    pub fn label(&self) -> String {
        const NAMES: [(FitFlags, &str); 7] = [
            (FitFlags::ALPHA_CLAMPED, "alpha_clamped"),
            (FitFlags::BETA_CLAMPED, "beta_clamped"),
            (FitFlags::NEAR_ALPHA_ONE, "near_alpha_one"),
            (FitFlags::DEGENERATE_DATA, "degenerate_data"),
            (FitFlags::NOT_CONVERGED, "not_converged"),
            (FitFlags::SMALL_SAMPLE, "small_sample"),
            (FitFlags::FIT_FAILED, "fit_failed"),
        ];
        NAMES
            .iter()
            .filter(|(f, _)| self.contains(*f))
            .map(|(_, n)| *n)
            .collect::<Vec<_>>()
            .join("|")
    }

    /// Flags describing a fit that ended in `err`.
    pub fn from_error(err: &StableError) -> FitFlags {
        let mut flags = FitFlags::FIT_FAILED;
        match err.root() {
            StableError::NearAlphaOne { .. } => flags |= FitFlags::NEAR_ALPHA_ONE,
            StableError::Degenerate(_) | StableError::EmptyData => flags |= FitFlags::DEGENERATE_DATA,
            StableError::AlphaOutOfRange { .. } => flags |= FitFlags::ALPHA_CLAMPED,
            _ => {}
        }
        flags
    }
}

/// Empirical characteristic function on a grid of positive wavenumbers.
#[derive(Debug, Clone, PartialEq)]
pub struct EcfGrid {
    pub k_values: Vec<f64>,
    pub phi_values: Vec<Complex64>,
    /// Sample count; zero for grids built from an analytic characteristic function.
    pub n_data: usize,
}

fn check_k_values(k_values: &[f64]) -> Result<()> {
    if k_values.is_empty() {
        return Err(StableError::InvalidGrid("no wavenumbers".into()));
    }
    if !(k_values[0] > 0.0) {
        return Err(StableError::InvalidGrid(format!(
            "wavenumbers must be positive, first is {}",
            k_values[0]
        )));
    }
    if k_values.iter().any(|k| !k.is_finite()) || k_values.windows(2).any(|w| w[1] <= w[0]) {
        return Err(StableError::InvalidGrid(
            "wavenumbers must be finite and strictly increasing".into(),
        ));
    }
    Ok(())
}

fn ecf_point(data: &[f64], k: f64) -> Complex64 {
    let (mut re, mut im) = (0.0, 0.0);
    for &x in data {
        let (s, c) = (k * x).sin_cos();
        re += c;
        im += s;
    }
    Complex64::new(re, im) / data.len() as f64
}

pub fn empirical_cf(data: &[f64], k_values: &[f64]) -> Result<EcfGrid> {
    if data.is_empty() {
        return Err(StableError::EmptyData);
    }
    check_k_values(k_values)?;
    Ok(EcfGrid {
        k_values: k_values.to_vec(),
        phi_values: k_values.iter().map(|&k| ecf_point(data, k)).collect(),
        n_data: data.len(),
    })
}

/// Noise-free grid from the analytic characteristic function.
pub fn analytic_cf(params: &StableParams, k_values: &[f64]) -> Result<EcfGrid> {
    check_k_values(k_values)?;
    Ok(EcfGrid {
        k_values: k_values.to_vec(),
        phi_values: k_values.iter().map(|&k| params.char_fn(k)).collect(),
        n_data: 0,
    })
}

/// Slope, intercept and RMS residual of `y` on `x`.
fn ols(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    (slope, intercept, rms_residual(x, y, slope, intercept))
}

fn rms_residual(x: &[f64], y: &[f64], slope: f64, intercept: f64) -> f64 {
    let ss: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| (b - slope * a - intercept).powi(2))
        .sum();
    (ss / x.len() as f64).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlphaGammaFit {
    pub alpha: f64,
    pub gamma: f64,
    pub residual: f64,
    /// The raw slope exceeded 2 and was clamped.
    pub clamped: bool,
}

/// Regress `ln(-ln|phi|)` on `ln k`: the slope is alpha and the intercept
/// `alpha ln gamma`. A slope above 2 is clamped and the intercept refitted
/// with the slope held at 2.
pub fn fit_alpha_gamma(ecf: &EcfGrid) -> Result<AlphaGammaFit> {
    if ecf.k_values.len() < 2 {
        return Err(StableError::InvalidGrid("need at least two wavenumbers".into()));
    }
    let mut x = Vec::with_capacity(ecf.k_values.len());
    let mut y = Vec::with_capacity(ecf.k_values.len());
    for (&k, phi) in ecf.k_values.iter().zip(&ecf.phi_values) {
        // -ln|phi| via the squared modulus keeps precision near |phi| = 1
        let minus_log_mod = -0.5 * phi.norm_sqr().ln();
        if !(minus_log_mod > 0.0 && minus_log_mod.is_finite()) {
            return Err(StableError::Degenerate(format!(
                "|phi({k})| = {} is not strictly inside (0, 1)",
                phi.norm()
            )));
        }
        x.push(k.ln());
        y.push(minus_log_mod.ln());
    }
    let (mut alpha, mut intercept, mut residual) = ols(&x, &y);
    if !(alpha > 0.0) {
        return Err(StableError::Degenerate(format!(
            "non-positive alpha slope {alpha}"
        )));
    }
    let clamped = alpha > 2.0;
    if clamped {
        alpha = 2.0;
        intercept = x.iter().zip(&y).map(|(a, b)| b - 2.0 * a).sum::<f64>() / x.len() as f64;
        residual = rms_residual(&x, &y, alpha, intercept);
    }
    Ok(AlphaGammaFit {
        alpha,
        gamma: (intercept / alpha).exp(),
        residual,
        clamped,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BetaDeltaFit {
    pub beta: f64,
    pub delta: f64,
    pub residual: f64,
    pub clamped: bool,
}

/// Regress `arctan(Im phi / Re phi) / k` on `k^(alpha-1)`: the intercept is
/// delta and the slope `-beta gamma^alpha tan(pi alpha / 2)`.
///
/// At `alpha = 2` the slope carries no skewness information; beta is
/// reported as 0 and delta as the mean phase rate.
pub fn fit_beta_delta(ecf: &EcfGrid, alpha: f64, gamma: f64) -> Result<BetaDeltaFit> {
    if (alpha - 1.0).abs() < ALPHA_ONE_BAND {
        return Err(StableError::NearAlphaOne {
            alpha,
            band: ALPHA_ONE_BAND,
        });
    }
    if ecf.k_values.len() < 2 {
        return Err(StableError::InvalidGrid("need at least two wavenumbers".into()));
    }
    let mut u = Vec::with_capacity(ecf.k_values.len());
    let mut z = Vec::with_capacity(ecf.k_values.len());
    for (&k, phi) in ecf.k_values.iter().zip(&ecf.phi_values) {
        if !(phi.re > 0.0) {
            return Err(StableError::BranchCut { k });
        }
        u.push(k.powf(alpha - 1.0));
        z.push((phi.im / phi.re).atan() / k);
    }
    if alpha >= 2.0 {
        let delta = z.iter().sum::<f64>() / z.len() as f64;
        return Ok(BetaDeltaFit {
            beta: 0.0,
            delta,
            residual: rms_residual(&u, &z, 0.0, delta),
            clamped: false,
        });
    }
    let (slope, delta, residual) = ols(&u, &z);
    let raw = -slope / (gamma.powf(alpha) * (FRAC_PI_2 * alpha).tan());
    let beta = raw.clamp(-1.0, 1.0);
    Ok(BetaDeltaFit {
        beta,
        delta,
        residual,
        clamped: beta != raw,
    })
}

/// How the upper end of the regression grid is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KSelection {
    /// Largest `k` (searched on a coarse geometric grid) such that every
    /// smaller grid point has `|phi| >= threshold` and `Re phi > 0`.
    ModulusThreshold(f64),
    /// Fixed upper end, in normalized units.
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimationConfig {
    pub n_k_points: usize,
    pub k_selection: KSelection,
    pub normalization_tol: f64,
    pub max_normalization_iters: usize,
    pub alpha_clamp: bool,
}

impl Default for EstimationConfig {
    fn default() -> Self {
        EstimationConfig {
            n_k_points: 10,
            k_selection: KSelection::ModulusThreshold(0.3),
            normalization_tol: 1e-2,
            max_normalization_iters: 5,
            alpha_clamp: true,
        }
    }
}

impl EstimationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_k_points < 3 {
            return Err(StableError::Domain {
                field: "n_k_points",
                value: self.n_k_points as f64,
                reason: "need at least 3 regression points",
            });
        }
        match self.k_selection {
            KSelection::ModulusThreshold(t) if !(t > 0.0 && t < 1.0) => {
                return Err(StableError::Domain {
                    field: "k_threshold",
                    value: t,
                    reason: "must lie in (0, 1)",
                })
            }
            KSelection::Fixed(k) if !(k > 0.0 && k.is_finite()) => {
                return Err(StableError::Domain {
                    field: "k_max",
                    value: k,
                    reason: "must be positive and finite",
                })
            }
            _ => {}
        }
        if !(self.normalization_tol > 0.0) {
            return Err(StableError::Domain {
                field: "normalization_tol",
                value: self.normalization_tol,
                reason: "must be positive",
            });
        }
        if self.max_normalization_iters == 0 {
            return Err(StableError::Domain {
                field: "max_normalization_iters",
                value: 0.0,
                reason: "need at least one iteration",
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitResult {
    /// Estimates in the units of the input data.
    pub params: StableParams,
    pub alpha_gamma_residual: f64,
    pub beta_delta_residual: f64,
    pub iterations: usize,
    pub flags: FitFlags,
    /// Upper regression wavenumber of the last pass, in normalized units.
    pub k_max: f64,
    pub n_data: usize,
}

/// Data or an exact law, viewed through the affine frame `y = (x - shift) / scale`.
enum Source<'a> {
    Data(&'a [f64]),
    Exact(StableParams),
}

#[derive(Debug, Clone, Copy)]
struct Frame {
    shift: f64,
    scale: f64,
}

enum View {
    Data(Vec<f64>),
    Exact(StableParams),
}

impl View {
    fn new(source: &Source, frame: Frame) -> Result<View> {
        Ok(match source {
            Source::Data(x) => View::Data(x.iter().map(|v| (v - frame.shift) / frame.scale).collect()),
            Source::Exact(p) => View::Exact(p.affine(1.0 / frame.scale, -frame.shift / frame.scale)?),
        })
    }

    fn phi(&self, k: f64) -> Complex64 {
        match self {
            View::Data(y) => ecf_point(y, k),
            View::Exact(p) => p.char_fn(k),
        }
    }

    fn grid(&self, k_values: &[f64]) -> Result<EcfGrid> {
        match self {
            View::Data(y) => empirical_cf(y, k_values),
            View::Exact(p) => analytic_cf(p, k_values),
        }
    }
}

fn select_k_max(view: &View, threshold: f64, n_points: usize) -> Result<f64> {
    let ok = |k: f64| {
        let phi = view.phi(k);
        phi.norm() >= threshold && phi.re > 0.0
    };
    // octaves outward from k = 1, then eighth-octave steps inside the last good octave
    const OCTAVES: i32 = 60;
    let mut best = if ok(1.0) {
        let mut k = 1.0;
        let mut j = 0;
        while ok(2.0 * k) {
            k *= 2.0;
            j += 1;
            if j >= OCTAVES {
                return Err(StableError::Degenerate(
                    "characteristic function does not decay".into(),
                ));
            }
        }
        k
    } else {
        let mut k = 0.5;
        let mut j = 1;
        while !ok(k) {
            k *= 0.5;
            j += 1;
            if j >= OCTAVES {
                return Err(StableError::Degenerate(
                    "characteristic function below threshold at every probe".into(),
                ));
            }
        }
        k
    };
    let base = best;
    for step in 1..8 {
        let k = base * 2f64.powf(step as f64 / 8.0);
        if ok(k) {
            best = k;
        } else {
            break;
        }
    }
    // the rule must also hold on the regression grid itself, which can fall
    // between probes where the phase has already wrapped
    let step = 2f64.powf(-1.0 / 8.0);
    for _ in 0..8 * OCTAVES {
        if regression_grid(best, n_points).into_iter().all(ok) {
            return Ok(best);
        }
        best *= step;
    }
    Err(StableError::Degenerate(
        "no regression grid satisfies the k-selection rule".into(),
    ))
}

fn regression_grid(k_max: f64, n: usize) -> Vec<f64> {
    (1..=n).map(|i| k_max * i as f64 / n as f64).collect()
}

/// Median and a robust scale (half the interquartile range, then the median
/// absolute deviation, then the standard deviation as fallbacks).
fn robust_frame(data: &[f64]) -> Result<(Frame, bool)> {
    if data.iter().all(|&x| x == data[0]) {
        return Err(StableError::Degenerate("sample is constant".into()));
    }
    let mut sorted = data.to_vec();
    sorted.sort_by(f64::total_cmp);
    let quantile = |q: f64| {
        let pos = q * (sorted.len() - 1) as f64;
        let i = pos.floor() as usize;
        let frac = pos - i as f64;
        if i + 1 < sorted.len() {
            sorted[i] * (1.0 - frac) + sorted[i + 1] * frac
        } else {
            sorted[i]
        }
    };
    let median = quantile(0.5);
    let half_iqr = 0.5 * (quantile(0.75) - quantile(0.25));
    if half_iqr > 0.0 {
        return Ok((Frame { shift: median, scale: half_iqr }, false));
    }
    let mut dev: Vec<f64> = data.iter().map(|x| (x - median).abs()).collect();
    dev.sort_by(f64::total_cmp);
    let mad = dev[dev.len() / 2];
    if mad > 0.0 {
        return Ok((Frame { shift: median, scale: mad }, true));
    }
    let n = data.len() as f64;
    let mean = data.iter().sum::<f64>() / n;
    let sd = (data.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n).sqrt();
    if sd > 0.0 {
        return Ok((Frame { shift: median, scale: sd }, true));
    }
    Err(StableError::Degenerate("sample is constant".into()))
}

/// Fit all four parameters to `data` with the normalization loop.
///
/// The first pass works on data centred at the median and divided by a robust
/// scale. Each pass fits `(alpha, gamma)` then `(beta, delta)`; when
/// `|gamma - 1|` and `|delta|` are both within tolerance the loop stops,
/// otherwise the data are mapped `y <- (y - delta) / gamma` and refitted.
pub fn normalize_and_fit(data: &[f64], config: &EstimationConfig) -> Result<FitResult> {
    config.validate()?;
    if data.is_empty() {
        return Err(StableError::EmptyData);
    }
    if data.len() < MIN_SAMPLE {
        return Err(StableError::TooShort {
            needed: MIN_SAMPLE,
            got: data.len(),
        });
    }
    if data.iter().any(|x| !x.is_finite()) {
        return Err(StableError::Degenerate("sample contains non-finite values".into()));
    }
    let (frame, fallback_scale) = robust_frame(data)?;
    let mut flags = FitFlags::empty();
    if fallback_scale {
        flags |= FitFlags::DEGENERATE_DATA;
    }
    if data.len() < SMALL_SAMPLE {
        flags |= FitFlags::SMALL_SAMPLE;
    }
    run_loop(&Source::Data(data), frame, config, flags, data.len())
}

/// The normalization loop driven by an exact characteristic function instead
/// of data. Used for noise-free checks of the regressions.
pub fn normalize_and_fit_exact(params: &StableParams, config: &EstimationConfig) -> Result<FitResult> {
    config.validate()?;
    run_loop(
        &Source::Exact(*params),
        Frame { shift: 0.0, scale: 1.0 },
        config,
        FitFlags::empty(),
        0,
    )
}

fn run_loop(
    source: &Source,
    mut frame: Frame,
    config: &EstimationConfig,
    flags: FitFlags,
    n_data: usize,
) -> Result<FitResult> {
    let max_iters = config.max_normalization_iters;
    for iteration in 1..=max_iters {
        let pass = |e: StableError| e.with_context(format!("normalization pass {iteration}"));
        let view = View::new(source, frame).map_err(pass)?;
        let k_max = match config.k_selection {
            KSelection::ModulusThreshold(t) => select_k_max(&view, t, config.n_k_points).map_err(pass)?,
            KSelection::Fixed(k) => k,
        };
        let ecf = view.grid(&regression_grid(k_max, config.n_k_points)).map_err(pass)?;
        let ag = fit_alpha_gamma(&ecf).map_err(pass)?;
        let mut pass_flags = flags;
        if ag.clamped {
            if !config.alpha_clamp {
                return Err(pass(StableError::AlphaOutOfRange { alpha: ag.alpha }));
            }
            pass_flags |= FitFlags::ALPHA_CLAMPED;
        }
        if (ag.alpha - 1.0).abs() < ALPHA_ONE_BAND {
            pass_flags |= FitFlags::NEAR_ALPHA_ONE;
        }
        let bd = fit_beta_delta(&ecf, ag.alpha, ag.gamma).map_err(pass)?;
        if bd.clamped {
            pass_flags |= FitFlags::BETA_CLAMPED;
        }
        let converged = (ag.gamma - 1.0).abs() <= config.normalization_tol
            && bd.delta.abs() <= config.normalization_tol;
        if converged || iteration == max_iters {
            if !converged {
                pass_flags |= FitFlags::NOT_CONVERGED;
            }
            let local = StableParams::new(ag.alpha, bd.beta, ag.gamma, bd.delta).map_err(pass)?;
            return Ok(FitResult {
                params: local.affine(frame.scale, frame.shift)?,
                alpha_gamma_residual: ag.residual,
                beta_delta_residual: bd.residual,
                iterations: iteration,
                flags: pass_flags,
                k_max,
                n_data,
            });
        }
        frame = Frame {
            shift: frame.shift + frame.scale * bd.delta,
            scale: frame.scale * ag.gamma,
        };
        if !(frame.scale > 0.0 && frame.scale.is_finite() && frame.shift.is_finite()) {
            return Err(StableError::Degenerate("normalization diverged".into()));
        }
    }
    unreachable!("loop returns on its last iteration")
}
