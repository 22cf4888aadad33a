//! Stable parameter domain, the characteristic function and tail relations.
//!
//! The characteristic function is
//!
//! ```text
//! phi(k) = exp{ i*delta*k - |gamma*k|^alpha * [1 + i*beta*sgn(k)*omega(k, alpha)] }
//! omega  = tan(pi*alpha/2)        (alpha != 1)
//!        = (2/pi) * ln|k|          (alpha == 1)
//! ```
//!
//! Note the `+ i*beta` sign. Many references write `1 - i*beta*...`; with the
//! form used here a positive `beta` puts the heavier tail on the left for
//! `alpha != 1` and on the right for `alpha == 1`.

use std::f64::consts::{FRAC_2_PI, FRAC_PI_2};

use num_complex::Complex64;

use crate::error::{Result, StableError};

/// The quadruple `(alpha, beta, gamma, delta)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StableParams {
    alpha: f64,
    beta: f64,
    gamma: f64,
    delta: f64,
}

impl StableParams {
    pub fn new(alpha: f64, beta: f64, gamma: f64, delta: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 2.0) {
            return Err(StableError::Domain {
                field: "alpha",
                value: alpha,
                reason: "must lie in (0, 2]",
            });
        }
        if !(-1.0..=1.0).contains(&beta) {
            return Err(StableError::Domain {
                field: "beta",
                value: beta,
                reason: "must lie in [-1, 1]",
            });
        }
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(StableError::Domain {
                field: "gamma",
                value: gamma,
                reason: "must be positive and finite",
            });
        }
        if !delta.is_finite() {
            return Err(StableError::Domain {
                field: "delta",
                value: delta,
                reason: "must be finite",
            });
        }
        Ok(StableParams {
            alpha,
            beta,
            gamma,
            delta,
        })
    }

    /// Standard form with `gamma = 1`, `delta = 0`.
    pub fn standard(alpha: f64, beta: f64) -> Result<Self> {
        Self::new(alpha, beta, 1.0, 0.0)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn with_scale_location(&self, gamma: f64, delta: f64) -> Result<Self> {
        Self::new(self.alpha, self.beta, gamma, delta)
    }

    /// Parameters of `scale * X + shift` where `X` has these parameters.
    ///
    /// A negative `scale` mirrors the law and flips the sign of `beta`.
    pub fn affine(&self, scale: f64, shift: f64) -> Result<Self> {
        if scale == 0.0 || !scale.is_finite() {
            return Err(StableError::Domain {
                field: "scale",
                value: scale,
                reason: "affine scale must be non-zero and finite",
            });
        }
        let beta = scale.signum() * self.beta;
        let gamma = scale.abs() * self.gamma;
        let mut delta = scale * self.delta + shift;
        if self.alpha == 1.0 {
            delta -= FRAC_2_PI * beta * gamma * scale.abs().ln();
        }
        Self::new(self.alpha, beta, gamma, delta)
    }

    /// `omega(k, alpha)`; exactly zero at `alpha = 2`.
    pub fn omega(&self, k: f64) -> f64 {
        if self.alpha == 1.0 {
            FRAC_2_PI * k.abs().ln()
        } else if self.alpha == 2.0 {
            0.0
        } else {
            (FRAC_PI_2 * self.alpha).tan()
        }
    }

    /// The log of the characteristic function, `ln phi(k)`.
    pub fn log_char_fn(&self, k: f64) -> Complex64 {
        if k == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        let scaled = (self.gamma * k).abs().powf(self.alpha);
        let skew = self.beta * k.signum() * self.omega(k);
        Complex64::new(-scaled, self.delta * k - scaled * skew)
    }

    pub fn char_fn(&self, k: f64) -> Complex64 {
        self.log_char_fn(k).exp()
    }
}

/// Free-function form of [`StableParams::char_fn`].
pub fn char_fn(params: &StableParams, k: f64) -> Complex64 {
    params.char_fn(k)
}

/// Validating constructor, free-function form.
pub fn make_params(alpha: f64, beta: f64, gamma: f64, delta: f64) -> Result<StableParams> {
    StableParams::new(alpha, beta, gamma, delta)
}

/// Power-law tail amplitudes `(c_plus, c_minus)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailCoefficients {
    c_plus: f64,
    c_minus: f64,
}

impl TailCoefficients {
    pub fn new(c_plus: f64, c_minus: f64) -> Result<Self> {
        if !(c_plus > 0.0 && c_plus.is_finite()) {
            return Err(StableError::Domain {
                field: "c_plus",
                value: c_plus,
                reason: "must be positive and finite",
            });
        }
        if !(c_minus > 0.0 && c_minus.is_finite()) {
            return Err(StableError::Domain {
                field: "c_minus",
                value: c_minus,
                reason: "must be positive and finite",
            });
        }
        Ok(TailCoefficients { c_plus, c_minus })
    }

    pub fn c_plus(&self) -> f64 {
        self.c_plus
    }

    pub fn c_minus(&self) -> f64 {
        self.c_minus
    }
}

/// Tail-ratio skewness `(c+ - c-) / (c+ + c-)`.
pub fn beta_from_tails(tails: &TailCoefficients) -> f64 {
    let ratio = (tails.c_plus - tails.c_minus) / (tails.c_plus + tails.c_minus);
    ratio.clamp(-1.0, 1.0)
}

/// Density decay exponent `1 + alpha`; undefined at the Gaussian corner.
pub fn tail_exponent(params: &StableParams) -> Result<f64> {
    if params.alpha >= 2.0 {
        return Err(StableError::Domain {
            field: "alpha",
            value: params.alpha,
            reason: "alpha = 2 has no power-law tail",
        });
    }
    Ok(1.0 + params.alpha)
}
