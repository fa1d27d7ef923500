//! Normalized application utility functions.
//!
//! Each user's satisfaction with a long-run rate `r` is a function
//! `U(r)` normalized so that `U(0) = 0` and `U` saturates at 1:
//!
//! * **Sigmoidal** (real-time traffic): `U(r) = c * (1/(1 + e^(-a(r-b))) - d)`
//!   with `c = (1 + e^(a*b)) / e^(a*b)` and `d = 1/(1 + e^(a*b))`. The
//!   parameter `b` is the inflection rate (the application's nominal demand)
//!   and `a` controls how sharply utility rises around it.
//! * **Logarithmic** (delay-tolerant traffic): `U(r) = ln(1 + k*r) /
//!   ln(1 + k*r_max)`, clamped to 1 above `r_max`; `k` controls how quickly
//!   marginal utility decays.
//!
//! Evaluation never forms `e^(a*b)` directly: for steep sigmoids (`a*b` of
//! 50 is routine, and far larger values must not overflow) the closed form
//! is rearranged so every exponential has a non-positive argument.
//! `ln U` is computed in log space so it stays finite even where `U`
//! underflows to zero in linear space.

use thiserror::Error;

/// Error raised when a utility function is constructed with an
/// out-of-domain parameter.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum UtilityError {
    #[error("invalid utility parameter {name} = {value}: must be a positive finite number")]
    InvalidParameter { name: &'static str, value: f64 },
}

/// A normalized utility function mapping a nonnegative rate to `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Utility {
    /// S-shaped utility with inflection at rate `b` and steepness `a`.
    /// `c_norm` and `d_norm` are the normalization constants fixed at
    /// construction so that `U(0) = 0` and `U(inf) = 1`.
    Sigmoidal {
        a: f64,
        b: f64,
        c_norm: f64,
        d_norm: f64,
    },
    /// Diminishing-returns utility reaching 1 at `r_max`.
    Logarithmic { k: f64, r_max: f64 },
}

fn require_positive(name: &'static str, value: f64) -> Result<f64, UtilityError> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(UtilityError::InvalidParameter { name, value })
    }
}

impl Utility {
    /// Builds a sigmoidal utility with steepness `a > 0` and inflection
    /// rate `b > 0`, computing the normalization constants.
    pub fn sigmoidal(a: f64, b: f64) -> Result<Self, UtilityError> {
        let a = require_positive("a", a)?;
        let b = require_positive("b", b)?;
        // c = 1 + e^(-a*b) and d = e^(-a*b) / (1 + e^(-a*b)) are the
        // overflow-free rearrangements of the defining constants.
        let q = (-a * b).exp();
        Ok(Utility::Sigmoidal {
            a,
            b,
            c_norm: 1.0 + q,
            d_norm: q / (1.0 + q),
        })
    }

    /// Builds a logarithmic utility with curvature `k > 0` that reaches
    /// full satisfaction at `r_max > 0`.
    pub fn logarithmic(k: f64, r_max: f64) -> Result<Self, UtilityError> {
        let k = require_positive("k", k)?;
        let r_max = require_positive("r_max", r_max)?;
        Ok(Utility::Logarithmic { k, r_max })
    }

    /// Utility at rate `r >= 0`, in `[0, 1]`. `U(0)` is exactly zero and
    /// the logarithmic family is clamped to 1 above `r_max`.
    pub fn value(&self, r: f64) -> f64 {
        assert!(r >= 0.0, "utility evaluated at negative rate {r}");
        match *self {
            Utility::Sigmoidal { a, b, .. } => {
                let x = a * r;
                let z = a * (r - b);
                // 1 - e^(-x), exact near zero.
                let num = -(-x).exp_m1();
                if z <= 0.0 {
                    // e^z * (1 - e^(-x)) / (1 + e^z); every factor is in [0, 1].
                    z.exp() * num / (1.0 + z.exp())
                } else {
                    // (1 - e^(-x)) / (1 + e^(-z)); bounded by 1 from below 1.
                    num / (1.0 + (-z).exp())
                }
            }
            Utility::Logarithmic { k, r_max } => {
                (k * r.min(r_max)).ln_1p() / (k * r_max).ln_1p()
            }
        }
    }

    /// Marginal utility `dU/dr` at rate `r >= 0`, evaluated analytically.
    /// For the logarithmic family the derivative of the unclamped curve is
    /// returned even above `r_max`, where the clamped value is flat.
    pub fn slope(&self, r: f64) -> f64 {
        assert!(r >= 0.0, "utility slope evaluated at negative rate {r}");
        match *self {
            Utility::Sigmoidal { a, c_norm, b, .. } => {
                let z = a * (r - b);
                // sig'(z) = t / (1 + t)^2 with t = e^(-|z|) is symmetric in z.
                let t = (-z.abs()).exp();
                c_norm * a * t / ((1.0 + t) * (1.0 + t))
            }
            Utility::Logarithmic { k, r_max } => k / ((1.0 + k * r) * (k * r_max).ln_1p()),
        }
    }

    /// `ln U(r)`, computed in log space; `-inf` when `U(r) = 0` (that is,
    /// at `r = 0`). Staying in log space keeps the result finite deep in
    /// the sigmoid's left tail where `U` itself underflows.
    pub fn log_value(&self, r: f64) -> f64 {
        assert!(r >= 0.0, "log-utility evaluated at negative rate {r}");
        match *self {
            Utility::Sigmoidal { a, b, .. } => {
                let x = a * r;
                let z = a * (r - b);
                let ln_num = (-(-x).exp_m1()).ln();
                if z <= 0.0 {
                    z + ln_num - z.exp().ln_1p()
                } else {
                    ln_num - (-z).exp().ln_1p()
                }
            }
            Utility::Logarithmic { k, r_max } => {
                let num = (k * r.min(r_max)).ln_1p();
                num.ln() - (k * r_max).ln_1p().ln()
            }
        }
    }

    /// The marginal-to-absolute utility ratio `U'(r) / U(r)`, the quantity
    /// that prices a user's claim on a resource block. Returns `+inf` at
    /// `r = 0` where utility vanishes; computed in a factored form that
    /// stays accurate where naive division would round to `0/0`.
    pub fn rate_ratio(&self, r: f64) -> f64 {
        assert!(r >= 0.0, "utility ratio evaluated at negative rate {r}");
        match *self {
            Utility::Sigmoidal { a, b, c_norm, .. } => {
                let x = a * r;
                let z = a * (r - b);
                let t = (-z.abs()).exp();
                let num = -(-x).exp_m1();
                let top = if z > 0.0 { c_norm * a * t } else { c_norm * a };
                top / ((1.0 + t) * num)
            }
            Utility::Logarithmic { k, r_max } => {
                // ln(1 + k*r_max) cancels between slope and value below the
                // clamp; above it only the value is pinned at 1.
                k / ((1.0 + k * r) * (k * r.min(r_max)).ln_1p())
            }
        }
    }
}

// ---------------------------------------------------------------------------
