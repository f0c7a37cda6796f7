//! Symmetric link families and the Gaussian-mixture integrals built on them.
//!
//! Both supported inverse links are scale mixtures of normal cdfs, so every
//! population quantity used by the asymptotics reduces to one of two
//! integrals against a normal density:
//!
//! * `mixture_integral(b0, v)  = E[h(b0 + W)]`, `W ~ N(0, v)`
//! * `population_mean(b0, v)   = E[H(b0 + W)]`
//!
//! The mixing density itself is never evaluated. Both integrals are computed
//! with Gauss–Hermite quadrature centred on the product of the normal kernel
//! and a normal approximation of `h` (exact for probit), which keeps full
//! double precision whether `v` is tiny or large compared to the spread of
//! `h`.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::GaussHermite;

pub const DEFAULT_QUADRATURE_NODES: usize = 128;

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;
const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Below this argument the normal cdf is taken from its asymptotic series.
const PROBIT_TAIL: f64 = -37.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LinkKind {
    Probit,
    Logit,
}

impl fmt::Display for LinkKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LinkKind::Probit => f.write_str("probit"),
            LinkKind::Logit => f.write_str("logit"),
        }
    }
}

impl std::str::FromStr for LinkKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "probit" => Ok(LinkKind::Probit),
            "logit" | "logistic" => Ok(LinkKind::Logit),
            other => Err(Error::domain(format!("unknown link '{other}'"))),
        }
    }
}

/// An inverse link `H` with density `h`, plus the quadrature size used for
/// the mixture integrals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LinkFamily {
    pub kind: LinkKind,
    #[serde(default = "default_nodes")]
    pub quadrature_nodes: usize,
}

fn default_nodes() -> usize {
    DEFAULT_QUADRATURE_NODES
}

impl From<LinkKind> for LinkFamily {
    fn from(kind: LinkKind) -> Self {
        Self::new(kind)
    }
}

impl fmt::Display for LinkFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.kind.fmt(f)
    }
}

impl LinkFamily {
    pub fn new(kind: LinkKind) -> Self {
        Self {
            kind,
            quadrature_nodes: DEFAULT_QUADRATURE_NODES,
        }
    }

    pub fn probit() -> Self {
        Self::new(LinkKind::Probit)
    }

    pub fn logit() -> Self {
        Self::new(LinkKind::Logit)
    }

    pub fn with_nodes(mut self, nodes: usize) -> Self {
        self.quadrature_nodes = nodes.max(1);
        self
    }

    /// `H(t)`, rejecting non-finite arguments.
    pub fn cdf(&self, t: f64) -> Result<f64> {
        if !t.is_finite() {
            return Err(Error::domain(format!("link cdf argument must be finite, got {t}")));
        }
        Ok(self.cdf_unchecked(t))
    }

    #[inline]
    pub(crate) fn cdf_unchecked(&self, t: f64) -> f64 {
        match self.kind {
            LinkKind::Probit => normal_cdf(t),
            LinkKind::Logit => logistic(t),
        }
    }

    /// The density `h(t) = H'(t)`.
    #[inline]
    pub fn density(&self, t: f64) -> f64 {
        match self.kind {
            LinkKind::Probit => normal_pdf(t),
            LinkKind::Logit => logistic_density(t),
        }
    }

    /// `ln h(t)`, finite for every finite `t`.
    #[inline]
    fn ln_density(&self, t: f64) -> f64 {
        match self.kind {
            LinkKind::Probit => -0.5 * t * t - LN_SQRT_2PI,
            LinkKind::Logit => {
                let a = t.abs();
                -a - 2.0 * (-a).exp().ln_1p()
            }
        }
    }

    /// `H^{-1}(p)` for `p` in (0, 1).
    pub fn quantile(&self, p: f64) -> Result<f64> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::domain(format!("quantile needs p in (0,1), got {p}")));
        }
        Ok(match self.kind {
            LinkKind::Probit => normal_quantile(p),
            LinkKind::Logit => (p / (1.0 - p)).ln(),
        })
    }

    /// Variance of the distribution with density `h`.
    pub fn variance(&self) -> f64 {
        match self.kind {
            LinkKind::Probit => 1.0,
            LinkKind::Logit => PI * PI / 3.0,
        }
    }

    /// `E[h(beta0 + W)]` for `W ~ N(0, v)`; equals `h(beta0)` at `v = 0`.
    ///
    /// This is the scale-mixture integral behind both proportionality
    /// constants: `c1` uses the true link with `v = gamma' Sigma gamma`, `c2`
    /// the working link with `v = beta' Sigma_11 beta`.
    pub fn mixture_integral(&self, beta0: f64, v: f64) -> Result<f64> {
        check_mixture_args(beta0, v)?;
        if v == 0.0 {
            return Ok(self.density(beta0));
        }
        let frame = ProductFrame::new(self.variance(), beta0, v);
        let rule = GaussHermite::cached(self.quadrature_nodes);
        let total: f64 = rule
            .iter()
            .map(|(x, w)| {
                let t = frame.centre + frame.scale * x;
                w * (x * x + frame.ln_kernel(t) + self.ln_density(t)).exp()
            })
            .sum();
        Ok(total * frame.scale)
    }

    /// `E[H(beta0 + W)]` for `W ~ N(0, v)`; equals `H(beta0)` at `v = 0`.
    ///
    /// Split as `Phi(beta0 / sqrt(v + s^2))` plus the integral of the bounded
    /// remainder `H(t) - Phi(t / s)`, where `s^2` is the variance of `h`. The
    /// remainder vanishes for probit, leaving the closed form.
    pub fn population_mean(&self, beta0: f64, v: f64) -> Result<f64> {
        check_mixture_args(beta0, v)?;
        if v == 0.0 {
            return Ok(self.cdf_unchecked(beta0));
        }
        let tau2 = self.variance();
        let head = normal_cdf(beta0 / (v + tau2).sqrt());
        if self.kind == LinkKind::Probit {
            return Ok(head);
        }
        let tau = tau2.sqrt();
        let frame = ProductFrame::new(tau2, beta0, v);
        let rule = GaussHermite::cached(self.quadrature_nodes);
        let tail: f64 = rule
            .iter()
            .map(|(x, w)| {
                let t = frame.centre + frame.scale * x;
                let remainder = self.cdf_unchecked(t) - normal_cdf(t / tau);
                w * (x * x + frame.ln_kernel(t)).exp() * remainder
            })
            .sum();
        Ok(head + tail * frame.scale)
    }

    /// Per-observation log-likelihood and its first two derivatives with
    /// respect to the linear predictor.
    #[inline]
    pub(crate) fn loglik_derivatives(&self, y: f64, eta: f64) -> (f64, f64, f64) {
        let positive = y > 0.5;
        match self.kind {
            LinkKind::Logit => {
                let mu = logistic(eta);
                let ll = if positive { -softplus(-eta) } else { -softplus(eta) };
                (ll, y - mu, -mu * (1.0 - mu))
            }
            LinkKind::Probit => {
                // Flip the sign so both classes reduce to ln Phi(u).
                let (u, sign) = if positive { (eta, 1.0) } else { (-eta, -1.0) };
                let (ln_cdf, mills) = normal_ln_cdf_and_mills(u);
                (ln_cdf, sign * mills, -mills * (mills + u))
            }
        }
    }
}

fn check_mixture_args(beta0: f64, v: f64) -> Result<()> {
    if !beta0.is_finite() {
        return Err(Error::domain(format!("beta0 must be finite, got {beta0}")));
    }
    if !v.is_finite() || v < 0.0 {
        return Err(Error::domain(format!("variance must be finite and >= 0, got {v}")));
    }
    Ok(())
}

/// Change of variables `t = centre + scale * x` matching the product of
/// `N(beta0, v)` with `N(0, tau2)`.
struct ProductFrame {
    centre: f64,
    scale: f64,
    beta0: f64,
    v: f64,
}

impl ProductFrame {
    fn new(tau2: f64, beta0: f64, v: f64) -> Self {
        let s2 = v * tau2 / (v + tau2);
        Self {
            centre: beta0 * tau2 / (v + tau2),
            scale: (2.0 * s2).sqrt(),
            beta0,
            v,
        }
    }

    /// `ln phi(t; beta0, v)`.
    #[inline]
    fn ln_kernel(&self, t: f64) -> f64 {
        let d = t - self.beta0;
        -0.5 * d * d / self.v - 0.5 * self.v.ln() - LN_SQRT_2PI
    }
}

#[inline]
pub fn normal_pdf(t: f64) -> f64 {
    FRAC_1_SQRT_2PI * (-0.5 * t * t).exp()
}

/// Density of `N(mean, var)` at `x`.
#[inline]
pub fn normal_pdf_with(x: f64, mean: f64, var: f64) -> f64 {
    let d = x - mean;
    (-0.5 * d * d / var).exp() / (2.0 * PI * var).sqrt()
}

#[inline]
pub fn normal_cdf(t: f64) -> f64 {
    0.5 * libm::erfc(-t * FRAC_1_SQRT_2)
}

pub fn normal_quantile(p: f64) -> f64 {
    use statrs::distribution::{ContinuousCDF, Normal};
    let x = Normal::standard().inverse_cdf(p);
    if !x.is_finite() {
        return x;
    }
    // One Halley step against the accurate cdf.
    let r = (normal_cdf(x) - p) / normal_pdf(x);
    if r.is_finite() {
        x - r / (1.0 + 0.5 * x * r)
    } else {
        x
    }
}

/// `(ln Phi(u), phi(u) / Phi(u))`, accurate far into the lower tail.
#[inline]
fn normal_ln_cdf_and_mills(u: f64) -> (f64, f64) {
    if u >= PROBIT_TAIL {
        let cdf = normal_cdf(u);
        (cdf.ln(), normal_pdf(u) / cdf)
    } else {
        // Phi(u) = phi(u)/(-u) * (1 - 1/u^2 + 3/u^4 - 15/u^6 + 105/u^8 - ...)
        let z = 1.0 / (u * u);
        let series = 1.0 - z * (1.0 - z * (3.0 - z * (15.0 - z * 105.0)));
        let ln_cdf = -0.5 * u * u - LN_SQRT_2PI - (-u).ln() + series.ln();
        (ln_cdf, -u / series)
    }
}

#[inline]
pub fn logistic(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

/// `h(t) = sech^2(t/2) / 4`, written as `e / (1 + e)^2` with `e = exp(-|t|)`
/// so nothing overflows.
#[inline]
pub fn logistic_density(t: f64) -> f64 {
    let e = (-t.abs()).exp();
    e / ((1.0 + e) * (1.0 + e))
}

/// `ln(1 + exp(t))`.
#[inline]
fn softplus(t: f64) -> f64 {
    if t > 0.0 {
        t + (-t).exp().ln_1p()
    } else {
        t.exp().ln_1p()
    }
}
