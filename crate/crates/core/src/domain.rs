//! Problem geometry and the forcing catalog.
//!
//! A forcing is a finite sum of separable terms `s(x) * g(t)`. Spatial parts
//! vanish at both walls; temporal parts are either analytic (polynomial,
//! sinusoid, exponential) or a piecewise-linear signal sampled on a uniform
//! grid over `[-T, T]`.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::basis;
use crate::{Error, Result};

/// Tolerance used when checking that spatial profiles vanish at the walls.
pub const BOUNDARY_TOL: f64 = 1e-12;
/// Tolerance for continuity of sampled signals across `t = 0`.
pub const SEAM_CONTINUITY_TOL: f64 = 1e-9;

/// The rectangle `(0, p) x (-T, T)`; the seam is `t = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawDomain", into = "RawDomain")]
pub struct RectDomain {
    p: f64,
    t_max: f64,
}

#[derive(Serialize, Deserialize)]
struct RawDomain {
    p: f64,
    t_max: f64,
}

impl TryFrom<RawDomain> for RectDomain {
    type Error = Error;

    fn try_from(raw: RawDomain) -> Result<Self> {
        RectDomain::new(raw.p, raw.t_max)
    }
}

impl From<RectDomain> for RawDomain {
    fn from(d: RectDomain) -> Self {
        RawDomain { p: d.p, t_max: d.t_max }
    }
}

impl RectDomain {
    pub fn new(p: f64, t_max: f64) -> Result<Self> {
        if !(p.is_finite() && p > 0.0) {
            return Err(Error::InvalidDomain(format!("width p must be finite and > 0, got {p}")));
        }
        if !(t_max.is_finite() && t_max > 0.0) {
            return Err(Error::InvalidDomain(format!("time extent T must be finite and > 0, got {t_max}")));
        }
        Ok(RectDomain { p, t_max })
    }

    #[inline]
    pub fn p(&self) -> f64 {
        self.p
    }

    #[inline]
    pub fn t_max(&self) -> f64 {
        self.t_max
    }

    #[inline]
    pub fn t_min(&self) -> f64 {
        -self.t_max
    }

    pub fn contains(&self, x: f64, t: f64) -> bool {
        (0.0..=self.p).contains(&x) && (-self.t_max..=self.t_max).contains(&t)
    }

    pub fn check(&self, x: f64, t: f64) -> Result<()> {
        if self.contains(x, t) {
            Ok(())
        } else {
            Err(Error::OutOfDomain { x, t })
        }
    }

    pub(crate) fn check_t(&self, t: f64) -> Result<()> {
        if (-self.t_max..=self.t_max).contains(&t) {
            Ok(())
        } else {
            Err(Error::OutOfDomain { x: 0.0, t })
        }
    }
}

/// Spatial factor of a forcing term.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SpatialProfile {
    /// The normalized eigenfunction `X_k(x) = sqrt(2/p) sin(k pi x / p)`.
    SineMode { k: usize },
    /// `amplitude * x (p - x)`.
    PolyBubble { amplitude: f64 },
    /// Piecewise-linear profile on a uniform grid over `[0, p]`, endpoints included.
    Sampled { values: Vec<f64> },
}

impl SpatialProfile {
    pub fn eval(&self, x: f64, p: f64) -> f64 {
        match self {
            SpatialProfile::SineMode { k } => basis::sine_mode(*k, x, p),
            SpatialProfile::PolyBubble { amplitude } => amplitude * x * (p - x),
            SpatialProfile::Sampled { values } => interp_uniform(values, 0.0, p, x),
        }
    }

    /// Interior knots where the profile is not smooth.
    pub fn knots(&self, p: f64) -> Vec<f64> {
        match self {
            SpatialProfile::Sampled { values } if values.len() > 2 => {
                let m = values.len() - 1;
                (1..m).map(|i| p * i as f64 / m as f64).collect()
            }
            _ => Vec::new(),
        }
    }
}

/// Temporal factor of a forcing term.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TemporalProfile {
    /// `sum_k coeffs[k] t^k`.
    Polynomial { coeffs: Vec<f64> },
    /// `amplitude * sin(omega t + phase)`.
    Trig { amplitude: f64, omega: f64, phase: f64 },
    /// `amplitude * exp(rate t)`.
    Exponential { amplitude: f64, rate: f64 },
    /// Piecewise-linear signal on a uniform grid over `[-T, T]`, endpoints included.
    Sampled { values: Vec<f64> },
}

impl TemporalProfile {
    pub fn constant(value: f64) -> Self {
        TemporalProfile::Polynomial { coeffs: alloc::vec![value] }
    }

    pub fn is_analytic(&self) -> bool {
        !matches!(self, TemporalProfile::Sampled { .. })
    }

    /// Highest supported time-derivative order.
    pub fn max_order(&self) -> u8 {
        if self.is_analytic() {
            2
        } else {
            1
        }
    }

    pub fn eval(&self, t: f64, t_max: f64) -> f64 {
        match self {
            TemporalProfile::Polynomial { coeffs } => horner(coeffs, t),
            TemporalProfile::Trig { amplitude, omega, phase } => amplitude * (omega * t + phase).sin(),
            TemporalProfile::Exponential { amplitude, rate } => amplitude * (rate * t).exp(),
            TemporalProfile::Sampled { values } => interp_uniform(values, -t_max, t_max, t),
        }
    }

    /// `d^order g / dt^order` at `t`. Analytic parts are differentiated exactly;
    /// sampled signals use a finite difference of step `cbrt(eps) max(1, |t|)`,
    /// centered where the stencil fits in `[-T, T]` and one-sided otherwise.
    pub fn derivative(&self, t: f64, order: u8, t_max: f64) -> Result<f64> {
        if order == 0 {
            return Ok(self.eval(t, t_max));
        }
        if order > self.max_order() {
            return Err(Error::UnsupportedDerivative { order });
        }
        Ok(match self {
            TemporalProfile::Polynomial { coeffs } => {
                let d = poly_derivative(coeffs, order as usize);
                horner(&d, t)
            }
            TemporalProfile::Trig { amplitude, omega, phase } => {
                let arg = omega * t + phase;
                match order {
                    1 => amplitude * omega * arg.cos(),
                    _ => -amplitude * omega * omega * arg.sin(),
                }
            }
            TemporalProfile::Exponential { amplitude, rate } => amplitude * rate.powi(order as i32) * (rate * t).exp(),
            TemporalProfile::Sampled { .. } => {
                let h = f64::EPSILON.cbrt() * t.abs().max(1.0);
                let g = |s: f64| self.eval(s, t_max);
                if t - h >= -t_max && t + h <= t_max {
                    (g(t + h) - g(t - h)) / (2.0 * h)
                } else if t - h < -t_max {
                    (g(t + h) - g(t)) / h
                } else {
                    (g(t) - g(t - h)) / h
                }
            }
        })
    }

    /// Upper bound of `|g^(order)|` over `[-T, T]`, or `None` when the
    /// derivative is not available.
    pub fn sup_bound(&self, order: u8, t_max: f64) -> Option<f64> {
        if order > self.max_order() {
            return None;
        }
        Some(match self {
            TemporalProfile::Polynomial { coeffs } => poly_derivative(coeffs, order as usize)
                .iter()
                .enumerate()
                .map(|(k, c)| c.abs() * t_max.powi(k as i32))
                .sum(),
            TemporalProfile::Trig { amplitude, omega, .. } => amplitude.abs() * omega.abs().powi(order as i32),
            TemporalProfile::Exponential { amplitude, rate } => {
                amplitude.abs() * rate.abs().powi(order as i32) * (rate.abs() * t_max).exp()
            }
            TemporalProfile::Sampled { values } => {
                if order == 0 {
                    values.iter().fold(0.0, |m, v| m.max(v.abs()))
                } else {
                    let dt = 2.0 * t_max / (values.len().max(2) - 1) as f64;
                    values.windows(2).fold(0.0, |m, w| m.max((w[1] - w[0]).abs() / dt))
                }
            }
        })
    }

    /// Interior knots of a sampled signal inside `[lo, hi]`.
    pub fn knots_in(&self, lo: f64, hi: f64, t_max: f64) -> Vec<f64> {
        match self {
            TemporalProfile::Sampled { values } if values.len() > 2 => {
                let m = values.len() - 1;
                (1..m).map(|i| -t_max + 2.0 * t_max * i as f64 / m as f64).filter(|&k| k > lo && k < hi).collect()
            }
            _ => Vec::new(),
        }
    }

    /// Left and right limits of the signal at `t = 0`.
    fn seam_limits(&self, t_max: f64) -> (f64, f64) {
        match self {
            TemporalProfile::Sampled { values } if values.len() >= 2 => {
                let m = values.len() - 1;
                let dt = 2.0 * t_max / m as f64;
                let s = t_max / dt;
                let i = (s.floor() as usize).min(m - 1);
                let w = s - i as f64;
                let right = values[i] * (1.0 - w) + values[i + 1] * w;
                // limit from below uses the segment ending at or after the seam
                let j = if w == 0.0 && i > 0 { i - 1 } else { i };
                let wl = s - j as f64;
                let left = values[j] * (1.0 - wl) + values[j + 1] * wl;
                (left, right)
            }
            _ => {
                let v = self.eval(0.0, t_max);
                (v, v)
            }
        }
    }

    fn parameters_finite(&self) -> bool {
        match self {
            TemporalProfile::Polynomial { coeffs } => coeffs.iter().all(|c| c.is_finite()),
            TemporalProfile::Trig { amplitude, omega, phase } => {
                amplitude.is_finite() && omega.is_finite() && phase.is_finite()
            }
            TemporalProfile::Exponential { amplitude, rate } => amplitude.is_finite() && rate.is_finite(),
            TemporalProfile::Sampled { values } => values.iter().all(|v| v.is_finite()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForcingTerm {
    pub spatial: SpatialProfile,
    pub temporal: TemporalProfile,
}

impl ForcingTerm {
    pub fn new(spatial: SpatialProfile, temporal: TemporalProfile) -> Self {
        ForcingTerm { spatial, temporal }
    }
}

/// Right-hand side `f(x, t)`; an empty term list is the zero forcing.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Forcing {
    #[serde(default)]
    pub terms: Vec<ForcingTerm>,
    /// Claimed Hoelder exponent of `df/dx`, in `(0, 1)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub smoothness_alpha: Option<f64>,
}

impl Forcing {
    pub fn zero() -> Self {
        Forcing::default()
    }

    pub fn new(terms: Vec<ForcingTerm>) -> Self {
        Forcing { terms, smoothness_alpha: None }
    }

    pub fn single(spatial: SpatialProfile, temporal: TemporalProfile) -> Self {
        Forcing::new(alloc::vec![ForcingTerm::new(spatial, temporal)])
    }

    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.smoothness_alpha = Some(alpha);
        self
    }

    /// Term-wise concatenation, i.e. the forcing `self + other`.
    pub fn plus(&self, other: &Forcing) -> Forcing {
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        Forcing { terms, smoothness_alpha: self.smoothness_alpha.or(other.smoothness_alpha) }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Highest time-derivative order every term supports.
    pub fn max_order(&self) -> u8 {
        self.terms.iter().map(|t| t.temporal.max_order()).min().unwrap_or(2)
    }

    pub fn supports_order(&self, order: u8) -> bool {
        order <= self.max_order()
    }

    /// Largest mode index if every spatial part is a sine mode.
    pub fn band_limit(&self) -> Option<usize> {
        let mut band = 0;
        for term in &self.terms {
            match term.spatial {
                SpatialProfile::SineMode { k } => band = band.max(k),
                _ => return None,
            }
        }
        Some(band)
    }
}

/// `f(x, t)`; exact for analytic parts, linear interpolation for sampled ones.
pub fn eval_f(forcing: &Forcing, domain: &RectDomain, x: f64, t: f64) -> Result<f64> {
    eval_f_dt(forcing, domain, x, t, 0)
}

/// `d^order f / dt^order (x, t)` for `order <= 2`.
pub fn eval_f_dt(forcing: &Forcing, domain: &RectDomain, x: f64, t: f64, order: u8) -> Result<f64> {
    domain.check(x, t)?;
    if order > 2 {
        return Err(Error::UnsupportedDerivative { order });
    }
    let mut sum = 0.0;
    for term in &forcing.terms {
        let s = term.spatial.eval(x, domain.p());
        sum += s * term.temporal.derivative(t, order, domain.t_max())?;
    }
    Ok(sum)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ViolationCode {
    BoundaryNonzero,
    SeamDiscontinuous,
    SmoothnessRange,
    SmoothnessUnsupported,
    TooFewSamples,
    InvalidParameter,
}

impl ViolationCode {
    pub fn as_str(&self) -> &'static str {
        match self {
            ViolationCode::BoundaryNonzero => "BOUNDARY_NONZERO",
            ViolationCode::SeamDiscontinuous => "SEAM_DISCONTINUOUS",
            ViolationCode::SmoothnessRange => "SMOOTHNESS_RANGE",
            ViolationCode::SmoothnessUnsupported => "SMOOTHNESS_UNSUPPORTED",
            ViolationCode::TooFewSamples => "TOO_FEW_SAMPLES",
            ViolationCode::InvalidParameter => "INVALID_PARAMETER",
        }
    }
}

impl fmt::Display for ViolationCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub code: ViolationCode,
    /// Index of the offending term, if the violation is term-specific.
    pub term: Option<usize>,
    pub message: String,
}

impl Violation {
    fn new(code: ViolationCode, term: Option<usize>, message: String) -> Self {
        Violation { code, term, message }
    }
}

/// Checks the forcing against the hypotheses the solver relies on. Never
/// fails; an empty list means the forcing is accepted.
pub fn validate_compat(forcing: &Forcing, domain: &RectDomain) -> Vec<Violation> {
    use ViolationCode::*;

    let mut out = Vec::new();
    let mut has_sampled_space = false;
    for (i, term) in forcing.terms.iter().enumerate() {
        let at = Some(i);
        match &term.spatial {
            SpatialProfile::SineMode { k } => {
                if *k == 0 {
                    out.push(Violation::new(InvalidParameter, at, "sine mode index must be >= 1".into()));
                }
            }
            SpatialProfile::PolyBubble { amplitude } => {
                if !amplitude.is_finite() {
                    out.push(Violation::new(InvalidParameter, at, "bubble amplitude is not finite".into()));
                }
            }
            SpatialProfile::Sampled { values } => {
                has_sampled_space = true;
                if values.len() < 2 {
                    out.push(Violation::new(
                        TooFewSamples,
                        at,
                        format!("spatial profile needs >= 2 samples, got {}", values.len()),
                    ));
                } else if values.iter().any(|v| !v.is_finite()) {
                    out.push(Violation::new(InvalidParameter, at, "spatial samples must be finite".into()));
                } else {
                    let (first, last) = (values[0], values[values.len() - 1]);
                    if first.abs() > BOUNDARY_TOL || last.abs() > BOUNDARY_TOL {
                        out.push(Violation::new(
                            BoundaryNonzero,
                            at,
                            format!("spatial profile must vanish at x = 0 and x = p (got {first} and {last})"),
                        ));
                    }
                }
            }
        }

        let temporal = &term.temporal;
        if !temporal.parameters_finite() {
            out.push(Violation::new(InvalidParameter, at, "temporal parameters must be finite".into()));
            continue;
        }
        match temporal {
            TemporalProfile::Sampled { values } if values.len() < 2 => {
                out.push(Violation::new(
                    TooFewSamples,
                    at,
                    format!("temporal signal needs >= 2 samples, got {}", values.len()),
                ));
                continue;
            }
            TemporalProfile::Exponential { rate, .. } if rate.abs() * domain.t_max() > 700.0 => {
                out.push(Violation::new(
                    InvalidParameter,
                    at,
                    format!("exponential rate {rate} overflows over [-T, T]"),
                ));
            }
            _ => {}
        }
        let (left, right) = temporal.seam_limits(domain.t_max());
        if (left - right).abs() > SEAM_CONTINUITY_TOL {
            out.push(Violation::new(
                SeamDiscontinuous,
                at,
                format!("temporal signal jumps by {} across t = 0", right - left),
            ));
        }
    }

    if let Some(alpha) = forcing.smoothness_alpha {
        if !(alpha > 0.0 && alpha < 1.0) {
            out.push(Violation::new(
                SmoothnessRange,
                None,
                format!("smoothness exponent must lie in (0, 1), got {alpha}"),
            ));
        } else if has_sampled_space {
            out.push(Violation::new(
                SmoothnessUnsupported,
                None,
                "piecewise-linear spatial samples have a discontinuous x-derivative; \
                 no Hoelder exponent can be claimed"
                    .into(),
            ));
        }
    }
    out
}

pub(crate) fn horner(coeffs: &[f64], t: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, c| acc * t + c)
}

pub(crate) fn poly_derivative(coeffs: &[f64], order: usize) -> Vec<f64> {
    let mut d: Vec<f64> = coeffs.to_vec();
    for _ in 0..order {
        if d.len() <= 1 {
            return Vec::new();
        }
        d = d.iter().enumerate().skip(1).map(|(k, c)| c * k as f64).collect();
    }
    d
}

/// Linear interpolation of samples on a uniform grid over `[lo, hi]`.
pub(crate) fn interp_uniform(values: &[f64], lo: f64, hi: f64, x: f64) -> f64 {
    match values.len() {
        0 => 0.0,
        1 => values[0],
        len => {
            let m = len - 1;
            let s = ((x - lo) / (hi - lo) * m as f64).clamp(0.0, m as f64);
            let i = (s.floor() as usize).min(m - 1);
            let w = s - i as f64;
            values[i] * (1.0 - w) + values[i + 1] * w
        }
    }
}
