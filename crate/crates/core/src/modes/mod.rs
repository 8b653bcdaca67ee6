//! Per-mode solution of the conjugated ODE pair.
//!
//! Mode `n` of the solution is `alpha_n(t)` for `t >= 0`, solving
//! `alpha'' + lambda^2 alpha = f_n`, and `beta_n(t)` for `t <= 0`, solving
//! `beta' - lambda^2 beta = f_n`:
//!
//! ```text
//!   alpha(t) = a cos(lambda t) + b sin(lambda t) + (1/lambda) int_0^t f_n(tau) sin(lambda (t - tau)) dtau
//!   beta(t)  = c exp(lambda^2 t) - int_t^0 f_n(tau) exp(lambda^2 (t - tau)) dtau
//! ```
//!
//! Matching value, first and second derivative at `t = 0` fixes
//!
//! ```text
//!   a = c = ((1 - lambda^2) f_n(0) - f_n'(0)) / (lambda^2 (lambda^2 + 1))
//!   b     = (2 f_n(0) - f_n'(0)) / (lambda (lambda^2 + 1))
//! ```
//!
//! Time derivatives are evaluated in their integrated-by-parts closed forms
//! ([`DerivativeForm`]); each also has an independent route through the mode
//! ODEs, and the printed variants of three of those forms are kept so their
//! misprints can be measured.

mod kernel;

use alloc::sync::Arc;

use num_complex::Complex64;
#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::basis::{Eigenpair, ModeForcing};
use crate::quadrature::{GaussLegendre, NODES_PER_PANEL};
use crate::{Error, Result};

/// Tolerance of the seam identities every mode must satisfy.
pub const SEAM_IDENTITY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeCoefficients {
    /// Amplitude of `cos(lambda t)`.
    pub a: f64,
    /// Amplitude of `sin(lambda t)`.
    pub b: f64,
    /// Amplitude of `exp(lambda^2 t)`.
    pub c: f64,
}

impl ModeCoefficients {
    pub const ZERO: ModeCoefficients = ModeCoefficients { a: 0.0, b: 0.0, c: 0.0 };
}

/// Seam-matching coefficients for `f_n(0)`, `f_n'(0)` and `lambda > 0`.
pub fn mode_coefficients(f_n0: f64, fp_n0: f64, lambda: f64) -> ModeCoefficients {
    let l2 = lambda * lambda;
    let a = ((1.0 - l2) * f_n0 - fp_n0) / (l2 * (l2 + 1.0));
    let b = (2.0 * f_n0 - fp_n0) / (lambda * (l2 + 1.0));
    ModeCoefficients { a, b, c: a }
}

/// `(1/lambda) int_0^t f_n(tau) sin(lambda (t - tau)) dtau` for `0 <= t <= T`.
pub fn duhamel_hyp(samples: &ModeForcing, lambda: f64, t: f64, tol: f64) -> Result<f64> {
    duhamel_hyp_dt(samples, lambda, t, 0, tol)
}

/// [`duhamel_hyp`] with `f_n` replaced by its derivative of order `order`.
pub fn duhamel_hyp_dt(samples: &ModeForcing, lambda: f64, t: f64, order: u8, tol: f64) -> Result<f64> {
    check_plus(t, samples.t_max())?;
    let rule = GaussLegendre::new(NODES_PER_PANEL);
    let j = kernel::mode_conv(samples, &rule, Complex64::new(0.0, lambda), t, order, tol * lambda)?;
    Ok(j.im / lambda)
}

/// `-int_t^0 f_n(tau) exp(lambda^2 (t - tau)) dtau` for `-T <= t <= 0`.
pub fn duhamel_par(samples: &ModeForcing, lambda: f64, t: f64, tol: f64) -> Result<f64> {
    duhamel_par_dt(samples, lambda, t, 0, tol)
}

/// [`duhamel_par`] with `f_n` replaced by its derivative of order `order`.
pub fn duhamel_par_dt(samples: &ModeForcing, lambda: f64, t: f64, order: u8, tol: f64) -> Result<f64> {
    check_minus(t, samples.t_max())?;
    let rule = GaussLegendre::new(NODES_PER_PANEL);
    let j = kernel::mode_conv(samples, &rule, Complex64::new(lambda * lambda, 0.0), t, order, tol)?;
    Ok(j.re)
}

fn check_plus(t: f64, t_max: f64) -> Result<()> {
    if (0.0..=t_max).contains(&t) {
        Ok(())
    } else {
        Err(Error::OutOfDomain { x: f64::NAN, t })
    }
}

fn check_minus(t: f64, t_max: f64) -> Result<()> {
    if (-t_max..=0.0).contains(&t) {
        Ok(())
    } else {
        Err(Error::OutOfDomain { x: f64::NAN, t })
    }
}

/// Solution fields that have a per-mode amplitude.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Field {
    U,
    Ut,
    Utt,
    Uxx,
}

impl Field {
    pub const ALL: [Field; 4] = [Field::U, Field::Ut, Field::Utt, Field::Uxx];

    pub fn name(&self) -> &'static str {
        match self {
            Field::U => "u",
            Field::Ut => "u_t",
            Field::Utt => "u_tt",
            Field::Uxx => "u_xx",
        }
    }
}

/// Which half of the rectangle a mode amplitude belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Region {
    /// Hyperbolic half, `t >= 0`.
    Plus,
    /// Parabolic half, `t <= 0`.
    Minus,
}

/// Time-derivative expressions for the mode amplitudes, in the order the
/// closed-form solution derives them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DerivativeForm {
    /// `alpha'`, cosine-kernel integral of `f_n`.
    AlphaDt,
    /// `beta'`, exponential-kernel integral of `f_n'`.
    BetaDt,
    /// `alpha''`, sine-kernel integral of `f_n''`.
    AlphaDtt,
    /// `u_xx` amplitude on the hyperbolic side.
    UxxPlus,
    /// `u_xx` amplitude on the parabolic side.
    UxxMinus,
    /// `beta''`, exponential-kernel integral of `f_n''`.
    BetaDtt,
}

impl DerivativeForm {
    pub const ALL: [DerivativeForm; 6] = [
        DerivativeForm::AlphaDt,
        DerivativeForm::BetaDt,
        DerivativeForm::AlphaDtt,
        DerivativeForm::UxxPlus,
        DerivativeForm::UxxMinus,
        DerivativeForm::BetaDtt,
    ];

    pub fn region(&self) -> Region {
        match self {
            DerivativeForm::AlphaDt | DerivativeForm::AlphaDtt | DerivativeForm::UxxPlus => Region::Plus,
            _ => Region::Minus,
        }
    }

    /// Whether the printed expression differs from the derived one.
    pub fn has_misprint(&self) -> bool {
        matches!(self, DerivativeForm::AlphaDt | DerivativeForm::UxxPlus | DerivativeForm::BetaDtt)
    }

    /// Highest derivative of `f_n` the closed form integrates.
    pub fn forcing_order(&self) -> u8 {
        match self {
            DerivativeForm::AlphaDt => 0,
            DerivativeForm::BetaDt | DerivativeForm::UxxMinus => 1,
            DerivativeForm::AlphaDtt | DerivativeForm::UxxPlus | DerivativeForm::BetaDtt => 2,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            DerivativeForm::AlphaDt => "alpha_dt",
            DerivativeForm::BetaDt => "beta_dt",
            DerivativeForm::AlphaDtt => "alpha_dtt",
            DerivativeForm::UxxPlus => "uxx_plus",
            DerivativeForm::UxxMinus => "uxx_minus",
            DerivativeForm::BetaDtt => "beta_dtt",
        }
    }
}

/// How the constant prefactors of a derivative expression are formed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    /// From the stored coefficients `a`, `b`, `c`; what evaluation uses.
    Coefficients,
    /// Expanded in `f_n(0)`, `f_n'(0)`, with the misprints corrected.
    Expanded,
    /// Expanded as printed, misprints included.
    Printed,
}

/// `u_xx` amplitude together with its consistency against the closed forms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UxxCheck {
    pub value: f64,
    /// `|value - expanded closed form|`, `None` when `f_n''` is unavailable.
    pub expanded_gap: Option<f64>,
    /// `|value - printed closed form|`.
    pub printed_gap: Option<f64>,
}

/// One mode of the series solution.
#[derive(Debug, Clone)]
pub struct ModeSolution {
    pair: Eigenpair,
    coeffs: ModeCoefficients,
    forcing: ModeForcing,
    tol: f64,
    rule: Arc<GaussLegendre>,
}

impl ModeSolution {
    pub fn new(pair: Eigenpair, forcing: ModeForcing, tol: f64) -> Self {
        Self::with_rule(pair, forcing, tol, Arc::new(GaussLegendre::new(NODES_PER_PANEL)))
    }

    pub(crate) fn with_rule(pair: Eigenpair, forcing: ModeForcing, tol: f64, rule: Arc<GaussLegendre>) -> Self {
        let coeffs = mode_coefficients(forcing.f_n0(), forcing.fp_n0(), pair.lambda);
        ModeSolution { pair, coeffs, forcing, tol, rule }
    }

    /// Replaces the seam coefficients. The result no longer satisfies the
    /// seam conditions unless the new coefficients do; used to exercise the
    /// jump detectors.
    pub fn with_coefficients(mut self, coeffs: ModeCoefficients) -> Self {
        self.coeffs = coeffs;
        self
    }

    pub fn pair(&self) -> &Eigenpair {
        &self.pair
    }

    pub fn lambda(&self) -> f64 {
        self.pair.lambda
    }

    pub fn coefficients(&self) -> &ModeCoefficients {
        &self.coeffs
    }

    pub fn forcing(&self) -> &ModeForcing {
        &self.forcing
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    pub fn t_max(&self) -> f64 {
        self.forcing.t_max()
    }

    /// Whether `f_n''` is available, i.e. second time derivatives can be formed.
    pub fn has_second_derivative(&self) -> bool {
        self.forcing.max_order() >= 2
    }

    fn hyp(&self, t: f64, order: u8) -> Result<Complex64> {
        kernel::mode_conv(
            &self.forcing,
            &self.rule,
            Complex64::new(0.0, self.pair.lambda),
            t,
            order,
            self.tol * self.pair.lambda.min(1.0),
        )
    }

    fn par(&self, t: f64, order: u8) -> Result<f64> {
        let s = Complex64::new(self.pair.lambda * self.pair.lambda, 0.0);
        kernel::mode_conv(&self.forcing, &self.rule, s, t, order, self.tol).map(|j| j.re)
    }

    pub fn alpha(&self, t: f64) -> Result<f64> {
        check_plus(t, self.t_max())?;
        let l = self.pair.lambda;
        let (s, c) = (l * t).sin_cos();
        Ok(self.coeffs.a * c + self.coeffs.b * s + self.hyp(t, 0)?.im / l)
    }

    pub fn beta(&self, t: f64) -> Result<f64> {
        check_minus(t, self.t_max())?;
        let l2 = self.pair.lambda * self.pair.lambda;
        Ok(self.coeffs.c * (l2 * t).exp() + self.par(t, 0)?)
    }

    /// `alpha'(t)`, closed form with the cosine-kernel integral of `f_n`.
    pub fn alpha_dt(&self, t: f64) -> Result<f64> {
        self.closed_form(DerivativeForm::AlphaDt, t, Variant::Coefficients)
    }

    /// `alpha''(t)`; needs `f_n''`.
    pub fn alpha_dtt(&self, t: f64) -> Result<f64> {
        self.closed_form(DerivativeForm::AlphaDtt, t, Variant::Coefficients)
    }

    /// `beta'(t)`, closed form with the exponential-kernel integral of `f_n'`.
    pub fn beta_dt(&self, t: f64) -> Result<f64> {
        self.closed_form(DerivativeForm::BetaDt, t, Variant::Coefficients)
    }

    /// `beta''(t)`; needs `f_n''`.
    pub fn beta_dtt(&self, t: f64) -> Result<f64> {
        self.closed_form(DerivativeForm::BetaDtt, t, Variant::Coefficients)
    }

    /// Mode amplitude of `u_xx`, i.e. `-lambda^2` times `alpha` or `beta`.
    pub fn uxx(&self, t: f64, region: Region) -> Result<f64> {
        let l2 = self.pair.lambda * self.pair.lambda;
        Ok(-l2
            * match region {
                Region::Plus => self.alpha(t)?,
                Region::Minus => self.beta(t)?,
            })
    }

    /// Mode amplitude of `field` at `t` on the given side of the seam.
    pub fn amplitude(&self, field: Field, t: f64, region: Region) -> Result<f64> {
        match (field, region) {
            (Field::U, Region::Plus) => self.alpha(t),
            (Field::U, Region::Minus) => self.beta(t),
            (Field::Ut, Region::Plus) => self.alpha_dt(t),
            (Field::Ut, Region::Minus) => self.beta_dt(t),
            (Field::Utt, Region::Plus) => self.alpha_dtt(t),
            (Field::Utt, Region::Minus) => self.beta_dtt(t),
            (Field::Uxx, region) => self.uxx(t, region),
        }
    }

    /// [`Self::uxx`] compared against the expanded closed forms.
    pub fn uxx_checked(&self, t: f64, region: Region) -> Result<UxxCheck> {
        let value = self.uxx(t, region)?;
        let form = match region {
            Region::Plus => DerivativeForm::UxxPlus,
            Region::Minus => DerivativeForm::UxxMinus,
        };
        let gap = |variant| match self.closed_form(form, t, variant) {
            Ok(v) => Ok(Some((v - value).abs())),
            Err(Error::UnsupportedDerivative { .. }) => Ok(None),
            Err(e) => Err(e),
        };
        Ok(UxxCheck { value, expanded_gap: gap(Variant::Expanded)?, printed_gap: gap(Variant::Printed)? })
    }

    /// Evaluates one of the expanded derivative expressions.
    pub fn closed_form(&self, form: DerivativeForm, t: f64, variant: Variant) -> Result<f64> {
        match form.region() {
            Region::Plus => check_plus(t, self.t_max())?,
            Region::Minus => check_minus(t, self.t_max())?,
        }
        let l = self.pair.lambda;
        let l2 = l * l;
        let f0 = self.forcing.f_n0();
        let fp0 = self.forcing.fp_n0();
        let ModeCoefficients { a, b, c } = self.coeffs;
        let printed = variant == Variant::Printed;
        let (sn, cs) = (l * t).sin_cos();
        let growth = |rate: f64| (rate * t).exp();
        // prefactors (sin, cos) of the hyperbolic forms, exp of the parabolic ones
        let (sin_coef, cos_coef, exp_coef) = match (form, variant) {
            (DerivativeForm::AlphaDt, Variant::Coefficients) => (-l * a, l * b, 0.0),
            // printed sine coefficient lacks the factor 1/lambda
            (DerivativeForm::AlphaDt, _) => (
                ((l2 - 1.0) * f0 + fp0) / (l2 + 1.0) / if printed { 1.0 } else { l },
                (2.0 * f0 - fp0) / (l2 + 1.0),
                0.0,
            ),
            (DerivativeForm::BetaDt, Variant::Coefficients) => (0.0, 0.0, l2 * c + f0),
            (DerivativeForm::BetaDt, _) => (0.0, 0.0, (2.0 * f0 - fp0) / (l2 + 1.0)),
            (DerivativeForm::AlphaDtt | DerivativeForm::UxxPlus, Variant::Coefficients) => {
                (fp0 / l - l2 * b, f0 - l2 * a, 0.0)
            }
            (DerivativeForm::AlphaDtt | DerivativeForm::UxxPlus, _) => {
                // the printed u_xx form has 2 lambda f_n(0) where 2 lambda^2 f_n(0) belongs
                let f0_factor = if printed && form == DerivativeForm::UxxPlus { l } else { l2 };
                (
                    ((2.0 * l2 + 1.0) * fp0 - 2.0 * f0_factor * f0) / (l * (l2 + 1.0)),
                    (2.0 * l2 * f0 + fp0) / (l2 + 1.0),
                    0.0,
                )
            }
            (DerivativeForm::UxxMinus, Variant::Coefficients) => (0.0, 0.0, -(l2 * c + f0)),
            (DerivativeForm::UxxMinus, _) => (0.0, 0.0, (fp0 - 2.0 * f0) / (l2 + 1.0)),
            (DerivativeForm::BetaDtt, Variant::Coefficients) => (0.0, 0.0, l2 * (l2 * c + f0) + fp0),
            (DerivativeForm::BetaDtt, _) => (0.0, 0.0, (2.0 * l2 * f0 + fp0) / (l2 + 1.0)),
        };
        Ok(match form {
            DerivativeForm::AlphaDt => sin_coef * sn + cos_coef * cs + self.hyp(t, 0)?.re,
            DerivativeForm::BetaDt => exp_coef * growth(l2) + self.par(t, 1)?,
            DerivativeForm::AlphaDtt => sin_coef * sn + cos_coef * cs + self.hyp(t, 2)?.im / l,
            DerivativeForm::UxxPlus => sin_coef * sn + cos_coef * cs + self.hyp(t, 2)?.im / l - self.forcing.value(t),
            DerivativeForm::UxxMinus => exp_coef * growth(l2) + self.forcing.value(t) - self.par(t, 1)?,
            // printed exponent is lambda t instead of lambda^2 t
            DerivativeForm::BetaDtt => exp_coef * growth(if printed { l } else { l2 }) + self.par(t, 2)?,
        })
    }

    /// The same quantities through the mode ODEs (and, for `alpha'`, one
    /// integration by parts), independent of the expanded closed forms.
    pub fn identity_form(&self, form: DerivativeForm, t: f64) -> Result<f64> {
        let l = self.pair.lambda;
        let l2 = l * l;
        let f = |t| self.forcing.value(t);
        Ok(match form {
            DerivativeForm::AlphaDt => {
                check_plus(t, self.t_max())?;
                let (sn, cs) = (l * t).sin_cos();
                -l * self.coeffs.a * sn + l * self.coeffs.b * cs + self.forcing.f_n0() * sn / l + self.hyp(t, 1)?.im / l
            }
            DerivativeForm::BetaDt => l2 * self.beta(t)? + f(t),
            DerivativeForm::AlphaDtt => f(t) - l2 * self.alpha(t)?,
            DerivativeForm::UxxPlus => -l2 * self.alpha(t)?,
            DerivativeForm::UxxMinus => -l2 * self.beta(t)?,
            DerivativeForm::BetaDtt => l2 * (l2 * self.beta(t)? + f(t)) + self.forcing.derivative(t, 1)?,
        })
    }

    /// Seam gaps `|alpha - beta|`, `|alpha' - beta'|`, `|alpha'' - beta''|`
    /// at `t = 0`; the last is `None` when `f_n''` is unavailable.
    pub fn seam_gaps(&self) -> Result<[Option<f64>; 3]> {
        let g0 = (self.alpha(0.0)? - self.beta(0.0)?).abs();
        let g1 = (self.alpha_dt(0.0)? - self.beta_dt(0.0)?).abs();
        let g2 =
            if self.has_second_derivative() { Some((self.alpha_dtt(0.0)? - self.beta_dtt(0.0)?).abs()) } else { None };
        Ok([Some(g0), Some(g1), g2])
    }

    /// Whether every available seam gap is within [`SEAM_IDENTITY_TOL`].
    pub fn seam_ok(&self) -> Result<bool> {
        Ok(self.seam_gaps()?.iter().flatten().all(|g| *g <= SEAM_IDENTITY_TOL))
    }
}
