//! Exponential convolution kernels.
//!
//! Every Duhamel integral of a mode reduces to
//!
//! ```text
//!   J_k(s, t) = int_0^t g^(k)(tau) exp(s (t - tau)) dtau
//! ```
//!
//! with `s = i lambda` (hyperbolic side: imaginary part gives the sine
//! kernel, real part the cosine kernel) or `s = lambda^2` (parabolic side,
//! `t <= 0`). Analytic temporal profiles have closed forms; sampled ones
//! fall back to composite quadrature.

use alloc::vec::Vec;

use num_complex::Complex64;
#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;

use crate::basis::ModeForcing;
use crate::domain::{poly_derivative, TemporalProfile};
use crate::quadrature::{integrate_pieces, GaussLegendre, QuadOptions};
use crate::{Error, Result};

/// Above this `Re(s) |t|` the parabolic kernel gets graded breakpoints.
const LAYER_THRESHOLD: f64 = 30.0;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// `exp(z) - 1` without cancellation for small `|z|`.
fn expm1c(z: Complex64) -> Complex64 {
    let half = (0.5 * z.im).sin();
    Complex64::new(z.re.exp_m1() * z.im.cos() - 2.0 * half * half, z.re.exp() * z.im.sin())
}

/// `int_0^t exp(mu tau) exp(s (t - tau)) dtau`.
pub(crate) fn exp_conv(mu: Complex64, s: Complex64, t: f64) -> Complex64 {
    let d = mu - s;
    let z = d * t;
    if z.re > 0.5 {
        ((mu * t).exp() - (s * t).exp()) / d
    } else if z == Complex64::new(0.0, 0.0) {
        (s * t).exp() * t
    } else {
        (s * t).exp() * t * (expm1c(z) / z)
    }
}

/// `phi_j(z) = sum_m z^m / (m + j)!` for `|z| <= 1`.
fn phi(j: usize, z: Complex64) -> Complex64 {
    let mut fact = 1.0;
    for k in 2..=j {
        fact *= k as f64;
    }
    let mut term = Complex64::new(1.0 / fact, 0.0);
    let mut sum = term;
    for m in 1..40 {
        term = term * z / (m + j) as f64;
        sum += term;
        if term.norm() <= 1e-18 * sum.norm() {
            break;
        }
    }
    sum
}

/// `int_0^t P(tau) exp(s (t - tau)) dtau` for the polynomial `P`.
fn poly_conv(coeffs: &[f64], s: Complex64, t: f64) -> Complex64 {
    if coeffs.is_empty() {
        return Complex64::new(0.0, 0.0);
    }
    let z = s * t;
    if z.norm() <= 1.0 {
        // J = sum_k c_k t^(k+1) k! phi_(k+1)(s t)
        let mut sum = Complex64::new(0.0, 0.0);
        let mut tk = t;
        let mut kfact = 1.0;
        for (k, c) in coeffs.iter().enumerate() {
            if k > 0 {
                tk *= t;
                kfact *= k as f64;
            }
            sum += phi(k + 1, z) * (c * tk * kfact);
        }
        sum
    } else {
        // particular solution Q of Q' - s Q = P; J = Q(t) - Q(0) exp(s t)
        let q = |x: f64| {
            let mut acc = Complex64::new(0.0, 0.0);
            let mut d: Vec<f64> = coeffs.to_vec();
            let mut sp = s;
            while !d.is_empty() {
                acc -= crate::domain::horner(&d, x) / sp;
                d = poly_derivative(&d, 1);
                sp *= s;
            }
            acc
        };
        q(t) - q(0.0) * (s * t).exp()
    }
}

/// Closed-form `J_order(s, t)` for analytic profiles; `None` for sampled ones.
pub(crate) fn analytic_conv(g: &TemporalProfile, s: Complex64, t: f64, order: u8) -> Option<Complex64> {
    match g {
        TemporalProfile::Polynomial { coeffs } => Some(poly_conv(&poly_derivative(coeffs, order as usize), s, t)),
        TemporalProfile::Trig { amplitude, omega, phase } => {
            // A sin(w t + phi) = k1 e^{i w t} + k2 e^{-i w t}
            let mu1 = I * *omega;
            let mu2 = -mu1;
            let k1 = Complex64::from_polar(*amplitude, *phase) / (2.0 * I) * mu1.powu(order as u32);
            let k2 = -Complex64::from_polar(*amplitude, -*phase) / (2.0 * I) * mu2.powu(order as u32);
            Some(k1 * exp_conv(mu1, s, t) + k2 * exp_conv(mu2, s, t))
        }
        TemporalProfile::Exponential { amplitude, rate } => {
            let k = amplitude * rate.powi(order as i32);
            Some(exp_conv(Complex64::new(*rate, 0.0), s, t) * k)
        }
        TemporalProfile::Sampled { .. } => None,
    }
}

/// `J_order(s, t)` for a whole mode coefficient, within absolute `tol`.
pub(crate) fn mode_conv(
    forcing: &ModeForcing,
    rule: &GaussLegendre,
    s: Complex64,
    t: f64,
    order: u8,
    tol: f64,
) -> Result<Complex64> {
    if order > forcing.max_order() {
        return Err(Error::UnsupportedDerivative { order });
    }
    let m = forcing.terms().count().max(1) as f64;
    let mut sum = Complex64::new(0.0, 0.0);
    for (w, g) in forcing.terms() {
        let j = match analytic_conv(g, s, t, order) {
            Some(j) => j,
            None => sampled_conv(g, forcing.t_max(), rule, s, t, order, tol / (m * w.abs()))?,
        };
        sum += j * w;
    }
    Ok(sum)
}

fn sampled_conv(
    g: &TemporalProfile,
    t_max: f64,
    rule: &GaussLegendre,
    s: Complex64,
    t: f64,
    order: u8,
    tol: f64,
) -> Result<Complex64> {
    if t == 0.0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let (lo, hi) = if t < 0.0 { (t, 0.0) } else { (0.0, t) };
    let mut breaks = Vec::new();
    breaks.push(lo);
    breaks.extend(g.knots_in(lo, hi, t_max));
    // boundary layer of width 1/Re(s) at tau = t for the decaying kernel
    if s.re > 0.0 && t < 0.0 && s.re * (-t) > LAYER_THRESHOLD {
        let width = 1.0 / s.re;
        for k in [1.0, 2.0, 4.0, 8.0, 16.0, 32.0] {
            let b = t + k * width;
            if b < hi {
                breaks.push(b);
            }
        }
    }
    breaks.push(hi);
    breaks.sort_by(|a, b| a.partial_cmp(b).expect("finite breakpoints"));
    breaks.dedup();

    let opts = QuadOptions::new(tol).resolve_frequency(s.im, hi - lo);
    let mut failure = None;
    let est = integrate_pieces(
        rule,
        |tau| match g.derivative(tau, order, t_max) {
            Ok(v) => (s * (t - tau)).exp() * v,
            Err(e) => {
                failure = Some(e);
                Complex64::new(0.0, 0.0)
            }
        },
        &breaks,
        opts,
    )?;
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(if t < 0.0 { -est.value } else { est.value })
}
