//! Dirichlet sine eigenbasis on `(0, p)` and projection of the forcing.
//!
//! Because every forcing term is separable, its mode coefficient is
//! `f_n(t) = sum_j w_{j,n} g_j(t)` with time-independent weights
//! `w_{j,n} = int_0^p s_j(x) X_n(x) dx`. The weights are computed once per
//! mode by composite Gauss-Legendre quadrature; [`ModeForcing`] keeps them
//! together with the shared temporal profiles.

use alloc::sync::Arc;
use alloc::vec::Vec;
use core::f64::consts::PI;

#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::domain::{Forcing, RectDomain, SpatialProfile, TemporalProfile};
use crate::fit::{fit_power_law, PowerLaw};
use crate::quadrature::{integrate_pieces, GaussLegendre, QuadOptions, NODES_PER_PANEL};
use crate::{Error, Result};

/// Coefficients below this fraction of the largest one are treated as zero
/// by decay fits.
pub const DECAY_NOISE_FRACTION: f64 = 1e-13;
/// Minimum number of coefficients a decay fit needs.
pub const DECAY_MIN_POINTS: usize = 4;

/// `sin(pi r)`, with exact zeros at integer `r`.
pub fn sin_pi(r: f64) -> f64 {
    let k = r.round();
    let d = r - k;
    let s = (PI * d).sin();
    if (k as i64) % 2 == 0 {
        s
    } else {
        -s
    }
}

/// `X_k(x) = sqrt(2/p) sin(k pi x / p)`; exactly zero at both walls.
pub fn sine_mode(k: usize, x: f64, p: f64) -> f64 {
    (2.0 / p).sqrt() * sin_pi(k as f64 * (x / p))
}

/// Mode index and eigenfrequency `lambda_n = n pi / p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Eigenpair {
    pub n: usize,
    pub lambda: f64,
    pub p: f64,
}

pub fn eigenpair(n: usize, domain: &RectDomain) -> Result<Eigenpair> {
    if n == 0 {
        return Err(Error::InvalidMode { n });
    }
    Ok(Eigenpair { n, lambda: n as f64 * PI / domain.p(), p: domain.p() })
}

impl Eigenpair {
    /// `X_n(x)` for `x` in `[0, p]`.
    pub fn eval(&self, x: f64) -> Result<f64> {
        if !(0.0..=self.p).contains(&x) {
            return Err(Error::OutOfDomain { x, t: 0.0 });
        }
        Ok(self.x_n(x))
    }

    /// `X_n(x)` without the domain check.
    #[inline]
    pub fn x_n(&self, x: f64) -> f64 {
        sine_mode(self.n, x, self.p)
    }

    /// `X_n'(x)`.
    pub fn dx_n(&self, x: f64) -> f64 {
        (2.0 / self.p).sqrt() * self.lambda * (self.lambda * x).cos()
    }
}

/// Quadrature-backed projection onto the sine basis.
#[derive(Debug, Clone)]
pub struct Projector {
    domain: RectDomain,
    rule: GaussLegendre,
    /// Multiplier on the starting panel count.
    density: usize,
}

impl Projector {
    pub fn new(domain: RectDomain) -> Self {
        Projector { domain, rule: GaussLegendre::new(NODES_PER_PANEL), density: 1 }
    }

    /// Same projector with `factor` times more starting panels.
    pub fn with_density(mut self, factor: usize) -> Self {
        self.density = factor.max(1);
        self
    }

    pub fn domain(&self) -> &RectDomain {
        &self.domain
    }

    /// `int_0^p s(x) X_n(x) dx` within `tol`. Sine modes use orthonormality.
    pub fn spatial_weight(&self, spatial: &SpatialProfile, pair: &Eigenpair, tol: f64) -> Result<f64> {
        if !(tol > 0.0) {
            return Err(Error::InvalidArgument("quadrature tolerance must be > 0".into()));
        }
        if let SpatialProfile::SineMode { k } = spatial {
            return Ok(if *k == pair.n { 1.0 } else { 0.0 });
        }
        let p = self.domain.p();
        let mut breaks = Vec::with_capacity(2);
        breaks.push(0.0);
        breaks.extend(spatial.knots(p));
        breaks.push(p);
        let opts = QuadOptions::new(tol)
            .resolve_frequency(pair.lambda, p)
            .min_panels(self.density * Self::base_panels(pair, &breaks));
        integrate_pieces(&self.rule, |x| spatial.eval(x, p) * pair.x_n(x), &breaks, opts).map(|e| e.value)
    }

    fn base_panels(pair: &Eigenpair, breaks: &[f64]) -> usize {
        let periods = pair.lambda * pair.p / (2.0 * PI);
        ((4.0 * periods).ceil() as usize).max(breaks.len() - 1)
    }

    /// Spatial weights of every term for mode `pair`; the tolerance is split
    /// so that `|sum_j dw_j g_j(t)| <= tol` for all `t` in `[-T, T]`.
    pub fn weights(&self, forcing: &Forcing, pair: &Eigenpair, tol: f64) -> Result<Vec<f64>> {
        let m = forcing.terms.len().max(1) as f64;
        forcing
            .terms
            .iter()
            .map(|term| {
                let scale = term.temporal.sup_bound(0, self.domain.t_max()).unwrap_or(1.0).max(1.0);
                self.spatial_weight(&term.spatial, pair, tol / (m * scale))
            })
            .collect()
    }

    /// Per-mode forcing sampler for mode `pair`.
    pub fn mode_forcing(
        &self,
        forcing: &Forcing,
        temporals: &Arc<[TemporalProfile]>,
        pair: &Eigenpair,
        tol: f64,
    ) -> Result<ModeForcing> {
        let weights = self.weights(forcing, pair, tol)?;
        ModeForcing::from_parts(pair.n, weights, Arc::clone(temporals), self.domain.t_max())
    }
}

/// The temporal profiles of `forcing`, shared between modes.
pub fn shared_temporals(forcing: &Forcing) -> Arc<[TemporalProfile]> {
    forcing.terms.iter().map(|t| t.temporal.clone()).collect()
}

/// `f_n(t)` within `tol`.
pub fn project(forcing: &Forcing, domain: &RectDomain, pair: &Eigenpair, t: f64, tol: f64) -> Result<f64> {
    project_dt(forcing, domain, pair, t, 0, tol)
}

/// `f_n^(order)(t)`, the projection of `d^order f / dt^order`.
pub fn project_dt(
    forcing: &Forcing,
    domain: &RectDomain,
    pair: &Eigenpair,
    t: f64,
    order: u8,
    tol: f64,
) -> Result<f64> {
    domain.check_t(t)?;
    if order > 2 {
        return Err(Error::UnsupportedDerivative { order });
    }
    let projector = Projector::new(*domain);
    let m = forcing.terms.len().max(1) as f64;
    let mut sum = 0.0;
    for term in &forcing.terms {
        let g = term.temporal.derivative(t, order, domain.t_max())?;
        let w = projector.spatial_weight(&term.spatial, pair, tol / (m * g.abs().max(1.0)))?;
        sum += w * g;
    }
    Ok(sum)
}

/// Samples of one mode coefficient `f_n(t) = sum_j w_j g_j(t)` and its
/// time derivatives.
#[derive(Debug, Clone)]
pub struct ModeForcing {
    n: usize,
    weights: Vec<f64>,
    temporals: Arc<[TemporalProfile]>,
    t_max: f64,
    f_n0: f64,
    fp_n0: f64,
}

impl ModeForcing {
    pub fn from_parts(n: usize, weights: Vec<f64>, temporals: Arc<[TemporalProfile]>, t_max: f64) -> Result<Self> {
        if weights.len() != temporals.len() {
            return Err(Error::InvalidArgument("one weight per temporal profile is required".into()));
        }
        let mut mf = ModeForcing { n, weights, temporals, t_max, f_n0: 0.0, fp_n0: 0.0 };
        mf.f_n0 = mf.value(0.0);
        mf.fp_n0 = mf.derivative(0.0, 1)?;
        Ok(mf)
    }

    /// A mode coefficient given directly as one temporal profile.
    pub fn scalar(profile: TemporalProfile, t_max: f64) -> Self {
        Self::from_parts(1, alloc::vec![1.0], Arc::from(alloc::vec![profile]), t_max)
            .expect("order 1 is always available")
    }

    /// Sum of profiles with unit weights.
    pub fn from_profiles(profiles: Vec<TemporalProfile>, t_max: f64) -> Self {
        let weights = alloc::vec![1.0; profiles.len()];
        Self::from_parts(1, weights, Arc::from(profiles), t_max).expect("order 1 is always available")
    }

    pub fn zero(t_max: f64) -> Self {
        Self::from_parts(1, Vec::new(), Arc::from(Vec::new()), t_max).expect("empty sum")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn t_max(&self) -> f64 {
        self.t_max
    }

    pub fn f_n0(&self) -> f64 {
        self.f_n0
    }

    pub fn fp_n0(&self) -> f64 {
        self.fp_n0
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Nonzero `(weight, profile)` pairs.
    pub fn terms(&self) -> impl Iterator<Item = (f64, &TemporalProfile)> + '_ {
        self.weights.iter().zip(self.temporals.iter()).filter(|(w, _)| **w != 0.0).map(|(w, g)| (*w, g))
    }

    pub fn is_zero(&self) -> bool {
        self.terms().next().is_none()
    }

    pub fn max_order(&self) -> u8 {
        self.terms().map(|(_, g)| g.max_order()).min().unwrap_or(2)
    }

    pub fn value(&self, t: f64) -> f64 {
        self.terms().map(|(w, g)| w * g.eval(t, self.t_max)).sum()
    }

    pub fn derivative(&self, t: f64, order: u8) -> Result<f64> {
        let mut sum = 0.0;
        for (w, g) in self.terms() {
            sum += w * g.derivative(t, order, self.t_max)?;
        }
        Ok(sum)
    }

    /// Bound on `sup |f_n^(order)|` over `[-T, T]`.
    pub fn sup_bound(&self, order: u8) -> Option<f64> {
        let mut sum = 0.0;
        for (w, g) in self.terms() {
            sum += w.abs() * g.sup_bound(order, self.t_max)?;
        }
        Some(sum)
    }

    /// Interior knots of sampled parts inside `(lo, hi)`, sorted.
    pub fn knots_in(&self, lo: f64, hi: f64) -> Vec<f64> {
        let mut knots: Vec<f64> = self.terms().flat_map(|(_, g)| g.knots_in(lo, hi, self.t_max)).collect();
        knots.sort_by(|a, b| a.partial_cmp(b).expect("finite knots"));
        knots.dedup();
        knots
    }

    pub fn is_analytic(&self) -> bool {
        self.terms().all(|(_, g)| g.is_analytic())
    }
}

/// Result of [`decay_estimate`].
pub type DecayFit = PowerLaw;

/// Fits `|f_n(t)| ~ C n^rate` over the nonzero coefficients `n <= n_max`.
pub fn decay_estimate(forcing: &Forcing, domain: &RectDomain, n_max: usize, t: f64) -> Result<DecayFit> {
    if n_max < 8 {
        return Err(Error::InvalidArgument("decay estimate needs n_max >= 8".into()));
    }
    domain.check_t(t)?;
    let projector = Projector::new(*domain);
    let mut coeffs = Vec::with_capacity(n_max);
    for n in 1..=n_max {
        let pair = eigenpair(n, domain)?;
        let mut sum = 0.0;
        for term in &forcing.terms {
            let g = term.temporal.eval(t, domain.t_max());
            if g != 0.0 {
                sum += g * projector.spatial_weight(&term.spatial, &pair, 1e-15)?;
            }
        }
        coeffs.push(sum.abs());
    }
    fit_decay(&coeffs)
}

/// Decay fit over `values[n-1] = |c_n|`, ignoring coefficients at the noise level.
pub fn fit_decay(values: &[f64]) -> Result<DecayFit> {
    let max = values.iter().fold(0.0_f64, |m, v| m.max(*v));
    let cut = DECAY_NOISE_FRACTION * max;
    let points: Vec<(f64, f64)> =
        values.iter().enumerate().filter(|(_, v)| **v > cut && **v > 0.0).map(|(i, v)| ((i + 1) as f64, *v)).collect();
    if points.len() < DECAY_MIN_POINTS {
        return Err(Error::InsufficientData { found: points.len(), required: DECAY_MIN_POINTS });
    }
    fit_power_law(points.iter().copied())
        .ok_or(Error::InsufficientData { found: points.len(), required: DECAY_MIN_POINTS })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::TemporalProfile;
    use crate::quadrature::integrate;
    use alloc::vec;
    use core::f64::consts::SQRT_2;

    fn unit() -> RectDomain {
        RectDomain::new(1.0, 1.0).unwrap()
    }

    /// Closed form of `int_0^1 x (1 - x) sqrt(2) sin(n pi x) dx`.
    fn bubble_coefficient(n: usize) -> f64 {
        let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
        2.0 * SQRT_2 * (1.0 - sign) / (n as f64 * PI).powi(3)
    }

    #[test]
    fn eigenpair_examples() {
        let d = RectDomain::new(PI, 1.0).unwrap();
        assert_eq!(eigenpair(1, &d).unwrap().lambda, 1.0);
        assert!((eigenpair(2, &unit()).unwrap().lambda - 2.0 * PI).abs() < 1e-15);
        let d3 = RectDomain::new(3.0, 1.0).unwrap();
        assert!((eigenpair(3, &d3).unwrap().lambda - PI).abs() < 1e-15);
        assert_eq!(eigenpair(0, &d).unwrap_err(), Error::InvalidMode { n: 0 });
    }

    #[test]
    fn eigenfunction_examples() {
        let d = unit();
        for n in 1..6 {
            let pair = eigenpair(n, &d).unwrap();
            assert_eq!(pair.eval(0.0).unwrap(), 0.0);
            assert_eq!(pair.eval(1.0).unwrap(), 0.0);
        }
        assert!((eigenpair(1, &d).unwrap().eval(0.5).unwrap() - SQRT_2).abs() < 1e-15);
        assert_eq!(eigenpair(2, &d).unwrap().eval(0.5).unwrap(), 0.0);
        assert!(eigenpair(1, &d).unwrap().eval(1.2).is_err());
    }

    #[test]
    fn sin_pi_agrees_with_sin() {
        for i in -40..=40 {
            let r = i as f64 * 0.137;
            assert!((sin_pi(r) - (PI * r).sin()).abs() < 1e-14);
        }
    }

    #[test]
    fn orthonormality() {
        let d = RectDomain::new(1.7, 1.0).unwrap();
        let rule = GaussLegendre::new(NODES_PER_PANEL);
        for m in 1..=12 {
            for n in 1..=12 {
                let pm = eigenpair(m, &d).unwrap();
                let pn = eigenpair(n, &d).unwrap();
                let opts = QuadOptions::new(1e-14).resolve_frequency(pm.lambda + pn.lambda, d.p());
                let v = integrate(&rule, |x| pm.x_n(x) * pn.x_n(x), 0.0, d.p(), opts).unwrap().value;
                let expected = if m == n { 1.0 } else { 0.0 };
                assert!((v - expected).abs() < 1e-10, "({m},{n}) -> {v}");
            }
        }
    }

    #[test]
    fn project_examples() {
        let d = unit();
        let g = TemporalProfile::Trig { amplitude: 1.0, omega: 2.0, phase: 0.3 };
        let f = Forcing::single(SpatialProfile::SineMode { k: 1 }, g.clone());
        let p1 = eigenpair(1, &d).unwrap();
        let p2 = eigenpair(2, &d).unwrap();
        assert!((project(&f, &d, &p1, 0.4, 1e-12).unwrap() - g.eval(0.4, 1.0)).abs() < 1e-15);
        assert_eq!(project(&f, &d, &p2, 0.4, 1e-12).unwrap(), 0.0);

        let bubble = Forcing::single(SpatialProfile::PolyBubble { amplitude: 1.0 }, TemporalProfile::constant(1.0));
        let v1 = project(&bubble, &d, &p1, -0.3, 1e-12).unwrap();
        assert!((v1 - 4.0 * SQRT_2 / PI.powi(3)).abs() < 1e-12);
        assert!((v1 - 0.182442).abs() < 1e-6);
        assert!(project(&bubble, &d, &p2, 0.7, 1e-12).unwrap().abs() < 1e-12);
    }

    #[test]
    fn bubble_projection_matches_closed_form() {
        let d = unit();
        let bubble = Forcing::single(SpatialProfile::PolyBubble { amplitude: 1.0 }, TemporalProfile::constant(1.0));
        for n in 1..=20 {
            let pair = eigenpair(n, &d).unwrap();
            let v = project(&bubble, &d, &pair, 0.0, 1e-13).unwrap();
            assert!((v - bubble_coefficient(n)).abs() < 1e-10, "n={n}");
        }
    }

    #[test]
    fn project_dt_examples() {
        let d = unit();
        let p1 = eigenpair(1, &d).unwrap();
        let sin = Forcing::single(
            SpatialProfile::SineMode { k: 1 },
            TemporalProfile::Trig { amplitude: 1.0, omega: 3.0, phase: 0.0 },
        );
        assert!((project_dt(&sin, &d, &p1, 0.0, 1, 1e-12).unwrap() - 3.0).abs() < 1e-15);
        assert_eq!(project_dt(&sin, &d, &p1, 0.2, 0, 1e-12).unwrap(), project(&sin, &d, &p1, 0.2, 1e-12).unwrap());
        let exp = Forcing::single(
            SpatialProfile::SineMode { k: 1 },
            TemporalProfile::Exponential { amplitude: 1.0, rate: 2.0 },
        );
        assert!((project_dt(&exp, &d, &p1, 0.0, 2, 1e-12).unwrap() - 4.0).abs() < 1e-14);
    }

    #[test]
    fn mode_forcing_sampler_matches_seam_value() {
        let d = unit();
        let f = Forcing::single(
            SpatialProfile::Sampled { values: vec![0.0, 0.4, 1.0, 0.3, 0.0] },
            TemporalProfile::Polynomial { coeffs: vec![0.5, 1.0] },
        );
        let proj = Projector::new(d);
        let temporals = shared_temporals(&f);
        for n in 1..5 {
            let pair = eigenpair(n, &d).unwrap();
            let mf = proj.mode_forcing(&f, &temporals, &pair, 1e-13).unwrap();
            assert_eq!(mf.value(0.0), mf.f_n0());
            let direct = project(&f, &d, &pair, 0.0, 1e-13).unwrap();
            assert!((direct - mf.f_n0()).abs() < 1e-12);
            let dfd = project_dt(&f, &d, &pair, 0.0, 1, 1e-13).unwrap();
            assert!((dfd - mf.fp_n0()).abs() < 1e-12);
        }
    }

    #[test]
    fn decay_examples() {
        let d = unit();
        let single = Forcing::single(SpatialProfile::SineMode { k: 1 }, TemporalProfile::constant(1.0));
        assert!(matches!(decay_estimate(&single, &d, 16, 0.0), Err(Error::InsufficientData { found: 1, .. })));

        let bubble = Forcing::single(SpatialProfile::PolyBubble { amplitude: 1.0 }, TemporalProfile::constant(1.0));
        let fit = decay_estimate(&bubble, &d, 40, 0.5).unwrap();
        assert!((-3.2..=-2.8).contains(&fit.rate), "{fit:?}");

        let hat = Forcing::single(
            SpatialProfile::Sampled { values: vec![0.0, 0.5, 1.0, 0.5, 0.0] },
            TemporalProfile::constant(1.0),
        );
        let fit = decay_estimate(&hat, &d, 40, 0.0).unwrap();
        assert!((fit.rate + 2.0).abs() < 0.05, "{fit:?}");
    }

    #[test]
    fn hat_coefficients_match_high_resolution_oracle() {
        // hat peaked at 1/2: c_n = 4 sqrt(2) sin(n pi / 2) / (n pi)^2
        let d = unit();
        let proj = Projector::new(d);
        let hat = SpatialProfile::Sampled { values: vec![0.0, 1.0, 0.0] };
        for n in 1..=15 {
            let pair = eigenpair(n, &d).unwrap();
            let v = proj.spatial_weight(&hat, &pair, 1e-14).unwrap();
            let exact = 4.0 * SQRT_2 * sin_pi(n as f64 / 2.0) / (n as f64 * PI).powi(2);
            assert!((v - exact).abs() < 1e-13, "n={n}: {v} vs {exact}");
        }
    }
}
