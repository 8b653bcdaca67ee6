//! Truncated series solution, tail bounds and field grids.
//!
//! The solution is `u(x, t) = sum_{n <= N} X_n(x) T_n(t)` with `T_n = alpha_n`
//! for `t >= 0` and `T_n = beta_n` for `t <= 0`. Derivative fields use the
//! matching per-mode amplitudes from [`crate::modes`].

use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::ops::Range;

#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::basis::{eigenpair, fit_decay, shared_temporals, ModeForcing, Projector};
use crate::domain::{validate_compat, Forcing, RectDomain, TemporalProfile};
use crate::fit::{fit_power_law, PowerLaw};
use crate::modes::{ModeCoefficients, ModeSolution};
use crate::quadrature::{GaussLegendre, NODES_PER_PANEL};
use crate::{Error, Result};

pub use crate::modes::{Field, Region};

/// Default hard limit on the number of modes.
pub const DEFAULT_N_CAP: usize = 1024;

/// Modes projected for the decay fit when the solution itself has fewer.
const FIT_SAMPLE: usize = 32;

/// Largest number of tail terms summed one by one.
const EXPLICIT_TAIL_LIMIT: usize = 1 << 20;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Truncation {
    /// Exactly `N` modes.
    Fixed(usize),
    /// Smallest `N` whose tail bound on `u` is at most `tail_tol`.
    Adaptive { tail_tol: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruncationPolicy {
    pub truncation: Truncation,
    #[serde(default = "default_n_cap")]
    pub n_cap: usize,
}

fn default_n_cap() -> usize {
    DEFAULT_N_CAP
}

impl TruncationPolicy {
    pub fn fixed(n: usize) -> Self {
        TruncationPolicy { truncation: Truncation::Fixed(n), n_cap: DEFAULT_N_CAP.max(n) }
    }

    pub fn adaptive(tail_tol: f64) -> Self {
        TruncationPolicy { truncation: Truncation::Adaptive { tail_tol }, n_cap: DEFAULT_N_CAP }
    }

    pub fn with_cap(mut self, n_cap: usize) -> Self {
        self.n_cap = n_cap;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_cap == 0 {
            return Err(Error::InvalidArgument("n_cap must be >= 1".into()));
        }
        match self.truncation {
            Truncation::Fixed(0) => Err(Error::InvalidArgument("fixed truncation needs N >= 1".into())),
            Truncation::Fixed(n) if n > self.n_cap => {
                Err(Error::InvalidArgument(format!("fixed truncation N = {n} exceeds n_cap = {}", self.n_cap)))
            }
            Truncation::Adaptive { tail_tol } if !(tail_tol > 0.0 && tail_tol.is_finite()) => {
                Err(Error::InvalidArgument("tail_tol must be a positive number".into()))
            }
            _ => Ok(()),
        }
    }
}

/// Side of the seam a query refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    /// Inferred from the sign of `t`; rejected at `t = 0`.
    #[default]
    Auto,
    Plus,
    Minus,
}

impl Side {
    pub fn resolve(self, t: f64) -> Result<Region> {
        match self {
            Side::Auto if t > 0.0 => Ok(Region::Plus),
            Side::Auto if t < 0.0 => Ok(Region::Minus),
            Side::Auto => Err(Error::AmbiguousSide),
            Side::Plus if t >= 0.0 => Ok(Region::Plus),
            Side::Minus if t <= 0.0 => Ok(Region::Minus),
            Side::Plus => Err(Error::SideMismatch { side: "plus", t }),
            Side::Minus => Err(Error::SideMismatch { side: "minus", t }),
        }
    }
}

/// How trustworthy a tail bound is.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TailStatus {
    /// Band-limited forcing: every dropped mode is known.
    Exact,
    /// Decay fitted from enough coefficients.
    Fitted,
    /// Extrapolated from too few coefficients.
    Heuristic,
}

/// Per-mode bound on `|X_n(x) T_n(t)|` for each field, driven by bounds on
/// `sup |f_n^(k)|`, `k = 0, 1, 2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailModel {
    p: f64,
    t_max: f64,
    /// Sup bounds of the projected forcing for `n = 1..=known.len()`.
    known: Vec<[Option<f64>; 3]>,
    /// Nothing beyond `known`.
    exact: bool,
    fit: Option<PowerLaw>,
    amplitude: [Option<f64>; 3],
    rate: f64,
    status: TailStatus,
}

type Sups = [Option<f64>; 3];

fn sups_of(forcing: &ModeForcing) -> Sups {
    [forcing.sup_bound(0), forcing.sup_bound(1), forcing.sup_bound(2)]
}

impl TailModel {
    fn new(domain: &RectDomain, forcing: &Forcing, known: Vec<Sups>) -> Self {
        let exact = forcing.band_limit().is_some_and(|k| k <= known.len());
        let mut model = TailModel {
            p: domain.p(),
            t_max: domain.t_max(),
            known,
            exact,
            fit: None,
            amplitude: [Some(0.0); 3],
            rate: -2.0,
            status: TailStatus::Exact,
        };
        if exact {
            return model;
        }
        let m0: Vec<f64> = model.known.iter().map(|s| s[0].unwrap_or(0.0)).collect();
        match fit_decay(&m0) {
            Ok(fit) => {
                model.fit = Some(fit);
                model.rate = fit.rate;
                model.status = TailStatus::Fitted;
            }
            Err(_) => {
                model.status = TailStatus::Heuristic;
                let points = m0.iter().enumerate().filter(|(_, v)| **v > 0.0).map(|(i, v)| ((i + 1) as f64, *v));
                model.rate = match fit_power_law(points) {
                    Some(fit) => {
                        model.fit = Some(fit);
                        fit.rate
                    }
                    None => -1.0 - forcing.smoothness_alpha.unwrap_or(1.0),
                };
            }
        }
        for k in 0..3 {
            let mut amp = Some(0.0_f64);
            for (i, s) in model.known.iter().enumerate() {
                let scale = ((i + 1) as f64).powf(model.rate);
                amp = match (amp, s[k]) {
                    (Some(a), Some(v)) => Some(a.max(v / scale)),
                    _ => None,
                };
            }
            model.amplitude[k] = amp;
        }
        model
    }

    pub fn status(&self) -> TailStatus {
        self.status
    }

    pub fn decay_fit(&self) -> Option<PowerLaw> {
        self.fit
    }

    fn sups(&self, n: usize) -> Sups {
        if n <= self.known.len() {
            return self.known[n - 1];
        }
        if self.exact {
            return [Some(0.0); 3];
        }
        let scale = (n as f64).powf(self.rate);
        [
            self.amplitude[0].map(|a| a * scale),
            self.amplitude[1].map(|a| a * scale),
            self.amplitude[2].map(|a| a * scale),
        ]
    }

    /// Bound on `sup |T_n|` of `field` over one region.
    fn mode_bound(&self, field: Field, region: Region, lambda: f64, s: Sups) -> Option<f64> {
        let (f0, f1) = (s[0]?, s[1]?);
        let l = lambda;
        let l2 = l * l;
        let t = self.t_max;
        let a = ((1.0 - l2).abs() * f0 + f1) / (l2 * (l2 + 1.0));
        let b = (2.0 * f0 + f1) / (l * (l2 + 1.0));
        let half_t = (0.5 * t).sqrt();
        Some(match region {
            Region::Plus => {
                let u = a + b + t * f0 / l;
                let utt = s[2].map(|f2| {
                    2.0 * f0 + f1 / (l2 + 1.0) + ((2.0 * l2 + 1.0) * f1 + 2.0 * l2 * f0) / (l * (l2 + 1.0)) + t * f2 / l
                });
                match field {
                    Field::U => u,
                    Field::Ut => l * (a + b) + t * f0,
                    Field::Utt => utt?,
                    Field::Uxx => utt.map_or(l2 * u, |v| (v + f0).min(l2 * u)),
                }
            }
            Region::Minus => {
                let u = a + (f0 / l2).min(half_t * f0 / l);
                let ut = (2.0 * f0 + f1) / (l2 + 1.0) + (f1 / l2).min(half_t * f1 / l);
                match field {
                    Field::U => u,
                    Field::Ut => ut,
                    Field::Utt => {
                        let f2 = s[2]?;
                        (2.0 * l2 * f0 + f1) / (l2 + 1.0) + (f2 / l2).min(half_t * f2 / l)
                    }
                    Field::Uxx => (f0 + ut).min(l2 * u),
                }
            }
        })
    }

    /// Monomial majorant `sum_i c_i A_{k_i} n^(rate - m_i)` of the
    /// per-mode bound, valid for `lambda_n >= 1`, as `(coefficient, order, m)`.
    fn majorant(&self, field: Field, region: Region) -> Option<Vec<(f64, usize, i32)>> {
        let t = self.t_max;
        let has_f2 = self.amplitude[2].is_some();
        let plus_u = [(t, 0, 1), (1.0, 0, 2), (2.0, 0, 3), (1.0, 1, 3), (1.0, 1, 4)];
        let plus_utt = [(2.0, 0, 0), (2.0, 0, 1), (3.0, 1, 1), (1.0, 1, 2), (t, 2, 1)];
        let minus_ut = [(2.0, 0, 2), (2.0, 1, 2)];
        let terms: Vec<(f64, usize, i32)> = match (field, region) {
            (Field::U, Region::Plus) => plus_u.to_vec(),
            (Field::Ut, Region::Plus) => alloc::vec![(t, 0, 0), (1.0, 0, 1), (2.0, 0, 2), (1.0, 1, 2), (1.0, 1, 3)],
            (Field::Utt, Region::Plus) if has_f2 => plus_utt.to_vec(),
            (Field::Uxx, Region::Plus) if has_f2 => {
                let mut v = plus_utt.to_vec();
                v.push((1.0, 0, 0));
                v
            }
            (Field::Uxx, Region::Plus) => plus_u.iter().map(|&(c, k, m)| (c, k, m - 2)).collect(),
            (Field::U, Region::Minus) => alloc::vec![(2.0, 0, 2), (1.0, 1, 4)],
            (Field::Ut, Region::Minus) => minus_ut.to_vec(),
            (Field::Utt, Region::Minus) if has_f2 => alloc::vec![(2.0, 0, 0), (1.0, 1, 2), (1.0, 2, 2)],
            (Field::Uxx, Region::Minus) => {
                let mut v = minus_ut.to_vec();
                v.push((1.0, 0, 0));
                v
            }
            _ => return None,
        };
        Some(terms)
    }

    /// Bound on `sup |sum_{n > n_modes} X_n T_n|` for `field` over `region`
    /// (both regions when `None`). `None` when the field is unavailable.
    pub fn bound(&self, field: Field, region: Option<Region>, n_modes: usize) -> Option<f64> {
        match region {
            None => {
                let a = self.bound(field, Some(Region::Plus), n_modes)?;
                let b = self.bound(field, Some(Region::Minus), n_modes)?;
                Some(a.max(b))
            }
            Some(region) => self.region_bound(field, region, n_modes),
        }
    }

    fn region_bound(&self, field: Field, region: Region, n_modes: usize) -> Option<f64> {
        let c = core::f64::consts::PI / self.p;
        let lambda_one = (1.0 / c).ceil() as usize;
        let last = if self.exact { self.known.len() } else { n_modes.max(self.known.len()).max(lambda_one) };
        if last.saturating_sub(n_modes) > EXPLICIT_TAIL_LIMIT {
            return Some(f64::INFINITY);
        }
        let mut sum = 0.0;
        for n in n_modes + 1..=last {
            sum += self.mode_bound(field, region, c * n as f64, self.sups(n))?;
        }
        if !self.exact {
            let k = last as f64;
            for (coef, order, m) in self.majorant(field, region)? {
                let amp = self.amplitude[order]?;
                if amp == 0.0 {
                    continue;
                }
                let s = self.rate - m as f64;
                if s >= -1.0 {
                    return Some(f64::INFINITY);
                }
                sum += coef * amp * c.powi(-m) * k.powf(s + 1.0) / (-s - 1.0);
            }
        }
        Some((2.0 / self.p).sqrt() * sum)
    }
}

/// Truncation outcome recorded with the solution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruncationReport {
    pub n_modes: usize,
    pub n_cap: usize,
    /// Requested tail tolerance (adaptive policy only).
    pub tail_tol: Option<f64>,
    /// Bound on the dropped tail of `u` over the whole rectangle.
    pub tail_bound: f64,
    pub tail_status: TailStatus,
    /// False when the adaptive policy hit `n_cap` before reaching `tail_tol`.
    pub certified: bool,
    pub decay_fit: Option<PowerLaw>,
}

/// Builds individual modes of a forcing; shareable across threads.
#[derive(Debug, Clone)]
pub struct ModeBuilder {
    domain: RectDomain,
    forcing: Forcing,
    projector: Projector,
    temporals: Arc<[TemporalProfile]>,
    rule: Arc<GaussLegendre>,
    tol: f64,
}

impl ModeBuilder {
    pub fn new(forcing: &Forcing, domain: &RectDomain, tol: f64) -> Result<Self> {
        if !(tol > 0.0) {
            return Err(Error::InvalidArgument("quadrature tolerance must be > 0".into()));
        }
        Ok(ModeBuilder {
            domain: *domain,
            forcing: forcing.clone(),
            projector: Projector::new(*domain),
            temporals: shared_temporals(forcing),
            rule: Arc::new(GaussLegendre::new(NODES_PER_PANEL)),
            tol,
        })
    }

    pub fn mode_forcing(&self, n: usize) -> Result<ModeForcing> {
        let pair = eigenpair(n, &self.domain)?;
        self.projector.mode_forcing(&self.forcing, &self.temporals, &pair, self.tol)
    }

    /// Mode `n`, rejected if it fails the seam identities.
    pub fn build(&self, n: usize) -> Result<ModeSolution> {
        let pair = eigenpair(n, &self.domain)?;
        let forcing = self.mode_forcing(n)?;
        let mode = ModeSolution::with_rule(pair, forcing, self.tol, Arc::clone(&self.rule));
        if !mode.seam_ok()? {
            return Err(Error::Numerical(format!(
                "mode {n} violates the seam identities: gaps {:?}",
                mode.seam_gaps()?
            )));
        }
        Ok(mode)
    }

    /// Modes `range`, in order.
    pub fn build_range(&self, range: Range<usize>) -> Result<Vec<ModeSolution>> {
        range.map(|n| self.build(n)).collect()
    }
}

/// Truncated series solution on a rectangle.
#[derive(Debug, Clone)]
pub struct SpectralSolution {
    domain: RectDomain,
    forcing: Forcing,
    modes: Vec<ModeSolution>,
    tail: TailModel,
    truncation: TruncationReport,
    tol: f64,
}

/// Solves with modes built sequentially.
pub fn solve(forcing: &Forcing, domain: &RectDomain, policy: &TruncationPolicy, tol: f64) -> Result<SpectralSolution> {
    solve_with(forcing, domain, policy, tol, |builder, range| builder.build_range(range))
}

/// Solves with a caller-supplied mode builder, e.g. a parallel map. `build`
/// must return the modes of `range` in order.
pub fn solve_with<F>(
    forcing: &Forcing,
    domain: &RectDomain,
    policy: &TruncationPolicy,
    tol: f64,
    mut build: F,
) -> Result<SpectralSolution>
where
    F: FnMut(&ModeBuilder, Range<usize>) -> Result<Vec<ModeSolution>>,
{
    policy.validate()?;
    let violations = validate_compat(forcing, domain);
    if !violations.is_empty() {
        return Err(Error::RejectedForcing(violations));
    }
    let builder = ModeBuilder::new(forcing, domain, tol)?;
    let sample = |upto: usize, known: &mut Vec<Sups>| -> Result<()> {
        for n in known.len() + 1..=upto {
            known.push(sups_of(&builder.mode_forcing(n)?));
        }
        Ok(())
    };
    let band = forcing.band_limit();

    let (n_modes, tail_tol, mut known) = match policy.truncation {
        Truncation::Fixed(n) => (n, None, Vec::new()),
        Truncation::Adaptive { tail_tol } => {
            let mut known = Vec::new();
            let n = match band {
                Some(k) => k.clamp(1, policy.n_cap),
                None => {
                    sample(FIT_SAMPLE.min(policy.n_cap), &mut known)?;
                    loop {
                        let model = TailModel::new(domain, forcing, known.clone());
                        let found =
                            smallest_n(policy.n_cap, |n| model.bound(Field::U, None, n).is_some_and(|b| b <= tail_tol));
                        match found {
                            Some(n) if n <= known.len() => break n,
                            Some(n) => sample(n, &mut known)?,
                            None if known.len() >= policy.n_cap => break policy.n_cap,
                            None => sample(policy.n_cap, &mut known)?,
                        }
                    }
                }
            };
            (n, Some(tail_tol), known)
        }
    };

    let modes = build(&builder, 1..n_modes + 1)?;
    if modes.len() != n_modes || modes.iter().enumerate().any(|(i, m)| m.pair().n != i + 1) {
        return Err(Error::Numerical("mode builder returned modes out of order".into()));
    }
    for m in &modes[known.len().min(n_modes)..] {
        known.push(sups_of(m.forcing()));
    }
    sample(n_modes.max(band.unwrap_or(0)).max(FIT_SAMPLE), &mut known)?;
    let tail = TailModel::new(domain, forcing, known);
    let tail_bound = tail.bound(Field::U, None, n_modes).unwrap_or(f64::INFINITY);
    let truncation = TruncationReport {
        n_modes,
        n_cap: policy.n_cap,
        tail_tol,
        tail_bound,
        tail_status: tail.status(),
        certified: tail_tol.is_none_or(|tt| tail_bound <= tt),
        decay_fit: tail.decay_fit(),
    };
    Ok(SpectralSolution { domain: *domain, forcing: forcing.clone(), modes, tail, truncation, tol })
}

/// Smallest `n` in `1..=cap` with `ok(n)`, assuming `ok` is monotone.
fn smallest_n(cap: usize, ok: impl Fn(usize) -> bool) -> Option<usize> {
    if !ok(cap) {
        return None;
    }
    let (mut lo, mut hi) = (1, cap);
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        if ok(mid) {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    Some(lo)
}

impl SpectralSolution {
    pub fn domain(&self) -> &RectDomain {
        &self.domain
    }

    pub fn forcing(&self) -> &Forcing {
        &self.forcing
    }

    pub fn modes(&self) -> &[ModeSolution] {
        &self.modes
    }

    pub fn n_modes(&self) -> usize {
        self.modes.len()
    }

    /// Mode `n` (1-based).
    pub fn mode(&self, n: usize) -> Option<&ModeSolution> {
        n.checked_sub(1).and_then(|i| self.modes.get(i))
    }

    pub fn truncation(&self) -> &TruncationReport {
        &self.truncation
    }

    pub fn tail_model(&self) -> &TailModel {
        &self.tail
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    /// Whether `field` can be evaluated (`u_tt` needs `f''`).
    pub fn has_field(&self, field: Field) -> bool {
        field != Field::Utt || self.forcing.supports_order(2)
    }

    /// The same solution cut to its first `n` modes.
    pub fn truncated(&self, n: usize) -> Result<Self> {
        if n == 0 || n > self.modes.len() {
            return Err(Error::InvalidArgument(format!("cannot truncate {} modes to {n}", self.modes.len())));
        }
        let mut out = self.clone();
        out.modes.truncate(n);
        let tail_bound = out.tail.bound(Field::U, None, n).unwrap_or(f64::INFINITY);
        out.truncation.n_modes = n;
        out.truncation.tail_bound = tail_bound;
        out.truncation.certified = out.truncation.tail_tol.is_none_or(|tt| tail_bound <= tt);
        Ok(out)
    }

    /// Copy with the seam coefficients of mode `n` replaced. The copy
    /// generally violates the seam conditions; used to test detectors.
    pub fn with_mode_coefficients(&self, n: usize, coeffs: ModeCoefficients) -> Result<Self> {
        let mut out = self.clone();
        let i = n.checked_sub(1).filter(|i| *i < out.modes.len()).ok_or(Error::InvalidMode { n })?;
        out.modes[i] = out.modes[i].clone().with_coefficients(coeffs);
        Ok(out)
    }

    /// Per-mode amplitudes of `field` at `t`.
    pub fn mode_amplitudes(&self, field: Field, t: f64, region: Region) -> Result<Vec<f64>> {
        self.modes.iter().map(|m| m.amplitude(field, t, region)).collect()
    }

    /// `sum_n X_n(x) amps[n - 1]`.
    pub fn combine(&self, x: f64, amps: &[f64]) -> f64 {
        self.modes.iter().zip(amps).fold(0.0, |acc, (m, a)| acc + m.pair().x_n(x) * a)
    }

    pub fn eval(&self, field: Field, x: f64, t: f64, side: Side) -> Result<f64> {
        self.domain.check(x, t)?;
        let region = side.resolve(t)?;
        Ok(self.combine(x, &self.mode_amplitudes(field, t, region)?))
    }

    pub fn eval_u(&self, x: f64, t: f64, side: Side) -> Result<f64> {
        self.eval(Field::U, x, t, side)
    }

    pub fn eval_ut(&self, x: f64, t: f64, side: Side) -> Result<f64> {
        self.eval(Field::Ut, x, t, side)
    }

    pub fn eval_utt(&self, x: f64, t: f64, side: Side) -> Result<f64> {
        self.eval(Field::Utt, x, t, side)
    }

    pub fn eval_uxx(&self, x: f64, t: f64, side: Side) -> Result<f64> {
        self.eval(Field::Uxx, x, t, side)
    }

    /// `u_x`, used only by diagnostics.
    pub fn eval_ux(&self, x: f64, t: f64, side: Side) -> Result<f64> {
        self.domain.check(x, t)?;
        let amps = self.mode_amplitudes(Field::U, t, side.resolve(t)?)?;
        Ok(self.modes.iter().zip(&amps).fold(0.0, |acc, (m, a)| acc + m.pair().dx_n(x) * a))
    }

    /// Bound on the dropped tail of `field` over `region` (whole rectangle
    /// for `None`). The bound is only as good as [`TruncationReport::tail_status`].
    pub fn tail_bound(&self, field: Field, region: Option<Region>) -> Result<f64> {
        if !self.has_field(field) {
            return Err(Error::UnsupportedDerivative { order: 2 });
        }
        self.tail.bound(field, region, self.modes.len()).ok_or(Error::UnsupportedDerivative { order: 2 })
    }

    /// Uniform nodes `x_i = p i / (nx - 1)` with exact endpoints.
    pub fn x_nodes(&self, nx: usize) -> Result<Vec<f64>> {
        uniform_x(self.domain.p(), nx)
    }

    pub fn time_nodes(&self, nt: usize) -> Result<Vec<TimeNode>> {
        time_nodes(self.domain.t_max(), nt)
    }

    /// Amplitudes of every available field at one time node.
    pub fn row_amplitudes(&self, node: &TimeNode) -> Result<RowAmplitudes> {
        let utt = if self.has_field(Field::Utt) {
            Some(self.mode_amplitudes(Field::Utt, node.t, node.region)?)
        } else {
            None
        };
        Ok(RowAmplitudes {
            u: self.mode_amplitudes(Field::U, node.t, node.region)?,
            u_t: self.mode_amplitudes(Field::Ut, node.t, node.region)?,
            u_tt: utt,
            u_xx: self.mode_amplitudes(Field::Uxx, node.t, node.region)?,
        })
    }

    /// Assembles a grid from per-row amplitudes (one per entry of `t`).
    pub fn grid_from_rows(&self, x: Vec<f64>, t: Vec<TimeNode>, rows: &[RowAmplitudes]) -> FieldGrid {
        let size = x.len() * t.len();
        let mut grid = FieldGrid {
            u: Vec::with_capacity(size),
            u_t: Vec::with_capacity(size),
            u_tt: self.has_field(Field::Utt).then(|| Vec::with_capacity(size)),
            u_xx: Vec::with_capacity(size),
            x,
            t,
            units: String::from("dimensionless"),
        };
        for &x in &grid.x {
            for row in rows {
                grid.u.push(self.combine(x, &row.u));
                grid.u_t.push(self.combine(x, &row.u_t));
                if let (Some(out), Some(amps)) = (grid.u_tt.as_mut(), row.u_tt.as_ref()) {
                    out.push(self.combine(x, amps));
                }
                grid.u_xx.push(self.combine(x, &row.u_xx));
            }
        }
        grid
    }

    /// Tabulates all fields on an `nx` by `nt` grid with a doubled seam row.
    pub fn sample_grid(&self, nx: usize, nt: usize) -> Result<FieldGrid> {
        let x = self.x_nodes(nx)?;
        let t = self.time_nodes(nt)?;
        let rows = t.iter().map(|node| self.row_amplitudes(node)).collect::<Result<Vec<_>>>()?;
        Ok(self.grid_from_rows(x, t, &rows))
    }
}

/// Uniform nodes on `[0, p]` with exact endpoints.
pub fn uniform_x(p: f64, nx: usize) -> Result<Vec<f64>> {
    if nx < 3 {
        return Err(Error::InvalidArgument(format!("grid needs at least 3 x nodes, got {nx}")));
    }
    let m = (nx - 1) as f64;
    Ok((0..nx).map(|i| if i == nx - 1 { p } else { p * (i as f64 / m) }).collect())
}

/// One time row of a [`FieldGrid`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeNode {
    pub t: f64,
    pub region: Region,
    /// One of the two seam rows `t = 0-` and `t = 0+`.
    pub seam: bool,
}

impl TimeNode {
    /// `-` or `+` on the seam, `interior` elsewhere.
    pub fn label(&self) -> &'static str {
        match (self.seam, self.region) {
            (false, _) => "interior",
            (true, Region::Minus) => "-",
            (true, Region::Plus) => "+",
        }
    }
}

/// `nt` uniform nodes on `[-T, T]`; the seam appears twice, once per side.
/// For even `nt`, which has no node at 0, both seam rows are inserted.
pub fn time_nodes(t_max: f64, nt: usize) -> Result<Vec<TimeNode>> {
    if nt < 3 {
        return Err(Error::InvalidArgument(format!("grid needs at least 3 t nodes, got {nt}")));
    }
    let m = (nt - 1) as f64;
    let mut nodes = Vec::with_capacity(nt + 2);
    let mut seam_done = false;
    let push_seam = |nodes: &mut Vec<TimeNode>| {
        for region in [Region::Minus, Region::Plus] {
            nodes.push(TimeNode { t: 0.0, region, seam: true });
        }
    };
    for j in 0..nt {
        let k = 2.0 * j as f64 - m;
        let t = t_max * (k / m);
        if k == 0.0 || (k > 0.0 && !seam_done) {
            push_seam(&mut nodes);
            seam_done = true;
            if k == 0.0 {
                continue;
            }
        }
        let region = if k < 0.0 { Region::Minus } else { Region::Plus };
        nodes.push(TimeNode { t, region, seam: false });
    }
    Ok(nodes)
}

/// Per-mode amplitudes of each field at one time node.
#[derive(Debug, Clone, PartialEq)]
pub struct RowAmplitudes {
    pub u: Vec<f64>,
    pub u_t: Vec<f64>,
    pub u_tt: Option<Vec<f64>>,
    pub u_xx: Vec<f64>,
}

/// Field values on a tensor grid, stored x-major: entry `(i, j)` sits at
/// `i * t.len() + j`.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldGrid {
    pub x: Vec<f64>,
    pub t: Vec<TimeNode>,
    pub u: Vec<f64>,
    pub u_t: Vec<f64>,
    /// Absent when the forcing has no second time derivative.
    pub u_tt: Option<Vec<f64>>,
    pub u_xx: Vec<f64>,
    pub units: String,
}

impl FieldGrid {
    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.t.len() + j
    }

    pub fn values(&self, field: Field) -> Option<&[f64]> {
        match field {
            Field::U => Some(&self.u),
            Field::Ut => Some(&self.u_t),
            Field::Utt => self.u_tt.as_deref(),
            Field::Uxx => Some(&self.u_xx),
        }
    }

    pub fn get(&self, field: Field, i: usize, j: usize) -> Option<f64> {
        self.values(field).map(|v| v[self.index(i, j)])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::SpatialProfile;
    use alloc::vec;
    use core::f64::consts::PI;

    fn unit() -> RectDomain {
        RectDomain::new(1.0, 1.0).unwrap()
    }

    fn single_mode() -> Forcing {
        Forcing::single(SpatialProfile::SineMode { k: 1 }, TemporalProfile::constant(1.0))
    }

    fn bubble() -> Forcing {
        Forcing::single(SpatialProfile::PolyBubble { amplitude: 1.0 }, TemporalProfile::constant(1.0))
    }

    fn mixed() -> Forcing {
        Forcing::new(vec![
            crate::domain::ForcingTerm::new(
                SpatialProfile::SineMode { k: 2 },
                TemporalProfile::Trig { amplitude: 0.7, omega: 3.0, phase: 0.3 },
            ),
            crate::domain::ForcingTerm::new(
                SpatialProfile::SineMode { k: 5 },
                TemporalProfile::Polynomial { coeffs: vec![0.2, -0.4, 0.1] },
            ),
        ])
    }

    #[test]
    fn zero_forcing_gives_zero_solution() {
        let sol = solve(&Forcing::zero(), &unit(), &TruncationPolicy::fixed(4), 1e-12).unwrap();
        for m in sol.modes() {
            assert_eq!(*m.coefficients(), ModeCoefficients::ZERO);
        }
        let grid = sol.sample_grid(5, 5).unwrap();
        for field in Field::ALL {
            assert!(grid.values(field).unwrap().iter().all(|v| *v == 0.0));
        }
        assert_eq!(sol.tail_bound(Field::U, None).unwrap(), 0.0);
        assert_eq!(sol.truncation().tail_status, TailStatus::Exact);
    }

    #[test]
    fn single_mode_solution() {
        let sol = solve(&single_mode(), &unit(), &TruncationPolicy::fixed(3), 1e-12).unwrap();
        assert!(!sol.mode(1).unwrap().forcing().is_zero());
        assert!(sol.mode(2).unwrap().forcing().is_zero());
        assert!(sol.mode(3).unwrap().forcing().is_zero());
        let m = sol.mode(1).unwrap();
        let (x, t) = (0.3, 0.4);
        let expected = m.alpha(t).unwrap() * m.pair().x_n(x);
        assert_eq!(sol.eval_u(x, t, Side::Auto).unwrap(), expected);
        assert_eq!(sol.tail_bound(Field::U, None).unwrap(), 0.0);
    }

    #[test]
    fn side_resolution() {
        let sol = solve(&single_mode(), &unit(), &TruncationPolicy::fixed(1), 1e-12).unwrap();
        assert_eq!(sol.eval_u(0.5, 0.0, Side::Auto).unwrap_err(), Error::AmbiguousSide);
        assert!(matches!(sol.eval_u(0.5, 0.2, Side::Minus), Err(Error::SideMismatch { .. })));
        let plus = sol.eval_u(0.5, 0.0, Side::Plus).unwrap();
        let minus = sol.eval_u(0.5, 0.0, Side::Minus).unwrap();
        assert!((plus - minus).abs() <= 1e-15);
        assert!(sol.eval_u(1.5, 0.2, Side::Auto).is_err());
    }

    #[test]
    fn boundary_and_seam() {
        let sol = solve(&mixed(), &RectDomain::new(2.0, 1.5).unwrap(), &TruncationPolicy::fixed(6), 1e-12).unwrap();
        for i in 0..=20 {
            let t = -1.5 + 3.0 * i as f64 / 20.0;
            let side = if t > 0.0 { Side::Plus } else { Side::Minus };
            assert!(sol.eval_u(0.0, t, side).unwrap().abs() <= 1e-15);
            assert!(sol.eval_u(2.0, t, side).unwrap().abs() <= 1e-15);
        }
        for i in 0..33 {
            let x = 2.0 * i as f64 / 32.0;
            for field in [Field::U, Field::Ut, Field::Utt] {
                let p = sol.eval(field, x, 0.0, Side::Plus).unwrap();
                let m = sol.eval(field, x, 0.0, Side::Minus).unwrap();
                assert!((p - m).abs() <= 1e-9, "{field:?} at {x}: {p} {m}");
            }
        }
    }

    #[test]
    fn band_limited_truncation_is_stable() {
        let d = unit();
        let a = solve(&mixed(), &d, &TruncationPolicy::fixed(5), 1e-12).unwrap();
        let b = solve(&mixed(), &d, &TruncationPolicy::fixed(10), 1e-12).unwrap();
        for &(x, t) in &[(0.1, 0.9), (0.5, -0.3), (0.77, 0.01), (0.33, -1.0)] {
            for field in Field::ALL {
                let va = a.eval(field, x, t, Side::Auto).unwrap();
                let vb = b.eval(field, x, t, Side::Auto).unwrap();
                assert!((va - vb).abs() <= 1e-14);
            }
        }
        assert_eq!(a.tail_bound(Field::Utt, None).unwrap(), 0.0);
        let short = solve(&mixed(), &d, &TruncationPolicy::fixed(3), 1e-12).unwrap();
        assert!(short.tail_bound(Field::U, None).unwrap() > 0.0);
        assert_eq!(short.truncation().tail_status, TailStatus::Exact);
    }

    #[test]
    fn linearity() {
        let d = unit();
        let policy = TruncationPolicy::fixed(12);
        let f1 = bubble();
        let f2 = mixed();
        let s1 = solve(&f1, &d, &policy, 1e-13).unwrap();
        let s2 = solve(&f2, &d, &policy, 1e-13).unwrap();
        let s12 = solve(&f1.plus(&f2), &d, &policy, 1e-13).unwrap();
        for &(x, t) in &[(0.2, 0.5), (0.6, -0.7), (0.9, 1.0)] {
            for field in Field::ALL {
                let sum = s1.eval(field, x, t, Side::Auto).unwrap() + s2.eval(field, x, t, Side::Auto).unwrap();
                let whole = s12.eval(field, x, t, Side::Auto).unwrap();
                assert!((sum - whole).abs() <= 1e-10, "{field:?}");
            }
        }
    }

    #[test]
    fn adaptive_bubble_meets_tolerance() {
        let sol = solve(&bubble(), &unit(), &TruncationPolicy::adaptive(1e-8), 1e-13).unwrap();
        let tr = sol.truncation();
        assert!(tr.certified);
        assert_eq!(tr.tail_status, TailStatus::Fitted);
        assert!(tr.tail_bound <= 1e-8);
        assert!(tr.n_modes > 10 && tr.n_modes < 1024, "{}", tr.n_modes);
        let rate = tr.decay_fit.unwrap().rate;
        assert!((-3.2..=-2.8).contains(&rate), "{rate}");
    }

    #[test]
    fn tail_bound_decreases() {
        let d = unit();
        let a = solve(&bubble(), &d, &TruncationPolicy::fixed(10), 1e-13).unwrap();
        let b = solve(&bubble(), &d, &TruncationPolicy::fixed(20), 1e-13).unwrap();
        for field in Field::ALL {
            let ta = a.tail_bound(field, None).unwrap();
            let tb = b.tail_bound(field, None).unwrap();
            assert!(tb < ta, "{field:?}: {ta} {tb}");
        }
        // the bound dominates the actual difference to a longer truncation
        let long = solve(&bubble(), &d, &TruncationPolicy::fixed(200), 1e-13).unwrap();
        let mut worst = 0.0_f64;
        for i in 0..=10 {
            for j in 0..=10 {
                let (x, t) = (i as f64 / 10.0, -1.0 + j as f64 / 5.0);
                let side = if t >= 0.0 { Side::Plus } else { Side::Minus };
                let diff = a.eval_u(x, t, side).unwrap() - long.eval_u(x, t, side).unwrap();
                worst = worst.max(diff.abs());
            }
        }
        assert!(worst <= a.tail_bound(Field::U, None).unwrap());
    }

    #[test]
    fn adaptive_cap_is_reported() {
        let policy = TruncationPolicy::adaptive(1e-14).with_cap(8);
        let sol = solve(&bubble(), &unit(), &policy, 1e-13).unwrap();
        assert_eq!(sol.n_modes(), 8);
        assert!(!sol.truncation().certified);
    }

    #[test]
    fn rejected_forcing() {
        let f =
            Forcing::single(SpatialProfile::Sampled { values: vec![1.0, 0.5, 0.0] }, TemporalProfile::constant(1.0));
        assert!(matches!(solve(&f, &unit(), &TruncationPolicy::fixed(3), 1e-12), Err(Error::RejectedForcing(_))));
        assert!(TruncationPolicy::fixed(0).validate().is_err());
        assert!(TruncationPolicy::fixed(10).with_cap(5).validate().is_err());
        assert!(TruncationPolicy::adaptive(0.0).validate().is_err());
    }

    #[test]
    fn time_node_layout() {
        let odd = time_nodes(1.0, 5).unwrap();
        assert_eq!(odd.len(), 6);
        let labels: Vec<_> = odd.iter().map(|n| n.label()).collect();
        assert_eq!(labels, ["interior", "interior", "-", "+", "interior", "interior"]);
        assert_eq!(odd[0].t, -1.0);
        assert_eq!(odd[5].t, 1.0);
        assert_eq!(odd[1].t, -0.5);
        let even = time_nodes(1.0, 4).unwrap();
        assert_eq!(even.len(), 6);
        assert_eq!(even[2].t, 0.0);
        assert_eq!(even[3].t, 0.0);
        assert!(even.windows(2).all(|w| w[0].t <= w[1].t));
        assert!(time_nodes(1.0, 2).is_err());
        let x = uniform_x(PI, 7).unwrap();
        assert_eq!(x[0], 0.0);
        assert_eq!(x[6], PI);
    }

    #[test]
    fn grid_matches_pointwise_evaluation() {
        let sol = solve(&mixed(), &unit(), &TruncationPolicy::fixed(6), 1e-12).unwrap();
        let grid = sol.sample_grid(7, 9).unwrap();
        assert_eq!(grid.t.len(), 10);
        for (i, &x) in grid.x.iter().enumerate() {
            for (j, node) in grid.t.iter().enumerate() {
                let side = match node.region {
                    Region::Plus => Side::Plus,
                    Region::Minus => Side::Minus,
                };
                for field in Field::ALL {
                    let v = sol.eval(field, x, node.t, side).unwrap();
                    assert_eq!(grid.get(field, i, j).unwrap().to_bits(), v.to_bits());
                }
            }
        }
    }

    #[test]
    fn sampled_time_profile_has_no_utt() {
        let f = Forcing::single(
            SpatialProfile::SineMode { k: 1 },
            TemporalProfile::Sampled { values: vec![0.0, 0.3, 1.0, 0.8, 0.2] },
        );
        let sol = solve(&f, &unit(), &TruncationPolicy::fixed(2), 1e-10).unwrap();
        assert!(!sol.has_field(Field::Utt));
        let grid = sol.sample_grid(3, 3).unwrap();
        assert!(grid.u_tt.is_none());
        assert!(sol.tail_bound(Field::Utt, None).is_err());
    }
}
