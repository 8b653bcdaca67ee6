//! Checks of a computed solution against the problem it claims to solve.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::basis::{eigenpair, project, ModeForcing};
use crate::domain::{eval_f, Forcing, RectDomain};
use crate::fit::{fit_power_law, PowerLaw};
use crate::modes::{duhamel_hyp_dt, duhamel_par_dt, DerivativeForm, Field, ModeCoefficients, Region};
use crate::quadrature::{integrate, integrate_pieces, GaussLegendre, QuadOptions, NODES_PER_PANEL};
use crate::series::{solve, uniform_x, Side, SpectralSolution, TruncationPolicy, TruncationReport};
use crate::{Error, Result};

/// L-infinity and discrete L2 norm of a residual over one region.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Norms {
    pub linf: f64,
    /// `sqrt(sum r^2 dx dt)`.
    pub l2: f64,
}

impl Norms {
    fn from_samples(values: impl IntoIterator<Item = f64>, cell: f64) -> Self {
        let (mut linf, mut sq) = (0.0_f64, 0.0);
        for v in values {
            linf = linf.max(v.abs());
            sq += v * v;
        }
        Norms { linf, l2: (sq * cell).sqrt() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RegionNorms {
    /// `u_tt - u_xx - f` on `t > 0`.
    pub plus: Norms,
    /// `u_t + u_xx - f` on `t < 0`.
    pub minus: Norms,
}

impl RegionNorms {
    pub fn linf(&self) -> f64 {
        self.plus.linf.max(self.minus.linf)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub nx: usize,
    pub nt: usize,
    /// Spectral derivative fields against the projected forcing `S_N f`.
    pub spectral: RegionNorms,
    /// `u_tt` came from the mode equation because `f''` is unavailable.
    pub plus_via_identity: bool,
    /// Centered differences of `u` alone against `f`.
    pub stencil: RegionNorms,
    /// `max |f - S_N f|` over the grid.
    pub projection_error: f64,
}

/// Residuals of both equations on an `nx` by `nt` grid.
///
/// The spectral path evaluates the derivative series and compares with the
/// projected forcing; the stencil path differences `u` on separate grids of
/// `(nt + 1) / 2` levels per side and compares with `f` itself.
pub fn residual_pde(sol: &SpectralSolution, forcing: &Forcing, nx: usize, nt: usize) -> Result<ResidualReport> {
    let domain = *sol.domain();
    let grid = sol.sample_grid(nx, nt)?;
    let dx = domain.p() / (nx - 1) as f64;
    let dt = 2.0 * domain.t_max() / (nt - 1) as f64;
    let via_identity = grid.u_tt.is_none();

    let mut plus = Vec::new();
    let mut minus = Vec::new();
    let mut proj_err = 0.0_f64;
    let projected: Vec<Vec<f64>> =
        grid.t.iter().map(|node| sol.modes().iter().map(|m| m.forcing().value(node.t)).collect()).collect();
    for (i, &x) in grid.x.iter().enumerate().skip(1).take(nx - 2) {
        for (j, node) in grid.t.iter().enumerate() {
            let k = grid.index(i, j);
            let snf = sol.combine(x, &projected[j]);
            proj_err = proj_err.max((eval_f(forcing, &domain, x, node.t)? - snf).abs());
            match node.region {
                Region::Plus => {
                    let utt = match &grid.u_tt {
                        Some(v) => v[k],
                        None => {
                            let amps = sol
                                .modes()
                                .iter()
                                .map(|m| m.identity_form(DerivativeForm::AlphaDtt, node.t))
                                .collect::<Result<Vec<_>>>()?;
                            sol.combine(x, &amps)
                        }
                    };
                    plus.push(utt - grid.u_xx[k] - snf);
                }
                Region::Minus => minus.push(grid.u_t[k] + grid.u_xx[k] - snf),
            }
        }
    }
    let spectral = RegionNorms { plus: Norms::from_samples(plus, dx * dt), minus: Norms::from_samples(minus, dx * dt) };
    Ok(ResidualReport {
        nx,
        nt,
        spectral,
        plus_via_identity: via_identity,
        stencil: stencil_residual(sol, forcing, nx, nt.div_ceil(2).max(3))?,
        projection_error: proj_err,
    })
}

/// `u` on `levels` uniform time levels from 0 towards `sign * T`, rows by level.
fn u_rows(sol: &SpectralSolution, x: &[f64], levels: usize, region: Region) -> Result<(f64, Vec<Vec<f64>>)> {
    let t_max = sol.domain().t_max();
    let dt = t_max / (levels - 1) as f64;
    let sign = if region == Region::Plus { 1.0 } else { -1.0 };
    let rows = (0..levels)
        .map(|k| {
            let t = if k == levels - 1 { sign * t_max } else { sign * k as f64 * dt };
            let amps = sol.mode_amplitudes(Field::U, t, region)?;
            Ok(x.iter().map(|&xi| sol.combine(xi, &amps)).collect())
        })
        .collect::<Result<Vec<Vec<f64>>>>()?;
    Ok((dt, rows))
}

/// Stencil residual with `levels` time levels on each side of the seam.
pub fn stencil_residual(sol: &SpectralSolution, forcing: &Forcing, nx: usize, levels: usize) -> Result<RegionNorms> {
    let domain = *sol.domain();
    let x = uniform_x(domain.p(), nx)?;
    if levels < 3 {
        return Err(Error::InvalidArgument("stencil needs at least 3 levels per side".into()));
    }
    let dx = x[1] - x[0];
    let mut out = RegionNorms::default();
    for region in [Region::Plus, Region::Minus] {
        let (dt, rows) = u_rows(sol, &x, levels, region)?;
        let sign = if region == Region::Plus { 1.0 } else { -1.0 };
        let mut r = Vec::new();
        for k in 1..levels - 1 {
            let t = sign * k as f64 * dt;
            for i in 1..nx - 1 {
                let uxx = (rows[k][i - 1] - 2.0 * rows[k][i] + rows[k][i + 1]) / (dx * dx);
                let f = eval_f(forcing, &domain, x[i], t)?;
                r.push(match region {
                    Region::Plus => (rows[k + 1][i] - 2.0 * rows[k][i] + rows[k - 1][i]) / (dt * dt) - uxx - f,
                    // rows run towards -T, so the centered difference changes sign
                    Region::Minus => (rows[k - 1][i] - rows[k + 1][i]) / (2.0 * dt) + uxx - f,
                });
            }
        }
        let norms = Norms::from_samples(r, dx * dt);
        match region {
            Region::Plus => out.plus = norms,
            Region::Minus => out.minus = norms,
        }
    }
    Ok(out)
}

/// Seam jumps of `u`, `u_t`, `u_tt`; `u_tt` is `None` when not checked.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Jumps {
    pub u: f64,
    pub u_t: f64,
    pub u_tt: Option<f64>,
}

impl Jumps {
    pub fn max(&self) -> f64 {
        self.u.max(self.u_t).max(self.u_tt.unwrap_or(0.0))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConjugationReport {
    pub n_x_samples: usize,
    pub probe_offset: f64,
    /// Max over `x` of the one-sided series difference at `t = 0`.
    pub jumps: Jumps,
    /// The same from one-sided differences at `0, ±h, ±2h, ±3h`.
    pub fd_estimates: Jumps,
}

/// Seam jumps at `n_x_samples` uniform points including the walls.
pub fn check_conjugation(sol: &SpectralSolution, n_x_samples: usize, probe_offset: f64) -> Result<ConjugationReport> {
    let domain = sol.domain();
    if !(probe_offset > 0.0 && 3.0 * probe_offset <= domain.t_max()) {
        return Err(Error::InvalidArgument(format!("probe offset must lie in (0, T/3], got {probe_offset}")));
    }
    let x = uniform_x(domain.p(), n_x_samples)?;
    let has_utt = sol.has_field(Field::Utt);
    let row = |field: Field, t: f64, region: Region| -> Result<Vec<f64>> {
        let amps = sol.mode_amplitudes(field, t, region)?;
        Ok(x.iter().map(|&xi| sol.combine(xi, &amps)).collect())
    };
    let max_gap = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(p, m)| (p - m).abs()).fold(0.0, f64::max);

    let jumps = Jumps {
        u: max_gap(&row(Field::U, 0.0, Region::Plus)?, &row(Field::U, 0.0, Region::Minus)?),
        u_t: max_gap(&row(Field::Ut, 0.0, Region::Plus)?, &row(Field::Ut, 0.0, Region::Minus)?),
        u_tt: if has_utt {
            Some(max_gap(&row(Field::Utt, 0.0, Region::Plus)?, &row(Field::Utt, 0.0, Region::Minus)?))
        } else {
            None
        },
    };

    let h = probe_offset;
    let side = |region: Region, sign: f64| -> Result<[Vec<f64>; 4]> {
        Ok([
            row(Field::U, 0.0, region)?,
            row(Field::U, sign * h, region)?,
            row(Field::U, sign * 2.0 * h, region)?,
            row(Field::U, sign * 3.0 * h, region)?,
        ])
    };
    let p = side(Region::Plus, 1.0)?;
    let m = side(Region::Minus, -1.0)?;
    let value = |s: &[Vec<f64>; 4], i: usize| 3.0 * s[1][i] - 3.0 * s[2][i] + s[3][i];
    let slope = |s: &[Vec<f64>; 4], i: usize| (-3.0 * s[0][i] + 4.0 * s[1][i] - s[2][i]) / (2.0 * h);
    let curve = |s: &[Vec<f64>; 4], i: usize| (2.0 * s[0][i] - 5.0 * s[1][i] + 4.0 * s[2][i] - s[3][i]) / (h * h);
    let mut fd = Jumps { u: 0.0, u_t: 0.0, u_tt: has_utt.then_some(0.0) };
    for i in 0..x.len() {
        fd.u = fd.u.max((value(&p, i) - value(&m, i)).abs());
        // the minus samples run backwards in time
        fd.u_t = fd.u_t.max((slope(&p, i) + slope(&m, i)).abs());
        if let Some(j) = fd.u_tt.as_mut() {
            *j = j.max((curve(&p, i) - curve(&m, i)).abs());
        }
    }
    Ok(ConjugationReport { n_x_samples, probe_offset, jumps, fd_estimates: fd })
}

/// Outcome of the homogeneous-problem and projection round-trip checks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UniquenessReport {
    /// Every `a_n, b_n, c_n` of the zero-forcing solution is exactly 0.
    pub zero_coefficients: bool,
    /// Largest field value of the zero-forcing solution on a probe grid.
    pub zero_field_max: f64,
    /// `max |projected T_n - stored T_n|`, including one mode beyond `N`.
    pub roundtrip: f64,
    /// `max |alpha'' + lambda^2 alpha - f_n|` from projected fields.
    pub ode_residual_plus: f64,
    /// `max |beta' - lambda^2 beta - f_n|` from projected fields.
    pub ode_residual_minus: f64,
    /// Modes checked.
    pub modes: usize,
}

impl UniquenessReport {
    pub fn passes(&self, roundtrip_tol: f64, ode_tol: f64) -> bool {
        self.zero_coefficients
            && self.zero_field_max == 0.0
            && self.roundtrip <= roundtrip_tol
            && self.ode_residual_plus <= ode_tol
            && self.ode_residual_minus <= ode_tol
    }
}

/// `int_0^p field(x, t) X_n(x) dx`.
fn project_field(
    sol: &SpectralSolution,
    rule: &GaussLegendre,
    field: Field,
    t: f64,
    region: Region,
    n: usize,
) -> Result<f64> {
    let pair = eigenpair(n, sol.domain())?;
    let amps = sol.mode_amplitudes(field, t, region)?;
    let scale = amps.iter().fold(1.0_f64, |m, a| m.max(a.abs()));
    let top = (sol.n_modes() + n) as f64 * core::f64::consts::PI / pair.p;
    let opts = QuadOptions::new(1e-13 * scale).resolve_frequency(top, pair.p);
    Ok(integrate(rule, |x| sol.combine(x, &amps) * pair.x_n(x), 0.0, pair.p, opts)?.value)
}

/// Solves the homogeneous problem and checks that it is identically zero,
/// then projects the fields of the `probe` solution back onto the basis and
/// checks the mode equations.
pub fn uniqueness_probe(
    domain: &RectDomain,
    policy: &TruncationPolicy,
    probe: &Forcing,
    tol: f64,
) -> Result<UniquenessReport> {
    let zero = solve(&Forcing::zero(), domain, policy, tol)?;
    let zero_coefficients = zero.modes().iter().all(|m| *m.coefficients() == ModeCoefficients::ZERO);
    let mut zero_field_max = 0.0_f64;
    for i in 0..=8 {
        let x = domain.p() * i as f64 / 8.0;
        for j in 0..=8 {
            let t = domain.t_max() * (j as f64 / 4.0 - 1.0);
            let side = if t >= 0.0 { Side::Plus } else { Side::Minus };
            for field in Field::ALL {
                zero_field_max = zero_field_max.max(zero.eval(field, x, t, side)?.abs());
            }
        }
    }

    let sol = solve(probe, domain, policy, tol)?;
    let rule = GaussLegendre::new(NODES_PER_PANEL);
    let checked = sol.n_modes().min(4);
    let t_max = domain.t_max();
    let times = [0.25, 0.5, 1.0];
    let mut roundtrip = 0.0_f64;
    let (mut res_plus, mut res_minus) = (0.0_f64, 0.0_f64);
    for n in 1..=checked + 1 {
        for &frac in &times {
            for (region, t) in [(Region::Plus, frac * t_max), (Region::Minus, -frac * t_max)] {
                let projected = project_field(&sol, &rule, Field::U, t, region, n)?;
                let stored = match sol.mode(n) {
                    Some(m) => m.amplitude(Field::U, t, region)?,
                    None => 0.0,
                };
                roundtrip = roundtrip.max((projected - stored).abs());
                if n > sol.n_modes() {
                    continue;
                }
                let pair = eigenpair(n, domain)?;
                let l2 = pair.lambda * pair.lambda;
                let f_n = project(probe, domain, &pair, t, 1e-13)?;
                match region {
                    Region::Plus => {
                        let dtt = if sol.has_field(Field::Utt) {
                            project_field(&sol, &rule, Field::Utt, t, region, n)?
                        } else {
                            project_field(&sol, &rule, Field::Uxx, t, region, n)? + f_n
                        };
                        res_plus = res_plus.max((dtt + l2 * projected - f_n).abs());
                    }
                    Region::Minus => {
                        let dt = project_field(&sol, &rule, Field::Ut, t, region, n)?;
                        res_minus = res_minus.max((dt - l2 * projected - f_n).abs());
                    }
                }
            }
        }
    }
    Ok(UniquenessReport {
        zero_coefficients,
        zero_field_max,
        roundtrip,
        ode_residual_plus: res_plus,
        ode_residual_minus: res_minus,
        modes: checked,
    })
}

/// One inequality check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundCheck {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub pass: bool,
}

impl BoundCheck {
    fn new(name: String, lhs: f64, rhs: f64) -> Self {
        // relative slack for quadrature error in either side
        let pass = lhs <= rhs * (1.0 + 1e-10) + 1e-14;
        BoundCheck { name, lhs, rhs, pass }
    }
}

/// `||f_n^(order)||_{L2(lo, hi)}` by quadrature.
fn l2_norm(samples: &ModeForcing, order: u8, lo: f64, hi: f64) -> Result<f64> {
    let rule = GaussLegendre::new(NODES_PER_PANEL);
    let mut breaks = alloc::vec![lo];
    breaks.extend(samples.knots_in(lo, hi));
    breaks.push(hi);
    let mut failure = None;
    let est = integrate_pieces(
        &rule,
        |t| match samples.derivative(t, order) {
            Ok(v) => v * v,
            Err(e) => {
                failure = Some(e);
                0.0
            }
        },
        &breaks,
        QuadOptions::new(1e-14).min_panels(8),
    )?;
    match failure {
        Some(e) => Err(e),
        None => Ok(est.value.max(0.0).sqrt()),
    }
}

/// Integral bounds for one mode at `trials` random times:
/// `|int_t^0 f^(k) exp(lambda^2 (t - tau))| <= ||f^(k)||_{L2(-T,0)} / (sqrt 2 lambda)` and
/// `|(1/lambda) int_0^t f^(k) sin(lambda (t - tau))| <= sqrt(T) ||f^(k)||_{L2(0,T)} / lambda`,
/// for every order `k <= 2` the forcing supports.
pub fn lemma2_bound_check<R: Rng + ?Sized>(
    samples: &ModeForcing,
    lambda: f64,
    domain: &RectDomain,
    trials: usize,
    rng: &mut R,
) -> Result<Vec<BoundCheck>> {
    if trials == 0 {
        return Err(Error::InvalidArgument("lemma2_bound_check needs trials >= 1".into()));
    }
    let t_max = domain.t_max();
    let mut out = Vec::new();
    for order in 0..=samples.max_order().min(2) {
        let norm_minus = l2_norm(samples, order, -t_max, 0.0)?;
        let norm_plus = l2_norm(samples, order, 0.0, t_max)?;
        let rhs_par = norm_minus / (core::f64::consts::SQRT_2 * lambda);
        let rhs_hyp = t_max.sqrt() * norm_plus / lambda;
        for trial in 0..trials {
            let t_minus = -t_max * rng.gen_range(0.0..=1.0);
            let t_plus = t_max * rng.gen_range(0.0..=1.0);
            let par = duhamel_par_dt(samples, lambda, t_minus, order, 1e-13)?.abs();
            let hyp = duhamel_hyp_dt(samples, lambda, t_plus, order, 1e-13)?.abs();
            out.push(BoundCheck::new(format!("lemma2_par_k{order}_trial{trial}"), par, rhs_par));
            out.push(BoundCheck::new(format!("lemma2_hyp_k{order}_trial{trial}"), hyp, rhs_hyp));
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DegeneracyValue {
    pub n: usize,
    pub lambda: f64,
    /// `cos(lambda_n T) + lambda_n sin(lambda_n T)`.
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegeneracyScan {
    pub p: f64,
    pub t_max: f64,
    pub values: Vec<DegeneracyValue>,
    pub min_abs: f64,
    pub argmin: usize,
}

/// Tabulates `cos(lambda_n T) + lambda_n sin(lambda_n T)` for `n = 1..=n_max`.
pub fn degeneracy_scan(p: f64, t_max: f64, n_max: usize) -> Result<DegeneracyScan> {
    if !(p > 0.0 && p.is_finite()) || !(t_max >= 0.0 && t_max.is_finite()) {
        return Err(Error::InvalidDomain(format!("need p > 0 and T >= 0, got p = {p}, T = {t_max}")));
    }
    if n_max == 0 {
        return Err(Error::InvalidArgument("n_max must be >= 1".into()));
    }
    let values: Vec<DegeneracyValue> = (1..=n_max)
        .map(|n| {
            let lambda = n as f64 * core::f64::consts::PI / p;
            let (s, c) = (lambda * t_max).sin_cos();
            DegeneracyValue { n, lambda, value: c + lambda * s }
        })
        .collect();
    let (argmin, min_abs) =
        values
            .iter()
            .map(|v| (v.n, v.value.abs()))
            .fold((0, f64::INFINITY), |best, cur| if cur.1 < best.1 { cur } else { best });
    Ok(DegeneracyScan { p, t_max, values, min_abs, argmin })
}

/// Per-field L-infinity errors; `u_tt` is `None` when unavailable.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct FieldErrors {
    pub u: f64,
    pub u_t: f64,
    pub u_tt: Option<f64>,
    pub u_xx: f64,
}

impl FieldErrors {
    pub fn get(&self, field: Field) -> Option<f64> {
        match field {
            Field::U => Some(self.u),
            Field::Ut => Some(self.u_t),
            Field::Utt => self.u_tt,
            Field::Uxx => Some(self.u_xx),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub n: usize,
    pub errors: FieldErrors,
    pub tail_bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceStudy {
    pub reference_n: usize,
    pub rows: Vec<ConvergenceRow>,
    /// Log-log slope of error against `N` per field; `None` with fewer than
    /// two nonzero errors.
    pub slopes: FieldSlopes,
    pub decay_fit: Option<PowerLaw>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct FieldSlopes {
    pub u: Option<f64>,
    pub u_t: Option<f64>,
    pub u_tt: Option<f64>,
    pub u_xx: Option<f64>,
}

/// Errors of the truncations `n_list` against `reference_n` modes on an
/// `nx` by `nt` grid.
pub fn convergence_study(
    forcing: &Forcing,
    domain: &RectDomain,
    n_list: &[usize],
    reference_n: usize,
    nx: usize,
    nt: usize,
    tol: f64,
) -> Result<ConvergenceStudy> {
    let max_n = n_list.iter().copied().max().unwrap_or(0);
    if n_list.is_empty() || n_list.contains(&0) || reference_n <= max_n {
        return Err(Error::InvalidArgument(format!(
            "need a nonempty list of N >= 1 below reference_n = {reference_n}"
        )));
    }
    let reference = solve(forcing, domain, &TruncationPolicy::fixed(reference_n), tol)?;
    let ref_grid = reference.sample_grid(nx, nt)?;
    let mut rows = Vec::with_capacity(n_list.len());
    for &n in n_list {
        let sol = reference.truncated(n)?;
        let grid = sol.sample_grid(nx, nt)?;
        let err = |field: Field| -> Option<f64> {
            let (a, b) = (grid.values(field)?, ref_grid.values(field)?);
            Some(a.iter().zip(b).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
        };
        rows.push(ConvergenceRow {
            n,
            errors: FieldErrors {
                u: err(Field::U).unwrap_or(0.0),
                u_t: err(Field::Ut).unwrap_or(0.0),
                u_tt: err(Field::Utt),
                u_xx: err(Field::Uxx).unwrap_or(0.0),
            },
            tail_bound: sol.truncation().tail_bound,
        });
    }
    let slope = |field: Field| {
        fit_power_law(rows.iter().filter_map(|r| r.errors.get(field).map(|e| (r.n as f64, e)))).map(|f| f.rate)
    };
    Ok(ConvergenceStudy {
        reference_n,
        slopes: FieldSlopes {
            u: slope(Field::U),
            u_t: slope(Field::Ut),
            u_tt: slope(Field::Utt),
            u_xx: slope(Field::Uxx),
        },
        rows,
        decay_fit: reference.truncation().decay_fit,
    })
}

/// Tolerances of the full report.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Spectral residual, L-infinity.
    pub residual: f64,
    pub jump: f64,
    pub boundary: f64,
    pub roundtrip: f64,
    pub ode: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { residual: 1e-7, jump: 1e-9, boundary: 1e-15, roundtrip: 1e-9, ode: 1e-7 }
    }
}

/// Settings of [`verify_solution`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VerifyOptions {
    pub nx: usize,
    pub nt: usize,
    pub n_x_samples: usize,
    pub probe_offset: f64,
    pub lemma_trials: usize,
    /// Modes whose integral bounds are checked.
    pub lemma_modes: usize,
    pub tolerances: Tolerances,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            nx: 65,
            nt: 65,
            n_x_samples: 33,
            probe_offset: 1e-3,
            lemma_trials: 100,
            lemma_modes: 3,
            tolerances: Tolerances::default(),
        }
    }
}

/// One gated or informational quantity of the report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    /// `None` for informational entries, which never fail.
    pub tol: Option<f64>,
    pub pass: bool,
}

impl Check {
    fn gated(name: &str, value: f64, tol: f64) -> Self {
        Check { name: name.into(), value, tol: Some(tol), pass: value <= tol }
    }

    fn info(name: &str, value: f64) -> Self {
        Check { name: name.into(), value, tol: None, pass: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub residuals: ResidualReport,
    /// Max `|u|` over both walls on the residual grid.
    pub boundary_max: f64,
    pub conjugation: ConjugationReport,
    pub uniqueness: UniquenessReport,
    pub bound_checks: Vec<BoundCheck>,
    pub decay_fit: Option<PowerLaw>,
    pub truncation: TruncationReport,
    pub tolerances: Tolerances,
    pub checks: Vec<Check>,
    pub pass: bool,
}

/// Runs every check on `sol`, which must have been solved for `forcing`.
pub fn verify_solution<R: Rng + ?Sized>(
    sol: &SpectralSolution,
    forcing: &Forcing,
    options: &VerifyOptions,
    rng: &mut R,
) -> Result<VerificationReport> {
    let tol = options.tolerances;
    let residuals = residual_pde(sol, forcing, options.nx, options.nt)?;
    let grid = sol.sample_grid(options.nx, options.nt)?;
    let last = grid.x.len() - 1;
    let boundary_max = (0..grid.t.len())
        .flat_map(|j| [grid.u[grid.index(0, j)], grid.u[grid.index(last, j)]])
        .fold(0.0, |m: f64, v| m.max(v.abs()));
    debug_assert!(wall_flux_ok(sol)?, "d * u_x does not vanish towards the walls");

    let conjugation = check_conjugation(sol, options.n_x_samples, options.probe_offset)?;
    let policy = TruncationPolicy::fixed(sol.n_modes());
    let uniqueness = uniqueness_probe(sol.domain(), &policy, forcing, sol.tol())?;
    let mut bound_checks = Vec::new();
    for m in sol.modes().iter().take(options.lemma_modes) {
        for mut c in lemma2_bound_check(m.forcing(), m.lambda(), sol.domain(), options.lemma_trials, rng)? {
            c.name = format!("mode{}_{}", m.pair().n, c.name);
            bound_checks.push(c);
        }
    }

    let mut checks = alloc::vec![
        Check::gated("residual_spectral_plus_linf", residuals.spectral.plus.linf, tol.residual),
        Check::gated("residual_spectral_minus_linf", residuals.spectral.minus.linf, tol.residual),
        Check::info("residual_stencil_plus_linf", residuals.stencil.plus.linf),
        Check::info("residual_stencil_minus_linf", residuals.stencil.minus.linf),
        Check::info("forcing_projection_error", residuals.projection_error),
        Check::gated("boundary_max", boundary_max, tol.boundary),
        Check::gated("jump_u", conjugation.jumps.u, tol.jump),
        Check::gated("jump_u_t", conjugation.jumps.u_t, tol.jump),
    ];
    if let Some(j) = conjugation.jumps.u_tt {
        checks.push(Check::gated("jump_u_tt", j, tol.jump));
    }
    checks.push(Check::gated(
        "uniqueness_zero_field",
        if uniqueness.zero_coefficients { uniqueness.zero_field_max } else { f64::INFINITY },
        0.0,
    ));
    checks.push(Check::gated("projection_roundtrip", uniqueness.roundtrip, tol.roundtrip));
    checks.push(Check::gated("ode_residual_plus", uniqueness.ode_residual_plus, tol.ode));
    checks.push(Check::gated("ode_residual_minus", uniqueness.ode_residual_minus, tol.ode));
    let failed_bounds = bound_checks.iter().filter(|c| !c.pass).count();
    checks.push(Check::gated("lemma2_failures", failed_bounds as f64, 0.0));
    checks.push(Check::info("tail_bound_u", sol.truncation().tail_bound));

    let pass = checks.iter().all(|c| c.pass);
    Ok(VerificationReport {
        residuals,
        boundary_max,
        conjugation,
        uniqueness,
        bound_checks,
        decay_fit: sol.truncation().decay_fit,
        truncation: sol.truncation().clone(),
        tolerances: tol,
        checks,
        pass,
    })
}

/// `d(x) |u_x|` one thousandth of the width away from each wall, against
/// `1e-2 max |u|`, over a few times; `d` is the distance to the wall.
fn wall_flux_ok(sol: &SpectralSolution) -> Result<bool> {
    let p = sol.domain().p();
    let d = 1e-3 * p;
    let t_max = sol.domain().t_max();
    let mut flux = 0.0_f64;
    let mut umax = 0.0_f64;
    for t in [-t_max, -0.5 * t_max, 0.5 * t_max, t_max] {
        for x in [d, p - d] {
            flux = flux.max(d * sol.eval_ux(x, t, Side::Auto)?.abs());
        }
        for i in 0..=16 {
            umax = umax.max(sol.eval_u(p * i as f64 / 16.0, t, Side::Auto)?.abs());
        }
    }
    Ok(flux <= 1e-2 * umax.max(f64::MIN_POSITIVE) || flux == 0.0)
}
