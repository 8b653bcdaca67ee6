//! Reference computations that do not reuse the closed-form solution.
//!
//! * [`conjugation_solve`] recovers the seam coefficients from a 3x3 system
//!   built from the general mode solutions and the three seam conditions.
//! * [`integrate_mode_hyp`] and [`integrate_mode_par`] march the mode ODEs.
//! * [`fd_propagate`] propagates seam data through the PDE on a grid.
//! * [`quad_reference`] recomputes projections with a denser rule.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::basis::{Eigenpair, ModeForcing, Projector};
use crate::domain::{eval_f, Forcing, RectDomain};
use crate::modes::{Field, ModeCoefficients, Region};
use crate::series::{uniform_x, SpectralSolution};
use crate::{Error, Result};

/// RK4 accuracy guard: steps must satisfy `h <= RK4_STEP_FACTOR / lambda`.
pub const RK4_STEP_FACTOR: f64 = 0.05;

/// Tolerance of [`quad_reference`].
pub const REFERENCE_TOL: f64 = 1e-13;

/// Density multiplier of [`quad_reference`].
pub const REFERENCE_DENSITY: usize = 10;

/// Seam conditions for one mode as a linear system in `(a, b, c)`.
///
/// With `alpha = a cos + b sin + particular` and `beta = c exp(lambda^2 t) + particular`
/// (both particular parts vanishing at `t = 0`), the mode ODEs give
/// `alpha(0) = a`, `alpha'(0) = lambda b`, `alpha''(0) = f(0) - lambda^2 a` and
/// `beta(0) = c`, `beta'(0) = lambda^2 c + f(0)`, `beta''(0) = lambda^2 beta'(0) + f'(0)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConjugationSystem {
    pub matrix: [[f64; 3]; 3],
    pub rhs: [f64; 3],
}

impl ConjugationSystem {
    pub fn assemble(f_n0: f64, fp_n0: f64, lambda: f64) -> Self {
        let l2 = lambda * lambda;
        ConjugationSystem {
            matrix: [[1.0, 0.0, -1.0], [0.0, lambda, -l2], [-l2, 0.0, -l2 * l2]],
            rhs: [0.0, f_n0, l2 * f_n0 + fp_n0 - f_n0],
        }
    }

    pub fn determinant(&self) -> f64 {
        let m = &self.matrix;
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }

    /// Gaussian elimination with partial pivoting.
    pub fn solve(&self) -> Result<[f64; 3]> {
        let mut m = self.matrix;
        let mut r = self.rhs;
        for col in 0..3 {
            let pivot = (col..3).max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs())).expect("non-empty range");
            if m[pivot][col] == 0.0 {
                return Err(Error::Numerical("singular conjugation system".into()));
            }
            m.swap(col, pivot);
            r.swap(col, pivot);
            for row in col + 1..3 {
                let k = m[row][col] / m[col][col];
                for c in col..3 {
                    m[row][c] -= k * m[col][c];
                }
                r[row] -= k * r[col];
            }
        }
        let mut x = [0.0; 3];
        for row in (0..3).rev() {
            let mut s = r[row];
            for c in row + 1..3 {
                s -= m[row][c] * x[c];
            }
            x[row] = s / m[row][row];
        }
        Ok(x)
    }
}

/// Seam coefficients from the first-principles system.
pub fn conjugation_solve(f_n0: f64, fp_n0: f64, lambda: f64) -> Result<ModeCoefficients> {
    if !(lambda > 0.0) {
        return Err(Error::InvalidArgument("lambda must be > 0".into()));
    }
    let [a, b, c] = ConjugationSystem::assemble(f_n0, fp_n0, lambda).solve()?;
    Ok(ModeCoefficients { a, b, c })
}

/// Step of a uniform grid starting at 0; the sign gives the direction.
fn uniform_step(t_grid: &[f64]) -> Result<f64> {
    if t_grid.len() < 2 {
        return Err(Error::InvalidArgument("time grid needs at least 2 points".into()));
    }
    if t_grid[0] != 0.0 {
        return Err(Error::InvalidArgument("time grid must start at t = 0".into()));
    }
    let h = t_grid[1];
    let span = t_grid[t_grid.len() - 1].abs().max(1.0);
    for (i, t) in t_grid.iter().enumerate() {
        if (t - i as f64 * h).abs() > 1e-12 * span {
            return Err(Error::InvalidArgument("time grid must be uniform".into()));
        }
    }
    if h == 0.0 {
        return Err(Error::InvalidArgument("time grid step is zero".into()));
    }
    Ok(h)
}

/// Classical RK4 for `alpha'' + lambda^2 alpha = f_n` with `alpha(0) = a`,
/// `alpha'(0) = lambda b`, reported at the nodes of the uniform grid `t_grid`
/// (starting at 0, increasing, within `[0, T]`).
pub fn integrate_mode_hyp(samples: &ModeForcing, lambda: f64, a: f64, b: f64, t_grid: &[f64]) -> Result<Vec<f64>> {
    let h = uniform_step(t_grid)?;
    if h < 0.0 || t_grid[t_grid.len() - 1] > samples.t_max() {
        return Err(Error::InvalidArgument("hyperbolic grid must run forward inside [0, T]".into()));
    }
    let limit = RK4_STEP_FACTOR / lambda;
    if h > limit {
        return Err(Error::StepTooLarge { step: h, limit });
    }
    let l2 = lambda * lambda;
    let rhs = |t: f64, y: [f64; 2]| [y[1], samples.value(t) - l2 * y[0]];
    let mut y = [a, lambda * b];
    let mut out = Vec::with_capacity(t_grid.len());
    out.push(y[0]);
    for &t in &t_grid[..t_grid.len() - 1] {
        let k1 = rhs(t, y);
        let k2 = rhs(t + 0.5 * h, [y[0] + 0.5 * h * k1[0], y[1] + 0.5 * h * k1[1]]);
        let k3 = rhs(t + 0.5 * h, [y[0] + 0.5 * h * k2[0], y[1] + 0.5 * h * k2[1]]);
        let k4 = rhs(t + h, [y[0] + h * k3[0], y[1] + h * k3[1]]);
        for i in 0..2 {
            y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        out.push(y[0]);
    }
    Ok(out)
}

/// `int_0^1 theta^k exp(-mu theta) dtheta` for `k = 0..=3`, `mu >= 0`.
fn exp_moments(mu: f64) -> [f64; 4] {
    let mut m = [0.0; 4];
    if mu < 1.0 {
        for (k, mk) in m.iter_mut().enumerate() {
            let mut term = 1.0;
            let mut sum = 0.0;
            for j in 0..40 {
                if j > 0 {
                    term *= -mu / j as f64;
                }
                sum += term / (k + j + 1) as f64;
                if term.abs() < 1e-18 {
                    break;
                }
            }
            *mk = sum;
        }
    } else {
        let e = (-mu).exp();
        m[0] = -(-mu).exp_m1() / mu;
        for k in 1..4 {
            m[k] = (k as f64 * m[k - 1] - e) / mu;
        }
    }
    m
}

/// Monomial coefficients of the cubic Lagrange basis on `0, 1/3, 2/3, 1`.
const LAGRANGE: [[f64; 4]; 4] =
    [[1.0, -5.5, 9.0, -4.5], [0.0, 9.0, -22.5, 13.5], [0.0, -4.5, 18.0, -13.5], [0.0, 1.0, -4.5, 4.5]];

/// Exponential integrator for `beta' - lambda^2 beta = f_n` with `beta(0) = c`,
/// marched from 0 towards `-T` along the uniform grid `t_grid`
/// (`0, -h, -2h, ...`). The source is interpolated by a cubic on each step
/// and integrated against the exact decay factor.
pub fn integrate_mode_par(samples: &ModeForcing, lambda: f64, c: f64, t_grid: &[f64]) -> Result<Vec<f64>> {
    let h = uniform_step(t_grid)?;
    if h > 0.0 {
        return Err(Error::ForwardMarch);
    }
    if t_grid[t_grid.len() - 1] < -samples.t_max() {
        return Err(Error::InvalidArgument("parabolic grid leaves [-T, 0]".into()));
    }
    let h = -h;
    let mu = lambda * lambda * h;
    let decay = (-mu).exp();
    let mom = exp_moments(mu);
    let w: Vec<f64> = LAGRANGE.iter().map(|l| l.iter().zip(&mom).map(|(c, m)| c * m).sum()).collect();
    let mut beta = c;
    let mut out = Vec::with_capacity(t_grid.len());
    out.push(beta);
    for &t in &t_grid[..t_grid.len() - 1] {
        let lo = t - h;
        let source: f64 = (0..4).map(|i| w[i] * samples.value(lo + i as f64 / 3.0 * h)).sum();
        beta = decay * beta - h * source;
        out.push(beta);
    }
    Ok(out)
}

/// Seam data driving [`fd_propagate_from`].
#[derive(Debug, Clone, PartialEq)]
pub struct SeamData {
    /// `u(x_i, 0+)`.
    pub u_plus: Vec<f64>,
    /// `u_t(x_i, 0+)`.
    pub ut_plus: Vec<f64>,
    /// `u(x_i, 0-)`.
    pub u_minus: Vec<f64>,
}

impl SeamData {
    /// One-sided seam values of `sol` at `nx` uniform nodes.
    pub fn from_solution(sol: &SpectralSolution, nx: usize) -> Result<Self> {
        let x = uniform_x(sol.domain().p(), nx)?;
        let row = |field, region| -> Result<Vec<f64>> {
            let amps = sol.mode_amplitudes(field, 0.0, region)?;
            Ok(x.iter().map(|&x| sol.combine(x, &amps)).collect())
        };
        Ok(SeamData {
            u_plus: row(Field::U, Region::Plus)?,
            ut_plus: row(Field::Ut, Region::Plus)?,
            u_minus: row(Field::U, Region::Minus)?,
        })
    }
}

/// Grid propagation compared against the spectral solution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FdReport {
    pub nx: usize,
    pub nt: usize,
    pub dx: f64,
    pub dt_plus: f64,
    pub dt_minus: f64,
    /// `u` on `[0, T]`, one row per time level `k dt_plus`.
    pub u_plus: Vec<Vec<f64>>,
    /// `u` on `[-T, 0]`, one row per time level `-k dt_minus`.
    pub u_minus: Vec<Vec<f64>>,
    /// Max over `x` of the deviation from the spectral field, per level.
    pub dev_plus: Vec<f64>,
    pub dev_minus: Vec<f64>,
    pub max_deviation: f64,
}

/// Leapfrog on `[0, T]` and Crank-Nicolson on `[-T, 0]` (as a forward heat
/// problem in `tau = -t`), both seeded with the spectral seam data. `nt` is
/// the number of time levels on each side of the seam.
pub fn fd_propagate(sol: &SpectralSolution, forcing: &Forcing, nx: usize, nt: usize) -> Result<FdReport> {
    let seed = SeamData::from_solution(sol, nx)?;
    fd_propagate_from(sol, forcing, nx, nt, &seed)
}

/// [`fd_propagate`] with explicit seam data.
pub fn fd_propagate_from(
    sol: &SpectralSolution,
    forcing: &Forcing,
    nx: usize,
    nt: usize,
    seed: &SeamData,
) -> Result<FdReport> {
    let domain = *sol.domain();
    let x = uniform_x(domain.p(), nx)?;
    if nt < 2 {
        return Err(Error::InvalidArgument("need at least 2 time levels per side".into()));
    }
    if [&seed.u_plus, &seed.ut_plus, &seed.u_minus].iter().any(|v| v.len() != nx) {
        return Err(Error::InvalidArgument("seam data must have one value per x node".into()));
    }
    let dx = domain.p() / (nx - 1) as f64;
    let dt = domain.t_max() / (nt - 1) as f64;
    if dt > dx * (1.0 + 1e-12) {
        return Err(Error::Cfl { dt, dx });
    }
    let f_row = |t: f64| -> Result<Vec<f64>> { x.iter().map(|&xi| eval_f(forcing, &domain, xi, t)).collect() };
    let lap = |u: &[f64], i: usize| (u[i - 1] - 2.0 * u[i] + u[i + 1]) / (dx * dx);

    // hyperbolic side
    let mut u_plus = Vec::with_capacity(nt);
    let u0 = pin(seed.u_plus.clone());
    let f0 = f_row(0.0)?;
    let mut u1 = vec![0.0; nx];
    for i in 1..nx - 1 {
        u1[i] = u0[i] + dt * seed.ut_plus[i] + 0.5 * dt * dt * (lap(&u0, i) + f0[i]);
    }
    u_plus.push(u0);
    u_plus.push(u1);
    for k in 1..nt - 1 {
        let t = k as f64 * dt;
        let fk = f_row(t)?;
        let (prev, cur) = (&u_plus[k - 1], &u_plus[k]);
        let mut next = vec![0.0; nx];
        for i in 1..nx - 1 {
            next[i] = 2.0 * cur[i] - prev[i] + dt * dt * (lap(cur, i) + fk[i]);
        }
        u_plus.push(next);
    }

    // parabolic side: v(tau) = u(-tau), v_tau = v_xx - f(x, -tau)
    let r = 0.5 * dt / (dx * dx);
    let m = nx - 2;
    let mut u_minus = Vec::with_capacity(nt);
    u_minus.push(pin(seed.u_minus.clone()));
    let mut f_prev = f_row(0.0)?;
    for k in 1..nt {
        let t_next = -(k as f64) * dt;
        let f_next = f_row(t_next.max(-domain.t_max()))?;
        let v = &u_minus[k - 1];
        let mut rhs = vec![0.0; m];
        for j in 0..m {
            let i = j + 1;
            rhs[j] = v[i] + r * (v[i - 1] - 2.0 * v[i] + v[i + 1]) - 0.5 * dt * (f_prev[i] + f_next[i]);
        }
        let interior = thomas(-r, 1.0 + 2.0 * r, -r, &rhs);
        let mut next = vec![0.0; nx];
        next[1..nx - 1].copy_from_slice(&interior);
        u_minus.push(next);
        f_prev = f_next;
    }

    let deviation = |rows: &[Vec<f64>], region: Region, sign: f64| -> Result<Vec<f64>> {
        rows.iter()
            .enumerate()
            .map(|(k, row)| {
                let t = (sign * k as f64 * dt).clamp(-domain.t_max(), domain.t_max());
                let amps = sol.mode_amplitudes(Field::U, t, region)?;
                Ok(x.iter().zip(row).map(|(&xi, v)| (v - sol.combine(xi, &amps)).abs()).fold(0.0, f64::max))
            })
            .collect()
    };
    let dev_plus = deviation(&u_plus, Region::Plus, 1.0)?;
    let dev_minus = deviation(&u_minus, Region::Minus, -1.0)?;
    let max_deviation = dev_plus.iter().chain(&dev_minus).fold(0.0, |a: f64, b| a.max(*b));
    Ok(FdReport { nx, nt, dx, dt_plus: dt, dt_minus: dt, u_plus, u_minus, dev_plus, dev_minus, max_deviation })
}

/// Zeroes the wall values.
fn pin(mut u: Vec<f64>) -> Vec<f64> {
    let n = u.len();
    u[0] = 0.0;
    u[n - 1] = 0.0;
    u
}

/// Constant-coefficient tridiagonal solve.
fn thomas(lower: f64, diag: f64, upper: f64, rhs: &[f64]) -> Vec<f64> {
    let m = rhs.len();
    let mut c = vec![0.0; m];
    let mut d = vec![0.0; m];
    c[0] = upper / diag;
    d[0] = rhs[0] / diag;
    for i in 1..m {
        let den = diag - lower * c[i - 1];
        c[i] = upper / den;
        d[i] = (rhs[i] - lower * d[i - 1]) / den;
    }
    let mut x = vec![0.0; m];
    x[m - 1] = d[m - 1];
    for i in (0..m - 1).rev() {
        x[i] = d[i] - c[i] * x[i + 1];
    }
    x
}

/// `f_n(t)` with ten times the panel density and tolerance 1e-13.
pub fn quad_reference(forcing: &Forcing, pair: &Eigenpair, t: f64, domain: &RectDomain) -> Result<f64> {
    domain.check(0.0, t)?;
    let projector = Projector::new(*domain).with_density(REFERENCE_DENSITY);
    let m = forcing.terms.len().max(1) as f64;
    let mut sum = 0.0;
    for term in &forcing.terms {
        let g = term.temporal.eval(t, domain.t_max());
        if g != 0.0 {
            sum += g * projector.spatial_weight(&term.spatial, pair, REFERENCE_TOL / (m * g.abs()))?;
        }
    }
    Ok(sum)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::eigenpair;
    use crate::domain::{SpatialProfile, TemporalProfile};
    use crate::modes::mode_coefficients;
    use crate::series::{solve, TruncationPolicy};
    use core::f64::consts::PI;

    #[test]
    fn conjugation_examples() {
        assert_eq!(conjugation_solve(0.0, 0.0, 2.0).unwrap(), ModeCoefficients::ZERO);
        let k = conjugation_solve(1.0, 0.0, PI).unwrap();
        let closed = mode_coefficients(1.0, 0.0, PI);
        assert!((k.a - closed.a).abs() <= 1e-12);
        assert!((k.b - closed.b).abs() <= 1e-12);
        assert!((k.c - closed.c).abs() <= 1e-12);
        assert!((k.a + 0.082678).abs() < 1e-6 && (k.b - 0.058569).abs() < 1e-6);
        let k = conjugation_solve(0.0, 1.0, 1.0).unwrap();
        for v in [k.a, k.b, k.c] {
            assert!((v + 0.5).abs() <= 1e-15);
        }
        assert!(conjugation_solve(1.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn determinant_is_nonzero() {
        for n in 1..=20 {
            let l = n as f64 * PI / 3.0;
            let det = ConjugationSystem::assemble(1.0, 1.0, l).determinant();
            let exact = -l.powi(3) * (l * l + 1.0);
            assert!((det - exact).abs() <= 1e-12 * exact.abs());
            assert!(det.abs() >= l.powi(3));
        }
    }

    fn grid(h: f64, steps: usize) -> Vec<f64> {
        (0..=steps).map(|k| k as f64 * h).collect()
    }

    #[test]
    fn rk4_examples() {
        let zero = ModeForcing::zero(1.0);
        let t = grid(0.01, 100);
        let alpha = integrate_mode_hyp(&zero, 2.0, 1.0, 0.0, &t).unwrap();
        for (a, t) in alpha.iter().zip(&t) {
            assert!((a - (2.0 * t).cos()).abs() <= 1e-8);
        }
        let one = ModeForcing::scalar(TemporalProfile::constant(1.0), 1.0);
        let alpha = integrate_mode_hyp(&one, 1.0, 0.0, 0.0, &t).unwrap();
        for (a, t) in alpha.iter().zip(&t) {
            assert!((a - (1.0 - t.cos())).abs() <= 1e-10);
        }
        assert!(matches!(integrate_mode_hyp(&one, 10.0, 0.0, 0.0, &grid(0.01, 10)), Err(Error::StepTooLarge { .. })));
    }

    #[test]
    fn rk4_error_drops_sixteenfold() {
        let one = ModeForcing::scalar(TemporalProfile::constant(1.0), 1.0);
        let err = |h: f64| {
            let t = grid(h, (1.0 / h).round() as usize);
            let a = integrate_mode_hyp(&one, 5.0, 0.2, 0.1, &t).unwrap();
            let exact = |t: f64| 0.2 * (5.0 * t).cos() + 0.1 * (5.0 * t).sin() + (1.0 - (5.0 * t).cos()) / 25.0;
            a.iter().zip(&t).map(|(a, t)| (a - exact(*t)).abs()).fold(0.0, f64::max)
        };
        let ratio = err(0.01) / err(0.005);
        assert!((14.0..18.0).contains(&ratio), "{ratio}");
    }

    #[test]
    fn exponential_integrator_examples() {
        let zero = ModeForcing::zero(1.0);
        let t: Vec<f64> = (0..=100).map(|k| -(k as f64) * 0.01).collect();
        let beta = integrate_mode_par(&zero, 1.0, 1.0, &t).unwrap();
        for (b, t) in beta.iter().zip(&t) {
            assert!((b - t.exp()).abs() <= 1e-10);
        }
        let one = ModeForcing::scalar(TemporalProfile::constant(1.0), 1.0);
        let beta = integrate_mode_par(&one, 1.0, 0.0, &t).unwrap();
        for (b, t) in beta.iter().zip(&t) {
            assert!((b + (1.0 - t.exp())).abs() <= 1e-12);
        }
        assert_eq!(integrate_mode_par(&one, 1.0, 0.0, &grid(0.01, 10)).unwrap_err(), Error::ForwardMarch);
    }

    #[test]
    fn moments_agree_across_branches() {
        let below = exp_moments(1.0 - 1e-12);
        let above = exp_moments(1.0);
        for k in 0..4 {
            assert!((below[k] - above[k]).abs() < 1e-12);
        }
        assert_eq!(exp_moments(0.0), [1.0, 0.5, 1.0 / 3.0, 0.25]);
    }

    #[test]
    fn fd_zero_forcing() {
        let d = RectDomain::new(1.0, 1.0).unwrap();
        let sol = solve(&Forcing::zero(), &d, &TruncationPolicy::fixed(2), 1e-12).unwrap();
        let rep = fd_propagate(&sol, &Forcing::zero(), 21, 21).unwrap();
        assert_eq!(rep.max_deviation, 0.0);
        assert!(matches!(fd_propagate(&sol, &Forcing::zero(), 21, 5), Err(Error::Cfl { .. })));
    }

    #[test]
    fn quad_reference_examples() {
        let d = RectDomain::new(1.0, 1.0).unwrap();
        let bubble = Forcing::single(SpatialProfile::PolyBubble { amplitude: 1.0 }, TemporalProfile::constant(1.0));
        let v = quad_reference(&bubble, &eigenpair(1, &d).unwrap(), 0.3, &d).unwrap();
        assert!((v - 4.0 * 2f64.sqrt() / PI.powi(3)).abs() <= 1e-13);
        let v = quad_reference(&bubble, &eigenpair(4, &d).unwrap(), 0.3, &d).unwrap();
        assert!(v.abs() <= 1e-13);
        let sine = Forcing::single(SpatialProfile::SineMode { k: 3 }, TemporalProfile::constant(2.5));
        assert_eq!(quad_reference(&sine, &eigenpair(3, &d).unwrap(), -0.2, &d).unwrap(), 2.5);
        assert_eq!(quad_reference(&sine, &eigenpair(2, &d).unwrap(), -0.2, &d).unwrap(), 0.0);
    }
}
