//! Least-squares power-law fits in log-log coordinates.

#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;
use serde::{Deserialize, Serialize};

/// `value ~ amplitude * n^rate`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerLaw {
    pub amplitude: f64,
    pub rate: f64,
    /// Number of points the fit used.
    pub points: usize,
}

impl PowerLaw {
    pub fn eval(&self, n: f64) -> f64 {
        self.amplitude * n.powf(self.rate)
    }
}

/// Fits `log y = log C + rate log x` over the points with `x > 0` and `y > 0`.
/// Returns `None` with fewer than two usable points or a degenerate abscissa.
pub fn fit_power_law<I>(points: I) -> Option<PowerLaw>
where
    I: IntoIterator<Item = (f64, f64)>,
{
    let (mut sx, mut sy, mut sxx, mut sxy, mut m) = (0.0, 0.0, 0.0, 0.0, 0usize);
    for (x, y) in points {
        if !(x > 0.0 && y > 0.0 && x.is_finite() && y.is_finite()) {
            continue;
        }
        let (lx, ly) = (x.ln(), y.ln());
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
        m += 1;
    }
    if m < 2 {
        return None;
    }
    let mf = m as f64;
    let den = mf * sxx - sx * sx;
    if den.abs() <= f64::EPSILON * mf * sxx {
        return None;
    }
    let rate = (mf * sxy - sx * sy) / den;
    let log_c = (sy - rate * sx) / mf;
    Some(PowerLaw { amplitude: log_c.exp(), rate, points: m })
}
